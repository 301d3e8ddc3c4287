"""Dataset CSV and model JSON serialization.

The CSV layout is one row per sample: a leading ``group`` label column
followed by the d feature columns.  Group order is first appearance.
Floats are written with ``repr``, the shortest decimal string that
round-trips to the exact same double, so rewriting a parsed file
reproduces it byte for byte.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .model import FactorModel, GroupedData

__all__ = [
    "write_dataset",
    "read_dataset",
    "write_json",
    "read_json",
    "model_record",
    "record_to_model",
]

SCHEMA_VERSION = 1


def write_dataset(path, data: GroupedData, labels=None) -> None:
    """Write grouped samples as CSV with a header row."""
    if labels is None:
        labels = [f"g{l + 1}" for l in range(data.L)]
    if len(labels) != data.L:
        raise ValueError("need one group label per group")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["group"] + [f"f{j + 1}" for j in range(data.d)])
        for label, block in zip(labels, data.blocks):
            for i in range(block.shape[1]):
                w.writerow([label] + [repr(float(x)) for x in block[:, i]])


def read_dataset(path):
    """Read a dataset CSV; returns ``(GroupedData, labels)``.

    Groups are numbered by first appearance of their label.  Malformed
    rows raise ValueError naming the 1-based file line.
    """
    columns: dict = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if len(header) < 2 or header[0] != "group":
            raise ValueError(f"{path}: line 1: header must be 'group' plus feature columns")
        d = len(header) - 1
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise ValueError(f"{path}: line {line}: expected {d + 1} fields, got {len(row)}")
            try:
                sample = [float(x) for x in row[1:]]
            except ValueError:
                raise ValueError(f"{path}: line {line}: non-numeric feature value") from None
            columns.setdefault(row[0], []).append(sample)
    if not columns:
        raise ValueError(f"{path}: no data rows")
    labels = tuple(columns)
    blocks = [np.array(columns[label], dtype=float).T for label in labels]
    return GroupedData(blocks), labels


def write_json(path, obj: dict) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def model_record(model: FactorModel, loglik: float, config_echo: dict, seed, trace=None) -> dict:
    """Assemble the model JSON document."""
    rec = {
        "schema_version": SCHEMA_VERSION,
        "d": model.d,
        "k": model.k,
        "L": model.L,
        "F": model.F.tolist(),
        "v": model.v.tolist(),
        "loglik": float(loglik),
        "config_echo": config_echo,
        "seed": seed,
    }
    if trace is not None:
        rec["trace"] = {
            "loglik": trace.loglik.tolist(),
            "f_change": trace.f_change.tolist(),
            "seconds": trace.seconds.tolist(),
        }
        if trace.v is not None:
            rec["trace"]["v"] = trace.v.tolist()
    return rec


def record_to_model(rec: dict) -> FactorModel:
    """Rebuild the estimated model from a parsed JSON document."""
    F = np.array(rec["F"], dtype=float)
    v = np.array(rec["v"], dtype=float)
    if F.shape != (rec["d"], rec["k"]) or v.shape != (rec["L"],):
        raise ValueError("model record arrays do not match the declared shapes")
    return FactorModel(F, v)
