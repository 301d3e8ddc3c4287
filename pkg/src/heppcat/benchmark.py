"""Experiment harness: Monte Carlo sweeps, landscape studies, surrogate curves.

All sweeps use the two-group planted model (d=100, k=3, factor
variances (4, 2, 1), 200 samples at noise variance 1 and 800 samples at
noise variance ``sigma2**2``) unless noted.  Worker processes are used
for independent (trial, sigma2) tasks; rows are sorted afterwards so
parallelism never changes the artifact.  The environment variable
HEPPCAT_THREADS caps the pool (0 or unset uses all cores; 1 runs
serially in-process).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .baselines import ppca_closed_form, weighted_pca
from .fitter import FitConfig, fit, init_ppca, init_random
from .metrics import component_recovery, factor_error, nrmse, subspace_error
from .model import FactorModel, GroupedData, univariate_objective, v_coefficients
from .simgen import TruthModel, generate, haar_orthonormal, rng_stream
from .vupdate import MINORIZER_KINDS, eval_minorizer

__all__ = [
    "PRESETS",
    "preset_truth",
    "run_benchmark",
    "run_landscape",
    "minorizer_curves",
    "train_test_split",
    "train_test_nrmse",
    "worker_count",
]

PRESET_D = 100
PRESET_K = 3
PRESET_LAMBDAS = (4.0, 2.0, 1.0)
PRESET_SIZES = (200, 800)
PRESET_V1 = 1.0

# variance floor applied to the true variances before inverting into
# weighted-PCA weights
_WEIGHT_FLOOR = 1e-12

PRESETS = ("fig3", "fig4", "fig5", "fig6-blocks", "fig7")

_DEFAULT_SIGMA = {
    "fig3": (0.5, 1.0, 2.0, 3.0),
    "fig4": (0.5, 1.0, 2.0, 3.0),
    "fig5": (2.0,),
    "fig6-blocks": (2.0,),
    "fig7": (0.5, 1.0, 2.0, 3.0),
}

_DEFAULT_METHODS = {
    "fig3": ("heppcat", "ppca-full", "ppca-group1", "ppca-group2"),
    "fig4": ("heppcat", "wpca-inv", "wpca-sqinv"),
    "fig5": ("heppcat",),
    "fig6-blocks": ("heppcat",),
    "fig7": ("heppcat", "ppca-full"),
}

_HEPPCAT_METHODS = {
    "heppcat": "em",
    "heppcat-em": "em",
    "heppcat-rootfind": "rootfind",
    "heppcat-doc": "doc",
    "heppcat-quad": "quad",
    "heppcat-cubic": "cubic",
}

_BASELINES = ("ppca-full", "ppca-group1", "ppca-group2", "wpca-inv", "wpca-sqinv")

FIG6_BLOCK_SIZES = (1, 10, 100)

# defaults for every harness-run fit; the likelihood extra keeps the
# spectral initialization from satisfying the factor criterion before
# the variances have moved
_FIT_KW = dict(max_iters=1000, tol=1e-8, loglik_tol=1e-10)


def worker_count() -> int:
    """Pool size from HEPPCAT_THREADS (0 or unset means all cores)."""
    raw = os.environ.get("HEPPCAT_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"HEPPCAT_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise ValueError("HEPPCAT_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def preset_truth(sigma2: float, seed: int, trial: int = 0, blocked: bool = False) -> TruthModel:
    """Planted model for one trial; the basis is redrawn per trial.

    ``blocked`` switches group 2 to the split noise profile: 20 features
    at variance 4 and the remaining 80 at ``sigma2**2``.
    """
    U = haar_orthonormal(PRESET_D, PRESET_K, rng_stream(seed, 1, trial, 0))
    fb = None
    if blocked:
        fb = [None, [(20, 4.0), (PRESET_D - 20, float(sigma2) ** 2)]]
    return TruthModel(
        U=U,
        lam=np.array(PRESET_LAMBDAS),
        v=np.array([PRESET_V1, float(sigma2) ** 2]),
        group_sizes=PRESET_SIZES,
        feature_blocks=fb,
    )


def _fit_heppcat(data: GroupedData, v_method: str, rank: int = PRESET_K) -> FactorModel:
    return fit(data, FitConfig(rank=rank, v_method=v_method, **_FIT_KW)).model


def _split_into_blocks(data: GroupedData, block: int) -> GroupedData:
    """Regroup samples into consecutive blocks of the given size."""
    pieces = []
    for B, n in zip(data.blocks, data.group_sizes):
        if n % block != 0:
            raise ValueError(f"block size {block} does not divide group size {n}")
        pieces.extend(B[:, i : i + block] for i in range(0, n, block))
    return GroupedData(pieces)


def _recovery_rows(U_hat: np.ndarray, truth: TruthModel) -> list:
    rec = component_recovery(U_hat, truth.U)
    return [(f"recovery{j + 1}", float(r)) for j, r in enumerate(rec)]


def _standard_rows(preset: str, method: str, data: GroupedData, truth: TruthModel) -> list:
    """metric/value pairs for one method on one dataset."""
    F_true = truth.F
    if method in _HEPPCAT_METHODS:
        model = _fit_heppcat(data, _HEPPCAT_METHODS[method])
        U_hat, F_hat = model.U, model.F
    elif method == "ppca-full":
        model = ppca_closed_form(data, PRESET_K)
        U_hat, F_hat = model.U, model.F
    elif method in ("ppca-group1", "ppca-group2"):
        g = 0 if method.endswith("1") else 1
        model = ppca_closed_form(GroupedData([data.blocks[g]]), PRESET_K)
        U_hat, F_hat = model.U, model.F
    elif method in ("wpca-inv", "wpca-sqinv"):
        w = 1.0 / np.maximum(truth.v, _WEIGHT_FLOOR)
        if method == "wpca-sqinv":
            w = w**2
        U_hat, F_hat, model = weighted_pca(data, w, PRESET_K), None, None
    else:
        raise ValueError(f"unknown method {method!r}")

    if preset == "fig5":
        out = []
        for l in range(truth.L):
            out.append((f"rel_bias_v{l + 1}", float((model.v[l] - truth.v[l]) / truth.v[l])))
        for j in range(truth.k):
            lam_t = truth.lam[j]
            out.append((f"rel_bias_lambda{j + 1}", float((model.lam[j] - lam_t) / lam_t)))
        return out
    if preset == "fig4":
        return [("subspace_error", subspace_error(U_hat, truth.U))]
    # fig3 / fig7: factor-covariance error plus per-component recoveries
    out = [] if F_hat is None else [("factor_error", factor_error(F_hat, F_true))]
    out.extend(_recovery_rows(U_hat, truth))
    if preset == "fig7":
        out.append(("subspace_error", subspace_error(U_hat, truth.U)))
    return out


def _fig6_rows(method: str, data: GroupedData, truth: TruthModel) -> list:
    out = []
    v_method = _HEPPCAT_METHODS[method]
    for block in FIG6_BLOCK_SIZES:
        regrouped = _split_into_blocks(data, block)
        model = _fit_heppcat(regrouped, v_method)
        # blocks inherit the true variance of the group they came from
        true_v = np.repeat(truth.v, [n // block for n in truth.group_sizes])
        for v_hat, v_true in zip(model.v, true_v):
            out.append((f"v_hat_block{block}_true{v_true:g}", float(v_hat)))
    return out


def _benchmark_task(payload: tuple) -> list:
    preset, trial, sigma2, seed, methods = payload
    truth = preset_truth(sigma2, seed, trial, blocked=(preset == "fig7"))
    data = generate(truth, seed, trial)
    rows = []
    for method in methods:
        pairs = (
            _fig6_rows(method, data, truth)
            if preset == "fig6-blocks"
            else _standard_rows(preset, method, data, truth)
        )
        rows.extend(
            {"trial": trial, "sigma2": sigma2, "method": method, "metric": m, "value": v}
            for m, v in pairs
        )
    return rows


def run_benchmark(preset: str, trials: int, sigma_grid=None, methods=None, seed: int = 0) -> list:
    """Monte Carlo sweep; returns long-format rows sorted by
    (trial, sigma2, method)."""
    if preset not in PRESETS:
        raise ValueError(f"preset must be one of {PRESETS}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sigma_grid = _DEFAULT_SIGMA[preset] if sigma_grid is None else tuple(float(s) for s in sigma_grid)
    methods = _DEFAULT_METHODS[preset] if methods is None else tuple(methods)
    for m in methods:
        if m not in _HEPPCAT_METHODS and m not in _BASELINES:
            raise ValueError(f"unknown method {m!r}")
        if preset == "fig6-blocks" and m not in _HEPPCAT_METHODS:
            raise ValueError("fig6-blocks supports heppcat methods only")
        if preset == "fig5" and m in ("wpca-inv", "wpca-sqinv"):
            raise ValueError("fig5 needs methods that estimate variances")
    tasks = [(preset, t, s, seed, methods) for t in range(trials) for s in sigma_grid]
    rows = []
    for chunk in _map_tasks(_benchmark_task, tasks):
        rows.extend(chunk)
    rows.sort(key=lambda r: (r["trial"], r["sigma2"], r["method"]))
    return rows


def _map_tasks(fn, tasks):
    n = worker_count()
    if n == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(n, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# likelihood landscape


def run_landscape(
    sigma2_squared_grid=(0.1, 1.0, 2.0, 3.0),
    n_random: int = 20,
    method: str = "em",
    seed: int = 0,
    max_iters: int = 500,
) -> list:
    """Multi-initialization study; per-iteration gaps to the best
    converged likelihood within each noise configuration.

    Initializations: ``n_random`` random starts plus the spectral
    (``ppca``) start plus the planted-model (``oracle``) start.
    """
    rows = []
    for s_idx, v2 in enumerate(sigma2_squared_grid):
        v2 = float(v2)
        truth = preset_truth(np.sqrt(v2), seed, trial=s_idx)
        data = generate(truth, seed, trial=s_idx)
        runs = [("ppca", 0, "ppca"), ("oracle", 0, FactorModel(truth.F, truth.v))]
        runs += [
            ("random", r, init_random(truth.d, truth.k, truth.L, rng_stream(seed, 2, s_idx, r)))
            for r in range(n_random)
        ]
        results = []
        for name, run, init in runs:
            cfg = FitConfig(
                rank=truth.k,
                v_method=method,
                init=init,
                max_iters=max_iters,
                tol=1e-8,
                loglik_tol=1e-9,
            )
            results.append((name, run, fit(data, cfg)))
        converged = [r.trace.loglik[-1] for _, _, r in results if r.converged]
        best = max(converged) if converged else max(r.trace.loglik[-1] for _, _, r in results)
        for name, run, res in results:
            for it, ll in enumerate(res.trace.loglik):
                rows.append(
                    {
                        "sigma2_squared": v2,
                        "method": method,
                        "init": name,
                        "run": run,
                        "iteration": it,
                        "loglik": float(ll),
                        "gap": float(best - ll),
                        "converged": bool(res.converged),
                    }
                )
    return rows


# ---------------------------------------------------------------------------
# anchored surrogate curves


def minorizer_curves(data: GroupedData, rank: int, n_grid: int = 200, span: float = 100.0) -> list:
    """Objective and all four anchored surrogates per group, shifted to
    zero at the anchor (the spectral initialization's noise variance)."""
    if n_grid < 2 or span <= 1.0:
        raise ValueError("need n_grid >= 2 and span > 1")
    model = init_ppca(data, rank)
    v_t = float(model.v[0])
    grid = np.geomspace(v_t / span, v_t * span, n_grid)
    grid = np.unique(np.concatenate([grid, [v_t]]))
    rows = []
    for l, (B, n) in enumerate(zip(data.blocks, data.group_sizes)):
        c = v_coefficients(B, model, n_samples=n)
        obj_t = univariate_objective(c, v_t)
        for v in grid:
            rows.append(
                {
                    "group": l + 1,
                    "v": float(v),
                    "curve": "objective",
                    "value": univariate_objective(c, float(v)) - obj_t,
                }
            )
            for kind in MINORIZER_KINDS:
                rows.append(
                    {
                        "group": l + 1,
                        "v": float(v),
                        "curve": kind,
                        "value": eval_minorizer(kind, c, float(v), v_t) - obj_t,
                    }
                )
    return rows


# ---------------------------------------------------------------------------
# train/test reconstruction

def train_test_split(data: GroupedData, fraction: float, seed: int, trial: int = 0):
    """Per-group random split into train and test subsets."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    train_blocks, test_blocks = [], []
    for l, (B, n) in enumerate(zip(data.blocks, data.group_sizes)):
        n_train = int(round(n * fraction))
        if n_train < 1 or n - n_train < 1:
            raise ValueError(f"group {l}: split leaves an empty side")
        perm = rng_stream(seed, 3, trial, l + 1).permutation(n)
        train_blocks.append(B[:, perm[:n_train]])
        test_blocks.append(B[:, perm[n_train:]])
    return GroupedData(train_blocks), GroupedData(test_blocks)


def train_test_nrmse(
    sigma2: float = 2.0,
    trials: int = 20,
    rank: int = PRESET_K,
    fraction: float = 0.5,
    seed: int = 0,
    v_method: str = "em",
) -> list:
    """Pooled reconstruction error of the heteroscedastic fit vs the
    homoscedastic closed form, trained on a split and scored on both sides."""
    rows = []
    for trial in range(trials):
        truth = preset_truth(sigma2, seed, trial)
        data = generate(truth, seed, trial)
        train, test = train_test_split(data, fraction, seed, trial)
        bases = {
            "heppcat": _fit_heppcat(train, v_method, rank).U,
            "ppca-full": ppca_closed_form(train, rank).U,
        }
        pooled = {"train": np.hstack(train.blocks), "test": np.hstack(test.blocks)}
        for method, U in bases.items():
            for split, Y in pooled.items():
                rows.append(
                    {
                        "trial": trial,
                        "sigma2": float(sigma2),
                        "method": method,
                        "metric": f"nrmse_{split}",
                        "value": nrmse(Y, U),
                    }
                )
    rows.sort(key=lambda r: (r["trial"], r["sigma2"], r["method"]))
    return rows
