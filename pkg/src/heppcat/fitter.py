"""Alternating maximization driver.

Each outer iteration performs one factor-matrix update followed by one
noise-variance update per group (``alternate``), or greedily applies
whichever single-block update gains more likelihood
(``max_improvement``).  Both blocks never decrease the likelihood, so
traces are nondecreasing up to rounding.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import baselines
from .errors import NumericalError
from .fupdate import em_update_F
from .model import FactorModel, GroupedData, log_likelihood_parts, v_coefficients
from .vupdate import V_METHODS, update_v

__all__ = ["FitConfig", "FitTrace", "FitResult", "init_ppca", "init_random", "fit"]

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERS = 1000
DEFAULT_V_METHOD = "em"

# smallest variance a random initialization may draw; keeps the first
# factor update well defined
INIT_NOISE_FLOOR = 1e-12

_BLOCK_RULES = ("alternate", "max_improvement")


@dataclass
class FitConfig:
    """Configuration of one fit.

    Parameters
    ----------
    rank : int
        Number of factors ``k``; must satisfy ``1 <= k < d``.
    v_method : str
        One of ``rootfind``, ``em``, ``doc``, ``quad``, ``cubic``.
    max_iters : int
        Outer iteration budget ``T >= 1``.
    tol : float
        Stop once ``||F_next - F|| / ||F|| <= tol``.
    init : str or FactorModel
        ``"ppca"`` (pooled spectral closed form), ``"random"``, or an
        explicit starting model.
    block_rule : str
        ``"alternate"`` or ``"max_improvement"``.
    record_trace : bool
        Also record the per-iteration noise-variance iterates.
    seed : int
        Consumed only by the random initialization.
    v_tol : float or None
        Optional extra criterion: also require
        ``||v_next - v|| / ||v|| <= v_tol``.  Off (None) by default.
        The spectral initialization is an exact fixed point of the
        factor update under its own homoscedastic variances, so the
        factor criterion alone can fire on the very first iteration;
        either extra keeps the fit going until the iterate truly stalls.
    loglik_tol : float or None
        Optional extra criterion: also require the per-iteration
        likelihood gain to satisfy ``|dL| <= loglik_tol * (1 + |L|)``.
        Off (None) by default.
    """

    rank: int
    v_method: str = DEFAULT_V_METHOD
    max_iters: int = DEFAULT_MAX_ITERS
    tol: float = DEFAULT_TOL
    init: object = "ppca"
    block_rule: str = "alternate"
    record_trace: bool = True
    seed: int = 0
    v_tol: float | None = None
    loglik_tol: float | None = None

    def __post_init__(self):
        if int(self.rank) < 1:
            raise ValueError("rank must be >= 1")
        self.rank = int(self.rank)
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be >= 1")
        self.max_iters = int(self.max_iters)
        if not (np.isfinite(self.tol) and self.tol >= 0):
            raise ValueError("tol must be finite and nonnegative")
        for name in ("v_tol", "loglik_tol"):
            val = getattr(self, name)
            if val is not None and not (np.isfinite(val) and val >= 0):
                raise ValueError(f"{name} must be None or finite and nonnegative")
        if self.v_method not in V_METHODS:
            raise ValueError(f"v_method must be one of {V_METHODS}")
        if self.block_rule not in _BLOCK_RULES:
            raise ValueError(f"block_rule must be one of {_BLOCK_RULES}")
        if not isinstance(self.init, FactorModel) and self.init not in ("ppca", "random"):
            raise ValueError("init must be 'ppca', 'random', or a FactorModel")


@dataclass
class FitTrace:
    """Per-iteration history; index 0 of ``loglik``/``v`` is the initial model."""

    loglik: np.ndarray
    f_change: np.ndarray
    seconds: np.ndarray
    v: np.ndarray | None = None


@dataclass
class FitResult:
    model: FactorModel
    converged: bool
    iterations: int
    trace: FitTrace


def init_ppca(data: GroupedData, k: int) -> FactorModel:
    """Spectral initialization: the pooled homoscedastic closed form."""
    return baselines.ppca_closed_form(data, k)


def init_random(d: int, k: int, L: int, seed) -> FactorModel:
    """Random initialization: i.i.d. standard normal factor entries and
    variances uniform on ``[INIT_NOISE_FLOOR, 1)``."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    F = rng.standard_normal((d, k))
    v = INIT_NOISE_FLOOR + (1.0 - INIT_NOISE_FLOOR) * rng.random(L)
    return FactorModel(F, v)


def _initial_model(data: GroupedData, cfg: FitConfig) -> FactorModel:
    if isinstance(cfg.init, FactorModel):
        if cfg.init.d != data.d or cfg.init.L != data.L or cfg.init.k != cfg.rank:
            raise ValueError("explicit initial model does not match the data/config shapes")
        return cfg.init
    if cfg.init == "ppca":
        return init_ppca(data, cfg.rank)
    return init_random(data.d, cfg.rank, data.L, cfg.seed)


def _v_pass(data: GroupedData, model: FactorModel, method: str) -> FactorModel:
    v_new = np.empty(model.L)
    for l, (B, n) in enumerate(zip(data.blocks, data.group_sizes)):
        c = v_coefficients(B, model, n_samples=n)
        v_new[l] = update_v(method, c, model.v[l])
    return replace(model, v=v_new)


def _relative_change(F_new: np.ndarray, F_old: np.ndarray) -> float:
    denom = float(np.linalg.norm(F_old))
    num = float(np.linalg.norm(F_new - F_old))
    if denom == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return num / denom


def fit(data: GroupedData, cfg: FitConfig) -> FitResult:
    """Run alternating maximization until the factor matrix stalls.

    The convergence flag is driven by the factor criterion
    ``||F_next - F||_F / ||F||_F <= tol``, plus any extras enabled in
    the config (``v_tol``, ``loglik_tol``).  Under ``max_improvement``
    the factor criterion is evaluated on the factor candidate computed
    each iteration, whether or not it is the applied block.
    """
    if not 1 <= cfg.rank < data.d:
        raise ValueError("need 1 <= rank < d")
    model = _initial_model(data, cfg)
    loglik = [log_likelihood_parts(data, model)]
    v_hist = [model.v.copy()] if cfg.record_trace else None
    f_change: list = []
    seconds: list = []
    converged = False
    iterations = 0
    for _ in range(cfg.max_iters):
        t0 = time.perf_counter()
        v_prev = model.v
        ll_prev = loglik[-1]
        try:
            if cfg.block_rule == "alternate":
                F_prev = model.F
                model = em_update_F(data, model)
                model = _v_pass(data, model, cfg.v_method)
                dt = time.perf_counter() - t0
                rel = _relative_change(model.F, F_prev)
                ll = log_likelihood_parts(data, model)
            else:
                cand_f = em_update_F(data, model)
                cand_v = _v_pass(data, model, cfg.v_method)
                ll_f = log_likelihood_parts(data, cand_f)
                ll_v = log_likelihood_parts(data, cand_v)
                rel = _relative_change(cand_f.F, model.F)
                if ll_f >= ll_v:
                    model, ll = cand_f, ll_f
                else:
                    model, ll = cand_v, ll_v
                dt = time.perf_counter() - t0
        except NumericalError as err:
            raise NumericalError(f"iteration {iterations + 1}: {err}") from err
        iterations += 1
        loglik.append(ll)
        f_change.append(rel)
        seconds.append(dt)
        if v_hist is not None:
            v_hist.append(model.v.copy())
        stop = rel <= cfg.tol
        if stop and cfg.v_tol is not None:
            stop = _relative_change(model.v, v_prev) <= cfg.v_tol
        if stop and cfg.loglik_tol is not None:
            stop = abs(ll - ll_prev) <= cfg.loglik_tol * (1.0 + abs(ll_prev))
        if stop:
            converged = True
            break
    trace = FitTrace(
        loglik=np.asarray(loglik),
        f_change=np.asarray(f_change),
        seconds=np.asarray(seconds),
        v=np.asarray(v_hist) if v_hist is not None else None,
    )
    return FitResult(model=model, converged=converged, iterations=iterations, trace=trace)
