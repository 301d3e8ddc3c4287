"""Per-group noise-variance updates.

Each group's slice of the log-likelihood reduces to the univariate
objective described by :class:`heppcat.model.VCoefficients`,

    ``L(v) = -sum_j [ alpha_j ln(gamma_j + v) + beta_j / (gamma_j + v) ]``.

``update_v_rootfind`` maximizes ``L`` exactly by isolating every
stationary point.  The other four rules maximize a surrogate anchored at
the current iterate ``v_t`` (expectation-maximization, difference-of-
concave linearization, quadratic solvable, cubic solvable); each
surrogate lies below ``L`` and touches it at ``v_t``, so every update is
guaranteed not to decrease the likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .model import VCoefficients, univariate_derivative, univariate_objective

__all__ = [
    "MinorizerCoefficients",
    "update_v_rootfind",
    "update_v_em",
    "update_v_doc",
    "update_v_quadratic",
    "update_v_cubic",
    "update_v",
    "eval_minorizer",
    "noise_floor",
    "V_METHODS",
    "MINORIZER_KINDS",
]

V_METHODS = ("rootfind", "em", "doc", "quad", "cubic")
MINORIZER_KINDS = ("em", "doc", "quad", "cubic")

_ISOLATION_WIDTH_RTOL = 1e-10
_ISOLATION_DEPTH_CAP = 60
_BISECT_RTOL = 1e-13
_DOC_ATOL = 1e-12


def noise_floor(c: VCoefficients) -> float:
    """Smallest variance the updates will return outside the exact-zero branch."""
    return 1e-12 * max(c.beta_tilde, float(c.beta.max()), 1.0)


@dataclass
class MinorizerCoefficients:
    """Shared pieces of the solvable surrogates at anchor ``v_t``.

    ``alpha_tilde`` / ``beta_tilde`` aggregate the zero-gamma indices,
    which both surrogates keep exactly.  On the remaining indices:
    ``zeta`` is the total linearized log slope, ``pi`` the convexity
    split weights ``gamma_j / (gamma_j + v_t)``, ``B_bar`` the total
    ``1/v`` mass of the quadratic surrogate, ``curvature`` the constant
    ``c_j = -2 beta_j / gamma_j^3`` bounding the second derivative of
    ``-beta_j/(gamma_j + v)`` from below over ``v >= 0``, and ``gamma_t``
    the constant term of the cubic surrogate's derivative.
    """

    v_t: float
    alpha_tilde: float
    beta_tilde: float
    zeta: float
    B_bar: float
    gamma_t: float
    c_bar: float
    pi: np.ndarray
    curvature: np.ndarray
    gamma_nz: np.ndarray = field(repr=False)
    beta_nz: np.ndarray = field(repr=False)

    @classmethod
    def from_coefficients(cls, c: VCoefficients, v_t: float) -> "MinorizerCoefficients":
        v_t = float(v_t)
        if not np.isfinite(v_t) or v_t <= 0:
            raise ValueError("anchor v_t must be finite and positive")
        nz = ~c.zero_set
        a_nz, b_nz, g_nz = c.alpha[nz], c.beta[nz], c.gamma[nz]
        t = g_nz + v_t
        zeta = float(np.sum(a_nz / t))
        B_bar = c.beta_tilde + float(np.sum(b_nz * v_t**2 / t**2))
        curvature = -2.0 * b_nz / g_nz**3
        gamma_t = -zeta + float(np.sum(b_nz / t**2))
        return cls(
            v_t=v_t,
            alpha_tilde=float(c.alpha[c.zero_set].sum()),
            beta_tilde=c.beta_tilde,
            zeta=zeta,
            B_bar=B_bar,
            gamma_t=gamma_t,
            c_bar=float(curvature.sum()),
            pi=g_nz / t,
            curvature=curvature,
            gamma_nz=g_nz,
            beta_nz=b_nz,
        )


# ---------------------------------------------------------------------------
# exact maximization by stationary-point isolation


def _derivative_range(c: VCoefficients, a: float, b: float):
    """Enclosure of the objective derivative over [a, b], 0 < a <= b."""
    ta, tb = c.gamma + a, c.gamma + b
    lo = float(np.sum(-c.alpha / ta) + np.sum(c.beta / tb**2))
    hi = float(np.sum(-c.alpha / tb) + np.sum(c.beta / ta**2))
    return lo, hi


def _objective_second_derivative(c: VCoefficients, v: float) -> float:
    t = c.gamma + v
    return float(np.sum(c.alpha / t**2) - 2.0 * np.sum(c.beta / t**3))


def _newton_polish(c: VCoefficients, v: float, lo: float, hi: float) -> float:
    """Newton steps on the derivative, clamped to [lo, hi].

    Isolation leaves are ~1e-10 wide and adjacent leaves can emit
    midpoints whose objective ties the true root at double precision;
    polishing collapses all of them onto the stationary point itself.
    """
    for _ in range(4):
        d1 = univariate_derivative(c, v)
        d2 = _objective_second_derivative(c, v)
        if d2 == 0.0 or not np.isfinite(d2):
            break
        v_new = min(max(v - d1 / d2, lo), hi)
        if abs(v_new - v) <= 1e-16 * abs(v):
            return v_new
        v = v_new
    return v


def _bisect_root(f, a: float, b: float, fa: float, fb: float) -> float:
    """Plain bisection of a sign change down to ~1e-13 relative width."""
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    for _ in range(200):
        m = 0.5 * (a + b)
        if (b - a) <= _BISECT_RTOL * max(abs(m), 1e-300):
            return m
        fm = f(m)
        if fm == 0.0:
            return m
        if (fa > 0) != (fm > 0):
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def _stationary_points(c: VCoefficients, lo: float, hi: float) -> list:
    """All stationary points of the objective inside [lo, hi].

    Recursive interval splitting: a subinterval is discarded when an
    enclosure of the derivative excludes zero, split otherwise, and
    resolved by bisection once narrower than ~1e-10 relative.  Tangent
    (double) stationary points yield a midpoint candidate, which is
    harmless because callers rank candidates by objective value.
    """
    width_tol = _ISOLATION_WIDTH_RTOL * (1.0 + hi)
    deriv = lambda v: univariate_derivative(c, v)
    roots: list = []
    stack = [(lo, hi, 0)]
    while stack:
        a, b, depth = stack.pop()
        if depth > _ISOLATION_DEPTH_CAP:
            raise NumericalError("stationary-point isolation exceeded its depth budget")
        r_lo, r_hi = _derivative_range(c, a, b)
        if r_lo > 0.0 or r_hi < 0.0:
            continue
        if (b - a) < width_tol:
            fa, fb = deriv(a), deriv(b)
            if fa == 0.0 or fb == 0.0 or (fa > 0) != (fb > 0):
                r = _bisect_root(deriv, a, b, fa, fb)
            else:
                r = 0.5 * (a + b)
            roots.append(_newton_polish(c, r, lo, hi))
            continue
        m = 0.5 * (a + b)
        stack.append((m, b, depth + 1))
        stack.append((a, m, depth + 1))
    return sorted(roots)


def update_v_rootfind(c: VCoefficients) -> float:
    """Global maximizer of the univariate objective.

    Returns 0 on the exact zero-residual branch (``beta_tilde == 0``,
    where the objective diverges to ``+inf`` at 0).  Otherwise every
    nonnegative stationary point lies between the extremes of
    ``beta_j / alpha_j - gamma_j``; all of them are isolated and the
    argmax of the objective is returned.
    """
    if c.beta_tilde == 0.0:
        return 0.0
    if np.any((c.alpha == 0.0) & (c.beta > 0.0)):
        raise ValueError("bracketing requires alpha > 0 wherever beta > 0")
    active = c.alpha > 0.0
    ratios = c.beta[active] / c.alpha[active] - c.gamma[active]
    v_max = float(ratios.max())
    lo = max(noise_floor(c), float(ratios.min()))
    candidates: list = []
    if v_max > lo:
        candidates.extend(_stationary_points(c, lo, v_max))
    else:
        # all per-term ratios coincide: the unique stationary point is v_max
        candidates.append(v_max)
    if univariate_derivative(c, lo) < 0.0:
        # maximizer sits at or below the representable floor; clamp there
        candidates.append(lo)
    if not candidates:
        raise NumericalError(
            f"no stationary point found in [{lo!r}, {v_max!r}] despite beta_tilde > 0"
        )
    values = [univariate_objective(c, v) for v in candidates]
    return float(candidates[int(np.argmax(values))])


# ---------------------------------------------------------------------------
# anchored surrogate updates


def _em_rho(c: VCoefficients, v_t: float) -> float:
    w = v_t / (c.gamma + v_t)
    lam = c.gamma[1:]
    return float(np.sum(w**2 * c.beta) + v_t * np.sum(lam / (lam + v_t)))


def update_v_em(c: VCoefficients, v_t: float) -> float:
    """Expectation-maximization update ``rho(v_t) / d``."""
    v_t = float(v_t)
    if not np.isfinite(v_t) or v_t <= 0:
        raise ValueError("anchor v_t must be finite and positive")
    return _em_rho(c, v_t) / c.ambient_dim


def update_v_doc(c: VCoefficients, v_t: float) -> float:
    """Difference-of-concave update: linearize the logs, keep the rest.

    The surrogate derivative ``-sum_j alpha_j/(gamma_j + v_t) +
    sum_j beta_j/(gamma_j + v)^2`` is strictly decreasing, so the update
    returns 0 when it is nonpositive at ``0+`` and otherwise bisects for
    the unique positive zero.
    """
    v_t = float(v_t)
    if not np.isfinite(v_t) or v_t <= 0:
        raise ValueError("anchor v_t must be finite and positive")
    if np.any((c.alpha == 0.0) & (c.beta > 0.0)):
        raise ValueError("bracketing requires alpha > 0 wherever beta > 0")
    zeta_full = float(np.sum(c.alpha / (c.gamma + v_t)))
    nz = ~c.zero_set
    slope0 = float(np.sum(c.beta[nz] / c.gamma[nz] ** 2))
    if c.beta_tilde == 0.0 and slope0 <= zeta_full:
        return 0.0

    def fdot(v: float) -> float:
        return float(np.sum(c.beta / (c.gamma + v) ** 2)) - zeta_full

    active = c.alpha > 0.0
    hi = float(np.max(np.sqrt(c.beta[active] / c.alpha[active] * (c.gamma[active] + v_t)) - c.gamma[active]))
    lo = noise_floor(c)
    f_lo = fdot(lo)
    if f_lo <= 0.0:
        if f_lo == 0.0:
            return lo
        raise NumericalError("difference-of-concave bracket has no sign change at its floor")
    f_hi = fdot(hi)
    if f_hi > 0.0:
        raise NumericalError("difference-of-concave bracket upper endpoint is not past the zero")
    atol = _DOC_ATOL * (1.0 + v_t)
    a, b = lo, hi
    for _ in range(200):
        if (b - a) <= atol:
            break
        m = 0.5 * (a + b)
        fm = fdot(m)
        if fm == 0.0:
            return m
        if fm > 0.0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _positive_quadratic_root(zeta: float, alpha: float, rhs: float) -> float:
    """Positive root of ``zeta v^2 + alpha v - rhs = 0`` in cancellation-free form."""
    if rhs == 0.0:
        return 0.0
    if zeta == 0.0:
        if alpha <= 0.0:
            raise NumericalError("quadratic surrogate is unbounded: alpha_tilde = zeta = 0")
        return rhs / alpha
    return 2.0 * rhs / (alpha + math.sqrt(alpha * alpha + 4.0 * zeta * rhs))


def update_v_quadratic(c: VCoefficients, v_t: float) -> float:
    """Quadratic solvable update: the surrogate's stationarity condition
    is a quadratic with exactly one positive root."""
    m = MinorizerCoefficients.from_coefficients(c, v_t)
    return _positive_quadratic_root(m.zeta, m.alpha_tilde, m.B_bar)


def _real_cubic_roots(a3: float, a2: float, a1: float, a0: float) -> list:
    """Real roots of ``a3 x^3 + a2 x^2 + a1 x + a0``, ``a3 != 0``.

    Depressed-cubic closed form with the trigonometric branch for three
    real roots and a cancellation-safe Cardano branch for one.
    """
    b, cc, d = a2 / a3, a1 / a3, a0 / a3
    p = cc - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * cc / 3.0 + d
    shift = -b / 3.0
    if q == 0.0:
        if p >= 0.0:
            roots = [0.0]
        else:
            r = math.sqrt(-p)
            roots = [0.0, r, -r]
    else:
        half_q_sq = (q / 2.0) ** 2
        third_p_cu = (p / 3.0) ** 3
        disc = half_q_sq + third_p_cu
        # an exactly repeated root makes disc vanish up to rounding noise
        disc_tol = 4.0 * np.finfo(float).eps * max(half_q_sq, abs(third_p_cu))
        if disc > disc_tol:
            u3 = -q / 2.0 - math.copysign(math.sqrt(disc), q)
            u = math.copysign(abs(u3) ** (1.0 / 3.0), u3)
            roots = [u - p / (3.0 * u)]
        elif abs(disc) <= disc_tol:
            u = math.copysign(abs(q / 2.0) ** (1.0 / 3.0), -q)
            roots = [2.0 * u, -u]
        else:
            rad = math.sqrt(-(p**3) / 27.0)
            theta = math.acos(min(1.0, max(-1.0, -q / (2.0 * rad))))
            mag = 2.0 * math.sqrt(-p / 3.0)
            roots = [mag * math.cos((theta - 2.0 * math.pi * i) / 3.0) for i in range(3)]
    out = []
    for t in roots:
        x = t + shift
        # two Newton polish steps clean up rounding from the closed form
        for _ in range(2):
            fx = ((a3 * x + a2) * x + a1) * x + a0
            dfx = (3.0 * a3 * x + 2.0 * a2) * x + a1
            if dfx != 0.0 and np.isfinite(dfx):
                x -= fx / dfx
        if np.isfinite(x) and all(abs(x - y) > 1e-9 * (1.0 + abs(x)) for y in out):
            out.append(x)
    return out


def _cubic_surrogate_derivative(m: MinorizerCoefficients, v: float) -> float:
    return (
        -m.alpha_tilde / v
        + m.beta_tilde / v**2
        + m.gamma_t
        + m.c_bar * (v - m.v_t)
    )


def update_v_cubic(c: VCoefficients, v_t: float) -> float:
    """Cubic solvable update: maximum-curvature quadratic expansion of the
    nonzero-gamma terms makes stationarity a cubic in ``v``.

    All real roots come from the closed form; nonpositive roots and roots
    where the surrogate derivative does not cross from + to - are
    discarded, and the survivor with the largest surrogate value wins.
    """
    m = MinorizerCoefficients.from_coefficients(c, v_t)
    if c.beta_tilde == 0.0:
        # the exactly-kept -alpha_tilde ln v term sends the surrogate to
        # +inf at 0, mirroring the objective's zero-residual branch
        return 0.0
    if m.c_bar == 0.0:
        return _positive_quadratic_root(m.zeta, m.alpha_tilde, m.beta_tilde)
    roots = _real_cubic_roots(m.c_bar, m.gamma_t - m.c_bar * v_t, -m.alpha_tilde, m.beta_tilde)
    candidates = []
    for r in roots:
        if r <= 0.0:
            continue
        h = 1e-6 * r
        scale = abs(m.alpha_tilde / r) + abs(m.beta_tilde / r**2) + abs(m.gamma_t) + abs(m.c_bar) * (r + v_t)
        tol = 1e-9 * max(scale, 1e-300)
        left = _cubic_surrogate_derivative(m, r - h)
        right = _cubic_surrogate_derivative(m, r + h)
        if left >= -tol and right <= tol:
            candidates.append(r)
    if not candidates:
        raise NumericalError(
            "cubic surrogate has no admissible positive stationary point "
            f"(coefficients: c_bar={m.c_bar!r}, gamma_t={m.gamma_t!r}, "
            f"alpha_tilde={m.alpha_tilde!r}, beta_tilde={m.beta_tilde!r}, v_t={v_t!r})"
        )
    values = [eval_minorizer("cubic", c, r, v_t) for r in candidates]
    return float(candidates[int(np.argmax(values))])


def update_v(method: str, c: VCoefficients, v_t: float | None = None) -> float:
    """Dispatch a noise-variance update by method name."""
    if method == "rootfind":
        return update_v_rootfind(c)
    if method == "em":
        return update_v_em(c, v_t)
    if method == "doc":
        return update_v_doc(c, v_t)
    if method == "quad":
        return update_v_quadratic(c, v_t)
    if method == "cubic":
        return update_v_cubic(c, v_t)
    raise ValueError(f"unknown v update method: {method!r}")


def eval_minorizer(kind: str, c: VCoefficients, v: float, v_t: float) -> float:
    """Evaluate an anchored surrogate at ``v``.

    The additive constant is fixed so the surrogate equals
    ``univariate_objective(c, v_t)`` at ``v = v_t``; with that anchoring
    every kind satisfies ``eval_minorizer(...) <= univariate_objective``
    for all positive ``v``.
    """
    v = float(v)
    v_t = float(v_t)
    if not np.isfinite(v) or v <= 0:
        raise ValueError("v must be finite and positive")
    if not np.isfinite(v_t) or v_t <= 0:
        raise ValueError("anchor v_t must be finite and positive")

    def raw(x: float) -> float:
        if kind == "em":
            d = c.ambient_dim
            return -d * math.log(x) - _em_rho(c, v_t) / x
        if kind == "doc":
            t = c.gamma + x
            return float(-np.sum(c.alpha * x / (c.gamma + v_t)) - np.sum(c.beta / t))
        m = MinorizerCoefficients.from_coefficients(c, v_t)
        if kind == "quad":
            return -m.alpha_tilde * math.log(x) - m.B_bar / x - m.zeta * x
        if kind == "cubic":
            lin = float(np.sum(m.beta_nz * x / (m.gamma_nz + v_t) ** 2))
            quad = 0.5 * float(np.sum(m.curvature)) * (x - v_t) ** 2
            return (
                -m.alpha_tilde * math.log(x)
                - m.beta_tilde / x
                - m.zeta * x
                + lin
                + quad
            )
        raise ValueError(f"unknown minorizer kind: {kind!r}")

    # grouping makes the anchored value exactly equal the objective at v_t
    return univariate_objective(c, v_t) + (raw(v) - raw(v_t))
