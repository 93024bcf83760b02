"""K-functionals, real interpolation norms and Lorentz norms on Schatten classes.

The pair ``(S_1, S_inf)`` has a closed-form K-functional; any other pair of
Schatten classes goes through a convex program.  Exponent infinity is
``math.inf`` throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError, UnsupportedExponentError
from .mixed import Certificate, NormEstimate
from .spectral import (
    INF,
    as_matrix,
    decreasing_rearrangement,
    lp_of_values,
    schatten_norm,
    singular_values,
)

K_CAP = 128
TAIL_RTOL = 1e-6


def _positive_t(t):
    t = float(t)
    if not t > 0 or math.isinf(t):
        raise DomainError(f"t must be a positive finite real, got {t}")
    return t


def _s1_sinf_values(mu, t):
    k = math.floor(t)
    head = float(np.sum(mu[:k]))
    if k < mu.size:
        head += (t - k) * float(mu[k])
    return head


def k_functional_s1_sinf(x, t: float) -> float:
    """``K(t, x; S_1, S_inf)``: the sum of the ``floor(t)`` largest singular values plus a fractional term."""
    t = _positive_t(t)
    return _s1_sinf_values(singular_values(x), t)


def k_functional_sinf_s1(x, t: float) -> float:
    """Reverse pair through ``K(t, x; A_1, A_0) = t K(1/t, x; A_0, A_1)``."""
    t = _positive_t(t)
    return t * _s1_sinf_values(singular_values(x), 1.0 / t)


@dataclass
class KSplit:
    """Minimizing decomposition ``x = x0 + x1`` of a K-functional."""

    value: float
    x0: np.ndarray
    x1: np.ndarray
    method: str
    candidates: dict = field(default_factory=dict)


def _check_pair(p0, p1):
    p0, p1 = float(p0), float(p1)
    for e in (p0, p1):
        if not e >= 1:
            raise UnsupportedExponentError(f"K-functional needs exponents >= 1 (convexity), got {e}")
    return p0, p1


def _cvx_schatten(X, p):
    import cvxpy as cp

    if p == 1:
        return cp.normNuc(X)
    if p == 2:
        return cp.norm(X, "fro")
    return cp.sigma_max(X)


def _solve(prob):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prob.solve(solver="CLARABEL", tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)


def k_functional_generic(x, t: float, p0: float, p1: float) -> KSplit:
    """``inf ||x0||_p0 + t ||x1||_p1`` over ``x = x0 + x1``, by convex programming.

    Two programs are solved and the better split is returned.  The first
    runs over the full matrix space (exponents in ``{1, 2, inf}`` only).
    The second runs over splits diagonal in the singular basis of `x`;
    pinching onto that basis is a contraction for every unitarily
    invariant norm and fixes `x`, so no optimum is lost, and the small
    real program is solved to higher accuracy than the matrix one.  The
    objective of each split is in `candidates`.

    Raises
    ------
    UnsupportedExponentError
        If ``p0 < 1`` or ``p1 < 1``.
    """
    import cvxpy as cp

    a = as_matrix(x)
    t = _positive_t(t)
    p0, p1 = _check_pair(p0, p1)
    if not np.any(a):
        z = np.zeros_like(a)
        return KSplit(0.0, z, z.copy(), "trivial", {})
    candidates = {}
    splits = {}
    if p0 in (1.0, 2.0, INF) and p1 in (1.0, 2.0, INF):
        X0 = cp.Variable(a.shape, complex=True)
        prob = cp.Problem(cp.Minimize(_cvx_schatten(X0, p0) + t * _cvx_schatten(a - X0, p1)))
        _solve(prob)
        if X0.value is not None:
            splits["matrix"] = X0.value
    U, s, Vh = np.linalg.svd(a)
    d0 = cp.Variable(s.size)
    prob = cp.Problem(cp.Minimize(cp.pnorm(d0, p0) + t * cp.pnorm(s - d0, p1)))
    _solve(prob)
    if d0.value is not None:
        splits["singular-values"] = (U[:, : s.size] * d0.value) @ Vh[: s.size]
    if not splits:
        raise NumericError(f"convex solver failed with status {prob.status}")
    for name, x0 in splits.items():
        # Every split is feasible; score it by its exact objective.
        candidates[name] = schatten_norm(x0, p0) + t * schatten_norm(a - x0, p1)
    method = min(candidates, key=candidates.get)
    x0 = splits[method]
    return KSplit(candidates[method], x0, a - x0, method, candidates)


def _pair_tag(p0, p1):
    if (p0, p1) == (1.0, INF):
        return "S1-Sinf"
    if (p0, p1) == (INF, 1.0):
        return "Sinf-S1"
    return f"S{p0:g}-S{p1:g}"


def k_value(x, t, pair=(1.0, INF)) -> float:
    """K-functional of `x` for a Schatten pair, preferring the closed form."""
    p0, p1 = float(pair[0]), float(pair[1])
    if (p0, p1) == (1.0, INF):
        return k_functional_s1_sinf(x, t)
    if (p0, p1) == (INF, 1.0):
        return k_functional_sinf_s1(x, t)
    return k_functional_generic(x, t, p0, p1).value


@dataclass
class KFunctionalCurve:
    """``t -> K(t, x)`` sampled on ``t = 2**k``, ``k = -K..K``."""

    pair_tag: str
    p0: float
    p1: float
    grid: np.ndarray
    values: np.ndarray

    def check(self, rtol: float = 1e-9) -> dict:
        """Monotonicity, antitone ``K(t)/t`` and concavity on consecutive triples."""
        t, v = self.grid, self.values
        scale = max(float(np.max(np.abs(v))), 1e-300)
        mono = bool(np.all(np.diff(v) >= -rtol * scale))
        ratio = v / t
        anti = bool(np.all(np.diff(ratio) <= rtol * np.maximum(ratio[:-1], 1e-300)))
        concave = True
        for i in range(1, t.size - 1):
            lam = (t[i + 1] - t[i]) / (t[i + 1] - t[i - 1])
            chord = lam * v[i - 1] + (1 - lam) * v[i + 1]
            if v[i] < chord - rtol * scale:
                concave = False
                break
        return {"monotone": mono, "ratio_antitone": anti, "concave": concave}

    def rows(self):
        return [(float(a), float(b)) for a, b in zip(self.grid, self.values)]


def k_functional_curve(x, pair=(1.0, INF), half_width: int = 16) -> KFunctionalCurve:
    p0, p1 = float(pair[0]), float(pair[1])
    if half_width < 0 or half_width > K_CAP:
        raise DomainError(f"grid half-width must lie in [0, {K_CAP}], got {half_width}")
    ks = np.arange(-half_width, half_width + 1)
    grid = np.ldexp(1.0, ks)
    values = np.array([k_value(x, t, (p0, p1)) for t in grid])
    return KFunctionalCurve(_pair_tag(p0, p1), p0, p1, grid, values)


def _tail_width(theta, p, norm0, norm1, head):
    """Smallest ``K`` with both geometric tails below ``TAIL_RTOL`` of `head`, or ``None``."""
    if head <= 0:
        return 0
    for K in range(K_CAP + 1):
        t0, t1 = _tails(theta, p, norm0, norm1, K)
        if p == INF:
            if max(t0, t1) <= TAIL_RTOL * head:
                return K
        elif t0 + t1 <= TAIL_RTOL * p * head**p:
            return K
    return None


def _tails(theta, p, norm0, norm1, K):
    # Beyond +K: K(t) <= ||x||_A0; below -K: K(t) <= t ||x||_A1.
    r0 = 2.0 ** (-theta)
    r1 = 2.0 ** (-(1.0 - theta))
    if p == INF:
        return norm0 * r0 ** (K + 1), norm1 * r1 ** (K + 1)
    a = (norm0 * r0 ** (K + 1)) ** p / (1.0 - r0**p)
    b = (norm1 * r1 ** (K + 1)) ** p / (1.0 - r1**p)
    return a, b


def real_interp_norm(x, theta: float, p: float, pair=(1.0, INF)) -> NormEstimate:
    """Discrete ``(theta, p)`` norm ``(sum_k (2^(-k theta) K(2^k, x))^p)^(1/p)``.

    The sum runs over ``k = -K..K`` with ``K`` the smallest half-width for
    which the geometric tail bounds fall below ``1e-6`` relative, capped
    at 128.  The returned bracket is ``[partial sum, partial sum + tails]``;
    when the cap is hit the status is ``truncated`` and a warning is carried
    in ``info``.
    """
    a = as_matrix(x)
    theta, p = float(theta), float(p)
    if not 0 < theta < 1:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    if not p >= 1:
        raise DomainError(f"interpolation exponent must be >= 1, got {p}")
    p0, p1 = float(pair[0]), float(pair[1])
    _check_pair(p0, p1)
    info = {"pair": _pair_tag(p0, p1), "theta": theta}
    if not np.any(a):
        c = Certificate("exact", 0.0)
        return NormEstimate(0.0, 0.0, 0.0, {"lower": c, "upper": c}, "converged", p, None,
                            dict(info, half_width=0))
    norm0, norm1 = schatten_norm(a, p0), schatten_norm(a, p1)
    head = k_value(a, 1.0, (p0, p1))
    K = _tail_width(theta, p, norm0, norm1, head)
    status = "converged"
    if K is None:
        K = K_CAP
        status = "truncated"
        info["warning"] = f"tails exceed {TAIL_RTOL:g} relative at the half-width cap {K_CAP}"
    ks = np.arange(-K, K + 1)
    terms = np.array([2.0 ** (-k * theta) * k_value(a, 2.0**k, (p0, p1)) for k in ks])
    t0, t1 = _tails(theta, p, norm0, norm1, K)
    if p == INF:
        lower = float(terms.max())
        upper = max(lower, t0, t1)
    else:
        lower = lp_of_values(terms, p)
        upper = float((lower**p + t0 + t1) ** (1.0 / p))
    info["half_width"] = int(K)
    cert_lo = Certificate("partial_sum", lower, {"half_width": int(K)})
    cert_up = Certificate("tail_bound", upper, {"tail_high": t0, "tail_low": t1})
    return NormEstimate(lower, lower, upper, {"lower": cert_lo, "upper": cert_up}, status, p, None, info)


def symmetric_pair(p: float):
    """Default ``(p0, p1, theta)`` with ``p0 < p < p1`` placed symmetrically and ``1/p`` interpolated."""
    p = float(p)
    if not 1 < p < INF:
        raise DomainError(f"need 1 < p < inf for a pair around p, got {p}")
    delta = 0.5 * (p - 1.0)
    p0, p1 = p - delta, p + delta
    theta = (1.0 / p0 - 1.0 / p) / (1.0 / p0 - 1.0 / p1)
    return p0, p1, theta


# ----------------------------------------------------------------------------
# Lorentz norms


@dataclass(frozen=True)
class LorentzParams:
    r: float
    p: float

    def __post_init__(self):
        r, p = float(self.r), float(self.p)
        if not (0 < r < INF):
            raise DomainError(f"Lorentz r must lie in (0, inf), got {r}")
        if not p > 0:
            raise DomainError(f"Lorentz p must lie in (0, inf], got {p}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "p", p)


def lorentz_seq_norm(a, params: LorentzParams) -> float:
    """``(sum_k (k^(1/r - 1/p) a*_k)^p)^(1/p)``; ``sup_k k^(1/r) a*_k`` when ``p = inf``."""
    star = decreasing_rearrangement(a)
    r, p = params.r, params.p
    if p == r:
        return lp_of_values(star, r)
    if star.size == 0:
        return 0.0
    k = np.arange(1, star.size + 1, dtype=float)
    if p == INF:
        return float(np.max(k ** (1.0 / r) * star))
    return lp_of_values(k ** (1.0 / r - 1.0 / p) * star, p)


def lorentz_schatten_norm(m, params: LorentzParams) -> float:
    return lorentz_seq_norm(singular_values(m), params)


@dataclass
class DivergenceTable:
    """Ratios ``l_{r,p} / l_r`` on ``a_k = k^(-1/r)`` and a fit against ``log log n``."""

    r: float
    p: float
    sizes: list
    ratios: list
    slope: float | None = None
    intercept: float | None = None
    predicted_slope: float = field(init=False)

    def __post_init__(self):
        self.predicted_slope = (0.0 if self.p == INF else 1.0 / self.p) - 1.0 / self.r

    def rows(self):
        return list(zip(self.sizes, self.ratios))

    def growing(self):
        """Ratios oriented so that they increase with ``n``."""
        if self.predicted_slope < 0:
            return [1.0 / v for v in self.ratios]
        return list(self.ratios)


def divergence_curve(r: float, p: float, sizes) -> DivergenceTable:
    """Tabulate ``||a||_{r,p} / ||a||_r`` for ``a_k = k^(-1/r)``, ``k <= n``.

    The slope of ``log ratio`` against ``log log n`` is fitted by least
    squares on the final half of `sizes` (sizes ``n <= 2`` are excluded
    from the fit, where ``log log n`` is not positive).
    """
    params = LorentzParams(r, p)
    plain = LorentzParams(r, r)
    sizes = [int(n) for n in sizes]
    if any(n < 1 for n in sizes):
        raise DomainError("sizes must be positive")
    ratios = []
    for n in sizes:
        a = np.arange(1, n + 1, dtype=float) ** (-1.0 / params.r)
        ratios.append(lorentz_seq_norm(a, params) / lorentz_seq_norm(a, plain))
    table = DivergenceTable(params.r, params.p, sizes, ratios)
    tail = [(n, v) for n, v in zip(sizes, ratios)][len(sizes) // 2:]
    tail = [(n, v) for n, v in tail if n > 2]
    if len(tail) >= 2:
        X = np.log(np.log([n for n, _ in tail]))
        Y = np.log([v for _, v in tail])
        slope, intercept = np.polyfit(X, Y, 1)
        table.slope, table.intercept = float(slope), float(intercept)
    return table
