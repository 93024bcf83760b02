"""Checks and counterexamples for the matrix power-mean inequality

    ||(sum_i x_i^q)^(1/q)||_p <= ||(sum_i x_i^r)^(1/r)||_p,   r < q,

which holds for positive matrices when ``p >= r`` and fails in general
when ``p < r``.  Every checker first replaces ``x_i`` by ``x_i^r`` and
divides all exponents by ``r``, so internally ``r = 1``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, SizeError
from .spectral import (
    INF,
    as_psd,
    hermitian_eig,
    kron,
    lp_of_values,
    psd_power,
    random_unitary,
)

AMPLIFY_DIM_BUDGET = 4096
AMPLIFY_ENTRY_BUDGET = 2**24
CERTIFY_MARGIN = 1e-6
TARGET_RATIO = 1.05
EXPONENT_SET = (0.5, 0.7, 1.0, 1.5, 2.0, 3.0, 6.0, INF)


def _div(p, r):
    return INF if p == INF else p / r


def _psd_items(xs):
    items = [as_psd(x) for x in xs]
    if not items:
        raise DomainError("tuple must be nonempty")
    if len({x.dim for x in items}) != 1:
        raise DomainError("tuple items differ in dimension")
    return items


def _power_sum_spectrum(items, q):
    """Eigenvalues of ``(sum_i x_i^q)^(1/q)`` for validated PSD items.

    Eigenvalues of the sum below roughly ``eps * max`` lose relative
    accuracy, which large `q` combined with small `p` makes visible.  A
    single item is returned from its own spectrum.
    """
    if len(items) == 1:
        return items[0].eigenvalues.copy()
    total = sum(psd_power(x, q).entries for x in items)
    w, _ = hermitian_eig(0.5 * (total + total.conj().T))
    return np.clip(w, 0.0, None) ** (1.0 / q)


def power_sum_norm(xs, q: float, p: float) -> float:
    """``||(sum_i x_i^q)^(1/q)||_p`` for positive semidefinite `xs`.

    Raises
    ------
    DomainError
        If an item is not positive semidefinite, or ``q, p <= 0``.
    """
    q, p = float(q), float(p)
    if not (0 < q < INF):
        raise DomainError(f"q must lie in (0, inf), got {q}")
    if not p > 0:
        raise DomainError(f"p must lie in (0, inf], got {p}")
    return lp_of_values(_power_sum_spectrum(_psd_items(xs), q), p)


@dataclass
class PowerMeanReport:
    p: float
    q: float
    r: float
    lhs: float
    rhs: float
    margin: float
    ratio: float
    info: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = asdict(self)
        for key in ("p", "q", "r"):
            out[key] = "inf" if out[key] == INF else out[key]
        return out


def check_power_mean(xs, r: float, q: float, p: float) -> PowerMeanReport:
    """Compare ``lhs = ||(sum x^q)^(1/q)||_p`` against ``rhs = ||(sum x^r)^(1/r)||_p``.

    ``margin = rhs - lhs`` and ``ratio = lhs / rhs``.  With ``q == r`` both
    sides run through the same computation, so the margin is exactly 0.
    """
    r, q, p = float(r), float(q), float(p)
    if not (0 < r <= q < INF):
        raise DomainError(f"need 0 < r <= q < inf, got r={r}, q={q}")
    if not p > 0:
        raise DomainError(f"p must lie in (0, inf], got {p}")
    items = _psd_items(xs)
    reduced = [psd_power(x, r) for x in items]
    pr = _div(p, r)
    rhs = power_sum_norm(reduced, 1.0, pr) ** (1.0 / r)
    lhs = rhs if q == r else power_sum_norm(reduced, q / r, pr) ** (1.0 / r)
    ratio = lhs / rhs if rhs > 0 else (1.0 if lhs == 0 else INF)
    return PowerMeanReport(p, q, r, lhs, rhs, rhs - lhs, ratio)


def log_convexity_gap(xs, p: float, q0: float, q1: float, alpha: float) -> float:
    """``(1-a) q0 log F(q0) + a q1 log F(q1) - q log F(q)`` with ``q = (1-a) q0 + a q1``.

    ``F(q) = power_sum_norm(xs, q, p)``; log-convexity of ``F(q)**q``
    makes the gap nonnegative.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not (q0 > 0 and q1 > 0):
        raise DomainError("q0 and q1 must be positive")
    items = _psd_items(xs)
    if all(not np.any(x.eigenvalues) for x in items):
        raise DomainError("log-convexity gap is undefined for the zero tuple")
    q = (1 - alpha) * q0 + alpha * q1
    logs = [math.log(power_sum_norm(items, e, p)) for e in (q0, q1, q)]
    return (1 - alpha) * q0 * logs[0] + alpha * q1 * logs[1] - q * logs[2]


# ----------------------------------------------------------------------------
# the 2x2 counterexample


def counterexample_pair(t: float):
    """``x = [[1, 1], [1, 1]]`` and ``y = diag(0, t)``."""
    x = np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
    y = np.array([[0.0, 0.0], [0.0, t]], dtype=complex)
    return x, y


def counterexample_eigs(t: float):
    """Eigenvalues ``(2 + t +- sqrt(4 + t^2)) / 2`` of ``[[1, 1], [1, 1 + t]]``.

    The smaller one is taken as ``det / lambda_plus = t / lambda_plus``,
    which keeps full relative accuracy for small `t`.
    """
    t = float(t)
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    plus = (2.0 + t + math.hypot(2.0, t)) / 2.0
    return plus, t / plus


def _excess(p, plus, minus):
    # plus**p + minus**p - 2**p, with plus = 2 (1 + u) and u small.
    u = plus / 2.0 - 1.0
    return 2.0**p * math.expm1(p * math.log1p(u)) + minus**p


def counterexample_values(p: float, q: float, t: float):
    """Excesses ``||x+y||_p^p - 2^p`` and ``||(x^q+y^q)^(1/q)||_p^p - 2^p`` in closed form.

    ``x^q + y^q = 2^(q-1) [[1, 1], [1, 1 + 2^(1-q) t^q]]``.
    """
    plus, minus = counterexample_eigs(t)
    sum_side = _excess(p, plus, minus)
    s = 2.0 ** (1.0 - q) * t**q
    sp, sm = counterexample_eigs(s)
    c = 2.0 ** ((q - 1.0) / q)
    power_side = _excess(p, c * sp ** (1.0 / q), c * sm ** (1.0 / q))
    return sum_side, power_side


@dataclass
class AsymptoticFit:
    """Log-log regression ``measured ~ coefficient * t**exponent`` over the points in `used`."""

    t_grid: np.ndarray
    measured: np.ndarray
    used: np.ndarray
    fitted_exponent: float
    fitted_coefficient: float
    residual: float

    def point_residuals(self) -> np.ndarray:
        pred = math.log(self.fitted_coefficient) + self.fitted_exponent * np.log(self.t_grid)
        return np.log(self.measured) - pred


def log_grid(t_min: float, t_max: float, per_decade: int = 6) -> np.ndarray:
    """Decreasing logarithmic grid from `t_max` down to `t_min`."""
    if not (0 < t_min < t_max):
        raise DomainError(f"need 0 < t_min < t_max, got {t_min}, {t_max}")
    decades = math.log10(t_max / t_min)
    count = int(round(decades * per_decade)) + 1
    return np.logspace(math.log10(t_max), math.log10(t_min), max(count, 2))


def _fit(t, measured, used):
    X, Y = np.log(t[used]), np.log(measured[used])
    slope, intercept = np.polyfit(X, Y, 1)
    resid = float(np.sqrt(np.mean((Y - (slope * X + intercept)) ** 2)))
    return AsymptoticFit(t, measured, used, float(slope), math.exp(intercept), resid)


def counterexample_expansion(p: float, q: float, t_grid=None):
    """Fits of both excesses against ``t``; returns ``(sum_fit, power_fit)``.

    Expected: both exponents near ``p``, coefficients near ``2^-p`` and
    ``2^(-p/q)``.  The largest decade of the grid is left out of the fit.
    """
    p, q = float(p), float(q)
    if not (0 < p < 1 < q < INF):
        raise DomainError(f"need 0 < p < 1 < q < inf, got p={p}, q={q}")
    t = log_grid(1e-5, 1e-2) if t_grid is None else np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or np.any(t <= 0) or np.any(t > 1e-1):
        raise DomainError("t grid must lie in (0, 1e-1]")
    if np.any(np.diff(t) >= 0):
        t = np.sort(np.unique(t))[::-1]
    used = t <= t.max() / 10.0 * (1 + 1e-12)
    if used.sum() < 4:
        raise DomainError(f"fit needs at least 4 grid points below the largest decade, got {int(used.sum())}")
    vals = np.array([counterexample_values(p, q, ti) for ti in t])
    return _fit(t, vals[:, 0], used), _fit(t, vals[:, 1], used)


# ----------------------------------------------------------------------------
# tensor amplification


def tensor_amplify(xs, k: int) -> np.ndarray:
    """All ``k``-fold Kronecker products ``x_{i_1} (x) ... (x) x_{i_k}``, lexicographic in the indices."""
    arr = np.asarray([np.asarray(x, dtype=complex) for x in xs])
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise DomainError("expected a tuple of square matrices")
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    m, n = arr.shape[0], arr.shape[1]
    if n**k > AMPLIFY_DIM_BUDGET:
        raise SizeError(f"amplified dimension {n}^{k} exceeds {AMPLIFY_DIM_BUDGET}")
    if m**k * n ** (2 * k) > AMPLIFY_ENTRY_BUDGET:
        raise SizeError(f"{m}^{k} amplified items of size {n**k} exceed the entry budget")
    out = arr
    for _ in range(k - 1):
        out = np.array([kron(a, b) for a in out for b in arr])
    return out


def amplified_power_sum_norm(xs, q: float, p: float, k: int) -> float:
    """``power_sum_norm`` of the ``k``-fold amplified family without forming it.

    ``sum`` over multi-indices of ``x_{i_1}^q (x) ... (x) x_{i_k}^q`` equals
    ``(sum_i x_i^q)^{(x) k}``, whose spectrum is the set of ``k``-fold
    products of the base spectrum.
    """
    lam = _power_sum_spectrum(_psd_items(xs), float(q))
    if lam.size**k <= 2**22:
        spec = lam
        for _ in range(k - 1):
            spec = np.multiply.outer(spec, lam).ravel()
        return lp_of_values(spec, p)
    return lp_of_values(lam, p) ** k


# ----------------------------------------------------------------------------
# violation search


def _mp_ratio(xs, q, p, dps=50):
    """``||(sum x^q)^(1/q)||_p / ||sum x||_p`` in multiprecision, for ``r = 1`` tuples."""
    import mpmath as mp

    with mp.workdps(dps):
        def herm_power(a, e):
            w, u = mp.eigh(a)
            d = mp.diag([max(v, 0) ** e for v in w])
            return u * d * u.H

        def schatten(a):
            w, _ = mp.eigh(a)
            vals = [max(v, 0) for v in w]
            if p == INF:
                return max(vals)
            return mp.fsum(v**p for v in vals) ** (1 / mp.mpf(p))

        mats = [mp.matrix(np.asarray(x).tolist()) for x in xs]
        total = mats[0] * 0
        plain = mats[0] * 0
        for a in mats:
            total += herm_power(a, mp.mpf(q))
            plain += a
        lhs = schatten(herm_power(total, 1 / mp.mpf(q)))
        rhs = schatten(plain)
        return float(lhs / rhs)


def _random_tuple(rng, dims, lengths):
    n = int(rng.integers(dims[0], dims[1] + 1))
    m = int(rng.integers(lengths[0], lengths[1] + 1))
    out = []
    for _ in range(m):
        rank = n if rng.random() < 0.6 else int(rng.integers(1, n + 1))
        g = rng.standard_normal((rank, n)) + 1j * rng.standard_normal((rank, n))
        out.append(math.exp(rng.standard_normal()) * (g.conj().T @ g) / 2)
    return out


def _near_commuting_tuple(rng, dims, lengths):
    n = int(rng.integers(dims[0], dims[1] + 1))
    m = int(rng.integers(lengths[0], lengths[1] + 1))
    u = random_unitary(rng, n)
    eps = 10.0 ** rng.uniform(-3, -1)
    out = []
    for _ in range(m):
        d = np.diag(rng.exponential(size=n) * (rng.random(n) < 0.7))
        h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        v = np.linalg.qr(np.eye(n) + eps * (h - h.conj().T))[0]
        out.append((u @ v) @ d @ (u @ v).conj().T)
    return out


def random_psd_tuple(rng, dims=(2, 6), lengths=(2, 6)):
    """Random PSD tuple mixing full-rank and low-rank Wishart items at random scales."""
    return _random_tuple(rng, dims, lengths)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Generator for one trial, derived by counter so results do not depend on scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def _reduced_ratio(xs, q, p):
    return power_sum_norm(xs, q, p) / power_sum_norm(xs, 1.0, p)


def _search_trial(args):
    seed, trial, qr, pr, dims, lengths, families = args
    rng = trial_rng(seed, trial)
    fam = families[trial % len(families)]
    if fam == "pair":
        t = 10.0 ** rng.uniform(-4, -1)
        xs = list(counterexample_pair(t))
    elif fam == "near_commuting":
        xs = _near_commuting_tuple(rng, dims, lengths)
    else:
        xs = _random_tuple(rng, dims, lengths)
    scale = max(np.abs(np.asarray(xs)).max(), 1e-300)
    xs = [x / scale for x in xs]
    try:
        ratio = _reduced_ratio(xs, qr, pr)
    except (DomainError, ZeroDivisionError, FloatingPointError):
        ratio = float("nan")
    return {"trial": trial, "family": fam, "ratio": ratio, "tuple": xs}


@dataclass
class ViolationReport:
    """Outcome of :func:`find_violation`.

    `status` is ``certified`` (amplified ratio above ``1 + 1e-6`` and the
    base ratio confirmed in multiprecision), ``inconclusive`` (ratio above
    1 but not certified) or ``none``.
    """

    p: float
    q: float
    r: float
    status: str
    best: PowerMeanReport | None
    base_ratio: float | None
    amplified_ratio: float | None
    k: int
    multiprecision_ratio: float | None
    amplification: list
    trials: list

    def summary(self) -> dict:
        def num(v):
            return "inf" if v == INF else v

        return {
            "p": num(self.p), "q": num(self.q), "r": num(self.r), "status": self.status,
            "base_ratio": self.base_ratio, "amplified_ratio": self.amplified_ratio, "k": self.k,
            "multiprecision_ratio": self.multiprecision_ratio,
            "best": self.best.to_json() if self.best else None,
            "amplification": self.amplification,
        }


def find_violation(p: float, q: float, r: float, trials: int = 200, seed: int = 0, *,
                   dims=(2, 4), lengths=(2, 3), families=("pair", "random", "near_commuting"),
                   jobs: int = 1, max_k: int = 12) -> ViolationReport:
    """Randomized search for ``||(sum x^q)^(1/q)||_p > ||(sum x^r)^(1/r)||_p``.

    Candidates are evaluated in the reduced form ``r = 1``; the best one is
    amplified by Kronecker powers until its ratio exceeds 1.05, the
    amplified dimension would exceed 4096, or ``k = max_k``.

    Raises
    ------
    DomainError
        Unless ``0 < p < r < q < inf``.
    """
    p, q, r = float(p), float(q), float(r)
    if not (0 < r < q < INF):
        raise DomainError(f"need 0 < r < q < inf, got r={r}, q={q}")
    if not (0 < p < r):
        raise DomainError(f"violations need p < r; for p >= r the inequality holds (p={p}, r={r})")
    if dims[1] < 2:
        families = tuple(f for f in families if f != "pair")
    qr, pr = q / r, p / r
    tasks = [(seed, i, qr, pr, tuple(dims), tuple(lengths), tuple(families)) for i in range(int(trials))]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_search_trial, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_search_trial(t) for t in tasks]
    log = [{"trial": res["trial"], "family": res["family"], "ratio": res["ratio"]} for res in results]
    best = None
    for res in results:
        if np.isfinite(res["ratio"]) and (best is None or res["ratio"] > best["ratio"]):
            best = res
    if best is None or best["ratio"] <= 1.0:
        return ViolationReport(p, q, r, "none", None, best["ratio"] if best else None, None, 1, None, [], log)
    xs = best["tuple"]
    # Report in the original exponents: x_i = y_i^(1/r).
    original = [psd_power(x, 1.0 / r).entries for x in xs]
    report = check_power_mean(original, r, q, p)
    report.info = {"trial": best["trial"], "family": best["family"]}
    amp = amplify_violation(original, p, q, r, max_k=max_k)
    return ViolationReport(p, q, r, amp.status, report, best["ratio"], amp.ratio, amp.k,
                           amp.multiprecision_ratio, amp.rows, log)


@dataclass
class AmplificationReport:
    """Ratios ``lhs/rhs`` of the amplified families for ``k = 1, 2, ...``."""

    k: int
    ratio: float
    multiprecision_ratio: float
    status: str
    rows: list


def amplify_violation(xs, p: float, q: float, r: float = 1.0, max_k: int = 12) -> AmplificationReport:
    """Amplify a candidate by Kronecker powers until its ratio exceeds 1.05.

    Stops early at ``k = max_k`` or when the amplified dimension would pass
    4096.  Amplified norms come from the Kronecker spectrum: forming the
    family explicitly drowns its smallest eigenvalues (products of powers
    of ``t``) in roundoff, which matters for ``p < 1``.  The base ratio is
    recomputed with 50-digit arithmetic; the result is ``certified`` when both the float and the
    multiprecision amplified ratios exceed ``1 + 1e-6``.
    """
    p, q, r = float(p), float(q), float(r)
    items = _psd_items(xs)
    reduced = [psd_power(x, r).entries for x in items]
    qr, pr = q / r, _div(p, r)
    n = items[0].dim
    rows = []
    for k in range(1, int(max_k) + 1):
        if n**k > AMPLIFY_DIM_BUDGET:
            break
        ratio = (amplified_power_sum_norm(reduced, qr, pr, k)
                 / amplified_power_sum_norm(reduced, 1.0, pr, k)) ** (1.0 / r)
        rows.append({"k": k, "ratio": ratio})
        if ratio > TARGET_RATIO:
            break
    if not rows:
        raise SizeError(f"dimension {n} leaves no room for amplification within {AMPLIFY_DIM_BUDGET}")
    last = rows[-1]
    mp_ratio = _mp_ratio(reduced, qr, pr) ** (1.0 / r)
    if last["ratio"] > 1 + CERTIFY_MARGIN and mp_ratio ** last["k"] > 1 + CERTIFY_MARGIN:
        status = "certified"
    elif last["ratio"] > 1:
        status = "inconclusive"
    else:
        status = "none"
    return AmplificationReport(last["k"], last["ratio"], mp_ratio, status, rows)


# ----------------------------------------------------------------------------
# property suites


def run_trials(fn, tasks, jobs: int = 1):
    """Map `fn` over `tasks`, in order, on up to `jobs` worker processes."""
    tasks = list(tasks)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [fn(t) for t in tasks]


def _finite_exponents():
    return [e for e in EXPONENT_SET if e != INF]


def sample_power_mean_exponents(rng):
    """``(p, q, r)`` with ``r < q`` finite and ``p >= r`` (possibly infinite) from the exponent set."""
    fin = _finite_exponents()
    r = fin[int(rng.integers(len(fin) - 1))]
    qs = [e for e in fin if e > r]
    q = qs[int(rng.integers(len(qs)))]
    ps = [e for e in EXPONENT_SET if e >= r]
    p = ps[int(rng.integers(len(ps)))]
    return p, q, r


def _power_mean_trial(args):
    seed, trial, p, q, r, dims, lengths = args
    rng = trial_rng(seed, trial)
    xs = random_psd_tuple(rng, dims, lengths)
    if p is None or q is None or r is None:
        sp, sq, sr = sample_power_mean_exponents(rng)
        p = sp if p is None else p
        q = sq if q is None else q
        r = sr if r is None else r
    rep = check_power_mean(xs, r, q, p)
    row = rep.to_json()
    row.update(trial=trial, dim=xs[0].shape[0], length=len(xs),
               relative_margin=rep.margin / rep.rhs if rep.rhs > 0 else 0.0)
    return row


def power_mean_suite(trials: int = 1000, seed: int = 0, p=None, q=None, r=None,
                     dims=(2, 6), lengths=(2, 6), jobs: int = 1, tol: float = 1e-9) -> dict:
    """Random trials of the power-mean inequality.

    Exponents left as ``None`` are sampled per trial.  Trials with
    ``p >= r`` are held to ``margin >= -tol * rhs``; trials with ``p < r``
    are counted as expected violations when their ratio exceeds 1.
    """
    tasks = [(seed, i, p, q, r, tuple(dims), tuple(lengths)) for i in range(int(trials))]
    rows = run_trials(_power_mean_trial, tasks, jobs)
    held = [row for row in rows if _num_back(row["p"]) >= row["r"]]
    failures = [row for row in held if row["relative_margin"] < -tol]
    violations = [row for row in rows if _num_back(row["p"]) < row["r"] and row["ratio"] > 1]
    worst = min(held, key=lambda row: row["relative_margin"]) if held else None
    return {
        "suite": "power_mean",
        "trials": len(rows),
        "checked": len(held),
        "min_relative_margin": worst["relative_margin"] if worst else None,
        "worst_trial": worst["trial"] if worst else None,
        "failures": len(failures),
        "expected_violations": len(violations),
        "passed": not failures,
        "rows": rows,
    }


def _num_back(v):
    return INF if v == "inf" else float(v)


def _logconv_trial(args):
    seed, trial, p, dims, lengths = args
    rng = trial_rng(seed, trial)
    xs = random_psd_tuple(rng, dims, lengths)
    fin = _finite_exponents()
    q0 = fin[int(rng.integers(len(fin)))]
    q1 = fin[int(rng.integers(len(fin)))]
    if p is None:
        p = EXPONENT_SET[int(rng.integers(len(EXPONENT_SET)))]
    alpha = 0.5 if trial % 2 == 0 else float(rng.uniform(0.05, 0.95))
    gap = log_convexity_gap(xs, p, q0, q1, alpha)
    return {"trial": trial, "p": "inf" if p == INF else p, "q0": q0, "q1": q1, "alpha": alpha,
            "gap": gap, "dim": xs[0].shape[0], "length": len(xs)}


def log_convexity_suite(trials: int = 1000, seed: int = 0, p=None, dims=(2, 6), lengths=(2, 6),
                        jobs: int = 1, tol: float = 1e-9) -> dict:
    """Random trials of the log-convexity of ``q -> ||(sum x^q)^(1/q)||_p^q``; even trials use ``alpha = 1/2``."""
    tasks = [(seed, i, p, tuple(dims), tuple(lengths)) for i in range(int(trials))]
    rows = run_trials(_logconv_trial, tasks, jobs)
    worst = min(rows, key=lambda row: row["gap"])
    failures = [row for row in rows if row["gap"] < -tol]
    return {
        "suite": "log_convexity",
        "trials": len(rows),
        "min_gap": worst["gap"],
        "worst_trial": worst["trial"],
        "failures": len(failures),
        "passed": not failures,
        "rows": rows,
    }
