"""Mixed norms ``L_p(M_n; l_q)`` on finite tuples of matrices.

Both variational descriptions of the norm are solved as smooth problems
over a pair of positive matrices ``(P, Q)`` living in a Schatten sphere:

* contraction side (``p > q``): ``sup (sum_i ||alpha x_i beta||_q^q)^(1/q)``
  over ``||alpha||_2s, ||beta||_2s <= 1``.  With ``alpha = P**(1/(2q))`` and
  ``beta = Q**(1/(2q))`` the objective
  ``F(P, Q) = sum_i tr (Q^(1/2q) x_i* P^(1/q) x_i Q^(1/2q))^(q/2)`` is
  jointly concave (Hiai's trace concavity), and the feasible set
  ``tr P**(s/q) <= 1`` is convex.
* factorization side (``p < q < inf``): ``inf ||a||_2r ||(y_i)||_q ||b||_2r``
  over ``x_i = a y_i b``.  With ``a = P**(1/(2q'))`` the objective
  ``sum_i ||a^-1 x_i b^-1||_q^q`` is jointly convex in ``(P, Q)``.

Any feasible point certifies one side of the bracket directly (a witness
or a factorization).  The other side comes from linearizing the
concave/convex objective at the final iterate: the tangent plane bounds the
objective everywhere, and its extremum over a Schatten ball is a dual norm
in closed form.

The ``q = inf`` factorization side is non-smooth; there the lower bound is
certified by the ``L_p'(l_1)`` factorization of a dual tuple
``z_i = u_i* v_i`` and the primal factorization is recovered from it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, SizeError
from .spectral import (
    INF,
    ExponentTriple,
    as_matrix,
    conjugate_exponent,
    frechet_power,
    lp_of_values,
    matrix_to_json,
    schatten_norm,
)

GAP_TOL = 1e-3
REGULARIZER = 1e-10
PSEUDO_RTOL = 1e-13
MAX_DIM = 12
MAX_LENGTH = 16
# Restarts stop once the certified relative gap drops below this.
CERTIFIED_GAP = 1e-7


def as_tuple(xs) -> np.ndarray:
    """Validate a tuple of same-size square matrices; returns shape ``(m, n, n)``."""
    if isinstance(xs, np.ndarray) and xs.ndim == 3:
        arr = xs.astype(complex, copy=False)
    else:
        items = [as_matrix(x) for x in xs]
        if not items:
            raise DomainError("matrix tuple must be nonempty")
        shapes = {x.shape for x in items}
        if len(shapes) != 1:
            raise DomainError(f"matrix tuple items differ in shape: {sorted(shapes)}")
        arr = np.stack(items)
    if arr.shape[0] == 0 or arr.shape[1] != arr.shape[2] or arr.shape[1] == 0:
        raise DomainError(f"expected a nonempty tuple of square matrices, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("matrix tuple has non-finite entries")
    return arr


def _matrix_json(m):
    if m.shape[0] == m.shape[1]:
        return matrix_to_json(m)
    # rectangular dual factors carry both dimensions
    return {"rows": m.shape[0], "cols": m.shape[1], "re": m.real.ravel().tolist(),
            "im": m.imag.ravel().tolist()}


@dataclass
class Certificate:
    """Evidence for one side of a :class:`NormEstimate`.

    `kind` is one of ``factorization`` (``a``, ``y``, ``b``), ``witness``
    (``alpha``, ``beta``), ``dual_witness`` (``z`` and, when available, its
    ``u``/``v`` factors), ``linearization`` (the point ``P``, ``Q`` whose
    tangent plane gives the bound) or ``exact``.
    """

    kind: str
    bound: float
    data: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "bound": self.bound}
        for key, val in self.data.items():
            if isinstance(val, np.ndarray) and val.ndim == 2:
                out[key] = _matrix_json(val)
            elif isinstance(val, np.ndarray) and val.ndim == 3:
                out[key] = [_matrix_json(v) for v in val]
            elif isinstance(val, np.ndarray):
                out[key] = val.tolist()
            else:
                out[key] = val
        return out


@dataclass
class NormEstimate:
    value: float
    lower: float
    upper: float
    certificate: dict
    status: str = "converged"
    p: float | None = None
    q: float | None = None
    info: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        if self.upper <= 0:
            return 0.0
        return max(0.0, (self.upper - self.lower) / self.upper)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_json(self) -> dict:
        return {
            "p": _num(self.p),
            "q": _num(self.q),
            "value": self.value,
            "lower": self.lower,
            "upper": self.upper,
            "gap": self.gap,
            "status": self.status,
            "certificate": {side: c.to_json() for side, c in self.certificate.items()},
            "info": self.info,
        }


def _recip(x):
    return 0.0 if x == INF else 1.0 / x


def _num(x):
    if x is None:
        return None
    return "inf" if x == INF else x


# ----------------------------------------------------------------------------
# smooth trace-power objective and its gradient


def _eigh(s):
    w, u = np.linalg.eigh(0.5 * (s + s.conj().T))
    return w, u


def _herm_power(w, u, e):
    return (u * w**e) @ u.conj().T


def _pseudo_power(mu, e):
    top = mu.max(axis=-1, keepdims=True)
    keep = mu > PSEUDO_RTOL * np.maximum(top, 1e-300)
    return np.where(keep, np.where(keep, mu, 1.0) ** e, 0.0)


def trace_power_objective(xs, p_eig, q_eig, a_exp, b_exp, h, grad=True):
    """``F = sum_i tr (B x_i* A x_i B)^h`` with ``A = P**a_exp``, ``B = Q**b_exp``.

    `p_eig`, `q_eig` are ``(eigenvalues, basis)`` pairs of positive definite
    ``P`` and ``Q``.  Returns ``F`` and, if requested, the Hermitian
    gradients with respect to ``P`` and ``Q``.

    ``F`` is accumulated from the singular values of ``A^(1/2) x_i B``
    rather than the eigenvalues of its Gram matrix: for ``h < 1`` the
    latter turns roundoff into an O(sqrt(eps)) overestimate.
    """
    wp, up = p_eig
    wq, uq = q_eig
    A = _herm_power(wp, up, a_exp)
    A_half = _herm_power(wp, up, 0.5 * a_exp)
    B = _herm_power(wq, uq, b_exp)
    K = xs @ B
    _, sv, Rh = np.linalg.svd(A_half @ K)
    F = float(np.sum(sv ** (2.0 * h)))
    if not grad:
        return F
    R = Rh.conj().transpose(0, 2, 1)
    Mh1 = (R * _pseudo_power(sv**2, h - 1.0)[:, None, :]) @ Rh
    Kh = K.conj().transpose(0, 2, 1)
    WA = h * np.sum(K @ Mh1 @ Kh, axis=0)
    Y = xs.conj().transpose(0, 2, 1) @ A @ xs
    YBM = Y @ B @ Mh1
    WB = h * np.sum(YBM + YBM.conj().transpose(0, 2, 1), axis=0)
    WA = 0.5 * (WA + WA.conj().T)
    WB = 0.5 * (WB + WB.conj().T)
    gP = frechet_power(wp, up, a_exp, WA)
    gQ = frechet_power(wq, uq, b_exp, WB)
    return F, 0.5 * (gP + gP.conj().T), 0.5 * (gQ + gQ.conj().T)


def _schatten_sphere_norm(w, sigma):
    return float(np.sum(w**sigma) ** (1.0 / sigma))


def _dual_of_positive_part(g, sigma):
    """``max <g, P>`` over ``P >= 0, tr P**sigma <= 1``: the conjugate norm of ``g_+``."""
    ev = np.clip(np.linalg.eigvalsh(g), 0.0, None)
    return lp_of_values(ev, conjugate_exponent(sigma)) if ev.max() > 0 else 0.0


class _SphereProblem:
    """Optimize ``F(P, Q)`` over ``tr P**sigma = tr Q**sigma = 1``.

    ``P = S / ||S||_sigma`` with ``S = W W* + eps * tr(W W*)/n * I``; the
    homogeneity of ``F`` makes ``F(P, Q) = F(S_P, S_Q) / (|S_P| |S_Q|)**d``.
    """

    def __init__(self, xs, a_exp, b_exp, h, sigma, maximize):
        self.xs = xs
        self.n = xs.shape[1]
        self.a_exp, self.b_exp, self.h = a_exp, b_exp, h
        self.sigma = sigma
        self.maximize = maximize
        self.degree = a_exp * h

    def _unpack(self, theta):
        n = self.n
        z = theta[: 2 * n * n] + 1j * theta[2 * n * n :]
        return z[: n * n].reshape(n, n), z[n * n :].reshape(n, n)

    @staticmethod
    def pack(wp, wq):
        z = np.concatenate([wp.ravel(), wq.ravel()])
        return np.concatenate([z.real, z.imag])

    def _build(self, W):
        S = W @ W.conj().T
        S = S + (REGULARIZER * np.trace(S).real / self.n) * np.eye(self.n)
        return _eigh(S)

    def fun(self, theta):
        Wp, Wq = self._unpack(theta)
        ep, eq = self._build(Wp), self._build(Wq)
        F, gP, gQ = trace_power_objective(self.xs, ep, eq, self.a_exp, self.b_exp, self.h)
        if not F > 0:
            return np.inf, np.zeros_like(theta)
        val = math.log(F)
        grads = []
        for (w, u), g, W in ((ep, gP, Wp), (eq, gQ, Wq)):
            tot = np.sum(w**self.sigma)
            val -= self.degree * math.log(tot) / self.sigma
            H = g / F - self.degree * _herm_power(w, u, self.sigma - 1.0) / tot
            gw = 2.0 * H @ W + (2.0 * REGULARIZER * np.trace(H).real / self.n) * W
            grads.append(gw.ravel())
        gz = np.concatenate(grads)
        gtheta = np.concatenate([gz.real, gz.imag])
        if self.maximize:
            return -val, -gtheta
        return val, gtheta

    def point(self, theta):
        """Normalized ``(P, Q)`` eigendecompositions for parameters `theta`."""
        out = []
        for W in self._unpack(theta):
            w, u = self._build(W)
            nrm = _schatten_sphere_norm(w, self.sigma)
            out.append((w / nrm, u))
        return out


def _seed_factors(xs, rng, restart):
    n = xs.shape[1]
    if restart == 0:
        left = np.sum(xs @ xs.conj().transpose(0, 2, 1), axis=0)
        right = np.sum(xs.conj().transpose(0, 2, 1) @ xs, axis=0)
        out = []
        for g in (left, right):
            w, u = _eigh(g)
            w = np.clip(w, 0.0, None) + 1e-3 * max(w.max(), 1e-300)
            out.append(_herm_power(w, u, 0.25))
        return out
    return [
        (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2 * n)
        for _ in range(2)
    ]


def _run_sphere(problem, x0, maxiter):
    res = minimize(problem.fun, x0, jac=True, method="L-BFGS-B",
                   options={"maxiter": maxiter, "maxcor": 30, "ftol": 1e-15, "gtol": 1e-12})
    return res


# ----------------------------------------------------------------------------
# contraction side, p > q


def _sup_side(xs, p, q, restarts, seed, maxiter):
    trip = ExponentTriple(p, q)
    ip, iq = _recip(p), 1.0 / q
    sigma = iq / (iq - ip)
    prob = _SphereProblem(xs, 1.0 / q, 0.5 / q, 0.5 * q, sigma, maximize=True)
    rng = np.random.default_rng(seed)
    best_lo, best_up = None, None
    runs = []
    for k in range(restarts + 1):
        x0 = _SphereProblem.pack(*_seed_factors(xs, rng, k))
        res = _run_sphere(prob, x0, maxiter)
        (wp, up), (wq, uq) = prob.point(res.x)
        F, gP, gQ = trace_power_objective(xs, (wp, up), (wq, uq), prob.a_exp, prob.b_exp, prob.h)
        P = _herm_power(wp, up, 1.0)
        Q = _herm_power(wq, uq, 1.0)
        tangent = F
        for g, X in ((gP, P), (gQ, Q)):
            tangent += _dual_of_positive_part(g, sigma) - float(np.real(np.vdot(g, X)))
        lo = F ** (1.0 / q)
        hi = max(tangent, F) ** (1.0 / q)
        runs.append({"restart": k, "lower": lo, "upper": hi, "iterations": int(res.nit)})
        alpha = _herm_power(wp, up, 0.5 / q)
        beta = _herm_power(wq, uq, 0.5 / q)
        if best_lo is None or lo > best_lo.bound:
            best_lo = Certificate("witness", lo, {"alpha": alpha, "beta": beta, "s": _num(trip.s)})
        if best_up is None or hi < best_up.bound:
            best_up = Certificate("linearization", hi, {"P": P, "Q": Q, "sigma": sigma})
        if (best_up.bound - best_lo.bound) <= CERTIFIED_GAP * best_up.bound:
            break
    return best_lo, best_up, runs


# ----------------------------------------------------------------------------
# factorization side, p < q < inf


def _inf_side(xs, p, q, restarts, seed, maxiter):
    trip = ExponentTriple(p, q)
    qc = conjugate_exponent(q)
    ip, iq = 1.0 / p, 1.0 / q
    tau = (1.0 - iq) / (ip - iq)
    prob = _SphereProblem(xs, -1.0 / qc, -0.5 / qc, 0.5 * q, tau, maximize=False)
    rng = np.random.default_rng(seed)
    best_lo, best_up = None, None
    runs = []
    for k in range(restarts + 1):
        x0 = _SphereProblem.pack(*_seed_factors(xs, rng, k))
        res = _run_sphere(prob, x0, maxiter)
        (wp, up), (wq, uq) = prob.point(res.x)
        F, gP, gQ = trace_power_objective(xs, (wp, up), (wq, uq), prob.a_exp, prob.b_exp, prob.h)
        P = _herm_power(wp, up, 1.0)
        Q = _herm_power(wq, uq, 1.0)
        tangent = F
        for g, X in ((gP, P), (gQ, Q)):
            tangent += -_dual_of_positive_part(-g, tau) - float(np.real(np.vdot(g, X)))
        a = _herm_power(wp, up, 0.5 / qc)
        b = _herm_power(wq, uq, 0.5 / qc)
        fac = factorization_certificate(xs, a, b, p, q)
        lo = max(tangent, 0.0) ** (1.0 / q)
        hi = fac.bound
        runs.append({"restart": k, "lower": lo, "upper": hi, "iterations": int(res.nit)})
        if best_up is None or hi < best_up.bound:
            best_up = fac
        if best_lo is None or lo > best_lo.bound:
            best_lo = Certificate("linearization", lo, {"P": P, "Q": Q, "tau": tau})
        if (best_up.bound - best_lo.bound) <= CERTIFIED_GAP * best_up.bound:
            break
    return best_lo, best_up, runs


def factorization_certificate(xs, a, b, p, q) -> Certificate:
    """Upper bound ``||a||_2r ||(y_i)||_l_q(S_q) ||b||_2r`` for ``y_i = a^-1 x_i b^-1``."""
    trip = ExponentTriple(p, q)
    y = np.linalg.solve(a, xs)
    y = np.linalg.solve(b.T, y.transpose(0, 2, 1)).transpose(0, 2, 1)
    residual = float(np.max(np.abs(a @ y @ b - xs)) / max(np.abs(xs).max(), 1e-300))
    ynorms = [schatten_norm(yi, q) for yi in y]
    bound = (schatten_norm(a, 2 * trip.r) * lp_of_values(ynorms, q) * schatten_norm(b, 2 * trip.r))
    return Certificate("factorization", bound, {"a": a, "y": y, "b": b, "residual": residual})


# ----------------------------------------------------------------------------
# factorization side with q = inf


def _l1_dual_ratio(xs, u, v, pc):
    """``Re sum_i tr(x_i v_i* u_i) / (||sum u_i* u_i||_p' ||sum v_i* v_i||_p')^(1/2)`` and its gradient.

    ``z_i = u_i* v_i`` has ``L_p'(l_1)`` norm at most the denominator, so
    the ratio never exceeds ``||(x_i)||_{L_p(l_inf)}``.
    """
    N = float(np.real(np.sum(np.einsum("mij,mkj,mki->m", xs, v.conj(), u))))
    parts = []
    for w in (u, v):
        S = np.sum(w.conj().transpose(0, 2, 1) @ w, axis=0)
        ev, U = _eigh(S)
        ev = np.clip(ev, 0.0, None)
        nrm = lp_of_values(ev, pc)
        if pc == INF:
            D = np.outer(U[:, -1], U[:, -1].conj())
        else:
            D = _herm_power(np.where(ev > 0, ev / max(nrm, 1e-300), 0.0), U, pc - 1.0)
        parts.append((nrm, D, S))
    c = math.sqrt(parts[0][0] * parts[1][0])
    if c == 0:
        return 0.0, None, None, parts
    f = N / c
    Gu = v @ xs.conj().transpose(0, 2, 1)
    Gv = u @ xs
    gu = Gu / c - f * (u @ parts[0][1]) / parts[0][0]
    gv = Gv / c - f * (v @ parts[1][1]) / parts[1][0]
    return f, gu, gv, parts


def _recover_factorization(xs, Su, Sv, p, pc):
    cands = []
    for rel in (0.0, 1e-12, 1e-9):
        fac = []
        for S in (Su, Sv):
            ev, U = _eigh(S)
            ev = np.clip(ev, 0.0, None)
            top = max(ev.max(), 1e-300)
            ev = ev + rel * top
            if pc == INF:
                e = np.where(ev >= (1 - 1e-9) * ev.max(), 1.0, rel)
                fac.append(_herm_power(e, U, 1.0))
            else:
                fac.append(_herm_power(ev / top, U, 0.5 * (pc - 1.0)))
        a, b = fac
        y = np.linalg.pinv(a, rcond=1e-13) @ xs @ np.linalg.pinv(b, rcond=1e-13)
        residual = float(np.max(np.abs(a @ y @ b - xs)) / max(np.abs(xs).max(), 1e-300))
        if residual > 1e-10:
            continue
        bound = (schatten_norm(a, 2 * p) * max(schatten_norm(yi, INF) for yi in y)
                 * schatten_norm(b, 2 * p))
        cands.append(Certificate("factorization", bound, {"a": a, "y": y, "b": b, "residual": residual}))
    return min(cands, key=lambda c: c.bound) if cands else None


def _linf_side(xs, p, restarts, seed, maxiter):
    m, n = xs.shape[0], xs.shape[1]
    pc = conjugate_exponent(p)
    k = 2 * n
    rng = np.random.default_rng(seed)
    shape = (m, k, n)
    size = m * k * n

    def unpack(theta):
        z = theta[: 2 * size] + 1j * theta[2 * size :]
        return z[:size].reshape(shape), z[size:].reshape(shape)

    def fun(theta):
        u, v = unpack(theta)
        f, gu, gv, _ = _l1_dual_ratio(xs, u, v, pc)
        if gu is None:
            return 0.0, np.zeros_like(theta)
        g = np.concatenate([gu.ravel(), gv.ravel()])
        return -f, -np.concatenate([g.real, g.imag])

    best_lo, best_up = None, None
    runs = []
    for r in range(restarts + 1):
        u = 1e-3 * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        v = 1e-3 * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        if r == 0:
            L, sv, Rh = np.linalg.svd(xs)
            u[:, :n, :] += np.sqrt(sv)[:, :, None] * L.conj().transpose(0, 2, 1)
            v[:, :n, :] += np.sqrt(sv)[:, :, None] * Rh
        else:
            u *= 1e3
            v *= 1e3
        z0 = np.concatenate([u.ravel(), v.ravel()])
        res = minimize(fun, np.concatenate([z0.real, z0.imag]), jac=True, method="L-BFGS-B",
                       options={"maxiter": maxiter, "maxcor": 30, "ftol": 1e-15, "gtol": 1e-12})
        u, v = unpack(res.x)
        lo, _, _, parts = _l1_dual_ratio(xs, u, v, pc)
        fac = _recover_factorization(xs, parts[0][2], parts[1][2], p, pc)
        hi = fac.bound if fac is not None else INF
        runs.append({"restart": r, "lower": lo, "upper": hi, "iterations": int(res.nit)})
        if best_lo is None or lo > best_lo.bound:
            z = u.conj().transpose(0, 2, 1) @ v
            best_lo = Certificate("dual_witness", lo, {"z": z, "u": u, "v": v})
        if fac is not None and (best_up is None or hi < best_up.bound):
            best_up = fac
        if best_up is not None and (best_up.bound - best_lo.bound) <= CERTIFIED_GAP * best_up.bound:
            break
    return best_lo, best_up, runs


def _l1_linf_sdp(xs):
    """``L_1(l_inf)`` through ``min (tr A + tr B)/2`` s.t. ``[[A, x_i], [x_i*, B]] >= 0``.

    The primal ``(A, B)`` is turned into a factorization and the dual
    blocks into a ``z_i = u_i* v_i`` witness; both are re-evaluated
    independently of the solver's reported objective.
    """
    import cvxpy as cp

    n = xs.shape[1]
    A = cp.Variable((n, n), hermitian=True)
    B = cp.Variable((n, n), hermitian=True)
    cons = [cp.bmat([[A, x], [x.conj().T, B]]) >> 0 for x in xs]
    prob = cp.Problem(cp.Minimize(0.5 * cp.real(cp.trace(A) + cp.trace(B))), cons)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prob.solve(solver="CLARABEL")
    if A.value is None:
        return None, None
    Av, Bv = (0.5 * (M.value + M.value.conj().T) for M in (A, B))
    best_up = None
    for rel in (0.0, 1e-12, 1e-9):
        fac = []
        for M in (Av, Bv):
            ev, U = _eigh(M)
            ev = np.clip(ev, 0.0, None)
            fac.append(_herm_power(ev + rel * max(ev.max(), 1e-300), U, 0.5))
        a, b = fac
        y = np.linalg.pinv(a, rcond=1e-13) @ xs @ np.linalg.pinv(b, rcond=1e-13)
        residual = float(np.max(np.abs(a @ y @ b - xs)) / max(np.abs(xs).max(), 1e-300))
        if residual > 1e-10:
            continue
        bound = schatten_norm(a, 2) * max(schatten_norm(yi, INF) for yi in y) * schatten_norm(b, 2)
        if best_up is None or bound < best_up.bound:
            best_up = Certificate("factorization", bound, {"a": a, "y": y, "b": b, "residual": residual})
    us, vs = [], []
    for c in cons:
        Z = c.dual_value
        Z = 0.5 * (Z + Z.conj().T)
        ev, E = _eigh(Z)
        G = np.sqrt(np.clip(ev, 0.0, None))[:, None] * E.conj().T
        us.append(G[:, :n])
        vs.append(-G[:, n:])
    u, v = np.stack(us), np.stack(vs)
    lo, _, _, _ = _l1_dual_ratio(xs, u, v, INF)
    best_lo = Certificate("dual_witness", max(lo, 0.0), {"z": u.conj().transpose(0, 2, 1) @ v, "u": u, "v": v})
    return best_lo, best_up


# ----------------------------------------------------------------------------
# public operations


def _exact_diagonal_case(xs, p, q):
    """``p = q``: the norm is ``(sum ||x_i||_p^p)^(1/p)`` with identity witnesses."""
    n = xs.shape[1]
    val = lp_of_values([schatten_norm(x, p) for x in xs], p)
    eye = np.eye(n, dtype=complex)
    cert_up = Certificate("factorization", val, {"a": eye, "y": xs, "b": eye, "residual": 0.0})
    cert_lo = Certificate("witness", val, {"alpha": eye, "beta": eye, "s": "inf"})
    return NormEstimate(val, val, val, {"lower": cert_lo, "upper": cert_up}, "converged", p, q,
                        {"method": "exact"})


def _zero_case(xs, p, q):
    zero = Certificate("exact", 0.0)
    return NormEstimate(0.0, 0.0, 0.0, {"lower": zero, "upper": zero}, "converged", p, q,
                        {"method": "exact"})


def _check_exponents(p, q):
    p, q = float(p), float(q)
    ExponentTriple(p, q).mixed_norm_domain()
    return p, q


def _assemble(lo, up, p, q, method, runs, gap_tol, value_side):
    if up is None or lo is None:
        lo = lo or Certificate("exact", 0.0)
        up = up or Certificate("exact", INF)
        est = NormEstimate(lo.bound, lo.bound, up.bound, {"lower": lo, "upper": up}, "unconverged",
                           p, q, {"method": method, "runs": runs})
        return est
    lower, upper = lo.bound, up.bound
    value = upper if value_side == "upper" else lower
    if lower > upper:
        # Both bounds are certified, so they may only cross through roundoff.
        lower = upper = value
    est = NormEstimate(value, lower, upper, {"lower": lo, "upper": up}, "converged", p, q,
                       {"method": method, "runs": runs})
    if est.gap > gap_tol:
        est.status = "unconverged"
    return est


def mixed_norm_upper(xs, p, q, *, restarts=4, seed=0, maxiter=3000, gap_tol=GAP_TOL) -> NormEstimate:
    """Norm of ``L_p(l_q)`` for ``p <= q`` from the factorization formula.

    The upper bound is the best factorization ``x_i = a y_i b`` found; the
    returned estimate also carries a certified lower bound.

    Raises
    ------
    DomainError
        If ``p > q`` or an exponent is below 1.
    """
    xs = as_tuple(xs)
    p, q = _check_exponents(p, q)
    if p > q:
        raise DomainError(f"factorization formula needs p <= q, got p={p}, q={q}")
    if not np.any(xs):
        return _zero_case(xs, p, q)
    if p == q:
        return _exact_diagonal_case(xs, p, q)
    if q == INF:
        if p == 1:
            lo, up = _l1_linf_sdp(xs)
            return _assemble(lo, up, p, q, "sdp", [], gap_tol, "upper")
        lo, up, runs = _linf_side(xs, p, restarts, seed, maxiter)
        return _assemble(lo, up, p, q, "dual-ascent", runs, gap_tol, "upper")
    lo, up, runs = _inf_side(xs, p, q, restarts, seed, maxiter)
    return _assemble(lo, up, p, q, "convex-factorization", runs, gap_tol, "upper")


def mixed_norm_lower(xs, p, q, *, restarts=4, seed=0, maxiter=3000, gap_tol=GAP_TOL) -> NormEstimate:
    """Norm of ``L_p(l_q)`` for ``p >= q`` from the contraction formula.

    Every feasible pair ``(alpha, beta)`` certifies a lower bound; the
    tangent plane of the concave objective at the final pair certifies
    the upper bound.
    """
    xs = as_tuple(xs)
    p, q = _check_exponents(p, q)
    if p < q:
        raise DomainError(f"contraction formula needs p >= q, got p={p}, q={q}")
    if not np.any(xs):
        return _zero_case(xs, p, q)
    if p == q:
        return _exact_diagonal_case(xs, p, q)
    lo, up, runs = _sup_side(xs, p, q, restarts, seed, maxiter)
    return _assemble(lo, up, p, q, "concave-contraction", runs, gap_tol, "lower")


def mixed_norm(xs, p, q, **kwargs) -> NormEstimate:
    """``||(x_i)||_{L_p(M_n; l_q)}`` for ``1 <= p, q <= inf`` with a certified bracket."""
    p, q = _check_exponents(p, q)
    if p <= q:
        return mixed_norm_upper(xs, p, q, **kwargs)
    return mixed_norm_lower(xs, p, q, **kwargs)


def dual_bound(xs, p, q, zs, **kwargs) -> float:
    """Lower bound ``|sum_i tr(x_i z_i*)| / ||(z_i)||_{L_p'(l_q')}``.

    The denominator is the certified upper bound of the dual tuple's norm,
    so the result is a valid lower bound for ``||(x_i)||_{L_p(l_q)}``.
    """
    p, q = float(p), float(q)
    if not (1 < p < INF and 1 < q < INF):
        raise DomainError(f"dual_bound needs 1 < p, q < inf, got p={p}, q={q}")
    xs, zs = as_tuple(xs), as_tuple(zs)
    if xs.shape != zs.shape:
        raise DomainError(f"tuples differ in shape: {xs.shape} vs {zs.shape}")
    if not np.any(zs):
        raise DomainError("dual witness is zero")
    pairing = abs(complex(np.sum(np.einsum("mij,mij->m", xs, zs.conj()))))
    dual = mixed_norm(zs, conjugate_exponent(p), conjugate_exponent(q), **kwargs)
    return pairing / dual.upper


def diag_column_embed(scalars, p=None, q=None) -> np.ndarray:
    """Tuple whose i-th item is ``x_i e_{i,1}``, the canonical diagonal test element.

    `p` and `q` are accepted for symmetry with the norm calls; the
    embedding itself does not depend on them.
    """
    c = np.asarray(scalars, dtype=complex).ravel()
    m = c.size
    if m == 0:
        raise DomainError("need at least one scalar")
    if m > MAX_LENGTH:
        raise SizeError(f"diagonal embedding of length {m} exceeds the budget of {MAX_LENGTH}")
    if p is not None or q is not None:
        ExponentTriple(p if p is not None else 1.0, q if q is not None else 1.0)
    out = np.zeros((m, m, m), dtype=complex)
    out[np.arange(m), np.arange(m), 0] = c
    return out


def reevaluate_certificate(cert: Certificate, xs, p, q) -> float:
    """Recompute the bound a certificate claims, from its stored data alone."""
    xs = as_tuple(xs)
    p, q = float(p), float(q)
    d = cert.data
    if cert.kind == "exact":
        return cert.bound
    if cert.kind == "factorization":
        a, y, b = d["a"], d["y"], d["b"]
        if np.max(np.abs(a @ y @ b - xs)) > 1e-9 * max(np.abs(xs).max(), 1e-300):
            raise DomainError("factorization does not reproduce the tuple")
        if q == INF:
            ynorm = max(schatten_norm(yi, INF) for yi in y)
        else:
            ynorm = lp_of_values([schatten_norm(yi, q) for yi in y], q)
        r2 = 2 * ExponentTriple(p, q).r
        return schatten_norm(a, r2) * ynorm * schatten_norm(b, r2)
    if cert.kind == "witness":
        s2 = 2 * ExponentTriple(p, q).s
        scale = schatten_norm(d["alpha"], s2) * schatten_norm(d["beta"], s2)
        vals = [schatten_norm(d["alpha"] @ x @ d["beta"], q) for x in xs]
        return lp_of_values(vals, q) / max(scale, 1.0)
    if cert.kind == "dual_witness":
        f, _, _, _ = _l1_dual_ratio(xs, d["u"], d["v"], conjugate_exponent(p))
        return max(f, 0.0)
    if cert.kind == "linearization":
        P, Q = d["P"], d["Q"]
        if "sigma" in d:
            sigma = d["sigma"]
            F, gP, gQ = trace_power_objective(xs, _eigh(P), _eigh(Q), 1.0 / q, 0.5 / q, 0.5 * q)
            tangent = F + sum(_dual_of_positive_part(g, sigma) - float(np.real(np.vdot(g, X)))
                              for g, X in ((gP, P), (gQ, Q)))
            return max(tangent, F) ** (1.0 / q)
        tau = d["tau"]
        qc = conjugate_exponent(q)
        F, gP, gQ = trace_power_objective(xs, _eigh(P), _eigh(Q), -1.0 / qc, -0.5 / qc, 0.5 * q)
        tangent = F + sum(-_dual_of_positive_part(-g, tau) - float(np.real(np.vdot(g, X)))
                          for g, X in ((gP, P), (gQ, Q)))
        return max(tangent, 0.0) ** (1.0 / q)
    raise DomainError(f"unknown certificate kind {cert.kind!r}")
