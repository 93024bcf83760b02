"""Dense complex linear algebra primitives.

Everything here works on plain :class:`numpy.ndarray` objects of complex
dtype.  Positive semidefinite operands are wrapped in :class:`PsdMatrix`,
which keeps the eigendecomposition computed at validation time so that
fractional powers do not pay for it twice.

``math.inf`` is the distinguished value for the exponent infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError

INF = math.inf

HERMITIAN_RTOL = 1e-12
PSD_CLIP_RTOL = 1e-12


def as_matrix(m) -> np.ndarray:
    """Return `m` as a finite 2-d complex array."""
    if isinstance(m, PsdMatrix):
        return m.entries
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise DomainError(f"expected a nonempty 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    return a


def as_square(m) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    return a


def is_hermitian(m, rtol: float = HERMITIAN_RTOL) -> bool:
    a = as_square(m)
    scale = max(np.abs(a).max(), 1e-300)
    return bool(np.abs(a - a.conj().T).max() <= rtol * scale)


def hermitian_eig(m):
    """Eigendecomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues sorted nonincreasing.
    basis : ndarray
        Unitary matrix whose columns are the matching eigenvectors, so that
        ``m = basis @ diag(eigenvalues) @ basis.conj().T``.
    """
    a = as_square(m)
    if not is_hermitian(a):
        raise DomainError("hermitian_eig requires a Hermitian matrix")
    a = 0.5 * (a + a.conj().T)
    try:
        w, u = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver did not converge on a {a.shape[0]}x{a.shape[0]} matrix") from exc
    return w[::-1].copy(), u[:, ::-1].copy()


def singular_values(m) -> np.ndarray:
    """Singular value profile, sorted nonincreasing."""
    a = as_matrix(m)
    try:
        s = np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge on a {a.shape[0]}x{a.shape[1]} matrix") from exc
    return s


def lp_of_values(values, p: float) -> float:
    """``(sum |v|^p)^(1/p)`` with overflow-safe scaling; max for p = inf."""
    v = np.abs(np.asarray(values, dtype=float)).ravel()
    if p <= 0:
        raise DomainError(f"exponent must be positive, got {p}")
    if v.size == 0:
        return 0.0
    top = v.max()
    if top == 0.0:
        return 0.0
    if p == INF:
        return float(top)
    return float(top * np.sum((v / top) ** p) ** (1.0 / p))


def schatten_norm(m, p: float) -> float:
    """Schatten p-(quasi-)norm: the l_p norm of the singular values.

    For ``p < 1`` this is the quasi-norm, computed directly on the
    singular values.
    """
    if not p > 0:
        raise DomainError(f"Schatten exponent must be positive, got {p}")
    if isinstance(m, PsdMatrix):
        return lp_of_values(m.eigenvalues, p)
    return lp_of_values(singular_values(m), p)


@dataclass(frozen=True, eq=False)
class PsdMatrix:
    """A Hermitian positive semidefinite matrix with cached spectrum.

    Construct through :func:`as_psd`; eigenvalues below
    ``1e-12 * spectral radius`` in magnitude are clipped to zero.
    """

    entries: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    basis: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def _from_spectrum(w: np.ndarray, u: np.ndarray) -> PsdMatrix:
    entries = (u * w) @ u.conj().T
    entries = 0.5 * (entries + entries.conj().T)
    return PsdMatrix(entries, w, u)


def as_psd(m) -> PsdMatrix:
    """Validate `m` as positive semidefinite and clip negative dust."""
    if isinstance(m, PsdMatrix):
        return m
    w, u = hermitian_eig(m)
    radius = max(abs(w[0]), abs(w[-1]))
    thresh = PSD_CLIP_RTOL * radius
    if w[-1] < -thresh:
        raise DomainError(f"matrix is not positive semidefinite (smallest eigenvalue {w[-1]:.3e})")
    w = np.where(w < thresh, 0.0, w)
    return _from_spectrum(w, u)


def psd_power(m, alpha: float) -> PsdMatrix:
    """Fractional power ``m**alpha`` of a PSD matrix, same eigenbasis."""
    if not alpha > 0:
        raise DomainError(f"power must be positive, got {alpha}")
    a = as_psd(m)
    w = a.eigenvalues ** alpha
    return _from_spectrum(w, a.basis)


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def random_psd(seed: int, dim: int) -> PsdMatrix:
    """``g* g`` for a standard complex Gaussian ``dim x dim`` matrix `g`."""
    if dim < 1:
        raise DomainError("dimension must be positive")
    rng = np.random.default_rng(seed)
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    return as_psd(g.conj().T @ g)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def decreasing_rearrangement(a) -> np.ndarray:
    """Absolute values sorted nonincreasing."""
    v = np.abs(np.asarray(a, dtype=float).ravel())
    return -np.sort(-v)


def conjugate_exponent(p: float) -> float:
    if p < 1:
        raise DomainError(f"conjugate exponent needs p >= 1, got {p}")
    if p == 1:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


def _recip(p: float) -> float:
    return 0.0 if p == INF else 1.0 / p


def _from_recip(x: float) -> float:
    return INF if x == 0 else 1.0 / x


@dataclass(frozen=True)
class ExponentTriple:
    """Validated exponent pack for the mixed-norm formulas.

    ``r`` is set when ``p <= q`` (``1/r = 1/p - 1/q``), ``s`` when
    ``p >= q`` (``1/s = 1/q - 1/p``); ``r_pq`` always
    (``1/r_pq = 1/(2p) + 1/(2q)``).
    """

    p: float
    q: float
    theta: float | None = None
    r: float | None = field(init=False)
    s: float | None = field(init=False)
    r_pq: float = field(init=False)

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        if not (p > 0):
            raise DomainError(f"p must lie in (0, inf], got {p}")
        if not (q > 0):
            raise DomainError(f"q must lie in (0, inf], got {q}")
        if self.theta is not None and not (0 < self.theta < 1):
            raise DomainError(f"theta must lie in (0, 1), got {self.theta}")
        ip, iq = _recip(p), _recip(q)
        object.__setattr__(self, "r", _from_recip(ip - iq) if p <= q else None)
        object.__setattr__(self, "s", _from_recip(iq - ip) if p >= q else None)
        object.__setattr__(self, "r_pq", _from_recip(0.5 * ip + 0.5 * iq))

    def mixed_norm_domain(self) -> "ExponentTriple":
        """Raise unless both exponents lie in [1, inf]."""
        if self.p < 1 or self.q < 1:
            raise DomainError(f"mixed norms need 1 <= p, q <= inf, got p={self.p}, q={self.q}")
        return self


def matrix_to_json(m) -> dict:
    a = as_square(m)
    return {"dim": a.shape[0], "re": a.real.ravel().tolist(), "im": a.imag.ravel().tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        n = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros(n * n)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed matrix object: {exc}") from exc
    if n < 1 or re.size != n * n or im.size != n * n:
        raise DomainError(f"matrix object of dim {n} needs {n * n} entries per part")
    return as_matrix((re + 1j * im).reshape(n, n))


def power_divided_differences(w: np.ndarray, e: float) -> np.ndarray:
    """First divided differences of ``t -> t**e`` on positive nodes `w`.

    Entry ``(j, k)`` is ``(w_j**e - w_k**e) / (w_j - w_k)``, with the
    derivative on (near-)coincident nodes.  Evaluated through
    ``expm1`` of the log ratio, which stays accurate when nodes cluster.
    """
    wj = w[:, None]
    wk = w[None, :]
    u = np.log(wj) - np.log(wk)
    small = np.abs(u) < 1e-10
    safe_u = np.where(small, 1.0, u)
    ratio = np.where(small, e * (1.0 + 0.5 * (e - 1.0) * u), np.expm1(e * safe_u) / np.expm1(safe_u))
    return wk ** (e - 1.0) * ratio


def frechet_power(w: np.ndarray, u: np.ndarray, e: float, direction: np.ndarray) -> np.ndarray:
    """Frechet derivative of ``S -> S**e`` at ``S = u diag(w) u*``, applied to a Hermitian direction.

    The map is self-adjoint for the trace pairing, so this also turns a
    gradient with respect to ``S**e`` into a gradient with respect to ``S``.
    """
    gamma = power_divided_differences(w, e)
    inner = u.conj().T @ direction @ u
    return u @ (gamma * inner) @ u.conj().T
