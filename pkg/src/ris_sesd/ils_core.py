"""Discrete phase-shift sub-problem.

Minimise ``theta^H B theta - 2 Re(b^H theta)`` over ``theta`` whose entries
lie on a uniform unit-modulus alphabet. The exact solver factors ``B`` (or
``B + alpha I`` when ``B`` is rank deficient) as ``R^H R`` and runs a
Schnorr-Euchner sphere decoder on ``||c - R theta||^2``. Because every
feasible ``theta`` has ``||theta||^2 = N``, the ``alpha`` shift moves all
feasible objectives by the same ``alpha * N`` and leaves the minimiser alone.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ris_sesd import _kernels
from ris_sesd.errors import CapacityError, ConfigError, NumericError, UsageError

__all__ = [
    "DEFAULT_ALPHA",
    "BRUTE_FORCE_LIMIT",
    "PhaseAlphabet",
    "QuadraticForm",
    "CholeskyFactor",
    "RisConfiguration",
    "SearchStats",
    "build_alphabet",
    "quadratic_objective",
    "vblast_order",
    "factorize",
    "sesd_solve",
    "brute_force_solve",
    "continuous_relaxation",
    "nearest_point_quantize",
]

DEFAULT_ALPHA = 0.01
PIVOT_RTOL = 1e-10
PINV_RTOL = 1e-10
BRUTE_FORCE_LIMIT = 2**20
ORDERINGS = ("natural", "vblast")
NEAREST_TIE_TOL = 1e-12


@dataclass(frozen=True)
class PhaseAlphabet:
    q: int
    phases: np.ndarray
    points: np.ndarray

    def __len__(self):
        return len(self.phases)


@dataclass(frozen=True)
class QuadraticForm:
    B: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.B, dtype=complex)
        b = np.asarray(self.b, dtype=complex).reshape(-1)
        if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] != b.shape[0]:
            raise UsageError(f"B must be N x N and b length N, got {B.shape} and {b.shape}")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "b", b)

    @property
    def N(self) -> int:
        return self.b.shape[0]

    def check(self, herm_tol: float = 1e-10, psd_tol: float = 1e-8) -> None:
        """Raise :class:`NumericError` if ``B`` is not Hermitian PSD."""
        scale = max(1.0, np.abs(self.B).max(initial=0.0))
        if np.abs(self.B - self.B.conj().T).max(initial=0.0) > herm_tol * scale:
            raise NumericError("B is not Hermitian")
        if self.N and np.linalg.eigvalsh(self.B).min() < -psd_tol * scale:
            raise NumericError("B is not positive semidefinite")


@dataclass(frozen=True)
class CholeskyFactor:
    """Triangular form of the sub-problem in the search order ``perm``.

    ``R^H R = (B + alpha_used I)[perm][:, perm]`` and ``R^H c = b[perm]``;
    with ``perm`` the identity this is the plain factorisation. For feasible
    ``theta``: ``quadratic_objective(theta) = ||c - R theta[perm]||^2 +
    constant_offset`` with ``constant_offset = -c^H c - alpha_used * N``.
    """

    R: np.ndarray
    c: np.ndarray
    alpha_used: float
    constant_offset: float
    form: QuadraticForm
    perm: np.ndarray | None = None

    def search_order(self) -> np.ndarray:
        return np.arange(self.form.N) if self.perm is None else self.perm


@dataclass
class SearchStats:
    nodes: int = 0
    leaves: int = 0


@dataclass(frozen=True)
class RisConfiguration:
    indices: np.ndarray
    theta: np.ndarray
    objective: float
    stats: SearchStats = field(default_factory=SearchStats, compare=False)

    @classmethod
    def from_indices(cls, indices, alphabet: PhaseAlphabet, form: QuadraticForm | None = None, stats=None):
        indices = np.asarray(indices, dtype=np.int64)
        theta = alphabet.points[indices]
        objective = quadratic_objective(form, theta) if form is not None else float("nan")
        return cls(indices=indices, theta=theta, objective=objective, stats=stats or SearchStats())

    def phases(self, alphabet: PhaseAlphabet) -> np.ndarray:
        return alphabet.phases[self.indices]


def build_alphabet(q: int) -> PhaseAlphabet:
    """Uniform ``2**q``-point phase set ``{m * pi / 2**(q-1)}``."""
    if not isinstance(q, (int, np.integer)) or not 1 <= q <= 8:
        raise ConfigError(f"q must be an integer in [1, 8], got {q!r}")
    m = np.arange(2**q)
    phases = m * np.pi / 2 ** (q - 1)
    points = np.exp(1j * phases)
    # exact axis points so |point| == 1 with no rounding
    quarter = 2**q // 4
    points[0], points[2 ** (q - 1)] = 1.0, -1.0
    if quarter:
        points[quarter], points[3 * quarter] = 1j, -1j
    return PhaseAlphabet(q=int(q), phases=phases, points=points)


def quadratic_objective(form: QuadraticForm, theta) -> float:
    theta = np.asarray(theta, dtype=complex)
    if theta.shape != (form.N,):
        raise UsageError(f"theta has shape {theta.shape}, expected ({form.N},)")
    lin = np.vdot(theta, form.b)
    val = np.vdot(theta, form.B @ theta) - lin - np.conj(lin)
    scale = max(1.0, abs(val.real))
    if abs(val.imag) > 1e-10 * scale:
        raise NumericError(f"objective has imaginary part {val.imag:.3e}; B not Hermitian?")
    return float(val.real)


def vblast_order(A: np.ndarray) -> np.ndarray:
    """Greedy layer order for a positive definite ``A``.

    The search starts at the last layer, so the order is filled from the
    back: each step takes the remaining variable with the largest
    conditional precision ``1 / inv(A)[j, j]``, then deflates the inverse.
    """
    N = A.shape[0]
    P = np.linalg.inv(A)
    remaining = list(range(N))
    tail = []
    while remaining:
        d = np.diag(P).real
        j = int(np.argmin(d))
        tail.append(remaining.pop(j))
        col = P[:, j]
        P = P - np.outer(col, P[j, :]) / P[j, j]
        P = np.delete(np.delete(P, j, axis=0), j, axis=1)
    return np.array(tail[::-1], dtype=np.int64)


def factorize(form: QuadraticForm, alpha: float = 0.0, fallback_alpha: float = DEFAULT_ALPHA,
              ordering: str = "vblast") -> CholeskyFactor:
    """Cholesky factor for the sphere decoder.

    ``alpha = 0`` means factor ``B`` itself when it is numerically positive
    definite (every squared pivot above ``1e-10 * trace(B) / N``), falling
    back to ``B + fallback_alpha * I`` otherwise. ``alpha > 0`` always
    regularises with that value.

    ``ordering`` is ``"natural"`` or ``"vblast"``; it changes the search
    cost only, never the minimiser's objective.
    """
    if alpha < 0:
        raise ConfigError("alpha must be >= 0")
    if ordering not in ORDERINGS:
        raise ConfigError(f"ordering must be one of {ORDERINGS}, got {ordering!r}")
    N = form.N
    B = 0.5 * (form.B + form.B.conj().T)
    R = None
    alpha_used = float(alpha)
    if alpha == 0:
        threshold = PIVOT_RTOL * max(np.trace(B).real, 0.0) / max(N, 1)
        try:
            L = np.linalg.cholesky(B)
            if threshold > 0 and np.min(np.diag(L).real ** 2) > threshold:
                R = L.conj().T
        except np.linalg.LinAlgError:
            pass
        if R is None:
            alpha_used = float(fallback_alpha)
            if alpha_used <= 0:
                raise NumericError("B is not positive definite and no regularisation allowed")
    A = B + alpha_used * np.eye(N)
    perm = None
    if ordering == "vblast" and N > 1:
        perm = vblast_order(A)
        A = A[np.ix_(perm, perm)]
        R = None
    if R is None:
        try:
            R = np.linalg.cholesky(A).conj().T
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"Cholesky failed after regularisation: {exc}") from exc
    b = form.b if perm is None else form.b[perm]
    c = scipy.linalg.solve_triangular(R, b, trans="C", lower=False)
    offset = -float(np.vdot(c, c).real) - alpha_used * N
    return CholeskyFactor(R=R, c=c, alpha_used=alpha_used, constant_offset=offset, form=form, perm=perm)


def sesd_solve(factor: CholeskyFactor, alphabet: PhaseAlphabet, incumbent=None, kernel=None) -> RisConfiguration:
    """Exact minimiser of ``||c - R theta||^2`` over the alphabet.

    The search radius starts at infinity, or at the metric of
    ``incumbent`` (alphabet indices of a known feasible point) when given;
    the incumbent is returned if nothing strictly better exists. The
    reported objective is evaluated on the un-regularised form.
    ``kernel`` overrides the search routine (benchmarks only).
    """
    if len(alphabet) == 0:
        raise UsageError("empty alphabet")
    N = factor.form.N
    R = np.ascontiguousarray(factor.R, dtype=np.complex128)
    if np.any(np.abs(np.diag(R)) == 0):
        raise UsageError("R has a zero diagonal entry; regularise first")
    c = np.ascontiguousarray(factor.c, dtype=np.complex128)
    points = np.ascontiguousarray(alphabet.points, dtype=np.complex128)
    order = factor.search_order()
    radius = np.inf
    best = np.zeros(N, dtype=np.int64)
    if incumbent is not None:
        best = np.asarray(incumbent, dtype=np.int64)[order].copy()
        radius = float(np.linalg.norm(c - R @ points[best]) ** 2)
        # slack so rounding in the incremental metric cannot lose the incumbent's equals
        radius += 1e-12 * max(1.0, radius)
    nodes = leaves = 0
    if N:
        search = kernel or _kernels.sesd_search
        found = np.zeros(N, dtype=np.int64)
        metric, nodes, leaves = search(R, c, points, found, radius)
        if leaves:
            best = found
    indices = np.empty(N, dtype=np.int64)
    indices[order] = best
    stats = SearchStats(nodes=int(nodes), leaves=int(leaves))
    config = RisConfiguration.from_indices(indices, alphabet, factor.form, stats)
    if incumbent is not None and leaves:
        # radius slack may admit a tie that is marginally worse on the true form
        keep = RisConfiguration.from_indices(incumbent, alphabet, factor.form, stats)
        if keep.objective <= config.objective:
            return keep
    return config


def brute_force_solve(form: QuadraticForm, alphabet: PhaseAlphabet, limit: int = BRUTE_FORCE_LIMIT,
                      chunk: int = 1 << 14) -> RisConfiguration:
    """Exhaustive search; ties resolve to the lexicographically smallest index vector."""
    P, N = len(alphabet), form.N
    if P == 0:
        raise UsageError("empty alphabet")
    if P**N > limit:
        raise CapacityError(f"{P}**{N} configurations exceed the brute-force limit {limit}")
    best_val, best_idx = np.inf, None
    it = itertools.product(range(P), repeat=N)
    total = P**N
    done = 0
    while done < total:
        block = np.array(list(itertools.islice(it, chunk)), dtype=np.int64).reshape(-1, N)
        done += block.shape[0]
        T = alphabet.points[block]
        quad = np.einsum("ti,ij,tj->t", T.conj(), form.B, T).real
        vals = quad - 2.0 * (T.conj() @ form.b).real
        j = int(np.argmin(vals))
        # strict improvement only, so earlier (lexicographically smaller) ties win
        if vals[j] < best_val:
            best_val, best_idx = vals[j], block[j]
    return RisConfiguration.from_indices(best_idx, alphabet, form, SearchStats(nodes=total, leaves=total))


def continuous_relaxation(form: QuadraticForm) -> np.ndarray:
    """``pinv(B) @ b`` from an eigendecomposition, dropping tiny eigenvalues."""
    B = 0.5 * (form.B + form.B.conj().T)
    lam, U = np.linalg.eigh(B)
    if lam.size == 0:
        return np.zeros(0, dtype=complex)
    cutoff = PINV_RTOL * np.abs(lam).max()
    keep = np.abs(lam) > cutoff
    coeff = U[:, keep].conj().T @ form.b
    return U[:, keep] @ (coeff / lam[keep])


def nearest_point_quantize(theta_hat, alphabet: PhaseAlphabet, form: QuadraticForm | None = None) -> RisConfiguration:
    """Map each entry's phase to the closest alphabet point independently.

    Zero entries count as phase 0; equidistant candidates go to the lower index.
    """
    theta_hat = np.asarray(theta_hat, dtype=complex).reshape(-1)
    unit = np.exp(1j * np.angle(theta_hat))
    dist = np.abs(unit[:, None] - alphabet.points[None, :])
    near = dist <= dist.min(axis=1, keepdims=True) + NEAREST_TIE_TOL
    indices = np.argmax(near, axis=1)
    return RisConfiguration.from_indices(indices, alphabet, form)
