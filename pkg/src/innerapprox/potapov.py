"""Matrix-valued rational inner functions.

Three representations share one evaluation interface:

* ``PotapovProduct``: ``U * prod_m (b_{alpha_m}(z) P_m + (I - P_m))``;
* ``ConjugatedDiagonalInner``: ``V^* diag(B_1(z), ..., B_N(z)) V``;
* ``InnerProduct``: pointwise product of other inner functions.
"""

from dataclasses import dataclass, field

import numpy as np

from ._linalg import TWO_PI, adjoint, as_matrix, op_norm, unitary_defect, wrap_angle
from .blaschke import FiniteBlaschke, product_eval
from .errors import DimensionMismatch, DomainError, ResolutionError

UNITARY_TOL = 1e-10
PROJECTION_TOL = 1e-10
_REPAIRABLE = 1e-6


def _clean_projection(P):
    """Hermitian projection, re-projected when drift exceeds PROJECTION_TOL."""
    P = as_matrix(P)
    drift = max(op_norm(P @ P - P), op_norm(P - adjoint(P)))
    if drift <= PROJECTION_TOL:
        return P
    if drift > _REPAIRABLE:
        raise DomainError(f"matrix is not a projection (defect {drift:.3g})")
    H = 0.5 * (P + adjoint(P))
    w, Q = np.linalg.eigh(H)
    keep = Q[:, w > 0.5]
    return keep @ adjoint(keep)


@dataclass(frozen=True, eq=False)
class PotapovFactor:
    alpha: complex
    P: np.ndarray

    def __post_init__(self):
        alpha = complex(self.alpha)
        if not abs(alpha) < 1.0:
            raise DomainError(f"|alpha| = {abs(alpha)} is not inside the unit disc")
        P = _clean_projection(self.P)
        P.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "P", P)

    @property
    def rank(self):
        return int(round(np.trace(self.P).real))


@dataclass(frozen=True, eq=False)
class PotapovProduct:
    U: np.ndarray
    factors: tuple = ()

    def __post_init__(self):
        U = as_matrix(self.U).copy()
        if unitary_defect(U) > UNITARY_TOL:
            raise DomainError("constant of a Potapov product must be unitary")
        U.setflags(write=False)
        factors = tuple(self.factors)
        for f in factors:
            if f.P.shape != U.shape:
                raise DimensionMismatch("projection size differs from the constant")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "factors", factors)

    @property
    def dimension(self):
        return int(self.U.shape[0])

    def __call__(self, z):
        return potapov_eval(self, z)


@dataclass(frozen=True, eq=False)
class ConjugatedDiagonalInner:
    V: np.ndarray
    diagonal: tuple

    def __post_init__(self):
        V = as_matrix(self.V).copy()
        if unitary_defect(V) > UNITARY_TOL:
            raise DomainError("conjugating matrix must be unitary")
        diagonal = tuple(self.diagonal)
        if len(diagonal) != V.shape[0]:
            raise DimensionMismatch(
                f"{len(diagonal)} diagonal entries for a {V.shape[0]}x{V.shape[0]} matrix"
            )
        V.setflags(write=False)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "diagonal", diagonal)

    @property
    def dimension(self):
        return int(self.V.shape[0])

    @property
    def degrees(self):
        return [b.degree for b in self.diagonal]

    @classmethod
    def constant(cls, U):
        """Constant unitary U as V^* diag(lambda) V."""
        from .pipeline import unitary_eig

        sd = unitary_eig(as_matrix(U))
        return cls(adjoint(sd.V), tuple(FiniteBlaschke.unit(l) for l in sd.eigenvalues))

    def __call__(self, z):
        return conjugated_eval(self, z)


@dataclass(frozen=True, eq=False)
class InnerProduct:
    parts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise DomainError("an explicit product needs at least one part")
        dims = {p.dimension for p in parts}
        if len(dims) != 1:
            raise DimensionMismatch(f"parts of different dimensions {sorted(dims)}")
        object.__setattr__(self, "parts", parts)

    @property
    def dimension(self):
        return self.parts[0].dimension

    def __call__(self, z):
        return evaluate(self, z)


MatrixInner = PotapovProduct | ConjugatedDiagonalInner | InnerProduct


def _batched_eye(shape, n):
    return np.broadcast_to(np.eye(n, dtype=complex), shape + (n, n)).copy()


def potapov_eval(phi, z):
    z = np.asarray(z, dtype=complex)
    n = phi.dimension
    out = _batched_eye(z.shape, n)
    eye = np.eye(n)
    for f in phi.factors:
        b = (z - f.alpha) / (1.0 - np.conj(f.alpha) * z)
        out = out @ (b[..., None, None] * f.P + (eye - f.P))
    out = phi.U @ out
    return out


def conjugated_eval(phi, z):
    z = np.asarray(z, dtype=complex)
    d = np.stack([np.broadcast_to(product_eval(b, z), z.shape) for b in phi.diagonal], axis=-1)
    V = phi.V
    # V^* diag(d) V
    return np.einsum("ij,...j,jk->...ik", adjoint(V), d, V)


def evaluate(phi, z):
    if isinstance(phi, PotapovProduct):
        return potapov_eval(phi, z)
    if isinstance(phi, ConjugatedDiagonalInner):
        return conjugated_eval(phi, z)
    if isinstance(phi, InnerProduct):
        out = None
        for p in phi.parts:
            v = evaluate(p, z)
            out = v if out is None else out @ v
        return out
    raise TypeError(f"not a matrix inner function: {type(phi).__name__}")


def potapov_from_unitary_factors(factors, dimension):
    """Normalize ``prod_m U1_m diag(b_{alpha_m} I_r, I_{N-r}) U2_m``.

    ``factors`` holds ``(alpha, U1, U2, r)`` tuples.  Each factor equals
    ``W_m (b Q_m + I - Q_m)`` with ``W_m = U1_m U2_m`` and
    ``Q_m = U2_m^* E_r U2_m``; the unitaries are then moved to the left by
    conjugating the projections already collected.
    """
    U = np.eye(dimension, dtype=complex)
    projections = []
    alphas = []
    for alpha, U1, U2, rank in factors:
        U1, U2 = as_matrix(U1), as_matrix(U2)
        if U1.shape[0] != dimension or U2.shape[0] != dimension:
            raise DimensionMismatch("factor unitaries have the wrong size")
        E = np.zeros((dimension, dimension), dtype=complex)
        E[:rank, :rank] = np.eye(rank)
        W = U1 @ U2
        projections = [adjoint(W) @ P @ W for P in projections]
        projections.append(adjoint(U2) @ E @ U2)
        alphas.append(alpha)
        U = U @ W
    return PotapovProduct(U, tuple(PotapovFactor(a, P) for a, P in zip(alphas, projections)))


def to_potapov_form(phi):
    """Expand a conjugated-diagonal inner function into Blaschke-Potapov form.

    Diagonal constants go into the unitary constant ``V^* diag(c) V``; every
    diagonal zero becomes a rank-one factor with projection ``V^* e_i e_i^* V``.
    Factors are listed entry-major, zero order within an entry.
    """
    V = phi.V
    Vh = adjoint(V)
    U = Vh @ np.diag([b.constant for b in phi.diagonal]) @ V
    factors = []
    for i, b in enumerate(phi.diagonal):
        if b.degree == 0:
            continue
        v = Vh[:, i]
        P = np.outer(v, v.conj())
        for a in b.zeros:
            factors.append(PotapovFactor(a, P))
    return PotapovProduct(U, tuple(factors))


def matrix_inner_multiply(phi1, phi2):
    if phi1.dimension != phi2.dimension:
        raise DimensionMismatch(
            f"cannot multiply inner functions of sizes {phi1.dimension} and {phi2.dimension}"
        )
    parts = []
    for p in (phi1, phi2):
        parts.extend(p.parts if isinstance(p, InnerProduct) else [p])
    return InnerProduct(tuple(parts))


def determinant_winding(phi, grid, max_step=np.pi / 2):
    """Winding number of theta -> det phi(e^{i theta}) over the circle.

    Phase increments are accumulated between consecutive grid points,
    including the closing step.  Increments larger than ``max_step`` in
    magnitude mean the grid cannot resolve the phase.
    """
    grid = np.asarray(grid, dtype=float)
    ext = np.append(grid, grid[0] + TWO_PI)
    det = np.linalg.det(evaluate(phi, np.exp(1j * ext)))
    steps = wrap_angle(np.diff(np.angle(det)))
    if np.max(np.abs(steps)) >= max_step:
        raise ResolutionError(
            f"determinant phase jumps by {np.max(np.abs(steps)):.3g} rad between grid points"
        )
    return int(round(np.sum(steps) / TWO_PI))


@dataclass(frozen=True)
class InnerReport:
    boundary_defect: float
    interior_excess: float
    tol: float

    @property
    def passed(self):
        return self.boundary_defect <= self.tol and self.interior_excess <= self.tol


def check_inner(phi, boundary_grid, interior_samples, tol):
    if not tol > 0:
        raise DomainError("tol must be positive")
    vals = evaluate(phi, np.exp(1j * np.asarray(boundary_grid, dtype=float)))
    defect = float(np.max(unitary_defect(vals))) if vals.size else 0.0
    inner = np.asarray(interior_samples, dtype=complex)
    excess = 0.0
    if inner.size:
        excess = float(np.max(np.maximum(0.0, op_norm(evaluate(phi, inner)) - 1.0)))
    if not np.isfinite(defect):
        defect = np.inf
    return InnerReport(defect, excess, tol)


def commute_on(parts, z, tol=1e-10):
    """True when all pairs of inner functions commute at the sample points."""
    vals = [evaluate(p, z) for p in parts]
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            if np.max(op_norm(vals[i] @ vals[j] - vals[j] @ vals[i])) > tol:
                return False
    return True
