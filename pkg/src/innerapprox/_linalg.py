"""Small dense linear-algebra helpers used across modules."""

import numpy as np
import scipy.stats

TWO_PI = 2.0 * np.pi


def as_matrix(a):
    m = np.asarray(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def adjoint(a):
    return np.swapaxes(np.asarray(a).conj(), -1, -2)


def op_norm(a):
    """Largest singular value; batched over leading axes."""
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2:
        return np.abs(a)
    if a.shape[-1] == 1 and a.shape[-2] == 1:
        return np.abs(a[..., 0, 0])
    return np.linalg.svd(a, compute_uv=False)[..., 0]


def unitary_defect(u):
    """max(||U*U - I||, ||UU* - I||) in operator norm."""
    u = np.asarray(u, dtype=complex)
    eye = np.eye(u.shape[-1])
    return np.maximum(op_norm(adjoint(u) @ u - eye), op_norm(u @ adjoint(u) - eye))


def is_unitary(u, tol=1e-10):
    return bool(np.all(unitary_defect(u) <= tol))


def wrap_angle(x):
    """Map angles to (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, TWO_PI) - np.pi
    return np.where(y == -np.pi, np.pi, y)


def canonical_angle(x):
    """Map angles to [0, 2*pi)."""
    y = np.mod(np.asarray(x, dtype=float), TWO_PI)
    return np.where(y >= TWO_PI, 0.0, y)


def orthonormal_span(columns, rank, tol=1e-8):
    """Gram-Schmidt over `columns` in index order, keeping the first `rank`
    independent directions.  Deterministic basis choice for eigenspaces and
    kernels."""
    columns = np.asarray(columns, dtype=complex)
    basis = []
    for j in range(columns.shape[1]):
        v = columns[:, j].copy()
        for _ in range(2):
            for q in basis:
                v -= q * (q.conj() @ v)
        nv = np.linalg.norm(v)
        if nv > tol:
            basis.append(v / nv)
        if len(basis) == rank:
            break
    if len(basis) < rank:
        raise ValueError("could not extract the requested number of directions")
    return np.array(basis).T.reshape(columns.shape[0], rank)


def random_unitary(n, rng=None):
    rng = np.random.default_rng(rng)
    if n == 1:
        return np.array([[np.exp(1j * rng.uniform(0, TWO_PI))]])
    return scipy.stats.unitary_group.rvs(n, random_state=rng)
