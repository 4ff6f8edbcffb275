"""Finite scalar Blaschke products on the closed unit disc.

Evaluation inside the disc and on the circle, the continuous lift of the
boundary argument, its derivative (a sum of Poisson kernels) and the
Lipschitz data the certifier needs.
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import TWO_PI
from .errors import DomainError

DEFAULT_MARGIN = 1e-6
UNIMODULAR_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FiniteBlaschke:
    """``constant * prod_k b_{zeros[k]}(z)``.

    Zeros are repeated according to multiplicity and must satisfy
    ``|alpha| <= 1 - margin``.
    """

    zeros: np.ndarray
    constant: complex = 1.0
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        zeros = np.atleast_1d(np.asarray(self.zeros, dtype=complex)).ravel().copy()
        if not np.all(np.isfinite(zeros)):
            raise DomainError("zeros must be finite")
        if zeros.size and np.max(np.abs(zeros)) > 1.0 - self.margin:
            raise DomainError(
                f"zero modulus {np.max(np.abs(zeros)):.17g} exceeds 1 - margin "
                f"({1.0 - self.margin:.17g})"
            )
        zeros.setflags(write=False)
        c = complex(self.constant)
        if abs(abs(c) - 1.0) > UNIMODULAR_TOL:
            raise DomainError(f"constant {c} is not unimodular")
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "constant", c)

    @classmethod
    def unit(cls, constant=1.0):
        return cls(np.zeros(0, dtype=complex), constant)

    @property
    def degree(self):
        return int(self.zeros.size)

    def __call__(self, z):
        return product_eval(self, z)

    def __mul__(self, other):
        if not isinstance(other, FiniteBlaschke):
            return NotImplemented
        return FiniteBlaschke(
            np.concatenate([self.zeros, other.zeros]),
            self.constant * other.constant,
            min(self.margin, other.margin),
        )

    def with_constant(self, constant):
        return FiniteBlaschke(self.zeros, constant, self.margin)

    def same_as(self, other):
        return (
            isinstance(other, FiniteBlaschke)
            and self.constant == other.constant
            and np.array_equal(self.zeros, other.zeros)
        )

    def __repr__(self):
        return f"FiniteBlaschke(degree={self.degree}, constant={self.constant:.6g})"


@dataclass(frozen=True)
class ArgumentTrace:
    """Continuous lift of a boundary argument sampled on a grid.

    ``increase`` is ``F(grid[0] + 2*pi) - F(grid[0])``.
    """

    grid: np.ndarray
    values: np.ndarray
    increase: float

    @property
    def winding(self):
        return int(round(self.increase / TWO_PI))


def factor_eval(alpha, z):
    """Blaschke factor ``(z - alpha) / (1 - conj(alpha) z)``."""
    alpha = complex(alpha)
    if not abs(alpha) < 1.0:
        raise DomainError(f"|alpha| = {abs(alpha)} is not inside the unit disc")
    z = np.asarray(z, dtype=complex)
    return (z - alpha) / (1.0 - np.conj(alpha) * z)


def product_eval(B, z):
    z = np.asarray(z, dtype=complex)
    out = np.full(z.shape, B.constant, dtype=complex)
    for a in B.zeros:
        out *= (z - a) / (1.0 - np.conj(a) * z)
    return out if out.ndim else complex(out)


def _polar(zeros):
    zeros = np.asarray(zeros, dtype=complex)
    return np.abs(zeros), np.angle(zeros)


def poisson_kernel(r, phi, theta):
    """(1 - r^2) / |e^{i theta} - r e^{i phi}|^2, written without cancellation."""
    s = np.sin(0.5 * (np.asarray(theta) - phi))
    return (1.0 - r) * (1.0 + r) / ((1.0 - r) ** 2 + 4.0 * r * s * s)


def boundary_arg_derivative(B, theta):
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape)
    for r, phi in zip(*_polar(B.zeros)):
        out += poisson_kernel(r, phi, theta)
    return out if out.ndim else float(out)


def factor_lift(r, phi, theta):
    """Continuous lift of arg b_alpha(e^{i theta}) for alpha = r e^{i phi}.

    b_alpha(e^{it}) = e^{it} w / conj(w) with w = 1 - r e^{i(phi - t)}; Re w > 0,
    so 2 arg w never crosses a branch cut.
    """
    t = theta - phi
    s = np.sin(0.5 * t)
    return theta + 2.0 * np.arctan2(r * np.sin(t), (1.0 - r) + 2.0 * r * s * s)


def zeros_lift(zeros, theta):
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape)
    for r, phi in zip(*_polar(zeros)):
        out += factor_lift(r, phi, theta)
    return out


def argument_lift(B, theta):
    """Lift of arg B(e^{i theta}) valid for any real theta (not wrapped)."""
    return np.angle(B.constant) + zeros_lift(B.zeros, theta)


def boundary_argument(B, grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("grid must be a non-empty 1-d array")
    if np.any(np.diff(grid) <= 0) or grid[0] < 0 or grid[-1] >= TWO_PI:
        raise DomainError("grid must be strictly increasing in [0, 2*pi)")
    values = argument_lift(B, grid)
    ends = argument_lift(B, np.array([grid[0], grid[0] + TWO_PI]))
    return ArgumentTrace(grid, values, float(ends[1] - ends[0]))


def lipschitz_bound(B):
    """Sum of Poisson-kernel peaks (1 + r)/(1 - r); bounds the argument derivative."""
    r = np.abs(B.zeros)
    return float(np.sum((1.0 + r) / (1.0 - r)))


def quotient_boundary_eval(num, den, theta):
    z = np.exp(1j * np.asarray(theta, dtype=float))
    return product_eval(num, z) * np.conj(product_eval(den, z))


def kernel_sum_bounds(zeros, a, b):
    """Lower and upper bounds of sum_k P_{alpha_k} over each interval [a_i, b_i].

    Each kernel is a decreasing function of the circular distance to its
    zero's angle, so its extremes over an interval sit at the nearest and
    farthest points.  Intervals must be shorter than pi.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = np.zeros(a.shape)
    hi = np.zeros(a.shape)
    width = b - a
    for r, phi in zip(*_polar(zeros)):
        # offset of phi from the interval start, in [0, 2*pi)
        off = np.mod(phi - a, TWO_PI)
        inside = off <= width
        da = np.minimum(off, TWO_PI - off)
        ob = np.mod(phi - b, TWO_PI)
        db = np.minimum(ob, TWO_PI - ob)
        near = np.where(inside, 0.0, np.minimum(da, db))
        anti = np.mod(phi + np.pi - a, TWO_PI) <= width
        far = np.where(anti, np.pi, np.maximum(da, db))
        hi += poisson_kernel(r, 0.0, near)
        lo += poisson_kernel(r, 0.0, far)
    return lo, hi
