"""Result types: quotient approximants and their certificates."""

from dataclasses import dataclass, field, replace

import numpy as np

from ._linalg import adjoint
from .blaschke import quotient_boundary_eval
from .potapov import ConjugatedDiagonalInner, commute_on, evaluate, matrix_inner_multiply
from .unimodular import ArcSet


@dataclass(frozen=True)
class Certificate:
    """Sampled sup-norm bound with explicit Lipschitz slack.

    ``bound`` dominates the pointwise error everywhere outside
    ``exceptional``; it is rigorous up to floating-point rounding of the
    evaluations (about 1e-12 here).
    """

    grid_h: float
    lipschitz: float
    grid_max: float
    bound: float
    epsilon: float
    delta: float
    exceptional: ArcSet
    exceptional_measure: float
    passed: bool
    config_hash: str
    version: str
    grid_points: int = 0
    warnings: tuple = ()

    def with_bound(self, bound):
        return replace(self, bound=float(bound))

    def to_json(self):
        return {
            "grid_h": self.grid_h,
            "lipschitz": self.lipschitz,
            "grid_max": self.grid_max,
            "bound": self.bound,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "exceptional": self.exceptional.to_json(),
            "pass": self.passed,
            "config_hash": self.config_hash,
            "version": self.version,
            "exceptional_measure": self.exceptional_measure,
            "grid_points": self.grid_points,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_json(cls, d):
        return cls(
            grid_h=float(d["grid_h"]),
            lipschitz=float(d["lipschitz"]),
            grid_max=float(d["grid_max"]),
            bound=float(d["bound"]),
            epsilon=float(d["epsilon"]),
            delta=float(d["delta"]),
            exceptional=ArcSet((a["start"], a["end"]) for a in d["exceptional"]),
            exceptional_measure=float(d.get("exceptional_measure", 0.0)),
            passed=bool(d["pass"]),
            config_hash=str(d["config_hash"]),
            version=str(d["version"]),
            grid_points=int(d.get("grid_points", 0)),
            warnings=tuple(d.get("warnings", ())),
        )


@dataclass(frozen=True, eq=False)
class QuotientApproximant:
    """Scalar quotient ``numerator / denominator`` of finite Blaschke products."""

    numerator: object
    denominator: object
    exceptional: ArcSet = field(default_factory=ArcSet)
    certified_error: float = float("inf")
    certificate: Certificate | None = None
    diagnostics: dict = field(default_factory=dict)

    dimension = 1

    @property
    def degrees(self):
        return (self.numerator.degree, self.denominator.degree)

    def boundary_values(self, theta):
        return quotient_boundary_eval(self.numerator, self.denominator, theta)

    def certified(self, certificate):
        return replace(self, certificate=certificate, certified_error=certificate.bound)


@dataclass(frozen=True, eq=False)
class MatrixQuotient:
    """``Phi Psi^*`` for conjugated-diagonal inner functions sharing one V."""

    phi: ConjugatedDiagonalInner
    psi: ConjugatedDiagonalInner
    exceptional: ArcSet = field(default_factory=ArcSet)
    certified_error: float = float("inf")
    certificate: Certificate | None = None
    channels: tuple = ()

    @property
    def dimension(self):
        return self.phi.dimension

    @property
    def degrees(self):
        return [(a.degree, b.degree) for a, b in zip(self.phi.diagonal, self.psi.diagonal)]

    def channel_pairs(self):
        return list(zip(self.phi.diagonal, self.psi.diagonal))

    def boundary_values(self, theta):
        z = np.exp(1j * np.asarray(theta, dtype=float))
        return evaluate(self.phi, z) @ adjoint(evaluate(self.psi, z))

    def certified(self, certificate):
        return replace(self, certificate=certificate, certified_error=certificate.bound)


@dataclass(frozen=True, eq=False)
class QuotientChain:
    """Ordered pointwise product ``prod_i Phi_i Psi_i^*``."""

    quotients: tuple
    exceptional: ArcSet = field(default_factory=ArcSet)
    certified_error: float = float("inf")
    certificate: Certificate | None = None
    quantized: object = None
    quantization_budget: float = 0.0

    @property
    def dimension(self):
        return self.quotients[0].dimension

    @property
    def degrees(self):
        return [q.degrees for q in self.quotients]

    @property
    def total_bound(self):
        return 2.0 * self.quantization_budget + self.certified_error

    def boundary_values(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = None
        for q in self.quotients:
            v = q.boundary_values(theta)
            out = v if out is None else out @ v
        return out

    def component_errors(self):
        return [q.certified_error for q in self.quotients]

    def merged(self, theta=None, tol=1e-10):
        """Single pair (Phi, Psi) with Phi Psi^* equal to the chain, or None.

        Only attempted when every inner part commutes with every other on
        the sample grid; then prod Phi_i Psi_i^* = (prod Phi_i)(prod Psi_i)^*.
        """
        parts = [p for q in self.quotients for p in (q.phi, q.psi)]
        if theta is None:
            theta = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
        if not commute_on(parts, np.exp(1j * np.asarray(theta)), tol):
            return None
        phi, psi = self.quotients[0].phi, self.quotients[0].psi
        for q in self.quotients[1:]:
            phi = matrix_inner_multiply(phi, q.phi)
            psi = matrix_inner_multiply(psi, q.psi)
        return phi, psi

    def certified(self, certificate):
        return replace(self, certificate=certificate, certified_error=certificate.bound)


@dataclass(frozen=True, eq=False)
class BoundedApproximation:
    """``sum_k coefficients[k] * chains[k]`` approximating a bounded step function."""

    coefficients: tuple
    chains: tuple
    scale: float = 1.0
    exceptional: ArcSet = field(default_factory=ArcSet)
    certified_error: float = float("inf")
    certificate: Certificate | None = None

    @property
    def dimension(self):
        return self.chains[0].dimension

    @property
    def degrees(self):
        return [c.degrees for c in self.chains]

    def boundary_values(self, theta):
        out = 0.0
        for c, chain in zip(self.coefficients, self.chains):
            out = out + c * chain.boundary_values(theta)
        return out

    def certified(self, certificate):
        return replace(self, certificate=certificate, certified_error=certificate.bound)
