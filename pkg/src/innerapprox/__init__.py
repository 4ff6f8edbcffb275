"""Certified quotient-of-inner-function approximation of unimodular step
functions on the unit circle, scalar and matrix-valued."""

__version__ = "0.1.0"

from .blaschke import FiniteBlaschke  # noqa: E402
from .unimodular import ArcPartition, ArcSet, StepFunction, StepUnimodular  # noqa: E402
from .potapov import (  # noqa: E402
    ConjugatedDiagonalInner,
    InnerProduct,
    PotapovFactor,
    PotapovProduct,
)
from .approximants import (  # noqa: E402
    BoundedApproximation,
    Certificate,
    MatrixQuotient,
    QuotientApproximant,
    QuotientChain,
)
from .synthesis import ScalarTarget, SynthesisConfig, synthesize_step_scalar, synthesize_two_valued  # noqa: E402
from .pipeline import (  # noqa: E402
    approximate_bounded,
    approximate_sampled,
    approximate_step,
    approximate_two_valued,
    decompose_contraction,
    unitary_eig,
)
from .certify import certify_quotient, independent_recheck  # noqa: E402

__all__ = [
    "ArcPartition",
    "ArcSet",
    "BoundedApproximation",
    "Certificate",
    "ConjugatedDiagonalInner",
    "FiniteBlaschke",
    "InnerProduct",
    "MatrixQuotient",
    "PotapovFactor",
    "PotapovProduct",
    "QuotientApproximant",
    "QuotientChain",
    "ScalarTarget",
    "StepFunction",
    "StepUnimodular",
    "SynthesisConfig",
    "approximate_bounded",
    "approximate_sampled",
    "approximate_step",
    "approximate_two_valued",
    "certify_quotient",
    "decompose_contraction",
    "independent_recheck",
    "synthesize_step_scalar",
    "synthesize_two_valued",
    "unitary_eig",
]
