"""Matrix pipeline: spectral channels, binary-factor chains, bounded targets."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._linalg import adjoint, as_matrix, canonical_angle, op_norm, orthonormal_span, unitary_defect
from .approximants import BoundedApproximation, MatrixQuotient, QuotientChain
from .blaschke import FiniteBlaschke
from .certify import certify_quotient
from .errors import BudgetExhausted, DomainError
from .potapov import ConjugatedDiagonalInner
from .unimodular import (
    ArcSet,
    StepFunction,
    StepUnimodular,
    binary_factorize,
    quantize_range,
    support_of_value,
)

log = logging.getLogger(__name__)

UNITARY_TOL = 1e-10
_CLUSTER_TOL = 1e-8
_TRIVIAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """``T = V diag(eigenvalues) V^*`` with eigenvalues sorted by angle in [0, 2 pi)."""

    V: np.ndarray
    eigenvalues: np.ndarray

    def reconstruct(self):
        return self.V @ np.diag(self.eigenvalues) @ adjoint(self.V)


def unitary_eig(T, tol=UNITARY_TOL):
    """Spectral decomposition of a unitary matrix.

    The complex Schur form of a normal matrix is diagonal, so the Schur
    vectors are eigenvectors.  Clusters of (numerically) equal eigenvalues
    are re-orthonormalized from the eigenspace projector's columns in index
    order, which makes the basis independent of LAPACK's internal choices.
    """
    T = as_matrix(T)
    if unitary_defect(T) > tol:
        raise DomainError(f"matrix is not unitary (defect {unitary_defect(T):.3g})")
    n = T.shape[0]
    S, Z = scipy.linalg.schur(T, output="complex")
    lam = np.diag(S).copy()
    lam = lam / np.abs(lam)
    ang = canonical_angle(np.angle(lam))
    # snap angles just below 2 pi to 0 so eigenvalue 1 sorts first
    ang = np.where(np.abs(ang - 2 * np.pi) < _CLUSTER_TOL, 0.0, ang)
    order = np.argsort(ang, kind="stable")
    lam, ang, Z = lam[order], ang[order], Z[:, order]
    V = np.empty((n, n), dtype=complex)
    i = 0
    while i < n:
        j = i + 1
        while j < n and abs(lam[j] - lam[i]) < _CLUSTER_TOL:
            j += 1
        block = Z[:, i:j]
        if j - i > 1:
            P = block @ adjoint(block)
            block = orthonormal_span(P, j - i)
            lam[i:j] = np.mean(lam[i:j]) / abs(np.mean(lam[i:j]))
        V[:, i:j] = block
        i = j
    return SpectralDecomposition(V, lam)


def error_budget(eps_total, weights):
    w = np.asarray(weights, dtype=float)
    if w.size == 0 or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
        raise DomainError("stage weights must be positive and sum to 1")
    out = eps_total * w
    out[-1] = eps_total - out[:-1].sum()
    return tuple(float(x) for x in out)


def _map(fn, items, workers):
    if workers and workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _channel_quotients(E, lam, cfg):
    # imported here: synthesis depends on certify, which this module also uses
    from .synthesis import ScalarTarget, synthesize_two_valued

    cache = {}
    keys = []
    for i, l in enumerate(lam):
        if abs(l - 1.0) < _TRIVIAL_TOL:
            keys.append(None)
            continue
        key = next((k for k in cache if abs(k - l) < _CLUSTER_TOL), None)
        if key is None:
            cache[complex(l)] = i
            key = complex(l)
        keys.append(key)

    def run(key):
        try:
            return synthesize_two_valued(ScalarTarget(E, key), cfg)
        except BudgetExhausted as exc:
            raise BudgetExhausted(
                f"eigenvalue channel {cache[key]} (lambda={key:.6g}) failed: {exc}",
                exc.best,
                exc.certificate,
                channel=cache[key],
            ) from exc

    unique = list(cache)
    results = dict(zip(unique, _map(run, unique, cfg.workers)))
    out = []
    for key in keys:
        if key is None:
            out.append((FiniteBlaschke.unit(1.0), FiniteBlaschke.unit(1.0), ArcSet(), 0.0))
        else:
            q = results[key]
            out.append((q.numerator, q.denominator, q.exceptional, q.certified_error))
    return out


def _two_valued_quotient(E, T, cfg):
    T = as_matrix(T)
    sd = unitary_eig(T)
    if E.is_full:
        lam = np.ones(T.shape[0], dtype=complex)
    elif E.is_empty:
        # constant T: exact constant channels
        nums = tuple(FiniteBlaschke.unit(l) for l in sd.eigenvalues)
        dens = tuple(FiniteBlaschke.unit(1.0) for _ in nums)
        Vh = adjoint(sd.V)
        return MatrixQuotient(
            ConjugatedDiagonalInner(Vh, nums),
            ConjugatedDiagonalInner(Vh, dens),
            ArcSet(),
            channels=tuple(0.0 for _ in nums),
        )
    else:
        lam = sd.eigenvalues
    chans = _channel_quotients(E, lam, cfg)
    exceptional = ArcSet()
    for c in chans:
        exceptional = exceptional.union(c[2])
    Vh = adjoint(sd.V)
    return MatrixQuotient(
        ConjugatedDiagonalInner(Vh, tuple(c[0] for c in chans)),
        ConjugatedDiagonalInner(Vh, tuple(c[1] for c in chans)),
        exceptional,
        channels=tuple(c[3] for c in chans),
    )


def approximate_two_valued(E, T, cfg):
    """Certified ``Phi Psi^*`` for the target I on E, T on the complement.

    Each eigenvalue channel is a scalar two-valued problem with the full
    budget: the operator-norm error of a conjugated-diagonal difference is
    the largest channel error.
    """
    T = as_matrix(T)
    q = _two_valued_quotient(E, T, cfg)
    target = StepUnimodular.two_valued(E, T)
    cert = certify_quotient(target, q, cfg.epsilon, cfg.delta, config=cfg.to_json())
    q = q.certified(cert)
    if not cert.passed:
        raise BudgetExhausted("assembled matrix quotient failed certification", q, cert)
    return q


def _factor_data(g):
    eye = np.eye(g.dimension, dtype=complex)
    reps, _ = g.distinct_values()
    T = next(v for v in reps if op_norm(v - eye) >= 1e-10)
    try:
        E = support_of_value(g, eye)
    except KeyError:
        E = ArcSet()
    return E, T


def approximate_step(f, cfg):
    """Chain ``prod_i Phi_i Psi_i^*`` over the binary factors of f.

    Every factor gets budget epsilon/m and the same exceptional half-width,
    chosen from the jump points of f so the union stays below delta.
    """
    f = f.simplified()
    if not isinstance(f, StepUnimodular):
        f = StepUnimodular(f.partition, f.values)
    factors = binary_factorize(f)
    if not factors:
        q = _two_valued_quotient(ArcSet.full(), np.eye(f.dimension), cfg)
        chain = QuotientChain((q,), ArcSet())
        cert = certify_quotient(f, chain, cfg.epsilon, cfg.delta, config=cfg.to_json())
        return chain.certified(cert)
    m = len(factors)
    jumps = f.jump_points()
    if jumps.size:
        lengths = f.partition.arc_lengths()
        if cfg.half_width is None and cfg.delta >= lengths.min():
            raise DomainError("delta must be smaller than the shortest arc")
    hw = cfg.half_width
    if hw is None:
        hw = cfg.exceptional_fraction * cfg.delta / (2.0 * max(1, jumps.size))
    sub = cfg.replace(epsilon=cfg.epsilon / m, half_width=hw)
    quotients = []
    for idx, g in enumerate(factors):
        E, T = _factor_data(g)
        try:
            quotients.append(approximate_two_valued(E, T, sub))
        except BudgetExhausted as exc:
            raise BudgetExhausted(
                f"binary factor {idx}: {exc}", exc.best, exc.certificate, exc.channel
            ) from exc
    exceptional = ArcSet()
    for q in quotients:
        exceptional = exceptional.union(q.exceptional)
    chain = QuotientChain(tuple(quotients), exceptional)
    cert = certify_quotient(f, chain, cfg.epsilon, cfg.delta, config=cfg.to_json())
    chain = chain.certified(cert)
    if not cert.passed:
        raise BudgetExhausted("chain failed certification", chain, cert)
    return chain


def approximate_sampled(samples, eps_quant, cfg):
    """Quantize sampled unitary data, then approximate the step function.

    The reported total bound is ``2 * eps_quant + chain bound``.
    """
    if not eps_quant > 0:
        raise DomainError("eps_quant must be positive")
    g = quantize_range(samples, eps_quant)
    chain = approximate_step(g, cfg)
    return QuotientChain(
        chain.quotients,
        chain.exceptional,
        chain.certified_error,
        chain.certificate,
        quantized=g,
        quantization_budget=float(eps_quant),
    )


def _null_basis(M, rank_tol=1e-10):
    """Orthonormal basis of the orthogonal complement of range(M), index order."""
    n = M.shape[0]
    if M.shape[1] == 0:
        return np.eye(n, dtype=complex)
    proj = np.eye(n) - M @ adjoint(M)
    k = n - M.shape[1]
    return orthonormal_span(proj, k) if k else np.zeros((n, 0), dtype=complex)


def decompose_contraction(T, tol=1e-10):
    """Unitaries U1, U2 with T = (U1 + U2) / 2 for a contraction T.

    Polar form T = W P; on the kernel of P the partial isometry is completed
    by mapping an index-ordered basis of ker T onto one of (range T)^perp.
    """
    T = as_matrix(T)
    n = T.shape[0]
    A, s, Bh = np.linalg.svd(T)
    if s[0] > 1.0 + 1e-12:
        raise DomainError(f"||T|| = {s[0]:.17g} exceeds 1")
    r = int(np.sum(s > tol))
    B = adjoint(Bh)
    Ar, Br = A[:, :r], B[:, :r]
    K = _null_basis(Br)
    C = _null_basis(Ar)
    W = Ar @ adjoint(Br) + C @ adjoint(K)
    Vp = np.hstack([Br, K])
    p = np.concatenate([np.minimum(s[:r], 1.0), np.zeros(n - r)])
    # arccos is infinitely steep at 1: snap rounding-level deficits to 0 angle
    p[p >= 1.0 - 1e-12] = 1.0
    theta = np.arccos(p)
    U1 = W @ Vp @ np.diag(np.exp(1j * theta)) @ adjoint(Vp)
    U2 = W @ Vp @ np.diag(np.exp(-1j * theta)) @ adjoint(Vp)
    return U1, U2


def approximate_bounded(f, cfg):
    """``f ~ s (G1 + G2) / 2`` with G_k chains for unitary step functions g_k.

    ``s`` is the sup norm of f; each g_k is approximated to ``epsilon / s``.
    A unitary-valued f gives g1 = g2 and a single chain with coefficient s.
    """
    f = f.simplified()
    s = f.sup_norm()
    s_eff = s if s > 0 else 1.0
    pairs = [decompose_contraction(v / s_eff) for v in f.values]
    g1 = StepUnimodular(f.partition, np.array([p[0] for p in pairs]))
    g2 = StepUnimodular(f.partition, np.array([p[1] for p in pairs]))
    sub = cfg.replace(epsilon=cfg.epsilon / s_eff)
    same = np.max(op_norm(g1.values - g2.values)) <= 1e-12
    if same:
        chains = (approximate_step(g1, sub),)
        coefs = (s_eff,)
    else:
        chains = (approximate_step(g1, sub), approximate_step(g2, sub))
        coefs = (0.5 * s_eff, 0.5 * s_eff)
    exceptional = ArcSet()
    for c in chains:
        exceptional = exceptional.union(c.exceptional)
    approx = BoundedApproximation(coefs, chains, s, exceptional)
    cert = certify_quotient(f, approx, cfg.epsilon, cfg.delta, config=cfg.to_json())
    approx = approx.certified(cert)
    if not cert.passed:
        raise BudgetExhausted("bounded combination failed certification", approx, cert)
    return approx
