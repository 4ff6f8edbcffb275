"""Certified sup-norm bounds by dense sampling plus Lipschitz slack.

On every grid interval ``[a, b]`` outside the exceptional arcs the error
``e(theta) = || target(theta) - approx(theta) ||`` is Lipschitz with a
constant ``L`` bounded from Poisson-kernel sums (the target is constant
there), so ``sup e <= (e(a) + e(b))/2 + L (b - a)/2``.  Kernel sums are
bounded per interval, which keeps ``L`` close to the true derivative instead
of the crude sum of kernel peaks.
"""

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import __version__
from ._linalg import TWO_PI, op_norm
from .approximants import (
    BoundedApproximation,
    Certificate,
    MatrixQuotient,
    QuotientApproximant,
    QuotientChain,
)
from .blaschke import kernel_sum_bounds
from .errors import DomainError, ResolutionError
from .unimodular import eval_step

SLACK_LIMIT = 0.1  # L h / 2 must stay below this fraction of epsilon
TARGET_SLACK = 0.04
RECHECK_FACTOR = 1.05
_MAX_POINTS = 4_000_000


def _as_step(target):
    return target.as_step() if hasattr(target, "as_step") else target


def certification_segments(exceptional, breakpoints):
    """Closed segments covering the complement of ``exceptional``, split at
    the target's breakpoints so the target is constant on each open segment."""
    free = exceptional.complement()
    cuts = np.sort(np.asarray(breakpoints, dtype=float))
    segments = []
    for s, e in free:
        inner = cuts[(cuts > s) & (cuts < e)]
        edges = np.concatenate([[s], inner, [e]])
        for a, b in zip(edges[:-1], edges[1:]):
            if b - a > 0:
                segments.append((float(a), float(b)))
    return segments


def _segment_grids(segments, h):
    grids = []
    for a, b in segments:
        n = max(1, int(np.ceil((b - a) / h)))
        grids.append(np.linspace(a, b, n + 1))
    return grids


def _pair_lipschitz(num, den, a, b):
    zn, zd = num.zeros, den.zeros
    if zn.size == zd.size and np.array_equal(np.sort_complex(zn), np.sort_complex(zd)):
        # identical zero sets cancel: the quotient is the constant c_num / c_den
        return np.zeros(np.shape(a))
    lo_n, hi_n = kernel_sum_bounds(num.zeros, a, b)
    lo_d, hi_d = kernel_sum_bounds(den.zeros, a, b)
    return np.maximum(np.abs(hi_n - lo_d), np.abs(lo_n - hi_d))


def _matrix_quotient_lipschitz(q, a, b, cache):
    # V^* diag(q_i) V: derivative norm is the largest channel derivative
    out = np.zeros(np.shape(a))
    for num, den in q.channel_pairs():
        key = (id(num), id(den))
        if key not in cache:
            cache[key] = _pair_lipschitz(num, den, a, b)
        out = np.maximum(out, cache[key])
    return out


def interval_lipschitz(approximant, a, b, cache=None):
    """Per-interval bound on || d/dtheta approx(e^{i theta}) ||."""
    cache = {} if cache is None else cache
    if isinstance(approximant, QuotientApproximant):
        return _pair_lipschitz(approximant.numerator, approximant.denominator, a, b)
    if isinstance(approximant, MatrixQuotient):
        return _matrix_quotient_lipschitz(approximant, a, b, cache)
    if isinstance(approximant, QuotientChain):
        # product of unitary-valued factors: derivative norms add
        total = np.zeros(np.shape(a))
        for q in approximant.quotients:
            total = total + interval_lipschitz(q, a, b, cache)
        return total
    if isinstance(approximant, BoundedApproximation):
        total = np.zeros(np.shape(a))
        for c, chain in zip(approximant.coefficients, approximant.chains):
            total = total + abs(c) * interval_lipschitz(chain, a, b, cache)
        return total
    raise TypeError(f"cannot certify {type(approximant).__name__}")


def _errors(target, approximant, grids, segments):
    thetas = np.concatenate(grids)
    approx = np.asarray(approximant.boundary_values(thetas))
    mids = np.array([0.5 * (a + b) for a, b in segments])
    seg_targets = eval_step(target, mids)
    counts = [g.size for g in grids]
    t = np.repeat(seg_targets, counts, axis=0)
    if approx.ndim == 1:
        approx = approx[:, None, None]
    return op_norm(t - approx)


def _config_hash(epsilon, delta, grid_h, config):
    payload = {"epsilon": epsilon, "delta": delta, "grid_h": grid_h, "config": config or {}}
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _interval_data(approximant, segments, h, cache=None):
    grids = _segment_grids(segments, h)
    a = np.concatenate([g[:-1] for g in grids]) if grids else np.zeros(0)
    b = np.concatenate([g[1:] for g in grids]) if grids else np.zeros(0)
    L = interval_lipschitz(approximant, a, b, cache) if a.size else np.zeros(0)
    return grids, a, b, L


def _slack(L, a, b):
    return float(np.max(0.5 * L * (b - a))) if L.size else 0.0


def _closest_zero_distance(approximant):
    dists = [1.0 - np.abs(z) for z in _all_zeros(approximant) if z.size]
    return min((float(np.min(d)) for d in dists), default=1.0)


def _all_zeros(approximant):
    if isinstance(approximant, QuotientApproximant):
        return [approximant.numerator.zeros, approximant.denominator.zeros]
    if isinstance(approximant, MatrixQuotient):
        return [b.zeros for pair in approximant.channel_pairs() for b in pair]
    if isinstance(approximant, QuotientChain):
        return [z for q in approximant.quotients for z in _all_zeros(q)]
    if isinstance(approximant, BoundedApproximation):
        return [z for c in approximant.chains for z in _all_zeros(c)]
    return []


def _plan_grid(target, approximant, epsilon, start_h=None):
    """Grid spacing with Lipschitz slack just below TARGET_SLACK * epsilon.

    Interval Lipschitz bounds grow roughly like ``L0 + c h`` (kernel
    variation across an interval); both coefficients are fitted on two cheap
    coarse grids, the quadratic is solved for h, and the prediction is
    verified (and shrunk if needed) on the fine grid.  Returns the spacing
    with its grids and interval bounds so certification need not redo them.
    """
    segments = certification_segments(approximant.exceptional, target.breakpoints)
    goal = TARGET_SLACK * epsilon
    h1 = start_h or min(0.01, epsilon / 10.0, 0.5 * _closest_zero_distance(approximant))
    data = _interval_data(approximant, segments, h1)
    if _slack(data[3], data[1], data[2]) <= goal:
        return h1, data
    h2 = h1 / 2.0
    m1 = float(np.max(data[3]))
    m2 = float(np.max(_interval_data(approximant, segments, h2)[3]))
    c = max((m1 - m2) / (h1 - h2), 0.0)
    L0 = max(m2 - c * h2, 1e-300)
    rhs = 2.0 * 0.9 * goal
    h = rhs / L0 if c == 0 else (-L0 + np.sqrt(L0 * L0 + 4.0 * c * rhs)) / (2.0 * c)
    h = min(h, h2)
    for _ in range(30):
        data = _interval_data(approximant, segments, h)
        if _slack(data[3], data[1], data[2]) <= goal:
            break
        h *= 0.8
    return h, data


def choose_grid_h(target, approximant, epsilon, start_h=None):
    return _plan_grid(_as_step(target), approximant, epsilon, start_h)[0]


def certify_quotient(target, approximant, epsilon, delta, grid_h=None, config=None):
    """Certificate for ``|| target - approximant || < epsilon`` off the
    exceptional arcs, and ``measure(exceptional) < delta``."""
    if not epsilon > 0 or not delta > 0:
        raise DomainError("epsilon and delta must be positive")
    target = _as_step(target)
    if target.dimension != approximant.dimension:
        raise DomainError("target and approximant dimensions differ")
    exceptional = approximant.exceptional
    segments = certification_segments(exceptional, target.breakpoints)
    if not segments:
        raise ResolutionError("exceptional arcs cover the whole circle")
    if grid_h is None:
        grid_h, (grids, a, b, L) = _plan_grid(target, approximant, epsilon)
    else:
        total = sum(e - s for s, e in segments)
        if total / grid_h > _MAX_POINTS:
            raise ResolutionError(
                f"grid spacing {grid_h:.3g} needs more than {_MAX_POINTS} points"
            )
        grids, a, b, L = _interval_data(approximant, segments, grid_h)
    err = _errors(target, approximant, grids, segments)
    bounds = []
    lmax = 0.0
    hmax = 0.0
    offset = 0
    for g in grids:
        e = err[offset:offset + g.size]
        offset += g.size
        bounds.append(0.5 * (e[:-1] + e[1:]))
    widths = b - a
    interval_bounds = np.concatenate(bounds) + 0.5 * L * widths
    if L.size:
        lmax = float(np.max(L))
        hmax = float(np.max(widths))
    slack = float(np.max(0.5 * L * widths)) if L.size else 0.0
    if slack >= SLACK_LIMIT * epsilon:
        raise ResolutionError(
            f"Lipschitz slack {slack:.3g} is not below {SLACK_LIMIT} * epsilon; use a finer grid"
        )
    grid_max = float(np.max(err))
    bound = max(float(np.max(interval_bounds)), grid_max)
    measure = exceptional.measure()
    passed = bool(bound < epsilon and measure < delta)
    warnings = []
    if passed and bound > 0.99 * epsilon:
        warnings.append("bound within 1% of epsilon")
    if slack > 0.05 * epsilon:
        warnings.append("Lipschitz slack exceeds 5% of epsilon")
    return Certificate(
        grid_h=hmax,
        lipschitz=lmax,
        grid_max=grid_max,
        bound=bound,
        epsilon=float(epsilon),
        delta=float(delta),
        exceptional=exceptional,
        exceptional_measure=measure,
        passed=passed,
        config_hash=_config_hash(epsilon, delta, hmax, config),
        version=__version__,
        grid_points=int(err.size),
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class RecheckResult:
    passed: bool
    recorded_bound: float
    rederived_bound: float

    def __bool__(self):
        return self.passed

    @property
    def ratio(self):
        if self.recorded_bound == 0:
            return 0.0 if self.rederived_bound == 0 else float("inf")
        return self.rederived_bound / self.recorded_bound


def independent_recheck(certificate, approximant, target):
    """Re-derive the bound on a grid twice as fine with fresh Lipschitz
    constants; passes iff it stays within 5% of the recorded bound."""
    h = certificate.grid_h / 2.0 if certificate.grid_h > 0 else None
    fresh = certify_quotient(target, approximant, certificate.epsilon, certificate.delta, grid_h=h)
    recorded = certificate.bound
    ok = fresh.bound <= RECHECK_FACTOR * recorded or (recorded == 0 and fresh.bound <= 1e-12)
    return RecheckResult(bool(ok), float(recorded), float(fresh.bound))


def brute_force_max_error(target, approximant, n_points, chunk=200_000):
    """Max pointwise error over a uniform circle grid, skipping exceptional
    arcs and exact breakpoints (independent of the certificate path)."""
    target = _as_step(target)
    theta = np.arange(n_points) * (TWO_PI / n_points)
    theta = theta[~approximant.exceptional.contains(theta)]
    theta = theta[~np.isin(theta, target.breakpoints)]
    worst = 0.0
    for start in range(0, theta.size, chunk):
        t = theta[start:start + chunk]
        approx = np.asarray(approximant.boundary_values(t))
        if approx.ndim == 1:
            approx = approx[:, None, None]
        worst = max(worst, float(np.max(op_norm(eval_step(target, t) - approx))))
    return worst
