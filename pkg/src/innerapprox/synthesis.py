"""Synthesis of finite Blaschke quotients matching scalar unimodular step targets.

The boundary argument of ``B_num / B_den`` has derivative ``sum P_num - sum
P_den`` (Poisson kernels at the zeros), so approximating a step target means
placing zeros so that the two kernel measures differ by point masses equal
to the jumps of the target's argument.

Construction used here:

* both products carry a dense lattice ("carrier") of ``n`` zeros at radii
  ``1 - s_num`` and ``1 - s_den``; a lattice whose spacing is comparable to
  its distance from the circle has an almost exactly linear argument, and the
  two linear parts cancel;
* at each jump the two lattices are shifted by fractional "defect" masses
  ``a_j`` (numerator) and ``b_j`` (denominator) with ``a_j - b_j = w_j``;
* choosing ``a_j s_num = b_j s_den`` cancels the ``1/d`` tails of the
  smeared jumps, leaving ``O((s / d)^3)`` errors at distance ``d``.

This warm start is then polished by a monotone minimax coordinate search,
first over the layout knobs and then over individual zeros near the worst
grid point.  The certifier, not the optimizer, decides acceptance.
"""

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from ._linalg import TWO_PI, canonical_angle, wrap_angle
from .approximants import QuotientApproximant
from .blaschke import DEFAULT_MARGIN, ArgumentTrace, FiniteBlaschke, factor_lift, zeros_lift
from .certify import certification_segments, certify_quotient
from .errors import BudgetExhausted, DomainError
from .unimodular import ArcSet, StepUnimodular, binary_factorize, support_of_value

log = logging.getLogger(__name__)

_UNIT_TOL = 1e-12


@dataclass(frozen=True)
class SynthesisConfig:
    epsilon: float = 0.2
    delta: float = 0.1
    max_degree: int = 8000
    grid_density: float = 8.0  # optimization samples per carrier spacing
    iterations: int = 40  # layout-knob objective evaluations
    zero_iterations: int = 160  # single-zero trial moves
    seed: int = 0
    margin: float = DEFAULT_MARGIN
    half_width: float | None = None
    exceptional_fraction: float = 0.9
    sharpness: float = 0.35  # s_num / exceptional half-width
    radius_ratio: float = 2.0  # s_den / s_num
    ripple_constant: float = 16.0
    escalations: int = 3
    refine: bool = True
    workers: int = 1

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_json(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class ScalarTarget:
    """1 on the arc set E and ``alpha`` on its complement.

    The argument lift uses the jump ``w = arg(alpha)`` in (-pi, pi]: ``+w``
    where the complement begins, ``-w`` where E begins, so the jumps sum to 0.
    """

    E: ArcSet
    alpha: complex

    def __post_init__(self):
        a = complex(self.alpha)
        if abs(abs(a) - 1.0) > 1e-10:
            raise DomainError(f"target value {a} is not unimodular")
        object.__setattr__(self, "alpha", a / abs(a))

    @property
    def jump(self):
        return float(wrap_angle(np.angle(self.alpha)))

    @property
    def is_trivial(self):
        return abs(self.alpha - 1.0) < _UNIT_TOL or self.E.is_full

    @property
    def is_constant(self):
        return self.is_trivial or self.E.is_empty

    def breakpoints(self):
        if self.is_constant:
            return np.zeros(0)
        return self.E.boundary_points()

    def jumps(self):
        bps = self.breakpoints()
        entering_E = self.E.contains(bps)
        return np.where(entering_E, -self.jump, self.jump)

    def arc_lengths(self):
        bps = self.breakpoints()
        if bps.size == 0:
            return np.array([TWO_PI])
        return np.diff(np.append(bps, bps[0] + TWO_PI))

    def value(self, theta):
        return np.where(self.E.contains(theta), 1.0 + 0j, self.alpha)

    def as_step(self):
        return StepUnimodular.two_valued(self.E, [[self.alpha]])


def target_argument_trace(target, grid):
    grid = np.asarray(grid, dtype=float)
    values = np.where(target.E.contains(grid), 0.0, target.jump)
    if target.is_trivial:
        values = np.zeros(grid.shape)
    return ArgumentTrace(grid, values, 0.0)


@dataclass(frozen=True)
class LayoutParams:
    carrier: int
    num_width: float
    den_width: float
    shared: tuple  # defect mass common to both lattices, per breakpoint
    phase: float


@dataclass(frozen=True, eq=False)
class ZeroLayout:
    numerator: np.ndarray
    denominator: np.ndarray
    params: LayoutParams | None = None

    @property
    def degrees(self):
        return (int(self.numerator.size), int(self.denominator.size))


def exceptional_half_width(target, cfg):
    if cfg.half_width is not None:
        return float(cfg.half_width)
    nbp = max(1, target.breakpoints().size)
    return cfg.exceptional_fraction * cfg.delta / (2.0 * nbp)


def balanced_shared_mass(jumps, ratio):
    """Common defect mass making a_j s_num = b_j s_den for s_den = ratio * s_num."""
    jumps = np.asarray(jumps, dtype=float)
    if ratio == 1.0:
        return np.zeros(jumps.shape)
    up = jumps / (ratio - 1.0)
    down = -np.abs(jumps) * ratio / (ratio - 1.0)
    return np.where(jumps > 0, up, down)


def _lattice_angles(n, masses, points, phase, start):
    """Angles of n zeros at the quantiles of c*theta + sum_j m_j ramp_j(theta).

    Each defect mass is spread linearly over a short ramp centred on its
    breakpoint; negative masses thin the lattice there, positive ones
    thicken it.
    """
    masses = np.asarray(masses, dtype=float)
    c = n - masses.sum() / TWO_PI
    if c <= 0:
        raise DomainError("defect masses exceed the carrier")
    lifted = start + np.mod(np.asarray(points, dtype=float) - start, TWO_PI)
    tau = 1.25 * np.abs(masses) / (2.0 * c)
    knots = [start, start + TWO_PI]
    for p, t, m in zip(lifted, tau, masses):
        if m != 0.0:
            knots.extend([p - t, p + t])
    knots = np.array(sorted(knots))
    cum = c * (knots - start)
    for p, t, m in zip(lifted, tau, masses):
        if m != 0.0:
            cum = cum + m * np.clip((knots - (p - t)) / (2.0 * t), 0.0, 1.0)
    levels = TWO_PI * (np.arange(n) + phase)
    return canonical_angle(np.interp(levels, cum, knots))


def _lattice_start(target):
    bps = target.breakpoints()
    if bps.size == 0:
        return 0.0
    lengths = np.diff(np.append(bps, bps[0] + TWO_PI))
    j = int(np.argmax(lengths))
    return float(bps[j] + 0.5 * lengths[j])


def layout_from_params(params, target, margin=DEFAULT_MARGIN):
    bps = target.breakpoints()
    jumps = target.jumps()
    shared = np.asarray(params.shared, dtype=float)
    a = np.maximum(jumps, 0.0) + shared
    b = np.maximum(-jumps, 0.0) + shared
    start = _lattice_start(target)
    for s in (params.num_width, params.den_width):
        if not (margin <= s < 1.0):
            raise DomainError(f"lattice distance {s} from the circle is out of range")
    num = (1.0 - params.num_width) * np.exp(
        1j * _lattice_angles(params.carrier, a, bps, params.phase, start)
    )
    den = (1.0 - params.den_width) * np.exp(
        1j * _lattice_angles(params.carrier, b, bps, params.phase, start)
    )
    return ZeroLayout(num, den, params)


def initialize_zero_layout(target, cfg, split="balanced"):
    """Deterministic warm start.

    ``split="balanced"`` uses tail-cancelling defect masses and
    ``s_den = radius_ratio * s_num``; ``split="naive"`` puts each positive
    jump entirely in the numerator and each negative one in the denominator
    with equal radii (kept for comparison runs).
    """
    if target.is_trivial:
        empty = np.zeros(0, dtype=complex)
        return ZeroLayout(empty, empty, None)
    hw = exceptional_half_width(target, cfg)
    s_num = cfg.sharpness * hw
    jumps = target.jumps()
    if split == "balanced" and jumps.size:
        ratio = cfg.radius_ratio
    elif split in ("balanced", "naive"):
        ratio = 1.0
    else:
        raise DomainError(f"unknown split {split!r}")
    n = int(np.ceil(np.log(cfg.ripple_constant / cfg.epsilon) / s_num))
    phase = float(np.random.default_rng(cfg.seed).uniform(0.25, 0.75))
    params = LayoutParams(
        carrier=n,
        num_width=s_num,
        den_width=ratio * s_num,
        shared=tuple(balanced_shared_mass(jumps, ratio)),
        phase=phase,
    )
    return layout_from_params(params, target, cfg.margin)


def optimization_grid(target, hw, carrier, density):
    exceptional = ArcSet.around(target.breakpoints(), hw)
    h = TWO_PI / max(carrier, 1) / density
    pts = []
    for a, b in certification_segments(exceptional, target.breakpoints()):
        pts.append(np.linspace(a, b, max(2, int(np.ceil((b - a) / h)) + 1)))
    return np.concatenate(pts) if pts else np.zeros(0)


class _Objective:
    """Max wrapped argument deviation after the best unimodular rotation."""

    def __init__(self, target, theta):
        self.theta = theta
        self.G = target_argument_trace(target, theta).values

    def residual(self, num, den):
        return zeros_lift(num, self.theta) - zeros_lift(den, self.theta) - self.G

    @staticmethod
    def score(residual):
        w = wrap_angle(residual)
        center = float(np.angle(np.mean(np.exp(1j * w))))
        w = wrap_angle(w - center)
        hi, lo = float(np.max(w)), float(np.min(w))
        return 0.5 * (hi - lo), center + 0.5 * (hi + lo), int(np.argmax(np.abs(w - 0.5 * (hi + lo))))

    def __call__(self, layout):
        return self.score(self.residual(layout.numerator, layout.denominator))


@dataclass
class RefineResult:
    layout: ZeroLayout
    objective_before: float
    objective_after: float
    rotation: float
    history: list = field(default_factory=list)


def _knob_vector(params):
    return np.concatenate(
        [[np.log(params.num_width), np.log(params.den_width)], params.shared, [params.phase]]
    )


def _knob_params(x, template):
    m = len(template.shared)
    return LayoutParams(
        carrier=template.carrier,
        num_width=float(np.exp(x[0])),
        den_width=float(np.exp(x[1])),
        shared=tuple(float(v) for v in x[2:2 + m]),
        phase=float(x[2 + m]),
    )


def _search_knobs(layout, target, objective, cfg, history):
    params = layout.params
    x = _knob_vector(params)
    best, rot, _ = objective(layout)
    jumps = np.abs(target.jumps())
    steps = np.concatenate([[0.1, 0.1], np.maximum(0.1 * jumps, 0.02), [0.1]])
    evals = 0
    while evals < cfg.iterations and np.max(steps) > 1e-3:
        improved = False
        for i in range(x.size):
            for sign in (1.0, -1.0):
                y = x.copy()
                y[i] += sign * steps[i]
                try:
                    cand = layout_from_params(_knob_params(y, params), target, cfg.margin)
                except DomainError:
                    continue
                val, crot, _ = objective(cand)
                evals += 1
                if val < best:
                    x, best, rot, layout = y, val, crot, cand
                    history.append(("knob", i, best))
                    improved = True
                    break
                if evals >= cfg.iterations:
                    break
            if evals >= cfg.iterations:
                break
        if not improved:
            steps = steps / 2.0
    return layout, best, rot


def _search_zeros(layout, objective, cfg, history, active=6):
    """Coordinate moves (radius, then angle) of zeros nearest the worst point."""
    num = layout.numerator.copy()
    den = layout.denominator.copy()
    theta = objective.theta
    residual = objective.residual(num, den)
    best, rot, worst = objective.score(residual)
    if num.size == 0 or cfg.zero_iterations <= 0:
        return layout, best, rot
    spacing = TWO_PI / max(num.size, 1)
    rel_step = 0.15
    trials = 0
    while trials < cfg.zero_iterations and rel_step > 1e-3:
        t_star = theta[worst]
        cands = []
        for side, zs in ((0, num), (1, den)):
            d = np.abs(wrap_angle(np.angle(zs) - t_star))
            for k in np.argsort(d, kind="stable")[:active]:
                cands.append((side, int(k)))
        cands.sort(key=lambda sk: (sk[0] * num.size + sk[1]))
        improved = False
        for side, k in cands:
            zs = num if side == 0 else den
            sign = 1.0 if side == 0 else -1.0
            r, phi = abs(zs[k]), float(np.angle(zs[k]))
            old = factor_lift(r, phi, theta)
            s = 1.0 - r
            moves = [
                ((1.0 - s * (1 + rel_step)), phi),
                ((1.0 - s * (1 - rel_step)), phi),
                (r, phi + rel_step * spacing),
                (r, phi - rel_step * spacing),
            ]
            for r_new, phi_new in moves:
                if not (0.0 <= r_new <= 1.0 - cfg.margin):
                    continue
                trials += 1
                cand = residual + sign * (factor_lift(r_new, phi_new, theta) - old)
                val, crot, cworst = objective.score(cand)
                if val < best:
                    zs[k] = r_new * np.exp(1j * phi_new)
                    residual, best, rot, worst = cand, val, crot, cworst
                    history.append(("zero", side, k, best))
                    improved = True
                    break
                if trials >= cfg.zero_iterations:
                    break
            if improved or trials >= cfg.zero_iterations:
                break
        if not improved:
            rel_step /= 2.0
    return ZeroLayout(num, den, layout.params), best, rot


def refine_zero_layout(layout, target, cfg, grid=None):
    """Monotone minimax refinement; returns the best layout found."""
    if target.is_trivial or layout.numerator.size + layout.denominator.size == 0:
        return RefineResult(layout, 0.0, 0.0, 0.0)
    hw = exceptional_half_width(target, cfg)
    if grid is None:
        grid = optimization_grid(target, hw, layout.numerator.size, cfg.grid_density)
    objective = _Objective(target, grid)
    before, rot, _ = objective(layout)
    history = [("start", before)]
    best = before
    if cfg.refine and layout.params is not None and cfg.iterations > 0:
        layout, best, rot = _search_knobs(layout, target, objective, cfg, history)
    if cfg.refine and cfg.zero_iterations > 0:
        layout, best, rot = _search_zeros(layout, objective, cfg, history)
    return RefineResult(layout, before, best, rot, history)


def _validate(target, cfg):
    if not (0.0 < cfg.epsilon < 2.0):
        raise DomainError("epsilon must lie in (0, 2)")
    if not cfg.delta > 0:
        raise DomainError("delta must be positive")
    if target.is_constant:
        return
    lengths = target.arc_lengths()
    if cfg.delta >= lengths.min() and cfg.half_width is None:
        raise DomainError("delta must be smaller than the shortest arc")
    hw = exceptional_half_width(target, cfg)
    if lengths.min() < 4.0 * hw:
        raise DomainError(
            f"arc of length {lengths.min():.3g} is shorter than four exceptional half-widths"
        )


def _constant_quotient(target, cfg):
    value = 1.0 if target.is_trivial else target.alpha
    approx = QuotientApproximant(FiniteBlaschke.unit(value), FiniteBlaschke.unit(1.0), ArcSet())
    cert = certify_quotient(target, approx, cfg.epsilon, cfg.delta, config=cfg.to_json())
    return approx.certified(cert)


def synthesize_two_valued(target, cfg):
    """Certified quotient for 1 on E, alpha on the complement."""
    _validate(target, cfg)
    if target.is_constant:
        return _constant_quotient(target, cfg)
    hw = exceptional_half_width(target, cfg)
    exceptional = ArcSet.around(target.breakpoints(), hw)
    attempt_cfg = cfg
    best = None
    best_cert = None
    for attempt in range(cfg.escalations + 1):
        layout = initialize_zero_layout(target, attempt_cfg)
        if max(layout.degrees) > cfg.max_degree:
            break
        result = refine_zero_layout(layout, target, attempt_cfg)
        log.info(
            "attempt %d: degree %d, objective %.4g -> %.4g",
            attempt, layout.degrees[0], result.objective_before, result.objective_after,
        )
        escalate = (
            lambda c: c.replace(sharpness=0.8 * c.sharpness, ripple_constant=2.0 * c.ripple_constant)
        )
        if result.objective_after > cfg.epsilon / 2 and attempt < cfg.escalations:
            attempt_cfg = escalate(attempt_cfg)
            continue
        final = result.layout
        approx = QuotientApproximant(
            FiniteBlaschke(final.numerator, np.exp(-1j * result.rotation), cfg.margin),
            FiniteBlaschke(final.denominator, 1.0, cfg.margin),
            exceptional,
            diagnostics={
                "objective_initial": result.objective_before,
                "objective_final": result.objective_after,
                "attempt": attempt,
                "params": dataclasses.asdict(final.params) if final.params else None,
                "steps_accepted": len(result.history) - 1,
            },
        )
        cert = certify_quotient(target, approx, cfg.epsilon, cfg.delta, config=cfg.to_json())
        approx = approx.certified(cert)
        if cert.passed:
            return approx
        if best is None or cert.bound < best_cert.bound:
            best, best_cert = approx, cert
        attempt_cfg = escalate(attempt_cfg)
    raise BudgetExhausted(
        "no certified quotient within the degree/iteration budget", best, best_cert
    )


def scalar_factor_targets(f):
    """Two-valued scalar targets whose product is the scalar step function f."""
    targets = []
    for g in binary_factorize(f.simplified()):
        reps, _ = g.distinct_values()
        u = [v for v in reps if abs(v[0, 0] - 1.0) >= 1e-10]
        if not u:
            continue
        alpha = complex(u[0][0, 0])
        try:
            E = support_of_value(g, np.eye(1))
        except KeyError:
            E = ArcSet()
        targets.append(ScalarTarget(E, alpha))
    return targets


def synthesize_step_scalar(f, cfg):
    """Certified single quotient for a scalar unimodular step function.

    Each two-valued factor gets budget epsilon/m and shares one exceptional
    half-width; numerators and denominators multiply into one quotient.
    """
    if f.dimension != 1:
        raise DomainError("scalar synthesis needs a 1x1 step function")
    f = f.simplified()
    targets = scalar_factor_targets(f)
    if not targets:
        return _constant_quotient(ScalarTarget(ArcSet.full(), 1.0), cfg)
    if len(targets) == 1:
        return synthesize_two_valued(targets[0], cfg)
    m = len(targets)
    jumps = f.jump_points()
    hw = cfg.half_width
    if hw is None:
        hw = cfg.exceptional_fraction * cfg.delta / (2.0 * max(1, jumps.size))
    lengths = f.partition.arc_lengths()
    if cfg.delta >= lengths.min() and cfg.half_width is None:
        raise DomainError("delta must be smaller than the shortest arc")
    sub_cfg = cfg.replace(epsilon=cfg.epsilon / m, half_width=hw)
    parts = [synthesize_two_valued(t, sub_cfg) for t in targets]
    num = parts[0].numerator
    den = parts[0].denominator
    exceptional = parts[0].exceptional
    for p in parts[1:]:
        num = num * p.numerator
        den = den * p.denominator
        exceptional = exceptional.union(p.exceptional)
    approx = QuotientApproximant(
        num,
        den,
        exceptional,
        diagnostics={
            "factor_errors": [p.certified_error for p in parts],
            "factor_degrees": [p.degrees for p in parts],
        },
    )
    cert = certify_quotient(f, approx, cfg.epsilon, cfg.delta, config=cfg.to_json())
    approx = approx.certified(cert)
    if not cert.passed:
        raise BudgetExhausted("product quotient failed certification", approx, cert)
    return approx
