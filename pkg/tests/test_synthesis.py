import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from innerapprox._linalg import TWO_PI, wrap_angle
from innerapprox.blaschke import zeros_lift
from innerapprox.certify import brute_force_max_error, independent_recheck
from innerapprox.errors import BudgetExhausted, DomainError
from innerapprox.synthesis import (
    ScalarTarget,
    SynthesisConfig,
    balanced_shared_mass,
    exceptional_half_width,
    initialize_zero_layout,
    optimization_grid,
    refine_zero_layout,
    synthesize_step_scalar,
    synthesize_two_valued,
    target_argument_trace,
)
from innerapprox.unimodular import ArcPartition, ArcSet, StepUnimodular


def test_target_jumps_sum_to_zero():
    t = ScalarTarget(ArcSet([(0.0, 1.0), (2.0, 3.0)]), np.exp(0.7j))
    assert t.jumps().sum() == pytest.approx(0.0)
    assert t.breakpoints().size == 4
    # entering the complement at 1.0 raises the argument
    k = int(np.argmin(np.abs(t.breakpoints() - 1.0)))
    assert t.jumps()[k] == pytest.approx(0.7)


def test_target_values_and_trace():
    t = ScalarTarget(ArcSet([(0.0, np.pi)]), -1)
    assert t.value(1.0) == 1 and t.value(4.0) == -1
    tr = target_argument_trace(t, np.array([1.0, 4.0]))
    assert list(tr.values) == [0.0, np.pi]
    with pytest.raises(DomainError):
        ScalarTarget(ArcSet(), 2.0)


def test_balanced_mass_cancels_tails():
    w = np.array([1.3, -0.4])
    beta = balanced_shared_mass(w, 2.0)
    a = np.maximum(w, 0) + beta
    b = np.maximum(-w, 0) + beta
    assert np.allclose(a - b, w)
    assert np.allclose(a * 1.0, b * 2.0)


def test_trivial_targets_are_exact(fast_cfg):
    for t in (ScalarTarget(ArcSet([(0, 1)]), 1.0), ScalarTarget(ArcSet.full(), -1)):
        q = synthesize_two_valued(t, fast_cfg)
        assert q.degrees == (0, 0)
        assert q.certified_error < 1e-12
        assert q.exceptional.is_empty
    q = synthesize_two_valued(ScalarTarget(ArcSet(), 1j), fast_cfg)
    assert q.degrees == (0, 0)
    assert q.certified_error < 1e-12


def test_validation(fast_cfg):
    t = ScalarTarget(ArcSet([(0.0, 0.3)]), 1j)
    with pytest.raises(DomainError):
        synthesize_two_valued(t, fast_cfg)
    with pytest.raises(DomainError):
        synthesize_two_valued(ScalarTarget(ArcSet([(0, 3)]), 1j), fast_cfg.replace(epsilon=2.5))


def test_warm_start_lattice(fast_cfg):
    t = ScalarTarget(ArcSet([(0.0, np.pi)]), 1j)
    lay = initialize_zero_layout(t, fast_cfg)
    n = lay.params.carrier
    assert lay.degrees == (n, n)
    hw = exceptional_half_width(t, fast_cfg)
    assert np.allclose(1 - np.abs(lay.numerator), fast_cfg.sharpness * hw)
    assert np.allclose(1 - np.abs(lay.denominator), 2 * fast_cfg.sharpness * hw)
    # difference of lifts reproduces the jump, away from the breakpoints
    th = np.array([np.pi / 2, 3 * np.pi / 2])
    d = zeros_lift(lay.numerator, th) - zeros_lift(lay.denominator, th)
    assert wrap_angle(d[1] - d[0]) == pytest.approx(np.pi / 2, abs=0.1)


def test_balanced_start_beats_naive(fast_cfg):
    t = ScalarTarget(ArcSet([(0.0, np.pi)]), -1)
    cfg = fast_cfg.replace(refine=False)
    good = refine_zero_layout(initialize_zero_layout(t, cfg), t, cfg)
    naive = refine_zero_layout(initialize_zero_layout(t, cfg, split="naive"), t, cfg)
    assert good.objective_after < 0.6 * naive.objective_after


def test_refinement_is_monotone(fast_cfg):
    t = ScalarTarget(ArcSet([(0.0, np.pi)]), -1)
    lay = initialize_zero_layout(t, fast_cfg, split="naive")
    res = refine_zero_layout(lay, t, fast_cfg)
    vals = [h[-1] for h in res.history]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert res.objective_after <= res.objective_before


def test_end_to_end_small(small_quotient):
    target, q = small_quotient
    cert = q.certificate
    assert cert.passed
    assert cert.bound < 0.5
    assert cert.exceptional_measure < 0.6
    assert independent_recheck(cert, q, target)
    assert brute_force_max_error(target, q, 200_000) <= cert.bound


def test_determinism(fast_cfg):
    t = ScalarTarget(ArcSet([(0.0, np.pi)]), 1j)
    a = synthesize_two_valued(t, fast_cfg)
    b = synthesize_two_valued(t, fast_cfg)
    assert np.array_equal(a.numerator.zeros, b.numerator.zeros)
    assert a.certified_error == b.certified_error


def test_budget_exhausted_carries_best(fast_cfg):
    t = ScalarTarget(ArcSet([(0.0, np.pi)]), -1)
    cfg = fast_cfg.replace(epsilon=0.02, max_degree=50, escalations=0)
    with pytest.raises(BudgetExhausted):
        synthesize_two_valued(t, cfg)


def test_step_scalar_factors(fast_cfg):
    f = StepUnimodular(
        ArcPartition([0.0, 2.0, 4.0]), np.exp(2j * np.pi * np.arange(3) / 3)
    )
    q = synthesize_step_scalar(f, fast_cfg.replace(epsilon=0.9, delta=0.9))
    assert q.certificate.passed
    assert len(q.diagnostics["factor_errors"]) == 2
    assert q.exceptional.measure() < 0.9


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 2.9), st.floats(0.5, 3.0))
def test_optimization_grid_avoids_exceptional(start, length):
    t = ScalarTarget(ArcSet([(start, start + length)]), 1j)
    hw = 0.05
    g = optimization_grid(t, hw, 100, 2.0)
    d = np.min(np.abs(wrap_angle(g[:, None] - t.breakpoints()[None, :])), axis=1)
    assert np.all(d >= hw - 1e-9)


def test_config_round_trip():
    cfg = SynthesisConfig(epsilon=0.3, seed=4)
    assert SynthesisConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(DomainError):
        SynthesisConfig.from_json({"bogus": 1})
