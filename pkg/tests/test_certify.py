import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from innerapprox._linalg import TWO_PI
from innerapprox.approximants import Certificate, QuotientApproximant
from innerapprox.blaschke import FiniteBlaschke
from innerapprox.certify import (
    brute_force_max_error,
    certification_segments,
    certify_quotient,
    choose_grid_h,
    independent_recheck,
    interval_lipschitz,
)
from innerapprox.errors import DomainError, ResolutionError
from innerapprox.synthesis import ScalarTarget
from innerapprox.unimodular import ArcSet


def random_quotient(rng, target, hw):
    def rb(d):
        z = 0.9 * np.sqrt(rng.uniform(0, 1, d)) * np.exp(1j * rng.uniform(0, TWO_PI, d))
        return FiniteBlaschke(z, np.exp(1j * rng.uniform(0, TWO_PI)))

    exc = ArcSet.around(target.breakpoints(), hw)
    return QuotientApproximant(rb(int(rng.integers(0, 8))), rb(int(rng.integers(0, 8))), exc)


def test_segments_split_at_breakpoints():
    exc = ArcSet.around([1.0, 3.0], 0.1)
    segs = certification_segments(exc, np.array([1.0, 3.0, 5.0]))
    ends = sorted(x for s in segs for x in s)
    assert any(abs(e - 5.0) < 1e-12 for e in ends)
    assert sum(b - a for a, b in segs) == pytest.approx(TWO_PI - 0.4)


def test_exact_case_bound_is_tiny():
    t = ScalarTarget(ArcSet([(0, 2)]), 1.0)
    q = QuotientApproximant(FiniteBlaschke.unit(), FiniteBlaschke.unit(), ArcSet())
    c = certify_quotient(t, q, 0.1, 0.1)
    assert c.passed and c.bound < 1e-12
    assert c.lipschitz == 0.0


def test_identical_num_den_constant_target():
    t = ScalarTarget(ArcSet.full(), 1.0)
    B = FiniteBlaschke([0.5, 0.3j, -0.9])
    q = QuotientApproximant(B, B, ArcSet())
    c = certify_quotient(t, q, 0.1, 0.1)
    assert c.bound < 1e-10


def test_coarse_grid_is_rejected():
    t = ScalarTarget(ArcSet([(0, 2)]), 1j)
    B = FiniteBlaschke([0.99])
    q = QuotientApproximant(B, FiniteBlaschke.unit(), ArcSet.around(t.breakpoints(), 0.05))
    with pytest.raises(ResolutionError):
        certify_quotient(t, q, 0.1, 0.2, grid_h=0.1)


def test_bad_parameters():
    t = ScalarTarget(ArcSet([(0, 2)]), 1.0)
    q = QuotientApproximant(FiniteBlaschke.unit(), FiniteBlaschke.unit())
    with pytest.raises(DomainError):
        certify_quotient(t, q, 0.0, 0.1)


def test_measure_equals_configured_half_widths():
    t = ScalarTarget(ArcSet([(0.5, 2.5), (3.0, 4.0)]), 1j)
    hw = 0.013
    q = QuotientApproximant(FiniteBlaschke.unit(), FiniteBlaschke.unit(), ArcSet.around(t.breakpoints(), hw))
    c = certify_quotient(t, q, 2.0, 1.0)
    assert c.exceptional_measure == pytest.approx(2 * hw * 4, abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_soundness_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    s = rng.uniform(0, TWO_PI)
    t = ScalarTarget(ArcSet([(s, s + rng.uniform(1.0, 4.0))]), np.exp(1j * rng.uniform(-3, 3)))
    q = random_quotient(rng, t, 0.05)
    c = certify_quotient(t, q, 2.0, 0.5)
    assert c.bound >= c.grid_max
    assert brute_force_max_error(t, q, 100_000) <= c.bound


def test_interval_lipschitz_dominates_differences(small_quotient):
    target, q = small_quotient
    theta = np.linspace(0.2, 0.25, 2001)
    v = q.boundary_values(theta)
    L = interval_lipschitz(q, theta[:-1], theta[1:])
    assert np.all(np.abs(np.diff(v)) <= L * np.diff(theta) + 1e-12)


def test_monotone_in_density(small_quotient):
    target, q = small_quotient
    h = choose_grid_h(target, q, 0.5)
    coarse = certify_quotient(target, q, 0.5, 0.6, grid_h=h)
    fine = certify_quotient(target, q, 0.5, 0.6, grid_h=h / 4)
    assert fine.bound <= coarse.bound + 1e-12


def test_recheck_and_negative_controls(small_quotient):
    target, q = small_quotient
    cert = q.certificate
    assert independent_recheck(cert, q, target)
    bad = independent_recheck(cert.with_bound(cert.bound / 2), q, target)
    assert not bad.passed and bad.ratio > 1.05
    # perturb one zero inward by 0.1: must fail the original epsilon
    z = q.numerator.zeros.copy()
    z[0] = (abs(z[0]) - 0.1) * np.exp(1j * np.angle(z[0]))
    broken = QuotientApproximant(FiniteBlaschke(z, q.numerator.constant), q.denominator, q.exceptional)
    assert not certify_quotient(target, broken, 0.5, 0.6).passed


def test_degree_zero_recheck_any_density():
    t = ScalarTarget(ArcSet.full(), 1.0)
    q = QuotientApproximant(FiniteBlaschke.unit(), FiniteBlaschke.unit())
    c = certify_quotient(t, q, 0.1, 0.1)
    for h in (0.5, 0.01):
        assert independent_recheck(replace(c, grid_h=h), q, t)


def test_certificate_json_keys_and_round_trip(small_quotient):
    _, q = small_quotient
    d = q.certificate.to_json()
    assert list(d)[:10] == [
        "grid_h", "lipschitz", "grid_max", "bound", "epsilon", "delta",
        "exceptional", "pass", "config_hash", "version",
    ]
    back = Certificate.from_json(json.loads(json.dumps(d)))
    assert back.to_json() == d
