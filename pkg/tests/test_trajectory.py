import numpy as np
import pytest

from switchforce.config import load
from switchforce.errors import DomainError, NegativeForceInContact, OutOfHorizon
from switchforce.model import EnvEstimates
from switchforce.trajectory import (AnalyticTrajectory, Constant, ContactSchedule, CubicEase,
                                    DesiredTrajectory, Ramp, Segment, Series, Sinusoid,
                                    TrajectorySpec, design, profile_from_dict, validate)

EST = EnvEstimates(1e4, 50.0)


@pytest.fixture(scope="module")
def canonical():
    return design(load("s54_bt171").trajectory)


def _spec(F=Constant(7.0), x=Constant(7e-4), contact=((0.2, 0.6),), **kw):
    # free-space profile pressing at the level the force demand asks for
    kw.setdefault("x0", 7e-4)
    kw.setdefault("gamma1", 200.0)
    kw.setdefault("gamma2", 200.0)
    return TrajectorySpec(x, F, ContactSchedule(contact), EST, 0.0, 1.0, **kw)


# ------------------------------------------------------------ profiles

@pytest.mark.parametrize("prof", [
    Ramp(0.1, 0.5, -1.0, 2.0), CubicEase(0.1, 0.5, -1.0, 2.0), Sinusoid(0.3, 2.0, 1.7, 0.4),
    Series((0.0, 0.2, 0.3, 0.9), (1.0, -2.0, 0.5, 0.5))])
def test_profile_derivative_matches_finite_difference(prof):
    t = np.array([0.05, 0.17, 0.23, 0.41, 0.77])
    h = 1e-7
    fd = (prof.value(t + h) - prof.value(t - h)) / (2 * h)
    np.testing.assert_allclose(prof.deriv(t), fd, rtol=1e-5, atol=1e-5)


@pytest.mark.parametrize("prof", [
    Constant(3.0), Ramp(0.1, 0.5, -1.0, 2.0), CubicEase(0.0, 1.0, 0.0, 1.0),
    Sinusoid(0.3, 2.0, 1.7, 0.4), Series((0.0, 1.0), (2.0, 3.0))])
def test_profile_dict_round_trip(prof):
    assert profile_from_dict(prof.as_dict()) == prof


def test_profile_errors():
    with pytest.raises(DomainError):
        Series((0.0, 0.0), (1.0, 2.0))
    with pytest.raises(DomainError):
        Ramp(1.0, 0.5, 0.0, 1.0)
    with pytest.raises(DomainError):
        profile_from_dict({"kind": "spline"})


def test_schedule_validation():
    with pytest.raises(DomainError):
        ContactSchedule(((0.3, 0.2),))
    with pytest.raises(DomainError):
        ContactSchedule(((0.1, 0.3), (0.2, 0.4)))


# ------------------------------------------------------------ design

def test_force_filter_settles_to_constant_demand():
    traj = design(_spec(gamma1=2000.0))
    F = traj.evaluate(0.6 - 1e-9)[3]
    assert F == pytest.approx(7.0, abs=1e-6)


def test_position_filter_settles_to_constant_profile():
    traj = design(_spec(x=Constant(2e-4), x0=7e-4, contact=((0.0, 0.1),)))
    x, v, _, _ = traj.evaluate(1.0)
    assert x == pytest.approx(2e-4, abs=1e-6)
    assert abs(v) < 1e-6


def test_continuity_at_stitches(canonical):
    for left, right in zip(canonical.segments[:-1], canonical.segments[1:]):
        xl, vl, _, _ = left.end_state()
        xr, vr, _, _ = right.start_state()
        assert abs(xr - xl) <= 1e-9 and abs(vr - vl) <= 1e-9


def test_contact_relation_holds_throughout(canonical):
    est = canonical.estimates
    for a, b in canonical.contact_intervals():
        t = np.linspace(a, b, 20001)[:-1]
        x, v, _, F = canonical.evaluate_many(t)
        assert np.max(np.abs(est.k_e * x + est.b_e * v - F)) <= 1e-6 * np.max(F)


def test_contact_relation_drift_over_long_contact():
    spec = TrajectorySpec(Constant(0.0), Sinusoid(5.0, 2.0, 3.0), ContactSchedule(((0.0, 1.0),)),
                          EST, 0.0, 1.0, gamma1=100.0, gamma2=100.0, x0=5e-4, v0=0.0)
    traj = design(spec)
    t = np.linspace(0, 1, 5001)[:-1]
    x, v, _, F = traj.evaluate_many(t)
    assert np.max(np.abs(EST.k_e * x + EST.b_e * v - F)) <= 1e-6 * np.max(F)


def test_acceleration_from_filter_matches_derivative_of_velocity(canonical):
    t = np.array([0.05, 0.12, 0.2, 0.28, 0.35])
    h = 1e-6
    v_plus = canonical.evaluate_many(t + h)[1]
    v_minus = canonical.evaluate_many(t - h)[1]
    a = canonical.evaluate_many(t)[2]
    np.testing.assert_allclose(a, (v_plus - v_minus) / (2 * h), rtol=1e-3, atol=1e-3)


def test_default_gamma():
    spec = _spec(gamma1=None, gamma2=None, contact=((0.2, 0.3),))
    assert spec.gammas == pytest.approx((100.0, 100.0))


def test_negative_force_in_contact_is_reported():
    F = Series((0.2, 0.4, 0.41, 0.6), (7.0, 7.0, -1.0, 7.0))
    with pytest.raises(NegativeForceInContact) as info:
        design(_spec(F=F))
    assert info.value.interval == (0.2, 0.6)
    assert 0.4 < info.value.time < 0.42


# ------------------------------------------------------------ evaluate

def test_free_motion_has_no_force(canonical):
    assert canonical.evaluate(0.1)[3] == 0.0
    assert canonical.evaluate(0.35)[3] == 0.0


def test_contact_start_belongs_to_contact_segment(canonical):
    F = canonical.evaluate(0.15)[3]
    assert F == pytest.approx(0.5, rel=1e-3)
    assert bool(canonical.in_contact(0.15))
    assert not bool(canonical.in_contact(0.30))


def test_evaluate_is_deterministic(canonical):
    assert canonical.evaluate(0.2345678) == canonical.evaluate(0.2345678)


def test_vector_and_scalar_evaluation_agree(canonical):
    t = np.linspace(0, 0.4, 97)
    cols = canonical.evaluate_many(t)
    for k, tk in enumerate(t):
        assert tuple(c[k] for c in cols) == pytest.approx(canonical.evaluate(tk), rel=1e-12,
                                                          abs=1e-15)


def test_out_of_horizon(canonical):
    with pytest.raises(OutOfHorizon):
        canonical.evaluate(0.41)
    with pytest.raises(OutOfHorizon):
        canonical.evaluate_many(np.array([-0.1, 0.2]))


def test_analytic_trajectory():
    tr = AnalyticTrajectory(np.sin, np.cos, lambda t: -np.sin(t))
    assert tr.evaluate(0.5) == pytest.approx((np.sin(0.5), np.cos(0.5), -np.sin(0.5), 0.0))


# ------------------------------------------------------------ validate

def test_designed_trajectory_passes(canonical):
    rep = validate(canonical)
    assert rep.passed
    assert rep.max_contact_residual <= 1e-6 * rep.max_force


def test_discontinuous_trajectory_fails_at_the_stitch():
    n = 10
    free = Segment("free", 0.0, 0.5, 0.05, {"y3": np.zeros(n + 1), "dy3": np.zeros(n + 1),
                                           "ddy3": np.zeros(n + 1)}, 10.0, x_free=Constant(0.0))
    later = Segment("free", 0.5, 1.0, 0.05, {"y3": np.full(n + 1, 1e-3), "dy3": np.zeros(n + 1),
                                            "ddy3": np.zeros(n + 1)}, 10.0,
                    x_free=Constant(1e-3))
    rep = validate(DesiredTrajectory([free, later]))
    assert not rep.passed
    assert rep.worst_stitch == 0.5


def test_validation_report_is_grid_converged(canonical):
    coarse = validate(canonical, samples_per_segment=2000)
    fine = validate(canonical, samples_per_segment=20000)
    assert coarse.max_accel == pytest.approx(fine.max_accel, rel=0.1)
    floor = 1e-10 * fine.max_force
    assert abs(coarse.max_contact_residual - fine.max_contact_residual) <= (
        0.1 * fine.max_contact_residual + floor)
