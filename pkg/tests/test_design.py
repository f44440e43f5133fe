import numpy as np
import pytest

from switchforce import ControllerGains, Environment, RigidPlant, WristParams
from switchforce.design import DesignContext, SearchSpec, find_threshold, lambda_sweep
from switchforce.errors import DomainError, NoBracket

import oracles

RIGID = DesignContext(RigidPlant(1.0, 0.0), Environment(1e6, 10.0),
                      ControllerGains(M_a=0.8, k_p=4000.0, k_d=80.0, k_f=1.0, b_f=5.0))
WRIST = DesignContext(RIGID.plant, RIGID.env, RIGID.gains, WristParams(0.05, 5e4, 171.0))


def test_rigid_threshold_matches_oracle():
    thr = find_threshold(SearchSpec("b_f", 5.0, 2e4, 1e-3, RIGID))
    assert thr.value == pytest.approx(oracles.BF_THRESHOLD, abs=0.005)
    assert thr.certificate.certified
    assert thr.bracket[1] - thr.bracket[0] <= 1e-3


def test_wrist_threshold_matches_oracle():
    thr = find_threshold(SearchSpec("b_t", 50.0, 500.0, 1e-4, WRIST))
    assert thr.value == pytest.approx(oracles.BT_THRESHOLD, abs=2e-4)
    assert thr.certificate.Lambda < 1


def test_neighbours_of_threshold_have_opposite_verdicts():
    tol = 0.01
    thr = find_threshold(SearchSpec("b_t", 50.0, 500.0, tol, WRIST))
    assert WRIST.certificate("b_t", thr.value).certified
    assert not WRIST.certificate("b_t", thr.value - tol).certified


def test_search_is_deterministic():
    spec = SearchSpec("b_t", 50.0, 500.0, 0.01, WRIST)
    a, b = find_threshold(spec), find_threshold(spec)
    assert a.value == b.value and a.bracket == b.bracket


def test_no_bracket_when_both_ends_fail():
    with pytest.raises(NoBracket) as info:
        find_threshold(SearchSpec("b_f", 5.0, 100.0, 0.1, RIGID))
    assert not info.value.lo_certificate.certified
    assert not info.value.hi_certificate.certified


def test_no_bracket_when_both_ends_certify():
    with pytest.raises(NoBracket):
        find_threshold(SearchSpec("b_t", 200.0, 500.0, 0.1, WRIST))


class _Verdict:
    def __init__(self, ok):
        self.certified = ok


class _Decreasing:
    """Synthetic context certifying below a cut-off, for the lower-end branch."""
    wrist = None

    def certificate(self, name, value):
        return _Verdict(value < 10.0)


def test_certified_lower_end_is_returned():
    thr = find_threshold(SearchSpec("b_f", 5.0, 20.0, 0.01, _Decreasing()))
    assert thr.value == 5.0
    assert thr.bracket == (5.0, 5.0)


@pytest.mark.parametrize("kw", [dict(lo=10.0, hi=5.0), dict(lo=-1.0), dict(tol=0.0),
                                dict(parameter="k_p")])
def test_invalid_search_specs(kw):
    args = dict(parameter="b_f", lo=5.0, hi=2e4, tol=1e-3, context=RIGID)
    args.update(kw)
    with pytest.raises(DomainError):
        SearchSpec(**args)


def test_wrist_parameter_needs_wrist():
    with pytest.raises(DomainError):
        SearchSpec("b_t", 50.0, 500.0, 0.01, RIGID)


def test_sweep_rows():
    grid = np.linspace(50.0, 500.0, 64)
    rows = lambda_sweep(WRIST, "b_t", grid)
    assert len(rows) == 64
    assert [r.value for r in rows] == list(grid)
    for r in rows:
        if r.Lambda is not None:
            assert r.Lambda == pytest.approx((r.lambda1 * r.lambda2) ** 2, rel=1e-12)
    # Lambda crosses 1 exactly once on this grid
    signs = [r.Lambda < 1 for r in rows if r.Lambda is not None]
    assert sum(a != b for a, b in zip(signs, signs[1:])) == 1


def test_single_point_sweep():
    rows = lambda_sweep(RIGID, "b_f", [9000.0])
    assert len(rows) == 1
    assert rows[0].Lambda == pytest.approx(oracles.LAMBDA_BF9000, rel=1e-9)
    assert rows[0].verdict == "NotCertified"


def test_empty_sweep_rejected():
    with pytest.raises(DomainError):
        lambda_sweep(RIGID, "b_f", [])
