import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hetmix.model import (
    AlphaBelowPiError,
    DegenerateMixingError,
    HomophilyOutOfRangeError,
    ModelParams,
    NonpositiveGammaError,
    SeedOutOfRangeError,
    SizesNotNormalizedError,
    StateVector,
    derivatives,
    mixing_fractions,
    mixing_matrix,
    mortality_given_detection,
    validate_params,
)


def test_default_calibration_is_accepted(calib):
    assert validate_params(calib) is calib


@pytest.mark.parametrize(
    "changes, error",
    [
        (dict(alpha=(0.45, 0.005)), AlphaBelowPiError),
        (dict(n=(0.6, 0.6)), SizesNotNormalizedError),
        (dict(h=1.5), HomophilyOutOfRangeError),
        (dict(h=-0.1), HomophilyOutOfRangeError),
        (dict(gamma=0.0), NonpositiveGammaError),
        (dict(seed_fraction=0.0), SeedOutOfRangeError),
        (dict(seed_fraction=0.5, n=(0.3, 0.7)), SeedOutOfRangeError),
    ],
)
def test_each_invariant_has_its_own_error(calib, changes, error):
    with pytest.raises(error):
        validate_params(calib.replace(**changes))


def test_replace_keeps_population_normalized(calib):
    p = calib.replace(n2=0.3)
    assert p.n == (0.7, 0.3)
    assert calib.replace(r02=4.0).r0 == (2.5, 4.0)


@pytest.mark.parametrize(
    "r0, n, expected",
    [
        ((2.5, 2.5), (0.5, 0.5), (0.5, 0.5)),
        ((2.5, 5.0), (0.5, 0.5), (1 / 3, 2 / 3)),
        ((2.5, 2.5), (0.8, 0.2), (0.8, 0.2)),
    ],
)
def test_mixing_fractions(calib, r0, n, expected):
    p1, p2 = mixing_fractions(calib.replace(r0=r0, n=n))
    assert p1 == pytest.approx(expected[0], abs=1e-15)
    assert p2 == pytest.approx(expected[1], abs=1e-15)
    assert p1 + p2 == 1.0


def test_mixing_fractions_degenerate(calib):
    with pytest.raises(DegenerateMixingError):
        mixing_fractions(calib.replace(r0=(0.0, 0.0)))


def test_mixing_matrix_homogeneous(calib):
    m = mixing_matrix(calib)
    assert np.allclose(m.as_array(), 0.5, atol=1e-15)
    assert m.beta == pytest.approx((2.5 / 7, 2.5 / 7))


def test_mixing_matrix_full_homophily(calib):
    m = mixing_matrix(calib.replace(h=1.0, r0=(2.5, 3.5), n=(0.7, 0.3)))
    assert np.array_equal(m.as_array(), np.eye(2))


def test_mixing_matrix_half_homophily(calib):
    m = mixing_matrix(calib.replace(h=0.5, r0=(2.5, 5.0)))
    assert m.p_frac == pytest.approx((1 / 3, 2 / 3), abs=1e-15)
    assert m.as_array() == pytest.approx(np.array([[2 / 3, 1 / 3], [1 / 6, 5 / 6]]), abs=1e-15)


def test_mortality_given_detection(calib):
    assert mortality_given_detection(calib) == pytest.approx((0.01 / 0.45, 0.01 / 0.27))
    assert mortality_given_detection(calib.replace(alpha=(0.01, 0.01))) == (1.0, 1.0)
    assert mortality_given_detection(calib.replace(pi=0.0)) == (0.0, 0.0)


# -- derivative examples ----------------------------------------------------


def _state(s, i, q=(0.0, 0.0), r=0.0, d=0.0, c=(0.0, 0.0)):
    return StateVector(s=tuple(s), i=tuple(i), q=tuple(q), r=r, d=d, c=tuple(c))


def test_disease_free_state_is_fixed(calib):
    dv = derivatives(_state((0.5, 0.5), (0.0, 0.0)), calib, mixing_matrix(calib))
    assert dv.to_array().tolist() == [0.0] * 10


def test_homogeneous_collapse_to_one_group(calib):
    state = _state((0.4, 0.3), (0.02, 0.05), q=(0.01, 0.0))
    dv = derivatives(state, calib, mixing_matrix(calib))
    beta = calib.gamma * calib.r0[0]
    for k in range(2):
        assert dv.s[k] == pytest.approx(-state.s[k] * beta * (0.02 + 0.05), rel=1e-14)


def test_equal_sensitivity_to_either_infective_pool(calib):
    # finite differences of dS_i w.r.t. I_1 and I_2 under homogeneous mixing
    delta = 1e-3
    mix = mixing_matrix(calib)
    base = _state((0.5, 0.5 - delta), (0.01, 0.02))
    h = 1e-6

    def ds(i1, i2):
        return derivatives(_state(base.s, (i1, i2)), calib, mix).s

    d0 = ds(*base.i)
    d1 = ds(base.i[0] + h, base.i[1])
    d2 = ds(base.i[0], base.i[1] + h)
    beta = calib.gamma * calib.r0[0]
    for k in range(2):
        g1 = (d1[k] - d0[k]) / h
        g2 = (d2[k] - d0[k]) / h
        assert g1 == pytest.approx(g2, rel=1e-8)
        assert g1 == pytest.approx(-base.s[k] * beta, rel=1e-8)


# -- properties ------------------------------------------------------------

unit = st.floats(0.0, 1.0)


@st.composite
def valid_params(draw, homogeneous=False):
    pi = draw(st.floats(0.0, 0.1))
    a1 = draw(st.floats(pi, 1.0))
    a2 = draw(st.floats(pi, 1.0))
    n2 = draw(st.floats(0.01, 0.99))
    r01 = draw(st.floats(0.0, 6.0))
    r02 = r01 if homogeneous else draw(st.floats(0.0, 6.0))
    h = 0.0 if homogeneous else draw(unit)
    if r01 * (1 - n2) + r02 * n2 == 0:
        r01 = 1.0
        r02 = r02 if not homogeneous else 1.0
    return ModelParams(
        gamma=draw(st.floats(0.01, 1.0)), pi=pi, r0=(r01, r02), alpha=(a1, a2), h=h,
        n=(1.0 - n2, n2), seed_fraction=1e-4,
    )


@st.composite
def states(draw):
    vals = [draw(st.floats(0.0, 1.0)) for _ in range(8)]
    total = sum(vals) or 1.0
    s1, s2, i1, i2, q1, q2, r, d = (v / total for v in vals)
    return _state((s1, s2), (i1, i2), (q1, q2), r, d, (q1, q2))


@settings(max_examples=300, deadline=None)
@given(valid_params())
def test_rows_are_stochastic(params):
    m = mixing_matrix(validate_params(params)).as_array()
    assert np.all(m >= 0) and np.all(m <= 1)
    assert abs(m[0].sum() - 1.0) <= 1e-15
    assert abs(m[1].sum() - 1.0) <= 1e-15


@settings(max_examples=1000, deadline=None)
@given(valid_params(), states())
def test_compartment_derivatives_sum_to_zero(params, state):
    dv = derivatives(state, params, mixing_matrix(params))
    terms = [*dv.s, *dv.i, *dv.q, dv.r, dv.d]
    scale = max(1.0, max(abs(t) for t in terms))
    assert abs(math.fsum(terms)) <= 1e-14 * scale


@settings(max_examples=300, deadline=None)
@given(valid_params(homogeneous=True), states())
def test_relative_depletion_equal_under_homogeneous_mixing(params, state):
    assume(min(state.s) > 1e-12)  # subnormal S loses relative precision
    dv = derivatives(state, params, mixing_matrix(params))
    assert dv.s[0] / state.s[0] == pytest.approx(dv.s[1] / state.s[1], rel=1e-12, abs=1e-300)


@settings(max_examples=300, deadline=None)
@given(valid_params(), states(), st.integers(0, 7))
def test_empty_compartment_has_no_outflow(params, state, k):
    y = state.to_array()
    y[k] = 0.0
    zeroed = StateVector.from_array(y)
    dv = derivatives(zeroed, params, mixing_matrix(params)).to_array()
    assert dv[k] >= 0.0


@settings(max_examples=300, deadline=None)
@given(valid_params(), states())
def test_detected_share_of_incidence(params, state):
    mix = mixing_matrix(params)
    dv = derivatives(state, params, mix)
    for k in range(2):
        incidence = dv.c[k] + dv.i[k] + params.gamma * state.i[k]
        if incidence > 1e-6:
            assert dv.c[k] / incidence == pytest.approx(params.alpha[k], rel=1e-9, abs=1e-12)
