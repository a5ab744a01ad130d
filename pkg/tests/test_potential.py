import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magstrip.errors import DecayViolationError, DomainError, InvalidSpecError
from magstrip.fiber import FiberSpec, eigen_lowest
from magstrip.potential import (
    PotentialSpec,
    PotentialTerm,
    XProfile,
    YProfile,
    effective_callable,
    effective_potential,
    evaluate_potential,
    sign_field,
    tail_limits,
    verify_decay,
)


def tail_term(c, exponent, signed=False):
    name = "signed_power_tail" if signed else "power_tail"
    return PotentialTerm(c=c, x_profile=XProfile("constant"),
                         y_profile=YProfile(name, {"exponent": exponent}))


@pytest.fixture(scope="module")
def psi0():
    return eigen_lowest(FiberSpec(0.0, 1.0, 0.0), n=512, m=1)[0].psi


# ------------------------------------------------------------- evaluation


def test_empty_potential_is_zero():
    spec = PotentialSpec(alpha=2.0)
    assert evaluate_potential(spec, 0.0, 3.0, 1.0) == 0.0
    assert sign_field(spec, 0.0, 3.0, 1.0) == 1.0


def test_single_term_evaluation():
    spec = PotentialSpec(alpha=1.5, terms=(tail_term(-2.0, 1.5),))
    assert evaluate_potential(spec, 0.5, 0.0, 1.0) == pytest.approx(-2.0)
    assert sign_field(spec, 0.5, 0.0, 1.0) == -1.0


def test_signed_tail_sign_convention():
    spec = PotentialSpec(alpha=2.0, terms=(tail_term(1.0, 2.0, signed=True),))
    assert sign_field(spec, 0.0, 3.0, 1.0) == 1.0
    assert sign_field(spec, 0.0, -3.0, 1.0) == -1.0
    # V(y=0) = 0 maps to +1 by convention
    assert sign_field(spec, 0.0, 0.0, 1.0) == 1.0


def test_opposite_terms_change_sign():
    spec = PotentialSpec(alpha=1.5, terms=(
        tail_term(1.0, 1.5),
        PotentialTerm(c=-3.0, x_profile=XProfile("constant"),
                      y_profile=YProfile("gaussian", {"sigma": 1.0})),
    ))
    assert sign_field(spec, 0.0, 0.0, 1.0) == -1.0
    assert sign_field(spec, 0.0, 50.0, 1.0) == 1.0


def test_out_of_strip():
    spec = PotentialSpec(alpha=1.5, terms=(tail_term(1.0, 1.5),))
    with pytest.raises(DomainError):
        evaluate_potential(spec, 1.5, 0.0, 1.0)


def test_profile_validation():
    with pytest.raises(InvalidSpecError):
        XProfile("unknown")
    with pytest.raises(InvalidSpecError):
        YProfile("power_tail", {})
    with pytest.raises(InvalidSpecError):
        YProfile("power_tail", {"exponent": -1.0})
    with pytest.raises(InvalidSpecError):
        PotentialSpec(alpha=0.0)


# ------------------------------------------------------------------ decay


def test_decay_constant_pure_tail():
    spec = PotentialSpec(alpha=1.5, terms=(tail_term(-2.0, 1.5),))
    assert verify_decay(spec, 1.0) == pytest.approx(2.0, rel=1e-2)


def test_decay_constant_gaussian():
    spec = PotentialSpec(alpha=1.5, terms=(
        PotentialTerm(c=1.0, x_profile=XProfile("constant"),
                      y_profile=YProfile("gaussian", {"sigma": 2.0})),
    ))
    assert math.isfinite(verify_decay(spec, 1.0))


def test_decay_violation():
    spec = PotentialSpec(alpha=1.5, terms=(tail_term(1.0, 1.2),))
    with pytest.raises(DecayViolationError):
        verify_decay(spec, 1.0)


# ----------------------------------------------------- effective potential


def test_effective_zero_epsilon_identity(psi0):
    # x-independent V: the psi^2 average is the y profile itself
    spec = PotentialSpec(alpha=1.5, terms=(tail_term(-2.0, 1.5),))
    y = np.linspace(-5, 5, 21)
    ep = effective_potential(spec, psi0, 0.0, y, 1.0)
    exact = -2.0 * (1 + y**2) ** -0.75
    assert np.max(np.abs(ep.values - exact)) < 1e-12


def test_effective_separable_product(psi0):
    spec = PotentialSpec(alpha=2.0, terms=(
        PotentialTerm(c=1.0, x_profile=XProfile("cosine"),
                      y_profile=YProfile("power_tail", {"exponent": 2.0})),
    ))
    y = np.array([0.0, 1.0, 4.0])
    ep = effective_potential(spec, psi0, 0.0, y, 1.0)
    x = psi0.nodes
    coef = np.trapezoid(np.cos(0.5 * math.pi * x) * psi0.values**2, x)
    exact = coef * (1 + y**2) ** -1.0
    assert np.max(np.abs(ep.values - exact)) < 1e-9


def test_effective_constant_sign_algebra(psi0):
    spec = PotentialSpec(alpha=1.5, terms=(tail_term(-1.0, 1.5),))
    y = np.linspace(-3, 3, 13)
    ep = effective_potential(spec, psi0, 0.5, y, 1.0)
    exact = -(1 + y**2) ** -0.75 / 1.5
    assert np.max(np.abs(ep.values - exact)) < 1e-12


def test_effective_epsilon_bounds(psi0):
    spec = PotentialSpec(alpha=1.5, terms=(tail_term(-1.0, 1.5),))
    with pytest.raises(InvalidSpecError):
        effective_potential(spec, psi0, 1.0, np.linspace(-1, 1, 5), 1.0)


@settings(max_examples=25, deadline=None)
@given(
    e1=st.floats(-0.9, 0.9),
    e2=st.floats(-0.9, 0.9),
    c=st.floats(-3.0, 3.0),
    signed=st.booleans(),
)
def test_effective_monotone_in_epsilon(psi0, e1, e2, c, signed):
    if e1 > e2:
        e1, e2 = e2, e1
    spec = PotentialSpec(alpha=1.5, terms=(tail_term(c, 1.5, signed=signed),))
    y = np.linspace(-4, 4, 17)
    w1 = effective_potential(spec, psi0, e1, y, 1.0).values
    w2 = effective_potential(spec, psi0, e2, y, 1.0).values
    assert np.all(w1 <= w2 + 1e-14)


def test_effective_callable_matches_quadrature(psi0):
    spec = PotentialSpec(alpha=1.5, terms=(
        tail_term(-1.0, 1.5),
        tail_term(0.5, 2.5, signed=True),
    ))
    y = np.linspace(-6, 6, 25)
    for eps in (0.0, 0.3, -0.4):
        w = effective_callable(spec, psi0, eps, 1.0)
        ep = effective_potential(spec, psi0, eps, y, 1.0)
        assert np.max(np.abs(w(y) - ep.values)) < 1e-12


# ------------------------------------------------------------- tail limits


def test_tail_limits_single_negative(psi0):
    spec = PotentialSpec(alpha=1.5, terms=(tail_term(-1.0, 1.5),))
    om_minus, om_plus = tail_limits(spec, psi0, 0.0, 1.0)
    assert om_minus == pytest.approx(-1.0, abs=1e-12)
    assert om_plus == pytest.approx(-1.0, abs=1e-12)


def test_tail_limits_signed(psi0):
    spec = PotentialSpec(alpha=1.5, terms=(tail_term(1.0, 1.5, signed=True),))
    om_minus, om_plus = tail_limits(spec, psi0, 0.0, 1.0)
    assert om_minus == pytest.approx(-1.0, abs=1e-12)
    assert om_plus == pytest.approx(1.0, abs=1e-12)


def test_tail_limits_epsilon_linear(psi0):
    spec = PotentialSpec(alpha=1.5, terms=(tail_term(-1.0, 1.5),))
    eps = np.array([-0.2, -0.1, 0.0, 0.1, 0.2])
    vals = np.array([tail_limits(spec, psi0, float(e), 1.0)[1] for e in eps])
    # single-signed V: omega(eps) = omega(0)/(1+eps), smooth through 0
    exact = -1.0 / (1.0 + eps)
    assert np.max(np.abs(vals - exact)) < 1e-12


def test_tail_limits_require_power_tail(psi0):
    spec = PotentialSpec(alpha=1.5, terms=(
        PotentialTerm(c=1.0, x_profile=XProfile("constant"),
                      y_profile=YProfile("bump", {"radius": 2.0})),
    ))
    with pytest.raises(DecayViolationError):
        tail_limits(spec, psi0, 0.0, 1.0)
    ep = effective_potential(spec, psi0, 0.0, np.linspace(-1, 1, 5), 1.0)
    assert ep.omega_minus is None and ep.omega_plus is None


def test_effective_tail_bound(psi0):
    spec = PotentialSpec(alpha=1.5, terms=(tail_term(-2.0, 1.5),))
    y = np.concatenate([np.geomspace(1e-2, 1e4, 100), [0.0]])
    ep = effective_potential(spec, psi0, 0.0, y, 1.0)
    weighted = np.abs(ep.values) * (1 + y**2) ** 0.75
    assert np.max(weighted) <= 2.0 + 1e-9


# ------------------------------------------------------------------- JSON


def test_json_roundtrip():
    spec = PotentialSpec(alpha=1.5, terms=(
        tail_term(-1.0, 1.5),
        PotentialTerm(c=2.0,
                      x_profile=XProfile("indicator", {"lo": -0.5, "hi": 0.5, "smooth": 0.1}),
                      y_profile=YProfile("gaussian", {"sigma": 3.0})),
    ))
    doc = json.loads(spec.to_json())
    assert set(doc) == {"alpha", "terms"}
    assert set(doc["terms"][0]) == {"c", "x_profile", "y_profile"}
    assert PotentialSpec.from_json(spec.to_json()) == spec


def test_json_missing_fields():
    with pytest.raises(InvalidSpecError):
        PotentialSpec.from_dict({})
    with pytest.raises(InvalidSpecError):
        PotentialSpec.from_dict({"alpha": 1.5, "terms": [{"c": 1.0}]})
