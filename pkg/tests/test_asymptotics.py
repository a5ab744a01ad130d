import math

import numpy as np
import pytest
from scipy.special import gamma

from magstrip.asymptotics import (
    LogLimit,
    ToleranceProfile,
    c_alpha,
    counting_limit,
    fit_threshold_exponent,
    predicted_limits,
    predicted_log_limit,
    semiclassical_volume,
    theta,
    verify_corollaries,
)
from magstrip.errors import DomainError, FitError, InvalidSpecError
from magstrip.potential import PotentialSpec, PotentialTerm, XProfile, YProfile
from magstrip.schrodinger1d import SsfCurve

# dual-quadrature regression value for the tail-law constant at alpha = 3/2
# (scripts/compute_oracle_constants.py; the two routes agree to 2.3e-10)
C_ALPHA_32 = 1.159595266963929


# ---------------------------------------------------------------- c_alpha


def test_c_alpha_at_one_is_half():
    # Beta identity: integral_0^1 sqrt(1/t - 1) dt = pi/2
    assert abs(c_alpha(1.0) - 0.5) <= 1e-10


def test_c_alpha_regression_at_three_halves():
    assert abs(c_alpha(1.5) - C_ALPHA_32) <= 1e-9


def test_c_alpha_matches_beta_identity():
    for a in (0.5, 0.8, 1.3, 1.7, 1.9):
        exact = gamma(1 / a - 0.5) * gamma(1.5) / (a * math.pi * gamma(1 / a + 1))
        assert c_alpha(a) == pytest.approx(exact, abs=1e-10)


def test_c_alpha_monotone_and_divergent():
    vals = [c_alpha(a) for a in (0.5, 1.0, 1.5, 1.9, 1.99, 1.999)]
    assert all(x < y for x, y in zip(vals, vals[1:]))


def test_c_alpha_domain():
    for bad in (0.0, -1.0, 2.0, 2.5):
        with pytest.raises(DomainError):
            c_alpha(bad)


# ------------------------------------------------------------------ theta


def test_theta_cases():
    assert theta(0.7, 0.01) == 1.0
    assert theta(0.5, math.exp(-3.0)) == pytest.approx(3.0)
    assert theta(0.25, 0.01) == pytest.approx(0.01 ** (-0.25))
    assert theta(0.25, -0.1) == 1.0
    assert theta(5.0, -1e-9) == 1.0


def test_theta_validation():
    with pytest.raises(InvalidSpecError):
        theta(0.0, 0.1)
    with pytest.raises(InvalidSpecError):
        theta(0.5, 0.0)


# ------------------------------------------------------------- predictions


def test_predicted_limits_negative_tails():
    c = c_alpha(1.5)
    below, above = predicted_limits(1.5, 1.0, (-1.0, -1.0))
    assert below == pytest.approx(-2.0 * c)
    assert above == pytest.approx(-2.0 * c / math.sin(2 * math.pi / 3))


def test_predicted_limits_positive_tails():
    below, above = predicted_limits(1.5, 1.0, (1.0, 1.0))
    assert below == 0.0
    assert above == pytest.approx(-c_alpha(1.5) * 2.0 / math.tan(2 * math.pi / 3))
    assert above > 0  # repulsive tails push the SSF up through cot < 0


def test_predicted_limits_mixed_tails():
    c = c_alpha(1.5)
    below, above = predicted_limits(1.5, 1.0, (1.0, -1.0))
    assert below == pytest.approx(-c)
    expected = -c * (1.0 / math.sin(2 * math.pi / 3) + 1.0 / math.tan(2 * math.pi / 3))
    assert above == pytest.approx(expected)


def test_predicted_limits_mu_scaling():
    b1, a1 = predicted_limits(1.5, 1.0, (-1.0, -1.0))
    b4, a4 = predicted_limits(1.5, 4.0, (-1.0, -1.0))
    assert b4 == pytest.approx(b1 / 2.0)
    assert a4 == pytest.approx(a1 / 2.0)


def test_counting_limit_extends_below_one():
    val = counting_limit(0.8, 1.0, (-1.0, -1.0))
    assert val == pytest.approx(2.0 * c_alpha(0.8))
    with pytest.raises(DomainError):
        predicted_limits(0.8, 1.0, (-1.0, -1.0))


def test_predicted_log_limit():
    deep = predicted_log_limit(1.0, (-1.0, -1.0))
    assert deep.limit == pytest.approx(-math.sqrt(0.75) / math.pi)
    assert not deep.bounded
    assert predicted_log_limit(1.0, (0.0, 0.0)) == LogLimit(limit=-0.0, bounded=True)
    boundary = predicted_log_limit(1.0, (-0.25, -0.25))
    assert boundary.limit == 0.0
    assert not boundary.bounded


# ------------------------------------------------------------ semiclassics


def test_semiclassical_volume_nonnegative_potential():
    w = lambda y: np.abs(np.asarray(y, dtype=float))
    assert semiclassical_volume(w, 1.0, 0.5) == 0.0


def test_semiclassical_volume_square_well():
    W, a = 2.0, 1.0
    w = lambda y: np.where(np.abs(np.asarray(y, dtype=float)) <= a, -W, 0.0)
    for lam in (0.5, 1.5):
        vol = semiclassical_volume(w, 1.0, lam)
        assert vol == pytest.approx(2 * a * math.sqrt(W - lam) / math.pi, rel=1e-6)


def test_semiclassical_volume_mu_scaling():
    w = lambda y: np.where(np.abs(np.asarray(y, dtype=float)) <= 1.0, -2.0, 0.0)
    assert semiclassical_volume(w, 4.0, 0.5) == \
        pytest.approx(semiclassical_volume(w, 1.0, 0.5) / 2.0, rel=1e-9)


def test_semiclassical_tail_law():
    # volume * lam^{1/6} converges to 2 C_{3/2} from below, with the
    # deficit shrinking like lam^{1/6}
    w = lambda y: -(1.0 + np.asarray(y, dtype=float) ** 2) ** -0.75
    target = 2.0 * c_alpha(1.5)
    lams = (1e-4, 1e-6, 1e-8)
    deficits = [target - semiclassical_volume(w, 1.0, lam) * lam ** (1 / 6)
                for lam in lams]
    assert all(d > 0 for d in deficits)
    assert deficits[0] > deficits[1] > deficits[2]
    assert deficits[2] <= 0.1 * target


def test_semiclassical_volume_validation():
    with pytest.raises(InvalidSpecError):
        semiclassical_volume(lambda y: np.zeros_like(np.asarray(y, float)), 1.0, 0.0)


# -------------------------------------------------------------------- fits


def _curve(lams, xis):
    return SsfCurve(lambda_samples=np.asarray(lams, dtype=float),
                    xi_values=np.asarray(xis, dtype=float), method="phase-shift")


def test_fit_recovers_exact_power_law():
    lams = np.geomspace(1e-5, 1e-3, 10)
    xis = -3.0 * lams ** -0.25
    slope, const, resid = fit_threshold_exponent(_curve(lams, xis), (1e-5, 1e-3))
    assert slope == pytest.approx(-0.25, abs=1e-12)
    assert const == pytest.approx(-3.0, rel=1e-12)
    assert resid <= 1e-12


def test_fit_with_multiplicative_noise():
    rng = np.random.default_rng(7)
    lams = np.geomspace(1e-5, 1e-3, 40)
    xis = -3.0 * lams ** -0.25 * (1.0 + 0.01 * rng.standard_normal(lams.size))
    slope, _, _ = fit_threshold_exponent(_curve(lams, xis), (1e-5, 1e-3))
    assert abs(slope + 0.25) <= 0.02


def test_fit_rejects_degenerate_input():
    lams = np.geomspace(1e-5, 1e-3, 10)
    with pytest.raises(FitError):
        fit_threshold_exponent(_curve(lams, np.zeros(10)), (1e-5, 1e-3))
    with pytest.raises(FitError):
        fit_threshold_exponent(_curve(lams[:5], -np.ones(5)), (1e-5, 1e-3))
    mixed = np.where(lams > 1e-4, 1.0, -1.0)
    with pytest.raises(FitError):
        fit_threshold_exponent(_curve(lams, mixed), (1e-5, 1e-3))


def test_fit_below_threshold_uses_magnitudes():
    lams = np.geomspace(1e-5, 1e-3, 10)
    slope, const, _ = fit_threshold_exponent(_curve(-lams, -2.0 * lams ** -0.5),
                                             (1e-5, 1e-3))
    assert slope == pytest.approx(-0.5, abs=1e-12)
    assert const == pytest.approx(-2.0, rel=1e-12)


# ------------------------------------------------ effective-model checks


def test_counting_tracks_semiclassics(ref_tail_op):
    from magstrip.schrodinger1d import count_bound_states

    ratios = []
    for lam in (1e-2, 1e-3, 1e-4):
        n = count_bound_states(ref_tail_op, lam)
        vol = semiclassical_volume(ref_tail_op.w, 1.0, lam)
        ratios.append(n / vol)
    assert 0.8 <= ratios[-1] <= 1.2
    assert all(0.7 <= r <= 1.3 for r in ratios)


def test_counting_law_extends_below_alpha_one(capped_tail_op):
    # the below-threshold counting law holds on all of alpha in (0, 2);
    # spot-checked at alpha = 0.8 with the pure-power-core well
    from conftest import capped_power_tail
    from magstrip.errors import ConvergenceError
    from magstrip.schrodinger1d import count_bound_states, make_operator

    op = make_operator(1.0, capped_power_tail(0.8), domain_radius=32.0)
    window = (1e-3, 1e-2)
    lams = np.geomspace(window[0], window[1], 10)
    counts = []
    for lam in lams:
        try:
            counts.append(count_bound_states(op, float(lam)))
        except ConvergenceError:
            counts.append(np.nan)
    counts = np.array(counts, dtype=float)
    good = ~np.isnan(counts)
    slope, const, _ = fit_threshold_exponent(
        _curve(-lams[good], -counts[good]), window)
    target = counting_limit(0.8, 1.0, (-1.0, -1.0))
    assert abs(slope + 0.75) <= 0.10 * 0.75
    assert abs(const + target) <= 0.15 * target


# ------------------------------------------------------------ verification


def test_verify_trivial_potential_passes():
    report = verify_corollaries(
        PotentialSpec(alpha=1.5), b=0.0, L=1.0, q=1, n_grid=256,
        lambda_lo=1e-4, lambda_hi=1e-2, n_lambda=8, epsilon=0.1)
    assert report.verdict == "pass"
    assert report.omega == (0.0, 0.0)
    assert report.Omega_minus == 0.0 and report.Omega_plus == 0.0
    assert all(v == 0 for v in report.curves["below"][1])
    assert report.sandwich_ok


def test_verify_gamma_validation():
    pot = PotentialSpec(alpha=1.5)
    with pytest.raises(InvalidSpecError):
        verify_corollaries(pot, 0.0, 1.0, gamma=0.3)  # (alpha-1)/2 = 0.25
    with pytest.raises(InvalidSpecError):
        verify_corollaries(pot, 0.0, 1.0, epsilon=1.0)


def test_report_serializes():
    report = verify_corollaries(
        PotentialSpec(alpha=3.0), b=0.0, L=1.0, q=1, n_grid=256,
        lambda_lo=1e-3, lambda_hi=1e-1, n_lambda=8, epsilon=0.0,
        above_window=(1e-3, 1e-1))
    doc = report.to_dict()
    assert doc["alpha"] == 3.0
    assert doc["verdict"] in ("pass", "fail")
    assert "below" in doc["curves"]
    assert isinstance(doc["checks"], list) and doc["checks"]
