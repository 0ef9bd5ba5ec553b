import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whichway import ExperimentConfig
from whichway.analytics import (
    BEYOND_DERIVATION_FLAG,
    analytic_visibility_at,
    cosh_rate,
    distinguishability,
    duality_sweep,
    envelope,
    fringe_peak_spacing,
    fringe_wavenumber,
    fringe_width,
    intensity,
    intensity_closed_form_theta0,
    pattern_samples,
    visibility_bound,
    young_fringe_width,
)
from whichway.exceptions import PreconditionError, UndefinedFringeError
from whichway.model import gaussian_mode, norm_constant, sigma_t_sq

from conftest import configs, random_configs


def _mp_intensity(x, cfg):
    """Sum of |branch amplitude|^2 from the orthonormal detector frame, 50 digits."""
    mpmath.mp.dps = 50
    d, eps = mpmath.mpf(cfg.slit_separation_d), mpmath.mpf(cfg.slit_width_epsilon)
    b = mpmath.mpf(cfg.wavelength) * mpmath.mpf(cfg.screen_distance_L) / (2 * mpmath.pi)
    c, r, th = mpmath.mpf(cfg.presence_c), mpmath.mpf(cfg.overlap_r), mpmath.mpf(cfg.overlap_phase_theta)
    a_t = 1 / mpmath.sqrt(2) * (mpmath.sqrt(2 * mpmath.pi) * (eps + 1j * b / (2 * eps))) ** mpmath.mpf(-0.5)
    gp = a_t * mpmath.exp(-(x - d / 2) ** 2 / (4 * eps**2 + 2j * b))
    gm = a_t * mpmath.exp(-(x + d / 2) ** 2 / (4 * eps**2 + 2j * b))
    y0 = mpmath.sqrt(c) * (r * mpmath.exp(1j * th) * gp + gm)
    y1 = mpmath.sqrt(c) * mpmath.sqrt(1 - r**2) * gp
    n0 = mpmath.sqrt(1 - c) * (gp + gm)
    n2 = 1 + (1 - c + c * r * mpmath.cos(th)) * mpmath.exp(-d**2 / (8 * eps**2))
    return (abs(y0) ** 2 + abs(y1) ** 2 + abs(n0) ** 2) / n2


def test_intensity_general_phase_high_precision(ref):
    cfg = ref.with_(c=0.5, overlap_r=0.5, theta=math.pi / 3)
    frozen = 0.40459865262180204309
    assert float(_mp_intensity(mpmath.mpf("0.3"), cfg)) == pytest.approx(frozen, rel=1e-15)
    assert intensity(0.3, cfg) == pytest.approx(frozen, rel=1e-13)


def test_no_cross_term_when_which_way_complete(ref):
    cfg = ref.with_(c=1.0, overlap_r=0.0)
    xs = np.linspace(-4, 4, 201)
    direct = (np.abs(gaussian_mode(xs, "+", cfg)) ** 2 + np.abs(gaussian_mode(xs, "-", cfg)) ** 2) / norm_constant(cfg)
    assert np.allclose(intensity(xs, cfg), direct, rtol=1e-13)
    assert np.allclose(intensity(xs, cfg), envelope(xs, cfg), rtol=1e-13)


@given(configs)
@settings(max_examples=40)
def test_theta0_pattern_is_even(cfg):
    cfg = cfg.with_(theta=0.0)
    xs = np.linspace(0, 4, 101)
    assert np.allclose(intensity(xs, cfg), intensity(-xs, cfg), rtol=1e-13, atol=1e-300)


def test_closed_form_at_centre(ref):
    cfg = ref.with_(c=0.3, overlap_r=0.6)
    a_t_sq = 1 / (2 * math.sqrt(2 * math.pi * sigma_t_sq(cfg)))
    expected = 2 * a_t_sq * math.exp(-1 / (8 * sigma_t_sq(cfg))) * (1 + visibility_bound(cfg)) / norm_constant(cfg)
    assert intensity_closed_form_theta0(0.0, cfg) == pytest.approx(expected, rel=1e-14)


def test_closed_form_rejects_nonzero_theta(ref):
    with pytest.raises(PreconditionError):
        intensity_closed_form_theta0(0.0, ref.with_(theta=0.1))
    with pytest.raises(PreconditionError):
        analytic_visibility_at(0.0, ref.with_(theta=0.1))


def test_closed_form_matches_general_form_random():
    for cfg in random_configs(5, seed=11, theta0=True):
        w = fringe_width(cfg)
        xs = np.linspace(-4 * w, 4 * w, 10_001)
        a, b = intensity(xs, cfg), intensity_closed_form_theta0(xs, cfg)
        ok = a > 1e-300
        assert np.max(np.abs(a[ok] - b[ok]) / a[ok]) < 1e-10


def test_coherent_minima_near_centre():
    # dense-grid search: the minima beside x=0 have local contrast 1 - sech(b x_min) > 0,
    # which shrinks towards zero as the cosh rate b -> 0 (Young regime)
    for cfg, bound in [
        (ExperimentConfig(1.0, 0.1, 0.01, 100.0), 0.1),
        (ExperimentConfig(1.0, 0.01, 1e-3, 1e3), 1e-4),
    ]:
        w = fringe_width(cfg)
        xs = np.linspace(0.2 * w, 0.8 * w, 200_001)
        normalised = intensity_closed_form_theta0(xs, cfg) / envelope(xs, cfg)
        i = np.argmin(normalised)
        half_period = math.pi / fringe_wavenumber(cfg)
        assert 0 < normalised[i] < bound
        assert normalised[i] <= 1 - 1 / math.cosh(cosh_rate(cfg) * half_period) + 1e-12
        assert normalised[i] >= 1 - 1 / math.cosh(cosh_rate(cfg) * xs[i]) - 1e-12


@pytest.mark.parametrize("cfg, expected", [
    (ExperimentConfig(1.0, 0.01, 1e-3, 1e3), 1 + 16 * math.pi**2 * 1e-8),
    (ExperimentConfig(1.0, 0.1, 0.01, 100.0), 1 + 16 * math.pi**2 * 1e-4),
])
def test_fringe_width_values(cfg, expected):
    assert fringe_width(cfg) == pytest.approx(expected, rel=1e-14)


def test_fringe_width_frozen_digits():
    assert fringe_width(ExperimentConfig(1.0, 0.01, 1e-3, 1e3)) == pytest.approx(1.00000158, abs=1e-8)
    assert fringe_width(ExperimentConfig(1.0, 0.1, 0.01, 100.0)) == pytest.approx(1.015791, abs=1e-6)


def test_fringe_width_young_limit_and_scaling():
    cfg = ExperimentConfig(1.0, 0.01, 1e-3, 1e3)
    assert cfg.slit_width_epsilon**2 <= cfg.wavelength * cfg.screen_distance_L / 1000
    assert fringe_width(cfg) == pytest.approx(young_fringe_width(cfg), rel=0.01)
    assert fringe_width(cfg.with_(d=2.0)) == pytest.approx(fringe_width(cfg) / 2, rel=1e-5)


def test_fringe_width_undefined_at_slit_plane(ref):
    with pytest.raises(UndefinedFringeError):
        fringe_width(ref.with_(L=0.0))


@pytest.mark.parametrize("c, r, D, V", [
    (1.0, 0.0, 1.0, 0.0),
    (0.0, 0.7, 0.0, 1.0),
    (0.5, 0.5, 0.25, 0.75),
    (0.6, 0.25, 0.45, 0.55),
])
def test_distinguishability_and_bound(c, r, D, V):
    cfg = ExperimentConfig(presence_c=c, overlap_r=r)
    assert distinguishability(cfg) == pytest.approx(D, abs=1e-15)
    assert visibility_bound(cfg) == pytest.approx(V, abs=1e-15)


def test_bound_plus_distinguishability_identity_grid():
    for c in np.linspace(0, 1, 101):
        for r in np.linspace(0, 1, 101):
            cfg = ExperimentConfig(presence_c=c, overlap_r=r)
            assert abs(visibility_bound(cfg) + distinguishability(cfg) - 1.0) <= 1e-15
            assert 0 <= distinguishability(cfg) <= 1 and 0 <= visibility_bound(cfg) <= 1


@given(st.floats(0, 1), st.floats(0, 0.999))
def test_monotone_in_presence(r, dc):
    lo, hi = ExperimentConfig(presence_c=0.0, overlap_r=r), ExperimentConfig(presence_c=1.0, overlap_r=r)
    mid = ExperimentConfig(presence_c=dc, overlap_r=r)
    assert visibility_bound(lo) >= visibility_bound(mid) >= visibility_bound(hi)
    assert distinguishability(lo) <= distinguishability(mid) <= distinguishability(hi)


def test_local_visibility(ref):
    cfg = ref.with_(c=0.4, overlap_r=0.2)
    vb = visibility_bound(cfg)
    assert analytic_visibility_at(0.0, cfg) == vb
    x1 = 2 * sigma_t_sq(cfg) / cfg.slit_separation_d
    assert analytic_visibility_at(x1, cfg) == pytest.approx(vb / math.cosh(1.0), rel=1e-14)
    assert analytic_visibility_at(1e4, cfg) == pytest.approx(0.0, abs=1e-300)
    xs = np.linspace(0.01, 10, 100)
    assert np.all(analytic_visibility_at(xs, cfg) < vb)


def test_intensity_nonnegative_random():
    for cfg in random_configs(100, seed=3):
        xs = np.linspace(-50, 50, 4001)
        assert np.all(intensity(xs, cfg) >= 0)


def test_peak_spacing_matches_width_when_slits_separated():
    # the 1/cosh contrast profile pulls the off-centre maximum inward by a
    # fraction ~ (4 pi eps^2 / lambda L)^2, so the far-field condition is needed too
    checked = 0
    for cfg in random_configs(200, seed=5, min_ratio=6.0, theta0=True):
        if cfg.slit_width_epsilon**2 > 0.01 * cfg.wavelength * cfg.screen_distance_L:
            continue
        cfg = cfg.with_(c=0.0)
        checked += 1
        assert fringe_peak_spacing(cfg) == pytest.approx(fringe_width(cfg), rel=0.02)
    assert checked >= 10


def test_peak_spacing_shift_grows_in_near_field():
    cfg = ExperimentConfig(1.0, 0.3, 0.01, 100.0)
    assert abs(fringe_peak_spacing(cfg) / fringe_width(cfg) - 1) > 0.02


def test_pattern_samples_default_grid(ref):
    ps = pattern_samples(ref)
    w = fringe_width(ref)
    assert len(ps.xs) == 2001 and ps.xs[0] == -4 * w and ps.xs[-1] == 4 * w
    assert ps.closed_form is not None
    assert pattern_samples(ref.with_(theta=0.5)).closed_form is None
    with pytest.raises(PreconditionError):
        pattern_samples(ref, points=1)


def test_sweep_rows_and_flags(ref):
    rows = duality_sweep([0.0, 1.0], [0.0, 1.0], [0.0, math.pi / 2], template=ref)
    assert len(rows) == 8
    by_key = {(r.c, r.r, r.theta): r for r in rows}
    full = by_key[(1.0, 0.0, 0.0)]
    assert full.D == 1.0 and full.V_measured <= 1e-6
    absent = by_key[(0.0, 0.0, 0.0)]
    assert absent.D == 0.0 and absent.V_measured == pytest.approx(1.0, abs=1e-4)
    useless = by_key[(1.0, 1.0, 0.0)]
    assert useless.D == 0.0 and useless.V_bound == 1.0
    for row in rows:
        assert (BEYOND_DERIVATION_FLAG in row.status) == (row.theta != 0)
        assert row.sum_measured <= 1 + 1e-9
        assert abs(row.sum_bound - 1) <= 1e-12


def test_sweep_flags_failures_without_aborting(ref):
    rows = duality_sweep([0.0, 0.5], [0.0], template=ref.with_(L=0.0))
    assert len(rows) == 2
    assert all(r.status.startswith("error") and math.isnan(r.V_measured) for r in rows)
