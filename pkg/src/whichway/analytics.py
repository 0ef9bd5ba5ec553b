"""Closed-form intensity pattern, fringe width, distinguishability and visibility."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .config import ExperimentConfig
from .exceptions import EstimatorError, PreconditionError, UndefinedFringeError
from .model import beta, norm_constant, sigma_t_sq
from .quadrature import support_halfwidth

BEYOND_DERIVATION_FLAG = "beyond-paper-derivation"


def _a_t_sq(config: ExperimentConfig) -> float:
    eps = config.slit_width_epsilon
    return 0.5 / abs(math.sqrt(2.0 * math.pi) * complex(eps, beta(config) / (2.0 * eps)))


def fringe_wavenumber(config: ExperimentConfig) -> float:
    """Spatial angular frequency of the cross term, ``x d beta / (4 eps^4 + beta^2)`` per unit x."""
    b = beta(config)
    return config.slit_separation_d * b / (4.0 * config.slit_width_epsilon**4 + b**2)


def cosh_rate(config: ExperimentConfig) -> float:
    """``d / (2 sigma_t^2)``: argument scale of the cosh envelope factor."""
    return config.slit_separation_d / (2.0 * sigma_t_sq(config))


def _require_theta0(config, what):
    if config.overlap_phase_theta != 0.0:
        raise PreconditionError("overlap_phase_theta", f"{what} requires theta = 0, got {config.overlap_phase_theta}")


def _scalar(a):
    return a[()] if a.ndim == 0 else a


def _logcosh(y):
    y = np.abs(y)
    return y + np.log1p(np.exp(-2.0 * y)) - math.log(2.0)


def envelope(x, config: ExperimentConfig):
    """Non-oscillating part of the pattern, ``(|g+|^2 + |g-|^2) / N^2``.

    Equal to ``2|A_t|^2 exp(-(x^2 + d^2/4) / 2 sigma_t^2) cosh(x d / 2 sigma_t^2) / N^2``.
    """
    x = np.asarray(x, dtype=float)
    s2 = sigma_t_sq(config)
    half_d = config.slit_separation_d / 2.0
    total = np.exp(-((x - half_d) ** 2) / (2 * s2)) + np.exp(-((x + half_d) ** 2) / (2 * s2))
    return _scalar(_a_t_sq(config) * total / norm_constant(config))


def intensity(x, config: ExperimentConfig):
    """Normalised screen density for general overlap phase.

    Evaluated from the real-Gaussian / phase-factor expansion with the
    complex coefficients ``1 - c + c <d1|d2>`` and ``1 - c + c <d2|d1>``.
    """
    x = np.asarray(x, dtype=float)
    c, r, theta = config.presence_c, config.overlap_r, config.overlap_phase_theta
    s2 = sigma_t_sq(config)
    d = config.slit_separation_d
    b = beta(config)
    eps = config.slit_width_epsilon
    coef_12 = 1.0 - c + c * r * np.exp(-1j * theta)  # uses <d1|d2>
    coef_21 = 1.0 - c + c * r * np.exp(1j * theta)  # uses <d2|d1>
    cross_env = np.exp(-(x**2 + d**2 / 4.0) / (2.0 * s2))
    phase = x * d * (b / (2.0 * eps**2)) / (2.0 * s2)
    direct = np.exp(-((x - d / 2) ** 2) / (2.0 * s2)) + np.exp(-((x + d / 2) ** 2) / (2.0 * s2))
    cross = coef_12 * cross_env * np.exp(1j * phase) + coef_21 * cross_env * np.exp(-1j * phase)
    out = _a_t_sq(config) * (direct + cross.real) / norm_constant(config)
    return _scalar(np.maximum(out, 0.0))


def intensity_closed_form_theta0(x, config: ExperimentConfig):
    """The theta = 0 pattern in its Gaussian * cosh * (1 + V cos / cosh) form."""
    _require_theta0(config, "closed-form intensity")
    x = np.asarray(x, dtype=float)
    c, r = config.presence_c, config.overlap_r
    d = config.slit_separation_d
    s2 = sigma_t_sq(config)
    lam_l = config.wavelength * config.screen_distance_L / (2.0 * math.pi)
    y = x * d / (2.0 * s2)
    # exp(-(x^2+d^2/4)/2s2) * cosh(y), combined in log space to avoid inf * 0
    gauss_cosh = np.exp(_logcosh(y) - (x**2 + d**2 / 4.0) / (2.0 * s2))
    fringe = np.cos(x * d * lam_l / (4.0 * config.slit_width_epsilon**4 + lam_l**2))
    out = 2.0 * _a_t_sq(config) * gauss_cosh * (1.0 + (1.0 - c + c * r) * fringe / np.cosh(np.minimum(np.abs(y), 700.0)))
    return _scalar(out / norm_constant(config))


def fringe_width(config: ExperimentConfig) -> float:
    L = config.screen_distance_L
    if L <= 0:
        raise UndefinedFringeError("screen_distance_L", "no far-field fringes at L = 0")
    lam, d, eps = config.wavelength, config.slit_separation_d, config.slit_width_epsilon
    return lam * L / d + 16.0 * math.pi**2 * eps**4 / (lam * d * L)


def young_fringe_width(config: ExperimentConfig) -> float:
    return config.wavelength * config.screen_distance_L / config.slit_separation_d


def distinguishability(config: ExperimentConfig) -> float:
    return config.presence_c * (1.0 - config.overlap_r)


def visibility_bound(config: ExperimentConfig) -> float:
    return 1.0 - config.presence_c + config.presence_c * config.overlap_r


def analytic_visibility_at(x, config: ExperimentConfig):
    """Local fringe contrast ``(1 - c + c r) / cosh(x d / 2 sigma_t^2)``."""
    _require_theta0(config, "analytic visibility")
    y = np.asarray(x, dtype=float) * cosh_rate(config)
    return _scalar(visibility_bound(config) * np.exp(-_logcosh(y)))


def default_range(config: ExperimentConfig) -> tuple[float, float]:
    """``[-4w, 4w]``, or the density support when fringes are undefined."""
    if config.screen_distance_L > 0:
        w = fringe_width(config)
        return -4.0 * w, 4.0 * w
    half = support_halfwidth(config)
    return -half, half


@dataclass(frozen=True)
class PatternSamples:
    xs: np.ndarray
    intensities: np.ndarray
    config: ExperimentConfig
    closed_form: np.ndarray | None = None


def pattern_samples(config: ExperimentConfig, lo=None, hi=None, points: int = 2001) -> PatternSamples:
    if points < 2:
        raise PreconditionError("points", f"need at least 2 points, got {points}")
    if lo is None or hi is None:
        dlo, dhi = default_range(config)
        lo = dlo if lo is None else lo
        hi = dhi if hi is None else hi
    if not lo < hi:
        raise PreconditionError("x-range", f"need lo < hi, got [{lo}, {hi}]")
    xs = np.linspace(lo, hi, points)
    closed = intensity_closed_form_theta0(xs, config) if config.overlap_phase_theta == 0 else None
    return PatternSamples(xs=xs, intensities=intensity(xs, config), config=config, closed_form=closed)


def fringe_peak_spacing(config: ExperimentConfig) -> float:
    """Distance from the central maximum to the next maximum to its right.

    Both maxima are located by golden-section search on the
    envelope-normalised pattern ``intensity / envelope``.
    """
    w = fringe_width(config)

    def neg_normalised(x):
        return -float(intensity(x, config) / envelope(x, config))

    centre = minimize_scalar(neg_normalised, bracket=(-0.25 * w, 0.0, 0.25 * w), method="golden", tol=1e-12)
    nxt = minimize_scalar(neg_normalised, bracket=(0.5 * w, w, 1.5 * w), method="golden", tol=1e-12)
    return float(nxt.x - centre.x)


@dataclass
class DualityRow:
    c: float
    r: float
    theta: float
    D: float
    V_bound: float
    V_measured: float
    sum_bound: float
    sum_measured: float
    status: str = "ok"
    flags: list = field(default_factory=list)


def duality_row(config: ExperimentConfig, points: int = 2001) -> DualityRow:
    from .estimators import estimate_pattern_visibility

    D = distinguishability(config)
    vb = visibility_bound(config)
    flags = [] if config.overlap_phase_theta == 0 else [BEYOND_DERIVATION_FLAG]
    try:
        stats = estimate_pattern_visibility(pattern_samples(config, points=points), estimate_width=False)
        v = stats.visibility
        status = ";".join(flags) or "ok"
    except (EstimatorError, PreconditionError) as exc:
        v = math.nan
        status = f"error: {exc}"
    return DualityRow(
        c=config.presence_c,
        r=config.overlap_r,
        theta=config.overlap_phase_theta,
        D=D,
        V_bound=vb,
        V_measured=v,
        sum_bound=vb + D,
        sum_measured=v + D,
        status=status,
        flags=flags,
    )


def duality_sweep(c_values, r_values, theta_values=(0.0,), template: ExperimentConfig | None = None,
                  points: int = 2001) -> list[DualityRow]:
    """One row per (c, r, theta) triple, in nested input order.

    Estimator failures are recorded in the row's ``status``; the sweep
    never aborts on them.
    """
    template = template or ExperimentConfig()
    rows = []
    for c in c_values:
        for r in r_values:
            for theta in theta_values:
                cfg = template.with_(presence_c=c, overlap_r=r, overlap_phase_theta=theta)
                rows.append(duality_row(cfg, points=points))
    return rows
