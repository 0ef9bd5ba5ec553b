"""Fringe statistics from event lists or sampled patterns.

Visibility is extracted by dividing the data by the known envelope and
least-squares fitting ``a * (1 + V cos(k x + phi) / cosh(x d / 2 sigma_t^2))``
over ``|x| <= 2 w``. With ``k`` fixed the model is linear in
``(a, a V cos phi, -a V sin phi)``; the ``1 / cosh`` factor is the local
contrast loss away from the centre, so ``V`` is the central (x = 0) contrast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_config, check_positions
from .analytics import (
    PatternSamples,
    cosh_rate,
    distinguishability,
    envelope,
    fringe_wavenumber,
    fringe_width,
    visibility_bound,
)
from .config import ExperimentConfig
from .exceptions import DegenerateFitError, InsufficientSpanError, PreconditionError
from .model import location_y_probability
from .quadrature import integrate_panels
from .sampler import Basis, EventTable, LocationOutcome

DEFAULT_BINS = 200
WINDOW_FRINGES = 2.0
# below this contrast the fringe phase and free-k width are reported as undefined
PHASE_MIN_VISIBILITY = 0.05
CLAMP_TOLERANCE = 1e-9
MIN_WINDOW_EVENTS = 20


@dataclass(frozen=True)
class Histogram:
    lo: float
    hi: float
    bin_count: int
    counts: np.ndarray
    underflow: int = 0
    overflow: int = 0

    @property
    def edges(self):
        return np.linspace(self.lo, self.hi, self.bin_count + 1)

    @property
    def centers(self):
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    @property
    def width(self):
        return (self.hi - self.lo) / self.bin_count

    @property
    def n_in_range(self):
        return int(self.counts.sum())

    @property
    def n_total(self):
        return self.n_in_range + self.underflow + self.overflow


def histogram(xs, lo: float, hi: float, bin_count: int = DEFAULT_BINS) -> Histogram:
    """Bins are ``[e_i, e_{i+1})`` except the last, which is closed."""
    if not lo < hi:
        raise PreconditionError("lo/hi", f"need lo < hi, got [{lo}, {hi}]")
    if bin_count < 2:
        raise PreconditionError("bin_count", f"need at least 2 bins, got {bin_count}")
    xs = check_positions(xs)
    edges = np.linspace(lo, hi, bin_count + 1)
    idx = np.searchsorted(edges, xs, side="right") - 1
    idx[xs == hi] = bin_count - 1
    inside = (idx >= 0) & (idx < bin_count)
    counts = np.bincount(idx[inside], minlength=bin_count).astype(np.int64)
    return Histogram(
        lo=float(lo),
        hi=float(hi),
        bin_count=int(bin_count),
        counts=counts,
        underflow=int(np.sum(xs < lo)),
        overflow=int(np.sum(xs > hi)),
    )


def default_histogram(xs, config: ExperimentConfig, bin_count: int = DEFAULT_BINS) -> Histogram:
    """Histogram over ``[-4w, 4w]``."""
    w = fringe_width(config)
    return histogram(xs, -4.0 * w, 4.0 * w, bin_count)


@dataclass(frozen=True)
class FringeStats:
    visibility: float
    phase: float
    fringe_width_est: float
    fit_rms: float
    n_events: int
    raw_visibility: float = math.nan
    clamped: bool = False
    phase_defined: bool = True


# -------------------------------------------------------------- fit kernel

def _sech(y):
    return 1.0 / np.cosh(np.minimum(np.abs(y), 700.0))


def _linear_fit(y, design, sqrt_w):
    coef, *_ = np.linalg.lstsq(design * sqrt_w[:, None], y * sqrt_w, rcond=None)
    return coef


def _free_k_width(xc, y, sqrt_w, coef, k0, b):
    def resid(p):
        a, bc, bs, k = p
        return sqrt_w * (y - (a + (bc * np.cos(k * xc) + bs * np.sin(k * xc)) * _sech(b * xc)))

    res = least_squares(resid, x0=[*coef, k0], bounds=([-np.inf] * 3 + [0.5 * k0], [np.inf] * 3 + [1.5 * k0]),
                        x_scale="jac", xtol=1e-12, ftol=1e-12)
    return 2.0 * math.pi / res.x[3]


def _finish(coef, y, design, sqrt_w, xc, k, b, n_events, estimate_width):
    a, bc, bs = coef
    if not a > 0:
        raise DegenerateFitError(f"fitted fringe baseline {a!r} is not positive")
    raw = float(math.hypot(bc, bs) / a)
    phase = math.atan2(-bs, bc)
    resid = y - design @ coef
    rms = float(np.sqrt(np.mean(resid**2)) / a)
    phase_defined = raw >= PHASE_MIN_VISIBILITY
    width = math.nan
    if estimate_width and phase_defined:
        width = _free_k_width(xc, y, sqrt_w, coef, k, b)
    return FringeStats(
        visibility=float(min(max(raw, 0.0), 1.0)),
        phase=float(phase),
        fringe_width_est=float(width),
        fit_rms=rms,
        n_events=int(n_events),
        raw_visibility=float(raw),
        clamped=bool(raw > 1.0 + CLAMP_TOLERANCE),
        phase_defined=bool(phase_defined),
    )


def _check_span(lo, hi, w):
    if lo > -1.5 * w or hi < 1.5 * w:
        raise InsufficientSpanError(f"data range [{lo}, {hi}] must cover at least [-1.5w, 1.5w] with w = {w}")


def _fit_histogram(hist: Histogram, config: ExperimentConfig, window: float, estimate_width: bool) -> FringeStats:
    w = fringe_width(config)
    _check_span(hist.lo, hist.hi, w)
    k, b = fringe_wavenumber(config), cosh_rate(config)
    centers = hist.centers
    sel = np.abs(centers) <= window * w
    edges = hist.edges
    sub_edges = np.concatenate([edges[:-1][sel], edges[1:][sel][-1:]]) if sel.any() else edges[:1]
    if sel.sum() < 5:
        raise InsufficientSpanError(f"only {int(sel.sum())} bins inside the fit window")
    counts = hist.counts[sel].astype(float)
    if counts.sum() < MIN_WINDOW_EVENTS:
        raise DegenerateFitError(f"only {int(counts.sum())} events inside the fit window")
    # bin-integrated envelope and fringe basis: no finite-bin contrast loss
    i0 = integrate_panels(lambda x: envelope(x, config), sub_edges, order=8)
    ic = integrate_panels(lambda x: envelope(x, config) * _sech(b * x) * np.cos(k * x), sub_edges, order=8)
    is_ = integrate_panels(lambda x: envelope(x, config) * _sech(b * x) * np.sin(k * x), sub_edges, order=8)
    if not np.all(i0 > 0):
        raise DegenerateFitError("envelope vanishes inside the fit window")
    y = counts / i0
    design = np.column_stack([np.ones_like(y), ic / i0, is_ / i0])
    sqrt_w = i0 / np.sqrt(np.maximum(counts, 1.0))
    sqrt_w = sqrt_w / sqrt_w.max()
    coef = _linear_fit(y, design, sqrt_w)
    return _finish(coef, y, design, sqrt_w, centers[sel], k, b, hist.n_total, estimate_width)


def _fit_pattern(xs, values, config: ExperimentConfig, window: float, estimate_width: bool) -> FringeStats:
    xs = check_positions(xs, allow_empty=False)
    values = np.asarray(values, dtype=float)
    w = fringe_width(config)
    _check_span(xs.min(), xs.max(), w)
    k, b = fringe_wavenumber(config), cosh_rate(config)
    sel = np.abs(xs) <= window * w
    if sel.sum() < 5:
        raise InsufficientSpanError(f"only {int(sel.sum())} samples inside the fit window")
    xc = xs[sel]
    env = envelope(xc, config)
    if not np.all(env > 1e-300):
        raise DegenerateFitError("envelope vanishes inside the fit window")
    y = values[sel] / env
    sech = _sech(b * xc)
    design = np.column_stack([np.ones_like(xc), np.cos(k * xc) * sech, np.sin(k * xc) * sech])
    sqrt_w = np.ones_like(xc)
    coef = _linear_fit(y, design, sqrt_w)
    return _finish(coef, y, design, sqrt_w, xc, k, b, 0, estimate_width)


# ---------------------------------------------------------- estimator API

class FringeFitter(BaseEstimator):
    """Envelope-normalised fringe fit for a known experiment configuration.

    Parameters
    ----------
    config : ExperimentConfig
        Supplies the envelope, the cosh contrast profile and the fixed
        fringe wavenumber.
    bins : int
        Histogram bins over ``[-4w, 4w]`` when fitting raw positions.
    window : float
        Half-width of the fit window in fringe widths.
    estimate_width : bool
        Also run the secondary fit with the wavenumber free.

    Attributes
    ----------
    visibility_, phase_, fringe_width_, fit_rms_, n_events_ : fitted values
    stats_ : FringeStats
    """

    def __init__(self, config=None, bins=DEFAULT_BINS, window=WINDOW_FRINGES, estimate_width=True):
        self.config = config
        self.bins = bins
        self.window = window
        self.estimate_width = estimate_width

    def _config(self):
        return check_config(self.config if self.config is not None else ExperimentConfig())

    def _store(self, stats):
        self.stats_ = stats
        self.visibility_ = stats.visibility
        self.phase_ = stats.phase
        self.fringe_width_ = stats.fringe_width_est
        self.fit_rms_ = stats.fit_rms
        self.n_events_ = stats.n_events
        return self

    def fit(self, X, y=None):
        """Fit detected positions ``X`` (1-D or a single column)."""
        cfg = self._config()
        self.histogram_ = default_histogram(check_positions(X), cfg, self.bins)
        return self._store(_fit_histogram(self.histogram_, cfg, self.window, self.estimate_width))

    def fit_histogram(self, hist: Histogram):
        self.histogram_ = hist
        return self._store(_fit_histogram(hist, self._config(), self.window, self.estimate_width))

    def fit_pattern(self, xs, values):
        """Fit a noiseless density sampled at ``xs`` (uniform weights)."""
        return self._store(_fit_pattern(xs, values, self._config(), self.window, self.estimate_width))

    def predict(self, X):
        """Fitted density shape at ``X`` (arbitrary overall scale)."""
        check_is_fitted(self, "stats_")
        cfg = self._config()
        x = check_positions(X)
        s = self.stats_
        fringe = np.cos(fringe_wavenumber(cfg) * x + s.phase) * _sech(cosh_rate(cfg) * x)
        return envelope(x, cfg) * (1.0 + s.raw_visibility * fringe)


def estimate_visibility(hist: Histogram, config: ExperimentConfig, estimate_width: bool = True) -> FringeStats:
    return FringeFitter(config, estimate_width=estimate_width).fit_histogram(hist).stats_


def estimate_pattern_visibility(pattern: PatternSamples, estimate_width: bool = True) -> FringeStats:
    fitter = FringeFitter(pattern.config, estimate_width=estimate_width)
    return fitter.fit_pattern(pattern.xs, pattern.intensities).stats_


def wrap_angle(a: float) -> float:
    """Wrap to ``(-pi, pi]``."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w == -math.pi else w


def phase_shift(a: FringeStats, b: FringeStats) -> float:
    return wrap_angle(a.phase - b.phase)


def angular_distance(a: float, b: float) -> float:
    return abs(wrap_angle(a - b))


# ----------------------------------------------------------- duality report

@dataclass
class DualityReport:
    D_analytic: float
    V_bound: float
    V_per_subensemble: dict
    Y_fraction: float
    Y_fraction_expected: float
    c: float
    sum_check: float
    n_events: int
    flags: list = field(default_factory=list)

    def to_json_dict(self):
        return {
            "D_analytic": self.D_analytic,
            "V_bound": self.V_bound,
            "V_per_subensemble": {k: (None if v is None else v) for k, v in self.V_per_subensemble.items()},
            "Y_fraction": self.Y_fraction,
            "Y_fraction_expected": self.Y_fraction_expected,
            "c": self.c,
            "sum_check": self.sum_check,
            "n_events": self.n_events,
            "flags": list(self.flags),
        }


def duality_report(events: EventTable, config: ExperimentConfig, bin_count: int = DEFAULT_BINS) -> DualityReport:
    """Which-way/interference bookkeeping for a location-sorted run.

    Only the N subensemble (no which-way information) is expected to carry
    fringes; the Y subensemble is fitted too for comparison.
    """
    table = events if isinstance(events, EventTable) else EventTable.from_events(events)
    allowed = (Basis.LOCATION, Basis.LOCATION_THEN_WHICH_WAY)
    if len(table) == 0 or not np.all(np.isin(table.basis, [int(b) for b in allowed])):
        raise PreconditionError("events", "duality report needs a non-empty Location or LocationThenWhichWay run")
    flags = []
    visibilities = {}
    for outcome in (LocationOutcome.N, LocationOutcome.Y):
        xs = table.x[table.location == outcome]
        if len(xs) == 0:
            flags.append(f"empty-subensemble:{outcome.label}")
            visibilities[outcome.label] = None
            continue
        try:
            stats = estimate_visibility(default_histogram(xs, config, bin_count), config, estimate_width=False)
            visibilities[outcome.label] = stats.visibility
        except (DegenerateFitError, InsufficientSpanError) as exc:
            flags.append(f"fit-failed:{outcome.label}:{exc}")
            visibilities[outcome.label] = None
    D = distinguishability(config)
    vb = visibility_bound(config)
    return DualityReport(
        D_analytic=D,
        V_bound=vb,
        V_per_subensemble=visibilities,
        Y_fraction=float(np.mean(table.location == LocationOutcome.Y)),
        Y_fraction_expected=location_y_probability(config),
        c=config.presence_c,
        sum_check=vb + D,
        n_events=len(table),
        flags=flags,
    )


def bin_probabilities(density, edges, subpanels: int = 4) -> np.ndarray:
    """Probability mass of ``density`` in each bin by composite quadrature."""
    return integrate_panels(density, edges, order=16, subpanels=subpanels)


def total_variation(hist: Histogram, probabilities) -> float:
    """TV distance between the empirical bin frequencies and ``probabilities``.

    Out-of-range events are compared against the mass outside the bins.
    """
    p = np.asarray(probabilities, dtype=float)
    n = hist.n_total
    emp = hist.counts / n
    outside_emp = (hist.underflow + hist.overflow) / n
    outside_p = max(0.0, 1.0 - p.sum())
    return 0.5 * (np.abs(emp - p).sum() + abs(outside_emp - outside_p))
