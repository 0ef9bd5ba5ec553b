"""Composite Gauss-Legendre quadrature on uniform panels (vectorised)."""

from __future__ import annotations

import math

import numpy as np

from .config import ExperimentConfig
from .model import beta, sigma_t


def _panel_nodes(edges, order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    xs = 0.5 * (hi + lo) + half * nodes[None, :]
    return xs, half * weights[None, :]


def integrate_panels(f, edges, order=16, subpanels=1):
    """Integral of ``f`` over each interval ``[edges[i], edges[i+1]]``.

    ``f`` must accept a 2-D array of abscissae. Each interval is split into
    ``subpanels`` equal pieces.
    """
    edges = np.asarray(edges, dtype=float)
    if subpanels > 1:
        t = np.linspace(0.0, 1.0, subpanels + 1)
        fine = (edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * t[None, :])
        fine_edges = np.concatenate([fine[:, :-1].ravel(), edges[-1:]])
        per_fine = integrate_panels(f, fine_edges, order=order)
        return per_fine.reshape(len(edges) - 1, subpanels).sum(axis=1)
    xs, ws = _panel_nodes(edges, order)
    return np.sum(np.asarray(f(xs)) * ws, axis=1)


def structure_scale(config: ExperimentConfig) -> float:
    """Smallest length over which the pattern changes appreciably."""
    if config.screen_distance_L == 0:
        return config.slit_width_epsilon
    eps = config.slit_width_epsilon
    b = beta(config)
    width = 2.0 * math.pi * (4.0 * eps**4 + b**2) / (config.slit_separation_d * b)
    return min(sigma_t(config), width / 2.0)


def support_halfwidth(config: ExperimentConfig, n_sigma: float = 8.0) -> float:
    return config.slit_separation_d / 2.0 + n_sigma * sigma_t(config)


def integrate_density(f, config: ExperimentConfig, n_sigma: float = 8.0, order: int = 16) -> float:
    """Integral of ``f`` over ``|x| <= d/2 + n_sigma * sigma_t``."""
    half = support_halfwidth(config, n_sigma)
    n_panels = max(64, int(math.ceil(2.0 * half / (structure_scale(config) / 2.0))))
    edges = np.linspace(-half, half, n_panels + 1)
    return float(integrate_panels(f, edges, order=order).sum())
