"""Entangled particle-detector-location state and its free evolution.

The detector lives in a fixed orthonormal frame where ``d2 = (1, 0)`` and
``d1 = (r e^{i theta}, sqrt(1 - r^2))``, so ``<d2|d1> = r e^{i theta}``.
The location ancilla has basis states Y (detector in front of slit A) and
N (detector away). Slit A is centred at ``+d/2``, slit B at ``-d/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig

# Real parts of the Gaussian exponent below this give an exact zero amplitude.
UNDERFLOW_EXPONENT = -700.0


def beta(config: ExperimentConfig) -> float:
    """hbar t / m expressed through wavelength and screen distance."""
    return config.wavelength * config.screen_distance_L / (2.0 * math.pi)


def sigma_t_sq(config: ExperimentConfig) -> float:
    eps = config.slit_width_epsilon
    return eps**2 + (beta(config) / (2.0 * eps)) ** 2


def sigma_t(config: ExperimentConfig) -> float:
    """Width of each evolved single-slit intensity profile."""
    return math.sqrt(sigma_t_sq(config))


@dataclass(frozen=True)
class PropagationState:
    beta: float
    sigma_t_sq: float
    complex_width: complex
    a_t: complex


def propagation_state(config: ExperimentConfig) -> PropagationState:
    eps = config.slit_width_epsilon
    b = beta(config)
    # principal branch; Re > 0 so no cut is crossed
    a_t = 1.0 / (math.sqrt(2.0) * np.sqrt(math.sqrt(2.0 * math.pi) * complex(eps, b / (2.0 * eps))))
    return PropagationState(
        beta=b,
        sigma_t_sq=sigma_t_sq(config),
        complex_width=complex(4.0 * eps**2, 2.0 * b),
        a_t=complex(a_t),
    )


@dataclass(frozen=True)
class DetectorQubit:
    d1: np.ndarray
    d2: np.ndarray

    @property
    def overlap(self) -> complex:
        """<d2|d1>."""
        return complex(np.vdot(self.d2, self.d1))


def detector_qubit(config: ExperimentConfig) -> DetectorQubit:
    r, theta = config.overlap_r, config.overlap_phase_theta
    d1 = np.array([r * np.exp(1j * theta), math.sqrt(max(0.0, 1.0 - r * r))], dtype=complex)
    d2 = np.array([1.0, 0.0], dtype=complex)
    return DetectorQubit(d1=d1, d2=d2)


def _sign(sign) -> float:
    if sign in (1, "+", "plus"):
        return 1.0
    if sign in (-1, "-", "minus"):
        return -1.0
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def gaussian_mode(x, sign, config: ExperimentConfig, state: PropagationState | None = None):
    """Evolved single-slit amplitude g_{+/-}(x), chirp phase included.

    ``sign='+'`` is slit A at ``+d/2``. Accepts scalars or arrays.
    """
    state = state or propagation_state(config)
    centre = _sign(sign) * config.slit_separation_d / 2.0
    x = np.asarray(x, dtype=float)
    exponent = -((x - centre) ** 2) / state.complex_width
    out = state.a_t * np.exp(np.where(exponent.real < UNDERFLOW_EXPONENT, 0.0, exponent))
    out = np.where(exponent.real < UNDERFLOW_EXPONENT, 0.0, out)
    return out[()] if out.ndim == 0 else out


def norm_constant(config: ExperimentConfig) -> float:
    """Exact squared norm N^2 of the unnormalised joint state.

    Includes the inter-slit overlap term, which does not depend on L.
    """
    c, r, theta = config.presence_c, config.overlap_r, config.overlap_phase_theta
    d, eps = config.slit_separation_d, config.slit_width_epsilon
    return 1.0 + (1.0 - c + c * r * math.cos(theta)) * math.exp(-(d**2) / (8.0 * eps**2))


@dataclass(frozen=True)
class JointAmplitudes:
    """Branch amplitudes at screen position(s) x.

    ``amp_Y_1`` is (location Y, detector frame state 1), ``amp_Y_0`` is
    (Y, frame 0), ``amp_N_0`` is (N, frame 0). The (N, frame 1) branch is
    identically zero. Amplitudes are unnormalised; ``norm_sq`` is N^2.
    """

    x: np.ndarray
    amp_Y_1: np.ndarray
    amp_Y_0: np.ndarray
    amp_N_0: np.ndarray
    norm_sq: float

    @property
    def branch_weights(self):
        """Unnormalised |amplitude|^2 for (Y1, Y0, N0)."""
        return np.abs(self.amp_Y_1) ** 2, np.abs(self.amp_Y_0) ** 2, np.abs(self.amp_N_0) ** 2

    @property
    def density(self):
        y1, y0, n0 = self.branch_weights
        return (y1 + y0 + n0) / self.norm_sq


def joint_amplitudes(x, config: ExperimentConfig) -> JointAmplitudes:
    state = propagation_state(config)
    g_plus = gaussian_mode(x, "+", config, state)
    g_minus = gaussian_mode(x, "-", config, state)
    qubit = detector_qubit(config)
    sc = math.sqrt(config.presence_c)
    sn = math.sqrt(1.0 - config.presence_c)
    # slit A correlates with d1, slit B with d2; project onto frame components
    amp_Y_0 = sc * (qubit.d1[0] * g_plus + qubit.d2[0] * g_minus)
    amp_Y_1 = sc * (qubit.d1[1] * g_plus + qubit.d2[1] * g_minus)
    amp_N_0 = sn * (g_plus + g_minus)
    return JointAmplitudes(
        x=np.asarray(x, dtype=float),
        amp_Y_1=amp_Y_1,
        amp_Y_0=amp_Y_0,
        amp_N_0=amp_N_0,
        norm_sq=norm_constant(config),
    )


def location_y_probability(config: ExperimentConfig) -> float:
    """Total probability of the Y location outcome, overlap correction included."""
    c, r, theta = config.presence_c, config.overlap_r, config.overlap_phase_theta
    d, eps = config.slit_separation_d, config.slit_width_epsilon
    return c * (1.0 + r * math.cos(theta) * math.exp(-(d**2) / (8.0 * eps**2))) / norm_constant(config)
