"""Experiment parameters for the two-slit setup with a quantum which-way detector."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace

from .exceptions import ConfigError, SlitOverlapWarning

# Short keys used in JSON config files and CLI manifests.
JSON_KEYS = {
    "slit_separation_d": "d",
    "slit_width_epsilon": "epsilon",
    "wavelength": "wavelength",
    "screen_distance_L": "L",
    "presence_c": "c",
    "overlap_r": "overlap_r",
    "overlap_phase_theta": "theta",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Physical parameters of one experiment.

    Lengths share one arbitrary unit. ``presence_c`` is the probability that
    the detector sits in front of slit A, ``overlap_r`` and
    ``overlap_phase_theta`` give ``<d2|d1> = r exp(i theta)``.
    """

    slit_separation_d: float = 1.0
    slit_width_epsilon: float = 0.1
    wavelength: float = 0.01
    screen_distance_L: float = 100.0
    presence_c: float = 0.0
    overlap_r: float = 0.0
    overlap_phase_theta: float = 0.0

    def __post_init__(self):
        for name in ("slit_separation_d", "slit_width_epsilon", "wavelength"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(name, f"must be a positive finite length, got {value!r}")
        L = float(self.screen_distance_L)
        if not (math.isfinite(L) and L >= 0):
            raise ConfigError("screen_distance_L", f"must be finite and >= 0, got {L!r}")
        for name in ("presence_c", "overlap_r"):
            value = float(getattr(self, name))
            if not 0.0 <= value <= 1.0:
                raise ConfigError(name, f"must lie in [0, 1], got {value!r}")
        theta = float(self.overlap_phase_theta)
        if not -math.pi <= theta <= math.pi:
            raise ConfigError("overlap_phase_theta", f"must lie in (-pi, pi], got {theta!r}")
        if theta == -math.pi:
            theta = math.pi
        # normalise ints/np scalars to plain floats so equality and JSON are stable
        for f in JSON_KEYS:
            object.__setattr__(self, f, float(getattr(self, f)))
        object.__setattr__(self, "overlap_phase_theta", theta)
        if self.strong_overlap:
            warnings.warn(
                f"d={self.slit_separation_d} < 4*epsilon={4 * self.slit_width_epsilon}: "
                "slit modes overlap strongly",
                SlitOverlapWarning,
                stacklevel=3,
            )

    @property
    def strong_overlap(self) -> bool:
        return self.slit_separation_d < 4.0 * self.slit_width_epsilon

    def with_(self, **changes) -> "ExperimentConfig":
        """Copy with some fields replaced (short JSON keys accepted)."""
        long_names = {v: k for k, v in JSON_KEYS.items()}
        return replace(self, **{long_names.get(k, k): v for k, v in changes.items()})

    def to_json_dict(self) -> dict:
        return {JSON_KEYS[k]: v for k, v in asdict(self).items()}

    @classmethod
    def from_json_dict(cls, data: dict) -> "ExperimentConfig":
        long_names = {v: k for k, v in JSON_KEYS.items()}
        kwargs = {}
        for key, value in data.items():
            if key in long_names:
                kwargs[long_names[key]] = float(value)
            elif key in JSON_KEYS:
                kwargs[key] = float(value)
            elif key != "seed":
                raise ConfigError(key, "unknown configuration key")
        return cls(**kwargs)


REFERENCE_CONFIG = ExperimentConfig()
