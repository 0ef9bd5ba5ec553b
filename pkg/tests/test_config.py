import math
import warnings

import pytest

from whichway import ExperimentConfig
from whichway.exceptions import ConfigError, SlitOverlapWarning


@pytest.mark.parametrize("field, value", [
    ("slit_separation_d", 0.0),
    ("slit_width_epsilon", -1.0),
    ("wavelength", float("nan")),
    ("screen_distance_L", -1.0),
    ("presence_c", 1.5),
    ("overlap_r", -0.1),
    ("overlap_phase_theta", 4.0),
])
def test_rejects_out_of_domain(field, value):
    with pytest.raises(ConfigError) as info:
        ExperimentConfig(**{field: value})
    assert info.value.parameter == field


def test_strong_overlap_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cfg = ExperimentConfig(slit_separation_d=0.3, slit_width_epsilon=0.1)
    assert cfg.strong_overlap
    assert any(issubclass(w.category, SlitOverlapWarning) for w in caught)
    assert not ExperimentConfig().strong_overlap


def test_minus_pi_maps_to_pi():
    assert ExperimentConfig(overlap_phase_theta=-math.pi).overlap_phase_theta == math.pi


def test_json_round_trip():
    cfg = ExperimentConfig(0.7, 0.05, 0.02, 50.0, 0.3, 0.4, 1.1)
    assert ExperimentConfig.from_json_dict(cfg.to_json_dict()) == cfg
    assert ExperimentConfig.from_json_dict({"c": 0.2, "seed": 5}).presence_c == 0.2
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json_dict({"bogus": 1})


def test_with_accepts_short_keys():
    assert ExperimentConfig().with_(c=1, overlap_r=0.5).presence_c == 1.0
