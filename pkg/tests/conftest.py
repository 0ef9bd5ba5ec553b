import math
import warnings

import numpy as np
import pytest
from hypothesis import strategies as st

from whichway import ExperimentConfig
from whichway.exceptions import SlitOverlapWarning

warnings.simplefilter("ignore", SlitOverlapWarning)


@pytest.fixture
def ref():
    return ExperimentConfig(1.0, 0.1, 0.01, 100.0)


def random_configs(n, seed, L=None, min_ratio=None, theta0=False):
    """Configurations drawn over a moderate parameter box."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        d = rng.uniform(0.3, 3.0)
        eps = rng.uniform(0.03, 0.5)
        if min_ratio is not None and d < min_ratio * eps:
            continue
        out.append(ExperimentConfig(
            slit_separation_d=d,
            slit_width_epsilon=eps,
            wavelength=rng.uniform(0.002, 0.05),
            screen_distance_L=rng.uniform(20.0, 200.0) if L is None else L,
            presence_c=rng.uniform(0, 1),
            overlap_r=rng.uniform(0, 1),
            overlap_phase_theta=0.0 if theta0 else rng.uniform(-math.pi, math.pi),
        ))
    return out


configs = st.builds(
    ExperimentConfig,
    slit_separation_d=st.floats(0.3, 3.0),
    slit_width_epsilon=st.floats(0.03, 0.5),
    wavelength=st.floats(0.002, 0.05),
    screen_distance_L=st.one_of(st.just(0.0), st.floats(1.0, 200.0)),
    presence_c=st.floats(0.0, 1.0),
    overlap_r=st.floats(0.0, 1.0),
    overlap_phase_theta=st.floats(-math.pi, math.pi),
)
