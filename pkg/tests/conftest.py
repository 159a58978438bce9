import sys
from pathlib import Path

import numpy as np
import pytest

from hazardsearch.genotypes import ParamSpec, SearchSpaceSpec
from hazardsearch.oracles import Region, SyntheticRegionOracle

TESTS = Path(__file__).parent
STUB = TESTS / "stub_oracle.py"


def mixed_space(card=3):
    """3 scenario genes + 3 output genes, each half 1 categorical + 2 continuous."""
    return SearchSpaceSpec(
        (ParamSpec.categorical("c0", card), ParamSpec.numeric("a", 0, 1), ParamSpec.numeric("b", 0, 1)),
        custom_mlco_params=(ParamSpec.categorical("c1", card), ParamSpec.numeric("u", 0, 1),
                            ParamSpec.numeric("v", 0, 1)),
    )


def plane_space():
    return SearchSpaceSpec((ParamSpec.numeric("x", 0, 1),),
                           custom_mlco_params=(ParamSpec.numeric("y", 0, 1),))


def small_trajectory_space():
    return SearchSpaceSpec(
        (ParamSpec.categorical("weather", 3), ParamSpec.numeric("speed", 0.0, 30.0)),
        max_trajectories=2, frame_width=80, frame_height=60, class_count=2, duration=10,
    )


def stub_command(mode, *extra):
    return [sys.executable, str(STUB), mode, *map(str, extra)]


@pytest.fixture
def space6():
    return mixed_space()


@pytest.fixture
def region_oracle(space6):
    regions = [Region((0, 0.2, 0.2, 0, 0.2, 0.2), 0.2, 0.5),
               Region((2, 0.8, 0.8, 2, 0.8, 0.8), 0.2, 0.5)]
    return SyntheticRegionOracle(space6, regions, noise_seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
