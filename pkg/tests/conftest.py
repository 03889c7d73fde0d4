import numpy as np
import pytest

from thermofsi import (
    FluidSurrogate,
    FluidSurrogateConfig,
    Material51CrV4,
    StructureMesh,
    StructureSolver,
)


def make_cooling_pair(stiffness=1.0, elements=20, order=2, cells=10, t0=900.0):
    structure = StructureSolver(StructureMesh(0.02, elements, order), Material51CrV4(), t0)
    fluid = FluidSurrogate(
        FluidSurrogateConfig(length=1e-4, cells=cells, stiffness=stiffness), [t0]
    )
    return fluid, structure


@pytest.fixture
def cooling_pair():
    return make_cooling_pair()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
