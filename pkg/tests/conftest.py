from pathlib import Path

import pytest

from dirsens.engine import AnalysisConfig, clear_record_callbacks
from dirsens.expressions import parse_problem
from dirsens.geometry import GeneratorCone, Polyhedron, SequenceSchedule
from dirsens.multipliers import LocalModel

DATA = Path(__file__).parent / "data"


def load(name: str):
    return parse_problem((DATA / f"{name}.dsp").read_text(encoding="utf-8"))


@pytest.fixture(autouse=True)
def _reset_callbacks():
    yield
    clear_record_callbacks()


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def schedule() -> SequenceSchedule:
    return SequenceSchedule(K=12)


@pytest.fixture
def config() -> AnalysisConfig:
    return AnalysisConfig(seed=7)


@pytest.fixture
def cubic():
    return load("cubic")


@pytest.fixture
def danskin():
    return load("danskin")


@pytest.fixture
def unconstrained():
    return load("unconstrained")


@pytest.fixture
def jump():
    return load("jump")


@pytest.fixture
def mfcq():
    return load("mfcq")


@pytest.fixture
def degenerate():
    return load("degenerate")


@pytest.fixture
def additive():
    return load("additive")


@pytest.fixture
def lp():
    return load("lp")


@pytest.fixture
def cube_root_model() -> LocalModel:
    # min y at (0, 0) with tangent cone {0} x R and normal cone spanned by (1, 0)
    return LocalModel.from_arrays(
        x=[0.0],
        y=[0.0],
        grad_x=[0.0],
        grad_y=[1.0],
        J_x=[[1.0], [0.0]],
        J_y=[[0.0], [1.0]],
        tangent=Polyhedron(2, E=[[1.0, 0.0]], f=[0.0]),
        normal=GeneratorCone(2, rays=[[1.0, 0.0]]),
    )
