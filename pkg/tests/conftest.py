"""Shared systems for the test suite."""

from pathlib import Path
from typing import NamedTuple

import pytest

from rpf_cocycle.potential import Potential, validate_potential, zero_potential
from rpf_cocycle.symbolic import CodeSpec, Sft, validate_code, validate_sft

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"

LOG2 = 0.6931471805599453
LOG_GOLDEN = 0.48121182505960347


class System(NamedTuple):
    sft: Sft
    code: CodeSpec
    potential: Potential


def golden_mean_sft() -> Sft:
    return validate_sft(["g0", "g1"], [("g0", "g0"), ("g0", "g1"), ("g1", "g0")])


def make_golden_collapse() -> System:
    sft = golden_mean_sft()
    return System(sft, validate_code(sft, {"g0": "*", "g1": "*"}), zero_potential(sft))


def make_identity(phi0: float = 0.2, phi1: float = -0.5) -> System:
    sft = golden_mean_sft()
    code = validate_code(sft, {"g0": "0", "g1": "1"})
    return System(sft, code, validate_potential(sft, 1, {"g0": phi0, "g1": phi1}))


def make_pairing() -> System:
    names = ["p0", "p1", "p2", "p3"]
    sft = validate_sft(names, [(c, r) for c in names for r in names])
    code = validate_code(sft, {"p0": "0", "p1": "0", "p2": "1", "p3": "1"})
    return System(sft, code, zero_potential(sft))


def make_phase(alpha: float = 0.3, gamma: float = -0.1) -> System:
    sft = validate_sft(["a", "b"], [("a", "b"), ("b", "a")])
    code = validate_code(sft, {"a": "z", "b": "z"})
    return System(sft, code, validate_potential(sft, 1, {"a": alpha, "b": gamma}))


def make_run_choice() -> System:
    pairs = [("r0", "r0"), ("r0", "r2"), ("r1", "r1"), ("r1", "r2"), ("r2", "r0"), ("r2", "r1"), ("r2", "r2")]
    sft = validate_sft(["r0", "r1", "r2"], pairs)
    code = validate_code(sft, {"r0": "a", "r1": "a", "r2": "b"})
    return System(sft, code, zero_potential(sft))


def make_phase_pairing() -> System:
    a_side = [f"a{i}" for i in range(4)]
    b_side = [f"b{i}" for i in range(4)]
    pairs = [(x, y) for x in a_side for y in b_side] + [(y, x) for y in b_side for x in a_side]
    sft = validate_sft(a_side + b_side, pairs)
    rho = {name: ("0" if name[1] in "01" else "1") for name in a_side + b_side}
    code = validate_code(sft, rho, ["0", "1"])
    return System(sft, code, zero_potential(sft))


@pytest.fixture
def golden_collapse() -> System:
    return make_golden_collapse()


@pytest.fixture
def identity_system() -> System:
    return make_identity()


@pytest.fixture
def pairing() -> System:
    return make_pairing()


@pytest.fixture
def phase() -> System:
    return make_phase()


@pytest.fixture
def run_choice() -> System:
    return make_run_choice()


@pytest.fixture
def phase_pairing() -> System:
    return make_phase_pairing()


ALL_SYSTEMS = {
    "golden_collapse": make_golden_collapse,
    "identity": make_identity,
    "pairing": make_pairing,
    "phase": make_phase,
    "run_choice": make_run_choice,
    "phase_pairing": make_phase_pairing,
}


@pytest.fixture(params=sorted(ALL_SYSTEMS))
def any_system(request) -> System:
    return ALL_SYSTEMS[request.param]()


@pytest.fixture
def config_dir() -> Path:
    return CONFIG_DIR
