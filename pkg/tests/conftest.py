import numpy as np
import pytest

from mmwave_rrm.beamforming import beam_align, build_codebook, effective_channels
from mmwave_rrm.channel import draw_realization
from mmwave_rrm.harness import ExperimentConfig
from mmwave_rrm.link import McsTable


@pytest.fixture(scope="session")
def tbl():
    return McsTable.default()


@pytest.fixture(scope="session")
def budget():
    return ExperimentConfig().budget


def make_setup(num_ues, seed=1, num_pairs=1, bs_beams=32, ue_beams=4):
    real = draw_realization(seed, num_ues)
    ba = beam_align(real, build_codebook(128, bs_beams), build_codebook(16, ue_beams), num_pairs)
    return real, ba, effective_channels(real, ba)


@pytest.fixture(scope="session")
def setup6():
    return make_setup(6, seed=3)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def random_complex(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


# One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES = {}


def report_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
