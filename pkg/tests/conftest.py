import numpy as np
import pytest

from helmholtz_control.analysis import NoiseSpec
from helmholtz_control.config import ExperimentConfig, RegionSpec
from helmholtz_control.geometry import SectorRegion, SourceSpec
from helmholtz_control.propagator import PropagatorConfig
from helmholtz_control.solver import TargetField

PI = np.pi

# criterion number -> PASS/FAIL line, filled by the acceptance suite
ACCEPTANCE: dict[int, str] = {}


def small_two_region(L=8, n_points=300, target_dir=(-1.0, 0.0, 0.0), seed=0, k=10.0):
    """Two small sectors at desk scale, cheap enough for unit tests."""
    d1 = SectorRegion((0.011, 0.015), (-PI / 4, PI / 4), ((3 * PI / 4, 5 * PI / 4),))
    d2 = SectorRegion((0.011, 0.015), (-PI / 4, PI / 4), ((7 * PI / 4, 2 * PI), (0.0, PI / 4)),
                      (0.09, 0.0, 0.0))
    return ExperimentConfig(
        name="small",
        source=SourceSpec(),
        regions=(RegionSpec("D1", d1, TargetField("plane_wave", target_dir, 1.0, k), n_points),
                 RegionSpec("D2", d2, TargetField.zero(), n_points)),
        propagator=PropagatorConfig(k=k, L=L),
        noise=NoiseSpec(1e-3, seed),
        orders=(4, L),
    )


@pytest.fixture
def small_config():
    return small_two_region()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria (slow)")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
