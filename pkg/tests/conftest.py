import math

import pytest

from spdccomp.config import load_preset
from spdccomp.materials import get_material
from spdccomp.spatialphase import compensator_plate

_ACCEPTANCE = []


def record(number, passed, detail):
    """Store one acceptance line; printed in the terminal summary."""
    _ACCEPTANCE.append((number, passed, detail))
    return passed


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def bbo():
    return get_material("BBO")


@pytest.fixture(scope="session")
def bibo():
    return get_material("BiBO")


@pytest.fixture(scope="session")
def quartz():
    return get_material("quartz")


def _preset(name):
    return load_preset(name).build()


@pytest.fixture(scope="session")
def bibo_deg():
    """Diode BiBO degenerate source with its 245 um BBO compensators, no precompensator."""
    return _preset("diode-bibo-degenerate")


@pytest.fixture(scope="session")
def bibo_nondeg():
    return _preset("diode-bibo-nondegenerate")


@pytest.fixture(scope="session")
def bbo_fast():
    return _preset("ultrafast-bbo")


@pytest.fixture(scope="session")
def all_presets(bibo_deg, bibo_nondeg, bbo_fast):
    return {"diode-bibo-degenerate": bibo_deg, "diode-bibo-nondegenerate": bibo_nondeg, "ultrafast-bbo": bbo_fast}


def sc_pair(setup, thickness=0.245, cut_deg=33.9):
    mat = get_material("BBO")
    return setup.with_(
        sc_signal=compensator_plate(mat, math.radians(cut_deg), thickness, "signal", math.pi / 2),
        sc_idler=compensator_plate(mat, math.radians(cut_deg), thickness, "idler", 1.5 * math.pi),
    )
