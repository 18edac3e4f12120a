from __future__ import annotations

import pytest

from circlebounds import parse_rotation, solve_parameter, standard_map
from circlebounds.circlemap import CriticalCircleMap


def solved(family: str, spec: str, tol: float = 1e-10) -> CriticalCircleMap:
    rho = parse_rotation(spec)
    param, _ = solve_parameter(family, rho.value, tol)
    return CriticalCircleMap(family, param)


@pytest.fixture(scope="session")
def golden_map():
    return solved("standard", "golden")


@pytest.fixture(scope="session")
def periodic12_map():
    return solved("standard", "periodic:1,2")


@pytest.fixture(scope="session")
def golden_blaschke():
    from circlebounds.siegel import solve_tau

    return solve_tau(parse_rotation("golden"), 1e-8)


@pytest.fixture(scope="session")
def golden_pieces(golden_blaschke):
    from circlebounds.siegel import puzzle_pieces

    return puzzle_pieces(golden_blaschke, 6)


@pytest.fixture(scope="session")
def raster512(golden_blaschke):
    from circlebounds.siegel import GridSpec, render_blaschke

    return render_blaschke(golden_blaschke, GridSpec(0.5 + 0j, 3.0, 512))


@pytest.fixture
def plain_standard():
    return standard_map


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
