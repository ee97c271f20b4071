import pytest

from rtchannel.scene import Building, Scene


def box(x0, y0, x1, y1, h, material="concrete"):
    return Building(((x0, y0), (x1, y0), (x1, y1), (x0, y1)), h, material)


@pytest.fixture
def free_space():
    """No buildings and a non-reflecting ground."""
    return Scene((0.0, 300.0, 0.0, 300.0), terrain_material=None)


@pytest.fixture
def city():
    return Scene((0.0, 120.0, 0.0, 120.0), buildings=(
        box(10, 10, 30, 25, 12.0),
        box(50, 15, 70, 40, 25.0, "glass"),
        box(20, 60, 35, 90, 8.0, "metal"),
        box(75, 70, 100, 95, 18.0),
    ))


# ------------------------------------------------------------ acceptance report

_CRITERIA: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, [title, True, False])
    if rep.failed or (rep.when == "setup" and rep.skipped):
        entry[1] = False
    if rep.when == "call":
        entry[2] = True


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, ran = _CRITERIA[n]
        status = "PASS" if ok and ran else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} {status}  {title}")
