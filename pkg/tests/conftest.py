import pytest

from unison_waves.topology import grid, path, random_connected, ring, star

DAEMONS = ("synchronous", "random-subset", "single-min", "single-random")


def build_corpus():
    graphs = {}
    for n in range(3, 9):
        graphs[f"ring{n}"] = ring(n)
        graphs[f"path{n}"] = path(n)
        graphs[f"star{n - 1}"] = star(n - 1)
    for n in range(4, 9):
        graphs[f"random{n}"] = random_connected(n, seed=n)
    graphs["grid3x3"] = grid(3, 3)
    return graphs


CORPUS = build_corpus()


@pytest.fixture(scope="session")
def corpus():
    return CORPUS


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config.addinivalue_line("markers", "slow: long-running sweep")
    config._criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    item.config._criteria.append((number, title, report.passed, detail))


def pytest_terminal_summary(terminalreporter, config):
    rows = sorted(getattr(config, "_criteria", []))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in rows:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {number:>2}: {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
