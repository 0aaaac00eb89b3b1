import pytest

from lppo.dataset import ChainProblemSpec, Pool, Problem, render_solution

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion this test gates")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        ok = rep.outcome == "passed"
        prev = _CRITERIA.get(n, (title, True))
        _CRITERIA[n] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok = _CRITERIA[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  C{n:<2} {title}")


def chain_problem(pid, path, branching=4, eligible=True):
    chain = ChainProblemSpec(len(path), branching, tuple(path))
    answer = " ".join(map(str, path))
    if eligible:
        return Problem(pid, chain.to_dict(), answer, render_solution(path), Pool.PREFIX_ELIGIBLE)
    return Problem(pid, chain.to_dict(), answer)


@pytest.fixture
def make_chain():
    return chain_problem
