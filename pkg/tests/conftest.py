import pytest

from eulerzeros import stats
from eulerzeros.cli import packaged_zeros
from eulerzeros.zerolab import load_zero_table, match_run
from eulerzeros.zetax import XMode, von_mangoldt_table


@pytest.fixture(scope="session")
def zeros():
    return load_zero_table(packaged_zeros())


@pytest.fixture(scope="session")
def primes():
    return von_mangoldt_table(40000)


@pytest.fixture(scope="session")
def fixed5_700(zeros):
    return match_run(range(1, 701), zeros, XMode.fixed(5))


@pytest.fixture(scope="session")
def vary600(zeros):
    return match_run(range(1, 601), zeros, XMode.varying())


@pytest.fixture(scope="session")
def vary600_slopes(zeros, vary600):
    return stats.estimate_slopes([m.n for m in vary600.matches], zeros, XMode.varying())


@pytest.fixture(scope="session")
def vary5000(zeros):
    return match_run(range(1, 5001), zeros, XMode.varying())


@pytest.fixture(scope="session")
def fixed_grid_variances(zeros):
    return {float(x): stats.moving_variance(match_run(range(1, 5001), zeros, XMode.fixed(x)).matches, 100,
                                            XMode.fixed(x))
            for x in range(3, 28)}


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""
    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
