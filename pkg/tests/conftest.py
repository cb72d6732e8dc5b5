import random

import pytest

from umkess.field import FieldParams, preset


def sieve(limit):
    """Eratosthenes, independent of the package's primality code."""
    flags = bytearray([1]) * limit
    flags[0:2] = b"\x00\x00"
    for i in range(2, int(limit**0.5) + 1):
        if flags[i]:
            flags[i * i::i] = bytearray(len(range(i * i, limit, i)))
    return flags


@pytest.fixture(scope="session")
def p23():
    return FieldParams(23)


@pytest.fixture(scope="session")
def p1019():
    return FieldParams(1019)


@pytest.fixture(scope="session")
def p256():
    return preset("p256")


@pytest.fixture
def rng():
    return random.Random(20240501)


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(line)
