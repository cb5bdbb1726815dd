from __future__ import annotations

import pytest

from qmod import Session


def run(session: Session, lines: list[str]) -> list[str]:
    """Execute lines, returning only the response lines (events excluded)."""
    out = []
    for line in lines:
        out.append(session.execute_line(line)[0])
    return out


def ok_id(response: str) -> int:
    parts = response.split(" ")
    assert parts[1] == "OK", response
    return int(parts[2])


# a small meta-model used across tests:
#   ns(4), real(5), volt(6: kg m2 s-3 A-1), Signal(7){voltage(8): REAL[V] 1..1},
#   class type fixed at M2 ("sig")
SIGNAL_MODEL = [
    'BEGIN',
    'CREATE Namespace 2 "signals"',
    'CREATE DataType 4 "real"',
    'UPDATE 5 base 0 REAL',
    'CREATE Unit 4 "volt"',
    'UPDATE 6 symbol 0 "V"',
    'UPDATE 6 dims 0 1',
    'UPDATE 6 dims 1 2',
    'UPDATE 6 dims 2 -3',
    'UPDATE 6 dims 3 -1',
    'CREATE Class 4 "Signal"',
    'UPDATE 7 type 0 "sig"',
    'CREATE Attribute 7 "voltage"',
    'UPDATE 8 datatype 0 5',
    'UPDATE 8 unit 0 6',
    'COMMIT',
]


@pytest.fixture
def session() -> Session:
    return Session()


@pytest.fixture
def signal_session() -> Session:
    s = Session()
    for line in SIGNAL_MODEL:
        resp = s.execute_line(line)[0]
        assert " OK" in resp, resp
    return s
