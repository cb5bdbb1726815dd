from __future__ import annotations

import pytest

from qmod import KernelError, from_bytes, to_bytes
from conftest import run


def test_tampered_class_potency_is_refused(signal_session):
    # Signal has its type consumed at M2 (potency 1); forging potency 2 with a
    # set value is not a reachable state and must not load
    data = to_bytes(signal_session.store).decode()
    broken = data.replace('Class 7 4 M2 "Signal" false "sig" 1', 'Class 7 4 M2 "Signal" false "sig" 2')
    assert broken != data
    with pytest.raises(KernelError) as err:
        from_bytes(broken.encode())
    assert err.value.code == "VALIDATION_FAILED"
    assert "BOUNDS_INVALID(7)" in err.value.message


def test_tampered_instance_potency_is_refused(signal_session):
    s = signal_session
    run(s, ["BEGIN", 'INSTANTIATE 7 3 "s1"', "UPDATE 9 voltage 0 1.0", "COMMIT"])
    data = to_bytes(s.store).decode()
    broken = data.replace('Instance 9 3 M1 "s1" 7 "sig" 0', 'Instance 9 3 M1 "s1" 7 "sig" 1')
    assert broken != data
    with pytest.raises(KernelError) as err:
        from_bytes(broken.encode())
    assert "BOUNDS_INVALID(9)" in err.value.message
