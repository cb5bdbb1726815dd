from __future__ import annotations

import socket
import subprocess
import sys
import time

import pytest

from qmod import Session, gen_tests, save
from qmod.cli import main
from conftest import run


def qmod(*argv):
    return subprocess.run([sys.executable, "-m", "qmod.cli", *argv],
                          capture_output=True, text=True, timeout=60)


@pytest.fixture
def store_file(tmp_path, signal_session):
    path = tmp_path / "model.qmod"
    save(signal_session.store, str(path))
    return path


def test_run_empty_script_exits_zero(tmp_path, capsys):
    script = tmp_path / "empty.txt"
    script.write_text("")
    assert main(["run", str(script)]) == 0
    assert capsys.readouterr().out == ""


def test_run_unreadable_script_exits_three(tmp_path):
    assert main(["run", str(tmp_path / "missing.txt")]) == 3


def test_run_reports_mismatch_and_exits_one(tmp_path, capsys):
    script = tmp_path / "s.txt"
    script.write_text("LIST Class\n> 1 OK 999\n")
    assert main(["run", str(script), "--expect"]) == 1
    err = capsys.readouterr().err
    assert "MISMATCH seq 1" in err


def test_run_prints_transcript(tmp_path, capsys):
    script = tmp_path / "s.txt"
    script.write_text("# comment\nLIST Class\nREAD 1 name\n")
    assert main(["run", str(script)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["1 OK", '2 OK "root"']


def test_generated_tests_pass_via_run_expect(tmp_path, signal_session, capsys):
    bundle = gen_tests(signal_session.store)
    script = tmp_path / "tests.txt"
    script.write_text(bundle.content)
    assert main(["run", str(script), "--expect"]) == 0


def test_check_clean_store_exits_zero(store_file, capsys):
    assert main(["check", str(store_file)]) == 0
    assert capsys.readouterr().out.startswith("OK ")


def test_check_missing_store_exits_three(tmp_path):
    assert main(["check", str(tmp_path / "no.qmod")]) == 3


def test_qualify_errors_writes_artifact(tmp_path, capsys):
    out = tmp_path / "errors.txt"
    assert main(["qualify", "errors", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("# qmod errors v1\n")
    assert text.endswith("\n")
    digest = capsys.readouterr().out.strip()
    assert len(digest) == 64


def test_qualify_docs_roundtrip(store_file, tmp_path, capsys):
    out = tmp_path / "docs.txt"
    assert main(["qualify", "docs", str(store_file), "--out", str(out)]) == 0
    assert 'class "Signal"' in out.read_text()


def test_transform_subcommand_updates_store(tmp_path, capsys):
    from test_transform import _tm, _two_ns_units
    s = Session()
    _two_ns_units(s)
    _tm(s, ['CREATE Assignment 17 "a"', "UPDATE 18 src 0 10", "UPDATE 18 dst 0 13"])
    run(s, ["BEGIN", 'INSTANTIATE 9 3 "s1"', "UPDATE 19 u 0 1.5", "COMMIT"])
    path = tmp_path / "m.qmod"
    save(s.store, str(path))
    trace_out = tmp_path / "trace.txt"
    code = main(["transform", "14", "3", str(path), "--trace-out", str(trace_out)])
    assert code == 0
    out = capsys.readouterr().out
    assert " OK " in out
    assert '1 rule "r1" src "s1" dst "t1"' in trace_out.read_text()


def test_serve_stdio_speaks_protocol():
    proc = subprocess.run([sys.executable, "-m", "qmod.cli", "serve"],
                          input="LIST Class\nCREATE Namespace 2 ns\n",
                          capture_output=True, text=True, timeout=60)
    assert proc.stdout.splitlines() == ["1 OK", "2 OK 4"]


def _connect(port, retries=50):
    for _ in range(retries):
        try:
            return socket.create_connection(("127.0.0.1", port), timeout=2)
        except OSError:
            time.sleep(0.1)
    raise AssertionError("server did not come up")


def test_serve_socket_single_session_and_busy_line():
    port = 47113
    proc = subprocess.Popen([sys.executable, "-m", "qmod.cli", "serve", "--socket", f"127.0.0.1:{port}"],
                            stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    try:
        first = _connect(port)
        first.sendall(b"LIST Class\n")
        assert first.makefile().readline().strip() == "1 OK"
        second = _connect(port)
        line = second.makefile().readline().strip()
        assert line == '0 ERR BUSY "another session is active"'
        second.close()
        first.close()
    finally:
        proc.terminate()
        proc.wait(timeout=10)
