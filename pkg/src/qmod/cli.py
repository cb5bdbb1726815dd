"""Command-line front door: script execution with expectation checking,
a serve mode speaking the wire protocol on stdio or a local socket, and
subcommands for transformation and artifact generation.

Exit codes: 0 success, 1 validation or expectation failures, 2 usage
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import socketserver
import sys

from . import persist, qualify
from .errors import KernelError
from .meta import M2_FOLDER_ID
from .protocol import Session
from .store import Store

_IO_CODES = {"IO_ERROR"}
_DATA_CODES = {"FORMAT_ERROR", "VERSION_UNSUPPORTED", "VALIDATION_FAILED"}


def _load_store(path: str) -> Store:
    return persist.load(path)


def _exit_for(exc: KernelError) -> int:
    if exc.code in _IO_CODES:
        return 3
    return 1


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    try:
        with open(args.script, "r", encoding="utf-8") as fh:
            raw_lines = fh.read().split("\n")
    except OSError as exc:
        print(f"cannot read {args.script}: {exc.strerror}", file=sys.stderr)
        return 3

    session = Session()
    mismatches: list[str] = []
    last_response: str | None = None
    for raw in raw_lines:
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("#"):
            continue
        if line.startswith("> "):
            if args.expect:
                expected = line[2:]
                if last_response != expected:
                    seq = expected.split(" ", 1)[0]
                    mismatches.append(f"seq {seq}: expected {expected!r} got {last_response!r}")
            continue
        out = session.execute_line(line)
        last_response = out[0]
        for ln in out:
            print(ln)
    for m in mismatches:
        print(f"MISMATCH {m}", file=sys.stderr)
    return 1 if mismatches else 0


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

def cmd_serve(args) -> int:
    if not args.socket:
        session = Session()
        for raw in sys.stdin:
            for ln in session.execute_line(raw.rstrip("\n")):
                print(ln, flush=True)
        return 0

    host, _, port = args.socket.rpartition(":")
    if not host or not port.isdigit():
        print(f"bad socket address {args.socket!r}; use HOST:PORT", file=sys.stderr)
        return 2
    store = Store()
    state = {"busy": False}

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            if state["busy"]:
                self.wfile.write(b'0 ERR BUSY "another session is active"\n')
                return
            state["busy"] = True
            try:
                session = Session(store)
                while True:
                    raw = self.rfile.readline()
                    if not raw:
                        break
                    line = raw.decode("utf-8", errors="replace").rstrip("\n")
                    for ln in session.execute_line(line):
                        self.wfile.write(ln.encode("utf-8") + b"\n")
                    self.wfile.flush()
            finally:
                state["busy"] = False

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    try:
        with Server((host, int(port)), Handler) as server:
            print(f"serving on {host}:{port}", file=sys.stderr)
            server.serve_forever()
    except OSError as exc:
        print(f"transport failure: {exc}", file=sys.stderr)
        return 3
    except KeyboardInterrupt:
        pass
    return 0


# ---------------------------------------------------------------------------
# transform / qualify / check
# ---------------------------------------------------------------------------

def cmd_transform(args) -> int:
    try:
        store = _load_store(args.store)
    except KernelError as exc:
        print(f"{exc.code}: {exc.message}", file=sys.stderr)
        return _exit_for(exc)
    session = Session(store)
    session.debug = args.debug
    out = session.execute_line(f"TRANSFORM {args.tm} {args.source}")
    for step in session.debug_steps:
        print("DBG " + " ".join(step), file=sys.stderr)
    print(out[0])
    parts = out[0].split(" ")
    if parts[1] != "OK":
        return 1
    trace_id = int(parts[3])
    try:
        if args.trace_out:
            bundle = qualify.gen_trace_report(session.store, trace_id)
            _write_text(args.trace_out, bundle.content)
        persist.save(session.store, args.out or args.store)
    except KernelError as exc:
        print(f"{exc.code}: {exc.message}", file=sys.stderr)
        return _exit_for(exc)
    return 0


def _write_text(path: str, content: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
    except OSError as exc:
        raise KernelError("IO_ERROR", f"cannot write {path}: {exc.strerror}") from None


def cmd_qualify(args) -> int:
    try:
        if args.kind == "errors":
            bundle = qualify.gen_error_catalogue()
        elif args.kind == "trace":
            store = _load_store(args.store)
            session = Session(store)
            out = session.execute_line(f"TRANSFORM {args.tm} {args.source}")
            parts = out[0].split(" ")
            if parts[1] != "OK":
                print(out[0], file=sys.stderr)
                return 1
            bundle = qualify.gen_trace_report(session.store, int(parts[3]))
        else:
            store = _load_store(args.store)
            root = args.root if args.root is not None else M2_FOLDER_ID
            gen = {"docs": qualify.gen_docs, "reqs": qualify.gen_requirements,
                   "tests": qualify.gen_tests}[args.kind]
            bundle = gen(store, root)
        _write_text(args.out, bundle.content)
    except KernelError as exc:
        print(f"{exc.code}: {exc.message}", file=sys.stderr)
        return _exit_for(exc)
    print(bundle.digest)
    return 0


def cmd_check(args) -> int:
    from .constraints import evaluate

    try:
        store = _load_store(args.store)
    except KernelError as exc:
        print(f"{exc.code}: {exc.message}", file=sys.stderr)
        return _exit_for(exc)
    violations = evaluate(store)
    for v in violations:
        print(f"{v.code} {v.element_id} {v.constraint_id} {v.message}")
    if violations:
        return 1
    print(f"OK {persist.digest(store)}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmod", description="qualifiable meta-modeling kernel")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a command script")
    p.add_argument("script")
    p.add_argument("--expect", action="store_true", help="compare '> ' annotations byte-wise")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("serve", help="speak the wire protocol on stdio or a socket")
    p.add_argument("--socket", metavar="HOST:PORT", default=None)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("transform", help="run a transformation on a stored model")
    p.add_argument("tm", type=int)
    p.add_argument("source", type=int)
    p.add_argument("store")
    p.add_argument("--out", default=None, help="write the updated store here (default: in place)")
    p.add_argument("--trace-out", default=None, help="write the trace report here")
    p.add_argument("--debug", action="store_true", help="emit MATCH/CREATE/ASSIGN steps on stderr")
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("qualify", help="generate a qualification artifact")
    kinds = p.add_subparsers(dest="kind", required=True)
    for kind in ("docs", "reqs", "tests"):
        k = kinds.add_parser(kind)
        k.add_argument("store")
        k.add_argument("--root", type=int, default=None)
        k.add_argument("--out", required=True)
        k.set_defaults(fn=cmd_qualify)
    k = kinds.add_parser("errors")
    k.add_argument("--out", required=True)
    k.set_defaults(fn=cmd_qualify)
    k = kinds.add_parser("trace")
    k.add_argument("store")
    k.add_argument("tm", type=int)
    k.add_argument("source", type=int)
    k.add_argument("--out", required=True)
    k.set_defaults(fn=cmd_qualify)

    p = sub.add_parser("check", help="evaluate all constraints of a stored model")
    p.add_argument("store")
    p.set_defaults(fn=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
