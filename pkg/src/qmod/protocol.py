"""The generic interface: a line-oriented command protocol with ACID
transactions, deterministic responses and post-commit change events.

Every command receives exactly one response carrying its sequence number.
A mutating command outside BEGIN..COMMIT runs as its own transaction;
consistency is checked at commit and a failing check rolls the whole
transaction back. Events reach a subscriber only after COMMIT, in the
exact order the changes were applied.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import persist, wire
from .constraints import enforce_at_commit, evaluate
from .errors import KernelError, render_violations
from .meta import ElementKind
from .store import Store
from .transform import run_transformation

VERBS = (
    "CREATE", "READ", "UPDATE", "DELETE", "INSTANTIATE", "RETYPE", "REFLECT", "LIST",
    "BEGIN", "COMMIT", "ROLLBACK", "CHECK", "TRANSFORM", "SAVE", "LOAD", "SUBSCRIBE",
)

_MUTATING = frozenset({"CREATE", "UPDATE", "DELETE", "INSTANTIATE", "RETYPE"})

EVENT_BUFFER_LIMIT = 4096


@dataclass(frozen=True)
class Command:
    verb: str
    args: list[wire.Token]
    seq: int


@dataclass(frozen=True)
class Response:
    seq: int
    ok: bool
    payload: list[str]  # rendered tokens (OK) or [code, message] (ERR)

    def line(self) -> str:
        if self.ok:
            return f"{self.seq} OK" + ("" if not self.payload else " " + wire.join(self.payload))
        code, message = self.payload
        return f"{self.seq} ERR {code} {wire.quote(message)}"


def parse(line: str, seq: int = 0) -> Command:
    """Total grammar: any line parses or raises PARSE_ERROR with a column."""
    tokens = wire.tokenize(line)
    if not tokens:
        raise KernelError("PARSE_ERROR", "column 0: empty command")
    verb = tokens[0]
    if verb.quoted or verb.text not in VERBS:
        raise KernelError("PARSE_ERROR", f"column {verb.col}: unknown verb {verb.text!r}")
    return Command(verb.text, tokens[1:], seq)


def _arity(cmd: Command, low: int, high: int | None = None) -> None:
    high = low if high is None else high
    if len(cmd.args) < low:
        raise KernelError("PARSE_ERROR", f"column 0: {cmd.verb} expects {low} argument(s)")
    if len(cmd.args) > high:
        extra = cmd.args[high]
        raise KernelError("PARSE_ERROR", f"column {extra.col}: unexpected argument")


def _kind(tok: wire.Token) -> ElementKind:
    try:
        return ElementKind(tok.text)
    except ValueError:
        raise KernelError("UNKNOWN_KIND", f"{tok.text!r} is not an element kind") from None


class Session:
    """One command stream over one store; single writer, total order."""

    def __init__(self, store: Store | None = None):
        self.store = store if store is not None else Store()
        self.seq = 0
        self.subscribed = False
        self.next_subscriber = 1
        self.debug = False
        self.debug_steps: list[tuple[str, ...]] = []

    # -- public surface -------------------------------------------------------

    def execute_line(self, line: str) -> list[str]:
        """Response line plus any event lines released by a commit."""
        self.seq += 1
        events: list[str] = []
        try:
            cmd = parse(line, self.seq)
            payload = self._dispatch(cmd, events)
            return [Response(self.seq, True, payload).line()] + events
        except KernelError as exc:
            return [Response(self.seq, False, [exc.code, exc.message]).line()]

    def run_script(self, lines: list[str]) -> list[str]:
        out: list[str] = []
        for line in lines:
            out.extend(self.execute_line(line))
        return out

    def on_step(self, step: tuple[str, ...]) -> None:
        if self.debug:
            self.debug_steps.append(step)

    # -- transaction helpers ----------------------------------------------------

    def _commit(self, events_out: list[str]) -> None:
        violations = enforce_at_commit(self.store)
        if violations:
            self.store.rollback()
            raise KernelError("VALIDATION_FAILED", render_violations(violations))
        events = self.store.commit_applied()
        if not self.subscribed:
            return
        if len(events) > EVENT_BUFFER_LIMIT:
            self.subscribed = False
            events_out.append(Response(0, False, ["EVENT_OVERFLOW",
                                                  f"{len(events)} events exceed the buffer; subscription closed"]).line())
            return
        tx = self.store.committed_tx
        for i, ev in enumerate(events, start=1):
            events_out.append(f"EVT {tx} {i} {ev.op} {ev.element_id}"
                              + ("" if not ev.details else " " + wire.join(list(ev.details))))

    def _auto_tx(self, fn, events_out: list[str]):
        if self.store.tx_open:
            return fn()
        self.store.begin()
        try:
            result = fn()
        except KernelError:
            self.store.rollback()
            raise
        self._commit(events_out)
        return result

    # -- dispatch ------------------------------------------------------------------

    def _dispatch(self, cmd: Command, events_out: list[str]) -> list[str]:
        store = self.store
        verb = cmd.verb

        if verb == "BEGIN":
            _arity(cmd, 0)
            store.begin()
            return []
        if verb == "COMMIT":
            _arity(cmd, 0)
            if not store.tx_open:
                raise KernelError("TX_NONE")
            self._commit(events_out)
            return []
        if verb == "ROLLBACK":
            _arity(cmd, 0)
            store.rollback()
            return []

        if verb == "CREATE":
            _arity(cmd, 3)
            kind = _kind(cmd.args[0])
            owner = wire.parse_int(cmd.args[1], "owner id")
            name = cmd.args[2].text
            new_id = self._auto_tx(lambda: store.create(kind, owner, name), events_out)
            return [str(new_id)]

        if verb == "READ":
            _arity(cmd, 2)
            eid = wire.parse_int(cmd.args[0], "element id")
            values, draft = store.read(eid, cmd.args[1].text)
            out = ["DRAFT"] if draft else []
            return out + [wire.render_value(v) for v in values]

        if verb == "UPDATE":
            _arity(cmd, 4)
            eid = wire.parse_int(cmd.args[0], "element id")
            field = cmd.args[1].text
            index = wire.parse_int(cmd.args[2], "index")
            if index < 0:
                raise KernelError("INDEX_OUT_OF_RANGE", "index must be non-negative")
            self._auto_tx(lambda: store.update(eid, field, index, cmd.args[3]), events_out)
            return []

        if verb == "DELETE":
            _arity(cmd, 1)
            eid = wire.parse_int(cmd.args[0], "element id")
            self._auto_tx(lambda: store.delete(eid), events_out)
            return []

        if verb == "INSTANTIATE":
            _arity(cmd, 3)
            class_id = wire.parse_int(cmd.args[0], "class id")
            parent_id = wire.parse_int(cmd.args[1], "parent id")
            name = cmd.args[2].text
            new_id = self._auto_tx(lambda: store.instantiate(class_id, parent_id, name), events_out)
            return [str(new_id)]

        if verb == "RETYPE":
            _arity(cmd, 2)
            inst = wire.parse_int(cmd.args[0], "instance id")
            cls = wire.parse_int(cmd.args[1], "class id")
            self._auto_tx(lambda: store.retype(inst, cls), events_out)
            return []

        if verb == "REFLECT":
            _arity(cmd, 1)
            eid = wire.parse_int(cmd.args[0], "element id")
            return store.reflect(eid)

        if verb == "LIST":
            _arity(cmd, 1, 2)
            kind = _kind(cmd.args[0])
            class_filter = None
            if len(cmd.args) == 2:
                class_filter = wire.parse_int(cmd.args[1], "class filter")
            return [str(i) for i in store.list_ids(kind, class_filter)]

        if verb == "CHECK":
            _arity(cmd, 0, 1)
            scope = None
            if cmd.args:
                scope = wire.parse_int(cmd.args[0], "scope id")
            out: list[str] = []
            for v in evaluate(store, scope):
                out += [v.code, str(v.element_id), str(v.constraint_id), wire.quote(v.message)]
            return out

        if verb == "TRANSFORM":
            _arity(cmd, 2)
            tm_id = wire.parse_int(cmd.args[0], "transformation id")
            src_root = wire.parse_int(cmd.args[1], "source root id")
            if store.tx_open:
                raise KernelError("TX_OPEN", "TRANSFORM runs as its own transaction")
            store.begin()
            try:
                target_root, trace_id = run_transformation(
                    store, tm_id, src_root, on_step=self.on_step if self.debug else None)
            except KernelError:
                store.rollback()
                raise
            self._commit(events_out)
            return [str(target_root), str(trace_id)]

        if verb == "SAVE":
            _arity(cmd, 1)
            if store.tx_open:
                raise KernelError("TX_OPEN", "SAVE requires no open transaction")
            digest = persist.save(store, cmd.args[0].text)
            return [digest]

        if verb == "LOAD":
            _arity(cmd, 1)
            if store.tx_open:
                raise KernelError("TX_OPEN", "LOAD requires no open transaction")
            self.store = persist.load(cmd.args[0].text)
            return [persist.digest(self.store)]

        if verb == "SUBSCRIBE":
            _arity(cmd, 0)
            self.subscribed = True
            sub = self.next_subscriber
            self.next_subscriber += 1
            return [str(sub)]

        raise KernelError("PARSE_ERROR", f"column 0: unknown verb {verb!r}")
