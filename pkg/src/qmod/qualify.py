"""Qualification artifact generation: documentation, requirements,
executable test scripts, the error catalogue and transformation trace
reports.

Every generator is a pure function of the store content, emitting plain
structured text with fixed section markers. Identical store bytes yield
identical artifact digests; that determinism is the artifact's value, so
no generator ever writes a timestamp.

The test generator works by simulation: it builds the script against a
scratch session and freezes the actual responses as `> ` expectation
lines, which `run --expect` later compares byte-wise.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from . import persist, wire
from .errors import CATALOGUE, KernelError
from .meta import (
    M1_FOLDER_ID,
    M2_FOLDER_ID,
    NO_ID,
    AttributeDef,
    Base,
    ElementKind,
    MetaClass,
    Value,
    Variant,
    kind_of,
)
from .store import Store
from .transform import render_trace

K = ElementKind

ARTIFACT_KINDS = ("DOCS", "REQUIREMENTS", "TESTS", "ERROR_CATALOGUE", "TRACE_REPORT")


@dataclass(frozen=True)
class ArtifactBundle:
    kind: str
    content: str

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.content.encode("utf-8")).hexdigest()


def _bundle(kind: str, lines: list[str]) -> ArtifactBundle:
    return ArtifactBundle(kind, "\n".join(lines) + "\n")


def _scope(store: Store, root: int) -> set[int]:
    rec = store.resolve(root)
    if kind_of(rec) not in (K.NAMESPACE, K.ROOT_FOLDER):
        raise KernelError("UNKNOWN_ID", f"element {root} is not a namespace")
    return store._closure(root)


def _sections(store: Store, root: int) -> list[tuple[int, list]]:
    """(namespace id, members) pairs in id order; the root namespace is
    included only when it directly holds members."""
    scope = _scope(store, root)
    namespaces = [i for i in sorted(scope)
                  if store.index.get(i) is K.NAMESPACE or i == root]
    out = []
    for ns in namespaces:
        members = [c for c in store.children(ns) if kind_of(c) is not K.NAMESPACE]
        if ns == root and not members:
            continue
        out.append((ns, members))
    return out


def _name(store: Store, eid: int) -> str:
    return store.resolve(eid).name if eid in store.index else "?"


def _bounds(lower: int, upper: int | None) -> str:
    return f"{lower}..{'*' if upper is None else upper}"


# ---------------------------------------------------------------------------
# documentation
# ---------------------------------------------------------------------------

def gen_docs(store: Store, root: int = M2_FOLDER_ID) -> ArtifactBundle:
    lines = ["# qmod docs v1", f"# store {persist.digest(store)}"]
    mm = store.metamodel()
    for ns, members in _sections(store, root):
        lines.append(f"namespace {wire.quote(_name(store, ns))} id {ns}")
        units = [m for m in members if kind_of(m) is K.UNIT]
        datatypes = [m for m in members if kind_of(m) is K.DATATYPE]
        classes = [m for m in members if kind_of(m) is K.CLASS]
        linkages = [m for m in members if kind_of(m) in (K.ASSOCIATION, K.COMPOSITION, K.INHERITANCE)]
        constraints = [m for m in members if kind_of(m) is K.CONSTRAINT]
        for u in units:
            dims = " ".join(str(d) for d in u.dims)
            lines.append(f"  unit {wire.quote(u.name)} id {u.id} symbol {wire.quote(u.symbol)} dims {dims}")
        for d in datatypes:
            lines.append(f"  datatype {wire.quote(d.name)} id {d.id} base {d.base.value}")
        for c in classes:
            tv = wire.quote(c.type_value) if c.type_value is not None else "-"
            lines.append(f"  class {wire.quote(c.name)} id {c.id} abstract "
                         f"{wire.render_value(c.abstract)} type {tv} potency {c.type_potency}")
            for a in sorted((x for x in store.of_kind(K.ATTRIBUTE) if x.owner == c.id), key=lambda x: x.id):
                base = mm.datatypes[a.datatype].base.value if a.datatype in mm.datatypes else "-"
                unit = mm.unit(a.unit)
                sym = unit.symbol if unit is not None else "-"
                line = (f"    attr {wire.quote(a.name)} id {a.id} {base} unit {wire.quote(sym)} "
                        f"bounds {_bounds(a.lower, a.upper)} potency {a.potency}")
                if a.potency == 0:
                    line += " fixed " + " ".join(wire.render_value(v) for v in a.fixed)
                lines.append(line)
            supers = sorted(l.end_b for l in mm.inheritances() if l.end_a == c.id)
            if supers:
                lines.append("    inherits " + " ".join(
                    f"{wire.quote(_name(store, s))} id {s}" for s in supers))
        for l in linkages:
            if l.variant is Variant.ASSOCIATION:
                lines.append(f"  association {wire.quote(l.name)} id {l.id}: "
                             f"{wire.quote(_name(store, l.end_a))} {_bounds(l.lower_a, l.upper_a)} -- "
                             f"{_bounds(l.lower_b, l.upper_b)} {wire.quote(_name(store, l.end_b))}")
            elif l.variant is Variant.COMPOSITION:
                lines.append(f"  composition {wire.quote(l.name)} id {l.id}: parent "
                             f"{wire.quote(_name(store, l.end_a))} children {_bounds(l.lower_b, l.upper_b)} "
                             f"{wire.quote(_name(store, l.end_b))}")
            else:
                lines.append(f"  inheritance {wire.quote(l.name)} id {l.id}: "
                             f"{wire.quote(_name(store, l.end_a))} -> {wire.quote(_name(store, l.end_b))}")
        for c in constraints:
            lo = "-" if c.lo is None else wire.fmt_real(c.lo)
            hi = "-" if c.hi is None else wire.fmt_real(c.hi)
            lines.append(f"  constraint {wire.quote(c.name)} id {c.id}: {c.rule} target "
                         f"{wire.quote(_name(store, c.target)) if c.target else '-'} min {lo} max {hi}")
    return _bundle("DOCS", lines)


# ---------------------------------------------------------------------------
# requirements
# ---------------------------------------------------------------------------

def gen_requirements(store: Store, root: int = M2_FOLDER_ID) -> ArtifactBundle:
    lines = ["# qmod requirements v1", f"# store {persist.digest(store)}"]
    mm = store.metamodel()
    reqs: list[tuple[int, str, str]] = []
    scope = _scope(store, root)

    for c in store.of_kind(K.CLASS):
        if c.id not in scope:
            continue
        name = wire.quote(c.name)
        if c.abstract:
            reqs.append((c.id, "ABS", f"class {name} shall not be instantiated directly"))
        else:
            reqs.append((c.id, "INST", f"instances of class {name} shall satisfy every "
                                       f"attribute and linkage obligation below"))
        if c.type_value is None:
            reqs.append((c.id, "TYPE", f"each instance of class {name} shall set the type value before commit"))

    for a in store.of_kind(K.ATTRIBUTE):
        if a.id not in scope:
            continue
        name = wire.quote(a.name)
        base = mm.datatypes[a.datatype].base.value if a.datatype in mm.datatypes else "?"
        unit = mm.unit(a.unit)
        sym = unit.symbol if unit is not None else "?"
        if a.potency == 0:
            fixed = " ".join(wire.render_value(v) for v in a.fixed)
            reqs.append((a.id, "FIX", f"attribute {name} is fixed at M2 to [{fixed}]"))
        else:
            reqs.append((a.id, "LB", f"the model shall contain at least {a.lower} value(s) of attribute {name}"))
            if a.upper is not None:
                reqs.append((a.id, "UB", f"the model shall contain at most {a.upper} value(s) of attribute {name}"))
        reqs.append((a.id, "DT", f"values of attribute {name} shall be of type {base} with unit {wire.quote(sym)}"))

    for l in store.of_kind(K.ASSOCIATION) + store.of_kind(K.COMPOSITION) + store.of_kind(K.INHERITANCE):
        if l.id not in scope:
            continue
        name = wire.quote(l.name)
        a_name = wire.quote(_name(store, l.end_a))
        b_name = wire.quote(_name(store, l.end_b))
        if l.variant is Variant.ASSOCIATION:
            reqs.append((l.id, "MA", f"each {b_name} instance shall be linked via {name} to "
                                     f"{_bounds(l.lower_a, l.upper_a)} {a_name} instance(s)"))
            reqs.append((l.id, "MB", f"each {a_name} instance shall be linked via {name} to "
                                     f"{_bounds(l.lower_b, l.upper_b)} {b_name} instance(s)"))
        elif l.variant is Variant.COMPOSITION:
            reqs.append((l.id, "MB", f"each {a_name} instance shall contain "
                                     f"{_bounds(l.lower_b, l.upper_b)} {b_name} child instance(s)"))
            reqs.append((l.id, "PARENT", f"a {b_name} instance shall have at most one composition parent"))
        else:
            reqs.append((l.id, "INH", f"instances of {a_name} shall also conform to {b_name}"))

    for c in store.of_kind(K.CONSTRAINT):
        if c.id not in scope or c.rule != "ATTR_RANGE":
            continue
        lo = "unbounded" if c.lo is None else wire.fmt_real(c.lo)
        hi = "unbounded" if c.hi is None else wire.fmt_real(c.hi)
        reqs.append((c.id, "RANGE", f"values of attribute {wire.quote(_name(store, c.target))} "
                                    f"shall lie within [{lo}, {hi}]"))

    for eid, tag, text in sorted(reqs, key=lambda r: (r[0], r[1])):
        lines.append(f"REQ-{eid}-{tag}: {text}")
    return _bundle("REQUIREMENTS", lines)


# ---------------------------------------------------------------------------
# executable test scripts
# ---------------------------------------------------------------------------

_MINIMAL = {Base.BOOL: False, Base.INT: 0, Base.REAL: 0.0, Base.STRING: "x"}


def _minimal_value(store: Store, attr: AttributeDef) -> Value:
    base = store.resolve(attr.datatype).base
    for c in store.of_kind(K.CONSTRAINT):
        if c.rule == "ATTR_RANGE" and c.target == attr.id:
            pick = c.lo if c.lo is not None else c.hi
            if pick is not None:
                return int(pick) if base is Base.INT else float(pick)
    return _MINIMAL[base]


class _Script:
    """Accumulates command lines with recorded expectations."""

    def __init__(self, session):
        self.session = session
        self.lines: list[str] = []

    def note(self, text: str) -> None:
        self.lines.append(f"# {text}")

    def do(self, line: str) -> str:
        out = self.session.execute_line(line)
        self.lines.append(line)
        self.lines.append("> " + out[0])
        return out[0]

    def do_id(self, line: str) -> int:
        resp = self.do(line)
        parts = resp.split(" ")
        return int(parts[2]) if len(parts) > 2 and parts[1] == "OK" else NO_ID


def _rebuild_commands(store: Store, root: int, script: _Script) -> dict[int, int]:
    """Re-create the meta-model region on the scratch session; returns old->new ids."""
    scope = _scope(store, root)
    rebuild_kinds = (K.NAMESPACE, K.CLASS, K.ATTRIBUTE, K.DATATYPE, K.UNIT,
                     K.ASSOCIATION, K.COMPOSITION, K.INHERITANCE, K.CONSTRAINT)
    elements = [store.resolve(i) for i in sorted(scope)
                if i != root and store.index[i] in rebuild_kinds]
    idmap: dict[int, int] = {root: M2_FOLDER_ID}

    script.note("rebuild")
    script.do("BEGIN")
    for rec in elements:
        owner = idmap.get(rec.owner, M2_FOLDER_ID)
        new_id = script.do_id(f"CREATE {kind_of(rec).value} {owner} {wire.quote(rec.name)}")
        idmap[rec.id] = new_id

    def upd(eid: int, field: str, index: int, token: str) -> None:
        script.do(f"UPDATE {idmap[eid]} {field} {index} {token}")

    for rec in elements:
        k = kind_of(rec)
        if k is K.DATATYPE:
            upd(rec.id, "base", 0, rec.base.value)
        elif k is K.UNIT:
            if rec.symbol != rec.name:
                upd(rec.id, "symbol", 0, wire.quote(rec.symbol))
            for i, d in enumerate(rec.dims):
                if d != 0:
                    upd(rec.id, "dims", i, str(d))
        elif k is K.CLASS:
            if rec.abstract:
                upd(rec.id, "abstract", 0, "true")
            if rec.type_value is not None:
                upd(rec.id, "type", 0, wire.quote(rec.type_value))
        elif k is K.ATTRIBUTE:
            if rec.datatype != NO_ID:
                upd(rec.id, "datatype", 0, str(idmap.get(rec.datatype, rec.datatype)))
            if rec.unit != NO_ID:
                upd(rec.id, "unit", 0, str(idmap.get(rec.unit, rec.unit)))
            if rec.lower != 1:
                upd(rec.id, "lower", 0, str(rec.lower))
            if rec.upper != 1:
                upd(rec.id, "upper", 0, "*" if rec.upper is None else str(rec.upper))
            if rec.potency != 1:
                upd(rec.id, "potency", 0, str(rec.potency))
        elif k in (K.ASSOCIATION, K.COMPOSITION):
            upd(rec.id, "enda", 0, str(idmap.get(rec.end_a, rec.end_a)))
            upd(rec.id, "endb", 0, str(idmap.get(rec.end_b, rec.end_b)))
            if rec.lower_a != 0:
                upd(rec.id, "lowera", 0, str(rec.lower_a))
            if rec.upper_a is not None:
                upd(rec.id, "uppera", 0, str(rec.upper_a))
            if rec.lower_b != 0:
                upd(rec.id, "lowerb", 0, str(rec.lower_b))
            if rec.upper_b is not None:
                upd(rec.id, "upperb", 0, str(rec.upper_b))
        elif k is K.INHERITANCE:
            upd(rec.id, "enda", 0, str(idmap.get(rec.end_a, rec.end_a)))
            upd(rec.id, "endb", 0, str(idmap.get(rec.end_b, rec.end_b)))
        elif k is K.CONSTRAINT:
            if rec.rule != "ATTR_RANGE":
                upd(rec.id, "rule", 0, rec.rule)
            if rec.target != NO_ID:
                upd(rec.id, "target", 0, str(idmap.get(rec.target, rec.target)))
            if rec.lo is not None:
                upd(rec.id, "min", 0, wire.fmt_real(rec.lo))
            if rec.hi is not None:
                upd(rec.id, "max", 0, wire.fmt_real(rec.hi))
    # fixed values parse against the datatype base, so they go last
    for rec in elements:
        if kind_of(rec) is K.ATTRIBUTE:
            for i, v in enumerate(rec.fixed):
                upd(rec.id, "fixed", i, wire.render_value(v))
    script.do("COMMIT")
    return idmap


def gen_tests(store: Store, root: int = M2_FOLDER_ID) -> ArtifactBundle:
    from .protocol import Session  # deferred: qualify is imported by protocol users

    header = ["# qmod tests v1", f"# store {persist.digest(store)}"]
    scratch = Session(Store())
    script = _Script(scratch)
    idmap = _rebuild_commands(store, root, script)

    scope = _scope(store, root)
    classes = [c for c in store.of_kind(K.CLASS) if c.id in scope]
    for old_cls in classes:
        cid = idmap[old_cls.id]
        cls: MetaClass = scratch.store.resolve(cid)
        script.note(f"class {wire.bare_or_quoted(old_cls.name)} id {cid}")
        if cls.abstract:
            script.do(f"INSTANTIATE {cid} {M1_FOLDER_ID} {wire.quote(f'p{cid}a')}")
            continue
        eff = scratch.store.eff_attrs(cid)
        open_attrs = [a for a in eff if a.potency == 1 and a.datatype != NO_ID]

        def fill(inst_id: int, skip: int = NO_ID) -> None:
            for a in open_attrs:
                if a.id == skip:
                    continue
                v = wire.render_value(_minimal_value(scratch.store, a))
                for i in range(a.lower):
                    script.do(f"UPDATE {inst_id} {wire.bare_or_quoted(a.name)} {i} {v}")
            if cls.type_value is None:
                script.do(f'UPDATE {inst_id} type 0 "t"')

        script.do("BEGIN")
        inst = script.do_id(f"INSTANTIATE {cid} {M1_FOLDER_ID} {wire.quote(f'p{cid}a')}")
        fill(inst)
        script.do("COMMIT")

        if open_attrs:
            script.do("BEGIN")
            inst = script.do_id(f"INSTANTIATE {cid} {M1_FOLDER_ID} {wire.quote(f'p{cid}b')}")
            fill(inst, skip=open_attrs[0].id)
            script.do("COMMIT")

        bounded = [a for a in open_attrs if a.upper is not None]
        if bounded:
            a = bounded[0]
            script.do("BEGIN")
            inst = script.do_id(f"INSTANTIATE {cid} {M1_FOLDER_ID} {wire.quote(f'p{cid}c')}")
            v = wire.render_value(_minimal_value(scratch.store, a))
            for i in range(a.upper + 1):
                script.do(f"UPDATE {inst} {wire.bare_or_quoted(a.name)} {i} {v}")
            script.do("ROLLBACK")

        if cls.type_value is None:
            script.do("BEGIN")
            inst = script.do_id(f"INSTANTIATE {cid} {M1_FOLDER_ID} {wire.quote(f'p{cid}d')}")
            for a in open_attrs:
                v = wire.render_value(_minimal_value(scratch.store, a))
                for i in range(a.lower):
                    script.do(f"UPDATE {inst} {wire.bare_or_quoted(a.name)} {i} {v}")
            script.do("COMMIT")

    return _bundle("TESTS", header + script.lines)


# ---------------------------------------------------------------------------
# error catalogue and trace report
# ---------------------------------------------------------------------------

def gen_error_catalogue() -> ArtifactBundle:
    lines = ["# qmod errors v1"]
    for code in sorted(CATALOGUE):
        template, ops = CATALOGUE[code]
        lines.append(f"{code} {wire.quote(template)} ops {','.join(ops)}")
    return _bundle("ERROR_CATALOGUE", lines)


def gen_trace_report(store: Store, trace_id: int) -> ArtifactBundle:
    trace = store.traces.get(trace_id)
    if trace is None:
        raise KernelError("UNKNOWN_ID", f"trace {trace_id} does not exist")
    tm_name = _name(store, trace.tm_id)
    lines = ["# qmod trace v1",
             f"# transformation {wire.quote(tm_name)} trace {trace_id}"]
    body = render_trace(store, trace_id)
    content = "\n".join(lines) + "\n" + body
    return ArtifactBundle("TRACE_REPORT", content)
