"""Deterministic, traceable, out-place model-to-model transformation.

Rules run in ascending order index over source instances in ascending id,
so the match order is a total order; rules never match elements the run
itself created, which makes termination structural. The target model is
built under a fresh model folder and must pass full constraint evaluation,
otherwise the run fails atomically. Debug step reporting is a plain
callback, decoupled from the engine's observable output.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Callable

from . import wire
from .constraints import evaluate
from .errors import KernelError, Violation, render_violations, sort_violations
from .meta import (
    M1_FOLDER_ID,
    NO_ID,
    Base,
    ElementKind,
    Instance,
    Level,
    Metamodel,
    Pattern,
    Rule,
    Template,
    Variant,
    effective_attributes,
    get_values,
    kind_of,
    set_values,
)
from .store import Store, Trace

K = ElementKind

_ORDER_OPS = ("<", "<=", ">", ">=")
_ALL_OPS = ("=", "!=") + _ORDER_OPS

StepListener = Callable[[tuple[str, ...]], None]


def _rules_of(store: Store, tm_id: int) -> list[Rule]:
    rules = [c for c in store.children(tm_id) if kind_of(c) is K.RULE]
    return sorted(rules, key=lambda r: (r.order, r.id))


def _parts_of(store: Store, rule_id: int) -> tuple[Pattern | None, Template | None]:
    pattern = template = None
    for c in store.children(rule_id):
        if kind_of(c) is K.PATTERN:
            pattern = c
        elif kind_of(c) is K.TEMPLATE:
            template = c
    return pattern, template


def parse_guard(guard: str) -> tuple[str, str, wire.Token]:
    toks = wire.tokenize(guard)
    if len(toks) != 3:
        raise KernelError("GUARD_INVALID", f"guard {guard!r} is not 'attr op literal'")
    name, op, literal = toks
    if op.quoted or op.text not in _ALL_OPS:
        raise KernelError("GUARD_INVALID", f"guard comparator {op.text!r} is unknown")
    return name.text, op.text, literal


def validate_transformation(store: Store, tm_id: int) -> list[Violation]:
    """Static preconditions: order uniqueness, reference resolvability,
    guard typing and unit compatibility of every assignment."""
    tm = store.resolve(tm_id)
    if kind_of(tm) is not K.TRANSFORMATION_MODEL:
        raise KernelError("UNKNOWN_ID", f"element {tm_id} is not a transformation model")
    out: list[Violation] = []
    mm = store.metamodel()

    src_ns = store.index.get(tm.source)
    tgt_ns = store.index.get(tm.target)
    if tm.source == NO_ID or src_ns is not K.NAMESPACE:
        out.append(Violation(tm.id, "MISSING_REF", 0, "source meta-model does not resolve"))
    if tm.target == NO_ID or tgt_ns is not K.NAMESPACE:
        out.append(Violation(tm.id, "MISSING_REF", 0, "target meta-model does not resolve"))
    src_scope = store._closure(tm.source) if src_ns is K.NAMESPACE else set()
    tgt_scope = store._closure(tm.target) if tgt_ns is K.NAMESPACE else set()

    rules = _rules_of(store, tm_id)
    orders: dict[int, list[int]] = {}
    for r in rules:
        orders.setdefault(r.order, []).append(r.id)
    for order, ids in orders.items():
        if len(ids) > 1:
            for rid in ids:
                out.append(Violation(rid, "ORDER_CLASH", 0, f"order index {order} is shared"))

    for rule in rules:
        pattern, template = _parts_of(store, rule.id)
        if pattern is None:
            out.append(Violation(rule.id, "MISSING_REF", 0, f"rule {rule.id} has no pattern"))
        if template is None:
            out.append(Violation(rule.id, "MISSING_REF", 0, f"rule {rule.id} has no template"))

        pat_cls = None
        if pattern is not None:
            if pattern.class_ref not in mm.classes:
                out.append(Violation(pattern.id, "MISSING_REF", 0, "pattern class does not resolve"))
            else:
                pat_cls = pattern.class_ref
                if pattern.class_ref not in src_scope:
                    out.append(Violation(pattern.id, "CONTAINMENT_FORBIDDEN", 0,
                                         "pattern class is outside the source meta-model"))
                out.extend(_check_guards(store, mm, pattern))

        tpl_cls = None
        if template is not None:
            if template.class_ref not in mm.classes:
                out.append(Violation(template.id, "MISSING_REF", 0, "template class does not resolve"))
            else:
                tpl_cls = template.class_ref
                if template.class_ref not in tgt_scope:
                    out.append(Violation(template.id, "CONTAINMENT_FORBIDDEN", 0,
                                         "template class is outside the target meta-model"))
                if mm.classes[template.class_ref].abstract:
                    out.append(Violation(template.id, "ABSTRACT_CLASS", 0, "template class is abstract"))

        if template is not None:
            out.extend(_check_assignments(store, mm, template, pat_cls, tpl_cls))

    uniq = {(v.element_id, v.code, v.constraint_id): v for v in out}
    return sort_violations(list(uniq.values()))


def _check_guards(store: Store, mm: Metamodel, pattern: Pattern) -> list[Violation]:
    out: list[Violation] = []
    attrs = {a.name: a for a in effective_attributes(pattern.class_ref, mm)}
    for guard in pattern.guards:
        try:
            name, op, literal = parse_guard(guard)
            attr = attrs.get(name)
            if attr is None:
                raise KernelError("GUARD_INVALID", f"guard attribute {name!r} is not in the pattern class")
            dt = mm.datatypes.get(attr.datatype)
            if dt is None:
                raise KernelError("GUARD_INVALID", f"guard attribute {name!r} has no datatype")
            if op in _ORDER_OPS and dt.base not in (Base.INT, Base.REAL):
                raise KernelError("GUARD_INVALID", f"ordering comparator on {dt.base.value}")
            try:
                wire.parse_value(literal, dt.base)
            except KernelError:
                raise KernelError("GUARD_INVALID", f"guard literal {literal.text!r} is not a {dt.base.value}") from None
        except KernelError as exc:
            out.append(Violation(pattern.id, "GUARD_INVALID", 0, exc.message))
    if pattern.lg_linkage != NO_ID:
        link = mm.linkages.get(pattern.lg_linkage)
        if link is None or link.variant is Variant.INHERITANCE:
            out.append(Violation(pattern.id, "GUARD_INVALID", 0, "link guard linkage does not resolve"))
        if pattern.lg_end not in ("A", "B"):
            out.append(Violation(pattern.id, "GUARD_INVALID", 0, "link guard end must be A or B"))
        if pattern.lg_peer != NO_ID and pattern.lg_peer not in mm.classes:
            out.append(Violation(pattern.id, "GUARD_INVALID", 0, "link guard peer class does not resolve"))
    return out


def _check_assignments(store: Store, mm: Metamodel, template: Template,
                       pat_cls: int | None, tpl_cls: int | None) -> list[Violation]:
    out: list[Violation] = []
    src_attrs = {a.id: a for a in effective_attributes(pat_cls, mm)} if pat_cls else {}
    dst_attrs = {a.id: a for a in effective_attributes(tpl_cls, mm)} if tpl_cls else {}
    for asg in (c for c in store.children(template.id) if kind_of(c) is K.ASSIGNMENT):
        if asg.dst == NO_ID or (tpl_cls and asg.dst not in dst_attrs):
            out.append(Violation(asg.id, "MISSING_REF", 0, "dst is not an attribute of the target class"))
            continue
        dst = mm.attributes.get(asg.dst)
        if dst is None:
            out.append(Violation(asg.id, "MISSING_REF", 0, "dst attribute does not resolve"))
            continue
        if dst.potency == 0:
            out.append(Violation(asg.id, "POTENCY_FROZEN", 0, "dst attribute is fixed at M2"))
        dst_dt = mm.datatypes.get(dst.datatype)
        dst_unit = mm.unit(dst.unit)
        if asg.op in ("COPY", "SCALE"):
            if asg.src == NO_ID or (pat_cls and asg.src not in src_attrs):
                out.append(Violation(asg.id, "MISSING_REF", 0, "src is not an attribute of the pattern class"))
                continue
            src = mm.attributes.get(asg.src)
            if src is None:
                out.append(Violation(asg.id, "MISSING_REF", 0, "src attribute does not resolve"))
                continue
            src_dt = mm.datatypes.get(src.datatype)
            src_unit = mm.unit(src.unit)
            if src_dt is None or dst_dt is None or src_dt.base is not dst_dt.base:
                out.append(Violation(asg.id, "TYPE_MISMATCH", 0, "src and dst datatypes differ"))
            elif asg.op == "SCALE" and dst_dt.base is not Base.REAL:
                out.append(Violation(asg.id, "TYPE_MISMATCH", 0, "SCALE requires REAL attributes"))
            if src_unit is None or dst_unit is None or src_unit.dims != dst_unit.dims:
                out.append(Violation(asg.id, "UNIT_MISMATCH", 0, "src and dst units are incompatible"))
        else:  # CONST
            if asg.literal is None:
                out.append(Violation(asg.id, "TYPE_MISMATCH", 0, "CONST requires a literal"))
            elif dst_dt is not None:
                try:
                    wire.parse_value(wire.Token(asg.literal, dst_dt.base is Base.STRING, 0), dst_dt.base)
                except KernelError:
                    out.append(Violation(asg.id, "TYPE_MISMATCH", 0,
                                         f"literal {asg.literal!r} is not a {dst_dt.base.value}"))
    return out


def _matches(store: Store, mm: Metamodel, pattern: Pattern, inst: Instance) -> bool:
    if not mm.conforms(inst.class_ref, pattern.class_ref):
        return False
    attrs = {a.name: a for a in effective_attributes(pattern.class_ref, mm)}
    for guard in pattern.guards:
        name, op, literal_tok = parse_guard(guard)
        attr = attrs[name]
        base = mm.datatypes[attr.datatype].base
        literal = wire.parse_value(literal_tok, base)
        vals = get_values(inst, attr.id)
        if not vals:
            return False
        for v in vals:
            if op == "=":
                ok = v == literal
            elif op == "!=":
                ok = v != literal
            elif op == "<":
                ok = v < literal
            elif op == "<=":
                ok = v <= literal
            elif op == ">":
                ok = v > literal
            else:
                ok = v >= literal
            if not ok:
                return False
    if pattern.lg_linkage != NO_ID:
        end_self = "a" if pattern.lg_end == "A" else "b"
        end_peer = "b" if pattern.lg_end == "A" else "a"
        for lo in store.of_kind(K.LINK_OCCURRENCE):
            if lo.linkage != pattern.lg_linkage or getattr(lo, end_self) != inst.id:
                continue
            peer_id = getattr(lo, end_peer)
            if peer_id not in store.tables[K.INSTANCE]:
                continue
            peer = store.tables[K.INSTANCE][peer_id]
            if pattern.lg_peer == NO_ID or mm.conforms(peer.class_ref, pattern.lg_peer):
                return True
        return False
    return True


def run_transformation(store: Store, tm_id: int, source_root_id: int,
                       on_step: StepListener | None = None) -> tuple[int, int]:
    """Execute inside an already-open transaction; returns (target root, trace id).

    Raises TRANSFORM_INVALID / SOURCE_INVALID / TARGET_VIOLATIONS; the
    caller rolls the transaction back on error so no partial target persists.
    """
    static = validate_transformation(store, tm_id)
    if static:
        raise KernelError("TRANSFORM_INVALID", render_violations(static))
    tm = store.resolve(tm_id)

    src_root = store.resolve(source_root_id)
    if not (kind_of(src_root) is K.INSTANCE
            or (kind_of(src_root) is K.NAMESPACE and src_root.level is Level.M1)):
        raise KernelError("UNKNOWN_ID", f"element {source_root_id} is not an M1 model root")
    src_violations = evaluate(store, source_root_id)
    if src_violations:
        raise KernelError("SOURCE_INVALID", render_violations(src_violations))

    mm = store.metamodel()
    src_scope = store._closure(source_root_id)
    sources = [i for i in store.of_kind(K.INSTANCE) if i.id in src_scope]

    target_root = store.create(K.NAMESPACE, M1_FOLDER_ID, f"target{store.next_id}")

    records: list[tuple[int, int, tuple[int, ...], tuple[int, ...]]] = []
    notes: list[str] = []
    # source id -> (order, seq, target id); lowest (order, seq) wins for PARENT_IMAGE
    image: dict[int, tuple[int, int, int]] = {}
    made: list[tuple[int, Instance, Template]] = []  # target id, source, template
    seq = 0

    for rule in _rules_of(store, tm_id):
        pattern, template = _parts_of(store, rule.id)
        assignments = sorted((c for c in store.children(template.id) if kind_of(c) is K.ASSIGNMENT),
                             key=lambda a: a.id)
        for src in sources:
            if not _matches(store, mm, pattern, src):
                continue
            seq += 1
            if on_step:
                on_step(("MATCH", str(rule.id), str(src.id)))
            tgt_id = store.instantiate(template.class_ref, target_root, f"t{seq}")
            if on_step:
                on_step(("CREATE", str(rule.id), str(src.id), str(tgt_id)))
            tgt = store.resolve(tgt_id)
            for asg in assignments:
                dst = mm.attributes[asg.dst]
                if asg.op == "COPY":
                    vals = get_values(src, asg.src)
                elif asg.op == "SCALE":
                    vals = tuple(v * asg.factor for v in get_values(src, asg.src))
                else:
                    base = mm.datatypes[dst.datatype].base
                    vals = (wire.parse_value(wire.Token(asg.literal, base is Base.STRING, 0), base),)
                tgt = set_values(tgt, dst.id, vals)
                store._replace(tgt)
                for i, v in enumerate(vals):
                    store._event("UPDATED", tgt_id, (dst.name, str(i), "-", wire.render_value(v)))
                if on_step:
                    on_step(("ASSIGN", str(tgt_id), dst.name) + tuple(wire.render_value(v) for v in vals))
            if tgt.type_potency == 1 and src.type_value is not None:
                tgt = replace(tgt, type_value=src.type_value, type_potency=0)
                store._replace(tgt)
                store._event("UPDATED", tgt_id, ("type", "0", "-", wire.quote(src.type_value)))
            records.append((seq, rule.id, (src.id,), (tgt_id,)))
            made.append((tgt_id, src, template))
            key = image.get(src.id)
            if key is None or (rule.order, seq) < key[:2]:
                image[src.id] = (rule.order, seq, tgt_id)

    # containment phase: resolve parent images through the trace map
    for (rec_seq, _, (src_id,), (tgt_id,)), (_, src, template) in zip(records, made):
        if template.containment != "PARENT_IMAGE":
            continue
        parent_ok = False
        if store.index.get(src.owner) is K.INSTANCE and src.owner in image:
            parent_img = image[src.owner][2]
            tgt = store.resolve(tgt_id)
            store._replace(replace(tgt, owner=parent_img))
            store._event("UPDATED", tgt_id, ("owner", "0", str(target_root), str(parent_img)))
            parent_ok = True
        if not parent_ok:
            notes.append(f"seq {rec_seq}: source parent of {src_id} has no image; attached to target root")

    target_violations = evaluate(store, target_root)
    if target_violations:
        raise KernelError("TARGET_VIOLATIONS", render_violations(target_violations))

    trace_id = store.next_trace
    store.next_trace += 1
    store.traces[trace_id] = Trace(tm_id=tm_id, source_root=source_root_id,
                                   target_root=target_root, records=records, notes=notes)
    return target_root, trace_id


def element_path(store: Store, eid: int, stop: int) -> str:
    """Slash-joined names from below stop down to the element."""
    parts: list[str] = []
    cur = eid
    while cur != stop and cur in store.index:
        rec = store.resolve(cur)
        parts.append(rec.name)
        cur = rec.owner
    if cur != stop:
        return "/".join(reversed(parts)) if parts else "."
    return "/".join(reversed(parts)) if parts else "."


def render_trace(store: Store, trace_id: int) -> str:
    """Canonical trace byte stream; stable across re-runs and reloads."""
    trace = store.traces.get(trace_id)
    if trace is None:
        raise KernelError("UNKNOWN_ID", f"trace {trace_id} does not exist")
    src_root = trace.source_root
    lines = []
    for seq, rule_id, src_ids, tgt_ids in trace.records:
        rule_name = store.resolve(rule_id).name if rule_id in store.index else "?"
        src_paths = " ".join(wire.quote(element_path(store, s, src_root)) for s in src_ids)
        tgt_paths = " ".join(wire.quote(element_path(store, t, trace.target_root)) for t in tgt_ids)
        lines.append(f"{seq} rule {wire.quote(rule_name)} src {src_paths} dst {tgt_paths}")
    for note in trace.notes:
        lines.append(f"note {wire.quote(note)}")
    return "\n".join(lines) + "\n" if lines else ""
