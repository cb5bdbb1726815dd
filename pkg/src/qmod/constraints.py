"""Declarative checks evaluated at commit and on demand.

Four built-in kinds (multiplicity, unique names, potency requirement,
unit match) are always active; explicit constraint elements add ATTR_RANGE
and per-element scoping. Violations are reported as data in canonical
(element, code, constraint) order; evaluation never mutates the store.

The unit-match built-in has no observable effect at store level; it is
the transformation-time assignment check surfaced by the transformation
validator.
"""

from __future__ import annotations

from .errors import Violation, sort_violations
from .meta import (
    NO_ID,
    RESERVED_IDS,
    Base,
    ElementKind,
    Level,
    Variant,
    effective_attributes,
    get_values,
    kind_of,
    validate_metamodel,
    value_matches,
)
from .store import Store

K = ElementKind

WHOLE_MODEL = None

# explicit built-in constraint kind -> violation codes it re-attributes
_FAMILY = {
    "MULTIPLICITY": ("LOWER_BOUND", "UPPER_BOUND"),
    "UNIQUE_NAME": ("NAME_CLASH",),
    "POTENCY_REQUIRED": ("POTENCY_REQUIRED",),
    "UNIT_MATCH": ("UNIT_MISMATCH",),
}


def evaluate(store: Store, scope: int | None = WHOLE_MODEL) -> list[Violation]:
    """All violations within scope, canonically ordered; pure read.

    scope: None for the whole model, a namespace id for its subtree, or
    any element id for that element alone.
    """
    scope_ids: set[int] | None = None
    if scope is not WHOLE_MODEL:
        rec = store.resolve(scope)
        if kind_of(rec) in (K.NAMESPACE, K.ROOT_FOLDER):
            scope_ids = store._closure(scope)
        else:
            scope_ids = {scope}

    out = _evaluate_full(store)
    if scope_ids is not None:
        out = [v for v in out if v.element_id in scope_ids]
    return sort_violations(out)


def enforce_at_commit(store: Store) -> list[Violation]:
    """Consistency gate for COMMIT; nonempty result aborts the commit."""
    return _evaluate_full(store)


def _evaluate_full(store: Store) -> list[Violation]:
    out: list[Violation] = []
    mm = store.metamodel()

    out.extend(validate_metamodel(
        store.of_kind(K.CLASS), store.of_kind(K.ATTRIBUTE),
        store.of_kind(K.ASSOCIATION) + store.of_kind(K.COMPOSITION) + store.of_kind(K.INHERITANCE),
        store.of_kind(K.UNIT), store.of_kind(K.DATATYPE)))

    # sibling name uniqueness across every kind (the M2 pass above only sees M2 records)
    by_owner_name: dict[tuple[int, str], list[int]] = {}
    for rec in store.records():
        by_owner_name.setdefault((rec.owner, rec.name), []).append(rec.id)
    for (_, name), ids in by_owner_name.items():
        if len(ids) > 1:
            for eid in ids:
                out.append(Violation(eid, "NAME_CLASH", 0, f"sibling name {name!r} is not unique"))

    # referential integrity: every stored reference resolves
    for rec in store.records():
        for ref in _refs_of(rec):
            if ref != NO_ID and ref not in store.index:
                out.append(Violation(rec.id, "MISSING_REF", 0, f"reference {ref} does not resolve"))

    # containment legality (create() enforces it; re-checked for load safety)
    for rec in store.records():
        if rec.id in RESERVED_IDS:
            continue
        k = kind_of(rec)
        owner = store.tables[store.index[rec.owner]][rec.owner] if rec.owner in store.index else None
        if owner is None:
            out.append(Violation(rec.id, "MISSING_REF", 0, f"owner {rec.owner} does not resolve"))
            continue
        if k is K.INSTANCE:
            ok = kind_of(owner) is K.NAMESPACE and owner.level is Level.M1
            if kind_of(owner) is K.INSTANCE:
                ok = owner.class_ref in mm.classes and rec.class_ref in mm.classes and any(
                    l.variant is Variant.COMPOSITION
                    and mm.conforms(owner.class_ref, l.end_a) and mm.conforms(rec.class_ref, l.end_b)
                    for l in mm.linkages.values())
            if not ok:
                out.append(Violation(rec.id, "CONTAINMENT_FORBIDDEN", 0,
                                     f"instance {rec.id} is not admitted under {rec.owner}"))
        elif k not in store.allowed_child_kinds(owner):
            out.append(Violation(rec.id, "CONTAINMENT_FORBIDDEN", 0,
                                 f"{k.value} {rec.id} is not allowed under {kind_of(owner).value} {rec.owner}"))

    # transformation models must name their meta-models before commit
    for tm in store.of_kind(K.TRANSFORMATION_MODEL):
        for ref, label in ((tm.source, "source"), (tm.target, "target")):
            if ref == NO_ID:
                out.append(Violation(tm.id, "MISSING_REF", 0, f"transformation {tm.id} has no {label} meta-model"))

    out.extend(_check_instances(store))
    out.extend(_check_links(store))
    out.extend(_check_link_multiplicities(store))
    out.extend(_check_constraints(store))
    out.extend(_reattribute(store, out))

    uniq = {(v.element_id, v.code, v.constraint_id): v for v in out}
    return sort_violations(list(uniq.values()))


def _refs_of(rec) -> list[int]:
    k = kind_of(rec)
    if k is K.ATTRIBUTE:
        return [rec.datatype, rec.unit]
    if k in (K.ASSOCIATION, K.COMPOSITION, K.INHERITANCE):
        return [rec.end_a, rec.end_b]
    if k is K.CONSTRAINT:
        return [rec.target]
    if k is K.INSTANCE:
        return [rec.class_ref]
    if k is K.LINK_OCCURRENCE:
        return [rec.linkage, rec.a, rec.b]
    if k is K.TRANSFORMATION_MODEL:
        return [rec.source, rec.target]
    if k is K.PATTERN:
        return [rec.class_ref, rec.lg_linkage, rec.lg_peer]
    if k is K.TEMPLATE:
        return [rec.class_ref]
    if k is K.ASSIGNMENT:
        return [rec.src, rec.dst]
    return []


def _check_instances(store: Store) -> list[Violation]:
    out: list[Violation] = []
    mm = store.metamodel()
    for inst in store.of_kind(K.INSTANCE):
        cls = mm.classes.get(inst.class_ref)
        if cls is None:
            out.append(Violation(inst.id, "MISSING_REF", 0, f"instance {inst.id} class does not resolve"))
            continue
        if cls.abstract:
            out.append(Violation(inst.id, "ABSTRACT_CLASS", 0, f"instance {inst.id} of abstract class {cls.id}"))
        if inst.type_value is None:
            out.append(Violation(inst.id, "POTENCY_REQUIRED", 0,
                                 f"instance {inst.id} must set its type value"))
        if inst.type_potency not in (0, 1) or (inst.type_value is not None and inst.type_potency != 0):
            out.append(Violation(inst.id, "BOUNDS_INVALID", 0,
                                 f"instance {inst.id} type potency {inst.type_potency} is inconsistent"))
        for a in effective_attributes(cls.id, mm):
            vals = get_values(inst, a.id)
            dt = mm.datatypes.get(a.datatype)
            if dt is not None and any(not value_matches(v, dt.base) for v in vals):
                out.append(Violation(inst.id, "TYPE_MISMATCH", 0,
                                     f"instance {inst.id} attribute {a.name!r} value mismatches {dt.base.value}"))
            if a.potency == 0:
                if vals != a.fixed:
                    out.append(Violation(inst.id, "FIXED_VALUE_MISMATCH", 0,
                                         f"instance {inst.id} attribute {a.name!r} differs from fixed values"))
                continue
            if len(vals) < a.lower:
                out.append(Violation(inst.id, "LOWER_BOUND", 0,
                                     f"instance {inst.id} attribute {a.name!r} holds {len(vals)} < {a.lower} values"))
            if a.upper is not None and len(vals) > a.upper:
                out.append(Violation(inst.id, "UPPER_BOUND", 0,
                                     f"instance {inst.id} attribute {a.name!r} holds {len(vals)} > {a.upper} values"))
    return out


def _check_links(store: Store) -> list[Violation]:
    out: list[Violation] = []
    mm = store.metamodel()
    for lo in store.of_kind(K.LINK_OCCURRENCE):
        if NO_ID in (lo.linkage, lo.a, lo.b):
            out.append(Violation(lo.id, "MISSING_REF", 0, f"link {lo.id} is incomplete"))
            continue
        if lo.linkage not in mm.linkages or lo.a not in store.tables[K.INSTANCE] or lo.b not in store.tables[K.INSTANCE]:
            continue  # dangling refs already reported
        link = mm.linkages[lo.linkage]
        if link.variant is Variant.INHERITANCE:
            out.append(Violation(lo.id, "LINK_END_INVALID", 0, f"link {lo.id} references an inheritance"))
            continue
        a = store.tables[K.INSTANCE][lo.a]
        b = store.tables[K.INSTANCE][lo.b]
        if link.end_a != NO_ID and not mm.conforms(a.class_ref, link.end_a):
            out.append(Violation(lo.id, "LINK_END_INVALID", 0, f"link {lo.id} end a does not conform"))
        if link.end_b != NO_ID and not mm.conforms(b.class_ref, link.end_b):
            out.append(Violation(lo.id, "LINK_END_INVALID", 0, f"link {lo.id} end b does not conform"))
        if link.variant is Variant.COMPOSITION and b.owner != lo.a:
            out.append(Violation(lo.id, "LINK_END_INVALID", 0,
                                 f"composition link {lo.id} does not mirror containment"))
    return out


def _check_link_multiplicities(store: Store) -> list[Violation]:
    out: list[Violation] = []
    mm = store.metamodel()
    instances = store.of_kind(K.INSTANCE)
    links = store.of_kind(K.LINK_OCCURRENCE)
    for l in sorted(mm.linkages.values(), key=lambda x: x.id):
        if l.variant is Variant.INHERITANCE or NO_ID in (l.end_a, l.end_b):
            continue
        if l.variant is Variant.ASSOCIATION:
            for inst in instances:
                if mm.conforms(inst.class_ref, l.end_a):
                    n = sum(1 for lo in links if lo.linkage == l.id and lo.a == inst.id)
                    out.extend(_bound(inst.id, n, l.lower_b, l.upper_b, f"association {l.id} end b"))
                if mm.conforms(inst.class_ref, l.end_b):
                    n = sum(1 for lo in links if lo.linkage == l.id and lo.b == inst.id)
                    out.extend(_bound(inst.id, n, l.lower_a, l.upper_a, f"association {l.id} end a"))
        else:  # composition: children are owned instances
            for inst in instances:
                if mm.conforms(inst.class_ref, l.end_a):
                    n = sum(1 for c in instances
                            if c.owner == inst.id and mm.conforms(c.class_ref, l.end_b))
                    out.extend(_bound(inst.id, n, l.lower_b, l.upper_b, f"composition {l.id} children"))
    return out


def _bound(eid: int, n: int, lower: int, upper: int | None, what: str) -> list[Violation]:
    out = []
    if n < lower:
        out.append(Violation(eid, "LOWER_BOUND", 0, f"element {eid} has {n} < {lower} of {what}"))
    if upper is not None and n > upper:
        out.append(Violation(eid, "UPPER_BOUND", 0, f"element {eid} has {n} > {upper} of {what}"))
    return out


def _check_constraints(store: Store) -> list[Violation]:
    out: list[Violation] = []
    mm = store.metamodel()
    for c in store.of_kind(K.CONSTRAINT):
        if c.rule != "ATTR_RANGE":
            continue
        attr = mm.attributes.get(c.target)
        if attr is None:
            out.append(Violation(c.id, "MISSING_REF", 0, f"constraint {c.id} needs an attribute target"))
            continue
        dt = mm.datatypes.get(attr.datatype)
        if dt is None or dt.base not in (Base.INT, Base.REAL):
            out.append(Violation(c.id, "TYPE_MISMATCH", 0, f"constraint {c.id} targets a non-numeric attribute"))
            continue
        for inst in store.of_kind(K.INSTANCE):
            if inst.class_ref not in mm.classes:
                continue
            if any(a.id == attr.id for a in effective_attributes(inst.class_ref, mm)):
                for v in get_values(inst, attr.id):
                    if not isinstance(v, (int, float)) or isinstance(v, bool):
                        continue
                    if (c.lo is not None and v < c.lo) or (c.hi is not None and v > c.hi):
                        out.append(Violation(inst.id, "VALUE_OUT_OF_RANGE", c.id,
                                             f"instance {inst.id} value {v} outside constraint {c.id}"))
                        break
    return out


def _reattribute(store: Store, found: list[Violation]) -> list[Violation]:
    """Duplicate built-in violations under explicit scoping constraints."""
    out: list[Violation] = []
    for c in store.of_kind(K.CONSTRAINT):
        codes = _FAMILY.get(c.rule)
        if not codes:
            continue
        covered: set[int] | None
        if c.target == NO_ID:
            covered = store._closure(c.owner)
        elif c.target in store.index:
            covered = {c.target}
        else:
            covered = set()
        for v in found:
            if v.constraint_id == 0 and v.code in codes and v.element_id in covered:
                out.append(Violation(v.element_id, v.code, c.id, v.message))
    return out
