"""The essential meta-language: element kinds, levels, data types, units,
potency and linkage semantics, as immutable records plus pure checks.

Nothing here touches storage. Records reference each other exclusively by
integer element id (0 = no element); the store resolves them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .errors import KernelError, Violation, sort_violations

NO_ID = 0  # reserved "no element"

ROOT_ID = 1  # the one RootFolder
M2_FOLDER_ID = 2  # predefined meta-model region
M1_FOLDER_ID = 3  # predefined instance region
RESERVED_IDS = (ROOT_ID, M2_FOLDER_ID, M1_FOLDER_ID)


class Level(str, Enum):
    M3 = "M3"
    M2 = "M2"
    M1 = "M1"


class ElementKind(str, Enum):
    ROOT_FOLDER = "RootFolder"
    NAMESPACE = "Namespace"
    CONSTRAINT = "Constraint"
    CLASS = "Class"
    ATTRIBUTE = "Attribute"
    DATATYPE = "DataType"
    UNIT = "Unit"
    ASSOCIATION = "Association"
    COMPOSITION = "Composition"
    INHERITANCE = "Inheritance"
    INSTANCE = "Instance"
    LINK_OCCURRENCE = "LinkOccurrence"
    TRANSFORMATION_MODEL = "TransformationModel"
    RULE = "Rule"
    PATTERN = "Pattern"
    TEMPLATE = "Template"
    ASSIGNMENT = "Assignment"


class Base(str, Enum):
    """The four value representations."""

    BOOL = "BOOL"
    INT = "INT"
    REAL = "REAL"
    STRING = "STRING"


INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

Value = bool | int | float | str

Dims = tuple[int, int, int, int, int, int, int]  # exponents over kg, m, s, A, K, mol, cd
DIM_NAMES = ("kg", "m", "s", "A", "K", "mol", "cd")
DIMENSIONLESS_DIMS: Dims = (0, 0, 0, 0, 0, 0, 0)


@dataclass(frozen=True)
class Element:
    """Universal header: every element at every level carries exactly one."""

    id: int
    owner: int
    name: str
    level: Level


@dataclass(frozen=True)
class RootFolder(Element):
    pass


@dataclass(frozen=True)
class Namespace(Element):
    pass


@dataclass(frozen=True)
class ConstraintDef(Element):
    rule: str = "ATTR_RANGE"  # ATTR_RANGE | MULTIPLICITY | UNIQUE_NAME | POTENCY_REQUIRED | UNIT_MATCH
    target: int = NO_ID  # 0 = whole namespace
    lo: float | None = None
    hi: float | None = None


CONSTRAINT_KINDS = ("ATTR_RANGE", "MULTIPLICITY", "UNIQUE_NAME", "POTENCY_REQUIRED", "UNIT_MATCH")


@dataclass(frozen=True)
class MetaClass(Element):
    abstract: bool = False
    type_value: str | None = None
    type_potency: int = 2  # the M3 definition carries potency 2


@dataclass(frozen=True)
class AttributeDef(Element):
    datatype: int = NO_ID
    unit: int = NO_ID  # 0 = dimensionless
    lower: int = 1  # an attribute is a list of values with at least one entry
    upper: int | None = 1  # None = unbounded
    potency: int = 1  # 0 = value fixed at M2, 1 = supplied at M1
    fixed: tuple[Value, ...] = ()


@dataclass(frozen=True)
class DataTypeDef(Element):
    base: Base = Base.STRING


@dataclass(frozen=True)
class UnitDef(Element):
    symbol: str = "1"
    dims: Dims = DIMENSIONLESS_DIMS


# the ambient dimensionless unit; referenced as unit id 0, never stored
DIMENSIONLESS = UnitDef(id=NO_ID, owner=NO_ID, name="dimensionless", level=Level.M2,
                        symbol="1", dims=DIMENSIONLESS_DIMS)


class Variant(str, Enum):
    ASSOCIATION = "ASSOCIATION"
    COMPOSITION = "COMPOSITION"
    INHERITANCE = "INHERITANCE"


@dataclass(frozen=True)
class LinkageDef(Element):
    variant: Variant = Variant.ASSOCIATION
    end_a: int = NO_ID  # parent for COMPOSITION, subclass for INHERITANCE
    end_b: int = NO_ID  # child for COMPOSITION, superclass for INHERITANCE
    lower_a: int = 0
    upper_a: int | None = None
    lower_b: int = 0
    upper_b: int | None = None


@dataclass(frozen=True)
class Instance(Element):
    class_ref: int = NO_ID
    type_value: str | None = None
    type_potency: int = 0
    # canonical: pairs sorted by attribute-definition id
    values: tuple[tuple[int, tuple[Value, ...]], ...] = ()


@dataclass(frozen=True)
class LinkOccurrence(Element):
    linkage: int = NO_ID
    a: int = NO_ID
    b: int = NO_ID


@dataclass(frozen=True)
class TransformationModel(Element):
    source: int = NO_ID  # source meta-model namespace
    target: int = NO_ID  # target meta-model namespace


@dataclass(frozen=True)
class Rule(Element):
    order: int = 0


@dataclass(frozen=True)
class Pattern(Element):
    class_ref: int = NO_ID
    guards: tuple[str, ...] = ()  # each "attrName <op> <literal>"
    lg_linkage: int = NO_ID
    lg_end: str = "A"
    lg_peer: int = NO_ID


@dataclass(frozen=True)
class Template(Element):
    class_ref: int = NO_ID
    containment: str = "TARGET_ROOT"  # or PARENT_IMAGE


@dataclass(frozen=True)
class Assignment(Element):
    op: str = "COPY"  # COPY | CONST | SCALE
    src: int = NO_ID
    dst: int = NO_ID
    factor: float = 1.0
    literal: str | None = None


VARIANT_KIND = {
    Variant.ASSOCIATION: ElementKind.ASSOCIATION,
    Variant.COMPOSITION: ElementKind.COMPOSITION,
    Variant.INHERITANCE: ElementKind.INHERITANCE,
}

_KIND_BY_TYPE = {
    RootFolder: ElementKind.ROOT_FOLDER,
    Namespace: ElementKind.NAMESPACE,
    ConstraintDef: ElementKind.CONSTRAINT,
    MetaClass: ElementKind.CLASS,
    AttributeDef: ElementKind.ATTRIBUTE,
    DataTypeDef: ElementKind.DATATYPE,
    UnitDef: ElementKind.UNIT,
    Instance: ElementKind.INSTANCE,
    LinkOccurrence: ElementKind.LINK_OCCURRENCE,
    TransformationModel: ElementKind.TRANSFORMATION_MODEL,
    Rule: ElementKind.RULE,
    Pattern: ElementKind.PATTERN,
    Template: ElementKind.TEMPLATE,
    Assignment: ElementKind.ASSIGNMENT,
}


def kind_of(rec: Element) -> ElementKind:
    if isinstance(rec, LinkageDef):
        return VARIANT_KIND[rec.variant]
    return _KIND_BY_TYPE[type(rec)]


def valid_name(name: str) -> bool:
    return bool(name.strip()) and "\n" not in name and "\r" not in name


def value_matches(value: Value, base: Base) -> bool:
    # bool is an int subclass; test it first
    if base is Base.BOOL:
        return isinstance(value, bool)
    if base is Base.INT:
        return isinstance(value, int) and not isinstance(value, bool) and INT_MIN <= value <= INT_MAX
    if base is Base.REAL:
        return isinstance(value, float)
    return isinstance(value, str) and "\n" not in value and "\r" not in value


# ---------------------------------------------------------------------------
# Potency
# ---------------------------------------------------------------------------

def decrement_potency(p: int) -> int:
    """One instantiation step; at zero no more instantiations are possible."""
    if p <= 0:
        raise KernelError("POTENCY_EXHAUSTED", f"potency is {p}; no further instantiation is possible")
    return p - 1


# ---------------------------------------------------------------------------
# Units
# ---------------------------------------------------------------------------

def unit_compatible(u1: UnitDef, u2: UnitDef) -> bool:
    """Compatibility is dimension equality only; no scale conversion."""
    return u1.dims == u2.dims


# ---------------------------------------------------------------------------
# Meta-model view and pure checks
# ---------------------------------------------------------------------------

# field names served by the generic interface itself; attribute names must not shadow them
RESERVED_FIELDS = frozenset({"id", "name", "kind", "level", "owner", "class", "parent", "type", "potency"})


@dataclass
class Metamodel:
    """An id-consistent M2 element set, independent of any store."""

    classes: dict[int, MetaClass]
    attributes: dict[int, AttributeDef]
    linkages: dict[int, LinkageDef]
    units: dict[int, UnitDef]
    datatypes: dict[int, DataTypeDef]

    @classmethod
    def of(cls, classes=(), attributes=(), linkages=(), units=(), datatypes=()) -> "Metamodel":
        return cls(
            classes={c.id: c for c in classes},
            attributes={a.id: a for a in attributes},
            linkages={l.id: l for l in linkages},
            units={u.id: u for u in units},
            datatypes={d.id: d for d in datatypes},
        )

    def unit(self, unit_id: int) -> UnitDef | None:
        if unit_id == NO_ID:
            return DIMENSIONLESS
        return self.units.get(unit_id)

    def inheritances(self) -> list[LinkageDef]:
        return [l for l in self.linkages.values() if l.variant is Variant.INHERITANCE]

    def supers_of(self, class_id: int) -> list[int]:
        out = [l.end_b for l in self.inheritances() if l.end_a == class_id and l.end_b != NO_ID]
        return sorted(set(out))

    def ancestors(self, class_id: int) -> set[int]:
        """Transitive superclasses, excluding class_id; tolerant of cycles."""
        seen: set[int] = set()
        stack = self.supers_of(class_id)
        while stack:
            c = stack.pop()
            if c in seen:
                continue
            seen.add(c)
            stack.extend(self.supers_of(c))
        return seen

    def conforms(self, class_id: int, target_id: int) -> bool:
        return class_id == target_id or target_id in self.ancestors(class_id)


def effective_attributes(class_id: int, mm: Metamodel) -> list[AttributeDef]:
    """Own plus inherited attribute definitions, deduplicated, ascending id.

    Name collisions between distinct inherited definitions are a
    validate_metamodel violation, not resolved here.
    """
    if class_id not in mm.classes:
        raise KernelError("UNKNOWN_ID", f"class {class_id} does not resolve")
    owners = {class_id} | mm.ancestors(class_id)
    out = [a for a in mm.attributes.values() if a.owner in owners]
    return sorted(out, key=lambda a: a.id)


def _inheritance_cycle_edges(mm: Metamodel) -> list[int]:
    """Ids of inheritance linkages participating in a cycle."""
    edges = [(l.id, l.end_a, l.end_b) for l in mm.inheritances()
             if l.end_a != NO_ID and l.end_b != NO_ID]
    # iteratively strip edges whose endpoints cannot be on a cycle
    adj: dict[int, set[int]] = {}
    for _, a, b in edges:
        adj.setdefault(a, set()).add(b)

    def reachable(start: int, goal: int) -> bool:
        seen, stack = set(), [start]
        while stack:
            n = stack.pop()
            if n == goal:
                return True
            if n in seen:
                continue
            seen.add(n)
            stack.extend(adj.get(n, ()))
        return False

    return sorted(eid for eid, a, b in edges if reachable(b, a))


def validate_metamodel(classes, attributes, linkages, units, datatypes) -> list[Violation]:
    """All rule breaches of an M2 element set, ascending (element, code).

    An empty result means the meta-model is well formed: acyclic
    inheritance, resolvable references, valid multiplicities and unique
    names per owner.
    """
    mm = Metamodel.of(classes, attributes, linkages, units, datatypes)
    out: list[Violation] = []

    for eid in _inheritance_cycle_edges(mm):
        out.append(Violation(eid, "INHERITANCE_CYCLE", 0, f"inheritance {eid} lies on a cycle"))

    # sibling name uniqueness within this element set
    by_owner_name: dict[tuple[int, str], list[int]] = {}
    for rec in list(mm.classes.values()) + list(mm.attributes.values()) + \
            list(mm.linkages.values()) + list(mm.units.values()) + list(mm.datatypes.values()):
        by_owner_name.setdefault((rec.owner, rec.name), []).append(rec.id)
    for (_, name), ids in by_owner_name.items():
        if len(ids) > 1:
            for eid in ids:
                out.append(Violation(eid, "NAME_CLASH", 0, f"sibling name {name!r} is not unique"))

    for a in mm.attributes.values():
        if a.owner not in mm.classes:
            out.append(Violation(a.id, "MISSING_REF", 0, f"attribute {a.id} has no owning class"))
        if a.datatype not in mm.datatypes:
            out.append(Violation(a.id, "MISSING_REF", 0, f"attribute {a.id} datatype does not resolve"))
        if a.unit != NO_ID and a.unit not in mm.units:
            out.append(Violation(a.id, "MISSING_REF", 0, f"attribute {a.id} unit does not resolve"))
        if a.lower < 1 or (a.upper is not None and a.upper < a.lower):
            out.append(Violation(a.id, "BOUNDS_INVALID", 0, f"attribute {a.id} bounds {a.lower}..{a.upper}"))
        if a.potency not in (0, 1):
            out.append(Violation(a.id, "BOUNDS_INVALID", 0, f"attribute {a.id} potency {a.potency}"))
        if a.name in RESERVED_FIELDS:
            out.append(Violation(a.id, "NAME_CLASH", 0, f"attribute name {a.name!r} shadows a built-in field"))
        if a.potency == 0:
            dt = mm.datatypes.get(a.datatype)
            if len(a.fixed) < a.lower:
                out.append(Violation(a.id, "LOWER_BOUND", 0, f"attribute {a.id} fixed values below lower bound"))
            if a.upper is not None and len(a.fixed) > a.upper:
                out.append(Violation(a.id, "UPPER_BOUND", 0, f"attribute {a.id} fixed values above upper bound"))
            if dt is not None and any(not value_matches(v, dt.base) for v in a.fixed):
                out.append(Violation(a.id, "TYPE_MISMATCH", 0, f"attribute {a.id} fixed values mismatch {dt.base.value}"))

    for c in mm.classes.values():
        # the only reachable pairs: type unset at potency 2, or consumed at M2 to 1
        consistent = (c.type_value is None and c.type_potency == 2) or \
                     (c.type_value is not None and c.type_potency == 1)
        if not consistent:
            out.append(Violation(c.id, "BOUNDS_INVALID", 0,
                                 f"class {c.id} type potency {c.type_potency} inconsistent with its type value"))

    for l in mm.linkages.values():
        for end in (l.end_a, l.end_b):
            if end == NO_ID or end not in mm.classes:
                out.append(Violation(l.id, "MISSING_REF", 0, f"linkage {l.id} end does not resolve"))
        if l.variant is not Variant.INHERITANCE:
            for lo, up in ((l.lower_a, l.upper_a), (l.lower_b, l.upper_b)):
                if lo < 0 or (up is not None and up < lo):
                    out.append(Violation(l.id, "BOUNDS_INVALID", 0, f"linkage {l.id} bounds {lo}..{up}"))

    # inherited attribute name collisions (distinct definitions, same name)
    for cid in mm.classes:
        seen: dict[str, int] = {}
        for a in effective_attributes(cid, mm):
            if a.name in seen and seen[a.name] != a.id:
                out.append(Violation(cid, "NAME_CLASH", 0,
                                     f"class {cid} inherits attributes {seen[a.name]} and {a.id} both named {a.name!r}"))
            else:
                seen[a.name] = a.id

    # dedupe (same element, same code may be hit twice via different paths)
    uniq = {(v.element_id, v.code, v.constraint_id): v for v in out}
    return sort_violations(list(uniq.values()))


def set_values(inst: Instance, attr_id: int, values: tuple[Value, ...]) -> Instance:
    """Copy-on-write slot update keeping the pair list sorted by attr id."""
    pairs = dict(inst.values)
    pairs[attr_id] = values
    return replace(inst, values=tuple(sorted(pairs.items())))


def get_values(inst: Instance, attr_id: int) -> tuple[Value, ...]:
    for aid, vals in inst.values:
        if aid == attr_id:
            return vals
    return ()
