"""The minimal runtime: an object-relational in-memory store.

One ordered table per element kind, keyed by element id; records hold ids,
never object references. A single global counter assigns ids (ascending,
never recycled once committed). All mutating operations run inside a
transaction managed by the protocol layer: begin() snapshots the tables,
rollback() restores them, commit happens after the constraint check.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import wire
from .errors import KernelError
from .meta import (
    M1_FOLDER_ID,
    NO_ID,
    RESERVED_IDS,
    ROOT_ID,
    Assignment,
    AttributeDef,
    Base,
    ConstraintDef,
    CONSTRAINT_KINDS,
    DataTypeDef,
    Element,
    ElementKind,
    Instance,
    Level,
    LinkageDef,
    LinkOccurrence,
    MetaClass,
    Metamodel,
    Namespace,
    Pattern,
    RootFolder,
    Rule,
    Template,
    TransformationModel,
    UnitDef,
    Value,
    Variant,
    decrement_potency,
    effective_attributes,
    get_values,
    kind_of,
    set_values,
    valid_name,
)

K = ElementKind


@dataclass(frozen=True)
class Event:
    """One applied change, recorded in transaction order."""

    op: str  # CREATED | UPDATED | DELETED | LINKED | UNLINKED | RETYPED
    element_id: int
    details: tuple[str, ...]  # pre-rendered wire tokens


@dataclass
class Trace:
    """Execution trace of one transformation run; not serialized."""

    tm_id: int
    source_root: int
    target_root: int
    records: list[tuple[int, int, tuple[int, ...], tuple[int, ...]]]  # seq, rule, sources, targets
    notes: list[str]


# owner kind -> child kinds creatable via CREATE
_M2_NS_CHILDREN = frozenset({
    K.NAMESPACE, K.CLASS, K.CONSTRAINT, K.UNIT, K.DATATYPE,
    K.ASSOCIATION, K.COMPOSITION, K.INHERITANCE, K.TRANSFORMATION_MODEL,
})

READ_ONLY = {"id", "kind", "level", "owner"}
_INSTANCE_READ_ONLY = {"class", "parent", "potency"}


class Store:
    def __init__(self):
        self.tables: dict[ElementKind, dict[int, Element]] = {k: {} for k in ElementKind}
        self.index: dict[int, ElementKind] = {}
        self.next_id = 1
        self.tx_open = False
        self.tx_created: set[int] = set()
        self.tx_events: list[Event] = []
        self.committed_tx = 0
        self.traces: dict[int, Trace] = {}
        self.next_trace = 1
        self._snap = None
        self._insert(RootFolder(id=self._take_id(), owner=NO_ID, name="root", level=Level.M3))
        self._insert(Namespace(id=self._take_id(), owner=ROOT_ID, name="M2", level=Level.M2))
        self._insert(Namespace(id=self._take_id(), owner=ROOT_ID, name="M1", level=Level.M1))

    # -- registry plumbing ---------------------------------------------------

    def _take_id(self) -> int:
        i = self.next_id
        self.next_id += 1
        return i

    def _insert(self, rec: Element) -> None:
        self.tables[kind_of(rec)][rec.id] = rec
        self.index[rec.id] = kind_of(rec)

    def _replace(self, rec: Element) -> None:
        self.tables[kind_of(rec)][rec.id] = rec

    def _remove(self, eid: int) -> None:
        del self.tables[self.index.pop(eid)][eid]

    def resolve(self, eid: int) -> Element:
        kind = self.index.get(eid)
        if kind is None:
            raise KernelError("UNKNOWN_ID", f"element {eid} does not resolve")
        return self.tables[kind][eid]

    def all_ids(self) -> list[int]:
        return sorted(self.index)

    def records(self) -> list[Element]:
        return [self.resolve(i) for i in self.all_ids()]

    def of_kind(self, kind: ElementKind) -> list[Element]:
        return [self.tables[kind][i] for i in sorted(self.tables[kind])]

    def children(self, owner_id: int) -> list[Element]:
        return [r for r in self.records() if r.owner == owner_id]

    def is_draft(self, eid: int) -> bool:
        return self.tx_open and eid in self.tx_created

    def metamodel(self) -> Metamodel:
        return Metamodel.of(
            classes=self.of_kind(K.CLASS),
            attributes=self.of_kind(K.ATTRIBUTE),
            linkages=self.of_kind(K.ASSOCIATION) + self.of_kind(K.COMPOSITION) + self.of_kind(K.INHERITANCE),
            units=self.of_kind(K.UNIT),
            datatypes=self.of_kind(K.DATATYPE),
        )

    def eff_attrs(self, class_id: int) -> list[AttributeDef]:
        return effective_attributes(class_id, self.metamodel())

    def conforms(self, class_id: int, target_id: int) -> bool:
        return self.metamodel().conforms(class_id, target_id)

    # -- transactions ----------------------------------------------------------

    def begin(self) -> None:
        if self.tx_open:
            raise KernelError("TX_NESTED")
        self._snap = (
            {k: dict(t) for k, t in self.tables.items()},
            dict(self.index),
            self.next_id,
            dict(self.traces),
            self.next_trace,
        )
        self.tx_open = True
        self.tx_created = set()
        self.tx_events = []

    def rollback(self) -> None:
        if not self.tx_open:
            raise KernelError("TX_NONE")
        tables, index, next_id, traces, next_trace = self._snap
        self.tables = tables
        self.index = index
        self.next_id = next_id
        self.traces = traces
        self.next_trace = next_trace
        self._end_tx()

    def commit_applied(self) -> list[Event]:
        """Finalize after the consistency check passed; returns the change log."""
        if not self.tx_open:
            raise KernelError("TX_NONE")
        events = self.tx_events
        self.committed_tx += 1
        self._end_tx()
        return events

    def _end_tx(self) -> None:
        self.tx_open = False
        self.tx_created = set()
        self.tx_events = []
        self._snap = None

    def _event(self, op: str, eid: int, details: tuple[str, ...]) -> None:
        self.tx_events.append(Event(op, eid, details))

    def touched_since_begin(self) -> set[int]:
        return {e.element_id for e in self.tx_events}

    # -- containment -----------------------------------------------------------

    def allowed_child_kinds(self, owner: Element) -> frozenset[ElementKind]:
        k = kind_of(owner)
        if k is K.ROOT_FOLDER:
            return frozenset({K.NAMESPACE})
        if k is K.NAMESPACE:
            if owner.level is Level.M1:
                if owner.id == M1_FOLDER_ID:
                    return frozenset({K.NAMESPACE, K.LINK_OCCURRENCE})
                return frozenset({K.LINK_OCCURRENCE})
            return _M2_NS_CHILDREN
        if k is K.CLASS:
            return frozenset({K.ATTRIBUTE})
        if k is K.TRANSFORMATION_MODEL:
            return frozenset({K.RULE})
        if k is K.RULE:
            return frozenset({K.PATTERN, K.TEMPLATE})
        if k is K.TEMPLATE:
            return frozenset({K.ASSIGNMENT})
        return frozenset()

    def _check_sibling_name(self, owner_id: int, name: str, skip: int = NO_ID) -> None:
        for sib in self.children(owner_id):
            if sib.id != skip and sib.name == name:
                raise KernelError("NAME_CLASH", f"sibling {sib.id} is already named {name!r}")

    # -- in-use freeze (M2 elements with live instances) ------------------------

    def _instances(self) -> list[Instance]:
        return self.of_kind(K.INSTANCE)

    def class_in_use(self, class_id: int) -> bool:
        mm = self.metamodel()
        return any(mm.conforms(i.class_ref, class_id) for i in self._instances())

    def _frozen_by_use(self, rec: Element) -> bool:
        k = kind_of(rec)
        if k is K.CLASS:
            return self.class_in_use(rec.id)
        if k is K.ATTRIBUTE:
            return rec.owner in self.tables[K.CLASS] and self.class_in_use(rec.owner)
        if k is K.INHERITANCE:
            return rec.end_a != NO_ID and self.class_in_use(rec.end_a)
        if k in (K.ASSOCIATION, K.COMPOSITION):
            if any(lo.linkage == rec.id for lo in self.of_kind(K.LINK_OCCURRENCE)):
                return True
            if k is K.COMPOSITION and rec.end_a != NO_ID and rec.end_b != NO_ID:
                mm = self.metamodel()
                for inst in self._instances():
                    owner_kind = self.index.get(inst.owner)
                    if owner_kind is K.INSTANCE:
                        parent = self.resolve(inst.owner)
                        if mm.conforms(parent.class_ref, rec.end_a) and mm.conforms(inst.class_ref, rec.end_b):
                            return True
            return False
        if k is K.DATATYPE:
            return any(a.datatype == rec.id and self.class_in_use(a.owner)
                       for a in self.of_kind(K.ATTRIBUTE))
        if k is K.UNIT:
            return any(a.unit == rec.id and self.class_in_use(a.owner)
                       for a in self.of_kind(K.ATTRIBUTE))
        return False

    # -- create ------------------------------------------------------------------

    def create(self, kind: ElementKind, owner_id: int, name: str) -> int:
        owner = self.resolve(owner_id)
        if kind not in self.allowed_child_kinds(owner):
            raise KernelError("CONTAINMENT_FORBIDDEN", f"{kind.value} is not allowed under {kind_of(owner).value} {owner_id}")
        if kind in (K.PATTERN, K.TEMPLATE):
            if any(kind_of(c) is kind for c in self.children(owner_id)):
                raise KernelError("CONTAINMENT_FORBIDDEN", f"rule {owner_id} already has a {kind.value}")
        if not valid_name(name):
            raise KernelError("NAME_INVALID", f"invalid name {name!r}")
        self._check_sibling_name(owner_id, name)

        level = Level.M1 if (kind is K.LINK_OCCURRENCE or owner.level is Level.M1) else Level.M2
        eid = self._take_id()
        hdr = dict(id=eid, owner=owner_id, name=name, level=level)
        if kind is K.NAMESPACE:
            rec: Element = Namespace(**hdr)
        elif kind is K.CONSTRAINT:
            rec = ConstraintDef(**hdr)
        elif kind is K.CLASS:
            rec = MetaClass(**hdr)
        elif kind is K.ATTRIBUTE:
            rec = AttributeDef(**hdr)
        elif kind is K.DATATYPE:
            rec = DataTypeDef(**hdr)
        elif kind is K.UNIT:
            rec = UnitDef(**hdr, symbol=name)
        elif kind in (K.ASSOCIATION, K.COMPOSITION, K.INHERITANCE):
            rec = LinkageDef(**hdr, variant=Variant(kind.value.upper()))
        elif kind is K.LINK_OCCURRENCE:
            rec = LinkOccurrence(**hdr)
        elif kind is K.TRANSFORMATION_MODEL:
            rec = TransformationModel(**hdr)
        elif kind is K.RULE:
            rec = Rule(**hdr)
        elif kind is K.PATTERN:
            rec = Pattern(**hdr)
        elif kind is K.TEMPLATE:
            rec = Template(**hdr)
        elif kind is K.ASSIGNMENT:
            rec = Assignment(**hdr)
        else:  # RootFolder / Instance are never created via CREATE
            raise KernelError("CONTAINMENT_FORBIDDEN", f"{kind.value} cannot be created directly")
        self._insert(rec)
        self.tx_created.add(eid)
        op = "LINKED" if kind is K.LINK_OCCURRENCE else "CREATED"
        self._event(op, eid, (kind.value, str(owner_id), wire.quote(name)))
        return eid

    # -- instantiate ---------------------------------------------------------------

    def instantiate(self, class_id: int, parent_id: int, name: str) -> int:
        cls = self.resolve(class_id)
        if kind_of(cls) is K.INSTANCE:
            raise KernelError("POTENCY_EXHAUSTED", f"instance {class_id} cannot be instantiated further")
        if kind_of(cls) is not K.CLASS:
            raise KernelError("CONTAINMENT_FORBIDDEN", f"element {class_id} is not a class")
        if cls.abstract:
            raise KernelError("ABSTRACT_CLASS", f"class {class_id} is abstract")
        parent = self.resolve(parent_id)
        pk = kind_of(parent)
        if pk is K.NAMESPACE and parent.level is Level.M1:
            pass  # the M1 region root or a model folder
        elif pk is K.INSTANCE:
            mm = self.metamodel()
            admits = any(
                l.variant is Variant.COMPOSITION
                and mm.conforms(parent.class_ref, l.end_a) and mm.conforms(class_id, l.end_b)
                for l in mm.linkages.values()
            )
            if not admits:
                raise KernelError("CONTAINMENT_FORBIDDEN", f"no composition admits {class_id} under {parent_id}")
        else:
            raise KernelError("CONTAINMENT_FORBIDDEN", f"instances cannot live under {pk.value} {parent_id}")
        if not valid_name(name):
            raise KernelError("NAME_INVALID", f"invalid name {name!r}")
        self._check_sibling_name(parent_id, name)

        tp = decrement_potency(cls.type_potency)
        inst = Instance(id=self._take_id(), owner=parent_id, name=name, level=Level.M1,
                        class_ref=class_id, type_value=cls.type_value, type_potency=tp)
        for a in self.eff_attrs(class_id):
            if a.potency == 0:
                inst = set_values(inst, a.id, a.fixed)
        self._insert(inst)
        self.tx_created.add(inst.id)
        tv = wire.quote(cls.type_value) if cls.type_value is not None else "-"
        self._event("CREATED", inst.id,
                    (K.INSTANCE.value, str(parent_id), wire.quote(name), str(class_id), tv))
        return inst.id

    # -- read -----------------------------------------------------------------------

    def read(self, eid: int, field: str) -> tuple[list[Value], bool]:
        """Returns (values, draft flag); single-valued fields yield one element."""
        rec = self.resolve(eid)
        return self._read_field(rec, field), self.is_draft(eid)

    def _read_field(self, rec: Element, field: str) -> list[Value]:
        k = kind_of(rec)
        if field == "name":
            return [rec.name]
        if field == "id":
            return [rec.id]
        if field == "kind":
            return [k.value]
        if field == "level":
            return [rec.level.value]
        if field == "owner":
            return [rec.owner]

        if k is K.CLASS:
            if field == "abstract":
                return [rec.abstract]
            if field == "type":
                return [] if rec.type_value is None else [rec.type_value]
            if field == "potency":
                return [rec.type_potency]
        elif k is K.ATTRIBUTE:
            if field == "datatype":
                return [rec.datatype]
            if field == "unit":
                return [rec.unit]
            if field == "lower":
                return [rec.lower]
            if field == "upper":
                return ["*"] if rec.upper is None else [rec.upper]
            if field == "potency":
                return [rec.potency]
            if field == "fixed":
                return list(rec.fixed)
        elif k is K.DATATYPE:
            if field == "base":
                return [rec.base.value]
        elif k is K.UNIT:
            if field == "symbol":
                return [rec.symbol]
            if field == "dims":
                return list(rec.dims)
        elif k in (K.ASSOCIATION, K.COMPOSITION, K.INHERITANCE):
            if field == "enda":
                return [rec.end_a]
            if field == "endb":
                return [rec.end_b]
            if k is not K.INHERITANCE:
                if field == "lowera":
                    return [rec.lower_a]
                if field == "uppera":
                    return ["*"] if rec.upper_a is None else [rec.upper_a]
                if field == "lowerb":
                    return [rec.lower_b]
                if field == "upperb":
                    return ["*"] if rec.upper_b is None else [rec.upper_b]
        elif k is K.CONSTRAINT:
            if field == "rule":
                return [rec.rule]
            if field == "target":
                return [rec.target]
            if field == "min":
                return [] if rec.lo is None else [rec.lo]
            if field == "max":
                return [] if rec.hi is None else [rec.hi]
        elif k is K.INSTANCE:
            if field == "class":
                return [rec.class_ref]
            if field == "parent":
                parent = rec.owner if self.index.get(rec.owner) is K.INSTANCE else NO_ID
                return [parent]
            if field == "type":
                return [] if rec.type_value is None else [rec.type_value]
            if field == "potency":
                return [rec.type_potency]
            for a in self.eff_attrs(rec.class_ref):
                if a.name == field:
                    return list(get_values(rec, a.id))
        elif k is K.LINK_OCCURRENCE:
            if field == "linkage":
                return [rec.linkage]
            if field == "a":
                return [rec.a]
            if field == "b":
                return [rec.b]
        elif k is K.TRANSFORMATION_MODEL:
            if field == "source":
                return [rec.source]
            if field == "target":
                return [rec.target]
        elif k is K.RULE:
            if field == "order":
                return [rec.order]
        elif k is K.PATTERN:
            if field == "class":
                return [rec.class_ref]
            if field == "guard":
                return list(rec.guards)
            if field == "lglinkage":
                return [rec.lg_linkage]
            if field == "lgend":
                return [rec.lg_end]
            if field == "lgpeer":
                return [rec.lg_peer]
        elif k is K.TEMPLATE:
            if field == "class":
                return [rec.class_ref]
            if field == "containment":
                return [rec.containment]
        elif k is K.ASSIGNMENT:
            if field == "op":
                return [rec.op]
            if field == "src":
                return [rec.src]
            if field == "dst":
                return [rec.dst]
            if field == "factor":
                return [rec.factor]
            if field == "literal":
                return [] if rec.literal is None else [rec.literal]
        raise KernelError("UNKNOWN_FIELD", f"{k.value} has no field {field!r}")

    # -- update -----------------------------------------------------------------------

    def update(self, eid: int, field: str, index: int, token: wire.Token) -> None:
        rec = self.resolve(eid)
        if eid in RESERVED_IDS:
            raise KernelError("RESERVED_ELEMENT", f"element {eid} is reserved")
        k = kind_of(rec)
        read_only = READ_ONLY | (_INSTANCE_READ_ONLY if k is K.INSTANCE else set())
        if k is K.CLASS and field == "potency":
            read_only = read_only | {"potency"}
        if field in read_only:
            # probe field existence first so unknown fields stay UNKNOWN_FIELD
            self._read_field(rec, field)
            raise KernelError("READ_ONLY_FIELD", f"field {field!r} cannot be written")

        if field == "name":
            self._single(index)
            name = token.text
            if not valid_name(name):
                raise KernelError("NAME_INVALID", f"invalid name {name!r}")
            if k in (K.CLASS, K.ATTRIBUTE, K.INHERITANCE) and self._frozen_by_use(rec):
                raise KernelError("META_IN_USE", f"element {eid} has live instances")
            self._check_sibling_name(rec.owner, name, skip=eid)
            self._apply(rec, "name", name, index, wire.quote(rec.name), wire.quote(name))
            return

        handler = {
            K.CLASS: self._update_class,
            K.ATTRIBUTE: self._update_attribute,
            K.DATATYPE: self._update_datatype,
            K.UNIT: self._update_unit,
            K.ASSOCIATION: self._update_linkage,
            K.COMPOSITION: self._update_linkage,
            K.INHERITANCE: self._update_linkage,
            K.CONSTRAINT: self._update_constraint,
            K.INSTANCE: self._update_instance,
            K.LINK_OCCURRENCE: self._update_link,
            K.TRANSFORMATION_MODEL: self._update_tm,
            K.RULE: self._update_rule,
            K.PATTERN: self._update_pattern,
            K.TEMPLATE: self._update_template,
            K.ASSIGNMENT: self._update_assignment,
        }.get(k)
        if handler is None:
            raise KernelError("UNKNOWN_FIELD", f"{k.value} has no field {field!r}")
        handler(rec, field, index, token)

    def _single(self, index: int) -> None:
        if index != 0:
            raise KernelError("INDEX_OUT_OF_RANGE", "single-valued field takes index 0")

    def _apply(self, rec: Element, attr: str, value, index: int, old_tok: str, new_tok: str,
               field: str | None = None) -> None:
        self._replace(replace(rec, **{attr: value}))
        self._event("UPDATED", rec.id, (field or attr, str(index), old_tok, new_tok))

    def _ref(self, token: wire.Token, kinds: tuple[ElementKind, ...], allow_none: bool = False) -> int:
        target = wire.parse_value(token, Base.INT)
        if target == NO_ID and allow_none:
            return NO_ID
        got = kind_of(self.resolve(target))
        if got not in kinds:
            raise KernelError("TYPE_MISMATCH", f"element {target} is a {got.value}, expected {'/'.join(x.value for x in kinds)}")
        return target

    def _upper(self, token: wire.Token) -> int | None:
        if not token.quoted and token.text == "*":
            return None
        v = wire.parse_value(token, Base.INT)
        return v

    def _update_class(self, rec: MetaClass, field: str, index: int, token: wire.Token) -> None:
        if field == "abstract":
            self._single(index)
            if self._frozen_by_use(rec):
                raise KernelError("META_IN_USE", f"class {rec.id} has live instances")
            v = wire.parse_value(token, Base.BOOL)
            self._apply(rec, "abstract", v, index, wire.render_value(rec.abstract), wire.render_value(v))
        elif field == "type":
            self._single(index)
            if self._frozen_by_use(rec):
                raise KernelError("META_IN_USE", f"class {rec.id} has live instances")
            if rec.type_value is not None:
                raise KernelError("POTENCY_FROZEN", f"type of class {rec.id} is already set")
            v = wire.parse_value(token, Base.STRING)
            new = replace(rec, type_value=v, type_potency=decrement_potency(rec.type_potency))
            self._replace(new)
            self._event("UPDATED", rec.id, ("type", "0", "-", wire.quote(v)))
        else:
            raise KernelError("UNKNOWN_FIELD", f"Class has no writable field {field!r}")

    def _update_attribute(self, rec: AttributeDef, field: str, index: int, token: wire.Token) -> None:
        if field not in ("datatype", "unit", "lower", "upper", "potency", "fixed"):
            raise KernelError("UNKNOWN_FIELD", f"Attribute has no field {field!r}")
        if self._frozen_by_use(rec):
            raise KernelError("META_IN_USE", f"attribute {rec.id} belongs to a class with live instances")
        if field == "fixed":
            if rec.datatype == NO_ID:
                raise KernelError("TYPE_MISMATCH", "set datatype before fixed values")
            base = self.resolve(rec.datatype).base
            vals = list(rec.fixed)
            if index > len(vals):
                raise KernelError("INDEX_OUT_OF_RANGE", f"index {index} > length {len(vals)}")
            if index == len(vals) and rec.upper is not None and len(vals) + 1 > rec.upper:
                raise KernelError("UPPER_BOUND_EXCEEDED", f"attribute {rec.id} upper bound is {rec.upper}")
            v = wire.parse_value(token, base)
            old = wire.render_value(vals[index]) if index < len(vals) else "-"
            if index == len(vals):
                vals.append(v)
            else:
                vals[index] = v
            self._apply(rec, "fixed", tuple(vals), index, old, wire.render_value(v), field="fixed")
            return
        self._single(index)
        if field == "datatype":
            v = self._ref(token, (K.DATATYPE,))
            self._apply(rec, "datatype", v, index, str(rec.datatype), str(v))
        elif field == "unit":
            v = self._ref(token, (K.UNIT,), allow_none=True)
            self._apply(rec, "unit", v, index, str(rec.unit), str(v))
        elif field == "lower":
            v = wire.parse_value(token, Base.INT)
            self._apply(rec, "lower", v, index, str(rec.lower), str(v))
        elif field == "upper":
            v = self._upper(token)
            old = "*" if rec.upper is None else str(rec.upper)
            self._apply(rec, "upper", v, index, old, "*" if v is None else str(v))
        elif field == "potency":
            v = wire.parse_value(token, Base.INT)
            if v not in (0, 1):
                raise KernelError("TYPE_MISMATCH", "attribute potency is 0 or 1")
            self._apply(rec, "potency", v, index, str(rec.potency), str(v))

    def _update_datatype(self, rec: DataTypeDef, field: str, index: int, token: wire.Token) -> None:
        if field != "base":
            raise KernelError("UNKNOWN_FIELD", f"DataType has no field {field!r}")
        self._single(index)
        if self._frozen_by_use(rec):
            raise KernelError("META_IN_USE", f"datatype {rec.id} is referenced by a class with live instances")
        try:
            v = Base(token.text)
        except ValueError:
            raise KernelError("TYPE_MISMATCH", f"{token.text!r} is not a base kind") from None
        self._apply(rec, "base", v, index, rec.base.value, v.value)

    def _update_unit(self, rec: UnitDef, field: str, index: int, token: wire.Token) -> None:
        if self._frozen_by_use(rec):
            raise KernelError("META_IN_USE", f"unit {rec.id} is referenced by a class with live instances")
        if field == "symbol":
            self._single(index)
            v = wire.parse_value(token, Base.STRING)
            self._apply(rec, "symbol", v, index, wire.quote(rec.symbol), wire.quote(v))
        elif field == "dims":
            if not 0 <= index <= 6:
                raise KernelError("INDEX_OUT_OF_RANGE", "dims has exactly 7 slots")
            v = wire.parse_value(token, Base.INT)
            if not -128 <= v <= 127:
                raise KernelError("TYPE_MISMATCH", "dimension exponents are signed 8-bit")
            dims = list(rec.dims)
            old = str(dims[index])
            dims[index] = v
            self._apply(rec, "dims", tuple(dims), index, old, str(v), field="dims")
        else:
            raise KernelError("UNKNOWN_FIELD", f"Unit has no field {field!r}")

    def _update_linkage(self, rec: LinkageDef, field: str, index: int, token: wire.Token) -> None:
        inh = rec.variant is Variant.INHERITANCE
        fields = ("enda", "endb") if inh else ("enda", "endb", "lowera", "uppera", "lowerb", "upperb")
        if field not in fields:
            raise KernelError("UNKNOWN_FIELD", f"{kind_of(rec).value} has no field {field!r}")
        self._single(index)
        if field in ("enda", "endb") and self._frozen_by_use(rec):
            raise KernelError("META_IN_USE", f"linkage {rec.id} is in use")
        if field == "enda":
            v = self._ref(token, (K.CLASS,))
            self._apply(rec, "end_a", v, index, str(rec.end_a), str(v), field="enda")
        elif field == "endb":
            v = self._ref(token, (K.CLASS,))
            self._apply(rec, "end_b", v, index, str(rec.end_b), str(v), field="endb")
        elif field in ("lowera", "lowerb"):
            attr = "lower_a" if field == "lowera" else "lower_b"
            v = wire.parse_value(token, Base.INT)
            self._apply(rec, attr, v, index, str(getattr(rec, attr)), str(v), field=field)
        else:
            attr = "upper_a" if field == "uppera" else "upper_b"
            v = self._upper(token)
            old = getattr(rec, attr)
            self._apply(rec, attr, v, index, "*" if old is None else str(old), "*" if v is None else str(v), field=field)

    def _update_constraint(self, rec: ConstraintDef, field: str, index: int, token: wire.Token) -> None:
        self._single(index)
        if field == "rule":
            if token.text not in CONSTRAINT_KINDS:
                raise KernelError("TYPE_MISMATCH", f"{token.text!r} is not a constraint kind")
            self._apply(rec, "rule", token.text, index, rec.rule, token.text)
        elif field == "target":
            v = wire.parse_value(token, Base.INT)
            if v != NO_ID:
                self.resolve(v)
            self._apply(rec, "target", v, index, str(rec.target), str(v))
        elif field in ("min", "max"):
            attr = "lo" if field == "min" else "hi"
            v = wire.parse_value(token, Base.REAL)
            old = getattr(rec, attr)
            self._apply(rec, attr, v, index, "-" if old is None else wire.render_value(old),
                        wire.render_value(v), field=field)
        else:
            raise KernelError("UNKNOWN_FIELD", f"Constraint has no field {field!r}")

    def _update_instance(self, rec: Instance, field: str, index: int, token: wire.Token) -> None:
        if field == "type":
            self._single(index)
            if rec.type_potency == 0 or rec.type_value is not None:
                raise KernelError("POTENCY_FROZEN", f"type of instance {rec.id} is frozen")
            v = wire.parse_value(token, Base.STRING)
            new = replace(rec, type_value=v, type_potency=decrement_potency(rec.type_potency))
            self._replace(new)
            self._event("UPDATED", rec.id, ("type", "0", "-", wire.quote(v)))
            return
        for a in self.eff_attrs(rec.class_ref):
            if a.name == field:
                if a.potency == 0:
                    raise KernelError("POTENCY_FROZEN", f"attribute {a.id} is fixed at M2")
                if a.datatype == NO_ID:
                    raise KernelError("TYPE_MISMATCH", f"attribute {a.id} has no datatype")
                base = self.resolve(a.datatype).base
                vals = list(get_values(rec, a.id))
                if index > len(vals):
                    raise KernelError("INDEX_OUT_OF_RANGE", f"index {index} > length {len(vals)}")
                if index == len(vals) and a.upper is not None and len(vals) + 1 > a.upper:
                    raise KernelError("UPPER_BOUND_EXCEEDED", f"attribute {a.id} upper bound is {a.upper}")
                v = wire.parse_value(token, base)
                old = wire.render_value(vals[index]) if index < len(vals) else "-"
                if index == len(vals):
                    vals.append(v)
                else:
                    vals[index] = v
                self._replace(set_values(rec, a.id, tuple(vals)))
                self._event("UPDATED", rec.id, (field, str(index), old, wire.render_value(v)))
                return
        raise KernelError("UNKNOWN_FIELD", f"instance {rec.id} has no field {field!r}")

    def _update_link(self, rec: LinkOccurrence, field: str, index: int, token: wire.Token) -> None:
        self._single(index)
        if field == "linkage":
            v = self._ref(token, (K.ASSOCIATION, K.COMPOSITION))
            self._apply(rec, "linkage", v, index, str(rec.linkage), str(v))
        elif field in ("a", "b"):
            v = self._ref(token, (K.INSTANCE,))
            self._apply(rec, field, v, index, str(getattr(rec, field)), str(v))
        else:
            raise KernelError("UNKNOWN_FIELD", f"LinkOccurrence has no field {field!r}")

    def _update_tm(self, rec: TransformationModel, field: str, index: int, token: wire.Token) -> None:
        if field not in ("source", "target"):
            raise KernelError("UNKNOWN_FIELD", f"TransformationModel has no field {field!r}")
        self._single(index)
        v = self._ref(token, (K.NAMESPACE,))
        self._apply(rec, field, v, index, str(getattr(rec, field)), str(v))

    def _update_rule(self, rec: Rule, field: str, index: int, token: wire.Token) -> None:
        if field != "order":
            raise KernelError("UNKNOWN_FIELD", f"Rule has no field {field!r}")
        self._single(index)
        v = wire.parse_value(token, Base.INT)
        self._apply(rec, "order", v, index, str(rec.order), str(v))

    def _update_pattern(self, rec: Pattern, field: str, index: int, token: wire.Token) -> None:
        if field == "class":
            self._single(index)
            v = self._ref(token, (K.CLASS,))
            self._apply(rec, "class_ref", v, index, str(rec.class_ref), str(v), field="class")
        elif field == "guard":
            guards = list(rec.guards)
            if index > len(guards):
                raise KernelError("INDEX_OUT_OF_RANGE", f"index {index} > length {len(guards)}")
            v = wire.parse_value(token, Base.STRING)
            old = wire.quote(guards[index]) if index < len(guards) else "-"
            if index == len(guards):
                guards.append(v)
            else:
                guards[index] = v
            self._apply(rec, "guards", tuple(guards), index, old, wire.quote(v), field="guard")
        elif field == "lglinkage":
            self._single(index)
            v = self._ref(token, (K.ASSOCIATION, K.COMPOSITION), allow_none=True)
            self._apply(rec, "lg_linkage", v, index, str(rec.lg_linkage), str(v), field="lglinkage")
        elif field == "lgend":
            self._single(index)
            if token.text not in ("A", "B"):
                raise KernelError("TYPE_MISMATCH", "link guard end is A or B")
            self._apply(rec, "lg_end", token.text, index, rec.lg_end, token.text, field="lgend")
        elif field == "lgpeer":
            self._single(index)
            v = self._ref(token, (K.CLASS,), allow_none=True)
            self._apply(rec, "lg_peer", v, index, str(rec.lg_peer), str(v), field="lgpeer")
        else:
            raise KernelError("UNKNOWN_FIELD", f"Pattern has no field {field!r}")

    def _update_template(self, rec: Template, field: str, index: int, token: wire.Token) -> None:
        self._single(index)
        if field == "class":
            v = self._ref(token, (K.CLASS,))
            self._apply(rec, "class_ref", v, index, str(rec.class_ref), str(v), field="class")
        elif field == "containment":
            if token.text not in ("TARGET_ROOT", "PARENT_IMAGE"):
                raise KernelError("TYPE_MISMATCH", "containment is TARGET_ROOT or PARENT_IMAGE")
            self._apply(rec, "containment", token.text, index, rec.containment, token.text)
        else:
            raise KernelError("UNKNOWN_FIELD", f"Template has no field {field!r}")

    def _update_assignment(self, rec: Assignment, field: str, index: int, token: wire.Token) -> None:
        self._single(index)
        if field == "op":
            if token.text not in ("COPY", "CONST", "SCALE"):
                raise KernelError("TYPE_MISMATCH", "assignment op is COPY, CONST or SCALE")
            self._apply(rec, "op", token.text, index, rec.op, token.text)
        elif field in ("src", "dst"):
            v = self._ref(token, (K.ATTRIBUTE,))
            self._apply(rec, field, v, index, str(getattr(rec, field)), str(v))
        elif field == "factor":
            v = wire.parse_value(token, Base.REAL)
            self._apply(rec, "factor", v, index, wire.render_value(rec.factor), wire.render_value(v))
        elif field == "literal":
            v = wire.parse_value(token, Base.STRING)
            old = "-" if rec.literal is None else wire.quote(rec.literal)
            self._apply(rec, "literal", v, index, old, wire.quote(v))
        else:
            raise KernelError("UNKNOWN_FIELD", f"Assignment has no field {field!r}")

    # -- delete -----------------------------------------------------------------------

    def _closure(self, eid: int) -> set[int]:
        """eid plus everything transitively owned by it."""
        out = {eid}
        grew = True
        while grew:
            grew = False
            for rec in self.records():
                if rec.owner in out and rec.id not in out:
                    out.add(rec.id)
                    grew = True
        return out

    def delete(self, eid: int) -> None:
        rec = self.resolve(eid)
        if eid in RESERVED_IDS:
            raise KernelError("RESERVED_ELEMENT", f"element {eid} is reserved")
        closure = self._closure(eid)
        for cid in sorted(closure):
            member = self.resolve(cid)
            if kind_of(member) is K.INSTANCE:
                continue
            if self._frozen_by_use(member):
                raise KernelError("META_IN_USE", f"element {cid} has live instances")
        # dangling link occurrences are cascaded in the same transaction
        doomed = set(closure)
        for lo in self.of_kind(K.LINK_OCCURRENCE):
            if lo.id not in doomed and (lo.linkage in closure or lo.a in closure or lo.b in closure):
                doomed.add(lo.id)
        for did in sorted(doomed):
            member = self.resolve(did)
            op = "UNLINKED" if kind_of(member) is K.LINK_OCCURRENCE else "DELETED"
            self._remove(did)
            self.tx_created.discard(did)
            self._event(op, did, (kind_of(member).value, str(member.owner)))

    # -- retype -----------------------------------------------------------------------

    def retype(self, inst_id: int, new_class_id: int) -> None:
        inst = self.resolve(inst_id)
        if kind_of(inst) is not K.INSTANCE:
            raise KernelError("RETYPE_INCOMPATIBLE", f"element {inst_id} is not an instance")
        new_cls = self.resolve(new_class_id)
        if kind_of(new_cls) is not K.CLASS:
            raise KernelError("RETYPE_INCOMPATIBLE", f"element {new_class_id} is not a class")
        if new_cls.abstract:
            raise KernelError("ABSTRACT_CLASS", f"class {new_class_id} is abstract")
        if inst.class_ref == new_class_id:
            return  # identity retype leaves the store untouched
        mm = self.metamodel()
        old_by_id = {a.id: a for a in self.eff_attrs(inst.class_ref)}
        new_by_name = {a.name: a for a in self.eff_attrs(new_class_id)}

        mapping: dict[int, int] = {}
        for attr_id, vals in inst.values:
            if not vals:
                continue
            old_a = old_by_id.get(attr_id)
            new_a = new_by_name.get(old_a.name) if old_a else None
            if old_a is None or new_a is None:
                raise KernelError("RETYPE_INCOMPATIBLE", f"no slot for attribute {attr_id} in class {new_class_id}")
            if new_a.datatype != old_a.datatype:
                raise KernelError("RETYPE_INCOMPATIBLE", f"attribute {attr_id} datatype differs")
            u_old, u_new = mm.unit(old_a.unit), mm.unit(new_a.unit)
            if u_old is None or u_new is None or u_old.dims != u_new.dims:
                raise KernelError("RETYPE_INCOMPATIBLE", f"attribute {attr_id} unit is incompatible")
            mapping[attr_id] = new_a.id

        for lo in self.of_kind(K.LINK_OCCURRENCE):
            if lo.linkage == NO_ID:
                continue
            link = self.resolve(lo.linkage)
            for end, end_cls in (("a", link.end_a), ("b", link.end_b)):
                if getattr(lo, end) == inst_id and end_cls != NO_ID and not mm.conforms(new_class_id, end_cls):
                    raise KernelError("RETYPE_INCOMPATIBLE", f"link {lo.id} end {end} would no longer conform")

        if self.index.get(inst.owner) is K.INSTANCE:
            parent = self.resolve(inst.owner)
            if not any(l.variant is Variant.COMPOSITION
                       and mm.conforms(parent.class_ref, l.end_a) and mm.conforms(new_class_id, l.end_b)
                       for l in mm.linkages.values()):
                raise KernelError("RETYPE_INCOMPATIBLE", f"no composition admits {new_class_id} under {inst.owner}")
        for child in self.children(inst_id):
            if kind_of(child) is K.INSTANCE and not any(
                    l.variant is Variant.COMPOSITION
                    and mm.conforms(new_class_id, l.end_a) and mm.conforms(child.class_ref, l.end_b)
                    for l in mm.linkages.values()):
                raise KernelError("RETYPE_INCOMPATIBLE", f"child {child.id} would no longer be admitted")

        new_values: dict[int, tuple[Value, ...]] = {}
        for attr_id, vals in inst.values:
            if attr_id in mapping:
                new_values[mapping[attr_id]] = vals
        for a in new_by_name.values():
            if a.potency == 0 and a.id not in new_values:
                new_values[a.id] = a.fixed

        if new_cls.type_value is not None:
            tv, tp = new_cls.type_value, 0
        else:
            tv = inst.type_value
            tp = 0 if tv is not None else 1
        old_class = inst.class_ref
        self._replace(replace(inst, class_ref=new_class_id, type_value=tv, type_potency=tp,
                              values=tuple(sorted(new_values.items()))))
        self._event("RETYPED", inst_id,
                    (str(old_class), str(new_class_id),
                     wire.quote(tv) if tv is not None else "-"))

    # -- reflect / list ------------------------------------------------------------------

    def reflect(self, eid: int) -> list[str]:
        """Reflection record as wire tokens, sufficient for palette building."""
        rec = self.resolve(eid)
        k = kind_of(rec)
        mm = self.metamodel()
        out = [k.value, rec.level.value, wire.quote(rec.name), "owner", str(rec.owner)]

        class_id = NO_ID
        if k is K.INSTANCE:
            class_id = rec.class_ref
            parent = rec.owner if self.index.get(rec.owner) is K.INSTANCE else NO_ID
            out += ["class", str(class_id), "parent", str(parent)]
            out += ["type", wire.quote(rec.type_value) if rec.type_value is not None else "-",
                    "potency", str(rec.type_potency)]
        elif k is K.CLASS:
            class_id = rec.id
            out += ["type", wire.quote(rec.type_value) if rec.type_value is not None else "-",
                    "potency", str(rec.type_potency)]

        if class_id != NO_ID and class_id in mm.classes:
            for a in effective_attributes(class_id, mm):
                base = "-"
                if a.datatype in mm.datatypes:
                    base = mm.datatypes[a.datatype].base.value
                unit = mm.unit(a.unit)
                sym = unit.symbol if unit is not None else "-"
                out += ["attr", wire.quote(a.name), str(a.id), base, wire.quote(sym),
                        str(a.lower), "*" if a.upper is None else str(a.upper),
                        str(a.potency), "true" if a.potency == 0 else "false"]
            for l in sorted(mm.linkages.values(), key=lambda x: x.id):
                if l.variant is Variant.INHERITANCE:
                    continue
                if l.end_a != NO_ID and mm.conforms(class_id, l.end_a):
                    out += ["link", l.variant.value, str(l.id), "A", str(l.end_b)]
                if l.end_b != NO_ID and mm.conforms(class_id, l.end_b):
                    out += ["link", l.variant.value, str(l.id), "B", str(l.end_a)]

        for child_kind in ElementKind:
            if child_kind in self.allowed_child_kinds(rec):
                # a rule holds at most one pattern and one template
                if k is K.RULE and any(kind_of(c) is child_kind for c in self.children(eid)):
                    continue
                out += ["child", child_kind.value]

        if k is K.NAMESPACE and rec.level is Level.M1:
            for c in self.of_kind(K.CLASS):
                if not c.abstract:
                    out += ["inst", str(c.id)]
        elif k is K.INSTANCE:
            admitted = set()
            for l in mm.linkages.values():
                if l.variant is Variant.COMPOSITION and l.end_a != NO_ID and l.end_b != NO_ID \
                        and mm.conforms(rec.class_ref, l.end_a):
                    for c in self.of_kind(K.CLASS):
                        if not c.abstract and mm.conforms(c.id, l.end_b):
                            admitted.add(c.id)
            for cid in sorted(admitted):
                out += ["inst", str(cid)]
        return out

    def list_ids(self, kind: ElementKind, class_filter: int | None = None) -> list[int]:
        ids = sorted(self.tables[kind])
        if class_filter is not None:
            self.resolve(class_filter)
            if kind is K.INSTANCE:
                mm = self.metamodel()
                ids = [i for i in ids if mm.conforms(self.tables[kind][i].class_ref, class_filter)]
        return ids
