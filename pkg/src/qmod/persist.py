"""Canonical model serialization (.qmod) and content hashing.

One element per line, sorted by id, using the protocol's token encoding;
the header carries format name, version and the id counter so allocation
stays deterministic across a reload. A store has exactly one byte
representation, and the hex SHA-256 of those bytes is the store digest
every determinism check compares.
"""

from __future__ import annotations

import hashlib

from . import wire
from .errors import KernelError
from .meta import (
    M1_FOLDER_ID,
    M2_FOLDER_ID,
    ROOT_ID,
    Assignment,
    AttributeDef,
    Base,
    ConstraintDef,
    DataTypeDef,
    Element,
    ElementKind,
    Instance,
    Level,
    LinkageDef,
    LinkOccurrence,
    MetaClass,
    Namespace,
    Pattern,
    RootFolder,
    Rule,
    Template,
    TransformationModel,
    UnitDef,
    Value,
    Variant,
    kind_of,
)
from .store import Store

FORMAT_NAME = "qmod"
FORMAT_VERSION = 1

K = ElementKind


def _opt_str(s: str | None) -> str:
    return "-" if s is None else wire.quote(s)


def _opt_real(f: float | None) -> str:
    return "-" if f is None else wire.fmt_real(f)


def _upper(u: int | None) -> str:
    return "*" if u is None else str(u)


def _values(vals) -> list[str]:
    return [str(len(vals))] + [wire.render_value(v) for v in vals]


def record_line(rec: Element) -> str:
    k = kind_of(rec)
    toks = [k.value, str(rec.id), str(rec.owner), rec.level.value, wire.quote(rec.name)]
    if k is K.CONSTRAINT:
        toks += [rec.rule, str(rec.target), _opt_real(rec.lo), _opt_real(rec.hi)]
    elif k is K.CLASS:
        toks += [wire.render_value(rec.abstract), _opt_str(rec.type_value), str(rec.type_potency)]
    elif k is K.ATTRIBUTE:
        toks += [str(rec.datatype), str(rec.unit), str(rec.lower), _upper(rec.upper),
                 str(rec.potency)] + _values(rec.fixed)
    elif k is K.DATATYPE:
        toks += [rec.base.value]
    elif k is K.UNIT:
        toks += [wire.quote(rec.symbol)] + [str(d) for d in rec.dims]
    elif k in (K.ASSOCIATION, K.COMPOSITION):
        toks += [str(rec.end_a), str(rec.end_b), str(rec.lower_a), _upper(rec.upper_a),
                 str(rec.lower_b), _upper(rec.upper_b)]
    elif k is K.INHERITANCE:
        toks += [str(rec.end_a), str(rec.end_b)]
    elif k is K.INSTANCE:
        toks += [str(rec.class_ref), _opt_str(rec.type_value), str(rec.type_potency), str(len(rec.values))]
        for attr_id, vals in rec.values:
            toks += [str(attr_id)] + _values(vals)
    elif k is K.LINK_OCCURRENCE:
        toks += [str(rec.linkage), str(rec.a), str(rec.b)]
    elif k is K.TRANSFORMATION_MODEL:
        toks += [str(rec.source), str(rec.target)]
    elif k is K.RULE:
        toks += [str(rec.order)]
    elif k is K.PATTERN:
        toks += [str(rec.class_ref), str(len(rec.guards))] + [wire.quote(g) for g in rec.guards]
        toks += [str(rec.lg_linkage), rec.lg_end, str(rec.lg_peer)]
    elif k is K.TEMPLATE:
        toks += [str(rec.class_ref), rec.containment]
    elif k is K.ASSIGNMENT:
        toks += [rec.op, str(rec.src), str(rec.dst), wire.fmt_real(rec.factor), _opt_str(rec.literal)]
    return wire.join(toks)


def to_bytes(store: Store) -> bytes:
    if store.tx_open:
        raise KernelError("TX_OPEN", "save requires no open transaction")
    lines = [wire.join([FORMAT_NAME, str(FORMAT_VERSION), str(store.next_id)])]
    for eid in store.all_ids():
        lines.append(record_line(store.resolve(eid)))
    return ("\n".join(lines) + "\n").encode("utf-8")


def digest(store: Store) -> str:
    return hashlib.sha256(to_bytes(store)).hexdigest()


def save(store: Store, path: str) -> str:
    """Write the canonical file; returns its content hash."""
    data = to_bytes(store)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise KernelError("IO_ERROR", f"cannot write {path}: {exc.strerror}") from None
    return hashlib.sha256(data).hexdigest()


# -- loading -------------------------------------------------------------------


class _Line:
    def __init__(self, tokens: list[wire.Token], n: int):
        self.tokens = tokens
        self.n = n
        self.i = 0

    def fail(self, why: str):
        raise KernelError("FORMAT_ERROR", f"line {self.n}: {why}")

    def next(self) -> wire.Token:
        if self.i >= len(self.tokens):
            self.fail("truncated record")
        t = self.tokens[self.i]
        self.i += 1
        return t

    def done(self):
        if self.i != len(self.tokens):
            self.fail("trailing tokens")

    def int_(self) -> int:
        t = self.next()
        if t.quoted or not t.text.lstrip("+-").isdigit():
            self.fail(f"integer expected, got {t.text!r}")
        return int(t.text)

    def text(self) -> str:
        return self.next().text

    def qtext(self) -> str | None:
        t = self.next()
        if not t.quoted and t.text == "-":
            return None
        return t.text

    def real_opt(self) -> float | None:
        t = self.next()
        if not t.quoted and t.text == "-":
            return None
        try:
            return float(t.text)
        except ValueError:
            self.fail(f"real expected, got {t.text!r}")

    def upper(self) -> int | None:
        t = self.next()
        if not t.quoted and t.text == "*":
            return None
        if t.quoted or not t.text.lstrip("+-").isdigit():
            self.fail(f"bound expected, got {t.text!r}")
        return int(t.text)

    def value(self) -> Value:
        """Self-typed literal: quoting and literal form identify the base."""
        t = self.next()
        if t.quoted:
            return t.text
        if t.text in ("true", "false"):
            return t.text == "true"
        try:
            return wire.parse_value(t, Base.INT)
        except KernelError:
            pass
        try:
            return wire.parse_value(t, Base.REAL)
        except KernelError:
            self.fail(f"value literal expected, got {t.text!r}")

    def values(self) -> tuple[Value, ...]:
        n = self.int_()
        if n < 0:
            self.fail("negative count")
        return tuple(self.value() for _ in range(n))


def from_bytes(data: bytes) -> Store:
    """Reconstruct a store; full constraint evaluation must pass."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise KernelError("FORMAT_ERROR", "line 1: not valid UTF-8") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise KernelError("FORMAT_ERROR", "line 1: empty file")

    try:
        header = wire.tokenize(lines[0])
    except KernelError:
        raise KernelError("FORMAT_ERROR", "line 1: bad header") from None
    if len(header) != 3 or header[0].text != FORMAT_NAME:
        raise KernelError("FORMAT_ERROR", "line 1: bad header")
    if header[1].text != str(FORMAT_VERSION):
        raise KernelError("VERSION_UNSUPPORTED", f"version {header[1].text!r} is unsupported")
    if not header[2].text.isdigit():
        raise KernelError("FORMAT_ERROR", "line 1: bad id counter")
    next_id = int(header[2].text)

    records: list[Element] = []
    last_id = 0
    for n, raw in enumerate(lines[1:], start=2):
        try:
            tokens = wire.tokenize(raw)
        except KernelError as exc:
            raise KernelError("FORMAT_ERROR", f"line {n}: {exc.message}") from None
        line = _Line(tokens, n)
        rec = _parse_record(line)
        if rec.id <= last_id:
            line.fail("ids not strictly ascending")
        last_id = rec.id
        records.append(rec)

    if next_id <= last_id:
        raise KernelError("FORMAT_ERROR", "line 1: id counter behind records")
    _check_reserved(records)

    store = Store()
    store.tables = {k: {} for k in ElementKind}
    store.index = {}
    for rec in records:
        if rec.id in store.index:
            raise KernelError("FORMAT_ERROR", f"duplicate id {rec.id}")
        store._insert(rec)
    store.next_id = next_id

    from .constraints import evaluate  # cycle with store users otherwise
    violations = evaluate(store)
    if violations:
        from .errors import render_violations
        raise KernelError("VALIDATION_FAILED", render_violations(violations))
    return store


def load(path: str) -> Store:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise KernelError("IO_ERROR", f"cannot read {path}: {exc.strerror}") from None
    return from_bytes(data)


def _check_reserved(records: list[Element]) -> None:
    by_id = {r.id: r for r in records}
    root = by_id.get(ROOT_ID)
    m2 = by_id.get(M2_FOLDER_ID)
    m1 = by_id.get(M1_FOLDER_ID)
    if not isinstance(root, RootFolder):
        raise KernelError("FORMAT_ERROR", "line 2: RootFolder with id 1 required")
    if not (isinstance(m2, Namespace) and m2.level is Level.M2 and m2.owner == ROOT_ID):
        raise KernelError("FORMAT_ERROR", "line 3: M2 region folder with id 2 required")
    if not (isinstance(m1, Namespace) and m1.level is Level.M1 and m1.owner == ROOT_ID):
        raise KernelError("FORMAT_ERROR", "line 4: M1 region folder with id 3 required")


def _parse_record(line: _Line) -> Element:
    kind_tok = line.text()
    try:
        kind = ElementKind(kind_tok)
    except ValueError:
        line.fail(f"unknown kind {kind_tok!r}")
    eid = line.int_()
    owner = line.int_()
    level_tok = line.text()
    try:
        level = Level(level_tok)
    except ValueError:
        line.fail(f"unknown level {level_tok!r}")
    name_tok = line.next()
    hdr = dict(id=eid, owner=owner, name=name_tok.text, level=level)

    if kind is K.ROOT_FOLDER:
        rec: Element = RootFolder(**hdr)
    elif kind is K.NAMESPACE:
        rec = Namespace(**hdr)
    elif kind is K.CONSTRAINT:
        rule = line.text()
        rec = ConstraintDef(**hdr, rule=rule, target=line.int_(), lo=line.real_opt(), hi=line.real_opt())
    elif kind is K.CLASS:
        abstract_tok = line.text()
        if abstract_tok not in ("true", "false"):
            line.fail("abstract flag expected")
        rec = MetaClass(**hdr, abstract=abstract_tok == "true",
                        type_value=line.qtext(), type_potency=line.int_())
    elif kind is K.ATTRIBUTE:
        rec = AttributeDef(**hdr, datatype=line.int_(), unit=line.int_(), lower=line.int_(),
                           upper=line.upper(), potency=line.int_(), fixed=line.values())
    elif kind is K.DATATYPE:
        base_tok = line.text()
        try:
            base = Base(base_tok)
        except ValueError:
            line.fail(f"unknown base {base_tok!r}")
        rec = DataTypeDef(**hdr, base=base)
    elif kind is K.UNIT:
        symbol = line.text()
        dims = tuple(line.int_() for _ in range(7))
        rec = UnitDef(**hdr, symbol=symbol, dims=dims)
    elif kind in (K.ASSOCIATION, K.COMPOSITION):
        rec = LinkageDef(**hdr, variant=Variant(kind.value.upper()),
                         end_a=line.int_(), end_b=line.int_(),
                         lower_a=line.int_(), upper_a=line.upper(),
                         lower_b=line.int_(), upper_b=line.upper())
    elif kind is K.INHERITANCE:
        rec = LinkageDef(**hdr, variant=Variant.INHERITANCE, end_a=line.int_(), end_b=line.int_())
    elif kind is K.INSTANCE:
        class_ref = line.int_()
        tv = line.qtext()
        tp = line.int_()
        slots = line.int_()
        values = []
        for _ in range(slots):
            attr_id = line.int_()
            values.append((attr_id, line.values()))
        rec = Instance(**hdr, class_ref=class_ref, type_value=tv, type_potency=tp,
                       values=tuple(sorted(values)))
    elif kind is K.LINK_OCCURRENCE:
        rec = LinkOccurrence(**hdr, linkage=line.int_(), a=line.int_(), b=line.int_())
    elif kind is K.TRANSFORMATION_MODEL:
        rec = TransformationModel(**hdr, source=line.int_(), target=line.int_())
    elif kind is K.RULE:
        rec = Rule(**hdr, order=line.int_())
    elif kind is K.PATTERN:
        class_ref = line.int_()
        count = line.int_()
        guards = tuple(line.text() for _ in range(count))
        rec = Pattern(**hdr, class_ref=class_ref, guards=guards,
                      lg_linkage=line.int_(), lg_end=line.text(), lg_peer=line.int_())
    elif kind is K.TEMPLATE:
        class_ref = line.int_()
        containment = line.text()
        if containment not in ("TARGET_ROOT", "PARENT_IMAGE"):
            line.fail("bad containment")
        rec = Template(**hdr, class_ref=class_ref, containment=containment)
    elif kind is K.ASSIGNMENT:
        rec = Assignment(**hdr, op=line.text(), src=line.int_(), dst=line.int_(),
                         factor=_real(line), literal=line.qtext())
    else:
        line.fail(f"kind {kind.value} cannot appear in a model file")
    line.done()
    return rec


def _real(line: _Line) -> float:
    t = line.next()
    try:
        return float(t.text)
    except ValueError:
        line.fail(f"real expected, got {t.text!r}")
