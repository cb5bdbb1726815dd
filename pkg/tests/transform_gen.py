"""Random transformation cases plus an independent brute-force oracle.

The oracle re-derives the expected run from raw store records: it
enumerates (order index, source id) pairs itself, evaluates guards with
its own comparison code, and applies assignment semantics directly. It
never calls the engine's matcher.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from qmod import Session
from qmod.meta import ElementKind as K, get_values

# fixed ids produced by the builder preamble
NS_SRC, NS_TGT = 4, 5
DT_REAL, DT_INT = 6, 7
UNIT_V = 8
CLS_A, CLS_B = 9, 12
ATTR_X, ATTR_Y, ATTR_Z = 10, 11, 14
CLS_P = 16
ATTR_PX, ATTR_PY = 17, 18
TM = 20

_PREAMBLE = [
    "BEGIN",
    'CREATE Namespace 2 "src"',
    'CREATE Namespace 2 "dst"',
    'CREATE DataType 4 "real"', "UPDATE 6 base 0 REAL",
    'CREATE DataType 4 "int"', "UPDATE 7 base 0 INT",
    'CREATE Unit 4 "volt"', "UPDATE 8 dims 0 1", "UPDATE 8 dims 1 2",
    "UPDATE 8 dims 2 -3", "UPDATE 8 dims 3 -1",
    'CREATE Class 4 "A"', 'UPDATE 9 type 0 "a"',
    'CREATE Attribute 9 "x"', "UPDATE 10 datatype 0 6", "UPDATE 10 unit 0 8",
    'CREATE Attribute 9 "y"', "UPDATE 11 datatype 0 7",
    'CREATE Class 4 "B"', 'UPDATE 12 type 0 "b"',
    'CREATE Inheritance 4 "b_is_a"', "UPDATE 13 enda 0 12", "UPDATE 13 endb 0 9",
    'CREATE Attribute 12 "z"', "UPDATE 14 datatype 0 6", "UPDATE 14 unit 0 8",
    'CREATE Composition 4 "nest"', "UPDATE 15 enda 0 9", "UPDATE 15 endb 0 9",
    'CREATE Class 5 "P"', 'UPDATE 16 type 0 "p"',
    'CREATE Attribute 16 "px"', "UPDATE 17 datatype 0 6", "UPDATE 17 unit 0 8",
    'CREATE Attribute 16 "py"', "UPDATE 18 datatype 0 7",
    'CREATE Composition 5 "pnest"', "UPDATE 19 enda 0 16", "UPDATE 19 endb 0 16",
    "COMMIT",
]


@dataclass
class Case:
    session: Session
    tm: int
    source_root: int
    n_rules: int
    n_instances: int


def _must(session: Session, line: str) -> str:
    resp = session.execute_line(line)[0]
    assert " OK" in resp, f"{line} -> {resp}"
    return resp


def build_case(seed: int) -> Case:
    rng = random.Random(seed)
    s = Session()
    for line in _PREAMBLE:
        _must(s, line)

    n_rules = rng.randint(1, 5)
    orders = rng.sample(range(1, 50), n_rules)
    _must(s, "BEGIN")
    _must(s, f'CREATE TransformationModel 4 "tm"')
    _must(s, f"UPDATE {TM} source 0 {NS_SRC}")
    _must(s, f"UPDATE {TM} target 0 {NS_TGT}")
    for i, order in enumerate(orders):
        rid = int(_must(s, f'CREATE Rule {TM} "r{i}"').split(" ")[2])
        _must(s, f"UPDATE {rid} order 0 {order}")
        pat_cls = rng.choice((CLS_A, CLS_B))
        pid = int(_must(s, f'CREATE Pattern {rid} "pat"').split(" ")[2])
        _must(s, f"UPDATE {pid} class 0 {pat_cls}")
        if rng.random() < 0.5:
            op = rng.choice(("=", "!=", "<", "<=", ">", ">="))
            _must(s, f'UPDATE {pid} guard 0 "y {op} {rng.randint(-2, 4)}"')
        tid = int(_must(s, f'CREATE Template {rid} "tpl"').split(" ")[2])
        _must(s, f"UPDATE {tid} class 0 {CLS_P}")
        if rng.random() < 0.5:
            _must(s, f"UPDATE {tid} containment 0 PARENT_IMAGE")
        # fill px from x (COPY or SCALE), py from y (COPY) or a constant
        aid = int(_must(s, f'CREATE Assignment {tid} "fill_px"').split(" ")[2])
        if rng.random() < 0.5:
            _must(s, f"UPDATE {aid} src 0 {ATTR_X}")
            _must(s, f"UPDATE {aid} dst 0 {ATTR_PX}")
        else:
            _must(s, f"UPDATE {aid} op 0 SCALE")
            _must(s, f"UPDATE {aid} src 0 {ATTR_X}")
            _must(s, f"UPDATE {aid} dst 0 {ATTR_PX}")
            _must(s, f"UPDATE {aid} factor 0 {rng.choice((1000.0, 0.5, -2.25))}")
        aid = int(_must(s, f'CREATE Assignment {tid} "fill_py"').split(" ")[2])
        if rng.random() < 0.5:
            _must(s, f"UPDATE {aid} src 0 {ATTR_Y}")
            _must(s, f"UPDATE {aid} dst 0 {ATTR_PY}")
        else:
            _must(s, f"UPDATE {aid} op 0 CONST")
            _must(s, f"UPDATE {aid} dst 0 {ATTR_PY}")
            _must(s, f"UPDATE {aid} literal 0 {rng.randint(0, 9)}")
    _must(s, "COMMIT")

    n_instances = rng.randint(0, 20)
    made: list[int] = []
    for i in range(n_instances):
        cls = rng.choice((CLS_A, CLS_B))
        parent = rng.choice(made) if made and rng.random() < 0.4 else 3
        _must(s, "BEGIN")
        iid = int(_must(s, f'INSTANTIATE {cls} {parent} "i{i}"').split(" ")[2])
        _must(s, f"UPDATE {iid} x 0 {rng.randint(-40, 40) / 8}")
        _must(s, f"UPDATE {iid} y 0 {rng.randint(-3, 5)}")
        if cls == CLS_B:
            _must(s, f"UPDATE {iid} z 0 {rng.randint(-40, 40) / 8}")
        _must(s, "COMMIT")
        made.append(iid)
    return Case(s, TM, 3, n_rules, n_instances)


# --- oracle --------------------------------------------------------------------


def _ancestors(store, class_id: int) -> set[int]:
    supers: dict[int, set[int]] = {}
    for l in store.of_kind(K.INHERITANCE):
        supers.setdefault(l.end_a, set()).add(l.end_b)
    out: set[int] = set()
    stack = [class_id]
    while stack:
        c = stack.pop()
        for sup in supers.get(c, ()):
            if sup not in out:
                out.add(sup)
                stack.append(sup)
    return out


def _guard_holds(store, inst, guard: str) -> bool:
    name, op, literal = guard.split(" ", 2)
    attrs = {a.name: a for a in store.eff_attrs(inst.class_ref)}
    attr = attrs[name]
    base = store.resolve(attr.datatype).base.value
    lit = int(literal) if base == "INT" else float(literal)
    vals = get_values(inst, attr.id)
    if not vals:
        return False
    cmp = {"=": lambda a, b: a == b, "!=": lambda a, b: a != b,
           "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
           ">": lambda a, b: a > b, ">=": lambda a, b: a >= b}[op]
    return all(cmp(v, lit) for v in vals)


def brute_force_expected(store, tm_id: int, source_root: int):
    """(rule_id, src_id, expected values by attr id, containment kind) per match,
    in (order index, source id) order, plus the expected parent mapping."""
    rules = sorted((r for r in store.children(tm_id) if r.__class__.__name__ == "Rule"),
                   key=lambda r: (r.order, r.id))
    src_scope = store._closure(source_root)
    sources = [i for i in store.of_kind(K.INSTANCE) if i.id in src_scope]

    expected = []
    for rule in rules:
        pattern = next(c for c in store.children(rule.id) if c.__class__.__name__ == "Pattern")
        template = next(c for c in store.children(rule.id) if c.__class__.__name__ == "Template")
        assignments = sorted((c for c in store.children(template.id)
                              if c.__class__.__name__ == "Assignment"), key=lambda a: a.id)
        for inst in sources:
            if not (inst.class_ref == pattern.class_ref
                    or pattern.class_ref in _ancestors(store, inst.class_ref)):
                continue
            if not all(_guard_holds(store, inst, g) for g in pattern.guards):
                continue
            values: dict[int, tuple] = {}
            for asg in assignments:
                if asg.op == "COPY":
                    values[asg.dst] = get_values(inst, asg.src)
                elif asg.op == "SCALE":
                    values[asg.dst] = tuple(v * asg.factor for v in get_values(inst, asg.src))
                else:
                    base = store.resolve(store.resolve(asg.dst).datatype).base.value
                    lit = int(asg.literal) if base == "INT" else (
                        float(asg.literal) if base == "REAL" else asg.literal)
                    values[asg.dst] = (lit,)
            expected.append((rule.id, rule.order, inst.id, values, template.containment))

    image: dict[int, tuple[int, int]] = {}  # src -> (order, seq)
    for seq, (rid, order, src, _, _) in enumerate(expected, start=1):
        if src not in image or (order, seq) < image[src]:
            image[src] = (order, seq)
    return expected, image
