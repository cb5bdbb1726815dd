"""Closed error catalogue and the violation record.

Every error code the kernel can emit lives in CATALOGUE; constructing a
KernelError with an unlisted code is a programming error and raises
immediately. The catalogue is what gen_error_catalogue() serializes, so
code, message template and emitting operations have exactly one home.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# code -> (message template, operations that may emit it)
CATALOGUE: dict[str, tuple[str, tuple[str, ...]]] = {
    "ABSTRACT_CLASS": ("class is abstract and cannot be instantiated", ("INSTANTIATE", "RETYPE", "TRANSFORM")),
    "BOUNDS_INVALID": ("multiplicity bounds are invalid", ("COMMIT", "CHECK")),
    "BUSY": ("another session is active", ("serve",)),
    "CONTAINMENT_FORBIDDEN": ("element kind is not allowed under this owner", ("CREATE", "INSTANTIATE", "COMMIT", "CHECK", "TRANSFORM")),
    "EVENT_OVERFLOW": ("event buffer overflowed; subscription closed", ("COMMIT",)),
    "FIXED_VALUE_MISMATCH": ("values of a potency-0 attribute differ from the fixed values", ("COMMIT", "CHECK")),
    "FORMAT_ERROR": ("model file is malformed", ("LOAD",)),
    "GUARD_INVALID": ("pattern guard is invalid", ("TRANSFORM", "CHECK")),
    "INDEX_OUT_OF_RANGE": ("value index is out of range", ("UPDATE",)),
    "INHERITANCE_CYCLE": ("inheritance relation is cyclic", ("COMMIT", "CHECK")),
    "IO_ERROR": ("file could not be read or written", ("SAVE", "LOAD", "run", "qualify")),
    "LINK_END_INVALID": ("link end does not conform to the linkage", ("COMMIT", "CHECK")),
    "LOWER_BOUND": ("value list is below its lower bound", ("COMMIT", "CHECK")),
    "META_IN_USE": ("meta element has live instances", ("UPDATE", "DELETE")),
    "MISSING_REF": ("mandatory reference is unset or unresolvable", ("COMMIT", "CHECK", "TRANSFORM")),
    "NAME_CLASH": ("name is already used by a sibling", ("CREATE", "UPDATE", "INSTANTIATE", "COMMIT", "CHECK")),
    "NAME_INVALID": ("name is empty or contains a newline", ("CREATE", "UPDATE", "INSTANTIATE")),
    "ORDER_CLASH": ("rule order index is not unique", ("TRANSFORM", "CHECK")),
    "PARSE_ERROR": ("command line does not parse", ("parse",)),
    "POTENCY_EXHAUSTED": ("potency is zero; no further instantiation is possible", ("INSTANTIATE",)),
    "POTENCY_FROZEN": ("value is frozen by its potency", ("UPDATE", "TRANSFORM", "CHECK")),
    "POTENCY_REQUIRED": ("type value must be set before commit", ("COMMIT", "CHECK")),
    "READ_ONLY_FIELD": ("field cannot be written", ("UPDATE",)),
    "RESERVED_ELEMENT": ("reserved element cannot be modified", ("UPDATE", "DELETE")),
    "RETYPE_INCOMPATIBLE": ("instance cannot be retyped to the class", ("RETYPE",)),
    "SOURCE_INVALID": ("source model has violations", ("TRANSFORM",)),
    "TARGET_VIOLATIONS": ("transformation target violates its meta-model", ("TRANSFORM",)),
    "TRANSFORM_INVALID": ("transformation model fails static validation", ("TRANSFORM",)),
    "TX_NESTED": ("a transaction is already open", ("BEGIN",)),
    "TX_NONE": ("no transaction is open", ("COMMIT", "ROLLBACK")),
    "TX_OPEN": ("operation requires no open transaction", ("SAVE", "LOAD", "TRANSFORM")),
    "TYPE_MISMATCH": ("value does not match the expected type", ("UPDATE", "COMMIT", "CHECK", "TRANSFORM")),
    "UNIT_MISMATCH": ("units are not compatible", ("TRANSFORM", "CHECK")),
    "UNKNOWN_FIELD": ("field is not defined for this element", ("READ", "UPDATE")),
    "UNKNOWN_ID": ("element id does not resolve", ("READ", "UPDATE", "DELETE", "INSTANTIATE", "RETYPE", "REFLECT", "LIST", "CHECK", "TRANSFORM")),
    "UNKNOWN_KIND": ("element kind is unknown", ("CREATE", "LIST")),
    "UPPER_BOUND": ("value list exceeds its upper bound", ("COMMIT", "CHECK")),
    "UPPER_BOUND_EXCEEDED": ("append would exceed the upper bound", ("UPDATE",)),
    "VALIDATION_FAILED": ("commit violates consistency rules", ("COMMIT", "LOAD")),
    "VALUE_OUT_OF_RANGE": ("value lies outside the constrained range", ("COMMIT", "CHECK")),
    "VERSION_UNSUPPORTED": ("model file version is unsupported", ("LOAD",)),
}


class KernelError(Exception):
    """An operation failure with a code from the closed catalogue."""

    def __init__(self, code: str, message: str | None = None):
        if code not in CATALOGUE:
            raise AssertionError(f"error code not in catalogue: {code}")
        self.code = code
        self.message = message if message is not None else CATALOGUE[code][0]
        super().__init__(f"{code}: {self.message}")


@dataclass(frozen=True, order=True)
class Violation:
    """One rule breach; violations are data, not exceptions.

    Reports are always sorted by (element_id, code, constraint_id);
    constraint_id 0 marks a built-in rule.
    """

    element_id: int
    code: str
    constraint_id: int = 0
    message: str = field(default="", compare=False)

    def __post_init__(self):
        if self.code not in CATALOGUE:
            raise AssertionError(f"violation code not in catalogue: {self.code}")


def sort_violations(violations: list[Violation]) -> list[Violation]:
    return sorted(violations)


def render_violations(violations: list[Violation]) -> str:
    """Canonical one-string rendering used in VALIDATION_FAILED responses."""
    parts = []
    for v in violations:
        if v.constraint_id:
            parts.append(f"{v.code}({v.element_id}:{v.constraint_id})")
        else:
            parts.append(f"{v.code}({v.element_id})")
    return "; ".join(parts)
