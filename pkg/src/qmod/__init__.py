"""qmod: a qualifiable meta-modeling kernel.

An essential meta-language, a minimal transactional runtime with generic
CRUD commands, a deterministic traceable model-to-model transformation
engine, and deterministic qualification-artifact generators, all behind
one line-oriented wire protocol.
"""

from .constraints import evaluate
from .errors import CATALOGUE, KernelError, Violation
from .meta import (
    Base,
    DIMENSIONLESS,
    ElementKind,
    Level,
    Metamodel,
    decrement_potency,
    effective_attributes,
    unit_compatible,
    validate_metamodel,
)
from .persist import digest, from_bytes, load, save, to_bytes
from .protocol import Command, Response, Session, parse
from .qualify import (
    ArtifactBundle,
    gen_docs,
    gen_error_catalogue,
    gen_requirements,
    gen_tests,
    gen_trace_report,
)
from .store import Store
from .transform import run_transformation, validate_transformation

__version__ = "0.1.0"

__all__ = [
    "ArtifactBundle", "Base", "CATALOGUE", "Command", "DIMENSIONLESS", "ElementKind",
    "KernelError", "Level", "Metamodel", "Response", "Session", "Store", "Violation",
    "decrement_potency", "digest", "effective_attributes", "evaluate", "from_bytes",
    "gen_docs", "gen_error_catalogue", "gen_requirements", "gen_tests", "gen_trace_report",
    "load", "parse", "run_transformation", "save", "to_bytes", "unit_compatible",
    "validate_metamodel",
]
