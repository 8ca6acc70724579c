"""Circuit-based toolkit for operational probabilistic theories."""
from .constructions import (
    build_filter,
    build_reversible_between_pure,
    constructions_suite,
    run_teleportation_suite,
    substitute_system,
)
from .errors import GptcError
from .ir import Fragment, FragmentKind, Operation, SystemType, Wire, classify, compose, connect
from .notation import parse, parse_document, render
from .postulates import (
    build_face,
    check_p1,
    check_p2,
    check_p3,
    check_p4_compound,
    check_p4prime,
    check_p5,
    check_wootters,
    wootters_verify,
)
from .report import CheckReport
from .tensor import GptTensor, circuit_probability, contraction_schedule, fragment_tensor
from .theories import classical_theory, load_tabular_theory, quantum_theory, theory_from_selector

__version__ = "0.1.0"
