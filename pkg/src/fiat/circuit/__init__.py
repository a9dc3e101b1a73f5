"""R1CS construction for the audit statement."""

from .r1cs import (
    TAGS,
    Builder,
    ConstraintSystem,
    HintFailure,
    SatReport,
    ShapeError,
    Witness,
    deserialize,
    deserialize_witness,
    is_satisfied,
    serialize,
    serialize_witness,
)
from .audit import (
    AuditParams,
    AuditStatement,
    build_audit_circuit,
    circuit_for,
    constraint_report,
    count_constraints,
    generate_witness,
    native_audit,
)
from .audit import eigenpair_check_gadget, exp_check_gadget, freivalds_check_gadget, mi_gadget
from .backend import DirectBackend, MalformedProof, ProofBlob, UnsatisfiedWitness, Verdict, get_backend, prove, verify
