"""The five-phase audit protocol around a simulated contract.

The contract is an in-process state machine.  Mutating calls go through
``Contract`` which serializes them with a lock and appends one record per call
to an append-only log.  The free functions mirror the contract methods for
callers that prefer to pass the state explicitly.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .circuit.audit import AuditParams, AuditStatement, circuit_for, generate_witness
from .circuit.backend import ProofBlob, Verdict, get_backend
from .crypto import babyjubjub as bjj
from .crypto.ecies import Ciphertext, ecies_decrypt, zero_digest
from .dataset import Dataset, commitment
from .estimator import DEFAULT_INTERVALS, BinningSpec, audit_mi
from .fieldmath import P, TOTAL_BITS, FixedPoint
from .pca import fit_fixed

AUDIT_FUNC = "histogram-mi"
ENC_FUNC = "ecies-babyjubjub-mimc7"


class ProtocolError(Exception):
    pass


class Unauthorized(ProtocolError):
    pass


class AlreadyCommitted(ProtocolError):
    pass


class NotCommitted(ProtocolError):
    pass


class UnsupportedAlgorithm(ProtocolError):
    pass


class InvalidProof(ProtocolError):
    pass


class InconsistentDecision(ProtocolError):
    pass


class NoResult(ProtocolError):
    pass


class CommitmentMismatch(ProtocolError):
    pass


class DigestMismatch(ProtocolError):
    pass


# ---- proposals -------------------------------------------------------------------


@dataclass(frozen=True)
class Proposal:
    algo: str  # "raw_data" or "pca"
    k: int
    pk: tuple

    @classmethod
    def pca(cls, k: int, pk) -> "Proposal":
        return cls("pca", int(k), tuple(pk))

    @classmethod
    def raw_data(cls, m: int, pk) -> "Proposal":
        return cls("raw_data", int(m), tuple(pk))

    @property
    def circuit_algo(self) -> str:
        return ALGORITHMS[self.algo]

    def to_dict(self):
        return {"algo": self.algo, "k": self.k, "pk": [str(self.pk[0]), str(self.pk[1])]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["algo"], int(d["k"]), (int(d["pk"][0]), int(d["pk"][1])))


# supported representation functions: proposal name -> circuit algorithm id
ALGORITHMS = {"raw_data": "raw", "pca": "pca"}


def check_proposal(f: Proposal, m: int):
    if f.algo not in ALGORITHMS:
        raise UnsupportedAlgorithm(f"unknown algorithm {f.algo!r}")
    if f.algo == "pca" and not 1 <= f.k <= m:
        raise UnsupportedAlgorithm(f"pca({f.k}) needs 1 <= k <= {m}")
    if f.algo == "raw_data" and f.k != m:
        raise UnsupportedAlgorithm("raw_data releases all m columns")
    bjj.validate(f.pk)


# ---- results ---------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroResult:
    """The all-zero output recorded when an audit rejects."""

    length: int

    def digest(self) -> int:
        return zero_digest(self.length)

    def to_text(self) -> str:
        return "".join("0\n" for _ in range(self.length + 2))


def result_from_text(text: str):
    vals = [int(v) for v in text.split()]
    if len(vals) >= 2 and not any(vals):
        return ZeroResult(len(vals) - 2)
    return Ciphertext.from_text(text)


# ---- contract state --------------------------------------------------------------


@dataclass
class ContractState:
    owner: str
    consumer: str
    data_hash: int = None
    threshold: FixedPoint = None
    audit_func: str = None
    enc_func: str = None
    shape: tuple = None  # (N, n, m), published with the commitment
    algo: Proposal = None
    mi_total: FixedPoint = field(default_factory=lambda: FixedPoint(0))
    result: object = None  # Ciphertext, ZeroResult or None
    log: list = field(default_factory=list)

    @property
    def pubkey(self):
        return self.algo.pk if self.algo is not None else None

    def snapshot(self) -> dict:
        d = self.to_dict()
        d.pop("log")
        return d

    def to_dict(self) -> dict:
        return {
            "owner": self.owner,
            "consumer": self.consumer,
            "data_hash": None if self.data_hash is None else str(self.data_hash),
            "threshold": None if self.threshold is None else self.threshold.signed,
            "audit_func": self.audit_func,
            "enc_func": self.enc_func,
            "shape": None if self.shape is None else list(self.shape),
            "algo": None if self.algo is None else self.algo.to_dict(),
            "mi_total": self.mi_total.signed,
            "result": None if self.result is None else self.result.to_text(),
            "log": list(self.log),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ContractState":
        return cls(
            d["owner"],
            d["consumer"],
            None if d.get("data_hash") is None else int(d["data_hash"]),
            None if d.get("threshold") is None else FixedPoint.from_signed_raw(int(d["threshold"])),
            d.get("audit_func"),
            d.get("enc_func"),
            None if d.get("shape") is None else tuple(d["shape"]),
            None if d.get("algo") is None else Proposal.from_dict(d["algo"]),
            FixedPoint.from_signed_raw(int(d.get("mi_total", 0))),
            None if d.get("result") is None else result_from_text(d["result"]),
            list(d.get("log", [])),
        )


def _args_digest(args) -> str:
    return hashlib.sha256(json.dumps(args, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _record(state: ContractState, caller: str, method: str, args, outcome: str):
    state.log.append(
        json.dumps(
            {
                "timestamp": round(time.time(), 3),
                "caller": caller,
                "method": method,
                "args": _args_digest(args),
                "outcome": outcome,
            },
            sort_keys=True,
        )
    )


def _logged(method):
    def wrap(fn):
        def inner(state, caller, *args, **kw):
            try:
                out = fn(state, caller, *args, **kw)
            except Exception as e:
                _record(state, caller, method, args, type(e).__name__)
                raise
            _record(state, caller, method, args, "ok")
            return out

        inner.__name__ = fn.__name__
        inner.__doc__ = fn.__doc__
        return inner

    return wrap


@_logged("GetData")
def contract_get_data(state: ContractState, caller: str, H: int, T: FixedPoint, audit_id=AUDIT_FUNC, enc_id=ENC_FUNC, shape=None):
    """Owner commits the dataset hash and the MI threshold (once)."""
    if caller != state.owner:
        raise Unauthorized(f"{caller} is not the data owner")
    if state.data_hash is not None:
        raise AlreadyCommitted("data hash already recorded")
    state.data_hash = int(H) % P
    state.threshold = T
    state.audit_func = audit_id
    state.enc_func = enc_id
    state.shape = None if shape is None else tuple(int(v) for v in shape)
    return state


@_logged("GetProposal")
def contract_get_proposal(state: ContractState, caller: str, f: Proposal):
    if caller != state.consumer:
        raise Unauthorized(f"{caller} is not the data consumer")
    if state.data_hash is None:
        raise NotCommitted("no data committed yet")
    m = state.shape[2] if state.shape else f.k
    check_proposal(f, m)
    state.algo = f
    return state


def expected_statement(state: ContractState, passed: bool, mi: FixedPoint, y_enc, params: AuditParams) -> AuditStatement:
    """Rebuild the public inputs from the contract's own records and the submitted values."""
    return AuditStatement(state.data_hash, state.threshold, bool(passed), mi, y_enc.digest(), state.pubkey, params)


@dataclass(frozen=True)
class AuditProof:
    """Proof plus the algorithm parameters it was produced for."""

    params: AuditParams
    cs_digest: str
    blob: bytes
    backend: str = "direct"

    def to_dict(self):
        return {"params": self.params.to_dict(), "cs_digest": self.cs_digest, "backend": self.backend}


def _check_params(state: ContractState, params: AuditParams):
    f = state.algo
    if params.algo != f.circuit_algo or params.k != f.k:
        raise InvalidProof("proof parameters do not match the accepted proposal")
    if state.shape is not None and (params.N, params.n, params.m) != tuple(state.shape):
        raise InvalidProof("proof parameters do not match the committed shape")


@_logged("VerifyAndUpdate")
def contract_verify_and_update(state: ContractState, caller: str, passed: bool, mi: FixedPoint, y_enc, proof: AuditProof):
    if caller != state.owner:
        raise Unauthorized(f"{caller} is not the data owner")
    if state.algo is None:
        raise NotCommitted("no proposal recorded")
    le = mi.signed <= state.threshold.signed
    if passed != le:
        raise InconsistentDecision(f"pass={passed} contradicts MI {mi.signed} vs threshold {state.threshold.signed}")
    if passed != isinstance(y_enc, Ciphertext):
        raise InconsistentDecision("accept must carry a ciphertext and reject the zero result")
    _check_params(state, proof.params)
    st = expected_statement(state, passed, mi, y_enc, proof.params)
    cs = circuit_for(proof.params)
    verdict: Verdict = get_backend(proof.backend).verify(cs, proof.cs_digest, st, proof.blob)
    if not verdict:
        raise InvalidProof(verdict.reason)
    state.mi_total = mi
    state.result = y_enc
    return state


def mi_total(state: ContractState) -> FixedPoint:
    return state.mi_total


def result(state: ContractState):
    return state.result


def call_log(state: ContractState):
    return [json.loads(r) for r in state.log]


class Contract:
    """Serializes mutating calls on one state; reads need no lock."""

    def __init__(self, owner: str = "owner", consumer: str = "consumer", state: ContractState = None):
        self.state = state if state is not None else ContractState(owner, consumer)
        self._lock = threading.Lock()

    def get_data(self, caller, H, T, audit_id=AUDIT_FUNC, enc_id=ENC_FUNC, shape=None):
        with self._lock:
            return contract_get_data(self.state, caller, H, T, audit_id, enc_id, shape)

    def get_proposal(self, caller, f):
        with self._lock:
            return contract_get_proposal(self.state, caller, f)

    def verify_and_update(self, caller, passed, mi, y_enc, proof):
        with self._lock:
            return contract_verify_and_update(self.state, caller, passed, mi, y_enc, proof)

    @property
    def mi_total(self):
        return self.state.mi_total

    @property
    def result(self):
        return self.state.result


# ---- sender and receiver -----------------------------------------------------------


@dataclass
class AuditOutcome:
    passed: bool
    mi: FixedPoint
    y_enc: object  # Ciphertext or ZeroResult
    proof: AuditProof
    statement: AuditStatement
    Y: list  # the sender's native representation, raw fixed point


def representation(dataset: Dataset, f: Proposal, max_iters: int = None):
    """Native Y for a proposal: PCA projection or the non-sensitive columns themselves."""
    Xns = dataset.non_sensitive_raw()
    if f.algo == "pca":
        fp = fit_fixed(Xns, f.k) if max_iters is None else fit_fixed(Xns, f.k, max_iters)
        return fp.Y
    return Xns.tolist()


def audit_params_for(dataset: Dataset, f: Proposal, intervals: int = DEFAULT_INTERVALS, spec=None) -> AuditParams:
    if spec is None:
        Y = representation(dataset, f)
        spec = (
            BinningSpec.from_data(dataset.sensitive_raw(), intervals),
            BinningSpec.from_data(np.array(Y, dtype=np.int64).reshape(dataset.N, f.k), intervals),
        )
    return AuditParams(dataset.N, dataset.n, dataset.m, f.k, spec[0], spec[1], f.circuit_algo)


def sender_audit(dataset: Dataset, state: ContractState, ephemeral_sk: int, backend: str = "direct", spec=None, intervals=DEFAULT_INTERVALS) -> AuditOutcome:
    """Owner-side audit: representation, MI, threshold, encryption and proof."""
    if state.data_hash is None or state.algo is None:
        raise NotCommitted("commit and proposal must precede the audit")
    if commitment(dataset) != state.data_hash:
        raise CommitmentMismatch("dataset no longer matches the committed hash")
    f = state.algo
    params = audit_params_for(dataset, f, intervals, spec)
    cs = circuit_for(params)
    w, st, inp = generate_witness(cs, dataset, (f.k, f.pk), ephemeral_sk, state.threshold)
    # the circuit's mi must be the estimator's
    native = audit_mi(dataset.sensitive_raw(), np.array(inp.Y, dtype=np.int64), (params.spec_x, params.spec_y))
    assert native.mi_nats == st.mi, "circuit and estimator MI differ"
    be = get_backend(backend)
    blob = be.prove(cs, w, st)
    y_enc = inp.ciphertext if st.passed else ZeroResult(dataset.N * f.k)
    proof = AuditProof(params, cs.digest(), blob.to_bytes(), backend)
    return AuditOutcome(st.passed, st.mi, y_enc, proof, st, inp.Y)


def redaction(outcome: AuditOutcome) -> dict:
    """What the receiver may see: the public inputs only, never the witness."""
    return {
        "pass": outcome.passed,
        "mi": outcome.mi.signed,
        "public_inputs": [str(v) for v in outcome.statement.public_values()],
        "y_enc_digest": str(outcome.statement.y_enc_digest),
    }


_BAND = 1 << (TOTAL_BITS - 1)


def receiver_decode(sk: int, state: ContractState):
    """Decrypt the stored result into an N x k matrix of FixedPoint values."""
    res = state.result
    if not isinstance(res, Ciphertext):
        raise NoResult("no accepted result to decode")
    if bjj.mul(sk, bjj.BASE8) != tuple(state.pubkey):
        raise DigestMismatch("secret key does not belong to the proposal's public key")
    vals = ecies_decrypt(sk, res)
    signed = []
    for v in vals:
        s = v - P if v > P // 2 else v
        if not -_BAND <= s < _BAND:
            raise DigestMismatch("decrypted values fall outside the fixed-point range")
        signed.append(s)
    k = state.algo.k
    if len(signed) % k:
        raise DigestMismatch("ciphertext length is not a multiple of k")
    return [[FixedPoint.from_signed_raw(s) for s in signed[i : i + k]] for i in range(0, len(signed), k)]
