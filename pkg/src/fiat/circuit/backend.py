"""Proof backends.

Only the reference ``direct`` backend exists: the proof is the witness itself
and verification re-checks every constraint.  It is neither succinct nor
zero-knowledge; it exercises the completeness and soundness plumbing that a
real SNARK backend would slot into.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from .r1cs import ConstraintSystem, SatReport, Witness, deserialize_witness, is_satisfied, serialize_witness

MAGIC = b"FIAT"
_HEADER = struct.Struct(">4sBQ")


class UnsatisfiedWitness(ValueError):
    pass


class MalformedProof(ValueError):
    pass


@dataclass(frozen=True)
class ProofBlob:
    backend_id: int
    payload: bytes

    def to_bytes(self) -> bytes:
        return _HEADER.pack(MAGIC, self.backend_id, len(self.payload)) + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProofBlob":
        if len(data) < _HEADER.size:
            raise MalformedProof("proof shorter than its header")
        magic, bid, n = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise MalformedProof("bad proof magic")
        body = data[_HEADER.size :]
        if len(body) != n:
            raise MalformedProof(f"payload length {len(body)} does not match header {n}")
        return cls(bid, bytes(body))


@dataclass(frozen=True)
class Verdict:
    ok: bool
    reason: str = ""

    def __bool__(self):
        return self.ok


class DirectBackend:
    id = 0
    name = "direct"

    def prove(self, cs: ConstraintSystem, w: Witness, statement) -> ProofBlob:
        rep = is_satisfied(cs, w, statement)
        if not rep.ok:
            raise UnsatisfiedWitness(f"constraint {rep.index} ({rep.tag}) fails")
        return ProofBlob(self.id, zlib.compress(serialize_witness(w), 6))

    def verify(self, cs: ConstraintSystem, cs_digest: str, statement, proof) -> Verdict:
        if cs.digest() != cs_digest:
            return Verdict(False, "constraint system digest mismatch")
        try:
            blob = proof if isinstance(proof, ProofBlob) else ProofBlob.from_bytes(proof)
            if blob.backend_id != self.id:
                raise MalformedProof(f"proof made by backend {blob.backend_id}")
            try:
                w = deserialize_witness(zlib.decompress(blob.payload))
            except (zlib.error, ValueError) as e:
                raise MalformedProof(str(e)) from e
        except MalformedProof as e:
            return Verdict(False, f"MalformedProof: {e}")
        if len(w) != cs.num_vars:
            return Verdict(False, "witness length does not match the system")
        rep: SatReport = is_satisfied(cs, w, statement)
        if not rep.ok:
            return Verdict(False, f"constraint {rep.index} ({rep.tag}) fails")
        return Verdict(True)


BACKENDS = {DirectBackend.name: DirectBackend}


def get_backend(name: str = "direct"):
    try:
        return BACKENDS[name]()
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; available: {sorted(BACKENDS)}") from None


def prove(backend, cs, w, statement) -> ProofBlob:
    return backend.prove(cs, w, statement)


def verify(backend, cs, cs_digest, statement, proof) -> Verdict:
    return backend.verify(cs, cs_digest, statement, proof)
