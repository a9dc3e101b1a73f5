"""ECDH on Baby Jubjub plus an additive MiMC keystream."""

from __future__ import annotations

from dataclasses import dataclass

from ..fieldmath import P
from . import babyjubjub as bjj
from .mimc import mimc_prf
from .poseidon import poseidon_hash


@dataclass(frozen=True)
class Ciphertext:
    ephemeral_pk: tuple
    body: tuple

    def digest(self) -> int:
        return poseidon_hash([*self.ephemeral_pk, *self.body])

    def to_text(self) -> str:
        vals = [*self.ephemeral_pk, *self.body]
        return "".join(f"{v}\n" for v in vals)

    @classmethod
    def from_text(cls, text: str):
        vals = [int(line) for line in text.split()]
        if len(vals) < 2:
            raise ValueError("ciphertext file needs at least the ephemeral key")
        return cls((vals[0], vals[1]), tuple(vals[2:]))


def zero_digest(length: int) -> int:
    """Digest recorded in place of a ciphertext when the audit rejects."""
    return poseidon_hash([0] * (length + 2))


def ecdh(sk: int, pk) -> int:
    pk = bjj.validate(pk)
    return bjj.mul(sk, pk)[0]


def keystream(shared: int, n: int):
    return [mimc_prf(shared, i) for i in range(n)]


def ecies_encrypt(pk, plaintext, ephemeral_sk: int) -> Ciphertext:
    if len(plaintext) == 0:
        raise ValueError("plaintext must be nonempty")
    shared = ecdh(ephemeral_sk, pk)
    epk = bjj.mul(ephemeral_sk, bjj.BASE8)
    body = tuple((int(m) + k) % P for m, k in zip(plaintext, keystream(shared, len(plaintext))))
    return Ciphertext(epk, body)


def ecies_decrypt(sk: int, c: Ciphertext):
    shared = ecdh(sk, c.ephemeral_pk)
    return [(b - k) % P for b, k in zip(c.body, keystream(shared, len(c.body)))]


def write_key(path, values):
    with open(path, "w") as fh:
        for v in values:
            fh.write(f"{int(v)}\n")


def read_key(path):
    with open(path) as fh:
        return [int(line) for line in fh.read().split()]
