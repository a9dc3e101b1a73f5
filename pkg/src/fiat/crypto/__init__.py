from .babyjubjub import InvalidPoint, KeyPair
from .ecies import Ciphertext, ecdh, ecies_decrypt, ecies_encrypt
from .mimc import mimc7, mimc_prf
from .poseidon import poseidon_hash


class Commitment:
    """Poseidon digest of a dataset's canonical serialization."""

    def __init__(self, digest: int):
        self.digest = int(digest)

    @classmethod
    def of(cls, elements):
        return cls(poseidon_hash(elements))

    def __eq__(self, other):
        return isinstance(other, Commitment) and other.digest == self.digest

    def __repr__(self):
        return f"Commitment({self.digest})"


__all__ = [
    "Ciphertext",
    "Commitment",
    "InvalidPoint",
    "KeyPair",
    "ecdh",
    "ecies_decrypt",
    "ecies_encrypt",
    "mimc7",
    "mimc_prf",
    "poseidon_hash",
]
