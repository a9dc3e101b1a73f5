"""MiMC-7 keyed permutation (91 rounds, keccak-derived constants) used as a PRF."""

from __future__ import annotations

from functools import lru_cache

from Crypto.Hash import keccak

from ..fieldmath import P

ROUNDS = 91
SEED = b"mimc"


def _keccak(data: bytes) -> bytes:
    return keccak.new(digest_bits=256, data=data).digest()


@lru_cache(maxsize=None)
def round_constants(seed: bytes = SEED, rounds: int = ROUNDS):
    c = _keccak(seed)
    out = [0]
    for _ in range(1, rounds):
        c = _keccak(c)
        out.append(int.from_bytes(c, "big") % P)
    return tuple(out)


def mimc7(x: int, k: int) -> int:
    cs = round_constants()
    x %= P
    k %= P
    r = x
    for i in range(ROUNDS):
        t = (r + k + cs[i]) % P
        r = pow(t, 7, P)
    return (r + k) % P


def mimc_prf(key, index) -> int:
    """Keystream word for position index under key."""
    return mimc7(int(index), int(key))
