"""Baby Jubjub twisted Edwards curve over the BN254 scalar field."""

from __future__ import annotations

import secrets
from dataclasses import dataclass
from functools import lru_cache

import gmpy2

from ..fieldmath import P

A = 168700
D = 168696
# order of the prime subgroup generated by BASE8
ORDER = 2736030358979909402780800718157159386076813972158567259200215660948447373041
GENERATOR = (
    995203441582195749578291179787384436505546430278305826713579947235728471134,
    5472060717959818805561601436314318772137091100104008585924551046643952123905,
)
BASE8 = (
    5299619240641551281634865583518297030282874472190772894086521144482721001553,
    16950150798460657717958625567821834550301663161624707787222815936182638968203,
)
IDENTITY = (0, 1)


class InvalidPoint(ValueError):
    pass


def on_curve(pt) -> bool:
    x, y = pt
    if not (0 <= x < P and 0 <= y < P):
        return False
    xx, yy = x * x % P, y * y % P
    return (A * xx + yy - 1 - D * xx % P * yy) % P == 0


def add(p1, p2):
    x1, y1 = p1
    x2, y2 = p2
    t = D * x1 % P * x2 % P * y1 % P * y2 % P
    x3 = (x1 * y2 + y1 * x2) * pow(1 + t, -1, P) % P
    y3 = (y1 * y2 - A * x1 * x2) * pow(1 - t, -1, P) % P
    return x3, y3


def neg(pt):
    return (-pt[0]) % P, pt[1]


def double(pt):
    return add(pt, pt)


def _ext_add(p, q):
    # unified addition in extended coordinates (X:Y:T:Z), x = X/Z, y = Y/Z, T = XY/Z;
    # complete on this curve because a is a square and d is not
    x1, y1, t1, z1 = p
    x2, y2, t2, z2 = q
    a = x1 * x2 % P
    b = y1 * y2 % P
    c = D * t1 % P * t2 % P
    d = z1 * z2 % P
    e = ((x1 + y1) * (x2 + y2) - a - b) % P
    f = (d - c) % P
    g = (d + c) % P
    h = (b - A * a) % P
    return e * f % P, g * h % P, e * h % P, f * g % P


def mul(k: int, pt):
    k = int(k)
    if k < 0:
        k, pt = -k, neg(pt)
    # mpz limbs roughly halve the cost of the 254-bit products below
    x, y = gmpy2.mpz(pt[0]), gmpy2.mpz(pt[1])
    q = (x, y, x * y % P, gmpy2.mpz(1))
    acc = (gmpy2.mpz(0), gmpy2.mpz(1), gmpy2.mpz(0), gmpy2.mpz(1))
    while k:
        if k & 1:
            acc = _ext_add(acc, q)
        q = _ext_add(q, q)
        k >>= 1
    zi = gmpy2.invert(acc[3], P)
    return int(acc[0] * zi % P), int(acc[1] * zi % P)


@lru_cache(maxsize=1024)
def in_subgroup(pt) -> bool:
    return on_curve(pt) and mul(ORDER, pt) == IDENTITY


def validate(pt):
    pt = (int(pt[0]), int(pt[1]))
    if not in_subgroup(pt) or pt == IDENTITY:
        raise InvalidPoint(f"{pt} is not a non-identity point of the prime-order subgroup")
    return pt


@dataclass(frozen=True)
class KeyPair:
    sk: int
    pk: tuple

    @classmethod
    def from_secret(cls, sk: int):
        sk = int(sk)
        if not 1 <= sk < ORDER:
            raise ValueError("secret scalar out of range")
        return cls(sk, mul(sk, BASE8))

    @classmethod
    def generate(cls, rng=None):
        if rng is None:
            sk = 1 + secrets.randbelow(ORDER - 1)
        else:
            sk = rng.randrange(1, ORDER)
        return cls.from_secret(sk)
