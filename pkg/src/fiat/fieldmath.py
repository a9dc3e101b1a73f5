"""Prime field arithmetic and signed fixed-point encoding over the BN254 scalar field."""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from functools import lru_cache

import gmpy2

P = 21888242871839275222246405745257275088548364400416034343698204186575808495617
SCALE_BITS = 20
TOTAL_BITS = 64

if not gmpy2.is_prime(P, 50):
    raise RuntimeError("field modulus failed the primality test")


class RangeOverflow(ValueError):
    pass


class InvalidEncoding(ValueError):
    pass


class DomainError(ValueError):
    pass


def inv(a: int) -> int:
    a %= P
    if a == 0:
        raise ZeroDivisionError("inverse of zero")
    return pow(a, -1, P)


def to_signed(v: int, total_bits: int = TOTAL_BITS) -> int:
    """Interpret a field value as a signed integer of at most total_bits bits."""
    v %= P
    half = 1 << (total_bits - 1)
    if v < half:
        return v
    if v > P - half:
        return v - P
    raise InvalidEncoding(f"field value {v} is outside the signed {total_bits}-bit band")


def from_signed(x: int) -> int:
    return x % P


class FieldElement:
    __slots__ = ("value",)

    def __init__(self, value: int):
        object.__setattr__(self, "value", int(value) % P)

    def __setattr__(self, name, value):
        raise AttributeError("FieldElement is immutable")

    @staticmethod
    def _v(other) -> int:
        if isinstance(other, FieldElement):
            return other.value
        if isinstance(other, int):
            return other % P
        return NotImplemented

    def __add__(self, other):
        o = self._v(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._v(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value - o)

    def __rsub__(self, other):
        o = self._v(other)
        if o is NotImplemented:
            return o
        return FieldElement(o - self.value)

    def __mul__(self, other):
        o = self._v(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value * o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._v(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.value * inv(o))

    def __rtruediv__(self, other):
        o = self._v(other)
        if o is NotImplemented:
            return o
        return FieldElement(o * inv(self.value))

    def __neg__(self):
        return FieldElement(-self.value)

    def __pow__(self, e: int):
        return FieldElement(pow(self.value, e, P))

    def inverse(self) -> "FieldElement":
        return FieldElement(inv(self.value))

    def __eq__(self, other):
        o = self._v(other)
        if o is NotImplemented:
            return False
        return self.value == o

    def __hash__(self):
        return hash(self.value)

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"FieldElement({self.value})"


@dataclass(frozen=True)
class FixedPoint:
    raw: int
    scale_bits: int = SCALE_BITS
    total_bits: int = TOTAL_BITS

    def __post_init__(self):
        if self.total_bits <= 2 * self.scale_bits:
            raise ValueError("total_bits must exceed 2*scale_bits")
        object.__setattr__(self, "raw", int(self.raw) % P)

    @classmethod
    def from_signed_raw(cls, s: int, scale_bits: int = SCALE_BITS, total_bits: int = TOTAL_BITS):
        if abs(s) >= 1 << (total_bits - 1):
            raise RangeOverflow(f"raw value {s} does not fit in {total_bits} bits")
        return cls(s % P, scale_bits, total_bits)

    @property
    def signed(self) -> int:
        return to_signed(self.raw, self.total_bits)

    @property
    def field(self) -> FieldElement:
        return FieldElement(self.raw)

    def __float__(self):
        return decode(self)

    def __add__(self, other):
        return fxp_add(self, other)

    def __mul__(self, other):
        return fxp_mul(self, other)

    def __neg__(self):
        return FixedPoint.from_signed_raw(-self.signed, self.scale_bits, self.total_bits)


def encode(x: float, scale_bits: int = SCALE_BITS, total_bits: int = TOTAL_BITS) -> FixedPoint:
    if not math.isfinite(x):
        raise RangeOverflow(f"cannot encode non-finite value {x}")
    s = math.floor(x * (1 << scale_bits) + 0.5)
    return FixedPoint.from_signed_raw(s, scale_bits, total_bits)


def decode(x: FixedPoint) -> float:
    return x.signed / (1 << x.scale_bits)


def _same_format(a: FixedPoint, b: FixedPoint):
    if a.scale_bits != b.scale_bits or a.total_bits != b.total_bits:
        raise ValueError("mixed fixed-point formats")


def fxp_add(a: FixedPoint, b: FixedPoint) -> FixedPoint:
    _same_format(a, b)
    return FixedPoint.from_signed_raw(a.signed + b.signed, a.scale_bits, a.total_bits)


def fxp_mul(a: FixedPoint, b: FixedPoint) -> FixedPoint:
    _same_format(a, b)
    prod = a.signed * b.signed
    if abs(prod) >= 1 << (2 * a.total_bits - 2):
        raise RangeOverflow("product exceeds the pre-rescale budget")
    # floor division rounds toward -inf, the same result the in-circuit remainder check accepts
    return FixedPoint.from_signed_raw(prod >> a.scale_bits, a.scale_bits, a.total_bits)


# ---------------------------------------------------------------------------
# exponentiation bracket
#
# A logarithm hint h for a positive fixed-point x is accepted when
#   E(h) <= x * e^(-h_min) < E_up(h)
# where E is a floor-truncated product of per-bit constants over the offset
# h - h_min.  The same integer recipe runs natively (to pick hints) and in the
# constraint system (to check them), so a hint chosen here always verifies.

EXP_PREC = 28


@dataclass(frozen=True)
class ExpParams:
    h_min: int  # smallest admissible ln value, in whole units
    int_bits: int  # bits for the integer part of h - h_min
    x_bits: int  # x is assumed to be in [1, 2^x_bits)
    scale_bits: int = SCALE_BITS
    prec: int = EXP_PREC

    @property
    def off_bits(self) -> int:
        return self.int_bits + self.scale_bits

    @property
    def guard(self) -> int:
        return 0 if self.h_min == 0 else 24


def _dec_exp(num: int, den_log2: int, prec_bits: int) -> int:
    """floor(e^(num / 2^den_log2) * 2^prec_bits) computed with decimal."""
    with localcontext() as ctx:
        ctx.prec = 120
        val = (Decimal(num) / (Decimal(2) ** den_log2)).exp() * (Decimal(2) ** prec_bits)
        return int(val.to_integral_value(rounding="ROUND_FLOOR"))


@lru_cache(maxsize=None)
def exp_constants(params: ExpParams):
    """Per-bit factors K_i, the one-step upper factor, and the x scaling constant."""
    s, pr = params.scale_bits, params.prec
    ks = tuple(_dec_exp(1, s - i, pr) if i < s else _dec_exp(1 << (i - s), 0, pr) for i in range(params.off_bits))
    k_up = _dec_exp(1, s - 2, pr)
    # Cx scales x so that x*Cx and Pi*2^guard are comparable
    if params.h_min == 0:
        cx = 1 << (pr - s)
    else:
        cx = _dec_exp(-params.h_min, 0, pr + params.guard - s)
    return ks, k_up, cx


@lru_cache(maxsize=None)
def exp_widths(params: ExpParams):
    """Bit widths used by the in-circuit check.

    Returns (acc_widths, lo_bits, hi_bits): acc_widths[i] bounds the running
    product after bit i, lo_bits / hi_bits bound the two comparison slacks.
    """
    ks, k_up, cx = exp_constants(params)
    pr, g = params.prec, params.guard
    acc = ks[0]
    widths = [acc.bit_length()]
    for k in ks[1:]:
        acc = (acc * k) >> pr
        widths.append(acc.bit_length())
    x_max = (1 << params.x_bits) - 1
    lo_bits = (x_max * cx).bit_length()
    hi_bits = ((acc * k_up) << g).bit_length()
    return tuple(widths), lo_bits, hi_bits


def exp_product(off: int, params: ExpParams) -> int:
    """Truncated product for an offset h - h_min given as a nonnegative integer.

    The lowest bit selects its factor exactly; every later set bit multiplies
    and floors back to 2^prec scale.
    """
    ks, _, _ = exp_constants(params)
    pr = params.prec
    acc = ks[0] if off & 1 else 1 << pr
    for i in range(1, params.off_bits):
        if (off >> i) & 1:
            acc = (acc * ks[i]) >> pr
    return acc


def exp_bracket_holds(x_raw: int, h_raw: int, params: ExpParams) -> bool:
    """Pi * 2^g <= x * Cx  and  x * Cx * 2^prec < Pi * K_up * 2^g."""
    off = h_raw - params.h_min * (1 << params.scale_bits)
    if off < 0 or off >= 1 << params.off_bits:
        return False
    if x_raw <= 0 or x_raw >= 1 << params.x_bits:
        return False
    _, k_up, cx = exp_constants(params)
    pi = exp_product(off, params)
    lhs = x_raw * cx
    g = params.guard
    return (pi << g) <= lhs and (lhs << params.prec) < ((pi * k_up) << g)


DEFAULT_EXP = ExpParams(h_min=-15, int_bits=6, x_bits=TOTAL_BITS - 1)


def ln_hint(x_raw: int, params: ExpParams = DEFAULT_EXP) -> int:
    """Raw fixed-point ln(x) chosen so that the exponentiation bracket accepts it."""
    if x_raw <= 0:
        raise DomainError("ln of a nonpositive value")
    s = params.scale_bits
    h = math.floor((math.log(x_raw) - s * math.log(2)) * (1 << s))
    for _ in range(64):
        if exp_bracket_holds(x_raw, h, params):
            return h
        off = h - params.h_min * (1 << s)
        if off < 0:
            raise DomainError("ln below the admissible bracket range")
        pi = exp_product(off, params)
        _, _, cx = exp_constants(params)
        if (pi << params.guard) > x_raw * cx:
            h -= 1
        else:
            h += 1
    raise DomainError(f"no admissible ln hint near {h}")


def fxp_ln(x: FixedPoint, params: ExpParams = DEFAULT_EXP) -> FixedPoint:
    if x.signed <= 0:
        raise DomainError("ln of a nonpositive value")
    h = ln_hint(x.signed, params)
    return FixedPoint.from_signed_raw(h, x.scale_bits, x.total_bits)
