"""Reusable sub-circuits written against the three-mode Builder."""

from __future__ import annotations

from ..crypto import babyjubjub as bjj
from ..crypto.mimc import ROUNDS as MIMC_ROUNDS
from ..crypto.mimc import round_constants as mimc_constants
from ..crypto.poseidon import R_F, R_P, T, is_full_round, parameters, sponge_plan
from ..fieldmath import P, ExpParams, exp_constants, exp_widths
from .r1cs import Builder

HALF = P // 2


def sval(v) -> int:
    """Signed reading of a witness value."""
    v = int(v) % P
    return v - P if v > HALF else v


# ---- ranges and comparisons --------------------------------------------------


def range_check(cs: Builder, x, width: int, fn=None):
    """Constrain 0 <= x < 2^width (width booleans plus one packing equality)."""
    packed = cs.packed(width, fn if fn is not None else (lambda: sval(x)))
    cs.eq(packed, x)


def signed_var(cs: Builder, width: int, fn):
    """Fresh value in [-2^(width-1), 2^(width-1)), represented by its offset bits."""
    off = 1 << (width - 1)
    packed = cs.packed(width, lambda: fn() + off)
    return packed - off


def geq_zero(cs: Builder, d, width: int = 64):
    """Bit equal to [d >= 0] for |d| < 2^width."""
    low = cs.packed(width, lambda: (sval(d) + (1 << width)) & ((1 << width) - 1))
    top = cs.packed(1, lambda: 1 if sval(d) >= 0 else 0)
    cs.eq(low + top * (1 << width), d + (1 << width))
    return top


def is_zero(cs: Builder, x):
    """Bit equal to [x == 0]."""
    inv = cs.var(lambda: pow(x, -1, P) if x % P else 0)
    prod = cs.mul(x, inv)
    z = 1 - prod
    cs.enforce(x, z, 0)
    return z


def select(cs: Builder, bit, a, b):
    """bit ? a : b for a boolean bit."""
    return cs.mul(bit, a - b) + b


# ---- Poseidon -----------------------------------------------------------------


def _pow5(cs: Builder, x):
    x2 = cs.mul(x, x)
    x4 = cs.mul(x2, x2)
    return cs.mul(x4, x)


def poseidon_permute(cs: Builder, state):
    rc, mds = parameters()
    s = list(state)
    for r in range(R_F + R_P):
        s = [s[i] + rc[r * T + i] for i in range(T)]
        if is_full_round(r):
            s = [_pow5(cs, v) for v in s]
        else:
            # the S-box input mixes every earlier partial round; naming it costs one
            # constraint and keeps x^5 from copying that long combination three times
            x = cs.var(lambda v=s[0]: v)
            cs.eq(x, s[0])
            s[0] = _pow5(cs, x)
        s = [(s[0] * mds[i][0] + s[1] * mds[i][1] + s[2] * mds[i][2]) % P for i in range(T)]
    return s


def poseidon_hash(cs: Builder, inputs):
    vals = list(inputs)
    cap, padded = sponge_plan(len(vals))
    vals += [0] * (padded - len(vals))
    state = [cap, 0, 0]
    if not vals:
        return poseidon_permute(cs, state)[0]
    for i in range(0, padded, 2):
        state = poseidon_permute(cs, [state[0], state[1] + vals[i], state[2] + vals[i + 1]])
    return state[0]


# ---- MiMC ---------------------------------------------------------------------


def mimc7(cs: Builder, x, k):
    cs_ = mimc_constants()
    r = x
    for i in range(MIMC_ROUNDS):
        t = r + k + cs_[i]
        t2 = cs.mul(t, t)
        t4 = cs.mul(t2, t2)
        t6 = cs.mul(t4, t2)
        r = cs.mul(t6, t)
    return r + k


# ---- Baby Jubjub -------------------------------------------------------------


def point_add(cs: Builder, p1, p2):
    x1, y1 = p1
    x2, y2 = p2
    beta = cs.mul(x1, y2)
    gamma = cs.mul(y1, x2)
    delta = cs.mul(y1 - x1 * bjj.A, x2 + y2)
    tau = cs.mul(beta, gamma)

    memo = []

    def hint(i):
        if not memo:
            memo.append(bjj.add((x1 % P, y1 % P), (x2 % P, y2 % P)))
        return memo[0][i]

    x3 = cs.var(lambda: hint(0))
    y3 = cs.var(lambda: hint(1))
    cs.enforce(x3, 1 + tau * bjj.D, beta + gamma)
    cs.enforce(y3, 1 - tau * bjj.D, delta + beta * bjj.A - gamma)
    return x3, y3


def assert_on_curve(cs: Builder, pt):
    x, y = pt
    x2 = cs.mul(x, x)
    y2 = cs.mul(y, y)
    t = cs.mul(x2, y2)
    cs.eq(x2 * bjj.A + y2, 1 + t * bjj.D)


def scalar_bits(cs: Builder, fn):
    bits, packed = cs.bits(bjj.ORDER.bit_length(), fn)
    return bits, packed


def fixed_base_mul(cs: Builder, bits, base=bjj.BASE8):
    """sum_i b_i 2^i base with precomputed multiples: one addition per bit."""
    acc = None
    pt = base
    for b in bits:
        sel = (b * pt[0], 1 + b * (pt[1] - 1))
        acc = sel if acc is None else point_add(cs, acc, sel)
        pt = bjj.add(pt, pt)
    return acc


def variable_base_mul(cs: Builder, bits, pt):
    acc = None
    q = pt
    for i, b in enumerate(bits):
        sel = (cs.mul(b, q[0]), 1 + cs.mul(b, q[1] - 1))
        acc = sel if acc is None else point_add(cs, acc, sel)
        if i + 1 < len(bits):
            q = point_add(cs, q, q)
    return acc


# ---- exponentiation check -----------------------------------------------------


def exp_check(cs: Builder, x, h, params: ExpParams):
    """Accept h as ln(x) at 2^s scale when E(h) <= x e^(-h_min) < E(h) e^(2^-18).

    The offset h - h_min*2^s is decomposed into bits; each set bit multiplies
    the running product by its precomputed factor e^(2^(i-s)) at 2^prec scale
    and floors back, with quotient and remainder range-checked so the
    truncation is unique.
    """
    ks, k_up, cx = exp_constants(params)
    widths, lo_bits, hi_bits = exp_widths(params)
    pr, g = params.prec, params.guard
    one = 1 << pr
    off = h - params.h_min * (1 << params.scale_bits)
    bits, packed = cs.bits(params.off_bits, lambda: sval(off))
    cs.eq(packed, off)
    acc = one + bits[0] * (ks[0] - one)
    for i in range(1, params.off_bits):
        f = one + bits[i] * (ks[i] - one)
        a_, f_ = acc, f
        nxt = cs.packed(widths[i], lambda: (sval(a_) * sval(f_)) >> pr)
        rem = cs.packed(pr, lambda: (sval(a_) * sval(f_)) & (one - 1))
        cs.enforce(acc, f, nxt * one + rem)
        acc = nxt
    xc = x * cx
    range_check(cs, xc - acc * (1 << g), lo_bits)
    range_check(cs, acc * (k_up << g) - xc * one - 1, hi_bits)
    return acc


# ---- linear algebra -----------------------------------------------------------


def mat_vec(cs: Builder, M, v):
    return [cs.lsum([cs.mul(a, b) for a, b in zip(row, v)]) for row in M]


def freivalds_check(cs: Builder, A, B, C, r):
    """Constrain A (B r) = C r for LC matrices given as row lists."""
    Br = mat_vec(cs, B, r)
    lhs = mat_vec(cs, A, Br)
    rhs = mat_vec(cs, C, r)
    for a, b in zip(lhs, rhs):
        cs.eq(a, b)


RES_BITS = 103
ORTH_BITS = 62
TOL_EIG_INV = 1000
TOL_ORTH_INV = 10000


def abs_le(cs: Builder, x, bound, scale: int, width: int):
    """Constrain scale*|x| <= bound via two range checks."""
    range_check(cs, bound - x * scale, width)
    range_check(cs, bound + x * scale, width)


def eigenpair_check(cs: Builder, C, lams, V, scale_bits: int = 20):
    """Residual and orthonormality checks for k hinted pairs of an m x m matrix.

    Entries are fixed point at 2^scale_bits; products are compared at the
    squared scale.  Tolerances: 10^-3 * trace(C) for each residual entry and
    10^-4 for each pairwise dot product.
    """
    m = len(C)
    trace = cs.lsum([C[i][i] for i in range(m)])
    bound_res = trace * (1 << scale_bits)
    with cs.scope("residual"):
        for lam, v in zip(lams, V):
            Cv = mat_vec(cs, C, v)
            for j in range(m):
                res = Cv[j] - cs.mul(lam, v[j])
                abs_le(cs, res, bound_res, TOL_EIG_INV, RES_BITS)
    with cs.scope("orthonormal"):
        unit = 1 << (2 * scale_bits)
        for i in range(len(V)):
            for j in range(i, len(V)):
                dot = cs.lsum([cs.mul(a, b) for a, b in zip(V[i], V[j])])
                dev = dot - (unit if i == j else 0)
                abs_le(cs, dev, unit, TOL_ORTH_INV, ORTH_BITS)
