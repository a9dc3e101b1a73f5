"""Histogram (hypercube-cell) entropy and mutual information estimators.

Two evaluation paths share one histogram:

* a float path, the plain plugin formulas in double precision;
* a fixed-point path that follows the constraint system step by step
  (ln hints from ``fieldmath.ln_hint``, floor divisions with remainders),
  so the circuit's mi variable equals it exactly.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dataset import ShapeMismatch
from .fieldmath import SCALE_BITS, ExpParams, FixedPoint, decode, encode, ln_hint

ONE = 1 << SCALE_BITS
EPS_FXP = 2.0**-10
DEFAULT_INTERVALS = 10
# counts are at most 2^20 so ln(count) < 14 fits four integer bits
MAX_ROWS = 1 << 20
COUNT_LN = ExpParams(h_min=0, int_bits=4, x_bits=SCALE_BITS + 21)


@dataclass(frozen=True)
class BinningSpec:
    """Per-dimension cell widths and grid anchor, quantized to the fixed-point grid."""

    bandwidth: tuple
    origin: tuple = None
    intervals_per_dim: int = DEFAULT_INTERVALS

    def __post_init__(self):
        bw = tuple(float(b) for b in self.bandwidth)
        if not bw:
            raise ValueError("binning needs at least one dimension")
        if any(not b > 0 for b in bw):
            raise ValueError("bandwidth components must be positive")
        if self.intervals_per_dim < 2:
            raise ValueError("intervals_per_dim must be at least 2")
        org = tuple(0.0 for _ in bw) if self.origin is None else tuple(float(o) for o in self.origin)
        if len(org) != len(bw):
            raise ValueError("origin and bandwidth lengths differ")
        object.__setattr__(self, "bandwidth", bw)
        object.__setattr__(self, "origin", org)

    @property
    def dims(self) -> int:
        return len(self.bandwidth)

    @property
    def bandwidth_raw(self):
        return tuple(max(1, encode(b).signed) for b in self.bandwidth)

    @property
    def origin_raw(self):
        return tuple(encode(o).signed for o in self.origin)

    def boundaries_raw(self, d: int):
        """Raw thresholds t_1..t_{B-1}; the cell index is the number of thresholds <= x."""
        o, w = self.origin_raw[d], self.bandwidth_raw[d]
        return [o + j * w for j in range(1, self.intervals_per_dim)]

    @classmethod
    def from_data(cls, X_raw, intervals_per_dim: int = DEFAULT_INTERVALS):
        """Anchor at the column minimum and split the column range into equal cells."""
        X = np.asarray(X_raw, dtype=np.int64)
        lo = X.min(axis=0) / ONE
        hi = X.max(axis=0) / ONE
        span = hi - lo
        bw = [s / intervals_per_dim if s > 0 else 1.0 for s in span]
        return cls(tuple(bw), tuple(float(v) for v in lo), intervals_per_dim)

    def to_dict(self):
        return {"bandwidth": list(self.bandwidth), "origin": list(self.origin), "intervals": self.intervals_per_dim}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["bandwidth"]), tuple(d["origin"]), int(d["intervals"]))


def _raw_matrix(M) -> np.ndarray:
    if isinstance(M, np.ndarray) and M.dtype.kind == "i":
        out = M
    else:
        rows = [[v.signed if isinstance(v, FixedPoint) else int(v) for v in r] for r in M]
        out = np.array(rows, dtype=np.int64)
    if out.ndim == 1:
        out = out[:, None]
    return out


def _raw_vector(x):
    return [v.signed if isinstance(v, FixedPoint) else int(v) for v in x]


def bin_index(x, spec: BinningSpec):
    """Cell index of one point: floor((x - origin)/bandwidth) clamped to [0, B-1]."""
    xr = _raw_vector(x)
    if len(xr) != spec.dims:
        raise ShapeMismatch("point and binning spec dimensions differ")
    out = []
    for v, o, w in zip(xr, spec.origin_raw, spec.bandwidth_raw):
        q = (v - o) // w
        out.append(min(max(q, 0), spec.intervals_per_dim - 1))
    return tuple(out)


def bin_matrix(X, spec: BinningSpec) -> np.ndarray:
    X = _raw_matrix(X)
    if X.shape[1] != spec.dims:
        raise ShapeMismatch("matrix and binning spec dimensions differ")
    o = np.array(spec.origin_raw, dtype=object)
    w = np.array(spec.bandwidth_raw, dtype=object)
    q = (X.astype(object) - o) // w
    return np.clip(q, 0, spec.intervals_per_dim - 1).astype(np.int64)


def cell_ids(Q: np.ndarray, intervals: int) -> np.ndarray:
    """Mixed-radix id sum_j q_j * B^j for each row of bin indices."""
    ids = np.zeros(Q.shape[0], dtype=object)
    mult = 1
    for j in range(Q.shape[1]):
        ids = ids + Q[:, j].astype(object) * mult
        mult *= intervals
    return ids


@dataclass(frozen=True)
class JointHistogram:
    cell_counts: dict  # (x cell tuple, y cell tuple) -> count
    total: int

    def __post_init__(self):
        if sum(self.cell_counts.values()) != self.total:
            raise ValueError("cell counts do not sum to the total")

    @classmethod
    def from_counts(cls, counts: dict):
        cc = {}
        for (a, b), c in counts.items():
            a = a if isinstance(a, tuple) else (a,)
            b = b if isinstance(b, tuple) else (b,)
            if c:
                cc[(a, b)] = cc.get((a, b), 0) + int(c)
        return cls(cc, sum(cc.values()))

    def marginal_x(self) -> Counter:
        out = Counter()
        for (a, _), c in self.cell_counts.items():
            out[a] += c
        return out

    def marginal_y(self) -> Counter:
        out = Counter()
        for (_, b), c in self.cell_counts.items():
            out[b] += c
        return out

    def transpose(self) -> "JointHistogram":
        return JointHistogram({(b, a): c for (a, b), c in self.cell_counts.items()}, self.total)


def build_histogram(X, Y, spec_x: BinningSpec, spec_y: BinningSpec) -> JointHistogram:
    X = _raw_matrix(X)
    Y = _raw_matrix(Y)
    if X.shape[0] != Y.shape[0]:
        raise ShapeMismatch("X and Y row counts differ")
    qx = bin_matrix(X, spec_x)
    qy = bin_matrix(Y, spec_y)
    counts = Counter(zip(map(tuple, qx.tolist()), map(tuple, qy.tolist())))
    return JointHistogram(dict(counts), X.shape[0])


def _counts_of(hist):
    if isinstance(hist, JointHistogram):
        return list(hist.cell_counts.values()), hist.total
    if isinstance(hist, dict):
        vals = [int(c) for c in hist.values()]
    else:
        vals = [int(c) for c in hist]
    return vals, sum(vals)


# ---- float path -----------------------------------------------------------


def entropy_float(hist) -> float:
    counts, total = _counts_of(hist)
    if total <= 0:
        raise ValueError("empty histogram")
    return -sum(c / total * math.log(c / total) for c in counts if c > 0)


def conditional_entropy_float(hist: JointHistogram) -> float:
    """H(X|Y) over the nonempty cells."""
    py = hist.marginal_y()
    N = hist.total
    return -sum(c / N * math.log(c / py[b]) for (_, b), c in hist.cell_counts.items())


def mutual_information_float(hist: JointHistogram) -> float:
    px, py = hist.marginal_x(), hist.marginal_y()
    N = hist.total
    s = 0.0
    for (a, b), c in hist.cell_counts.items():
        s += c / N * math.log(c * N / (px[a] * py[b]))
    # clip the tiny negative sums that float rounding can produce
    return max(s, 0.0)


# ---- fixed-point path -----------------------------------------------------


@lru_cache(maxsize=1 << 16)
def ln_count(c: int) -> int:
    """Raw ln(c) hint for a count (ln of 1 for the empty cell)."""
    return ln_hint(max(c, 1) << SCALE_BITS, COUNT_LN)


def entropy_raw(counts, total: int) -> int:
    """floor((N ln N - sum c ln c) / N) at scale 2^20; empty cells contribute zero."""
    if total <= 0:
        raise ValueError("empty histogram")
    if total > MAX_ROWS:
        raise ValueError("histogram total exceeds the supported row count")
    acc = total * ln_count(total) - sum(c * ln_count(c) for c in counts if c > 0)
    return acc // total


def entropy(hist) -> FixedPoint:
    counts, total = _counts_of(hist)
    return FixedPoint.from_signed_raw(entropy_raw(counts, total))


def mi_raw(hist: JointHistogram) -> int:
    N = hist.total
    hx = entropy_raw(hist.marginal_x().values(), N)
    hy = entropy_raw(hist.marginal_y().values(), N)
    hxy = entropy_raw(hist.cell_counts.values(), N)
    return hx + hy - hxy


def conditional_entropy(hist: JointHistogram) -> FixedPoint:
    N = hist.total
    hxy = entropy_raw(hist.cell_counts.values(), N)
    hy = entropy_raw(hist.marginal_y().values(), N)
    return FixedPoint.from_signed_raw(hxy - hy)


def mutual_information(hist: JointHistogram) -> FixedPoint:
    return FixedPoint.from_signed_raw(mi_raw(hist))


def ratio_raw(mi: int, h: int) -> int:
    """floor(mi / h) at scale 2^20, defined as 0 for a zero-entropy feature."""
    if h <= 0:
        return 0
    return (mi << SCALE_BITS) // h


@dataclass(frozen=True)
class MIResult:
    mi_nats: FixedPoint
    entropy_x_nats: FixedPoint
    ratio: FixedPoint
    mi_float: float = None
    entropy_float: float = None

    @property
    def mi(self) -> float:
        return decode(self.mi_nats)

    @property
    def entropy(self) -> float:
        return decode(self.entropy_x_nats)


def audit_mi(X_s, Y, spec) -> MIResult:
    spec_x, spec_y = spec
    hist = build_histogram(X_s, Y, spec_x, spec_y)
    mi = mi_raw(hist)
    hx = entropy_raw(hist.marginal_x().values(), hist.total)
    return MIResult(
        FixedPoint.from_signed_raw(mi),
        FixedPoint.from_signed_raw(hx),
        FixedPoint.from_signed_raw(ratio_raw(mi, hx)),
        mutual_information_float(hist),
        entropy_float(hist.marginal_x()),
    )


def default_threshold(entropy_x: FixedPoint, fraction: float = 0.4) -> FixedPoint:
    h = entropy_x.signed
    if h < 0:
        raise ValueError("entropy must be nonnegative")
    num, den = float(fraction).as_integer_ratio()
    return FixedPoint.from_signed_raw(h * num // den)
