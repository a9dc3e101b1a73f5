"""Rank-1 constraint systems: a three-mode builder, satisfaction checking, serialization.

Gadgets are written once against ``Builder``.  Depending on the mode the same
code records constraints (``build``), fills in a witness (``witness``) or only
counts constraints (``count``).  Linear combinations are ``LC`` objects when
building, plain field integers when computing a witness, and an inert
placeholder when counting, so gadget code must never inspect them.
"""

from __future__ import annotations

import hashlib
import struct
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from ..fieldmath import P

TAGS = ("hash", "pca", "mi", "enc", "glue")


class HintFailure(RuntimeError):
    """A natively computed hint does not meet its in-circuit check."""


class ShapeError(ValueError):
    pass


class LC:
    """Sparse linear combination {var index: coefficient}; index 0 is the constant one."""

    __slots__ = ("t",)

    def __init__(self, t=None):
        self.t = t if t is not None else {}

    @staticmethod
    def var(i: int) -> "LC":
        return LC({i: 1})

    def __add__(self, o):
        t = dict(self.t)
        if isinstance(o, LC):
            for k, v in o.t.items():
                t[k] = (t.get(k, 0) + v) % P
        elif isinstance(o, int):
            t[0] = (t.get(0, 0) + o) % P
        else:
            return NotImplemented
        return LC(t)

    __radd__ = __add__

    def __neg__(self):
        return LC({k: (-v) % P for k, v in self.t.items()})

    def __sub__(self, o):
        if isinstance(o, (LC, int)):
            return self + (-o)
        return NotImplemented

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, c):
        if not isinstance(c, int):
            raise TypeError("LC can only be scaled by a constant; use Builder.mul")
        c %= P
        if c == 0:
            return LC()
        return LC({k: v * c % P for k, v in self.t.items()})

    __rmul__ = __mul__

    def __mod__(self, _):
        return self

    def row(self):
        return tuple((k, v) for k, v in self.t.items() if v)

    def __repr__(self):
        return f"LC({self.t})"


class _Placeholder:
    """Stand-in value used in count mode; absorbs every operation."""

    __slots__ = ()

    def _z(self, *_):
        return self

    __add__ = __radd__ = __sub__ = __rsub__ = __mul__ = __rmul__ = __neg__ = __mod__ = _z

    def __repr__(self):
        return "Z"


Z = _Placeholder()


def _row(x):
    if isinstance(x, LC):
        return x.row()
    x %= P
    return ((0, x),) if x else ()


@dataclass(frozen=True)
class BitBlock:
    start: int
    width: int


class Builder:
    def __init__(self, mode: str = "build", check: bool = True):
        """check=False lets a witness run record values that break constraints
        (a cheating prover's best effort), for soundness tests."""
        if mode not in ("build", "witness", "count"):
            raise ValueError(f"unknown builder mode {mode!r}")
        self.mode = mode
        self.check = check
        self.num_vars = 1
        self.values = [1] if mode == "witness" else None
        self.items = []
        self.item_tags = []
        self.tag_names = []
        self._tag_ids = {}
        self.n_constraints = 0
        self.counts = Counter()
        self.public = []
        self._path = ("glue",)
        self._tag_id = self._intern("glue")

    # ---- bookkeeping -----------------------------------------------------

    @property
    def witness(self) -> bool:
        return self.mode == "witness"

    def _intern(self, path: str) -> int:
        if path not in self._tag_ids:
            self._tag_ids[path] = len(self.tag_names)
            self.tag_names.append(path)
        return self._tag_ids[path]

    @contextmanager
    def scope(self, name: str):
        """Label constraints; a top-level scope must be one of TAGS."""
        prev = self._path, self._tag_id
        if len(self._path) == 1 and self._path[0] == "glue" and name in TAGS:
            path = (name,)
        else:
            path = self._path + (name,)
        self._path = path
        self._tag_id = self._intern("/".join(path))
        try:
            yield
        finally:
            self._path, self._tag_id = prev

    @property
    def tag(self) -> str:
        return "/".join(self._path)

    def _count(self, k: int):
        self.counts[self._tag_id] += k
        self.n_constraints += k

    def value(self, x) -> int:
        return int(x) % P

    # ---- allocation ------------------------------------------------------

    def var(self, fn=None):
        i = self.num_vars
        self.num_vars += 1
        if self.mode == "witness":
            v = (fn() if callable(fn) else fn) % P
            self.values.append(v)
            return v
        if self.mode == "build":
            return LC({i: 1})
        return Z

    def public_var(self, fn=None):
        self.public.append(self.num_vars)
        return self.var(fn)

    def vars(self, n: int, fn=None):
        """Allocate n variables; fn returns the list of their values."""
        start = self.num_vars
        self.num_vars += n
        if self.mode == "witness":
            vals = [v % P for v in (fn() if callable(fn) else fn)]
            if len(vals) != n:
                raise HintFailure(f"{self.tag}: expected {n} hint values, got {len(vals)}")
            self.values.extend(vals)
            return vals
        if self.mode == "build":
            return [LC({start + j: 1}) for j in range(n)]
        return [Z] * n

    def _bit_alloc(self, width: int, fn):
        start = self.num_vars
        self.num_vars += width
        self._count(width)
        if self.mode == "witness":
            v = fn() if callable(fn) else fn
            if not 0 <= v < (1 << width):
                raise HintFailure(f"{self.tag}: value {v} is outside [0, 2^{width})")
            self.values.extend((v >> j) & 1 for j in range(width))
            return start, v
        if self.mode == "build":
            self.items.append(BitBlock(start, width))
            self.item_tags.append(self._tag_id)
        return start, None

    def packed(self, width: int, fn=None):
        """Allocate width boolean variables and return their binary packing."""
        start, v = self._bit_alloc(width, fn)
        if self.mode == "witness":
            return v
        if self.mode == "build":
            return LC({start + j: 1 << j for j in range(width)})
        return Z

    def bits(self, width: int, fn=None):
        """Like packed, but also return the individual bits (least significant first)."""
        start, v = self._bit_alloc(width, fn)
        if self.mode == "witness":
            return [(v >> j) & 1 for j in range(width)], v
        if self.mode == "build":
            return [LC({start + j: 1}) for j in range(width)], LC({start + j: 1 << j for j in range(width)})
        return [Z] * width, Z

    # ---- constraints -----------------------------------------------------

    def enforce(self, a, b, c):
        """Add the constraint a * b = c."""
        self._count(1)
        if self.mode == "witness":
            if self.check and (a * b - c) % P:
                raise HintFailure(f"{self.tag}: constraint {self.n_constraints - 1} fails during witness generation")
        elif self.mode == "build":
            self.items.append((_row(a), _row(b), _row(c)))
            self.item_tags.append(self._tag_id)

    def lsum(self, items):
        """Sum of linear combinations in one pass (repeated + copies the dict each time)."""
        if self.mode == "witness":
            return sum(items, 0) % P
        if self.mode == "count":
            for _ in items:
                pass
            return Z
        t = {}
        for x in items:
            if isinstance(x, LC):
                for k, v in x.t.items():
                    t[k] = t.get(k, 0) + v
            else:
                t[0] = t.get(0, 0) + x
        return LC({k: v % P for k, v in t.items()})

    def eq(self, a, b):
        self.enforce(a - b, 1, 0)

    def mul(self, a, b):
        if self.mode == "witness":
            c = a * b % P
            self.values.append(c)
            self.num_vars += 1
            self._count(1)
            return c
        c = self.var()
        self.enforce(a, b, c)
        return c

    # ---- result ----------------------------------------------------------

    def finish(self, meta=None) -> "ConstraintSystem":
        if self.mode != "build":
            raise RuntimeError("only a build-mode builder yields a constraint system")
        return ConstraintSystem(
            self.num_vars,
            tuple(self.public),
            self.items,
            self.item_tags,
            tuple(self.tag_names),
            self.n_constraints,
            meta or {},
        )

    def tag_counts(self) -> dict:
        return {self.tag_names[i]: c for i, c in self.counts.items()}


@dataclass
class Witness:
    assignment: list

    def __post_init__(self):
        if not self.assignment or self.assignment[0] != 1:
            raise ValueError("assignment[0] must be the constant one")

    def __len__(self):
        return len(self.assignment)


def top_tag(path: str) -> str:
    return path.split("/", 1)[0]


class ConstraintSystem:
    def __init__(self, num_vars, public_inputs, items, item_tags, tag_names, n_constraints, meta=None):
        self.num_vars = num_vars
        self.public_inputs = tuple(public_inputs)
        self.items = items
        self.item_tags = item_tags
        self.tag_names = tuple(tag_names)
        self.n_constraints = n_constraints
        self.meta = meta or {}
        self._compiled = None
        if len(set(self.public_inputs)) != len(self.public_inputs):
            raise ShapeError("public input indexes must be distinct")

    def __len__(self):
        return self.n_constraints

    @classmethod
    def from_rows(cls, num_vars, rows, public_inputs=(), tag="glue"):
        """Small systems from explicit ({idx: coeff}, {..}, {..}) rows."""
        items = [tuple(tuple((k, v % P) for k, v in d.items() if v % P) for d in r) for r in rows]
        return cls(num_vars, public_inputs, items, [0] * len(items), (tag,), len(items))

    def constraints(self):
        """Iterate over (A, B, C, tag) with boolean blocks expanded."""
        for it, tid in zip(self.items, self.item_tags):
            tag = self.tag_names[tid]
            if isinstance(it, BitBlock):
                for j in range(it.width):
                    i = it.start + j
                    yield ((i, 1),), ((i, 1), (0, P - 1)), (), tag
            else:
                yield it[0], it[1], it[2], tag

    def tag_counts(self, depth: int = 1) -> Counter:
        out = Counter()
        for it, tid in zip(self.items, self.item_tags):
            name = "/".join(self.tag_names[tid].split("/")[:depth])
            out[name] += it.width if isinstance(it, BitBlock) else 1
        return out

    def _compile(self):
        """Flatten the system into CSR-style arrays for vectorized checking.

        A run of terms covering a whole bit block with coefficients c * 2^j is
        replaced by one term on a derived slot holding the block's packed
        value, which the checker computes once per block.  Range checks make
        up most of the terms, so this shrinks the work several times over.
        """
        if self._compiled is not None:
            return self._compiled
        gen_pos, bit_idx, bit_pos = [], [], []
        blocks = []  # (start, width) per derived slot
        block_at = {}  # first variable of a block -> slot number
        mats = {k: ([], [], [0]) for k in "ABC"}
        pos = 0
        for it in self.items:
            if isinstance(it, BitBlock):
                bit_idx.extend(range(it.start, it.start + it.width))
                bit_pos.extend(range(pos, pos + it.width))
                pos += it.width
                if it.width > 1:
                    block_at[it.start] = len(blocks)
                    blocks.append((it.start, it.width))
                continue
            gen_pos.append(pos)
            pos += 1
            for key, lc in zip("ABC", it):
                idx, coef, ptr = mats[key]
                if not lc:
                    lc = ((0, 0),)
                for i, _ in lc:
                    if i >= self.num_vars:
                        raise ShapeError(f"constraint references variable {i} >= {self.num_vars}")
                if len(lc) > 2 and block_at:
                    lc = self._fold_blocks(lc, block_at, blocks)
                for i, c in lc:
                    idx.append(i)
                    coef.append(c)
                ptr.append(len(idx))
        comp = {"gen_pos": np.array(gen_pos, dtype=np.int64), "blocks": blocks}
        for key, (idx, coef, ptr) in mats.items():
            comp[key] = (np.array(idx, dtype=np.int64), np.array(coef, dtype=object), np.array(ptr[:-1], dtype=np.int64))
        comp["bit_idx"] = np.array(bit_idx, dtype=np.int64)
        comp["bit_pos"] = np.array(bit_pos, dtype=np.int64)
        self._compiled = comp
        return comp

    def _fold_blocks(self, lc, block_at, blocks):
        coef = dict(lc)
        out = []
        used = set()
        for i, c in lc:
            slot = block_at.get(i)
            if slot is None or i in used:
                continue
            start, width = blocks[slot]
            if all(coef.get(start + j) == c * (1 << j) % P for j in range(1, width)):
                used.update(range(start, start + width))
                out.append((self.num_vars + slot, c))
        if not used:
            return lc
        return tuple(out) + tuple((i, c) for i, c in lc if i not in used)

    def tag_at(self, index: int) -> str:
        pos = 0
        for it, tid in zip(self.items, self.item_tags):
            k = it.width if isinstance(it, BitBlock) else 1
            if index < pos + k:
                return self.tag_names[tid]
            pos += k
        raise IndexError(index)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(repr(sorted(self.meta.items())).encode())
        h.update(struct.pack(">QQQ", self.num_vars, len(self.public_inputs), self.n_constraints))
        return h.hexdigest()


@dataclass(frozen=True)
class SatReport:
    ok: bool
    index: int = -1
    tag: str = ""

    def __bool__(self):
        return self.ok


def _public_values(public):
    if public is None:
        return None
    if hasattr(public, "public_values"):
        return [int(v) % P for v in public.public_values()]
    return [int(v) % P for v in public]


def _packed_values(values, blocks):
    out = []
    for start, width in blocks:
        bits = values[start : start + width]
        if all(v == 0 or v == 1 for v in bits):
            out.append(int("".join("1" if v else "0" for v in reversed(bits)), 2) % P)
        else:
            out.append(sum(v << j for j, v in enumerate(bits)) % P)
    return out


def is_satisfied(cs: ConstraintSystem, w, public=None) -> SatReport:
    """Check every constraint with the public inputs bound to the statement's values."""
    values = w.assignment if isinstance(w, Witness) else w
    if len(values) != cs.num_vars:
        raise ShapeError(f"witness has {len(values)} values, system has {cs.num_vars} variables")
    if cs.n_constraints == 0:
        return SatReport(True)
    values = list(values)
    pub = _public_values(public)
    if pub is not None:
        if len(pub) != len(cs.public_inputs):
            raise ShapeError("statement does not match the public input count")
        for i, v in zip(cs.public_inputs, pub):
            values[i] = v
    comp = cs._compile()
    first = None
    if len(comp["bit_idx"]):
        b = np.array([values[i] for i in comp["bit_idx"].tolist()], dtype=object)
        bad = np.nonzero(((b != 0) & (b != 1)).astype(bool))[0]
        if len(bad):
            first = int(comp["bit_pos"][bad[0]])
    arr = np.array(values + _packed_values(values, comp["blocks"]), dtype=object)
    if len(comp["gen_pos"]):
        ev = {}
        for key in "ABC":
            idx, coef, ptr = comp[key]
            ev[key] = np.add.reduceat(coef * arr[idx], ptr)
        diff = (ev["A"] * ev["B"] - ev["C"]) % P
        bad = np.nonzero((diff != 0).astype(bool))[0]
        if len(bad):
            g = int(comp["gen_pos"][bad[0]])
            first = g if first is None else min(first, g)
    if first is None:
        return SatReport(True)
    return SatReport(False, first, cs.tag_at(first))


# ---- binary formats ----------------------------------------------------------

MAGIC = b"FR1CS"
VERSION = 1


def _fe(v: int) -> bytes:
    return (v % P).to_bytes(32, "little")


def serialize(cs: ConstraintSystem) -> bytes:
    out = [MAGIC, struct.pack("<H", VERSION), P.to_bytes(32, "little")]
    out.append(struct.pack("<QQQ", cs.num_vars, len(cs.public_inputs), cs.n_constraints))
    out.append(b"".join(struct.pack("<Q", i) for i in cs.public_inputs))
    tags = bytearray()
    for a, b, c, tag in cs.constraints():
        for lc in (a, b, c):
            out.append(struct.pack("<I", len(lc)))
            out.append(b"".join(struct.pack("<I", i) + _fe(v) for i, v in lc))
        tags.append(TAGS.index(top_tag(tag)))
    out.append(bytes(tags))
    return b"".join(out)


def deserialize(data: bytes) -> ConstraintSystem:
    if data[:5] != MAGIC:
        raise ValueError("not a constraint system file")
    (ver,) = struct.unpack_from("<H", data, 5)
    if ver != VERSION:
        raise ValueError(f"unsupported version {ver}")
    off = 7
    if int.from_bytes(data[off : off + 32], "little") != P:
        raise ValueError("field modulus mismatch")
    off += 32
    nv, npub, nc = struct.unpack_from("<QQQ", data, off)
    off += 24
    pub = struct.unpack_from(f"<{npub}Q", data, off)
    off += 8 * npub
    items = []
    for _ in range(nc):
        row = []
        for _ in range(3):
            (cnt,) = struct.unpack_from("<I", data, off)
            off += 4
            lc = []
            for _ in range(cnt):
                (i,) = struct.unpack_from("<I", data, off)
                lc.append((i, int.from_bytes(data[off + 4 : off + 36], "little")))
                off += 36
            row.append(tuple(lc))
        items.append(tuple(row))
    tags = data[off : off + nc]
    if len(tags) != nc:
        raise ValueError("truncated constraint system file")
    return ConstraintSystem(nv, pub, items, list(tags), TAGS, nc)


def serialize_witness(w) -> bytes:
    values = w.assignment if isinstance(w, Witness) else w
    return struct.pack("<Q", len(values)) + b"".join(_fe(v) for v in values)


def deserialize_witness(data: bytes) -> Witness:
    if len(data) < 8:
        raise ValueError("truncated witness file")
    (n,) = struct.unpack_from("<Q", data, 0)
    body = data[8:]
    if len(body) != 32 * n:
        raise ValueError("truncated witness file")
    return Witness([int.from_bytes(body[32 * i : 32 * i + 32], "little") for i in range(n)])
