"""The audit circuit: commitment check, PCA verification, MI, threshold and encryption.

Public inputs, in order: data_hash, threshold T, pass, mi, y_enc_digest,
pk.x, pk.y and a digest of the algorithm parameters.  Everything else
(dataset, PCA hints, histogram tables, ln hints, ephemeral scalar) is private.

Challenges for the randomized checks (Freivalds, logUp table lookups) are
derived inside the circuit from a Poseidon transcript over the public inputs
and digests of the hinted values, so they are fixed only after the hints.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..crypto import babyjubjub as bjj
from ..crypto.ecies import ecdh, keystream, zero_digest
from ..crypto.poseidon import poseidon_hash as native_poseidon
from ..dataset import Dataset, serialize_raw
from ..estimator import COUNT_LN, MAX_ROWS, BinningSpec, bin_matrix, cell_ids, entropy_raw, ln_count
from ..fieldmath import DEFAULT_EXP, P, SCALE_BITS, FixedPoint
from ..pca import MAX_ITERS, FixedPCA, fit_fixed
from . import gadgets as g
from .r1cs import Builder, ConstraintSystem, HintFailure, ShapeError, Witness

ONE = 1 << SCALE_BITS
DENSE_MAX = 256
COUNT_BITS = MAX_ROWS.bit_length()  # 21: counts and remainders below N <= 2^20
# remainders of division by (N-1) 2^20; a width fixed by MAX_ROWS keeps the
# constraint count affine in N
COV_REM_BITS = SCALE_BITS + COUNT_BITS
FREIVALDS_DOMAIN = 1 << 32
LOOKUP_DOMAIN = 2 << 32


@dataclass(frozen=True)
class AuditParams:
    """Everything that fixes the circuit's structure."""

    N: int
    n: int
    m: int
    k: int
    spec_x: BinningSpec
    spec_y: BinningSpec
    algo: str = "pca"  # "pca" or "raw"
    max_iters: int = MAX_ITERS
    freivalds_reps: int = 1

    def __post_init__(self):
        if min(self.N, self.n, self.m, self.k) < 1:
            raise ShapeError("N, n, m, k must all be at least 1")
        if self.N < 2 or self.N > MAX_ROWS:
            raise ShapeError(f"N must lie in [2, {MAX_ROWS}]")
        if self.algo not in ("pca", "raw"):
            raise ShapeError(f"unknown algorithm {self.algo!r}")
        if self.algo == "raw" and self.k != self.m:
            raise ShapeError("raw representation has k = m")
        if self.k > self.m:
            raise ShapeError("k must not exceed m")
        if self.spec_x.dims != self.n or self.spec_y.dims != self.k:
            raise ShapeError("binning specs do not match the shape")
        if self.spec_x.intervals_per_dim != self.spec_y.intervals_per_dim:
            raise ShapeError("both binning specs must use the same interval count")
        if self.freivalds_reps < 1:
            raise ShapeError("at least one Freivalds repetition is required")

    @property
    def shape(self):
        return self.N, self.n, self.m, self.k

    @property
    def intervals(self) -> int:
        return self.spec_x.intervals_per_dim

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "n": self.n,
            "m": self.m,
            "k": self.k,
            "algo": self.algo,
            "max_iters": self.max_iters,
            "freivalds_reps": self.freivalds_reps,
            "spec_x": self.spec_x.to_dict(),
            "spec_y": self.spec_y.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AuditParams":
        return cls(
            int(d["N"]),
            int(d["n"]),
            int(d["m"]),
            int(d["k"]),
            BinningSpec.from_dict(d["spec_x"]),
            BinningSpec.from_dict(d["spec_y"]),
            d.get("algo", "pca"),
            int(d.get("max_iters", MAX_ITERS)),
            int(d.get("freivalds_reps", 1)),
        )

    def field_encoding(self):
        vals = [self.N, self.n, self.m, self.k, 0 if self.algo == "pca" else 1, self.max_iters, self.freivalds_reps]
        for spec in (self.spec_x, self.spec_y):
            vals.append(spec.intervals_per_dim)
            vals += list(spec.origin_raw) + list(spec.bandwidth_raw)
        return [v % P for v in vals]

    def digest(self) -> int:
        return native_poseidon(self.field_encoding())

    def key(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class AuditStatement:
    data_hash: int
    threshold_T: FixedPoint
    passed: bool
    mi: FixedPoint
    y_enc_digest: int
    pk: tuple
    algo_params: AuditParams

    def public_values(self):
        return [
            self.data_hash % P,
            self.threshold_T.raw,
            1 if self.passed else 0,
            self.mi.raw,
            self.y_enc_digest % P,
            self.pk[0] % P,
            self.pk[1] % P,
            self.algo_params.digest(),
        ]

    def to_dict(self) -> dict:
        return {
            "data_hash": str(self.data_hash),
            "threshold_T": self.threshold_T.signed,
            "pass": "accept" if self.passed else "reject",
            "mi": self.mi.signed,
            "y_enc_digest": str(self.y_enc_digest),
            "pk": [str(self.pk[0]), str(self.pk[1])],
            "algo_params": self.algo_params.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AuditStatement":
        if d["pass"] not in ("accept", "reject"):
            raise ValueError("pass must be accept or reject")
        return cls(
            int(d["data_hash"]),
            FixedPoint.from_signed_raw(int(d["threshold_T"])),
            d["pass"] == "accept",
            FixedPoint.from_signed_raw(int(d["mi"])),
            int(d["y_enc_digest"]),
            (int(d["pk"][0]), int(d["pk"][1])),
            AuditParams.from_dict(d["algo_params"]),
        )

    def replace(self, **kw) -> "AuditStatement":
        d = dict(self.__dict__)
        d.update(kw)
        return AuditStatement(**d)


# ---- native hints ------------------------------------------------------------


def table_size(dims: int, intervals: int) -> int:
    return intervals**dims


def is_dense(dims: int, intervals: int) -> bool:
    return table_size(dims, intervals) <= DENSE_MAX


def id_bits(dims: int, intervals: int) -> int:
    return (table_size(dims, intervals) + MAX_ROWS).bit_length()


@dataclass
class TableHint:
    ids: list  # slot ids (sparse) or None (dense)
    counts: list
    ln: list
    H: int
    H_rem: int


def table_hint(row_ids, dims: int, intervals: int) -> TableHint:
    N = len(row_ids)
    cnt = Counter(int(v) for v in row_ids)
    size = table_size(dims, intervals)
    if is_dense(dims, intervals):
        ids = None
        counts = [cnt.get(i, 0) for i in range(size)]
    else:
        occupied = sorted(cnt)
        ids = occupied + [size + j for j in range(N - len(occupied))]
        counts = [cnt.get(i, 0) for i in ids]
    ln = [ln_count(c) for c in counts]
    acc = N * ln_count(N) - sum(c * l for c, l in zip(counts, ln))
    H, rem = divmod(acc, N)
    assert H == entropy_raw(counts, N)
    return TableHint(ids, counts, ln, H, rem)


def mi_hints(Xs_raw, Y_raw, spec_x: BinningSpec, spec_y: BinningSpec) -> dict:
    B = spec_x.intervals_per_dim
    Xs = np.asarray(Xs_raw, dtype=np.int64).reshape(len(Xs_raw), spec_x.dims)
    Y = np.asarray(Y_raw, dtype=np.int64).reshape(len(Y_raw), spec_y.dims)
    xid = cell_ids(bin_matrix(Xs, spec_x), B)
    yid = cell_ids(bin_matrix(Y, spec_y), B)
    jid = xid + yid * table_size(spec_x.dims, B)
    return {
        "x": table_hint(xid, spec_x.dims, B),
        "y": table_hint(yid, spec_y.dims, B),
        "joint": table_hint(jid, spec_x.dims + spec_y.dims, B),
    }


@dataclass
class AuditInputs:
    """Native results that seed every private variable of the circuit."""

    Xs: np.ndarray
    Xns: np.ndarray
    Y: list
    pca: FixedPCA
    tables: dict
    data_hash: int
    T_raw: int
    mi_raw: int
    passed: bool
    pk: tuple
    eph_sk: int
    ciphertext: object
    y_enc_digest: int


def native_audit(params: AuditParams, Xs_raw, Xns_raw, pk, eph_sk: int, T_raw: int) -> AuditInputs:
    from ..crypto.ecies import Ciphertext

    Xs = np.asarray(Xs_raw, dtype=np.int64)
    Xns = np.asarray(Xns_raw, dtype=np.int64)
    N, n, m, k = params.shape
    if Xs.shape != (N, n) or Xns.shape != (N, m):
        raise ShapeError(f"dataset shape {Xs.shape}+{Xns.shape} does not match circuit shape {params.shape}")
    data_hash = native_poseidon(serialize_raw(N, n, m, Xs, Xns))
    if params.algo == "pca":
        fp = fit_fixed(Xns, k, params.max_iters)
        Y = fp.Y
    else:
        fp = None
        Y = Xns.tolist()
    tables = mi_hints(Xs, Y, params.spec_x, params.spec_y)
    mi = tables["x"].H + tables["y"].H - tables["joint"].H
    passed = mi <= T_raw
    plain = [int(v) % P for row in Y for v in row]
    pk = bjj.validate(pk)
    if passed:
        shared = ecdh(eph_sk, pk)
        epk = bjj.mul(eph_sk, bjj.BASE8)
        body = tuple((a + b) % P for a, b in zip(plain, keystream(shared, len(plain))))
        ct = Ciphertext(epk, body)
        digest = ct.digest()
    else:
        ct = None
        digest = zero_digest(len(plain))
    return AuditInputs(Xs, Xns, Y, fp, tables, data_hash, T_raw, mi, passed, pk, eph_sk, ct, digest)


# ---- circuit sections ----------------------------------------------------------


def _hint(inp, f):
    return (lambda: f(inp)) if inp is not None else None


class PCASection:
    def __init__(self, cs: Builder, prm: AuditParams, Xns, inp: AuditInputs = None):
        self.cs, self.prm = cs, prm
        N, _, m, k = prm.shape
        fp = inp.pca if inp is not None else None
        with cs.scope("pca"):
            with cs.scope("mean"):
                self.mean = [g.signed_var(cs, 64, lambda j=j: fp.mean[j]) for j in range(m)]
                for j in range(m):
                    col = cs.lsum(Xns[i][j] for i in range(N))
                    rem = cs.packed(COUNT_BITS, lambda j=j: fp.mean_rem[j])
                    g.range_check(cs, (N - 1) - rem, COUNT_BITS)
                    cs.eq(col, self.mean[j] * N + rem)
            self.Xc = [[Xns[i][j] - self.mean[j] for j in range(m)] for i in range(N)]
            with cs.scope("covariance"):
                upper = [(i, j) for i in range(m) for j in range(i, m)]
                s_vals = cs.vars(len(upper), lambda: [fp.scatter[i][j] for i, j in upper])
                self.S_upper = s_vals
                S = [[None] * m for _ in range(m)]
                Cv = [[None] * m for _ in range(m)]
                div = (N - 1) * ONE
                for (i, j), s in zip(upper, s_vals):
                    c = g.signed_var(cs, 64, lambda i=i, j=j: fp.cov[i][j])
                    rem = cs.packed(COV_REM_BITS, lambda i=i, j=j: fp.cov_rem[i][j])
                    g.range_check(cs, (div - 1) - rem, COV_REM_BITS)
                    cs.eq(s, c * div + rem)
                    S[i][j] = S[j][i] = s
                    Cv[i][j] = Cv[j][i] = c
                self.S, self.C = S, Cv
            with cs.scope("eigen"):
                self.lams = [g.signed_var(cs, 64, lambda i=i: fp.eigenvalues[i]) for i in range(k)]
                self.V = [
                    [g.signed_var(cs, 22, lambda i=i, j=j: fp.components[i][j]) for j in range(m)] for i in range(k)
                ]
                g.eigenpair_check(cs, self.C, self.lams, self.V)
            with cs.scope("projection"):
                self.Y = []
                for i in range(N):
                    row = []
                    for c in range(k):
                        acc = cs.lsum([cs.mul(self.V[c][j], self.Xc[i][j]) for j in range(m)])
                        y = g.signed_var(cs, 64, lambda i=i, c=c: fp.Y[i][c])
                        rem = cs.packed(SCALE_BITS, lambda i=i, c=c: fp.Y_rem[i][c])
                        cs.eq(acc, y * ONE + rem)
                        row.append(y)
                    self.Y.append(row)
            with cs.scope("transcript"):
                flatV = [v for row in self.V for v in row]
                self.digest = g.poseidon_hash(cs, list(self.S_upper) + self.mean + self.lams + flatV)

    def check(self, base):
        cs, m = self.cs, self.prm.m
        with cs.scope("pca"), cs.scope("freivalds"):
            for rep in range(self.prm.freivalds_reps):
                r = [g.poseidon_hash(cs, [base, FREIVALDS_DOMAIN + (rep << 16) + j]) for j in range(m)]
                XcT = [list(col) for col in zip(*self.Xc)]
                g.freivalds_check(cs, XcT, self.Xc, self.S, r)


class MISection:
    def __init__(self, cs: Builder, prm: AuditParams, Xs, Y, inp: AuditInputs = None):
        self.cs, self.prm = cs, prm
        N, n, _, k = prm.shape
        B = prm.intervals
        with cs.scope("mi"):
            with cs.scope("binning"):
                qx = [[self._bin(Xs[i][d], prm.spec_x, d) for d in range(n)] for i in range(N)]
                qy = [[self._bin(Y[i][d], prm.spec_y, d) for d in range(k)] for i in range(N)]
            xid = [cs.lsum([q * B**d for d, q in enumerate(row)]) for row in qx]
            yid = [cs.lsum([q * B**d for d, q in enumerate(row)]) for row in qy]
            jid = [a + b * B**n for a, b in zip(xid, yid)]
            self.rows = {"x": xid, "y": yid, "joint": jid}
            self.dims = {"x": n, "y": k, "joint": n + k}
            self.tables = {}
            self.H = {}
            packed_slots = []
            for name in ("x", "y", "joint"):
                th = inp.tables[name] if inp is not None else None
                with cs.scope(f"table_{name}"):
                    ids, counts = self._table(name, th)
                    self.tables[name] = (ids, counts)
                    self.H[name] = self._entropy(name, counts, th)
                if ids is None:
                    packed_slots += counts
                else:
                    packed_slots += [t * (1 << COUNT_BITS) + c for t, c in zip(ids, counts)]
            self.mi = self.H["x"] + self.H["y"] - self.H["joint"]
            with cs.scope("transcript"):
                self.digest = g.poseidon_hash(cs, packed_slots)

    def _bin(self, v, spec: BinningSpec, d: int):
        """Cell index as the number of interval thresholds at or below v."""
        return self.cs.lsum([g.geq_zero(self.cs, v - t, 64) for t in spec.boundaries_raw(d)])

    def _table(self, name, th):
        cs = self.cs
        dims, B = self.dims[name], self.prm.intervals
        N = self.prm.N
        if is_dense(dims, B):
            counts = cs.vars(table_size(dims, B), _hint(th, lambda t: t.counts))
            return None, counts
        w = id_bits(dims, B)
        ids = []
        prev = None
        for s in range(N):
            if prev is None:
                t = cs.packed(w, _hint(th, lambda t: t.ids[0]))
            else:
                d = cs.packed(w, _hint(th, lambda t, s=s: t.ids[s] - t.ids[s - 1] - 1))
                t = cs.var(_hint(th, lambda t, s=s: t.ids[s]))
                cs.eq(t, prev + 1 + d)
            ids.append(t)
            prev = t
        counts = cs.vars(N, _hint(th, lambda t: t.counts))
        return ids, counts

    def _entropy(self, name, counts, th):
        cs = self.cs
        N = self.prm.N
        with cs.scope("ln"):
            terms = []
            for s, c in enumerate(counts):
                z = g.is_zero(cs, c)
                L = cs.var(_hint(th, lambda t, s=s: t.ln[s]))
                g.exp_check(cs, (c + z) * ONE, L, COUNT_LN)
                terms.append(cs.mul(c, L))
            total = cs.lsum(terms)
        H = g.signed_var(cs, 64, _hint(th, lambda t: t.H))
        rem = cs.packed(COUNT_BITS, _hint(th, lambda t: t.H_rem))
        g.range_check(cs, (N - 1) - rem, COUNT_BITS)
        cs.eq(H * N + rem, N * ln_count(N) - total)
        return H

    def check(self, base):
        cs = self.cs
        B = self.prm.intervals
        with cs.scope("mi"), cs.scope("lookup"):
            for t_idx, name in enumerate(("x", "y", "joint")):
                r = g.poseidon_hash(cs, [base, LOOKUP_DOMAIN + t_idx])
                ids, counts = self.tables[name]
                if ids is None:
                    ids = list(range(table_size(self.dims[name], B)))
                lhs = []
                for rid in self.rows[name]:
                    inv = cs.var(lambda r=r, rid=rid: pow((r - rid) % P, -1, P))
                    cs.enforce(inv, r - rid, 1)
                    lhs.append(inv)
                rhs = []
                for t, c in zip(ids, counts):
                    q = cs.var(lambda r=r, t=t, c=c: c * pow((r - t) % P, -1, P))
                    cs.enforce(q, r - t, c)
                    rhs.append(q)
                cs.eq(cs.lsum(lhs), cs.lsum(rhs))


@dataclass
class _TableInputs:
    tables: dict


def mi_gadget(cs: Builder, Xs, Y, spec):
    """Standalone MI sub-circuit over N x n and N x k variable matrices.

    The lookup challenges are drawn from the digest of the hinted tables.
    Returns the mi variable (raw fixed point, equal to estimator.mi_raw).
    """
    spec_x, spec_y = spec
    N = len(Xs)
    prm = AuditParams(N, spec_x.dims, spec_y.dims, spec_y.dims, spec_x, spec_y, algo="raw")
    inp = None
    if cs.witness:
        signed = lambda M: [[g.sval(v) for v in row] for row in M]
        inp = _TableInputs(mi_hints(signed(Xs), signed(Y), spec_x, spec_y))
    sec = MISection(cs, prm, Xs, Y, inp)
    sec.check(sec.digest)
    return sec.mi


def exp_check_gadget(cs: Builder, x, ln_hint, params=None):
    """Constrain ln_hint to be ln(x) within one step of 2^-18 (see gadgets.exp_check)."""
    return g.exp_check(cs, x, ln_hint, params or DEFAULT_EXP)


freivalds_check_gadget = g.freivalds_check
eigenpair_check_gadget = g.eigenpair_check


def synthesize(cs: Builder, prm: AuditParams, inp: AuditInputs = None):
    N, n, m, k = prm.shape
    h = lambda f: _hint(inp, f)
    data_hash = cs.public_var(h(lambda a: a.data_hash))
    T = cs.public_var(h(lambda a: a.T_raw))
    passed = cs.public_var(h(lambda a: int(a.passed)))
    mi_pub = cs.public_var(h(lambda a: a.mi_raw))
    y_digest = cs.public_var(h(lambda a: a.y_enc_digest))
    pkx = cs.public_var(h(lambda a: a.pk[0]))
    pky = cs.public_var(h(lambda a: a.pk[1]))
    algo = cs.public_var(h(lambda a: prm.digest()))
    cs.eq(algo, prm.digest())

    with cs.scope("hash"):
        Xs = [cs.vars(n, h(lambda a, i=i: a.Xs[i].tolist())) for i in range(N)]
        Xns = [cs.vars(m, h(lambda a, i=i: a.Xns[i].tolist())) for i in range(N)]
        flat = [v for row in Xs for v in row] + [v for row in Xns for v in row]
        digest = g.poseidon_hash(cs, [N, n, m] + flat)
        cs.eq(digest, data_hash)

    if prm.algo == "pca":
        pca = PCASection(cs, prm, Xns, inp)
        Y = pca.Y
        d_pca = pca.digest
    else:
        pca = None
        Y = Xns
        d_pca = 0

    mi = MISection(cs, prm, Xs, Y, inp)
    with cs.scope("mi"):
        cs.eq(mi_pub, mi.mi)

    with cs.scope("transcript"):
        base = g.poseidon_hash(cs, [data_hash, T, passed, mi_pub, y_digest, pkx, pky, algo, d_pca, mi.digest])
    if pca is not None:
        pca.check(base)
    mi.check(base)

    with cs.scope("threshold"):
        cs.enforce(passed, passed - 1, 0)
        u = cs.mul(passed * 2 - 1, T - mi_pub)
        g.range_check(cs, u + passed - 1, 66)

    with cs.scope("enc"):
        g.assert_on_curve(cs, (pkx, pky))
        bits, _ = g.scalar_bits(cs, h(lambda a: a.eph_sk))
        epk = g.fixed_base_mul(cs, bits)
        shared = g.variable_base_mul(cs, bits, (pkx, pky))[0]
        body = []
        idx = 0
        for row in Y:
            for y in row:
                ks = g.mimc7(cs, idx, shared)
                body.append(cs.mul(passed, y + ks))
                idx += 1
        masked = [cs.mul(passed, epk[0]), cs.mul(passed, epk[1])]
        d = g.poseidon_hash(cs, masked + body)
        cs.eq(d, y_digest)


# ---- public entry points -----------------------------------------------------------


def audit_params(shape, spec, pca_params=None) -> AuditParams:
    N, n, m, k = shape
    spec_x, spec_y = spec
    pp = dict(pca_params or {})
    return AuditParams(
        N,
        n,
        m,
        k,
        spec_x,
        spec_y,
        pp.get("algo", "pca"),
        int(pp.get("max_iters", MAX_ITERS)),
        int(pp.get("freivalds_reps", 1)),
    )


def build_params(prm: AuditParams) -> ConstraintSystem:
    cs = Builder("build")
    synthesize(cs, prm)
    return cs.finish({"params": prm.key()})


@lru_cache(maxsize=8)
def _cached_build(key: str) -> ConstraintSystem:
    return build_params(AuditParams.from_dict(json.loads(key)))


def build_audit_circuit(shape, spec, pca_params=None, cache: bool = True) -> ConstraintSystem:
    prm = audit_params(shape, spec, pca_params)
    return _cached_build(prm.key()) if cache else build_params(prm)


def circuit_for(prm: AuditParams) -> ConstraintSystem:
    return _cached_build(prm.key())


def count_constraints(prm: AuditParams, depth: int = 1) -> Counter:
    """Per-tag constraint counts without materializing the system."""
    cs = Builder("count")
    synthesize(cs, prm)
    out = Counter()
    for path, c in cs.tag_counts().items():
        out["/".join(path.split("/")[:depth])] += c
    return out


def params_of(cs: ConstraintSystem) -> AuditParams:
    return AuditParams.from_dict(json.loads(cs.meta["params"]))


def witness_from_inputs(prm: AuditParams, inp: AuditInputs) -> Witness:
    b = Builder("witness")
    synthesize(b, prm, inp)
    return Witness(b.values)


def statement_from_inputs(prm: AuditParams, inp: AuditInputs) -> AuditStatement:
    return AuditStatement(
        inp.data_hash,
        FixedPoint.from_signed_raw(inp.T_raw),
        inp.passed,
        FixedPoint.from_signed_raw(inp.mi_raw),
        inp.y_enc_digest,
        inp.pk,
        prm,
    )


def generate_witness(cs: ConstraintSystem, dataset: Dataset, proposal, ephemeral_sk: int, threshold: FixedPoint):
    """Run the native pipeline and fill every circuit variable.

    proposal is (k, pk); the circuit's own parameters fix the algorithm and
    binning.  Returns (Witness, AuditStatement, AuditInputs).
    """
    prm = params_of(cs)
    k, pk = proposal
    if k != prm.k:
        raise ShapeError(f"proposal asks for k={k}, circuit was built for k={prm.k}")
    if (dataset.N, dataset.n, dataset.m) != (prm.N, prm.n, prm.m):
        raise ShapeError("dataset shape does not match the circuit")
    inp = native_audit(prm, dataset.sensitive_raw(), dataset.non_sensitive_raw(), pk, ephemeral_sk, threshold.signed)
    w = witness_from_inputs(prm, inp)
    if len(w) != cs.num_vars:
        raise HintFailure(f"witness length {len(w)} differs from the system's {cs.num_vars} variables")
    return w, statement_from_inputs(prm, inp), inp


def constraint_report(cs, depth: int = 1):
    """Rows of (tag, count, percent) plus a total row."""
    counts = cs.tag_counts(depth) if isinstance(cs, ConstraintSystem) else Counter(cs)
    total = sum(counts.values())
    rows = []
    for tag in sorted(counts, key=lambda t: (t.split("/")[0] not in ("hash", "pca", "mi", "enc", "glue"), t)):
        c = counts[tag]
        rows.append((tag, c, 100.0 * c / total if total else 0.0))
    return rows, total
