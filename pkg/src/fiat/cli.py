"""Command-line driver for the audit phases, benchmarking and MI reports.

Exit codes: 0 ok, 1 other failure, 2 parse error, 3 already committed,
4 invalid proof, 5 inconsistent decision, 6 no result.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import secrets
import sys
import time
from decimal import Decimal, localcontext
from pathlib import Path

import numpy as np
from filelock import FileLock

from . import protocol as pr
from .circuit.audit import AuditParams, count_constraints, generate_witness
from .circuit.audit import circuit_for
from .circuit.r1cs import is_satisfied
from .crypto import babyjubjub as bjj
from .crypto.ecies import read_key, write_key
from .dataset import EmptyDataset, ParseError, SchemaError, commitment, from_arrays, ingest_csv
from .estimator import DEFAULT_INTERVALS, BinningSpec, audit_mi, build_histogram, default_threshold, entropy
from .fieldmath import SCALE_BITS, FixedPoint, encode
from .pca import fit_fixed

log = logging.getLogger("fiat")

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_COMMITTED, EXIT_PROOF, EXIT_DECISION, EXIT_NORESULT = range(7)
STATE_FILE = "contract.json"


class ConfigError(ValueError):
    pass


# ---- config and state files ------------------------------------------------------


def load_config(path):
    if path is None:
        return {}, Path(".")
    p = Path(path)
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"{p}: {e}") from e
    th = cfg.get("threshold", {"mode": "entropy_fraction", "ratio": 0.4})
    if th.get("mode") not in ("fixed", "entropy_fraction"):
        raise ConfigError("threshold mode must be 'fixed' or 'entropy_fraction'")
    if th["mode"] == "fixed" and "value" not in th:
        raise ConfigError("fixed threshold needs a value")
    return cfg, p.parent


def resolve(base: Path, p):
    q = Path(p)
    return q if q.is_absolute() else base / q


def load_dataset(cfg, base):
    if "dataset" not in cfg or "roles" not in cfg:
        raise ConfigError("config must name a dataset and a role config")
    roles = cfg["roles"]
    roles = roles if isinstance(roles, dict) else resolve(base, roles)
    return ingest_csv(resolve(base, cfg["dataset"]), roles)


class StateStore:
    """Contract state in one JSON file; a lock file keeps writers apart."""

    def __init__(self, out: Path):
        self.path = out / STATE_FILE
        self.lock = FileLock(str(self.path) + ".lock")

    def load(self, owner="owner", consumer="consumer") -> pr.ContractState:
        if self.path.exists():
            return pr.ContractState.from_dict(json.loads(self.path.read_text()))
        return pr.ContractState(owner, consumer)

    def save(self, st: pr.ContractState):
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(st.to_dict(), indent=1))
        tmp.replace(self.path)


def _rng(seed):
    return random.Random(seed) if seed is not None else None


def _scalar(seed, salt: int):
    if seed is None:
        return 1 + secrets.randbelow(bjj.ORDER - 1)
    return random.Random(seed * 1000003 + salt).randrange(1, bjj.ORDER)


def fxp_text(raw: int) -> str:
    with localcontext() as ctx:
        ctx.prec = 60
        return str(Decimal(raw) / (1 << SCALE_BITS))


def _mutate(args, fn):
    store = StateStore(args.out)
    with store.lock:
        st = store.load(args.cfg.get("owner", "owner"), args.cfg.get("consumer", "consumer"))
        try:
            return fn(st)
        finally:
            store.save(st)


# ---- commands ----------------------------------------------------------------------


def cmd_keygen(args):
    kp = bjj.KeyPair.generate(_rng(args.seed))
    write_key(args.out / "sk.txt", [kp.sk])
    write_key(args.out / "pk.txt", kp.pk)
    print(f"{kp.pk[0]}\n{kp.pk[1]}")
    return EXIT_OK


def threshold_for(cfg, d) -> FixedPoint:
    th = cfg.get("threshold", {"mode": "entropy_fraction", "ratio": 0.4})
    if th["mode"] == "fixed":
        return encode(float(th["value"]))
    spec = BinningSpec.from_data(d.sensitive_raw(), int(cfg.get("intervals", DEFAULT_INTERVALS)))
    hist = build_histogram(d.sensitive_raw(), d.sensitive_raw(), spec, spec)
    return default_threshold(entropy(hist.marginal_x()), float(th.get("ratio", 0.4)))


def cmd_commit(args):
    d = load_dataset(args.cfg, args.base)
    H = commitment(d)
    T = threshold_for(args.cfg, d)

    def run(st):
        pr.contract_get_data(st, st.owner, H, T, shape=(d.N, d.n, d.m))

    _mutate(args, run)
    (args.out / "commitment.txt").write_text(f"{H}\n")
    print(H)
    log.info("committed %d rows, threshold %s", d.N, fxp_text(T.signed))
    return EXIT_OK


def cmd_propose(args):
    pk = tuple(read_key(args.pubkey))
    if len(pk) != 2:
        raise ParseError("public key file must hold two coordinates")

    def run(st):
        m = st.shape[2] if st.shape else args.k
        f = pr.Proposal.raw_data(m, pk) if args.algo == "raw_data" else pr.Proposal.pca(args.k, pk)
        pr.contract_get_proposal(st, st.consumer, f)
        return f

    f = _mutate(args, run)
    (args.out / "proposal.json").write_text(json.dumps(f.to_dict(), indent=1))
    return EXIT_OK


def cmd_audit(args):
    d = load_dataset(args.cfg, args.base)
    store = StateStore(args.out)
    st = store.load()
    out = pr.sender_audit(
        d, st, _scalar(args.seed, 1), args.backend, intervals=int(args.cfg.get("intervals", DEFAULT_INTERVALS))
    )
    doc = out.statement.to_dict()
    doc["cs_digest"] = out.proof.cs_digest
    doc["backend"] = out.proof.backend
    (args.out / "statement.json").write_text(json.dumps(doc, indent=1))
    (args.out / "proof.bin").write_bytes(out.proof.blob)
    (args.out / "result.txt").write_text(out.y_enc.to_text())
    print(f"{'accept' if out.passed else 'reject'}\t{fxp_text(out.mi.signed)}")
    return EXIT_OK


def cmd_verify(args):
    doc = json.loads(Path(args.statement).read_text())
    try:
        st_claim = pr.AuditStatement.from_dict(doc)
    except (KeyError, ValueError) as e:
        raise ParseError(f"bad statement file: {e}") from e
    result_path = Path(args.result) if args.result else Path(args.statement).with_name("result.txt")
    y_enc = pr.result_from_text(result_path.read_text())
    proof = pr.AuditProof(st_claim.algo_params, doc.get("cs_digest", ""), Path(args.proof).read_bytes(), doc.get("backend", args.backend))

    def run(st):
        if y_enc.digest() != st_claim.y_enc_digest:
            raise pr.InvalidProof("result file does not match the statement digest")
        if st.algo is not None:
            expected = pr.expected_statement(st, st_claim.passed, st_claim.mi, y_enc, st_claim.algo_params)
            if expected.public_values() != st_claim.public_values():
                raise pr.InvalidProof("statement disagrees with the contract's records")
        pr.contract_verify_and_update(st, st.owner, st_claim.passed, st_claim.mi, y_enc, proof)

    _mutate(args, run)
    (args.out / "verdict.txt").write_text("valid\n")
    print("valid")
    return EXIT_OK


def cmd_decode(args):
    sk = read_key(args.sk)[0]
    st = StateStore(args.out).load()
    Y = pr.receiver_decode(sk, st)
    lines = [",".join(fxp_text(v.signed) for v in row) for row in Y]
    (args.out / "Y.csv").write_text("\n".join(lines) + "\n")
    print(f"decoded {len(Y)}x{len(Y[0]) if Y else 0}")
    return EXIT_OK


def _synthetic(N, n, m, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(N, max(n, 1)))
    X_s = z[:, :n]
    X_ns = z[:, :1] @ np.ones((1, m)) + rng.normal(size=(N, m))
    return from_arrays(X_s, X_ns)


def cmd_bench(args):
    sizes = args.sizes
    if sizes != sorted(sizes):
        raise ConfigError("sizes must be ascending")
    n, m, k = (int(v) for v in args.shape.split(","))
    seed = 0 if args.seed is None else args.seed
    kp = bjj.KeyPair.generate(random.Random(seed))
    head = ["N", "total", "hash", "pca", "mi", "enc", "glue", "build_ms", "witness_ms", "check_ms"]
    rows = []
    for N in sizes:
        d = _synthetic(N, n, m, seed)
        spec = (BinningSpec.from_data(d.sensitive_raw()), BinningSpec((1.0,) * k, (0.0,) * k))
        prm = AuditParams(N, n, m, k, spec[0], spec[1])
        counts = count_constraints(prm)
        total = sum(counts.values())
        build = wit = check = float("nan")
        if not args.count_only:
            t = time.perf_counter()
            cs = circuit_for(prm)
            build = (time.perf_counter() - t) * 1e3
            t = time.perf_counter()
            w, stmt, _ = generate_witness(cs, d, (k, kp.pk), _scalar(seed, N), encode(1.0))
            wit = (time.perf_counter() - t) * 1e3
            t = time.perf_counter()
            ok = is_satisfied(cs, w, stmt)
            check = (time.perf_counter() - t) * 1e3
            if not ok:
                raise RuntimeError(f"benchmark witness fails at N={N}: {ok}")
            assert cs.n_constraints == total
        rows.append([N, total] + [counts.get(t, 0) for t in ("hash", "pca", "mi", "enc", "glue")] + [build, wit, check])
    text = "\t".join(head) + "\n"
    for r in rows:
        text += "\t".join(f"{v:.0f}" if isinstance(v, float) else str(v) for v in r) + "\n"
    totals = [r[1] for r in rows]
    second = [totals[i + 1] - 2 * totals[i] + totals[i - 1] for i in range(1, len(totals) - 1)]
    gaps = [sizes[i + 1] - sizes[i] for i in range(len(sizes) - 1)]
    per_row = (totals[-1] - totals[0]) / (sizes[-1] - sizes[0]) if len(sizes) > 1 else float("nan")
    uniform = len(set(gaps)) <= 1
    affine = all(
        (totals[i + 1] - totals[i]) * (sizes[1] - sizes[0]) == (totals[1] - totals[0]) * (sizes[i + 1] - sizes[i])
        for i in range(len(sizes) - 1)
    )
    share = min((r[4] + r[5]) / r[1] for r in rows)
    text += f"# per_row\t{per_row:.1f}\n# affine\t{affine}\n"
    if uniform:
        text += f"# second_differences\t{','.join(map(str, second))}\n"
    text += f"# min_enc_mi_share\t{share:.4f}\n"
    (args.out / "bench.tsv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK if affine else EXIT_FAIL


def mi_report(d, dims, intervals=DEFAULT_INTERVALS, fraction=0.4):
    """Rows (feature, representation, entropy, mi, ratio, below) for every sensitive column."""
    Xs = d.sensitive_raw()
    Xns = d.non_sensitive_raw()
    reps = []
    for k in dims:
        reps.append((f"pca{k}", np.array(fit_fixed(Xns, k).Y, dtype=np.int64)))
    reps.append(("raw", Xns))
    rows = []
    for j, name in enumerate(d.schema.sensitive_names):
        col = Xs[:, j : j + 1]
        sx = BinningSpec.from_data(col, intervals)
        for label, Y in reps:
            sy = BinningSpec.from_data(Y, intervals)
            r = audit_mi(col, Y, (sx, sy))
            ratio = r.ratio.signed / (1 << SCALE_BITS)
            rows.append((name, label, r.entropy, r.mi, ratio, ratio < fraction))
    return rows


def cmd_mi_report(args):
    d = load_dataset(args.cfg, args.base)
    dims = args.dims or list(range(1, d.m + 1))
    if any(not 1 <= k <= d.m for k in dims):
        raise ConfigError(f"dims must lie in 1..{d.m}")
    th = args.cfg.get("threshold", {})
    fraction = float(th.get("ratio", 0.4)) if th.get("mode", "entropy_fraction") == "entropy_fraction" else 0.4
    rows = mi_report(d, dims, int(args.cfg.get("intervals", DEFAULT_INTERVALS)), fraction)
    text = "feature\trepresentation\tentropy\tmi\tratio\tbelow_threshold\n"
    for name, label, h, mi, ratio, below in rows:
        text += f"{name}\t{label}\t{h:.6f}\t{mi:.6f}\t{ratio:.6f}\t{int(below)}\n"
    (args.out / "mi_report.tsv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


# ---- entry point ---------------------------------------------------------------------


def _global_flags(p, suppress):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="JSON audit config")
    p.add_argument("--out", default=d, help="output directory (default: current)")
    p.add_argument("--backend", default=d, help="proof backend id (default: direct)")
    p.add_argument("--seed", type=int, default=d, help="fixes all randomness")


def build_parser():
    ap = argparse.ArgumentParser(prog="fiat", description="Fine-grained information audit pipeline")
    _global_flags(ap, False)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, True)
        p.set_defaults(func=fn)
        return p

    add("keygen", cmd_keygen, "generate a receiver key pair")
    add("commit", cmd_commit, "commit the dataset hash and threshold")
    p = add("propose", cmd_propose, "propose a representation and public key")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--algo", choices=sorted(pr.ALGORITHMS), default="pca")
    p.add_argument("--pubkey", required=True)
    add("audit", cmd_audit, "run the audit and produce statement, proof and result")
    p = add("verify", cmd_verify, "verify a proof and update the contract")
    p.add_argument("--statement", required=True)
    p.add_argument("--proof", required=True)
    p.add_argument("--result", default=None)
    p = add("decode", cmd_decode, "decrypt the accepted result")
    p.add_argument("--sk", required=True)
    p = add("bench", cmd_bench, "constraint and timing table over dataset sizes")
    p.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 300])
    p.add_argument("--shape", default="1,2,1", help="n,m,k")
    p.add_argument("--count-only", action="store_true", help="skip build, witness and check timings")
    p = add("mi-report", cmd_mi_report, "per-feature leakage table")
    p.add_argument("--dims", type=int, nargs="*")
    return ap


ERRORS = [
    ((ParseError, SchemaError, EmptyDataset), EXIT_PARSE),
    (pr.AlreadyCommitted, EXIT_COMMITTED),
    (pr.InvalidProof, EXIT_PROOF),
    (pr.InconsistentDecision, EXIT_DECISION),
    (pr.NoResult, EXIT_NORESULT),
]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.cfg, args.base = load_config(args.config)
        if args.out is not None:
            args.out = Path(args.out)
        elif "out" in args.cfg:
            args.out = resolve(args.base, args.cfg["out"])
        else:
            args.out = Path(".")
        args.out.mkdir(parents=True, exist_ok=True)
        if args.backend is None:
            args.backend = args.cfg.get("backend", "direct")
        return args.func(args)
    except Exception as e:
        for types, code in ERRORS:
            if isinstance(e, types):
                print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
                return code
        if args.verbose:
            raise
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
