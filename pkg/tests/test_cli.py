import json
from decimal import Decimal

import numpy as np
import pytest

from fiat.cli import main
from fiat.crypto.ecies import read_key

ROLES = "s = sensitive,continuous\na = non_sensitive,continuous\nb = non_sensitive,continuous\n"


def write_case(tmp_path, N=80, copy=False, threshold=None, seed=0):
    rng = np.random.default_rng(seed)
    s = rng.normal(size=N)
    a = s if copy else s + 0.5 * rng.normal(size=N)
    b = rng.normal(size=N)
    lines = ["s,a,b"] + [f"{x:.4f},{y:.4f},{z:.4f}" for x, y, z in zip(s, a, b)]
    (tmp_path / "data.csv").write_text("\n".join(lines) + "\n")
    (tmp_path / "roles.cfg").write_text(ROLES)
    cfg = {
        "dataset": "data.csv",
        "roles": "roles.cfg",
        "threshold": threshold or {"mode": "fixed", "value": 5.0},
        "intervals": 6,
        "out": "run",
    }
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    return str(tmp_path / "cfg.json"), tmp_path / "run"


def cli(*args):
    return main([str(a) for a in args])


def run_to_audit(cfg, out, algo="pca"):
    assert cli("keygen", "--config", cfg, "--seed", 3) == 0
    assert cli("commit", "--config", cfg) == 0
    assert cli("propose", "--config", cfg, "--k", 1, "--algo", algo, "--pubkey", out / "pk.txt") == 0
    assert cli("audit", "--config", cfg, "--seed", 4) == 0


def test_happy_path(tmp_path):
    cfg, out = write_case(tmp_path)
    run_to_audit(cfg, out)
    st = json.loads((out / "statement.json").read_text())
    assert st["pass"] == "accept"
    # decode before verify: nothing recorded yet
    assert cli("decode", "--config", cfg, "--sk", out / "sk.txt") == 6
    assert cli("verify", "--config", cfg, "--statement", out / "statement.json", "--proof", out / "proof.bin") == 0
    assert cli("decode", "--config", cfg, "--sk", out / "sk.txt") == 0
    rows = (out / "Y.csv").read_text().split()
    assert len(rows) == 80
    # decimal text is exact: every value is a multiple of 2^-20
    assert all((Decimal(v) * 2**20) == int(Decimal(v) * 2**20) for v in rows)
    contract = json.loads((out / "contract.json").read_text())
    assert contract["mi_total"] == st["mi"]
    assert [json.loads(r)["method"] for r in contract["log"]] == ["GetData", "GetProposal", "VerifyAndUpdate"]


def test_commit_twice(tmp_path):
    cfg, out = write_case(tmp_path, N=20)
    assert cli("commit", "--config", cfg) == 0
    assert cli("commit", "--config", cfg) == 3


def test_edited_statement_rejected(tmp_path):
    cfg, out = write_case(tmp_path)
    run_to_audit(cfg, out)
    p = out / "statement.json"
    st = json.loads(p.read_text())
    st["mi"] -= 1
    p.write_text(json.dumps(st))
    assert cli("verify", "--config", cfg, "--statement", p, "--proof", out / "proof.bin") == 4
    st["mi"] += 1
    st["pass"] = "reject"
    p.write_text(json.dumps(st))
    assert cli("verify", "--config", cfg, "--statement", p, "--proof", out / "proof.bin") == 5


def test_entropy_fraction_rejects_copy(tmp_path):
    cfg, out = write_case(tmp_path, copy=True, threshold={"mode": "entropy_fraction", "ratio": 0.4})
    run_to_audit(cfg, out, algo="raw_data")
    st = json.loads((out / "statement.json").read_text())
    assert st["pass"] == "reject"
    assert set((out / "result.txt").read_text().split()) == {"0"}
    assert cli("verify", "--config", cfg, "--statement", out / "statement.json", "--proof", out / "proof.bin") == 0
    assert cli("decode", "--config", cfg, "--sk", out / "sk.txt") == 6


def test_keygen_files(tmp_path):
    cfg, out = write_case(tmp_path, N=10)
    out.mkdir()
    assert cli("keygen", "--out", out, "--seed", 1) == 0
    assert len(read_key(out / "pk.txt")) == 2 and len(read_key(out / "sk.txt")) == 1


def test_parse_errors(tmp_path):
    cfg, out = write_case(tmp_path, N=10)
    (tmp_path / "data.csv").write_text("s,a,b\n1,2\n")
    assert cli("commit", "--config", cfg) == 2
    (tmp_path / "roles.cfg").write_text("s = sensitive,continuous\na = sensitive,continuous\nb = sensitive,continuous\n")
    assert cli("commit", "--config", cfg) == 2


def test_bench_affine(tmp_path, capsys):
    assert cli("bench", "--out", tmp_path, "--sizes", 10, 20, 30, "--count-only") == 0
    text = (tmp_path / "bench.tsv").read_text()
    assert "# affine\tTrue" in text and "# second_differences\t0" in text


def test_mi_report(tmp_path):
    cfg, out = write_case(tmp_path, N=60)
    assert cli("mi-report", "--config", cfg, "--dims", 1, 2) == 0
    lines = (out / "mi_report.tsv").read_text().strip().split("\n")
    assert lines[0].startswith("feature\trepresentation")
    assert [l.split("\t")[1] for l in lines[1:]] == ["pca1", "pca2", "raw"]


def test_bad_dims(tmp_path):
    cfg, out = write_case(tmp_path, N=20)
    assert cli("mi-report", "--config", cfg, "--dims", 5) != 0
