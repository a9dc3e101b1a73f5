import random
import threading
from dataclasses import replace

import numpy as np
import pytest

from fiat.crypto import Ciphertext
from fiat.crypto import babyjubjub as bjj
from fiat.dataset import commitment, from_arrays
from fiat.estimator import BinningSpec
from fiat.fieldmath import FixedPoint, encode
from fiat.protocol import (
    AlreadyCommitted,
    CommitmentMismatch,
    Contract,
    ContractState,
    DigestMismatch,
    InconsistentDecision,
    InvalidProof,
    NoResult,
    NotCommitted,
    Proposal,
    Unauthorized,
    UnsupportedAlgorithm,
    ZeroResult,
    call_log,
    receiver_decode,
    redaction,
    sender_audit,
)

SPEC = (BinningSpec((0.8,), (-3.0,), 6), BinningSpec((1.5,), (-4.5,), 6))


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(21)
    N = 30
    s = rng.normal(size=(N, 1))
    xns = np.hstack([s + 0.5 * rng.normal(size=(N, 1)), rng.normal(size=(N, 1))])
    return from_arrays(s, xns)


@pytest.fixture(scope="module")
def kp():
    return bjj.KeyPair.generate(random.Random(8))


def setup(d, kp, T):
    c = Contract()
    c.get_data("owner", commitment(d), encode(T) if isinstance(T, float) else T, shape=(d.N, d.n, d.m))
    c.get_proposal("consumer", Proposal.pca(1, kp.pk))
    return c


@pytest.fixture(scope="module")
def accepted(data, kp):
    c = setup(data, kp, 5.0)
    out = sender_audit(data, c.state, 4242, spec=SPEC)
    return c, out


def test_accept_path_round_trip(data, kp, accepted):
    c, out = accepted
    assert out.passed
    c.verify_and_update("owner", out.passed, out.mi, out.y_enc, out.proof)
    assert c.mi_total == out.mi
    Y = receiver_decode(kp.sk, c.state)
    assert [[v.signed for v in row] for row in Y] == [list(map(int, row)) for row in out.Y]


def test_reject_path_records_zero(data, kp):
    c = setup(data, kp, 0.001)
    out = sender_audit(data, c.state, 4242, spec=SPEC)
    assert not out.passed and isinstance(out.y_enc, ZeroResult)
    c.verify_and_update("owner", out.passed, out.mi, out.y_enc, out.proof)
    assert c.result == ZeroResult(data.N) and c.mi_total == out.mi
    with pytest.raises(NoResult):
        receiver_decode(kp.sk, c.state)


def test_boundary_equal_threshold_accepts(data, kp, accepted):
    mi = accepted[1].mi
    c = setup(data, kp, mi)
    out = sender_audit(data, c.state, 1, spec=SPEC)
    assert out.passed and out.mi == mi
    c.verify_and_update("owner", out.passed, out.mi, out.y_enc, out.proof)


def test_access_control(data, kp):
    c = Contract()
    with pytest.raises(Unauthorized):
        c.get_data("consumer", commitment(data), encode(1.0))
    with pytest.raises(NotCommitted):
        c.get_proposal("consumer", Proposal.pca(1, kp.pk))
    c.get_data("owner", commitment(data), encode(1.0), shape=(data.N, data.n, data.m))
    with pytest.raises(AlreadyCommitted):
        c.get_data("owner", commitment(data), encode(2.0))
    assert c.state.threshold == encode(1.0)
    with pytest.raises(Unauthorized):
        c.get_proposal("owner", Proposal.pca(1, kp.pk))


def test_unsupported_proposals(data, kp):
    c = Contract()
    c.get_data("owner", commitment(data), encode(1.0), shape=(data.N, data.n, data.m))
    for f in (Proposal.pca(data.m + 1, kp.pk), Proposal.pca(0, kp.pk), Proposal.raw_data(1, kp.pk), Proposal("lda", 1, kp.pk)):
        with pytest.raises(UnsupportedAlgorithm):
            c.get_proposal("consumer", f)
    assert c.state.algo is None
    c.get_proposal("consumer", Proposal.raw_data(data.m, kp.pk))


def test_inconsistent_decisions(data, kp, accepted):
    _, out = accepted
    c = setup(data, kp, 5.0)
    too_big = FixedPoint.from_signed_raw(encode(5.0).signed + 1)
    with pytest.raises(InconsistentDecision):
        c.verify_and_update("owner", True, too_big, out.y_enc, out.proof)
    with pytest.raises(InconsistentDecision):
        c.verify_and_update("owner", False, out.mi, ZeroResult(data.N), out.proof)
    with pytest.raises(InconsistentDecision):
        c.verify_and_update("owner", True, out.mi, ZeroResult(data.N), out.proof)
    assert c.result is None


def test_invalid_proofs(data, kp, accepted):
    _, out = accepted
    c = setup(data, kp, 5.0)
    with pytest.raises(Unauthorized):
        c.verify_and_update("consumer", out.passed, out.mi, out.y_enc, out.proof)
    # consistent decision, wrong MI value
    lower = FixedPoint.from_signed_raw(out.mi.signed - 1)
    with pytest.raises(InvalidProof):
        c.verify_and_update("owner", True, lower, out.y_enc, out.proof)
    # tampered ciphertext
    body = list(out.y_enc.body)
    body[0] += 1
    with pytest.raises(InvalidProof):
        c.verify_and_update("owner", True, out.mi, Ciphertext(out.y_enc.ephemeral_pk, tuple(body)), out.proof)
    # corrupted proof bytes
    blob = bytearray(out.proof.blob)
    blob[-5] ^= 0xFF
    with pytest.raises(InvalidProof):
        c.verify_and_update("owner", True, out.mi, out.y_enc, replace(out.proof, blob=bytes(blob)))
    with pytest.raises(InvalidProof):
        c.verify_and_update("owner", True, out.mi, out.y_enc, replace(out.proof, cs_digest="0" * 64))
    assert c.result is None and c.mi_total.signed == 0


def test_wrong_secret_key(data, kp, accepted):
    c, out = accepted
    if c.result is None:
        c.verify_and_update("owner", out.passed, out.mi, out.y_enc, out.proof)
    with pytest.raises(DigestMismatch):
        receiver_decode(kp.sk + 1, c.state)


def test_commitment_mismatch(data, kp):
    c = setup(data, kp, 5.0)
    raw = data.raw.copy()
    raw[0, 0] += 1
    with pytest.raises(CommitmentMismatch):
        sender_audit(data.with_raw(raw), c.state, 1, spec=SPEC)


def test_redaction_exposes_public_values_only(accepted):
    r = redaction(accepted[1])
    assert set(r) == {"pass", "mi", "public_inputs", "y_enc_digest"}
    assert len(r["public_inputs"]) == 8


def test_call_log(data, kp):
    c = Contract()
    c.get_data("owner", commitment(data), encode(1.0))
    with pytest.raises(AlreadyCommitted):
        c.get_data("owner", commitment(data), encode(1.0))
    log = call_log(c.state)
    assert [(r["method"], r["outcome"]) for r in log] == [("GetData", "ok"), ("GetData", "AlreadyCommitted")]
    assert all(r["caller"] == "owner" and len(r["args"]) == 16 for r in log)


def test_state_round_trip(accepted):
    c, out = accepted
    back = ContractState.from_dict(c.state.to_dict())
    assert back.to_dict() == c.state.to_dict()


def test_concurrent_commits_single_winner(data):
    c = Contract()
    wins, errors = [], []

    def go():
        try:
            c.get_data("owner", commitment(data), encode(1.0))
            wins.append(1)
        except AlreadyCommitted:
            errors.append(1)

    threads = [threading.Thread(target=go) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(wins) == 1 and len(errors) == 7
