import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiat.crypto import poseidon_hash
from fiat.dataset import (
    ADULT_SENSITIVE,
    EmptyDataset,
    ParseError,
    SchemaError,
    adult_role_config,
    canonical_serialize,
    commitment,
    concat,
    from_arrays,
    ingest_csv,
    serialize_raw,
    split,
)
from fiat.fieldmath import P

ONE = 1 << 20


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


ROLES = {"color": "sensitive,categorical", "w": "non_sensitive,continuous", "h": "non_sensitive,continuous"}


def test_categories_first_appearance(tmp_path):
    csv = write(tmp_path, "d.csv", "color,w,h\nred,1.5,2\nblue,2.5,3\nred,0,1\n")
    d = ingest_csv(csv, ROLES)
    assert d.sensitive_raw()[:, 0].tolist() == [0, ONE, 0]
    assert d.schema.category_maps["color"] == ("red", "blue")
    assert d.non_sensitive_raw()[0].tolist() == [int(1.5 * ONE), 2 * ONE]


def test_constant_label_gives_zero_column(tmp_path):
    csv = write(tmp_path, "d.csv", "color,w,h\ngreen,1,2\ngreen,2,3\n")
    assert ingest_csv(csv, ROLES).sensitive_raw()[:, 0].tolist() == [0, 0]


def test_role_config_file(tmp_path):
    csv = write(tmp_path, "d.csv", "color,w,h\nred,1,2\nblue,2,3\n")
    cfg = write(tmp_path, "roles.cfg", "color = sensitive,categorical\nw = non_sensitive,continuous\nh=non_sensitive,continuous\n")
    d = ingest_csv(csv, cfg)
    assert (d.n, d.m, d.N) == (1, 2, 2)


def test_ingest_deterministic(tmp_path):
    csv = write(tmp_path, "d.csv", "color,w,h\nred,1,2\nblue,2,3\nteal,4,1\n")
    assert ingest_csv(csv, ROLES) == ingest_csv(csv, ROLES)


def test_missing_rows_dropped(tmp_path):
    csv = write(tmp_path, "d.csv", "color,w,h\nred,1,2\n?,2,3\nblue,,3\nteal,4,1\n")
    d = ingest_csv(csv, ROLES)
    assert d.N == 2 and d.dropped_rows == 2


def test_ingest_errors(tmp_path):
    ragged = write(tmp_path, "a.csv", "color,w,h\nred,1\nblue,2,3\n")
    with pytest.raises(ParseError):
        ingest_csv(ragged, ROLES)
    bad_num = write(tmp_path, "b.csv", "color,w,h\nred,x,2\nblue,2,3\n")
    with pytest.raises(ParseError):
        ingest_csv(bad_num, ROLES)
    ok = write(tmp_path, "c.csv", "color,w,h\nred,1,2\nblue,2,3\n")
    with pytest.raises(SchemaError):
        ingest_csv(ok, {**ROLES, "nope": "sensitive,continuous"})
    with pytest.raises(SchemaError):
        ingest_csv(ok, {k: "sensitive,continuous" for k in ROLES})
    empty = write(tmp_path, "e.csv", "color,w,h\n?,1,2\n")
    with pytest.raises(EmptyDataset):
        ingest_csv(empty, ROLES)
    with pytest.raises(ParseError):
        ingest_csv(write(tmp_path, "f.csv", ""), ROLES)


def test_adult_roles():
    header = ["age", "workclass", "fnlwgt", "education", "education-num", "marital-status", "occupation",
              "relationship", "race", "sex", "capital-gain", "capital-loss", "hours-per-week"]
    cfg = adult_role_config(header)
    sens = [h for h, (role, _) in cfg.items() if role == "sensitive"]
    assert sens == list(ADULT_SENSITIVE)
    assert len(header) - len(sens) == 9


def test_split_roles_and_roundtrip():
    rng = np.random.default_rng(0)
    d = from_arrays(rng.normal(size=(5, 1)), rng.normal(size=(5, 2)))
    xs, xns = split(d)
    assert len(xs[0]) == 1 and len(xns[0]) == 2
    back = concat(d, [[v.signed for v in r] for r in xs], [[v.signed for v in r] for r in xns])
    assert np.array_equal(back, d.raw)


def test_serialize_layout():
    # one-row layout from the header convention; Dataset itself needs two rows
    vals = serialize_raw(1, 1, 2, [[2 * ONE]], [[3 * ONE, 5 * ONE]])
    assert vals == [1, 1, 2, 2 * ONE, 3 * ONE, 5 * ONE]
    assert serialize_raw(1, 1, 1, [[-ONE]], [[0]])[3] == P - ONE


def test_single_row_dataset_rejected():
    with pytest.raises(EmptyDataset):
        from_arrays([[2.0]], [[3.0, 5.0]])


def test_row_permutation_changes_serialization():
    d = from_arrays([[1.0], [2.0]], [[3.0], [4.0]])
    e = from_arrays([[2.0], [1.0]], [[4.0], [3.0]])
    assert canonical_serialize(d) != canonical_serialize(e)
    assert commitment(d) != commitment(e)


def test_commitment_is_poseidon_of_serialization():
    d = from_arrays([[1.0], [2.0]], [[3.0, 0.5], [4.0, -1.0]])
    assert commitment(d) == poseidon_hash([int(v) for v in canonical_serialize(d)])


def test_dataset_immutable():
    d = from_arrays([[1.0], [2.0]], [[3.0], [4.0]])
    with pytest.raises(ValueError):
        d.raw[0, 0] = 5


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(0, 2), st.integers(-(1 << 30), 1 << 30).filter(bool))
def test_serialization_injective_on_cell_change(i, j, delta):
    rng = np.random.default_rng(1)
    d = from_arrays(rng.normal(size=(4, 1)), rng.normal(size=(4, 2)))
    raw = d.raw.copy()
    raw[i, j] += delta
    assert canonical_serialize(d.with_raw(raw)) != canonical_serialize(d)
