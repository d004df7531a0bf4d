import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from borel_cocycle import chainfile
from borel_cocycle.chains import GroupChain, build_testcase2
from borel_cocycle.errors import ParseError

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@st.composite
def chains_(draw):
    n = draw(st.sampled_from([1, 3]))
    dim = draw(st.integers(1, 3))
    count = draw(st.integers(0, 3))
    terms = []
    for _ in range(count):
        coeff = draw(st.integers(-5, 5).filter(bool))
        mats = []
        for _ in range(n + 1):
            re = draw(st.lists(finite, min_size=dim * dim, max_size=dim * dim))
            im = draw(st.lists(finite, min_size=dim * dim, max_size=dim * dim))
            mats.append((np.array(re) + 1j * np.array(im)).reshape(dim, dim))
        terms.append((coeff, tuple(mats)))
    return GroupChain(n, terms)


@settings(max_examples=60, deadline=None)
@given(chains_())
def test_round_trip_is_exact(chain):
    back = chainfile.loads(chainfile.dumps(chain))
    assert back.n == chain.n and back.labels == chain.labels
    assert len(back) == len(chain)
    for (c1, t1), (c2, t2) in zip(chain.terms, back.terms):
        assert c1 == c2
        for X, Y in zip(t1, t2):
            assert np.array_equal(X, Y)


def test_file_round_trip(tmp_path):
    z1, _ = build_testcase2(3)
    path = tmp_path / "z1.json"
    chainfile.dump_chain(z1, path)
    back = chainfile.load_chain(path)
    assert back.labels == z1.labels
    for (_, t1), (_, t2) in zip(z1.terms, back.terms):
        assert all(np.array_equal(X, Y) for X, Y in zip(t1, t2))


def test_labels_optional():
    doc = {"degree": 1, "terms": [{"coeff": 2, "tuple": [[[[1, 0]]], [[[2, 0.5]]]]}]}
    chain = chainfile.loads(json.dumps(doc))
    assert chain.labels == ["t1"]
    assert chain.terms[0][1][1][0, 0] == 2 + 0.5j


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        "[]",
        '{"degree": -1, "terms": []}',
        '{"degree": true, "terms": []}',
        '{"degree": 3}',
        '{"degree": 1, "terms": [{"coeff": 1}]}',
        '{"degree": 1, "terms": [{"coeff": 1.5, "tuple": []}]}',
        '{"degree": 1, "terms": [{"coeff": 1, "tuple": {}}]}',
        '{"degree": 1, "terms": [{"coeff": 1, "tuple": [[[[1, 0]]]]}]}',
        '{"degree": 1, "terms": [{"coeff": 1, "tuple": [[[[1, 0]]], [[1, 0]]]}]}',
        '{"degree": 1, "terms": [{"coeff": 1, "tuple": [[[[1, 0]]], [[[1, 0], [0, 0]]]]}]}',
        '{"degree": 1, "terms": [{"coeff": 1, "tuple": [[[[1, 0]]], [[["1", 0]]]]}]}',
        '{"degree": 1, "terms": [{"coeff": 1, "tuple": [[[[1, 0]]], [[[1e999, 0]]]]}]}',
        '{"degree": 1, "terms": [{"coeff": 0, "tuple": [[[[1, 0]]], [[[1, 0]]]]}]}',
        '{"degree": 1, "terms": [{"coeff": 1, "tuple": [[[[1, 0]]], [[[1, 0]]]]}], "labels": []}',
    ],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        chainfile.loads(text)


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        chainfile.load_chain(tmp_path / "absent.json")
