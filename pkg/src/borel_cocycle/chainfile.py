"""JSON chain files.

    {"degree": 3,
     "terms": [{"coeff": 1, "tuple": [matrix, ...]}, ...],
     "labels": ["c1", ...]}                      (labels optional)

A matrix is a list of rows and each entry is a [re, im] pair.  Floats are
written with ``repr`` precision, so dump followed by load is exact.
"""

import json

import numpy as np

from .chains import GroupChain
from .errors import ParseError


def matrix_to_json(X):
    X = np.asarray(X, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in X]


def matrix_from_json(obj):
    if not isinstance(obj, list) or not obj:
        raise ParseError("a matrix must be a non-empty list of rows")
    n = len(obj)
    out = np.empty((n, n), dtype=complex)
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError("a matrix must be square")
        for j, entry in enumerate(row):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            ):
                raise ParseError(f"entry ({i}, {j}) must be a [re, im] pair of numbers")
            out[i, j] = complex(entry[0], entry[1])
    if not np.all(np.isfinite(out)):
        raise ParseError("matrix entries must be finite")
    return out


def chain_to_dict(chain):
    return {
        "degree": chain.n,
        "terms": [
            {"coeff": int(c), "tuple": [matrix_to_json(X) for X in tup]} for c, tup in chain.terms
        ],
        "labels": list(chain.labels),
    }


def chain_from_dict(doc):
    if not isinstance(doc, dict):
        raise ParseError("chain document must be a JSON object")
    degree = doc.get("degree")
    if not isinstance(degree, int) or isinstance(degree, bool) or degree < 0:
        raise ParseError("'degree' must be a nonnegative integer")
    terms = doc.get("terms")
    if not isinstance(terms, list):
        raise ParseError("'terms' must be a list")
    parsed = []
    for k, term in enumerate(terms):
        if not isinstance(term, dict) or "coeff" not in term or "tuple" not in term:
            raise ParseError(f"term {k} needs 'coeff' and 'tuple'")
        coeff = term["coeff"]
        if not isinstance(coeff, int) or isinstance(coeff, bool):
            raise ParseError(f"term {k}: 'coeff' must be an integer")
        tup = term["tuple"]
        if not isinstance(tup, list):
            raise ParseError(f"term {k}: 'tuple' must be a list of matrices")
        parsed.append((coeff, tuple(matrix_from_json(X) for X in tup)))
    labels = doc.get("labels")
    try:
        return GroupChain(degree, parsed, labels)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def dumps(chain, **kwargs):
    return json.dumps(chain_to_dict(chain), **kwargs)


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return chain_from_dict(doc)


def load_chain(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return loads(text)


def dump_chain(chain, path):
    with open(path, "w") as fh:
        fh.write(dumps(chain, indent=1))
        fh.write("\n")
