"""Integral chains of matrix tuples and the full evaluation pipeline.

For every term of a degree-3 chain the pipeline

1. records 0 when two entries coincide exactly (``skip_repeated``),
2. right-translates the tuple so the last entry is the identity (``translate``),
3. replaces every entry by the positive factor of its polar decomposition,
4. subdivides until each piece has max ||U_i|| <= theta,
5. sums the series over the signed pieces.

Pieces are independent jobs; they can be farmed out to worker processes
and are always reduced in a fixed order, so totals do not depend on the
worker count.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import math

import numpy as np

from . import linalg, series, simplex
from .errors import DepthExceeded, Singular


@dataclass(frozen=True)
class PhiConfig:
    theta: float = simplex.DEFAULT_THETA
    tol: float = series.DEFAULT_TOL
    k_max: int = series.DEFAULT_KMAX
    max_depth: int = simplex.DEFAULT_MAX_DEPTH
    simplex_budget: int = simplex.DEFAULT_SIMPLEX_BUDGET
    skip_repeated: bool = True
    translate: bool = True
    # knobs beyond the basic pipeline
    min_depth: int = 0
    force: bool = False
    coordinates: str = "gram"
    method: str = "blocked"
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.theta < 0.5:
            raise ValueError("theta must lie in (0, 1/2)")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.max_depth < 0 or self.min_depth < 0 or self.min_depth > self.max_depth:
            raise ValueError("need 0 <= min_depth <= max_depth")
        if self.simplex_budget < 1:
            raise ValueError("simplex_budget must be positive")
        if self.coordinates not in simplex.COORDINATES:
            raise ValueError(f"coordinates must be one of {simplex.COORDINATES}")
        if self.method not in series.METHODS:
            raise ValueError(f"method must be one of {series.METHODS}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def as_dict(self):
        return asdict(self)


@dataclass
class GroupChain:
    """Formal sum of coefficient * (X_0, ..., X_n)."""

    n: int
    terms: list
    labels: list = None

    def __post_init__(self):
        terms = []
        dim = None
        for coeff, tup in self.terms:
            if int(coeff) != coeff or coeff == 0:
                raise ValueError("coefficients must be nonzero integers")
            mats = tuple(linalg.as_cmatrix(X, "chain entry") for X in tup)
            if len(mats) != self.n + 1:
                raise ValueError(f"degree-{self.n} terms need {self.n + 1} entries")
            for X in mats:
                if dim is None:
                    dim = X.shape[0]
                elif X.shape[0] != dim:
                    raise ValueError("all matrices in a chain must share one dimension")
            terms.append((int(coeff), mats))
        self.terms = terms
        if self.labels is None:
            self.labels = [f"t{i + 1}" for i in range(len(terms))]
        elif len(self.labels) != len(terms):
            raise ValueError("one label per term")

    @property
    def dim(self):
        return self.terms[0][1][0].shape[0] if self.terms else 0

    def __len__(self):
        return len(self.terms)


@dataclass
class TermResult:
    label: str
    coefficient: int
    value: complex = 0j
    error_bound: float = 0.0
    pos_sum: float = 0.0
    neg_sum: float = 0.0
    pos_imag: float = 0.0
    neg_imag: float = 0.0
    simplex_count: int = 0
    max_depth_used: int = 0
    k_reached: int = 0
    max_u_norm: float = 0.0
    status: str = "ok"
    message: str = ""

    @property
    def ok(self):
        return self.status in ("ok", "skipped")


@dataclass
class PhiReport:
    degree: int
    per_term: list
    total_value: complex
    total_error_bound: float
    total_pos: float
    total_neg: float
    borel_value: complex
    config: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(t.ok for t in self.per_term)

    def to_dict(self):
        def cplx(z):
            return [float(z.real), float(z.imag)]

        terms = []
        for t in self.per_term:
            d = asdict(t)
            d["value"] = cplx(t.value)
            terms.append(d)
        return {
            "degree": self.degree,
            "config": dict(self.config),
            "per_term": terms,
            "total_value": cplx(self.total_value),
            "total_error_bound": self.total_error_bound,
            "total_pos": self.total_pos,
            "total_neg": self.total_neg,
            "borel_value": cplx(self.borel_value),
            "ok": self.ok,
        }


def bar_to_homogeneous(g):
    """[g1|g2|...|gk] -> (e, g1, g1 g2, ..., g1 g2 ... gk)."""
    g = [linalg.as_cmatrix(x, "group element") for x in g]
    if not g:
        raise ValueError("need at least one group element")
    N = g[0].shape[0]
    out = [np.eye(N, dtype=complex)]
    for x in g:
        out.append(out[-1] @ x)
    return tuple(out)


def borel_normalize(phi, n):
    """(-1)^(n+1) / (2^(3n+1) (pi i)^n) * phi."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return (-1) ** (n + 1) / (2 ** (3 * n + 1) * (math.pi * 1j) ** n) * phi


def has_repeated_entry(tup):
    return any(
        np.array_equal(tup[i], tup[j]) for i in range(len(tup)) for j in range(i + 1, len(tup))
    )


def right_translate(tup):
    """Multiply every entry on the right by the inverse of the last one."""
    last = tup[-1]
    linalg.check_invertible(last)
    # X last^{-1} = (last^{-T} X^T)^T
    moved = tuple(np.linalg.solve(last.T, X.T).T for X in tup[:-1])
    return moved + (np.eye(last.shape[0], dtype=complex),)


def _evaluate_leaf(job):
    vertices, grams, tol, k_max, strict, method = job
    leaf = simplex.HermitianSimplex(vertices, 1, 0, grams)
    U = simplex.u_matrices(leaf)
    ev = series.phi_series_n3(U, tol=tol, k_max=k_max, strict=strict, method=method)
    # drop the per-level detail before it crosses a process boundary
    return series.SeriesEvaluation(
        ev.value, ev.pos_sum, ev.neg_sum, ev.k_reached, ev.error_bound, ev.u_norm_max,
        ev.pos_imag, ev.neg_imag, ev.certified, ev.budget_exceeded,
    )


def _map(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    chunk = max(1, len(jobs) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=chunk))


def _prepare_term(label, coeff, tup, cfg):
    """Steps 1-4 for one degree-3 term: a TermResult shell plus its leaves."""
    res = TermResult(label, coeff)
    if cfg.skip_repeated and has_repeated_entry(tup):
        res.status = "skipped"
        res.message = "repeated entry"
        return res, []
    try:
        if cfg.translate:
            tup = right_translate(tup)
        verts = tuple(linalg.pdh_reduce(X) for X in tup)
        root = simplex.HermitianSimplex(verts)
        leaves = simplex.refine_until(
            root,
            theta=cfg.theta,
            max_depth=cfg.max_depth,
            budget=cfg.simplex_budget,
            coordinates=cfg.coordinates,
            min_depth=cfg.min_depth,
            force=cfg.force,
        )
    except DepthExceeded as exc:
        res.status = "depth_exceeded"
        res.message = str(exc)
        res.value = complex("nan")
        res.error_bound = math.inf
        res.max_u_norm = exc.worst_norm
        res.simplex_count = exc.simplex_count
        res.max_depth_used = exc.depth
        return res, []
    except Singular as exc:
        res.status = "singular"
        res.message = str(exc)
        res.value = complex("nan")
        res.error_bound = math.inf
        return res, []
    res.simplex_count = len(leaves)
    res.max_depth_used = max(leaf.depth for leaf in leaves)
    return res, leaves


def _accumulate(res, leaves, evals):
    value = 0j
    err = 0.0
    pos = neg = pim = nim = 0.0
    truncated = uncertified = False
    for leaf, ev in zip(leaves, evals):
        value += leaf.sign * ev.value
        err += ev.error_bound
        if leaf.sign > 0:
            pos += ev.pos_sum
            neg += ev.neg_sum
            pim += ev.pos_imag
            nim += ev.neg_imag
        else:
            pos -= ev.neg_sum
            neg -= ev.pos_sum
            pim -= ev.neg_imag
            nim -= ev.pos_imag
        res.k_reached = max(res.k_reached, ev.k_reached)
        res.max_u_norm = max(res.max_u_norm, ev.u_norm_max)
        truncated |= ev.budget_exceeded
        uncertified |= not ev.certified
    res.value = value
    res.error_bound = err
    res.pos_sum, res.neg_sum, res.pos_imag, res.neg_imag = pos, neg, pim, nim
    if uncertified:
        res.status = "uncertified"
        res.message = "forced evaluation on pieces with max ||U_i|| >= 1/2"
    elif truncated:
        res.status = "truncated"
        res.message = "k_max reached with certified tail above tol"


def _phi_chain_degree1(chain, cfg):
    results = []
    for label, (coeff, (X0, X1)) in zip(chain.labels, chain.terms):
        res = TermResult(label, coeff, simplex_count=1)
        if cfg.skip_repeated and np.array_equal(X0, X1):
            res.status = "skipped"
            res.message = "repeated entry"
            res.simplex_count = 0
        else:
            try:
                v = series.phi_n1(X0, X1)
            except Singular as exc:
                res.status = "singular"
                res.message = str(exc)
                res.value = complex("nan")
                res.error_bound = math.inf
            else:
                res.value = complex(v)
                res.pos_sum = max(v, 0.0)
                res.neg_sum = min(v, 0.0)
        results.append(res)
    return results


def phi_chain(chain, config=None):
    """Evaluate the cocycle on every term of a chain and assemble a report.

    Failures (depth limit, singular entries) are recorded per term; the
    remaining terms are still evaluated.
    """
    cfg = config or PhiConfig()
    if chain.n == 1:
        results = _phi_chain_degree1(chain, cfg)
        borel_n = 0
    elif chain.n == 3:
        prepared = [
            _prepare_term(label, coeff, tup, cfg)
            for label, (coeff, tup) in zip(chain.labels, chain.terms)
        ]
        jobs = []
        for _, leaves in prepared:
            for leaf in leaves:
                jobs.append((leaf.vertices, leaf.grams, cfg.tol, cfg.k_max, not cfg.force, cfg.method))
        evals = _map(_evaluate_leaf, jobs, cfg.workers)
        results = []
        pos = 0
        for res, leaves in prepared:
            if leaves:
                _accumulate(res, leaves, evals[pos : pos + len(leaves)])
            pos += len(leaves)
            results.append(res)
        borel_n = 1
    else:
        raise ValueError(f"only degree 1 and degree 3 chains are supported, got {chain.n}")

    total = 0j
    err = 0.0
    tpos = tneg = 0.0
    for r in results:
        total += r.coefficient * r.value
        err += abs(r.coefficient) * r.error_bound
        if r.coefficient > 0:
            tpos += r.coefficient * r.pos_sum
            tneg += r.coefficient * r.neg_sum
        else:
            tpos += -r.coefficient * -r.neg_sum
            tneg += -r.coefficient * -r.pos_sum
    return PhiReport(
        degree=chain.n,
        per_term=results,
        total_value=total,
        total_error_bound=err,
        total_pos=tpos,
        total_neg=tneg,
        borel_value=borel_normalize(total, borel_n),
        config=cfg.as_dict(),
    )


def build_testcase1(d, u, m, n):
    """The six-term 3-cycle in GL_2 built from g1 = u I, g2 = [[1, m], [0, 1]]
    and g3 = [[1, n sqrt(-d)], [0, 1]], with signs +, -, +, -, +, -."""
    if u == 0:
        raise ValueError("u must be nonzero")
    I = np.eye(2, dtype=complex)
    g1 = complex(u) * I
    g2 = np.array([[1, m], [0, 1]], dtype=complex)
    g3 = np.array([[1, n * 1j * math.sqrt(d)], [0, 1]], dtype=complex)
    g12, g13, g23 = g1 @ g2, g1 @ g3, g2 @ g3
    g123 = g12 @ g3
    tuples = [
        (I, g1, g12, g123),
        (I, g1, g13, g123),
        (I, g3, g13, g123),
        (I, g2, g12, g123),
        (I, g2, g23, g123),
        (I, g3, g23, g123),
    ]
    coeffs = [1, -1, 1, -1, 1, -1]
    return GroupChain(3, list(zip(coeffs, tuples)), [f"c{i}" for i in range(1, 7)])


def testcase2_generators(n, v=1.0):
    u = np.exp(2j * math.pi / n)
    a = np.diag([u, 1 / u, 1]).astype(complex)
    b = np.diag([u, 1, 1 / u]).astype(complex)
    w = np.array([[1, 0, 0], [0, 0, v], [0, -1 / v, 0]], dtype=complex)
    return a, b, w


def build_testcase2(n, v=1.0):
    """Chains z1 and z2 in GL_3 built from a, b, w with u = exp(2 pi i / n)."""
    if n < 3:
        raise ValueError("n must be at least 3")
    if v == 0:
        raise ValueError("v must be nonzero")
    a, b, w = testcase2_generators(n, v)
    e = np.eye(3, dtype=complex)
    z1_bar = [
        (1, (w, a, b)),
        (-1, (a, b, w)),
        (-1, (w, b, a)),
        (1, (b, a, w)),
        (1, (a, w, a)),
        (-1, (b, w, b)),
    ]
    z2_bar = [(1, (e, e, b)), (1, (b, e, e))]
    ar = e
    for _ in range(1, n):
        ar = ar @ a
        z2_bar += [(1, (ar, a, b)), (-1, (ar, b, a)), (1, (b, ar, a))]
    z1 = GroupChain(
        3,
        [(c, bar_to_homogeneous(g)) for c, g in z1_bar],
        [f"c{i}" for i in range(1, len(z1_bar) + 1)],
    )
    z2 = GroupChain(
        3,
        [(c, bar_to_homogeneous(g)) for c, g in z2_bar],
        [f"d{i}" for i in range(1, len(z2_bar) + 1)],
    )
    return z1, z2
