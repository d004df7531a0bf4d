"""Series evaluation of the cocycle on one 3-simplex.

For A(s1, s2) = U0 + s1 U1 + s2 U2 with max ||U_i|| < 1/2 the value is

    phi = SERIES_PREFACTOR * sum_{k>=1} (-1)^k/(k+1)
          * sum_{tau in {0,1,2}^k} f(tau) c(tau) Tr(U1 U_tau1 ... U_tauk)

where, for a tuple tau of length k,

    n1 = #{j: tau_j = 1},  n2 = #{j: tau_j = 2} - 1   (tuples with no 2 drop out)
    f  = n1! n2! / (n1 + n2 + 2)!                     (a monomial integral over the triangle)
    c  = sum_{j: tau_j = 2} (k - 2j + 1)              (signed)

The constant, the 1/(k+1) weight and the signed c were fixed by comparing
with the direct quadrature in ``oracle``.  For hermitian U the terms for tau
and reversed tau are complex conjugates up to the sign of c, so their real
parts cancel in pairs and the value is purely imaginary.

Truncation after K levels is certified by the majorant

    |a_k| <= TRACE_SCALE(N) * (k/2) (2m)^(k+1),   m = max ||U_i||,

whose tail beyond K is ``tail_bound(m, K)`` times TRACE_SCALE(N) = 3N/4.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import linalg
from .errors import NotConvergent
from .simplex import UTriple

SERIES_PREFACTOR = -3.0
DEFAULT_TOL = 1e-10
DEFAULT_KMAX = 14
MONOMIAL_GUARD = 40
METHODS = ("blocked", "dfs", "grouped")
# Largest number of (prefix, suffix) trace pairs formed at once.
_BLOCK_ENTRIES = 1 << 20


def monomial_integral(p, q):
    """Integral of s1^p s2^q over the triangle s1, s2 >= 0, s1 + s2 <= 1.

    Equals p! q! / (p + q + 2)!, computed as a product of ratios.
    """
    if p < 0 or q < 0:
        raise ValueError("exponents must be nonnegative")
    if p + q > MONOMIAL_GUARD:
        raise OverflowError(f"p + q = {p + q} exceeds the guard {MONOMIAL_GUARD}")
    lo, hi = min(p, q), max(p, q)
    # lo! hi! / (lo + hi + 2)! = lo! / ((hi+1)(hi+2)...(hi+lo+2))
    r = 1.0 / ((hi + 1) * (hi + 2))
    for j in range(1, lo + 1):
        r *= j / (hi + 2 + j)
    return r


def level_weight(k):
    """SERIES_PREFACTOR * (-1)^k / (k + 1)."""
    return SERIES_PREFACTOR * (-1.0 if k % 2 else 1.0) / (k + 1)


def trace_scale(dim):
    """Factor turning the scalar majorant into a bound for dim x dim traces."""
    return 0.75 * dim


def level_bound(m, k):
    """Scalar majorant (k/2)(2m)^(k+1) of the level-k term."""
    return 0.5 * k * (2.0 * m) ** (k + 1)


def tail_bound(m, k):
    """E_k = 2m^2/(1-2m)^2 - sum_{j<=k} (j/2)(2m)^(j+1), the majorant tail.

    Evaluated through the closed form (1/2) r^(k+2) ((k+1) - k r)/(1-r)^2,
    r = 2m, which avoids cancellation for large k.
    """
    if not 0.0 <= m < 0.5:
        raise NotConvergent(f"tail bound needs 0 <= m < 1/2, got m = {m}")
    if k < 0:
        raise ValueError("k must be nonnegative")
    r = 2.0 * m
    if r == 0.0:
        return 0.0
    return max(0.5 * r ** (k + 2) * ((k + 1) - k * r) / (1.0 - r) ** 2, 0.0)


def coefficient_table(k_max):
    """F[n1, t] = f(n1, t - 1) for t >= 1 and 0 for t = 0, t = number of 2s.

    Filled by the same one-step recursion used when a tuple is extended:
    appending a 1 multiplies f by n1'/(n1' + n2 + 2) and appending a later 2
    multiplies it by n2'/(n1 + n2' + 2), with primed counts after appending.
    """
    F = np.zeros((k_max + 2, k_max + 2))
    F[0, 1] = 0.5
    for n1 in range(k_max + 1):
        if n1 > 0:
            F[n1, 1] = F[n1 - 1, 1] * n1 / (n1 + 2)
        for t in range(2, k_max + 2):
            n2 = t - 1
            F[n1, t] = F[n1, t - 1] * n2 / (n1 + n2 + 2)
    return F


@dataclass(frozen=True)
class TupleState:
    """Running data for one tuple tau = (i_1..i_k) in the series enumeration.

    ``f`` holds n1! max(n2,0)! / (n1 + max(n2,0) + 2)!, so it is already the
    right coefficient when the first 2 arrives; the tuple contributes only
    once n2 >= 0.
    """

    digits: tuple
    product: np.ndarray  # U1 U_i1 ... U_ik
    f: float
    n1: int
    n2: int
    c: int

    @property
    def k(self):
        return len(self.digits)

    def extend(self, j, Uj):
        k = len(self.digits)
        twos = self.n2 + 1
        n1, n2, f = self.n1, self.n2, self.f
        if j == 1:
            n1 += 1
            f = f * n1 / (n1 + max(n2, 0) + 2)
        elif j == 2:
            n2 += 1
            if n2 > 0:
                f = f * n2 / (n1 + n2 + 2)
        c = self.c + twos - (k if j == 2 else 0)
        return TupleState(self.digits + (j,), self.product @ Uj, f, n1, n2, c)


def walk_tuples(U, k_max):
    """Depth-first walk over all tuples of length 1..k_max, lexicographic.

    Memory is O(k_max) matrices; each state is built from its parent by one
    matrix product and the coefficient recursion.
    """
    Us = _as_triple(U)
    root = TupleState((), Us[1].copy(), 0.5, 0, -1, 0)
    stack = [root.extend(j, Us[j]) for j in (2, 1, 0)] if k_max >= 1 else []
    while stack:
        state = stack.pop()
        yield state
        if state.k < k_max:
            for j in (2, 1, 0):
                stack.append(state.extend(j, Us[j]))


@dataclass(frozen=True)
class LevelSum:
    k: int
    value: complex
    pos: float
    neg: float
    pos_imag: float
    neg_imag: float


@dataclass(frozen=True)
class SeriesEvaluation:
    value: complex
    pos_sum: float
    neg_sum: float
    k_reached: int
    error_bound: float
    u_norm_max: float
    pos_imag: float = 0.0
    neg_imag: float = 0.0
    certified: bool = True
    budget_exceeded: bool = False
    levels: tuple = field(default=(), repr=False)

    @property
    def partial_sums(self):
        return np.cumsum([lv.value for lv in self.levels]) if self.levels else np.zeros(0)


def _as_triple(U):
    if isinstance(U, UTriple):
        return U.matrices
    Us = tuple(np.asarray(M, dtype=complex) for M in U)
    if len(Us) != 3:
        raise ValueError("expected three matrices U0, U1, U2")
    return Us


def _signed_parts(t):
    re = t.real
    im = t.imag
    return (
        float(np.sum(re[re > 0])),
        float(np.sum(re[re < 0])),
        float(np.sum(im[im > 0])),
        float(np.sum(im[im < 0])),
    )


def _word_blocks(Us, length, head):
    """Products head @ U_w for all words w of the given length, lexicographic,
    with per-word counts of 1s, of 2s and the sum of positions of 2s."""
    N = head.shape[0]
    P = head[None]
    n1 = np.zeros(1, dtype=np.int64)
    n2 = np.zeros(1, dtype=np.int64)
    s2 = np.zeros(1, dtype=np.int64)
    stack = np.stack(Us)
    out = [(P, n1, n2, s2)]
    digits = np.arange(3)
    for pos in range(1, length + 1):
        P = np.einsum("bij,cjk->bcik", P, stack).reshape(-1, N, N)
        n1 = (n1[:, None] + (digits == 1)[None, :]).reshape(-1)
        two = (digits == 2)[None, :]
        n2 = (n2[:, None] + two).reshape(-1)
        s2 = (s2[:, None] + pos * two).reshape(-1)
        out.append((P, n1, n2, s2))
    return out


def _levels_blocked(Us, K):
    N = Us[0].shape[0]
    if K == 0:
        return []
    F = coefficient_table(K)
    left = _word_blocks(Us, (K + 1) // 2, Us[1])
    right = _word_blocks(Us, K // 2, np.eye(N, dtype=complex))
    levels = []
    for k in range(1, K + 1):
        a = (k + 1) // 2
        b = k - a
        PL, n1a, n2a, s2a = left[a]
        PR, n1b, n2b, s2b = right[b]
        L = PL.reshape(len(PL), N * N)
        RT = PR.transpose(0, 2, 1).reshape(len(PR), N * N)
        wk = level_weight(k)
        cb = n2b * (k + 1) - 2 * (s2b + a * n2b)
        rows = max(1, _BLOCK_ENTRIES // len(PR))
        total = 0j
        parts = np.zeros(4)
        for r0 in range(0, len(L), rows):
            sl = slice(r0, r0 + rows)
            T = L[sl] @ RT.T
            c = (n2a[sl] * (k + 1) - 2 * s2a[sl])[:, None] + cb[None, :]
            f = F[n1a[sl][:, None] + n1b[None, :], n2a[sl][:, None] + n2b[None, :]]
            t = (wk * f * c) * T
            total += np.sum(t)
            parts += _signed_parts(t)
        levels.append(LevelSum(k, complex(total), *parts))
    return levels


def _levels_dfs(Us, K):
    sums = [[0j, 0.0, 0.0, 0.0, 0.0] for _ in range(K)]
    for st in walk_tuples(Us, K):
        if st.n2 < 0 or st.c == 0:
            continue
        t = level_weight(st.k) * st.f * st.c * np.trace(st.product)
        acc = sums[st.k - 1]
        acc[0] += t
        if t.real > 0:
            acc[1] += t.real
        elif t.real < 0:
            acc[2] += t.real
        if t.imag > 0:
            acc[3] += t.imag
        elif t.imag < 0:
            acc[4] += t.imag
    return [LevelSum(k + 1, complex(s[0]), *s[1:]) for k, s in enumerate(sums)]


def _levels_grouped(Us, K):
    """Aggregate tuples by the position j of a marked 2 and the counts of 1s
    and 2s on either side of it:

        a_k = sum_j (k-2j+1) sum f(p1+q1, p2+q2) Tr(U1 B^{j-1}_{p1,p2} U2 B^{k-j}_{q1,q2})

    where B^r_{p,q} is the sum of all words of length r with p ones and q twos.
    """
    N = Us[0].shape[0]
    if K == 0:
        return []
    F = coefficient_table(K)
    # B[r]: array indexed [p, q] of summed word products, shape (r+1, r+1, N, N)
    B = [np.zeros((1, 1, N, N), dtype=complex)]
    B[0][0, 0] = np.eye(N)
    for r in range(1, K):
        prev = B[-1]
        cur = np.zeros((r + 1, r + 1, N, N), dtype=complex)
        cur[: r, : r] += prev @ Us[0]
        cur[1:, : r] += prev @ Us[1]
        cur[: r, 1:] += prev @ Us[2]
        B.append(cur)
    lefts = [np.einsum("ij,pqjk,kl->pqil", Us[1], Br, Us[2]) for Br in B]
    levels = []
    for k in range(1, K + 1):
        total = 0j
        parts = np.zeros(4)
        for j in range(1, k + 1):
            Lp = lefts[j - 1]
            Rq = B[k - j]
            T = np.einsum("abij,cdji->abcd", Lp, Rq)
            pa = np.arange(Lp.shape[0])
            pb = np.arange(Rq.shape[0])
            n1 = pa[:, None, None, None] + pb[None, None, :, None]
            n2 = pa[None, :, None, None] + pb[None, None, None, :]
            f = F[n1, n2 + 1]
            t = level_weight(k) * (k - 2 * j + 1) * f * T
            total += np.sum(t)
            parts += _signed_parts(t)
        levels.append(LevelSum(k, complex(total), *parts))
    return levels


_LEVELS = {"blocked": _levels_blocked, "dfs": _levels_dfs, "grouped": _levels_grouped}


def series_levels(U, K, method="blocked"):
    """Per-level sums a_1..a_K (prefactor included)."""
    if method not in _LEVELS:
        raise ValueError(f"method must be one of {METHODS}")
    return _LEVELS[method](_as_triple(U), K)


def truncation_order(m, dim, tol, k_max):
    """Smallest K <= k_max whose certified tail is <= tol, and whether it was found."""
    scale = trace_scale(dim)
    for k in range(0, k_max + 1):
        if scale * tail_bound(m, k) <= tol:
            return k, True
    return k_max, False


def phi_series_n3(U, tol=DEFAULT_TOL, k_max=DEFAULT_KMAX, strict=True, method="blocked"):
    """Evaluate the series on one U-triple with a certified truncation bound.

    The order K is the smallest k with (3N/4) E_k <= tol, capped at k_max; a
    cap that leaves the bound above tol sets ``budget_exceeded``.  With
    ``strict=False`` a triple with max norm >= 1/2 is evaluated to k_max
    anyway and returned uncertified with an infinite error bound.
    """
    if not isinstance(U, UTriple):
        U = UTriple.from_matrices(*_as_triple(U))
    if tol <= 0 or k_max < 0:
        raise ValueError("need tol > 0 and k_max >= 0")
    m = U.max_norm
    N = U.dim
    if not np.any(U.U1) or not np.any(U.U2):
        # every contributing tuple has a U1 prefix and at least one U2
        return SeriesEvaluation(0j, 0.0, 0.0, 0, 0.0, m)
    if m < 0.5:
        K, found = truncation_order(m, N, tol, k_max)
        err = trace_scale(N) * tail_bound(m, K)
        certified = True
    elif strict:
        raise NotConvergent(f"max ||U_i|| = {m:.4g} >= 1/2, series does not converge")
    else:
        K, found, err, certified = k_max, False, float("inf"), False
    levels = series_levels(U, K, method)
    value = 0j
    pos = neg = pim = nim = 0.0
    for lv in levels:
        value += lv.value
        pos += lv.pos
        neg += lv.neg
        pim += lv.pos_imag
        nim += lv.neg_imag
    return SeriesEvaluation(
        value=value,
        pos_sum=pos,
        neg_sum=neg,
        k_reached=K,
        error_bound=err,
        u_norm_max=m,
        pos_imag=pim,
        neg_imag=nim,
        certified=certified,
        budget_exceeded=not found,
        levels=tuple(levels),
    )


def phi_n1(X0, X1):
    """Tr log(1 + A) for the 1-simplex (X0, X1), with 1 + A = X1^{-*} X0* X0 X1^{-1}.

    Equals log det(1 + A) = 2 (ln|det X0| - ln|det X1|).
    """
    return 2.0 * (linalg.log_abs_det(X0) - linalg.log_abs_det(X1))
