"""Block linear algebra over the finite-generator algebra.

A graded square matrix of shape (m|n) is stored as one (m+n) x (m+n) array of
supernumbers.  Rows/columns 0..m-1 carry even grading, rows/columns m..m+n-1
odd grading.  For an *even* matrix

    M = [[A, C],
         [D, B]]

the diagonal blocks A (m x m) and B (n x n) have even entries and the
off-diagonal blocks C (m x n), D (n x m) have odd entries.  The supertrace and
the super-determinant

    str M  = tr A - tr B            (even M)
    sdet M = det(A - C B^{-1} D) * det(B)^{-1}
           = det(A) * det(B - D A^{-1} C)^{-1}

are the multiplicative/additive invariants: sdet(MN) = sdet(M) sdet(N) and
sdet respects the flow identity d/dt log sdet X(t) = str M(t) along
dX/dt = M(t) X.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, List, Sequence, Tuple

import numpy as np

from .grassmann import (
    AnalyticSpec,
    GrassmannDomainError,
    GrassmannError,
    Supernumber,
    apply_analytic,
    degree_filter,
    inverse,
    max_abs,
    one,
    scalar,
    zero,
)

__all__ = [
    "Supermatrix",
    "from_blocks",
    "identity_sm",
    "lift_complex",
    "str_super",
    "sdet",
    "det_even",
    "mat_inverse_even",
    "sm_inverse",
    "sm_exp",
    "diagonalize_generic",
    "sdet_flow_check",
    "pfaffian",
]


def _as_super(x, L: int) -> Supernumber:
    if isinstance(x, Supernumber):
        return x if x.L == L else x.embed(L)
    return scalar(L, complex(x))


class Supermatrix:
    """Graded (m|n)-square matrix of supernumbers (immutable by convention)."""

    __slots__ = ("m", "n", "L", "rows")

    def __init__(self, m: int, n: int, rows: Sequence[Sequence], L: int | None = None):
        N = m + n
        if len(rows) != N or any(len(r) != N for r in rows):
            raise GrassmannError(f"need a {N}x{N} array of entries")
        if L is None:
            L = max(
                (e.L for r in rows for e in r if isinstance(e, Supernumber)),
                default=0,
            )
        self.m = m
        self.n = n
        self.L = L
        self.rows: Tuple[Tuple[Supernumber, ...], ...] = tuple(
            tuple(_as_super(e, L) for e in r) for r in rows
        )

    # -- inspection --------------------------------------------------------

    @property
    def size(self) -> int:
        return self.m + self.n

    def entry(self, i: int, j: int) -> Supernumber:
        return self.rows[i][j]

    def block(self, which: str) -> List[List[Supernumber]]:
        m, n = self.m, self.n
        if which == "A":
            return [[self.rows[i][j] for j in range(m)] for i in range(m)]
        if which == "C":
            return [[self.rows[i][m + j] for j in range(n)] for i in range(m)]
        if which == "D":
            return [[self.rows[m + i][j] for j in range(m)] for i in range(n)]
        if which == "B":
            return [[self.rows[m + i][m + j] for j in range(n)] for i in range(n)]
        raise GrassmannError(f"unknown block {which!r}")

    def grade_of_index(self, i: int) -> int:
        return 0 if i < self.m else 1

    @property
    def parity(self) -> str:
        """'even', 'odd' or 'mixed' with respect to the block grading."""
        want_even = True
        want_odd = True
        for i in range(self.size):
            for j in range(self.size):
                e = self.rows[i][j]
                if e.is_zero():
                    continue
                block_parity = (self.grade_of_index(i) + self.grade_of_index(j)) % 2
                p = e.parity
                if p == "mixed":
                    return "mixed"
                is_even_entry = p == "even"
                if block_parity == 0:
                    want_even &= is_even_entry
                    want_odd &= not is_even_entry
                else:
                    want_even &= not is_even_entry
                    want_odd &= is_even_entry
        if want_even:
            return "even"
        if want_odd:
            return "odd"
        return "mixed"

    def body_matrix(self) -> np.ndarray:
        N = self.size
        out = np.zeros((N, N), dtype=complex)
        for i in range(N):
            for j in range(N):
                out[i, j] = self.rows[i][j].body
        return out

    def max_abs(self) -> float:
        return max((max_abs(e) for r in self.rows for e in r), default=0.0)

    def degree_part(self, k: int) -> "Supermatrix":
        return Supermatrix(
            self.m, self.n,
            [[degree_filter(e, k) for e in r] for r in self.rows], self.L,
        )

    def max_degree(self) -> int:
        return max((e.max_degree() for r in self.rows for e in r), default=0)

    # -- arithmetic ---------------------------------------------------------

    def _promote(self, other: "Supermatrix") -> int:
        if (self.m, self.n) != (other.m, other.n):
            raise GrassmannError("shape mismatch")
        return max(self.L, other.L)

    def __add__(self, other: "Supermatrix") -> "Supermatrix":
        L = self._promote(other)
        return Supermatrix(
            self.m, self.n,
            [[self.rows[i][j] + other.rows[i][j] for j in range(self.size)]
             for i in range(self.size)], L,
        )

    def __sub__(self, other: "Supermatrix") -> "Supermatrix":
        L = self._promote(other)
        return Supermatrix(
            self.m, self.n,
            [[self.rows[i][j] - other.rows[i][j] for j in range(self.size)]
             for i in range(self.size)], L,
        )

    def __matmul__(self, other: "Supermatrix") -> "Supermatrix":
        L = self._promote(other)
        N = self.size
        out = []
        for i in range(N):
            row = []
            for j in range(N):
                acc = zero(L)
                for k in range(N):
                    acc = acc + self.rows[i][k] * other.rows[k][j]
                row.append(acc)
            out.append(row)
        return Supermatrix(self.m, self.n, out, L)

    def scale(self, c) -> "Supermatrix":
        return Supermatrix(
            self.m, self.n,
            [[_as_super(c, self.L) * e for e in r] for r in self.rows], self.L,
        )

    def max_coeff_diff(self, other: "Supermatrix") -> float:
        from .grassmann import max_coeff_diff as mcd
        L = max(self.L, other.L)
        return max(
            mcd(self.rows[i][j].embed(L), other.rows[i][j].embed(L))
            for i in range(self.size) for j in range(self.size)
        )


def from_blocks(A, C, D, B, L: int | None = None) -> Supermatrix:
    """Assemble [[A, C], [D, B]] from nested lists (A: m x m, B: n x n)."""
    m = len(A)
    n = len(B)
    rows = []
    for i in range(m):
        rows.append(list(A[i]) + list(C[i] if n else []))
    for i in range(n):
        rows.append(list(D[i] if m else []) + list(B[i]))
    return Supermatrix(m, n, rows, L)


def identity_sm(m: int, n: int, L: int) -> Supermatrix:
    N = m + n
    return Supermatrix(
        m, n,
        [[one(L) if i == j else zero(L) for j in range(N)] for i in range(N)], L,
    )


def lift_complex(mat: np.ndarray, m: int, n: int, L: int) -> Supermatrix:
    return Supermatrix(
        m, n, [[scalar(L, mat[i, j]) for j in range(m + n)] for i in range(m + n)], L
    )


# ---------------------------------------------------------------------------
# supertrace
# ---------------------------------------------------------------------------

def str_super(M: Supermatrix) -> Supernumber:
    """tr A - (-1)^{p(M)} tr B; defined for homogeneous (even/odd) matrices."""
    p = M.parity
    if p == "mixed":
        raise GrassmannDomainError("supertrace needs a parity-homogeneous matrix")
    sgn = -1.0 if p == "even" else 1.0
    acc = zero(M.L)
    for i in range(M.m):
        acc = acc + M.rows[i][i]
    for i in range(M.m, M.size):
        acc = acc + sgn * M.rows[i][i]
    return acc


# ---------------------------------------------------------------------------
# determinants of even-entry matrices
# ---------------------------------------------------------------------------

def _det_leibniz(rows: List[List[Supernumber]], L: int) -> Supernumber:
    size = len(rows)
    acc = zero(L)
    for perm in itertools.permutations(range(size)):
        sign = 1
        seen = list(perm)
        for i in range(1, size):
            j = i
            while j > 0 and seen[j - 1] > seen[j]:
                seen[j - 1], seen[j] = seen[j], seen[j - 1]
                sign = -sign
                j -= 1
        term = one(L)
        for i in range(size):
            term = term * rows[i][perm[i]]
        acc = acc + (sign * term)
    return acc


def det_even(rows: Sequence[Sequence[Supernumber]]) -> Supernumber:
    """Determinant of a square matrix with commuting (even) entries.

    Leibniz expansion for size <= 4; Gaussian elimination with body-invertible
    pivots above that (entries commute, so ordinary row reduction is exact);
    Leibniz fallback up to size 6 when no body-invertible pivot exists.
    """
    rows = [list(r) for r in rows]
    size = len(rows)
    if any(len(r) != size for r in rows):
        raise GrassmannError("det_even needs a square matrix")
    L = max((e.L for r in rows for e in r if isinstance(e, Supernumber)), default=0)
    rows = [[_as_super(e, L) for e in r] for r in rows]
    for r in rows:
        for e in r:
            if e.parity not in ("even",):
                raise GrassmannDomainError("det_even needs even entries")
    if size == 0:
        return one(L)
    if size <= 4:
        return _det_leibniz(rows, L)

    work = [row[:] for row in rows]
    det = one(L)
    for col in range(size):
        pivot_row = None
        best = 0.0
        for r in range(col, size):
            b = abs(work[r][col].body)
            if b > best:
                best = b
                pivot_row = r
        if pivot_row is None or best == 0.0:
            if size <= 6:
                return _det_leibniz(rows, L)
            raise GrassmannDomainError(
                "no body-invertible pivot; Leibniz fallback only up to size 6"
            )
        if pivot_row != col:
            work[col], work[pivot_row] = work[pivot_row], work[col]
            det = -1.0 * det
        piv = work[col][col]
        det = det * piv
        piv_inv = inverse(piv)
        for r in range(col + 1, size):
            factor = work[r][col] * piv_inv
            if factor.is_zero():
                continue
            work[r] = [work[r][j] - factor * work[col][j] for j in range(size)]
    return det


def mat_inverse_even(rows: Sequence[Sequence[Supernumber]]) -> List[List[Supernumber]]:
    """Inverse of a square matrix with even entries and invertible body.

    Neumann split: with R = body(rows) and S the soul part,
    rows^{-1} = (I + R^{-1} S)^{-1} R^{-1}, and the series terminates.
    """
    size = len(rows)
    L = max((e.L for r in rows for e in r if isinstance(e, Supernumber)), default=0)
    rows = [[_as_super(e, L) for e in r] for r in rows]
    body = np.array([[e.body for e in r] for r in rows], dtype=complex)
    if size and abs(np.linalg.det(body)) == 0.0:
        raise GrassmannDomainError("matrix body is singular")
    binv = np.linalg.inv(body) if size else body
    # S = rows - body;  T = -R^{-1} S  (supernumber matrix, soul-only entries)
    T = [
        [
            sum(
                (scalar(L, -binv[i, k]) * (rows[k][j] - scalar(L, body[k, j]))
                 for k in range(size)),
                zero(L),
            )
            for j in range(size)
        ]
        for i in range(size)
    ]
    # geometric series sum_k T^k applied to R^{-1}
    acc = [[one(L) if i == j else zero(L) for j in range(size)] for i in range(size)]
    power = [row[:] for row in acc]
    for _ in range(L):
        power = [
            [
                sum((power[i][k] * T[k][j] for k in range(size)), zero(L))
                for j in range(size)
            ]
            for i in range(size)
        ]
        if all(e.is_zero() for r in power for e in r):
            break
        acc = [[acc[i][j] + power[i][j] for j in range(size)] for i in range(size)]
    return [
        [
            sum((acc[i][k] * scalar(L, binv[k, j]) for k in range(size)), zero(L))
            for j in range(size)
        ]
        for i in range(size)
    ]


# ---------------------------------------------------------------------------
# sdet and the full inverse
# ---------------------------------------------------------------------------

def _mat_mul(P, Q, L):
    rp, cp, cq = len(P), len(Q), len(Q[0]) if Q else 0
    return [
        [sum((P[i][k] * Q[k][j] for k in range(cp)), zero(L)) for j in range(cq)]
        for i in range(rp)
    ]


def _mat_sub(P, Q):
    return [[a - b for a, b in zip(rp, rq)] for rp, rq in zip(P, Q)]


def sdet(M: Supermatrix) -> Supernumber:
    """Multiplicative super-determinant of an even matrix.

    Uses det(A - C B^{-1} D) det(B)^{-1} when the body of B is invertible,
    otherwise det(A) det(B - D A^{-1} C)^{-1}.
    """
    if M.parity == "mixed" or M.parity == "odd":
        raise GrassmannDomainError("sdet is defined for even matrices")
    L = M.L
    A, B = M.block("A"), M.block("B")
    C, D = M.block("C"), M.block("D")
    if M.n == 0:
        return det_even(A)
    if M.m == 0:
        return inverse(det_even(B))
    bodyB = np.array([[e.body for e in r] for r in B], dtype=complex)
    if abs(np.linalg.det(bodyB)) > 0.0:
        Binv = mat_inverse_even(B)
        Schur = _mat_sub(A, _mat_mul(_mat_mul(C, Binv, L), D, L))
        return det_even(Schur) * inverse(det_even(B))
    bodyA = np.array([[e.body for e in r] for r in A], dtype=complex)
    if abs(np.linalg.det(bodyA)) == 0.0:
        raise GrassmannDomainError("both diagonal blocks have singular bodies")
    Ainv = mat_inverse_even(A)
    Schur = _mat_sub(B, _mat_mul(_mat_mul(D, Ainv, L), C, L))
    return det_even(A) * inverse(det_even(Schur))


def sm_inverse(M: Supermatrix) -> Supermatrix:
    """Two-sided inverse via the terminating Neumann series on the full matrix."""
    N = M.size
    L = M.L
    body = M.body_matrix()
    if N and abs(np.linalg.det(body)) == 0.0:
        raise GrassmannDomainError("matrix body is singular")
    binv = np.linalg.inv(body) if N else body
    Binv = lift_complex(binv, M.m, M.n, L)
    S = M - lift_complex(body, M.m, M.n, L)
    T = (Binv @ S).scale(-1.0)
    acc = identity_sm(M.m, M.n, L)
    power = identity_sm(M.m, M.n, L)
    for _ in range(L):
        power = power @ T
        if all(e.is_zero() for r in power.rows for e in r):
            break
        acc = acc + power
    # inverse = (I + B^{-1}S)^{-1} B^{-1} = acc @ Binv ... careful with order:
    # M = body (I + binv S) entrywise-left; (I + X)^{-1} = acc with X = Binv S,
    # so M^{-1} = (I + X)^{-1} Binv = acc @ Binv
    return acc @ Binv


# ---------------------------------------------------------------------------
# matrix exponential
# ---------------------------------------------------------------------------

def sm_exp(M: Supermatrix) -> Supermatrix:
    """exp(M) by scaling-and-squaring with a coefficient-level Taylor core.

    The body part behaves like the usual scalar scaling-and-squaring; every
    soul contribution is a finite nilpotent series at each Taylor order.
    """
    L = M.L
    scale = max(np.abs(M.body_matrix()).max() * M.size, M.max_abs(), 1e-30)
    s = max(0, math.ceil(math.log2(scale / 0.25))) if scale > 0.25 else 0
    A = M.scale(0.5 ** s)
    acc = identity_sm(M.m, M.n, L)
    term = identity_sm(M.m, M.n, L)
    for k in range(1, 60):
        term = (term @ A).scale(1.0 / k)
        t = term.max_abs()
        acc = acc + term
        if t < 1e-19:
            break
    for _ in range(s):
        acc = acc @ acc
    return acc


# ---------------------------------------------------------------------------
# generic diagonalization by degree recursion
# ---------------------------------------------------------------------------

def diagonalize_generic(M: Supermatrix, gap_factor: float = 1e-8):
    """Conjugate an even matrix with distinct body eigenvalues to diagonal form.

    Returns (X, E) with X M X^{-1} = E, E diagonal.  The body is handled by a
    dense eigensolver on the two diagonal blocks; soul corrections are built
    degree by degree, dividing by body eigenvalue gaps.  Raises when the
    minimal gap is below gap_factor * spectral radius.
    """
    if M.parity != "even":
        raise GrassmannDomainError("diagonalization implemented for even matrices")
    m, n, L = M.m, M.n, M.L
    N = m + n
    bodyA = np.array([[e.body for e in r] for r in M.block("A")], dtype=complex) \
        if m else np.zeros((0, 0), complex)
    bodyB = np.array([[e.body for e in r] for r in M.block("B")], dtype=complex) \
        if n else np.zeros((0, 0), complex)
    lamA, VA = np.linalg.eig(bodyA) if m else (np.zeros(0, complex), np.zeros((0, 0), complex))
    lamB, VB = np.linalg.eig(bodyB) if n else (np.zeros(0, complex), np.zeros((0, 0), complex))
    lam = np.concatenate([lamA, lamB])
    rad = max(np.abs(lam).max() if N else 0.0, 1e-300)
    for i in range(N):
        for j in range(i + 1, N):
            if abs(lam[i] - lam[j]) <= gap_factor * rad:
                raise GrassmannDomainError(
                    f"body eigenvalue gap |{lam[i]:.3g} - {lam[j]:.3g}| too small"
                )
    X0c = np.zeros((N, N), complex)
    if m:
        X0c[:m, :m] = np.linalg.inv(VA)
    if n:
        X0c[m:, m:] = np.linalg.inv(VB)
    X0 = lift_complex(X0c, m, n, L)
    X0inv = lift_complex(np.linalg.inv(X0c), m, n, L)
    K = X0 @ M @ X0inv

    # per-degree pieces
    Kdeg = [K.degree_part(k) for k in range(L + 1)]
    Ydeg = {0: identity_sm(m, n, L)}
    Edeg = {0: Supermatrix(m, n, [[scalar(L, lam[i]) if i == j else zero(L)
                                   for j in range(N)] for i in range(N)], L)}
    for k in range(1, L + 1):
        R = Kdeg[k]
        for j in range(1, k):
            Yj = Ydeg.get(j)
            if Yj is None:
                continue
            R = R + (Yj @ Kdeg[k - j])
            Ekj = Edeg.get(k - j)
            if Ekj is not None:
                R = R - (Ekj @ Yj)
        # split R into diagonal (-> E) and commutator part (-> Y)
        Erows = [[zero(L)] * N for _ in range(N)]
        Yrows = [[zero(L)] * N for _ in range(N)]
        nonzero_E = nonzero_Y = False
        for i in range(N):
            for j in range(N):
                r = R.rows[i][j]
                if r.is_zero():
                    continue
                if i == j:
                    Erows[i][j] = r
                    nonzero_E = True
                else:
                    Yrows[i][j] = (1.0 / (lam[i] - lam[j])) * r
                    nonzero_Y = True
        if nonzero_E:
            Edeg[k] = Supermatrix(m, n, Erows, L)
        if nonzero_Y:
            Ydeg[k] = Supermatrix(m, n, Yrows, L)

    Y = Ydeg[0]
    for k, Yk in Ydeg.items():
        if k:
            Y = Y + Yk
    E = Edeg[0]
    for k, Ek in Edeg.items():
        if k:
            E = E + Ek
    return Y @ X0, E


# ---------------------------------------------------------------------------
# flow identity check
# ---------------------------------------------------------------------------

def sdet_flow_check(
    M_of_t: Callable[[float], Supermatrix],
    t_end: float,
    h: float,
) -> Tuple[Supernumber, Supernumber]:
    """Integrate dX/dt = M(t) X from the identity and compare invariants.

    Returns (sdet X(t_end), exp of the composite-Simpson integral of
    str M(t)); the flow identity says the two coincide.
    """
    M0 = M_of_t(0.0)
    m, n, L = M0.m, M0.n, M0.L
    steps = max(1, round(t_end / h))
    if steps % 2:
        steps += 1
    dt = t_end / steps

    X = identity_sm(m, n, L)
    t = 0.0
    strs = [str_super(M0)]
    for _ in range(steps):
        k1 = M_of_t(t) @ X
        k2 = M_of_t(t + dt / 2) @ (X + k1.scale(dt / 2))
        k3 = M_of_t(t + dt / 2) @ (X + k2.scale(dt / 2))
        k4 = M_of_t(t + dt) @ (X + k3.scale(dt))
        X = X + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0)
        t += dt
        strs.append(str_super(M_of_t(t)))
    integral = zero(L)
    for i in range(0, steps, 2):
        integral = integral + (dt / 3.0) * (strs[i] + 4.0 * strs[i + 1] + strs[i + 2])
    return sdet(X), apply_analytic(AnalyticSpec.named("exp"), integral)


# ---------------------------------------------------------------------------
# Pfaffian
# ---------------------------------------------------------------------------

def pfaffian(rows: Sequence[Sequence[Supernumber]]) -> Supernumber:
    """Pfaffian of an antisymmetric even-entry matrix via first-row expansion.

    Odd size returns 0.  Satisfies pfaffian(B)^2 = det_even(B).
    """
    size = len(rows)
    if any(len(r) != size for r in rows):
        raise GrassmannError("pfaffian needs a square matrix")
    L = max((e.L for r in rows for e in r if isinstance(e, Supernumber)), default=0)
    rows = [[_as_super(e, L) for e in r] for r in rows]
    for i in range(size):
        for j in range(size):
            if not (rows[i][j] + rows[j][i]).is_zero():
                raise GrassmannDomainError("matrix is not antisymmetric")
            if rows[i][j].parity not in ("even",):
                raise GrassmannDomainError("pfaffian needs even entries")
    if size % 2:
        return zero(L)

    def rec(idx: Tuple[int, ...]) -> Supernumber:
        if not idx:
            return one(L)
        i0 = idx[0]
        acc = zero(L)
        for pos in range(1, len(idx)):
            j = idx[pos]
            rest = idx[1:pos] + idx[pos + 1:]
            term = rows[i0][j] * rec(rest)
            # expansion sign (-1)^pos for the (pos+1)-th column, pos 1-based here
            acc = acc + (term if pos % 2 == 1 else -1.0 * term)
        return acc

    return rec(tuple(range(size)))
