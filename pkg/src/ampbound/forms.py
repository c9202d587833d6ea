"""Totally positive definite quadratic forms and their quasi-diagonal shape.

A form is stored by its Gram matrix A over O_F with even diagonal and the
value convention Q(x) = x^t A x / 2.  Reduction produces a unimodular
change of basis together with the nested-squares data (h_j, c_jk): both
are exact, the transform is built purely from elementary operations (swap,
translate by an O_F multiple, scale by a unit), so its determinant is a
unit by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .fields import FieldContext, FieldElement, cone_coordinate, elem_from_json

LLL_DELTA = 0.99
MAX_SWEEPS = 256


class FormError(ValueError):
    pass


class NotSymmetricError(FormError):
    pass


class OddDiagonalError(FormError):
    pass


class NotTotallyPositiveError(FormError):
    def __init__(self, embedding, minor):
        self.embedding = embedding
        self.minor = minor
        super().__init__(
            f"leading {minor}x{minor} minor is not positive at embedding {embedding}"
        )


# ---------------------------------------------------------------------------
# exact linear algebra over F


def mat_mul(ctx, A, B):
    n, m, k = len(A), len(B[0]), len(B)
    return [
        [sum((A[i][t] * B[t][j] for t in range(k)), ctx.zero) for j in range(m)]
        for i in range(n)
    ]


def mat_transpose(A):
    return [list(r) for r in zip(*A)]


def mat_det(ctx, A) -> FieldElement:
    n = len(A)
    if n == 1:
        return A[0][0]
    if n == 2:
        return A[0][0] * A[1][1] - A[0][1] * A[1][0]
    det = ctx.zero
    sign = 1
    for j in range(n):
        minor = [r[:j] + r[j + 1 :] for r in A[1:]]
        det = det + sign * A[0][j] * mat_det(ctx, minor)
        sign = -sign
    return det


def mat_inverse(ctx, A):
    """Inverse over F via the adjugate; n <= 4."""
    n = len(A)
    det = mat_det(ctx, A)
    if det.is_zero():
        raise FormError("matrix is singular")
    inv = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [
                [A[r][c] for c in range(n) if c != i]
                for r in range(n)
                if r != j
            ]
            cof = mat_det(ctx, minor) if n > 1 else ctx.one
            sign = -1 if (i + j) % 2 else 1
            inv[i][j] = sign * cof / det
    return inv


def identity_matrix(ctx, n):
    return [[ctx.one if i == j else ctx.zero for j in range(n)] for i in range(n)]


# ---------------------------------------------------------------------------
# fractional ideal norms (rank <= 2 lattices over Z)


def _xgcd(a, b):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    return old_r, old_s, old_t


def ideal_norm_of_generators(ctx: FieldContext, gens) -> Fraction:
    """Norm of the fractional O_F-ideal generated by the given elements."""
    gens = [g for g in gens if not g.is_zero()]
    if not gens:
        raise FormError("zero ideal has no norm")
    if ctx.degree == 1:
        g = Fraction(0)
        for x in gens:
            q = abs(x.coords[0])
            g = q if g == 0 else Fraction(
                math.gcd(g.numerator * q.denominator, q.numerator * g.denominator),
                g.denominator * q.denominator,
            )
        return g
    omega = ctx.elem(0, 1)
    rows = []
    den = 1
    for g in gens:
        for h in (g, g * omega):
            for c in h.coords:
                den = den * c.denominator // math.gcd(den, c.denominator)
    for g in gens:
        for h in (g, g * omega):
            rows.append(tuple(int(c * den) for c in h.coords))
    # HNF of a rank-2 integer lattice: bring to [[a, b], [0, c]]
    w = None
    for r in rows:
        if r[1] != 0:
            if w is None:
                w = r
            else:
                g_, u, v = _xgcd(w[1], r[1])
                w = (u * w[0] + v * r[0], g_)
    firsts = []
    for r in rows:
        if w is not None and w[1] != 0:
            q = r[1] // w[1]
            r = (r[0] - q * w[0], r[1] - q * w[1])
        if r[0]:
            firsts.append(abs(r[0]))
    a = 0
    for f in firsts:
        a = math.gcd(a, f)
    c = abs(w[1]) if w is not None else 0
    if a == 0 or c == 0:
        raise FormError("generators do not span a full lattice")
    return Fraction(a * c, den * den)


# ---------------------------------------------------------------------------
# the form types


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    ctx: FieldContext
    n: int
    gram: tuple  # n x n tuple of FieldElement
    det: FieldElement
    level_norm: int
    level_factors: tuple  # sorted (prime, exp) pairs

    def value(self, coords_vec) -> FieldElement:
        """Q(x) for a vector of field elements."""
        acc = self.ctx.zero
        for i in range(self.n):
            for j in range(self.n):
                acc = acc + self.gram[i][j] * coords_vec[i] * coords_vec[j]
        return acc * Fraction(1, 2)

    def bilinear(self, x, y) -> FieldElement:
        acc = self.ctx.zero
        for i in range(self.n):
            for j in range(self.n):
                acc = acc + self.gram[i][j] * x[i] * y[j]
        return acc * Fraction(1, 2)

    def embedded_gram(self, j: int) -> np.ndarray:
        return np.array(
            [
                [self.ctx.embed_coords(self.gram[i][k].coords, j) for k in range(self.n)]
                for i in range(self.n)
            ]
        )

    def det_norm(self) -> Fraction:
        return abs(self.det.norm())

    def key(self):
        return (
            self.ctx.tag,
            tuple(tuple(e.coords for e in row) for row in self.gram),
        )

    def __eq__(self, other):
        return isinstance(other, QuadraticForm) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def _factorize(n: int):
    out = []
    d = 2
    while d * d <= n:
        e = 0
        while n % d == 0:
            n //= d
            e += 1
        if e:
            out.append((d, e))
        d += 1
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def validate_form(ctx: FieldContext, gram) -> QuadraticForm:
    """Check symmetry, even diagonal and total positivity; compute the level.

    `gram` may contain FieldElements or JSON-style entries.
    """
    n = len(gram)
    if n not in (1, 2, 3, 4):
        raise FormError(f"rank {n} not supported")
    G = []
    for row in gram:
        if len(row) != n:
            raise FormError("gram matrix is not square")
        G.append([e if isinstance(e, FieldElement) else elem_from_json(ctx, e) for e in row])
    for i in range(n):
        for j in range(n):
            if not G[i][j].is_integral():
                raise FormError(f"entry ({i},{j}) is not integral")
            if G[i][j] != G[j][i]:
                raise NotSymmetricError(f"entries ({i},{j}) and ({j},{i}) differ")
    for j in range(n):
        half = G[j][j] * Fraction(1, 2)
        if not half.is_integral():
            raise OddDiagonalError(f"diagonal entry {j} is not in 2*O_F")
    # exact leading-minor positivity at every embedding
    for emb in range(ctx.degree):
        for k in range(1, n + 1):
            minor = mat_det(ctx, [row[:k] for row in G[:k]])
            if minor.sign_at(emb) <= 0:
                raise NotTotallyPositiveError(emb, k)
    det = mat_det(ctx, G)
    inv = mat_inverse(ctx, G)
    gens = []
    for i in range(n):
        gens.append(inv[i][i] * Fraction(1, 2))
        for j in range(i + 1, n):
            gens.append(inv[i][j])
    nrm = ideal_norm_of_generators(ctx, [g for g in gens if not g.is_zero()])
    level = 1 / nrm
    if level.denominator != 1 or level <= 0:
        raise FormError("level ideal is not integral")
    level_norm = int(level)
    return QuadraticForm(
        ctx=ctx,
        n=n,
        gram=tuple(tuple(row) for row in G),
        det=det,
        level_norm=level_norm,
        level_factors=_factorize(level_norm),
    )


def form_from_json(doc: dict, ctx=None) -> QuadraticForm:
    from .fields import field_context

    if ctx is None:
        ctx = field_context(doc["field"])
    return validate_form(ctx, doc["gram"])


def form_to_json(q: QuadraticForm) -> dict:
    from .fields import elem_to_json

    return {
        "field": q.ctx.tag,
        "rank": q.n,
        "gram": [[elem_to_json(e) for e in row] for row in q.gram],
    }


# ---------------------------------------------------------------------------
# reduction


@dataclass(frozen=True)
class SizeReport:
    offdiag_over_diag: float  # max |a_ij^s| / a_jj^s
    diag_over_h: float  # max a_jj^s / h_j^s
    h_balance: float  # max_j max_{s,s'} h_j^s / h_j^s'
    h_chain: float  # max_j max_{s,s'} h_j^s / h_{j+1}^s'
    h1_low: float
    h1_high: float

    def h1_witness(self) -> float:
        """Witness for h_1 being of unit size (1 means perfectly balanced)."""
        return max(self.h1_high, 1.0 / self.h1_low)


@dataclass(frozen=True)
class ReducedForm:
    source: QuadraticForm
    form: QuadraticForm  # the reduced form U^t A U
    transform: tuple  # columns of U over O_F
    h: tuple  # FieldElement, quasi-diagonal coefficients of Q = sum h_j (...)^2
    c: tuple  # upper triangular, c[j][k] coefficient of x_k in square j
    det_balanced: FieldElement  # prod h_j
    size_report: SizeReport

    def expansion_value(self, x_coords) -> FieldElement:
        """Evaluate sum_j h_j (x_j + sum_{k>j} c_jk x_k)^2 exactly."""
        ctx = self.source.ctx
        n = self.source.n
        acc = ctx.zero
        for j in range(n):
            lin = x_coords[j]
            for k in range(j + 1, n):
                lin = lin + self.c[j][k] * x_coords[k]
            acc = acc + self.h[j] * lin * lin
        return acc


def _ldl_half(ctx, gram):
    """LDL of gram/2 over F: returns (h, R) with Q = sum h_j (x_j + sum R_jk x_k)^2."""
    n = len(gram)
    half = Fraction(1, 2)
    M = [[gram[i][j] * half for j in range(n)] for i in range(n)]
    h = [None] * n
    R = [[ctx.zero] * n for _ in range(n)]
    for j in range(n):
        acc = M[j][j]
        for k in range(j):
            acc = acc - h[k] * R[k][j] * R[k][j]
        h[j] = acc
        if h[j].is_zero():
            raise FormError("degenerate form in LDL")
        R[j][j] = ctx.one
        for i in range(j + 1, n):
            val = M[j][i]
            for k in range(j):
                val = val - h[k] * R[k][j] * R[k][i]
            R[j][i] = val / h[j]
    return h, R


def _round_field(ctx, x: FieldElement) -> FieldElement:
    return ctx.elem(*[Fraction(round(c)) for c in x.coords])


def _trace_pos(x: FieldElement) -> float:
    return sum(x.embed())


def reduce_form(q: QuadraticForm) -> ReducedForm:
    """Quasi-diagonalize q by a unimodular transform.

    Number-field LLL: exact Gram-Schmidt over F, size reduction by
    coordinate rounding, per-vector unit balancing through the fundamental
    cone, and Lovasz swaps on the trace lengths.  All operations on the
    basis are elementary, so det(U) is a unit without any fixup.
    """
    ctx = q.ctx
    n = q.n
    U = identity_matrix(ctx, n)
    eps = ctx.tp_unit if ctx.degree == 2 else None

    def gram_of(Umat):
        A = [list(r) for r in q.gram]
        return mat_mul(ctx, mat_transpose(Umat), mat_mul(ctx, A, Umat))

    def scale_col(j, u):
        for r in range(n):
            U[r][j] = U[r][j] * u

    def shear(j, k, lam):  # col_j -= lam * col_k
        for r in range(n):
            U[r][j] = U[r][j] - lam * U[r][k]

    for _ in range(MAX_SWEEPS):
        G = gram_of(U)
        h, R = _ldl_half(ctx, G)
        changed = False
        # size reduction
        for j in range(1, n):
            for k in range(j - 1, -1, -1):
                lam = _round_field(ctx, R[k][j])
                if not lam.is_zero():
                    shear(j, k, lam)
                    G = gram_of(U)
                    h, R = _ldl_half(ctx, G)
                    changed = True
        # unit balancing of the quasi-diagonal coefficients
        if eps is not None:
            for j in range(n):
                c = cone_coordinate(h[j])
                k = -round(c / 2.0)
                if k != 0 and abs(c) > 1.0 + 1e-9:
                    scale_col(j, eps ** k)
                    G = gram_of(U)
                    h, R = _ldl_half(ctx, G)
                    changed = True
        # Lovasz swaps on trace lengths
        swapped = False
        for j in range(n - 1):
            mu = R[j][j + 1]
            lhs = _trace_pos(h[j + 1] + mu * mu * h[j])
            if lhs < LLL_DELTA * _trace_pos(h[j]):
                for r in range(n):
                    U[r][j], U[r][j + 1] = U[r][j + 1], U[r][j]
                swapped = True
                changed = True
                break
        if not changed:
            break
        if swapped:
            continue
    G = gram_of(U)
    h, R = _ldl_half(ctx, G)

    detU = mat_det(ctx, U)
    if abs(detU.norm()) != 1:
        raise AssertionError("reduction transform is not unimodular")

    reduced = validate_form(ctx, G)
    if reduced.level_norm != q.level_norm:
        raise AssertionError("level changed under unimodular equivalence")

    det_balanced = ctx.one
    for hj in h:
        det_balanced = det_balanced * hj

    embs = range(ctx.degree)
    hv = [[float(v) for v in hj.embed()] for hj in h]
    offdiag = 0.0
    diag_over_h = 0.0
    for j in range(n):
        for s in embs:
            ajj = float(ctx.embed_coords(G[j][j].coords, s))
            diag_over_h = max(diag_over_h, ajj / hv[j][s])
            for i in range(n):
                if i != j:
                    aij = abs(float(ctx.embed_coords(G[i][j].coords, s)))
                    offdiag = max(offdiag, aij / ajj)
    h_balance = max(
        max(hv[j]) / min(hv[j]) for j in range(n)
    )
    h_chain = 0.0
    for j in range(n - 1):
        h_chain = max(h_chain, max(hv[j]) / min(hv[j + 1]))
    report = SizeReport(
        offdiag_over_diag=offdiag,
        diag_over_h=diag_over_h,
        h_balance=h_balance,
        h_chain=h_chain,
        h1_low=min(hv[0]),
        h1_high=max(hv[0]),
    )
    return ReducedForm(
        source=q,
        form=reduced,
        transform=tuple(tuple(row) for row in U),
        h=tuple(h),
        c=tuple(tuple(row) for row in R),
        det_balanced=det_balanced,
        size_report=report,
    )


def transform_columns(r: ReducedForm):
    """Basis vectors of the reduction as coordinate tuples (columns of U)."""
    n = r.source.n
    return [tuple(r.transform[i][j] for i in range(n)) for j in range(n)]


# ---------------------------------------------------------------------------
# derived checks


def eigen_range(q: QuadraticForm):
    """Per-embedding (min, max) eigenvalues of the embedded Gram matrices."""
    out = []
    for j in range(q.ctx.degree):
        w = np.linalg.eigvalsh(q.embedded_gram(j))
        out.append((float(w[0]), float(w[-1])))
    return out


def eigen_constants(q: QuadraticForm):
    """Realized constants in 1 << lambda_min and lambda_max << det^sigma."""
    rng = eigen_range(q)
    lo = min(a for a, _ in rng)
    hi = 0.0
    for j, (_, b) in enumerate(rng):
        d = float(q.ctx.embed_coords(q.det.coords, j))
        hi = max(hi, b / d)
    return {"lambda_min": lo, "lambda_max_over_det": hi}


def subdeterminant_check(r: ReducedForm):
    """Compare prod_{j<n} nr(h_j) with nr(det A)/N(level).

    The exact inequality nr(det A_tilde) >= nr(det A)/N(level) holds for the
    leading (n-1)-submatrix of the reduced Gram; the returned pair uses the
    halved h-convention, so the realized ratio carries a 2^{d(n-1)} factor
    that is reported rather than asserted.
    """
    q = r.form
    ctx = q.ctx
    n = q.n
    if n < 2:
        raise FormError("need rank >= 2")
    lhs = Fraction(1)
    for hj in r.h[: n - 1]:
        lhs *= abs(hj.norm())
    rhs = abs(r.source.det.norm()) / Fraction(r.source.level_norm)
    sub = [row[: n - 1] for row in q.gram[: n - 1]]
    sub_det_norm = abs(mat_det(ctx, sub).norm())
    if sub_det_norm < rhs:
        raise AssertionError("subdeterminant inequality violated")
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ratio": float(lhs / rhs),
        "exact_subdet_norm": sub_det_norm,
    }
