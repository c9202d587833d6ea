"""Totally definite quaternion algebras and their orders.

An algebra is (a, b | F) with i^2 = a, j^2 = b, ij = -ji and a, b totally
negative.  Orders are rank-4 O_F-lattices given by an explicit basis;
closure, norm-form Gram, discriminants and the trace-zero sublattice are
all computed exactly.  A small table of maximal orders in the algebra
ramified at one rational prime feeds the Eichler-order factory over Q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct

from .fields import FieldContext, FieldElement, elem_from_json, field_context
from .forms import (
    FormError,
    QuadraticForm,
    mat_det,
    mat_inverse,
    validate_form,
)


class OrderError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuaternionAlgebra:
    ctx: FieldContext
    a: FieldElement
    b: FieldElement

    def __post_init__(self):
        for s, name in ((self.a, "a"), (self.b, "b")):
            for j in range(self.ctx.degree):
                if s.sign_at(j) >= 0:
                    raise OrderError(f"structure constant {name} is not totally negative")

    def elem(self, x0, x1, x2, x3) -> "QuatElement":
        coerce = lambda v: v if isinstance(v, FieldElement) else self.ctx.elem(
            Fraction(v) if not isinstance(v, (list, tuple)) else 0
        )
        return QuatElement(self, (coerce(x0), coerce(x1), coerce(x2), coerce(x3)))

    def key(self):
        return (self.ctx.tag, self.a.coords, self.b.coords)

    def __eq__(self, other):
        return isinstance(other, QuaternionAlgebra) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


@dataclass(frozen=True, eq=False)
class QuatElement:
    alg: QuaternionAlgebra
    coords: tuple  # (x0, x1, x2, x3) FieldElements in basis 1, i, j, ij

    def __add__(self, other):
        return QuatElement(
            self.alg, tuple(a + b for a, b in zip(self.coords, other.coords))
        )

    def __sub__(self, other):
        return QuatElement(
            self.alg, tuple(a - b for a, b in zip(self.coords, other.coords))
        )

    def __neg__(self):
        return QuatElement(self.alg, tuple(-a for a in self.coords))

    def scale(self, s):
        return QuatElement(self.alg, tuple(c * s for c in self.coords))

    def __mul__(self, other):
        x0, x1, x2, x3 = self.coords
        y0, y1, y2, y3 = other.coords
        a, b = self.alg.a, self.alg.b
        ab = a * b
        z0 = x0 * y0 + a * x1 * y1 + b * x2 * y2 - ab * x3 * y3
        z1 = x0 * y1 + x1 * y0 - b * x2 * y3 + b * x3 * y2
        z2 = x0 * y2 + x2 * y0 + a * x1 * y3 - a * x3 * y1
        z3 = x0 * y3 + x3 * y0 + x1 * y2 - x2 * y1
        return QuatElement(self.alg, (z0, z1, z2, z3))

    def conj(self):
        x0, x1, x2, x3 = self.coords
        return QuatElement(self.alg, (x0, -x1, -x2, -x3))

    def reduced_trace(self) -> FieldElement:
        return self.coords[0] * 2

    def reduced_norm(self) -> FieldElement:
        x0, x1, x2, x3 = self.coords
        a, b = self.alg.a, self.alg.b
        return x0 * x0 - a * x1 * x1 - b * x2 * x2 + a * b * x3 * x3

    def inner(self, other) -> FieldElement:
        """<z1, z2> = tr(z1 z2*)/2 for the norm form."""
        return (self * other.conj()).reduced_trace() * Fraction(1, 2)

    def is_zero(self):
        return all(c.is_zero() for c in self.coords)

    def __eq__(self, other):
        return (
            isinstance(other, QuatElement)
            and self.alg == other.alg
            and all(a == b for a, b in zip(self.coords, other.coords))
        )

    def __hash__(self):
        return hash((self.alg.key(), tuple(c.coords for c in self.coords)))

    def __repr__(self):
        return "Quat(" + ", ".join(map(str, self.coords)) + ")"


@dataclass(frozen=True, eq=False)
class QuaternionOrder:
    alg: QuaternionAlgebra
    basis: tuple  # 4 QuatElements
    gram: QuadraticForm  # norm-form Gram tr(g_i g_j*)
    disc: FieldElement  # det of gram
    reduced_disc_norm: int  # N(disc*) with nr(disc) = N(disc*)^2
    trace_zero_basis: tuple  # 3 QuatElements spanning the trace-0 sublattice
    ternary: QuadraticForm  # norm form on the trace-0 sublattice

    @property
    def ctx(self):
        return self.alg.ctx

    def element(self, coords) -> QuatElement:
        acc = None
        for c, g in zip(coords, self.basis):
            term = g.scale(c)
            acc = term if acc is None else acc + term
        return acc


def _solve_in_basis(alg, basis_inv, z: QuatElement):
    """Coordinates of z in the order basis (entries of basis_inv over F)."""
    return [
        sum((basis_inv[i][k] * z.coords[k] for k in range(4)), alg.ctx.zero)
        for i in range(4)
    ]


def order_from_basis(alg: QuaternionAlgebra, basis) -> QuaternionOrder:
    """Build an order from 4 basis quaternions, verifying all invariants.

    Raises OrderError when the basis is not multiplicatively closed (the
    offending product is reported), when 1 is missing, or when the norm
    form fails total positivity.
    """
    ctx = alg.ctx
    bas = []
    for v in basis:
        if isinstance(v, QuatElement):
            bas.append(v)
        else:
            bas.append(QuatElement(alg, tuple(elem_from_json(ctx, c) for c in v)))
    B = [[bas[k].coords[r] for k in range(4)] for r in range(4)]  # columns = basis
    det = mat_det(ctx, B)
    if det.is_zero():
        raise OrderError("basis is not linearly independent")
    Binv = mat_inverse(ctx, B)

    def coords_of(z):
        return _solve_in_basis(alg, Binv, z)

    one_coords = coords_of(QuatElement(alg, (ctx.one, ctx.zero, ctx.zero, ctx.zero)))
    if not all(c.is_integral() for c in one_coords):
        raise OrderError("1 is not in the order")
    for m in range(4):
        for l in range(4):
            prod = bas[m] * bas[l]
            if not all(c.is_integral() for c in coords_of(prod)):
                raise OrderError(f"not closed: product of basis elements {m} and {l}")
    for m in range(4):
        if not bas[m].reduced_trace().is_integral():
            raise OrderError(f"basis element {m} has non-integral reduced trace")
        if not bas[m].reduced_norm().is_integral():
            raise OrderError(f"basis element {m} has non-integral reduced norm")

    gram_entries = [
        [(bas[m] * bas[l].conj()).reduced_trace() for l in range(4)] for m in range(4)
    ]
    try:
        gram = validate_form(ctx, gram_entries)
    except FormError as e:
        raise OrderError(f"norm form invalid: {e}") from e
    disc = gram.det
    nrm = abs(disc.norm())
    root = math.isqrt(int(nrm))
    if Fraction(root * root) != nrm:
        raise OrderError("nr(disc) is not a perfect square")

    tz = _trace_zero_basis(ctx, bas)
    ternary_entries = [
        [(tz[m] * tz[l].conj()).reduced_trace() for l in range(3)] for m in range(3)
    ]
    ternary = validate_form(ctx, ternary_entries)
    return QuaternionOrder(
        alg=alg,
        basis=tuple(bas),
        gram=gram,
        disc=disc,
        reduced_disc_norm=root,
        trace_zero_basis=tuple(tz),
        ternary=ternary,
    )


def _euclid_div(ctx, a: FieldElement, b: FieldElement) -> FieldElement:
    """Rounded division a/b in O_F; remainder has norm < |nr(b)| for the
    norm-Euclidean catalog fields."""
    q = a / b
    return ctx.elem(*[Fraction(round(c)) for c in q.coords])


def _trace_zero_basis(ctx, bas):
    """O_F-basis of the trace-zero sublattice via Euclidean column reduction."""
    t = [g.reduced_trace() for g in bas]
    cols = [[ctx.one if i == m else ctx.zero for i in range(4)] for m in range(4)]
    # reduce the row t by unimodular column operations to (g, 0, 0, 0)
    for _ in range(200):
        nz = [m for m in range(4) if not t[m].is_zero()]
        if len(nz) <= 1:
            break
        nz.sort(key=lambda m: abs(t[m].norm()))
        p, s = nz[0], nz[1]
        q = _euclid_div(ctx, t[s], t[p])
        t[s] = t[s] - q * t[p]
        cols[s] = [cols[s][i] - q * cols[p][i] for i in range(4)]
        if not t[s].is_zero() and abs(t[s].norm()) >= abs(
            (t[s] + q * t[p]).norm()
        ) and q.is_zero():
            raise OrderError("euclidean reduction stalled (non-euclidean field?)")
    else:
        raise OrderError("trace-zero reduction did not terminate")
    nz = [m for m in range(4) if not t[m].is_zero()]
    if len(nz) != 1:
        raise OrderError("degenerate trace functional")
    kernel_cols = [cols[m] for m in range(4) if m != nz[0]]
    out = []
    for col in kernel_cols:
        acc = None
        for c, g in zip(col, bas):
            term = g.scale(c)
            acc = term if acc is None else acc + term
        out.append(acc)
    assert all(z.reduced_trace().is_zero() for z in out)
    return out


# ---------------------------------------------------------------------------
# split of the norm form along 1 + trace-zero part


@dataclass(frozen=True)
class NormFormSplit:
    order_form: QuadraticForm  # norm form Gram of the order itself
    split_form: QuadraticForm  # diag(2) + reduced ternary on O_F*1 + trace-zero
    ternary: QuadraticForm  # the reduced ternary part
    basis: tuple  # (1, w1, w2, w3) QuatElements
    index: int  # [order : O_F*1 + trace-zero sublattice]


def norm_form_split(order: QuaternionOrder) -> NormFormSplit:
    """Split the norm form as y_0^2 + ternary on the sublattice O_F + O^0.

    The ternary part is handed through quasi-diagonal reduction, so the
    returned basis realizes diag(2) + (reduced ternary) exactly.  The
    sublattice has finite index in the order (1 for the Lipschitz shape,
    2 whenever the order contains odd-trace elements); the index is
    returned and the determinant identity det(split) = nr-disc * index^2
    is verified exactly.
    """
    from .forms import reduce_form

    ctx = order.ctx
    one = QuatElement(order.alg, (ctx.one, ctx.zero, ctx.zero, ctx.zero))
    red = reduce_form(order.ternary)
    U = red.transform
    tz = []
    for j in range(3):
        acc = None
        for i in range(3):
            term = order.trace_zero_basis[i].scale(U[i][j])
            acc = term if acc is None else acc + term
        tz.append(acc)
    basis = (one,) + tuple(tz)
    entries = [[(x * y.conj()).reduced_trace() for y in basis] for x in basis]
    split = validate_form(ctx, entries)
    for k in range(1, 4):
        if not entries[0][k].is_zero():
            raise AssertionError("trace-zero part not orthogonal to 1")
    ternary = validate_form(ctx, [row[1:] for row in entries[1:]])
    if ternary.gram != red.form.gram:
        raise AssertionError("reduced ternary mismatch in split basis")
    ratio = abs(split.det.norm()) / abs(order.disc.norm())
    idx = math.isqrt(int(ratio))
    if Fraction(idx * idx) != ratio:
        raise AssertionError("index^2 identity failed")
    return NormFormSplit(
        order_form=order.gram,
        split_form=split,
        ternary=ternary,
        basis=basis,
        index=idx,
    )


# ---------------------------------------------------------------------------
# built-in maximal orders and the Eichler factory over Q

# (a, b) and maximal order bases for the algebra ramified at {p, infinity};
# each basis is verified by order_from_basis at construction time.
_MAXIMAL_TABLE = {
    2: ((-1, -1), [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), ("1/2", "1/2", "1/2", "1/2")]),
    3: ((-1, -3), [(1, 0, 0, 0), (0, 1, 0, 0), (0, "1/2", "1/2", 0), ("1/2", 0, 0, "1/2")]),
    5: ((-2, -5), [(1, 0, 0, 0), (0, 1, 0, 0), ("1/2", "1/2", "1/2", 0), (0, "1/4", "1/2", "1/4")]),
    7: ((-1, -7), [(1, 0, 0, 0), (0, 1, 0, 0), (0, "1/2", "1/2", 0), ("1/2", 0, 0, "1/2")]),
    13: ((-2, -13), [(1, 0, 0, 0), (0, 1, 0, 0), ("1/2", "1/2", "1/2", 0), (0, "1/4", "1/2", "1/4")]),
}


def _maximal_order(p: int) -> QuaternionOrder:
    if p not in _MAXIMAL_TABLE:
        raise OrderError(f"no maximal order table entry for p={p}")
    ctx = field_context("Q")
    (a, b), basis = _MAXIMAL_TABLE[p]
    alg = QuaternionAlgebra(ctx, ctx.elem(a), ctx.elem(b))
    order = order_from_basis(alg, basis)
    if order.reduced_disc_norm != p:
        raise OrderError(f"table entry for p={p} has wrong reduced discriminant")
    return order


def _mod_matrix(order, z: QuatElement, ell: int):
    """Coordinates of z in the order basis, reduced mod ell."""
    B = [[order.basis[k].coords[r] for k in range(4)] for r in range(4)]
    Binv = mat_inverse(order.ctx, B)
    co = _solve_in_basis(order.alg, Binv, z)
    return tuple(int(c.coords[0]) % ell for c in co)


def _find_rank_one_idempotent(order, ell: int):
    """First rank-one idempotent of O/ell in lexicographic coordinate order."""
    ctx = order.ctx
    for co in iproduct(range(ell), repeat=4):
        if all(c == 0 for c in co):
            continue
        e = order.element([ctx.elem(c) for c in co])
        tr = int(e.reduced_trace().coords[0]) % ell
        nr = int(e.reduced_norm().coords[0]) % ell
        if tr != 1 % ell or nr != 0:
            continue
        sq = _mod_matrix(order, e * e, ell)
        if sq == co:
            return co
    raise OrderError(f"no idempotent found mod {ell}")


def _eichler_step(order: QuaternionOrder, ell: int) -> QuaternionOrder:
    """Impose the lower-left congruence condition mod one prime ell."""
    ctx = order.ctx
    e_co = _find_rank_one_idempotent(order, ell)
    e = order.element([ctx.elem(c) for c in e_co])
    one = QuatElement(order.alg, (ctx.one, ctx.zero, ctx.zero, ctx.zero))
    f = one - e
    # linear functional x -> (1-e) * x * e mod ell; its kernel is the order
    vals = []
    for g in order.basis:
        m = _mod_matrix(order, f * g * e, ell)
        vals.append(m)
    # the image is one-dimensional: find a pivot coordinate
    pivot = None
    for coord in range(4):
        col = [v[coord] for v in vals]
        nz = [m for m, c in enumerate(col) if c % ell]
        if nz:
            pivot = (coord, nz[0])
            break
    if pivot is None:
        raise OrderError("congruence condition is trivial (split failure)")
    coord, m0 = pivot
    a0 = vals[m0][coord]
    inv_a0 = pow(a0, -1, ell)
    new_basis = []
    for m in range(4):
        if m == m0:
            new_basis.append(order.basis[m0].scale(ctx.elem(ell)))
        else:
            lam = (vals[m][coord] * inv_a0) % ell
            new_basis.append(order.basis[m] - order.basis[m0].scale(ctx.elem(lam)))
    return order_from_basis(order.alg, new_basis)


def builtin_eichler_order(p: int, N: int) -> QuaternionOrder:
    """Eichler order of squarefree level N in the algebra ramified at {p, oo}.

    The congruence condition is imposed prime by prime through an exact
    idempotent of the split residue algebra; the reduced discriminant of
    the result is checked to equal p*N.
    """
    if N < 1:
        raise OrderError("level must be positive")
    if math.gcd(p, N) != 1:
        raise OrderError("level must be coprime to the ramified prime")
    order = _maximal_order(p)
    n = N
    ell = 2
    seen = []
    while n > 1:
        if n % ell == 0:
            n //= ell
            if n % ell == 0:
                raise OrderError("level must be squarefree")
            seen.append(ell)
        ell += 1
    for ell in seen:
        order = _eichler_step(order, ell)
    if order.reduced_disc_norm != p * N:
        raise AssertionError("Eichler construction produced wrong discriminant")
    return order


def class_number_estimate(order: QuaternionOrder) -> Fraction:
    """Mass-formula style size estimate for the left ideal class number."""
    pn = order.reduced_disc_norm
    est = Fraction(pn)
    # ramified primes are those dividing disc* but whose square divides disc
    # locally; for the built-ins over Q this is the table prime
    for (q, _e) in _factor_int(pn):
        if _is_ramified_in(order, q):
            est *= Fraction(q - 1, q)
        else:
            est /= Fraction(q - 1, q)
    return est


def _factor_int(n):
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
    return out


def _is_ramified_in(order, q: int) -> bool:
    """Whether the rational prime q ramifies in the algebra (Hilbert symbol
    over Q for (a, b), odd q)."""
    a = int(order.alg.a.coords[0] * 1)
    b = int(order.alg.b.coords[0] * 1)
    return not _hilbert_split(a, b, q)


def _hilbert_split(a, b, p) -> bool:
    """True when (a,b)_p = +1, i.e. the algebra splits at p."""

    def val(x):
        v = 0
        while x % p == 0:
            x //= p
            v += 1
        return v, x

    if p == 2:
        # use the standard formula
        alpha, u = val(a)
        beta, v = val(b)
        eps = lambda x: (x - 1) // 2 % 2
        omega = lambda x: (x * x - 1) // 8 % 2
        exp = eps(u) * eps(v) + alpha * omega(v) + beta * omega(u)
        return exp % 2 == 0
    alpha, u = val(a)
    beta, v = val(b)
    leg = lambda x: pow(x % p, (p - 1) // 2, p)
    sgn = 1
    if alpha % 2 and beta % 2:
        base = (-u * v) % p
    elif alpha % 2:
        base = v % p
    elif beta % 2:
        base = u % p
    else:
        return True
    return leg(base) == 1


def order_from_json(doc: dict) -> QuaternionOrder:
    ctx = field_context(doc["field"])
    alg = QuaternionAlgebra(
        ctx, elem_from_json(ctx, doc["a"]), elem_from_json(ctx, doc["b"])
    )
    return order_from_basis(alg, doc["basis"])


def order_to_json(order: QuaternionOrder) -> dict:
    from .fields import elem_to_json

    return {
        "field": order.ctx.tag,
        "a": elem_to_json(order.alg.a),
        "b": elem_to_json(order.alg.b),
        "basis": [[elem_to_json(c) for c in g.coords] for g in order.basis],
    }
