"""Exact arithmetic over Q and real quadratic fields Q(sqrt(D)).

Elements are coordinate vectors over the integral basis, (1) for Q and
(1, w) with w = sqrt(D) or (1+sqrt(D))/2 for squarefree D.  Ring
operations, norms, traces and sign decisions at either real embedding are
exact rational arithmetic.  Floats appear only as reported embeddings and
as loop brackets, and every bracket is followed by an exact membership
test, so no pass/fail decision depends on rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

TOL = 1e-9


class FieldError(ValueError):
    pass


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)  # exact binary expansion
    if isinstance(x, str):
        return Fraction(x)
    raise FieldError(f"cannot coerce {x!r} to a rational number")


def primes_upto(n: int) -> list[int]:
    """All rational primes <= n by sieve."""
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
    return [i for i in range(2, n + 1) if sieve[i]]


def _is_squarefree(n: int) -> bool:
    if n % 4 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        d += 2
    return True


class FieldContext:
    """A fixed totally real field of degree 1 or 2 with exact arithmetic.

    Attributes of note:
      degree       -- 1 or 2
      disc         -- field discriminant (1 for Q)
      omega        -- embeddings of the second basis vector (degree 2)
      fundamental_unit, tp_unit -- FieldElement; tp_unit is the totally
                      positive generator of U+ with sigma_1 value > 1
      cone_box     -- half-open box [-1/2, 1/2) in the normalized log
                      coordinate; 1 and all rational integers sit at 0
    """

    def __init__(self, tag: str, D: int | None):
        self.tag = tag
        if D is None:
            self.degree = 1
            self.D = None
            self.case = "rat"
            self.disc = 1
            self.omega = ()
        else:
            if D < 2 or not _is_squarefree(D):
                raise FieldError(f"D={D} must be squarefree and >= 2")
            self.degree = 2
            self.D = D
            s = math.sqrt(D)
            if D % 4 == 1:
                self.case = "half"
                self.disc = D
                self.omega = ((1.0 + s) / 2.0, (1.0 - s) / 2.0)
                self._omsq = ((D - 1) // 4, 1)  # w^2 = c0 + c1*w
            else:
                self.case = "sqrt"
                self.disc = 4 * D
                self.omega = (s, -s)
                self._omsq = (D, 0)
        self.cone_box = (Fraction(-1, 2), Fraction(1, 2))
        self.fundamental_unit = None
        self.tp_unit = None
        self._log_eps = 0.0
        if self.degree == 2:
            self._init_units()

    # -- raw coordinate arithmetic -------------------------------------

    def zero_coords(self):
        return (Fraction(0),) * self.degree

    def one_coords(self):
        return (Fraction(1),) + (Fraction(0),) * (self.degree - 1)

    def add_coords(self, x, y):
        return tuple(a + b for a, b in zip(x, y))

    def sub_coords(self, x, y):
        return tuple(a - b for a, b in zip(x, y))

    def neg_coords(self, x):
        return tuple(-a for a in x)

    def mul_coords(self, x, y):
        if self.degree == 1:
            return (x[0] * y[0],)
        a1, b1 = x
        a2, b2 = y
        c0, c1 = self._omsq
        bb = b1 * b2
        return (a1 * a2 + bb * c0, a1 * b2 + b1 * a2 + bb * c1)

    def conj_coords(self, x):
        if self.degree == 1:
            return x
        a, b = x
        if self.case == "sqrt":
            return (a, -b)
        return (a + b, -b)  # conjugate of w is 1 - w

    def norm_coords(self, x) -> Fraction:
        if self.degree == 1:
            return Fraction(x[0])
        a, b = x
        if self.case == "sqrt":
            return Fraction(a * a - self.D * b * b)
        return Fraction(a * a + a * b - b * b * ((self.D - 1) // 4))

    def trace_coords(self, x) -> Fraction:
        if self.degree == 1:
            return Fraction(x[0])
        a, b = x
        if self.case == "sqrt":
            return Fraction(2 * a)
        return Fraction(2 * a + b)

    def inv_coords(self, x):
        n = self.norm_coords(x)
        if n == 0:
            raise ZeroDivisionError("division by zero field element")
        if self.degree == 1:
            return (1 / n,)
        return tuple(c / n for c in self.conj_coords(x))

    def embed_coords(self, x, j: int) -> float:
        if self.degree == 1:
            return float(x[0])
        return float(x[0]) + float(x[1]) * self.omega[j]

    def sign_at(self, x, j: int) -> int:
        """Exact sign of the j-th real embedding of x."""
        if self.degree == 1:
            v = x[0]
            return (v > 0) - (v < 0)
        a, b = x
        # rewrite as p + q*sqrt(D) at sigma_j
        if self.case == "sqrt":
            p, q = Fraction(a), Fraction(b)
        else:
            p, q = Fraction(a) + Fraction(b, 2), Fraction(b, 2)
        if j == 1:
            q = -q
        if q == 0:
            return (p > 0) - (p < 0)
        if p == 0:
            return 1 if q > 0 else -1
        if p > 0 and q > 0:
            return 1
        if p < 0 and q < 0:
            return -1
        lhs = p * p
        rhs = q * q * self.D
        if p > 0:  # q < 0
            return 1 if lhs > rhs else -1 if lhs < rhs else 0
        return -1 if lhs > rhs else 1 if lhs < rhs else 0

    def is_integral_coords(self, x) -> bool:
        return all(Fraction(c).denominator == 1 for c in x)

    # -- units ----------------------------------------------------------

    def _init_units(self):
        known = {2: (1, 1), 5: (0, 1)}  # hard-coded catalog entries
        if self.D in known:
            u = FieldElement(self, tuple(Fraction(c) for c in known[self.D]))
            if abs(u.norm()) != 1:
                raise FieldError("catalog fundamental unit failed norm check")
        else:
            u = self._fundamental_unit_pell()
        u = self._normalize_unit(u)
        self.fundamental_unit = u
        if u.norm() == -1:
            eps = u * u
        elif u.is_totally_positive():
            eps = u
        else:
            eps = -u
        if eps.embed()[0] < 1.0:
            eps = eps.inverse()
        assert eps.is_totally_positive() and eps.norm() == 1
        self.tp_unit = eps
        self._log_eps = math.log(eps.embed()[0])

    def _normalize_unit(self, u):
        cands = [u, -u, u.inverse(), -u.inverse()]
        for c in cands:
            if self.sign_at(c.coords, 0) > 0 and c.embed()[0] > 1.0 + 1e-12:
                return c
        raise FieldError("could not normalize fundamental unit")

    def _fundamental_unit_pell(self):
        """Fundamental unit via the continued fraction of sqrt(D).

        For D = 1 mod 4 the unit of Z[sqrt(D)] may be a cube in O_F; the
        cube root is recovered exactly from its integer trace.
        """
        D = self.D
        a0 = math.isqrt(D)
        m, dd, a = 0, 1, a0
        p_prev, p_cur = 1, a0
        q_prev, q_cur = 0, 1
        sol = None
        for _ in range(10 ** 6):
            t = p_cur * p_cur - D * q_cur * q_cur
            if t in (1, -1):
                sol = (p_cur, q_cur)
                break
            m = dd * a - m
            dd = (D - m * m) // dd
            a = (a0 + m) // dd
            p_prev, p_cur = p_cur, a * p_cur + p_prev
            q_prev, q_cur = q_cur, a * q_cur + q_prev
        if sol is None:
            raise FieldError(f"Pell solver did not converge for D={D}")
        x, y = sol
        if self.case == "sqrt":
            u0 = FieldElement(self, (Fraction(x), Fraction(y)))
        else:
            # x + y*sqrt(D) = (x - y) + 2y*w
            u0 = FieldElement(self, (Fraction(x - y), Fraction(2 * y)))
            n0 = int(u0.norm())
            v1 = abs(u0.embed()[0]) ** (1.0 / 3.0)
            for tc in {round(v1 + n0 / v1), round(v1 - n0 / v1)}:
                for t in (tc - 1, tc, tc + 1):
                    den = Fraction(t * t - n0)
                    if den == 0:
                        continue
                    v = (u0 + t * n0) * (1 / den)
                    if v.is_integral() and v * v * v == u0:
                        return v
        return u0

    # -- misc -----------------------------------------------------------

    def elem(self, *coords) -> "FieldElement":
        if len(coords) == 1 and isinstance(coords[0], (list, tuple)):
            coords = tuple(coords[0])
        coords = tuple(_as_fraction(c) for c in coords)
        if len(coords) != self.degree:
            if len(coords) == 1 and self.degree == 2:
                coords = (coords[0], Fraction(0))
            else:
                raise FieldError(
                    f"expected {self.degree} coordinates, got {len(coords)}"
                )
        return FieldElement(self, coords)

    @property
    def one(self):
        return FieldElement(self, self.one_coords())

    @property
    def zero(self):
        return FieldElement(self, self.zero_coords())

    def __eq__(self, other):
        return isinstance(other, FieldContext) and other.tag == self.tag

    def __hash__(self):
        return hash(self.tag)

    def __repr__(self):
        return f"FieldContext({self.tag!r})"


@dataclass(frozen=True, eq=False)
class FieldElement:
    ctx: FieldContext
    coords: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "coords", tuple(_as_fraction(c) for c in self.coords)
        )

    # arithmetic

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.ctx.tag != self.ctx.tag:
                raise FieldError("mixed field contexts")
            return other.coords
        q = _as_fraction(other)
        return (q,) + (Fraction(0),) * (self.ctx.degree - 1)

    def __add__(self, other):
        return FieldElement(self.ctx, self.ctx.add_coords(self.coords, self._coerce(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.ctx, self.ctx.sub_coords(self.coords, self._coerce(other)))

    def __rsub__(self, other):
        return FieldElement(self.ctx, self.ctx.sub_coords(self._coerce(other), self.coords))

    def __neg__(self):
        return FieldElement(self.ctx, self.ctx.neg_coords(self.coords))

    def __mul__(self, other):
        return FieldElement(self.ctx, self.ctx.mul_coords(self.coords, self._coerce(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        oc = self._coerce(other)
        inv = self.ctx.inv_coords(oc)
        return FieldElement(self.ctx, self.ctx.mul_coords(self.coords, inv))

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        r = FieldElement(self.ctx, self.ctx.one_coords())
        b = self
        while k:
            if k & 1:
                r = r * b
            b = b * b
            k >>= 1
        return r

    def inverse(self):
        return FieldElement(self.ctx, self.ctx.inv_coords(self.coords))

    def conj(self):
        return FieldElement(self.ctx, self.ctx.conj_coords(self.coords))

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.ctx.tag == other.ctx.tag and self.coords == other.coords
        try:
            return self.coords == self._coerce(other)
        except FieldError:
            return NotImplemented

    def __hash__(self):
        return hash((self.ctx.tag, self.coords))

    # queries

    def norm(self) -> Fraction:
        return self.ctx.norm_coords(self.coords)

    def trace(self) -> Fraction:
        return self.ctx.trace_coords(self.coords)

    def embed(self) -> tuple:
        return tuple(
            self.ctx.embed_coords(self.coords, j) for j in range(self.ctx.degree)
        )

    def sign_at(self, j: int) -> int:
        return self.ctx.sign_at(self.coords, j)

    def is_integral(self) -> bool:
        return self.ctx.is_integral_coords(self.coords)

    def is_totally_positive(self) -> bool:
        return all(self.sign_at(j) > 0 for j in range(self.ctx.degree))

    def is_unit(self) -> bool:
        return self.is_integral() and abs(self.norm()) == 1

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def sort_key(self):
        return tuple(self.coords)

    def __repr__(self):
        if self.ctx.degree == 1:
            return f"{self.coords[0]}"
        a, b = self.coords
        return f"({a} + {b}*w)@{self.ctx.tag}"


@lru_cache(maxsize=None)
def field_context(tag: str) -> FieldContext:
    """Catalog lookup: Q, Qsqrt2, Qsqrt5 or QsqrtD:D=<n>."""
    if tag == "Q":
        return FieldContext(tag, None)
    if tag == "Qsqrt2":
        return FieldContext(tag, 2)
    if tag == "Qsqrt5":
        return FieldContext(tag, 5)
    if tag.startswith("QsqrtD:D="):
        return FieldContext(tag, int(tag.split("=", 1)[1]))
    raise FieldError(f"unknown field tag {tag!r}")


def evaluate(x: FieldElement):
    """Return (embeddings, exact norm) and check they are consistent."""
    emb = x.embed()
    nrm = x.norm()
    prod = 1.0
    for v in emb:
        prod *= v
    if abs(prod - float(nrm)) > TOL * max(1.0, abs(float(nrm))):
        raise AssertionError("embedding/norm mismatch beyond tolerance")
    return emb, nrm


# ---------------------------------------------------------------------------
# box enumerations


def _abs_leq_at(ctx, coords, bound: Fraction, j: int) -> bool:
    """Exact test |sigma_j(x)| <= bound for rational bound."""
    b = (bound,) + (Fraction(0),) * (ctx.degree - 1)
    return (
        ctx.sign_at(ctx.sub_coords(b, coords), j) >= 0
        and ctx.sign_at(ctx.add_coords(b, coords), j) >= 0
    )


def units_in_box(ctx: FieldContext, A) -> list[FieldElement]:
    """All units u with |sigma_j(u)| <= A_j for every embedding."""
    A = [_as_fraction(a) for a in A]
    if len(A) != ctx.degree or any(a <= 0 for a in A):
        raise FieldError("need one positive bound per embedding")
    out = []
    if ctx.degree == 1:
        if A[0] >= 1:
            out = [ctx.elem(1), ctx.elem(-1)]
        return out
    u = ctx.fundamental_unit
    t = abs(u.embed()[0])
    k_hi = int(math.log(float(A[0]) + 1.0) / math.log(t)) + 2
    k_lo = -(int(math.log(float(A[1]) + 1.0) / math.log(t)) + 2)
    for k in range(k_lo, k_hi + 1):
        cand = u ** k
        if all(_abs_leq_at(ctx, cand.coords, A[j], j) for j in range(2)):
            out.append(cand)
            out.append(-cand)
    out.sort(key=lambda e: e.sort_key())
    return out


def units_box_bound(ctx: FieldContext, A) -> float:
    prod = 1.0
    for a in A:
        prod *= float(a)
    return math.log(2.0 + prod) ** (ctx.degree - 1)


def integers_in_box(ctx: FieldContext, A) -> list[FieldElement]:
    """All nonzero x in O_F with |sigma_j(x)| <= A_j for every j."""
    A = [_as_fraction(a) for a in A]
    if len(A) != ctx.degree or any(a <= 0 for a in A):
        raise FieldError("need one positive bound per embedding")
    out = []
    if ctx.degree == 1:
        m = math.floor(A[0])
        for a in range(-m, m + 1):
            if a != 0:
                out.append(ctx.elem(a))
        out.sort(key=lambda e: e.sort_key())
        return out
    A1, A2 = float(A[0]), float(A[1])
    w1, w2 = ctx.omega
    span = w1 - w2
    bmax = int((A1 + A2) / span) + 2
    for b in range(-bmax, bmax + 1):
        lo = max(-A1 - b * w1, -A2 - b * w2)
        hi = min(A1 - b * w1, A2 - b * w2)
        if lo > hi + 1.0:
            continue
        for a in range(math.floor(lo) - 1, math.ceil(hi) + 2):
            if a == 0 and b == 0:
                continue
            coords = (Fraction(a), Fraction(b))
            if all(_abs_leq_at(ctx, coords, A[j], j) for j in range(2)):
                out.append(FieldElement(ctx, coords))
    out.sort(key=lambda e: e.sort_key())
    return out


# ---------------------------------------------------------------------------
# fundamental cone


def cone_coordinate(x: FieldElement) -> float:
    """Position of a totally positive x in the unit-direction log coordinate."""
    ctx = x.ctx
    if ctx.degree == 1:
        return 0.0
    e1, e2 = x.embed()
    return (math.log(e1) - math.log(e2)) / (2.0 * ctx._log_eps)


def cone_reduce(x: FieldElement):
    """Translate a totally positive x into the fundamental cone.

    Returns (u, y) with y = u*x, u in U+ and the normalized log coordinate
    of y inside [-1/2, 1/2).  The box membership is decided exactly, so the
    representative is canonical even on the boundary.
    """
    ctx = x.ctx
    if not x.is_totally_positive():
        raise FieldError("cone_reduce requires a totally positive element")
    if ctx.degree == 1:
        return ctx.one, x
    eps = ctx.tp_unit
    c = cone_coordinate(x)
    k = math.floor(c + 0.5)
    r = x / x.conj()  # totally positive; sigma_1 value e1/e2
    for _ in range(4):
        lo_ok = (r - eps ** (2 * k - 1)).sign_at(0) >= 0
        hi_ok = (eps ** (2 * k + 1) - r).sign_at(0) > 0
        if lo_ok and hi_ok:
            break
        k += -1 if not lo_ok else 1
    else:
        raise AssertionError("cone reduction did not stabilize")
    u = eps ** (-k)
    return u, u * x


# ---------------------------------------------------------------------------
# principal prime generators


def _legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def _split_type(ctx: FieldContext, p: int) -> str:
    D = ctx.D
    if p == 2:
        if ctx.case == "sqrt":
            return "ramified"
        return "split" if D % 8 == 1 else "inert"
    if D % p == 0:
        return "ramified"
    return "split" if _legendre(D, p) == 1 else "inert"


def _generators_of_norm(ctx: FieldContext, p: int) -> list[FieldElement]:
    """Cone representatives of totally positive generators of norm p."""
    eps1 = ctx.tp_unit.embed()[0]
    B = Fraction(math.sqrt(p * eps1) * (1.0 + 1e-9))
    seen = {}
    for x in integers_in_box(ctx, (B, B)):
        if ctx.norm_coords(x.coords) != p:
            continue
        if x.sign_at(0) < 0:
            x = -x
        if not x.is_totally_positive():
            continue
        _, y = cone_reduce(x)
        seen[y.coords] = y
    gens = list(seen.values())
    gens.sort(key=lambda e: (e.embed()[0], e.sort_key()))
    return gens


def principal_primes_in_cone(
    ctx: FieldContext, nmin: int, nmax: int, avoid=()
) -> list[FieldElement]:
    """One cone generator per principal prime ideal with norm in [nmin, nmax].

    Ideals sharing a factor with any integer in `avoid` are excluded.  Over
    a quadratic field the list carries one generator per ideal, so split
    primes contribute two entries.  Deterministic order: by residue norm,
    then lexicographically in the first embedding.
    """
    if nmin > nmax:
        raise FieldError("empty norm window")
    out = []

    def excluded(nrm: int) -> bool:
        return any(math.gcd(nrm, int(a)) > 1 for a in avoid)

    if ctx.degree == 1:
        for p in primes_upto(nmax):
            if p >= nmin and not excluded(p):
                out.append(ctx.elem(p))
        return out
    entries = []
    for p in primes_upto(nmax):
        typ = _split_type(ctx, p)
        if typ in ("split", "ramified") and nmin <= p <= nmax and not excluded(p):
            for g in _generators_of_norm(ctx, p):
                entries.append((p, g))
        if typ == "inert" and nmin <= p * p <= nmax and not excluded(p * p):
            entries.append((p * p, ctx.elem(p)))
    entries.sort(key=lambda t: (t[0], t[1].embed()[0], t[1].sort_key()))
    return [g for _, g in entries]


# ---------------------------------------------------------------------------
# JSON coordinate helpers


def elem_from_json(ctx: FieldContext, value) -> FieldElement:
    """Parse an element from an int, a rational string, or a coordinate list."""
    if isinstance(value, (int, float, str)):
        return ctx.elem(_as_fraction(value))
    if isinstance(value, (list, tuple)):
        return ctx.elem(*[_as_fraction(v) for v in value])
    raise FieldError(f"cannot parse field element from {value!r}")


def elem_to_json(x: FieldElement):
    return [str(c) for c in x.coords]
