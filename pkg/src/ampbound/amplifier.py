"""Amplifier sets, the geometric-side sum, and exact exponent optimization.

The four generator families are drawn from principal prime ideals inside
the fundamental cone with norm windows [L, 2L] (linear), [L^2, 4L^2]
(single primes), ell_1 * ell_2^2 products and squares of the linear
window.  The geometric side weighs representation vectors of the split
norm form by matrix coefficients, by the spherical character, or not at
all; every exponent computation downstream is exact rational arithmetic.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .counting import enumerate_representations
from .fields import FieldContext, FieldElement, cone_reduce, principal_primes_in_cone
from .forms import QuadraticForm
from .coeffs import matrix_coeff, so4_character


class AmplifierError(ValueError):
    pass


# ---------------------------------------------------------------------------
# amplifier sets


@dataclass(frozen=True)
class AmplifierSets:
    L: float
    exclusions: tuple
    linear: tuple  # primes with norm in [L, 2L]
    quadratic_window: tuple  # primes with norm in [L^2, 4L^2]
    products: tuple  # ell_1 * ell_2^2 over the linear window
    squares: tuple  # ell^2 over the linear window

    def by_index(self, i: int):
        return (self.linear, self.quadratic_window, self.products, self.squares)[i - 1]

    def sizes(self):
        return {
            "L1": len(self.linear),
            "L2": len(self.quadratic_window),
            "L3": len(self.products),
            "L4": len(self.squares),
        }


def build_sets(ctx: FieldContext, L: float, exclusions=()) -> AmplifierSets:
    """Construct the four amplifier families at parameter L >= 1."""
    if L < 1:
        raise AmplifierError("need L >= 1")
    excl = tuple(sorted(int(a) for a in exclusions))
    lin = principal_primes_in_cone(ctx, math.ceil(L), math.floor(2 * L), excl)
    quad = principal_primes_in_cone(
        ctx, math.ceil(L * L), math.floor(4 * L * L), excl
    )

    def cone_rep(x):
        _, y = cone_reduce(x)
        return y

    prods = sorted(
        {cone_rep(l1 * l2 * l2) for l1 in lin for l2 in lin},
        key=lambda e: (abs(e.norm()), e.sort_key()),
    )
    sqs = sorted(
        {cone_rep(l * l) for l in lin}, key=lambda e: (abs(e.norm()), e.sort_key())
    )
    for fam in (prods, sqs):
        for x in fam:
            assert x.is_totally_positive()
    return AmplifierSets(
        L=float(L),
        exclusions=excl,
        linear=tuple(lin),
        quadratic_window=tuple(quad),
        products=tuple(prods),
        squares=tuple(sqs),
    )


# ---------------------------------------------------------------------------
# geometric side


@dataclass
class GeometricReport:
    mode: str
    L: float
    m_tuple: tuple
    l_tuple: tuple
    set_sizes: dict
    per_ell: list  # dicts: i, ell, norm, count, weighted
    S: dict  # i -> weighted sum
    bound: float
    sup_norm_proxy: float
    wall_ms: float

    def to_json(self, include_timing: bool = True) -> dict:
        out = {
            "mode": self.mode,
            "L": self.L,
            "m": list(self.m_tuple),
            "l": list(self.l_tuple),
            "set_sizes": self.set_sizes,
            "per_ell": self.per_ell,
            "S": {str(k): v for k, v in self.S.items()},
            "bound": self.bound,
            "sup_norm_proxy": self.sup_norm_proxy,
        }
        if include_timing:
            out["wall_ms"] = self.wall_ms
        return out


def _weight_values(form, rows, directions, m_tuple, l_tuple, ell, mode):
    """Weights w(t(gamma)) for each representation vector of the split form."""
    if mode == "trivial":
        return np.ones(len(rows))
    ctx = form.ctx
    d = ctx.degree
    total = np.ones(len(rows))
    ell_emb = ell.embed()
    for j in range(d):
        if d == 1:
            emb = rows.astype(np.float64)
        else:
            emb = rows[:, 0::2].astype(np.float64) + rows[:, 1::2].astype(
                np.float64
            ) * ctx.omega[j]
        y0 = emb[:, 0]
        ytil = emb[:, 1:]
        tern = form.embedded_gram(j)[1:, 1:]
        x = np.asarray(directions[j], dtype=float)
        if abs(float(x @ tern @ x) / 2.0 - 1.0) > 1e-9:
            raise AmplifierError(f"direction {j} not unit-normalized")
        bil = (ytil @ tern @ x) / 2.0
        t = -1.0 + 2.0 * (y0 ** 2 + bil ** 2) / float(ell_emb[j])
        t = np.clip(t, -1.0, 1.0)
        if mode == "matrix":
            total *= np.asarray(matrix_coeff(m_tuple[j], l_tuple[j], t))
        elif mode == "character":
            total *= np.abs(np.asarray(so4_character(m_tuple[j], t)))
        else:
            raise AmplifierError(f"unknown coefficient mode {mode!r}")
    return total


def assemble_bound(m_abs: int, L: float, S: dict, mode: str) -> float:
    """B = |m| (or |m|^2 in character mode) * (1/L + sum_i L^(-2-i/2) S_i)."""
    pref = float(m_abs * m_abs if mode == "character" else m_abs)
    acc = 1.0 / L
    for i in (1, 2, 3, 4):
        acc += L ** (-2 - i / 2.0) * S.get(i, 0.0)
    return pref * acc


def geometric_side(
    split_form: QuadraticForm,
    directions,
    m_tuple,
    l_tuple,
    L: float,
    mode: str = "matrix",
    exclusions=(),
    sets: AmplifierSets | None = None,
) -> GeometricReport:
    """Weighted count of norm-form vectors over the four amplifier families.

    split_form must be of the split shape y_0^2 + ternary (first basis
    vector of reduced norm 1, orthogonal to the rest).
    """
    t0 = time.perf_counter()
    ctx = split_form.ctx
    if split_form.n != 4 or not all(
        split_form.gram[0][k].is_zero() for k in range(1, 4)
    ) or split_form.gram[0][0] != ctx.elem(2):
        raise AmplifierError("form is not of split shape y_0^2 + ternary")
    d = ctx.degree
    if len(m_tuple) != d or len(l_tuple) != d or len(directions) != d:
        raise AmplifierError("need one m, l and direction per embedding")
    for m, l in zip(m_tuple, l_tuple):
        if abs(l) > m:
            raise AmplifierError("weights must satisfy |l| <= m")
    if sets is None:
        sets = build_sets(ctx, L, exclusions)
    m_abs = 1
    for m in m_tuple:
        m_abs *= m + 1
    per_ell = []
    S = {}
    for i in (1, 2, 3, 4):
        acc = 0.0
        for ell in sets.by_index(i):
            rows = enumerate_representations(split_form, ell)
            w = _weight_values(
                split_form, rows, directions, m_tuple, l_tuple, ell, mode
            )
            ws = float(w.sum())
            acc += ws
            per_ell.append(
                {
                    "i": i,
                    "ell": [str(c) for c in ell.coords],
                    "norm": float(abs(ell.norm())),
                    "count": int(len(rows)),
                    "weighted": ws,
                }
            )
        S[i] = acc
    bound = assemble_bound(m_abs, sets.L, S, mode)
    return GeometricReport(
        mode=mode,
        L=sets.L,
        m_tuple=tuple(m_tuple),
        l_tuple=tuple(l_tuple),
        set_sizes=sets.sizes(),
        per_ell=per_ell,
        S=S,
        bound=bound,
        sup_norm_proxy=math.sqrt(bound),
        wall_ms=(time.perf_counter() - t0) * 1000.0,
    )


# ---------------------------------------------------------------------------
# exact exponent optimization


def balance_exponents(terms):
    """Minimize max_i (a_i t + b_i) over t >= 0, exactly.

    Each term is (a_i, b_i) meaning L^{a_i} V^{b_i} with L = V^t; the
    optimum balances the active terms.  Raises when the maximum decreases
    without bound (every slope negative).
    """
    terms = [(Fraction(a), Fraction(b)) for a, b in terms]
    if not terms:
        raise AmplifierError("need at least one term")
    if all(a < 0 for a, _ in terms):
        raise AmplifierError("unbounded below: every term decays in L")

    def value(t):
        return max(a * t + b for a, b in terms)

    cands = {Fraction(0)}
    for i in range(len(terms)):
        for j in range(i + 1, len(terms)):
            a1, b1 = terms[i]
            a2, b2 = terms[j]
            if a1 != a2:
                t = (b2 - b1) / (a1 - a2)
                if t >= 0:
                    cands.add(t)
    best_t = min(cands)
    best_v = value(best_t)
    for t in sorted(cands):
        v = value(t)
        if v < best_v:
            best_t, best_v = t, v
    return best_t, best_v


def profile_eval(kappa, i: int, beta) -> Fraction:
    """Exact value of the eigenvalue-aspect exponent profile.

    1 + kappa*(min(i,2) - 2 - i/2) + min(0, -1/2 - beta/4)
      + max(0, min((i/2)k, (3i/2)k + beta/2), min((12i/11)k + 3beta/11, ik)).
    """
    kappa = Fraction(kappa)
    beta = Fraction(beta)
    if i not in (1, 2, 3, 4):
        raise AmplifierError("i must be in 1..4")
    if beta > 0:
        raise AmplifierError("beta must be <= 0")
    term2 = kappa * (min(i, 2) - 2 - Fraction(i, 2))
    term3 = min(Fraction(0), Fraction(-1, 2) - beta / 4)
    m1 = min(Fraction(i, 2) * kappa, Fraction(3 * i, 2) * kappa + beta / 2)
    m2 = min(Fraction(12 * i, 11) * kappa + Fraction(3, 11) * beta, i * kappa)
    term4 = max(Fraction(0), m1, m2)
    return 1 + term2 + term3 + term4


def _breakpoints(kappa: Fraction, i: int):
    """Superset of the beta breakpoints of the piecewise-linear profile."""
    k = Fraction(kappa)
    pts = {
        Fraction(0),
        Fraction(-2),
        -2 * i * k,
        -Fraction(i, 3) * k,
        -3 * i * k,
        -4 * i * k,
        -Fraction(13 * i, 6) * k,
        -Fraction(9 * i, 5) * k,
        -i * k,
    }
    return sorted(p for p in pts if p <= 0)


@dataclass(frozen=True)
class ProfileOptimum:
    value: Fraction
    points: tuple  # (i, beta) isolated maximizers
    plateaus: tuple  # (i, beta_edge): maximum on all beta <= beta_edge


def optimize_profile(kappa) -> ProfileOptimum:
    """Exact maximum of the profile over i in 1..4 and beta <= 0.

    The profile is piecewise linear in beta with breakpoints among the
    listed candidates, so the maximum is attained at a breakpoint or on
    the constant plateau to the left of all of them.
    """
    kappa = Fraction(kappa)
    if kappa < 0:
        raise AmplifierError("kappa must be >= 0")
    best = None
    records = []  # (i, beta, value, is_plateau_rep)
    for i in (1, 2, 3, 4):
        pts = _breakpoints(kappa, i)
        far = min(pts) - 1
        plateau_val = profile_eval(kappa, i, far)
        records.append((i, far, plateau_val, True))
        for b in pts:
            records.append((i, b, profile_eval(kappa, i, b), False))
    best = max(v for _, _, v, _ in records)
    points = []
    plateaus = []
    for i in (1, 2, 3, 4):
        pts = _breakpoints(kappa, i)
        far = min(pts) - 1
        vals = {b: profile_eval(kappa, i, b) for b in pts}
        has_plateau = profile_eval(kappa, i, far) == best
        if has_plateau:
            # plateau extends right through consecutive maximizing breakpoints
            edge = far
            for b in pts:
                if vals[b] == best:
                    edge = b
                else:
                    break
            plateaus.append((i, edge))
            for b in pts:
                if vals[b] == best and b > edge:
                    points.append((i, b))
        else:
            for b in pts:
                if vals[b] == best:
                    points.append((i, b))
    return ProfileOptimum(value=best, points=tuple(points), plateaus=tuple(plateaus))


def profile_polyline(kappa, i: int, lo=Fraction(-3), hi=Fraction(0)):
    """Exact (beta, value) vertices of the profile restricted to [lo, hi]."""
    kappa = Fraction(kappa)
    lo, hi = Fraction(lo), Fraction(hi)
    pts = sorted({lo, hi} | {b for b in _breakpoints(kappa, i) if lo < b < hi})
    return [(b, profile_eval(kappa, i, b)) for b in pts]


def polyline_eval(polyline, beta) -> Fraction:
    """Exact linear interpolation along a polyline (rational arithmetic)."""
    beta = Fraction(beta)
    for (b1, v1), (b2, v2) in zip(polyline, polyline[1:]):
        if b1 <= beta <= b2:
            if b1 == beta:
                return v1
            if b2 == beta:
                return v2
            return v1 + (v2 - v1) * (beta - b1) / (b2 - b1)
    raise AmplifierError("beta outside polyline range")


def kappa_scan(lo=Fraction(1, 10), hi=Fraction(1, 5), step=Fraction(1, 400)):
    """Exact scan of kappa -> max profile value; returns (best_kappa, table)."""
    table = []
    k = Fraction(lo)
    best = None
    while k <= hi:
        v = optimize_profile(k).value
        table.append((k, v))
        if best is None or v < best[1]:
            best = (k, v)
        k += step
    return best, table


def hybrid_interpolate(s_vol, s_eig):
    """Exact interpolation of a volume saving and an eigenvalue saving.

    Given sup-norm bounds lambda^(1/4) V^(-s_vol) and lambda^(1/4 - s_eig),
    returns (theta, c) with the geometric mean exponent
    (V^-s_vol)^(1-theta) (lambda^-s_eig)^theta = (lambda^(1/2) V)^-c.
    """
    s_vol, s_eig = Fraction(s_vol), Fraction(s_eig)
    if s_vol <= 0 or s_eig <= 0:
        raise AmplifierError("savings must be positive")
    theta = s_vol / (s_vol + 2 * s_eig)
    c = 2 * s_eig * theta
    assert c == s_vol * (1 - theta)
    return theta, c
