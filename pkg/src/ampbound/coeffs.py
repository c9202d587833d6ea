"""Jacobi polynomials, rotation-group matrix coefficients and their decay.

The normalized coefficient of a weight-l vector in the (m+1)-dimensional
representation depends on the rotation only through a parameter t in
[-1, 1]; its absolute value is ((1+t)/2)^|l| * |P_{m-|l|}^{(0, 2|l|)}(t)|
and is bounded by min(1, ((|l|+1)/(m+1))^(1/2) * (1-t^2)^(-1/4)) away from
t = +-1.  Everything here is plain float recurrence work, vectorized over
t grids, with exact-rational spot checks for small degree.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def jacobi_eval(n: int, alpha: int, beta: int, t):
    """P_n^(alpha,beta)(t) by the three-term recurrence; t scalar or array."""
    if n < 0 or alpha < 0 or beta < 0:
        raise ValueError("need n, alpha, beta >= 0")
    t = np.asarray(t, dtype=float)
    p_prev = np.ones_like(t)
    if n == 0:
        return p_prev if p_prev.shape else float(p_prev)
    p_cur = (alpha + 1) + (alpha + beta + 2) * (t - 1) / 2
    for k in range(2, n + 1):
        a = 2 * k * (k + alpha + beta) * (2 * k + alpha + beta - 2)
        b1 = 2 * k + alpha + beta - 1
        b2 = (2 * k + alpha + beta) * (2 * k + alpha + beta - 2)
        b3 = alpha * alpha - beta * beta
        c = 2 * (k + alpha - 1) * (k + beta - 1) * (2 * k + alpha + beta)
        p_cur, p_prev = (b1 * (b2 * t + b3) * p_cur - c * p_prev) / a, p_cur
    return p_cur if p_cur.shape else float(p_cur)


def jacobi_eval_exact(n: int, alpha: int, beta: int, t: Fraction) -> Fraction:
    """Exact-rational evaluation used as an oracle for the float recurrence."""
    t = Fraction(t)
    p_prev = Fraction(1)
    if n == 0:
        return p_prev
    p_cur = Fraction(alpha + 1) + Fraction(alpha + beta + 2) * (t - 1) / 2
    for k in range(2, n + 1):
        a = 2 * k * (k + alpha + beta) * (2 * k + alpha + beta - 2)
        b1 = 2 * k + alpha + beta - 1
        b2 = (2 * k + alpha + beta) * (2 * k + alpha + beta - 2)
        b3 = alpha * alpha - beta * beta
        c = 2 * (k + alpha - 1) * (k + beta - 1) * (2 * k + alpha + beta)
        p_cur, p_prev = (b1 * (b2 * t + b3) * p_cur - c * p_prev) / a, p_cur
    return p_cur


def jacobi_norm_exact(n: int, alpha: int, beta: int) -> Fraction:
    """Squared weighted L^2 norm of P_n^(alpha,beta), exactly."""
    num = Fraction(2) ** (alpha + beta + 1) * math.factorial(n + alpha) * math.factorial(n + beta)
    den = (2 * n + alpha + beta + 1) * math.factorial(n + alpha + beta) * math.factorial(n)
    return Fraction(num, den)


def jacobi_norm_quadrature(n: int, alpha: int, beta: int, nodes: int | None = None) -> float:
    """Gauss-Legendre value of the same integral, for cross-checking."""
    if nodes is None:
        nodes = n + (alpha + beta) // 2 + 8
    x, w = np.polynomial.legendre.leggauss(nodes)
    p = jacobi_eval(n, alpha, beta, x)
    return float(np.sum(w * p * p * (1 - x) ** alpha * (1 + x) ** beta))


def matrix_coeff(m: int, l: int, t):
    """|p_{m,l}(t)| = ((1+t)/2)^|l| |P_{m-|l|}^{(0,2|l|)}(t)|, in [0, 1]."""
    if m < 0 or abs(l) > m:
        raise ValueError("need 0 <= |l| <= m")
    la = abs(l)
    t = np.asarray(t, dtype=float)
    val = np.abs(((1 + t) / 2) ** la * jacobi_eval(m - la, 0, 2 * la, t))
    return val if val.shape else float(val)


def decay_bound(m: int, l: int, t):
    t = np.asarray(t, dtype=float)
    la = abs(l)
    env = np.sqrt((la + 1) / (m + 1)) * (1 - t * t) ** -0.25
    out = np.minimum(1.0, env)
    return out if out.shape else float(out)


def decay_margin(m: int, l: int, t):
    """Ratio |p_{m,l}(t)| / bound; t = +-1 is excluded (degenerate bound)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr * t_arr >= 1.0):
        raise ValueError("decay bound degenerates at t = +-1")
    out = np.asarray(matrix_coeff(m, l, t_arr)) / np.asarray(decay_bound(m, l, t_arr))
    return out if out.shape else float(out)


def product_coeff(ms, ls, ts) -> float:
    """Product of |p_{m,l}| over the embeddings of a d-tuple."""
    if not (len(ms) == len(ls) == len(ts)):
        raise ValueError("tuple lengths differ")
    val = 1.0
    for m, l, t in zip(ms, ls, ts):
        val *= matrix_coeff(m, l, t)
    return val


def so4_character(m: int, t):
    """Normalized spherical character sin((m+1)theta)/((m+1)sin theta).

    Computed through the degree-m Chebyshev recurrence of the second kind,
    which is exact at t = +-1 and satisfies the pointwise bound
    |value| <= min(1, 1/((m+1) sqrt(1-t^2))).
    """
    if m < 0:
        raise ValueError("need m >= 0")
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1 + 1e-12):
        raise ValueError("t must lie in [-1, 1]")
    u_prev = np.ones_like(t)
    if m == 0:
        out = u_prev
    else:
        u_cur = 2 * t
        for _ in range(m - 1):
            u_cur, u_prev = 2 * t * u_cur - u_prev, u_cur
        out = u_cur / (m + 1)
    _assert_character_bound(m, t, out)
    return out if out.shape else float(out)


def _assert_character_bound(m, t, val):
    env = (m + 1) * np.sqrt(np.maximum(1 - t * t, 0.0))
    with np.errstate(divide="ignore"):
        lim = np.minimum(1.0, np.where(env > 0, 1.0 / env, 1.0))
    if np.any(np.abs(val) > lim + 1e-9):
        raise AssertionError("character bound violated")


# ---------------------------------------------------------------------------
# the rotation parameter of a quaternion


def quat_embed(alg, z, j: int) -> np.ndarray:
    """Coordinates of z in the orthonormal frame of the embedded algebra.

    Returns (z0, z1, z2, z3) with nr(z) = z0^2 + z1^2 + z2^2 + z3^2 at the
    j-th real place; the frame is 1, i/sqrt|a|, j/sqrt|b|, ij/sqrt|ab|.
    """
    ctx = alg.ctx
    a = ctx.embed_coords(alg.a.coords, j)
    b = ctx.embed_coords(alg.b.coords, j)
    x0, x1, x2, x3 = (ctx.embed_coords(c.coords, j) for c in z.coords)
    return np.array(
        [x0, x1 * math.sqrt(-a), x2 * math.sqrt(-b), x3 * math.sqrt(a * b)]
    )


def _hamilton_mul(u, v):
    return np.array(
        [
            u[0] * v[0] - u[1] * v[1] - u[2] * v[2] - u[3] * v[3],
            u[0] * v[1] + u[1] * v[0] + u[2] * v[3] - u[3] * v[2],
            u[0] * v[2] - u[1] * v[3] + u[2] * v[0] + u[3] * v[1],
            u[0] * v[3] + u[1] * v[2] - u[2] * v[1] + u[3] * v[0],
        ]
    )


def t_parameter(z, directions, cross_check: bool = True):
    """Rotation parameters t_sigma of a quaternion against unit directions.

    directions is one unit 3-vector per real place, written in the
    orthonormal frame of the trace-zero part.  Uses
    t = -1 + 2*(<z,1>^2 + <z,x>^2)/nr(z) and optionally cross-checks the
    direct conjugation value <x, z x z^{-1}> to 1e-9.
    """
    alg = z.alg
    ctx = alg.ctx
    ell = z.reduced_norm()
    out = []
    for j in range(ctx.degree):
        x = np.asarray(directions[j], dtype=float)
        if abs(float(x @ x) - 1.0) > 1e-9:
            raise ValueError(f"direction {j} is not a unit vector")
        ze = quat_embed(alg, z, j)
        nrm = float(ctx.embed_coords(ell.coords, j))
        if nrm <= 0:
            raise ValueError("reduced norm must be positive at every place")
        inner1 = ze[0]
        innerx = float(ze[1:] @ x)
        t = -1.0 + 2.0 * (inner1 ** 2 + innerx ** 2) / nrm
        t = min(1.0, max(-1.0, t))
        if cross_check:
            xq = np.array([0.0, *x])
            zi = np.array([ze[0], -ze[1], -ze[2], -ze[3]]) / nrm
            rot = _hamilton_mul(_hamilton_mul(ze, xq), zi)
            t2 = float(rot[1:] @ x)
            if abs(t - t2) > 1e-9:
                raise AssertionError("rotation parameter cross-check failed")
        out.append(t)
    return tuple(out)


# ---------------------------------------------------------------------------
# decay scan


def decay_scan(max_m: int = 200, l_exponent: float = 0.9, t_steps: int = 199):
    """Grid scan of the decay margin.

    Returns (rows, per_m_max, grid_max): rows carry the per-(m, l) maxima
    over the t grid |t| <= 0.99.
    """
    ts = np.linspace(-0.99, 0.99, t_steps)
    rows = []
    per_m = {}
    for m in range(0, max_m + 1):
        lmax = int(math.floor((m + 1) ** l_exponent)) if m else 0
        lmax = min(lmax, m)
        best_for_m = 0.0
        for l in range(0, lmax + 1):
            vals = matrix_coeff(m, l, ts)
            bnds = decay_bound(m, l, ts)
            ratios = vals / bnds
            k = int(np.argmax(ratios))
            rows.append(
                {
                    "m": m,
                    "l": l,
                    "t": float(ts[k]),
                    "coeff": float(vals[k]),
                    "bound": float(bnds[k]),
                    "ratio": float(ratios[k]),
                }
            )
            best_for_m = max(best_for_m, float(ratios[k]))
        per_m[m] = best_for_m
    grid_max = max(per_m.values())
    return rows, per_m, grid_max
