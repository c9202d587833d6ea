"""Exact lattice enumeration for representation numbers and angular counts.

Three engines share the work:

* a vectorized integer path over Q that solves the innermost coordinate of
  x^t A x = 2*ell exactly (discriminant + perfect-square test in int64),
* a recursive per-field-variable search for quadratic base fields with
  float interval pruning (widened by 1e-6) and an exact O_F membership
  test on every candidate,
* a deliberately naive per-variable box oracle used to cross-check the
  pruned engines.

Counts are exact; the float machinery only brackets loops.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .fields import FieldContext, FieldElement
from .forms import QuadraticForm, reduce_form

WIDEN = 1e-6


class CountError(ValueError):
    pass


class WitnessError(CountError):
    """Raised when an averaged-sum mode needs h_1 of unit size and the
    reduced form does not witness it."""


@dataclass
class CountReport:
    count: int
    bound: float
    bound_terms: dict
    ratio: float
    nodes: int
    wall_ms: float
    query: dict = field(default_factory=dict)

    def to_json(self, include_timing: bool = True) -> dict:
        out = {
            "query": self.query,
            "count": self.count,
            "bound": self.bound,
            "bound_terms": self.bound_terms,
            "ratio": self.ratio,
            "nodes": self.nodes,
        }
        if include_timing:
            out["wall_ms"] = self.wall_ms
        return out


def _make_report(count, bound_terms, nodes, t0, query):
    bound = float(sum(bound_terms.values()))
    ratio = count / bound if bound > 0 else math.inf if count else 0.0
    return CountReport(
        count=int(count),
        bound=bound,
        bound_terms={k: float(v) for k, v in bound_terms.items()},
        ratio=float(ratio),
        nodes=int(nodes),
        wall_ms=(time.perf_counter() - t0) * 1000.0,
        query=query,
    )


# ---------------------------------------------------------------------------
# cached embedded data


_EMB_CACHE: dict = {}


def _embedded(form: QuadraticForm):
    key = form.key()
    hit = _EMB_CACHE.get(key)
    if hit is not None:
        return hit
    grams = [form.embedded_gram(j) for j in range(form.ctx.degree)]
    ldls = []
    lam_min = []
    for A in grams:
        n = A.shape[0]
        M = A / 2.0
        h = np.zeros(n)
        R = np.eye(n)
        for j in range(n):
            acc = M[j, j] - sum(h[k] * R[k, j] ** 2 for k in range(j))
            h[j] = acc
            for i in range(j + 1, n):
                v = M[j, i] - sum(h[k] * R[k, j] * R[k, i] for k in range(j))
                R[j, i] = v / h[j]
        ldls.append((h, R))
        lam_min.append(float(np.linalg.eigvalsh(M)[0]))
    data = (grams, ldls, lam_min)
    _EMB_CACHE[key] = data
    return data


def _int_gram(form: QuadraticForm):
    """Gram entries as integer coordinate tuples."""
    return [
        [tuple(int(c) for c in e.coords) for e in row] for row in form.gram
    ]


def _check_target(form: QuadraticForm, ell: FieldElement):
    if not isinstance(ell, FieldElement):
        ell = form.ctx.elem(ell)
    if not ell.is_integral():
        raise CountError("target must be integral")
    if not ell.is_zero() and not ell.is_totally_positive():
        raise CountError("target must be totally positive or zero")
    return ell


# ---------------------------------------------------------------------------
# vectorized rational path (d = 1)


def _isqrt_vec(D):
    s = np.sqrt(D.astype(np.float64)).astype(np.int64)
    s = np.where((s + 1) * (s + 1) <= D, s + 1, s)
    s = np.where(s * s > D, s - 1, s)
    return s


def _expand_level(cols, used, shift, rad):
    """Grow candidate arrays by one variable with interval [-rad, rad]-shift."""
    lo = np.ceil(-rad - shift).astype(np.int64)
    hi = np.floor(rad - shift).astype(np.int64)
    lengths = np.maximum(hi - lo + 1, 0)
    total = int(lengths.sum())
    if total == 0:
        return None
    idx = np.repeat(np.arange(len(lo)), lengths)
    starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    vals = np.arange(total) - np.repeat(starts, lengths) + np.repeat(lo, lengths)
    new_cols = [c[idx] for c in cols]
    new_cols.append(vals)
    return new_cols, used[idx], shift[idx], vals


def _enum_rational(form, ell_int: Fraction, mode: str, ball_hi: Fraction | None = None):
    """Core over Q.  mode: 'shell_list', 'shell_count' or 'ball_count'.

    shell: Q(x) = ell exactly.  ball: 0 <= Q(x) <= ball_hi.  The innermost
    coordinate is solved in exact integer arithmetic.
    """
    n = form.n
    A = np.array(
        [[int(e.coords[0]) for e in row] for row in form.gram], dtype=np.int64
    )
    (_, ldls, _) = _embedded(form)
    h, R = ldls[0]
    Vq = ell_int if mode.startswith("shell") else ball_hi
    V = float(Vq)
    den = int(Vq.denominator)
    a0 = int(A[0, 0])
    nodes = 0
    count = 0
    rows = []

    # variable n-1 outermost
    rad_out = math.sqrt(max(V, 0.0) / h[n - 1]) * (1 + WIDEN) + 1e-9
    outer = np.arange(-math.floor(rad_out), math.floor(rad_out) + 1, dtype=np.int64)
    if n == 1:
        outer = np.array([0], dtype=np.int64)  # handled by exact solve below
    per_outer = max(1, int(2 * rad_out) ** max(n - 2, 0))
    chunk = max(1, 2 ** 20 // per_outer)
    for s0 in range(0, max(len(outer), 1), chunk):
        if n >= 2:
            xs = outer[s0 : s0 + chunk]
            if len(xs) == 0:
                continue
            cols = [xs]
            used = h[n - 1] * xs.astype(np.float64) ** 2
            alive = used <= V * (1 + WIDEN) + 1e-9
            cols = [c[alive] for c in cols]
            used = used[alive]
            ok = True
            for j in range(n - 2, 0, -1):
                if len(used) == 0:
                    ok = False
                    break
                shift = np.zeros(len(used))
                for t, k in enumerate(range(n - 1, j, -1)):
                    shift += R[j, k] * cols[t].astype(np.float64)
                rad = np.sqrt(np.maximum((V - used) / h[j], 0.0)) * (1 + WIDEN) + 1e-9
                grown = _expand_level(cols, used, shift, rad)
                if grown is None:
                    ok = False
                    break
                cols, used, shift, vals = grown
                used = used + h[j] * (vals.astype(np.float64) + shift) ** 2
                keep = used <= V * (1 + WIDEN) + 1e-9
                cols = [c[keep] for c in cols]
                used = used[keep]
            if not ok or len(used) == 0:
                continue
            nodes += len(used)
            # cols holds x_{n-1}, ..., x_1; solve x_0 exactly
            tail = list(reversed(cols))  # x_1, ..., x_{n-1}
            B = np.zeros(len(used), dtype=np.int64)
            C0 = np.zeros(len(used), dtype=np.int64)
            for i in range(1, n):
                B += A[0, i] * tail[i - 1]
                for k in range(1, n):
                    C0 += A[i, k] * tail[i - 1] * tail[k - 1]
        else:
            tail = []
            B = np.zeros(1, dtype=np.int64)
            C0 = np.zeros(1, dtype=np.int64)
            nodes += 1

        if mode.startswith("shell"):
            tgt = int(2 * ell_int)
            D = B.astype(np.int64) ** 2 - a0 * (C0 - tgt)
            pos = D >= 0
            Dp = np.where(pos, D, 0)
            s = _isqrt_vec(Dp)
            sq = pos & (s * s == Dp)
            for sgn in (1, -1):
                r = -B + sgn * s
                val = sq & (r % a0 == 0)
                if sgn == -1:
                    val &= s > 0
                if mode == "shell_count":
                    count += int(val.sum())
                else:
                    if val.any():
                        x0 = (r[val] // a0).astype(np.int64)
                        block = [x0] + [t[val] for t in tail]
                        rows.append(np.stack(block, axis=1))
        else:  # ball_count: den*(a x^2 + 2Bx + C0) <= den*2*ball_hi
            tgt = int(2 * ball_hi * den)
            D = (den * B) ** 2 - den * a0 * (den * C0 - tgt)
            pos = D >= 0
            Dp = np.where(pos, D, 0)
            s = _isqrt_vec(Dp)
            hi = np.floor_divide(-den * B + s, den * a0)
            lo = -np.floor_divide(den * B + s, den * a0)
            cnt = np.where(pos, np.maximum(hi - lo + 1, 0), 0)
            count += int(cnt.sum())

    if mode == "shell_list":
        if rows:
            allrows = np.concatenate(rows, axis=0)
            order = np.lexsort(tuple(allrows[:, k] for k in range(n - 1, -1, -1)))
            return allrows[order], nodes
        return np.zeros((0, n), dtype=np.int64), nodes
    return count, nodes


# ---------------------------------------------------------------------------
# generic per-field-variable search (any degree)


def _var_candidates(ctx, intervals):
    """Integer coordinate pairs hitting the per-embedding intervals."""
    if ctx.degree == 1:
        lo, hi = intervals[0]
        return [(a,) for a in range(math.ceil(lo - 1e-9), math.floor(hi + 1e-9) + 1)]
    (lo1, hi1), (lo2, hi2) = intervals
    w1, w2 = ctx.omega
    span = w1 - w2
    blo = math.ceil((lo1 - hi2) / span - 1e-9) - 1
    bhi = math.floor((hi1 - lo2) / span + 1e-9) + 1
    out = []
    for b in range(blo, bhi + 1):
        alo = max(lo1 - b * w1, lo2 - b * w2)
        ahi = min(hi1 - b * w1, hi2 - b * w2)
        if alo > ahi + 1e-9:
            continue
        for a in range(math.ceil(alo - 1e-9), math.floor(ahi + 1e-9) + 1):
            out.append((a, b))
    return out


def _enum_generic(form, ell, mode: str, ball_hi: Fraction | None = None):
    """Recursive exact enumerator; used for quadratic base fields.

    shell modes test Q(x) == ell exactly; ball_count tests per embedding
    0 <= Q(x)^sigma <= ball_hi^(1/d) through the exact square comparison
    (Q(x)^2)^sigma <= ball_hi.
    """
    ctx = form.ctx
    n = form.n
    d = ctx.degree
    grams, ldls, _ = _embedded(form)
    gram_coords = _int_gram(form)
    if mode.startswith("shell"):
        targets = [float(v) for v in ell.embed()]
        two_ell = tuple(2 * c for c in ell.coords)
    else:
        targets = [float(ball_hi) ** (1.0 / d)] * d
    nodes = 0
    hits = []
    count = 0

    fixed = [None] * n
    emb_fixed = [[0.0] * n for _ in range(d)]

    def value_coords(vec):
        acc = (0,) * d
        for i in range(n):
            for k in range(n):
                prod = ctx.mul_coords(vec[i], vec[k])
                prod = ctx.mul_coords(prod, gram_coords[i][k])
                acc = tuple(x + y for x, y in zip(acc, prod))
        return acc  # = 2 Q(x)

    def accept(vec):
        nonlocal count
        val2 = value_coords(vec)
        if mode.startswith("shell"):
            if val2 != two_ell:
                return
        else:
            val = tuple(Fraction(v, 2) for v in val2)
            # 0 <= val^sigma and (val^2)^sigma <= ball_hi, all exact
            if any(ctx.sign_at(val, j) < 0 for j in range(d)):
                return
            sq = ctx.mul_coords(val, val)
            bh = (Fraction(ball_hi),) + (Fraction(0),) * (d - 1)
            if any(ctx.sign_at(ctx.sub_coords(bh, sq), j) < 0 for j in range(d)):
                return
        count += 1
        if mode.endswith("list"):
            hits.append(tuple(c for var in vec for c in var))

    def solve_last(used):
        """Shell mode, d = 2: the final variable is pinned per embedding up
        to sign by the exact equality; round the float solve and verify."""
        nonlocal nodes
        cands = set()
        vs = []
        shifts = []
        for s in range(2):
            h, R = ldls[s]
            shifts.append(sum(R[0, k] * emb_fixed[s][k] for k in range(1, n)))
            rem = max(targets[s] - used[s], 0.0)
            vs.append(math.sqrt(rem / h[0]))
        w1, w2 = ctx.omega
        span = w1 - w2
        for s1 in (1, -1):
            for s2 in (1, -1):
                v1 = s1 * vs[0] - shifts[0]
                v2 = s2 * vs[1] - shifts[1]
                b = round((v1 - v2) / span)
                a = round(v1 - b * w1)
                cands.add((a, b))
        for cand in sorted(cands):
            nodes += 1
            fixed[0] = cand
            accept(list(fixed))

    def recurse(j, used):
        nonlocal nodes
        if j == 0 and d == 2 and mode.startswith("shell"):
            solve_last(used)
            return
        intervals = []
        for s in range(d):
            h, R = ldls[s]
            shift = sum(R[j, k] * emb_fixed[s][k] for k in range(j + 1, n))
            rad2 = (targets[s] - used[s]) / h[j]
            rad = math.sqrt(max(rad2, 0.0)) * (1 + WIDEN) + 1e-9
            intervals.append((-rad - shift, rad - shift))
        for cand in _var_candidates(ctx, intervals):
            nodes += 1
            fixed[j] = cand
            new_used = list(used)
            bad = False
            for s in range(d):
                h, R = ldls[s]
                ev = cand[0] + (cand[1] * ctx.omega[s] if d == 2 else 0.0)
                emb_fixed[s][j] = ev
                shift = sum(R[j, k] * emb_fixed[s][k] for k in range(j + 1, n))
                new_used[s] = used[s] + h[j] * (ev + shift) ** 2
                if new_used[s] > targets[s] * (1 + WIDEN) + 1e-9:
                    bad = True
            if bad:
                continue
            if j == 0:
                accept(list(fixed))
            else:
                recurse(j - 1, new_used)

    recurse(n - 1, [0.0] * d)
    if mode.endswith("list"):
        arr = (
            np.array(sorted(hits), dtype=np.int64)
            if hits
            else np.zeros((0, n * d), dtype=np.int64)
        )
        return arr, nodes
    return count, nodes


# ---------------------------------------------------------------------------
# public enumeration API


def enumerate_representations(form: QuadraticForm, ell) -> np.ndarray:
    """All x in O_F^n with Q(x) = ell, as rows of integer coordinates.

    Rows are (a_1[, b_1], a_2[, b_2], ...) over the integral basis, sorted
    lexicographically; the zero target returns the zero vector only.
    """
    ell = _check_target(form, ell)
    if form.ctx.degree == 1:
        rows, _ = _enum_rational(form, Fraction(ell.coords[0]), "shell_list")
        return rows
    rows, _ = _enum_generic(form, ell, "shell_list")
    return rows


def representation_count(form: QuadraticForm, ell) -> tuple[int, int]:
    """(count, nodes) for Q(x) = ell."""
    ell = _check_target(form, ell)
    if form.ctx.degree == 1:
        return _enum_rational(form, Fraction(ell.coords[0]), "shell_count")
    return _enum_generic(form, ell, "shell_count")


def vectors_as_elements(form: QuadraticForm, rows: np.ndarray):
    ctx = form.ctx
    d = ctx.degree
    out = []
    for row in rows:
        out.append(
            tuple(
                ctx.elem(*[int(row[i * d + t]) for t in range(d)])
                for i in range(form.n)
            )
        )
    return out


def naive_box_representations(form: QuadraticForm, ell) -> np.ndarray:
    """Brute-force oracle: exhaustive per-variable coordinate boxes, exact
    evaluation of every candidate, no cross-variable pruning.

    The box uses the per-coordinate consequence of definiteness,
    |x_i^sigma|^2 <= 2 ell^sigma (A^sigma)^-1_ii."""
    ell = _check_target(form, ell)
    ctx = form.ctx
    n = form.n
    d = ctx.degree
    grams, _, _ = _embedded(form)
    if ell.is_zero():
        return np.zeros((1, n * d), dtype=np.int64)
    embs = [float(v) for v in ell.embed()]
    inv_diag = [np.diag(np.linalg.inv(A)) for A in grams]
    var_cands = []
    for i in range(n):
        intervals = []
        for s in range(d):
            rad = math.sqrt(2 * embs[s] * inv_diag[s][i]) * (1 + WIDEN) + 1e-9
            intervals.append((-rad, rad))
        arr = np.array(_var_candidates(ctx, intervals), dtype=np.int64)
        if len(arr) == 0:
            return np.zeros((0, n * d), dtype=np.int64)
        var_cands.append(arr)

    gram_coords = np.zeros((n, n, d), dtype=np.int64)
    for i in range(n):
        for k in range(n):
            for t, c in enumerate(form.gram[i][k].coords):
                gram_coords[i, k, t] = int(c)

    if ctx.degree == 1:
        mul = lambda u, v: (u[..., 0] * v[..., 0])[..., None]
    else:
        c0, c1 = ctx._omsq

        def mul(u, v):
            a1, b1 = u[..., 0], u[..., 1]
            a2, b2 = v[..., 0], v[..., 1]
            bb = b1 * b2
            return np.stack([a1 * a2 + bb * c0, a1 * b2 + b1 * a2 + bb * c1], axis=-1)

    target = np.array([2 * int(c) for c in ell.coords], dtype=np.int64)

    hits = []
    nz_terms = [
        (i, k)
        for i in range(n)
        for k in range(i, n)
        if gram_coords[i, k].any()
    ]

    def eval_block(vecs):  # vecs: (M, n, d)
        acc = np.zeros((vecs.shape[0], d), dtype=np.int64)
        for i, k in nz_terms:
            term = mul(mul(vecs[:, i, :], vecs[:, k, :]), gram_coords[i, k])
            acc += term if i == k else 2 * term
        return acc

    if n == 1:
        vecs = var_cands[0][:, None, :]
        vals = eval_block(vecs)
        mask = (vals == target).all(axis=1)
        return _rows_sorted(vecs[mask], n, d)

    # meshgrid the first `blk` variables, python loops over the rest
    blk = 2
    if n >= 3 and len(var_cands[0]) * len(var_cands[1]) * len(var_cands[2]) <= 8 * 10 ** 5:
        blk = 3
    grids = np.meshgrid(*[np.arange(len(var_cands[i])) for i in range(blk)], indexing="ij")
    block = np.concatenate(
        [var_cands[i][g.ravel()][:, None, :] for i, g in enumerate(grids)], axis=1
    )  # (prod K_i, blk, d) for variables (0, .., blk-1)
    M = block.shape[0]

    def rec(prefix, var):
        if var == blk - 1:
            if prefix:
                pre = np.broadcast_to(
                    np.array(prefix, dtype=np.int64)[None, :, :], (M, len(prefix), d)
                )
                vecs = np.concatenate([block, pre], axis=1)
            else:
                vecs = block
            vals = eval_block(vecs)
            mask = (vals == target).all(axis=1)
            if mask.any():
                hits.append(vecs[mask])
            return
        for c in var_cands[var]:
            rec([tuple(c)] + prefix, var - 1)

    rec([], n - 1)
    if hits:
        sel = np.concatenate(hits, axis=0)
    else:
        sel = np.zeros((0, n, d), dtype=np.int64)
    return _rows_sorted(sel, n, d)


def _rows_sorted(vecs, n, d):
    rows = vecs.reshape(vecs.shape[0], n * d)
    if len(rows):
        order = np.lexsort(tuple(rows[:, k] for k in range(n * d - 1, -1, -1)))
        rows = rows[order]
    return rows


# ---------------------------------------------------------------------------
# reports


def rep_count(form: QuadraticForm, ell) -> CountReport:
    """Representation count with the uniform bound for the form's rank."""
    t0 = time.perf_counter()
    ell = _check_target(form, ell)
    count, nodes = representation_count(form, ell)
    nrm = float(abs(ell.norm()))
    if form.n == 4:
        terms = {"norm_ell": max(nrm, 1.0)}
    elif form.n == 3:
        terms = {"sqrt_norm_ell": max(math.sqrt(nrm), 1.0)}
    else:
        terms = {"const": 1.0}
    return _make_report(
        count,
        terms,
        nodes,
        t0,
        {"op": "rep_count", "form_rank": form.n, "ell": [str(c) for c in ell.coords]},
    )


def _box_totally_positive(ctx, y: Fraction, include_zero=True):
    """Integral ell with 0 <= ell^sigma <= y^(1/d) at every embedding."""
    if y <= 0:
        return [ctx.zero] if include_zero else []
    out = [ctx.zero] if include_zero else []
    if ctx.degree == 1:
        for k in range(1, math.floor(y) + 1):
            out.append(ctx.elem(k))
        return out
    bound = Fraction(math.sqrt(float(y)) * (1 + WIDEN) + 1e-9)
    from .fields import integers_in_box

    for x in integers_in_box(ctx, (bound, bound)):
        if not x.is_totally_positive():
            continue
        sq = x * x
        diff = (y - sq.coords[0], -sq.coords[1]) if ctx.degree == 2 else None
        if all(ctx.sign_at(diff, j) >= 0 for j in range(2)):
            out.append(x)
    out.sort(key=lambda e: e.sort_key())
    return out


def averaged_sum(form: QuadraticForm, mode: str, y, h1_threshold: float = 32.0) -> CountReport:
    """Averaged representation sums over short totally positive ranges.

    mode e3: sum of r(ell) over 0 <= ell^s <= y^(1/d);
    mode e2: double sum of r(ell_1 ell_2^2), needs the h_1-of-unit-size witness;
    mode e1: sum of r(ell^2), same witness requirement.
    """
    t0 = time.perf_counter()
    if form.n != 4:
        raise CountError("averaged sums are defined for quaternary forms")
    ctx = form.ctx
    if mode not in ("e3", "e2", "e1"):
        raise CountError(f"unknown mode {mode!r}")
    if mode in ("e2", "e1"):
        witness = reduce_form(form).size_report.h1_witness()
        if witness > h1_threshold:
            raise WitnessError(
                f"h1 witness {witness:.3g} exceeds threshold {h1_threshold}"
            )
    det_norm = float(form.det_norm())
    lev = float(form.level_norm)
    nodes = 0
    if mode == "e3":
        yq = Fraction(y)
        if ctx.degree == 1:
            count, nodes = _enum_rational(form, Fraction(0), "ball_count", ball_hi=yq)
        else:
            count, nodes = _enum_generic(form, None, "ball_count", ball_hi=yq)
        yf = float(y)
        terms = {
            "t1": yf ** 2 / math.sqrt(det_norm),
            "t2": yf ** 1.5 / math.sqrt(det_norm / lev),
            "t3": yf,
        }
        query = {"op": "averaged_sum", "mode": mode, "y": str(yq)}
    elif mode == "e1":
        yq = Fraction(y)
        count = 0
        for ell in _box_totally_positive(ctx, yq):
            c, nd = representation_count(form, ell * ell)
            count += c
            nodes += nd
        yf = float(y)
        terms = {
            "t1": yf ** 3 / math.sqrt(det_norm),
            "t2": yf ** 2 / math.sqrt(det_norm / lev),
            "t3": yf,
        }
        query = {"op": "averaged_sum", "mode": mode, "y": str(yq)}
    else:
        y1, y2 = y
        y1q, y2q = Fraction(y1), Fraction(y2)
        count = 0
        box1 = _box_totally_positive(ctx, y1q)
        box2 = _box_totally_positive(ctx, y2q)
        for l1 in box1:
            for l2 in box2:
                c, nd = representation_count(form, l1 * l2 * l2)
                count += c
                nodes += nd
        y1f, y2f = float(y1), float(y2)
        prod = y1f * y2f ** 2
        terms = {
            "t1": y1f * prod ** 1.5 / math.sqrt(det_norm),
            "t2": y1f * prod / math.sqrt(det_norm / lev),
            "t3": y1f * prod ** 0.5,
        }
        query = {"op": "averaged_sum", "mode": mode, "y1": str(y1q), "y2": str(y2q)}
    return _make_report(count, terms, nodes, t0, query)


# ---------------------------------------------------------------------------
# binary inhomogeneous problems


def binary_inhomogeneous_count(ctx: FieldContext, coeffs, ell) -> CountReport:
    """Solutions of a*x^2 + b*xy + c*y^2 + a1*x + a2*y + c0 = ell.

    The quadratic part must be totally positive definite; solutions are
    boxed by definiteness and verified exactly.
    """
    t0 = time.perf_counter()
    a, b, c, a1, a2, c0 = [
        v if isinstance(v, FieldElement) else ctx.elem(v) for v in coeffs
    ]
    ell = ell if isinstance(ell, FieldElement) else ctx.elem(ell)
    d = ctx.degree
    for j in range(d):
        if a.sign_at(j) <= 0 or (4 * a * c - b * b).sign_at(j) <= 0:
            raise CountError("quadratic part is not totally positive definite")

    def poly(x, y):
        return a * x * x + b * x * y + c * y * y + a1 * x + a2 * y + c0

    # real center per embedding: minimize the quadratic part
    det2 = 4 * a * c - b * b
    cx = (b * a2 - 2 * c * a1) / det2
    cy = (b * a1 - 2 * a * a2) / det2
    pmin = poly(cx, cy)
    nodes = 0
    count = 0
    # per-embedding radius from (ell - pmin) and the smallest eigenvalue
    intervals_x = []
    intervals_y = []
    feasible = True
    for j in range(d):
        gram = np.array(
            [
                [2 * float(ctx.embed_coords(a.coords, j)), float(ctx.embed_coords(b.coords, j))],
                [float(ctx.embed_coords(b.coords, j)), 2 * float(ctx.embed_coords(c.coords, j))],
            ]
        )
        lam = float(np.linalg.eigvalsh(gram / 2.0)[0])
        budget = float(ctx.embed_coords((ell - pmin).coords, j))
        if budget < -1e-9:
            feasible = False
            break
        rad = math.sqrt(max(budget, 0.0) / lam) * (1 + WIDEN) + 1e-9
        cxj = float(ctx.embed_coords(cx.coords, j))
        cyj = float(ctx.embed_coords(cy.coords, j))
        intervals_x.append((cxj - rad, cxj + rad))
        intervals_y.append((cyj - rad, cyj + rad))
    if feasible:
        for xc in _var_candidates(ctx, intervals_x):
            x = ctx.elem(*xc)
            for yc in _var_candidates(ctx, intervals_y):
                nodes += 1
                if poly(x, ctx.elem(*yc)) == ell:
                    count += 1
    height = sum(
        sum(abs(float(v)) for v in coef.embed()) for coef in (a, b, c, a1, a2, c0)
    )
    return _make_report(
        count,
        {"const": 1.0},
        nodes,
        t0,
        {
            "op": "binary_inhomogeneous",
            "height": height,
            "ell": [str(v) for v in ell.coords],
        },
    )


# ---------------------------------------------------------------------------
# archimedean geometry checks


def arch_geometry(mode: str, gram3: np.ndarray, min_eigenvalue: float = 0.45, **kw):
    """Real-geometry comparisons behind the angular counting bounds.

    gram3 is the Gram matrix of a positive ternary form with the halved
    value convention Q(v) = v^t gram3 v / 2; its eigenvalues (of gram3/2)
    must clear `min_eigenvalue`.  Returns (lhs, rhs_scale).
    """
    G = np.asarray(gram3, dtype=float) / 2.0
    w = np.linalg.eigvalsh(G)
    if w[0] < min_eigenvalue:
        raise CountError(f"smallest eigenvalue {w[0]:.3g} below {min_eigenvalue}")

    def q(v):
        return float(v @ G @ v)

    def inner(u, v):
        return float(u @ G @ v)

    if mode == "a":
        x, y, eta = np.asarray(kw["x"], float), np.asarray(kw["y"], float), float(kw["eta"])
        if abs(q(x) - 1) > 1e-6 or abs(q(y) - 1) > 1e-6:
            raise CountError("mode a needs unit vectors")
        if inner(y, x) ** 2 < 1 - eta - 1e-9:
            raise CountError("mode a hypothesis <y,x>^2 >= 1 - eta fails")
        lhs = min(np.linalg.norm(y - x), np.linalg.norm(y + x))
        return lhs, math.sqrt(max(eta, 0.0))
    if mode == "b":
        ys = [np.asarray(v, float) for v in kw["ys"]]
        x = np.asarray(kw["x"], float)
        ell, eta = float(kw["ell"]), float(kw["eta"])
        if len(ys) != 3:
            raise CountError("mode b needs three vectors")
        for v in ys:
            if abs(q(v) - ell) > 1e-6 * max(1.0, ell):
                raise CountError("mode b needs Q(y_i) = ell")
            if abs(inner(v, x)) > math.sqrt(ell * eta) * (1 + 1e-9) + 1e-12:
                raise CountError("mode b angular hypothesis fails")
        lhs = abs(float(np.linalg.det(np.stack(ys))))
        return lhs, ell ** 1.5 * math.sqrt(eta)
    if mode == "c":
        y = np.asarray(kw["y"], float)
        ell = float(kw["ell"])
        if abs(q(y) - ell) > 1e-6 * max(1.0, ell):
            raise CountError("mode c needs Q(y) = ell")
        return float(np.linalg.norm(y)), math.sqrt(ell)
    raise CountError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# angular constrained counts


@dataclass(frozen=True)
class ConstrainedCountQuery:
    form: QuadraticForm  # quaternary, split shape diag(2) + ternary
    ell: FieldElement
    directions: tuple  # d vectors in R^3, unit for the embedded ternary
    eta: tuple  # d thresholds
    mode: str  # near-torus | near-equator | unconstrained

    def __post_init__(self):
        form = self.form
        if form.n != 4:
            raise CountError("constrained counts need a quaternary form")
        if form.gram[0][0] != form.ctx.elem(2) or any(
            not form.gram[0][k].is_zero() for k in range(1, 4)
        ):
            raise CountError("form is not of split shape y_0^2 + ternary")
        if self.mode not in ("near-torus", "near-equator", "unconstrained"):
            raise CountError(f"unknown mode {self.mode!r}")
        d = form.ctx.degree
        if len(self.directions) != d or len(self.eta) != d:
            raise CountError("need one direction and one threshold per embedding")
        if any(e <= 0 for e in self.eta):
            raise CountError("thresholds must be positive")
        for j, x in enumerate(self.directions):
            v = np.asarray(x, float)
            tern = self.ternary_embedded(j)
            if abs(float(v @ tern @ v) / 2.0 - 1.0) > 1e-9:
                raise CountError(f"direction {j} not unit-normalized")

    def ternary_embedded(self, j):
        A = self.form.embedded_gram(j)
        return A[1:, 1:]


def constrained_count(q: ConstrainedCountQuery) -> CountReport:
    """Exact count of Q(y) = ell under per-embedding angular constraints.

    At eta >= 2 (near-torus) or eta >= 1 (near-equator) the constraint is
    implied by Cauchy-Schwarz, so filtering is skipped and the result
    coincides with the plain representation count exactly.
    """
    t0 = time.perf_counter()
    form = q.form
    ctx = form.ctx
    d = ctx.degree
    ell = _check_target(form, q.ell)
    rows = enumerate_representations(form, ell)
    nodes = len(rows)
    vacuous_at = 2.0 if q.mode == "near-torus" else 1.0
    if q.mode == "unconstrained" or all(e >= vacuous_at for e in q.eta):
        count = len(rows)
    else:
        mask = np.ones(len(rows), dtype=bool)
        for j in range(d):
            if ctx.degree == 1:
                emb = rows.astype(np.float64)
            else:
                a = rows[:, 0::2].astype(np.float64)
                b = rows[:, 1::2].astype(np.float64)
                emb = a + b * ctx.omega[j]
            y0 = emb[:, 0]
            ytil = emb[:, 1:]
            tern = q.ternary_embedded(j)
            x = np.asarray(q.directions[j], float)
            bil = (ytil @ tern @ x) / 2.0
            ell_j = float(ell.embed()[j])
            lim = q.eta[j] * ell_j * (1 + 1e-12) + 1e-12
            if q.mode == "near-torus":
                vals = y0 ** 2 + bil ** 2
            else:
                qt = np.einsum("ij,jk,ik->i", ytil, tern, ytil) / 2.0
                vals = qt - bil ** 2
            mask &= vals <= lim
        count = int(mask.sum())
    nrm = float(abs(ell.norm()))
    neta = float(np.prod([float(e) for e in q.eta]))
    if q.mode == "near-torus":
        terms = {
            "main": math.sqrt(neta) * nrm,
            "const": 1.0,
            "min_branch": min(nrm ** 1.5 * math.sqrt(neta), math.sqrt(nrm)),
        }
    elif q.mode == "near-equator":
        terms = {
            "const": 1.0,
            "min_branch": min(neta ** (3.0 / 11.0) * nrm ** (12.0 / 11.0), nrm),
        }
    else:
        terms = {"norm_ell": max(nrm, 1.0)}
    return _make_report(
        count,
        terms,
        nodes,
        t0,
        {
            "op": "constrained_count",
            "mode": q.mode,
            "ell": [str(c) for c in ell.coords],
            "eta": [float(e) for e in q.eta],
        },
    )
