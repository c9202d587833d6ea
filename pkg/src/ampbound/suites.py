"""Acceptance suites shared by the test harness and the CLI runner.

Each suite returns a SuiteResult whose rows and summary are fully
deterministic for a fixed seed and independent of the parallelism degree;
timing never enters the payload, so suite outputs can be byte-compared
across runs and thread counts.
"""

from __future__ import annotations

import json
import math
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .amplifier import assemble_bound, build_sets, geometric_side
from .coeffs import (
    decay_scan,
    jacobi_norm_exact,
    jacobi_norm_quadrature,
    matrix_coeff,
    so4_character,
    t_parameter,
)
from .corpus import builtin_form, builtin_order, cone_targets, corpus, corpus_form
from .counting import (
    ConstrainedCountQuery,
    averaged_sum,
    constrained_count,
    enumerate_representations,
    naive_box_representations,
    rep_count,
)
from .fields import field_context, principal_primes_in_cone
from .forms import mat_det, reduce_form
from .quaternions import QuaternionAlgebra

DEFAULT_SEED = 20240801


@dataclass
class SuiteResult:
    name: str
    ok: bool
    rows: list
    summary: dict
    failures: list = field(default_factory=list)

    def payload(self) -> dict:
        return {
            "name": self.name,
            "ok": self.ok,
            "rows": self.rows,
            "summary": self.summary,
            "failures": self.failures,
        }


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def _pmap(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (threads * 8))
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items, chunksize=chunk))


def _coords_str(coords):
    return [str(c) for c in coords]


# ---------------------------------------------------------------------------
# criterion 3: oracle equivalence


def _w_oracle(args):
    name, coords = args
    form = corpus_form(name)
    ell = form.ctx.elem(*coords)
    fast = enumerate_representations(form, ell)
    slow = naive_box_representations(form, ell)
    equal = fast.shape == slow.shape and bool((fast == slow).all())
    return {
        "form": name,
        "ell": _coords_str(coords),
        "norm": float(abs(ell.norm())),
        "count": int(len(fast)),
        "equal": equal,
    }


def _sigma_divisors(n: int) -> int:
    return sum(d for d in range(1, n + 1) if n % d == 0)


def suite_oracle(threads: int = 1, max_norm: int = 200) -> SuiteResult:
    """Pruned enumeration vs naive box brute force on every corpus form."""
    tasks = []
    for entry in corpus():
        if not entry.oracle:
            continue
        for ell in cone_targets(entry.field, max_norm, include_zero=True):
            tasks.append((entry.name, tuple(ell.coords)))
    rows = _pmap(_w_oracle, tasks, threads)
    failures = [r for r in rows if not r["equal"]]
    # independent arithmetic oracle: sum-of-four-squares counts
    lipschitz = corpus_form("lipschitz")
    jacobi_rows = []
    jacobi_ok = True
    for n in range(1, max_norm, 2):
        cnt = rep_count(lipschitz, n).count
        expected = 8 * _sigma_divisors(n)
        good = cnt == expected
        jacobi_ok &= good
        jacobi_rows.append({"ell": n, "count": cnt, "expected": expected, "equal": good})
    ok = not failures and jacobi_ok
    return SuiteResult(
        name="oracle",
        ok=ok,
        rows=rows,
        summary={
            "targets": len(rows),
            "jacobi_checked": len(jacobi_rows),
            "jacobi_ok": jacobi_ok,
        },
        failures=[json.dumps(f, sort_keys=True) for f in failures],
    )


# ---------------------------------------------------------------------------
# criterion 4: angular boundary identities


def _split_directions(form):
    """One canonical unit direction per embedding for the ternary part."""
    dirs = []
    for j in range(form.ctx.degree):
        tern = form.embedded_gram(j)[1:, 1:]
        x = np.array([0.0, 0.0, 1.0])
        x = x / math.sqrt(float(x @ tern @ x) / 2.0)
        dirs.append(x.tolist())
    return dirs


def _w_boundary(args):
    name, coords = args
    form = builtin_form(name + "-split")
    ctx = form.ctx
    ell = ctx.elem(*coords)
    dirs = _split_directions(form)
    d = ctx.degree
    full = rep_count(form, ell).count
    torus = constrained_count(
        ConstrainedCountQuery(form, ell, tuple(dirs), (2.0,) * d, "near-torus")
    ).count
    equator = constrained_count(
        ConstrainedCountQuery(form, ell, tuple(dirs), (1.0,) * d, "near-equator")
    ).count
    return {
        "form": name,
        "ell": _coords_str(coords),
        "full": full,
        "torus_at_2": torus,
        "equator_at_1": equator,
        "equal": torus == full == equator,
    }


def suite_boundary(threads: int = 1, max_norm: int = 100) -> SuiteResult:
    orders = [e.name for e in corpus() if e.boundary]
    tasks = []
    for name in orders:
        for ell in cone_targets("Q", max_norm):
            tasks.append((name, tuple(ell.coords)))
    rows = _pmap(_w_boundary, tasks, threads)
    failures = [r for r in rows if not r["equal"]]
    # monotonicity on an 8-point eta grid
    grid = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]
    mono_rows = []
    mono_ok = True
    for name in orders:
        form = builtin_form(name + "-split")
        dirs = tuple(_split_directions(form))
        d = form.ctx.degree
        for ell in (5, 60, 97):
            for mode in ("near-torus", "near-equator"):
                counts = []
                for eta in grid:
                    q = ConstrainedCountQuery(
                        form, form.ctx.elem(ell), dirs, (eta,) * d, mode
                    )
                    counts.append(constrained_count(q).count)
                nondecreasing = all(a <= b for a, b in zip(counts, counts[1:]))
                mono_ok &= nondecreasing
                mono_rows.append(
                    {
                        "form": name,
                        "ell": ell,
                        "mode": mode,
                        "counts": counts,
                        "nondecreasing": nondecreasing,
                    }
                )
    ok = not failures and mono_ok
    return SuiteResult(
        name="boundary",
        ok=ok,
        rows=rows + mono_rows,
        summary={"targets": len(rows), "monotone_ok": mono_ok},
        failures=[json.dumps(f, sort_keys=True) for f in failures],
    )


# ---------------------------------------------------------------------------
# criterion 5: uniform-bound ratio stability


def _log_ladder(lo: int, hi: int, steps: int):
    out = set()
    for k in range(steps + 1):
        v = int(round(lo * (hi / lo) ** (k / steps)))
        if v > lo:
            out.add(v)
    return sorted(out)


def _w_shell_ratio(args):
    name, lemma, coords = args
    form = corpus_form(name)
    ell = form.ctx.elem(*coords)
    rep = rep_count(form, ell)
    return {
        "lemma": lemma,
        "form": name,
        "params": {"ell": _coords_str(coords), "norm": float(abs(ell.norm()))},
        "count": rep.count,
        "bound": rep.bound,
        "ratio": rep.ratio,
    }


def _w_averaged(args):
    name, mode, y = args
    form = corpus_form(name)
    rep = averaged_sum(form, mode, y)
    return {
        "lemma": "averaged-" + mode,
        "form": name,
        "params": {"mode": mode, "y": str(y)},
        "count": rep.count,
        "bound": rep.bound,
        "ratio": rep.ratio,
    }


def _w_constrained_ratio(args):
    name, coords, eta = args
    form = builtin_form(name + "-split")
    ctx = form.ctx
    ell = ctx.elem(*coords)
    dirs = tuple(_split_directions(form))
    d = ctx.degree
    out = []
    for mode in ("near-torus", "near-equator"):
        rep = constrained_count(
            ConstrainedCountQuery(form, ell, dirs, (eta,) * d, mode)
        )
        out.append(
            {
                "lemma": "angular-" + mode,
                "form": name,
                "params": {"ell": _coords_str(coords), "eta": eta},
                "count": rep.count,
                "bound": rep.bound,
                "ratio": rep.ratio,
            }
        )
    return out


def suite_ratios(threads: int = 1) -> SuiteResult:
    """Realized count/bound ratios across the corpus, with a regression
    guard: no ratio may exceed ten times its family median."""
    q2 = field_context("Qsqrt2")
    shell_tasks = []
    for entry in corpus():
        if entry.ratio_lemma is None:
            continue
        if entry.field == "Q":
            ladder = list(range(1, 201)) + _log_ladder(200, 10000, 28)
            targets = [(Fraction(v),) for v in ladder]
        else:
            targets = [tuple(e.coords) for e in cone_targets(entry.field, 300)]
            for base in (1000, 3000, 9900):
                ps = principal_primes_in_cone(q2, base, base + 150)
                targets.extend(tuple(p.coords) for p in ps[:2])
        shell_tasks.extend((entry.name, entry.ratio_lemma, t) for t in targets)
    shell_rows = _pmap(_w_shell_ratio, shell_tasks, threads)

    avg_tasks = []
    for name in ("lipschitz", "hurwitz", "eichler-2-3"):
        for y in (10, 100, 1000, 10000):
            avg_tasks.append((name, "e3", y))
        for y in (5, 10, 31):
            avg_tasks.append((name, "e1", y))
        avg_tasks.append((name, "e2", (3, 3)))
        avg_tasks.append((name, "e2", (5, 5)))
    avg_tasks.append(("lipschitz", "e1", 100))
    avg_tasks.append(("lipschitz", "e2", (10, 31)))
    avg_rows = _pmap(_w_averaged, avg_tasks, threads)

    con_tasks = []
    for name in ("lipschitz", "hurwitz", "eichler-2-3"):
        ladder = list(range(1, 51, 7)) + [101, 499, 1009, 4999, 9973]
        for ell in ladder:
            for eta in (0.3, 0.7):
                con_tasks.append((name, (Fraction(ell),), eta))
    con_rows = [r for rs in _pmap(_w_constrained_ratio, con_tasks, threads) for r in rs]

    rows = shell_rows + avg_rows + con_rows
    families: dict = {}
    for r in rows:
        families.setdefault(r["lemma"], []).append(r["ratio"])
    summary = {}
    failures = []
    ok = True
    for fam, ratios in sorted(families.items()):
        finite = [x for x in ratios if math.isfinite(x)]
        med = statistics.median(finite) if finite else 0.0
        mx = max(finite) if finite else 0.0
        guard = mx <= 10 * med if med > 0 else True
        ok &= guard
        if not guard:
            failures.append(f"{fam}: max ratio {mx:.4g} exceeds 10x median {med:.4g}")
        summary[fam] = {"n": len(ratios), "median": med, "max": mx, "guard_ok": guard}
    return SuiteResult(
        name="ratios", ok=ok, rows=rows, summary=summary, failures=failures
    )


# ---------------------------------------------------------------------------
# criterion 6: special function checks


def suite_special(seed: int = DEFAULT_SEED) -> SuiteResult:
    failures = []
    # p_{m,l}(1) = 1 exactly in floats
    unit_ok = True
    for m in range(0, 201):
        for l in {0, m // 3, m // 2, max(m - 1, 0), m}:
            if matrix_coeff(m, l, 1.0) != 1.0:
                unit_ok = False
                failures.append(f"p_({m},{l})(1) != 1")
    # norm formula vs quadrature
    norm_ok = True
    worst = 0.0
    for n in range(0, 31):
        for beta in (0, 2, 6, 12):
            exact = float(jacobi_norm_exact(n, 0, beta))
            quad = jacobi_norm_quadrature(n, 0, beta)
            err = abs(quad - exact) / max(1.0, exact)
            worst = max(worst, err)
            if err > 1e-10:
                norm_ok = False
                failures.append(f"norm ({n},0,{beta}) err {err:.2e}")
    # decay margin grid
    _, per_m, grid_max = decay_scan(max_m=200, l_exponent=0.9, t_steps=199)
    decay_ok = math.isfinite(grid_max)
    head = max(v for m, v in per_m.items() if m <= 50)
    tail = max(v for m, v in per_m.items() if m > 50)
    stable = tail <= head * (1 + 1e-9)
    if not (decay_ok and stable):
        failures.append(f"decay grid max {grid_max}, head {head}, tail {tail}")
    # character bound on a 10^5-point grid (asserted inside so4_character)
    ts = np.linspace(-1.0, 1.0, 1001)
    char_ok = True
    try:
        for m in range(1, 101):
            so4_character(m, ts)
    except AssertionError:
        char_ok = False
        failures.append("so4 character bound violated")
    # rotation parameter two-formula agreement on random samples
    Q = field_context("Q")
    alg = QuaternionAlgebra(Q, Q.elem(-1), Q.elem(-1))
    rng = random.Random(seed)
    t_ok = True
    done = 0
    while done < 1000:
        co = [rng.randint(-9, 9) for _ in range(4)]
        if not any(co):
            continue
        v = np.array([rng.gauss(0, 1) for _ in range(3)])
        nv = float(np.linalg.norm(v))
        if nv < 1e-6:
            continue
        x = (v / nv).tolist()
        try:
            t_parameter(alg.elem(*[Q.elem(c) for c in co]), [x], cross_check=True)
        except AssertionError:
            t_ok = False
            failures.append(f"t-parameter mismatch at sample {done}")
            break
        done += 1
    ok = unit_ok and norm_ok and decay_ok and stable and char_ok and t_ok
    return SuiteResult(
        name="special",
        ok=ok,
        rows=[],
        summary={
            "unit_value_ok": unit_ok,
            "norm_quadrature_worst": worst,
            "decay_grid_max": grid_max,
            "decay_head": head,
            "decay_tail": tail,
            "character_grid_ok": char_ok,
            "t_parameter_samples": done,
        },
        failures=failures,
    )


# ---------------------------------------------------------------------------
# criterion 7: reduction checks


def suite_reduction(seed: int = DEFAULT_SEED, threads: int = 1) -> SuiteResult:
    rng = random.Random(seed)
    rows = []
    failures = []
    for entry in corpus():
        form = corpus_form(entry.name)
        ctx = form.ctx
        red = reduce_form(form)
        n = form.n
        U = red.transform
        ident_ok = True
        for _ in range(1000):
            x = [ctx.elem(rng.randint(-9, 9)) for _ in range(n)]
            ux = [sum((U[i][j] * x[j] for j in range(n)), ctx.zero) for i in range(n)]
            if form.value(ux) != red.expansion_value(x):
                ident_ok = False
                break
        det_u = mat_det(ctx, [list(r) for r in U])
        unimodular = abs(det_u.norm()) == 1
        h_prod_ok = (
            abs(red.det_balanced.norm()) * 2 ** (ctx.degree * n)
            == abs(form.det.norm())
        )
        invariance_ok = True
        if ctx.degree == 1:
            targets = [ctx.elem(k) for k in range(0, 101)]
        else:
            targets = cone_targets(ctx.tag, 100, include_zero=True)
        for ell in targets:
            if rep_count(form, ell).count != rep_count(red.form, ell).count:
                invariance_ok = False
                break
        good = ident_ok and unimodular and h_prod_ok and invariance_ok
        if not good:
            failures.append(entry.name)
        rows.append(
            {
                "form": entry.name,
                "identity_ok": ident_ok,
                "det_u_unit": unimodular,
                "h_product_ok": h_prod_ok,
                "rep_invariance_ok": invariance_ok,
                "h1_witness": red.size_report.h1_witness(),
                "offdiag_over_diag": red.size_report.offdiag_over_diag,
                "h_balance": red.size_report.h_balance,
            }
        )
    return SuiteResult(
        name="reduction",
        ok=not failures,
        rows=rows,
        summary={"forms": len(rows)},
        failures=failures,
    )


# ---------------------------------------------------------------------------
# criterion 8: geometric-side cross-check


def suite_geometric(threads: int = 1) -> SuiteResult:
    form = builtin_form("lipschitz-split")
    ctx = form.ctx
    dirs = _split_directions(form)
    rows = []
    failures = []
    for L in (3, 5, 10):
        sets = build_sets(ctx, L, exclusions=(2,))
        rep = geometric_side(
            form, dirs, (0,), (0,), L, mode="trivial", sets=sets
        )
        S_indep = {}
        for i in (1, 2, 3, 4):
            S_indep[i] = float(
                sum(rep_count(form, ell).count for ell in sets.by_index(i))
            )
        bound_indep = assemble_bound(1, float(L), S_indep, "trivial")
        match_sums = rep.S == S_indep
        match_bound = rep.bound == bound_indep
        mat = geometric_side(form, dirs, (0,), (0,), L, mode="matrix", sets=sets)
        match_matrix = mat.S == rep.S and mat.bound == rep.bound
        good = match_sums and match_bound and match_matrix
        if not good:
            failures.append(f"L={L}")
        rows.append(
            {
                "L": L,
                "S": {str(k): v for k, v in rep.S.items()},
                "S_independent": {str(k): v for k, v in S_indep.items()},
                "bound": rep.bound,
                "bound_independent": bound_indep,
                "sums_equal": match_sums,
                "bound_equal": match_bound,
                "matrix_mode_equal": match_matrix,
            }
        )
    return SuiteResult(
        name="geometric",
        ok=not failures,
        rows=rows,
        summary={"L_values": [3, 5, 10]},
        failures=failures,
    )


# ---------------------------------------------------------------------------
# aggregate runner


SUITES = {
    "oracle": suite_oracle,
    "boundary": suite_boundary,
    "ratios": suite_ratios,
    "special": lambda threads=1: suite_special(),
    "reduction": lambda threads=1: suite_reduction(),
    "geometric": suite_geometric,
}


def run_suites(names=None, threads: int = 1) -> dict:
    names = list(names or SUITES)
    out = {}
    for name in names:
        out[name] = SUITES[name](threads=threads)
    return out


def determinism_payload(results: dict) -> bytes:
    return canonical_json({k: v.payload() for k, v in sorted(results.items())})
