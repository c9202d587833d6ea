"""Batch experiment runner: counting, reduction, scans, amplifier reports.

Every report command writes machine-readable CSV/JSON artifacts into the
output directory and renders a matplotlib figure next to them.  Outputs
are deterministic for a fixed config and seed at any parallelism degree;
wall-clock timings go to a separate run log so the data artifacts stay
byte-comparable.

Exit codes: 0 success, 1 invariant violation, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from .amplifier import (
    balance_exponents,
    build_sets,
    geometric_side,
    hybrid_interpolate,
    kappa_scan,
    optimize_profile,
    profile_polyline,
)
from .coeffs import decay_scan
from .corpus import builtin_form, builtin_order, corpus
from .counting import (
    ConstrainedCountQuery,
    constrained_count,
    rep_count,
)
from .fields import field_context
from .forms import (
    eigen_constants,
    eigen_range,
    form_from_json,
    form_to_json,
    reduce_form,
    subdeterminant_check,
)
from .quaternions import norm_form_split, order_from_json
from .suites import SUITES, _split_directions, determinism_payload, run_suites


class ConfigError(ValueError):
    pass


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    out = {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {path} does not exist")
    for line in p.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"malformed config line: {line!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _resolve_form(args):
    if getattr(args, "builtin", None):
        return builtin_form(args.builtin)
    if getattr(args, "form_json", None):
        doc = json.loads(Path(args.form_json).read_text())
        return form_from_json(doc)
    raise ConfigError("need --builtin or --form-json")


def _parse_ell(ctx, text: str):
    parts = [Fraction(p) for p in str(text).split(",")]
    return ctx.elem(*parts)


def _write_json(path: Path, payload):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _figure(out: Path, name: str, draw):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=150)
    draw(ax)
    fig.tight_layout()
    fig.savefig(out / name)
    plt.close(fig)
    return out / name


# ---------------------------------------------------------------------------
# subcommands


def cmd_exponents(args, out: Path) -> int:
    kappa = Fraction(args.kappa)
    opt = optimize_profile(kappa)
    bal_t, bal_v = balance_exponents(
        [(-1, 0), (Fraction(1, 2), Fraction(-1, 2)), (2, -1)]
    )
    s_vol = -bal_v / 2
    s_eig = (1 - opt.value) / 4
    payload = {
        "kappa": str(kappa),
        "profile_max": str(opt.value),
        "profile_argmax_points": [[i, str(b)] for i, b in opt.points],
        "profile_argmax_plateaus": [[i, str(b)] for i, b in opt.plateaus],
        "volume_balance_t": str(bal_t),
        "volume_balance_value": str(bal_v),
        "volume_saving": str(s_vol),
        "eigenvalue_saving": str(s_eig),
    }
    print(f"profile max at kappa={kappa}: {opt.value}")
    if s_vol > 0 and s_eig > 0:
        theta, c = hybrid_interpolate(s_vol, s_eig)
        payload["hybrid_theta"] = str(theta)
        payload["hybrid_saving"] = str(c)
        print(f"volume balance: t*={bal_t}, saving {s_vol}")
        print(f"hybrid interpolation: theta={theta}, joint saving {c}")
    rows = []
    polys = {}
    for i in (1, 2, 3, 4):
        poly = profile_polyline(kappa, i)
        polys[i] = poly
        for beta, val in poly:
            rows.append([i, str(beta), str(val), float(beta), float(val)])
    _write_csv(out / "figure1.csv", ["i", "beta", "value", "beta_float", "value_float"], rows)
    if args.scan:
        best, table = kappa_scan()
        payload["kappa_scan_best"] = [str(best[0]), str(best[1])]
        _write_csv(
            out / "kappa_scan.csv",
            ["kappa", "max_value"],
            [[str(k), str(v)] for k, v in table],
        )
        print(f"kappa scan minimum: {best[1]} at kappa={best[0]}")
    _write_json(out / "exponents.json", payload)

    def draw(ax):
        for i, poly in polys.items():
            xs = [float(b) for b, _ in poly]
            ys = [float(v) for _, v in poly]
            ax.plot(xs, ys, marker="o", ms=3, label=f"i={i}")
        ax.axhline(float(opt.value), ls="--", lw=0.8, color="grey")
        ax.set_xlabel("beta")
        ax.set_ylabel("exponent")
        ax.set_title(f"exponent profile at kappa={kappa}")
        ax.legend()

    _figure(out, "figure1.png", draw)
    return 0


def cmd_count(args, out: Path) -> int:
    form = _resolve_form(args)
    ell = _parse_ell(form.ctx, args.ell)
    if args.mode in ("near-torus", "near-equator"):
        d = form.ctx.degree
        dirs = tuple(_split_directions(form))
        eta = tuple(float(x) for x in str(args.eta).split(","))
        if len(eta) == 1:
            eta = eta * d
        rep = constrained_count(ConstrainedCountQuery(form, ell, dirs, eta, args.mode))
    else:
        rep = rep_count(form, ell)
    print(f"count = {rep.count} (bound {rep.bound:.6g}, ratio {rep.ratio:.6g})")
    _write_json(out / "count.json", rep.to_json(include_timing=False))
    _write_json(out / "run_log.json", {"wall_ms": rep.wall_ms})
    return 0


def cmd_reduce(args, out: Path) -> int:
    form = _resolve_form(args)
    red = reduce_form(form)
    sub = subdeterminant_check(red) if form.n >= 2 else None
    payload = {
        "form": form_to_json(form),
        "reduced_gram": form_to_json(red.form)["gram"],
        "transform": [[str(e.coords) for e in row] for row in red.transform],
        "h": [[str(c) for c in h.coords] for h in red.h],
        "size_report": {
            "offdiag_over_diag": red.size_report.offdiag_over_diag,
            "diag_over_h": red.size_report.diag_over_h,
            "h_balance": red.size_report.h_balance,
            "h_chain": red.size_report.h_chain,
            "h1_witness": red.size_report.h1_witness(),
        },
        "eigen_range": eigen_range(red.form),
        "eigen_constants": eigen_constants(red.form),
        "level_norm": form.level_norm,
    }
    if sub is not None:
        payload["subdeterminant"] = {
            "lhs": str(sub["lhs"]),
            "rhs": str(sub["rhs"]),
            "ratio": sub["ratio"],
        }
    _write_json(out / "reduce.json", payload)
    print(
        f"reduced rank-{form.n} form: h1 witness "
        f"{red.size_report.h1_witness():.4g}, level {form.level_norm}"
    )
    return 0


def cmd_decay_scan(args, out: Path) -> int:
    rows, per_m, grid_max = decay_scan(
        max_m=args.max_m, l_exponent=args.l_exponent, t_steps=args.t_steps
    )
    _write_csv(
        out / "decay_scan.csv",
        ["m", "l", "t", "coeff", "bound", "ratio"],
        [[r["m"], r["l"], r["t"], r["coeff"], r["bound"], r["ratio"]] for r in rows],
    )
    _write_json(
        out / "decay_scan.json",
        {"grid_max": grid_max, "max_m": args.max_m, "t_steps": args.t_steps},
    )
    print(f"decay margin grid max over m <= {args.max_m}: {grid_max:.6g}")

    def draw(ax):
        ms = sorted(per_m)
        ax.plot(ms, [per_m[m] for m in ms], lw=1.0)
        ax.set_xlabel("m")
        ax.set_ylabel("max ratio over (l, t) grid")
        ax.set_title("matrix coefficient decay margins")

    _figure(out, "decay_scan.png", draw)
    return 0


def cmd_amplify(args, out: Path) -> int:
    if args.builtin:
        order = builtin_order(args.builtin)
    elif args.order_json:
        order = order_from_json(json.loads(Path(args.order_json).read_text()))
    else:
        raise ConfigError("need --builtin or --order-json")
    split = norm_form_split(order)
    form = split.split_form
    exclusions = tuple(
        int(x) for x in str(args.exclude).split(",") if x
    ) or tuple(p for p, _ in _factor(order.reduced_disc_norm))
    m_tuple = tuple(int(x) for x in str(args.m).split(","))
    l_tuple = tuple(int(x) for x in str(args.l).split(","))
    dirs = _split_directions(form)
    rep = geometric_side(
        form, dirs, m_tuple, l_tuple, args.L, mode=args.coeff_mode, exclusions=exclusions
    )
    payload = rep.to_json(include_timing=False)
    payload["split_index"] = split.index
    payload["reduced_disc_norm"] = order.reduced_disc_norm
    _write_json(out / "amplify.json", payload)
    _write_json(out / "run_log.json", {"wall_ms": rep.wall_ms})
    _write_csv(
        out / "amplify_terms.csv",
        ["i", "ell", "norm", "count", "weighted"],
        [
            [r["i"], ";".join(r["ell"]), r["norm"], r["count"], r["weighted"]]
            for r in rep.per_ell
        ],
    )
    print(
        f"geometric side ({rep.mode}): B = {rep.bound:.6g}, "
        f"sup-norm proxy {rep.sup_norm_proxy:.6g}"
    )

    def draw(ax):
        idx = [1, 2, 3, 4]
        contrib = [rep.L ** (-2 - i / 2.0) * rep.S.get(i, 0.0) for i in idx]
        ax.bar([str(i) for i in idx], contrib)
        ax.set_xlabel("amplifier family")
        ax.set_ylabel("weighted contribution")
        ax.set_title(f"geometric side at L={rep.L:g} ({rep.mode})")

    _figure(out, "amplify.png", draw)
    return 0


def _factor(n):
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


def cmd_lemma_check(args, out: Path) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = run_suites(names, threads=args.threads)
    ok = all(r.ok for r in results.values())
    for name, r in results.items():
        print(f"suite {name}: {'PASS' if r.ok else 'FAIL'}")
        for f in r.failures[:5]:
            print(f"  failure: {f}")
    payload = {k: v.payload() for k, v in results.items()}
    _write_json(out / "lemma_check.json", payload)
    ratio_rows = []
    for r in results.values():
        for row in r.rows:
            if "ratio" in row and "lemma" in row:
                ratio_rows.append(
                    [
                        row["lemma"],
                        row["form"],
                        json.dumps(row["params"], sort_keys=True),
                        row["count"],
                        row["bound"],
                        row["ratio"],
                    ]
                )
    if ratio_rows:
        _write_csv(
            out / "lemma_ratios.csv",
            ["lemma", "form", "params", "count", "bound", "ratio"],
            ratio_rows,
        )

        def draw(ax):
            fams = sorted({r[0] for r in ratio_rows})
            for fam in fams:
                pts = [r for r in ratio_rows if r[0] == fam]
                xs = [max(r[4], 1e-9) for r in pts]
                ys = [r[5] for r in pts]
                ax.scatter(xs, ys, s=6, label=fam)
            ax.set_xscale("log")
            ax.set_xlabel("bound value")
            ax.set_ylabel("count / bound")
            ax.set_title("realized lemma ratios")
            ax.legend(fontsize=6)

        _figure(out, "lemma_ratios.png", draw)
    return 0 if ok else 1


def cmd_corpus(args, out: Path) -> int:
    rows = []
    for e in corpus():
        rows.append(
            {
                "name": e.name,
                "kind": e.kind,
                "field": e.field,
                "rank": e.rank,
                "oracle": e.oracle,
                "ratio_lemma": e.ratio_lemma,
                "boundary": e.boundary,
            }
        )
        print(f"{e.name:16s} {e.kind:6s} {e.field:8s} rank {e.rank}")
    _write_json(out / "corpus.json", rows)
    return 0


# ---------------------------------------------------------------------------
# entry point


def _apply_config_defaults(parsers, cfg: dict):
    """Install config values as argument defaults; command line still wins."""
    for p in parsers:
        for action in p._actions:
            key = action.dest.replace("_", "-")
            if key in cfg or action.dest in cfg:
                raw = cfg.get(key, cfg.get(action.dest))
                if isinstance(action.const, bool):
                    val = raw.lower() in ("1", "true", "yes")
                elif action.type is not None:
                    val = action.type(raw)
                else:
                    val = raw
                action.default = val


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="ampbound",
        description="reduction, counting and amplifier exponent experiments",
    )
    ap.add_argument("--config", help="flat key=value config file")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=20240801)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", help="exact exponent optimizations")
    p.add_argument("--kappa", default="3/20")
    p.add_argument("--scan", action="store_true", help="scan kappa over [1/10, 1/5]")

    p = sub.add_parser("count", help="representation / constrained counts")
    p.add_argument("--builtin")
    p.add_argument("--form-json")
    p.add_argument("--ell", required=True, help="target, coordinates comma-separated")
    p.add_argument("--mode", default="plain", choices=["plain", "near-torus", "near-equator"])
    p.add_argument("--eta", default="1.0")

    p = sub.add_parser("reduce", help="quasi-diagonal reduction report")
    p.add_argument("--builtin")
    p.add_argument("--form-json")

    p = sub.add_parser("decay-scan", help="matrix coefficient decay margins")
    p.add_argument("--max-m", type=int, default=200)
    p.add_argument("--l-exponent", type=float, default=0.9)
    p.add_argument("--t-steps", type=int, default=199)

    p = sub.add_parser("amplify", help="geometric side of the amplified bound")
    p.add_argument("--builtin")
    p.add_argument("--order-json")
    p.add_argument("--L", type=float, default=3.0)
    p.add_argument("--m", default="0")
    p.add_argument("--l", default="0")
    p.add_argument("--coeff-mode", default="matrix", choices=["matrix", "character", "trivial"])
    p.add_argument("--exclude", default="", help="comma-separated excluded ideal norms")

    p = sub.add_parser("lemma-check", help="run verification suites")
    p.add_argument(
        "--suite",
        default="all",
        choices=["all", "oracle", "boundary", "ratios", "special", "reduction", "geometric"],
    )

    sub.add_parser("corpus", help="list builtin experiments")
    parsers = [ap] + list(sub.choices.values())
    return ap, parsers


_COMMANDS = {
    "exponents": cmd_exponents,
    "count": cmd_count,
    "reduce": cmd_reduce,
    "decay-scan": cmd_decay_scan,
    "amplify": cmd_amplify,
    "lemma-check": cmd_lemma_check,
    "corpus": cmd_corpus,
}


def main(argv=None) -> int:
    ap, parsers = _build_parser()
    try:
        argv_list = list(sys.argv[1:] if argv is None else argv)
        if "--config" in argv_list:
            cfg_path = argv_list[argv_list.index("--config") + 1]
            _apply_config_defaults(parsers, _load_config(cfg_path))
        args = ap.parse_args(argv_list)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    except (ConfigError, ValueError, IndexError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args, out)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except (ValueError, AssertionError) as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
