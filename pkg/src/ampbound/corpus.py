"""Built-in orders, forms and the experiment corpus used by the test suites."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .fields import FieldElement, cone_reduce, field_context, integers_in_box
from .forms import QuadraticForm, validate_form
from .quaternions import (
    QuaternionAlgebra,
    QuaternionOrder,
    builtin_eichler_order,
    norm_form_split,
    order_from_basis,
)

_ORDER_NAMES = ("lipschitz", "hurwitz", "eichler-2-3")


@lru_cache(maxsize=None)
def builtin_order(name: str) -> QuaternionOrder:
    Q = field_context("Q")
    alg = QuaternionAlgebra(Q, Q.elem(-1), Q.elem(-1))
    if name == "lipschitz":
        return order_from_basis(
            alg, [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]
        )
    if name == "hurwitz":
        return order_from_basis(
            alg,
            [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), ("1/2", "1/2", "1/2", "1/2")],
        )
    if name.startswith("eichler-"):
        _, p, n = name.split("-")
        return builtin_eichler_order(int(p), int(n))
    raise KeyError(f"unknown builtin order {name!r}")


@lru_cache(maxsize=None)
def builtin_form(name: str) -> QuadraticForm:
    Q = field_context("Q")
    Q2 = field_context("Qsqrt2")
    base = {
        "binary-disc3": (Q, [[2, 1], [1, 2]]),
        "ternary-2i3": (Q, [[2, 0, 0], [0, 2, 0], [0, 0, 2]]),
        "pell-binary": (Q, [[2, 20], [20, 202]]),
        "binary-sqrt2": (Q2, [[2, [0, 1]], [[0, 1], 4]]),
        "ternary-sqrt2": (Q2, [[2, 0, [0, 1]], [0, 2, 0], [[0, 1], 0, 4]]),
        "quaternary-sqrt2": (
            Q2,
            [[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, 2, 0], [0, 0, 0, 2]],
        ),
    }
    if name in base:
        ctx, gram = base[name]
        return validate_form(ctx, gram)
    for suffix in ("-split", "-ternary"):
        if name.endswith(suffix):
            order = builtin_order(name[: -len(suffix)])
            split = norm_form_split(order)
            return split.split_form if suffix == "-split" else split.ternary
    if name in _ORDER_NAMES:
        return builtin_order(name).gram
    raise KeyError(f"unknown builtin form {name!r}")


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    kind: str  # 'order' or 'form'
    field: str
    rank: int
    oracle: bool  # participates in the brute-force equivalence sweep
    ratio_lemma: str | None  # uniform-bound family, when applicable
    boundary: bool  # split-form angular boundary checks


def corpus() -> list[CorpusEntry]:
    """The experiments exercised by the acceptance suites."""
    return [
        CorpusEntry("lipschitz", "order", "Q", 4, True, "quaternary", True),
        CorpusEntry("hurwitz", "order", "Q", 4, True, "quaternary", True),
        CorpusEntry("eichler-2-3", "order", "Q", 4, True, "quaternary", True),
        CorpusEntry("binary-disc3", "form", "Q", 2, True, None, False),
        CorpusEntry("ternary-2i3", "form", "Q", 3, True, "ternary", False),
        CorpusEntry("pell-binary", "form", "Q", 2, True, None, False),
        CorpusEntry("binary-sqrt2", "form", "Qsqrt2", 2, True, None, False),
        CorpusEntry("ternary-sqrt2", "form", "Qsqrt2", 3, True, "ternary", False),
    ]


def corpus_form(name: str) -> QuadraticForm:
    if name in _ORDER_NAMES:
        return builtin_order(name).gram
    return builtin_form(name)


@lru_cache(maxsize=None)
def cone_targets(tag: str, max_norm: int, include_zero: bool = False):
    """Canonical totally positive targets with norm <= max_norm.

    Over Q these are 1..max_norm; over a quadratic field, one fundamental-
    cone representative per unit class.
    """
    ctx = field_context(tag)
    out = [ctx.zero] if include_zero else []
    if ctx.degree == 1:
        out.extend(ctx.elem(k) for k in range(1, max_norm + 1))
        return tuple(out)
    eps1 = ctx.tp_unit.embed()[0]
    bound = math.sqrt(max_norm * eps1) * (1 + 1e-9)
    seen = {}
    for x in integers_in_box(ctx, (bound, bound)):
        if x.sign_at(0) < 0:
            x = -x
        if not x.is_totally_positive():
            continue
        if x.norm() > max_norm:
            continue
        _, y = cone_reduce(x)
        seen[y.coords] = y
    reps = sorted(seen.values(), key=lambda e: (e.norm(), e.sort_key()))
    out.extend(reps)
    return tuple(out)
