import math
import random
from fractions import Fraction

import pytest

from ampbound.fields import (
    FieldError,
    cone_coordinate,
    cone_reduce,
    evaluate,
    field_context,
    integers_in_box,
    principal_primes_in_cone,
    units_in_box,
)

Q = field_context("Q")
Q2 = field_context("Qsqrt2")
Q5 = field_context("Qsqrt5")


def test_evaluate_sqrt2():
    emb, nrm = evaluate(Q2.elem(0, 1))
    assert abs(emb[0] - math.sqrt(2)) < 1e-12
    assert abs(emb[1] + math.sqrt(2)) < 1e-12
    assert nrm == -2


def test_evaluate_one():
    for ctx in (Q, Q2, Q5):
        emb, nrm = evaluate(ctx.one)
        assert all(abs(v - 1.0) < 1e-12 for v in emb)
        assert nrm == 1


def test_evaluate_two_plus_sqrt2():
    # (2 + sqrt2)(2 - sqrt2) = 2, exact integer arithmetic
    x = Q2.elem(2, 1)
    assert x.norm() == 2
    assert (x * x.conj()).coords[0] == 2


def test_ring_ops_exact():
    x = Q2.elem(3, -2)
    y = Q2.elem(Fraction(1, 2), 5)
    assert (x + y) - y == x
    assert (x * y) / y == x
    assert (x * y).norm() == x.norm() * y.norm()


def test_fundamental_units_catalog():
    assert Q2.fundamental_unit == Q2.elem(1, 1)  # 1 + sqrt2
    assert Q5.fundamental_unit == Q5.elem(0, 1)  # (1 + sqrt5)/2
    for ctx in (Q2, Q5):
        assert abs(ctx.fundamental_unit.norm()) == 1
        assert ctx.tp_unit.is_totally_positive()
        assert ctx.tp_unit.norm() == 1


def test_fundamental_unit_generic_config():
    # Pell route: D=3 gives 2+sqrt3, D=13 gives (3+sqrt13)/2
    ctx3 = field_context("QsqrtD:D=3")
    assert ctx3.fundamental_unit == ctx3.elem(2, 1)
    ctx13 = field_context("QsqrtD:D=13")
    u = ctx13.fundamental_unit
    assert abs(u.norm()) == 1
    assert abs(u.embed()[0] - (3 + math.sqrt(13)) / 2) < 1e-9


def test_units_in_box_rational():
    us = units_in_box(Q, (5,))
    assert sorted(u.coords[0] for u in us) == [-1, 1]
    assert units_in_box(Q, (Fraction(1, 2),)) == []


def test_units_in_box_sqrt2():
    us = units_in_box(Q2, (10, 10))
    assert len(us) == 10  # +-(1+sqrt2)^k for -2 <= k <= 2
    for u in us:
        assert abs(u.norm()) == 1
        assert all(abs(v) <= 10 + 1e-12 for v in u.embed())
    assert units_in_box(Q2, (0.5, 0.5)) == []


def test_integers_in_box_rational():
    xs = integers_in_box(Q, (7.5,))
    assert len(xs) == 14


def test_integers_in_box_sqrt2():
    xs = integers_in_box(Q2, (3, 3))
    assert len(xs) == 14
    # closed under negation
    coords = {x.coords for x in xs}
    assert all((-x).coords in coords for x in xs)


def test_integers_in_box_empty_below_norm_one():
    assert integers_in_box(Q2, (0.9, 0.9)) == []
    assert integers_in_box(Q, (0.9,)) == []


def test_cone_reduce_rational():
    u, y = cone_reduce(Q.elem(7))
    assert u == Q.one and y == Q.elem(7)
    with pytest.raises(FieldError):
        cone_reduce(Q.elem(-3))


def test_cone_reduce_sqrt2_example():
    eps = Q2.tp_unit  # (1+sqrt2)^2 = 3+2sqrt2
    assert eps == Q2.elem(3, 2)
    x = eps * 3
    u, y = cone_reduce(x)
    assert y == Q2.elem(3, 0)
    assert u == eps.inverse()
    # idempotence
    u2, y2 = cone_reduce(y)
    assert u2 == Q2.one and y2 == y


def test_cone_reduce_translate_invariance():
    eps = Q2.tp_unit
    x = Q2.elem(5, 1)
    if not x.is_totally_positive():
        x = -x
    _, y0 = cone_reduce(x)
    for k in (-3, -1, 2, 4):
        _, y = cone_reduce(x * eps ** k)
        assert y == y0


def test_cone_reduce_boundary_exact():
    # 2+sqrt2 sits exactly on the cone boundary; the half-open convention
    # sends it to 2-sqrt2
    x = Q2.elem(2, 1)
    u, y = cone_reduce(x)
    assert y == Q2.elem(2, -1)
    # float readback of the exact boundary value -1/2
    assert -0.5 - 1e-9 <= cone_coordinate(y) < 0.5


def test_principal_primes_rational():
    ps = principal_primes_in_cone(Q, 3, 6, avoid=(2,))
    assert [p.coords[0] for p in ps] == [3, 5]
    assert principal_primes_in_cone(Q, 3, 6, avoid=(2, 3, 5)) == []


def test_principal_primes_sqrt2():
    ps = principal_primes_in_cone(Q2, 2, 10)
    norms = [int(p.norm()) for p in ps]
    assert norms == [2, 7, 7, 9]
    assert Q2.elem(2, -1) in ps  # cone representative of (sqrt2)
    assert Q2.elem(3, 0) in ps  # inert 3, norm 9
    assert 25 not in norms  # 5 is inert, norm 25 > 10
    for p in ps:
        assert p.is_totally_positive()
        n = int(p.norm())
        root = round(n ** 0.5)
        assert (root * root == n and _is_prime(root)) or _is_prime(n)


def _is_prime(n):
    if n < 2:
        return False
    for d in range(2, int(n ** 0.5) + 1):
        if n % d == 0:
            return False
    return True


def test_principal_primes_deterministic_order():
    a = principal_primes_in_cone(Q2, 2, 60)
    b = principal_primes_in_cone(Q2, 2, 60)
    assert a == b
    norms = [int(p.norm()) for p in a]
    assert norms == sorted(norms)


def test_units_in_box_count_vs_bound():
    from ampbound.fields import units_box_bound

    # fitted constant stays modest across growing boxes
    worst = 0.0
    for A in (2, 10, 100, 1000):
        count = len(units_in_box(Q2, (A, A)))
        worst = max(worst, count / units_box_bound(Q2, (A, A)))
    assert 0 < worst < 10


def test_units_in_box_symmetric_under_embedding_swap():
    for A in ((10, 3), (100, 7), (2, 50)):
        a = len(units_in_box(Q2, A))
        b = len(units_in_box(Q2, A[::-1]))
        assert a == b  # conjugation swaps the embeddings


def test_integers_in_box_unbalanced():
    # product of bounds 1.5 >= 1: the box contains +-(sqrt2 - 1)
    xs = integers_in_box(Q2, (0.5, 3))
    assert {x.coords for x in xs} == {(-1, 1), (1, -1)}
    count = len(integers_in_box(Q2, (100, 100)))
    assert 0 < count / (100 * 100) < 4  # count << prod A_j


def test_unit_norms_exact_random_products():
    rng = random.Random(7)
    for _ in range(200):
        x = Q5.elem(rng.randint(-9, 9), rng.randint(-9, 9))
        y = Q5.elem(rng.randint(-9, 9), rng.randint(-9, 9))
        assert (x * y).norm() == x.norm() * y.norm()
        emb_x = x.embed()
        prod = emb_x[0] * emb_x[1]
        assert abs(prod - float(x.norm())) <= 1e-9 * max(1.0, abs(prod))
