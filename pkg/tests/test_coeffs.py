import math
import random
from fractions import Fraction

import numpy as np
import pytest

from ampbound.coeffs import (
    decay_margin,
    decay_scan,
    jacobi_eval,
    jacobi_eval_exact,
    jacobi_norm_exact,
    jacobi_norm_quadrature,
    matrix_coeff,
    product_coeff,
    so4_character,
    t_parameter,
)
from ampbound.fields import field_context
from ampbound.quaternions import QuaternionAlgebra


def test_jacobi_degree_zero_and_at_one():
    assert jacobi_eval(0, 3, 5, 0.37) == 1.0
    for n in (1, 5, 20, 100):
        for beta in (0, 2, 8):
            assert jacobi_eval(n, 0, beta, 1.0) == 1.0


def test_jacobi_p1_02_at_zero():
    assert jacobi_eval(1, 0, 2, 0.0) == -1.0
    assert jacobi_eval_exact(1, 0, 2, Fraction(0)) == -1


def test_jacobi_float_matches_exact():
    rng = random.Random(1)
    for _ in range(60):
        n = rng.randint(0, 50)
        alpha = rng.randint(0, 3)
        beta = rng.randint(0, 12)
        t = Fraction(rng.randint(-99, 99), 100)
        exact = jacobi_eval_exact(n, alpha, beta, t)
        approx = jacobi_eval(n, alpha, beta, float(t))
        assert abs(approx - float(exact)) <= 1e-10 * max(1.0, abs(float(exact)))


def test_jacobi_norm_exact_values():
    assert jacobi_norm_exact(0, 0, 0) == 2
    assert jacobi_norm_exact(1, 0, 0) == Fraction(2, 3)
    # the weight-space normalization: <P_{m-l}, P_{m-l}> = 2^(2l+1)/(2m+1)
    for m, l in ((3, 1), (7, 4), (12, 0)):
        n = m - l
        assert jacobi_norm_exact(n, 0, 2 * l) == Fraction(2 ** (2 * l + 1), 2 * m + 1)


def test_jacobi_norm_quadrature_agreement():
    for n in range(0, 31):
        for beta in (0, 2, 6):
            exact = float(jacobi_norm_exact(n, 0, beta))
            quad = jacobi_norm_quadrature(n, 0, beta)
            assert abs(quad - exact) <= 1e-10 * max(1.0, exact)


def test_jacobi_orthogonality_quadrature():
    x, w = np.polynomial.legendre.leggauss(80)
    for beta in (0, 4):
        for n in range(0, 31, 5):
            for n2 in range(0, 31, 7):
                if n == n2:
                    continue
                p = jacobi_eval(n, 0, beta, x)
                q = jacobi_eval(n2, 0, beta, x)
                val = float(np.sum(w * p * q * (1 + x) ** beta))
                assert abs(val) < 1e-8


def test_matrix_coeff_basics():
    for m, l in ((0, 0), (5, 3), (10, -7), (40, 40)):
        assert matrix_coeff(m, l, 1.0) == 1.0
    # extreme weight: ((1+t)/2)^m
    for t in (-0.5, 0.0, 0.8):
        assert abs(matrix_coeff(6, 6, t) - ((1 + t) / 2) ** 6) < 1e-14
    # symmetry in l
    for t in (-0.9, 0.1, 0.6):
        assert matrix_coeff(9, 4, t) == matrix_coeff(9, -4, t)
    with pytest.raises(ValueError):
        matrix_coeff(3, 5, 0.0)


def test_matrix_coeff_legendre_value():
    # P_10(0) = -63/256
    assert abs(matrix_coeff(10, 0, 0.0) - 63 / 256) < 1e-14


def test_matrix_coeff_bounded_by_one():
    rng = random.Random(2)
    for _ in range(300):
        m = rng.randint(0, 120)
        l = rng.randint(-m, m) if m else 0
        t = rng.uniform(-1, 1)
        assert matrix_coeff(m, l, t) <= 1.0 + 1e-12


def test_decay_margin_example():
    val = decay_margin(10, 0, 0.0)
    assert abs(val - (63 / 256) / math.sqrt(1 / 11)) < 1e-12
    with pytest.raises(ValueError):
        decay_margin(5, 0, 1.0)


def test_decay_margin_extreme_weight_small():
    # l = m at t = 0: coefficient 2^-m crushes the bound
    assert decay_margin(12, 12, 0.0) < 0.01


def test_decay_scan_finite_and_stable():
    rows, per_m, grid_max = decay_scan(max_m=60, t_steps=99)
    assert math.isfinite(grid_max)
    head = max(v for m, v in per_m.items() if m <= 20)
    tail = max(v for m, v in per_m.items() if m > 20)
    assert tail <= head * (1 + 1e-9)


def test_product_coeff():
    assert product_coeff((3,), (1,), (0.4,)) == matrix_coeff(3, 1, 0.4)
    assert product_coeff((4, 9), (0, 2), (1.0, 1.0)) == 1.0
    val = product_coeff((2, 2), (0, 0), (0.0, 0.0))
    assert abs(val - 0.25) < 1e-14  # Legendre P_2(0) = -1/2 squared


def test_so4_character_values():
    assert so4_character(7, 1.0) == 1.0
    assert so4_character(7, -1.0) == -1.0
    assert so4_character(6, -1.0) == 1.0
    for t in (-0.7, 0.0, 0.3):
        assert abs(so4_character(1, t) - t) < 1e-14
    assert abs(so4_character(2, 0.0) + 1 / 3) < 1e-14


def test_so4_character_bound_grid():
    ts = np.linspace(-1, 1, 2001)
    for m in range(0, 50):
        vals = so4_character(m, ts)  # bound asserted internally
        assert np.all(np.abs(vals) <= 1 + 1e-12)


def test_t_parameter_hamilton():
    Q = field_context("Q")
    alg = QuaternionAlgebra(Q, Q.elem(-1), Q.elem(-1))
    one = alg.elem(1, 0, 0, 0)
    i = alg.elem(0, 1, 0, 0)
    assert t_parameter(one, [[0.0, 0.0, 1.0]]) == (1.0,)
    # conjugation by i rotates by pi about the i-axis
    assert t_parameter(i, [[0.0, 0.0, 1.0]]) == (-1.0,)
    assert t_parameter(i, [[1.0, 0.0, 0.0]]) == (1.0,)


def test_t_parameter_two_formula_agreement_random():
    Q = field_context("Q")
    alg = QuaternionAlgebra(Q, Q.elem(-1), Q.elem(-1))
    rng = random.Random(9)
    done = 0
    while done < 1000:
        co = [rng.randint(-9, 9) for _ in range(4)]
        if not any(co):
            continue
        z = alg.elem(*[Q.elem(c) for c in co])
        v = np.array([rng.gauss(0, 1) for _ in range(3)])
        nv = float(np.linalg.norm(v))
        if nv < 1e-3:
            continue
        x = v / nv
        x = x / math.sqrt(float(x @ x))
        (t,) = t_parameter(z, [x.tolist()], cross_check=True)
        assert -1.0 <= t <= 1.0
        done += 1


def test_t_parameter_sqrt2():
    Q2 = field_context("Qsqrt2")
    alg = QuaternionAlgebra(Q2, Q2.elem(-1), Q2.elem(-1))
    z = alg.elem(Q2.elem(2, 1), Q2.elem(1), Q2.zero, Q2.zero)
    ts = t_parameter(z, [[0, 0, 1.0], [0, 0, 1.0]])
    assert len(ts) == 2
    assert all(-1 <= t <= 1 for t in ts)
