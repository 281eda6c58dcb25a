"""Logarithmic-node quadrature schemes against telescoping identities,
frequency annihilation, and the trapezoid oracle."""

import math

import numpy as np
import pytest

from zsk import (ModulusOfContinuity, NodeScheme, PeriodicFunction, ReductionPlan,
                 integral_cf_nodes, integral_derivative_form, integral_lattice_nodes,
                 integral_logM, integral_rational_base, integral_transformed,
                 node_stream, periodic_trapezoid_integral, tail_bound)
from zsk.quadrature import _inner_g_series

from conftest import make_smooth_test_set

ONES = lambda x: np.ones_like(np.asarray(x, dtype=float))
IDENT = lambda x: np.asarray(x, dtype=float)


def harmonic_difference(a: int, b: int) -> float:
    """H_b - H_a by exact-ish summation (fsum oracle)."""
    return math.fsum(1.0 / k for k in range(a + 1, b + 1))


# ---------------------------------------------------------------------------
# plain scheme
# ---------------------------------------------------------------------------

def test_telescoping_exactness_m2():
    one = PeriodicFunction(fn=ONES)
    n = 50_000
    res = integral_logM(one, 2, n)
    assert abs(res.raw_series_sum - harmonic_difference(n, 2 * n)) < 10 * n * 2 ** -52


def test_telescoping_exactness_m3_and_value():
    one = PeriodicFunction(fn=ONES)
    n = 100_000
    res = integral_logM(one, 3, n)
    assert abs(res.raw_series_sum - harmonic_difference(n, 3 * n)) < 1e-12
    assert abs(integral_logM(one, 3, 10 ** 6).value - 1.0) < 1e-5


@pytest.mark.parametrize("M", [2, 3])
@pytest.mark.parametrize("l", [1, 2, 3])
def test_frequency_annihilation(M, l):
    groups = 10 ** 6
    re = integral_logM(PeriodicFunction(fn=lambda x, l=l: np.cos(2 * np.pi * l * x)),
                       M, groups)
    im = integral_logM(PeriodicFunction(fn=lambda x, l=l: np.sin(2 * np.pi * l * x)),
                       M, groups)
    mag = math.hypot(re.value, im.value)
    assert mag <= re.tail_estimate + im.tail_estimate + 1e-3


def test_sin_squared_plain_and_convergence_trend():
    f = PeriodicFunction(fn=lambda x: np.sin(2 * np.pi * x) ** 2)
    r6 = integral_logM(f, 2, 10 ** 6)
    r5 = integral_logM(f, 2, 10 ** 5)
    assert abs(r6.value - 0.5) < 1e-4
    assert abs(r5.value - 0.5) >= 3.0 * abs(r6.value - 0.5)


def test_oracle_agreement_plain(smooth_test_set):
    for f, _exact in smooth_test_set:
        oracle = periodic_trapezoid_integral(f, 2 ** 16)
        res = integral_logM(f, 2, 2 * 10 ** 5)
        assert abs(res.value - oracle) <= res.tail_estimate + 1e-4


def test_quadrature_result_fields():
    f = PeriodicFunction(fn=ONES)
    res = integral_logM(f, 2, 1000)
    assert res.value == res.raw_series_sum / res.normalizer
    assert res.normalizer == math.log(2.0)
    assert res.groups_used == 1000
    assert math.isfinite(res.tail_estimate) and res.tail_estimate >= 0


def test_input_validation():
    f = PeriodicFunction(fn=ONES)
    with pytest.raises(ValueError):
        integral_logM(f, 1, 10)
    with pytest.raises(ValueError):
        integral_logM(f, 2, 0)


# ---------------------------------------------------------------------------
# determinism under the reduction plan
# ---------------------------------------------------------------------------

def test_threaded_reduction_bit_identical():
    f = PeriodicFunction(fn=lambda x: np.sin(2 * np.pi * x) ** 2)
    seq = integral_logM(f, 2, 3 * 10 ** 5, ReductionPlan(threads=1, chunk=8192))
    par = integral_logM(f, 2, 3 * 10 ** 5, ReductionPlan(threads=8, chunk=8192))
    assert seq.raw_series_sum == par.raw_series_sum
    assert seq.value == par.value


# ---------------------------------------------------------------------------
# transformed nodes
# ---------------------------------------------------------------------------

def _phi_pair():
    phi = lambda x: np.asarray(x, dtype=float) + np.sin(2 * np.pi * np.asarray(x)) / (4 * np.pi)
    phip = lambda x: 1.0 + np.cos(2 * np.pi * np.asarray(x)) / 2.0
    return phi, phip


def test_transformed_identity_substitution():
    f = PeriodicFunction(fn=lambda x: np.cos(2 * np.pi * x))
    direct = integral_logM(f, 2, 20_000)
    via = integral_transformed(f, IDENT, ONES, 2, 20_000)
    assert via.raw_series_sum == direct.raw_series_sum


def test_transformed_constant():
    phi, phip = _phi_pair()
    one = PeriodicFunction(fn=ONES)
    res = integral_transformed(one, phi, phip, 2, 2 * 10 ** 5)
    assert abs(res.value - 1.0) < 1e-4


def test_transformed_sin_squared_against_oracle():
    phi, phip = _phi_pair()
    f = PeriodicFunction(fn=lambda x: np.sin(2 * np.pi * x) ** 2)
    oracle = periodic_trapezoid_integral(f, 2 ** 16)
    res = integral_transformed(f, phi, phip, 2, 10 ** 6)
    assert abs(res.value - oracle) < 1e-3


def test_transformed_rejects_bad_phi():
    f = PeriodicFunction(fn=ONES)
    with pytest.raises(ValueError):
        integral_transformed(f, lambda x: 2.0 * np.asarray(x), lambda x: 2.0 * ONES(x),
                             2, 100)


# ---------------------------------------------------------------------------
# lattice nodes chi({log_M m})
# ---------------------------------------------------------------------------

def _digit_scheme(M):
    ln = math.log(M)
    chi = lambda x: np.asarray(M, dtype=float) ** np.asarray(x) - 1.0
    phi = lambda y: np.log1p(np.asarray(y, dtype=float)) / ln
    phip = lambda y: 1.0 / ((1.0 + np.asarray(y, dtype=float)) * ln)
    return chi, phi, phip


def test_lattice_nodes_rational_node_values():
    # chi(x) = M^x - 1 sends {log_M m} to m / M^floor(log_M m) - 1: scaled
    # rationals p / M^q
    chi, phi, phip = _digit_scheme(2)
    rows = list(node_stream(NodeScheme.lattice(2, 1, chi, phi, phip), 8))
    for row in rows:
        scaled = row.node * 2 ** 10
        assert abs(scaled - round(scaled)) < 1e-6


def test_lattice_nodes_constant_m2():
    chi, phi, phip = _digit_scheme(2)
    one = PeriodicFunction(fn=ONES)
    res = integral_lattice_nodes(one, ONES, chi, phi, phip, 1, 2, 2 * 10 ** 5)
    assert abs(res.value - 1.0) < 1e-4


def test_lattice_nodes_cos_m2():
    chi, phi, phip = _digit_scheme(2)
    f = PeriodicFunction(fn=lambda x: np.cos(2 * np.pi * x))
    res = integral_lattice_nodes(f, ONES, chi, phi, phip, 1, 2, 10 ** 6)
    assert abs(res.value) < 1e-3


def test_lattice_nodes_m3_with_matched_g():
    # for M >= 3 the G-corrected composite is only admissible when
    # g(1) phi'(L) = g(0) phi'(0); g(x) = 1 + (M-1) x arranges that
    chi, phi, phip = _digit_scheme(3)
    g = lambda x: 1.0 + 2.0 * np.asarray(x, dtype=float)
    one = PeriodicFunction(fn=ONES)
    res = integral_lattice_nodes(one, g, chi, phi, phip, 2, 3, 10 ** 6)
    assert abs(res.value - 1.0) < 1e-3


def test_lattice_nodes_reduces_to_plain():
    f = PeriodicFunction(fn=lambda x: np.cos(2 * np.pi * x))
    red = integral_lattice_nodes(f, ONES, IDENT, IDENT, ONES, 1, 2, 20_000)
    ref = integral_logM(f, 2, 20_000)
    assert red.raw_series_sum == ref.raw_series_sum


def test_lattice_nodes_rejects_mismatched_inverse():
    one = PeriodicFunction(fn=ONES)
    with pytest.raises(ValueError):
        integral_lattice_nodes(one, ONES, lambda x: 2 * np.asarray(x), IDENT, ONES,
                               1, 2, 100)


def test_lattice_nodes_division_floor():
    one = PeriodicFunction(fn=ONES)
    tiny_g = lambda x: 1e-15 * ONES(x)
    with pytest.raises(ValueError):
        integral_lattice_nodes(one, tiny_g, IDENT, IDENT, tiny_g, 1, 2, 100,
                               inner_tol=1e-9)


# ---------------------------------------------------------------------------
# continued-fraction nodes L/{log_M m}
# ---------------------------------------------------------------------------

def test_cf_inner_series_against_brute_force():
    # G(x) = sum_{n>=L} (n+x)^-2 for g == 1: trigamma-style direct sum
    for L, x in ((1, 0.3), (2, 0.0), (3, 0.77)):
        got = float(_inner_g_series(ONES, L, np.asarray([x]), 1e-12)[0])
        brute = math.fsum((n + x) ** -2 for n in range(L, 2 * 10 ** 6))
        brute += 1.0 / (2 * 10 ** 6 + x - 0.5)  # integral tail of the oracle
        assert abs(got - brute) < 1e-10


def test_cf_constant():
    one = PeriodicFunction(fn=ONES)
    res = integral_cf_nodes(one, ONES, 1, 2, 10 ** 5)
    assert abs(res.value - 1.0) < 2e-2


def test_cf_sin_squared_against_oracle():
    f = PeriodicFunction(fn=lambda x: np.sin(2 * np.pi * x) ** 2)
    oracle = periodic_trapezoid_integral(f, 2 ** 16)
    res = integral_cf_nodes(f, ONES, 1, 2, 10 ** 6)
    assert abs(res.value - oracle) < 2e-2


# ---------------------------------------------------------------------------
# rational base
# ---------------------------------------------------------------------------

def test_rational_base_telescoping():
    one = PeriodicFunction(fn=ONES)
    n = 100_000
    res = integral_rational_base(one, 3, 2, n)
    target = harmonic_difference(2 * n, 3 * n)  # H_3n - H_2n
    assert abs(res.raw_series_sum - target) < 1e-11
    assert abs(integral_rational_base(one, 3, 2, 10 ** 6).value - 1.0) < 1e-5


def test_rational_base_agrees_with_plain_on_common_base():
    # (4, 2) and plain(2) share ln 2: same integral, different node families
    f = PeriodicFunction(fn=lambda x: np.sin(2 * np.pi * x) ** 2)
    r_rat = integral_rational_base(f, 4, 2, 10 ** 6)
    r_pl = integral_logM(f, 2, 10 ** 6)
    assert abs(r_rat.value - r_pl.value) < 2e-3


def test_rational_base_sin_squared():
    f = PeriodicFunction(fn=lambda x: np.sin(2 * np.pi * x) ** 2)
    res = integral_rational_base(f, 3, 2, 10 ** 6)
    assert abs(res.value - 0.5) < 1e-3


def test_rational_base_scheme_consistency():
    # (4,2), (6,3) and plain(2): integer multiples of one rational base
    for f, exact in make_smooth_test_set():
        vals = [integral_rational_base(f, 4, 2, 2 * 10 ** 5).value,
                integral_rational_base(f, 6, 3, 2 * 10 ** 5).value,
                integral_logM(f, 2, 2 * 10 ** 5).value]
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                assert abs(vals[i] - vals[j]) < 2e-3


def test_rational_base_rejects_equal_bases():
    with pytest.raises(ValueError):
        integral_rational_base(PeriodicFunction(fn=ONES), 3, 3, 100)


# ---------------------------------------------------------------------------
# derivative form
# ---------------------------------------------------------------------------

def test_derivative_form_constant():
    one = PeriodicFunction(fn=ONES)
    res = integral_derivative_form(one, 3, 2, 2, 10 ** 6)
    assert abs(res.value - 1.0) < 1e-2


def test_derivative_form_constant_base_one():
    one = PeriodicFunction(fn=ONES)
    res = integral_derivative_form(one, 2, 1, 2, 10 ** 6)
    assert abs(res.value - 1.0) < 1e-2


def test_derivative_form_cos():
    f = PeriodicFunction(fn=lambda x: np.cos(2 * np.pi * x))
    res = integral_derivative_form(f, 3, 2, 2, 10 ** 6)
    assert abs(res.value) < 1e-2


def test_derivative_form_validation():
    one = PeriodicFunction(fn=ONES)
    with pytest.raises(ValueError):
        integral_derivative_form(one, 3, 2, 1, 100)
    with pytest.raises(ValueError):
        integral_derivative_form(one, 3, 2, 7, 100)
    with pytest.raises(ValueError):
        integral_derivative_form(one, 3, 3, 2, 100)


# ---------------------------------------------------------------------------
# tail bounds
# ---------------------------------------------------------------------------

def test_tail_bound_lipschitz_decay(abs_sin):
    # closed-form comparison says the bound decays like 1/N
    b5 = tail_bound(abs_sin, 2, 10 ** 5)
    b6 = tail_bound(abs_sin, 2, 10 ** 6)
    assert b6 < b5 / 5.0


def test_tail_bound_covers_actual_error(abs_sin):
    res = integral_logM(abs_sin, 2, 2 * 10 ** 5)
    assert not res.tail_is_heuristic
    assert abs(res.value - 2.0 / math.pi) <= res.tail_estimate


def test_tail_bound_constant_uses_weight_part_only():
    f = PeriodicFunction(
        fn=lambda x: 0.25 * np.ones_like(x),
        modulus=ModulusOfContinuity(kind="custom", rho_fn=lambda u: u, constant=1e-12))
    # rho part ~ 0, so the bound is essentially max|f| * sum_k ln-terms / M
    b = tail_bound(f, 2, 10 ** 4)
    weight_part = 0.25 * (1.0 / (2 * 10001 * (2 * 10001 - 1))
                          + math.log(2 * 10001 / (2 * 10001 - 1)) / 2)
    assert b == pytest.approx(weight_part, rel=1e-3)


def test_tail_bound_loglog_finite():
    f = PeriodicFunction(
        fn=lambda x: np.sin(2 * np.pi * x),
        modulus=ModulusOfContinuity(kind="loglog", b=2.0, constant=1.0))
    assert f.modulus.is_class_b(L=0)
    for n in (10 ** 3, 10 ** 5, 10 ** 7):
        b = tail_bound(f, 2, n)
        assert math.isfinite(b) and b > 0


def test_tail_bound_requires_modulus():
    with pytest.raises(ValueError):
        tail_bound(PeriodicFunction(fn=ONES), 2, 100)


def test_lipschitz_modulus_is_class_b():
    assert ModulusOfContinuity(kind="lipschitz", exponent=0.5).is_class_b(L=0)
    assert ModulusOfContinuity(kind="lipschitz", exponent=1.0).is_class_b(L=2)


# ---------------------------------------------------------------------------
# PeriodicFunction behavior
# ---------------------------------------------------------------------------

def test_periodic_reduction():
    f = PeriodicFunction(fn=lambda x: np.asarray(x, dtype=float))
    x = np.array([0.25, 1.25, -0.75, 7.25])
    assert np.allclose(f(x), 0.25)


def test_periodic_modulus_spot_check(abs_sin):
    assert abs_sin.check_modulus(pairs=512) <= 1.0 + 1e-9


def test_scalar_rule_wrapping():
    f = PeriodicFunction(fn=lambda x: math.cos(2 * math.pi * x), vectorized=False)
    out = f(np.array([0.0, 0.5]))
    assert np.allclose(out, [1.0, -1.0])


# ---------------------------------------------------------------------------
# node streams
# ---------------------------------------------------------------------------

def test_node_stream_plain_first_rows():
    rows = list(node_stream(NodeScheme.plain(2), 4))
    assert [(r.group, r.k) for r in rows] == [(1, 1), (1, 0), (2, 1), (2, 0)]
    assert rows[0].node == 0.0 and rows[0].weight == 1.0
    assert rows[1].node == 0.0 and rows[1].weight == -0.5
    assert rows[2].node == pytest.approx(0.5849625007211562, abs=1e-15)
    assert rows[2].weight == pytest.approx(1.0 / 3.0, abs=1e-16)
    assert rows[3].node == 0.0 and rows[3].weight == -0.25


def test_node_stream_rational_interleaves_two_families():
    rows = list(node_stream(NodeScheme.rational_base(3, 2), 10))
    # group 1: M-family (+, +, -), then N-family with flipped signs (-, +)
    signs = [math.copysign(1, r.weight) for r in rows[:5]]
    assert signs == [1, 1, -1, -1, 1]
    assert rows[0].weight == 0.5  # 1/(3*1-1)


def test_node_stream_cf_reports_inner_series_value():
    rows = list(node_stream(NodeScheme.continued_fraction(2, 1), 6))
    for r in rows:
        assert r.aux is not None and r.aux > 0


def test_node_stream_weights_sum_matches_series():
    # folding the streamed rows reproduces the engine's raw sum (f == 1)
    one = PeriodicFunction(fn=ONES)
    groups = 200
    res = integral_logM(one, 3, groups)
    total = math.fsum(r.weight for r in node_stream(NodeScheme.plain(3), 3 * groups))
    assert abs(total - res.raw_series_sum) < 1e-12
