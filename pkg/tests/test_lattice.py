"""The exponential difference series and its exactly summable lattice sums.

The closed forms asserted here were re-derived and verified numerically
before being frozen: the theta rewrite needs the factor M^(1+b) (the plain
M is the b = 0 special case), and the rational-exponential identity for
base 3/2 carries the numerator 2 e^t + 1.
"""

import math

import mpmath as mp
import numpy as np
import pytest

from zsk import (CLOSED_FORM_IDS, PhiParams, closed_form_suite, gamma_ref,
                 lattice_sum_pair, lattice_sum_single, phi, theta_ab)
from zsk.lattice import _node_phi, _zeta_real


# ---------------------------------------------------------------------------
# phi closed forms and brute force
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("M,w", [(2, 0.5), (3, 1.3)])
def test_phi_bose_kernel_closed_form(M, w):
    # a = 1, b = 0, J = 0: 1/(e^w - 1) - M/(e^{Mw} - 1)
    target = 1.0 / math.expm1(w) - M / math.expm1(M * w)
    assert phi(PhiParams(1.0, 0.0, M, 0), w) == pytest.approx(target, abs=1e-12)


def test_phi_theta_rewrite_with_weight_exponent():
    # Phi_{a,b,M,0}(w) = (theta_ab(w) - M^(1+b) theta_ab(w M^a)) / 2 for b > 0
    a, b, M, w = 2.0, 1.0, 2, 0.7
    target = (theta_ab(a, b, w) - M ** (1 + b) * theta_ab(a, b, w * M ** a)) / 2.0
    assert phi(PhiParams(a, b, M, 0), w) == pytest.approx(target, abs=1e-12)


def test_phi_theta_rewrite_b_zero_with_center_adjustment():
    # at b = 0 the two-sided theta includes the n = 0 term: add (M-1)/2 back
    a, M, w = 2.0, 2, 0.7
    target = (theta_ab(a, 0.0, w) - M * theta_ab(a, 0.0, w * M ** a)) / 2.0 \
        + (M - 1) / 2.0
    assert phi(PhiParams(a, 0.0, M, 0), w) == pytest.approx(target, abs=1e-12)


def test_phi_alternating_gaussian_brute_force():
    # Phi_{2,0,2,0}(1) = sum (-1)^(m+1) e^(-m^2)
    brute = math.fsum((-1) ** (m + 1) * math.exp(-m * m) for m in range(1, 11))
    assert phi(PhiParams(2.0, 0.0, 2, 0), 1.0) == pytest.approx(brute, abs=1e-14)


def test_phi_rejects_bad_arguments():
    with pytest.raises(ValueError):
        phi(PhiParams(1.0, 0.0, 2, 0), 0.0)
    with pytest.raises(ValueError):
        PhiParams(1.0, -2.0, 2, 0)  # violates b > -Ja - 1
    with pytest.raises(ValueError):
        PhiParams(0.0, 0.0, 2, 0)


def test_phi_small_argument_branch_against_mpmath():
    # the small-argument expansion must join the closed form smoothly
    mp.mp.dps = 40
    for w in (1e-5, 1e-7, 1e-10):
        target = float(1 / mp.expm1(mp.mpf(w)) - 3 / mp.expm1(3 * mp.mpf(w)))
        assert phi(PhiParams(1.0, 0.0, 3, 0), w) == pytest.approx(target, rel=1e-12)
    # a = 2, J = 0: the limit value is (M-1)/2 up to exponentially small terms
    assert phi(PhiParams(2.0, 0.0, 2, 0), 1e-10) == pytest.approx(0.5, abs=1e-15)
    # a = 2, J >= 1: identically zero to beyond double precision
    assert phi(PhiParams(2.0, 0.0, 2, 2), 1e-10) == 0.0


def test_zeta_real_continuation_values():
    assert _zeta_real(0.0) == -0.5
    assert _zeta_real(-2.0) == 0.0
    assert _zeta_real(-1.0) == pytest.approx(-1.0 / 12.0, rel=1e-14)
    assert _zeta_real(-3.0) == pytest.approx(1.0 / 120.0, rel=1e-14)
    mp.mp.dps = 30
    for s in (-0.5, -2.5, -7.3):
        assert _zeta_real(s) == pytest.approx(float(mp.zeta(s)), rel=1e-11)


# ---------------------------------------------------------------------------
# single-base lattice sums
# ---------------------------------------------------------------------------

_ACCEPTANCE_SETS = [(1.0, 0.0, 2, 0), (2.0, 0.0, 2, 0), (1.0, 1.0, 3, 1),
                    (2.0, 0.0, 2, 2)]


@pytest.mark.parametrize("a,b,M,J", _ACCEPTANCE_SETS)
def test_lattice_sum_single_hits_gamma_target(a, b, M, J):
    res = lattice_sum_single(PhiParams(a, b, M, J), 0.0)
    assert res.abs_err <= 1e-8 * abs(res.target)
    assert res.abs_err == abs(res.value - res.target)


def test_lattice_sum_single_classical_targets():
    r = lattice_sum_single(PhiParams(2.0, 0.0, 2, 0), 0.0, -80, 40)
    assert r.target == pytest.approx(math.sqrt(math.pi) / 2.0, rel=1e-13)
    assert abs(r.value - r.target) < 1e-10

    r2 = lattice_sum_single(PhiParams(1.0, 0.0, 2, 0), 0.5)
    assert r2.target == pytest.approx(1.0, rel=1e-13)
    assert abs(r2.value - 1.0) < 1e-10

    r3 = lattice_sum_single(PhiParams(1.0, 1.0, 3, 1), 0.25)
    assert r3.target == pytest.approx(2.0, rel=1e-13)
    assert abs(r3.value - 2.0) < 1e-8
    # z-independence cross-check
    r3b = lattice_sum_single(PhiParams(1.0, 1.0, 3, 1), 0.0)
    assert abs(r3.value - r3b.value) < 1e-10


@pytest.mark.parametrize("a,b,M,J", _ACCEPTANCE_SETS)
def test_lattice_sum_single_shift_invariance(a, b, M, J):
    p = PhiParams(a, b, M, J)
    v0 = lattice_sum_single(p, 0.0).value
    v1 = lattice_sum_single(p, 0.37).value
    assert abs(v0 - v1) < 1e-10


def test_lattice_sum_single_whole_shift_reindexes():
    p = PhiParams(1.0, 0.0, 2, 0)
    v0 = lattice_sum_single(p, 0.2, -140, 70).value
    v1 = lattice_sum_single(p, 1.2, -140, 70).value
    assert abs(v0 - v1) < 1e-12


def test_negative_tail_ratio_approaches_geometric():
    # ratio of consecutive negative-n terms -> M^-(Ja+1+b) when the leading
    # small-argument coefficient does not vanish (it does for some sets with
    # trivial zeta zeros, where the decay is strictly faster)
    for (a, b, M, J) in [(1.0, 0.0, 2, 0), (2.0, 0.0, 2, 0)]:
        p = PhiParams(a, b, M, J)
        ln_m = math.log(M)
        c = a * J + 1 + b

        def term(n):
            t_log = a * n * ln_m
            return math.exp(c * n * ln_m) * _node_phi(p, t_log, 1e-15)

        n0 = -20
        ratio = term(n0 - 1) / term(n0)
        assert ratio == pytest.approx(M ** (-c), rel=0.1)


def test_positivity_on_decreasing_term_grid():
    # with M = 2 the grouped terms alternate; once w >= (b + aJ)/a the term
    # magnitudes decrease, so the leading term dominates and phi > 0
    for (a, b, J) in [(1.0, 0.0, 0), (2.0, 0.0, 0), (2.0, 1.0, 0), (2.0, 0.0, 2),
                      (1.0, 2.0, 1)]:
        p = PhiParams(a, b, 2, J)
        w_lo = max(0.75, (b + a * J) / a)
        for w in np.geomspace(w_lo, 50.0, 12):
            assert phi(p, float(w)) > 0.0


def test_positive_tail_term_dominates_remainder():
    # double-exponential decay: the last kept positive-n term exceeds the
    # whole omitted positive tail
    for (a, b, M, J) in _ACCEPTANCE_SETS:
        p = PhiParams(a, b, M, J)
        ln_m = math.log(M)
        c = a * J + 1 + b

        def term(n):
            t_log = a * n * ln_m
            v = _node_phi(p, t_log, 1e-15)
            return abs(math.exp(c * n * ln_m) * v) if v else 0.0

        n_edge = next(n for n in range(0, 60) if term(n) > 0 and term(n + 1) == 0.0
                      or term(n) > 1e-280 and term(n + 1) < 1e-300)
        tail = sum(term(n) for n in range(n_edge + 1, n_edge + 8))
        assert term(n_edge) > tail


# ---------------------------------------------------------------------------
# paired-base sums (the factorial identity)
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("J", [0, 1, 2])
@pytest.mark.parametrize("w", [0.0, 0.3])
def test_factorial_identity(J, w):
    res = lattice_sum_pair(1.0, 0.0, 3, 2, J, w)
    assert res.target == pytest.approx(math.factorial(J), rel=1e-13)
    assert res.abs_err <= 1e-8 * res.target


def test_pair_shift_invariance():
    v0 = lattice_sum_pair(1.0, 0.0, 3, 2, 1, 0.0).value
    v1 = lattice_sum_pair(1.0, 0.0, 3, 2, 1, 0.37).value
    assert abs(v0 - v1) < 1e-10


def test_pair_negative_tail_ratio():
    ln_q = math.log(1.5)
    for J in (0, 1):
        p_m = PhiParams(1.0, 0.0, 3, J)
        p_n = PhiParams(1.0, 0.0, 2, J)
        c = J + 1.0

        def term(n):
            t_log = n * ln_q
            return math.exp(c * n * ln_q) * (
                _node_phi(p_m, t_log, 1e-15) - _node_phi(p_n, t_log, 1e-15))

        ratio = term(-26) / term(-25)
        assert ratio == pytest.approx(1.5 ** (-c), rel=0.1)


def test_pair_requires_distinct_bases_above_one():
    with pytest.raises(ValueError):
        lattice_sum_pair(1.0, 0.0, 2, 2, 0, 0.0)
    with pytest.raises(ValueError):
        lattice_sum_pair(1.0, 0.0, 2, 3, 0, 0.0)  # M > N required
    with pytest.raises(ValueError):
        lattice_sum_pair(1.0, 0.0, 3, 1, 0, 0.0)


# ---------------------------------------------------------------------------
# the four closed-form identities
# ---------------------------------------------------------------------------

def test_closed_form_identity_one_tight():
    rows = closed_form_suite(0.0)
    by_id = {name: (value, err) for name, value, _t, err in rows}
    assert by_id["base2-j0"][1] <= 1e-12


def test_closed_form_identity_two_half_shift():
    rows = closed_form_suite(0.5)
    by_id = {name: err for name, _v, _t, err in rows}
    assert by_id["base2-j1"] <= 1e-12


@pytest.mark.parametrize("z", [0.0, 0.25, 0.5, 0.75])
def test_closed_form_all_four(z):
    for name, value, target, err in closed_form_suite(z):
        assert target == 1.0
        assert err <= 1e-10, (name, z, value)


def test_closed_form_matches_pair_machinery():
    # base3over2-j0 is the (M, N, J) = (3, 2, 0) paired sum in closed form
    row = dict((name, value) for name, value, _t, _e in closed_form_suite(0.3))
    res = lattice_sum_pair(1.0, 0.0, 3, 2, 0, 0.3)
    assert row["base3over2-j0"] == pytest.approx(res.value, abs=1e-11)
    # base2-j0 is the single-base (1, 0, 2, 0) sum in closed form
    res2 = lattice_sum_single(PhiParams(1.0, 0.0, 2, 0), 0.3)
    assert row["base2-j0"] == pytest.approx(res2.value, abs=1e-11)


def test_closed_form_ids_exported():
    assert set(CLOSED_FORM_IDS) == {"base2-j0", "base2-j1", "base3-j0",
                                    "base3over2-j0"}
