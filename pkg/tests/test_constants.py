import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dirstab import constants as C
from dirstab.errors import ArgumentError, ClusteringError, RangeError


def oracle_ab(k, rho):
    """Hand-rolled rational recurrences, written independently of the package."""
    a = {1: 1}
    for j in range(2, k + 1):
        a[j] = 1 + sum(a[i] ** 2 for i in range(1, j))
    b = {1: Fraction(4)}
    for j in range(2, k + 1):
        c = 1 + 8 * a[j]
        b[j] = c * ((1 + rho * b[j - 1]) * c + 1)
    return [a[j] for j in range(1, k + 1)], [b[j] for j in range(1, k + 1)]


def test_a_sequence():
    assert C.a_sequence(5) == [1, 2, 6, 42, 1806]


def test_b_initial_values():
    a, b = C.ak_bk_sequences(2, 0)
    assert b[0] == 4
    assert b[1] == 306


@pytest.mark.parametrize("rho", [Fraction(0), Fraction(1, 7), Fraction(1, 4 * 1806), 2])
def test_recurrences_match_rational_oracle(rho):
    a, b = C.ak_bk_sequences(8, rho)
    ao, bo = oracle_ab(8, Fraction(rho))
    assert a == ao
    assert b == bo


def test_float_rho_close_to_exact():
    a, b = C.ak_bk_sequences(6, 0.125)
    _, bo = oracle_ab(6, Fraction(1, 8))
    for x, y in zip(b, bo):
        assert x == pytest.approx(float(y), rel=1e-14)


def test_sequences_nondecreasing():
    a, b = C.ak_bk_sequences(8, 0.01)
    assert a[0] >= 1 and b[0] >= 4
    assert all(x <= y for x, y in zip(a, a[1:]))
    assert all(x <= y for x, y in zip(b, b[1:]))


def test_overflow_reports_largest_safe_k():
    with pytest.raises(RangeError) as exc:
        C.ak_bk_sequences(12, 0.0)
    assert exc.value.largest_safe == 11
    # a_11 converts to float, a_12 does not
    a = C.a_sequence(12)
    float(a[10])
    with pytest.raises(OverflowError):
        float(a[11])


def test_bad_arguments():
    with pytest.raises(ArgumentError):
        C.ak_bk_sequences(0, 0)
    with pytest.raises(ArgumentError):
        C.ak_bk_sequences(3, -1)


# --- global ledger ------------------------------------------------------------------

def test_ledger_ratio_one_fails():
    for k in (1, 2, 3):
        led = C.rho_epsilon_condition(10.0, 10.0, 0.1, k)
        assert led.rho == pytest.approx(8.0)
        assert not led.condition_ok


def test_ledger_small_ratio():
    lam, mu = 5.75e-5, 1.0
    led = C.rho_epsilon_condition(lam, mu, 0.05, 1)
    with mpmath.workdps(40):
        r = mpmath.mpf(lam) / mu
        rho = 8 * r ** mpmath.mpf("0.4")
        cond = 32 * r ** mpmath.mpf("0.4")
    assert led.rho == pytest.approx(float(rho), rel=1e-13)
    assert led.rho == pytest.approx(0.161, abs=5e-4)
    assert led.condition_value == pytest.approx(float(cond), rel=1e-13)
    assert led.condition_value == pytest.approx(0.645, abs=1e-3)
    assert led.condition_ok


def test_ledger_infinite_mu():
    led = C.rho_epsilon_condition(20.0, math.inf, 0.05, 3)
    assert led.rho == 0 and led.eps == 0 and led.condition_ok and led.bound == 0


def test_ledger_alpha_range():
    for alpha in (0.0, 0.25, -0.1, 0.3):
        with pytest.raises(ArgumentError):
            C.rho_epsilon_condition(1.0, 2.0, alpha, 1)


def test_ledger_fields_consistent():
    lam, mu, alpha = 20.0, 3e4, 0.05
    led = C.rho_epsilon_condition(lam, mu, alpha, 2)
    r = lam / mu
    assert led.eps == pytest.approx(2 * r ** alpha / math.sqrt(lam))
    assert led.eps_proof == pytest.approx(led.eps / 2)
    e0 = led.eps_proof
    assert led.Lambda_lemma == pytest.approx(2 * (1 + e0 ** 2 * lam) / (e0 ** 4 * mu))
    assert led.bound == pytest.approx(led.b_k * r ** (0.5 - 2 * alpha) * lam)
    assert led.condition_ok == (4 * led.rho * led.a_k <= 1)


@given(st.floats(1e-2, 1e3), st.floats(1e-8, 1.0), st.floats(0.01, 0.24),
       st.integers(1, 5), st.floats(1.0, 100.0))
def test_condition_monotone_in_mu(lam, ratio, alpha, k, factor):
    mu = lam / ratio
    a = C.rho_epsilon_condition(lam, mu, alpha, k)
    b = C.rho_epsilon_condition(lam, mu * factor, alpha, k)
    assert (not a.condition_ok) or b.condition_ok


@given(st.floats(1e-2, 1e3), st.floats(1e-12, 1.0), st.floats(0.01, 0.24), st.integers(1, 5))
def test_eps_below_two_over_sqrt_lambda(lam, ratio, alpha, k):
    led = C.rho_epsilon_condition(lam, lam / ratio, alpha, k)
    if led.condition_ok:
        assert led.eps < 2 / math.sqrt(lam)


def test_corollary_bounds_special_alpha():
    lam, mu, k, C_k = 20.0, 1e5, 1, 3.0
    for gamma in (1.0, 0.5, 2.0):
        out = C.corollary_bounds(lam, mu, k, 0.05, gamma, C_k)
        led = out["ledger_special"]
        s = out["alpha_special"]
        assert s == pytest.approx(1 / (2 * (2 + gamma)))
        r = lam / mu
        general = led.b_k * r ** (0.5 - 2 * s) * lam + C_k * lam ** (-gamma / 2) * r ** (gamma * s)
        assert out["general_at_special"] == pytest.approx(general)
        if gamma == 1.0:
            assert out["explicit"] == pytest.approx(general, rel=1e-12)


# --- gap data --------------------------------------------------------------------------

def test_gap_data_simple():
    g = C.gap_data([1.0, 2.0, 5.0], [1.0, 2.0, 5.0])
    assert g.N == [1, 2, 3]
    assert g.Lambda == [1.0, 1.0]
    assert g.A == [2.0, 34.0]


def test_gap_data_cluster():
    g = C.gap_data([2.0, 2.0, 5.0, 7.0], [2.0, 2.0, 5.0, 7.0])
    assert [len(c) for c in g.clusters] == [2, 1, 1]
    assert g.N[0] == 2
    assert g.Lambda == [3.0, 2.0]


def test_gap_data_equal_spectra():
    lam = [1.0, 3.0, 3.0, 4.5, 9.0]
    g = C.gap_data(lam, lam)
    assert all(d == 0 for d in g.delta)


def test_gap_data_clamps_negative():
    g = C.gap_data([1.0, 2.0, 5.0], [1.1, 1.5, 5.0], slack=0.01)
    assert g.delta == [0.0, 0.5, 0.5]
    assert g.negative_flag


def test_gap_data_errors():
    with pytest.raises(RangeError):
        C.gap_data([1.0], [1.0])
    with pytest.raises(RangeError):
        C.gap_data([1.0, 2.0, 5.0], [1.0, 2.0, 5.0], k_max=3)
    with pytest.raises(ClusteringError):
        C.gap_data([1.0, 1.00015, 3.0], [1.0, 1.00015, 3.0], tol_mult=1e-4)


@given(st.lists(st.floats(0.5, 100.0), min_size=3, max_size=12), st.floats(0.0, 0.5))
def test_gap_data_invariants(values, shift):
    lam = np.sort(np.round(np.asarray(values), 2))
    lam = lam + np.arange(lam.size) * 1e-9  # keep ordering strict where rounding tied
    lamp = lam - shift * np.linspace(0, 1, lam.size)
    try:
        g = C.gap_data(lam, lamp, tol_mult=1e-6)
    except (RangeError, ClusteringError):
        return
    assert all(x > 0 for x in g.Lambda)
    assert all(x >= y for x, y in zip(g.Lambda, g.Lambda[1:]))
    assert all(d >= 0 for d in g.delta)
    assert all(x <= y for x, y in zip(g.delta, g.delta[1:]))
    assert g.A[0] == 2 and all(a >= 2 for a in g.A)
    # reconstructing lambda from the clusters reproduces the input
    for c in g.clusters:
        vals = lam[c]
        assert np.all(np.abs(vals - vals[0]) <= 1e-6 * vals[0] * len(c))
    assert sum(g.n) == lam.size


# --- regularity constants ------------------------------------------------------------

def test_rolling_ball_constants():
    rc = C.hardy_constants("rolling_ball", n=2, eps0=1.0)
    assert abs(rc.hardy_a - 1 / 48) < 1e-10
    assert rc.hardy_b == 4


@pytest.mark.parametrize("n", range(2, 11))
def test_rolling_ball_a_below_one(n):
    a = C.rolling_ball_hardy_a(n)
    assert 0 < a < 1
    # independent evaluation in extended precision
    with mpmath.workdps(30):
        num = mpmath.quad(lambda t: mpmath.sin(t) ** (n - 2), [0, mpmath.pi / 6])
        den = mpmath.quad(lambda t: mpmath.sin(t) ** (n - 2), [0, mpmath.pi / 2])
        ref = mpmath.mpf(n) / 32 * num / den
    assert a == pytest.approx(float(ref), abs=1e-10)


def test_planar_constants():
    rc = C.hardy_constants("planar_simply_connected")
    assert (rc.hardy_a, rc.hardy_b) == (16.0, 0.0)
    assert rc.davies_alpha_max == pytest.approx(0.25)


def test_cone_constants():
    rc = C.hardy_constants("cone", angle=math.pi / 2, height=1.0, n=2)
    assert rc.eps_star == pytest.approx(0.5)
    assert rc.N == 1
    assert rc.hardy_a is None


@given(st.floats(0.05, 3.0), st.floats(0.1, 5.0))
def test_cone_invariants(angle, height):
    eps_star, N = C.cone_parameters(angle, height)
    assert eps_star < height
    assert N >= 1 / math.tan(angle / 2) - 1e-9


def test_hardy_errors():
    with pytest.raises(ArgumentError):
        C.hardy_constants("rolling_ball", n=2, eps0=0.0)
    with pytest.raises(ArgumentError):
        C.hardy_constants("cone", angle=4.0, height=1.0)
    with pytest.raises(ArgumentError):
        C.hardy_constants("mystery")


def test_davies_threshold():
    with pytest.raises(ArgumentError):
        C.davies_threshold(1.0, 0.0, 0.0, 1.0)
    d = C.davies_threshold(1.0, 10.0, 0.0, 1.0)
    assert d.eps_k == pytest.approx((1 / (2 * 10 ** 1.5)) ** 0.25)
    assert d.eps_k == pytest.approx(0.3546, abs=1e-4)
    assert d(d.eps_k) == pytest.approx(2 ** 3 * 9 * 10 ** 1.5 * d.eps_k ** 2)


@given(st.floats(0.1, 10), st.floats(0.1, 100), st.floats(0, 10), st.floats(0.05, 2))
def test_davies_monotone_and_dominates(c, lam, b, alpha):
    d1 = C.davies_threshold(c, lam, b, alpha)
    d2 = C.davies_threshold(c, lam + 1.0, b, alpha)
    assert d2.eps_k < d1.eps_k
    for t in (0.1, 0.5, 1.0):
        eps = t * d1.eps_k
        assert d1.quotient(eps) <= d1(eps) * (1 + 1e-12)


def test_closed_forms():
    c1 = 5.783185962946784
    assert C.closed_form_bounds("convex", n=2, k=1, r0=1.0, eps=0.1) == pytest.approx(c1 * 0.21)
    assert C.closed_form_bounds("convex", n=2, k=1, r0=1.0, eps=0.1) == pytest.approx(1.2145, abs=1e-4)
    ident = C.closed_form_bounds("ball_identity", n=2, k=1, r=1.0, eps=0.1)
    assert ident == pytest.approx(c1 * 0.1 * 2.1 / 1.21)
    assert ident == pytest.approx(1.0037, abs=1e-4)
    assert C.closed_form_bounds("cheng", n=2, k=1, r0=2.0, c_tilde=3.0) == pytest.approx(0.25 + 0.75)
    with pytest.raises(ArgumentError):
        C.closed_form_bounds("convex", n=3, k=1, r0=1.0, eps=0.1)
    assert C.closed_form_bounds("convex", n=3, k=1, r0=1.0, eps=0.1, c=math.pi ** 2) > 0


def test_constants_table(tmp_path):
    g = C.gap_data([1.0, 2.0, 5.0], [0.9, 1.8, 4.0])
    rows = C.constants_table(3, g)
    assert rows[0]["a_k"] == 1 and rows[1]["A_k"] == 34.0
    assert rows[2]["A_k"] == ""
    C.write_constants_csv(rows, tmp_path / "c.csv")
    text = (tmp_path / "c.csv").read_text().splitlines()
    assert text[0] == "k,a_k,b_k,A_k,Lambda_k,delta_k"
    assert len(text) == 4
