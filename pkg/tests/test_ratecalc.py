import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pitik import ratecalc as R


def test_eval_hand_values():
    assert R.eval_phi(R.holder(1.0, 0.5), 0.0) == 0.0
    assert R.eval_phi(R.holder(1.0, 0.5), 0.04) == pytest.approx(0.2, abs=1e-14)
    assert R.eval_phi(R.logarithmic(1.0, 1.0), np.exp(-2.0)) == pytest.approx(
        0.25, abs=1e-14
    )
    with pytest.raises(ValueError):
        R.eval_phi(R.holder(1.0, 0.5), -0.1)
    with pytest.raises(ValueError):
        R.eval_phi(R.logarithmic(1.0, 1.0), 0.5)


def test_eval_clamped_flag():
    phi = R.logarithmic(2.0, 1.0)
    v, clamped = R.eval_phi_clamped(phi, 0.9)
    assert clamped and v == pytest.approx(2.0)
    v, clamped = R.eval_phi_clamped(phi, 0.1)
    assert not clamped


def test_family_validation():
    with pytest.raises(ValueError):
        R.holder(1.0, 1.5)
    with pytest.raises(ValueError):
        R.holder(-1.0, 0.5)
    with pytest.raises(ValueError):
        R.logarithmic(1.0, 0.0)
    with pytest.raises(ValueError):
        R.IndexFunction("exotic")


def test_tabulated_validation():
    R.tabulated([0.0, 1.0, 2.0], [0.0, 1.0, 1.4])
    with pytest.raises(ValueError):
        R.tabulated([0.1, 1.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        R.tabulated([0.0, 1.0, 2.0], [0.0, 1.0, 0.5])
    with pytest.raises(ValueError):
        # slopes of the squared values increase: not concave
        R.tabulated([0.0, 1.0, 2.0], [0.0, 0.1, 2.0])


def test_tabulated_matches_samples():
    taus = np.linspace(0, 1, 50)
    phi = R.tabulated(taus, np.sqrt(taus))
    assert R.eval_phi(phi, 0.25) == pytest.approx(0.5, abs=1e-3)


def test_spectral_conversion():
    phi = R.phi_from_spectral("holder", 0.5, scale=3.0)
    assert phi.family == "holder" and phi.kappa == pytest.approx(0.5)
    assert phi.C == 3.0
    phi = R.phi_from_spectral("logarithmic", 1.5)
    assert phi.p == 1.5
    with pytest.raises(ValueError):
        R.phi_from_spectral("holder", 0.8)


def test_conjugate_hand_values():
    # sup(-tau + sqrt(tau)) = 1/4 at tau = 1/4
    assert R.conjugate_neg(R.holder(1.0, 0.5), -1.0) == pytest.approx(0.25, abs=1e-14)
    assert R.conjugate_maximizer(R.holder(1.0, 0.5), -1.0) == pytest.approx(0.25)
    # linear case: finite iff s <= -C
    lin = R.holder(1.0, 1.0)
    assert R.conjugate_neg(lin, -1.0) == 0.0
    assert R.conjugate_neg(lin, -2.0) == 0.0
    assert R.conjugate_neg(lin, -0.5) == np.inf
    with pytest.raises(ValueError):
        R.conjugate_neg(lin, 0.5)


def test_conjugate_numeric_matches_closed_form():
    phi = R.holder(2.0, 0.3)
    for s in -np.geomspace(1e-3, 1e3, 25):
        closed = R.conjugate_neg(phi, s)
        numeric = R.conjugate_neg_numeric(phi, s)
        assert numeric == pytest.approx(closed, rel=1e-8, abs=1e-10)


def test_conjugate_logarithmic_dominates_grid():
    phi = R.logarithmic(1.0, 1.0)
    for s in (-0.01, -1.0, -100.0):
        conj = R.conjugate_neg(phi, s)
        # dense oracle grid: the interior peak narrows as |s| grows
        taus = np.geomspace(1e-12, phi.tau_max, 200000)
        vals = s * taus + np.array([R.eval_phi(phi, tt) for tt in taus])
        assert conj >= np.max(vals) - 1e-12
        assert conj >= 0.0
        assert conj <= np.max(vals) + 1e-8 * max(1.0, abs(np.max(vals)))


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.1, 5.0),
    st.floats(0.05, 0.95),
    st.floats(-1e3, -1e-3),
    st.floats(0.0, 10.0),
)
def test_young_inequality_and_equality(C, kappa, s, tau):
    phi = R.holder(C, kappa)
    conj = R.conjugate_neg(phi, s)
    assert s * tau + R.eval_phi(phi, tau) <= conj + 1e-10 * max(1.0, conj)
    tstar = R.conjugate_maximizer(phi, s)
    gap = conj - (s * tstar + R.eval_phi(phi, tstar))
    assert abs(gap) <= 1e-8 * max(1.0, conj)


def test_conjugate_monotone_in_s():
    for phi in (R.holder(1.0, 0.5), R.logarithmic(1.0, 1.0)):
        svals = -np.geomspace(1e-3, 1e3, 20)[::-1]  # increasing toward 0-
        cvals = [R.conjugate_neg(phi, s) for s in svals]
        assert np.all(np.diff(cvals) >= -1e-12)


def test_biconjugation_on_convex_region():
    # biconjugation returns the convex envelope of -phi, which coincides
    # with -phi everywhere for holder but for the logarithmic family only
    # left of the tangent from the right domain endpoint (near e^-5.27
    # for p=1); stay safely inside that region
    for phi, taus in (
        (R.holder(1.3, 0.4), np.geomspace(1e-4, 10.0, 20)),
        (R.logarithmic(1.0, 1.0), np.geomspace(1e-8, np.exp(-6.0), 20)),
    ):
        for tau in taus:
            # the sup over s sits at -phi'(tau); refine locally around it
            slope = R.subgradient_neg(phi, tau)[0]
            svals = slope * np.linspace(0.98, 1.02, 81)
            conj = np.array([R.conjugate_neg(phi, s) for s in svals])
            bico = np.max(svals * tau - conj)
            assert -bico == pytest.approx(R.eval_phi(phi, tau), rel=1e-6, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_phi_squared_midpoint_concavity(seed):
    rng = np.random.default_rng(seed)
    kappa = rng.uniform(0.05, 0.5)
    p = rng.uniform(0.25, 2.0)
    cases = [
        (R.holder(rng.uniform(0.1, 3.0), kappa), rng.uniform(0.0, 5.0, 2)),
        (
            R.logarithmic(rng.uniform(0.1, 3.0), p),
            rng.uniform(0.0, np.exp(-(4 * p + 1)), 2),
        ),
    ]
    for phi, (a, b) in cases:
        fa = R.eval_phi(phi, a) ** 2
        fb = R.eval_phi(phi, b) ** 2
        fm = R.eval_phi(phi, 0.5 * (a + b)) ** 2
        assert fm >= 0.5 * (fa + fb) - 1e-10 * max(1.0, fa + fb)


def test_subgradient_hand_values():
    lo, hi = R.subgradient_neg(R.holder(1.0, 0.5), 0.25)
    assert lo == pytest.approx(-1.0) and hi == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        R.subgradient_neg(R.holder(1.0, 0.5), 0.0)
    # logarithmic slope at e^-2: 2p y^(-2p-1)/tau with y=2
    lo, hi = R.subgradient_neg(R.logarithmic(1.0, 1.0), np.exp(-2.0))
    expect = -2 * (2.0**-3.0) * np.exp(2.0)
    assert lo == pytest.approx(expect, rel=1e-12)


def test_subgradient_tabulated_brackets_derivative():
    taus = np.linspace(0, 1, 200)
    phi = R.tabulated(taus, np.sqrt(taus))
    k = 100
    lo, hi = R.subgradient_neg(phi, taus[k])
    deriv = -0.5 / np.sqrt(taus[k])
    assert lo - 1e-12 <= deriv <= hi + 1e-12


def test_apriori_alpha_hand_value():
    assert R.apriori_alpha(R.holder(1.0, 0.5), 16.0) == pytest.approx(1.0, rel=1e-12)


def test_apriori_alpha_scalings():
    phi = R.holder(1.0, 0.5)
    # alpha(t) ~ t^((kappa-1)/2) = t^(-1/4)
    a1, a2 = R.apriori_alpha(phi, 100.0), R.apriori_alpha(phi, 1600.0)
    assert a2 / a1 == pytest.approx((1600 / 100.0) ** (-0.25), rel=1e-12)
    # doubling phi halves alpha
    assert R.apriori_alpha(R.holder(2.0, 0.5), 100.0) == pytest.approx(
        a1 / 2, rel=1e-12
    )
    with pytest.raises(ValueError):
        R.apriori_alpha(phi, 0.5)


def test_error_budget_validation():
    R.ErrorBudget(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        R.ErrorBudget(0.5, 0.0, 1.0)
    with pytest.raises(ValueError):
        R.ErrorBudget(1.0, -0.1, 1.0)
    with pytest.raises(ValueError):
        R.ErrorBudget(1.0, 0.0, 0.0)


def test_deterministic_bound_limits():
    phi = R.holder(1.0, 0.5)
    clean = R.ErrorBudget(1.0, 0.0, 1.0)
    vals = [R.deterministic_bound(phi, clean, a) for a in (1e-2, 1e-4, 1e-6)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-3


def test_deterministic_bound_apriori_optimality():
    # at the a-priori alpha the bound collapses to phi(C_err*err)/beta
    # and no alpha on a wide grid does better
    phi = R.holder(1.3, 0.4)
    for C_err in (1.0, 2.0):
        t = 400.0
        err = 1.0 / np.sqrt(t)
        budget = R.ErrorBudget(C_err, err, 1.0)
        astar = R.apriori_alpha(phi, t, C_err)
        at_star = R.deterministic_bound(phi, budget, astar)
        assert at_star == pytest.approx(R.eval_phi(phi, C_err * err), rel=1e-10)
        assert at_star <= np.sqrt(C_err) * R.eval_phi(phi, err) + 1e-12
        for a in np.geomspace(1e-4, 1e2, 60):
            assert R.deterministic_bound(phi, budget, a) >= at_star - 1e-10
