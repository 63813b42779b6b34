import numpy as np
import pytest

from pitik import domain as D
from pitik import operators as O
from pitik import ratecalc as R


def _basis(dom, j):
    return D.from_callable(dom, lambda x: np.sqrt(2) * np.cos(2 * np.pi * j * x))


def test_spectral_diagonal_eigenfunction():
    dom = D.Domain(1, 64)
    op = O.spectral_diagonal(dom, 1.0, background=0.5)
    u = _basis(dom, 3)
    out = op.apply(u)
    expect = (1 + 9.0) ** -0.5 * u.values + 0.5
    np.testing.assert_allclose(out.values, expect, atol=1e-12)


def test_spectral_diagonal_requires_smoothing():
    dom = D.Domain(1, 16)
    with pytest.raises(ValueError):
        O.spectral_diagonal(dom, 0.5)
    O.spectral_diagonal(dom, 0.51)


def test_unit_mass_kernel_preserves_constants():
    dom = D.Domain(1, 32)
    op = O.periodic_convolution(dom, D.constant(dom, 1.0), background=0.25)
    out = op.apply(D.constant(dom, 3.0))
    np.testing.assert_allclose(out.values, 3.25, atol=1e-12)


def test_convolution_trig_oracle():
    # band-limited pair with hand-computed continuous convolution:
    # (1 + 2cos(2 pi x)) * (sin(2 pi x) + cos(4 pi x)) = sin(2 pi x)
    dom = D.Domain(1, 32)
    k = D.from_callable(dom, lambda x: 1 + 2 * np.cos(2 * np.pi * x))
    u = D.from_callable(dom, lambda x: np.sin(2 * np.pi * x) + np.cos(4 * np.pi * x))
    op = O.periodic_convolution(dom, k)
    expect = D.from_callable(dom, lambda x: np.sin(2 * np.pi * x))
    np.testing.assert_allclose(op.apply(u).values, expect.values, atol=1e-12)


def test_adjoint_identity():
    rng = np.random.default_rng(5)
    for dom, make in (
        (D.Domain(1, 64), lambda d: O.spectral_diagonal(d, 1.2)),
        (D.Domain(2, 16), lambda d: O.spectral_diagonal(d, 1.7)),
        (
            D.Domain(1, 32),
            lambda d: O.periodic_convolution(d, D.GridFunction(d, rng.normal(size=32))),
        ),
    ):
        op = make(dom)
        for _ in range(10):
            u = D.GridFunction(dom, rng.normal(size=dom.ncells))
            v = D.GridFunction(dom, rng.normal(size=dom.ncells))
            lhs = D.l2_inner(op.apply(u), v)
            rhs = D.l2_inner(u, op.apply_adjoint(v)) + op.background * D.integrate(v)
            assert lhs == pytest.approx(rhs, abs=1e-10)


def test_spectral_diagonal_self_adjoint():
    dom = D.Domain(1, 32)
    op = O.spectral_diagonal(dom, 1.0)
    u = D.GridFunction(dom, np.random.default_rng(1).normal(size=32))
    np.testing.assert_allclose(
        op.apply(u).values, op.apply_adjoint(u).values, atol=1e-12
    )
    assert np.max(np.abs(op.apply_adjoint(D.constant(dom, 0.0)).values)) == 0.0


def test_linearity_with_background():
    dom = D.Domain(1, 32)
    op = O.spectral_diagonal(dom, 1.0, background=2.0)
    rng = np.random.default_rng(2)
    u = D.GridFunction(dom, rng.normal(size=32))
    v = D.GridFunction(dom, rng.normal(size=32))
    a, b = 1.7, -0.4
    lhs = op.apply(a * u + b * v)
    rhs = a * op.apply(u) + b * op.apply(v) - (a + b - 1) * op.background
    np.testing.assert_allclose(lhs.values, rhs.values, atol=1e-10)


def test_positivity_on_box():
    dom = D.Domain(1, 64)
    k = D.from_callable(dom, lambda x: 1 + np.cos(2 * np.pi * x))
    op = O.periodic_convolution(dom, k, background=0.1)
    rng = np.random.default_rng(3)
    for _ in range(50):
        u = D.GridFunction(dom, rng.uniform(0, 2, 64))
        assert np.min(op.apply(u).values) >= 0.1 - 1e-12


def test_norm_bound_and_multiplier():
    dom = D.Domain(1, 64)
    op = O.spectral_diagonal(dom, 1.0)
    assert op.norm_bound() == pytest.approx(1.0)
    m = op.multiplier(4)
    freqs = np.arange(-4, 5)
    np.testing.assert_allclose(m.real, (1 + freqs**2.0) ** -0.5, atol=1e-14)


def test_hs_image_radius_certifies_samples():
    dom = D.Domain(1, 64)
    op = O.spectral_diagonal(dom, 2.0, background=0.3)
    s = 1.0
    rad = O.hs_image_radius(op, 0.0, 1.0, s)
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        u = D.GridFunction(dom, rng.uniform(0.0, 1.0, 64))
        worst = max(worst, D.sobolev_norm(op.apply(u), s, 32))
    assert worst <= rad
    assert O.hs_image_radius(op, 0.0, 0.0, s) == pytest.approx(0.3)
    # background contributes exactly its magnitude
    op0 = O.spectral_diagonal(dom, 2.0, background=0.0)
    assert rad - O.hs_image_radius(op0, 0.0, 1.0, s) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        O.hs_image_radius(op, 0.0, 1.0, 1.6)


def test_source_instance_identity():
    # dividing the truth offset coefficients by psi recovers omega
    dom = D.Domain(1, 128)
    op = O.spectral_diagonal(dom, 1.0, background=0.5)
    inst = O.make_source_instance(
        op, "holder", 0.5, omega_seed=11, scale=2.0, band=(1, 40)
    )
    offset = D.fourier_coeffs(inst.udag - inst.u0, dom.n // 2)
    mult = op.multiplier(dom.n // 2)
    psi = np.abs(mult) ** (2 * 0.5)
    rec = offset.coeffs / psi
    np.testing.assert_allclose(rec, inst.omega.coeffs, atol=1e-8)


def test_source_instance_nonnegative_and_consistent():
    dom = D.Domain(1, 128)
    op = O.spectral_diagonal(dom, 0.8, background=1.0)
    inst = O.make_source_instance(
        op, "holder", 0.25, omega_seed=7, scale=3.0, band=(2, 30), box_lo=0.5
    )
    assert np.min(inst.udag.values) >= 0.5 - 1e-12
    np.testing.assert_allclose(
        inst.gdag.values, op.apply(inst.udag).values, atol=1e-12
    )
    assert inst.predicted_phi.family == "holder"
    assert inst.predicted_phi.kappa == pytest.approx(2 * 0.25 / (2 * 0.25 + 1))


def test_source_instance_real_valued_truth():
    # conjugate symmetry of the draw keeps everything real
    dom = D.Domain(2, 16)
    op = O.spectral_diagonal(dom, 1.5, background=0.2)
    inst = O.make_source_instance(op, "holder", 0.5, omega_seed=3, scale=1.0, band=(1, 6))
    assert np.all(np.isfinite(inst.udag.values))
    back = D.reconstruct(inst.omega)
    assert D.l2_norm(back) == pytest.approx(inst.omega_norm, rel=1e-10)


def test_source_zero_scale():
    dom = D.Domain(1, 64)
    op = O.spectral_diagonal(dom, 1.0, background=0.5)
    u0 = D.constant(dom, 1.0)
    inst = O.make_source_instance(op, "holder", 0.5, omega_seed=1, scale=0.0, u0=u0)
    np.testing.assert_allclose(inst.udag.values, u0.values, atol=1e-14)
    np.testing.assert_allclose(inst.gdag.values, op.apply(u0).values, atol=1e-14)


def test_source_log_family_shifts_center():
    dom = D.Domain(1, 64)
    op = O.spectral_diagonal(dom, 1.0, background=0.5)
    inst = O.make_source_instance(
        op, "logarithmic", 1.0, omega_seed=9, scale=4.0, band=(1, 10), box_lo=0.0
    )
    # center moved with the truth so the source identity is preserved
    offset = D.fourier_coeffs(inst.udag - inst.u0, dom.n // 2)
    mult = np.abs(op.multiplier(dom.n // 2)) ** 2
    on_band = np.abs(inst.omega.coeffs) > 1e-12
    psi = (-np.log(mult[on_band])) ** -1.0
    np.testing.assert_allclose(
        offset.coeffs[on_band] / psi, inst.omega.coeffs[on_band], atol=1e-8
    )
    assert inst.predicted_phi.family == "logarithmic"


def test_source_validation():
    dom = D.Domain(1, 64)
    op = O.spectral_diagonal(dom, 1.0)
    with pytest.raises(ValueError):
        O.make_source_instance(op, "holder", 0.7, omega_seed=0, scale=1.0)
    with pytest.raises(ValueError):
        O.make_source_instance(op, "logarithmic", 0.0, omega_seed=0, scale=1.0)
    with pytest.raises(ValueError):
        O.make_source_instance(op, "holder", 0.5, omega_seed=0, scale=1.0, band=(0, 5))
    with pytest.raises(ValueError):
        O.make_source_instance(op, "holder", 0.5, omega_seed=0, scale=1.0, band=(1, 40))


def test_certified_vsc_classical_holds():
    # beta * ||u - udag||^2 <= R(u) - R(udag) + phi(||F(u) - gdag||^2)
    dom = D.Domain(1, 64)
    op = O.spectral_diagonal(dom, 1.0, background=0.0)
    inst = O.make_source_instance(op, "holder", 0.5, omega_seed=13, scale=1.5, band=(1, 20))
    phi = O.certified_vsc(inst, 0.0, 5.0)
    assert phi.kappa == 0.5 and phi.C == pytest.approx(2 * inst.omega_norm)
    rng = np.random.default_rng(6)
    for _ in range(200):
        u = D.GridFunction(dom, rng.uniform(0.0, 5.0, 64))
        lhs = D.l2_norm(u - inst.udag) ** 2
        pen_gap = D.l2_norm(u - inst.u0) ** 2 - D.l2_norm(inst.udag - inst.u0) ** 2
        tau = D.l2_norm(op.apply(u) - inst.gdag) ** 2
        assert lhs <= pen_gap + R.eval_phi(phi, tau) + 1e-9


def test_certified_vsc_shifted_argument():
    dom = D.Domain(1, 64)
    op = O.spectral_diagonal(dom, 1.0, background=0.5)
    inst = O.make_source_instance(op, "holder", 0.5, omega_seed=2, scale=1.0, band=(1, 20))
    phi_kl = O.certified_vsc(inst, 0.0, 3.0, sigma=0.1)
    phi_cl = O.certified_vsc(inst, 0.0, 3.0)
    assert phi_kl.C > phi_cl.C
    with pytest.raises(ValueError):
        O.certified_vsc(
            O.make_source_instance(op, "holder", 0.25, omega_seed=2, scale=1.0),
            0.0,
            3.0,
        )
