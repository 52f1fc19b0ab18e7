"""Kernel and dense linear algebra checks against independent references."""

import numpy as np
import pytest
import scipy.linalg
import scipy.special
from scipy.integrate import quad

from qtran.errors import NonDiagonalizable, SpectrumOnAxis
from qtran.linalg import (
    EigenDecomposition,
    dagger,
    e1,
    e1_scaled,
    eig,
    expm,
    herm,
    log_kernel,
    log_kernel_renorm,
    max_abs,
    osc_kernel,
    resolvent_integral_log,
    resolvent_integral_osc,
)

RNG = np.random.default_rng(20260822)


def random_hermitian(n, rng=RNG):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return herm(a)


def test_e1_against_scipy_real_axis():
    xs = np.logspace(-3, 1.8, 40)
    ours = e1(xs)
    ref = scipy.special.exp1(xs)
    assert np.max(np.abs(ours - ref) / np.abs(ref)) < 1e-11


def test_e1_against_scipy_complex():
    # right half plane plus points hugging the imaginary axis, both branches
    # of the evaluator (series and continued fraction)
    mags = [1e-2, 0.5, 2.0, 3.9, 4.1, 8.0, 40.0]
    args = [-1.4, -0.7, 0.0, 0.7, 1.4]
    worst = 0.0
    for r in mags:
        for th in args:
            z = r * np.exp(1j * th)
            ref = scipy.special.exp1(complex(z))
            got = e1(z)
            worst = max(worst, abs(got - ref) / max(abs(ref), 1e-300))
    assert worst < 1e-10


def test_e1_scaled_no_overflow():
    # e^z E1(z) stays O(1/z) even where e1 itself underflows
    z = 600.0 + 5.0j
    val = e1_scaled(z)
    assert np.isfinite(val)
    assert abs(val - 1.0 / z) < 0.01 / abs(z)
    assert e1(z) == pytest.approx(0.0, abs=1e-250)


def _kappa_quadrature(z, s, x):
    """Tilted-contour reference for the oscillatory kernel.

    Rotate the tail onto the ray eps(u) = x - u e^{-i pi/4}; the factor
    e^{i eps s} then decays like e^{-s u / sqrt 2} and ordinary quadrature
    converges. Valid for Im z < 0, s > 0 since the closed wedge between the
    real axis and the ray contains no pole.
    """
    w = np.exp(-1j * np.pi / 4.0)

    def f(u, part):
        eps = x - u * w
        val = w * np.exp(1j * eps * s) / (eps - z)
        return val.real if part == 0 else val.imag

    re, _ = quad(f, 0.0, np.inf, args=(0,), limit=400)
    im, _ = quad(f, 0.0, np.inf, args=(1,), limit=400)
    return complex(re, im)


def test_osc_kernel_against_contour_quadrature():
    cases = [
        (0.5 - 0.2j, 1.0, 0.0),
        (-1.0 - 0.2j, 3.0, 0.0),
        (0.0 - 0.05j, 0.3, 0.0),
        (2.0 - 1.0j, 10.0, 0.5),
        (-3.0 - 0.4j, 0.05, -1.0),
    ]
    for z, s, x in cases:
        ref = _kappa_quadrature(z, s, x)
        got = osc_kernel(z, s, x)
        assert abs(got - ref) < 2e-10, (z, s, x)


def test_osc_kernel_vectorized_matches_scalar():
    zs = np.array([0.5 - 0.2j, -1.0 - 0.3j, 2.0 - 0.05j])
    vec = osc_kernel(zs, 2.0, 0.0)
    for i, z in enumerate(zs):
        assert abs(vec[i] - osc_kernel(z, 2.0, 0.0)[0]) < 1e-12


def test_log_kernel_is_window_integral():
    z = 0.3 - 0.4j
    ref, _ = quad(lambda e: (1.0 / (e - z)).real, -30.0, 0.0, limit=200)
    ref_i, _ = quad(lambda e: (1.0 / (e - z)).imag, -30.0, 0.0, limit=200)
    got = log_kernel(z, 0.0, -30.0)
    assert abs(got - complex(ref, ref_i)) < 1e-10


def test_log_kernel_renorm_drops_cutoff():
    z = -0.7 - 0.1j
    mu0 = 0.0
    for eps_min in (-1e3, -1e6):
        diff = log_kernel(z, mu0, eps_min) \
            - (log_kernel_renorm(z, mu0) - np.log(np.abs(eps_min)))
        assert abs(diff) < 10.0 / abs(eps_min)


def test_eig_roundtrip_dim64():
    a = RNG.standard_normal((64, 64)) + 1j * RNG.standard_normal((64, 64))
    dec = eig(a)
    rebuilt = (dec.right_vectors * dec.values) @ dec.inverse_vectors
    assert max_abs(rebuilt - a) < 1e-10


def test_eig_apply_scalar_identity():
    a = RNG.standard_normal((8, 8)) + 1j * RNG.standard_normal((8, 8))
    dec = eig(a)
    assert max_abs(dec.apply_scalar(dec.values) - a) < 1e-11


def test_eig_rejects_jordan_block():
    a = np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex)
    with pytest.raises(NonDiagonalizable):
        eig(a)


def test_expm_matches_scipy():
    a = RNG.standard_normal((6, 6)) + 1j * RNG.standard_normal((6, 6))
    assert max_abs(expm(a) - scipy.linalg.expm(a)) < 1e-11


def test_expm_commuting_phase():
    h = random_hermitian(4)
    u = expm(-1j * h)
    assert max_abs(u @ dagger(u) - np.eye(4)) < 1e-12


def _shifted_random(n, damping):
    h = random_hermitian(n)
    return h - 1j * damping * np.eye(n)


def test_resolvent_log_against_gauss_legendre():
    a = _shifted_random(4, 0.1)
    mu0, eps_min = 0.0, -50.0
    got = resolvent_integral_log(a, mu0, eps_min)
    ref = np.zeros((4, 4), dtype=complex)
    nodes, weights = np.polynomial.legendre.leggauss(64)
    edges = np.linspace(eps_min, mu0, 401)
    eye = np.eye(4)
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        for x, w in zip(nodes, weights):
            e = mid + half * x
            ref += half * w * np.linalg.inv(e * eye - a)
    assert max_abs(got - ref) < 1e-7


def test_resolvent_osc_matches_eigen_assembly():
    a = _shifted_random(5, 0.2)
    s = 1.7
    got = resolvent_integral_osc(a, 0.0, s)
    dec = eig(a)
    ref = dec.apply_scalar(osc_kernel(dec.values, s, 0.0))
    assert max_abs(got - ref) < 1e-11


def test_resolvent_rejects_real_spectrum():
    h = random_hermitian(3)
    with pytest.raises(SpectrumOnAxis):
        resolvent_integral_osc(h, 0.0, 1.0)


def test_decomposition_dim_checks():
    a = RNG.standard_normal((5, 5)) + 1j * RNG.standard_normal((5, 5))
    dec = eig(a)
    assert isinstance(dec, EigenDecomposition)
    assert dec.dim == 5
