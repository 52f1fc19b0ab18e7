"""Model container, bias protocol, and induced-shift rule tests."""

import numpy as np
import pytest

from qtran.errors import (NegativeLinewidth, NotPSDWarning, OutOfTableRange,
                          ValidationError)
from qtran.model import (BiasProfile, DeviceModel, InducedFockRule, LeadBias,
                         bias_at, bias_phase, build_chain, build_single_site,
                         h_at, linewidth_from_surface_gf, smooth_step_bias,
                         zero_bias)


def test_model_rejects_non_hermitian_h0():
    with pytest.raises(ValidationError, match="h0 not Hermitian"):
        DeviceModel(h0=[[0.0, 1.0], [0.5, 0.0]],
                    lambda_L=np.eye(2) * 0.1, lambda_R=np.eye(2) * 0.1,
                    mu0=0.0)


def test_model_rejects_dimension_mismatch():
    with pytest.raises(ValidationError, match="dimension"):
        DeviceModel(h0=np.zeros((2, 2)), lambda_L=np.zeros((3, 3)),
                    lambda_R=np.zeros((2, 2)), mu0=0.0)


def test_model_rejects_negative_linewidth_matrix():
    with pytest.raises(ValidationError, match="positive semidefinite"):
        DeviceModel(h0=np.zeros((1, 1)), lambda_L=[[-0.1]],
                    lambda_R=[[0.1]], mu0=0.0)


def test_build_single_site_negative_scalar():
    with pytest.raises(NegativeLinewidth):
        build_single_site(0.0, -0.1, 0.1, 0.0)


def test_lambda_total_and_lead_access():
    m = build_single_site(0.3, 0.05, 0.15, 0.0)
    assert m.lambda_total[0, 0] == pytest.approx(0.2)
    assert m.lead_lambda("L")[0, 0] == pytest.approx(0.05)
    assert m.lead_lambda("R")[0, 0] == pytest.approx(0.15)
    with pytest.raises(ValueError):
        m.lead_lambda("X")


def test_smooth_step_voltage_values():
    b = LeadBias(kind="smooth_step", dV=-2.0, rise_fs=0.5)
    assert b.voltage_at(0.0) == 0.0
    assert b.voltage_at(0.5) == pytest.approx(-2.0 * (1 - np.exp(-1.0)))
    assert b.voltage_at(50.0) == pytest.approx(-2.0)
    assert b.voltage_inf() == pytest.approx(-2.0)


def test_smooth_step_phase_matches_quadrature():
    b = LeadBias(kind="smooth_step", dV=1.3, rise_fs=0.22)
    t = 3.7
    ts = np.linspace(0.0, t, 20001)
    vals = np.array([b.voltage_at(x) for x in ts])
    num = np.trapezoid(vals, ts) if hasattr(np, "trapezoid") \
        else np.trapz(vals, ts)
    assert b.voltage_phase(t) == pytest.approx(num, abs=1e-9)


def test_bias_sign_convention():
    # level shift is minus the voltage
    prof = smooth_step_bias(dV_R=-2.0, rise_fs=0.1)
    assert bias_at(prof, "R", 10.0) == pytest.approx(2.0, rel=1e-6)
    assert bias_at(prof, "L", 10.0) == 0.0
    assert bias_phase(prof, "L", 5.0) == 0.0


def test_tabulated_interpolation_and_jump():
    b = LeadBias(kind="tabulated", times=(0.0, 1.0, 1.0, 2.0),
                 values=(0.0, 0.5, 1.5, 1.5))
    assert b.has_jump()
    assert b.voltage_at(0.5) == pytest.approx(0.25)
    # right-continuous across the duplicated abscissa
    assert b.voltage_at(1.0) == pytest.approx(1.5)
    assert b.voltage_at(1.5) == pytest.approx(1.5)
    with pytest.raises(OutOfTableRange):
        b.voltage_at(3.0)


def test_tabulated_phase_is_exact_for_linear_ramp():
    # V(t) = t on [0, 2]: phase(t) = t^2 / 2 exactly (trapezoid of a linear
    # interpolant is exact)
    b = LeadBias(kind="tabulated", times=(0.0, 2.0), values=(0.0, 2.0))
    for t in (0.3, 1.0, 1.7):
        assert b.voltage_phase(t) == pytest.approx(t * t / 2.0, abs=1e-14)


def test_tabulated_requires_samples():
    with pytest.raises(ValidationError):
        LeadBias(kind="tabulated", times=(0.0,), values=(1.0,))
    with pytest.raises(ValidationError):
        LeadBias(kind="tabulated", times=(1.0, 0.0), values=(0.0, 1.0))


def test_unknown_kinds_rejected():
    with pytest.raises(ValidationError):
        LeadBias(kind="ramp")
    with pytest.raises(ValidationError):
        InducedFockRule(kind="quarter")


def test_half_sum_rule_midpoint():
    prof = smooth_step_bias(dV_L=1.0, dV_R=-2.0, rise_fs=0.1)
    rule = InducedFockRule(kind="paper_half_sum")
    t = 4.0
    want = 0.5 * (bias_at(prof, "L", t) + bias_at(prof, "R", t))
    assert rule.shift_at(prof, t) == pytest.approx(want)
    assert rule.shift_inf(prof) == pytest.approx(0.5 * (-1.0 + 2.0))


def test_shift_phase_derivative_consistency():
    prof = smooth_step_bias(dV_R=-2.0, rise_fs=0.3)
    rule = InducedFockRule(kind="paper_half_sum")
    t, h = 1.1, 1e-5
    deriv = (rule.shift_phase(prof, t + h) - rule.shift_phase(prof, t - h)) \
        / (2 * h)
    assert deriv == pytest.approx(rule.shift_at(prof, t), abs=1e-8)


def test_rule_none_is_inert():
    rule = InducedFockRule(kind="none")
    prof = smooth_step_bias(dV_R=-5.0)
    assert rule.shift_at(prof, 3.0) == 0.0
    assert rule.shift_phase(prof, 3.0) == 0.0
    assert rule.shift_inf(prof) == 0.0


def test_tabulated_rule_phase():
    # shift(t) = 1 - t/2 on [0, 2]: integral to t is t - t^2/4
    rule = InducedFockRule(kind="tabulated", times=(0.0, 2.0),
                           values=(1.0, 0.0))
    prof = zero_bias()
    for t in (0.5, 1.0, 2.0):
        assert rule.shift_phase(prof, t) == pytest.approx(t - t * t / 4.0,
                                                          abs=1e-13)
    assert rule.shift_inf(prof) == 0.0


def test_h_at_adds_scalar_shift():
    m = build_chain(3, 0.0, -0.5, 0.1, 0.1, 0.0)
    prof = smooth_step_bias(dV_R=-2.0, rise_fs=0.01)
    rule = InducedFockRule(kind="paper_half_sum")
    h = h_at(m, prof, rule, 10.0)
    shift = rule.shift_at(prof, 10.0)
    assert np.allclose(np.diag(h - m.h0), shift)
    assert np.allclose(h - np.diag(np.diag(h)), m.h0 - np.diag(np.diag(m.h0)))


def test_profile_helpers():
    prof = smooth_step_bias()
    assert prof.L.kind == "zero" and prof.R.kind == "zero"
    assert prof.is_analytic()
    assert not prof.has_jump()
    jumper = BiasProfile(
        L=LeadBias(kind="zero"),
        R=LeadBias(kind="tabulated", times=(0.0, 0.0, 1.0),
                   values=(0.0, 1.0, 1.0)))
    assert jumper.has_jump()
    assert not jumper.is_analytic()


def test_linewidth_from_surface_gf_wbl():
    # flat-band surface GF -i pi eta: Lambda = pi eta h h^dagger
    eta = 0.4
    h_da = np.array([[0.3 + 0.1j], [0.2 - 0.4j]])
    g = np.array([[-1j * np.pi * eta]])
    lam = linewidth_from_surface_gf(h_da, g)
    want = np.pi * eta * (h_da @ h_da.conj().T)
    assert np.max(np.abs(lam - want)) < 1e-14


def test_linewidth_warns_when_not_psd():
    h_da = np.array([[1.0]])
    g = np.array([[1j]])  # wrong-sign spectral weight
    with pytest.warns(NotPSDWarning):
        linewidth_from_surface_gf(h_da, g)
