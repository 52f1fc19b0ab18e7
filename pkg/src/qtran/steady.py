"""Landauer steady-state transmission and currents.

In the wide-band limit the retarded Green function of the settled device is
G^r(eps) = (eps - h0 - dh_inf + i Lambda)^(-1) and the transmission per spin
comes in two normalizations: the trace form tr[G^r Lambda_R G^a Lambda_L]
scaled by 2/pi (the convention used by the time-dependent current formulas
here), and the textbook 4 tr[Lambda_L G^r Lambda_R G^a]. They differ by a
constant 2 pi.

Beyond the wide-band limit, a finite set of Lorentzian lead levels gives an
energy-dependent embedding self-energy via sigma_lorentzian_sum.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .constants import MICROAMP_PER_NATURAL
from .errors import QuadratureNotConverged, ValidationError
from .linalg import as_square_array, dagger


def _gf_pair(model, eps, dh_inf):
    n = model.n_orb
    h_eff = model.h0 + dh_inf * np.eye(n) if np.isscalar(dh_inf) \
        else model.h0 + dh_inf
    a_r = eps * np.eye(n) - h_eff + 1j * model.lambda_total
    g_r = np.linalg.inv(a_r)
    return g_r, dagger(g_r)


def transmission_wbl(model, eps, shift_L=0.0, shift_R=0.0, dh_inf=0.0):
    """(2/pi) tr[G^r Lambda_R G^a Lambda_L] at energy eps.

    shift_L and shift_R are the settled lead potential shifts; they move the
    occupation windows of the leads, not the device resolvent, so they do not
    enter here. They are accepted so call sites can carry the full settled
    bias description through one signature.
    """
    del shift_L, shift_R
    g_r, g_a = _gf_pair(model, eps, dh_inf)
    lam_l = model.lead_lambda("L")
    lam_r = model.lead_lambda("R")
    val = np.trace(g_r @ lam_r @ g_a @ lam_l)
    return float(np.real(val)) * 2.0 / np.pi


def transmission_wbl_std(model, eps, dh_inf=0.0):
    """Textbook normalization 4 tr[Lambda_L G^r Lambda_R G^a]."""
    g_r, g_a = _gf_pair(model, eps, dh_inf)
    lam_l = model.lead_lambda("L")
    lam_r = model.lead_lambda("R")
    val = np.trace(lam_l @ g_r @ lam_r @ g_a)
    return 4.0 * float(np.real(val))


def steady_current(model, bias_inf=(0.0, 0.0), rule=None):
    """Spin-summed settled current in microamps, positive into lead R.

    bias_inf holds the settled voltages (dV_L, dV_R); the lead energy shifts
    are Delta eps_alpha = -dV_alpha, the occupation edges sit at
    mu0 + Delta eps_alpha, and the device feels the induced shift rule
    evaluated at the settled voltages (the half-sum rule by default).
    """
    dv_l, dv_r = float(bias_inf[0]), float(bias_inf[1])
    de_l, de_r = -dv_l, -dv_r
    if rule is None or getattr(rule, "kind", None) == "paper_half_sum":
        dh_inf = 0.5 * (de_l + de_r)
    elif rule.kind == "none":
        dh_inf = 0.0
    elif rule.kind == "tabulated":
        dh_inf = float(rule.values[-1])
    else:
        raise ValidationError("unknown induced shift rule %r" % (rule.kind,))
    lo = model.mu0 + de_l
    hi = model.mu0 + de_r
    if lo == hi:
        return 0.0
    # spin-summed: 2 integral of the per-spin (2/pi) trace form
    val, err = integrate.quad(
        lambda e: 2.0 * transmission_wbl(model, e, dh_inf=dh_inf),
        lo, hi, epsabs=1e-12, epsrel=1e-10, limit=400)
    if abs(err) > 1e-6 * max(abs(val), 1.0):
        raise QuadratureNotConverged(
            "steady current quadrature error %.3g" % err)
    return val * MICROAMP_PER_NATURAL


@dataclass
class LeadLevelSet:
    """Lorentzian-broadened lead levels for one lead.

    levels is a sequence of (eps_l, gamma_l) pairs where gamma_l is the
    coupling-weight matrix (n_orb x n_orb, PSD) carried by the level at
    energy eps_l; delta is the uniform Lorentzian half-width.
    """

    levels: tuple
    delta: float = 1e-3

    def __post_init__(self):
        if self.delta <= 0:
            raise ValidationError("Lorentzian half-width must be positive")
        fixed = []
        for eps_l, gam in self.levels:
            fixed.append((float(eps_l), as_square_array(gam)))
        self.levels = tuple(fixed)


def sigma_lorentzian_sum(levels, eps):
    """Retarded and advanced embedding self-energies at energy eps.

    Sigma^r(eps) = sum_l Gamma_l / (eps - eps_l + i delta) and
    Sigma^a = (Sigma^r)^dagger.
    """
    if not levels.levels:
        raise ValidationError("empty lead level set")
    n = levels.levels[0][1].shape[0]
    s_r = np.zeros((n, n), dtype=complex)
    for eps_l, gam in levels.levels:
        s_r += gam / (eps - eps_l + 1j * levels.delta)
    return s_r, dagger(s_r)


def transmission_from_level_sets(model, levels_L, levels_R, eps):
    """Energy-dependent tr[Gamma_L G^r Gamma_R G^a] with Lorentzian leads."""
    sl_r, sl_a = sigma_lorentzian_sum(levels_L, eps)
    sr_r, sr_a = sigma_lorentzian_sum(levels_R, eps)
    n = model.n_orb
    a = eps * np.eye(n) - model.h0 - sl_r - sr_r
    g_r = np.linalg.inv(a)
    g_a = dagger(g_r)
    gam_l = 1j * (sl_r - sl_a)
    gam_r = 1j * (sr_r - sr_a)
    val = np.trace(gam_l @ g_r @ gam_r @ g_a)
    return float(np.real(val))
