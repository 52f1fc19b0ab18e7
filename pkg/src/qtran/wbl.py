"""Wide-band-limit lead dissipators.

Q_alpha(t) = K_alpha(t) + Lambda^alpha sigma + sigma Lambda^alpha enters the
equation of motion

    d sigma / dt = -(i/hbar) [h_D(t), sigma] - (1/hbar) sum_alpha Q_alpha(t)

and K_alpha = P_alpha + P_alpha^dagger collects the lead correlation pieces:
P^(-) carries the memory of the initially filled Fermi sea, P^(+) the
injection from the (possibly shifted) lead window. Energies in eV, times in
fs, hbar explicit; all lead windows are sharp at mu0 (zero temperature).

The raw window integral over (-inf, mu0] is log divergent; the divergent part
is proportional to the identity times log|cutoff| and cancels between P and
P^dagger, so the production K uses the renormalized kernel
Log(mu0 - z) - i*pi and needs no explicit lower cutoff at all. p_minus and
p_plus_adiabatic keep the finite eps_min window of their defining integrals
for diagnostics; their Hermitian combination converges to the production K
as eps_min -> -inf.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import HBAR_EV_FS
from .errors import GridTooCoarse, ValidationError
from .linalg import (
    _trapz,
    dagger,
    eig,
    expm,
    herm,
    max_abs,
    osc_kernel,
    resolvent_integral_log,
    resolvent_integral_osc,
)
from .model import LEADS, bias_at, bias_phase

PREF = -2j / np.pi


@dataclass
class WblState:
    """Snapshot of the propagation phases at one instant.

    phase_h is the accumulated Hamiltonian phase integral_0^t h_D(tau) dtau
    (eV fs); phase_bias holds integral_0^t d_eps_alpha(tau) dtau per lead;
    bias_now holds the instantaneous level shifts d_eps_alpha(t); h_now is
    h_D(t); u_minus caches the damped effective propagator
    exp{(-i phase_h - Lambda t)/hbar}.
    """

    t: float
    phase_h: np.ndarray
    phase_bias: dict
    bias_now: dict
    h_now: np.ndarray
    u_minus: np.ndarray = None

    def u_minus_residual(self, model):
        """Max-abs difference between the cached u_minus and a direct expm."""
        expo = (-1j * self.phase_h - model.lambda_total * self.t) / HBAR_EV_FS
        return max_abs(self.u_minus - expm(expo))


def _zeros_like_model(model):
    return np.zeros((model.n_orb, model.n_orb), dtype=complex)


def make_state(model, bias, rule, t):
    """Build a WblState from analytic (or tabulated) bias and shift phases."""
    n = model.n_orb
    eye = np.eye(n)
    shift = rule.shift_at(bias, t)
    cphase = rule.shift_phase(bias, t)
    pb = {lead: bias_phase(bias, lead, t) for lead in LEADS}
    bn = {lead: bias_at(bias, lead, t) for lead in LEADS}
    phase_h = model.h0 * t + cphase * eye
    h_now = model.h0 + shift * eye
    u = expm((-1j * phase_h - model.lambda_total * t) / HBAR_EV_FS)
    return WblState(t=t, phase_h=phase_h, phase_bias=pb, bias_now=bn,
                    h_now=h_now, u_minus=u)


# ---------------------------------------------------------------------------
# literal single-shot operations (general matrices, fresh decompositions)
# ---------------------------------------------------------------------------

def p_minus(state, lead, model, eps_min=-1000.0):
    """Memory of the initial Fermi sea, -(2i/pi) e^{i phi_b} U^(-) kappa Lam.

    The t = 0 value is the finite-window log kernel; for t > 0 the improper
    (-inf, mu0] integral converges through the oscillatory kernel and needs
    no cutoff.
    """
    lam_a = model.lead_lambda(lead)
    if max_abs(lam_a) == 0.0:
        return _zeros_like_model(model)
    a0 = model.h0 - 1j * model.lambda_total
    if state.t == 0.0:
        core = resolvent_integral_log(a0, model.mu0, eps_min)
        return PREF * core @ lam_a
    s = state.t / HBAR_EV_FS
    core = resolvent_integral_osc(a0, model.mu0, s)
    ph = np.exp(1j * state.phase_bias[lead] / HBAR_EV_FS)
    return PREF * ph * (state.u_minus @ core @ lam_a)


def p_plus_adiabatic(state, lead, model, eps_min=-1000.0):
    """Adiabatic lead-injection term on the finite window [eps_min, mu0].

    -(2i/pi) [ L_cut(A_t) - W ( kappa(A_t, s, mu0) - kappa(A_t, s, eps_min) ) ]
    Lambda^alpha with A_t = h_D(t) - i Lambda - d_eps_alpha(t) and
    W = e^{i phase_bias/hbar} U^(-)(t). Exactly zero at t = 0.
    """
    lam_a = model.lead_lambda(lead)
    if max_abs(lam_a) == 0.0 or state.t == 0.0:
        return _zeros_like_model(model)
    n = model.n_orb
    de = state.bias_now[lead]
    a_t = state.h_now - 1j * model.lambda_total - de * np.eye(n)
    lcut = resolvent_integral_log(a_t, model.mu0, eps_min)
    s = state.t / HBAR_EV_FS
    osc = resolvent_integral_osc(a_t, model.mu0, s) \
        - resolvent_integral_osc(a_t, eps_min, s)
    w = np.exp(1j * state.phase_bias[lead] / HBAR_EV_FS) * state.u_minus
    return PREF * (lcut - w @ osc) @ lam_a


def k_lead(state, lead, model):
    """Renormalized (cutoff-free) K^alpha(t) = B Lambda^alpha + h.c.

    B = -(2i/pi) { Log(mu0 - A_t) - i pi
                   + W [ kappa(A_0, s, mu0) - kappa(A_t, s, mu0) ] };
    the kappa bracket vanishes identically at t = 0 and whenever the lead
    window is unshifted, so zero bias gives K(t) = K(0) exactly.
    """
    lam_a = model.lead_lambda(lead)
    if max_abs(lam_a) == 0.0:
        return _zeros_like_model(model)
    n = model.n_orb
    eye = np.eye(n)
    de = state.bias_now[lead]
    a0 = model.h0 - 1j * model.lambda_total
    a_t = state.h_now - 1j * model.lambda_total - de * eye
    dec_t = eig(a_t)
    lren = dec_t.apply_scalar(lambda z: np.log(model.mu0 - z) - 1j * np.pi)
    shifted = max_abs(a_t - a0) > 0.0
    if state.t > 0.0 and shifted:
        s = state.t / HBAR_EV_FS
        osc = resolvent_integral_osc(a0, model.mu0, s) \
            - resolvent_integral_osc(a_t, model.mu0, s)
        w = np.exp(1j * state.phase_bias[lead] / HBAR_EV_FS) * state.u_minus
        b = PREF * (lren + w @ osc)
    else:
        b = PREF * lren
    p = b @ lam_a
    return p + dagger(p)


def dissipator(state, sigma, model, leads=LEADS):
    """Q_alpha = K_alpha + Lambda^alpha sigma + sigma Lambda^alpha per lead."""
    out = {}
    for lead in leads:
        lam_a = model.lead_lambda(lead)
        out[lead] = k_lead(state, lead, model) + lam_a @ sigma + sigma @ lam_a
    return out


# ---------------------------------------------------------------------------
# engine: cached spectral route used by the propagator
# ---------------------------------------------------------------------------

class WblEngine:
    """Per-run evaluator sharing one eigendecomposition of h0 - i Lambda.

    The induced shift and the lead level shifts are scalars, so every matrix
    entering K is a function of A_0 = h0 - i Lambda shifted by a multiple of
    the identity; all kernels reduce to scalar functions of the cached
    eigenvalues.
    """

    def __init__(self, model, bias, rule):
        self.model = model
        self.bias = bias
        self.rule = rule
        self.lam_tot = model.lambda_total
        self.coupled = max_abs(self.lam_tot) > 0.0
        self.a0 = model.h0 - 1j * self.lam_tot
        self.dec0 = eig(self.a0) if model.n_orb >= 1 else None
        self._eye = np.eye(model.n_orb)

    def _diag(self, vals):
        d = self.dec0
        return (d.right_vectors * vals[None, :]) @ d.inverse_vectors

    def state_at(self, t):
        m = self.model
        shift = self.rule.shift_at(self.bias, t)
        cphase = self.rule.shift_phase(self.bias, t)
        pb = {lead: bias_phase(self.bias, lead, t) for lead in LEADS}
        bn = {lead: bias_at(self.bias, lead, t) for lead in LEADS}
        phase_h = m.h0 * t + cphase * self._eye
        h_now = m.h0 + shift * self._eye
        if self.coupled:
            lam = self.dec0.values
            u = np.exp(-1j * cphase / HBAR_EV_FS) \
                * self._diag(np.exp(-1j * lam * t / HBAR_EV_FS))
        else:
            u = expm((-1j * phase_h - self.lam_tot * t) / HBAR_EV_FS)
        return WblState(t=t, phase_h=phase_h, phase_bias=pb, bias_now=bn,
                        h_now=h_now, u_minus=u)

    def _scalars(self, state, lead):
        """(c, ph): window shift of A_t vs A_0 and the net scalar phase."""
        n = self.model.n_orb
        shift = float(np.real(np.trace(state.h_now - self.model.h0))) / n
        cphase = float(np.real(
            np.trace(state.phase_h - self.model.h0 * state.t))) / n
        c = shift - state.bias_now[lead]
        ph = np.exp(1j * (state.phase_bias[lead] - cphase) / HBAR_EV_FS)
        return c, ph

    def p_minus(self, state, lead, eps_min=-1000.0):
        lam_a = self.model.lead_lambda(lead)
        if not self.coupled or max_abs(lam_a) == 0.0:
            return _zeros_like_model(self.model)
        lam = self.dec0.values
        mu0 = self.model.mu0
        if state.t == 0.0:
            vals = np.log(mu0 - lam) - np.log(eps_min - lam)
            return PREF * self._diag(vals) @ lam_a
        s = state.t / HBAR_EV_FS
        _, ph = self._scalars(state, lead)
        vals = ph * np.exp(-1j * lam * state.t / HBAR_EV_FS) \
            * osc_kernel(lam, s, mu0)
        return PREF * self._diag(vals) @ lam_a

    def p_plus_adiabatic(self, state, lead, eps_min=-1000.0):
        lam_a = self.model.lead_lambda(lead)
        if not self.coupled or max_abs(lam_a) == 0.0 or state.t == 0.0:
            return _zeros_like_model(self.model)
        lam = self.dec0.values
        mu0 = self.model.mu0
        c, ph = self._scalars(state, lead)
        lz = lam + c
        s = state.t / HBAR_EV_FS
        lcut = np.log(mu0 - lz) - np.log(eps_min - lz)
        osc = osc_kernel(lz, s, mu0) - osc_kernel(lz, s, eps_min)
        vals = lcut - ph * np.exp(-1j * lam * state.t / HBAR_EV_FS) * osc
        return PREF * self._diag(vals) @ lam_a

    def _b_vals(self, state, lead):
        lam = self.dec0.values
        mu0 = self.model.mu0
        c, ph = self._scalars(state, lead)
        if state.t == 0.0 or c == 0.0:
            return np.log(mu0 - lam) - 1j * np.pi if state.t == 0.0 \
                else np.log(mu0 - lam - c) - 1j * np.pi
        s = state.t / HBAR_EV_FS
        osc = osc_kernel(lam, s, mu0) - osc_kernel(lam + c, s, mu0)
        return (np.log(mu0 - lam - c) - 1j * np.pi) \
            + ph * np.exp(-1j * lam * state.t / HBAR_EV_FS) * osc

    def k_lead(self, state, lead):
        lam_a = self.model.lead_lambda(lead)
        if not self.coupled or max_abs(lam_a) == 0.0:
            return _zeros_like_model(self.model)
        p = PREF * self._diag(self._b_vals(state, lead)) @ lam_a
        return p + dagger(p)

    def k_sum(self, state):
        total = _zeros_like_model(self.model)
        for lead in LEADS:
            total = total + self.k_lead(state, lead)
        return total

    def dissipator(self, state, sigma):
        out = {}
        for lead in LEADS:
            lam_a = self.model.lead_lambda(lead)
            out[lead] = self.k_lead(state, lead) \
                + lam_a @ sigma + sigma @ lam_a
        return out

    def j_natural(self, state, sigma):
        """J_alpha = -tr Q_alpha in natural units (e * eV / hbar)."""
        q = self.dissipator(state, sigma)
        return {lead: -float(np.real(np.trace(q[lead]))) for lead in LEADS}

    def settled_window_shift(self, lead):
        """c_inf = induced shift minus lead shift, with bias at its asymptote."""
        shift_inf = self.rule.shift_inf(self.bias)
        de_inf = -self.bias.lead(lead).voltage_inf()
        return shift_inf - de_inf

    def k_infinity(self, lead):
        """Settled-bias limit of K^alpha: oscillatory parts damped away."""
        lam_a = self.model.lead_lambda(lead)
        if not self.coupled or max_abs(lam_a) == 0.0:
            return _zeros_like_model(self.model)
        lam = self.dec0.values
        c = self.settled_window_shift(lead)
        vals = np.log(self.model.mu0 - lam - c) - 1j * np.pi
        p = PREF * self._diag(vals) @ lam_a
        return p + dagger(p)


def wbl_steady_density(model, bias, rule):
    """Stationary sigma solving 0 = -i(A sig - sig A^dag)/hbar - K_sum/hbar.

    A = h_D(inf) - i Lambda; in its eigenbasis the Sylvester equation is
    diagonal, sig_ij = i Ktil_ij / (lam_i - conj(lam_j)), and the denominator
    never vanishes because every eigenvalue sits strictly below the real
    axis for nonzero Lambda.
    """
    eng = WblEngine(model, bias, rule)
    if not eng.coupled:
        raise ValidationError("steady state needs a nonzero line-width")
    k_sum = sum(eng.k_infinity(lead) for lead in LEADS)
    shift_inf = rule.shift_inf(bias)
    a_inf = model.h0 + shift_inf * np.eye(model.n_orb) - 1j * model.lambda_total
    dec = eig(a_inf)
    lam = dec.values
    s, si = dec.right_vectors, dec.inverse_vectors
    ktil = si @ k_sum @ dagger(si)
    denom = lam[:, None] - np.conj(lam)[None, :]
    sig_til = 1j * ktil / denom
    return herm(s @ sig_til @ dagger(s))


def wbl_steady_current(model, bias, rule):
    """Settled J_alpha = -tr[K_alpha(inf) + {Lambda^alpha, sigma_inf}], natural units."""
    eng = WblEngine(model, bias, rule)
    sigma = wbl_steady_density(model, bias, rule)
    out = {}
    for lead in LEADS:
        lam_a = model.lead_lambda(lead)
        q = eng.k_infinity(lead) + lam_a @ sigma + sigma @ lam_a
        out[lead] = -float(np.real(np.trace(q)))
    return out


# ---------------------------------------------------------------------------
# exact lead-injection term via per-energy window amplitudes
# ---------------------------------------------------------------------------

def _phi(mu):
    """(1 - e^{-i mu})/(i mu) with the small-argument series, elementwise."""
    mu = np.asarray(mu, dtype=complex)
    out = np.empty_like(mu)
    small = np.abs(mu) < 1e-6
    ms = mu[small]
    out[small] = 1.0 - 0.5j * ms - ms * ms / 6.0 + 1j * ms ** 3 / 24.0
    mb = mu[~small]
    out[~small] = (1.0 - np.exp(-1j * mb)) / (1j * mb)
    return out


class PPlusExactTracker:
    """Forward recursion for the exact P^(+) on a fixed energy grid.

    Maintains Y(eps, t) = integral_0^t exp{-(i/hbar)[Theta(t) - Theta(tau)]}
    e^{i eps (t - tau)/hbar} dtau per grid node, with Theta(t) = phase_h(t)
    - phase_bias_alpha(t) I - i Lambda t. One step multiplies Y by the exact
    phase increment and adds the new slice with the step-averaged generator
    B = dTheta/dt (exact whenever h_D and the bias are constant across the
    step, e.g. after a step-like switch-on).

    P^(+)(t) = -(2/(pi hbar)) [trapz over eps of Y] Lambda^alpha.
    """

    def __init__(self, model, lead, eps_grid):
        self.model = model
        self.lead = lead
        self.eps = np.asarray(eps_grid, dtype=float)
        if self.eps.ndim != 1 or self.eps.size < 3:
            raise ValidationError("eps_grid must be a 1d grid of >= 3 energies")
        if np.any(np.diff(self.eps) <= 0):
            raise ValidationError("eps_grid must be strictly increasing")
        n = model.n_orb
        self.y = np.zeros((self.eps.size, n, n), dtype=complex)
        self.prev = None

    def advance(self, state):
        if self.prev is None:
            if state.t != 0.0:
                raise ValidationError("state history must start at t = 0")
            self.prev = state
            return
        p, q = self.prev, state
        dt = q.t - p.t
        if dt <= 0.0:
            raise ValidationError("state history times must increase")
        lead = self.lead
        eye = np.eye(self.model.n_orb)
        dth = (q.phase_h - p.phase_h) \
            - (q.phase_bias[lead] - p.phase_bias[lead]) * eye \
            - 1j * self.model.lambda_total * dt
        dec = eig(dth / dt)
        w = dec.values
        s, si = dec.right_vectors, dec.inverse_vectors
        mu = (w[None, :] - self.eps[:, None]) * (dt / HBAR_EV_FS)
        g = dt * _phi(mu)
        gmat = np.einsum("aj,kj,jc->kac", s, g, si, optimize=True)
        fmat = (s * np.exp(-1j * w * dt / HBAR_EV_FS)[None, :]) @ si
        phase = np.exp(1j * self.eps * (dt / HBAR_EV_FS))
        self.y = phase[:, None, None] \
            * np.einsum("ab,kbc->kac", fmat, self.y, optimize=True) + gmat
        self.prev = q

    def _integral(self, idx=None):
        if idx is None:
            return _trapz(self.y, x=self.eps, axis=0)
        return _trapz(self.y[idx], x=self.eps[idx], axis=0)

    def value(self):
        lam_a = self.model.lead_lambda(self.lead)
        return -(2.0 / (np.pi * HBAR_EV_FS)) * self._integral() @ lam_a

    def value_coarse(self):
        """Same integral on the every-other-node subgrid (refinement probe)."""
        idx = list(range(0, self.eps.size, 2))
        if idx[-1] != self.eps.size - 1:
            idx.append(self.eps.size - 1)
        lam_a = self.model.lead_lambda(self.lead)
        return -(2.0 / (np.pi * HBAR_EV_FS)) * self._integral(idx) @ lam_a


def p_plus_exact(state_history, lead, model, eps_grid):
    """Exact P^(+) by replaying a state history on an energy grid.

    Raises GridTooCoarse when the estimated change under one more grid
    halving exceeds 1e-5 (trapezoid Richardson: a quarter of the fine-coarse
    difference).
    """
    tracker = PPlusExactTracker(model, lead, eps_grid)
    for st in state_history:
        tracker.advance(st)
    fine = tracker.value()
    coarse = tracker.value_coarse()
    if max_abs(fine - coarse) / 4.0 > 1e-5:
        raise GridTooCoarse(
            "energy grid refinement would move P+ by more than 1e-5")
    return fine
