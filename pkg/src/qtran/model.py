"""Devices, leads, bias protocols, and the induced level-shift rule.

A device is a finite Hermitian Hamiltonian block h0 coupled to two leads
through positive-semidefinite line-width matrices Lambda_L and Lambda_R.
External voltages enter as rigid lead level shifts

    delta_eps_alpha(t) = -DeltaV_alpha(t)

and may induce a shift of the device levels themselves through an
InducedFockRule (the half-sum rule shifts the whole device block by the mean
of the two lead shifts).
"""

import bisect
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    JumpDiscontinuity,
    NegativeLinewidth,
    NotPSDWarning,
    OutOfTableRange,
    ValidationError,
)
from .linalg import as_square_array, herm, max_abs

import warnings

LEADS = ("L", "R")

HERMITICITY_TOL = 1e-12
PSD_TOL = -1e-12


@dataclass
class DeviceModel:
    """Static description of the open device region.

    h0 is the device Hamiltonian at t = 0 (eV), lambda_L / lambda_R the lead
    line-width matrices (eV), mu0 the common equilibrium chemical potential.
    """

    h0: np.ndarray
    lambda_L: np.ndarray
    lambda_R: np.ndarray
    mu0: float

    def __post_init__(self):
        self.h0 = as_square_array(self.h0)
        self.lambda_L = as_square_array(self.lambda_L)
        self.lambda_R = as_square_array(self.lambda_R)
        self.mu0 = float(self.mu0)
        n = self.h0.shape[0]
        if self.lambda_L.shape[0] != n or self.lambda_R.shape[0] != n:
            raise ValidationError("h0 and line-width matrices disagree in dimension")
        if max_abs(self.h0 - dagger(self.h0)) > HERMITICITY_TOL:
            raise ValidationError("h0 not Hermitian")
        for name in ("lambda_L", "lambda_R"):
            lam = getattr(self, name)
            if max_abs(lam - dagger(lam)) > HERMITICITY_TOL:
                raise ValidationError("%s not Hermitian" % name)
            w = np.linalg.eigvalsh(herm(lam))
            if np.min(w) < PSD_TOL:
                raise ValidationError(
                    "%s not positive semidefinite (min eigenvalue %.3g)"
                    % (name, float(np.min(w))))

    @property
    def n_orb(self):
        return self.h0.shape[0]

    def lead_lambda(self, lead):
        if lead == "L":
            return self.lambda_L
        if lead == "R":
            return self.lambda_R
        raise ValueError("lead must be 'L' or 'R', got %r" % (lead,))

    @property
    def lambda_total(self):
        return self.lambda_L + self.lambda_R


def dagger(a):
    return np.asarray(a).conj().T


@dataclass
class LeadBias:
    """Per-lead voltage protocol. Level shift is the negative of the voltage."""

    kind: str = "zero"           # zero | smooth_step | tabulated
    dV: float = 0.0              # target voltage amplitude (V)
    rise_fs: float = 0.1         # smooth-step rise time a (fs)
    times: tuple = ()            # tabulated abscissae (fs)
    values: tuple = ()           # tabulated DeltaV samples (V)

    def __post_init__(self):
        if self.kind not in ("zero", "smooth_step", "tabulated"):
            raise ValidationError("unknown bias kind %r" % (self.kind,))
        if self.kind == "smooth_step" and not self.rise_fs > 0:
            raise ValidationError("smooth_step rise time must be positive")
        if self.kind == "tabulated":
            t = np.asarray(self.times, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if t.ndim != 1 or t.shape != v.shape or t.size < 2:
                raise ValidationError("tabulated bias needs matching 1d arrays, >= 2 samples")
            if np.any(np.diff(t) < 0):
                raise ValidationError("tabulated bias abscissae must be nondecreasing")
            self.times = tuple(float(x) for x in t)
            self.values = tuple(float(x) for x in v)

    def has_jump(self):
        """Duplicate abscissae encode a jump discontinuity."""
        if self.kind != "tabulated":
            return False
        t = np.asarray(self.times)
        return bool(np.any(np.diff(t) == 0.0))

    def voltage_at(self, t):
        """DeltaV(t) in volts."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "smooth_step":
            if t <= 0.0:
                return 0.0
            return self.dV * (1.0 - np.exp(-t / self.rise_fs))
        # tabulated: piecewise linear, right-continuous across jumps
        times, values = self.times, self.values
        if t < times[0] or t > times[-1]:
            raise OutOfTableRange(
                "t = %g fs outside table range [%g, %g]" % (t, times[0], times[-1]))
        i = bisect.bisect_right(times, t) - 1
        if i >= len(times) - 1:
            return values[-1]
        t0, t1 = times[i], times[i + 1]
        if t1 == t0:
            return values[i + 1]
        w = (t - t0) / (t1 - t0)
        return values[i] * (1.0 - w) + values[i + 1] * w

    def voltage_phase(self, t):
        """Time integral of DeltaV over [0, t] (V*fs)."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "smooth_step":
            if t <= 0.0:
                return 0.0
            a = self.rise_fs
            return self.dV * (t - a * (1.0 - np.exp(-t / a)))
        times = np.asarray(self.times)
        values = np.asarray(self.values)
        if t < times[0] or t > times[-1]:
            raise OutOfTableRange(
                "t = %g fs outside table range [%g, %g]" % (t, times[0], times[-1]))
        if times[0] > 0.0:
            raise OutOfTableRange("tabulated bias must start at t <= 0 to integrate from 0")
        # cumulative trapezoid from the first knot, then restrict to [0, t]
        upper = self._cum_trapz(t)
        lower = self._cum_trapz(0.0)
        return upper - lower

    def voltage_inf(self):
        """Settled (late-time) voltage value."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "smooth_step":
            return self.dV
        return self.values[-1]

    def _cum_trapz(self, t):
        times = np.asarray(self.times)
        values = np.asarray(self.values)
        i = int(np.searchsorted(times, t, side="right")) - 1
        i = min(max(i, 0), len(times) - 2)
        full = np.concatenate(([0.0], np.cumsum(
            0.5 * (values[1:] + values[:-1]) * np.diff(times))))
        t0, t1 = times[i], times[i + 1]
        if t1 == t0:
            return float(full[i])
        w = t - t0
        v_t = values[i] + (values[i + 1] - values[i]) * (w / (t1 - t0))
        return float(full[i] + 0.5 * (values[i] + v_t) * w)


@dataclass
class BiasProfile:
    """Bias protocols for both leads."""

    L: LeadBias = field(default_factory=LeadBias)
    R: LeadBias = field(default_factory=LeadBias)

    def lead(self, lead):
        if lead == "L":
            return self.L
        if lead == "R":
            return self.R
        raise ValueError("lead must be 'L' or 'R', got %r" % (lead,))

    def has_jump(self):
        return self.L.has_jump() or self.R.has_jump()

    def is_analytic(self):
        return self.L.kind != "tabulated" and self.R.kind != "tabulated"


def smooth_step_bias(dV_L=0.0, dV_R=0.0, rise_fs=0.1):
    def one(v):
        if v == 0.0:
            return LeadBias(kind="zero")
        return LeadBias(kind="smooth_step", dV=v, rise_fs=rise_fs)
    return BiasProfile(L=one(dV_L), R=one(dV_R))


def zero_bias():
    return BiasProfile(L=LeadBias(kind="zero"), R=LeadBias(kind="zero"))


def bias_at(profile, lead, t):
    """Lead level shift delta_eps_alpha(t) = -DeltaV_alpha(t) in eV."""
    return -profile.lead(lead).voltage_at(t)


def bias_phase(profile, lead, t):
    """Integral of delta_eps_alpha over [0, t] (eV*fs)."""
    return -profile.lead(lead).voltage_phase(t)


@dataclass
class InducedFockRule:
    """How the device Hamiltonian responds to the applied bias.

    kind 'none' leaves h fixed; 'paper_half_sum' shifts the whole device
    block by the mean of the two lead shifts; 'tabulated' interpolates
    user-supplied scalar shifts over time.
    """

    kind: str = "paper_half_sum"
    times: tuple = ()
    values: tuple = ()  # scalar shifts (eV)

    def __post_init__(self):
        if self.kind not in ("none", "paper_half_sum", "tabulated"):
            raise ValidationError("unknown induced-shift rule %r" % (self.kind,))
        if self.kind == "tabulated":
            t = np.asarray(self.times, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if t.ndim != 1 or t.shape != v.shape or t.size < 2:
                raise ValidationError("tabulated rule needs matching 1d arrays, >= 2 samples")
            if np.any(np.diff(t) <= 0):
                raise ValidationError("tabulated rule abscissae must be strictly increasing")
            self.times = tuple(float(x) for x in t)
            self.values = tuple(float(x) for x in v)

    def shift_at(self, bias, t):
        """Scalar device level shift delta_h(t) in eV."""
        if self.kind == "none":
            return 0.0
        if self.kind == "paper_half_sum":
            return 0.5 * (bias_at(bias, "L", t) + bias_at(bias, "R", t))
        times, values = self.times, self.values
        if t < times[0] or t > times[-1]:
            raise OutOfTableRange(
                "t = %g fs outside rule table range [%g, %g]"
                % (t, times[0], times[-1]))
        return float(np.interp(t, times, values))

    def shift_phase(self, bias, t):
        """Integral of delta_h over [0, t] (eV*fs)."""
        if self.kind == "none":
            return 0.0
        if self.kind == "paper_half_sum":
            return 0.5 * (bias_phase(bias, "L", t) + bias_phase(bias, "R", t))
        times = np.asarray(self.times)
        values = np.asarray(self.values)
        if t < times[0] or t > times[-1] or times[0] > 0.0:
            raise OutOfTableRange("rule table must cover [0, t]")
        grid = np.concatenate(([0.0], np.cumsum(
            0.5 * (values[1:] + values[:-1]) * np.diff(times))))
        i = int(np.searchsorted(times, t, side="right")) - 1
        i = min(max(i, 0), len(times) - 2)
        w = t - times[i]
        v_t = float(np.interp(t, times, values))
        upper = grid[i] + 0.5 * (values[i] + v_t) * w
        i0 = int(np.searchsorted(times, 0.0, side="right")) - 1
        i0 = min(max(i0, 0), len(times) - 2)
        w0 = 0.0 - times[i0]
        v_0 = float(np.interp(0.0, times, values))
        lower = grid[i0] + 0.5 * (values[i0] + v_0) * w0
        return float(upper - lower)

    def shift_inf(self, bias):
        """Settled (late-time) device shift."""
        if self.kind == "none":
            return 0.0
        if self.kind == "paper_half_sum":
            return -0.5 * (bias.L.voltage_inf() + bias.R.voltage_inf())
        return self.values[-1]

    def is_analytic(self):
        return self.kind in ("none", "paper_half_sum")


def h_at(model, bias, rule, t):
    """Device Hamiltonian h(t) = h0 + delta_h(t) * I."""
    return model.h0 + rule.shift_at(bias, t) * np.eye(model.n_orb)


def build_single_site(eps_d, lam_L, lam_R, mu0):
    """One-orbital device with scalar couplings."""
    if lam_L < 0 or lam_R < 0:
        raise NegativeLinewidth("line-widths must be nonnegative")
    return DeviceModel(
        h0=np.array([[eps_d]], dtype=complex),
        lambda_L=np.array([[lam_L]], dtype=complex),
        lambda_R=np.array([[lam_R]], dtype=complex),
        mu0=mu0,
    )


def build_chain(n, eps, hop, lam_end_L, lam_end_R, mu0):
    """Tight-binding chain, leads attached to the two end sites."""
    if n < 1:
        raise ValidationError("chain length must be >= 1")
    if lam_end_L < 0 or lam_end_R < 0:
        raise NegativeLinewidth("line-widths must be nonnegative")
    h0 = np.zeros((n, n), dtype=complex)
    np.fill_diagonal(h0, eps)
    for i in range(n - 1):
        h0[i, i + 1] = hop
        h0[i + 1, i] = np.conj(hop)
    lam_L = np.zeros((n, n), dtype=complex)
    lam_R = np.zeros((n, n), dtype=complex)
    lam_L[0, 0] = lam_end_L
    lam_R[n - 1, n - 1] = lam_end_R
    return DeviceModel(h0=h0, lambda_L=lam_L, lambda_R=lam_R, mu0=mu0)


def linewidth_from_surface_gf(h_coupling, g_r_surface):
    """Line-width matrix -Im{h_DA g^r h_AD} from a surface Green's function.

    h_coupling is the device-to-lead block (n_orb x n_lead); the result is
    symmetrized to exact Hermiticity. Emits NotPSDWarning when the outcome
    has an eigenvalue below -1e-10.
    """
    h_da = np.asarray(h_coupling, dtype=complex)
    g = as_square_array(g_r_surface)
    if h_da.ndim != 2 or h_da.shape[1] != g.shape[0]:
        raise ValidationError("coupling block and surface GF disagree in dimension")
    sigma_r = h_da @ g @ dagger(h_da)
    lam = herm(-(sigma_r - dagger(sigma_r)) / (2j))
    w = np.linalg.eigvalsh(lam)
    if np.min(w) < -1e-10:
        warnings.warn(
            "line-width matrix has negative eigenvalue %.3g" % float(np.min(w)),
            NotPSDWarning,
            stacklevel=2,
        )
    return lam
