"""Equation-of-motion propagation and current traces.

Classical RK4 on

    d sigma / dt = -(i/hbar) [h_D(t), sigma] - (1/hbar) sum_alpha Q_alpha(t)

with Q from the wide-band-limit dissipator (adiabatic or exact injection
term) or the complete-second-order dissipator for static Hamiltonians.
J_alpha(t) = -tr Q_alpha(t) is recorded in microamps; charge continuity
d tr(sigma)/dt = (J_L + J_R)/hbar in natural units ties the trace drift to
the lead currents and is enforced as a record invariant.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from .constants import HBAR_EV_FS, MICROAMP_PER_NATURAL
from .cso import causality_transforms, cso_q
from .errors import ConfigError, NonFinite, NumericError, StateCorrupt, ValidationError
from .ground_state import ground_state_density
from .linalg import dagger, herm, max_abs
from .model import LEADS
from .wbl import PPlusExactTracker, WblEngine

KINDS = ("wbl_adiabatic", "wbl_exact", "cso")


class DissipatorDriver:
    """Evaluates the sigma-independent part of the dissipator along a run.

    For the WBL kinds, K_alpha(t) does not depend on sigma, so each RK4 stage
    time needs one kernel evaluation shared by all stages at that time; the
    evaluation at t + dt is reused as the next step's t. The exact kind keeps
    one injection tracker per lead, advanced on the half-step lattice, and
    corrects the adiabatic K by (P_exact - P_adiabatic) + h.c. evaluated on
    the same finite energy window.
    """

    def __init__(self, model, bias, rule, kind,
                 exact_eps_min=-100.0, exact_spacing=None):
        if kind not in KINDS:
            raise ValidationError("unknown dissipator kind %r" % (kind,))
        self.model = model
        self.bias = bias
        self.rule = rule
        self.kind = kind
        self.dt = None
        self._memo = {}
        if kind == "cso":
            self._require_static(bias, rule)
            self.cts = {lead: causality_transforms(model, lead)
                        for lead in LEADS}
            self.engine = None
            return
        self.engine = WblEngine(model, bias, rule)
        if kind == "wbl_exact":
            lam_w = np.linalg.eigvalsh(herm(model.lambda_total))
            lam_pos = lam_w[lam_w > 1e-12]
            if lam_pos.size == 0:
                raise ValidationError("exact injection needs a nonzero line-width")
            if exact_spacing is None:
                exact_spacing = float(np.min(lam_pos)) / 16.0
            span = model.mu0 - exact_eps_min
            if span <= 0:
                raise ValidationError("exact_eps_min must lie below mu0")
            m = int(np.ceil(span / exact_spacing)) + 1
            if m % 2 == 0:
                m += 1
            grid = np.linspace(exact_eps_min, model.mu0, m)
            self.trackers = {lead: PPlusExactTracker(model, lead, grid)
                             for lead in LEADS}
            self.exact_eps_min = float(grid[0])

    @staticmethod
    def _require_static(bias, rule):
        if bias.L.kind != "zero" or bias.R.kind != "zero":
            raise ConfigError(
                "cso propagation needs a static device Hamiltonian: "
                "zero bias on both leads")
        if rule.kind == "tabulated" and any(v != 0.0 for v in rule.values):
            raise ConfigError(
                "cso propagation does not support a time-dependent shift rule")

    def _entry(self, t):
        """(state, {lead: K_alpha}) at time t, memoized per stage time."""
        if t in self._memo:
            return self._memo[t]
        st = self.engine.state_at(t)
        ks = {}
        for lead in LEADS:
            k = self.engine.k_lead(st, lead)
            if self.kind == "wbl_exact":
                tracker = self.trackers[lead]
                tracker.advance(st)
                diff = tracker.value() \
                    - self.engine.p_plus_adiabatic(st, lead,
                                                   eps_min=self.exact_eps_min)
                k = k + diff + dagger(diff)
            ks[lead] = k
        self._memo[t] = (st, ks)
        return self._memo[t]

    def prune(self, keep_from):
        for key in [k for k in self._memo if k < keep_from]:
            del self._memo[key]

    def rhs(self, t, sigma):
        hb = HBAR_EV_FS
        if self.kind == "cso":
            h = self.model.h0
            q_sum = sum(cso_q(sigma, self.cts[lead]) for lead in LEADS)
            return (-1j / hb) * (h @ sigma - sigma @ h) - q_sum / hb
        st, ks = self._entry(t)
        h = st.h_now
        lam = self.model.lambda_total
        diss = ks["L"] + ks["R"] + lam @ sigma + sigma @ lam
        return (-1j / hb) * (h @ sigma - sigma @ h) - diss / hb

    def q_leads(self, t, sigma):
        if self.kind == "cso":
            return {lead: cso_q(sigma, self.cts[lead]) for lead in LEADS}
        _, ks = self._entry(t)
        out = {}
        for lead in LEADS:
            lam_a = self.model.lead_lambda(lead)
            out[lead] = ks[lead] + lam_a @ sigma + sigma @ lam_a
        return out

    def j_microamp(self, t, sigma):
        q = self.q_leads(t, sigma)
        return {lead: -float(np.real(np.trace(q[lead]))) * MICROAMP_PER_NATURAL
                for lead in LEADS}


@dataclass
class SimState:
    t: float
    sigma: np.ndarray
    driver: DissipatorDriver
    herm_drift: float = 0.0


def init_sim(model, bias, rule, dissipator_kind="wbl_adiabatic", sigma0=None,
             eps_min=-1000.0, exact_eps_min=-100.0, exact_spacing=None):
    """Ground-state initial condition plus a fresh dissipator driver."""
    if sigma0 is None:
        sigma0 = ground_state_density(model, eps_min=eps_min).sigma0
    drv = DissipatorDriver(model, bias, rule, dissipator_kind,
                           exact_eps_min=exact_eps_min,
                           exact_spacing=exact_spacing)
    return SimState(t=0.0, sigma=np.array(sigma0, dtype=complex), driver=drv)


def step_rk4(state, dt, dissipator_kind=None):
    """One classical RK4 step; re-Hermitizes and checks the spectrum."""
    drv = state.driver
    if dissipator_kind is not None and dissipator_kind != drv.kind:
        raise ValidationError(
            "driver was built for %r, not %r" % (drv.kind, dissipator_kind))
    if drv.kind == "wbl_exact":
        if drv.dt is None:
            drv.dt = dt
        elif drv.dt != dt:
            raise ValidationError("exact injection tracker needs a fixed step")
    t, s0 = state.t, state.sigma
    k1 = drv.rhs(t, s0)
    k2 = drv.rhs(t + 0.5 * dt, s0 + 0.5 * dt * k1)
    k3 = drv.rhs(t + 0.5 * dt, s0 + 0.5 * dt * k2)
    k4 = drv.rhs(t + dt, s0 + dt * k3)
    s1 = s0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    drift = max_abs(s1 - dagger(s1))
    s1 = herm(s1)
    if not np.all(np.isfinite(s1)):
        raise NonFinite("sigma lost finiteness during step at t = %g fs" % t)
    ev = np.linalg.eigvalsh(s1)
    if ev.min() < -1e-6 or ev.max() > 2.0 + 1e-6:
        raise StateCorrupt(
            "sigma eigenvalues [%g, %g] outside [0, 2] at t = %g fs"
            % (ev.min(), ev.max(), t + dt))
    drv.prune(t + dt)
    return SimState(t=t + dt, sigma=s1, driver=drv,
                    herm_drift=max(state.herm_drift, drift))


@dataclass
class TraceRecord:
    """Sampled currents, trace, and occupations along one propagation."""

    times: np.ndarray
    j_L: np.ndarray
    j_R: np.ndarray
    trace_sigma: np.ndarray
    occupations: np.ndarray
    meta: dict = field(default_factory=dict)

    def continuity_residual(self):
        """max | d tr(sigma)/dt - (J_L + J_R)/hbar |, natural units, 1/fs.

        Sixth-order central differences at interior samples; needs at least
        seven uniformly spaced samples.
        """
        t = np.asarray(self.times)
        if t.size < 7:
            return 0.0
        h = t[1] - t[0]
        tr = np.asarray(self.trace_sigma)
        d = (45.0 * (tr[4:-2] - tr[2:-4])
             - 9.0 * (tr[5:-1] - tr[1:-5])
             + (tr[6:] - tr[:-6])) / (60.0 * h)
        j_nat = (np.asarray(self.j_L) + np.asarray(self.j_R)) \
            / MICROAMP_PER_NATURAL
        return float(np.max(np.abs(d - j_nat[3:-3] / HBAR_EV_FS)))

    def validate(self, residual_tol=1e-5):
        n = len(self.times)
        for name in ("j_L", "j_R", "trace_sigma"):
            if len(getattr(self, name)) != n:
                raise ValidationError("trace column %s has wrong length" % name)
        if len(self.occupations) != n:
            raise ValidationError("occupation rows disagree with times")
        resid = self.continuity_residual()
        if resid > residual_tol:
            raise NumericError(
                "charge continuity residual %.3g exceeds %g per fs"
                % (resid, residual_tol))
        return resid

    def settling_time(self, window_fs=5.0, tol_uA_per_fs=1e-4):
        """Earliest sample time from which |dJ/dt| stays below tol for window_fs."""
        t = np.asarray(self.times)
        if t.size < 3:
            return None
        h = t[1] - t[0]
        m = max(int(round(window_fs / h)), 1)
        djl = np.abs(np.gradient(np.asarray(self.j_L), h))
        djr = np.abs(np.gradient(np.asarray(self.j_R), h))
        quiet = np.maximum(djl, djr) < tol_uA_per_fs
        for i in range(t.size - m):
            if quiet[i:i + m].all():
                return float(t[i])
        return None

    def settled_current(self, window_fs=5.0):
        """Mean currents over the trailing window, as {'L': uA, 'R': uA}."""
        t = np.asarray(self.times)
        lo = t[-1] - window_fs
        sel = t >= lo
        return {"L": float(np.mean(np.asarray(self.j_L)[sel])),
                "R": float(np.mean(np.asarray(self.j_R)[sel]))}

    def to_csv(self, path_or_handle, gnuplot_path=None):
        n_orb = self.occupations.shape[1] if self.occupations.ndim == 2 else 0
        header = "t_fs,J_L_uA,J_R_uA,trace_sigma" \
            + "".join(",occ_%d" % i for i in range(n_orb))
        lines = [header]
        for i in range(len(self.times)):
            cells = [self.times[i], self.j_L[i], self.j_R[i],
                     self.trace_sigma[i]]
            cells.extend(self.occupations[i])
            lines.append(",".join("%.12g" % c for c in cells))
        text = "\n".join(lines) + "\n"
        if hasattr(path_or_handle, "write"):
            path_or_handle.write(text)
            name = getattr(path_or_handle, "name", "trace.csv")
        else:
            with open(path_or_handle, "w") as fh:
                fh.write(text)
            name = str(path_or_handle)
        if gnuplot_path is not None:
            with open(gnuplot_path, "w") as fh:
                fh.write(_gnuplot_script(name, n_orb))
        return text

    @property
    def j_L_natural(self):
        return np.asarray(self.j_L) / MICROAMP_PER_NATURAL

    @property
    def j_R_natural(self):
        return np.asarray(self.j_R) / MICROAMP_PER_NATURAL


def _gnuplot_script(csv_name, n_orb):
    lines = [
        "set datafile separator ','",
        "set xlabel 't (fs)'",
        "set ylabel 'J (uA)'",
        "set key left top",
        "plot '%s' using 1:2 with lines title 'J_L', \\" % csv_name,
        "     '%s' using 1:3 with lines title 'J_R'" % csv_name,
        "pause -1",
    ]
    return "\n".join(lines) + "\n"


def run(model, bias, rule, t_end, dt=0.02, dissipator_kind="wbl_adiabatic",
        sample_every=1, sigma0=None, eps_min=-1000.0, exact_eps_min=-100.0,
        exact_spacing=None):
    """Propagate from the equilibrium state and record currents.

    Samples every sample_every steps (the first and last step always
    included). On NaN/Inf the partial record up to the last good state is
    attached to the raised NonFinite error.
    """
    if not t_end > 0:
        raise ValidationError("t_end must be positive")
    if not dt > 0:
        raise ValidationError("dt must be positive")
    nsteps = int(round(t_end / dt))
    if nsteps < 1:
        nsteps = 1
    state = init_sim(model, bias, rule, dissipator_kind, sigma0=sigma0,
                     eps_min=eps_min, exact_eps_min=exact_eps_min,
                     exact_spacing=exact_spacing)
    drv = state.driver

    rows = {"t": [], "jl": [], "jr": [], "tr": [], "occ": []}

    def sample(st):
        j = drv.j_microamp(st.t, st.sigma)
        rows["t"].append(st.t)
        rows["jl"].append(j["L"])
        rows["jr"].append(j["R"])
        rows["tr"].append(float(np.real(np.trace(st.sigma))))
        rows["occ"].append(np.real(np.diag(st.sigma)).copy())

    def build(meta_extra):
        meta = {"dt_fs": dt, "t_end_fs": t_end, "dissipator": dissipator_kind,
                "sample_every": sample_every, "n_orb": model.n_orb,
                "mu0": model.mu0}
        meta.update(meta_extra)
        rec = TraceRecord(
            times=np.asarray(rows["t"]), j_L=np.asarray(rows["jl"]),
            j_R=np.asarray(rows["jr"]), trace_sigma=np.asarray(rows["tr"]),
            occupations=np.asarray(rows["occ"]), meta=meta)
        return rec

    sample(state)
    for i in range(1, nsteps + 1):
        try:
            state = step_rk4(state, dt)
        except NonFinite as exc:
            exc.record = build({"aborted_at_fs": state.t})
            exc.last_good_t = state.t
            raise
        if i % sample_every == 0 or i == nsteps:
            sample(state)

    rec = build({"max_herm_drift": state.herm_drift,
                 "sigma_final": state.sigma.copy()})
    rec.meta["settled_t_fs"] = rec.settling_time()
    return rec
