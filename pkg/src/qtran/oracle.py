"""Finite-lead reference dynamics for cross-checking the reduced equations.

Each lead is discretized into n levels spread uniformly over a band of width
W centered on mu0, with per-channel couplings chosen so that
pi * (n/W) * sum_k v_k^dagger v_k reproduces the target line-width matrix
exactly. The full device-plus-leads system is then closed and Hermitian, and
sigma evolves unitarily; device currents extracted from the cross blocks are
an independent reference for the reduced-density-matrix results, valid up to
the level-discretization recurrence time 2 pi hbar n / W.
"""

from dataclasses import dataclass

import numpy as np

from .constants import HBAR_EV_FS, MICROAMP_PER_NATURAL
from .errors import (DegenerateFermiLevel, DimensionTooLarge,
                     JumpDiscontinuity, NotPSD, ValidationError)
from .linalg import as_square_array, dagger, herm, max_abs
from .model import LEADS, bias_at
from .propagate import TraceRecord


@dataclass
class DiscretizedLead:
    """Uniform-grid lead levels with per-channel device couplings.

    energies has one entry per row; coupling row k is the matrix element
    <level k| H |device>, a length-n_orb vector. A rank-r line-width matrix
    contributes r rows per grid energy.
    """

    energies: np.ndarray
    coupling: np.ndarray
    width: float
    n_levels: int

    @property
    def n_rows(self):
        return self.energies.size

    def lambda_reconstructed(self):
        """pi * eta * sum of v^dagger v; equals the target Lambda exactly."""
        c = self.coupling
        return np.pi / self.width * (dagger(c) @ c)

    def recurrence_time_fs(self):
        return 2.0 * np.pi * HBAR_EV_FS * self.n_levels / self.width


def discretize_lead(target_lambda, width, n_levels, mu0=0.0):
    lam = herm(as_square_array(target_lambda))
    if width <= 0:
        raise ValidationError("band width must be positive")
    if n_levels < 10:
        raise ValidationError("need at least 10 levels per lead")
    w, u = np.linalg.eigh(lam)
    if w.min() < -1e-12:
        raise NotPSD("line-width matrix has eigenvalue %g" % w.min())
    n_orb = lam.shape[0]
    eps = mu0 - width / 2.0 + (np.arange(n_levels) + 0.5) * width / n_levels
    energies = []
    rows = []
    for j in range(n_orb):
        if w[j] <= 1e-12:
            continue
        amp = np.sqrt(w[j] * width / (np.pi * n_levels))
        row = amp * u[:, j].conj()
        for e in eps:
            energies.append(e)
            rows.append(row)
    if rows:
        energies = np.asarray(energies, dtype=float)
        coupling = np.asarray(rows, dtype=complex)
    else:
        energies = np.zeros(0)
        coupling = np.zeros((0, n_orb), dtype=complex)
    return DiscretizedLead(energies=energies, coupling=coupling,
                           width=float(width), n_levels=int(n_levels))


class _FullSystem:
    def __init__(self, model, leads, bias, rule):
        for lead in LEADS:
            if lead not in leads:
                raise ValidationError("missing discretized lead %r" % lead)
        if bias.has_jump():
            raise JumpDiscontinuity(
                "full-system propagation needs a continuous bias")
        self.model = model
        self.leads = leads
        self.bias = bias
        self.rule = rule
        n_d = model.n_orb
        n_tot = n_d + sum(leads[a].n_rows for a in LEADS)
        if n_tot > 2000:
            raise DimensionTooLarge(
                "full system has dimension %d (limit 2000)" % n_tot)
        self.n_d = n_d
        self.n_tot = n_tot
        self.rows = {}
        start = n_d
        h = np.zeros((n_tot, n_tot), dtype=complex)
        h[:n_d, :n_d] = model.h0
        for a in LEADS:
            dl = leads[a]
            sl = slice(start, start + dl.n_rows)
            self.rows[a] = sl
            h[sl, sl] = np.diag(dl.energies)
            h[sl, :n_d] = dl.coupling
            h[:n_d, sl] = dagger(dl.coupling)
            start += dl.n_rows
        self.h_static = h
        self._u_static = None

    def diag_shift(self, t):
        s = np.zeros(self.n_tot)
        s[:self.n_d] = self.rule.shift_at(self.bias, t)
        for a in LEADS:
            s[self.rows[a]] = bias_at(self.bias, a, t)
        return s

    def diag_shift_inf(self):
        s = np.zeros(self.n_tot)
        s[:self.n_d] = self.rule.shift_inf(self.bias)
        for a in LEADS:
            s[self.rows[a]] = -self.bias.lead(a).voltage_inf()
        return s

    def unitary_static(self, dt):
        if self._u_static is None or self._u_static[0] != dt:
            w, v = np.linalg.eigh(self.h_static)
            u = (v * np.exp(-1j * w * dt / HBAR_EV_FS)) @ dagger(v)
            self._u_static = (dt, u)
        return self._u_static[1]

    def initial_sigma(self, init):
        n_d, n_tot = self.n_d, self.n_tot
        sig = np.zeros((n_tot, n_tot), dtype=complex)
        mu0 = self.model.mu0
        if init == "partitioned":
            w, v = np.linalg.eigh(herm(self.model.h0))
            fill = _zero_t_fill(w, mu0)
            sig[:n_d, :n_d] = (v * fill) @ dagger(v)
            for a in LEADS:
                fill = _zero_t_fill(self.leads[a].energies, mu0)
                sig[self.rows[a], self.rows[a]] = np.diag(fill.astype(complex))
            return sig
        if init == "partition_free":
            h0_full = self.h_static + np.diag(self.diag_shift(0.0))
            w, v = np.linalg.eigh(h0_full)
            gap = np.min(np.abs(w - mu0)) if w.size else np.inf
            if gap < 1e-9:
                raise DegenerateFermiLevel(
                    "coupled level within %g of mu0; filling is ambiguous" % gap)
            fill = np.where(w < mu0, 2.0, 0.0)
            return (v * fill) @ dagger(v)
        raise ValidationError("unknown init scheme %r" % (init,))

    def currents_natural(self, sigma):
        out = {}
        for a in LEADS:
            h_da = self.h_static[:self.n_d, self.rows[a]]
            s_ad = sigma[self.rows[a], :self.n_d]
            out[a] = 2.0 * float(np.imag(np.trace(h_da @ s_ad)))
        return out


def _zero_t_fill(w, mu0, tol=1e-9):
    w = np.asarray(w, dtype=float)
    fill = np.where(w < mu0 - tol, 2.0, 0.0)
    fill[np.abs(w - mu0) <= tol] = 1.0
    return fill


def propagate_full(model, leads, bias, rule, t_end, dt=0.005,
                   init="partitioned", sample_every=1):
    """Unitary propagation of the closed device-plus-leads system.

    Midpoint-exponential stepping, split so the static part is exponentiated
    once: U(t) = D(t_mid) U_c D(t_mid) with D the half-step phase of the
    time-dependent diagonal (lead bias and induced device shift). Once the
    diagonal has settled to its final value, the remaining evolution is done
    in the eigenbasis of the settled Hamiltonian, which costs one
    diagonalization plus a cheap per-sample contraction.
    """
    if not t_end > 0 or not dt > 0:
        raise ValidationError("t_end and dt must be positive")
    sys = _FullSystem(model, leads, bias, rule)
    nsteps = max(int(round(t_end / dt)), 1)
    sigma = sys.initial_sigma(init)
    s_inf = sys.diag_shift_inf()

    rows = {"t": [], "jl": [], "jr": [], "tr": [], "occ": []}

    def sample_direct(t, sig):
        j = sys.currents_natural(sig)
        rows["t"].append(t)
        rows["jl"].append(j["L"] * MICROAMP_PER_NATURAL)
        rows["jr"].append(j["R"] * MICROAMP_PER_NATURAL)
        dev = sig[:sys.n_d, :sys.n_d]
        rows["tr"].append(float(np.real(np.trace(dev))))
        rows["occ"].append(np.real(np.diag(dev)).copy())

    sample_direct(0.0, sigma)
    settled_from = None
    if max_abs(sys.diag_shift(0.0) - s_inf) < 1e-14:
        settled_from = (0, sigma)
    else:
        u_c = sys.unitary_static(dt)
    i = 0
    while i < nsteps and settled_from is None:
        t_mid = (i + 0.5) * dt
        phase = np.exp(-0.5j * sys.diag_shift(t_mid) * dt / HBAR_EV_FS)
        u = (phase[:, None] * u_c) * phase[None, :]
        sigma = u @ sigma @ dagger(u)
        i += 1
        if i % sample_every == 0 or i == nsteps:
            sample_direct(i * dt, sigma)
            if max_abs(sys.diag_shift(i * dt) - s_inf) < 1e-14:
                settled_from = (i, sigma)

    if settled_from is not None and settled_from[0] < nsteps:
        i0, sig_s = settled_from
        h_inf = sys.h_static + np.diag(s_inf)
        w, v = np.linalg.eigh(h_inf)
        sig_t = dagger(v) @ sig_s @ v
        v_dev_h = dagger(v)[:, :sys.n_d]
        h_da = {a: sys.h_static[:sys.n_d, sys.rows[a]] for a in LEADS}
        for k in range(i0 + 1, nsteps + 1):
            if k % sample_every != 0 and k != nsteps:
                continue
            tau = (k - i0) * dt
            p = np.exp(-1j * w * tau / HBAR_EV_FS)
            b = sig_t @ (p.conj()[:, None] * v_dev_h)
            rows["t"].append(k * dt)
            for a in LEADS:
                blk = (v[sys.rows[a], :] * p[None, :]) @ b
                j = 2.0 * float(np.imag(np.trace(h_da[a] @ blk)))
                rows["j" + a.lower()].append(j * MICROAMP_PER_NATURAL)
            dev = (v[:sys.n_d, :] * p[None, :]) @ b
            rows["tr"].append(float(np.real(np.trace(dev))))
            rows["occ"].append(np.real(np.diag(dev)).copy())

    meta = {"dt_fs": dt, "t_end_fs": t_end, "init": init,
            "sample_every": sample_every, "n_total": sys.n_tot,
            "recurrence_fs": min(leads[a].recurrence_time_fs()
                                 for a in LEADS if leads[a].n_rows),
            "settled_step": None if settled_from is None else settled_from[0]}
    return TraceRecord(
        times=np.asarray(rows["t"]), j_L=np.asarray(rows["jl"]),
        j_R=np.asarray(rows["jr"]), trace_sigma=np.asarray(rows["tr"]),
        occupations=np.asarray(rows["occ"]), meta=meta)


def compare_schemes(model, leads, bias, rule, t_end, dt=0.005,
                    sample_every=4):
    """Run both initializations and report how their settled currents agree."""
    rec_p = propagate_full(model, leads, bias, rule, t_end, dt=dt,
                           init="partitioned", sample_every=sample_every)
    rec_f = propagate_full(model, leads, bias, rule, t_end, dt=dt,
                           init="partition_free", sample_every=sample_every)
    jp = rec_p.settled_current()
    jf = rec_f.settled_current()
    scale = max(abs(jp["L"]), abs(jp["R"]), abs(jf["L"]), abs(jf["R"]), 1e-30)
    rel = max(abs(jp[a] - jf[a]) for a in LEADS) / scale
    return {"partitioned": rec_p, "partition_free": rec_f,
            "settled_partitioned": jp, "settled_partition_free": jf,
            "settled_rel_diff": rel,
            "recurrence_fs": rec_p.meta["recurrence_fs"]}


def compare_to_wbl(model, leads, bias, rule, t_end, dt=0.002,
                   sample_every=5, init="partition_free"):
    """Sup-norm comparison of full-system and wide-band-limit currents.

    The comparison is meaningless past half the discretization recurrence
    time, so t_end is checked against it.
    """
    from .propagate import run

    t_rec = min(leads[a].recurrence_time_fs() for a in LEADS
                if leads[a].n_rows)
    if t_end >= 0.5 * t_rec:
        raise ValidationError(
            "t_end %g fs reaches half the recurrence time %g fs; "
            "use more levels or a shorter run" % (t_end, t_rec))
    rec_o = propagate_full(model, leads, bias, rule, t_end, dt=dt,
                           init=init, sample_every=sample_every)
    rec_w = run(model, bias, rule, t_end, dt=dt, sample_every=sample_every)
    n = min(len(rec_o.times), len(rec_w.times))
    dl = np.abs(np.asarray(rec_o.j_L[:n]) - np.asarray(rec_w.j_L[:n]))
    dr = np.abs(np.asarray(rec_o.j_R[:n]) - np.asarray(rec_w.j_R[:n]))
    scale = max(np.max(np.abs(rec_w.j_L[:n])), np.max(np.abs(rec_w.j_R[:n])),
                1e-30)
    return {"oracle": rec_o, "wbl": rec_w,
            "sup_rel_diff": float(max(dl.max(), dr.max()) / scale),
            "recurrence_fs": t_rec}
