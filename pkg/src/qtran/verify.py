"""Self-contained invariant checks runnable from the command line.

Each check is a named, fast version of one structural guarantee. The full
test suite covers the same ground with tighter scenarios; this module exists
so a packaged install can be smoke-checked without pytest.
"""

import numpy as np

from .cso import causality_transforms, cso_q
from .ground_state import ground_state_density, occupation_single_site
from .linalg import dagger, max_abs
from .model import InducedFockRule, build_single_site, smooth_step_bias, zero_bias
from .propagate import init_sim, run, step_rk4
from .wbl import WblEngine, p_minus, p_plus_adiabatic


def _fig_model(eps_d=0.0, lam=0.1):
    """Benchmark single site; lam is the per-lead line-width."""
    return build_single_site(eps_d, lam, lam, 0.0)


def check_ground_state_arctan():
    lam_tot = 0.2
    worst = 0.0
    for eps_d in (0.0, lam_tot, -lam_tot, 10 * lam_tot, -10 * lam_tot):
        model = _fig_model(eps_d=eps_d)
        got = float(np.real(ground_state_density(model).sigma0[0, 0]))
        want = occupation_single_site(eps_d, lam_tot, 0.0)
        worst = max(worst, abs(got - want))
    return worst < 1e-8, "max deviation %.3g" % worst


def check_zero_bias_stationary():
    rec = run(_fig_model(), zero_bias(), InducedFockRule(), 5.0, dt=0.02)
    peak = max(np.max(np.abs(rec.j_L)), np.max(np.abs(rec.j_R)))
    return peak < 1e-6, "max |J| %.3g uA over 5 fs" % peak


def check_k_hermitian():
    model = _fig_model()
    bias = smooth_step_bias(dV_R=-2.0, rise_fs=0.01)
    eng = WblEngine(model, bias, InducedFockRule())
    worst = 0.0
    for t in (0.0, 0.5, 2.0):
        st = eng.state_at(t)
        for lead in ("L", "R"):
            k = eng.k_lead(st, lead)
            worst = max(worst, max_abs(k - dagger(k)))
    return worst < 1e-12, "max Hermiticity defect %.3g" % worst


def check_k_cutoff_invariant():
    model = _fig_model()
    bias = smooth_step_bias(dV_R=-2.0, rise_fs=0.01)
    eng = WblEngine(model, bias, InducedFockRule())
    st = eng.state_at(1.0)
    worst = 0.0
    for lead in ("L", "R"):
        ks = []
        for eps_min in (-1000.0, -2000.0):
            p = p_minus(st, lead, model, eps_min=eps_min) \
                + p_plus_adiabatic(st, lead, model, eps_min=eps_min)
            ks.append(p + dagger(p))
        worst = max(worst, max_abs(ks[0] - ks[1]))
    return worst < 1e-6, "max change under cutoff doubling %.3g" % worst


def check_sigma_physical():
    model = _fig_model()
    bias = smooth_step_bias(dV_R=-2.0, rise_fs=0.01)
    rec = run(model, bias, InducedFockRule(), 2.0, dt=0.02)
    drift = rec.meta["max_herm_drift"]
    resid = rec.continuity_residual()
    ok = drift < 1e-12 and resid < 1e-6
    return ok, "herm drift %.3g, continuity %.3g per fs" % (drift, resid)


def check_cso():
    model = _fig_model(eps_d=0.123)
    worst_h = 0.0
    for lead in ("L", "R"):
        ct = causality_transforms(model, lead)
        worst_h = max(worst_h, ct.hermiticity_defect())
    sum_model = _fig_model(eps_d=0.123)
    gp = gm = 0.0
    for lead in ("L", "R"):
        ct = causality_transforms(sum_model, lead, eps_min=-1000.0)
        defect = max_abs(ct.gamma_plus + ct.gamma_minus
                         - sum_model.lead_lambda(lead))
        gp = max(gp, defect)
    state = init_sim(sum_model, zero_bias(), InducedFockRule(kind="none"),
                     dissipator_kind="cso")
    for _ in range(50):
        state = step_rk4(state, 0.02)
    herm_defect = state.herm_drift
    ok = worst_h < 1e-10 and gp < 1e-3 and herm_defect < 1e-12
    return ok, ("transform defect %.3g, sum rule %.3g, propagation drift %.3g"
                % (worst_h, gp, herm_defect))


def check_rk4_order():
    model = _fig_model()
    bias = smooth_step_bias(dV_R=-2.0, rise_fs=0.01)
    rule = InducedFockRule()

    def sigma_at(dt):
        state = init_sim(model, bias, rule)
        n = int(round(2.0 / dt))
        for _ in range(n):
            state = step_rk4(state, dt)
        return state.sigma

    ref = sigma_at(0.0025)
    e1 = max_abs(sigma_at(0.02) - ref)
    e2 = max_abs(sigma_at(0.01) - ref)
    ratio = e1 / e2
    return 12.0 <= ratio <= 20.0, "error ratio %.3f" % ratio


CHECKS = (
    ("ground-state-arctan", check_ground_state_arctan),
    ("zero-bias-stationary", check_zero_bias_stationary),
    ("k-hermitian", check_k_hermitian),
    ("k-cutoff-invariant", check_k_cutoff_invariant),
    ("sigma-physical", check_sigma_physical),
    ("cso-suite", check_cso),
    ("rk4-order", check_rk4_order),
)


def run_all(model=None, eps_min=None, emit=print):
    """Run every check; returns True when all pass.

    model and eps_min are accepted for CLI symmetry; the checks use the
    benchmark model regardless so their thresholds stay meaningful.
    """
    del model, eps_min
    all_ok = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:
            ok, detail = False, "raised %s: %s" % (type(exc).__name__, exc)
        all_ok = all_ok and ok
        emit("%s %s: %s" % ("PASS" if ok else "FAIL", name, detail))
    return all_ok
