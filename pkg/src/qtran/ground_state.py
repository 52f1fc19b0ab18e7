"""Equilibrium initial condition and static Green's functions.

The initial density matrix is the zero-temperature spectral integral

    sigma(0) = (2/pi) * integral_( -inf, mu0 ] G^r(eps) Lambda G^a(eps) d eps

with G^r(eps) = (eps - h0 + i Lambda)^-1. Occupations are spin-summed, so
eigenvalues of sigma(0) lie in [0, 2] and a symmetric single site at
resonance holds exactly one electron per spin, sigma = 1.
"""

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureNotConverged, SingularResolvent
from .linalg import eig, herm, max_abs
from .model import dagger


@dataclass
class GroundState:
    sigma0: np.ndarray
    mu0: float


def retarded_gf0(model, eps):
    """Static retarded Green's function (eps - h0 + i*Lambda)^-1."""
    n = model.n_orb
    a = eps * np.eye(n) - model.h0 + 1j * model.lambda_total
    try:
        g = np.linalg.solve(a, np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise SingularResolvent(str(exc)) from None
    resid = max_abs(a @ g - np.eye(n))
    if not np.isfinite(resid) or resid > 1e-10:
        raise SingularResolvent(
            "resolvent residual %.3g at eps = %g" % (resid, eps))
    return g


def _spectral_product_nodes(dec, m_mixed, eps_nodes):
    """Integrand G^r Lambda G^a at many energies, via one eigendecomposition.

    With A = h0 - i*Lambda = S diag(lam) S^-1 and M = S^-1 Lambda S^-dag,
    G^r Lambda G^a (eps) = S [ M_ij / ((eps-lam_i)(eps-conj(lam_j))) ] S^dag.
    Returns an array of matrices, one per node.
    """
    lam = dec.values
    s = dec.right_vectors
    eps = np.asarray(eps_nodes)[:, None, None]
    denom = (eps - lam[None, :, None]) * (eps - np.conj(lam)[None, None, :])
    core = m_mixed[None, :, :] / denom
    return np.einsum("ab,nbc,dc->nad", s, core, np.conj(s), optimize=True)


def _gauss_panels(panels, n_per_panel):
    """Gauss-Legendre nodes and weights on a list of (lo, hi) panels."""
    x, w = np.polynomial.legendre.leggauss(n_per_panel)
    nodes = []
    weights = []
    for lo, hi in panels:
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes.append(mid + half * x)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _panel_layout(model, eps_min):
    """Panels on [eps_min, mu0], clustered where the integrand peaks."""
    mu0 = model.mu0
    lam_tot = herm(model.lambda_total)
    w = np.linalg.eigvalsh(lam_tot)
    lam_scale = float(np.max(w)) if np.max(w) > 0 else 1.0
    positive = w[w > 1e-12]
    lam_min = float(np.min(positive)) if positive.size else lam_scale
    h_real = np.linalg.eigvalsh(herm(model.h0))
    lo_fine = min(float(np.min(h_real)) - 20.0 * lam_scale, mu0 - 20.0 * lam_scale)
    lo_fine = max(lo_fine, eps_min)
    fine_width = max(lam_min / 4.0, 1e-6)
    edges = [mu0]
    e = mu0
    while e > lo_fine:
        e = max(e - fine_width, lo_fine)
        edges.append(e)
    # geometric coarsening from the fine region down to the cutoff
    width = max(fine_width, lam_scale)
    while e > eps_min:
        width = min(width * 2.0, abs(e) + 1.0)
        e = max(e - width, eps_min)
        edges.append(e)
    edges = np.array(edges[::-1])
    return list(zip(edges[:-1], edges[1:]))


def _quad_main(dec, m_mixed, panels, n_per_panel):
    nodes, weights = _gauss_panels(panels, n_per_panel)
    vals = _spectral_product_nodes(dec, m_mixed, nodes)
    return np.einsum("n,nab->ab", weights, vals)


def _quad_tail(dec, m_mixed, eps_min, n_per_panel):
    """Tail integral over (-inf, eps_min] via the substitution u = 1/eps.

    The transformed integrand f(1/u)/u^2 is analytic at u -> 0^- because the
    spectral product decays like eps^-2.
    """
    x, w = np.polynomial.legendre.leggauss(n_per_panel)
    lo, hi = 1.0 / eps_min, 0.0
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    u = mid + half * x
    eps = 1.0 / u
    vals = _spectral_product_nodes(dec, m_mixed, eps)
    vals = vals / (u ** 2)[:, None, None]
    return np.einsum("n,nab->ab", half * w, vals)


def ground_state_density(model, eps_min=-1000.0, n_quad=16, tol=1e-9,
                         max_doublings=7):
    """Equilibrium density matrix by clustered Gauss-Legendre quadrature.

    Integrates [eps_min, mu0] on panels refined near the spectrum plus the
    analytic tail below eps_min (substitution u = 1/eps), doubling the nodes
    per panel until the result moves by less than tol.
    """
    lam_tot = model.lambda_total
    if max_abs(lam_tot) == 0.0:
        raise ValueError("ground state needs a nonzero total line-width")
    a = model.h0 - 1j * lam_tot
    dec = eig(a)
    s_inv = dec.inverse_vectors
    m_mixed = s_inv @ lam_tot @ dagger(s_inv)
    panels = _panel_layout(model, eps_min)

    n = int(n_quad)
    prev = None
    for _ in range(max_doublings + 1):
        total = _quad_main(dec, m_mixed, panels, n) \
            + _quad_tail(dec, m_mixed, eps_min, max(n, 32))
        sigma = (2.0 / np.pi) * herm(total)
        if prev is not None and max_abs(sigma - prev) <= tol:
            return GroundState(sigma0=sigma, mu0=model.mu0)
        prev = sigma
        n *= 2
    raise QuadratureNotConverged(
        "ground-state quadrature still moving by more than %g after %d doublings"
        % (tol, max_doublings))


def ground_state_density_closed(model):
    """Closed-form equilibrium density matrix in the eigenbasis of h0 - i*Lambda.

    Independent of the quadrature route: the energy integral of
    1/((eps-lam_i)(eps-conj(lam_j))) over (-inf, mu0] evaluates to
    [Log(mu0-lam_i) - Log(mu0-conj(lam_j)) - 2 pi i] / (lam_i - conj(lam_j)),
    where the -2 pi i collects the branch reach at eps -> -inf.
    """
    lam_tot = model.lambda_total
    a = model.h0 - 1j * lam_tot
    dec = eig(a)
    lam = dec.values
    s = dec.right_vectors
    s_inv = dec.inverse_vectors
    m_mixed = s_inv @ lam_tot @ dagger(s_inv)
    li = lam[:, None]
    lj = np.conj(lam)[None, :]
    f = (np.log(model.mu0 - li) - np.log(model.mu0 - lj) - 2j * np.pi) / (li - lj)
    sigma = (2.0 / np.pi) * (s @ (f * m_mixed) @ dagger(s))
    return GroundState(sigma0=herm(sigma), mu0=model.mu0)


def occupation_single_site(eps_d, lam_total, mu0):
    """Spin-summed occupation of one broadened level, 1 + (2/pi) atan((mu0-eps_d)/Lambda)."""
    return 1.0 + (2.0 / np.pi) * np.arctan((mu0 - eps_d) / lam_total)
