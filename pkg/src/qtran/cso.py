"""Complete-second-order lead dissipator for a static device Hamiltonian.

The half-axis time integral of the lead correlation functions,
Sigma_tilde^{<,>}(h) = integral_0^inf e^{i h t} Sigma^{<,>}(t) dt, splits per
eigenvalue w of h into a sharp-window indicator part (broadening, Gamma) and
a principal-value log part (level shift, Lambda_shift); the two are tied by
the Kramers-Kronig relation. Zero-temperature flat lead bands are windowed
symmetrically around mu0: occupied on (eps_min, mu0), unoccupied on
(mu0, 2*mu0 - eps_min).

Q_alpha = i{[Sigma_tilde^>, sigma][] + [Sigma_tilde^<, sigma_bar][]} with
[A,B][] = AB - B^dag A^dag, written here for spin-summed sigma in [0, 2]:
the commutator algebra runs on sigma/2 and the result is rescaled by 2.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum
from .linalg import dagger, herm, max_abs

EDGE_TOL = 1e-12
EDGE_SHIFT = 1e-9


@dataclass
class CausalityTransforms:
    """Broadening (gamma) and level-shift (lambda) parts per lead, all Hermitian."""

    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray

    def hermiticity_defect(self):
        return max(
            max_abs(self.gamma_plus - dagger(self.gamma_plus)),
            max_abs(self.gamma_minus - dagger(self.gamma_minus)),
            max_abs(self.lambda_plus - dagger(self.lambda_plus)),
            max_abs(self.lambda_minus - dagger(self.lambda_minus)))


def _im_h(x):
    return (x - dagger(x)) / 2j


def _re_h(x):
    return (x + dagger(x)) / 2.0


def window_kernels(w, mu0, eps_min):
    """Indicator and PV-log kernels of both windows at eigenvalues w.

    occ window (lo, mu0), unocc window (mu0, hi), hi = 2*mu0 - eps_min.
    Returns (chi_occ, l_occ, chi_unocc, l_unocc); the log kernels are
    PV integrals of 1/(w - eps) over the windows.
    """
    w = np.asarray(w, dtype=float)
    lo = eps_min
    hi = 2.0 * mu0 - eps_min
    if np.any(np.abs(w - mu0) < EDGE_TOL):
        raise DegenerateSpectrum(
            "device eigenvalue within %g of mu0: PV kernel undefined at the "
            "shared window edge" % EDGE_TOL)
    # outer edges are regularization artifacts; nudge them off any eigenvalue
    if np.any(np.abs(w - lo) < EDGE_TOL):
        lo = lo - EDGE_SHIFT
    if np.any(np.abs(w - hi) < EDGE_TOL):
        hi = hi + EDGE_SHIFT
    chi_occ = ((w > lo) & (w < mu0)).astype(float)
    chi_unocc = ((w > mu0) & (w < hi)).astype(float)
    l_occ = np.log(np.abs((w - lo) / (w - mu0)))
    l_unocc = np.log(np.abs((w - mu0) / (w - hi)))
    return chi_occ, l_occ, chi_unocc, l_unocc


def causality_transforms(model, lead, eps_min=-1000.0):
    """Gamma^(+-) and Lambda^(+-) for one lead in the device basis.

    Works in the eigenbasis of h0: Sigma_tilde^< = F^<(h) Lambda^alpha with
    F^<(w) = i*chi_occ(w) - l_occ(w)/pi, and Sigma_tilde^> = F^>(h)
    Lambda^alpha with F^>(w) = -i*chi_unocc(w) + l_unocc(w)/pi; then
    gamma_plus = Im_H(Sigma_tilde^<), lambda_plus = -Re_H(Sigma_tilde^<),
    gamma_minus = -Im_H(Sigma_tilde^>), lambda_minus = Re_H(Sigma_tilde^>).
    """
    lam_a = model.lead_lambda(lead)
    n = model.n_orb
    if max_abs(lam_a) == 0.0:
        z = np.zeros((n, n), dtype=complex)
        return CausalityTransforms(z, z.copy(), z.copy(), z.copy())
    w, v = np.linalg.eigh(herm(model.h0))
    chi_o, l_o, chi_u, l_u = window_kernels(w, model.mu0, eps_min)
    lam_tilde = dagger(v) @ lam_a @ v
    f_less = 1j * chi_o - l_o / np.pi
    f_more = -1j * chi_u + l_u / np.pi
    t_less = v @ (f_less[:, None] * lam_tilde) @ dagger(v)
    t_more = v @ (f_more[:, None] * lam_tilde) @ dagger(v)
    return CausalityTransforms(
        gamma_plus=_im_h(t_less),
        gamma_minus=-_im_h(t_more),
        lambda_plus=-_re_h(t_less),
        lambda_minus=_re_h(t_more))


def sigma_tilde_less(ct):
    """Reassemble Sigma_tilde^< = -lambda_plus + i*gamma_plus."""
    return -ct.lambda_plus + 1j * ct.gamma_plus


def sigma_tilde_more(ct):
    """Reassemble Sigma_tilde^> = lambda_minus - i*gamma_minus."""
    return ct.lambda_minus - 1j * ct.gamma_minus


def cso_q(sigma, ct):
    """Dissipation term Q for one lead, spin-summed convention.

    Q/2 = i{ (T^> s - s T^>dag) + (T^< sbar - sbar T^<dag) } with s = sigma/2
    and sbar = I - s.
    """
    n = sigma.shape[0]
    s_half = sigma / 2.0
    s_bar = np.eye(n) - s_half
    t_more = sigma_tilde_more(ct)
    t_less = sigma_tilde_less(ct)
    q_half = 1j * ((t_more @ s_half - s_half @ dagger(t_more))
                   + (t_less @ s_bar - s_bar @ dagger(t_less)))
    return 2.0 * q_half


def cso_q_expanded(sigma, ct):
    """Same Q through the four-term commutator/anticommutator expansion.

    Q/2 = i[lambda_minus, s] + {gamma_minus, s} - i[lambda_plus, sbar]
          - {gamma_plus, sbar}; kept as an independent algebraic route for
    cross-checks.
    """
    n = sigma.shape[0]
    s_half = sigma / 2.0
    s_bar = np.eye(n) - s_half

    def com(a, b):
        return a @ b - b @ a

    def acom(a, b):
        return a @ b + b @ a

    q_half = (1j * com(ct.lambda_minus, s_half)
              + acom(ct.gamma_minus, s_half)
              - 1j * com(ct.lambda_plus, s_bar)
              - acom(ct.gamma_plus, s_bar))
    return 2.0 * q_half


def effective_hamiltonian(model, eps_min=-1000.0):
    """One-shot level-shift dressing h0 + sum_alpha (lambda_minus - lambda_plus)."""
    h = np.array(model.h0, dtype=complex)
    for lead in ("L", "R"):
        ct = causality_transforms(model, lead, eps_min)
        h = h + ct.lambda_minus - ct.lambda_plus
    return herm(h)
