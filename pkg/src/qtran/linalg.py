"""Dense complex linear algebra and the scalar integral kernels.

All energy integrals of resolvents are evaluated by diagonalizing the matrix
once and applying a scalar kernel to each eigenvalue. The two kernels are

    log kernel:  integral over [eps_min, mu0] of (eps - z)^-1
                 = Log(mu0 - z) - Log(eps_min - z)

    oscillatory kernel:  integral over (-inf, mu0] of e^{i eps s} (eps - z)^-1
                 = -e^{i z s} E1(-i s (mu0 - z))      (Im z < 0, s > 0)

with E1 the exponential integral of complex argument, evaluated by a power
series for small argument and a continued fraction for large argument. This
module is pure math: no hbar, no units. Callers pass the phase rate s, which
is time divided by hbar when dimensional.
"""

import numpy as np
import scipy.linalg

from .errors import KernelNonConvergent, NonDiagonalizable, SpectrumOnAxis

EULER_GAMMA = 0.5772156649015329

# |zeta| at which the E1 evaluation switches from power series to continued
# fraction. Both converge comfortably at 4.
E1_SWITCH = 4.0
E1_TOL = 1e-12
E1_MAX_TERMS = 500

# Eigenvalues must lie strictly below the real axis for the contour kernels.
AXIS_TOL = -1e-14

# numpy renamed trapz; support both spellings.
_trapz = getattr(np, "trapezoid", np.trapz)


def as_square_array(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix, got shape %r" % (a.shape,))
    return a


def herm(a):
    """Hermitian part (A + A^dag)/2."""
    a = np.asarray(a)
    return 0.5 * (a + a.conj().T)


def dagger(a):
    return np.asarray(a).conj().T


def max_abs(a):
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


class EigenDecomposition:
    """Right-eigenvector decomposition A = S diag(values) S^-1."""

    def __init__(self, values, right_vectors, inverse_vectors):
        self.values = values
        self.right_vectors = right_vectors
        self.inverse_vectors = inverse_vectors

    @property
    def dim(self):
        return len(self.values)

    def apply_scalar(self, f_values):
        """Assemble S diag(f_values) S^-1 for per-eigenvalue kernel values."""
        s = self.right_vectors
        return (s * np.asarray(f_values)[np.newaxis, :]) @ self.inverse_vectors


def eig(a, cond_limit=1e12):
    """Diagonalize a dense complex matrix.

    Raises NonDiagonalizable when the eigenvector matrix condition number
    exceeds cond_limit or the reconstruction residual betrays a defective
    matrix.
    """
    a = as_square_array(a)
    values, vecs = np.linalg.eig(a)
    cond = np.linalg.cond(vecs)
    if not np.isfinite(cond) or cond > cond_limit:
        raise NonDiagonalizable(
            "eigenvector matrix condition number %.3g exceeds %.3g" % (cond, cond_limit))
    inv = np.linalg.inv(vecs)
    dec = EigenDecomposition(values, vecs, inv)
    scale = max(max_abs(a), 1e-300)
    resid = max_abs(dec.apply_scalar(values) - a) / scale
    if resid > 1e-10:
        raise NonDiagonalizable(
            "eigendecomposition reconstruction residual %.3g" % resid)
    return dec


def expm(a):
    """Matrix exponential e^A (scipy Pade, standard and robust)."""
    return scipy.linalg.expm(as_square_array(a))


# ---------------------------------------------------------------------------
# scalar exponential-integral kernels
# ---------------------------------------------------------------------------

def _e1_series(z):
    """Power series E1(z) = -gamma - log z + sum (-1)^(k+1) z^k / (k k!),
    elementwise on an array with |z| <= E1_SWITCH, z != 0."""
    z = np.asarray(z, dtype=complex)
    total = np.zeros_like(z)
    term = np.array(z, dtype=complex)  # k = 1 term: z / (1 * 1!)
    total += term
    k = 1
    while True:
        k += 1
        if k > E1_MAX_TERMS:
            raise KernelNonConvergent(
                "E1 power series exceeded %d terms" % E1_MAX_TERMS)
        # u_k = (-1)^(k+1) z^k / (k k!): u_{k+1} = u_k * (-z) * k / (k+1)^2
        term = term * (-z) * ((k - 1) / (k * k))
        total += term
        if np.all(np.abs(term) <= E1_TOL * np.maximum(np.abs(total), 1e-300)):
            break
    return -EULER_GAMMA - np.log(z) + total


def _e1_cf_scaled(z):
    """Scaled exponential integral e^z E1(z) by modified Lentz continued
    fraction, elementwise on an array with |z| >= E1_SWITCH, Re z > -inf.

    E1(z) = e^{-z} / (z + 1 - 1/(z + 3 - 4/(z + 5 - 9/(z + 7 - ...))))
    """
    z = np.asarray(z, dtype=complex)
    tiny = 1e-300
    b = z + 1.0
    c = np.full_like(z, 1.0 / tiny)
    d = 1.0 / np.where(b == 0, tiny, b)
    f = np.array(d)
    j = 0
    while True:
        j += 1
        if j > E1_MAX_TERMS:
            raise KernelNonConvergent(
                "E1 continued fraction exceeded %d iterations" % E1_MAX_TERMS)
        aj = -(j * j)
        b = b + 2.0
        d = b + aj * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + aj / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = c * d
        f = f * delta
        if np.all(np.abs(delta - 1.0) <= E1_TOL):
            break
    return f


def e1_scaled(z):
    """e^z E1(z) for complex z with Re z > 0 (or |arg z| < pi away from the
    negative real axis), elementwise."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty_like(z)
    small = np.abs(z) <= E1_SWITCH
    if np.any(small):
        zs = z[small]
        out[small] = np.exp(zs) * _e1_series(zs)
    if np.any(~small):
        out[~small] = _e1_cf_scaled(z[~small])
    return out


def e1(z):
    """Exponential integral E1(z) of complex argument, principal branch."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty_like(z)
    small = np.abs(z) <= E1_SWITCH
    if np.any(small):
        out[small] = _e1_series(z[small])
    if np.any(~small):
        zl = z[~small]
        out[~small] = np.exp(-zl) * _e1_cf_scaled(zl)
    return out


def osc_kernel(z, s, x):
    """kappa(z, s, x) = integral over (-inf, x] of e^{i eps s} (eps - z)^-1.

    Requires Im z < 0 and s > 0; then zeta = -i s (x - z) has Re zeta > 0 and
    kappa = -e^{i z s} E1(zeta). Evaluated overflow-safe: the large-argument
    branch uses the scaled integral so only the unimodular phase e^{i s x}
    appears.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if s <= 0:
        raise ValueError("oscillatory kernel needs s > 0, got %r" % (s,))
    zeta = -1j * s * (x - z)
    out = np.empty_like(z)
    small = np.abs(zeta) <= E1_SWITCH
    if np.any(small):
        out[small] = -np.exp(1j * z[small] * s) * _e1_series(zeta[small])
    if np.any(~small):
        # -e^{izs} e^{-zeta} (e^zeta E1) = -e^{isx} * scaled
        out[~small] = -np.exp(1j * s * x) * _e1_cf_scaled(zeta[~small])
    return out


def log_kernel(z, mu0, eps_min):
    """Integral over [eps_min, mu0] of (eps - z)^-1, principal branch."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    return np.log(mu0 - z) - np.log(eps_min - z)


def log_kernel_renorm(z, mu0):
    """Renormalized log kernel Log(mu0 - z) - i*pi.

    Equals the eps_min -> -inf limit of log_kernel after dropping the
    divergent real constant ln|eps_min|, which is purely anti-Hermitian in
    the dissipator combination -(2i/pi)(.)Lambda + h.c. and cancels there.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    return np.log(mu0 - z) - 1j * np.pi


# ---------------------------------------------------------------------------
# matrix kernels
# ---------------------------------------------------------------------------

def _checked_eig(a):
    dec = eig(a)
    if np.any(dec.values.imag >= AXIS_TOL):
        raise SpectrumOnAxis(
            "eigenvalue imaginary part %.3g is not strictly negative"
            % float(np.max(dec.values.imag)))
    return dec


def resolvent_integral_log(a, mu0, eps_min):
    """Integral over [eps_min, mu0] of (eps - A)^-1 d eps.

    All eigenvalues of A must have strictly negative imaginary part, and
    eps_min < mu0.
    """
    a = as_square_array(a)
    if not eps_min < mu0:
        raise ValueError("eps_min must lie below mu0")
    dec = _checked_eig(a)
    return dec.apply_scalar(log_kernel(dec.values, mu0, eps_min))


def resolvent_integral_osc(a, mu0, s):
    """Integral over (-inf, mu0] of e^{i eps s} (eps - A)^-1 d eps, s > 0.

    s is the phase rate (time / hbar when dimensional).
    """
    a = as_square_array(a)
    dec = _checked_eig(a)
    return dec.apply_scalar(osc_kernel(dec.values, s, mu0))


def resolvent_integral_log_renorm(a, mu0):
    """S diag(Log(mu0 - lambda) - i pi) S^-1, the cutoff-free log kernel."""
    a = as_square_array(a)
    dec = _checked_eig(a)
    return dec.apply_scalar(log_kernel_renorm(dec.values, mu0))
