"""Physical constants and unit conversions.

Energies are eV, times are fs throughout the package. Currents are computed
in natural units of e*eV/hbar (the trace of the dissipation term) and
converted to microamperes for output.
"""

# Reduced Planck constant in eV*fs.
HBAR_EV_FS = 0.658211951

# Elementary charge in coulomb (CODATA 2018, exact).
E_CHARGE_C = 1.602176634e-19

# One natural current unit (e*eV/hbar) expressed in microamperes:
# e [C] / (hbar [eV*s]) * 1e6. Numerically about 243.4135 uA.
MICROAMP_PER_NATURAL = E_CHARGE_C / (HBAR_EV_FS * 1e-15) * 1e6
