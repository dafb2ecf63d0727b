"""Complex reciprocal gamma, principal powers and Bessel J of complex order.

Bessel J is summed from its power series with the (x/2)**nu prefactor taken on
the principal branch, so for negative real arguments every caller sees the same
branch. The series is only meant for the small arguments met here (|x| <= 5).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "SpecialFunctionError",
    "DomainError",
    "AccuracyError",
    "principal_log",
    "complex_pow_principal",
    "gamma_reciprocal",
    "bessel_j",
]

# Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)
_SQRT_2PI = np.sqrt(2.0 * np.pi)

_SERIES_RTOL = 1e-17
_SERIES_MAX_TERMS = 200
_POLE_GAP = 1e-8


class SpecialFunctionError(ArithmeticError):
    pass


class DomainError(SpecialFunctionError):
    pass


class AccuracyError(SpecialFunctionError):
    pass


def principal_log(z):
    """Principal logarithm with Im in (-pi, pi]; a signed zero imaginary part is ignored."""
    z = np.asarray(z, dtype=complex)
    # -0.0 + 0.0 == +0.0, so negative reals land on +pi
    return np.log(np.abs(z)) + 1j * np.arctan2(z.imag + 0.0, z.real)


def complex_pow_principal(base, exponent):
    """``exp(exponent * Log(base))`` with the principal logarithm.

    ``0**e`` is 0 for Re(e) > 0; any other power of zero raises DomainError.
    """
    scalar = np.ndim(base) == 0 and np.ndim(exponent) == 0
    base, exponent = np.broadcast_arrays(np.asarray(base, dtype=complex), np.asarray(exponent, dtype=complex))
    zero = base == 0
    if np.any(zero & (exponent.real <= 0)):
        raise DomainError("0 raised to an exponent with Re <= 0")
    safe = np.where(zero, 1.0, base)
    out = np.where(zero, 0.0, np.exp(exponent * principal_log(safe)))
    return complex(out) if scalar else out


def _rgamma_right(z):
    # 1/Gamma(z) for Re(z) >= 0.5 via Lanczos
    zm = z - 1.0
    acc = np.full(zm.shape, _LANCZOS_COEF[0], dtype=complex)
    for k in range(1, len(_LANCZOS_COEF)):
        acc = acc + _LANCZOS_COEF[k] / (zm + k)
    t = zm + _LANCZOS_G + 0.5
    log_gamma = np.log(_SQRT_2PI) + (zm + 0.5) * principal_log(t) - t + principal_log(acc)
    return np.exp(-log_gamma)


def _sin_pi(z):
    # sin(pi z) with the real part reduced first, accurate near integers
    n = np.round(z.real)
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    return sign * np.sin(np.pi * (z - n))


def gamma_reciprocal(z):
    """Entire function 1/Gamma(z); exactly zero at 0, -1, -2, ...

    Lanczos sum on Re(z) >= 1/2, reflection ``1/Gamma(z) = Gamma(1-z) sin(pi z)/pi``
    on the left half-plane.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty_like(z)
    # exact at small positive integers
    whole = (z.imag == 0) & (z.real == np.round(z.real)) & (z.real >= 1) & (z.real <= 30)
    right = (z.real >= 0.5) & ~whole
    out[whole] = [1.0 / math.factorial(int(n) - 1) for n in z.real[whole]]
    if right.any():
        out[right] = _rgamma_right(z[right])
    left = (z.real < 0.5) & ~whole
    if left.any():
        zl = z[left]
        out[left] = _sin_pi(zl) / (np.pi * _rgamma_right(1.0 - zl))
        pole = (zl.imag == 0) & (zl.real == np.round(zl.real))
        tmp = out[left]
        tmp[pole] = 0.0
        out[left] = tmp
    return complex(out[0]) if scalar else out


def bessel_j(nu: complex, x):
    """Bessel function of the first kind, J_nu(x), for complex order and argument.

    ``J_nu(x) = (x/2)**nu * sum_k (-x**2/4)**k / (k! Gamma(nu+k+1))``

    Terms are generated by the ratio recurrence; the sum stops once the
    terms are decreasing and below 1e-17 of the partial sum.

    Raises
    ------
    DomainError
        For x = 0 with Re(nu) <= 0 and nu != 0.
    AccuracyError
        If the series has not converged after 200 terms.
    """
    nu = complex(nu)
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    at_zero = x == 0
    if at_zero.any() and nu != 0 and nu.real <= 0:
        raise DomainError(f"J_nu(0) undefined for nu={nu}")

    q = -0.25 * x * x
    rg = gamma_reciprocal(nu + 1.0)
    term = np.full(x.shape, rg, dtype=complex)
    total = term.copy()
    done = np.zeros(x.shape, dtype=bool)
    k_past_poles = max(0.0, -nu.real)
    for k in range(1, _SERIES_MAX_TERMS):
        den = nu + k
        if abs(den) < _POLE_GAP:
            # at or next to a pole of Gamma the ratio is 0/0; restart from the closed form
            term = q**k / _factorial(k) * gamma_reciprocal(nu + k + 1.0)
        else:
            term = term * q / (k * den)
        total = total + np.where(done, 0.0, term)
        if k > k_past_poles:
            decreasing = np.abs(q) < k * abs(den + 1)
            small = np.abs(term) <= _SERIES_RTOL * np.abs(total)
            done |= decreasing & small
            if done.all():
                break
    else:
        raise AccuracyError(f"Bessel series for nu={nu} did not converge in {_SERIES_MAX_TERMS} terms")

    if nu == 0:
        prefactor = np.ones(x.shape, dtype=complex)
    else:
        prefactor = complex_pow_principal(np.where(at_zero, 1.0, 0.5 * x), nu)
        prefactor = np.where(at_zero, 0.0, prefactor)
    out = prefactor * total
    return complex(out[0]) if scalar else out


def _factorial(k: int) -> float:
    return float(math.factorial(k))
