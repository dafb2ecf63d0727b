"""Closed-form slow-light soliton on the switched control background.

The solution is parameterised by piecewise spectral data ``(w, z)`` that depend
on tau only. Everything in zeta enters through the linear phase
``(nu0 zeta / 2) / (lambda - delta)``. On each region:

* D0 (tau <= 0): constant control, ``w = w0``, ``z = i/2 omega0 w0 tau``
* D1 (0 < tau <= t1): exponential switch-off, Bessel-function data
* D2 (t1 < tau <= T): control off, ``w = 0`` and ``z`` frozen at the D1 limit
* D3 (tau > T): control back on, tangent form relaxing to ``w0``
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import expit

from .config import Config, Region, background_field, region_array
from .grid import DEFAULT_MAX_BYTES, GridSolution, GridSpec, check_memory
from .special import bessel_j, complex_pow_principal, gamma_reciprocal, principal_log

__all__ = [
    "DegenerateParameterError",
    "PoleError",
    "BranchedRoot",
    "SpectralData",
    "FieldState",
    "AtomState",
    "AnalyticSolution",
    "branched_root",
    "solution_for",
    "spectral_constant_C",
    "spectral_w",
    "spectral_z",
    "soliton_phases",
    "field_envelopes",
    "atomic_state",
    "density_matrix",
    "grid_evaluate",
]

# dense-sampling step used to follow log branches in tau
_UNWRAP_STEP = 0.005


class DegenerateParameterError(ArithmeticError):
    pass


class PoleError(ArithmeticError):
    def __init__(self, tau, message="pole of the spectral function w"):
        super().__init__(f"{message} at tau={tau}")
        self.tau = tau


@dataclass(frozen=True)
class BranchedRoot:
    s: complex


@dataclass(frozen=True)
class SpectralData:
    w: complex
    z: complex
    region: Region
    tau: float


@dataclass(frozen=True)
class FieldState:
    omega_a: complex
    omega_b: complex


@dataclass(frozen=True)
class AtomState:
    c1: complex
    c2: complex
    c3: complex

    def vector(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3])


def branched_root(lam: complex, omega0: float) -> BranchedRoot:
    """sqrt(lambda**2 + omega0**2) on the branch with Im(s) Im(lambda) > 0.

    This is the branch continuous with s = lambda at omega0 = 0. When the root is
    real (purely imaginary lambda with omega0 >= |lambda|) the sign rule cannot
    decide and the root with Re(s) >= 0 is returned.
    """
    lam = complex(lam)
    if lam.imag == 0:
        raise ValueError("Im(lambda) must be nonzero")
    s = complex(np.sqrt(lam * lam + omega0 * omega0 + 0j))
    if s.imag * lam.imag < 0 or (s.imag == 0 and s.real < 0):
        s = -s
    return BranchedRoot(s)


def _sech(phi):
    a = np.exp(-np.abs(phi))
    return 2.0 * a / (1.0 + a * a)


class AnalyticSolution:
    """Evaluator for one validated configuration.

    All methods broadcast over array ``zeta`` and ``tau``. The optional
    ``limit`` argument (``"right"``) evaluates the later region's formula at a
    node sitting exactly on a region boundary, giving the right-hand limit of a
    discontinuous quantity.
    """

    def __init__(self, config: Config):
        self.config = config
        med, sch, sol = config.medium, config.schedule, config.soliton
        self.lam = complex(sol.lam)
        self.delta = float(med.delta)
        self.nu0 = float(med.nu0)
        self.omega0 = float(sch.omega0)
        self.alpha = float(sch.alpha)
        self.t1 = float(sch.t1)
        self.t_revive = float(sch.t_revive)

        lam, om, al = self.lam, self.omega0, self.alpha
        self.s = branched_root(lam, om).s
        self.w0 = om / (lam + self.s)
        self.gamma = (al + 1j * lam) / (2 * al)
        self.x0 = -om / (2 * al)
        if abs(self.gamma - round(self.gamma.real)) < 1e-12:
            raise DegenerateParameterError(f"integer Bessel index {self.gamma}")

        g = self.gamma
        jg, jmg, jgm1, j1mg = (bessel_j(nu, self.x0) for nu in (g, -g, g - 1, 1 - g))
        den = j1mg + 1j * self.w0 * jmg
        if den == 0:
            raise DegenerateParameterError("vanishing denominator in C1")
        self.c1 = (-1j * self.w0 * jg + jgm1) / den
        self.den0 = self.c1 * jmg + jg
        if self.den0 == 0:
            raise DegenerateParameterError("vanishing D1 normalisation")
        stored = self.c1 * complex_pow_principal(-om / (4 * al), -g) * gamma_reciprocal(1 - g)
        if stored == 0:
            raise DegenerateParameterError("log of zero in the D2 phase constant")
        self.z2 = complex(principal_log(stored / self.den0))
        self.c3 = (om**2 + 2 * lam * (lam - self.s)) / om**2
        if self.c3 == -1:
            raise DegenerateParameterError("C3 = -1 makes the D3 phase singular")
        # zeta-coefficient of phi + i*theta (up to the sign on theta)
        self.kzeta = 0.5 * self.nu0 / (lam - self.delta)
        self.mod_ld = abs(lam - self.delta)

    # -- spectral data ---------------------------------------------------
    def constant_C(self, region: Region) -> complex:
        return {Region.D0: 0j, Region.D1: self.c1, Region.D2: self.c1, Region.D3: self.c3}[Region(region)]

    def regions(self, tau, limit: str | None = None) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        reg = region_array(tau, self.config.schedule)
        if limit == "right":
            on_edge = np.isin(tau, self.config.schedule.boundaries)
            reg = np.where(on_edge, np.minimum(reg + 1, 3), reg)
        elif limit not in (None, "left"):
            raise ValueError(f"unknown limit {limit!r}")
        return reg

    def background(self, tau, limit: str | None = None) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        reg = self.regions(tau, limit)
        out = np.full(tau.shape, self.omega0)
        out[reg == 1] = self.omega0 * np.exp(-self.alpha * tau[reg == 1])
        out[reg == 2] = 0.0
        return out

    def _d1_parts(self, tau):
        x = -self.omega0 * np.exp(-self.alpha * tau) / (2 * self.alpha)
        g = self.gamma
        p, q = bessel_j(-g, x), bessel_j(g, x)
        a, b = bessel_j(1 - g, x), bessel_j(g - 1, x)
        den = self.c1 * p + q
        return a, b, den

    def _d1_w(self, tau):
        a, b, den = self._d1_parts(tau)
        if np.any(den == 0):
            raise PoleError(tau[den == 0][0])
        return 1j * (self.c1 * a - b) / den

    def _d1_log(self, tau):
        return principal_log(self._d1_parts(tau)[2] / self.den0)

    def _d3_w(self, u):
        t = np.tan(0.5 * self.s * u)
        den = self.lam * t - 1j * self.s
        if np.any(den == 0):
            raise PoleError(u[den == 0][0] + self.t_revive)
        return self.omega0 * t / den

    def _d3_log(self, u):
        # the bracket with its dominant exponential factored out, so the
        # remaining log tends to a constant as u grows
        s, lam, c = self.s, self.lam, self.c3
        if s.imag <= 0:
            return -0.5j * (lam - s) * u + principal_log(1 + c * np.exp(-1j * s * u))
        return -0.5j * (lam + s) * u + principal_log(c + np.exp(1j * s * u))

    def _d3_settle(self) -> float:
        # beyond this u the decaying exponential is < half the constant term
        if self.s.imag == 0:
            return np.inf
        scale = 1.0 if self.s.imag < 0 else abs(self.c3)
        c = abs(self.c3) if self.s.imag < 0 else 1.0
        return max(0.0, np.log(2 * c / scale) / abs(self.s.imag)) + 1.0

    def _continuous(self, fn, u, u_settle=np.inf):
        """Unwrapped ``fn(u)`` for u >= 0, anchored at the principal value at u = 0.

        ``fn`` returns a principal log; its imaginary part is followed along a
        dense grid from 0 up to ``min(max(u), u_settle)``; past ``u_settle`` it is
        assumed branch-free and carried with the offset reached there.
        """
        u = np.asarray(u, dtype=float)
        if u.size == 0:
            return np.zeros(0, dtype=complex)
        top = min(float(u.max()), u_settle)
        n = max(2, int(np.ceil(top / _UNWRAP_STEP)) + 1)
        dense = np.linspace(0.0, top, n)
        inside = u <= top
        grid = np.union1d(dense, u[inside])
        vals = fn(grid)
        imag = np.unwrap(vals.imag)
        out = np.empty(u.shape, dtype=complex)
        idx = np.searchsorted(grid, u[inside])
        out[inside] = vals.real[idx] + 1j * imag[idx]
        if (~inside).any():
            offset = imag[-1] - vals.imag[-1]
            far = fn(u[~inside])
            out[~inside] = far + 1j * offset
        return out

    def spectral(self, tau, limit: str | None = None):
        """Return ``(w, z, region)`` arrays for ``tau``."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        reg = self.regions(tau, limit)
        w = np.zeros(tau.shape, dtype=complex)
        z = np.zeros(tau.shape, dtype=complex)

        m = reg == 0
        w[m] = self.w0
        z[m] = 0.5j * self.omega0 * self.w0 * tau[m]

        m = reg == 1
        if m.any():
            w[m] = self._d1_w(tau[m])
            z[m] = -self.alpha * self.gamma * tau[m] + self._continuous(self._d1_log, tau[m])

        m = reg == 2
        z[m] = self.z2

        m = reg == 3
        if m.any():
            u = tau[m] - self.t_revive
            w[m] = self._d3_w(u)
            anchor = -principal_log(1 + self.c3) if self.s.imag <= 0 else -principal_log(self.c3 + 1)
            z[m] = self._continuous(self._d3_log, u, self._d3_settle()) + anchor + self.z2
        return w, z, reg

    # -- physical fields -------------------------------------------------
    def phases(self, zeta, tau, limit: str | None = None):
        """Soliton phases (phi_s, theta_s) broadcast over zeta and tau."""
        w, z, _ = self.spectral(np.ravel(tau), limit)
        return self._phases(np.asarray(zeta, dtype=float), np.reshape(w, np.shape(tau)), np.reshape(z, np.shape(tau)))

    def _phases(self, zeta, w, z):
        sol = self.config.soliton
        phi = sol.phi0 + self.kzeta.imag * zeta + z.real + 0.5 * np.log1p(np.abs(w) ** 2)
        theta = sol.theta0 - self.kzeta.real * zeta + z.imag
        return phi, theta

    def evaluate(self, zeta, tau, limit: str | None = None):
        """Fields and amplitudes on the outer product grid ``tau x zeta``.

        Returns ``(omega_a, omega_b, psi)`` with shapes ``(nt, nz)``, ``(nt, nz)``
        and ``(nt, nz, 3)``.
        """
        zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        w, z, _ = self.spectral(tau, limit)
        return self._assemble(zeta[None, :], tau, w[:, None], z[:, None], limit)

    def evaluate_points(self, zeta, tau, limit: str | None = None):
        """Like :meth:`evaluate` but for matching arrays of points."""
        zeta, tau = np.broadcast_arrays(np.asarray(zeta, dtype=float), np.asarray(tau, dtype=float))
        shape = tau.shape
        w, z, _ = self.spectral(tau.ravel(), limit)
        oa, ob, psi = self._assemble(zeta.ravel(), tau.ravel(), w, z, limit)
        return oa.reshape(shape), ob.reshape(shape), psi.reshape(shape + (3,))

    def _assemble(self, zeta, tau, w, z, limit):
        lam = self.lam
        phi, theta = self._phases(zeta, w, z)
        sech = _sech(phi)
        norm = 1.0 + np.abs(w) ** 2
        phase = np.exp(1j * theta)
        omega_a = (lam.conjugate() - lam) * w * phase * sech / np.sqrt(norm)
        bg = self.background(tau, limit).reshape(np.shape(tau) + (1,) * (np.ndim(w) - np.ndim(tau)))
        omega_b = (lam - lam.conjugate()) * w / norm * 2.0 * expit(2.0 * phi) - bg
        L = self.mod_ld
        c1 = (lam.real - self.delta - 1j * lam.imag * np.tanh(phi)) / L
        c2 = (lam.conjugate() - lam) * phase * sech / (2 * L * np.sqrt(norm))
        c3 = -omega_a / (2 * L)
        c1, c2, c3 = np.broadcast_arrays(c1, c2, c3)
        return omega_a, omega_b, np.stack([c1, c2, c3], axis=-1)

    # -- derived quantities ----------------------------------------------
    def level_set_slope(self) -> float:
        """d zeta / d tau along phi_s = const on D0."""
        return -(0.5j * self.omega0 * self.w0).real / self.kzeta.imag

    def widths(self) -> tuple[float, float]:
        """e-folding lengths of the sech envelope in zeta and in tau on D0."""
        return 1.0 / abs(self.kzeta.imag), 1.0 / abs((0.5j * self.omega0 * self.w0).real)

    def phi0_for_entry(self, tau_entry: float) -> float:
        """Initial phase placing the soliton centre at zeta = 0 when tau = tau_entry (on D0)."""
        z = 0.5j * self.omega0 * self.w0 * tau_entry
        return float(-(z.real + 0.5 * np.log1p(abs(self.w0) ** 2)))


@lru_cache(maxsize=32)
def solution_for(config: Config) -> AnalyticSolution:
    return AnalyticSolution(config)


# --- functional interface -------------------------------------------------


def spectral_constant_C(region: Region, config: Config) -> complex:
    return solution_for(config).constant_C(region)


def _spectral_point(tau: float, config: Config) -> SpectralData:
    w, z, reg = solution_for(config).spectral(tau)
    return SpectralData(complex(w[0]), complex(z[0]), Region(int(reg[0])), float(tau))


def spectral_w(tau: float, config: Config) -> complex:
    return _spectral_point(tau, config).w


def spectral_z(tau: float, config: Config) -> complex:
    return _spectral_point(tau, config).z


def soliton_phases(zeta: float, tau: float, config: Config) -> tuple[float, float]:
    phi, theta = solution_for(config).phases(zeta, tau)
    return float(phi), float(theta)


def field_envelopes(zeta: float, tau: float, config: Config) -> FieldState:
    oa, ob, _ = solution_for(config).evaluate_points(zeta, tau)
    return FieldState(complex(oa), complex(ob))


def atomic_state(zeta: float, tau: float, config: Config) -> AtomState:
    _, _, psi = solution_for(config).evaluate_points(zeta, tau)
    return AtomState(*(complex(c) for c in psi))


def density_matrix(zeta: float, tau: float, config: Config) -> np.ndarray:
    psi = atomic_state(zeta, tau, config).vector()
    return np.outer(psi, psi.conj())


def grid_evaluate(
    spec: GridSpec, config: Config, with_rho: bool = False, max_bytes: int = DEFAULT_MAX_BYTES
) -> GridSolution:
    """Sample the exact solution on a uniform (tau, zeta) grid.

    Grid nodes lying on region boundaries take the value of the earlier region.
    """
    tau, zeta = spec.axes(config)
    check_memory(tau.size, zeta.size, with_rho, max_bytes)
    oa, ob, psi = solution_for(config).evaluate(zeta, tau)
    pops = np.abs(psi) ** 2
    rho = np.einsum("tzi,tzj->tzij", psi, psi.conj()) if with_rho else None
    return GridSolution(tau, zeta, oa, ob, pops, config, "analytic", rho)


def background_profile(tau, config: Config):
    return background_field(tau, config.schedule)
