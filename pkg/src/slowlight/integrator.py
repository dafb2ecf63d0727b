"""Direct numerical solution of the reduced Maxwell-Bloch system.

    d/dzeta H_I = i nu0/4 [D, rho],     d/dtau rho = i [delta/2 D - H_I, rho]

with ``D = diag(1, 1, -1)`` and ``H_I = -1/2 (Om_a |3><1| + Om_b |3><2|) + h.c.``

The march is along the characteristics: zeta is the evolution variable, and
at every zeta-column the atoms are swept forward in tau with an exact 3x3
unitary built from midpoint fields. Fields are then advanced in zeta with a
Heun predictor-corrector. Field values at tau-nodes on a control-field jump are
carried two-sided (left and right limits), so no step straddles a jump.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numba
import numpy as np

from .analytic import solution_for
from .config import Config
from .grid import DEFAULT_MAX_BYTES, GridSolution, GridSpec, check_memory

__all__ = [
    "IntegrationError",
    "StepSizeError",
    "DivergenceError",
    "SchemeConfig",
    "Boundary",
    "hamiltonian_from_fields",
    "atom_step",
    "field_derivative",
    "boundary_from_analytic",
    "integrate",
    "simulate",
    "residual_norm",
    "convergence_order",
    "ConvergenceReport",
]

log = logging.getLogger(__name__)

D_MATRIX = np.diag([1.0, 1.0, -1.0]).astype(complex)
STABILITY_LIMIT = 0.5
_RESIDUAL_BLOCK = 128


class IntegrationError(ArithmeticError):
    pass


class StepSizeError(IntegrationError):
    pass


class DivergenceError(IntegrationError):
    def __init__(self, message, tau=None, zeta=None):
        super().__init__(f"{message} (tau={tau}, zeta={zeta})")
        self.tau = tau
        self.zeta = zeta


@dataclass(frozen=True)
class SchemeConfig:
    tau_step: float = 0.005
    zeta_step: float = 0.05
    correctors: int = 1

    def __post_init__(self):
        if not (self.tau_step > 0 and self.zeta_step > 0):
            raise ValueError("steps must be positive")
        if self.correctors < 1:
            raise ValueError("need at least one corrector pass")


def hamiltonian_from_fields(omega_a: complex, omega_b: complex) -> np.ndarray:
    h = np.zeros((3, 3), dtype=complex)
    h[2, 0] = -0.5 * omega_a
    h[2, 1] = -0.5 * omega_b
    h[0, 2] = np.conj(h[2, 0])
    h[1, 2] = np.conj(h[2, 1])
    return h


@numba.njit(cache=True)
def _unitary(omega_a, omega_b, h, delta):
    # exp(i h (delta/2 D - H_I)) up to a global phase. With D = 1 - 2|3><3| the
    # generator is M = -delta|3><3| - H_I: a dark vector with eigenvalue 0 plus
    # a 2x2 block [[0, r], [r, -delta]] on span{bright, |3>}.
    m = np.zeros((3, 3), dtype=np.complex128)
    m[2, 0] = 0.5 * omega_a
    m[2, 1] = 0.5 * omega_b
    m[0, 2] = 0.5 * np.conj(omega_a)
    m[1, 2] = 0.5 * np.conj(omega_b)
    m[2, 2] = -delta
    r = 0.5 * np.sqrt(abs(omega_a) ** 2 + abs(omega_b) ** 2)
    u = np.zeros((3, 3), dtype=np.complex128)
    if r == 0.0:
        u[0, 0] = 1.0
        u[1, 1] = 1.0
        u[2, 2] = np.exp(-1j * h * delta)
        return u
    d0 = omega_b / (2.0 * r)
    d1 = -omega_a / (2.0 * r)
    q = np.eye(3).astype(np.complex128)
    q[0, 0] -= d0 * np.conj(d0)
    q[0, 1] -= d0 * np.conj(d1)
    q[1, 0] -= d1 * np.conj(d0)
    q[1, 1] -= d1 * np.conj(d1)
    wf = np.sqrt(0.25 * delta * delta + r * r)
    ph = np.exp(-0.5j * h * delta)
    cs = np.cos(h * wf)
    sn = np.sin(h * wf) / wf
    for i in range(3):
        for j in range(3):
            u[i, j] = (1.0 * (i == j) - q[i, j]) + ph * (cs * q[i, j] + 1j * sn * (m[i, j] + 0.5 * delta * q[i, j]))
    return u


@numba.njit(cache=True)
def _sweep(rho0, fa_l, fa_r, fb_l, fb_r, h, delta, out):
    rho = rho0.copy()
    out[0] = rho
    for k in range(fa_l.shape[0] - 1):
        a = 0.5 * (fa_r[k] + fa_l[k + 1])
        b = 0.5 * (fb_r[k] + fb_l[k + 1])
        u = _unitary(a, b, h, delta)
        rho = u @ rho @ np.conj(u.T)
        out[k + 1] = rho


def _check_guard(h, fields, delta):
    peak = max(float(np.max(np.abs(fields))) if np.size(fields) else 0.0, abs(delta))
    if h * peak >= STABILITY_LIMIT:
        raise StepSizeError(f"tau_step*max(|Omega|,|delta|) = {h * peak:.3g} >= {STABILITY_LIMIT}")


def atom_step(rho: np.ndarray, omega_a: complex, omega_b: complex, h_tau: float, delta: float = 0.0) -> np.ndarray:
    """Advance rho by one tau-step with fields frozen at their midpoint values."""
    _check_guard(h_tau, [omega_a, omega_b], delta)
    u = _unitary(complex(omega_a), complex(omega_b), float(h_tau), float(delta))
    return u @ rho @ u.conj().T


def field_derivative(rho: np.ndarray, nu0: float) -> tuple:
    """(dOmega_a/dzeta, dOmega_b/dzeta) = (i nu0 rho_31, i nu0 rho_32).

    Works on a single matrix or on a stack ``(..., 3, 3)``.
    """
    return 1j * nu0 * rho[..., 2, 0], 1j * nu0 * rho[..., 2, 1]


@dataclass
class Boundary:
    """Fields at zeta = 0 on the tau grid, with left/right limits at every node."""

    tau: np.ndarray
    omega_a_left: np.ndarray
    omega_a_right: np.ndarray
    omega_b_left: np.ndarray
    omega_b_right: np.ndarray

    @classmethod
    def continuous(cls, tau, omega_a, omega_b):
        tau = np.asarray(tau, dtype=float)
        oa = np.broadcast_to(np.asarray(omega_a, dtype=complex), tau.shape).copy()
        ob = np.broadcast_to(np.asarray(omega_b, dtype=complex), tau.shape).copy()
        return cls(tau, oa, oa.copy(), ob, ob.copy())


def boundary_from_analytic(config: Config, tau: np.ndarray, zeta0: float = 0.0) -> Boundary:
    eng = solution_for(config)
    oa_l, ob_l, _ = eng.evaluate([zeta0], tau)
    oa_r, ob_r, _ = eng.evaluate([zeta0], tau, limit="right")
    return Boundary(tau, oa_l[:, 0], oa_r[:, 0], ob_l[:, 0], ob_r[:, 0])


def integrate(
    boundary: Boundary,
    initial_atoms: np.ndarray,
    zeta: np.ndarray,
    scheme: SchemeConfig,
    config: Config,
    max_bytes: int = DEFAULT_MAX_BYTES,
) -> GridSolution:
    """March the Maxwell-Bloch system from zeta = zeta[0] to zeta[-1].

    Parameters
    ----------
    boundary : Boundary
        Fields entering the medium, sampled on the tau grid (uniform step
        ``scheme.tau_step``).
    initial_atoms : ndarray, shape (nz, 3, 3)
        Density matrices at tau = boundary.tau[0] for every zeta node.
    zeta : ndarray
        Uniform zeta grid with step ``scheme.zeta_step``.
    """
    tau = boundary.tau
    nt, nz = tau.size, zeta.size
    ht, hz = scheme.tau_step, scheme.zeta_step
    if nt > 1 and not np.allclose(np.diff(tau), ht, rtol=1e-9, atol=0):
        raise ValueError("boundary tau grid does not match the scheme step")
    if nz > 1 and not np.allclose(np.diff(zeta), hz, rtol=1e-9, atol=0):
        raise ValueError("zeta grid does not match the scheme step")
    initial_atoms = np.asarray(initial_atoms, dtype=complex)
    if initial_atoms.shape != (nz, 3, 3):
        raise ValueError("initial_atoms must have shape (len(zeta), 3, 3)")
    check_memory(nt, nz, True, max_bytes)
    delta, nu0 = config.medium.delta, config.medium.nu0

    fa_l, fa_r = boundary.omega_a_left.astype(complex), boundary.omega_a_right.astype(complex)
    fb_l, fb_r = boundary.omega_b_left.astype(complex), boundary.omega_b_right.astype(complex)
    rho = np.empty((nt, nz, 3, 3), dtype=complex)
    omega_a = np.empty((nt, nz), dtype=complex)
    omega_b = np.empty((nt, nz), dtype=complex)
    col = np.empty((nt, 3, 3), dtype=complex)

    def sweep(j, a_l, a_r, b_l, b_r):
        _check_guard(ht, [a_l, a_r, b_l, b_r], delta)
        _sweep(initial_atoms[j], a_l, a_r, b_l, b_r, ht, delta, col)
        if not np.isfinite(col).all():
            k = int(np.argmax(~np.isfinite(col).all(axis=(1, 2))))
            raise DivergenceError("non-finite density matrix", tau[k], zeta[j])
        return col.copy()

    current = sweep(0, fa_l, fa_r, fb_l, fb_r)
    for j in range(nz):
        rho[:, j] = current
        omega_a[:, j] = fa_l
        omega_b[:, j] = fb_l
        if j == nz - 1:
            break
        da0, db0 = field_derivative(current, nu0)
        # Euler predictor, then correctors-1 extra trapezoidal passes
        trial = sweep(j + 1, fa_l + hz * da0, fa_r + hz * da0, fb_l + hz * db0, fb_r + hz * db0)
        da, db = field_derivative(trial, nu0)
        for _ in range(scheme.correctors - 1):
            ga, gb = 0.5 * hz * (da0 + da), 0.5 * hz * (db0 + db)
            trial = sweep(j + 1, fa_l + ga, fa_r + ga, fb_l + gb, fb_r + gb)
            da, db = field_derivative(trial, nu0)
        fa_l, fa_r = fa_l + 0.5 * hz * (da0 + da), fa_r + 0.5 * hz * (da0 + da)
        fb_l, fb_r = fb_l + 0.5 * hz * (db0 + db), fb_r + 0.5 * hz * (db0 + db)
        if not (np.isfinite(fa_l).all() and np.isfinite(fb_l).all()):
            k = int(np.argmax(~(np.isfinite(fa_l) & np.isfinite(fb_l))))
            raise DivergenceError("non-finite field", tau[k], zeta[j + 1])
        current = sweep(j + 1, fa_l, fa_r, fb_l, fb_r)

    pops = np.real(np.einsum("tzii->tzi", rho))
    return GridSolution(tau, zeta.copy(), omega_a, omega_b, pops, config, "numeric", rho)


def simulate(config: Config, spec: GridSpec, scheme: SchemeConfig | None = None, **kw) -> GridSolution:
    """Integrate with boundary fields and initial atoms taken from the exact solution."""
    scheme = scheme or SchemeConfig(spec.tau_step, spec.zeta_step)
    if (scheme.tau_step, scheme.zeta_step) != (spec.tau_step, spec.zeta_step):
        spec = GridSpec(spec.tau_min, spec.tau_max, scheme.tau_step, spec.zeta_min, spec.zeta_max, scheme.zeta_step)
    tau, zeta = spec.axes(config)
    off_grid = [b for b in config.schedule.boundaries if tau[0] < b < tau[-1] and not np.any(tau == b)]
    if off_grid:
        log.warning("region boundaries %s are not tau-nodes; accuracy drops to first order there", off_grid)
    boundary = boundary_from_analytic(config, tau, zeta[0])
    _, _, psi = solution_for(config).evaluate(zeta, [tau[0]])
    atoms = np.einsum("zi,zj->zij", psi[0], psi[0].conj())
    return integrate(boundary, atoms, zeta, scheme, config, **kw)


# --- verification -----------------------------------------------------------


def residual_norm(solution: GridSolution, buffer: int = 3, tau_mask=None, zeta_mask=None) -> tuple[float, float]:
    """Max-norm centred-difference residuals (field equation, atom equation).

    Interior nodes only; tau-nodes within ``buffer`` nodes of a region boundary
    are skipped. ``tau_mask``/``zeta_mask`` optionally restrict the nodes
    further (refinement studies use them to compare on common nodes).
    Requires ``solution.rho``.
    """
    if solution.rho is None:
        raise ValueError("residual needs the full density matrix (grid evaluated with rho)")
    nt, nz = solution.shape
    if nt < 3 or nz < 3:
        raise ValueError("grid too small: need >= 3 nodes per axis")
    solution.check_axes()
    ht, hz = solution.tau_step, solution.zeta_step
    nu0, delta = solution.config.medium.nu0, solution.config.medium.delta
    rho = solution.rho

    r_field = np.empty((nt - 2, nz - 2))
    r_atom = np.empty((nt - 2, nz - 2))
    dz = D_MATRIX
    # blocks of tau rows keep the 3x3-per-node temporaries small
    for a in range(1, nt - 1, _RESIDUAL_BLOCK):
        b = min(a + _RESIDUAL_BLOCK, nt - 1)
        rows = slice(a - 1, b + 1)
        h = np.zeros((b - a + 2, nz, 3, 3), dtype=complex)
        h[..., 2, 0] = -0.5 * solution.omega_a[rows]
        h[..., 2, 1] = -0.5 * solution.omega_b[rows]
        h[..., 0, 2] = np.conj(h[..., 2, 0])
        h[..., 1, 2] = np.conj(h[..., 2, 1])
        r = rho[rows]
        mid = r[1:-1, 1:-1]
        dh = (h[1:-1, 2:] - h[1:-1, :-2]) / (2 * hz)
        comm_d = dz @ mid - mid @ dz
        r_field[a - 1 : b - 1] = np.abs(dh - 0.25j * nu0 * comm_d).max(axis=(-1, -2))
        drho = (r[2:, 1:-1] - r[:-2, 1:-1]) / (2 * ht)
        k = 0.5 * delta * dz - h[1:-1, 1:-1]
        r_atom[a - 1 : b - 1] = np.abs(drho - 1j * (k @ mid - mid @ k)).max(axis=(-1, -2))

    keep_t = ~solution.boundary_mask(buffer)[1:-1]
    if tau_mask is not None:
        keep_t &= np.asarray(tau_mask)[1:-1]
    keep_z = np.ones(nz - 2, dtype=bool) if zeta_mask is None else np.asarray(zeta_mask)[1:-1]
    if not (keep_t.any() and keep_z.any()):
        raise ValueError("no interior nodes left after excluding boundary buffers")
    sel = np.ix_(keep_t, keep_z)
    return float(r_field[sel].max()), float(r_atom[sel].max())


@dataclass
class ConvergenceReport:
    steps: tuple[float, ...]
    errors: tuple[float, ...]
    orders: tuple[float, ...]
    conclusive: bool
    note: str = ""

    @property
    def order(self) -> float:
        return min(self.orders) if self.orders else float("nan")

    def passes(self, threshold: float = 1.8) -> bool:
        return self.conclusive and self.order >= threshold


def convergence_order(steps, errors) -> ConvergenceReport:
    """Observed order ``log(e_k/e_{k+1}) / log(h_k/h_{k+1})`` for consecutive refinements.

    Errors that do not decrease monotonically give an inconclusive report.
    """
    steps = tuple(float(s) for s in steps)
    errors = tuple(float(e) for e in errors)
    if len(steps) != len(errors) or len(steps) < 2:
        raise ValueError("need matching step/error sequences of length >= 2")
    orders = tuple(
        float(np.log(errors[i] / errors[i + 1]) / np.log(steps[i] / steps[i + 1]))
        if errors[i + 1] > 0 and errors[i] > 0
        else float("nan")
        for i in range(len(steps) - 1)
    )
    monotone = all(errors[i + 1] < errors[i] for i in range(len(errors) - 1))
    note = "" if monotone else "errors not monotonically decreasing"
    if any(e == 0 for e in errors):
        note = "zero error: order undefined"
        monotone = False
    return ConvergenceReport(steps, errors, orders, monotone and all(np.isfinite(orders)), note)
