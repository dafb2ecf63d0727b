"""Verification studies shared by the ``verify`` command and the acceptance tests.

Each study returns a small result object carrying the measured numbers and a
``passed`` flag, so callers can report them without re-deriving anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import grid_evaluate, solution_for
from .config import Config, Region
from .grid import GridSolution, GridSpec
from .integrator import (
    Boundary,
    ConvergenceReport,
    SchemeConfig,
    atom_step,
    convergence_order,
    integrate,
    residual_norm,
    simulate,
)
from .scenario import InsufficientDataError, VelocityFit, compare, estimate_velocity, track_peak

__all__ = [
    "ResidualStudy",
    "residual_study",
    "DriftResult",
    "unitary_drift",
    "dark_state_error",
    "StorageResult",
    "storage_study",
    "d3_fit_window",
    "CrossValidation",
    "cross_validation",
    "continuity_ledger",
    "background_asymptotics",
    "eit_velocity_sweep",
    "level3_scaling",
    "figure_config",
    "DEFAULT_SCENARIO_GRID",
    "DEFAULT_SCHEME",
]

DEFAULT_SCENARIO_GRID = GridSpec(-3.0, 8.0, 0.005, 0.0, 12.0, 0.05)
DEFAULT_SCHEME = SchemeConfig(0.005, 0.05)
ENTRY_TAU = -2.0


def figure_config(config: Config) -> Config:
    """Config with phi0 placing the soliton centre at zeta = 0 when tau = -2."""
    return config.with_params(phi0=solution_for(config).phi0_for_entry(ENTRY_TAU))


# --- residual refinement ------------------------------------------------------


@dataclass
class ResidualStudy:
    window: str
    specs: list[GridSpec]
    field: ConvergenceReport
    atom: ConvergenceReport
    buffer_width: float

    @property
    def passed(self) -> bool:
        return self.field.passes(1.8) and self.atom.passes(1.8) and all(
            0.8 * 4 <= r <= 1.2 * 4 for r in self.ratios()
        )

    def ratios(self) -> list[float]:
        out = []
        for rep in (self.field, self.atom):
            out += [rep.errors[i] / rep.errors[i + 1] for i in range(len(rep.errors) - 1)]
        return out

    def lines(self) -> list[str]:
        rows = [f"window {self.window}; excluded |tau - b| <= {self.buffer_width:g} around boundaries"]
        for spec, ef, ea in zip(self.specs, self.field.errors, self.atom.errors):
            rows.append(f"h_tau={spec.tau_step:g} h_zeta={spec.zeta_step:g}: r_field={ef:.4e} r_atom={ea:.4e}")
        rows.append(f"field orders {', '.join(f'{o:.3f}' for o in self.field.orders)}")
        rows.append(f"atom orders  {', '.join(f'{o:.3f}' for o in self.atom.orders)}")
        return rows


def residual_study(config: Config, base: GridSpec, levels: int = 3, window: str = "full") -> ResidualStudy:
    """Residuals of the exact solution under repeated halving of both steps.

    Every level is measured on the nodes of the coarsest grid and outside a
    fixed physical buffer of three coarse steps around each region boundary,
    so that all levels see the same set of points.
    """
    if window == "d0":
        base = GridSpec(base.tau_min, min(base.tau_max, 0.0), base.tau_step, base.zeta_min, base.zeta_max, base.zeta_step)
    elif window != "full":
        raise ValueError(f"unknown window {window!r}")
    width = 3 * base.tau_step
    specs, ef, ea = [], [], []
    spec = base
    for k in range(levels):
        sol = grid_evaluate(spec, config, with_rho=True)
        stride = 2**k
        tau_mask = np.zeros(sol.tau.size, dtype=bool)
        tau_mask[::stride] = True
        for b in config.schedule.boundaries:
            tau_mask &= np.abs(sol.tau - b) > width * (1 + 1e-9)
        zeta_mask = np.zeros(sol.zeta.size, dtype=bool)
        zeta_mask[::stride] = True
        rf, ra = residual_norm(sol, buffer=3, tau_mask=tau_mask, zeta_mask=zeta_mask)
        specs.append(spec)
        ef.append(rf)
        ea.append(ra)
        del sol
        spec = spec.halved()
    steps = [s.tau_step for s in specs]
    return ResidualStudy(window, specs, convergence_order(steps, ef), convergence_order(steps, ea), width)


# --- unitary stepper invariants ---------------------------------------------


@dataclass
class DriftResult:
    steps: int
    max_step_trace: float
    max_step_purity: float
    total_trace: float
    total_purity: float

    @property
    def passed(self) -> bool:
        return max(self.max_step_trace, self.max_step_purity) <= 1e-13 and max(self.total_trace, self.total_purity) <= 1e-9


def unitary_drift(steps: int = 10_000, h: float = 0.005, seed: int = 1) -> DriftResult:
    """Apply ``atom_step`` with random fields to a random pure state and track trace and purity."""
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=3) + 1j * rng.normal(size=3)
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    fields = (rng.normal(size=(steps, 2)) + 1j * rng.normal(size=(steps, 2))) * 3.0
    tr0, pu0 = np.trace(rho).real, np.trace(rho @ rho).real
    tr, pu = tr0, pu0
    step_tr = step_pu = 0.0
    for oa, ob in fields:
        rho = atom_step(rho, oa, ob, h, 0.3)
        t, p = np.trace(rho).real, np.trace(rho @ rho).real
        step_tr, step_pu = max(step_tr, abs(t - tr)), max(step_pu, abs(p - pu))
        tr, pu = t, p
    return DriftResult(steps, step_tr, step_pu, abs(tr - tr0), abs(pu - pu0))


def dark_state_error(config: Config, spec: GridSpec | None = None) -> float:
    """Largest deviation from the dark state when only the control field enters the medium.

    Atoms start in |1> and the probe is zero; returns the max over the grid of the
    density-matrix deviation from diag(1, 0, 0) and of the field change.
    """
    spec = spec or GridSpec(-1.0, 6.0, 0.01, 0.0, 2.0, 0.05)
    tau, zeta = spec.axes(config)
    eng = solution_for(config)
    bl, br = eng.background(tau), eng.background(tau, "right")
    zero = np.zeros(tau.size, dtype=complex)
    boundary = Boundary(tau, zero, zero.copy(), bl.astype(complex), br.astype(complex))
    atoms = np.zeros((zeta.size, 3, 3), dtype=complex)
    atoms[:, 0, 0] = 1.0
    sol = integrate(boundary, atoms, zeta, SchemeConfig(spec.tau_step, spec.zeta_step), config)
    ref = np.zeros((3, 3))
    ref[0, 0] = 1.0
    drho = np.abs(sol.rho - ref).max()
    dfield = max(np.abs(sol.omega_a).max(), np.abs(sol.omega_b - bl[:, None]).max())
    return float(max(drho, dfield))


# --- storage and revival ----------------------------------------------------


def d3_fit_window(config: Config, tau_max: float) -> tuple[float, float]:
    """Tau window for the post-revival slope: starts once the D3 transient has decayed by e^-5."""
    s = solution_for(config).s
    settle = 5.0 / abs(s.imag) if s.imag != 0 else 1.0
    return (config.schedule.t_revive + settle, tau_max)


@dataclass
class StorageResult:
    solution: GridSolution
    stored_peak_zeta: tuple[float, float]
    drift_cells: float
    peak_rho22: float
    d2_field_max: float
    v_d0: VelocityFit
    v_d3: VelocityFit | None
    note: str = ""

    @property
    def velocity_mismatch(self) -> float:
        if self.v_d3 is None:
            return math.inf
        return abs(self.v_d3.slope / self.v_d0.slope - 1.0)

    def checks(self) -> dict[str, bool]:
        return {
            "stationary storage (drift < 1 cell)": self.drift_cells < 1.0,
            "peak rho22 >= 0.99": self.peak_rho22 >= 0.99,
            "no field trail in D2 (|Omega_a|^2 < 1e-6)": self.d2_field_max**2 < 1e-6,
            "post-revival slope within 1%": self.velocity_mismatch < 0.01,
        }


def storage_study(solution: GridSolution) -> StorageResult:
    """Measure the write/store/read scenario on a (numeric or analytic) solution."""
    cfg = solution.config
    sch = cfg.schedule
    tau = solution.tau
    d2 = (tau > sch.t1) & (tau <= sch.t_revive)
    stored = [s for s in track_peak(solution, "rho22") if sch.t1 < s.tau <= sch.t_revive]
    if stored:
        zp = np.array([s.zeta_peak for s in stored])
        span = (float(zp.min()), float(zp.max()))
        drift = (span[1] - span[0]) / solution.zeta_step
    else:
        span, drift = (math.nan, math.nan), math.inf
    peak22 = float(solution.populations[d2, :, 1].max()) if d2.any() else math.nan
    field_max = float(np.abs(solution.omega_a[d2]).max()) if d2.any() else math.nan

    track = track_peak(solution, "fields")
    v0 = estimate_velocity(track, (tau[0], 0.0))
    note = ""
    try:
        v3 = estimate_velocity(track, d3_fit_window(cfg, float(tau[-1])))
    except InsufficientDataError as exc:
        v3, note = None, str(exc)
    return StorageResult(solution, span, drift, peak22, field_max, v0, v3, note)


# --- numeric versus exact -----------------------------------------------------


@dataclass
class CrossValidation:
    specs: list[GridSpec]
    norms: list[dict[str, dict[str, float]]]
    orders: dict[str, ConvergenceReport] = field(default_factory=dict)

    def linf(self, region: str = "all", level: int = 0) -> float:
        return self.norms[level][region]["linf_field"]


def cross_validation(config: Config, spec: GridSpec, levels: int = 3, regions=("all", "D0", "D1")) -> CrossValidation:
    """Numeric-vs-exact field errors on ``spec`` and on successively halved grids.

    ``spec`` is the finest grid; coarser levels double both steps. The orders are
    computed per region from the field L-infinity errors.
    """
    specs = [spec]
    for _ in range(levels - 1):
        s = specs[-1]
        specs.append(GridSpec(s.tau_min, s.tau_max, 2 * s.tau_step, s.zeta_min, s.zeta_max, 2 * s.zeta_step))
    specs.reverse()
    norms = []
    for s in specs:
        num = simulate(config, s)
        ref = grid_evaluate(s, config)
        norms.append(compare(num, ref))
        del num
    orders = {}
    for r in regions:
        if all(r in n for n in norms):
            orders[r] = convergence_order([s.tau_step for s in specs], [n[r]["linf_field"] for n in norms])
    return CrossValidation(specs, norms, orders)


# --- analytic ledger checks -------------------------------------------------


def continuity_ledger(config: Config, zeta=None) -> dict[str, float]:
    """Left/right jumps of the exact fields at the three region boundaries.

    At tau = 0 and tau = T the probe and the soliton part of the control
    channel (Omega_b + Omega(tau)) are compared; at T1 the control-channel jump
    is measured far behind the soliton (phi_s <= -25), where it reduces to the
    cut tail of the background, and the largest jumps anywhere on ``zeta`` are
    reported alongside.
    """
    eng = solution_for(config)
    if zeta is None:
        zeta = np.linspace(0.0, 12.0, 1201)
    zeta = np.asarray(zeta, dtype=float)
    out = {}
    for name, b in (("0", 0.0), ("T", config.schedule.t_revive)):
        oa_l, ob_l, _ = eng.evaluate(zeta, [b])
        oa_r, ob_r, _ = eng.evaluate(zeta, [b], "right")
        bg_l, bg_r = eng.background([b]), eng.background([b], "right")
        out[f"omega_a@{name}"] = float(np.abs(oa_r - oa_l).max())
        out[f"omega_b+bg@{name}"] = float(np.abs((ob_r + bg_r) - (ob_l + bg_l)).max())
        out[f"omega_b@{name}"] = float(np.abs(ob_r - ob_l).max())
    t1 = config.schedule.t1
    oa_l, ob_l, _ = eng.evaluate(zeta, [t1])
    oa_r, ob_r, _ = eng.evaluate(zeta, [t1], "right")
    out["omega_a@T1 max"] = float(np.abs(oa_r - oa_l).max())
    out["omega_b@T1 max"] = float(np.abs(ob_r - ob_l).max())
    # zeta where phi_s = -25 just before the cut
    phi_at_0, _ = eng.phases(0.0, np.array([t1]))
    z_far = (-25.0 - float(phi_at_0[0])) / eng.kzeta.imag
    _, fl, _ = eng.evaluate([z_far], [t1])
    _, fr, _ = eng.evaluate([z_far], [t1], "right")
    out["omega_b@T1 far"] = float(abs(fr[0, 0] - fl[0, 0]))
    out["cut tail"] = float(config.schedule.omega0 * math.exp(-config.schedule.alpha * t1))
    return out


def _fwhm_phi() -> float:
    # |Omega_a|^2 ~ sech^2(phi): half maximum at phi = arccosh(sqrt 2)
    return 2.0 * math.acosh(math.sqrt(2.0))


def background_asymptotics(config: Config, taus=None, n_widths: float = 5.0) -> dict[str, dict[str, float]]:
    """Probe size and control-field error at least ``n_widths`` pulse widths from the centre.

    The width is the FWHM of |Omega_a|^2 along zeta. At each tau, points on both
    sides of the centre out to 40 e-folds are scanned. Results are keyed by
    region (D0, D3) and include the smallest distance, in widths, beyond which
    both errors stay below 1e-6 (capped by the scan range).
    """
    eng = solution_for(config)
    sch = config.schedule
    if taus is None:
        taus = np.concatenate([np.linspace(-3.0, 0.0, 7), np.linspace(sch.t_revive + 0.25, 8.0, 8)])
    taus = np.asarray(taus, dtype=float)
    fw = _fwhm_phi()
    k = eng.kzeta.imag
    dist = np.linspace(-40.0, 40.0, 8001)  # in units of phi
    far = np.abs(dist) >= n_widths * fw
    out: dict[str, dict[str, float]] = {}
    for t, reg in zip(taus, eng.regions(taus)):
        if reg not in (Region.D0, Region.D3):
            continue
        phi0, _ = eng.phases(0.0, np.array([t]))
        zeta = (dist - float(phi0[0])) / k
        oa, ob, _ = eng.evaluate(zeta, [t])
        bg = eng.background([t])[0]
        ea, eb = np.abs(oa[0]), np.abs(np.abs(ob[0]) - bg)
        bad = np.abs(dist)[(ea > 1e-6) | (eb > 1e-6)]
        row = out.setdefault(Region(reg).name, {"omega_a": 0.0, "omega_b": 0.0, "widths_needed": 0.0})
        row["omega_a"] = max(row["omega_a"], float(ea[far].max()))
        row["omega_b"] = max(row["omega_b"], float(eb[far].max()))
        row["widths_needed"] = max(row["widths_needed"], float(bad.max() / fw) if bad.size else 0.0)
    return out


def eit_velocity_sweep(config: Config, omegas=(0.5, 0.25, 0.125), resolution: int = 20) -> list[tuple[float, float, float]]:
    """D0 track slope measured on the exact solution for each Omega0 with nu0 = Omega0^2/2.

    The grid is scaled by the soliton's e-folding widths so every run resolves
    it equally. Returns ``(omega0, measured slope, level-set slope)`` triples.
    """
    out = []
    for om in omegas:
        cfg = config.with_params(omega0=om, nu0=0.5 * om * om)
        eng = solution_for(cfg)
        wz, wt = eng.widths()
        slope = eng.level_set_slope()
        cfg = cfg.with_params(phi0=eng.phi0_for_entry(-8.0 * wt))
        spec = GridSpec(-8.0 * wt, 0.0, wt / resolution, 0.0, 8.0 * wt * slope, wz / resolution)
        sol = grid_evaluate(spec, cfg)
        track = track_peak(sol, "fields")
        fit = estimate_velocity(track, (-6.0 * wt, -wt))
        out.append((om, fit.slope, slope))
    return out


def level3_scaling(config: Config, omegas=(0.1, 0.2, 0.4), spec: GridSpec | None = None):
    """Peak rho33 over the exact scenario grid for each Omega0; returns (omegas, peaks, log-log slope)."""
    spec = spec or GridSpec(-3.0, 8.0, 0.01, 0.0, 12.0, 0.005)
    peaks = []
    for om in omegas:
        cfg = figure_config(config.with_params(omega0=om))
        sol = grid_evaluate(spec, cfg)
        peaks.append(float(sol.populations[..., 2].max()))
    slope = float(np.polyfit(np.log(omegas), np.log(peaks), 1)[0])
    return list(omegas), peaks, slope


def region_name(r: Region) -> str:
    return Region(r).name
