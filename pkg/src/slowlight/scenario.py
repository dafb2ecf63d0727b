"""Measurements on sampled solutions: peak tracks, velocities, comparisons, exports."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import Config, Region, background_field, dump_config
from .grid import GridSolution

__all__ = [
    "TrackSample",
    "VelocityFit",
    "InsufficientDataError",
    "GridMismatchError",
    "observable_array",
    "track_peak",
    "estimate_velocity",
    "peak_width",
    "compare",
    "export_table",
    "read_table",
    "emit_plot_script",
    "ScenarioReport",
    "config_hash",
    "NOISE_FLOOR",
]

NOISE_FLOOR = 1e-6

_UNITS = {
    "tau": "tau[us]",
    "zeta": "zeta[1e-13 s]",
    "re_omega_a": "re_omega_a[MHz]",
    "im_omega_a": "im_omega_a[MHz]",
    "re_omega_b": "re_omega_b[MHz]",
    "im_omega_b": "im_omega_b[MHz]",
    "rho11": "rho11[1]",
    "rho22": "rho22[1]",
    "rho33": "rho33[1]",
    "omega": "omega[MHz]",
    "zeta_peak": "zeta_peak[1e-13 s]",
    "value": "value",
}


class InsufficientDataError(ValueError):
    pass


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class TrackSample:
    tau: float
    zeta_peak: float
    value: float


@dataclass(frozen=True)
class VelocityFit:
    slope: float
    intercept: float
    rms: float
    window: tuple[float, float]
    n: int

    def __str__(self):
        return (
            f"slope {self.slope:.6f} (intercept {self.intercept:.4f}, rms {self.rms:.2e}, "
            f"n={self.n}, tau in [{self.window[0]:g}, {self.window[1]:g}])"
        )


def observable_array(solution: GridSolution, observable: str) -> np.ndarray:
    if observable in ("fields", "intensity"):
        return np.abs(solution.omega_a) ** 2
    if observable in ("rho11", "rho22", "rho33"):
        return solution.populations[..., int(observable[-1]) - 1]
    raise ValueError(f"unknown observable {observable!r}")


def track_peak(solution: GridSolution, observable: str = "fields", floor: float = NOISE_FLOOR) -> list[TrackSample]:
    """Per-tau argmax over zeta, refined by a three-point parabola.

    Columns whose maximum is below ``floor`` or sits on the zeta-grid edge
    (the peak may lie outside the grid) are left out.
    """
    data = observable_array(solution, observable)
    if solution.zeta.size < 3:
        raise ValueError("need at least three zeta nodes")
    h = solution.zeta_step
    out = []
    for i, col in enumerate(data):
        j = int(np.argmax(col))
        if col[j] < floor or j == 0 or j == col.size - 1:
            continue
        y0, y1, y2 = col[j - 1], col[j], col[j + 1]
        curv = y0 - 2 * y1 + y2
        off = 0.5 * (y0 - y2) / curv if curv != 0 else 0.0
        peak = y1 - 0.25 * (y0 - y2) * off
        out.append(TrackSample(float(solution.tau[i]), float(solution.zeta[j] + off * h), float(peak)))
    return out


def estimate_velocity(track, window: tuple[float, float]) -> VelocityFit:
    """Least-squares line through the samples with ``window[0] <= tau <= window[1]``."""
    lo, hi = window
    pts = np.array([(s.tau, s.zeta_peak) for s in track if lo <= s.tau <= hi]).reshape(-1, 2)
    if len(pts) < 5:
        raise InsufficientDataError(f"only {len(pts)} track samples in tau window [{lo}, {hi}]")
    coef = np.polyfit(pts[:, 0], pts[:, 1], 1)
    resid = pts[:, 1] - np.polyval(coef, pts[:, 0])
    return VelocityFit(float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid**2))), (lo, hi), len(pts))


def peak_width(solution: GridSolution, tau: float, observable: str = "fields") -> float:
    """Full width at half maximum in zeta of the observable at the node nearest ``tau``."""
    i = int(np.argmin(np.abs(solution.tau - tau)))
    col = observable_array(solution, observable)[i]
    z = solution.zeta
    j = int(np.argmax(col))
    half = 0.5 * col[j]
    left = np.nonzero(col[:j] < half)[0]
    right = np.nonzero(col[j:] < half)[0]
    if left.size == 0 or right.size == 0:
        raise InsufficientDataError("half-maximum not bracketed inside the grid")
    a, b = left[-1], j + right[0]
    zl = np.interp(half, [col[a], col[a + 1]], [z[a], z[a + 1]])
    zr = np.interp(half, [col[b], col[b - 1]], [z[b], z[b - 1]])
    return float(zr - zl)


def _region_masks(solution: GridSolution, buffer: int):
    from .config import region_array

    reg = region_array(solution.tau, solution.config.schedule)
    keep = ~solution.boundary_mask(buffer, [solution.config.schedule.t1])
    masks = {"all": keep}
    for r in Region:
        masks[r.name] = keep & (reg == r)
    return masks


def compare(numeric: GridSolution, analytic: GridSolution, buffer: int = 3) -> dict[str, dict[str, float]]:
    """L-infinity and RMS differences of fields and populations, overall and per region.

    Nodes within ``buffer`` tau-steps of the control cut-off t1 are left out.
    """
    if numeric.shape != analytic.shape or not (
        np.allclose(numeric.tau, analytic.tau) and np.allclose(numeric.zeta, analytic.zeta)
    ):
        raise GridMismatchError("solutions are sampled on different grids")
    dfield = np.maximum(np.abs(numeric.omega_a - analytic.omega_a), np.abs(numeric.omega_b - analytic.omega_b))
    da = np.abs(numeric.omega_a - analytic.omega_a)
    dpop = np.abs(numeric.populations - analytic.populations).max(axis=-1)
    out = {}
    for name, m in _region_masks(numeric, buffer).items():
        if not m.any():
            continue
        out[name] = {
            "linf_field": float(dfield[m].max()),
            "l2_field": float(np.sqrt(np.mean(dfield[m] ** 2))),
            "linf_omega_a": float(da[m].max()),
            "linf_pop": float(dpop[m].max()),
            "l2_pop": float(np.sqrt(np.mean(dpop[m] ** 2))),
        }
    return out


# --- CSV ------------------------------------------------------------------

_GRID_COLUMNS = {
    "fields": ["tau", "zeta", "re_omega_a", "im_omega_a", "re_omega_b", "im_omega_b"],
    "populations": ["tau", "zeta", "rho11", "rho22", "rho33"],
    "grid": ["tau", "zeta", "re_omega_a", "im_omega_a", "re_omega_b", "im_omega_b", "rho11", "rho22", "rho33"],
}


def export_table(obj, path, what: str = "grid") -> Path:
    """Write a solution, track or background profile as CSV.

    ``what`` is ``fields``, ``populations`` or ``grid`` (both) for a
    :class:`GridSolution`; ``track`` for a list of :class:`TrackSample`;
    ``background`` for a solution or config (control field on the solution's tau axis).
    Rows are tau-major; numbers carry 17 significant digits, enough to round-trip.
    """
    path = Path(path)
    if what in _GRID_COLUMNS:
        cols = _GRID_COLUMNS[what]
        s = obj
        nt, nz = s.shape
        tt, zz = np.meshgrid(s.tau, s.zeta, indexing="ij")
        values = {
            "tau": tt,
            "zeta": zz,
            "re_omega_a": s.omega_a.real,
            "im_omega_a": s.omega_a.imag,
            "re_omega_b": s.omega_b.real,
            "im_omega_b": s.omega_b.imag,
            "rho11": s.populations[..., 0],
            "rho22": s.populations[..., 1],
            "rho33": s.populations[..., 2],
        }
        table = np.stack([values[c].ravel() for c in cols], axis=1)
    elif what == "track":
        cols = ["tau", "zeta_peak", "value"]
        table = np.array([(t.tau, t.zeta_peak, t.value) for t in obj]).reshape(-1, 3)
    elif what == "background":
        cols = ["tau", "omega"]
        tau = obj.tau
        table = np.stack([tau, background_field(tau, obj.config.schedule)], axis=1)
    else:
        raise ValueError(f"unknown table kind {what!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    # 17 significant digits round-trip every double exactly
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(_UNITS[c] for c in cols), comments="")
    return path


def read_table(path) -> tuple[list[str], np.ndarray]:
    """Header names and data of a table written by :func:`export_table`."""
    with Path(path).open() as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data.reshape(-1, len(header))


# --- gnuplot scripts ------------------------------------------------------

_PLOT_TEMPLATES = {
    "fig1": """\
set datafile separator ','
set key off
set xlabel 'tau (us)'
set ylabel 'Omega(tau) (MHz)'
set title 'Control background at the medium entrance'
set samples 2000
plot '{data}' using 1:2 every ::1 with lines lw 2
""",
    "fig2": """\
set datafile separator ','
set xlabel 'tau (us)'
set ylabel 'zeta (units of 1e-13 s)'
set cblabel '|Omega_a|^2'
set title 'Probe intensity |Omega_a|^2'
set palette rgbformulae 33,13,10
plot '{data}' using 1:2:($3**2+$4**2) every ::1 with image
""",
    "fig3": """\
set datafile separator ','
set xlabel 'tau (us)'
set ylabel 'zeta (units of 1e-13 s)'
set cblabel 'rho_22'
set cbrange [0:1]
set title 'Population of level |2>'
set palette rgbformulae 33,13,10
plot '{data}' using 1:2:{col} every ::1 with image
""",
}


def emit_plot_script(data_path, figure: str, path, output: str | None = None) -> Path:
    """Write a gnuplot script drawing fig1 (control field), fig2 (|Omega_a|^2) or fig3 (rho22).

    fig1 expects a ``background`` table, fig2 a ``fields`` or ``grid`` table,
    fig3 a ``populations`` or ``grid`` table.
    """
    if figure not in _PLOT_TEMPLATES:
        raise ValueError(f"unknown figure {figure!r}; expected fig1, fig2 or fig3")
    data_path = Path(data_path)
    if not data_path.exists():
        raise FileNotFoundError(data_path)
    header = data_path.open().readline().strip().split(",")
    names = [h.split("[")[0] for h in header]
    col = None
    if figure == "fig2" and names[2:4] != ["re_omega_a", "im_omega_a"]:
        raise ValueError(f"{data_path} has no omega_a columns")
    if figure == "fig3":
        if "rho22" not in names:
            raise ValueError(f"{data_path} has no rho22 column")
        col = names.index("rho22") + 1
    if figure == "fig1" and names[:2] != ["tau", "omega"]:
        raise ValueError(f"{data_path} is not a background table")
    text = _PLOT_TEMPLATES[figure].format(data=data_path.name, col=col)
    out_name = output or f"{figure}.png"
    text = f"set terminal pngcairo size 900,600\nset output '{out_name}'\n" + text
    path = Path(path)
    path.write_text(text)
    return path


# --- report ---------------------------------------------------------------


def config_hash(config: Config) -> str:
    return hashlib.sha256(dump_config(config).encode()).hexdigest()[:16]


@dataclass
class ScenarioReport:
    config: Config
    grid: str
    sections: list[tuple[str, list[str]]] = field(default_factory=list)
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def add(self, title: str, lines) -> None:
        self.sections.append((title, list(lines)))

    def check(self, name: str, ok: bool, detail: str = "") -> bool:
        self.checks.append((name, bool(ok), detail))
        return bool(ok)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def render(self) -> str:
        lines = ["# slowlight scenario report", f"config_hash = {config_hash(self.config)}", f"grid: {self.grid}", ""]
        lines.append("[config]")
        lines.extend(dump_config(self.config).splitlines())
        for title, body in self.sections:
            lines += ["", f"[{title}]"] + body
        if self.checks:
            lines += ["", "[checks]"]
            for name, ok, detail in self.checks:
                lines.append(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
            lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def fmt_norms(norms: dict[str, dict[str, float]]) -> list[str]:
    out = []
    for region, vals in norms.items():
        out.append(f"{region:>4}: " + ", ".join(f"{k}={v:.3e}" for k, v in vals.items()))
    return out


def isclose_rel(a: float, b: float, rel: float) -> bool:
    return math.isclose(a, b, rel_tol=rel)
