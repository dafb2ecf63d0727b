"""Sampling grids and the sampled-solution container shared by both solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Config

__all__ = ["GridSpec", "GridSolution", "GridTooLarge", "make_axis", "DEFAULT_MAX_BYTES"]

DEFAULT_MAX_BYTES = 1 << 30


class GridTooLarge(MemoryError):
    pass


def make_axis(lo: float, hi: float, step: float, snap=()) -> np.ndarray:
    """Uniform axis from ``lo`` to ``hi``; nodes within 1e-9 steps of a ``snap`` value are set to it exactly."""
    if not step > 0:
        raise ValueError("step must be positive")
    if not hi >= lo:
        raise ValueError("empty range")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    axis = lo + step * np.arange(n)
    for b in snap:
        near = np.abs(axis - b) < 1e-9 * step
        axis[near] = b
    return axis


@dataclass(frozen=True)
class GridSpec:
    tau_min: float = -3.0
    tau_max: float = 8.0
    tau_step: float = 0.01
    zeta_min: float = 0.0
    zeta_max: float = 12.0
    zeta_step: float = 0.02

    def axes(self, config: Config | None = None) -> tuple[np.ndarray, np.ndarray]:
        snap = config.schedule.boundaries if config is not None else ()
        return (
            make_axis(self.tau_min, self.tau_max, self.tau_step, snap),
            make_axis(self.zeta_min, self.zeta_max, self.zeta_step),
        )

    def halved(self) -> "GridSpec":
        return GridSpec(
            self.tau_min, self.tau_max, self.tau_step / 2, self.zeta_min, self.zeta_max, self.zeta_step / 2
        )

    def describe(self) -> str:
        return (
            f"tau=[{self.tau_min:g},{self.tau_max:g}] step {self.tau_step:g}; "
            f"zeta=[{self.zeta_min:g},{self.zeta_max:g}] step {self.zeta_step:g}"
        )


@dataclass
class GridSolution:
    """Fields and atomic state sampled on a (tau, zeta) grid.

    Arrays are tau-major: ``omega_a[i, j]`` is the value at ``(tau[i], zeta[j])``.
    ``rho`` (shape ``(nt, nz, 3, 3)``) may be omitted to save memory, in which case
    only the populations are kept.
    """

    tau: np.ndarray
    zeta: np.ndarray
    omega_a: np.ndarray
    omega_b: np.ndarray
    populations: np.ndarray
    config: Config
    provenance: str
    rho: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return (self.tau.size, self.zeta.size)

    @property
    def tau_step(self) -> float:
        return float(self.tau[1] - self.tau[0]) if self.tau.size > 1 else 0.0

    @property
    def zeta_step(self) -> float:
        return float(self.zeta[1] - self.zeta[0]) if self.zeta.size > 1 else 0.0

    def check_axes(self) -> None:
        for name, ax in (("tau", self.tau), ("zeta", self.zeta)):
            if ax.size > 1:
                d = np.diff(ax)
                if not (d > 0).all() or np.ptp(d) > 1e-9 * d.mean():
                    raise ValueError(f"{name} axis is not uniform and increasing")

    def boundary_mask(self, buffer: int = 3, which=None) -> np.ndarray:
        """Boolean mask over tau nodes lying within ``buffer`` nodes of a region boundary."""
        bounds = self.config.schedule.boundaries if which is None else which
        h = self.tau_step or 1.0
        mask = np.zeros(self.tau.size, dtype=bool)
        for b in bounds:
            mask |= np.abs(self.tau - b) <= (buffer + 1e-6) * h
        return mask


def check_memory(n_tau: int, n_zeta: int, with_rho: bool, max_bytes: int = DEFAULT_MAX_BYTES) -> None:
    per_node = 16 * 2 + 8 * 3 + (16 * 9 if with_rho else 0)
    need = n_tau * n_zeta * per_node
    if need > max_bytes:
        raise GridTooLarge(f"grid {n_tau}x{n_zeta} needs {need / 2**20:.0f} MiB > cap {max_bytes / 2**20:.0f} MiB")
