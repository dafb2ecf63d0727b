"""Physical parameters, the four-region time partition and the control schedule.

All quantities are dimensionless: tau in units of the pulse length t_p = 1 us,
Rabi frequencies in MHz-scaled units, and zeta in units of 1e-13 s (the slowed
pulse length divided by c). Nothing in the package carries SI units.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

__all__ = [
    "ConfigError",
    "MediumConfig",
    "ControlSchedule",
    "SolitonConfig",
    "Region",
    "Config",
    "region_of",
    "region_array",
    "background_field",
    "validate_config",
    "default_config",
    "parse_complex",
    "format_complex",
    "load_config",
    "dump_config",
    "CONFIG_KEYS",
]

CONFIG_KEYS = ("nu0", "delta", "omega0", "alpha", "t1", "t_revive", "lambda", "phi0", "theta0")


class ConfigError(ValueError):
    """Raised when a configuration violates a physical invariant."""


@dataclass(frozen=True)
class MediumConfig:
    nu0: float = 4.5
    delta: float = 0.0


@dataclass(frozen=True)
class ControlSchedule:
    """Background control field: constant, exponential switch-off, dark gap, revival.

    ``t1`` and ``t_revive`` default to 4/alpha and 4/alpha + 3.
    """

    omega0: float = 3.0
    alpha: float = 4.0
    t1: float | None = None
    t_revive: float | None = None

    def __post_init__(self):
        if self.t1 is None and self.alpha > 0:
            object.__setattr__(self, "t1", 4.0 / self.alpha)
        if self.t_revive is None and self.t1 is not None:
            object.__setattr__(self, "t_revive", self.t1 + 3.0)

    @property
    def boundaries(self) -> tuple[float, float, float]:
        return (0.0, self.t1, self.t_revive)


@dataclass(frozen=True)
class SolitonConfig:
    lam: complex = -4.1j
    phi0: float = 0.0
    theta0: float = 0.0


class Region(enum.IntEnum):
    D0 = 0
    D1 = 1
    D2 = 2
    D3 = 3


@dataclass(frozen=True)
class Config:
    """A validated (medium, schedule, soliton) triple."""

    medium: MediumConfig = MediumConfig()
    schedule: ControlSchedule = ControlSchedule()
    soliton: SolitonConfig = SolitonConfig()
    warnings: tuple[str, ...] = field(default=(), compare=False, hash=False)

    def replace(self, **changes) -> "Config":
        """Return a re-validated copy with top-level fields swapped."""
        parts = {"medium": self.medium, "schedule": self.schedule, "soliton": self.soliton}
        parts.update(changes)
        return validate_config(parts["medium"], parts["schedule"], parts["soliton"])

    def with_params(self, **params) -> "Config":
        """Re-validated copy with individual parameters changed, by config-file key (``lam`` for lambda).

        Changing ``alpha`` keeps the current ``t1`` and ``t_revive``; pass them too if they should move.
        """
        groups = {"medium": {}, "schedule": {}, "soliton": {}}
        where = {"nu0": "medium", "delta": "medium", "omega0": "schedule", "alpha": "schedule",
                 "t1": "schedule", "t_revive": "schedule", "lam": "soliton", "phi0": "soliton", "theta0": "soliton"}
        for key, val in params.items():
            key = "lam" if key == "lambda" else key
            if key not in where:
                raise ConfigError(f"unknown parameter {key!r}")
            groups[where[key]][key] = val
        return self.replace(**{g: replace(getattr(self, g), **v) for g, v in groups.items() if v})

    def as_dict(self) -> dict[str, object]:
        return {
            "nu0": self.medium.nu0,
            "delta": self.medium.delta,
            "omega0": self.schedule.omega0,
            "alpha": self.schedule.alpha,
            "t1": self.schedule.t1,
            "t_revive": self.schedule.t_revive,
            "lambda": complex(self.soliton.lam),
            "phi0": self.soliton.phi0,
            "theta0": self.soliton.theta0,
        }


def region_of(tau: float, schedule: ControlSchedule) -> Region:
    """Region containing ``tau``; every boundary belongs to the earlier region."""
    if tau <= 0.0:
        return Region.D0
    if tau <= schedule.t1:
        return Region.D1
    if tau <= schedule.t_revive:
        return Region.D2
    return Region.D3


def region_array(tau, schedule: ControlSchedule) -> np.ndarray:
    """Vectorised :func:`region_of` returning integer region tags."""
    tau = np.asarray(tau, dtype=float)
    return np.searchsorted(np.array(schedule.boundaries), tau, side="left").astype(int)


def background_field(tau, schedule: ControlSchedule):
    """Control field Omega(tau) at the medium entrance (scalar or array)."""
    scalar = np.ndim(tau) == 0
    tau = np.asarray(tau, dtype=float)
    reg = region_array(tau, schedule)
    out = np.full(tau.shape, schedule.omega0)
    d1 = reg == Region.D1
    out[d1] = schedule.omega0 * np.exp(-schedule.alpha * tau[d1])
    out[reg == Region.D2] = 0.0
    return float(out) if scalar else out


def _bessel_index(alpha: float, lam: complex) -> complex:
    return (alpha + 1j * lam) / (2.0 * alpha)


def validate_config(
    medium: MediumConfig | None = None,
    schedule: ControlSchedule | None = None,
    soliton: SolitonConfig | None = None,
) -> Config:
    """Check every invariant and return a :class:`Config`.

    Raises
    ------
    ConfigError
        On the first violated invariant. A mismatch between nu0 and omega0**2/2
        is only a warning, since the dimensionless units assume equality.
    """
    medium = medium or MediumConfig()
    schedule = schedule or ControlSchedule()
    soliton = soliton or SolitonConfig()
    lam = complex(soliton.lam)
    if not np.isfinite([medium.nu0, medium.delta, schedule.omega0, schedule.alpha]).all():
        raise ConfigError("non-finite parameter")
    if medium.nu0 <= 0:
        raise ConfigError("coupling constant nu0 must be positive")
    if schedule.omega0 <= 0:
        raise ConfigError("background amplitude omega0 must be positive")
    if schedule.alpha <= 0:
        raise ConfigError("decay constant must be positive")
    if not 0 < schedule.t1 <= schedule.t_revive:
        raise ConfigError("need 0 < t1 <= t_revive")
    if lam.imag == 0:
        raise ConfigError("soliton amplitude zero: Im(lambda) must be nonzero")
    if lam == medium.delta:
        raise ConfigError("lambda must differ from the detuning")
    gamma = _bessel_index(schedule.alpha, lam)
    if abs(gamma - round(gamma.real)) < 1e-12:
        raise ConfigError(f"degenerate parameters: Bessel index {gamma} is an integer")

    warnings = []
    if not math.isclose(medium.nu0, schedule.omega0**2 / 2, rel_tol=1e-12):
        warnings.append(
            f"nu0={medium.nu0:g} differs from omega0**2/2={schedule.omega0**2 / 2:g}; "
            "the dimensionless units assume equality"
        )
    soliton = replace(soliton, lam=lam)
    return Config(medium, schedule, soliton, tuple(warnings))


def default_config() -> Config:
    return validate_config()


# --- key=value config files -------------------------------------------------

_BARE_I = re.compile(r"(^|[+-])i$")


def parse_complex(text: str) -> complex:
    """Parse ``a+bi`` notation (also accepts ``j``), e.g. ``-4.1i`` or ``0.5-4.1i``."""
    t = text.strip().replace(" ", "").replace("j", "i")
    if not t:
        raise ValueError("empty complex literal")
    t = _BARE_I.sub(lambda m: m.group(1) + "1i", t)
    try:
        return complex(t.replace("i", "j"))
    except ValueError:
        raise ValueError(f"cannot parse complex value {text!r}") from None


def format_complex(z: complex) -> str:
    z = complex(z)
    re_part = z.real + 0.0  # drops a negative zero
    return f"{re_part!r}{'+' if z.imag >= 0 else '-'}{abs(z.imag)!r}i"


def load_config(path: str | Path | None) -> tuple[Config, list[str]]:
    """Read a key=value file.

    Returns the validated config and the list of keys that fell back to defaults.
    A ``None`` path or an empty file gives the default parameter set.
    """
    values: dict[str, object] = {}
    if path is not None:
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, val = (p.strip() for p in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = parse_complex(val) if key == "lambda" else float(val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    defaulted = [k for k in CONFIG_KEYS if k not in values]
    medium = MediumConfig(**{k: values[k] for k in ("nu0", "delta") if k in values})
    schedule = ControlSchedule(**{k: values[k] for k in ("omega0", "alpha", "t1", "t_revive") if k in values})
    sol = {"lam": values["lambda"]} if "lambda" in values else {}
    sol.update({k: values[k] for k in ("phi0", "theta0") if k in values})
    return validate_config(medium, schedule, SolitonConfig(**sol)), defaulted


def dump_config(config: Config) -> str:
    lines = []
    for key, val in config.as_dict().items():
        lines.append(f"{key} = {format_complex(val) if key == 'lambda' else repr(float(val))}")
    return "\n".join(lines) + "\n"
