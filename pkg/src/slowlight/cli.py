"""``slowlight`` command-line program.

Exit status: 0 on success, 1 for an invalid configuration, 2 for a numerical
failure or a failed verification.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import grid_evaluate, solution_for
from .config import Config, ConfigError, format_complex, load_config
from .grid import GridSpec, GridTooLarge
from .integrator import IntegrationError, simulate
from .scenario import (
    InsufficientDataError,
    ScenarioReport,
    compare,
    emit_plot_script,
    estimate_velocity,
    export_table,
    fmt_norms,
    track_peak,
)
from .special import SpecialFunctionError, bessel_j, gamma_reciprocal
from . import studies

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
FIGURES = ("fig1", "fig2", "fig3")


class VerificationFailed(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slowlight", description="Slow-light soliton storage scenario in a three-level medium.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value parameter file (missing keys take defaults)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    g = common.add_argument_group("grid")
    g.add_argument("--tau-min", type=float, default=-3.0)
    g.add_argument("--tau-max", type=float, default=8.0)
    g.add_argument("--tau-step", type=float, default=0.005)
    g.add_argument("--zeta-max", type=float, default=12.0)
    g.add_argument("--zeta-step", type=float, default=0.05)
    common.add_argument("--figure", choices=FIGURES, action="append", help="plot script(s) to emit (default: all)")
    common.add_argument("-q", "--quiet", action="store_true", help="do not echo the report")

    sub.add_parser("analytic", parents=[common], help="sample the exact solution and export it")
    sub.add_parser("simulate", parents=[common], help="integrate numerically and compare with the exact solution")
    sub.add_parser("verify", parents=[common], help="residual convergence and invariant checks")
    t = sub.add_parser("track", parents=[common], help="peak trajectory and velocities")
    t.add_argument("--observable", choices=("fields", "rho22"), default="fields")
    t.add_argument("--source", choices=("numeric", "analytic"), default="numeric")
    sub.add_parser("bessel", parents=[common], help="special-function spot checks")
    return p


def resolve_config(path: Path | None, err) -> Config:
    config, defaulted = load_config(path)
    for key in defaulted:
        if key == "phi0":
            continue
        value = config.as_dict()[key]
        shown = format_complex(value) if key == "lambda" else repr(float(value))
        err(f"WARN default {key} = {shown}")
    if "phi0" in defaulted:
        config = studies.figure_config(config)
        err(f"WARN default phi0 = {config.soliton.phi0!r} (soliton centre enters at tau = {studies.ENTRY_TAU:g})")
    for w in config.warnings:
        err(f"WARN {w}")
    return config


def grid_from_args(args) -> GridSpec:
    spec = GridSpec(args.tau_min, args.tau_max, args.tau_step, 0.0, args.zeta_max, args.zeta_step)
    if not (spec.tau_step > 0 and spec.zeta_step > 0 and spec.tau_max > spec.tau_min and spec.zeta_max > 0):
        raise ConfigError("grid needs positive steps and non-empty ranges")
    return spec


def _export_solution(sol, out: Path, figures, stem: str) -> list[str]:
    files = [export_table(sol, out / f"{stem}.csv", "grid"), export_table(sol, out / "background.csv", "background")]
    sources = {"fig1": files[1], "fig2": files[0], "fig3": files[0]}
    for fig in figures:
        files.append(emit_plot_script(sources[fig], fig, out / f"{fig}_{stem}.gp", f"{fig}_{stem}.png"))
    return [str(f) for f in files]


def _peak_summary(sol) -> list[str]:
    sch = sol.config.schedule
    lines = []
    for name, sel in (
        ("D0", sol.tau <= 0),
        ("D1", (sol.tau > 0) & (sol.tau <= sch.t1)),
        ("D2", (sol.tau > sch.t1) & (sol.tau <= sch.t_revive)),
        ("D3", sol.tau > sch.t_revive),
    ):
        if sel.any():
            lines.append(
                f"{name}: max |Omega_a|^2 = {np.abs(sol.omega_a[sel]).max() ** 2:.6g}, "
                f"max rho22 = {sol.populations[sel, :, 1].max():.6f}, max rho33 = {sol.populations[sel, :, 2].max():.3e}"
            )
    return lines


def _velocities(sol, observable: str) -> tuple[list, list[str]]:
    track = track_peak(sol, observable)
    sch = sol.config.schedule
    windows = {
        "D0": (float(sol.tau[0]), 0.0),
        "D1": (0.0, sch.t1),
        "D3": studies.d3_fit_window(sol.config, float(sol.tau[-1])),
    }
    lines = [f"{len(track)} samples ({observable})" if track else "empty track: no column above the noise floor"]
    for name, win in windows.items():
        try:
            lines.append(f"{name}: {estimate_velocity(track, win)}")
        except InsufficientDataError as exc:
            lines.append(f"{name}: insufficient data ({exc})")
    lines.append(f"level-set slope 1+|w0|^2 = {solution_for(sol.config).level_set_slope():.6f}")
    return track, lines


def cmd_analytic(args, config, report):
    spec = grid_from_args(args)
    sol = grid_evaluate(spec, config)
    report.add("summary", _peak_summary(sol))
    report.add("files", _export_solution(sol, args.out, args.figure or FIGURES, "analytic"))


def cmd_simulate(args, config, report):
    spec = grid_from_args(args)
    t0 = time.perf_counter()
    num = simulate(config, spec)
    elapsed = time.perf_counter() - t0
    ref = grid_evaluate(spec, config)
    report.add("run", [f"integration time {elapsed:.2f} s"] + _peak_summary(num))
    report.add("comparison with exact solution (T1 buffer excluded)", fmt_norms(compare(num, ref)))
    num.rho = None
    report.add("files", _export_solution(num, args.out, args.figure or FIGURES, "numeric"))


def cmd_track(args, config, report):
    spec = grid_from_args(args)
    sol = simulate(config, spec) if args.source == "numeric" else grid_evaluate(spec, config)
    track, lines = _velocities(sol, args.observable)
    report.add(f"velocities ({args.source})", lines)
    path = export_table(track, args.out / f"track_{args.observable}_{args.source}.csv", "track")
    report.add("files", [str(path)])


def cmd_verify(args, config, report):
    spec = grid_from_args(args)
    base = GridSpec(spec.tau_min, spec.tau_max, 4 * spec.tau_step, 0.0, spec.zeta_max, 4 * spec.zeta_step)
    for window in ("d0", "full"):
        rs = studies.residual_study(config, base, window=window)
        report.add(f"residual refinement ({window})", rs.lines())
        report.check(f"residual order >= 1.8 ({window})", rs.passed, f"orders {rs.field.order:.3f}/{rs.atom.order:.3f}")

    drift = studies.unitary_drift()
    report.add(
        "unitary stepper",
        [
            f"max per-step change: trace {drift.max_step_trace:.2e}, purity {drift.max_step_purity:.2e}",
            f"total over {drift.steps} steps: trace {drift.total_trace:.2e}, purity {drift.total_purity:.2e}",
        ],
    )
    report.check("trace/purity drift", drift.passed)
    dark = studies.dark_state_error(config)
    report.check("dark-state fixed point", dark < 1e-12, f"max deviation {dark:.2e}")

    num = simulate(config, spec)
    st = studies.storage_study(num)
    report.add(
        "storage and revival (numeric)",
        [
            f"stored rho22 peak zeta in [{st.stored_peak_zeta[0]:.5f}, {st.stored_peak_zeta[1]:.5f}], "
            f"drift {st.drift_cells:.3f} cells",
            f"peak rho22 during storage {st.peak_rho22:.6f}",
            f"max |Omega_a| during storage {st.d2_field_max:.4f}",
            f"D0 {st.v_d0}",
            f"D3 {st.v_d3}" if st.v_d3 else f"D3 insufficient data ({st.note})",
        ],
    )
    report.check("D2 peak drift < 1 cell", st.drift_cells < 1.0, f"{st.drift_cells:.3f} cells")
    report.check("D0-vs-D3 velocity < 1%", st.velocity_mismatch < 0.01, f"{100 * st.velocity_mismatch:.3f}%")
    if not report.passed:
        raise VerificationFailed("verification failed")


# reference values: mpmath at 30 digits
BESSEL_SPOTS = (
    ("J_0(1)", lambda: bessel_j(0, 1.0), 0.7651976865579666),
    ("J_1(2.5)", lambda: bessel_j(1, 2.5), 0.4970941024642741),
    ("J_1/2(1.3) closed form", lambda: bessel_j(0.5, 1.3), math.sqrt(2 / (math.pi * 1.3)) * math.sin(1.3)),
    ("J_-1/2(1.3) closed form", lambda: bessel_j(-0.5, 1.3), math.sqrt(2 / (math.pi * 1.3)) * math.cos(1.3)),
    ("1/Gamma(1+i)", lambda: gamma_reciprocal(1 + 1j), 1 / (0.4980156681183560 - 0.1549498283018107j)),
    ("1/Gamma(1/2)", lambda: gamma_reciprocal(0.5), 1 / math.sqrt(math.pi)),
)


def cmd_bessel(args, config, report):
    rows = []
    for name, fn, ref in BESSEL_SPOTS:
        val = complex(fn())
        err = abs(val - ref) / abs(ref)
        rows.append(f"{name:<26} {val.real:+.15f}{val.imag:+.15f}i  rel.err {err:.1e}")
        report.check(name, err < 1e-12)
    eng = solution_for(config)
    g, x = eng.gamma, eng.x0
    lhs = bessel_j(g - 1, x) + bessel_j(g + 1, x)
    rhs = 2 * g / x * bessel_j(g, x)
    rec = abs(lhs - rhs) / abs(rhs)
    rows.append(f"recurrence at nu={g:.4g}, x={x:g}: rel.err {rec:.1e}")
    report.check("three-term recurrence", rec < 1e-12)
    rows.append(f"C1 = {eng.c1:.16g}, z2 = {eng.z2:.16g}, C3 = {eng.c3:.16g}")
    report.add("special functions", rows)
    if not report.passed:
        raise VerificationFailed("special-function checks failed")


COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "track": cmd_track,
    "bessel": cmd_bessel,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")

    def err(msg):
        print(msg, file=sys.stderr)

    try:
        config = resolve_config(args.config, err)
        spec = grid_from_args(args)
    except (ConfigError, OSError) as exc:
        err(f"error: {exc}")
        return EXIT_CONFIG

    report = ScenarioReport(config, spec.describe())
    report.add("window", [f"zeta extent [0, {spec.zeta_max:g}] chosen to hold both trails and the storage site"])
    code = EXIT_OK
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, config, report)
    except VerificationFailed as exc:
        err(f"FAIL: {exc}")
        code = EXIT_NUMERIC
    except (IntegrationError, SpecialFunctionError, GridTooLarge, ArithmeticError, FloatingPointError) as exc:
        err(f"numerical failure: {type(exc).__name__}: {exc}")
        return EXIT_NUMERIC
    except OSError as exc:
        err(f"error: {exc}")
        return EXIT_NUMERIC
    text = report.render()
    (args.out / f"report_{args.command}.txt").write_text(text)
    if not args.quiet:
        print(text, end="")
    return code


if __name__ == "__main__":
    sys.exit(main())
