"""Command-line interface: config parsing, CSV emission, figure rendering.

Every data subcommand writes a CSV whose bytes are fully determined by the
resolved configuration and seed (17-significant-digit floats, resolved config
echoed as ``# key=value`` comments above the header row), plus a rendered PNG
figure next to it.  ``--workers`` parallelizes the Monte Carlo without
changing a single output byte.

Exit codes: 0 success, 1 usage/config error, 2 numeric failure during the
run, 3 validation-suite failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import CoherentState, DriveParams, ThermalParams
from .dynamics import (
    IntegrationError,
    SolverSettings,
    bogoliubov_from_samples,
    bogoliubov_perturbative,
    defect_predicted_two_timescale,
    pq_two_timescale,
    solve_pq,
)
from .measurement import squeezed_coherent_prob
from .open_system import BathParams, run_dissipative_protocol
from .oracle import (
    TruncationError,
    coherent_fock,
    evolve_fock,
    fock_overlap,
    squeeze_fock,
)
from .protocol import TrajectoryConfig, run_ensemble, run_fixed_drive_ensemble, run_trajectory
from .squeezing import decompose, min_quanta, rsq_linear, solve_j_odes
from .steady_state import (
    QuadratureError,
    QuadratureGrid,
    find_fixed_point,
    iterate_cycles,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_VALIDATION = 3


class ConfigError(ValueError):
    """A configuration key failed to parse or fell outside its range."""


def _positive(x):
    return x > 0.0


def _nonneg(x):
    return x >= 0.0


# key -> (python type, default, range predicate, human-readable range)
SCHEMA: dict[str, tuple[type, object, object, str]] = {
    "drive.lambda": (float, 0.01, lambda x: 0.0 <= x < 0.25, "[0, 0.25)"),
    "drive.omega_p": (float, 2.0, _positive, "(0, inf)"),
    "drive.phi_p": (float, math.pi / 2.0, lambda x: True, "any angle"),
    "initial.kind": (str, "coherent", lambda s: s in ("coherent", "thermal"), "coherent|thermal"),
    "initial.r": (float, 1.0, _nonneg, "[0, inf)"),
    "initial.phi": (float, 0.0, lambda x: True, "any angle"),
    "initial.nbar": (float, 10.0, _nonneg, "[0, inf)"),
    "protocol.n_cycles": (int, 12, lambda n: n >= 1, ">= 1"),
    "protocol.n_traj": (int, 1000, lambda n: n >= 1, ">= 1"),
    "protocol.phase_noise": (float, 0.0, _nonneg, "[0, inf)"),
    "protocol.sample_interval": (float, math.pi / 8.0, _positive, "(0, inf)"),
    "protocol.duration": (float, 0.0, _nonneg, "[0, inf); 0 selects per-cycle mode"),
    "bath.gamma": (float, 1e-4, _nonneg, "[0, inf)"),
    "bath.nbar": (float, 19.5, _nonneg, "[0, inf)"),
    "ode.rtol": (float, 1e-10, lambda x: 0.0 < x <= 1e-2, "(0, 1e-2]"),
    "ode.atol": (float, 1e-12, lambda x: 0.0 < x <= 1e-2, "(0, 1e-2]"),
    "quad.n_radial": (int, 200, lambda n: n >= 16, ">= 16"),
    "quad.n_angular": (int, 64, lambda n: n >= 8, ">= 8"),
    "quad.r_extra": (float, 6.0, _positive, "(0, inf)"),
    "quad.tol": (float, 1e-6, _positive, "(0, inf)"),
    "steady.r0_max": (float, 6.0, _nonneg, "[0, inf)"),
    "steady.r0_count": (int, 4, lambda n: n >= 1, ">= 1"),
    "steady.n_cycles": (int, 8, lambda n: n >= 1, ">= 1"),
    "errors.t_max": (float, 50.0, _positive, "(0, inf)"),
    "errors.n_points": (int, 201, lambda n: n >= 2, ">= 2"),
    "squeeze.t_max": (float, 50.0, _positive, "(0, inf)"),
    "squeeze.n_points": (int, 201, lambda n: n >= 2, ">= 2"),
    "seed": (int, 0, _nonneg, ">= 0"),
}


@dataclass(frozen=True)
class RunConfig:
    """Validated flat configuration for one CLI invocation."""

    values: tuple[tuple[str, object], ...]

    def __getitem__(self, key: str):
        for k, v in self.values:
            if k == key:
                return v
        raise KeyError(key)

    def drive(self) -> DriveParams:
        return DriveParams(
            lam=self["drive.lambda"],
            omega_p=self["drive.omega_p"],
            phi_p=self["drive.phi_p"],
        )

    def initial(self):
        if self["initial.kind"] == "thermal":
            return ThermalParams(self["initial.nbar"])
        return CoherentState(self["initial.r"], self["initial.phi"])

    def bath(self) -> BathParams:
        return BathParams(self["bath.gamma"], self["bath.nbar"])

    def solver(self) -> SolverSettings:
        return SolverSettings(rel_tol=self["ode.rtol"], abs_tol=self["ode.atol"])

    def quad_grid(self) -> QuadratureGrid:
        return QuadratureGrid(
            n_radial=self["quad.n_radial"],
            n_angular=self["quad.n_angular"],
            r_extra=self["quad.r_extra"],
            tol=self["quad.tol"],
        )

    def trajectory_config(self) -> TrajectoryConfig:
        return TrajectoryConfig(
            drive=self.drive(),
            n_cycles=self["protocol.n_cycles"],
            initial=self.initial(),
            phase_noise_sigma=self["protocol.phase_noise"],
            seed=self["seed"],
        )

    def echo_lines(self, subcommand: str) -> list[str]:
        lines = [f"# subcommand={subcommand}"]
        for key, value in self.values:
            lines.append(f"# {key}={_fmt(value)}")
        return lines


def _coerce(key: str, raw: str):
    typ, _, ok, rng = SCHEMA[key]
    try:
        if typ is int:
            value = int(raw)
        elif typ is float:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
        else:
            value = raw.strip()
    except (TypeError, ValueError):
        raise ConfigError(
            f"config key {key}: could not parse {raw!r} as {typ.__name__}"
        ) from None
    if not ok(value):
        raise ConfigError(f"config key {key}: value {raw} outside accepted range {rng}")
    return value


def parse_config(text: str, overrides: tuple[tuple[str, str], ...] = ()) -> RunConfig:
    """Parse flat ``key = value`` text plus override pairs into a RunConfig.

    Unknown keys are rejected with the offending name; every value is range
    checked against the schema.  Later assignments win.
    """
    assigned: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key=value, got {body!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        assigned[key] = _coerce(key, raw)
    for key, raw in overrides:
        if key not in SCHEMA:
            raise ConfigError(f"override: unknown config key {key!r}")
        assigned[key] = _coerce(key, raw)
    values = tuple(
        (key, assigned.get(key, default)) for key, (_, default, _, _) in SCHEMA.items()
    )
    return RunConfig(values)


# ---------------------------------------------------------------------------
# CSV + figure emission


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path: Path, echo: list[str], columns: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        for line in echo:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _figure_path(output: Path) -> Path:
    return output.with_suffix(".png")


def _save_figure(fig, output: Path) -> None:
    fig.savefig(_figure_path(output), dpi=150, bbox_inches="tight")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


# ---------------------------------------------------------------------------
# subcommand runners


def _cmd_trajectory(cfg: RunConfig, output: Path, workers: int) -> int:
    records = run_trajectory(
        cfg.trajectory_config(), sample_interval=cfg["protocol.sample_interval"]
    )
    rows = []
    for rec in records:
        for t, n in zip(rec.sample_times, rec.sample_occupations):
            rows.append(
                (rec.cycle_index, t, rec.outcome.r, rec.outcome.phi, rec.t_drive, n)
            )
    columns = ["cycle", "t", "xi_r", "xi_phi", "t_drive", "n"]
    write_csv(output, cfg.echo_lines("trajectory"), columns, rows)

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ts = np.array([r[1] for r in rows])
    ns = np.array([r[5] for r in rows])
    ax.plot(ts, ns, lw=1.0, color="tab:blue")
    marks = [rec.sample_times[0] for rec in records]
    ax.plot(marks, [rec.n_before for rec in records], "k.", ms=5, label="after measurement")
    if np.all(ns > 0.0):
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("occupation")
    ax.set_title(f"single trajectory, {len(records)} cycles")
    ax.legend(frameon=False)
    _save_figure(fig, output)
    plt.close(fig)
    print(f"trajectory: {len(records)} cycles, final n = {records[-1].n_after:.6g}")
    return EXIT_OK


def _cmd_ensemble(cfg: RunConfig, output: Path, workers: int) -> int:
    duration = cfg["protocol.duration"]
    tcfg = cfg.trajectory_config()
    if duration > 0.0:
        stats = run_fixed_drive_ensemble(
            tcfg,
            duration,
            cfg["protocol.n_traj"],
            sample_interval=cfg["protocol.sample_interval"],
            workers=workers,
        )
        xlabel = "t"
        bins = stats.bins
    else:
        stats = run_ensemble(tcfg, cfg["protocol.n_traj"], workers=workers)
        xlabel = "cycle"
        bins = stats.bins.astype(int)
    columns = ["cycle_or_t", "mean_n", "stderr_n", "n_samples"]
    rows = [
        (b, m, s, stats.n_samples)
        for b, m, s in zip(bins, stats.mean, stats.stderr)
    ]
    write_csv(output, cfg.echo_lines("ensemble"), columns, rows)

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    if duration > 0.0:
        ax.plot(stats.bins, stats.mean, color="tab:blue", lw=1.2, label="ensemble mean")
        ax.fill_between(
            stats.bins,
            stats.mean - stats.stderr,
            stats.mean + stats.stderr,
            alpha=0.3,
            color="tab:blue",
            lw=0,
        )
    else:
        ax.errorbar(stats.bins, stats.mean, yerr=stats.stderr, fmt="o-", ms=4, capsize=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("mean occupation")
    ax.set_title(f"{stats.n_samples} realizations")
    if duration > 0.0:
        ax.legend(frameon=False)
    _save_figure(fig, output)
    plt.close(fig)
    print(f"ensemble: {stats.n_samples} realizations, final mean n = {stats.mean[-1]:.6g}")
    return EXIT_OK


def _cmd_dissipative(cfg: RunConfig, output: Path, workers: int) -> int:
    stats = run_dissipative_protocol(
        cfg.trajectory_config(),
        cfg.bath(),
        n_traj=cfg["protocol.n_traj"],
        workers=workers,
        settings=cfg.solver(),
    )
    columns = ["cycle_or_t", "mean_n", "stderr_n", "n_samples"]
    rows = [
        (int(b), m, s, stats.n_samples)
        for b, m, s in zip(stats.bins, stats.mean, stats.stderr)
    ]
    write_csv(output, cfg.echo_lines("dissipative"), columns, rows)

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.errorbar(stats.bins, stats.mean, yerr=stats.stderr, fmt="o-", ms=4, capsize=3)
    ax.axhline(cfg["bath.nbar"], color="tab:red", ls="--", lw=1, label="bath occupation")
    ax.set_xlabel("cycle")
    ax.set_ylabel("mean occupation")
    gamma = cfg["bath.gamma"]
    ax.set_title(f"dissipative cooling, gamma = {gamma:g}")
    ax.legend(frameon=False)
    _save_figure(fig, output)
    plt.close(fig)
    print(
        f"dissipative: gamma = {gamma:g}, final mean n = {stats.mean[-1]:.6g} "
        f"(bath {cfg['bath.nbar']:g})"
    )
    return EXIT_OK


def _cmd_steady_state(cfg: RunConfig, output: Path, workers: int) -> int:
    grid = cfg.quad_grid()
    count = cfg["steady.r0_count"]
    r0_max = cfg["steady.r0_max"]
    r0s = np.linspace(0.0, r0_max, count) if count > 1 else np.array([r0_max])
    n_cycles = cfg["steady.n_cycles"]
    rows = []
    curves = []
    for r0 in r0s:
        seq = iterate_cycles(float(r0), n_cycles, grid)
        curves.append(seq)
        for j, n in enumerate(seq, start=1):
            rows.append((float(r0), j, n))
    columns = ["r0", "n_cycles", "n_expected"]
    write_csv(output, cfg.echo_lines("steady-state"), columns, rows)

    r_star, n_root = find_fixed_point(grid)
    plateau = curves[0][-1]
    print(f"fixed point: r* = {r_star:.10g}, n(r*) = {n_root:.10g}")
    print(f"iterated mean after {n_cycles} cycles (r0 = {r0s[0]:g}): {plateau:.10g}")
    print(f"steady-state occupation n_f = {plateau:.3g}")

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    cycles = np.arange(1, n_cycles + 1)
    for r0, seq in zip(r0s, curves):
        ax.plot(cycles, seq, "o-", ms=4, label=f"r0 = {r0:g}")
    ax.axhline(n_root, color="k", ls="--", lw=1, label=f"fixed point {n_root:.3f}")
    ax.set_xlabel("cycle")
    ax.set_ylabel("expected occupation")
    ax.set_title("approach to the steady state")
    ax.legend(frameon=False)
    _save_figure(fig, output)
    plt.close(fig)
    return EXIT_OK


def _cmd_errors(cfg: RunConfig, output: Path, workers: int) -> int:
    drive = cfg.drive()
    ts = np.linspace(0.0, cfg["errors.t_max"], cfg["errors.n_points"])
    a_tt, b_tt = bogoliubov_from_samples(*pq_two_timescale(ts, drive))
    a_pt, b_pt = bogoliubov_perturbative(ts, drive)
    d_tt = np.abs(a_tt) ** 2 - np.abs(b_tt) ** 2 - 1.0
    d_pt = np.abs(a_pt) ** 2 - np.abs(b_pt) ** 2 - 1.0
    d_pred = defect_predicted_two_timescale(ts, drive)
    columns = ["t", "defect_two_timescale", "defect_perturbative", "defect_predicted"]
    rows = list(zip(ts, d_tt, d_pt, d_pred))
    write_csv(output, cfg.echo_lines("errors"), columns, rows)

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(ts, d_tt, lw=1.2, label="two-timescale")
    ax.plot(ts, d_pt, lw=1.2, label="perturbative")
    ax.plot(ts, d_pred, "k--", lw=1.0, label="predicted")
    ax.set_xlabel("t")
    ax.set_ylabel("normalization defect")
    ax.set_title(f"Bogoliubov defect, lambda = {drive.lam:g}")
    ax.legend(frameon=False)
    _save_figure(fig, output)
    plt.close(fig)
    print(f"errors: max |two-timescale defect| = {np.max(np.abs(d_tt)):.3g}")
    return EXIT_OK


def _cmd_squeezing(cfg: RunConfig, output: Path, workers: int) -> int:
    drive = cfg.drive()
    t_max = cfg["squeeze.t_max"]
    traj = solve_j_odes(drive, t_max, cfg.solver())
    ts = np.linspace(0.0, t_max, cfg["squeeze.n_points"])
    rows = []
    rsqs = []
    for t in ts:
        dec = decompose(traj(float(t)))
        rsqs.append(dec.r_sq)
        rows.append((t, dec.r_sq, dec.theta_sq, dec.varphi, float(rsq_linear(t, drive))))
    columns = ["t", "r_sq", "theta_sq", "varphi", "r_sq_linear"]
    write_csv(output, cfg.echo_lines("squeezing"), columns, rows)

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(ts, rsqs, lw=1.2, label="r_sq(t)")
    ax.plot(ts, drive.lam * ts, "k--", lw=1.0, label="lambda t")
    ax.set_xlabel("t")
    ax.set_ylabel("squeeze parameter")
    ax.set_title(f"accumulated squeezing, lambda = {drive.lam:g}")
    ax.legend(frameon=False)
    _save_figure(fig, output)
    plt.close(fig)
    print(f"squeezing: r_sq({t_max:g}) = {rsqs[-1]:.6g}")
    return EXIT_OK


def _cmd_validate(cfg: RunConfig, output, workers: int) -> int:
    """Cross-check the Gaussian pipeline against the truncated-Fock oracle."""
    checks: list[tuple[str, float, float]] = []  # name, error, tolerance

    v = coherent_fock(CoherentState(1.0, 0.0), 60)
    checks.append(("coherent expansion occupation", abs(v.occupation - 1.0), 1e-12))

    drive = DriveParams(lam=0.02, phi_p=math.pi / 2.0)
    t_end = 13.0 * math.pi
    evolved = evolve_fock(coherent_fock(CoherentState(1.0, 0.0), 200), drive, t_end)
    pq = solve_pq(drive, t_end)
    bog = bogoliubov_from_samples(*pq(t_end))
    a2 = np.abs(bog.alpha + bog.beta) ** 2
    b2 = np.abs(bog.beta) ** 2
    n_gauss = a2 * 1.0 + b2  # A r^2 + B with r = 1
    checks.append(("driven evolution vs Gaussian", abs(evolved.occupation - n_gauss), 1e-3))

    drive_vac = DriveParams(lam=0.01, phi_p=math.pi / 2.0)
    vac = evolve_fock(coherent_fock(CoherentState(0.0, 0.0), 200), drive_vac, 50.0)
    pq_vac = solve_pq(drive_vac, 50.0)
    bog_vac = bogoliubov_from_samples(*pq_vac(50.0))
    checks.append(
        ("vacuum heating vs |beta|^2", abs(vac.occupation - abs(bog_vac.beta) ** 2), 1e-4)
    )

    z = -math.log(5.0) / 4.0
    squeezed = squeeze_fock(coherent_fock(CoherentState(1.0, 0.0), 120), z, 120)
    checks.append(
        ("optimal squeeze floor", abs(squeezed.occupation - (math.sqrt(5.0) - 1.0) / 2.0), 1e-9)
    )

    r_sq, xi0 = 0.4, 1.0
    base = squeeze_fock(coherent_fock(CoherentState(xi0, 0.0), 160), -r_sq, 160)
    worst = 0.0
    for u in (-1.0, 0.0, 0.8, 1.6):
        for vv in (-1.2, 0.0, 0.9):
            xi1 = complex(u, vv)
            amp = fock_overlap(coherent_fock(CoherentState(abs(xi1), math.atan2(vv, u)), 160), base)
            direct = abs(amp) ** 2 / math.pi
            kernel = float(squeezed_coherent_prob(xi1, xi0, r_sq))
            worst = max(worst, abs(direct - kernel))
    checks.append(("heterodyne kernel vs overlap", worst, 1e-6))

    failed = 0
    for name, err, tol in checks:
        ok = err <= tol
        failed += 0 if ok else 1
        print(f"{'PASS' if ok else 'FAIL'}  {name}: error {err:.3g} (tol {tol:g})")
    if failed:
        print(f"validate: {failed}/{len(checks)} checks failed")
        return EXIT_VALIDATION
    print(f"validate: all {len(checks)} checks passed")
    return EXIT_OK


RUNNERS = {
    "trajectory": _cmd_trajectory,
    "ensemble": _cmd_ensemble,
    "dissipative": _cmd_dissipative,
    "steady-state": _cmd_steady_state,
    "errors": _cmd_errors,
    "squeezing": _cmd_squeezing,
    "validate": _cmd_validate,
}

NEEDS_OUTPUT = frozenset(RUNNERS) - {"validate"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="paramcool",
        description="Parametric feedback cooling of a harmonic oscillator.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name, help=f"run the {name} computation")
        p.add_argument("--config", type=Path, help="flat key=value config file")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one config key (repeatable)",
        )
        p.add_argument("--seed", type=int, help="shortcut for --set seed=N")
        p.add_argument("--workers", type=int, default=1, help="worker threads")
        if name in NEEDS_OUTPUT:
            p.add_argument("--output", type=Path, required=True, help="CSV output path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = ""
        if args.config is not None:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}") from None
        overrides = []
        for item in args.overrides:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            key, raw = item.split("=", 1)
            overrides.append((key.strip(), raw.strip()))
        if args.seed is not None:
            overrides.append(("seed", str(args.seed)))
        cfg = parse_config(text, tuple(overrides))
        output = getattr(args, "output", None)
        if output is not None:
            output.parent.mkdir(parents=True, exist_ok=True)
        return RUNNERS[args.subcommand](cfg, output, max(1, args.workers))
    except ConfigError as exc:
        print(f"paramcool: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"paramcool: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, TruncationError, QuadratureError) as exc:
        print(f"paramcool: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
