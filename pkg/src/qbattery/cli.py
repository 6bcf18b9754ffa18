"""Command-line interface: run the figure pipelines, write CSV/JSON/SVG.

Flags override values from an optional JSON config file.  Energies are
emitted in units of N*omega0 and times as x = sqrt(N) g t unless
--raw-units is given.  Outputs are deterministic: the embedded manifest
holds the resolved configuration and tool version, wall time goes to
stderr only.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .states import ChargerStateSpec, CHARGER_KINDS, CutoffOverflowError, TruncationError
from .dynamics import EigensolverError, ModelSpec
from .ergotropy import ergotropy as _ergotropy
from .ergotropy import flat_bound_check, reduce_to_battery, sorted_spectrum
from .analysis import (
    DEFAULT_G_OVER_OMEGA,
    GridSpec,
    build_system,
    hp_closed_form,
    optimal_time,
    subset_curve,
    sweep_over_N,
    trace_protocol,
)

COMMANDS = ("trace", "sweep", "subset", "dicke", "bound-check", "hp-compare")
FORMATS = ("csv", "json", "svg")

WORKERS_ENV = "QBATTERY_WORKERS"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    model: str = "tc"
    omega0: float = 1.0
    g: float | None = None
    g_over_omega: float | None = None
    n: int | None = None
    n_list: list[int] = field(default_factory=list)
    states: list[str] = field(default_factory=list)
    x_max: float = math.pi
    samples: int = 256
    coarse: int = 256
    refine_rel_tol: float = 1e-6
    trunc_tol: float = 1e-8
    cutoff_ceiling: int | None = None
    denominator: str = "ergotropy"
    raw_units: bool = False
    output: str | None = None
    fmt: str = "csv"
    workers: int = 1

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.model not in ("tc", "dicke"):
            raise ConfigError(f"model must be tc or dicke, got {self.model!r}")
        if self.omega0 <= 0:
            raise ConfigError(f"omega0 must be positive, got {self.omega0}")
        if self.g is not None and self.g <= 0:
            raise ConfigError(f"g must be positive, got {self.g}")
        if self.g_over_omega is not None and self.g_over_omega <= 0:
            raise ConfigError(f"g-over-omega must be positive, got {self.g_over_omega}")
        if self.x_max <= 0:
            raise ConfigError(f"x-max must be positive, got {self.x_max}")
        if self.samples < 64:
            raise ConfigError(f"samples must be >= 64, got {self.samples}")
        if self.coarse < 256:
            raise ConfigError(f"coarse grid must be >= 256, got {self.coarse}")
        if not 0 < self.trunc_tol <= 1e-4:
            raise ConfigError(f"trunc-tol must be in (0, 1e-4], got {self.trunc_tol}")
        if self.denominator not in ("ergotropy", "mean_energy"):
            raise ConfigError(f"denominator must be ergotropy or mean_energy")
        if self.fmt not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        for state in self.states:
            if state not in CHARGER_KINDS:
                raise ConfigError(f"unknown charger state {state!r}")
        for n in self.n_list:
            if n < 1:
                raise ConfigError(f"qubit counts must be >= 1, got {n}")
        if self.n is not None and self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")

    def resolved_g(self) -> float:
        if self.g is not None:
            return self.g
        if self.g_over_omega is not None:
            return self.g_over_omega * self.omega0
        return DEFAULT_G_OVER_OMEGA * self.omega0

    def grid(self) -> GridSpec:
        return GridSpec(x_max=self.x_max, coarse_points=self.coarse,
                        refine_rel_tol=self.refine_rel_tol)

    def manifest(self) -> dict:
        return {
            "command": self.command,
            "model": self.model,
            "omega0": self.omega0,
            "g": self.resolved_g(),
            "n": self.n,
            "n_list": self.n_list,
            "states": self.states,
            "x_max": self.x_max,
            "samples": self.samples,
            "coarse": self.coarse,
            "refine_rel_tol": self.refine_rel_tol,
            "trunc_tol": self.trunc_tol,
            "denominator": self.denominator,
            "raw_units": self.raw_units,
            "version": __version__,
        }


def _parse_n_list(text: str) -> list[int]:
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse qubit list {text!r}: {exc}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbattery",
        description="charge a qubit battery from a cavity mode and analyze extractable work",
    )
    parser.add_argument("--version", action="version", version=f"qbattery {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, needs_n=False, needs_list=False, multi_state=False):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--omega0", type=float, default=None, help="shared frequency (default 1.0)")
        p.add_argument("--g", type=float, default=None, help="coupling strength")
        p.add_argument("--g-over-omega", type=float, default=None, dest="g_over_omega",
                       help="coupling in units of omega0")
        if needs_n:
            p.add_argument("--n", type=int, default=None, help="number of battery qubits")
        if needs_list:
            p.add_argument("--n", type=str, default=None, dest="n_text",
                           help="qubit counts: 2..12 or 4,6,8")
        if multi_state:
            p.add_argument("--states", type=str, default=None,
                           help="comma-separated charger states (fock,coherent,squeezed)")
        else:
            p.add_argument("--state", type=str, default=None,
                           help="charger state: fock, coherent, or squeezed")
        p.add_argument("--x-max", type=float, default=None, dest="x_max",
                       help="window edge in sqrt(N) g t units (default pi)")
        p.add_argument("--samples", type=int, default=None, help="trace samples (>= 64)")
        p.add_argument("--coarse", type=int, default=None, help="coarse search points (>= 256)")
        p.add_argument("--trunc-tol", type=float, default=None, dest="trunc_tol",
                       help="truncation tolerance on leaked probability")
        p.add_argument("--raw-units", action="store_true", default=None, dest="raw_units",
                       help="emit raw times (1/omega0) and energies (omega0)")
        p.add_argument("--output", help="output path (default: stdout; required for svg)")
        p.add_argument("--format", default=None, dest="fmt", choices=FORMATS)

    p = sub.add_parser("trace", help="charging trace: energies, ergotropy, ratio vs time")
    common(p, needs_n=True)
    p.add_argument("--model", choices=("tc", "dicke"), default=None)
    p.add_argument("--cutoff-ceiling", type=int, default=None, dest="cutoff_ceiling",
                   help="hard ceiling for the photon cutoff search")

    p = sub.add_parser("sweep", help="optimal-time quantities and scaling fits vs N")
    common(p, needs_list=True, multi_state=True)
    p.add_argument("--model", choices=("tc", "dicke"), default=None)

    p = sub.add_parser("subset", help="extractable fraction from M-qubit subsets")
    common(p, needs_n=True, multi_state=True)
    p.add_argument("--model", choices=("tc", "dicke"), default=None)
    p.add_argument("--denominator", choices=("ergotropy", "mean_energy"), default=None)

    p = sub.add_parser("dicke", help="counter-rotating-model sweep over N")
    common(p, needs_list=True, multi_state=True)

    p = sub.add_parser("bound-check", help="rank-based extractability bound per N")
    common(p, needs_list=True, multi_state=True)

    p = sub.add_parser("hp-compare", help="exact trace vs the bosonic closed form")
    common(p, needs_n=True)
    return p


def _merge_config(args: argparse.Namespace) -> RunConfig:
    file_values = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from None
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")

    def pick(name, default=None):
        flag = getattr(args, name, None)
        if flag is not None:
            return flag
        if name in file_values:
            return file_values[name]
        return default

    states = pick("states")
    if states is None:
        state = pick("state")
        states = [state] if state else []
    elif isinstance(states, str):
        states = [part.strip() for part in states.split(",") if part.strip()]

    n_list = pick("n_list")
    n_text = getattr(args, "n_text", None)
    if n_text is not None:
        n_list = _parse_n_list(n_text)
    elif isinstance(n_list, str):
        n_list = _parse_n_list(n_list)

    model = "dicke" if args.command == "dicke" else pick("model", "tc")
    config = RunConfig(
        command=args.command,
        model=model,
        omega0=float(pick("omega0", 1.0)),
        g=pick("g"),
        g_over_omega=pick("g_over_omega"),
        n=pick("n"),
        n_list=list(n_list or []),
        states=list(states),
        x_max=float(pick("x_max", math.pi)),
        samples=int(pick("samples", 256)),
        coarse=int(pick("coarse", 256)),
        trunc_tol=float(pick("trunc_tol", 1e-8)),
        cutoff_ceiling=pick("cutoff_ceiling"),
        denominator=pick("denominator", "ergotropy"),
        raw_units=bool(pick("raw_units", False)),
        output=pick("output"),
        fmt=pick("fmt", "csv"),
        workers=int(os.environ.get(WORKERS_ENV, "1")),
    )
    config.validate()
    if config.model == "dicke" and config.g is None and config.g_over_omega is None:
        raise ConfigError("the counter-rotating model requires --g-over-omega (or --g)")
    return config


# ------------------------------------------------------------------ commands


def _model_for(config: RunConfig, n: int) -> ModelSpec:
    return ModelSpec(model=config.model, omega0=config.omega0,
                     g=config.resolved_g(), n_qubits=n)


def _need(config: RunConfig, what: str):
    if what == "n" and config.n is None:
        raise ConfigError(f"{config.command} requires --n")
    if what == "states" and not config.states:
        raise ConfigError(f"{config.command} requires --state/--states")
    if what == "n_list" and not config.n_list:
        raise ConfigError(f"{config.command} requires --n")


def _cmd_trace(config: RunConfig) -> dict:
    _need(config, "n")
    _need(config, "states")
    n = config.n
    model = _model_for(config, n)
    trace = trace_protocol(model, ChargerStateSpec(config.states[0], n),
                           x_max=config.x_max, n_samples=config.samples,
                           trunc_tol=config.trunc_tol)
    scale = 1.0 if config.raw_units else 1.0 / (n * config.omega0)
    g_n = math.sqrt(n) * model.g
    t_col = trace.x / g_n if config.raw_units else trace.x
    columns = ["t" if config.raw_units else "x", "e_charger", "e_battery",
               "ergotropy", "ratio"]
    rows = [
        [float(t_col[i]), float(trace.e_charger[i] * scale),
         float(trace.e_battery[i] * scale), float(trace.ergotropy[i] * scale),
         float(trace.ratio[i])]
        for i in range(len(trace.x))
    ]
    return {"columns": columns, "rows": rows, "meta": {}}


def _sweep_like(config: RunConfig) -> dict:
    _need(config, "states")
    _need(config, "n_list")
    columns = ["state", "n", "x_bar", "tau_bar", "e_battery", "ergotropy",
               "power", "ratio", "rank"]
    rows = []
    fits_meta = {}
    for state in config.states:
        result = sweep_over_N(
            config.model, state, config.n_list, omega0=config.omega0,
            g=config.resolved_g(), grid=config.grid(),
            trunc_tol=config.trunc_tol, workers=config.workers,
        )
        for r in result.records:
            n = r.n_qubits
            e_scale = 1.0 if config.raw_units else 1.0 / (n * config.omega0)
            p_scale = 1.0 if config.raw_units else 1.0 / (n * result.g * config.omega0)
            rows.append([
                state, n, r.x_bar, r.tau_bar, r.e_battery * e_scale,
                r.ergotropy * e_scale, r.power * p_scale, r.ratio, r.rank,
            ])
        fits_meta[state] = {
            name: {"slope": fit.slope, "intercept": fit.intercept,
                   "stderr": fit.stderr, "ci95": fit.ci95, "n_points": fit.n_points}
            for name, fit in result.fits.items()
        }
    return {"columns": columns, "rows": rows, "meta": {"fits": fits_meta}}


def _cmd_subset(config: RunConfig) -> dict:
    _need(config, "n")
    _need(config, "states")
    columns = ["state", "m", "fraction"]
    rows = []
    for state in config.states:
        curve = subset_curve(
            _model_for(config, config.n), state,
            denominator=config.denominator, grid=config.grid(),
            trunc_tol=config.trunc_tol,
        )
        rows.extend([state, m, fraction] for m, fraction in curve)
    return {"columns": columns, "rows": rows,
            "meta": {"denominator": config.denominator}}


def _cmd_bound_check(config: RunConfig) -> dict:
    _need(config, "n_list")
    states = config.states or ["fock"]
    columns = ["state", "n", "rank", "locked", "k", "k_omega0", "holds", "gap"]
    rows = []
    for state in states:
        ranks = {}
        details = {}
        for n in config.n_list:
            model = _model_for(config, n)
            charger = ChargerStateSpec(state, n)
            system = build_system(model, charger, config.trunc_tol,
                                  x_probe_max=config.x_max)
            tau_bar, _ = optimal_time(model, charger, config.grid(), system=system)
            rho = system.battery_state_at_x(tau_bar * system.g_collective)
            rank = int(np.count_nonzero(sorted_spectrum(rho)))
            locked = rho.mean_energy() - _ergotropy(rho)
            ranks[n] = rank
            details[n] = (rho, rank, locked)
        # measured growth exponent of the rank, then k = its ceiling
        ns = np.array(sorted(ranks), dtype=float)
        if len(ns) >= 2:
            slope = float(np.polyfit(np.log(ns), np.log([ranks[int(n)] for n in ns]), 1)[0])
        else:
            slope = 1.0
        k = max(1, int(math.ceil(slope - 1e-9)))
        for n in config.n_list:
            rho, rank, locked = details[n]
            alpha = max(rank / n ** k for n, (_, rank, _) in details.items())
            holds, gap = flat_bound_check(rho, k=k, alpha=alpha, n_qubits=n,
                                          omega0=config.omega0)
            holds = holds and locked <= k * config.omega0 + 1e-9
            rows.append([state, n, rank, locked, k, k * config.omega0, holds, gap])
    return {"columns": columns, "rows": rows, "meta": {}}


def _cmd_hp_compare(config: RunConfig) -> dict:
    _need(config, "n")
    state = config.states[0] if config.states else "coherent"
    n = config.n
    model = _model_for(config, n)
    trace = trace_protocol(model, ChargerStateSpec(state, n),
                           x_max=config.x_max, n_samples=config.samples,
                           trunc_tol=config.trunc_tol)
    g_n = math.sqrt(n) * model.g
    scale = 1.0 if config.raw_units else 1.0 / (n * config.omega0)
    columns = ["t" if config.raw_units else "x", "e_battery_exact",
               "e_battery_bosonic", "rel_deviation"]
    rows = []
    for i, x in enumerate(trace.x):
        _, e_hp, _, _ = hp_closed_form(n, model.g, x / g_n, omega0=config.omega0)
        exact = float(trace.e_battery[i])
        rows.append([
            float(x / g_n) if config.raw_units else float(x),
            exact * scale, e_hp * scale,
            abs(exact - e_hp) / (n * config.omega0),
        ])
    return {"columns": columns, "rows": rows, "meta": {}}


_RUNNERS = {
    "trace": _cmd_trace,
    "sweep": _sweep_like,
    "dicke": _sweep_like,
    "subset": _cmd_subset,
    "bound-check": _cmd_bound_check,
    "hp-compare": _cmd_hp_compare,
}


# ------------------------------------------------------------------ emitters


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def emit_csv(series: dict, manifest: dict) -> str:
    lines = [f"# qbattery {__version__}"]
    lines.append("# manifest: " + json.dumps(manifest, sort_keys=True, separators=(",", ":")))
    for key, value in sorted(series.get("meta", {}).items()):
        lines.append(f"# {key}: " + json.dumps(value, sort_keys=True, separators=(",", ":")))
    lines.append(",".join(series["columns"]))
    for row in series["rows"]:
        lines.append(",".join(_fmt_value(v) for v in row))
    return "\n".join(lines) + "\n"


def _jsonable(value):
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if math.isnan(value) or math.isinf(value) else value
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def emit_json(series: dict, manifest: dict) -> str:
    payload = {
        "meta": {"manifest": manifest, **series.get("meta", {})},
        "series": {
            "columns": series["columns"],
            "rows": [[_jsonable(v) for v in row] for row in series["rows"]],
        },
    }
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def emit_svg(series: dict, manifest: dict) -> str:
    """Minimal static line plot: one polyline per numeric column after the first."""
    width, height = 720, 460
    margin = {"left": 70, "right": 20, "top": 20, "bottom": 50}
    columns = series["columns"]
    rows = [r for r in series["rows"] if all(not isinstance(v, str) for v in r)]
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]

    def finite(values):
        return [v for v in values if isinstance(v, (int, float)) and math.isfinite(v)]

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<!-- qbattery {__version__} manifest "
        + json.dumps(manifest, sort_keys=True, separators=(",", ":")).replace("--", "- -")
        + " -->",
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if rows:
        xs = [row[0] for row in rows]
        ys = finite([v for row in rows for v in row[1:]])
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = (min(ys), max(ys)) if ys else (0.0, 1.0)
        if x_hi == x_lo:
            x_hi = x_lo + 1.0
        if y_hi == y_lo:
            y_hi = y_lo + 1.0
        span_x = width - margin["left"] - margin["right"]
        span_y = height - margin["top"] - margin["bottom"]

        def px(x):
            return margin["left"] + (x - x_lo) / (x_hi - x_lo) * span_x

        def py(y):
            return height - margin["bottom"] - (y - y_lo) / (y_hi - y_lo) * span_y

        axis_y = height - margin["bottom"]
        parts.append(
            f'<line x1="{margin["left"]}" y1="{axis_y}" x2="{width - margin["right"]}" '
            f'y2="{axis_y}" stroke="black"/>'
        )
        parts.append(
            f'<line x1="{margin["left"]}" y1="{margin["top"]}" x2="{margin["left"]}" '
            f'y2="{axis_y}" stroke="black"/>'
        )
        for i in range(5):
            xv = x_lo + (x_hi - x_lo) * i / 4
            yv = y_lo + (y_hi - y_lo) * i / 4
            parts.append(
                f'<text x="{px(xv):.1f}" y="{axis_y + 18}" font-size="11" '
                f'text-anchor="middle">{xv:.3g}</text>'
            )
            parts.append(
                f'<text x="{margin["left"] - 8}" y="{py(yv):.1f}" font-size="11" '
                f'text-anchor="end">{yv:.3g}</text>'
            )
        x_label = "t (1/omega0)" if manifest.get("raw_units") else "sqrt(N) g t"
        y_label = "energy (omega0)" if manifest.get("raw_units") else "energy (N omega0)"
        parts.append(
            f'<text x="{width / 2:.0f}" y="{height - 12}" font-size="13" '
            f'text-anchor="middle">{x_label}</text>'
        )
        parts.append(
            f'<text x="16" y="{height / 2:.0f}" font-size="13" text-anchor="middle" '
            f'transform="rotate(-90 16 {height / 2:.0f})">{y_label}</text>'
        )
        for j, name in enumerate(columns[1:], start=1):
            pts = [
                f"{px(row[0]):.2f},{py(row[j]):.2f}"
                for row in rows
                if isinstance(row[j], (int, float)) and math.isfinite(row[j])
            ]
            color = palette[(j - 1) % len(palette)]
            parts.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                f'points="{" ".join(pts)}"/>'
            )
            parts.append(
                f'<text x="{width - margin["right"] - 6}" '
                f'y="{margin["top"] + 16 * j}" font-size="12" text-anchor="end" '
                f'fill="{color}">{name}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _write(text: str, output: str | None):
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    started = time.monotonic()
    try:
        config = _merge_config(args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    try:
        series = _RUNNERS[config.command](config)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except (CutoffOverflowError, TruncationError, EigensolverError,
            np.linalg.LinAlgError) as exc:
        print(f"error: numeric: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    if not series["rows"]:
        print("warning: empty series, writing header only", file=sys.stderr)
    manifest = config.manifest()
    if config.fmt == "csv":
        text = emit_csv(series, manifest)
    elif config.fmt == "json":
        text = emit_json(series, manifest)
    else:
        if config.output is None:
            print("error: config: svg output requires --output", file=sys.stderr)
            return 2
        text = emit_svg(series, manifest)
    try:
        _write(text, config.output)
    except OSError as exc:
        print(f"error: config: cannot write {config.output}: {exc}", file=sys.stderr)
        return 2
    print(f"done in {time.monotonic() - started:.2f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
