"""Command-line front end.

Commands: chi, metrics, approx, threshold, sweep. Every command accepts the
same flags; ``--config FILE`` loads a JSON object whose keys mirror the flag
names (dashes or underscores), and explicit flags override it.

Exit codes: 0 success, 2 invalid input, 3 a numerical solver failed.

CSV output always puts the strength in the first column. JSON output carries
``"schema": 1``. The only environment variable read is ``QECCHI_THREADS``,
the number of worker threads used to evaluate strength grids.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np

from .analysis import (
    METRICS,
    THRESHOLD_CURVES,
    THRESHOLD_STRENGTHS,
    FitError,
    find_threshold,
    metric_value,
    physical_chi,
)
from .approximator import VARIANTS, InfeasibleApproximationError, approximate
from .channels import TAGS, ChannelModel, KrausChannel, check_chi, chi_from_kraus, kraus_of_model
from .metrics import metric_report
from .qec import BITFLIP_NOISE, CODE_NAMES, CodeSpec, LeakageError, build_code, logical_chi
from .qp import QPSolverError
from .sdp import SDPSolverError

SCHEMA = 1
COMMANDS = ("chi", "metrics", "approx", "threshold", "sweep")
FORMATS = ("text", "csv", "json")
APPROX_NAMES = {v.lower(): v for v in VARIANTS}
CHANNEL_NAMES = tuple(t for t in TAGS if t not in ("Pauli", "CMCMixture")) + BITFLIP_NOISE
THREADS_ENV = "QECCHI_THREADS"

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    channel: str | dict = "ADC"
    strengths: list[float] = field(default_factory=lambda: [1e-3])
    code: str | dict | None = None
    metrics: list[str] = field(default_factory=lambda: list(METRICS))
    approx: str | None = None
    level: str = "physical"
    out: str | None = None
    format: str = "text"
    states: int = 150
    precision: int = 6
    curve: str = "fit"

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.level not in ("physical", "logical"):
            raise ConfigError("level must be 'physical' or 'logical'")
        if self.level == "logical" and self.code is None:
            raise ConfigError("logical level needs --code")
        if self.command == "threshold" and self.code is None:
            raise ConfigError("threshold needs --code")
        if not self.strengths or any(not np.isfinite(s) or s < 0 for s in self.strengths):
            raise ConfigError("strengths must be finite and non-negative")
        if self.command in ("threshold", "sweep") and any(np.diff(self.strengths) <= 0):
            raise ConfigError("strengths must be strictly increasing")
        unknown = [m for m in self.metrics if m not in METRICS]
        if unknown or not self.metrics:
            raise ConfigError(f"metrics must be drawn from {METRICS}, got {self.metrics}")
        if self.approx is not None and self.approx.lower() not in APPROX_NAMES:
            raise ConfigError(f"approx must be one of {sorted(APPROX_NAMES)}")
        if self.command == "approx" and self.approx is None:
            raise ConfigError("approx needs --approx")
        if self.states < 2:
            raise ConfigError("states must be at least 2")
        if self.curve not in THRESHOLD_CURVES:
            raise ConfigError(f"curve must be one of {THRESHOLD_CURVES}")
        if not isinstance(self.channel, dict) and self.channel not in CHANNEL_NAMES:
            raise ConfigError(f"unknown channel {self.channel!r}; expected one of {CHANNEL_NAMES} or a JSON object")
        if isinstance(self.code, str) and self.code not in CODE_NAMES:
            raise ConfigError(f"unknown code {self.code!r}; expected one of {CODE_NAMES} or a JSON object")
        return self

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        norm = {k.replace("-", "_"): v for k, v in data.items()}
        if "metric" in norm:
            m = norm.pop("metric")
            norm["metrics"] = [m] if isinstance(m, str) else m
        unknown = sorted(set(norm) - names)
        if unknown:
            raise ConfigError(f"unknown configuration keys {unknown}")
        if "command" not in norm:
            raise ConfigError("configuration needs a 'command'")
        if "strength" in data:
            raise ConfigError("use 'strengths' (a list) in configuration files")
        try:
            cfg = cls(**norm)
            cfg.strengths = [float(s) for s in cfg.strengths]
            cfg.states = int(cfg.states)
            cfg.precision = int(cfg.precision)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cfg.validate()


# --- channel and code parsing ---------------------------------------------------

def _parse_matrix(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def channel_chi(spec: str | dict, strength: float) -> np.ndarray:
    """Process matrix for a channel name or a JSON object {tag, strength, extra, kraus}."""
    if isinstance(spec, str):
        return physical_chi(spec, strength)
    unknown = set(spec) - {"tag", "strength", "extra", "kraus"}
    if unknown:
        raise ConfigError(f"unknown channel fields {sorted(unknown)}")
    if "kraus" in spec:
        return chi_from_kraus(KrausChannel(tuple(_parse_matrix(k) for k in spec["kraus"]), spec.get("tag", "custom")))
    tag = spec.get("tag")
    if tag in BITFLIP_NOISE:
        return physical_chi(tag, spec.get("strength", strength))
    model = ChannelModel(tag, spec.get("strength", strength), tuple(spec.get("extra", ())))
    if "strength" not in spec:
        model = model.with_strength(strength)
    return chi_from_kraus(kraus_of_model(model))


def resolve_code(spec: str | dict | None) -> CodeSpec | None:
    if spec is None:
        return None
    if isinstance(spec, dict):
        return CodeSpec.from_dict(spec)
    return build_code(spec)


def _json_or_name(text: str | None):
    if text is None:
        return None
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from exc
    return text


# --- computations -------------------------------------------------------------------

def _chi_at(cfg: RunConfig, strength: float, code: CodeSpec | None) -> np.ndarray:
    chi = channel_chi(cfg.channel, strength)
    if cfg.approx is not None and cfg.command != "threshold":
        chi = approximate(chi, APPROX_NAMES[cfg.approx.lower()]).chi
    if cfg.level == "logical":
        chi = logical_chi(code, chi)
    return chi


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _map(fn, items: Sequence):
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))  # results come back in input order


def _complex_rows(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _fmt(z: complex, precision: int) -> str:
    re, im = float(np.real(z)), float(np.imag(z))
    re = 0.0 if re == 0 else re
    im = 0.0 if im == 0 else im
    return f"{re:+.{precision}e}{im:+.{precision}e}j"


def _header(cfg: RunConfig) -> dict:
    return {
        "schema": SCHEMA,
        "command": cfg.command,
        "channel": cfg.channel,
        "level": cfg.level,
        "code": cfg.code,
        "approx": APPROX_NAMES[cfg.approx.lower()] if cfg.approx else None,
    }


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def cmd_chi(cfg: RunConfig) -> str:
    code = resolve_code(cfg.code)
    chis = _map(lambda s: check_chi(_chi_at(cfg, s, code)), cfg.strengths)
    if cfg.format == "json":
        body = _header(cfg) | {"results": [{"strength": s, "chi": _complex_rows(c)} for s, c in zip(cfg.strengths, chis)]}
        return json.dumps(body, indent=2) + "\n"
    if cfg.format == "csv":
        rows = [[s, i, j, float(c[i, j].real), float(c[i, j].imag)] for s, c in zip(cfg.strengths, chis)
                for i in range(4) for j in range(4)]
        return _csv(["strength", "row", "col", "re", "im"], rows)
    out = []
    for s, c in zip(cfg.strengths, chis):
        out.append(f"# strength {s!r}")
        out.extend("  ".join(_fmt(z, cfg.precision) for z in row) for row in c)
    return "\n".join(out) + "\n"


_REPORT_COLUMNS = (
    "avg_error_rate", "error_rate_std", "avg_trace_distance", "trace_distance_std", "diamond", "diamond_gap",
)


def cmd_metrics(cfg: RunConfig) -> str:
    code = resolve_code(cfg.code)
    reports = _map(lambda s: metric_report(_chi_at(cfg, s, code), cfg.states), cfg.strengths)
    if cfg.format == "json":
        rows = [{"strength": s} | r.to_dict() for s, r in zip(cfg.strengths, reports)]
        return json.dumps(_header(cfg) | {"results": rows}, indent=2) + "\n"
    rows = [[s] + [getattr(r, c) for c in _REPORT_COLUMNS] for s, r in zip(cfg.strengths, reports)]
    if cfg.format == "csv":
        return _csv(("strength",) + _REPORT_COLUMNS, rows)
    lines = ["strength      " + "  ".join(f"{c:>20}" for c in _REPORT_COLUMNS)]
    lines += [f"{r[0]:<12.6g}  " + "  ".join(f"{v:>20.{cfg.precision}e}" for v in r[1:]) for r in rows]
    return "\n".join(lines) + "\n"


def cmd_approx(cfg: RunConfig) -> str:
    variant = APPROX_NAMES[cfg.approx.lower()]
    results = _map(lambda s: approximate(channel_chi(cfg.channel, s), variant), cfg.strengths)
    if cfg.format == "json":
        rows = [{"strength": s} | r.to_dict() for s, r in zip(cfg.strengths, results)]
        return json.dumps(_header(cfg) | {"results": rows}, indent=2) + "\n"
    rows = [
        [s, r.variant, r.hs_distance, r.honest, r.honesty_margin, m, float(w)]
        for s, r in zip(cfg.strengths, results)
        for m, w in zip(r.member_ids, r.weights)
        if w != 0
    ]
    return _csv(["strength", "variant", "hs_distance", "honest", "honesty_margin", "member_id", "weight"], rows)


def cmd_threshold(cfg: RunConfig) -> str:
    code = resolve_code(cfg.code)
    if not isinstance(cfg.channel, str):
        raise ConfigError("threshold needs a named channel family")
    strengths = cfg.strengths if len(cfg.strengths) >= 3 else list(THRESHOLD_STRENGTHS)
    variant = APPROX_NAMES[cfg.approx.lower()] if cfg.approx else None
    results = [
        find_threshold(cfg.channel, code, m, variant, strengths, curve=cfg.curve, n_states=cfg.states)
        for m in cfg.metrics
    ]
    if cfg.format == "json":
        return json.dumps(_header(cfg) | {"results": [r.to_dict() for r in results]}, indent=2) + "\n"
    rows = [
        [r.threshold_strength, r.metric, r.mode, r.status] + (list(r.bracket) if r.bracket else ["", ""])
        for r in results
    ]
    return _csv(["threshold_strength", "metric", "mode", "status", "bracket_lo", "bracket_hi"], rows)


def cmd_sweep(cfg: RunConfig) -> str:
    """Every requested metric over the strength grid, one row per strength."""
    code = resolve_code(cfg.code)

    def row(s):
        chi = _chi_at(cfg, s, code)
        return [s] + [metric_value(chi, m, cfg.states) for m in cfg.metrics]

    rows = _map(row, cfg.strengths)
    if cfg.format == "json":
        body = [{"strength": r[0]} | dict(zip(cfg.metrics, r[1:])) for r in rows]
        return json.dumps(_header(cfg) | {"results": body}, indent=2) + "\n"
    return _csv(["strength"] + list(cfg.metrics), rows)


_HANDLERS = {"chi": cmd_chi, "metrics": cmd_metrics, "approx": cmd_approx, "threshold": cmd_threshold, "sweep": cmd_sweep}
_DEFAULT_FORMAT = {"chi": "text", "metrics": "text", "approx": "json", "threshold": "csv", "sweep": "csv"}


# --- argument handling --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qecchi", description="Process matrices, error metrics and pseudo-thresholds.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file whose keys mirror the flags")
    p.add_argument("--channel", help=f"one of {', '.join(CHANNEL_NAMES)}, or a JSON object {{tag, strength, extra, kraus}}")
    p.add_argument("--strength", type=float, help="single error strength")
    p.add_argument("--strengths", help="comma-separated error strengths")
    p.add_argument("--code", help=f"one of {', '.join(CODE_NAMES)}, or a JSON code object")
    p.add_argument("--metric", action="append", choices=METRICS, help="repeatable; default: all metrics")
    p.add_argument("--approx", choices=sorted(APPROX_NAMES), type=str.lower)
    p.add_argument("--level", choices=("physical", "logical"))
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--states", type=int, help="Bloch-sphere sample size for averaged metrics")
    p.add_argument("--precision", type=int, help="significant digits in text output")
    p.add_argument("--curve", choices=THRESHOLD_CURVES, help="threshold from fitted or exactly evaluated curves")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        if data.get("command", args.command) != args.command:
            raise ConfigError(f"config is for command {data['command']!r}, not {args.command!r}")
    data["command"] = args.command
    if args.channel is not None:
        data["channel"] = _json_or_name(args.channel)
    if args.code is not None:
        data["code"] = _json_or_name(args.code)
    if args.strength is not None and args.strengths is not None:
        raise ConfigError("give either --strength or --strengths")
    if args.strength is not None:
        data["strengths"] = [args.strength]
    if args.strengths is not None:
        try:
            data["strengths"] = [float(s) for s in args.strengths.split(",") if s.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --strengths: {exc}") from exc
    if args.metric:
        data["metrics"] = args.metric
    for name in ("approx", "level", "out", "format", "states", "precision", "curve"):
        value = getattr(args, name)
        if value is not None:
            data[name] = value
    data.setdefault("format", _DEFAULT_FORMAT[args.command])
    if args.command == "threshold" and "strengths" not in data:
        data["strengths"] = list(THRESHOLD_STRENGTHS)
    if args.command == "threshold" and "metrics" not in data:
        data["metrics"] = ["error_rate"]
    if data.get("format") == "text" and args.command in ("approx", "threshold", "sweep"):
        data["format"] = "csv" if args.command != "approx" else "json"
    return RunConfig.from_mapping(data)


def run(cfg: RunConfig) -> str:
    text = _HANDLERS[cfg.command](cfg)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    return text


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
        text = run(cfg)
    except (SDPSolverError, QPSolverError, InfeasibleApproximationError, FitError, LeakageError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if not cfg.out:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
