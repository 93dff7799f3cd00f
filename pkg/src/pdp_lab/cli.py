"""Command-line entry point: config resolution, suite dispatch, report output.

A run is a pure function of the resolved config: the report's numeric payload
(everything except the "meta" section) is byte-identical across repeated runs,
platforms, and worker counts. Machine facts (wall clock, version, workers) are
quarantined in "meta" so they cannot leak into the payload.

Exit codes: 0 when verification passes or the experiment is a plain sampler,
1 when a verification suite fails, 2 for config/usage errors, 3 when a
resource guard stops a computation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass, fields
from typing import Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .asymptotics import PD_ROUTES
from .errors import ResourceLimitError
from .suites import CSV_COLUMNS, EXPERIMENTS, RUNNERS, SuiteResult, family_from_spec

SAMPLER_EXPERIMENTS = ("sample", "urn", "posterior")

_USAGE_EXIT = 2
_RESOURCE_EXIT = 3


class ConfigError(ValueError):
    """An invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    """Everything a run depends on, resolved before any computation starts."""

    experiment: str
    alpha: Optional[float] = None
    theta: Optional[float] = None
    alphas: Optional[Tuple[float, ...]] = None
    thetas: Optional[Tuple[float, ...]] = None
    kappa: Optional[float] = None
    kappas: Optional[Tuple[float, ...]] = None
    n: Optional[int] = None
    n_list: Optional[Tuple[int, ...]] = None
    replicates: Optional[int] = None
    base: Optional[str] = None
    truth: Optional[str] = None
    truth_points: Optional[Tuple[float, ...]] = None
    truth_probs: Optional[Tuple[float, ...]] = None
    breakpoints: Optional[Tuple[float, ...]] = None
    family: Optional[list] = None
    eps: Optional[float] = None
    fixed_k: Optional[int] = None
    eps_policy: str = "auto"
    stick_budget: Optional[float] = None
    route: str = "compose"
    p_min: float = 0.001
    cov_tol: float = 0.15
    master_seed: int = 0
    out: Optional[str] = None
    format: str = "json"
    workers: int = 0  # 0 means "machine parallelism", resolved in validate()

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"experiment must be one of {', '.join(EXPERIMENTS)}; got {self.experiment!r}"
            )
        if self.alpha is not None and not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"alpha must satisfy 0 <= alpha < 1; got {self.alpha!r}")
        if self.alphas is not None:
            for v in self.alphas:
                if not 0.0 <= v < 1.0:
                    raise ConfigError(f"alphas entries must satisfy 0 <= alpha < 1; got {v!r}")
        alpha_grid = self.alphas if self.alphas is not None else (
            (self.alpha,) if self.alpha is not None else (0.0,)
        )
        theta_grid = self.thetas if self.thetas is not None else (
            (self.theta,) if self.theta is not None else ()
        )
        for t in theta_grid:
            for a in alpha_grid:
                if t <= -a:
                    raise ConfigError(
                        f"theta must exceed -alpha; got theta={t!r} with alpha={a!r}"
                    )
        for name, grid in (("kappa", (self.kappa,)), ("kappas", self.kappas or ())):
            for v in grid:
                if v is not None and v <= 0.0:
                    raise ConfigError(f"{name} must be positive; got {v!r}")
        if self.n is not None and self.n < 1:
            raise ConfigError(f"n must be at least 1; got {self.n!r}")
        if self.n_list is not None:
            if len(self.n_list) == 0 or any(v < 1 for v in self.n_list):
                raise ConfigError("n_list must be a nonempty list of sizes >= 1")
            if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
                raise ConfigError("n_list must be strictly increasing")
        if self.replicates is not None and self.replicates < 1:
            raise ConfigError(f"replicates must be at least 1; got {self.replicates!r}")
        if self.base is not None and self.base not in ("uniform01", "stdnormal"):
            raise ConfigError(f"base must be 'uniform01' or 'stdnormal'; got {self.base!r}")
        if self.truth is not None and self.truth not in ("uniform01", "stdnormal", "finite"):
            raise ConfigError(
                f"truth must be 'uniform01', 'stdnormal', or 'finite'; got {self.truth!r}"
            )
        if self.truth == "finite" and not self.truth_points:
            raise ConfigError("truth 'finite' requires truth_points")
        if self.truth_points is not None and self.truth_probs is not None:
            if len(self.truth_points) != len(self.truth_probs):
                raise ConfigError("truth_points and truth_probs must have equal length")
        if self.breakpoints is not None:
            if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
                raise ConfigError("breakpoints must be strictly increasing")
        if self.family is not None:
            try:
                family_from_spec(self.family)
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"invalid function family: {exc}") from exc
        if self.eps is not None and not 0.0 < self.eps < 1.0:
            raise ConfigError(f"eps must lie in (0, 1); got {self.eps!r}")
        if self.fixed_k is not None and self.fixed_k < 1:
            raise ConfigError(f"fixed_k must be at least 1; got {self.fixed_k!r}")
        if self.eps is not None and self.fixed_k is not None:
            raise ConfigError("eps and fixed_k are mutually exclusive truncation settings")
        if self.eps_policy not in ("auto", "pinned"):
            raise ConfigError(f"eps_policy must be 'auto' or 'pinned'; got {self.eps_policy!r}")
        if self.stick_budget is not None and self.stick_budget <= 0:
            raise ConfigError(f"stick_budget must be positive; got {self.stick_budget!r}")
        if self.route not in PD_ROUTES:
            raise ConfigError(f"route must be one of {PD_ROUTES}; got {self.route!r}")
        if not 0.0 < self.p_min < 0.5:
            raise ConfigError(f"p_min must lie in (0, 0.5); got {self.p_min!r}")
        if not 0.0 < self.cov_tol < 1.0:
            raise ConfigError(f"cov_tol must lie in (0, 1); got {self.cov_tol!r}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError(f"master_seed must be a uint64; got {self.master_seed!r}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be 'json' or 'csv'; got {self.format!r}")
        if self.workers < 0:
            raise ConfigError(f"workers must be nonnegative; got {self.workers!r}")
        if self.workers == 0:
            self.workers = os.cpu_count() or 1
        return self

    def resolved(self) -> dict:
        """The payload-determining fields, with Nones kept for transparency."""
        skip = {"out", "format", "workers"}
        out = {}
        for f in fields(self):
            if f.name in skip:
                continue
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


_TUPLE_FIELDS = {
    "alphas": float,
    "thetas": float,
    "kappas": float,
    "n_list": int,
    "truth_points": float,
    "truth_probs": float,
    "breakpoints": float,
}
_SCALAR_CASTS = {
    "alpha": float,
    "theta": float,
    "kappa": float,
    "n": int,
    "replicates": int,
    "eps": float,
    "fixed_k": int,
    "stick_budget": float,
    "p_min": float,
    "cov_tol": float,
    "master_seed": int,
    "workers": int,
}


def config_from_mapping(experiment: str, mapping: dict) -> ExperimentConfig:
    """Build a config from a JSON-style mapping, rejecting unknown keys."""
    known = {f.name for f in fields(ExperimentConfig)}
    kwargs = {}
    for key, value in mapping.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if key == "experiment":
            continue
        if value is None:
            kwargs[key] = None
        elif key in _TUPLE_FIELDS:
            try:
                kwargs[key] = tuple(_TUPLE_FIELDS[key](v) for v in value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r} must be a list of numbers") from exc
        elif key in _SCALAR_CASTS:
            try:
                kwargs[key] = _SCALAR_CASTS[key](value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r} has invalid value {value!r}") from exc
        else:
            kwargs[key] = value
    return ExperimentConfig(experiment=experiment, **kwargs)


def _jsonable(obj):
    """Recursively convert numpy scalars and arrays for serialization."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def run(config: ExperimentConfig) -> dict:
    """Execute one experiment and assemble its report."""
    config.validate()
    start = time.perf_counter()
    suite: SuiteResult = RUNNERS[config.experiment](config)
    wall = time.perf_counter() - start
    report = {
        "config": _jsonable(config.resolved()),
        "suites": [_jsonable(suite.to_dict())],
        "overall_pass": bool(suite.passed),
        "meta": {
            "wall_clock_s": round(wall, 3),
            "version": __version__,
            "workers": config.workers,
        },
    }
    return report


def payload(report: dict) -> dict:
    """The deterministic part of a report: everything except "meta"."""
    return {k: v for k, v in report.items() if k != "meta"}


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(report: dict, fmt: str = "json") -> str:
    """Serialize a report; CSV flattens the rows for plotting pipelines."""
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True)
    if fmt != "csv":
        raise ConfigError(f"format must be 'json' or 'csv'; got {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for suite in report.get("suites", []):
        for row in suite.get("rows", []):
            writer.writerow([_csv_cell(row.get(col)) for col in CSV_COLUMNS])
    return buf.getvalue()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdp-lab",
        description="Samplers and verification suites for two-parameter "
        "Poisson-Dirichlet random measures.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--theta", type=float)
    parser.add_argument("--kappa", type=float)
    parser.add_argument("--n", type=int)
    parser.add_argument("--replicates", "-M", type=int, dest="replicates")
    parser.add_argument("--seed", type=int, dest="master_seed")
    parser.add_argument("--eps", type=float, help="tail-mass truncation level")
    parser.add_argument("--fixed-k", type=int, dest="fixed_k", help="fixed atom count")
    parser.add_argument("--eps-policy", choices=("auto", "pinned"), dest="eps_policy")
    parser.add_argument("--route", choices=PD_ROUTES)
    parser.add_argument("--base", choices=("uniform01", "stdnormal"))
    parser.add_argument("--p-min", type=float, dest="p_min")
    parser.add_argument("--cov-tol", type=float, dest="cov_tol")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=("json", "csv"))
    parser.add_argument("--workers", type=int, help="worker processes (default: all cores)")
    return parser


def _overlay_flags(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    for name in (
        "alpha",
        "theta",
        "kappa",
        "n",
        "replicates",
        "master_seed",
        "eps",
        "fixed_k",
        "eps_policy",
        "route",
        "base",
        "p_min",
        "cov_tol",
        "out",
        "format",
        "workers",
    ):
        value = getattr(args, name, None)
        if value is not None:
            setattr(config, name, value)
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            try:
                with open(args.config, "r", encoding="utf-8") as fh:
                    mapping = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file is not valid JSON: {exc}") from exc
            if not isinstance(mapping, dict):
                raise ConfigError("config file must contain a JSON object")
            config = config_from_mapping(args.experiment, mapping)
        else:
            config = ExperimentConfig(experiment=args.experiment)
        config = _overlay_flags(config, args)
        report = run(config)
        text = emit(report, config.format)
        if config.out:
            try:
                with open(config.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            except OSError as exc:
                raise ConfigError(f"cannot write output file: {exc}") from exc
        else:
            sys.stdout.write(text + ("\n" if not text.endswith("\n") else ""))
    except ConfigError as exc:
        print(f"pdp-lab: error: {exc}", file=sys.stderr)
        return _USAGE_EXIT
    except ResourceLimitError as exc:
        print(f"pdp-lab: resource limit: {exc}", file=sys.stderr)
        return _RESOURCE_EXIT
    if report["overall_pass"] or config.experiment in SAMPLER_EXPERIMENTS:
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
