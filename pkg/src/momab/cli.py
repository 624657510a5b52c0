"""Command-line front end: run experiments, self-check, and re-plot.

Outputs of ``momab run`` land in one directory: ``manifest.json`` (written
before any trial starts, echoing the fully resolved configuration),
``traces.csv`` (per-trial cumulative regret), ``summary.csv`` (across-trial
mean/std/band per recorded round) and one ``regret_<suite>.svg`` per suite
present in the algorithm list.  Re-running with the manifest as the config
file reproduces the CSVs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .algorithms import ALGORITHMS, NSW_SUITE, PARETO_SUITE
from .environment import ConfigError, ExperimentConfig
from .harness import (
    AggregateResult,
    ExperimentError,
    ExperimentResult,
    run_experiment,
    run_trial,
)

log = logging.getLogger("momab")


class CliError(Exception):
    """Bad invocation or bad input file; maps to exit status 2."""


# Kebab-case keys, named exactly like the long flags, mapped to config fields.
KEY_TO_FIELD = {
    "n-agents": "n_agents",
    "n-arms": "n_arms",
    "dims": "n_dims",
    "horizon": "horizon",
    "link-prob": "link_prob",
    "het-scale": "het_scale",
    "trials": "n_trials",
    "seed": "master_seed",
    "record-every": "record_every",
    "nsw-explore-alpha": "nsw_explore_alpha",
    "consensus-coeff": "consensus_coeff",
    "elim-consensus-coeff": "elim_consensus_coeff",
    "solver-restarts": "solver_restarts",
    "solver-max-iters": "solver_max_iters",
    "solver-tol": "solver_tol",
    "workers": "workers",
}

_INT_KEYS = {
    "n-agents",
    "n-arms",
    "dims",
    "horizon",
    "trials",
    "seed",
    "record-every",
    "solver-restarts",
    "solver-max-iters",
    "workers",
}
_FLOAT_KEYS = {
    "link-prob",
    "het-scale",
    "consensus-coeff",
    "elim-consensus-coeff",
    "solver-tol",
}

SUITE_DEFAULTS: dict[str, dict[str, Any]] = {
    "pareto": {
        "n-agents": 8,
        "n-arms": 8,
        "dims": 3,
        "horizon": 150_000,
        "link-prob": 0.8,
        "het-scale": 0.2,
        "trials": 10,
    },
    "nsw": {
        "n-agents": 4,
        "n-arms": 5,
        "dims": 2,
        "horizon": 1500,
        "link-prob": 0.5,
        "het-scale": 0.2,
        "trials": 15,
    },
}

SUITE_ALGORITHMS = {"pareto": PARETO_SUITE, "nsw": NSW_SUITE}

TRACE_HEADER = ("algorithm", "trial", "t", "cumulative_regret")
SUMMARY_HEADER = ("algorithm", "t", "mean", "std", "band")


def _coerce(key: str, value: Any) -> Any:
    """Check and normalize one config value; raise CliError naming the key."""
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise CliError(f"config key '{key}': expected an integer, got {value!r}")
        if float(value) != int(value):
            raise CliError(f"config key '{key}': expected an integer, got {value!r}")
        return int(value)
    if key in _FLOAT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise CliError(f"config key '{key}': expected a number, got {value!r}")
        return float(value)
    if key == "nsw-explore-alpha":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                return value  # schedule tag; ExperimentConfig validates it
        raise CliError(f"config key '{key}': expected a number or 'sqrt:<c>'")
    raise CliError(f"unknown config key '{key}'")


def _split_algorithms(raw: Any) -> tuple[str, ...]:
    if isinstance(raw, str):
        names = tuple(part.strip() for part in raw.split(",") if part.strip())
    elif isinstance(raw, (list, tuple)):
        names = tuple(str(part) for part in raw)
    else:
        raise CliError("config key 'algorithms': expected a list or comma-joined string")
    if not names:
        raise CliError("config key 'algorithms': at least one algorithm id required")
    for name in names:
        if name not in ALGORITHMS:
            known = ", ".join(sorted(ALGORITHMS))
            raise CliError(f"unknown algorithm '{name}' (known: {known})")
    return names


def _load_config_file(path: str) -> dict[str, Any]:
    """Read a flat config JSON or a manifest; return the flat key dict.

    A manifest is recognized by its nested "config" object; its top-level
    "algorithms" and "suite" entries are folded into the flat dict so a
    manifest can be replayed directly with --config.
    """
    p = Path(path)
    if not p.is_file():
        raise CliError(f"config file not found: {path}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise CliError(f"config file {path} must hold a JSON object")
    if isinstance(data.get("config"), dict):
        flat = dict(data["config"])
        for carried in ("algorithms", "suite", "out"):
            if carried in data and carried not in flat:
                flat[carried] = data[carried]
        return flat
    return data


def _resolve_run_settings(
    args: argparse.Namespace,
) -> tuple[ExperimentConfig, tuple[str, ...], str | None, Path]:
    """Merge suite defaults, config file, and flags (flags win)."""
    file_values: dict[str, Any] = {}
    if args.config:
        file_values = _load_config_file(args.config)

    suite = args.suite or file_values.pop("suite", None)
    if suite is not None and suite not in SUITE_DEFAULTS:
        raise CliError(f"config key 'suite': expected 'pareto' or 'nsw', got {suite!r}")

    file_algorithms = file_values.pop("algorithms", None)
    file_out = file_values.pop("out", None)

    merged: dict[str, Any] = dict(SUITE_DEFAULTS.get(suite, {}))
    for key, value in file_values.items():
        if key not in KEY_TO_FIELD:
            raise CliError(f"unknown config key '{key}'")
        if value is not None:
            merged[key] = value
    for key in KEY_TO_FIELD:
        flag_value = getattr(args, KEY_TO_FIELD[key], None)
        if flag_value is not None:
            merged[key] = flag_value

    kwargs = {KEY_TO_FIELD[k]: _coerce(k, v) for k, v in merged.items()}
    config = ExperimentConfig(**kwargs)

    if args.algorithms is not None:
        algorithms = _split_algorithms(args.algorithms)
    elif file_algorithms is not None:
        algorithms = _split_algorithms(file_algorithms)
    else:
        algorithms = SUITE_ALGORITHMS[suite or "pareto"]

    out = args.out or file_out or os.environ.get("MOMAB_OUT") or "momab-run"
    return config, algorithms, suite, Path(out)


def config_echo(config: ExperimentConfig) -> dict[str, Any]:
    """Flat kebab-case dict that parses back to an identical config."""
    return {key: getattr(config, field) for key, field in KEY_TO_FIELD.items()}


def write_manifest(
    path: Path,
    config: ExperimentConfig,
    algorithms: Sequence[str],
    suite: str | None,
    extra: dict[str, Any] | None = None,
) -> None:
    from momab import __version__

    manifest: dict[str, Any] = {
        "version": __version__,
        "suite": suite,
        "algorithms": list(algorithms),
        "out": str(path.parent),
        "started_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": config_echo(config),
    }
    if extra:
        manifest.update(extra)
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def emit_traces_csv(path: Path, result: ExperimentResult, order: Sequence[str]) -> None:
    rank = {name: i for i, name in enumerate(order)}
    traces = sorted(result.traces, key=lambda tr: (rank[tr.algorithm], tr.trial))
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for trace in traces:
            for t, value in trace.samples:
                writer.writerow((trace.algorithm, trace.trial, t, "%.17g" % value))


def emit_summary_csv(path: Path, result: ExperimentResult, order: Sequence[str]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for name in order:
            agg = result.aggregates.get(name)
            if agg is None:
                continue
            for i, t in enumerate(agg.ts):
                writer.writerow(
                    (
                        name,
                        t,
                        "%.17g" % agg.mean[i],
                        "%.17g" % agg.std[i],
                        "%.17g" % agg.band[i],
                    )
                )


def read_summary_csv(path: Path) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Parse summary.csv back into per-algorithm (ts, mean, band) arrays."""
    if not path.is_file():
        raise CliError(f"summary file not found: {path}")
    rows: dict[str, list[tuple[int, float, float]]] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(SUMMARY_HEADER):
            raise CliError(f"{path} does not look like a summary.csv (bad header)")
        for row in reader:
            alg, t, mean, _std, band = row
            rows.setdefault(alg, []).append((int(t), float(mean), float(band)))
    out = {}
    for alg, triples in rows.items():
        triples.sort()
        ts = np.array([t for t, _, _ in triples], dtype=np.int64)
        mean = np.array([m for _, m, _ in triples])
        band = np.array([b for _, _, b in triples])
        out[alg] = (ts, mean, band)
    return out


# ---------------------------------------------------------------------------
# SVG emission.  Fixed canvas; data_to_pixel is the single source of truth
# for the coordinate transform so emitted files can be parsed back exactly.

PLOT_WIDTH = 960.0
PLOT_HEIGHT = 540.0
MARGIN_LEFT = 70.0
MARGIN_RIGHT = 20.0
MARGIN_TOP = 20.0
MARGIN_BOTTOM = 45.0

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def data_to_pixel(t: float, y: float, t_max: float, y_max: float) -> tuple[float, float]:
    span_x = PLOT_WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    span_y = PLOT_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    px = MARGIN_LEFT + (t / t_max) * span_x
    py = PLOT_HEIGHT - MARGIN_BOTTOM - (y / y_max) * span_y
    return px, py


def _points_attr(
    ts: Iterable[float], ys: Iterable[float], t_max: float, y_max: float
) -> str:
    pairs = []
    for t, y in zip(ts, ys):
        px, py = data_to_pixel(t, y, t_max, y_max)
        pairs.append(f"{px:.4f},{py:.4f}")
    return " ".join(pairs)


def _axis_elements(t_max: float, y_max: float) -> list[str]:
    left, bottom = MARGIN_LEFT, PLOT_HEIGHT - MARGIN_BOTTOM
    right, top = PLOT_WIDTH - MARGIN_RIGHT, MARGIN_TOP
    parts = [
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
    ]
    for i in range(5):
        frac = i / 4
        tx, _ = data_to_pixel(frac * t_max, 0.0, t_max, y_max)
        parts.append(
            f'<line x1="{tx:.4f}" y1="{bottom}" x2="{tx:.4f}" y2="{bottom + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{tx:.4f}" y="{bottom + 20}" font-size="12" text-anchor="middle">'
            f"{frac * t_max:g}</text>"
        )
        _, ty = data_to_pixel(0.0, frac * y_max, t_max, y_max)
        parts.append(
            f'<line x1="{left - 5}" y1="{ty:.4f}" x2="{left}" y2="{ty:.4f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{left - 8}" y="{ty + 4:.4f}" font-size="12" text-anchor="end">'
            f"{frac * y_max:.4g}</text>"
        )
    parts.append(
        f'<text x="{(left + right) / 2}" y="{PLOT_HEIGHT - 8}" font-size="13" '
        f'text-anchor="middle">t</text>'
    )
    parts.append(
        f'<text x="14" y="{(top + bottom) / 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 14 {(top + bottom) / 2})">cumulative regret</text>'
    )
    return parts


def emit_svg_plot(
    series: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]], path: Path
) -> None:
    """Write mean curves with mean +/- band shading for one suite."""
    if not series:
        raise ValueError("nothing to plot")
    t_max = max(float(ts[-1]) for ts, _, _ in series.values())
    y_max = max(float(np.max(mean + band)) for _, mean, band in series.values())
    if t_max <= 0:
        t_max = 1.0
    if y_max <= 0:
        y_max = 1.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_WIDTH:g}" '
        f'height="{PLOT_HEIGHT:g}" viewBox="0 0 {PLOT_WIDTH:g} {PLOT_HEIGHT:g}">',
        f'<rect width="{PLOT_WIDTH:g}" height="{PLOT_HEIGHT:g}" fill="white"/>',
    ]
    parts.extend(_axis_elements(t_max, y_max))
    for idx, (name, (ts, mean, band)) in enumerate(series.items()):
        color = PALETTE[idx % len(PALETTE)]
        upper = _points_attr(ts, mean + band, t_max, y_max)
        lower = _points_attr(ts[::-1], (mean - band)[::-1], t_max, y_max)
        parts.append(
            f'<polygon id="band-{name}" points="{upper} {lower}" fill="{color}" '
            f'fill-opacity="0.18" stroke="none"/>'
        )
        parts.append(
            f'<polyline id="mean-{name}" points="{_points_attr(ts, mean, t_max, y_max)}" '
            f'fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = MARGIN_TOP + 16 + 18 * idx
        parts.append(
            f'<line x1="{MARGIN_LEFT + 12}" y1="{ly}" x2="{MARGIN_LEFT + 40}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT + 46}" y="{ly + 4}" font-size="13">{name}</text>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")


def _emit_suite_plots(
    series: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]],
    order: Sequence[str],
    out_dir: Path,
) -> list[Path]:
    written = []
    for suite in ("pareto", "nsw"):
        group = {
            name: series[name]
            for name in order
            if name in series and ALGORITHMS[name].suite == suite
        }
        if group:
            target = out_dir / f"regret_{suite}.svg"
            emit_svg_plot(group, target)
            written.append(target)
    return written


# ---------------------------------------------------------------------------
# Subcommands.


def cmd_run(args: argparse.Namespace) -> int:
    config, algorithms, suite, out_dir = _resolve_run_settings(args)
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest_path = out_dir / "manifest.json"
    write_manifest(manifest_path, config, algorithms, suite)
    print(f"wrote {manifest_path}")

    result = run_experiment(config, algorithms)

    traces_path = out_dir / "traces.csv"
    summary_path = out_dir / "summary.csv"
    emit_traces_csv(traces_path, result, algorithms)
    emit_summary_csv(summary_path, result, algorithms)
    series = {
        name: (np.array(agg.ts, dtype=np.int64), agg.mean, agg.band)
        for name, agg in result.aggregates.items()
    }
    plots = _emit_suite_plots(series, algorithms, out_dir)

    write_manifest(
        manifest_path,
        config,
        algorithms,
        suite,
        extra={
            "finished_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "all_succeeded": result.all_succeeded,
        },
    )

    for path in (traces_path, summary_path, *plots):
        print(f"wrote {path}")
    for name in algorithms:
        agg = result.aggregates.get(name)
        n_failed = sum(1 for f in result.failures if f.algorithm == name)
        if agg is None:
            print(f"{name}: no successful trials")
        else:
            note = f" ({n_failed} of {config.n_trials} trials failed)" if n_failed else ""
            print(f"{name}: final mean cumulative regret {agg.mean[-1]:.6g}{note}")
    if not result.all_succeeded:
        print(f"{len(result.failures)} trial(s) failed; see log above", file=sys.stderr)
        return 1
    return 0


def _plot_order(series: dict[str, Any], out_dir: Path) -> list[str]:
    """Series order (and therefore coloring) for re-plots.

    The manifest's algorithm list keeps colors identical to the original run;
    without one, fall back to the canonical suite order.
    """
    manifest_path = out_dir / "manifest.json"
    if manifest_path.is_file():
        try:
            listed = json.loads(manifest_path.read_text(encoding="utf-8"))["algorithms"]
        except (json.JSONDecodeError, KeyError, TypeError):
            listed = []
        order = [name for name in listed if name in series]
        if order:
            return order + sorted(set(series) - set(order))
    canonical = [name for name in PARETO_SUITE + NSW_SUITE if name in series]
    return canonical + sorted(set(series) - set(canonical))


def cmd_plot(args: argparse.Namespace) -> int:
    out_dir = Path(args.dir or os.environ.get("MOMAB_OUT") or "momab-run")
    series = read_summary_csv(out_dir / "summary.csv")
    order = _plot_order(series, out_dir)
    plots = _emit_suite_plots(series, order, out_dir)
    if not plots:
        raise CliError(f"no plottable series found in {out_dir / 'summary.csv'}")
    for path in plots:
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# Self-checks: small, fast instances of the core invariants.  Each check
# returns (ok, detail); `momab check` prints one PASS/FAIL line per check.


def _check_weight_matrices() -> tuple[bool, str]:
    from .network import BaseGraph, build_weight_matrix, sample_round_graph

    rng = np.random.default_rng(7)
    base = BaseGraph.complete(6)
    worst = 0.0
    for _ in range(200):
        graph = sample_round_graph(base, 0.5, rng)
        w = build_weight_matrix(graph).entries
        worst = max(
            worst,
            float(np.max(np.abs(w - w.T))),
            float(np.max(np.abs(w.sum(axis=0) - 1.0))),
            float(np.max(np.abs(w.sum(axis=1) - 1.0))),
            float(max(0.0, -np.min(w))),
        )
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def _check_mixing_identity() -> tuple[bool, str]:
    from .algorithms import SimulatedNswGossip
    from .harness import trial_environment, trial_streams, unbiasedness_diagnostic

    config = ExperimentConfig(
        n_agents=3, n_arms=3, n_dims=2, horizon=300, link_prob=0.5, n_trials=1
    )
    env = trial_environment(config, 0)
    engine = SimulatedNswGossip(env, config, trial_streams(config, 0, "nsw_ucb_gossip"))
    worst = 0.0
    for t in range(1, config.horizon + 1):
        engine.step(t)
        worst = max(worst, unbiasedness_diagnostic(engine.global_avgs, engine.local_means))
    return worst <= 1e-10, f"max drift {worst:.2e}"


def _check_dominance() -> tuple[bool, str]:
    from .pareto import dominates

    rng = np.random.default_rng(11)
    for _ in range(2000):
        x, y, z = rng.integers(0, 3, size=(3, 3)).astype(float)
        if dominates(x, y) and dominates(y, x):
            return False, "antisymmetry violated"
        if dominates(x, y) and dominates(y, z) and not dominates(x, z):
            return False, "transitivity violated"
        if dominates(x, x):
            return False, "irreflexivity violated"
    return True, "2000 triples"


def _check_eps_distance() -> tuple[bool, str]:
    from .pareto import dominates, eps_distance

    rng = np.random.default_rng(13)
    worst = 0.0
    grid = np.arange(0.0, 3.0, 1e-4)
    for _ in range(50):
        x = rng.random(3)
        front = rng.random((4, 3))
        got = eps_distance(x, front)
        undominated = [
            eps for eps in grid if not any(dominates(y, x + eps) for y in front)
        ]
        oracle = undominated[0] if undominated else 3.0
        worst = max(worst, abs(got - oracle))
    return worst <= 1e-4, f"max gap to grid oracle {worst:.2e}"


def _check_nsw_solver() -> tuple[bool, str]:
    from .nsw import maximize_nsw, nsw_value

    rng = np.random.default_rng(17)
    worst = 0.0
    # 0.01-step grid over the 3-simplex, evaluated exactly.
    ii, jj = np.meshgrid(np.arange(101), np.arange(101), indexing="ij")
    keep = ii + jj <= 100
    grid = np.stack([ii[keep], jj[keep], 100 - ii[keep] - jj[keep]], axis=1) / 100.0
    for _ in range(20):
        utilities = rng.random((3, 3))
        best_grid = float(np.max(np.prod(grid @ utilities.T, axis=1)))
        p = maximize_nsw(utilities, None, rng)
        worst = max(worst, best_grid - nsw_value(p, utilities))
    return worst <= 1e-3, f"max objective gap {worst:.2e}"


def _check_projection() -> tuple[bool, str]:
    from .nsw import project_to_simplex

    rng = np.random.default_rng(19)
    for _ in range(2000):
        v = rng.normal(scale=3.0, size=rng.integers(1, 8))
        p = project_to_simplex(v)
        if np.min(p) < -1e-12 or abs(p.sum() - 1.0) > 1e-9:
            return False, "projection left the simplex"
        if np.max(np.abs(project_to_simplex(p) - p)) > 1e-9:
            return False, "projection is not idempotent"
    return True, "2000 vectors"


def _check_replay() -> tuple[bool, str]:
    config = ExperimentConfig(
        n_agents=3, n_arms=3, n_dims=2, horizon=200, link_prob=0.5, n_trials=1
    )
    for algorithm in ("pareto_ucb_gossip", "nsw_ucb_gossip"):
        first = run_trial(config, algorithm, 0)
        second = run_trial(config, algorithm, 0)
        if first.samples != second.samples:
            return False, f"{algorithm} replay diverged"
    return True, "two algorithms, bit-identical replays"


def _check_benchmark() -> tuple[bool, str]:
    from .nsw import maximize_nsw, nsw_value, optimal_distribution

    rng = np.random.default_rng(23)
    worst = 0.0
    for _ in range(10):
        utilities = rng.random((4, 5)) * 0.9 + 0.05
        bench = optimal_distribution(utilities, np.random.default_rng(1))
        p = maximize_nsw(utilities, None, rng)
        worst = max(worst, nsw_value(p, utilities) - bench.nsw_star)
    return worst <= 1e-9, f"max solver excess over benchmark {worst:.2e}"


CHECKS = (
    ("weight_matrix_doubly_stochastic", _check_weight_matrices),
    ("gossip_mixing_preserves_average", _check_mixing_identity),
    ("pareto_dominance_order", _check_dominance),
    ("eps_distance_grid_oracle", _check_eps_distance),
    ("nsw_solver_grid_oracle", _check_nsw_solver),
    ("simplex_projection", _check_projection),
    ("trial_replay_determinism", _check_replay),
    ("benchmark_dominates_solver", _check_benchmark),
)


def cmd_check(_args: argparse.Namespace) -> int:
    failures = 0
    for name, check in CHECKS:
        try:
            ok, detail = check()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        print(f"{'PASS' if ok else 'FAIL'} {name}  ({detail})")
        failures += not ok
    print(f"{len(CHECKS) - failures} of {len(CHECKS)} checks passed")
    return 1 if failures else 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momab",
        description="Decentralized multi-objective bandit experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment and write its outputs")
    run_p.add_argument("--suite", choices=("pareto", "nsw"), default=None)
    run_p.add_argument("--config", metavar="FILE", help="flat JSON config or a manifest")
    run_p.add_argument("--n-agents", dest="n_agents", type=int)
    run_p.add_argument("--n-arms", dest="n_arms", type=int)
    run_p.add_argument("--dims", dest="n_dims", type=int)
    run_p.add_argument("--horizon", dest="horizon", type=int)
    run_p.add_argument("--link-prob", dest="link_prob", type=float)
    run_p.add_argument("--het-scale", dest="het_scale", type=float)
    run_p.add_argument("--trials", dest="n_trials", type=int)
    run_p.add_argument("--seed", dest="master_seed", type=int)
    run_p.add_argument("--record-every", dest="record_every", type=int)
    run_p.add_argument("--nsw-explore-alpha", dest="nsw_explore_alpha")
    run_p.add_argument("--consensus-coeff", dest="consensus_coeff", type=float)
    run_p.add_argument("--elim-consensus-coeff", dest="elim_consensus_coeff", type=float)
    run_p.add_argument("--solver-restarts", dest="solver_restarts", type=int)
    run_p.add_argument("--solver-max-iters", dest="solver_max_iters", type=int)
    run_p.add_argument("--solver-tol", dest="solver_tol", type=float)
    run_p.add_argument("--workers", dest="workers", type=int)
    run_p.add_argument("--algorithms", help="comma-joined algorithm ids")
    run_p.add_argument("--out", help="output directory (default: $MOMAB_OUT or ./momab-run)")
    run_p.set_defaults(func=cmd_run)

    check_p = sub.add_parser("check", help="run fast self-checks of core invariants")
    check_p.set_defaults(func=cmd_check)

    plot_p = sub.add_parser("plot", help="re-plot SVGs from an existing summary.csv")
    plot_p.add_argument("--dir", help="run directory (default: $MOMAB_OUT or ./momab-run)")
    plot_p.set_defaults(func=cmd_plot)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError) as exc:
        print(f"momab: {exc}", file=sys.stderr)
        return 2
    except ExperimentError as exc:
        print(f"momab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
