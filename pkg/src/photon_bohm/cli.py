"""``simulate``: run a scenario end to end and write its artifacts.

Pipeline: algebra self-check, sampling, integration, statistics, output.
Exit codes: 0 ok, 2 configuration error, 3 self-check failure,
4 statistics guard (fewer than 99% of trajectories reached the line).
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import (
    MIN_ARRIVED,
    SampleSpec,
    arrived,
    channel_fraction,
    count_crossings,
    equivariance_check,
    fringe_positions,
    reflected_fraction,
    sample_initial,
)
from .integrate import Status, integrate_ensemble
from .kdp import ALGEBRA_TOL, SPECTRUM_TOL, algebra_residuals, build_spin1_betas
from .scenarios import build_scenario

log = logging.getLogger("photon_bohm")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_STATS = 0, 2, 3, 4
SCENARIOS = ("single-slit", "two-photon", "slab")
INTEGRATOR_KEYS = {"method", "record_every", "max_turn", "node_slowdown", "max_refinements"}
RUN_KEYS = {"scenario", "trajectories", "seed", "sampling", "workers", "format", "plot"}


class ConfigError(ValueError):
    pass


def _parse_value(text: str):
    low = text.strip().lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text.strip()


def read_config(path) -> dict:
    """Flat key = value pairs from the [scenario] section of an INI-style file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not parser.has_section("scenario"):
        raise ConfigError(f"{path}: missing [scenario] section")
    return {k: _parse_value(v) for k, v in parser.items("scenario")}


def parse_params(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
        out[key.strip()] = _parse_value(value)
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="simulate", description="Bohmian photon trajectory simulator")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--config", type=Path)
    p.add_argument("--param", action="append", metavar="K=V", help="override a config key (repeatable)")
    p.add_argument("--trajectories", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--plot", choices=("svg", "none"))
    p.add_argument("--selfcheck-only", action="store_true")
    p.add_argument("--sampling", choices=("uniform", "density"))
    p.add_argument("--workers", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve(args) -> dict:
    """Merge defaults < config file < --param < explicit flags."""
    settings = {
        "scenario": "single-slit",
        "trajectories": 100,
        "seed": 0,
        "sampling": "uniform",
        "workers": 1,
        "format": "csv",
        "plot": "svg",
    }
    if args.config is not None:
        settings.update(read_config(args.config))
    settings.update(parse_params(args.param))
    for key in RUN_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    if settings["scenario"] not in SCENARIOS:
        raise ConfigError(f"unknown scenario {settings['scenario']!r}")
    if settings["sampling"] not in ("uniform", "density"):
        raise ConfigError("sampling must be 'uniform' or 'density'")
    if not isinstance(settings["trajectories"], int) or settings["trajectories"] < 1:
        raise ConfigError("trajectories must be a positive integer")
    if not isinstance(settings["seed"], int) or not 0 <= settings["seed"] < 2**64:
        raise ConfigError("seed must be an integer in [0, 2^64)")
    if not isinstance(settings["workers"], int) or settings["workers"] < 1:
        raise ConfigError("workers must be a positive integer")
    return settings


# --------------------------------------------------------------------------
# self-check


def selfcheck():
    b = build_spin1_betas()
    res = algebra_residuals(b)
    report = {k: float(v) for k, v in res.items() if k != "kdp_worst_triple"}
    ok = (
        res["kdp"] < ALGEBRA_TOL
        and res["gamma_idempotent"] < ALGEBRA_TOL
        and res["gamma_anticommutator"] < ALGEBRA_TOL
        and res["spectrum"] < SPECTRUM_TOL
    )
    return ok, report


# --------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    return format(float(v), ".17g")


def trajectory_header(scenario) -> list[str]:
    if scenario.name == "two-photon":
        return ["traj_id", "step", "t", "x", "y1", "y2"]
    return ["traj_id", "step", "t", "x", "y"]


def trajectory_rows(trajectories, scenario):
    for tr in trajectories:
        for step, t, p in zip(tr.steps, tr.t, tr.points):
            coords = list(p) if scenario.dim > 1 else [p[0], 0.0]
            yield [str(tr.traj_id), str(int(step)), _fmt(t)] + [_fmt(c) for c in coords]


def write_table(path: Path, header, rows, fmt: str):
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(row) + "\n")
    else:
        records = [dict(zip(header, row)) for row in rows]
        # numbers stay as 17-digit strings so the file round-trips exactly
        with open(path, "w") as fh:
            json.dump({"columns": header, "rows": [[r[h] for h in header] for r in records]}, fh, indent=0)
            fh.write("\n")


def density_table(scenario, trajectories):
    if scenario.name == "slab":
        t_end = scenario.t_end
        lo = scenario.cfg.x0 - 8.0 * math.sqrt(scenario.cfg.sigma0)
        hi = scenario.cfg.x0 + t_end + 8.0 * math.sqrt(scenario.cfg.sigma0)
        x = np.linspace(lo, hi, 2001)
        return ["x", "density"], x, scenario.field.density(x, t_end)
    half = _screen_half_width(scenario, trajectories)
    y = np.linspace(-half, half, 2001)
    if scenario.name == "two-photon":
        return ["y1", "density"], y, scenario.line_density(y, -y)
    return ["y", "density"], y, scenario.line_density(y)


def _screen_half_width(scenario, trajectories):
    ends = [abs(v) for tr in arrived(trajectories) for v in tr.end[1:]]
    half = max(ends) if ends else 0.0
    return max(half * 1.05, 5.0 * scenario.cfg.fringe_spacing)


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


# --------------------------------------------------------------------------
# statistics


def statistics(scenario, trajectories, sampling):
    stats = {"count": len(trajectories)}
    statuses = {}
    for tr in trajectories:
        statuses[tr.status.value] = statuses.get(tr.status.value, 0) + 1
    stats["status"] = dict(sorted(statuses.items()))
    if scenario.name == "slab":
        stats["reflected_fraction"] = reflected_fraction(trajectories, scenario.cfg.slab_start)
        if not scenario.cfg.single_interface:
            ends = np.array([tr.end[0] for tr in trajectories])
            stats["transmitted_fraction"] = float(np.mean(ends > scenario.cfg.slab_end))
        return stats
    done = arrived(trajectories)
    stats["reached_fraction"] = len(done) / len(trajectories)
    if not done:
        return stats
    spacing = scenario.cfg.fringe_spacing
    if scenario.name == "single-slit":
        half = _screen_half_width(scenario, trajectories)
        maxima = fringe_positions(scenario.line_density, -half, half)
        ends = np.array([tr.end[1] for tr in done])
        stats["fringe_maxima"] = len(maxima)
        if len(maxima) > 1:
            central = maxima[np.argsort(np.abs(maxima))[:2]]
            stats["central_spacing"] = float(abs(central[1] - central[0]))
        stats["channel_fraction"] = channel_fraction(ends, maxima, spacing)
        stats["crossings"] = count_crossings(done, coord=1) if all(len(tr.t) > 2 for tr in done) else None
    else:
        flips = sum(int(np.sign(tr.start[1]) != np.sign(tr.end[1])) for tr in done)
        drift = max(abs((tr.points[:, 1] + tr.points[:, 2]) - (tr.start[1] + tr.start[2])).max() for tr in done)
        stats["half_plane_crossings"] = flips
        stats["max_sum_drift"] = float(drift)
    if sampling == "density_weighted" and stats["reached_fraction"] >= MIN_ARRIVED:
        cmp = equivariance_check(trajectories, scenario)
        stats["equivariance_l1"] = cmp.l1_distance
        stats["equivariance_count"] = cmp.count
        stats["equivariance_certified"] = cmp.certified
    return stats


# --------------------------------------------------------------------------


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    ok, residuals = selfcheck()
    if args.selfcheck_only:
        worst = max(residuals["kdp"], residuals["gamma_idempotent"], residuals["gamma_anticommutator"])
        print(f"max algebra residual {worst:.3e}; spectrum deviation {residuals['spectrum']:.3e}")
        return EXIT_OK if ok else EXIT_NUMERIC
    if not ok:
        print(f"self-check failed: {residuals}", file=sys.stderr)
        return EXIT_NUMERIC

    try:
        settings = resolve(args)
        physics = {k: v for k, v in settings.items() if k not in RUN_KEYS | INTEGRATOR_KEYS}
        scenario = build_scenario(settings["scenario"], physics)
        icfg = scenario.integrator(**{k: settings[k] for k in INTEGRATOR_KEYS if k in settings})
        mode = "uniform_slits" if settings["sampling"] == "uniform" else "density_weighted"
        spec = SampleSpec(mode=mode, count=settings["trajectories"], seed=settings["seed"])
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    starts = sample_initial(spec, scenario)
    trajectories = integrate_ensemble(scenario.field, starts, scenario.t0, icfg, workers=settings["workers"])
    integrated = time.perf_counter()
    failed = [tr for tr in trajectories if tr.status in (Status.FAILED, Status.STALLED_AT_NODE)]
    for tr in failed[:10]:
        log.warning("trajectory %d: %s %s", tr.traj_id, tr.status.value, tr.message)

    fmt = settings["format"]
    files = {}
    traj_path = out / f"trajectories.{fmt}"
    write_table(traj_path, trajectory_header(scenario), trajectory_rows(trajectories, scenario), fmt)
    files[traj_path.name] = traj_path
    header, grid, rho = density_table(scenario, trajectories)
    dens_path = out / f"density.{fmt}"
    write_table(dens_path, header, ([_fmt(a), _fmt(b)] for a, b in zip(grid, rho)), fmt)
    files[dens_path.name] = dens_path
    if settings["plot"] == "svg":
        from .plotting import render_svg

        fig_path = out / "figure.svg"
        render_svg(fig_path, scenario, trajectories, grid, rho)
        files[fig_path.name] = fig_path

    stats = statistics(scenario, trajectories, mode)
    manifest = {
        "scenario": scenario.name,
        "version": __version__,
        "seed": settings["seed"],
        "config": {
            "run": {k: settings[k] for k in sorted(RUN_KEYS)},
            "physics": dataclasses.asdict(scenario.cfg),
            "scenario": {k: getattr(scenario, k) for k in ("launch_x", "screen_x", "t_end", "dt") if hasattr(scenario, k)},
            "integrator": dataclasses.asdict(icfg),
            "sampling": dataclasses.asdict(spec),
        },
        "selfcheck": residuals,
        "statistics": stats,
        "timing": {"integrate_s": integrated - started, "total_s": time.perf_counter() - started},
        "outputs": {name: {"sha256": sha256(path), "bytes": path.stat().st_size} for name, path in files.items()},
        "assumptions": [
            "c = 1; lengths (and times) in the configuration's length unit, metres by default",
            "figure axes carry the same unit; the source figures have unlabelled axes",
            "default wavelength, slit width, screen distance, amplitudes, index, packet width and start are artifact choices",
        ],
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")

    if scenario.name != "slab" and stats.get("reached_fraction", 0.0) < MIN_ARRIVED:
        print(
            f"statistics guard: only {stats['reached_fraction']:.1%} of trajectories reached the detection line",
            file=sys.stderr,
        )
        return EXIT_STATS
    return EXIT_OK


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not serialisable: {type(obj)!r}")


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
