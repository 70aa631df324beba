"""Command-line scenario runner.

    phaseless-dsm run <config> [--seed S] [--out DIR] [--threads T]
    phaseless-dsm validate <config>
    phaseless-dsm scenarios

``<config>`` is a path or the name of a bundled scenario.  The output
directory is taken from ``--out``, then ``$PHASELESS_DSM_OUT``, then the
config's ``output`` key, then ``out/<name>``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .config import ConfigError, ScenarioConfig, parse_config
from .expression import ExpressionError
from .forward import (DatasetError, FarFieldData, QuadratureError, apply_noise, far_field_batch,
                      phased_csv, phaseless_csv, synthesize, write_text)
from .phase_retrieval import AnchorError, retrieve_far_field
from .sampling import bind_i1, bind_i2, combine_min, evaluate_on_grid

log = logging.getLogger("phaseless_dsm")

OUT_ENV = "PHASELESS_DSM_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def bundled_scenarios() -> dict[str, str]:
    root = resources.files("phaseless_dsm") / "scenarios"
    return {p.name[:-4]: p.read_text() for p in root.iterdir() if p.name.endswith(".ini")}


def read_config_text(spec: str) -> str:
    path = Path(spec)
    if path.is_file():
        return path.read_text()
    scen = bundled_scenarios()
    if spec in scen:
        return scen[spec]
    raise ConfigError([f"no such config file or bundled scenario: {spec}"])


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class RunResult:
    out_dir: Path
    artifacts: list[Path]
    manifest: Path


def run(cfg: ScenarioConfig, out_dir, config_text: str = "", threads: int = 1) -> RunResult:
    t0 = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model, grid, angles = cfg.model(), cfg.grid, np.asarray(cfg.angles)
    mode = cfg.mode
    artifacts: list[Path] = []

    def emit(name: str, text: str):
        artifacts.append(write_text(out_dir / name, text))

    meta_base = {"scenario": cfg.name, "noise": cfg.noise.kind, "level": cfg.noise.level}

    if mode == "sample-i2":
        truth = FarFieldData(grid, angles, far_field_batch(model, angles, grid.nodes))
        emit("phased_truth.csv", phased_csv(truth))
        field = evaluate_on_grid(bind_i2(truth), cfg.sampling, "i2", meta_base, threads)
        artifacts.extend(field.write(out_dir / "i2"))
    else:
        datasets = []
        for n, z0 in enumerate(cfg.z0s):
            ds = synthesize(model, z0, cfg.taus, angles, grid)
            datasets.append(apply_noise(ds, cfg.noise, start=n * ds.magnitudes.size))
        suffix = (lambda n: "") if len(datasets) == 1 else (lambda n: f"_z0-{n + 1}")
        if mode != "sample-i1":
            for n, ds in enumerate(datasets):
                emit(f"phaseless{suffix(n)}.csv", phaseless_csv(ds))
        if mode in ("forward", "retrieve"):
            for n, ds in enumerate(datasets):
                emit(f"phased_truth{suffix(n)}.csv", phased_csv(ds.phased))
        if mode in ("retrieve", "full-scheme-two"):
            retrieved = retrieve_far_field(datasets[0])
            emit("phased_retrieved.csv", phased_csv(retrieved))
            if mode == "full-scheme-two":
                field = evaluate_on_grid(bind_i2(retrieved), cfg.sampling, "i2",
                                         {**meta_base, "z0": list(cfg.z0s[0]),
                                          "tau": [str(t) for t in cfg.taus]}, threads)
                artifacts.extend(field.write(out_dir / "i2"))
        if mode in ("sample-i1", "full-scheme-one"):
            fields = []
            for n, ds in enumerate(datasets):
                tau1 = next(complex(t) for t in ds.taus if t != 0)
                field = evaluate_on_grid(bind_i1(ds, tau1), cfg.sampling, "i1",
                                         {**meta_base, "z0": list(ds.z0), "tau": str(tau1)}, threads)
                fields.append(field)
                artifacts.extend(field.write(out_dir / f"i1{suffix(n)}"))
            if len(fields) > 1:
                artifacts.extend(combine_min(fields).write(out_dir / "i1_combined"))

    manifest = {
        "config_sha256": _sha256(config_text.encode()),
        "seed": cfg.noise.seed,
        "artifacts": [{"path": p.relative_to(out_dir).as_posix(), "sha256": _sha256(p.read_bytes())}
                      for p in artifacts],
        "wall_time_ms": round(1000 * (time.perf_counter() - t0), 3),
    }
    mpath = out_dir / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2) + "\n")
    return RunResult(out_dir, artifacts, mpath)


def resolve_out_dir(cfg: ScenarioConfig, cli_out: Optional[str]) -> Path:
    if cli_out:
        return Path(cli_out)
    if os.environ.get(OUT_ENV):
        return Path(os.environ[OUT_ENV])
    if cfg.output:
        return Path(cfg.output)
    return Path("out") / cfg.name


def _load(spec: str) -> tuple[ScenarioConfig, str]:
    text = read_config_text(spec)
    return parse_config(text), text


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="phaseless-dsm", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None, help="override the noise seed")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--threads", type=int, default=1)
    p_val = sub.add_parser("validate", help="check a scenario config")
    p_val.add_argument("config")
    sub.add_parser("scenarios", help="list bundled scenarios")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    if args.command == "scenarios":
        for name in sorted(bundled_scenarios()):
            print(name)
        return EXIT_OK

    try:
        cfg, text = _load(args.config)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"{cfg.name}: ok ({cfg.mode})")
        return EXIT_OK

    if args.seed is not None:
        if args.seed < 0:
            print("config error: --seed must be non-negative", file=sys.stderr)
            return EXIT_CONFIG
        cfg = replace(cfg, noise=replace(cfg.noise, seed=args.seed))
    if args.threads < 1:
        print("config error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = resolve_out_dir(cfg, args.out)
    try:
        result = run(cfg, out_dir, text, threads=args.threads)
    except (QuadratureError, AnchorError, DatasetError, ExpressionError,
            FloatingPointError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    log.info("%s: wrote %d artifacts to %s", cfg.name, len(result.artifacts), result.out_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
