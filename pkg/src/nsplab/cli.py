"""Command line entry point: ``nsplab run | sweep | emit-plots``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from pathlib import Path

from .experiments import SWEEP_AXES, ConfigError, emit_plots, load_config, run, sweep

log = logging.getLogger("nsplab")


def _out_dir(arg: str | None, cfg_hash: str | None = None) -> Path:
    if arg:
        return Path(arg)
    root = Path(os.environ.get("NSPLAB_OUT", "nsplab_out"))
    return root / cfg_hash if cfg_hash else root


def _parse_values(text: str, axis: str) -> list:
    items = [x for x in text.replace(",", " ").split() if x]
    return [int(x) for x in items] if axis == "n" else [float(x) for x in items]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nsplab", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one campaign from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.add_argument("--strict", action="store_true", help="treat warnings as failures")

    s = sub.add_parser("sweep", help="repeat a campaign along one parameter axis")
    s.add_argument("--config", required=True)
    s.add_argument("--axis", required=True, choices=SWEEP_AXES)
    s.add_argument("--values", required=True, help="comma or space separated list")
    s.add_argument("--out")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--seed", type=int)
    s.add_argument("--strict", action="store_true")

    e = sub.add_parser("emit-plots", help="write gnuplot data and scripts from a manifest")
    e.add_argument("manifest")
    e.add_argument("--out")
    e.add_argument("--strict", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config, seed=args.seed)
            out = _out_dir(args.out, cfg.hash())
            manifest = run(cfg, out, strict=args.strict)
            for k, v in sorted(manifest["criteria"].items(), key=lambda kv: int(kv[0])):
                print(f"criterion {k}: {'PASS' if v else 'FAIL'}")
            print(f"manifest: {out / 'manifest.json'}")
            return 0 if manifest["passed"] else 1
        if args.command == "sweep":
            if args.workers < 1:
                raise ConfigError("workers", "must be at least 1")
            cfg = load_config(args.config, seed=args.seed)
            values = _parse_values(args.values, args.axis)
            out = _out_dir(args.out, cfg.hash() + f"-sweep-{args.axis}")
            report = sweep(cfg, args.axis, values, out, workers=args.workers, strict=args.strict)
            print(json.dumps(report["uniformity"], indent=2, sort_keys=True))
            return 0 if report["passed"] else 1
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            files = emit_plots(args.manifest, args.out)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        print(f"wrote {len(files)} data files")
        return 1 if (args.strict and caught) else 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
