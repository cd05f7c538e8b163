"""Command line interface.

Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .curvature import UMBILIC_GAP
from .pipeline import (
    load_config,
    run_pipeline,
    stage_average,
    stage_compare,
    stage_curvature,
    stage_pushforward,
    stage_resample,
)
from .synth import write_synth

logger = logging.getLogger("surfvec")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="surfvec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"surfvec {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("curvature", help="principal curvature direction field of a mesh")
    s.add_argument("--mesh", required=True)
    s.add_argument("--out", required=True, help="direction field CSV")
    s.add_argument("--which", choices=("max", "min"), default="max")
    s.add_argument("--umbilic-gap", type=float, default=UMBILIC_GAP)
    s.add_argument("--kmax-out")
    s.add_argument("--kmin-out")

    s = sub.add_parser("pushforward", help="push a tangent field onto the parameterization sphere")
    s.add_argument("--mesh", required=True)
    s.add_argument("--param", required=True, help="index,theta,phi CSV or FreeSurfer sphere surface")
    s.add_argument("--field", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--sphere-out", help="also write the sphere mesh (OFF)")

    s = sub.add_parser("resample", help="nearest-neighbour resampling onto an icosphere")
    s.add_argument("--param", required=True)
    s.add_argument("--field", required=True, help="field on the subject sphere")
    s.add_argument("--out", required=True)
    s.add_argument("--level", type=int, default=7)
    s.add_argument("--naive", action="store_true", help="copy raw vectors without transport")
    s.add_argument("--cache-dir")

    s = sub.add_parser("compare", help="angular error map and histogram of two fields")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--mode", choices=("axial", "vector"), default="axial")
    s.add_argument("--bin-width", type=float, default=1.0)
    s.add_argument("--map")
    s.add_argument("--hist")
    s.add_argument("--summary")

    s = sub.add_parser("average", help="per-vertex average of fields on one domain")
    s.add_argument("--fields", nargs="+", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mode", choices=("axial", "vector"), default="axial")
    s.add_argument("--level", type=int, help="icosphere level of the fields (projects onto its tangent planes)")

    s = sub.add_parser("synth", help="write a synthetic fixture set")
    s.add_argument("--spec", required=True, help="JSON spec file")
    s.add_argument("--out", required=True, help="output directory")

    s = sub.add_parser("pipeline", help="run the full comparison pipeline from a config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", dest="out_dir")
    s.add_argument("--level", type=int)
    s.add_argument("--mode", choices=("axial", "vector"))
    s.add_argument("--umbilic-gap", type=float)
    s.add_argument("--bin-width", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int)
    s.add_argument("--cache-dir")
    return p


def _run(args) -> int:
    if args.command == "curvature":
        stage_curvature(args.mesh, args.out, args.which, args.umbilic_gap, args.kmax_out, args.kmin_out)
    elif args.command == "pushforward":
        stage_pushforward(args.mesh, args.param, args.field, args.out, args.sphere_out)
    elif args.command == "resample":
        stage_resample(args.param, args.field, args.out, args.level, args.naive, args.cache_dir)
    elif args.command == "compare":
        summary = stage_compare(args.a, args.b, args.mode, args.bin_width, args.map, args.hist, args.summary)
        print(json.dumps(summary, sort_keys=True))
    elif args.command == "average":
        stage_average(args.fields, args.out, args.mode, args.level)
    elif args.command == "synth":
        spec = json.loads(Path(args.spec).read_text())
        for name in write_synth(spec, args.out):
            print(Path(args.out) / name)
    elif args.command == "pipeline":
        cfg = load_config(
            args.config,
            out_dir=args.out_dir,
            level=args.level,
            mode=args.mode,
            umbilic_gap=args.umbilic_gap,
            bin_width=args.bin_width,
            seed=args.seed,
            jobs=args.jobs,
            cache_dir=args.cache_dir,
        )
        status, manifest = run_pipeline(cfg)
        for rec in manifest["subjects"]:
            if rec["status"]:
                print(f"{rec['name']}: FAILED {rec['error']}", file=sys.stderr)
            elif "pushforward" in rec:
                print(
                    f"{rec['name']}: median angular error {rec['pushforward']['median']:.2f} deg "
                    f"(naive {rec['naive']['median']:.2f} deg)"
                )
        return status
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s | %(name)s | %(message)s",
    )
    try:
        return _run(args)
    except (ValueError, OSError) as exc:
        print(f"surfvec {args.command}: error: {exc}", file=sys.stderr)
        return 1
