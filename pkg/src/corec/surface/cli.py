"""Command line: `corec run FILE [--fuel N] [--json] ...`."""

from __future__ import annotations

import argparse
import json
import sys

from ..errors import CorecError
from ..runtime import DEFAULT_FUEL
from .parser import parse_file
from .session import Session


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="corec", description="Run corecursive definitions and commands.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    run = sub.add_parser("run", help="process a .corec file in order")
    run.add_argument("file")
    run.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="unguarded steps allowed per forced layer")
    run.add_argument("--json", action="store_true", help="one JSON report object per line")
    run.add_argument("--samples", type=int, default=200, help="well-behavedness samples per registration")
    run.add_argument("--depth", type=int, default=5, help="observation depth of the well-behavedness check")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--corroborate-seconds", type=float, default=10.0,
                     help="time allowed per prove for the ground-instance comparison")
    return ap


def run_file(path, fuel=DEFAULT_FUEL, as_json=False, samples=200, depth=5, seed=0, out=None,
             corroborate_seconds=10.0) -> int:
    out = out or sys.stdout
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    s = Session(fuel=fuel, samples=samples, depth=depth, seed=seed, corroborate_seconds=corroborate_seconds)
    try:
        f = parse_file(text)
        for d in f.decls:
            for r in s.run(s.resolver.decl(d)):
                print(json.dumps(r.to_json(), ensure_ascii=False) if as_json else r.text(), file=out)
    except CorecError as e:
        if as_json:
            print(json.dumps({"command": "load", "verdict": e.code, "detail": {"message": str(e)}}), file=out)
        else:
            print(f"{path}:{e}", file=out)
        # syntax and name errors stop the file
        return 2
    return 0 if s.ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run_file(args.file, args.fuel, args.json, args.samples, args.depth, args.seed,
                    corroborate_seconds=args.corroborate_seconds)


if __name__ == "__main__":
    sys.exit(main())
