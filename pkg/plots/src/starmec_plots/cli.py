"""starmec-plot: render result CSVs into figures."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="starmec-plot",
                                description="Render starmec result CSVs")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   help="input CSV file(s)")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--title", default="")
    p.add_argument("--label", dest="labels", action="append", default=[],
                   help="series label, repeatable (one per input)")
    p.add_argument("--user", dest="users", action="append", default=[],
                   metavar="X,Y", help="user marker, repeatable")
    p.add_argument("--bs", default=None, metavar="X,Y", help="BS marker")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    markers = {}
    if args.users:
        markers["users"] = [tuple(float(v) for v in u.split(",")) for u in args.users]
    if args.bs:
        markers["bs"] = tuple(float(v) for v in args.bs.split(","))
    spec = FigureSpec(kind=args.kind, inputs=list(args.inputs), output=args.out,
                      title=args.title, labels=list(args.labels), markers=markers)
    try:
        path = render(spec)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
