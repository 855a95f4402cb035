"""Command-line front end.

    stomech simulate|sweep|measure|field|spectrum [config.yaml] [--set k=v ...]
    stomech catalog
    stomech trace <dir>

Exit codes: 0 on success, 2 when the spec or invocation is invalid, 3 when a
valid spec fails while running. A run prints its output directory on stdout;
everything else about the run lives in that directory.
"""

import argparse
import json
import sys

from .io import (RunError, SpecError, list_catalog, parse_spec,
                 run_experiment, trace_tree)
from .io.runner import _dump_json

_RUN_KINDS = ("simulate", "sweep", "measure", "field", "spectrum")


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="stomech", description=__doc__.split("\n")[0])
    sub = top.add_subparsers(dest="command", required=True)
    for kind in _RUN_KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("config", nargs="?", default=None,
                       help="YAML spec file (omit to start from defaults)")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="override a spec field (dotted paths, YAML values)")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="output root (else spec output_dir, "
                            "else $STOMECH_OUTPUT_ROOT, else ./out)")
        p.add_argument("--threads", type=int, default=1)
    sub.add_parser("catalog", help="print the state/process/experiment inventory")
    tr = sub.add_parser("trace", help="verify hashes across run directories")
    tr.add_argument("root", help="directory tree to verify")
    return top


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "catalog":
        sys.stdout.write(_dump_json(list_catalog()))
        return 0

    if args.command == "trace":
        report = trace_tree(args.root)
        for e in report.entries:
            line = f"{'OK  ' if e.status == 'ok' else 'FAIL'} {e.path}"
            if e.status != "ok":
                line += f": {e.detail}"
            print(line)
        return 0 if report.ok else 2

    try:
        if args.config is not None:
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
                return 2
        else:
            text = ""
        spec = parse_spec(text, kind=args.command, overrides=args.overrides)
        result = run_experiment(spec, out_root=args.out, n_threads=args.threads)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(result.directory)
    return 0


if __name__ == "__main__":
    sys.exit(main())
