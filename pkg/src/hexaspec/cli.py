"""``hexaspec`` command-line interface.

Usage::

    hexaspec bands|surface|dirac|fermi|perturb|validate --config run.toml \\
        [--out data.csv] [--format csv|json]

Exit status is 0 on success, 1 when ``validate`` finds a failing invariant
or a computation or write fails, and 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys

from .config import FORMATS, load_config
from .errors import ConfigError, HexaspecError
from . import sweeps

log = logging.getLogger("hexaspec")

COMMAND_NAMES = ("bands", "surface", "dirac", "fermi", "perturb", "validate")


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _json_value(value):
    # same 12 significant digits as the CSV encoding
    if isinstance(value, float):
        return float(format(value, ".12g"))
    return value


def encode_dataset(rows, fmt: str, fields) -> str:
    """Serialize homogeneous rows as CSV (RFC 4180, CRLF line ends) or as a
    JSON array of objects.  An empty row set gives a header-only CSV."""
    fields = list(fields)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(fields)
        for r in rows:
            if set(r) != set(fields):
                raise ValueError(f"row fields {sorted(r)} differ from {fields}")
            w.writerow([_cell(r[f]) for f in fields])
        return buf.getvalue()
    if fmt == "json":
        out = []
        for r in rows:
            if set(r) != set(fields):
                raise ValueError(f"row fields {sorted(r)} differ from {fields}")
            out.append({f: _json_value(r[f]) for f in fields})
        return json.dumps(out, indent=2, allow_nan=False) + "\n"
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def export_dataset(rows, fmt: str, path, fields) -> None:
    """Write rows to ``path`` (``"-"`` or empty for stdout).  I/O errors
    propagate unchanged."""
    text = encode_dataset(rows, fmt, fields)
    if not path or str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hexaspec",
        description="Spectral datasets for the fourth-order beam operator on hexagonal lattices.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "bands": "band/gap table over the energy window, with flat-band rows",
        "surface": "dispersion sheets over the quasimomentum grid",
        "dirac": "Dirac points and their cone type",
        "fermi": "Fermi-surface class on the energy grid",
        "perturb": "exact versus first-order perturbed roots over the quasimomentum grid",
        "validate": "pass/fail table of the invariant suite",
    }
    for name in COMMAND_NAMES:
        c = sub.add_parser(name, help=helps[name])
        c.add_argument("--config", required=True, help="run configuration (.toml or .json)")
        c.add_argument("--out", help="output path (default: output.path, else stdout)")
        c.add_argument("--format", choices=FORMATS, help="override output.format")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"hexaspec: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"hexaspec: cannot read config: {exc}", file=sys.stderr)
        return 2

    fmt = args.format or cfg.output.format
    out = args.out if args.out is not None else cfg.output.path
    ok = True
    try:
        log.info("running %s", args.command)
        if args.command == "validate":
            fields, rows, ok = sweeps.validate(cfg)
        else:
            fields, rows = sweeps.COMMANDS[args.command](cfg)
        log.info("%d rows", len(rows))
    except HexaspecError as exc:
        print(f"hexaspec {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    try:
        export_dataset(rows, fmt, out, fields)
    except OSError as exc:
        print(f"hexaspec {args.command}: {exc}", file=sys.stderr)
        return 1
    if not ok:
        failed = [r["invariant"] for r in rows if r["status"] == "fail"]
        print(f"hexaspec validate: failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
