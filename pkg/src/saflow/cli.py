"""Command line: ``saflow [--config FILE] [--out DIR] [--seed N] [--set section.key=value] [COMMAND]``."""

from __future__ import annotations

import argparse
import sys

from .config import _SECTION_RE, COMMANDS, ConfigError, parse_config
from .studies import EXIT_CONFIG, run


def _apply_sets(text, assignments):
    """Append ``section.key=value`` overrides as extra section blocks.

    Keys set twice in one section are rejected by the parser, so each
    override replaces the matching line instead of duplicating it.
    """
    lines = text.splitlines()
    for item in assignments:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        lhs, value = item.split("=", 1)
        section, key = (s.strip().lower() for s in lhs.split(".", 1))
        lines = _set_line(lines, section, key, value.strip())
    return "\n".join(lines) + "\n"


def _set_line(lines, section, key, value):
    current = None
    insert_at = None
    for i, line in enumerate(lines):
        s = line.strip()
        header = _SECTION_RE.match(s)
        if header:
            current = header.group(1).strip().lower()
            if current == section:
                insert_at = i + 1
            continue
        if current == section and "=" in s and s.split("=", 1)[0].strip().lower() == key:
            return lines[:i] + [f"{key} = {value}"] + lines[i + 1 :]
    if insert_at is None:
        return lines + [f"[{section}]", f"{key} = {value}"]
    return lines[:insert_at] + [f"{key} = {value}"] + lines[insert_at:]


def build_parser():
    ap = argparse.ArgumentParser(
        prog="saflow",
        description="Simulate Schrodinger-Airy loop flows and run the built-in verification studies.",
    )
    ap.add_argument("command", nargs="?", choices=COMMANDS, help="study to run (overrides run.command)")
    ap.add_argument("--config", "-c", help="INI-style run configuration")
    ap.add_argument("--out", "-o", help="output directory (overrides run.output)")
    ap.add_argument("--seed", type=int, help="random seed (overrides run.seed)")
    ap.add_argument(
        "--set",
        dest="sets",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a single configuration entry; may be repeated",
    )
    ap.add_argument("--quiet", "-q", action="store_true", help="only print the final status line")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text = ""
        if args.config:
            with open(args.config) as fh:
                text = fh.read()
        if args.sets:
            text = _apply_sets(text, args.sets)
        cfg = parse_config(text).with_overrides(output=args.out, seed=args.seed, command=args.command)
    except (ConfigError, OSError) as exc:
        print(f"saflow: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, summary = run(cfg)
    if not args.quiet:
        for chk in summary["checks"]:
            mark = "PASS" if chk["passed"] else "FAIL"
            print(f"{mark}  {chk['name']}: {chk['value']} (limit {chk['limit']})")
    if summary["message"]:
        print(summary["message"], file=sys.stderr)
    print(f"{cfg.command}: {summary['status']} (exit {code}); artifacts in {cfg.output}")
    return code


if __name__ == "__main__":
    sys.exit(main())
