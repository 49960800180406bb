"""Command-line front end: run scenarios, validate configs, print version.

Exit codes: 0 success, 2 config validation failure, 3 runtime model error.
Identical config and seed produce byte-identical CSV bodies, independent of
the thread count.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__
from .core import ModelError, SeedStream
from .scenarios import SCENARIO_KINDS, execute, validate_config

__all__ = ["main"]

_THREADS_ENV = "CYBERRISK_THREADS"


def _config_digest(cfg) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileNotFoundError(f"cannot read config {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"config is not valid JSON: line {exc.lineno}: {exc.msg}")


def _cmd_run(args) -> int:
    try:
        cfg = _load_config(args.config)
    except (FileNotFoundError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return 2
    diagnostics = validate_config(cfg, structural_only=True)
    if diagnostics:
        for d in diagnostics:
            print(f"invalid config: {d}", file=sys.stderr)
        return 2
    master_seed = args.seed if args.seed is not None else int(cfg.get("master_seed", 0))
    threads = args.threads
    out_dir = Path(args.out or cfg.get("output", "out"))
    try:
        result = execute(cfg, SeedStream(master_seed), threads=threads)
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 3
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "kind": cfg["kind"],
        "config_digest": _config_digest(cfg),
        "master_seed": master_seed,
        "threads": threads,
        "version": __version__,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out_dir / "summary.json").write_text(
        json.dumps(result.summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    for name, content in result.files.items():
        (out_dir / name).write_text(content, encoding="utf-8", newline="\n")
    print(f"wrote {len(result.files) + 2} files to {out_dir}")
    return 0


def _cmd_validate(args) -> int:
    try:
        cfg = _load_config(args.config)
    except (FileNotFoundError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return 2
    diagnostics = validate_config(cfg)
    if diagnostics:
        for d in diagnostics:
            print(d)
        return 2
    print("ok")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cyberrisk",
        description="Cyber risk simulation and pricing scenarios",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    default_threads = int(os.environ.get(_THREADS_ENV, "1"))

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config", help="path to the scenario JSON")
    p_run.add_argument("--seed", type=int, default=None, help="override master seed")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument(
        "--threads",
        type=int,
        default=default_threads,
        help=f"worker threads (default from ${_THREADS_ENV} or 1)",
    )
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a config without running")
    p_val.add_argument("config", help="path to the scenario JSON")
    p_val.set_defaults(func=_cmd_validate)

    p_ver = sub.add_parser("version", help="print the package version")
    p_ver.set_defaults(func=lambda _args: (print(__version__), 0)[1])

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
