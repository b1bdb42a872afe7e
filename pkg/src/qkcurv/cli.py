"""Command-line entry point: ``qkcurv --model hpn --n 2 --suite bounds``.

Exit status is 0 when every executed check passes, 1 when some check fails
and 2 for usage or configuration errors.  A JSON config file may supply any
of the long option names (``model``, ``n``, ``scal``, ``eps``, ``suite``,
``seed``, ``restarts``, ``samples``, ``workers``, ``identity_tol``,
``opt_tol``, ``out``, ``format``); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from .errors import ConfigError, ModelError
from .suites import FORMATS, SUITES, RunConfig, run_all

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# config-file key -> RunConfig field
_KEYS = {
    "model": "family",
    "n": "n",
    "scal": "scal",
    "eps": "eps",
    "suite": "suites",
    "seed": "seed",
    "restarts": "restarts",
    "samples": "samples",
    "workers": "workers",
    "identity_tol": "identity_tol",
    "opt_tol": "opt_tol",
    "out": "out",
    "format": "fmt",
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qkcurv",
        description="Curvature checks for quaternion-Kähler symmetric models and their twistor spaces.",
    )
    ap.add_argument("--config", help="JSON file with default settings")
    ap.add_argument("--model", choices=("hpn", "gr2c"), help="model family (default hpn)")
    ap.add_argument("--n", type=int, help="quaternionic dimension, >= 2 (default 2)")
    ap.add_argument("--scal", type=float, help="scalar curvature (default 8n(n+2))")
    ap.add_argument("--eps", type=int, choices=(-1, 1), help="twistor branch: -1 nearly Kähler, +1 Kähler")
    ap.add_argument("--suite", action="append", metavar="NAME",
                    help=f"suite to run, repeatable (default all): {', '.join(SUITES)}")
    ap.add_argument("--seed", type=int, help="random seed (default 0)")
    ap.add_argument("--restarts", type=int, help="local refinements per optimisation (default 16)")
    ap.add_argument("--samples", type=int, help="random planes per optimisation (default 20000)")
    ap.add_argument("--workers", type=int, help="threads for optimisation batches (default 1)")
    ap.add_argument("--identity-tol", type=float, dest="identity_tol", help="tolerance for exact identities")
    ap.add_argument("--opt-tol", type=float, dest="opt_tol", help="tolerance for optimised extrema")
    ap.add_argument("--out", help="output directory for reports (default ./qkcurv-reports)")
    ap.add_argument("--format", choices=FORMATS, help="report format (default json)")
    ap.add_argument("-q", "--quiet", action="store_true", help="only print the final summary line")
    return ap


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = sorted(set(raw) - set(_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    out = {_KEYS[k]: v for k, v in raw.items()}
    if isinstance(out.get("suites"), str):
        out["suites"] = [out["suites"]]
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    settings = load_config(args.config) if args.config else {}
    for key, field_name in _KEYS.items():
        value = getattr(args, key if key != "suite" else "suite", None)
        if value is not None:
            settings[field_name] = value
    if "suites" in settings:
        settings["suites"] = tuple(dict.fromkeys(settings["suites"]))
    try:
        return RunConfig(**settings).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def write_reports(reports, out_dir: str, fmt: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for r in reports:
        path = os.path.join(out_dir, f"{r.suite}.{fmt}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(r.emit(fmt))
        paths.append(path)
    return paths


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
    except ConfigError as exc:
        print(f"qkcurv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        reports = run_all(config)
    except (ModelError, ConfigError) as exc:
        print(f"qkcurv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        paths = write_reports(reports, config.out, config.fmt)
    except OSError as exc:
        print(f"qkcurv: error: cannot write reports to {config.out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for r, path in zip(reports, paths):
        if not args.quiet:
            counts = {s: sum(rec.status == s for rec in r.records) for s in ("pass", "fail", "skipped")}
            print(f"{r.suite:<18} {'PASS' if r.passed else 'FAIL'}  "
                  f"pass={counts['pass']} fail={counts['fail']} skipped={counts['skipped']}  -> {path}")
            for rec in r.failures():
                print(f"    FAIL {rec.name}: value={rec.value!r} bound={rec.bound!r} {rec.reason}")
    ok = all(r.passed for r in reports)
    print("all checks passed" if ok else "some checks failed")
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
