"""Command-line entry point.

    orrw list [--json]
    orrw run <experiment>... [--config FILE] [flags]
    orrw replay <manifest.json> [--out DIR]

Settings come from an INI file (``[DEFAULT]`` plus one section per
experiment) with command-line flags taking precedence.  Keys that are not
config fields land in ``extra`` and are read as Python literals; keys
named ``const.<name>`` become constant overrides.

Exit codes: 0 when every asserted check passes (vacuous counts as a
pass), 1 on a failed check, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import json
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

from . import __version__
from .experiments import CATALOG, ConfigError, ExperimentConfig, get
from .graph_core import FiberFormatError
from .kernels import BACKEND
from .reports import dumps, write_csv

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

# flag name -> config field, parser
_FIELDS = {
    "fiber": ("fiber", str),
    "delta": ("delta", Fraction),
    "seed": ("seed", int),
    "reps": ("replications", int),
    "replications": ("replications", int),
    "samples": ("samples", int),
    "confidence": ("confidence", float),
    "x": ("x", int),
    "r": ("r", int),
    "d": ("d", int),
    "k": ("k", int),
    "eta": ("eta", float),
    "D": ("D", int),
    "alpha": ("alpha", float),
    "beta": ("beta", float),
    "epsilon": ("epsilon", float),
    "horizon": ("horizon", int),
}
_NOT_CONFIG = {"out", "format"}


def _literal(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def build_config(settings: dict) -> ExperimentConfig:
    """Turn string settings into a validated config."""
    kw: dict = {}
    extra: dict = {}
    consts: dict = {}
    for key, raw in settings.items():
        if key in _NOT_CONFIG:
            continue
        if key.startswith("const."):
            consts[key[6:]] = float(raw)
        elif key in _FIELDS:
            name, conv = _FIELDS[key]
            try:
                kw[name] = conv(raw)
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"{key}: cannot parse {raw!r} ({exc})") from None
        else:
            extra[key] = _literal(raw)
    try:
        return ExperimentConfig(**kw, constant_overrides=consts, extra=extra)
    except (ConfigError, FiberFormatError):
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _read_ini(path: str, experiment: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    if parser.has_section(experiment):
        return dict(parser.items(experiment))
    return dict(parser.defaults())


def _flag_settings(ns) -> dict:
    out = {}
    for key in list(_FIELDS) + ["out", "format"]:
        if key == "replications":
            continue
        v = getattr(ns, key, None)
        if v is not None:
            out[key] = str(v)
    for item in ns.set or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_experiments(names, settings_by_name: dict, out: Path, fmt: str) -> tuple[int, dict]:
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"tool": "orrw", "version": __version__, "backend": BACKEND,
                "started": _now(), "format": fmt, "experiments": []}
    reports = []
    failed = False
    for name in names:
        entry = get(name)
        settings = settings_by_name[name]
        cfg = build_config(settings)
        _progress(f"running {name}")
        t0 = time.perf_counter()
        report = entry.run(cfg)
        wall = time.perf_counter() - t0
        paths = {}
        if fmt in ("json", "both"):
            p = out / f"{name}.json"
            p.write_text(dumps(report))
            paths["json"] = str(p)
        if fmt in ("csv", "both"):
            paths["csv"] = str(write_csv([report], out / f"{name}.csv"))
        reports.append(report)
        failed |= not report.passed
        manifest["experiments"].append({
            "name": name, "settings": settings, "config": cfg.snapshot(), "seed": cfg.seed,
            "verdict": report.verdict, "wall_clock": wall, "reports": paths})
        _progress(f"{name}: {report.verdict} ({wall:.1f}s)")
    manifest["finished"] = _now()
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return (EXIT_FAIL if failed else EXIT_OK), manifest


def _cmd_list(ns) -> int:
    if ns.json:
        print(json.dumps([e.as_dict() for e in CATALOG.values()], indent=2))
        return EXIT_OK
    width = max(len(n) for n in CATALOG)
    for e in CATALOG.values():
        print(f"{e.name:<{width}}  [{e.anchor}] {e.statement}")
        print(f"{'':<{width}}  params: {', '.join(e.params)}; {e.kind}")
    return EXIT_OK


def _cmd_run(ns) -> int:
    names = list(CATALOG) if ns.experiments == ["all"] else ns.experiments
    unknown = [n for n in names if n not in CATALOG]
    if unknown:
        raise ConfigError(f"unknown experiment {unknown[0]!r}; see 'orrw list'")
    flags = _flag_settings(ns)
    settings = {}
    for n in names:
        s = _read_ini(ns.config, n) if ns.config else {}
        s.update(flags)
        settings[n] = s
    out = Path(flags.get("out", "orrw-out"))
    fmt = flags.get("format", "json")
    for n in names:
        build_config(settings[n])
    code, _ = run_experiments(names, settings, out, fmt)
    return code


def _cmd_replay(ns) -> int:
    try:
        manifest = json.loads(Path(ns.manifest).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read manifest {ns.manifest}: {exc}") from None
    src = Path(ns.manifest).parent
    out = Path(ns.out) if ns.out else src / "replay"
    names = [e["name"] for e in manifest["experiments"]]
    settings = {e["name"]: e["settings"] for e in manifest["experiments"]}
    code, new = run_experiments(names, settings, out, manifest.get("format", "json"))
    mismatched = []
    for old_e, new_e in zip(manifest["experiments"], new["experiments"]):
        for kind, old_path in old_e["reports"].items():
            a = Path(old_path)
            if not a.is_absolute() and not a.exists():
                a = src / a.name
            if a.read_bytes() != Path(new_e["reports"][kind]).read_bytes():
                mismatched.append(f"{old_e['name']}.{kind}")
    if mismatched:
        _progress(f"replay differs: {', '.join(mismatched)}")
        return EXIT_FAIL
    _progress("replay identical")
    return code


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orrw", description="Once-reinforced random walk experiments")
    p.add_argument("--version", action="version", version=f"orrw {__version__} ({BACKEND} kernels)")
    sub = p.add_subparsers(dest="command", required=True)

    ls = sub.add_parser("list", help="show the experiment catalog")
    ls.add_argument("--json", action="store_true")
    ls.set_defaults(func=_cmd_list)

    run = sub.add_parser("run", help="run experiments ('all' for every entry)")
    run.add_argument("experiments", nargs="+")
    run.add_argument("--config", help="INI file; [DEFAULT] plus per-experiment sections")
    run.add_argument("--fiber", help="point | path<m> | cycle<m> | complete<m> | file:<path>")
    run.add_argument("--delta", help="reinforcement, a rational such as 10 or 1/1000")
    run.add_argument("--seed", type=int)
    run.add_argument("--reps", type=int)
    run.add_argument("--samples", type=int)
    run.add_argument("--confidence", type=float)
    run.add_argument("--out")
    run.add_argument("--format", choices=("json", "csv", "both"))
    for flag, typ in (("x", int), ("r", int), ("d", int), ("k", int), ("eta", float), ("D", int),
                      ("alpha", float), ("beta", float), ("epsilon", float), ("horizon", int)):
        run.add_argument(f"--{flag}", type=typ)
    run.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="experiment-specific option, e.g. --set cap=1000000")
    run.set_defaults(func=_cmd_run)

    rp = sub.add_parser("replay", help="re-run a manifest and compare reports byte for byte")
    rp.add_argument("manifest")
    rp.add_argument("--out")
    rp.set_defaults(func=_cmd_replay)
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return ns.func(ns)
    except FiberFormatError as exc:
        print(f"orrw: fiber file error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"orrw: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
