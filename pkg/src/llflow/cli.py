"""Command line interface: run, validate, list.

Exit codes: 0 success / all properties pass, 1 configuration error,
2 numerical failure, 3 acceptance-property failure.
"""

import argparse
import json
import sys
from importlib import resources

from . import config as cfgmod
from . import scenarios


def _shipped():
    out = {}
    base = resources.files("llflow.data").joinpath("scenarios")
    for entry in base.iterdir():
        if entry.name.endswith(".json"):
            out[entry.name[:-5]] = entry
    return out


def cmd_list(_args):
    shipped = _shipped()
    for name in sorted(shipped):
        with shipped[name].open() as fh:
            doc = json.load(fh)
        print(f"{name:20s} scenario={doc['scenario']:18s} "
              f"grid={doc['grid']['n1']}x{doc['grid']['n2']}")
    return 0


def _resolve(path):
    shipped = _shipped()
    if path in shipped:
        return json.loads(shipped[path].read_text())
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return None
    except json.JSONDecodeError as exc:
        print(f"config is not valid JSON: {exc}", file=sys.stderr)
        return None


def cmd_validate(args):
    doc = _resolve(args.config)
    if doc is None:
        return 1
    errors = cfgmod.validate_config(doc)
    if errors:
        print(f"{args.config}: {len(errors)} problem(s)")
        for e in errors:
            print(f"  - {e}")
        return 1
    print(f"{args.config}: valid ({doc['scenario']})")
    return 0


def cmd_run(args):
    doc = _resolve(args.config)
    if doc is None:
        return 1
    errors = cfgmod.validate_config(doc)
    if errors:
        print(f"{args.config}: invalid configuration", file=sys.stderr)
        for e in errors:
            print(f"  - {e}", file=sys.stderr)
        return 1
    cfg = cfgmod.ScenarioConfig(doc, path=args.config)
    outdir = args.output_dir or cfg.output_dir
    code, summary = scenarios.run_scenario(cfg, outdir)
    if summary is None:
        print(f"{cfg.scenario}: numerical failure "
              f"(see {outdir}/failure.json)", file=sys.stderr)
        return code
    for name, p in sorted(summary["properties"].items()):
        status = "PASS" if p["pass"] else "FAIL"
        print(f"  [{status}] {name}: {p['value']:.6g}"
              + (f" (threshold {p['threshold']:.6g})"
                 if "threshold" in p else ""))
    print(f"{cfg.scenario}: "
          + ("all properties pass" if summary["all_pass"]
             else "PROPERTY FAILURE"))
    return code


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="llflow",
        description="Geometric-flow laboratory on the hyperbolic plane")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config",
                       help="path to a JSON config, or a shipped name")
    p_run.add_argument("--output-dir", default=None,
                       help="override the config's output directory")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="validate a config")
    p_val.add_argument("config")
    p_val.set_defaults(func=cmd_validate)

    p_list = sub.add_parser("list", help="list shipped scenario configs")
    p_list.set_defaults(func=cmd_list)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
