import argparse
import csv
import datetime
import importlib.util
import json
import os
import sys
import time
import warnings
from contextlib import redirect_stdout
from io import StringIO
from pathlib import Path

import networkx as nx

from core.config import DEFAULTS, VERSION, resolve_config
from core.coverage import build
from core.errors import PermcoverError
from core.schemas import validate_payload
from core.session import RED, RESET, YELLOW, SessionLog

MODULES_DIR = Path(__file__).parent / "modules"

# global flag -> RunConfig key
GLOBAL_FLAGS = {
    "workers": "workers",
    "cache_dir": "cache_dir",
    "max_n": "max_n",
    "budget_seconds": "budget_seconds",
}


class PermcoverCLI:
    def __init__(self):
        self.graph = nx.Graph()
        self.modules = self.load_modules()
        self.config = None
        self.session = SessionLog(DEFAULTS["log_dir"], enabled=False)
        self.warnings = []
        self.started = time.perf_counter()
        self._graphs = {}
        self._caught = []

    def load_modules(self):
        modules = {}
        for file in sorted(os.listdir(MODULES_DIR)):
            if file.endswith(".py") and not file.startswith("__"):
                module_name = file[:-3]
                file_path = MODULES_DIR / file
                try:
                    spec = importlib.util.spec_from_file_location(module_name, file_path)
                    mod = importlib.util.module_from_spec(spec)
                    spec.loader.exec_module(mod)
                    cls = getattr(mod, module_name.capitalize(), None)
                    if cls:
                        instance = cls()
                        instance.cli = self
                        instance.graph = self.graph
                        modules[getattr(instance, "command", module_name)] = instance
                except Exception as e:
                    print(f"Failed to load module '{module_name}': {e}", file=sys.stderr)
        return modules

    # ─── Session ───────────────────────────────────────────
    def start_session(self, config, log_enabled=True):
        self.config = config
        self.session = SessionLog(config.log_dir, enabled=log_enabled)
        self.started = time.perf_counter()
        self.warnings = []
        self.log(f"permcover {VERSION} {config.subcommand} {json.dumps(config.params, default=str)}")

    def log(self, text, module_name=None):
        self.session.log(text, module_name or (self.config.subcommand if self.config else None))

    def warn(self, message):
        self.warnings.append(message)
        print(f"{YELLOW}Warning:{RESET} {message}", file=sys.stderr)
        self.log(f"warning: {message}")

    def coverage_graph(self, n):
        if n not in self._graphs:
            t0 = time.perf_counter()
            self._graphs[n] = build(n, max_n=self.config.max_n)
            self.log(f"built coverage graph n={n} in {time.perf_counter() - t0:.3f}s")
        return self._graphs[n]

    # ─── Emission ──────────────────────────────────────────
    def envelope(self, payload):
        return {
            "config": self.config.to_dict(),
            "timestamp": datetime.datetime.now().isoformat(timespec="seconds"),
            "wall_time_ms": round((time.perf_counter() - self.started) * 1000.0, 3),
            "payload": payload,
            "warnings": list(self.warnings),
            "version": VERSION,
        }

    def emit(self, kind, payload, out):
        validate_payload(kind, payload)
        self.collect_warnings()
        if out:
            path = Path(out)
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w") as f:
                json.dump(self.envelope(payload), f, indent=2)
                f.write("\n")
            self.log(f"wrote {kind} payload to {path}")
        return payload

    def emit_csv(self, kind, columns, rows, out):
        validate_payload(kind, {"columns": columns, "rows": rows})
        if out:
            path = Path(out)
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(columns)
                writer.writerows(["" if cell is None else cell for cell in row] for row in rows)
            self.log(f"wrote {len(rows)} {kind} rows to {path}")

    def exportgraph(self, filename):
        if not self.graph:
            print("No graph to export.")
            return None
        dot_path = Path(filename)
        styled = self.graph.copy()
        styled.graph["graph"] = {"rankdir": "LR"}
        styled.graph["node"] = {"style": "filled", "fontname": "Helvetica"}
        for node, attrs in styled.nodes(data=True):
            kind = attrs.get("kind", "default")
            shape, color = "ellipse", "white"
            if kind == "pattern":
                shape, color = "box", "lightblue"
            elif kind == "cover":
                shape, color = "ellipse", "lightgreen"
            attrs.update(shape=shape, fillcolor=color)
        nx.drawing.nx_pydot.write_dot(styled, dot_path)
        print(f"Graph exported to {dot_path}")
        self.log(f"exported graph with {styled.number_of_nodes()} nodes to {dot_path}")
        return dot_path

    # ─── Dispatch ──────────────────────────────────────────
    def run(self, command, args):
        module = self.modules.get(command)
        if not module:
            raise PermcoverError(f"Unknown command: {command}")
        buffer = StringIO()
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                self._caught = caught
                with redirect_stdout(buffer):
                    module.run(args)
        finally:
            self.collect_warnings()
            output = buffer.getvalue()
            if output and not self.config.quiet:
                print(output, end="")
            if output:
                self.log(output)

    def close(self):
        self.session.close()

    def collect_warnings(self):
        for w in self._caught:
            message = str(w.message)
            if message not in self.warnings:
                self.warn(message)
        del self._caught[:]


def global_options(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    flag_default = argparse.SUPPRESS if suppress else False
    parser.add_argument("--quiet", action="store_true", default=flag_default,
                        help="Suppress the human-readable summary")
    parser.add_argument("--no-log", action="store_true", default=flag_default,
                        help="Do not write a session log")
    parser.add_argument("--no-cache", action="store_true", default=flag_default,
                        help="Neither read nor write the certificate cache")
    parser.add_argument("--workers", type=int, default=default,
                        help="Worker processes for Monte Carlo trials")
    parser.add_argument("--cache-dir", default=default, help="Certificate cache directory")
    parser.add_argument("--max-n", type=int, default=default, help="Largest n to build")
    parser.add_argument("--budget-seconds", type=float, default=default,
                        help="Default time budget for exact solvers")
    return parser


def build_parser(cli):
    common = global_options(argparse.ArgumentParser(add_help=False), suppress=True)
    parser = global_options(
        argparse.ArgumentParser(
            prog="permcover",
            description="Covers of S_n by (n+1)-permutations: counts, constructions, thresholds.",
        ),
        suppress=False,
    )
    parser.add_argument("--version", action="version", version=f"permcover {VERSION}")
    parser.add_argument("--replay", metavar="ENVELOPE",
                        help="Re-run the command recorded in an emitted JSON document")
    parser.add_argument("--out", help="Output file for --replay")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name, module in cli.modules.items():
        sp = sub.add_parser(
            name, parents=[common], help=module.help.splitlines()[0],
            description=module.help,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        module.add_arguments(sp)
    return parser


GLOBAL_DESTS = {"quiet", "no_log", "no_cache", "workers", "cache_dir", "max_n",
                "budget_seconds", "replay", "command", "out"}


def replay_arguments(path, out=None):
    try:
        with open(path) as f:
            config = json.load(f)["config"]
        command = config["subcommand"]
        params = dict(config["params"])
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise PermcoverError(f"cannot replay '{path}': {e}")
    flags = {key: config.get(key) for key in GLOBAL_FLAGS.values()}
    params["out"] = out
    return command, flags, params


def main(argv=None):
    cli = PermcoverCLI()
    parser = build_parser(cli)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    try:
        if args.replay:
            command, flags, params = replay_arguments(args.replay, args.out)
        else:
            if not args.command:
                parser.print_usage(sys.stderr)
                print("permcover: error: a command is required", file=sys.stderr)
                return 2
            command = args.command
            flags = {key: getattr(args, dest, None) for dest, key in GLOBAL_FLAGS.items()}
            params = {k: v for k, v in vars(args).items() if k not in GLOBAL_DESTS}
            params["out"] = getattr(args, "out", None)
        flags["quiet"] = bool(getattr(args, "quiet", False))
        flags["use_cache"] = not getattr(args, "no_cache", False)
        config = resolve_config(
            command, flags={k: v for k, v in flags.items() if v is not None},
            params={k: v for k, v in params.items() if k != "out"},
        )
    except PermcoverError as e:
        print(f"{RED}Error:{RESET} {e}", file=sys.stderr)
        return e.exit_code

    cli.start_session(config, log_enabled=not getattr(args, "no_log", False))
    try:
        cli.run(command, argparse.Namespace(**params))
    except PermcoverError as e:
        print(f"{RED}Error:{RESET} {e}", file=sys.stderr)
        cli.log(f"error: {e}")
        return e.exit_code
    except Exception as e:
        print(f"{RED}Error running {command}:{RESET} {e}", file=sys.stderr)
        cli.log(f"error running {command}: {e!r}")
        return 1
    finally:
        cli.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
