"""Command-line entry point: ``graphonlab <subcommand> [flags]``.

Graphon literals use ``name:params`` (``constant:0.5``, ``graph:Bw``,
``turan:3``, ``wrs:2,0``, ``string:1/8``) or ``@file.json``.  Graph flags
take a graph6 string or ``@file.g6``.  Class flags use the class registry
syntax (``kt_free:3``, ``crs:3,1``, ``split``, ...).
"""

from __future__ import annotations

import argparse
import json
import re
import secrets
import sys
from math import comb
from pathlib import Path

from . import __version__
from .classes import census, colouring_number, parse_class
from .cutmetrics import (
    Kernel,
    count_balls,
    cut_norm,
    cut_norm_exact,
    cut_norm_heuristic,
    d_box,
    delta_box_upper,
    delta_graph_graphon,
)
from .errors import CapacityError, DomainError, GraphonLabError, ParseError
from .experiments import (
    default_threads,
    emit,
    run_ball_count,
    run_convergence,
    run_entropy_rate,
    run_growth,
    run_regularity,
    standard_corpus,
)
from .graphons import (
    Partition,
    StepGraphon,
    bar,
    edge_density,
    entropy,
    make,
    p_induced,
    sample,
    step,
)
from .graphs import Graph, canonicalize, automorphism_count, from_graph6, read_graph6_file, to_graph6

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


# -- literal parsers ----------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror}") from None


def graphon_literal(text: str) -> StepGraphon:
    """``name:params`` or ``@file.json`` to a step graphon."""
    text = text.strip()
    if text.startswith("@"):
        return StepGraphon.from_json(_read(text[1:]))
    kind, _, arg = text.partition(":")
    if kind in ("graph", "from_graph"):
        return make(kind, graph_literal(arg))
    params = [p for p in arg.split(",") if p] if arg else []
    if kind in ("turan", "wrs"):
        try:
            params = [int(p) for p in params]
        except ValueError:
            raise DomainError(f"{kind} takes integer parameters, got {arg!r}") from None
    try:
        return make(kind, *params)
    except TypeError:
        raise DomainError(f"wrong number of parameters for {kind!r} in {text!r}") from None


def graph_literal(text: str) -> Graph:
    """graph6 string or ``@file.g6`` (first graph of the file)."""
    text = text.strip()
    if text.startswith("@"):
        graphs = read_graph6_file(text[1:])
        if not graphs:
            raise ParseError(f"{text[1:]} contains no graphs")
        return graphs[0]
    return from_graph6(text)


def kernel_literal(text: str) -> Kernel:
    if not text.startswith("@"):
        raise DomainError("kernels are read from a JSON file: --kernel @file.json")
    return Kernel.from_json(_read(text[1:]))


def int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise DomainError(f"expected comma-separated integers, got {text!r}") from None


def float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise DomainError(f"expected comma-separated numbers, got {text!r}") from None


def positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise DomainError(f"expected an integer, got {text!r}") from None
    if n < 1:
        raise DomainError(f"expected a positive integer, got {n}")
    return n


# -- output -------------------------------------------------------------------


def fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _jsonable(x):
    if isinstance(x, float):
        return float(format(x, ".12g"))
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _print(args, record: dict, primary: str | None = None) -> None:
    """Print ``record`` as JSON, or as text: the primary field alone or ``key: value`` lines."""
    out = args.stdout
    if args.json:
        out.write(json.dumps(_jsonable(record), sort_keys=True) + "\n")
    elif primary is not None:
        out.write(fmt(record[primary]) + "\n")
    else:
        for key, value in record.items():
            if isinstance(value, (list, tuple)):
                value = " ".join(fmt(v) for v in value)
            out.write(f"{key}: {fmt(value)}\n")


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(32)
    args.stderr.write(f"seed: {args.seed}\n")
    return args.seed


def _threads(args) -> int:
    return args.threads if args.threads is not None else default_threads()


def _emit_report(args, report) -> None:
    if args.format is None:
        fmt_ = "json" if args.json else "csv"
    else:
        fmt_ = args.format
    text = emit(report, fmt_, args.output, digits=12)
    if args.output is None:
        args.stdout.write(text)
    else:
        args.stderr.write(f"wrote {args.output}\n")


# -- subcommands --------------------------------------------------------------


def cmd_entropy(args):
    w = args.graphon
    _print(args, {"entropy": entropy(w), "edge_density": edge_density(w)}, primary=None if args.verbose else "entropy")


def cmd_density(args):
    h = args.pattern
    if args.graphon is None:
        raise DomainError("density needs --graphon")
    _print(args, {"pattern": to_graph6(h), "p_induced": p_induced(h, args.graphon)}, primary="p_induced")


def cmd_cutnorm(args):
    if args.kernel is not None:
        kern = args.kernel
    elif args.left is not None and args.right is not None:
        kern = Kernel.difference(args.left, args.right)
    else:
        raise DomainError("cutnorm needs --kernel, or both --left and --right")
    if args.method == "exact":
        res = cut_norm_exact(kern)
    elif args.method == "heuristic":
        res = cut_norm_heuristic(kern, restarts=args.restarts, seed=_seed(args))
    else:
        res = cut_norm(kern, restarts=args.restarts, seed=_seed(args) if kern.k > 24 else 0)
    s, t = res.witness
    _print(args, {"cut_norm": res.value, "exact": res.exact, "S": list(s), "T": list(t)},
           primary=None if args.verbose else "cut_norm")


def cmd_cutdist(args):
    if args.graph is not None:
        if args.right is None:
            raise DomainError("cutdist --graph needs --right GRAPHON")
        res = delta_graph_graphon(args.graph, args.right, seed=_seed(args))
        record = {"delta_upper": res.value, "kind": res.kind, "method": res.method}
    else:
        if args.left is None or args.right is None:
            raise DomainError("cutdist needs --left and --right (or --graph and --right)")
        res = delta_box_upper(args.left, args.right, args.m, seed=_seed(args))
        record = {"delta_upper": res.value, "d_box": d_box(args.left, args.right), "kind": res.kind,
                  "method": res.method}
    _print(args, record, primary=None if args.verbose else "delta_upper")


def cmd_step(args):
    w = args.graphon
    if args.labels is not None:
        if len(args.labels) != w.k:
            raise DomainError(f"--labels needs one label per block ({w.k}), got {len(args.labels)}")
        stepped = step(w, Partition.from_assignment(args.labels))
    elif args.parts is not None:
        stepped = bar(w, args.parts)
    else:
        raise DomainError("step needs --parts K or --labels")
    text = json.dumps(stepped.to_dict(), sort_keys=True) + "\n"
    _write_or_print(args, text)


def cmd_sample(args):
    g = sample(args.graphon, args.n, _seed(args))
    _write_or_print(args, to_graph6(g) + "\n")


def cmd_census(args):
    row = census(args.cls, args.n, method=args.method)
    if args.json:
        _print(args, row.to_dict())
    else:
        args.stdout.write("n,labelled,unlabelled,exponent\n")
        d = row.to_dict()
        args.stdout.write(",".join(fmt(d[k]) for k in ("n", "labelled", "unlabelled", "exponent")) + "\n")


def cmd_growth(args):
    _emit_report(args, run_growth(args.cls, args.n_max))


def cmd_colouring(args):
    cn = colouring_number(args.cls, t_max=args.t_max, n_check=args.n_check)
    prediction = 1 - 1 / cn.r if not cn.at_cap else None
    _print(args, {"r": cn.r, "s": cn.s, "at_cap": cn.at_cap, "prediction": prediction})


def cmd_converge(args):
    seed = _seed(args)
    report = run_convergence(args.cls, args.maximizer, args.ns, args.samples, seed, threads=_threads(args))
    _emit_report(args, report)


def cmd_entropy_rate(args):
    _emit_report(args, run_entropy_rate(args.graphon, args.n_max))


def cmd_balls(args):
    if args.deltas is None:
        raise DomainError("balls needs --delta")
    if len(args.deltas) == 1 and not args.report:
        bc = count_balls(args.n, args.deltas[0], args.graphon)
        pairs = comb(args.n, 2)
        _print(args, {"n": bc.n, "delta": bc.delta, "n_hat": bc.n_hat, "n_full": bc.n_full,
                      "n_full_kind": bc.n_full_kind, "pairs": pairs})
        return
    _emit_report(args, run_ball_count(args.graphon, args.n, args.deltas, threads=_threads(args)))


def cmd_regularity(args):
    seed = _seed(args)
    if args.corpus:
        _emit_report(args, run_regularity(standard_corpus(seed), args.ks, seed, threads=_threads(args)))
        return
    subject = args.graph if args.graph is not None else args.graphon
    if subject is None:
        raise DomainError("regularity needs --graphon, --graph or --corpus")
    label = to_graph6(subject) if isinstance(subject, Graph) else "graphon"
    _emit_report(args, run_regularity([(label, subject)], args.ks, seed, threads=_threads(args)))


def cmd_graphon_make(args):
    _write_or_print(args, json.dumps(args.literal.to_dict(), sort_keys=True) + "\n")


def cmd_graph6(args):
    g = args.graph
    if args.canonical:
        g = canonicalize(g)
    record = {"graph6": to_graph6(g), "n": g.n, "edges": g.num_edges,
              "automorphisms": automorphism_count(g)}
    if args.json:
        record["edge_list"] = [list(e) for e in g.edges()]
    _print(args, record)


def _write_or_print(args, text):
    if args.output is None:
        args.stdout.write(text)
        return
    try:
        Path(args.output).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DomainError(f"cannot write {args.output}: {exc.strerror}") from None
    args.stderr.write(f"wrote {args.output}\n")


# -- parser -------------------------------------------------------------------


def _examples(*lines):
    return "examples:\n" + "\n".join(f"  graphonlab {line}" for line in lines)


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad values through our exception types."""

    def _get_value(self, action, arg_string):
        if action.type is None or not callable(action.type):
            return super()._get_value(action, arg_string)
        try:
            return action.type(arg_string)
        except CapacityError:
            raise
        except GraphonLabError as exc:
            raise argparse.ArgumentError(action, str(exc)) from None
        except (TypeError, ValueError):
            raise argparse.ArgumentError(action, f"invalid value {arg_string!r}") from None


def _common(p, report=False, seeded=False):
    p.add_argument("--json", action="store_true", help="machine-readable JSON output")
    p.add_argument("--config", metavar="FILE", help="TOML file supplying flag defaults")
    p.add_argument("--threads", type=positive_int, metavar="N",
                   help="worker threads (default: $GRAPHONLAB_THREADS or all cores)")
    p.add_argument("--output", "-o", metavar="PATH", help="write to PATH instead of stdout")
    p.add_argument("--verbose", "-v", action="store_true", help="print every field")
    if seeded:
        p.add_argument("--seed", type=int, help="RNG seed (default: random, echoed on stderr)")
    if report:
        p.add_argument("--format", choices=("json", "csv", "svg"), help="report format (default csv, or json with --json)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="graphonlab", description=__doc__.splitlines()[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"graphonlab {__version__}")
    parser.add_argument("--config", metavar="FILE", help="TOML file supplying flag defaults")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    raw = argparse.RawDescriptionHelpFormatter

    def add(name, func, help_, examples, **kw):
        p = sub.add_parser(name, help=help_, description=help_, epilog=_examples(*examples), formatter_class=raw)
        _common(p, **kw)
        p.set_defaults(func=func)
        return p

    p = add("entropy", cmd_entropy, "entropy of a step graphon",
            ["entropy --graphon wrs:2,0", "entropy --graphon string:1/8 --verbose"])
    p.add_argument("--graphon", type=graphon_literal, required=True)

    p = add("density", cmd_density, "induced density of a pattern graph in a step graphon",
            ["density --pattern Bw --graphon constant:0.5"])
    p.add_argument("--pattern", type=graph_literal, required=True, help="graph6 pattern")
    p.add_argument("--graphon", type=graphon_literal)

    p = add("cutnorm", cmd_cutnorm, "cut norm of a kernel or of the difference of two graphons",
            ["cutnorm --left wrs:2,0 --right constant:0.25", "cutnorm --left turan:3 --right turan:2 --json"],
            seeded=True)
    p.add_argument("--kernel", type=kernel_literal, help="@file.json holding a kernel")
    p.add_argument("--left", type=graphon_literal)
    p.add_argument("--right", type=graphon_literal)
    p.add_argument("--method", choices=("auto", "exact", "heuristic"), default="auto")
    p.add_argument("--restarts", type=positive_int, default=8)

    p = add("cutdist", cmd_cutdist, "upper bound on the cut distance",
            ["cutdist --left turan:2 --right wrs:2,0 --m 4 --seed 1",
             "cutdist --graph Bw --right constant:0.5 --seed 1"], seeded=True)
    p.add_argument("--left", type=graphon_literal)
    p.add_argument("--right", type=graphon_literal)
    p.add_argument("--graph", type=graph_literal, help="graph6 graph compared against --right")
    p.add_argument("--m", type=positive_int, default=6, help="alignment resolution")

    p = add("step", cmd_step, "conditional expectation of a graphon on a block partition",
            ["step --graphon string:1/8 --labels 0,0,1,1,1", "step --graphon turan:4 --parts 2"])
    p.add_argument("--graphon", type=graphon_literal, required=True)
    p.add_argument("--parts", type=positive_int, help="equal-mass interval partition into K parts")
    p.add_argument("--labels", type=int_list, help="group label per block")

    p = add("sample", cmd_sample, "draw G(n, W) and print it as graph6",
            ["sample --graphon wrs:2,0 --n 10 --seed 7"], seeded=True)
    p.add_argument("--graphon", type=graphon_literal, required=True)
    p.add_argument("--n", type=int, required=True)

    p = add("census", cmd_census, "labelled and unlabelled member counts of a class",
            ["census --class kt_free:3 --n 3", "census --class split --n 5 --json"])
    p.add_argument("--class", dest="cls", type=parse_class, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=("orbits", "scan"), default="orbits")

    p = add("growth", cmd_growth, "census series with the predicted exponent",
            ["growth --class kt_free:3 --n-max 5", "growth --class all --n-max 4 --format json"], report=True)
    p.add_argument("--class", dest="cls", type=parse_class, required=True)
    p.add_argument("--n-max", type=int, required=True)

    p = add("colouring", cmd_colouring, "colouring number of a class (finite certificate)",
            ["colouring --class bipartite", "colouring --class split --n-check 5"])
    p.add_argument("--class", dest="cls", type=parse_class, required=True)
    p.add_argument("--t-max", type=positive_int, default=5)
    p.add_argument("--n-check", type=positive_int, default=6)

    p = add("converge", cmd_converge, "cut distance of uniform class members to a maximizer",
            ["converge --class kt_free:3 --maximizer wrs:2,0 --ns 4,5 --samples 10 --seed 3"],
            report=True, seeded=True)
    p.add_argument("--class", dest="cls", type=parse_class, required=True)
    p.add_argument("--maximizer", type=graphon_literal, required=True)
    p.add_argument("--ns", type=int_list, required=True)
    p.add_argument("--samples", type=positive_int, default=200)

    p = add("entropy-rate", cmd_entropy_rate, "exact entropy of G(n, W) against the graphon entropy",
            ["entropy-rate --graphon wrs:2,0 --n-max 5"], report=True)
    p.add_argument("--graphon", type=graphon_literal, required=True)
    p.add_argument("--n-max", type=int, required=True)

    p = add("balls", cmd_balls, "count graphs within a cut-distance ball of a graphon",
            ["balls --graphon wrs:2,0 --n 4 --delta 0.2", "balls --graphon wrs:2,0 --n 4 --delta 0.1,0.2,0.3"],
            report=True)
    p.add_argument("--graphon", type=graphon_literal, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", dest="deltas", type=float_list)
    p.add_argument("--report", action="store_true", help="emit a report even for a single delta")

    p = add("regularity", cmd_regularity, "weak regularity partitions and their residuals",
            ["regularity --graphon turan:3 --ks 2,3 --seed 0", "regularity --graph Bw --ks 2 --seed 0"],
            report=True, seeded=True)
    p.add_argument("--graphon", type=graphon_literal)
    p.add_argument("--graph", type=graph_literal)
    p.add_argument("--corpus", action="store_true", help="run the standard 20-subject corpus")
    p.add_argument("--ks", type=int_list, default=[2, 4, 8])

    p = sub.add_parser("graphon", help="graphon utilities", description="graphon utilities",
                       formatter_class=raw, epilog=_examples("graphon make wrs:2,1"))
    gsub = p.add_subparsers(dest="graphon_command", metavar="ACTION", parser_class=_Parser, required=True)
    q = gsub.add_parser("make", help="write a named graphon as JSON", description="write a named graphon as JSON",
                        epilog=_examples("graphon make wrs:2,1", "graphon make string:1/16"), formatter_class=raw)
    _common(q)
    q.add_argument("literal", type=graphon_literal, help="graphon literal such as turan:3")
    q.set_defaults(func=cmd_graphon_make)

    p = add("graph6", cmd_graph6, "inspect or canonicalize a graph6 graph",
            ["graph6 Bw", "graph6 DQc --canonical --json"])
    p.add_argument("graph", type=graph_literal, help="graph6 string or @file.g6")
    p.add_argument("--canonical", action="store_true")
    return parser


# -- config -------------------------------------------------------------------


def _find_subparser(parser, argv):
    """Subparser that ``argv`` selects, following nested subcommands."""
    current = parser
    for tok in argv:
        actions = [a for a in current._actions if isinstance(a, argparse._SubParsersAction)]
        if not actions:
            break
        if tok in actions[0].choices:
            current = actions[0].choices[tok]
    return current


def _key_line(text: str, key: str) -> int | None:
    pat = re.compile(rf"^\s*[\"']?{re.escape(key)}[\"']?\s*=")
    for i, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return i
    return None


def load_config(path: str) -> tuple[dict, str]:
    """Parse a TOML config into a flat ``{key: value}`` mapping plus its source text."""
    text = _read(path)
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    flat = {}
    for key, value in doc.items():
        if isinstance(value, dict):
            line = _key_line(text, key) or _table_line(text, key)
            raise DomainError(f"{path}:{line}: tables are not supported (key {key!r})")
        flat[key] = value
    return flat, text


def _table_line(text, key):
    for i, line in enumerate(text.splitlines(), 1):
        if line.strip() == f"[{key}]":
            return i
    return None


def _apply_config(sub, cfg: dict, text: str, path: str):
    by_key = {}
    for action in sub._actions:
        if action.dest in ("help", "config"):
            continue
        for opt in action.option_strings:
            if opt.startswith("--"):
                by_key[opt[2:]] = action
                by_key[opt[2:].replace("-", "_")] = action
        if not action.option_strings:
            by_key[action.dest] = action
    defaults = {}
    for key, value in cfg.items():
        if key == "subcommand":
            continue
        action = by_key.get(key)
        if action is None:
            raise DomainError(f"{path}:{_key_line(text, key)}: unknown key {key!r} for this subcommand")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            if not isinstance(value, bool):
                raise DomainError(f"{path}:{_key_line(text, key)}: {key!r} must be true or false")
            defaults[action.dest] = value
            continue
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        raw = str(value).lower() if isinstance(value, bool) else str(value)
        if action.choices is not None and raw not in action.choices:
            raise DomainError(f"{path}:{_key_line(text, key)}: {key!r} must be one of {sorted(action.choices)}")
        try:
            defaults[action.dest] = action.type(raw) if action.type else raw
        except (GraphonLabError, TypeError, ValueError) as exc:
            raise DomainError(f"{path}:{_key_line(text, key)}: bad value for {key!r}: {exc}") from None
        if action.required:
            action.required = False
    sub.set_defaults(**defaults)


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


# -- entry points -------------------------------------------------------------


def dispatch(argv=None, stdout=None, stderr=None) -> int:
    """Run one command line; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        path = _config_path(argv)
        if path is not None:
            cfg, text = load_config(path)
            names = {a for a in parser._subparsers._group_actions[0].choices}
            if not any(tok in names for tok in argv):
                command = cfg.get("subcommand")
                if not isinstance(command, str) or not command:
                    raise DomainError(f"{path}: no subcommand given on the command line or in the config")
                argv = command.split() + argv
            _apply_config(_find_subparser(parser, argv), cfg, text, path)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return 0 if exc.code in (0, None) else 2
        if getattr(args, "func", None) is None:
            parser.print_usage(stderr)
            stderr.write("graphonlab: error: a subcommand is required\n")
            return 2
        args.stdout, args.stderr = stdout, stderr
        args.func(args)
        return 0
    except GraphonLabError as exc:
        stderr.write(f"graphonlab: error: {exc}\n")
        return exc.exit_code


def main() -> None:
    sys.exit(dispatch())
