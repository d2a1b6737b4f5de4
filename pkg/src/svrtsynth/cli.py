"""Command-line front end.

Every subcommand takes ``--config FILE``: an INI file whose ``[common]`` and
``[<subcommand>]`` sections supply defaults for the flags (``train-pairs = 3``
etc.).  The resolved settings are hashed and the hash, together with the tool
version, is written into every output file, so a rerun of the same settings
reproduces the outputs byte for byte.

Exit codes: 0 success, 2 usage error (bad flags, unknown problem, unreadable
input), 3 runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import os
import shutil
import sys
import tempfile

from . import __version__, boost
from .errors import NoProgramFound, ParseError, SVRTError, UnknownProblem
from .parsing import (degrade_parsing, extract_parsing, parse, profile_from_text, serialize,
                      vector_length, vectorize)
from .problems import PROBLEM_IDS, get_problem, make_dataset, type_table
from .protocol import (AdaBoostAgent, curve_to_gnuplot, learning_curve, make_agent,
                       records_to_csv, run_protocol)
from .rng import make_rng
from .stats import MACHINE_COLUMNS, group_report, published_tables
from .synth import Budget, classify, from_sexpr, synthesize, to_sexpr

log = logging.getLogger("svrtsynth")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3
# settings that never change results and stay out of the config hash
_UNHASHED = {"config", "out", "jobs", "force", "verbose", "command", "func"}


class UsageError(Exception):
    pass


# -- config ----------------------------------------------------------------------------

def _config_defaults(path, command):
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as f:
            cp.read_file(f)
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    except configparser.Error as e:
        raise UsageError(f"bad config {path}: {e}") from None
    out = {}
    for section in ("common", command):
        if cp.has_section(section):
            for k, v in cp.items(section):
                out[k.replace("-", "_")] = v
    return out


def config_hash(args):
    """Short digest of the settings that determine a run's results."""
    items = {k: v for k, v in sorted(vars(args).items()) if k not in _UNHASHED}
    text = json.dumps(items, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def header(args):
    return [f"svrtsynth {__version__}", f"config {config_hash(args)}"]


def _int_list(text):
    try:
        return [int(t) for t in str(text).replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _problem(pid):
    try:
        get_problem(pid)
    except UnknownProblem as e:
        raise UsageError(str(e)) from None
    return pid


def _profile(text):
    try:
        return profile_from_text(text)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _budget(args):
    b = Budget(args.max_cost_bits, args.time_limit, args.wall_clock)
    return b.scaled(args.budget_mult) if args.budget_mult != 1 else b


def _jobs(args):
    return args.jobs if args.jobs else (os.cpu_count() or 1)


# -- output helpers ----------------------------------------------------------------------

def _emit(args, text):
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _commented(args, text, mark="#"):
    return "".join(f"{mark} {h}\n" for h in header(args)) + text


def _read(path):
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from None


def _read_parsing(path):
    try:
        return parse(_read(path))
    except ParseError as e:
        raise UsageError(f"{path}: {e}") from None


def _read_program(path):
    try:
        return from_sexpr(_read(path))
    except (SVRTError, ValueError) as e:
        raise UsageError(f"{path}: {e}") from None


# -- subcommands ----------------------------------------------------------------------------

def cmd_gen(args):
    """Dataset on disk: manifest, PGM images and parsing files."""
    _problem(args.problem)
    profile = _profile(args.degrade)
    if not args.out:
        raise UsageError("gen needs --out DIR")
    target = os.path.abspath(args.out)
    if os.path.exists(target) and not args.force:
        raise UsageError(f"{target} exists (use --force to replace it)")
    ds = make_dataset(args.problem, args.train_pairs, args.test, seed=args.seed)
    hdr = header(args)
    parent = os.path.dirname(target) or "."
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".gen-", dir=parent)
    try:
        os.makedirs(os.path.join(tmp, "images"))
        os.makedirs(os.path.join(tmp, "parsings"))
        for k, e in enumerate(ds.examples):
            with open(os.path.join(tmp, "images", e.name + ".pgm"), "wb") as f:
                f.write(e.canvas.to_pgm(hdr))
            p = extract_parsing(e.ground_truth)
            if not profile.is_identity():
                p = degrade_parsing(p, profile, make_rng(e.seed, 1), e.ground_truth)
            with open(os.path.join(tmp, "parsings", e.name + ".txt"), "w",
                      encoding="utf-8") as f:
                f.write("".join(f"# {h}\n" for h in hdr) + serialize(p))
        with open(os.path.join(tmp, "manifest.txt"), "w", encoding="utf-8") as f:
            f.write(ds.manifest(hdr + [f"degrade {args.degrade}"]))
        if os.path.exists(target):
            shutil.rmtree(target)
        os.replace(tmp, target)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    print(f"wrote {len(ds.examples)} images to {target}")
    return EXIT_OK


def cmd_parse(args):
    """Validate a parsing file; print it canonically or as a feature vector."""
    p = _read_parsing(args.input)
    if args.vectorize:
        v = vectorize(p, args.vectorize)
        _emit(args, " ".join(f"{x:g}" for x in v) + "\n")
    else:
        _emit(args, serialize(p))
    return EXIT_OK


def cmd_degrade(args):
    p = _read_parsing(args.input)
    profile = _profile(args.profile)
    if profile.centre_of_mass:
        raise UsageError("centre_of_mass needs ground truth; use gen --degrade instead")
    _emit(args, serialize(degrade_parsing(p, profile, make_rng(args.seed))))
    return EXIT_OK


def cmd_synth(args):
    parsings = [_read_parsing(f) for f in args.inputs]
    prog = synthesize(parsings, _budget(args))
    _emit(args, _commented(args, to_sexpr(prog) + "\n", ";"))
    return EXIT_OK


def cmd_classify(args):
    test = _read_parsing(args.test_parsing)
    pos, neg = _read_program(args.positive), _read_program(args.negative)
    d = classify(test, pos, neg, make_rng(args.seed), time_limit=args.time_limit)
    _emit(args, f"{d.label} margin={d.margin:g} rule={d.rule}\n")
    return EXIT_OK


def cmd_boost(args):
    """Train and test AdaBoost on generated data; optional model dump."""
    _problem(args.problem)
    profile = _profile(args.degrade)
    rec = run_protocol(args.problem, AdaBoostAgent(args.stumps), args.train_pairs, args.test,
                       args.reps, args.seed, profile, _jobs(args))
    if args.dump:
        ds = make_dataset(args.problem, args.train_pairs, 2, seed=args.seed)
        ps = [degrade_parsing(extract_parsing(e.ground_truth), profile, make_rng(e.seed, 1),
                              e.ground_truth) for e in ds.train]
        X = [vectorize(p, 8) for p in ps]
        y = [1 if e.category.value == "positive" else -1 for e in ds.train]
        with open(args.dump, "w", encoding="utf-8") as f:
            f.write(boost.train(X, y, args.stumps).to_csv(header(args)))
    _emit(args, records_to_csv([rec], header(args)))
    return EXIT_OK


def cmd_eval(args):
    """PerfRecords for several problems, plus the group report."""
    problems = [_problem(p) for p in (args.problems or [args.problem])]
    profile = _profile(args.degrade)
    kw = {"budget": _budget(args)} if args.agent == "ps" else {}
    if args.agent == "adaboost":
        kw = {"n_stumps": args.stumps}
    try:
        agent = make_agent(args.agent, **kw)
    except ValueError as e:
        raise UsageError(str(e)) from None
    out_dir = args.out
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    records, status = [], EXIT_OK
    for pid in problems:
        try:
            records.append(run_protocol(pid, agent, args.train_pairs, args.test, args.reps,
                                        args.seed, profile, _jobs(args)))
        except Exception as e:      # keep finished rows, report the failure
            log.error("agent %s failed on problem %s: %s", args.agent, pid, e)
            status = EXIT_RUNTIME
            break
    text = records_to_csv(records, header(args))
    report = group_report(records, published_tables().human_table()).to_csv(header(args))
    if out_dir:
        _write(os.path.join(out_dir, "records.csv"), text)
        _write(os.path.join(out_dir, "group_report.csv"), report)
    else:
        sys.stdout.write(text)
    return status


def _write(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(tmp, path)


def cmd_curve(args):
    _problem(args.problem)
    kw = {"budget": _budget(args)} if args.agent == "ps" else {}
    try:
        agent = make_agent(args.agent, **kw)
    except ValueError as e:
        raise UsageError(str(e)) from None
    pts = learning_curve(args.problem, agent, args.t, args.reps, args.seed, args.test,
                         _profile(args.degrade), _jobs(args))
    _emit(args, curve_to_gnuplot(pts, header(args)))
    return EXIT_OK


def cmd_tables(args):
    """Published per-problem numbers and the (SS, LR) type grid."""
    t = published_tables()
    lines = []
    if args.type:
        grid = type_table()
        rows = [["SS\\LR"] + [str(lr) for lr in range(4)]]
        for ss in range(4):
            rows.append([str(ss)] + [",".join(f"#{p}" for p in sorted(grid.get((ss, lr), [])))
                                     or "-" for lr in range(4)])
        widths = [max(len(r[c]) for r in rows) for c in range(5)]
        lines += ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    else:
        pids = PROBLEM_IDS
        if args.problem is not None:
            if args.problem not in PROBLEM_IDS:
                raise UsageError(f"unknown problem {args.problem}")
            pids = [args.problem]
        human = t.human_table()
        lines.append("problem human " + " ".join(MACHINE_COLUMNS))
        for p in pids:
            cells = [_cell(human[p])] + [_cell(t.machine[c][p]) for c in MACHINE_COLUMNS]
            lines.append(f"{p} " + " ".join(cells))
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _cell(v):
    return "N/A" if v is None else f"{v:.4f}"


def cmd_report(args):
    """Group report from records CSV files, or from the published columns."""
    human = published_tables().human_table()
    if args.records:
        records = {}
        for path in args.records:
            rows = csv.DictReader(l for l in _read(path).splitlines()
                                  if l.strip() and not l.startswith("#"))
            if rows.fieldnames is None or not {"problem", "beta_star"} <= set(rows.fieldnames):
                raise UsageError(f"{path}: not a records CSV (needs problem and beta_star columns)")
            try:
                for r in rows:
                    records[int(r["problem"])] = float(r["beta_star"])
            except (TypeError, ValueError) as e:
                raise UsageError(f"{path}: bad row {rows.line_num}: {e}") from None
    else:
        col = args.column
        if col not in MACHINE_COLUMNS:
            raise UsageError(f"unknown column {col!r}; choose from {MACHINE_COLUMNS}")
        records = published_tables().machine[col]
    _emit(args, group_report(records, human).to_csv(header(args)))
    return EXIT_OK


# -- parser --------------------------------------------------------------------------------

def _add_budget(p):
    p.add_argument("--max-cost-bits", type=float, default=1024.0)
    p.add_argument("--time-limit", type=float, default=1.0, help="seconds per fit")
    p.add_argument("--wall-clock", type=float, default=60.0, help="seconds per search")
    p.add_argument("--budget-mult", type=float, default=1.0,
                   help="scale time limits and verification count")


def _add_data(p, test=94, reps=40):
    p.add_argument("--train-pairs", type=int, default=3)
    p.add_argument("--test", type=int, default=test)
    p.add_argument("--reps", type=int, default=reps)
    p.add_argument("--degrade", default="corrected", help="preset[,flag=value,...]")


def build_parser():
    ap = argparse.ArgumentParser(prog="svrt", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"svrtsynth {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def command(name, func, help_text, aliases=()):
        p = sub.add_parser(name, help=help_text, aliases=list(aliases))
        p.add_argument("--config", help="INI file with [common] / [<command>] defaults")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=0, help="worker processes (0 = all cores)")
        p.add_argument("--out", help="output file (directory for gen/eval)")
        p.add_argument("-v", "--verbose", action="store_true")
        p.set_defaults(func=func)
        return p

    p = command("gen", cmd_gen, "generate a dataset")
    p.add_argument("--problem", type=int, required=True)
    p.add_argument("--train-pairs", type=int, default=3)
    p.add_argument("--test", type=int, default=94)
    p.add_argument("--degrade", default="corrected")
    p.add_argument("--force", action="store_true", help="replace an existing output dir")

    p = command("parse", cmd_parse, "validate and print a parsing file")
    p.add_argument("input")
    p.add_argument("--vectorize", type=int, metavar="MAX_SHAPES",
                   help=f"print the feature vector (length {vector_length(1)} for 1 shape)")

    p = command("degrade", cmd_degrade, "apply a degradation profile to a parsing")
    p.add_argument("input")
    p.add_argument("--profile", default="reflection_blind")

    p = command("synth", cmd_synth, "synthesize a program from training parsings")
    p.add_argument("inputs", nargs="+")
    _add_budget(p)

    p = command("classify", cmd_classify, "classify a parsing with two programs")
    p.add_argument("test_parsing")
    p.add_argument("--positive", required=True)
    p.add_argument("--negative", required=True)
    p.add_argument("--time-limit", type=float, default=1.0)

    p = command("boost", cmd_boost, "AdaBoost on vectorized parsings")
    p.add_argument("--problem", type=int, required=True)
    _add_data(p, test=80, reps=5)
    p.set_defaults(train_pairs=10)
    p.add_argument("--stumps", type=int, default=100)
    p.add_argument("--dump", help="write the first model as CSV")

    for name, aliases in (("eval", ("run",)),):
        p = command(name, cmd_eval, "run the few-shot protocol", aliases)
        p.add_argument("--agent", default="ps", help="ps, adaboost, chance or oracle")
        p.add_argument("--problem", type=int, default=1)
        p.add_argument("--problems", type=_int_list)
        p.add_argument("--stumps", type=int, default=100)
        _add_data(p)
        _add_budget(p)

    p = command("curve", cmd_curve, "learning curve alpha(t)")
    p.add_argument("--agent", default="ps")
    p.add_argument("--problem", type=int, required=True)
    p.add_argument("--t", type=_int_list, default=[1, 2, 3, 4, 5])
    _add_data(p, reps=5)
    _add_budget(p)

    p = command("tables", cmd_tables, "print the published reference numbers")
    p.add_argument("--problem", type=int)
    p.add_argument("--type", action="store_true", help="print the (SS, LR) grid")

    p = command("report", cmd_report, "group report by (SS, LR) type")
    p.add_argument("records", nargs="*", help="records CSV files from eval")
    p.add_argument("--column", default="ps_corrected",
                   help="published column to report when no records are given")
    return ap


def parse_args(argv=None):
    ap = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = ap.parse_args(argv)
    if args.config:
        try:
            defaults = _config_defaults(args.config, args.command)
        except UsageError as e:
            ap.error(str(e))
        sub = ap._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        typed = {}
        for k, v in defaults.items():
            if k not in known:
                ap.error(f"config key {k!r} is not an option of {args.command}")
            action = known[k]
            if action.type is not None:
                typed[k] = action.type(v)
            elif isinstance(action.default, bool):
                typed[k] = v.lower() in ("1", "true", "yes", "on")
            else:
                typed[k] = v
        sub.set_defaults(**typed)
        args = ap.parse_args(argv)
    return args


def main(argv=None):
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"svrt: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownProblem as e:
        print(f"svrt: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NoProgramFound, SVRTError, OSError, ValueError) as e:
        print(f"svrt: failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
