"""Command-line entry point: ``seqspec {generate,run,bench,diagnose}``.

Exit status is 0 on success, 1 on a usage error and 2 when the run
itself fails. Every random draw flows from ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import BaselineConfig, run_baseline
from .bench import METHODS, BenchConfig, emit, partition_error, run_bench
from .datagen import ProblemInstance, builtin_instance, gen_circle_instance, ingest_labeled
from .diagnostics import concentration_bound, deviation_frequency, diagnose, worst_pair
from .exceptions import SeqSpecError
from .incremental import IAConfig, run_ia_seq_spec
from .kernel_mmd import KernelConfig
from .sequential import THRESHOLD_FORMS, SeqConfig, default_max_t, run_seq_spec
from .spectral import build_affinity

BUILTINS = ("circle", "bridge", "two-block")

# Documented defaults. Options are parsed with None so that values given on
# the command line, in --config, by the instance and here can be told apart.
DEFAULTS = {
    "sigma_a": 1.0,
    "sigma_g": 1.0,
    "trials": 2000,
    "seed": 0,
    "p": 4,
    "q": 0.7,
    "r": 50,
    "threshold_form": None,  # arcsin for spectral methods, ratio for baselines
    "format": "csv",
    "jobs": 1,
    "splits": 2,
    "check_every": 1,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float(text):
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def parse_grid(text: str) -> list[float]:
    """``a:b:s`` (inclusive of ``b``) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, s = (float(x) for x in text.split(":"))
            if s <= 0 or b < a:
                raise ValueError
            n = int(math.floor((b - a) / s + 1e-9)) + 1
            return [round(a + k * s, 12) for k in range(n)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use start:stop:step or a,b,c") from None


def _add_instance(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--builtin", choices=BUILTINS, help="built-in instance")
    g.add_argument("--instance", metavar="PATH", help="instance file written by 'generate'")


def _add_model(p):
    p.add_argument("--method", choices=METHODS, help="algorithm (default: seq-spec)")
    p.add_argument("--k", type=int, help="number of clusters (default: the instance's K)")
    p.add_argument("--sigma-a", type=_float, help="affinity bandwidth (default: the instance's recommended value, else 1.0)")
    p.add_argument("--sigma-g", type=_float, help="MMD kernel bandwidth (default: the instance's recommended value, else 1.0)")
    p.add_argument("--p", type=int, help="ia-seq-spec block size (default: 4)")
    p.add_argument("--q", type=_float, help="ia-seq-spec energy fraction (default: 0.7)")
    p.add_argument("--r", type=int, help="ia-seq-spec exact-refresh period (default: 50)")
    p.add_argument("--check-every", type=int,
                   help="seq-spec/seq-kmed/seq-slink: cluster and test the stop rule every this many samples (default: 1)")
    p.add_argument("--max-t", type=int, help="sample cap per run (default: 10*ceil(C^2)+500)")
    p.add_argument("--seed", type=int, help="master seed (default: 0)")
    p.add_argument("--threshold-form", choices=THRESHOLD_FORMS,
                   help="stop threshold arcsin(C/sqrt t) or C/sqrt t (default: arcsin for spectral methods, ratio for baselines)")
    p.add_argument("--config", metavar="PATH", help="key = value file mirroring the flags; flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqspec", description="Sequential spectral clustering of data streams.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", help="write an instance file")
    _add_instance(g)
    g.add_argument("--labeled", metavar="PATH", help="labeled data file (label, features...) to split into sequences")
    g.add_argument("--splits", type=int, help="sequences per label for --labeled (default: 2)")
    g.add_argument("--seed", type=int, help="split seed for --labeled (default: 0)")
    g.add_argument("--inner", type=int, help="circle only: sequences on the inner ring (default: 10)")
    g.add_argument("--outer", type=int, help="circle only: sequences on the outer ring (default: 20)")
    g.add_argument("--out", required=True, metavar="PATH", help="output instance file")

    r = sub.add_parser("run", help="one run of a method, printing N, the partition and a statistic summary")
    _add_instance(r)
    _add_model(r)
    r.add_argument("--c", type=_float, help="threshold constant C (sequential methods)")
    r.add_argument("--t-fixed", type=int, help="sample count (fss-spec only)")
    r.add_argument("--out", metavar="PATH", help="also write the full result as JSON")

    b = sub.add_parser("bench", help="Monte Carlo error probability and stopping time over a grid")
    _add_instance(b)
    _add_model(b)
    b.add_argument("--c-grid", type=parse_grid, help="threshold constants, start:stop:step or a,b,c")
    b.add_argument("--t-grid", type=parse_grid, help="sample counts for fss-spec, start:stop:step or a,b,c")
    b.add_argument("--trials", type=int, help="trials per grid value (default: 2000)")
    b.add_argument("--jobs", type=int, help="worker processes; output does not depend on it (default: 1)")
    b.add_argument("--format", choices=("csv", "json"), help="output format (default: csv)")
    b.add_argument("--out", metavar="PATH", help="output file (default: stdout)")

    d = sub.add_parser("diagnose", help="separation quantities of an instance's true affinity")
    _add_instance(d)
    d.add_argument("--k", type=int, help="number of clusters (default: the instance's K)")
    d.add_argument("--sigma-a", type=_float, help="affinity bandwidth (default: recommended or 1.0)")
    d.add_argument("--sigma-g", type=_float, help="MMD kernel bandwidth (default: recommended or 1.0)")
    d.add_argument("--seed", type=int, help="seed for sampled conductance and the concentration check (default: 0)")
    d.add_argument("--concentration", metavar="EPS,T,TRIALS",
                   help="also estimate P[|d_hat - d| > EPS] at T samples for the farthest pair")
    d.add_argument("--config", metavar="PATH", help="key = value file mirroring the flags; flags win")
    d.add_argument("--out", metavar="PATH", help="write JSON here instead of stdout")
    return parser


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys are flag names."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _apply_config(args, parser_for_cmd):
    if not getattr(args, "config", None):
        return
    known = {a.dest: a for a in parser_for_cmd._actions}
    for key, text in read_config(args.config).items():
        if key not in known or key in ("config", "help", "out"):
            raise UsageError(f"--config: unknown key {key!r}")
        if getattr(args, key) is not None:
            continue  # the command line wins
        action = known[key]
        try:
            value = action.type(text) if action.type else text
        except (argparse.ArgumentTypeError, ValueError) as err:
            raise UsageError(f"--config: bad value for {key}: {err}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"--config: {key} must be one of {list(action.choices)}")
        setattr(args, key, value)


def load_instance(args) -> ProblemInstance:
    if args.builtin:
        return builtin_instance(args.builtin)
    if args.instance:
        return ProblemInstance.load(args.instance)
    raise UsageError("one of --builtin or --instance is required")


def _resolve(args, inst):
    """Fill unset options from the instance's recommendations, then the documented defaults."""
    for key in ("sigma_a", "sigma_g"):
        if getattr(args, key, None) is None:
            setattr(args, key, float(inst.meta.get(key, DEFAULTS[key])))
    for key, value in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None and value is not None:
            setattr(args, key, value)
    if getattr(args, "k", None) is None:
        args.k = inst.K
    if hasattr(args, "method") and args.method is None:
        args.method = "seq-spec"


def _check_method_flags(args, explicit_ia: bool):
    if args.method != "ia-seq-spec" and explicit_ia:
        raise UsageError("--p/--q/--r apply only to --method ia-seq-spec")
    if args.method in ("ia-seq-spec", "fss-spec") and args.check_every != 1:
        raise UsageError(f"--check-every does not apply to --method {args.method}")
    if args.method == "fss-spec":
        if getattr(args, "c", None) is not None or getattr(args, "c_grid", None) is not None:
            raise UsageError("--c/--c-grid do not apply to --method fss-spec; use --t-fixed/--t-grid")
        if args.threshold_form is not None:
            raise UsageError("--threshold-form does not apply to --method fss-spec")
    else:
        if getattr(args, "t_fixed", None) is not None or getattr(args, "t_grid", None) is not None:
            raise UsageError("--t-fixed/--t-grid apply only to --method fss-spec")


def _positive(name, value):
    if value is not None and not value > 0:
        raise UsageError(f"--{name.replace('_', '-')} must be positive, got {value}")


def _validate_common(args):
    for name in ("sigma_a", "sigma_g", "q"):
        _positive(name, getattr(args, name, None))
    for name in ("p", "r", "trials", "jobs", "max_t", "k", "t_fixed", "check_every"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be >= 1, got {v}")


def _ia(args) -> IAConfig:
    return IAConfig(p=args.p, q=args.q, R=args.r)


def cmd_generate(args) -> int:
    sources = [args.builtin, args.instance, args.labeled]
    if sum(s is not None for s in sources) != 1:
        raise UsageError("generate needs exactly one of --builtin, --instance or --labeled")
    if args.labeled is None and (args.splits is not None or args.seed is not None):
        raise UsageError("--splits/--seed apply only with --labeled")
    if (args.inner is not None or args.outer is not None) and args.builtin != "circle":
        raise UsageError("--inner/--outer apply only with --builtin circle")
    if args.labeled:
        splits = args.splits if args.splits is not None else DEFAULTS["splits"]
        if splits < 1:
            raise UsageError("--splits must be >= 1")
        inst = ingest_labeled(args.labeled, splits, args.seed if args.seed is not None else 0)
    elif args.builtin == "circle" and (args.inner is not None or args.outer is not None):
        inner = args.inner if args.inner is not None else 10
        outer = args.outer if args.outer is not None else 20
        if inner < 1 or outer < 1:
            raise UsageError("--inner/--outer must be >= 1")
        inst = gen_circle_instance(n_inner=inner, n_outer=outer)
    else:
        inst = load_instance(args)
    inst.save(args.out)
    print(f"wrote {args.out}: M={inst.M} K={inst.K} name={inst.name}")
    return 0


def cmd_run(args) -> int:
    explicit_ia = any(getattr(args, k) is not None for k in ("p", "q", "r"))
    inst = load_instance(args)
    _resolve(args, inst)
    _check_method_flags(args, explicit_ia)
    _validate_common(args)
    if args.method == "fss-spec":
        if args.t_fixed is None:
            raise UsageError("--method fss-spec needs --t-fixed")
    elif args.c is None:
        raise UsageError(f"--method {args.method} needs --c")
    _positive("c", args.c)

    streams = inst.streams(args.seed)
    form = args.threshold_form
    if args.method in ("seq-spec", "ia-seq-spec"):
        form = form or "arcsin"
        cap = args.max_t if args.max_t is not None else default_max_t(args.c)
        cfg = SeqConfig(args.k, args.c, args.sigma_a, args.sigma_g, cap, args.seed, form,
                        check_every=args.check_every)
        res = run_seq_spec(streams, cfg) if args.method == "seq-spec" else run_ia_seq_spec(streams, cfg, _ia(args))
    else:
        form = form or "ratio"
        cfg = BaselineConfig(args.method, args.k, C=args.c, t_fixed=args.t_fixed, sigma_a=args.sigma_a,
                             sigma_g=args.sigma_g, max_t=args.max_t, seed=args.seed, threshold=form,
                             check_every=args.check_every)
        res = run_baseline(streams, cfg)

    error = res.stopped_by_cap or partition_error(res.clustering, inst.truth, inst.free_set)
    print(f"method      {args.method}")
    print(f"instance    {inst.name} (M={inst.M}, K={args.k})")
    print(f"sigma_a     {args.sigma_a:g}   sigma_g {args.sigma_g:g}   seed {args.seed}")
    print(f"N           {res.N}" + ("   (stopped by the sample cap)" if res.stopped_by_cap else ""))
    print(f"partition   {' '.join(map(str, res.clustering.labels))}")
    print(f"correct     {'no' if error else 'yes'}")
    print(f"eigen ops   {res.mean_eigen_ops:.6g} per step")
    if res.trace:
        finite = [s for s in res.trace if math.isfinite(s.threshold)]
        print(f"statistic   {len(res.trace)} steps, first finite threshold at t={finite[0].t if finite else '-'}")
        for s in res.trace[-3:]:
            print(f"  t={s.t:<6d} statistic={s.gamma:.6f} threshold={s.threshold:.6f} stop={s.stop}")
    if args.out:
        doc = {
            "method": args.method, "instance": inst.name, "N": res.N, "labels": res.clustering.labels.tolist(),
            "error": bool(error), "stopped_by_cap": res.stopped_by_cap, "eigen_op_count": res.eigen_op_count,
            "surrogate_statistic": res.surrogate_statistic,
            "config": {k: v for k, v in vars(args).items() if k not in ("out",) and not callable(v)},
            "trace": [{"t": s.t, "statistic": s.gamma, "threshold": _json_float(s.threshold), "stop": s.stop,
                       "ops": s.ops, "exact": s.exact, "rank": s.rank} for s in (res.trace or [])],
        }
        Path(args.out).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return 0


def _json_float(x):
    return x if math.isfinite(x) else str(x)


def cmd_bench(args) -> int:
    explicit_ia = any(getattr(args, k) is not None for k in ("p", "q", "r"))
    inst = load_instance(args)
    _resolve(args, inst)
    _check_method_flags(args, explicit_ia)
    _validate_common(args)
    if args.k != inst.K:
        raise UsageError("bench scores against the instance's true partition; --k must equal its K")
    grid = args.t_grid if args.method == "fss-spec" else args.c_grid
    if grid is None:
        raise UsageError("--method fss-spec needs --t-grid" if args.method == "fss-spec" else "bench needs --c-grid")
    cfg = BenchConfig(args.method, grid, args.trials, args.seed, args.max_t, args.sigma_a, args.sigma_g,
                      args.threshold_form, _ia(args) if args.method == "ia-seq-spec" else None, args.jobs,
                      args.check_every)
    text = emit(run_bench(cfg, inst), args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return 0


def cmd_diagnose(args) -> int:
    inst = load_instance(args)
    _resolve(args, inst)
    _validate_common(args)
    kernel = KernelConfig(bandwidth=args.sigma_g)
    D = inst.true_distances(kernel)
    if D is None:
        raise SeqSpecError("diagnose needs an instance with closed-form distances (Gaussian means)")
    A = build_affinity(D, args.sigma_a)
    diag = diagnose(A, args.k, inst.truth, seed=args.seed)
    doc = {"instance": inst.name, "M": inst.M, "K": args.k, "sigma_a": args.sigma_a, "sigma_g": args.sigma_g}
    doc.update({k: _json_float(v) if isinstance(v, float) else v for k, v in diag.to_dict().items()})
    doc["conductance_mode"] = "exact" if diag.conductance_exact else "estimate"
    if args.concentration:
        try:
            eps, t, trials = args.concentration.split(",")
            eps, t, trials = float(eps), int(t), int(trials)
        except ValueError:
            raise UsageError("--concentration expects EPS,T,TRIALS") from None
        pair = worst_pair(inst, args.sigma_g)
        doc["concentration"] = {
            "pair": list(pair), "eps": eps, "t": t, "trials": trials,
            "empirical": deviation_frequency(inst, pair, eps, t, trials, args.seed, args.sigma_g),
            "bound": concentration_bound(inst.M, eps, t, kernel.bound),
        }
    text = json.dumps(doc, indent=1, default=_np_default) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _np_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "bench": cmd_bench, "diagnose": cmd_diagnose}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        sub = parser._subparsers._group_actions[0].choices[args.command]
        _apply_config(args, sub)
        return COMMANDS[args.command](args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (SeqSpecError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
