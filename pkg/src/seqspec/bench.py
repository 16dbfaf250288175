"""Monte Carlo estimates of error probability and mean stopping time.

Each trial ``r`` draws its streams from seed ``(seed, r)``. The same trial
streams are used for every ``C`` of the grid (common random numbers), so
for methods whose statistic path does not depend on ``C`` one simulated
path per trial serves the whole grid with results identical to separate
runs.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta as beta_dist

from .baselines import KmedPath, SlinkPath, run_fss_spec
from .exceptions import InputError
from .incremental import IAConfig, run_ia_seq_spec
from .sequential import SeqConfig, SpecPath, default_max_t, run_path

METHODS = ("seq-spec", "ia-seq-spec", "fss-spec", "seq-kmed", "seq-slink")
DEFAULT_FORMS = {"seq-spec": "arcsin", "ia-seq-spec": "arcsin", "seq-kmed": "ratio", "seq-slink": "ratio"}
COLUMNS = ("C", "trials", "mean_N", "ln_error_prob", "error_count", "mean_eigen_ops",
           "capped_count", "error_prob_upper", "std_N")


def partition_error(est, truth, free_set=()) -> bool:
    """True when the partitions differ once the ``free_set`` indices are dropped.

    Comparison is by co-membership, so label permutations do not count.
    """
    a = np.asarray(getattr(est, "labels", est))
    b = np.asarray(getattr(truth, "labels", truth))
    if a.shape != b.shape:
        raise InputError("partitions cover different numbers of sequences")
    keep = np.ones(a.size, dtype=bool)
    keep[list(free_set)] = False
    a, b = a[keep], b[keep]
    return not np.array_equal(a[:, None] == a[None, :], b[:, None] == b[None, :])


@dataclass
class BenchConfig:
    method: str
    grid: list  # threshold constants, or sample counts for fss-spec
    trials: int = 2000
    seed: int = 0
    max_t: int | None = None
    sigma_a: float = 1.0
    sigma_g: float = 1.0
    threshold: str | None = None  # None: the method's own form
    ia: IAConfig | None = None
    jobs: int = 1
    check_every: int = 1  # sequential path methods: test the stop rule every this many steps

    def __post_init__(self):
        if self.method not in METHODS:
            raise InputError(f"method must be one of {METHODS}")
        if self.trials < 1:
            raise InputError("trials must be >= 1")
        self.grid = [float(c) for c in self.grid]
        if self.method == "fss-spec":
            if any(c < 1 or c != int(c) for c in self.grid):
                raise InputError("fss-spec grid values are sample counts (integers >= 1)")
        elif any(not c > 0 for c in self.grid):
            raise InputError("threshold constants must be positive")
        if self.threshold is None and self.method != "fss-spec":
            self.threshold = DEFAULT_FORMS[self.method]
        if self.method == "ia-seq-spec" and self.ia is None:
            self.ia = IAConfig()
        if self.jobs < 1:
            raise InputError("jobs must be >= 1")
        if self.check_every < 1:
            raise InputError("check_every must be >= 1")
        if self.check_every > 1 and self.method in ("fss-spec", "ia-seq-spec"):
            raise InputError(f"check_every does not apply to {self.method}")

    def cap(self, C: float) -> int:
        return self.max_t if self.max_t is not None else default_max_t(C)


@dataclass
class BenchSummary:
    rows: list[dict]
    metadata: dict = field(default_factory=dict)
    # per-trial outcomes, indexed [trial][grid position]; not serialized
    outcomes: list | None = field(default=None, repr=False)


@dataclass
class TrialOutcome:
    N: int
    error: bool
    capped: bool
    ops_per_step: float


def _path(cfg: BenchConfig, instance, trial_seed):
    streams = instance.streams(trial_seed)
    if cfg.method == "seq-spec":
        return SpecPath(streams, instance.K, cfg.sigma_a, cfg.sigma_g, trial_seed)
    if cfg.method == "seq-kmed":
        return KmedPath(streams, instance.K, cfg.sigma_g)
    return SlinkPath(streams, instance.K, cfg.sigma_g)


def run_trial(cfg: BenchConfig, instance, trial: int) -> list[TrialOutcome]:
    """Outcomes of one trial for every grid value, in grid order."""
    trial_seed = (cfg.seed, trial)
    truth, free = instance.truth, instance.free_set
    out = []
    if cfg.method == "fss-spec":
        M3 = float(instance.M) ** 3
        for t_fixed in cfg.grid:
            clustering = run_fss_spec(instance.streams(trial_seed), instance.K, int(t_fixed),
                                      cfg.sigma_a, cfg.sigma_g, trial_seed)
            # one decomposition for the whole run
            out.append(TrialOutcome(int(t_fixed), partition_error(clustering, truth, free), False, M3 / t_fixed))
        return out
    if cfg.method == "ia-seq-spec":
        for C in cfg.grid:
            seq = SeqConfig(instance.K, C, cfg.sigma_a, cfg.sigma_g, cfg.cap(C), trial_seed,
                            cfg.threshold, keep_trace=False)
            res = run_ia_seq_spec(instance.streams(trial_seed), seq, cfg.ia)
            err = res.stopped_by_cap or partition_error(res.clustering, truth, free)
            out.append(TrialOutcome(res.N, err, res.stopped_by_cap, res.mean_eigen_ops))
        return out

    # ascending C: every step a larger C needs was evaluated for a smaller one
    path = _path(cfg, instance, trial_seed)
    results = {}
    for g in sorted(range(len(cfg.grid)), key=lambda g: cfg.grid[g]):
        C = cfg.grid[g]
        res = run_path(path, instance.K, C, cfg.threshold, cfg.cap(C), False, cfg.method,
                       check_every=cfg.check_every)
        err = res.stopped_by_cap or partition_error(res.clustering, truth, free)
        results[g] = TrialOutcome(res.N, err, res.stopped_by_cap, res.mean_eigen_ops)
    return [results[g] for g in range(len(cfg.grid))]


def _trial_batch(args):
    cfg, instance, trials = args
    return [run_trial(cfg, instance, r) for r in trials]


def run_bench(cfg: BenchConfig, instance) -> BenchSummary:
    """Aggregate ``cfg.trials`` trials per grid value into one summary row each.

    Capped runs count as errors and are also reported in ``capped_count``.
    Zero-error cells get ``ln_error_prob = -inf`` and the rule-of-three
    upper bound ``3 / trials`` in ``error_prob_upper``, which otherwise holds
    the Clopper-Pearson 95% upper bound.
    """
    trials = list(range(cfg.trials))
    if cfg.jobs == 1:
        outcomes = _trial_batch((cfg, instance, trials))
    else:
        chunks = [trials[i :: cfg.jobs] for i in range(cfg.jobs)]
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            parts = list(pool.map(_trial_batch, [(cfg, instance, c) for c in chunks]))
        # reassemble in trial order so the reduction does not depend on jobs
        outcomes = [None] * cfg.trials
        for chunk, part in zip(chunks, parts):
            for r, res in zip(chunk, part):
                outcomes[r] = res

    rows = []
    for g, value in enumerate(cfg.grid):
        cell = [o[g] for o in outcomes]
        N = np.array([c.N for c in cell], dtype=float)
        errors = sum(c.error for c in cell)
        rows.append({
            "C": value,
            "trials": cfg.trials,
            "mean_N": float(N.mean()),
            "ln_error_prob": math.log(errors / cfg.trials) if errors else -math.inf,
            "error_count": errors,
            "mean_eigen_ops": float(np.mean([c.ops_per_step for c in cell])),
            "capped_count": sum(c.capped for c in cell),
            "error_prob_upper": error_upper_bound(errors, cfg.trials),
            "std_N": float(N.std()),
        })
    return BenchSummary(rows, bench_metadata(cfg, instance), outcomes)


def error_upper_bound(errors: int, trials: int) -> float:
    """One-sided 95% upper bound on the error probability.

    Rule of three (``3 / trials``) for zero errors, Clopper-Pearson otherwise.
    """
    if errors == 0:
        return 3.0 / trials
    if errors >= trials:
        return 1.0
    return float(beta_dist.ppf(0.95, errors + 1, trials - errors))


def bench_metadata(cfg: BenchConfig, instance) -> dict:
    from . import __version__

    meta = {
        "package_version": __version__,
        "method": cfg.method,
        "instance": instance.name,
        "M": instance.M,
        "K": instance.K,
        "grid_parameter": "t_fixed" if cfg.method == "fss-spec" else "C",
        "trials": cfg.trials,
        "seed": cfg.seed,
        "trial_seed": "(seed, trial index)",
        "max_t": cfg.max_t if cfg.max_t is not None else "10*ceil(C^2)+500",
        "sigma_a": cfg.sigma_a,
        "sigma_g": cfg.sigma_g,
        "threshold_form": cfg.threshold,
        "check_every": cfg.check_every,
        "surrogate_statistic": cfg.method in ("seq-kmed", "seq-slink"),
        "capped_runs_count_as_errors": True,
        "log": "natural",
    }
    if cfg.ia is not None:
        meta.update({"p": cfg.ia.p, "q": cfg.ia.q, "R": cfg.ia.R, "block_search": cfg.ia.block_search})
    return meta


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isinf(value):
        return "-inf" if value < 0 else "inf"
    return format(value, ".17g")


def _parse(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def emit(summary: BenchSummary, fmt: str = "csv", path=None) -> str:
    """Serialize a summary as CSV (metadata in ``#`` comment lines) or JSON.

    Numbers use 17 significant digits, so parsing the output gives back the
    exact values. Writes to ``path`` when given and returns the text.
    """
    if fmt == "csv":
        buf = io.StringIO()
        for key in sorted(summary.metadata):
            buf.write(f"# {key}: {json.dumps(summary.metadata[key])}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in summary.rows:
            writer.writerow([_fmt(row[c]) for c in COLUMNS])
        text = buf.getvalue()
    elif fmt == "json":
        doc = {
            "metadata": summary.metadata,
            "columns": list(COLUMNS),
            "rows": [{c: _parse(_fmt(row[c])) if not _is_inf(row[c]) else _fmt(row[c]) for c in COLUMNS}
                     for row in summary.rows],
        }
        text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    else:
        raise InputError(f"unknown format {fmt!r}; use csv or json")
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def _is_inf(v) -> bool:
    return isinstance(v, float) and math.isinf(v)


def _value(v):
    if isinstance(v, str):
        return float(v)  # "-inf" / "inf"
    return v


def parse_emitted(text: str, fmt: str = "csv") -> BenchSummary:
    """Inverse of :func:`emit`."""
    if fmt == "json":
        doc = json.loads(text)
        rows = [{c: _value(r[c]) for c in doc["columns"]} for r in doc["rows"]]
        return BenchSummary(rows, doc["metadata"])
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            meta[key] = json.loads(value)
        elif line:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader, None)
    rows = [{c: _parse(v) for c, v in zip(header, rec)} for rec in reader] if header else []
    return BenchSummary(rows, meta)
