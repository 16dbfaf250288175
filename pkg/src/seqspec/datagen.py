"""Problem instances: synthetic Gaussian layouts and labeled-data ingestion."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import InputError
from .kernel_mmd import DEFAULT_KERNEL, KernelConfig, gaussian_mmd_matrix
from .spectral import Clustering
from .streams import GaussianStream, PoolStream, stream_rng

# Scatter coordinates of the two 12-sequence clusters of the bridge layout.
BRIDGE_LEFT = [
    (-0.96218932, -0.10454969), (-1.08261271, -0.48829348), (-0.64005852, 0.22883317),
    (-1.06508457, 0.15476132), (-0.94375787, -0.11076457), (-0.80448651, -0.06211131),
    (-1.06576478, -0.15842935), (-0.90900839, -0.01983961), (-0.89094226, -0.12143714),
    (-0.97463443, -0.17845481), (-0.83170701, 0.03760702), (-0.9338858, 0.08210078),
]
BRIDGE_RIGHT = [
    (0.7978485, 0.1566362), (1.41134056, -0.3276885), (0.65411771, -0.30096628),
    (1.16829178, 0.02574313), (1.21566849, 0.14448617), (1.04211436, 0.05680763),
    (0.9660479, 0.17369204), (0.77405681, -0.08437177), (1.04858777, 0.36028417),
    (0.84710718, -0.21581209), (0.88734256, 0.19385444), (0.9529989, 0.2648694),
]
BRIDGE_MIDDLE = [(-0.5, 0.0), (-0.3, 0.0), (-0.1, 0.0), (0.1, 0.0), (0.3, 0.0), (0.5, 0.0)]

BRIDGE_COV_SCALE = 0.4

# Bandwidths under which SPEC on the true distances recovers the planted
# partition of the built-in layouts. Wider affinities blur both of them.
RECOMMENDED_SIGMAS = {"sigma_a": 0.1, "sigma_g": 1.0}


@dataclass
class ProblemInstance:
    """``M`` sequences, each a Gaussian ``N(mean_i, cov_scale I)`` or an empirical pool.

    ``truth_source`` records how ``true_labels`` was obtained (``"planted"``,
    ``"spec"`` or ``"labels"``). Indices in ``free_set`` may be grouped
    with any cluster when scoring.
    """

    name: str
    K: int
    true_labels: np.ndarray
    means: np.ndarray | None = None
    cov_scale: float = 0.0
    pools: list | None = None
    free_set: tuple = ()
    truth_source: str = "planted"
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.true_labels = np.asarray(self.true_labels, dtype=int)
        if self.means is not None:
            self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
            if len(self.means) != len(self.true_labels):
                raise InputError("means and true_labels disagree on M")
        elif self.pools is None:
            raise InputError("instance needs either means or pools")
        elif len(self.pools) != len(self.true_labels):
            raise InputError("pools and true_labels disagree on M")
        self.free_set = tuple(sorted(int(i) for i in self.free_set))
        if any(not 0 <= i < self.M for i in self.free_set):
            raise InputError("free_set index out of range")

    @property
    def M(self) -> int:
        return len(self.true_labels)

    @property
    def empirical(self) -> bool:
        return self.means is None

    @property
    def truth(self) -> Clustering:
        return Clustering(self.true_labels, self.K)

    def streams(self, seed) -> list:
        """Independent stream per sequence, reproducible from ``seed``."""
        if self.empirical:
            return [PoolStream(p, stream_rng(seed, i)) for i, p in enumerate(self.pools)]
        return [GaussianStream(m, self.cov_scale, stream_rng(seed, i)) for i, m in enumerate(self.means)]

    def true_distances(self, kernel: KernelConfig = DEFAULT_KERNEL) -> np.ndarray | None:
        """Closed-form MMD matrix, or ``None`` for empirical instances."""
        if self.empirical:
            return None
        return gaussian_mmd_matrix(self.means, self.cov_scale, kernel)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "M": self.M,
            "K": self.K,
            "true_labels": self.true_labels.tolist(),
            "free_set": list(self.free_set),
            "truth_source": self.truth_source,
            "seed": self.seed,
            "meta": self.meta,
        }
        if self.empirical:
            out["pools"] = [np.asarray(p).tolist() for p in self.pools]
        else:
            out["means"] = self.means.tolist()
            out["covariance"] = self.cov_scale
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemInstance":
        try:
            inst = cls(
                name=data.get("name", "instance"),
                K=int(data["K"]),
                true_labels=data["true_labels"],
                means=data.get("means"),
                cov_scale=float(data.get("covariance", 0.0)),
                pools=[np.asarray(p, dtype=float) for p in data["pools"]] if "pools" in data else None,
                free_set=data.get("free_set", ()),
                truth_source=data.get("truth_source", "planted"),
                seed=data.get("seed"),
                meta=data.get("meta", {}),
            )
        except KeyError as err:
            raise InputError(f"instance file is missing field {err}") from None
        if "M" in data and int(data["M"]) != inst.M:
            raise InputError(f"instance declares M={data['M']} but lists {inst.M} sequences")
        return inst

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ProblemInstance":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def circle_means(n_inner: int = 10, n_outer: int = 20, r_inner: float = 1.0, r_outer: float = 2.0) -> np.ndarray:
    a_in = 2 * np.pi * np.arange(n_inner) / n_inner
    a_out = 2 * np.pi * np.arange(n_outer) / n_outer
    inner = r_inner * np.column_stack([np.cos(a_in), np.sin(a_in)])
    outer = r_outer * np.column_stack([np.cos(a_out), np.sin(a_out)])
    return np.vstack([inner, outer])


def gen_circle_instance(cov_scale: float = 0.4, n_inner: int = 10, n_outer: int = 20) -> ProblemInstance:
    """Two concentric rings of Gaussian means (radius 1 and 2), shared covariance."""
    means = circle_means(n_inner, n_outer)
    labels = np.r_[np.zeros(n_inner, dtype=int), np.ones(n_outer, dtype=int)]
    return ProblemInstance("circle", 2, labels, means=means, cov_scale=cov_scale,
                           meta=dict(RECOMMENDED_SIGMAS))


def gen_bridge_instance(cov_scale: float = BRIDGE_COV_SCALE) -> ProblemInstance:
    """Two 12-sequence blobs joined by a 6-sequence bridge along ``y = 0``.

    Bridge sequences are in ``free_set`` and labeled with their nearer blob.
    """
    means = np.array(BRIDGE_LEFT + BRIDGE_RIGHT + BRIDGE_MIDDLE)
    labels = np.r_[np.zeros(12, dtype=int), np.ones(12, dtype=int), [0, 0, 0, 1, 1, 1]]
    free = range(24, 30)
    return ProblemInstance("bridge", 2, labels, means=means, cov_scale=cov_scale, free_set=free,
                           meta=dict(RECOMMENDED_SIGMAS))


def gen_two_block_instance(n_per: int = 3, separation: float = 6.0, cov_scale: float = 0.05,
                           dim: int = 1) -> ProblemInstance:
    """Two groups of identical Gaussians whose means are ``separation`` apart."""
    means = np.zeros((2 * n_per, dim))
    means[n_per:, 0] = separation
    labels = np.r_[np.zeros(n_per, dtype=int), np.ones(n_per, dtype=int)]
    return ProblemInstance("two-block", 2, labels, means=means, cov_scale=cov_scale,
                           meta={"sigma_a": 0.3, "sigma_g": 1.0})


def gen_point_mass_instance(centers, per_cluster: int = 2) -> ProblemInstance:
    """Deterministic streams: ``per_cluster`` copies of each center, zero covariance."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    means = np.repeat(centers, per_cluster, axis=0)
    labels = np.repeat(np.arange(len(centers)), per_cluster)
    return ProblemInstance("point-mass", len(centers), labels, means=means, cov_scale=0.0)


def builtin_instance(name: str) -> ProblemInstance:
    builders = {"circle": gen_circle_instance, "bridge": gen_bridge_instance, "two-block": gen_two_block_instance}
    if name not in builders:
        raise InputError(f"unknown builtin instance {name!r}; choose from {sorted(builders)}")
    return builders[name]()


_SPLIT = re.compile(r"[,\s]+")


def read_labeled(path) -> tuple[list[str], np.ndarray]:
    """Rows of ``label, x1, x2, ...`` (comma or whitespace separated, optional header)."""
    labels, rows = [], []
    width = None
    first = True
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p for p in _SPLIT.split(line) if p]
            if len(parts) < 2:
                raise InputError(f"{path}:{lineno}: need a label and at least one feature")
            try:
                feats = [float(v) for v in parts[1:]]
            except ValueError:
                if first:
                    first = False
                    continue  # header
                raise InputError(f"{path}:{lineno}: non-numeric feature") from None
            first = False
            if width is None:
                width = len(feats)
            elif len(feats) != width:
                raise InputError(f"{path}:{lineno}: expected {width} features, got {len(feats)}")
            labels.append(parts[0])
            rows.append(feats)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return labels, np.asarray(rows)


def _label_key(lab: str):
    try:
        return (0, float(lab), lab)
    except ValueError:
        return (1, 0.0, lab)


def ingest_labeled(path, splits_per_label: int = 2, seed: int = 0) -> ProblemInstance:
    """One cluster per label, each label's points randomly split into equal-size pools.

    Every pool becomes a sequence that samples its pool with replacement.
    """
    if splits_per_label < 1:
        raise InputError("splits_per_label must be >= 1")
    labels, X = read_labeled(path)
    labels = np.asarray(labels)
    uniq = sorted(set(labels.tolist()), key=_label_key)
    rng = np.random.default_rng(seed)
    pools, truth = [], []
    for k, lab in enumerate(uniq):
        idx = np.flatnonzero(labels == lab)
        if len(idx) < splits_per_label:
            raise InputError(f"label {lab!r} has {len(idx)} points, fewer than {splits_per_label} splits")
        for part in np.array_split(rng.permutation(idx), splits_per_label):
            pools.append(X[part])
            truth.append(k)
    return ProblemInstance(Path(path).stem, len(uniq), truth, pools=pools, truth_source="labels",
                           seed=seed, meta={"labels": uniq})
