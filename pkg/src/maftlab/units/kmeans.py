"""Codebook training (k-means++ seeded Lloyd / mini-batch) and assignment.

Features are standardized per dimension before clustering; the statistics
live inside the codebook so assignment applies the identical transform.
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, InsufficientDataError
from ..seeding import rng_for
from .targets import TargetSequence

_MAGIC = b"MLCB"
_VERSION = 1

DEFAULT_K = 32
KMEANS_CAP_SECONDS = 3600.0


@dataclass
class Codebook:
    centroids: np.ndarray         # k x F, float32
    feature_kind: str
    seed: int
    training_inertia: float
    mean: np.ndarray              # F, float32; standardization applied before clustering
    std: np.ndarray               # F, float32
    provenance: str = "new"       # "new" = trained here, "original" = loaded from a teacher
    inertia_history: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def validate(self):
        if self.k < 2:
            raise ConfigError(f"codebook needs k >= 2, got {self.k}")
        if self.training_inertia < 0:
            raise ConfigError("negative inertia")
        return self


def sample_kmeans_corpus(manifest, cap: float = KMEANS_CAP_SECONDS, seed: int = 0) -> list:
    """Per-language sample for codebook training, capped at `cap` seconds.

    Seed-shuffled segments are taken in order until adding the next one
    would exceed the cap; languages under the cap contribute everything.
    """
    by_lang: dict = {}
    for entry in manifest:
        by_lang.setdefault(entry.lang, []).append(entry)
    picked = []
    for lang in sorted(by_lang):
        entries = by_lang[lang]
        order = rng_for(seed, "kmeans-corpus", lang).permutation(len(entries))
        cum = 0.0
        for i in order:
            if cum + entries[i].duration_sec > cap:
                break
            picked.append(entries[i])
            cum += entries[i].duration_sec
    return picked


def _standardize_stats(x: np.ndarray):
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std < 1e-8, 1.0, std)
    return mean, std


def _plus_plus_init(x: np.ndarray, k: int, rng) -> np.ndarray:
    """k-means++ seeding: new centers drawn proportional to squared distance."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    centers[0] = x[rng.integers(n)]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = x[rng.integers(n)]
            continue
        probs = d2 / total
        centers[j] = x[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((x - centers[j]) ** 2).sum(axis=1))
    return centers


def _nearest(x: np.ndarray, centers: np.ndarray, chunk: int = 512):
    """Labels and squared distances to the closest center (ties -> lowest index)."""
    labels = np.empty(x.shape[0], dtype=np.int32)
    dists = np.empty(x.shape[0], dtype=np.float64)
    for a in range(0, x.shape[0], chunk):
        block = x[a : a + chunk]
        d2 = ((block[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels[a : a + chunk] = np.argmin(d2, axis=1)
        dists[a : a + chunk] = d2[np.arange(block.shape[0]), labels[a : a + chunk]]
    return labels, dists


def train_kmeans(
    features: np.ndarray,
    k: int = DEFAULT_K,
    seed: int = 0,
    max_iters: int = 100,
    batch_size: int = None,
    feature_kind: str = "log_mel",
) -> Codebook:
    """Train a k-way codebook over row-stacked features.

    Full-batch Lloyd iterations when batch_size is None (inertia is then
    non-increasing every iteration); otherwise mini-batch updates with
    per-center learning rates. Deterministic given the seed.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ConfigError(f"expected a 2-D feature matrix, got shape {x.shape}")
    n = x.shape[0]
    if n < k:
        raise InsufficientDataError(f"{n} rows < k={k}")

    mean, std = _standardize_stats(x)
    xs = (x - mean) / std
    rng = rng_for(seed, "kmeans", k)
    centers = _plus_plus_init(xs, k, rng)
    history = []

    if batch_size is None or batch_size >= n:
        prev_labels = None
        for _ in range(max_iters):
            labels, d2 = _nearest(xs, centers)
            history.append(float(d2.sum()))
            for j in range(k):
                members = xs[labels == j]
                if len(members):
                    centers[j] = members.mean(axis=0)
                else:
                    centers[j] = xs[np.argmax(d2)]
                    d2[np.argmax(d2)] = 0.0
            if prev_labels is not None and np.array_equal(labels, prev_labels):
                break
            prev_labels = labels
    else:
        counts = np.ones(k)
        for _ in range(max_iters):
            batch = xs[rng.choice(n, size=batch_size, replace=False)]
            labels, _ = _nearest(batch, centers)
            for row, j in zip(batch, labels):
                counts[j] += 1.0
                eta = 1.0 / counts[j]
                centers[j] = (1.0 - eta) * centers[j] + eta * row

    _, d2 = _nearest(xs, centers)
    inertia = float(d2.sum())
    history.append(inertia)
    return Codebook(
        centroids=centers.astype(np.float32),
        feature_kind=feature_kind,
        seed=seed,
        training_inertia=inertia,
        mean=mean.astype(np.float32),
        std=std.astype(np.float32),
        inertia_history=history,
    ).validate()


def assign_targets(features, codebook: Codebook) -> TargetSequence:
    """Label every frame with its nearest centroid (squared Euclidean,
    ties broken by the lowest centroid index)."""
    if features.dim != codebook.dim:
        raise ConfigError(
            f"feature dim {features.dim} does not match codebook dim {codebook.dim}"
        )
    if features.feature_kind != codebook.feature_kind:
        raise ConfigError(
            f"feature kind {features.feature_kind!r} does not match codebook "
            f"{codebook.feature_kind!r}"
        )
    xs = (features.matrix.astype(np.float64) - codebook.mean.astype(np.float64)) / (
        codebook.std.astype(np.float64)
    )
    labels, _ = _nearest(xs, codebook.centroids.astype(np.float64))
    return TargetSequence(segment_id=features.segment_id, labels=labels)


def write_codebook(codebook: Codebook, path, provenance: str = None):
    """Binary layout: magic, version, k, F, feature_kind (16 bytes), seed,
    inertia, then row-major float32 centroids, mean, std (little-endian).
    Provenance goes into a JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    kind = codebook.feature_kind.encode("ascii")[:16].ljust(16, b"\x00")
    header = _MAGIC + struct.pack(
        "<IIH16sQd",
        _VERSION,
        codebook.k,
        codebook.dim,
        kind,
        codebook.seed,
        codebook.training_inertia,
    )
    body = (
        codebook.centroids.astype("<f4").tobytes()
        + codebook.mean.astype("<f4").tobytes()
        + codebook.std.astype("<f4").tobytes()
    )
    path.write_bytes(header + body)
    meta = {
        "provenance": provenance or codebook.provenance,
        "feature_kind": codebook.feature_kind,
        "k": codebook.k,
        "seed": codebook.seed,
    }
    path.with_suffix(path.suffix + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8"
    )


def read_codebook(path) -> Codebook:
    path = Path(path)
    blob = path.read_bytes()
    if blob[:4] != _MAGIC:
        raise ConfigError(f"{path}: not a codebook file")
    version, k, dim, kind, seed, inertia = struct.unpack("<IIH16sQd", blob[4 : 4 + 42])
    if version != _VERSION:
        raise ConfigError(f"{path}: unsupported codebook version {version}")
    offset = 4 + 42
    def take(count):
        nonlocal offset
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset).copy()
        offset += count * 4
        return arr
    centroids = take(k * dim).reshape(k, dim)
    mean = take(dim)
    std = take(dim)
    provenance = "new"
    sidecar = path.with_suffix(path.suffix + ".meta.json")
    if sidecar.exists():
        provenance = json.loads(sidecar.read_text(encoding="utf-8")).get("provenance", "new")
    return Codebook(
        centroids=centroids,
        feature_kind=kind.rstrip(b"\x00").decode("ascii"),
        seed=seed,
        training_inertia=inertia,
        mean=mean,
        std=std,
        provenance=provenance,
    ).validate()
