"""Synthetic moons, IDX image files and labeled-subset sampling.

Moon geometry (before noise), with ``t`` evenly spaced on ``[0, pi]``:

* 2 moons: ``(cos t, sin t)`` and ``(1 - cos t, 0.5 - sin t)``.
* 3 moons: ``(cos t, sin t)``, ``(1.5 - cos t, 0.5 - sin t)`` and
  ``(3 + cos t, sin t)``; arcs alternate orientation and each tip sits
  inside the neighbouring arc.

Noise is isotropic Gaussian with standard deviation ``noise_std`` per
coordinate, drawn from ``numpy.random.default_rng(seed)`` after the arcs.
"""

from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import ConfigError, FormatError, InputError
from .graph import Dataset
from .laplacians import LabeledSet

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

# (center_x, center_y, orientation): +1 is an upper arc, -1 a lower arc
MOON_LAYOUT = {
    2: ((0.0, 0.0, 1), (1.0, 0.5, -1)),
    3: ((0.0, 0.0, 1), (1.5, 0.5, -1), (3.0, 0.0, 1)),
}


@dataclass(frozen=True)
class MoonsSpec:
    n_points: int
    n_moons: int = 2
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_moons not in MOON_LAYOUT:
            raise ConfigError(f"n_moons must be 2 or 3, got {self.n_moons}")
        if self.n_points < 2 * self.n_moons:
            raise ConfigError(f"need at least two points per moon, got n_points={self.n_points}")
        if not self.noise_std >= 0:
            raise ConfigError(f"noise_std must be non-negative, got {self.noise_std}")


def moon_sizes(n_points: int, n_moons: int) -> np.ndarray:
    base, extra = divmod(n_points, n_moons)
    return np.array([base + (i < extra) for i in range(n_moons)])


def generate_moons(spec: MoonsSpec) -> Dataset:
    parts, labels = [], []
    for k, ((cx, cy, o), size) in enumerate(zip(MOON_LAYOUT[spec.n_moons], moon_sizes(spec.n_points, spec.n_moons))):
        t = np.linspace(0.0, np.pi, size)
        x = cx + o * np.cos(t)
        y = cy + o * np.sin(t)
        parts.append(np.column_stack([x, y]))
        labels.append(np.full(size, k))
    X = np.vstack(parts)
    if spec.noise_std > 0:
        X = X + np.random.default_rng(spec.seed).normal(0.0, spec.noise_std, size=X.shape)
    return Dataset(X, np.concatenate(labels))


def _open(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_idx(path, magic: int) -> np.ndarray:
    with _open(path) as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    got, = struct.unpack(">I", raw[:4])
    if got != magic:
        raise FormatError(f"{path}: magic 0x{got:08x} at offset 0, expected 0x{magic:08x}")
    ndim = raw[3]
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise FormatError(f"{path}: truncated dimensions (need {header} bytes, have {len(raw)})")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims))
    if len(raw) != header + size:
        raise FormatError(
            f"{path}: payload at offset {header} should hold {size} bytes for dims {dims}, "
            f"found {len(raw) - header}"
        )
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)


def read_idx_images(path) -> np.ndarray:
    arr = _read_idx(path, IMAGES_MAGIC)
    if arr.ndim != 3:
        raise FormatError(f"{path}: image file must have 3 dimensions, got {arr.ndim}")
    return arr


def read_idx_labels(path) -> np.ndarray:
    arr = _read_idx(path, LABELS_MAGIC)
    if arr.ndim != 1:
        raise FormatError(f"{path}: label file must have 1 dimension, got {arr.ndim}")
    return arr


def write_idx(path, array: np.ndarray) -> None:
    """Write a uint8 array (3-D images or 1-D labels) in IDX format."""
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = {3: IMAGES_MAGIC, 1: LABELS_MAGIC}.get(array.ndim)
    if magic is None:
        raise InputError("IDX writer supports 1-D labels or 3-D images")
    payload = struct.pack(">I", magic) + struct.pack(f">{array.ndim}I", *array.shape) + array.tobytes()
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wb") as fh:
        fh.write(payload)


def load_idx(images_path, labels_path) -> Dataset:
    """Images flattened to rows and scaled to [0, 1], with their labels."""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    X = images.reshape(images.shape[0], -1).astype(float) / 255.0
    return Dataset(X, labels.astype(np.int64))


IDX_FILES = {
    "mnist": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    "fmnist": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def data_dir() -> Path:
    return Path(os.environ.get("SSL_DATA_DIR", Path.home() / ".cache" / "graphssl"))


def find_idx_pair(name: str, root=None) -> tuple[Path, Path]:
    """Locate the test-set files of ``name`` under ``root/name`` (``.gz`` optional).

    ``root`` defaults to ``$SSL_DATA_DIR``.
    """
    if name not in IDX_FILES:
        raise ConfigError(f"unknown image dataset {name!r}")
    base = Path(root) if root is not None else data_dir()
    found = []
    for stem in IDX_FILES[name]:
        for cand in (base / name / stem, base / name / (stem + ".gz")):
            if cand.exists():
                found.append(cand)
                break
        else:
            raise FileNotFoundError(f"{stem}[.gz] not found under {base / name}")
    return found[0], found[1]


@dataclass(frozen=True)
class LabelBudget:
    """How many labels to reveal and where.

    Exactly one of ``per_class`` / ``total`` is used for random placement;
    ``placement="fixed-indices"`` takes ``indices`` as given.
    """

    per_class: int | None = None
    total: int | None = None
    seed: int = 0
    placement: Literal["uniform-random", "fixed-indices"] = "uniform-random"
    indices: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.placement == "fixed-indices":
            if self.indices is None:
                raise ConfigError("fixed-indices placement needs indices")
        elif self.placement == "uniform-random":
            if (self.per_class is None) == (self.total is None):
                raise ConfigError("give exactly one of per_class or total")
            amount = self.per_class if self.per_class is not None else self.total
            if amount < 0:
                raise ConfigError("label budget must be non-negative")
        else:
            raise ConfigError(f"unknown placement {self.placement!r}")


def sample_labeled_set(data: Dataset, budget: LabelBudget) -> LabeledSet:
    if data.true_labels is None:
        raise InputError("sampling labels needs a dataset with true_labels")
    y = data.true_labels
    K = data.n_classes
    if budget.placement == "fixed-indices":
        idx = np.asarray(budget.indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= data.n):
            raise InputError("fixed label indices fall outside the dataset")
        return LabeledSet.from_labels(idx, y[idx], data.n, K)
    rng = np.random.default_rng(budget.seed)
    if budget.per_class is not None:
        subsets = []
        for k in range(K):
            members = np.flatnonzero(y == k)
            if budget.per_class > members.size:
                raise ConfigError(f"class {k} has {members.size} nodes, cannot label {budget.per_class}")
            subsets.append(rng.choice(members, size=budget.per_class, replace=False))
        return LabeledSet(tuple(subsets), data.n)
    if budget.total > data.n:
        raise ConfigError(f"cannot label {budget.total} of {data.n} nodes")
    idx = rng.choice(data.n, size=budget.total, replace=False)
    return LabeledSet.from_labels(idx, y[idx], data.n, K)
