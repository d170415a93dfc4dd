"""CIFAR-10 ingestion and the vehicles-vs-animals relabeling.

Reads the public binary distribution: five training files plus one test
file, each exactly 10,000 records of 3,073 bytes (1 label byte, then 3,072
pixel bytes channel-planar R, G, B, row-major within each plane). Pixels
are normalized to [0, 1] by /255.

The ten original classes collapse to two: airplane, automobile, ship and
truck become "vehicle" (label 1, a potential transmitter); the six animal
classes become "animal" (label 0).
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import CorruptDatasetError, LabelError
from .rng import Rng

TRAIN_FILES = [f"data_batch_{i}.bin" for i in range(1, 6)]
TEST_FILE = "test_batch.bin"
RECORDS_PER_FILE = 10_000
RECORD_BYTES = 3073
IMAGE_SHAPE = (32, 32, 3)
SOURCE_DIM = 32 * 32 * 3

VEHICLE_CLASSES = frozenset({0, 1, 8, 9})  # airplane, automobile, ship, truck
ANIMAL, VEHICLE = 0, 1

CLASS_NAMES = ["airplane", "automobile", "bird", "cat", "deer",
               "dog", "frog", "horse", "ship", "truck"]


def relabel_binary(label10: int) -> int:
    """Map an original class id to vehicle (1) or animal (0)."""
    if not 0 <= int(label10) <= 9:
        raise LabelError(f"class id {label10} outside 0..9")
    return VEHICLE if int(label10) in VEHICLE_CLASSES else ANIMAL


def relabel_binary_array(label10: np.ndarray) -> np.ndarray:
    label10 = np.asarray(label10)
    if label10.size and (label10.min() < 0 or label10.max() > 9):
        raise LabelError("class ids outside 0..9")
    return np.isin(label10, list(VEHICLE_CLASSES)).astype(np.int64)


@dataclass
class Split:
    """One dataset split as parallel arrays."""
    pixels: np.ndarray   # (N, 32, 32, 3) float32 in [0, 1]
    label2: np.ndarray   # (N,) int64, vehicle=1 / animal=0
    label10: np.ndarray  # (N,) int64, original class id

    @property
    def n(self) -> int:
        return self.pixels.shape[0]

    def subset(self, limit: int | None) -> "Split":
        if limit is None or limit >= self.n:
            return self
        return Split(self.pixels[:limit], self.label2[:limit], self.label10[:limit])


@dataclass
class Dataset:
    train: Split
    test: Split


def _read_batch_file(path: str) -> tuple[np.ndarray, np.ndarray]:
    if not os.path.isfile(path):
        raise CorruptDatasetError(f"missing dataset file: {path}")
    expected = RECORDS_PER_FILE * RECORD_BYTES
    size = os.path.getsize(path)
    if size != expected:
        raise CorruptDatasetError(
            f"{path}: expected {expected} bytes, found {size}")
    raw = np.fromfile(path, dtype=np.uint8).reshape(RECORDS_PER_FILE, RECORD_BYTES)
    labels = raw[:, 0].astype(np.int64)
    if labels.max() > 9:
        raise CorruptDatasetError(f"{path}: label byte > 9")
    # channel-planar (3, 32, 32) -> channels-last (32, 32, 3)
    pixels = raw[:, 1:].reshape(RECORDS_PER_FILE, 3, 32, 32).transpose(0, 2, 3, 1)
    return pixels, labels


def _build_split(files: list[str]) -> Split:
    pix_parts, lab_parts = [], []
    for path in files:
        pixels, labels = _read_batch_file(path)
        pix_parts.append(pixels)
        lab_parts.append(labels)
    label10 = np.concatenate(lab_parts)
    pixels = (np.concatenate(pix_parts).astype(np.float32) / 255.0)
    return Split(pixels=pixels, label2=relabel_binary_array(label10), label10=label10)


def load_cifar10(directory: str) -> Dataset:
    """Load the six binary batch files from ``directory``, preserving the
    on-disk sample order."""
    train = _build_split([os.path.join(directory, f) for f in TRAIN_FILES])
    test = _build_split([os.path.join(directory, TEST_FILE)])
    return Dataset(train=train, test=test)


def verify_checksums(directory: str, manifest: str | None = None) -> dict[str, str]:
    """MD5 each batch file. With a manifest ("<hex>  <filename>" lines, the
    md5sum format), mismatches and omissions raise; without one the computed
    digests are just returned for the caller to record."""
    digests = {}
    for fname in TRAIN_FILES + [TEST_FILE]:
        path = os.path.join(directory, fname)
        if not os.path.isfile(path):
            raise CorruptDatasetError(f"missing dataset file: {path}")
        md5 = hashlib.md5()
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                md5.update(chunk)
        digests[fname] = md5.hexdigest()
    if manifest is not None:
        expected = {}
        with open(manifest, "r", encoding="utf-8") as fh:
            for line in fh:
                parts = line.split()
                if len(parts) == 2:
                    expected[parts[1]] = parts[0]
        for fname, digest in digests.items():
            if fname not in expected:
                raise CorruptDatasetError(f"{fname} missing from manifest")
            if expected[fname] != digest:
                raise CorruptDatasetError(
                    f"{fname}: checksum {digest} != manifest {expected[fname]}")
    return digests


def batch_indices(n: int, batch_size: int, shuffle: bool = False,
                  rng: Rng | None = None) -> Iterator[np.ndarray]:
    """Yield index arrays covering 0..n-1 exactly once; the final partial
    batch is kept so every sample is visited each epoch."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    order = rng.permutation(n) if shuffle else np.arange(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def synthetic_dataset(n_train: int, n_test: int, seed: int = 0,
                      vehicle_fraction: float = 0.4) -> Dataset:
    """Procedurally generated stand-in with the real dataset's shape and the
    same 40/60 vehicle/animal prior.

    Vehicle images are low-pass textures (box-blurred noise), animal images
    are raw high-frequency noise, so the two classes are separable by a
    small convolutional encoder. Useful for smoke tests and demos when the
    real corpus is not on disk; accuracy numbers on it are not comparable
    to the real dataset.
    """
    rng = Rng(seed)

    def make(n):
        labels2 = (rng.uniform(size=n) < vehicle_fraction).astype(np.int64)
        imgs = rng.uniform(size=(n, 32, 32, 3)).astype(np.float32)
        kernel = np.ones((5, 5), dtype=np.float32) / 25.0
        for i in np.nonzero(labels2)[0]:
            for c in range(3):
                img = imgs[i, :, :, c]
                padded = np.pad(img, 2, mode="edge")
                win = np.lib.stride_tricks.sliding_window_view(padded, (5, 5))
                imgs[i, :, :, c] = (win * kernel).sum(axis=(2, 3))
        vehicle_ids = np.array(sorted(VEHICLE_CLASSES))
        animal_ids = np.array(sorted(set(range(10)) - VEHICLE_CLASSES))
        labels10 = np.where(
            labels2 == 1,
            vehicle_ids[rng.integers(0, len(vehicle_ids), size=n)],
            animal_ids[rng.integers(0, len(animal_ids), size=n)])
        return Split(pixels=imgs, label2=labels2, label10=labels10)

    return Dataset(train=make(n_train), test=make(n_test))
