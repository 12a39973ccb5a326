"""Wrapper evaluation: classify test pixels on a band subset and memoize the accuracy."""
from __future__ import annotations

import csv
import logging
import os
import subprocess
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .bandselect import BandSelector, BandSubset, SelectionThresholds
from .datacube import GroundTruthMap, HyperCube, LabeledSplit
from .errors import ExternalClassifierError, FormatError, ValidationError
from .infotheory import DEFAULT_LEVELS

log = logging.getLogger(__name__)

CLASSIFIER_KINDS = ("nearest-centroid", "knn", "external")
CACHE_FIELDS = ["th_relevance", "th_redundancy", "split_seed", "classifier_id", "n_levels",
                "n_bands", "accuracy", "defined", "band_list"]


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str = "knn"
    k: int = 1
    command: Tuple[str, ...] = ()
    normalize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "command", tuple(self.command))
        if self.kind not in CLASSIFIER_KINDS:
            raise ValidationError(f"unknown classifier kind {self.kind!r}")
        if self.kind == "knn" and self.k < 1:
            raise ValidationError("knn needs k >= 1")
        if self.kind == "external" and not self.command:
            raise ValidationError("external classifier needs a command")

    @property
    def identity(self) -> str:
        norm = "norm" if self.normalize else "raw"
        if self.kind == "knn":
            return f"knn-k{self.k}-{norm}"
        if self.kind == "external":
            return f"external-{norm}:" + " ".join(self.command)
        return f"{self.kind}-{norm}"


@dataclass(frozen=True)
class EvaluationRecord:
    thresholds: SelectionThresholds
    bands: BandSubset
    accuracy: float
    defined: bool

    @property
    def n_bands(self) -> int:
        return len(self.bands)


def overall_accuracy(predicted: Sequence[int], actual: Sequence[int]) -> float:
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if predicted.shape != actual.shape:
        raise ValidationError(f"length mismatch: {predicted.size} predictions for {actual.size} labels")
    if actual.size == 0:
        raise ValidationError("accuracy of an empty test set")
    return 100.0 * np.count_nonzero(predicted == actual) / actual.size


def _minmax(train: np.ndarray, test: np.ndarray):
    lo = train.min(axis=0)
    span = train.max(axis=0) - lo
    span[span == 0] = 1.0
    return (train - lo) / span, (test - lo) / span


def _nearest_centroid(train, labels, test):
    classes = np.unique(labels)
    centroids = np.stack([train[labels == c].mean(axis=0) for c in classes])
    d = ((test[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    # argmin returns the first minimum, i.e. the smallest class id on ties
    return classes[np.argmin(d, axis=1)]


def _knn(train, labels, test, k):
    k = min(k, len(train))
    n_classes = int(labels.max()) + 1
    # bound the (chunk, n_train, n_features) difference tensor to ~16M floats
    chunk = max(1, 2**24 // max(1, train.size))
    out = np.empty(len(test), dtype=np.int64)
    for start in range(0, len(test), chunk):
        block = test[start:start + chunk]
        d = ((block[:, None, :] - train[None, :, :]) ** 2).sum(axis=2)
        # stable sort: equidistant neighbours are taken in training order
        nearest = np.argsort(d, axis=1, kind="stable")[:, :k]
        votes = np.zeros((len(block), n_classes), dtype=np.int64)
        np.add.at(votes, (np.repeat(np.arange(len(block)), k), labels[nearest].ravel()), 1)
        # argmax picks the smallest class id among tied vote counts
        out[start:start + chunk] = np.argmax(votes, axis=1)
    return out


def _external(command, train, labels, test, integer_features):
    fmt = (lambda v: str(int(v))) if integer_features else repr
    with tempfile.TemporaryDirectory(prefix="hsiband-") as tmp:
        train_path = os.path.join(tmp, "train.csv")
        test_path = os.path.join(tmp, "test.csv")
        n_feat = train.shape[1]
        with open(train_path, "w", newline="\n") as fh:
            fh.write(",".join(["label"] + [f"f{i}" for i in range(n_feat)]) + "\n")
            for label, row in zip(labels, train):
                fh.write(",".join([str(int(label))] + [fmt(float(v)) for v in row]) + "\n")
        with open(test_path, "w", newline="\n") as fh:
            fh.write(",".join(f"f{i}" for i in range(n_feat)) + "\n")
            for row in test:
                fh.write(",".join(fmt(float(v)) for v in row) + "\n")
        try:
            proc = subprocess.run(list(command) + [train_path, test_path], capture_output=True, check=False)
        except OSError as exc:
            raise ExternalClassifierError(f"cannot run external classifier {command[0]!r}: {exc}") from exc
    if proc.returncode != 0:
        raise ExternalClassifierError(
            f"external classifier exited with status {proc.returncode}: {proc.stderr.decode(errors='replace').strip()}"
        )
    lines = proc.stdout.decode("ascii", errors="replace").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) != len(test):
        raise ExternalClassifierError(f"external classifier printed {len(lines)} predictions for {len(test)} test rows")
    try:
        return np.array([int(line) for line in lines], dtype=np.int64)
    except ValueError:
        raise ExternalClassifierError("external classifier output is not one integer per line") from None


def train_predict(spec: ClassifierSpec, cube: HyperCube, gt: GroundTruthMap, split: LabeledSplit,
                  subset: BandSubset) -> np.ndarray:
    """Fit on the training pixels of ``subset`` and predict a class for every test pixel."""
    if not len(subset):
        raise ValidationError("cannot classify on an empty band subset")
    if max(subset.bands) >= cube.n_bands or min(subset.bands) < 0:
        raise ValidationError(f"band subset {subset.bands} out of range for a {cube.n_bands}-band cube")
    train = cube.pixels(split.train_pixels, subset.bands).astype(np.float64)
    test = cube.pixels(split.test_pixels, subset.bands).astype(np.float64)
    labels = gt.labels_at(split.train_pixels)
    if spec.normalize:
        train, test = _minmax(train, test)
    if spec.kind == "nearest-centroid":
        return _nearest_centroid(train, labels, test)
    if spec.kind == "knn":
        return _knn(train, labels, test, spec.k)
    predicted = _external(spec.command, train, labels, test, integer_features=not spec.normalize)
    if predicted.size and (predicted.min() < 1 or predicted.max() > gt.num_classes):
        raise ExternalClassifierError(f"external classifier predicted a class outside [1, {gt.num_classes}]")
    return predicted


CacheKey = Tuple[float, float, int, str, int]


class EvaluationCache:
    """Thread-safe memo of evaluation records, optionally backed by a CSV file."""

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self._entries: Dict[CacheKey, EvaluationRecord] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self.load()

    @staticmethod
    def key(thresholds: SelectionThresholds, split_seed: int, classifier_id: str, n_levels: int) -> CacheKey:
        return (float(thresholds.th_relevance), float(thresholds.th_redundancy), int(split_seed),
                classifier_id, int(n_levels))

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key):
        return key in self._entries

    def get(self, key: CacheKey) -> Optional[EvaluationRecord]:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: CacheKey, record: EvaluationRecord) -> EvaluationRecord:
        with self._lock:
            # first writer wins; a concurrent duplicate computed the same value
            return self._entries.setdefault(key, record)

    def items(self):
        with self._lock:
            return sorted(self._entries.items(), key=lambda kv: kv[0])

    def save(self, path=None) -> None:
        path = Path(path) if path is not None else self.path
        if path is None:
            raise ValidationError("no cache path to save to")
        tmp = path.with_name(path.name + ".tmp")
        try:
            with tmp.open("w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(CACHE_FIELDS)
                for (th_rel, th_red, seed, clf, levels), rec in self.items():
                    writer.writerow([repr(th_rel), repr(th_red), seed, clf, levels, rec.n_bands,
                                     repr(float(rec.accuracy)), int(rec.defined),
                                     ";".join(str(b) for b in rec.bands.bands)])
            tmp.replace(path)
        except OSError as exc:
            raise OSError(f"cannot write evaluation cache {path}: {exc}") from exc

    def load(self, path=None) -> None:
        path = Path(path) if path is not None else self.path
        try:
            fh = path.open(newline="")
        except OSError as exc:
            raise OSError(f"cannot read evaluation cache {path}: {exc}") from exc
        with fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != CACHE_FIELDS:
                raise FormatError(f"cache header must be {','.join(CACHE_FIELDS)}", path, "line 1")
            for lineno, row in enumerate(reader, start=2):
                try:
                    th = SelectionThresholds(float(row["th_relevance"]), float(row["th_redundancy"]))
                    bands = tuple(int(b) for b in row["band_list"].split(";") if b)
                    rec = EvaluationRecord(th, BandSubset(bands, th), float(row["accuracy"]), row["defined"] == "1")
                    if rec.n_bands != int(row["n_bands"]):
                        raise ValueError("n_bands disagrees with band_list")
                    key = (th.th_relevance, th.th_redundancy, int(row["split_seed"]),
                           row["classifier_id"], int(row["n_levels"]))
                except (ValueError, TypeError) as exc:
                    raise FormatError(f"bad cache row: {exc}", path, f"line {lineno}") from None
                self._entries[key] = rec


class Evaluator:
    """Callable mapping a threshold couple to its (memoized) evaluation record.

    ``classifier_calls`` counts how many times a classifier was actually run.
    """

    def __init__(self, cube: HyperCube, gt: GroundTruthMap, split: LabeledSplit, spec: ClassifierSpec,
                 cache: Optional[EvaluationCache] = None, n_levels: int = DEFAULT_LEVELS,
                 selector: Optional[BandSelector] = None, literal: bool = False):
        self.cube = cube
        self.gt = gt
        self.split = split
        self.spec = spec
        self.cache = cache if cache is not None else EvaluationCache()
        self.n_levels = n_levels
        self._selector = selector
        self._literal = literal
        self.classifier_calls = 0
        self._lock = threading.Lock()

    @property
    def selector(self) -> BandSelector:
        if self._selector is None:
            self._selector = BandSelector(self.cube, self.gt, self.n_levels, literal=self._literal)
        return self._selector

    def __call__(self, thresholds: SelectionThresholds) -> EvaluationRecord:
        key = EvaluationCache.key(thresholds, self.split.seed, self.spec.identity, self.n_levels)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        subset = self.selector.select(thresholds)
        if not len(subset):
            record = EvaluationRecord(thresholds, subset, 0.0, False)
        else:
            predicted = train_predict(self.spec, self.cube, self.gt, self.split, subset)
            with self._lock:
                self.classifier_calls += 1
            accuracy = overall_accuracy(predicted, self.gt.labels_at(self.split.test_pixels))
            record = EvaluationRecord(thresholds, subset, float(accuracy), True)
            log.debug("evaluated %s: %d bands, %.2f%%", thresholds, record.n_bands, accuracy)
        return self.cache.put(key, record)


def evaluate_thresholds(cube: HyperCube, gt: GroundTruthMap, split: LabeledSplit,
                        thresholds: SelectionThresholds, spec: ClassifierSpec,
                        cache: EvaluationCache, n_levels: int = DEFAULT_LEVELS) -> EvaluationRecord:
    return Evaluator(cube, gt, split, spec, cache, n_levels)(thresholds)
