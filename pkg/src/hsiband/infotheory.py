"""Plug-in (histogram) estimates of entropy, mutual information and symmetric uncertainty.

All quantities are in bits. Bands are discretized with uniform-width bins over
the full 16-bit range before any counting takes place.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .datacube import GroundTruthMap, HyperCube
from .errors import InconsistencyError, ValidationError

DEFAULT_LEVELS = 256
SAMPLE_RANGE = 65536


@dataclass(frozen=True)
class DiscretizedBand:
    values: np.ndarray
    n_levels: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int64).ravel()
        if self.n_levels < 1:
            raise ValidationError("n_levels must be >= 1")
        if values.size and (values.min() < 0 or values.max() >= self.n_levels):
            raise ValidationError(f"bin indices must lie in [0, {self.n_levels})")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    def histogram(self, mask: Optional[np.ndarray] = None) -> np.ndarray:
        values = self.values if mask is None else self.values[_mask_index(mask, self.values.size)]
        return np.bincount(values, minlength=self.n_levels)


@dataclass(frozen=True)
class JointHistogram:
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise ValidationError("joint histogram must be 2-D")
        if (counts < 0).any():
            raise ValidationError("joint counts must be non-negative")
        if counts.sum() <= 0:
            raise ValidationError("joint histogram is empty")

    @property
    def total(self):
        return self.counts.sum()

    @property
    def T(self) -> "JointHistogram":
        return JointHistogram(self.counts.T)


@dataclass(frozen=True)
class FanoBounds:
    conditional_entropy: float
    lower_bound_pe: float
    num_classes: int


def quantize_band(band: np.ndarray, n_levels: int = DEFAULT_LEVELS) -> DiscretizedBand:
    """Map raw counts to ``floor(value * n_levels / 65536)``."""
    if n_levels < 1:
        raise ValidationError("n_levels must be >= 1")
    values = np.clip(np.asarray(band, dtype=np.int64).ravel(), 0, SAMPLE_RANGE - 1)
    return DiscretizedBand((values * n_levels) // SAMPLE_RANGE, n_levels)


def labels_variable(gt: GroundTruthMap) -> DiscretizedBand:
    """Ground-truth labels as a discrete variable over ``0..num_classes``."""
    return DiscretizedBand(gt.labels.ravel(), gt.num_classes + 1)


def entropy(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64).ravel()
    total = counts.sum()
    if total <= 0:
        raise ValidationError("entropy of an empty histogram")
    p = counts[counts > 0] / total
    return float(-np.sort(p * np.log2(p)).sum())


def _mask_index(mask, size: int) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.dtype == bool:
        mask = mask.ravel()
        if mask.size != size:
            raise ValidationError(f"boolean mask has {mask.size} entries, variables have {size}")
        return np.flatnonzero(mask)
    index = mask.ravel().astype(np.intp)
    if index.size and (index.min() < 0 or index.max() >= size):
        raise ValidationError("mask index out of range")
    return index


def joint_histogram(a: DiscretizedBand, b: DiscretizedBand, mask=None) -> JointHistogram:
    """Cross-tabulate two variables, optionally restricted to ``mask`` (boolean or index array)."""
    if len(a) != len(b):
        raise ValidationError(f"length mismatch: {len(a)} vs {len(b)}")
    av, bv = a.values, b.values
    if mask is not None:
        index = _mask_index(mask, len(a))
        if index.size == 0:
            raise ValidationError("mask selects no positions")
        av, bv = av[index], bv[index]
    flat = np.bincount(av * b.n_levels + bv, minlength=a.n_levels * b.n_levels)
    return JointHistogram(flat.reshape(a.n_levels, b.n_levels))


def mutual_information(j: JointHistogram) -> float:
    """I(A;B) = H(A) + H(B) - H(A,B), clamped at zero.

    Entropies are summed in sorted order and the smaller marginal entropy is
    added last, so the value is exactly symmetric and a variable that
    determines the other yields exactly the other's entropy. Bands that carry
    the same information therefore tie exactly instead of differing in the
    last bit.
    """
    mi, _, _ = _mi_from_counts(np.asarray(j.counts))
    return mi


def _mi_from_counts(counts: np.ndarray):
    ha, hb = entropy(counts.sum(axis=1)), entropy(counts.sum(axis=0))
    lo, hi = sorted((ha, hb))
    return max(0.0, lo + (hi - entropy(counts))), ha, hb


def _mi_and_entropies(a: DiscretizedBand, b: DiscretizedBand, mask=None):
    return _mi_from_counts(joint_histogram(a, b, mask).counts)


def conditional_entropy(h_c: float, mi: float, tol: float = 1e-9) -> float:
    """H(C|X) = H(C) - I(C;X), clamped at zero."""
    if mi < -tol or mi > h_c + tol:
        raise InconsistencyError(f"mutual information {mi} is incompatible with H(C) = {h_c}")
    return max(0.0, h_c - mi)


def symmetric_uncertainty(a: DiscretizedBand, b: DiscretizedBand, mask=None) -> float:
    """2 * I(A;B) / (H(A) + H(B)); two constant variables count as fully redundant."""
    mi, ha, hb = _mi_and_entropies(a, b, mask)
    if ha + hb == 0.0:
        return 1.0
    return 2.0 * mi / (ha + hb)


def mi_profile(cube: HyperCube, gt: GroundTruthMap, n_levels: int = DEFAULT_LEVELS,
               labeled_only: bool = True) -> np.ndarray:
    """Mutual information between every band and the ground truth."""
    gt.check_matches(cube)
    labels = labels_variable(gt)
    mask = gt.labeled_mask.ravel() if labeled_only else None
    return np.array([
        mutual_information(joint_histogram(quantize_band(cube.band(i), n_levels), labels, mask))
        for i in range(cube.n_bands)
    ])


def fano_lower_bound(h_c_given_x: float, num_classes: int) -> FanoBounds:
    """Lower bound on the classification error probability from H(C|X)."""
    if num_classes < 2:
        raise ValidationError("Fano bound needs at least 2 classes")
    if h_c_given_x < 0:
        raise ValidationError("conditional entropy must be non-negative")
    bound = max(0.0, (h_c_given_x - 1.0) / math.log2(num_classes))
    return FanoBounds(h_c_given_x, bound, num_classes)
