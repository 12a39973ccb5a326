"""Two-stage band selection: MI relevance threshold, then greedy SU redundancy pruning."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .datacube import GroundTruthMap, HyperCube
from .errors import ValidationError
from .infotheory import DEFAULT_LEVELS, DiscretizedBand, mi_profile, quantize_band, symmetric_uncertainty

# value written into consumed / unused cells of the working matrix
SENTINEL = 1.0


@dataclass(frozen=True)
class SelectionThresholds:
    th_relevance: float
    th_redundancy: float

    def __post_init__(self):
        if not self.th_relevance >= 0:
            raise ValidationError(f"th_relevance must be >= 0, got {self.th_relevance}")
        if not 0.0 <= self.th_redundancy <= 1.0:
            raise ValidationError(f"th_redundancy must lie in [0, 1], got {self.th_redundancy}")


@dataclass(frozen=True)
class BandSubset:
    bands: Tuple[int, ...]
    provenance: Optional[SelectionThresholds] = None

    def __post_init__(self):
        bands = tuple(int(b) for b in self.bands)
        if len(set(bands)) != len(bands):
            raise ValidationError(f"duplicate band indices in {bands}")
        object.__setattr__(self, "bands", bands)

    def __len__(self):
        return len(self.bands)

    def __iter__(self):
        return iter(self.bands)


@dataclass(frozen=True)
class RedundancyMatrix:
    """Pairwise SU over an MI-ascending band ordering.

    ``cells`` is the working copy scanned for minima: only the strict upper
    triangle carries SU values, everything else holds ``SENTINEL``.
    ``pristine`` is the full symmetric SU matrix and is never overwritten.
    """

    order: Tuple[int, ...]
    cells: np.ndarray
    pristine: np.ndarray

    @property
    def n(self) -> int:
        return len(self.order)


def relevance_filter(profile: Sequence[float], th_relevance: float) -> BandSubset:
    """Bands with MI strictly above ``th_relevance``, ascending by MI then band index."""
    profile = np.asarray(profile, dtype=np.float64)
    if profile.size == 0:
        raise ValidationError("empty MI profile")
    order = np.lexsort((np.arange(profile.size), profile))
    return BandSubset(tuple(int(i) for i in order if profile[i] > th_relevance))


def _matrix_from_pristine(order, pristine: np.ndarray) -> RedundancyMatrix:
    n = len(order)
    cells = np.full((n, n), SENTINEL)
    upper = np.triu_indices(n, k=1)
    cells[upper] = pristine[upper]
    pristine = pristine.copy()
    pristine.setflags(write=False)
    cells.setflags(write=False)
    return RedundancyMatrix(tuple(order), cells, pristine)


def build_redundancy_matrix(cube: HyperCube, subset: BandSubset, n_levels: int = DEFAULT_LEVELS) -> RedundancyMatrix:
    order = tuple(subset.bands)
    if not order:
        raise ValidationError("redundancy matrix needs at least one band")
    for b in order:
        if not 0 <= b < cube.n_bands:
            raise ValidationError(f"band index {b} out of range for a {cube.n_bands}-band cube")
    quantized = [quantize_band(cube.band(b), n_levels) for b in order]
    n = len(order)
    pristine = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            pristine[i, j] = pristine[j, i] = symmetric_uncertainty(quantized[i], quantized[j])
    return _matrix_from_pristine(order, pristine)


def redundancy_filter(matrix: RedundancyMatrix, th_redundancy: float, literal: bool = False) -> BandSubset:
    """Greedy pruning: repeatedly take the least-redundant unconsumed pair.

    Each endpoint of the pair joins the output if its SU with every band
    already selected is below ``th_redundancy``. The membership test reads the
    pristine matrix; ``literal=True`` reads the working matrix instead, where
    consumed pairs have been overwritten with the sentinel.
    """
    if not 0.0 <= th_redundancy <= 1.0:
        raise ValidationError(f"th_redundancy must lie in [0, 1], got {th_redundancy}")
    work = np.array(matrix.cells, dtype=np.float64)
    lookup = work if literal else matrix.pristine
    selected = []

    def admissible(x):
        if x in selected:
            return False
        for member in selected:
            # working matrix only holds values in its upper triangle
            value = lookup[min(x, member), max(x, member)] if literal else lookup[x, member]
            if not value < th_redundancy:
                return False
        return True

    while work.size and work.min() < th_redundancy:
        x, y = np.unravel_index(np.argmin(work), work.shape)
        x, y = int(x), int(y)
        if admissible(x):
            selected.append(x)
        if admissible(y):
            selected.append(y)
        work[x, y] = work[y, x] = SENTINEL
    return BandSubset(tuple(matrix.order[i] for i in selected))


def select_bands(cube: HyperCube, gt: GroundTruthMap, thresholds: SelectionThresholds,
                 n_levels: int = DEFAULT_LEVELS, literal: bool = False) -> BandSubset:
    """Run both stages for one threshold couple."""
    return BandSelector(cube, gt, n_levels, literal=literal).select(thresholds)


class BandSelector:
    """Band selection over many threshold couples on one cube.

    The MI profile is computed once and pairwise SU values are memoized, so a
    grid sweep costs at most one SU evaluation per band pair.
    """

    def __init__(self, cube: HyperCube, gt: GroundTruthMap, n_levels: int = DEFAULT_LEVELS,
                 literal: bool = False):
        gt.check_matches(cube)
        self.cube = cube
        self.gt = gt
        self.n_levels = n_levels
        self.literal = literal
        self.profile = mi_profile(cube, gt, n_levels)
        self._quantized: Dict[int, DiscretizedBand] = {}
        self._su = np.full((cube.n_bands, cube.n_bands), np.nan)
        np.fill_diagonal(self._su, 1.0)
        self._matrices: Dict[Tuple[int, ...], RedundancyMatrix] = {}

    def _band(self, b: int) -> DiscretizedBand:
        if b not in self._quantized:
            raw = quantize_band(self.cube.band(b), self.n_levels)
            # relabel occupied bins densely; SU is invariant under bijective recoding
            _, dense = np.unique(raw.values, return_inverse=True)
            self._quantized[b] = DiscretizedBand(dense, int(dense.max()) + 1)
        return self._quantized[b]

    def su(self, a: int, b: int) -> float:
        if np.isnan(self._su[a, b]):
            self._su[a, b] = self._su[b, a] = symmetric_uncertainty(self._band(a), self._band(b))
        return float(self._su[a, b])

    def relevant(self, th_relevance: float) -> BandSubset:
        return relevance_filter(self.profile, th_relevance)

    def matrix(self, subset: BandSubset) -> RedundancyMatrix:
        key = tuple(subset.bands)
        if key not in self._matrices:
            if not key:
                raise ValidationError("redundancy matrix needs at least one band")
            n = len(key)
            pristine = np.ones((n, n))
            for i in range(n):
                for j in range(i + 1, n):
                    pristine[i, j] = pristine[j, i] = self.su(key[i], key[j])
            self._matrices[key] = _matrix_from_pristine(key, pristine)
        return self._matrices[key]

    def select(self, thresholds: SelectionThresholds) -> BandSubset:
        relevant = self.relevant(thresholds.th_relevance)
        if not relevant.bands:
            return BandSubset((), thresholds)
        chosen = redundancy_filter(self.matrix(relevant), thresholds.th_redundancy, literal=self.literal)
        return BandSubset(chosen.bands, thresholds)
