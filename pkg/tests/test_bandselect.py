import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hsiband.bandselect import (SENTINEL, BandSelector, BandSubset, RedundancyMatrix, SelectionThresholds,
                                build_redundancy_matrix, redundancy_filter, relevance_filter, select_bands)
from hsiband.datacube import HyperCube, SyntheticSpec, generate_synthetic
from hsiband.errors import ValidationError
from hsiband.infotheory import quantize_band, symmetric_uncertainty

import oracles


def matrix_from(pristine):
    pristine = np.array(pristine, dtype=float)
    n = len(pristine)
    cells = np.full((n, n), SENTINEL)
    iu = np.triu_indices(n, 1)
    cells[iu] = pristine[iu]
    return RedundancyMatrix(tuple(range(n)), cells, pristine)


class TestRelevanceFilter:
    def test_ascending_order(self):
        assert relevance_filter([0.1, 0.5, 0.3], 0.25).bands == (2, 1)

    def test_zero_threshold(self):
        assert relevance_filter([0.2, 0.1, 0.3], 0.0).bands == (1, 0, 2)

    def test_strict_boundary(self):
        assert relevance_filter([0.4], 0.4).bands == ()

    def test_ties_by_index(self):
        assert relevance_filter([0.5, 0.2, 0.5], 0.0).bands == (1, 0, 2)

    def test_empty_profile(self):
        with pytest.raises(ValidationError):
            relevance_filter([], 0.1)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 3), min_size=1, max_size=30), st.floats(0, 3), st.floats(0, 3))
    def test_monotone_inclusion(self, profile, t1, t2):
        lo, hi = sorted((t1, t2))
        assert set(relevance_filter(profile, hi).bands) <= set(relevance_filter(profile, lo).bands)


class TestRedundancyFilter:
    def test_hand_executed(self):
        pristine = [[1.0, 0.9, 0.1], [0.9, 1.0, 0.1], [0.1, 0.1, 1.0]]
        assert redundancy_filter(matrix_from(pristine), 0.5).bands == (0, 2)

    def test_zero_threshold(self):
        assert redundancy_filter(matrix_from([[1, 0.0], [0.0, 1]]), 0.0).bands == ()

    def test_independent_pair(self):
        assert redundancy_filter(matrix_from([[1, 0.0], [0.0, 1]]), 0.5).bands == (0, 1)

    def test_maps_back_to_original_indices(self):
        m = matrix_from([[1, 0.2], [0.2, 1]])
        m = RedundancyMatrix((7, 3), m.cells, m.pristine)
        assert redundancy_filter(m, 0.5).bands == (7, 3)

    def test_input_matrix_untouched(self):
        m = matrix_from([[1, 0.2, 0.3], [0.2, 1, 0.4], [0.3, 0.4, 1]])
        before = m.cells.copy()
        redundancy_filter(m, 0.9)
        np.testing.assert_array_equal(m.cells, before)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(2, 7).flatmap(lambda n: st.lists(st.floats(0, 1), min_size=n * n, max_size=n * n)),
           st.floats(0, 1))
    def test_literal_mode_agrees_with_pristine(self, values, th):
        # a consumed cell only ever involves bands whose fate is already sealed,
        # so reading the overwritten working matrix cannot change the outcome
        n = int(round(len(values) ** 0.5))
        raw = np.array(values).reshape(n, n)
        pristine = np.triu(raw, 1) + np.triu(raw, 1).T + np.eye(n)
        m = matrix_from(pristine)
        literal = redundancy_filter(m, th, literal=True).bands
        assert literal == redundancy_filter(m, th).bands
        assert list(literal) == oracle_filter(pristine.tolist(), th, literal=True)

    def test_threshold_range(self):
        with pytest.raises(ValidationError):
            redundancy_filter(matrix_from([[1]]), 1.5)

    @settings(max_examples=150, deadline=None)
    @given(st.integers(1, 7).flatmap(lambda n: st.tuples(
        st.just(n), st.lists(st.floats(0, 1), min_size=n * n, max_size=n * n))), st.floats(0, 1))
    def test_against_oracle_and_invariants(self, data, th):
        n, values = data
        raw = np.array(values).reshape(n, n)
        pristine = np.triu(raw, 1) + np.triu(raw, 1).T + np.eye(n)
        m = matrix_from(pristine)
        out = redundancy_filter(m, th).bands
        assert list(out) == oracle_filter(pristine.tolist(), th)
        # admitted bands are pairwise non-redundant
        for u, v in itertools.combinations(out, 2):
            assert pristine[u, v] < th

    def test_cardinality_can_fall_as_threshold_rises(self):
        # band 2 is refused at 0.5 (SU 0.6 with band 0) but admitted at 0.9,
        # where it then blocks bands 3 and 4 (SU 0.95 with both)
        p = np.eye(5)
        for (i, j), v in {(0, 1): 0.01, (1, 2): 0.05, (0, 2): 0.6, (0, 3): 0.1, (0, 4): 0.1, (1, 3): 0.1,
                          (1, 4): 0.1, (3, 4): 0.1, (2, 3): 0.95, (2, 4): 0.95}.items():
            p[i, j] = p[j, i] = v
        m = matrix_from(p)
        assert redundancy_filter(m, 0.5).bands == (0, 1, 3, 4)
        assert redundancy_filter(m, 0.9).bands == (0, 1, 2)
        assert oracle_filter(p.tolist(), 0.9) == [0, 1, 2]


def oracle_filter(pristine, th, literal=False):
    """Plain-list transcription of the greedy loop with an iteration counter."""
    n = len(pristine)
    d = [[pristine[i][j] if j > i else 1.0 for j in range(n)] for i in range(n)]
    ss, iterations = [], 0
    while min(min(r) for r in d) < th:
        iterations += 1
        flat = [(d[i][j], i, j) for i in range(n) for j in range(n)]
        _, x, y = min(flat)
        for cand in (x, y):
            if cand in ss:
                continue
            look = (lambda a, b: d[min(a, b)][max(a, b)]) if literal else (lambda a, b: pristine[a][b])
            if all(look(cand, m) < th for m in ss):
                ss.append(cand)
        d[x][y] = d[y][x] = 1.0
    assert iterations <= n * (n - 1) // 2
    return ss


class TestBuildMatrix:
    def test_single_band(self):
        cube = HyperCube(np.arange(4, dtype=np.uint16).reshape(1, 2, 2))
        m = build_redundancy_matrix(cube, BandSubset((0,)))
        assert m.cells.tolist() == [[1.0]]

    def test_exact_copy(self):
        band = np.arange(16, dtype=np.uint16).reshape(4, 4) * 4000
        cube = HyperCube(np.stack([band, band]))
        m = build_redundancy_matrix(cube, BandSubset((0, 1)))
        assert m.pristine[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_matches_pairwise_calls(self, small_synthetic):
        cube, gt, _ = small_synthetic
        subset = BandSubset((4, 0, 2))
        m = build_redundancy_matrix(cube, subset)
        for i, j in itertools.combinations(range(3), 2):
            expected = symmetric_uncertainty(quantize_band(cube.band(subset.bands[i])),
                                             quantize_band(cube.band(subset.bands[j])))
            assert m.pristine[i, j] == m.pristine[j, i] == expected
            assert m.cells[i, j] == expected and m.cells[j, i] == SENTINEL

    def test_selector_matrix_is_identical(self, small_synthetic):
        cube, gt, _ = small_synthetic
        subset = BandSubset((5, 1, 3, 0))
        a = build_redundancy_matrix(cube, subset)
        b = BandSelector(cube, gt).matrix(subset)
        np.testing.assert_array_equal(a.pristine, b.pristine)
        np.testing.assert_array_equal(a.cells, b.cells)

    def test_index_out_of_range(self, small_synthetic):
        cube, _, _ = small_synthetic
        with pytest.raises(ValidationError):
            build_redundancy_matrix(cube, BandSubset((0, 99)))


class TestSelectBands:
    def test_parents_and_copies_never_together(self):
        spec = SyntheticSpec(32, 32, 4, 2, 1, 2, 0.0)
        for seed in range(5):
            cube, gt, roles = generate_synthetic(spec, seed)
            selector = BandSelector(cube, gt)
            noise_mi = max(selector.profile[r.band_index] for r in roles if r.role == "noise")
            out = selector.select(SelectionThresholds(noise_mi, 0.9)).bands
            for r in roles:
                if r.role == "redundant":
                    assert not {r.band_index, r.parent_index} <= set(out)
            assert all(roles[b].role != "noise" for b in out)
            expected = oracles.two_stage_selection([cube.band(i).ravel().tolist() for i in range(cube.n_bands)],
                                          gt.labels.ravel().tolist(), noise_mi, 0.9, 256)
            assert list(out) == expected

    def test_threshold_at_max_mi_is_empty(self, small_synthetic):
        cube, gt, _ = small_synthetic
        profile = BandSelector(cube, gt).profile
        assert select_bands(cube, gt, SelectionThresholds(float(profile.max()), 1.0)).bands == ()

    def test_provenance(self, small_synthetic):
        cube, gt, _ = small_synthetic
        th = SelectionThresholds(0.1, 0.6)
        assert select_bands(cube, gt, th).provenance == th

    def test_deterministic(self, small_synthetic):
        cube, gt, _ = small_synthetic
        th = SelectionThresholds(0.0, 0.7)
        assert select_bands(cube, gt, th) == select_bands(cube, gt, th)

    @pytest.mark.parametrize("th", [(-0.1, 0.5), (0.1, 1.2), (0.1, -0.1)])
    def test_threshold_validation(self, th):
        with pytest.raises(ValidationError):
            SelectionThresholds(*th)
