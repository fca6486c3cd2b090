import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cdel.clustering import pairwise_distances
from cdel.data import ClusterAssignment, EmbeddingMatrix, FaceEncodingSet
from cdel.errors import DegenerateInputError, SelectionError, UndefinedIndexError
from cdel.validity import (
    SweepResult,
    ValidityScores,
    calinski_harabasz_score,
    comprehensive_indicator,
    davies_bouldin_index,
    elbow_select,
    minmax_normalize,
    select_algorithm,
    select_optimal_threshold,
    silhouette_coefficient,
    sweep_thresholds,
    threshold_grid,
)
from oracles import brute_calinski_harabasz, brute_davies_bouldin, brute_silhouette

TABLE2 = [
    ValidityScores(0.140, 7.858, 1.304, 1562, 0.8),
    ValidityScores(0.106, 9.107, 1.601, 2567, 1.1),
    ValidityScores(0.110, 5.869, 0.852, 2561, 0.7),
]

TABLE3 = [
    ("kmeans", ValidityScores(0.070, 6.651, 1.312, 1562)),
    ("hierarchical", ValidityScores(0.140, 7.858, 1.304, 1562)),
    ("spectral", ValidityScores(-0.013, 2.147, 1.210, 1562)),
]


def setup_case(points, labels):
    x = np.asarray(points, dtype=np.float64)
    ids = tuple(f"p{i}" for i in range(len(x)))
    emb = EmbeddingMatrix(ids, x)
    dm = pairwise_distances(FaceEncodingSet(emb, frozenset()))
    assign = ClusterAssignment(
        {ids[i]: int(labels[i]) for i in range(len(x))}, max(labels) + 1
    )
    return dm, emb, assign


def random_case(rng, n, c):
    x = rng.normal(size=(n, 3))
    labels = rng.integers(0, c, size=n)
    labels[:c] = np.arange(c)  # every cluster non-empty
    return setup_case(x, labels)


class TestSilhouette:
    def test_two_tight_pairs(self):
        dm, _, assign = setup_case(
            [[0, 0], [0, 1], [10, 0], [10, 1]], [0, 0, 1, 1]
        )
        assert silhouette_coefficient(dm, assign) == pytest.approx(0.9002, abs=5e-4)

    def test_duplicated_points_two_locations(self):
        dm, _, assign = setup_case(
            [[0, 0], [0, 0], [5, 5], [5, 5]], [0, 0, 1, 1]
        )
        assert silhouette_coefficient(dm, assign) == 1.0

    def test_single_cluster_is_error(self):
        dm, _, assign = setup_case([[0, 0], [1, 1]], [0, 0])
        with pytest.raises(UndefinedIndexError):
            silhouette_coefficient(dm, assign)

    def test_matches_brute_force(self, rng):
        for _ in range(20):
            dm, _, assign = random_case(rng, int(rng.integers(6, 40)), 3)
            labels = np.array([assign.mapping[sid] for sid in dm.ids])
            assert silhouette_coefficient(dm, assign) == pytest.approx(
                brute_silhouette(dm.d, labels), abs=1e-9
            )


class TestCalinskiHarabasz:
    def test_hand_computed_pairs(self):
        _, emb, assign = setup_case([[0], [2], [10], [12]], [0, 0, 1, 1])
        assert calinski_harabasz_score(emb, assign) == pytest.approx(50.0, abs=1e-12)

    def test_monotone_in_separation(self):
        _, emb1, assign = setup_case([[0], [2], [10], [12]], [0, 0, 1, 1])
        _, emb2, _ = setup_case([[0], [2], [20], [22]], [0, 0, 1, 1])
        assert calinski_harabasz_score(emb2, assign) > calinski_harabasz_score(
            emb1, assign
        )

    def test_c_n_minus_1_duplicate_pair(self, rng):
        x = rng.normal(size=(5, 2))
        x[1] = x[0] + 0.01
        labels = [0, 0, 1, 2, 3]
        _, emb, assign = setup_case(x, labels)
        assert calinski_harabasz_score(emb, assign) == pytest.approx(
            brute_calinski_harabasz(x, np.array(labels)), rel=1e-12
        )

    def test_tight_clusters_give_infinity(self):
        _, emb, assign = setup_case([[0], [0], [5], [5]], [0, 0, 1, 1])
        assert calinski_harabasz_score(emb, assign) == math.inf

    def test_matches_brute_force(self, rng):
        for _ in range(20):
            _, emb, assign = random_case(rng, int(rng.integers(6, 40)), 4)
            labels = np.array([assign.mapping[sid] for sid in emb.ids])
            assert calinski_harabasz_score(emb, assign) == pytest.approx(
                brute_calinski_harabasz(emb.values, labels), rel=1e-9
            )


class TestDaviesBouldin:
    def test_hand_computed_pairs(self):
        _, emb, assign = setup_case([[0], [2], [10], [12]], [0, 0, 1, 1])
        assert davies_bouldin_index(emb, assign) == pytest.approx(0.2, abs=1e-12)

    def test_point_clusters_score_zero(self):
        _, emb, assign = setup_case([[0], [0], [5], [5]], [0, 0, 1, 1])
        assert davies_bouldin_index(emb, assign) == 0.0

    def test_coincident_centroids_give_infinity(self):
        _, emb, assign = setup_case([[0], [2], [0], [2]], [0, 0, 1, 1])
        assert davies_bouldin_index(emb, assign) == math.inf

    def test_matches_brute_force(self, rng):
        for _ in range(20):
            _, emb, assign = random_case(rng, 12, 3)
            labels = np.array([assign.mapping[sid] for sid in emb.ids])
            assert davies_bouldin_index(emb, assign) == pytest.approx(
                brute_davies_bouldin(emb.values, labels), abs=1e-9
            )


class TestMinMaxNormalize:
    def test_table2_sc_column(self):
        out = minmax_normalize([0.140, 0.106, 0.110])
        assert out[0] == pytest.approx(1.0)
        assert out[1] == pytest.approx(0.0)
        assert out[2] == pytest.approx(0.1176, abs=1e-4)

    def test_single_value_degenerate(self):
        assert minmax_normalize([5.0]) == [0.0]

    @given(
        st.lists(st.floats(-100, 100), min_size=2, max_size=20),
        st.floats(0.1, 10),
        st.floats(-50, 50),
    )
    def test_affine_invariance(self, xs, a, b):
        # tiny spreads are wiped out by the shift in floating point
        assume(max(xs) - min(xs) > 1e-3)
        base = minmax_normalize(xs)
        scaled = minmax_normalize([a * x + b for x in xs])
        assert all(abs(u - v) < 1e-6 for u, v in zip(base, scaled))


class TestComprehensiveIndicator:
    def test_table2(self):
        ci = comprehensive_indicator(TABLE2)
        assert ci[0] == pytest.approx(1.011, abs=1e-3)
        assert ci[1] == pytest.approx(0.000, abs=1e-3)
        assert ci[2] == pytest.approx(0.118, abs=1e-3)

    def test_table3(self):
        ci = comprehensive_indicator([vs for _, vs in TABLE3])
        assert ci[0] == pytest.approx(0.331, abs=1e-3)
        assert ci[1] == pytest.approx(1.078, abs=1e-3)
        assert ci[2] == pytest.approx(0.000, abs=1e-3)

    def test_triple_best_scores_two(self):
        cands = [
            ValidityScores(0.9, 100.0, 0.1, 5, 0.5),
            ValidityScores(0.1, 10.0, 2.0, 9, 0.6),
        ]
        assert comprehensive_indicator(cands)[0] == pytest.approx(2.0)

    @given(st.lists(
        st.tuples(st.floats(-1, 1), st.floats(0, 100), st.floats(0, 10)),
        min_size=2, max_size=10,
    ), st.floats(0.5, 5), st.floats(-3, 3))
    def test_ranking_invariant_under_affine_column_transform(self, triples, a, b):
        cands = [ValidityScores(s, h, d, 3, 0.1 * i)
                 for i, (s, h, d) in enumerate(triples)]
        scs = [v.sc for v in cands]
        assume(max(scs) - min(scs) > 1e-3)  # shift-proof spread
        base = comprehensive_indicator(cands)
        # near-ties in CI are legitimately reorderable by rounding noise
        assume(all(abs(x - y) > 1e-6
                   for i, x in enumerate(base) for y in base[:i]))
        warped = [ValidityScores(a * v.sc + b, v.chs, v.dbi, v.c, v.t)
                  for v in cands]
        other = comprehensive_indicator(warped)
        assert np.argsort(base).tolist() == np.argsort(other).tolist()

    def test_bounds(self, rng):
        for _ in range(20):
            cands = [
                ValidityScores(
                    float(rng.uniform(-1, 1)),
                    float(rng.uniform(0, 50)),
                    float(rng.uniform(0, 5)),
                    3, float(i),
                )
                for i in range(int(rng.integers(1, 8)))
            ]
            ci = comprehensive_indicator(cands)
            assert max(ci) <= 2.0 + 1e-12
            assert min(ci) >= -1.0 - 1e-12


class TestElbowSelect:
    def test_knee_by_chord_distance(self):
        pts = [(0, 0), (1, 9), (2, 10), (3, 10.5)]
        assert elbow_select(pts, "maximize") == 1
        # chord-distance oracle over all points
        x0, y0, x1, y1 = 0, 0, 3, 10.5
        norm = math.hypot(x1 - x0, y1 - y0)
        dists = [abs((y1 - y0) * (x - x0) - (x1 - x0) * (y - y0)) / norm
                 for x, y in pts]
        assert max(range(4), key=lambda i: dists[i]) == 1

    def test_linear_curve_falls_back_to_best_endpoint(self):
        pts = [(0, 0), (1, 1), (2, 2)]
        assert elbow_select(pts, "maximize") == 2
        assert elbow_select(pts, "minimize") == 0

    def test_two_points(self):
        assert elbow_select([(0.5, 3), (0.7, 9)], "maximize") == 0.7
        assert elbow_select([(0.5, 3), (0.7, 9)], "minimize") == 0.5

    def test_minimize_knee(self):
        pts = [(0, 10.5), (1, 10), (2, 9), (3, 0)]
        # oriented down, knee where the drop accelerates
        assert elbow_select(pts, "minimize") == 2


class TestThresholdGrid:
    def test_hand_rule(self):
        assert threshold_grid(0.27, 0.93) == pytest.approx(
            [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
        )

    def test_inclusive_endpoints(self):
        assert threshold_grid(0.3, 0.9)[0] == pytest.approx(0.3)
        assert threshold_grid(0.3, 0.9)[-1] == pytest.approx(0.9)

    def test_zero_range_empty(self):
        assert threshold_grid(0.0, 0.0) == []


class TestSweep:
    def make_inputs(self, rng):
        centers = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]])
        rows = np.vstack([
            c + rng.normal(scale=0.03, size=(6, 2)) for c in centers
        ])
        ids = tuple(f"p{i}" for i in range(18))
        emb = EmbeddingMatrix(ids, rows)
        dm = pairwise_distances(FaceEncodingSet(emb, frozenset()))
        return dm, emb

    def test_grid_and_exclusions_cover_everything(self, rng):
        dm, emb = self.make_inputs(rng)
        sweep = sweep_thresholds(dm, emb, "single")
        grid = threshold_grid(*dm.offdiag_range())
        covered = sorted(
            [v.t for v in sweep.candidates] + [t for t, _ in sweep.excluded]
        )
        assert covered == pytest.approx(sorted(grid))

    def test_identical_encodings_degenerate(self):
        emb = EmbeddingMatrix(("a", "b", "c"), np.zeros((3, 2)))
        dm = pairwise_distances(FaceEncodingSet(emb, frozenset()))
        with pytest.raises(DegenerateInputError):
            sweep_thresholds(dm, emb, "single")

    def test_selection_picks_gap_threshold(self, rng):
        dm, emb = self.make_inputs(rng)
        sweep = sweep_thresholds(dm, emb, "single")
        report = select_optimal_threshold(sweep)
        # blobs are 0.03-tight and 2.0-apart: the chosen cut must sit in the
        # gap and recover the 3 constructed blobs
        assert 0.1 <= report.t_op < 2.0
        assert report.c_op == 3


class TestSelection:
    def test_table2_picks_t08(self):
        report = select_optimal_threshold(TABLE2)
        assert report.t_op == 0.8
        assert report.c_op == 1562

    def test_single_candidate(self):
        report = select_optimal_threshold([TABLE2[0]])
        assert report.t_op == 0.8

    def test_equal_ci_smaller_t_wins(self):
        cands = [
            ValidityScores(0.5, 10.0, 1.0, 4, 0.3),
            ValidityScores(0.5, 10.0, 1.0, 4, 0.6),
        ]
        assert select_optimal_threshold(cands).t_op == 0.3

    def test_all_excluded_raises(self):
        sweep = SweepResult((), ((0.1, "degenerate cut"),), 0.05, 0.15)
        with pytest.raises(SelectionError):
            select_optimal_threshold(sweep)

    def test_permutation_invariance(self, rng):
        cands = [
            ValidityScores(float(rng.uniform(-1, 1)), float(rng.uniform(0, 9)),
                           float(rng.uniform(0, 3)), 4, round(0.1 * (i + 1), 1))
            for i in range(6)
        ]
        base = select_optimal_threshold(cands)
        for _ in range(5):
            perm = [cands[i] for i in rng.permutation(6)]
            assert select_optimal_threshold(perm).t_op == base.t_op


class TestSelectAlgorithm:
    def test_table3_picks_hierarchical(self):
        assert select_algorithm(TABLE3) == "hierarchical"

    def test_single_run(self):
        assert select_algorithm([("spectral", TABLE3[2][1])]) == "spectral"

    def test_tie_breaks_by_fixed_order(self):
        vs = ValidityScores(0.5, 5.0, 1.0, 4)
        runs = [("spectral", vs), ("kmeans", vs), ("hierarchical", vs)]
        assert select_algorithm(runs) == "hierarchical"
