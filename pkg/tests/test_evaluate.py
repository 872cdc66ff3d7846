"""Ranking metrics: oracle equivalence, hand examples, and partition logic."""
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tkgalign.errors import ConfigError
from tkgalign.evaluate import (
    RankingReport,
    average_reports,
    compute_metrics,
    csls_adjust,
    partition_test_pairs,
    rank_alignment,
    similarity_matrix,
    time_sensitivity,
)
from tkgalign.tkg import (
    UNKNOWN_TIME_ID,
    DirectedLink,
    NeighborhoodIndex,
    build_neighborhoods,
)


def naive_l1_sim(src, tgt):
    out = np.empty((len(src), len(tgt)))
    for i, a in enumerate(src):
        for j, b in enumerate(tgt):
            out[i, j] = -float(np.abs(a - b).sum())
    return out


def naive_csls(sim, k):
    rows, cols = sim.shape
    out = np.empty_like(sim)
    for i in range(rows):
        r_src = float(np.mean(sorted(sim[i])[-k:]))
        for j in range(cols):
            r_tgt = float(np.mean(sorted(sim[:, j])[-k:]))
            out[i, j] = 2.0 * sim[i, j] - r_src - r_tgt
    return out


class TestSimilarityMatrix:
    def test_matches_naive_loop_200x200(self, rng):
        src = rng.normal(size=(200, 24))
        tgt = rng.normal(size=(200, 24))
        sim = similarity_matrix(src, tgt, block=37)
        assert np.allclose(sim, naive_l1_sim(src, tgt), atol=1e-10)

    def test_blocking_is_invisible(self, rng):
        src = rng.normal(size=(13, 5))
        tgt = rng.normal(size=(9, 5))
        full = similarity_matrix(src, tgt, block=1024)
        tiny = similarity_matrix(src, tgt, block=2)
        assert np.array_equal(full, tiny)

    def test_identical_rows_score_zero(self, rng):
        reps = rng.normal(size=(4, 6))
        sim = similarity_matrix(reps, reps)
        assert np.allclose(np.diag(sim), 0.0)
        assert np.all(sim <= 1e-12)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="incompatible"):
            similarity_matrix(np.zeros((3, 4)), np.zeros((3, 5)))

    def test_unknown_measure_rejected(self):
        with pytest.raises(ConfigError, match="measure"):
            similarity_matrix(np.zeros((2, 2)), np.zeros((2, 2)), measure="dot")

    def test_cosine_hand_values(self):
        src = np.array([[1.0, 0.0], [0.0, 2.0]])
        tgt = np.array([[3.0, 0.0], [-1.0, 0.0]])
        sim = similarity_matrix(src, tgt, measure="cosine")
        assert np.allclose(sim, [[1.0, -1.0], [0.0, 0.0]], atol=1e-12)

    def test_cosine_scale_invariant(self, rng):
        src = rng.normal(size=(5, 7))
        tgt = rng.normal(size=(6, 7))
        base = similarity_matrix(src, tgt, measure="cosine")
        scaled = similarity_matrix(src * 100.0, tgt * 0.01, measure="cosine")
        assert np.allclose(base, scaled, atol=1e-10)


class TestCsls:
    def test_constant_matrix_flattens_to_zero(self):
        sim = np.full((4, 4), 2.5)
        assert np.allclose(csls_adjust(sim, k_csls=2), 0.0)

    def test_single_cell(self):
        assert np.allclose(csls_adjust(np.array([[3.0]]), k_csls=1), 0.0)

    def test_matches_naive_loop(self, rng):
        sim = rng.normal(size=(5, 5))
        assert np.allclose(csls_adjust(sim, k_csls=2), naive_csls(sim, 2), atol=1e-12)

    def test_rectangular_matches_naive(self, rng):
        sim = rng.normal(size=(6, 4))
        assert np.allclose(csls_adjust(sim, k_csls=3), naive_csls(sim, 3), atol=1e-12)

    def test_hub_column_is_penalized(self):
        # column 0 is everyone's best match; csls should knock it down
        # relative to a column that only row 0 likes.
        sim = np.array([
            [0.9, 0.8, 0.1],
            [0.9, 0.1, 0.2],
            [0.9, 0.2, 0.1],
        ])
        adj = csls_adjust(sim, k_csls=2)
        raw_margin = sim[0, 0] - sim[0, 1]
        adj_margin = adj[0, 0] - adj[0, 1]
        assert adj_margin < raw_margin

    @pytest.mark.parametrize("k", [0, -1, 6])
    def test_neighborhood_out_of_range(self, k):
        with pytest.raises(ConfigError, match="out of range"):
            csls_adjust(np.zeros((5, 5)), k_csls=k)

    @given(st.integers(min_value=0, max_value=2 ** 31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_row_constant_shift_cancels(self, seed):
        # adding a constant to the whole matrix never changes csls differences
        rng = np.random.default_rng(seed)
        sim = rng.normal(size=(4, 6))
        a = csls_adjust(sim, k_csls=2)
        b = csls_adjust(sim + 13.5, k_csls=2)
        assert np.allclose(a - a[0, 0], b - b[0, 0], atol=1e-9)


class TestComputeMetrics:
    def test_perfect_identity(self):
        sim = np.eye(5)
        rep = compute_metrics(sim, np.arange(5))
        assert rep.mrr == 1.0 and rep.hits1 == 1.0 and rep.hits10 == 1.0
        assert rep.ranks == [1, 1, 1, 1, 1]

    def test_hand_ranks_one_and_four(self):
        sim = np.array([
            [5.0, 1.0, 2.0, 3.0],   # gold col 0 -> rank 1
            [9.0, 8.0, 7.0, 0.0],   # gold col 3 -> rank 4
        ])
        rep = compute_metrics(sim, np.array([0, 3]))
        assert rep.ranks == [1, 4]
        assert rep.mrr == pytest.approx(0.625)
        assert rep.hits1 == pytest.approx(0.5)
        assert rep.hits10 == pytest.approx(1.0)

    def test_ties_count_against_the_gold(self):
        # a duplicate of the gold column must push its rank to 2
        sim = np.array([[1.0, 1.0, 0.0]])
        rep = compute_metrics(sim, np.array([0]))
        assert rep.ranks == [2]
        assert rep.hits1 == 0.0

    def test_all_equal_is_worst_case(self):
        sim = np.zeros((3, 12))
        rep = compute_metrics(sim, np.array([0, 5, 11]))
        assert rep.ranks == [12, 12, 12]
        assert rep.hits10 == 0.0

    def test_monotone_transform_preserves_ranks(self, rng):
        sim = rng.normal(size=(10, 30))
        gold = rng.integers(0, 30, size=10)
        base = compute_metrics(sim, gold)
        for f in (lambda s: 2.0 * s + 7.0, np.tanh, lambda s: s ** 3):
            assert compute_metrics(f(sim), gold).ranks == base.ranks

    def test_gold_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            compute_metrics(np.zeros((2, 3)), np.array([0, 3]))

    def test_label_count_mismatch(self):
        with pytest.raises(ValueError, match="gold labels"):
            compute_metrics(np.zeros((2, 3)), np.array([0]))

    @given(st.integers(min_value=0, max_value=2 ** 31 - 1))
    @settings(max_examples=50, deadline=None)
    def test_metric_bounds(self, seed):
        rng = np.random.default_rng(seed)
        rows = int(rng.integers(1, 8))
        cols = int(rng.integers(1, 40))
        sim = rng.normal(size=(rows, cols))
        gold = rng.integers(0, cols, size=rows)
        rep = compute_metrics(sim, gold)
        assert all(1 <= r <= cols for r in rep.ranks)
        assert 0.0 < rep.mrr <= 1.0
        assert 0.0 <= rep.hits1 <= rep.hits10 <= 1.0
        assert rep.mrr >= rep.hits1

    def test_csv_rows_layout(self):
        rep = compute_metrics(np.eye(2), np.arange(2))
        rows = rep.csv_rows()
        assert rows[0] == "metric,value,partition,metric_space,direction,seed,seconds"
        assert rows[1].startswith("mrr,1.000000,all,l1,g1->g2,")
        assert len(rows) == 4
        # unset seed/seconds serialize as empty cells, not "None"
        assert rows[1].endswith(",,")

    def test_json_round_trip(self):
        rep = RankingReport(mrr=0.5, hits1=0.25, hits10=1.0, ranks=[1, 4], seed=3)
        loaded = json.loads(rep.to_json())
        assert loaded["ranks"] == [1, 4]
        assert loaded["seed"] == 3
        assert loaded["partition"] == "all"


class TestRankAlignment:
    def make_reps(self, rng, n=6, dim=8, noise=0.0):
        base = rng.normal(size=(n // 2, dim))
        twin = base + noise * rng.normal(size=base.shape)
        return np.concatenate([base, twin], axis=0)

    def test_perfect_twins_rank_first(self, rng):
        reps = self.make_reps(rng, noise=0.0)
        pairs = np.array([[0, 3], [1, 4], [2, 5]])
        rep = rank_alignment(reps, pairs, metric_space="l1")
        assert rep.mrr == 1.0
        assert rep.num_pairs == 3

    def test_direction_flip_swaps_pools(self, rng):
        reps = self.make_reps(rng, noise=0.3)
        pairs = np.array([[0, 3], [1, 4], [2, 5]])
        fwd = rank_alignment(reps, pairs, metric_space="l1", direction="g1->g2")
        rev = rank_alignment(reps, pairs, metric_space="l1", direction="g2->g1")
        sim_rev = similarity_matrix(reps[pairs[:, 1]], reps[pairs[:, 0]])
        assert rev.ranks == compute_metrics(sim_rev, np.arange(3)).ranks
        assert fwd.direction == "g1->g2" and rev.direction == "g2->g1"

    def test_csls_neighborhood_clamped_for_small_splits(self, rng):
        reps = self.make_reps(rng, noise=0.1)
        pairs = np.array([[0, 3], [1, 4], [2, 5]])
        rep = rank_alignment(reps, pairs, metric_space="csls", k_csls=10)
        assert rep.metric_space == "csls"
        assert all(1 <= r <= 3 for r in rep.ranks)

    def test_csls_matches_manual_pipeline(self, rng):
        reps = rng.normal(size=(8, 5))
        pairs = np.array([[0, 4], [1, 5], [2, 6], [3, 7]])
        rep = rank_alignment(reps, pairs, metric_space="csls", k_csls=2)
        sim = csls_adjust(similarity_matrix(reps[:4], reps[4:]), k_csls=2)
        assert rep.ranks == compute_metrics(sim, np.arange(4)).ranks

    def test_bad_pair_shape(self, rng):
        with pytest.raises(ValueError, match=r"\(n, 2\)"):
            rank_alignment(rng.normal(size=(4, 3)), np.array([0, 1]))

    def test_unknown_metric_space(self, rng):
        pairs = np.array([[0, 1]])
        with pytest.raises(ConfigError, match="metric space"):
            rank_alignment(rng.normal(size=(2, 3)), pairs, metric_space="l2")


class TestAverageReports:
    def test_means_across_runs(self):
        a = RankingReport(mrr=0.5, hits1=0.4, hits10=0.8, ranks=[2])
        b = RankingReport(mrr=0.7, hits1=0.6, hits10=1.0, ranks=[1])
        avg = average_reports([a, b])
        assert avg == {"mrr": 0.6, "hits1": 0.5, "hits10": 0.9, "runs": 2}

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="no reports"):
            average_reports([])


class TestTimeSensitivity:
    def index_for(self, links, n=6, self_relation=None):
        return build_neighborhoods(links, n, self_relation=self_relation)

    def test_all_unknown_times(self):
        links = [DirectedLink(1, 0, 0, UNKNOWN_TIME_ID) for _ in range(3)]
        assert time_sensitivity(0, self.index_for(links)) == 0.0

    def test_all_real_times(self):
        links = [DirectedLink(1, 0, 0, t) for t in (2, 3, 4)]
        assert time_sensitivity(0, self.index_for(links)) == 1.0

    def test_three_quarters(self):
        times = (UNKNOWN_TIME_ID, 2, 3, 4)
        links = [DirectedLink(1, 0, 0, t) for t in times]
        assert time_sensitivity(0, self.index_for(links)) == pytest.approx(0.75)

    def test_no_links_is_zero(self):
        assert time_sensitivity(2, self.index_for([])) == 0.0

    def test_self_loops_do_not_dilute(self):
        real = [DirectedLink(1, 0, 0, 2), DirectedLink(2, 1, 0, 3)]
        loop = [DirectedLink(0, 9, 0, UNKNOWN_TIME_ID)]
        idx = self.index_for(real + loop, self_relation=9)
        assert time_sensitivity(0, idx) == 1.0
        # ...but an untagged index has no way to tell the loop apart
        naive = self.index_for(real + loop, self_relation=None)
        assert time_sensitivity(0, naive) == pytest.approx(2.0 / 3.0)

    def test_only_self_loops_counts_as_zero(self):
        loop = [DirectedLink(0, 9, 0, UNKNOWN_TIME_ID)]
        idx = self.index_for(loop, self_relation=9)
        assert time_sensitivity(0, idx) == 0.0


class TestPartition:
    def build_index(self):
        # entities 0,1: fully timed; entity 2: half timed; entity 3: untimed
        links = [
            DirectedLink(1, 0, 0, 2),
            DirectedLink(0, 0, 1, 3),
            DirectedLink(1, 0, 2, 4),
            DirectedLink(0, 0, 2, UNKNOWN_TIME_ID),
            DirectedLink(2, 0, 3, UNKNOWN_TIME_ID),
        ]
        return build_neighborhoods(links, 4)

    def test_both_must_clear_threshold(self):
        idx = self.build_index()
        pairs = np.array([[0, 1], [0, 3], [3, 1], [2, 3]])
        highly, lowly = partition_test_pairs(pairs, idx)
        assert highly.tolist() == [0]
        assert lowly.tolist() == [1, 2, 3]

    def test_exact_threshold_is_highly(self):
        idx = self.build_index()  # entity 2 sits exactly at 0.5
        highly, lowly = partition_test_pairs(np.array([[2, 2], [2, 3]]), idx)
        assert highly.tolist() == [0]
        assert lowly.tolist() == [1]

    def test_custom_threshold(self):
        idx = self.build_index()
        highly, _ = partition_test_pairs(np.array([[2, 2]]), idx, threshold=0.75)
        assert highly.size == 0

    def test_partition_covers_exactly(self, rng):
        idx = self.build_index()
        pairs = rng.integers(0, 4, size=(20, 2))
        highly, lowly = partition_test_pairs(pairs, idx)
        merged = sorted(highly.tolist() + lowly.tolist())
        assert merged == list(range(20))

    def test_empty_pairs(self):
        highly, lowly = partition_test_pairs(np.empty((0, 2), dtype=np.int64), self.build_index())
        assert highly.size == 0 and lowly.size == 0
