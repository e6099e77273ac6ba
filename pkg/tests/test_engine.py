import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from engine import (
    Dataset,
    ScoreRecord,
    TvorModel,
    debias_iterative,
    fit_and_rank,
    fit_arrays,
    fit_model,
    rank,
    score,
)
from errors import ConflictError, NoDataError, SingularFitError, ValidationError
from histogram import Histogram
from tests.conftest import histogram_with


def textbook_fit(sizes, variations, mode):
    """Least squares through numpy's solver, independent of the normal equations."""
    N = np.asarray(sizes, dtype=np.float64)
    V = np.asarray(variations, dtype=np.float64)
    if mode == 'raw_ols':
        design, target = np.column_stack([N, np.sqrt(N)]), V
    else:
        design, target = np.column_stack([np.sqrt(N), np.ones_like(N)]), V / np.sqrt(N)
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    return coef


class TestDataset:
    def test_duplicate_labels(self):
        with pytest.raises(ConflictError):
            Dataset((Histogram('a', 0, [200]), Histogram('a', 0, [300])))

    def test_members_must_meet_the_filter(self):
        with pytest.raises(ValidationError):
            Dataset((Histogram('a', 0, [5]),), min_size_filter=100)

    def test_from_histograms_filters_small_lists(self):
        ds = Dataset.from_histograms([Histogram('a', 0, [99]), Histogram('b', 0, [100])], 100)
        assert ds.labels == ['b']
        assert ds.dropped_below_min_size == 1
        assert ds.dropped_labels == ('a',)

    def test_filter_can_be_lowered_to_one(self):
        ds = Dataset.from_histograms([Histogram('a', 0, [1]), Histogram('b', 0, [0])], 1)
        assert ds.labels == ['a']


class TestFit:
    @pytest.mark.parametrize('mode', ['raw_ols', 'normalized_ols'])
    def test_noiseless_recovery(self, mode):
        sizes = np.rint(np.linspace(100, 10000, 100))
        variations = 0.3 * sizes + 1.7 * np.sqrt(sizes)
        a, b = fit_arrays(sizes, variations, mode)
        assert abs(a - 0.3) < 1e-9
        assert abs(b - 1.7) < 1e-9

    @pytest.mark.parametrize('mode', ['raw_ols', 'normalized_ols'])
    def test_noisy_fit_matches_textbook_solver(self, mode):
        rng = np.random.default_rng(7)
        sizes = rng.integers(100, 10001, size=500).astype(np.float64)
        variations = 0.3 * sizes + 1.7 * np.sqrt(sizes) + rng.uniform(-5, 5, size=500)
        a, b = fit_arrays(sizes, variations, mode)
        expected_a, expected_b = textbook_fit(sizes, variations, mode)
        assert a == pytest.approx(expected_a, rel=1e-7)
        assert b == pytest.approx(expected_b, rel=1e-7)
        # the noise is small, so the estimate stays near the generating values
        assert abs(a - 0.3) < 0.01
        assert abs(b - 1.7) < 0.5

    def test_fit_model_on_histograms(self):
        pairs = [(100, 40), (400, 130), (900, 270), (1600, 500), (2500, 760)]
        ds = Dataset(tuple(histogram_with(f"h{i}", n, v) for i, (n, v) in enumerate(pairs)), 1)
        model = fit_model(ds, 'raw_ols')
        expected_a, expected_b = textbook_fit(*zip(*pairs), 'raw_ols')
        assert model.a == pytest.approx(expected_a, rel=1e-7)
        assert model.b == pytest.approx(expected_b, rel=1e-7)
        assert model.n_fitted == 5
        assert model.fit_mode == 'raw_ols'

    def test_refit_is_bit_reproducible(self, planted_dataset):
        assert fit_model(planted_dataset) == fit_model(planted_dataset)
        shuffled = Dataset(tuple(reversed(planted_dataset.histograms)), planted_dataset.min_size_filter)
        first, second = fit_model(planted_dataset), fit_model(shuffled)
        assert (first.a, first.b) == (second.a, second.b)

    def test_single_histogram_is_singular(self):
        with pytest.raises(SingularFitError):
            fit_model(Dataset((histogram_with('a', 100, 20),), 1))

    @pytest.mark.parametrize('mode', ['raw_ols', 'normalized_ols'])
    def test_equal_sizes_are_singular(self, mode):
        ds = Dataset((histogram_with('a', 400, 20), histogram_with('b', 400, 60), histogram_with('c', 400, 100)), 1)
        with pytest.raises(SingularFitError):
            fit_model(ds, mode)

    def test_unknown_mode(self, planted_dataset):
        with pytest.raises(ValidationError):
            fit_model(planted_dataset, 'weighted')


class TestScore:
    def test_arithmetic_identity(self):
        record = score(TvorModel(0.0, 0.0, 'raw_ols', 2), histogram_with('h', 100, 50))
        assert record.d_signed == 5.0
        assert record.d_abs == 5.0
        assert record.expected == 0.0

    def test_on_model_point(self):
        model = TvorModel(0.25, 1.0, 'raw_ols', 2)
        # 0.25 * 400 + 1.0 * 20 = 120
        assert score(model, histogram_with('h', 400, 120)).d_signed == 0.0

    def test_empty_histogram(self):
        with pytest.raises(NoDataError):
            score(TvorModel(0.1, 0.1, 'raw_ols', 2), Histogram('empty', 0, [0, 0]))

    @given(st.lists(st.integers(0, 1000), min_size=1, max_size=50).filter(lambda c: sum(c) > 0),
           st.integers(-500, 500))
    @settings(max_examples=100, deadline=None)
    def test_relabeling_bins_keeps_the_score(self, counts, offset):
        model = TvorModel(0.4, 1.3, 'raw_ols', 2)
        h = Histogram('h', 1900, counts)
        assert score(model, h.shifted(offset)) == score(model, h)
        assert score(model, h).d_abs == abs(score(model, h).d_signed)


class TestRank:
    def test_planted_histogram_ranks_first(self, planted_dataset):
        for mode in ('raw_ols', 'normalized_ols'):
            _, scores = fit_and_rank(planted_dataset, mode)
            assert scores[0].label == 'planted'

    def test_ranks_are_a_permutation(self, planted_dataset):
        _, scores = fit_and_rank(planted_dataset)
        assert [s.rank for s in scores] == list(range(1, len(planted_dataset) + 1))
        assert sorted(s.label for s in scores) == sorted(planted_dataset.labels)

    def test_input_order_does_not_matter(self, planted_dataset):
        model = fit_model(planted_dataset)
        shuffled = Dataset(tuple(reversed(planted_dataset.histograms)), planted_dataset.min_size_filter)
        assert rank(planted_dataset, model) == rank(shuffled, model)

    def test_ties_break_on_size_then_label(self):
        model = TvorModel(0.0, 0.0, 'raw_ols', 2)
        # d = V / sqrt(N) = 5 for all three
        ds = Dataset((histogram_with('b', 100, 50), histogram_with('a', 100, 50), histogram_with('c', 400, 100)), 1)
        assert [s.label for s in rank(ds, model)] == ['c', 'a', 'b']


class TestDebias:
    def test_no_op_after_normalized_fit(self, planted_dataset):
        _, scores = fit_and_rank(planted_dataset, 'normalized_ols')
        result = debias_iterative(scores)
        a1, b1 = result.passes[0]
        assert abs(a1) < 1e-9
        assert abs(b1) < 1e-9

    def test_signed_scores_are_orthogonal_after_normalized_fit(self, planted_dataset):
        _, scores = fit_and_rank(planted_dataset, 'normalized_ols')
        d = [s.d_signed for s in scores]
        weighted = [s.d_signed * math.sqrt(s.N) for s in scores]
        assert abs(math.fsum(d)) <= 1e-8 * math.fsum(abs(x) for x in d)
        assert abs(math.fsum(weighted)) <= 1e-8 * math.fsum(abs(x) for x in weighted)

    def test_second_pass_is_negligible_after_raw_fit(self, planted_dataset):
        _, scores = fit_and_rank(planted_dataset, 'raw_ols')
        first = debias_iterative(scores, max_iter=1)
        second = debias_iterative(first.adjusted_scores, max_iter=1)
        assert abs(second.a1) < 1e-9
        assert abs(second.b1) < 1e-9

    def test_top_label_survives_debias(self, planted_dataset):
        _, scores = fit_and_rank(planted_dataset, 'raw_ols')
        result = debias_iterative(scores)
        assert result.adjusted_scores[0].label == scores[0].label == 'planted'

    def test_zero_scores_need_no_correction(self):
        scores = [ScoreRecord(f"h{n}", n, 0, 0.0, 0.0, 0.0) for n in (100, 400, 900)]
        result = debias_iterative(scores)
        assert (result.a1, result.b1) == (0.0, 0.0)
        assert result.iterations == 1

    def test_degenerate_regression(self):
        scores = [ScoreRecord(f"h{i}", 100, 0, 0.0, float(i), float(i)) for i in range(3)]
        with pytest.raises(SingularFitError):
            debias_iterative(scores)
