import math
import random

import numpy as np
import pytest
from scipy.stats import rankdata, wilcoxon as scipy_wilcoxon

from negadapt.errors import DegenerateInput, InvalidPValue, LengthMismatch
from negadapt.evaluate import RunMatrix
from negadapt.stats import (
    DEFAULT_ALPHA,
    average_ranks,
    cd_data,
    holm_correct,
    save_cd_csv,
    save_cd_edges_csv,
    save_cd_json,
    wilcoxon_signed_rank,
)


def brute_force_p(xs, ys):
    """Independent oracle: enumerate every sign pattern with numpy."""
    d = np.asarray(xs, float) - np.asarray(ys, float)
    d = d[d != 0]
    n = len(d)
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_min = min(w_plus, float(ranks.sum()) - w_plus)
    masks = np.arange(2 ** n)[:, None]
    bits = (masks >> np.arange(n)) & 1
    sums = bits @ ranks
    count = int((sums <= w_min).sum())
    return min(1.0, 2.0 * count / 2.0 ** n)


def convolve_exact_p(xs, ys):
    """Second independent oracle: polynomial product over doubled ranks."""
    d = np.asarray(xs, float) - np.asarray(ys, float)
    d = d[d != 0]
    n = len(d)
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_min = min(w_plus, float(ranks.sum()) - w_plus)
    poly = np.array([1.0])
    for r in ranks:
        dr = int(round(2 * r))
        term = np.zeros(dr + 1)
        term[0] = term[dr] = 1.0
        poly = np.convolve(poly, term)
    count = int(poly[: int(round(2 * w_min)) + 1].sum())
    return min(1.0, 2.0 * count / 2.0 ** n)


class TestWilcoxon:
    def test_five_positive_differences(self):
        res = wilcoxon_signed_rank([1, 2, 3, 4, 5], [0, 1, 2, 3, 4])
        assert res.statistic_w == 0.0
        assert res.p_value == 0.0625
        assert res.exact is True
        assert res.n_effective == 5

    def test_all_zero_differences(self):
        with pytest.raises(DegenerateInput):
            wilcoxon_signed_rank([1, 2, 3, 4, 5], [1, 2, 3, 4, 5])

    def test_too_few_nonzero(self):
        with pytest.raises(DegenerateInput):
            wilcoxon_signed_rank([1, 2, 3, 4], [0, 2, 3, 4])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            wilcoxon_signed_rank([1, 2, 3], [1, 2])

    def test_exact_matches_brute_force(self):
        rng = random.Random(11)
        for trial in range(60):
            n = rng.randint(5, 12)
            xs = [rng.gauss(0, 1) for _ in range(n)]
            # quantize some trials to force rank ties
            if trial % 3 == 0:
                xs = [round(x, 1) for x in xs]
            ys = [x - rng.gauss(0.3, 1) for x in xs]
            if trial % 3 == 0:
                ys = [round(y, 1) for y in ys]
            if sum(1 for x, y in zip(xs, ys) if x != y) < 5:
                continue
            res = wilcoxon_signed_rank(xs, ys)
            assert res.p_value == brute_force_p(xs, ys), (xs, ys)

    def test_exact_threshold(self):
        xs = list(range(25))
        ys = [x - (1 + 0.01 * x) for x in xs]
        assert wilcoxon_signed_rank(xs, ys).exact is True
        xs = list(range(26))
        ys = [x - (1 + 0.01 * x) for x in xs]
        assert wilcoxon_signed_rank(xs, ys).exact is False

    def test_approx_near_exact_at_boundary(self):
        # typical n=26 instances sit within 0.005 of exact enumeration
        rng = random.Random(23)
        within = []
        for _ in range(10):
            xs = [rng.gauss(0, 1) for _ in range(26)]
            ys = [x - rng.gauss(0.2, 1.0) for x in xs]
            approx = wilcoxon_signed_rank(xs, ys).p_value
            exact = convolve_exact_p(xs, ys)
            within.append(abs(approx - exact))
        assert max(within) < 0.0075
        assert sum(1 for d in within if d < 0.005) >= 8

    def test_approx_worst_case_bound_at_boundary(self):
        # exhaustive check over every reachable W at n=26, no ties:
        # the approximation never strays more than 0.0064 from exact
        n = 26
        poly = np.array([1.0])
        for r in range(1, n + 1):
            term = np.zeros(r + 1)
            term[0] = term[r] = 1.0
            poly = np.convolve(poly, term)
        cdf = np.cumsum(poly) / 2.0 ** n
        mu = n * (n + 1) / 4
        sigma = math.sqrt(n * (n + 1) * (2 * n + 1) / 24)
        worst = 0.0
        for w in range(n * (n + 1) // 4 + 1):
            exact = min(1.0, 2.0 * cdf[w])
            approx = min(1.0, math.erfc((mu - w - 0.5) / (sigma * math.sqrt(2))))
            worst = max(worst, abs(exact - approx))
        assert worst < 0.0064

    def test_approx_matches_scipy(self):
        rng = np.random.default_rng(4)
        xs = rng.normal(size=40)
        ys = xs - rng.normal(0.3, 1.0, size=40)
        mine = wilcoxon_signed_rank(xs, ys).p_value
        ref = scipy_wilcoxon(xs, ys, correction=True, mode="approx").pvalue
        assert mine == pytest.approx(ref, abs=1e-12)

    def test_p_value_in_unit_interval(self):
        rng = random.Random(5)
        for _ in range(40):
            n = rng.randint(5, 40)
            xs = [rng.gauss(0, 1) for _ in range(n)]
            ys = [rng.gauss(0, 1) for _ in range(n)]
            res = wilcoxon_signed_rank(xs, ys)
            assert 0.0 < res.p_value <= 1.0


class TestHolm:
    def test_step_down_example(self):
        assert holm_correct((0.01, 0.04, 0.03)) == (0.03, 0.06, 0.06)

    def test_single_identity(self):
        assert holm_correct((0.2,)) == (0.2,)

    def test_capped_at_one(self):
        assert holm_correct((0.5, 0.5)) == (1.0, 1.0)

    def test_dominance_and_monotonicity(self):
        rng = random.Random(7)
        for _ in range(30):
            ps = [rng.random() * 0.999 + 0.001 for _ in range(rng.randint(1, 12))]
            adj = holm_correct(ps)
            assert all(a >= p for a, p in zip(adj, ps))
            order = sorted(range(len(ps)), key=lambda i: ps[i])
            seq = [adj[i] for i in order]
            assert seq == sorted(seq)

    def test_invalid_p(self):
        with pytest.raises(InvalidPValue):
            holm_correct((0.5, 0.0))
        with pytest.raises(InvalidPValue):
            holm_correct((1.2,))
        with pytest.raises(InvalidPValue):
            holm_correct(())


def matrix_from_rows(rows, tags=None):
    tags = tuple(tags or (f"m{i}" for i in range(len(rows))))
    r = len(rows[0])
    return RunMatrix(
        method_tags=tags,
        run_count=r,
        scores=tuple(tuple(row) for row in rows),
        train_size=100,
        seeds=tuple(range(r)),
    )


class TestAverageRanks:
    def test_dominance(self):
        m = matrix_from_rows([(0.9, 0.9, 0.9), (0.1, 0.1, 0.1)], tags=("a", "b"))
        assert average_ranks(m) == (("a", 1.0), ("b", 2.0))

    def test_full_tie(self):
        m = matrix_from_rows([(0.5, 0.5), (0.5, 0.5)], tags=("a", "b"))
        assert average_ranks(m) == (("a", 1.5), ("b", 1.5))

    def test_hand_example(self):
        m = matrix_from_rows([(0.9, 0.7), (0.8, 0.9), (0.7, 0.8)], tags=("a", "b", "c"))
        assert average_ranks(m) == (("a", 2.0), ("b", 1.5), ("c", 2.5))

    def test_rank_conservation(self):
        rng = random.Random(13)
        for _ in range(20):
            m_methods = rng.randint(2, 6)
            runs = rng.randint(2, 8)
            rows = [
                [rng.choice([0.2, 0.4, 0.6, 0.8]) for _ in range(runs)]
                for _ in range(m_methods)
            ]
            ranked = average_ranks(matrix_from_rows(rows))
            total = sum(rank for _, rank in ranked)
            assert abs(total - m_methods * (m_methods + 1) / 2) < 1e-12

    def test_permutation_equivariance(self):
        rows = [(0.9, 0.7, 0.8), (0.8, 0.9, 0.6), (0.7, 0.8, 0.9)]
        base = dict(average_ranks(matrix_from_rows(rows, tags=("a", "b", "c"))))
        perm = dict(average_ranks(matrix_from_rows(
            [rows[2], rows[0], rows[1]], tags=("c", "a", "b")
        )))
        assert base == perm


class TestCdData:
    def test_identical_columns_single_clique(self):
        rows = [(0.5, 0.6, 0.7)] * 3
        data = cd_data(matrix_from_rows(rows, tags=("a", "b", "c")))
        assert data.cliques == ((0, 1, 2),)
        assert len(data.notes) == 3
        assert data.pairwise == ()

    def test_separated_methods_no_edge(self):
        rng = random.Random(3)
        high = [0.9 + rng.random() * 0.05 for _ in range(40)]
        low = [0.1 + rng.random() * 0.05 for _ in range(40)]
        data = cd_data(matrix_from_rows([high, low], tags=("good", "bad")), alpha=DEFAULT_ALPHA)
        assert data.method_tags == ("good", "bad")
        assert data.edges == ()
        assert data.cliques == ((0,), (1,))
        assert data.adjusted_p[0] < DEFAULT_ALPHA

    def test_tied_pair_groups_against_outlier(self):
        rng = random.Random(9)
        base = [0.8 + rng.random() * 0.01 for _ in range(40)]
        far = [0.1 + rng.random() * 0.01 for _ in range(40)]
        data = cd_data(matrix_from_rows([base, list(base), far], tags=("p", "q", "r")))
        by_tag = lambda c: tuple(data.method_tags[i] for i in c)  # noqa: E731
        cliques = {by_tag(c) for c in data.cliques}
        assert ("p", "q") in cliques
        assert ("r",) in cliques

    def test_methods_sorted_by_rank(self):
        rows = [(0.1, 0.2, 0.3), (0.9, 0.8, 0.7), (0.5, 0.5, 0.5)]
        data = cd_data(matrix_from_rows(rows, tags=("worst", "best", "mid")))
        assert data.method_tags == ("best", "mid", "worst")
        assert list(data.avg_ranks) == sorted(data.avg_ranks)

    def test_single_method_rejected(self):
        with pytest.raises(DegenerateInput):
            cd_data(matrix_from_rows([(0.5, 0.6)], tags=("only",)))

    def test_serialization(self, tmp_path):
        rows = [(0.5, 0.6, 0.7)] * 2
        data = cd_data(matrix_from_rows(rows, tags=("a", "b")))
        save_cd_json(data, tmp_path / "cd.json")
        save_cd_csv(data, tmp_path / "cd.csv")
        save_cd_edges_csv(data, tmp_path / "edges.csv")
        import json

        obj = json.loads((tmp_path / "cd.json").read_text())
        assert obj["format"] == "negadapt-cd/1"
        assert obj["cliques"] == [[0, 1]]
        assert (tmp_path / "cd.csv").read_text().splitlines()[0] == "method,avg_rank"
        assert (tmp_path / "edges.csv").read_text().splitlines()[1] == "a,b"
