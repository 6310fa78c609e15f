"""Tests for the relative-improvement ranking."""

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from albedobench.errors import RankingError
from albedobench.metrics import MetricVector
from albedobench.ranking import (
    DEFAULT_RANKING_METRICS,
    Leaderboard,
    overall_relative_improvement,
    relative_improvement_pair,
    scatter_svg,
)


def vec(name, **means):
    return MetricVector(algorithm=name, means=means, counts={})


def full_vec(name, rng):
    return vec(name, **{m: float(rng.uniform(0.1, 30.0)) for m in DEFAULT_RANKING_METRICS})


class TestPairwise:
    def test_equal_values_give_zero(self):
        assert relative_improvement_pair(0.7, 0.7) == 0.0

    def test_hand_evaluated_case(self):
        # 25.5 vs 23.1: the higher-error side loses about 0.198
        r = relative_improvement_pair(25.5, 23.1)
        assert r == pytest.approx(-0.198, abs=5e-4)
        assert r == pytest.approx((23.1 - 25.5) * (1 / 25.5 + 1 / 23.1))

    def test_antisymmetry_exact(self, rng):
        for _ in range(1000):
            a, b = rng.uniform(0.01, 100.0, 2)
            assert relative_improvement_pair(a, b) == -relative_improvement_pair(b, a)

    def test_zero_only_at_equality(self, rng):
        for _ in range(100):
            a, b = rng.uniform(0.01, 100.0, 2)
            if a != b:
                assert relative_improvement_pair(a, b) != 0.0

    def test_sign_favors_lower_error(self):
        assert relative_improvement_pair(1.0, 2.0) > 0  # i has lower error
        assert relative_improvement_pair(2.0, 1.0) < 0

    def test_non_positive_values_rejected_with_names(self):
        with pytest.raises(RankingError) as exc:
            relative_improvement_pair(0.0, 1.0, algorithm="algo_x", metric="whdr")
        assert "algo_x" in str(exc.value) and "whdr" in str(exc.value)
        with pytest.raises(RankingError):
            relative_improvement_pair(1.0, -2.0)
        with pytest.raises(RankingError):
            relative_improvement_pair(None, 1.0)


class TestOverall:
    def test_identical_algorithms_score_zero(self):
        a = vec("a", whdr=0.3, intensity_si_mse=0.01, chroma_error=4.0, texture_error=0.2)
        b = vec("b", whdr=0.3, intensity_si_mse=0.01, chroma_error=4.0, texture_error=0.2)
        scores = overall_relative_improvement([a, b])
        assert scores == {"a": 0.0, "b": 0.0}

    def test_two_algorithm_hand_case(self):
        x = vec("x", whdr=1.0)
        y = vec("y", whdr=2.0)
        scores = overall_relative_improvement([x, y], metrics=("whdr",))
        assert scores["x"] == pytest.approx(150.0)
        assert scores["y"] == pytest.approx(-150.0)

    def test_three_algorithm_normalization(self):
        x, y, z = vec("x", whdr=1.0), vec("y", whdr=2.0), vec("z", whdr=4.0)
        scores = overall_relative_improvement([x, y, z], metrics=("whdr",))
        # P(x) = mean of R(1,2)=1.5 and R(1,4)=3.75, in percent
        assert scores["x"] == pytest.approx(262.5)

    def test_metric_mean_uses_all_columns(self):
        x = vec("x", whdr=1.0, chroma_error=2.0)
        y = vec("y", whdr=2.0, chroma_error=1.0)
        scores = overall_relative_improvement([x, y], metrics=("whdr", "chroma_error"))
        # the two columns cancel exactly by symmetry
        assert scores["x"] == pytest.approx(0.0, abs=1e-12)
        assert scores["y"] == pytest.approx(0.0, abs=1e-12)

    def test_common_metric_rescale_is_invariant(self, rng):
        for _ in range(50):
            vectors = [full_vec("a%d" % i, rng) for i in range(4)]
            base = overall_relative_improvement(vectors)
            metric = DEFAULT_RANKING_METRICS[int(rng.integers(len(DEFAULT_RANKING_METRICS)))]
            c = float(rng.uniform(0.01, 100.0))
            scaled = [
                vec(v.algorithm, **{m: v.means[m] * (c if m == metric else 1.0) for m in v.means})
                for v in vectors
            ]
            rescored = overall_relative_improvement(scaled)
            for name in base:
                assert rescored[name] == pytest.approx(base[name], rel=1e-10, abs=1e-10)

    def test_cloning_a_third_algorithm_keeps_pairwise_terms(self, rng):
        a, b, c = (full_vec(n, rng) for n in "abc")
        before = {
            m: relative_improvement_pair(a.means[m], b.means[m]) for m in DEFAULT_RANKING_METRICS
        }
        clone = vec("c2", **dict(c.means))
        overall_relative_improvement([a, b, c, clone])  # must not raise
        after = {
            m: relative_improvement_pair(a.means[m], b.means[m]) for m in DEFAULT_RANKING_METRICS
        }
        assert before == after

    def test_errors(self, rng):
        a = full_vec("a", rng)
        with pytest.raises(RankingError):
            overall_relative_improvement([a])
        b = full_vec("b", rng)
        b.means["texture_error"] = None
        with pytest.raises(RankingError) as exc:
            overall_relative_improvement([a, b])
        assert "texture_error" in str(exc.value) and "b" in str(exc.value)
        with pytest.raises(RankingError):
            overall_relative_improvement([a, vec("a", whdr=1.0)], metrics=("whdr",))
        with pytest.raises(RankingError):
            overall_relative_improvement([a, full_vec("c", rng)], metrics=())


class TestLeaderboard:
    def test_build_and_order(self):
        x = vec("better", whdr=1.0)
        y = vec("worse", whdr=2.0)
        board = Leaderboard.build([y, x], metrics=("whdr",))
        assert [v.algorithm for v in board.ranked()] == ["better", "worse"]
        text = board.render_text()
        lines = text.splitlines()
        assert lines[0].startswith("rank")
        assert lines[2].startswith("1") and "better" in lines[2] and "+150.0" in lines[2]
        assert lines[3].startswith("2") and "worse" in lines[3] and "-150.0" in lines[3]

    def test_exact_ties_rank_by_name(self):
        a = vec("zeta", whdr=1.0)
        b = vec("alpha", whdr=1.0)
        board = Leaderboard.build([a, b], metrics=("whdr",))
        assert [v.algorithm for v in board.ranked()] == ["alpha", "zeta"]

    def test_to_dict_round_trip_fields(self):
        x = vec("x", whdr=1.0)
        y = vec("y", whdr=3.0)
        d = Leaderboard.build([x, y], metrics=("whdr",)).to_dict()
        assert d["metrics"] == ["whdr"]
        assert d["ranking"] == ["x", "y"]
        assert set(d["scores"]) == {"x", "y"}
        assert d["vectors"][0]["algorithm"] == "x"


class TestScatterSvg:
    def make_vectors(self):
        return [
            vec("alg_a", whdr=0.2, intensity_si_mse=0.010),
            vec("alg_b", whdr=0.3, intensity_si_mse=0.002),
            vec("alg_c", whdr=0.25, intensity_si_mse=0.03),
        ]

    def test_well_formed_and_labeled(self):
        svg = scatter_svg(self.make_vectors(), "whdr", "intensity_si_mse")
        root = ET.fromstring(svg)
        circles = [e for e in root.iter() if e.tag.endswith("circle")]
        assert len(circles) == 3
        texts = [e.text for e in root.iter() if e.tag.endswith("text")]
        for name in ("alg_a", "alg_b", "alg_c", "whdr", "intensity_si_mse"):
            assert name in texts

    def test_deterministic(self):
        a = scatter_svg(self.make_vectors(), "whdr", "intensity_si_mse")
        b = scatter_svg(list(reversed(self.make_vectors())), "whdr", "intensity_si_mse")
        assert a == b

    def test_missing_metric_raises(self):
        with pytest.raises(RankingError):
            scatter_svg(self.make_vectors(), "whdr", "shading_si_mse")

    def test_single_point_does_not_collapse(self):
        svg = scatter_svg([vec("only", whdr=0.5, intensity_si_mse=0.5)], "whdr", "intensity_si_mse")
        assert "NaN" not in svg and "nan" not in svg
