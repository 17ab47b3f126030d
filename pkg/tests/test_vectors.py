import math

import numpy as np
import pytest

from negadapt.errors import DimensionMismatch, NonFiniteInput, ZeroVector
from negadapt.vectors import (
    ContributionVector,
    EmbeddingVector,
    WeightVector,
    apply_weights,
    cosine,
    cosine_decompose,
    triplet_contribution,
    weighted_cosine,
)


def ev(*values, id="v", model_tag="test"):
    return EmbeddingVector(id=id, values=np.array(values, dtype=float), model_tag=model_tag)


class TestEmbeddingVector:
    def test_basic_construction(self):
        v = ev(1.0, 2.0, 2.0)
        assert v.dim == 3
        assert v.norm() == pytest.approx(3.0)

    def test_rejects_zero_vector(self):
        with pytest.raises(ZeroVector):
            ev(0.0, 0.0, 0.0)

    def test_rejects_non_finite(self):
        with pytest.raises(NonFiniteInput):
            ev(1.0, float("nan"))
        with pytest.raises(NonFiniteInput):
            ev(1.0, float("inf"))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            EmbeddingVector(id="e", values=np.array([]))

    def test_values_read_only(self):
        v = ev(1.0, 2.0)
        with pytest.raises(ValueError):
            v.values[0] = 5.0

    def test_float32_storage_promotes_to_double(self):
        v = EmbeddingVector(id="f32", values=np.array([0.1, 0.2], dtype=np.float32))
        assert v.values.dtype == np.float64


class TestWeightVector:
    def test_simplex_enforced(self):
        with pytest.raises(ValueError):
            WeightVector(weights=np.array([0.5, 0.6]), a=1.0)

    def test_positive_enforced(self):
        with pytest.raises(ValueError):
            WeightVector(weights=np.array([1.0, 0.0]), a=1.0)

    def test_a_zero_requires_uniform(self):
        with pytest.raises(ValueError):
            WeightVector(weights=np.array([0.3, 0.7]), a=0.0)
        w = WeightVector.uniform(4)
        assert np.allclose(w.weights, 0.25, atol=1e-15)

    def test_negative_a_rejected(self):
        with pytest.raises(ValueError):
            WeightVector(weights=np.array([0.5, 0.5]), a=-1.0)


class TestCosine:
    def test_self_similarity(self):
        x = ev(1, 2, 2)
        assert cosine(x, x) == 1.0

    def test_orthogonal(self):
        assert cosine(ev(1, 0), ev(0, 1)) == 0.0

    def test_hand_computed(self):
        # dot=32, norms sqrt(14) and sqrt(77)
        got = cosine(ev(1, 2, 3), ev(4, 5, 6))
        assert got == pytest.approx(32 / math.sqrt(14 * 77), abs=1e-12)
        assert got == pytest.approx(0.9746318, abs=1e-7)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cosine(ev(1, 0), ev(1, 0, 0))

    def test_scale_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            x = rng.normal(size=16)
            y = rng.normal(size=16)
            c = rng.uniform(0.1, 100.0)
            a = EmbeddingVector(id="a", values=x)
            b = EmbeddingVector(id="b", values=y)
            ac = EmbeddingVector(id="ac", values=c * x)
            assert abs(cosine(ac, b) - cosine(a, b)) < 1e-12

    def test_exact_symmetry(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            x = EmbeddingVector(id="x", values=rng.normal(size=33))
            y = EmbeddingVector(id="y", values=rng.normal(size=33))
            assert cosine(x, y) == cosine(y, x)

    def test_clamped_to_unit_interval(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            v = rng.normal(size=8)
            x = EmbeddingVector(id="x", values=v)
            y = EmbeddingVector(id="y", values=v * rng.uniform(0.5, 2.0))
            assert -1.0 <= cosine(x, y) <= 1.0


class TestDecompose:
    def test_hand_computed_2d(self):
        c = cosine_decompose(ev(1, 0), ev(1, 1))
        assert c.values == pytest.approx([1 / math.sqrt(2), 0.0], abs=1e-12)

    def test_unit_basis_self_pair(self):
        c = cosine_decompose(ev(1, 0, 0), ev(1, 0, 0))
        assert list(c.values) == [1.0, 0.0, 0.0]

    def test_norms_25(self):
        c = cosine_decompose(ev(3, 4), ev(3, 4))
        assert c.values == pytest.approx([9 / 25, 16 / 25], abs=1e-12)
        assert c.values.sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("dim", [2, 8, 64, 1024, 4096])
    def test_completeness(self, dim):
        rng = np.random.default_rng(dim)
        for _ in range(20):
            x = EmbeddingVector(id="x", values=rng.normal(size=dim))
            y = EmbeddingVector(id="y", values=rng.normal(size=dim))
            assert abs(cosine_decompose(x, y).values.sum() - cosine(x, y)) < 1e-9


class TestTripletContribution:
    def test_orthogonal_negation(self):
        v = triplet_contribution(ev(1, 0), ev(1, 0), ev(0, 1))
        assert list(v.values) == [1.0, 0.0]
        assert v.n_triplets == 1

    def test_identical_inputs_cancel(self):
        t = ev(2, 3, 4)
        v = triplet_contribution(t, t, t)
        assert np.all(v.values == 0.0)

    def test_sign_flip(self):
        v = triplet_contribution(ev(1, 0), ev(0, 1), ev(1, 0))
        assert list(v.values) == [-1.0, 0.0]

    def test_antisymmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            t = EmbeddingVector(id="t", values=rng.normal(size=12))
            p = EmbeddingVector(id="p", values=rng.normal(size=12))
            n = EmbeddingVector(id="n", values=rng.normal(size=12))
            fwd = triplet_contribution(t, p, n).values
            bwd = triplet_contribution(t, n, p).values
            assert np.max(np.abs(fwd + bwd)) < 1e-12

    def test_sum_is_cosine_difference(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            t = EmbeddingVector(id="t", values=rng.normal(size=40))
            p = EmbeddingVector(id="p", values=rng.normal(size=40))
            n = EmbeddingVector(id="n", values=rng.normal(size=40))
            got = triplet_contribution(t, p, n).values.sum()
            assert abs(got - (cosine(t, p) - cosine(t, n))) < 1e-9


class TestWeights:
    def test_uniform_scaling(self):
        out = apply_weights(ev(2, 4), WeightVector(weights=np.array([0.5, 0.5]), a=1.0))
        assert list(out.values) == [1.0, 2.0]

    def test_uniform_a0(self):
        out = apply_weights(ev(1, 1, 1, 1), WeightVector.uniform(4))
        assert list(out.values) == [0.25, 0.25, 0.25, 0.25]

    def test_elementwise_product(self):
        w = WeightVector(weights=np.array([0.9, 0.1]), a=2.0)
        out = apply_weights(ev(1, -1), w)
        assert list(out.values) == [0.9, -0.1]

    def test_metadata_preserved_normalized_cleared(self):
        x = EmbeddingVector(id="t1", values=np.array([3.0, 4.0]),
                            model_tag="m", normalized=True)
        out = apply_weights(x, WeightVector.uniform(2))
        assert out.id == "t1" and out.model_tag == "m"
        assert out.normalized is False

    def test_uniform_weight_identity(self):
        rng = np.random.default_rng(17)
        for dim in (2, 8, 64):
            w = WeightVector.uniform(dim)
            for _ in range(20):
                x = EmbeddingVector(id="x", values=rng.normal(size=dim))
                y = EmbeddingVector(id="y", values=rng.normal(size=dim))
                assert abs(weighted_cosine(x, y, w) - cosine(x, y)) < 1e-9

    def test_dominant_dimension(self):
        eps = 1e-6
        x, y = ev(1, 1), ev(1, -1)
        w = WeightVector(weights=np.array([1 - eps, eps]), a=3.0)
        got = weighted_cosine(x, y, w)
        # direct formula: ((1-eps)^2 - eps^2) / ((1-eps)^2 + eps^2)
        expect = ((1 - eps) ** 2 - eps ** 2) / ((1 - eps) ** 2 + eps ** 2)
        assert got == pytest.approx(expect, abs=1e-12)
        assert got > 1 - 5e-6

    def test_self_similarity_preserved(self):
        x = ev(1, 2, 3)
        w = WeightVector(weights=np.array([0.2, 0.3, 0.5]), a=1.5)
        assert weighted_cosine(x, x, w) == 1.0


def test_contribution_vector_finite_required():
    with pytest.raises(NonFiniteInput):
        ContributionVector(values=np.array([1.0, float("nan")]))
