import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mimor.fusion import (
    FusionConfig,
    WeightMatrix,
    fuse_blended,
    fuse_blended_clustered,
    fuse_clustered,
    fuse_flat,
    learn_clustered,
    learn_flat,
)

unit = st.floats(0.0, 1.0, allow_nan=False)


class TestFuseFlat:
    def test_equal_weight_mean(self):
        assert fuse_flat([1.0, 1.0], [0.4, 0.6]) == pytest.approx(0.5)

    def test_zero_weights(self):
        assert fuse_flat([0.0, 0.0], [0.3, 0.9]) == 0.0

    def test_hand_computed(self):
        # (0.8*0.5 + 0.2*1.0) / 2
        assert fuse_flat([0.8, 0.2], [0.5, 1.0]) == pytest.approx(0.3, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            fuse_flat([0.5], [0.5, 0.5])

    def test_empty(self):
        with pytest.raises(ValueError):
            fuse_flat([], [])

    def test_rejects_unnormalized_rsv(self):
        with pytest.raises(ValueError, match="normalized"):
            fuse_flat([0.5, 0.5], [0.5, 3.0])


class TestFuseClustered:
    def test_k1_reduces_to_flat_bit_exact(self):
        rng = random.Random(42)
        for _ in range(200):
            n = rng.randint(1, 5)
            w = [rng.random() for _ in range(n)]
            rsv = [rng.random() for _ in range(n)]
            matrix = WeightMatrix.from_lists([[x] for x in w])
            assert fuse_clustered(matrix, (1.0,), rsv) == fuse_flat(w, rsv)

    def test_hand_computed(self):
        # N=1, K=2: (0.6*1*0.5 + 0.2*0*0.5) / (2*1)
        matrix = WeightMatrix.from_lists([[0.6, 0.2]])
        assert fuse_clustered(matrix, (1.0, 0.0), [0.5]) == pytest.approx(0.15, abs=1e-12)

    def test_zero_membership_annihilates(self):
        matrix = WeightMatrix.from_lists([[0.9, 0.9], [0.9, 0.9]])
        assert fuse_clustered(matrix, (0.0, 0.0), [1.0, 1.0]) == 0.0

    def test_dimension_mismatch(self):
        matrix = WeightMatrix.from_lists([[0.5, 0.5]])
        with pytest.raises(ValueError):
            fuse_clustered(matrix, (1.0,), [0.5])
        with pytest.raises(ValueError):
            fuse_clustered(matrix, (1.0, 0.0), [0.5, 0.5])


class TestFuseBlended:
    def test_p_one_equals_private_flat(self):
        rng = random.Random(7)
        for _ in range(200):
            n = rng.randint(1, 5)
            wp = [rng.random() for _ in range(n)]
            wq = [rng.random() for _ in range(n)]
            rsv = [rng.random() for _ in range(n)]
            assert fuse_blended(wp, wq, 1.0, rsv) == fuse_flat(wp, rsv)

    def test_p_zero_equals_public_flat(self):
        rng = random.Random(8)
        for _ in range(200):
            n = rng.randint(1, 5)
            wp = [rng.random() for _ in range(n)]
            wq = [rng.random() for _ in range(n)]
            rsv = [rng.random() for _ in range(n)]
            assert fuse_blended(wp, wq, 0.0, rsv) == fuse_flat(wq, rsv)

    def test_hand_computed(self):
        # blend (0.5, 0.5): (0.5*0.6 + 0.5*0.8) / 2
        assert fuse_blended([1.0, 0.0], [0.0, 1.0], 0.5, [0.6, 0.8]) == pytest.approx(
            0.35, abs=1e-12
        )

    def test_p_out_of_range(self):
        with pytest.raises(ValueError):
            fuse_blended([0.5], [0.5], 1.5, [0.5])
        with pytest.raises(ValueError):
            fuse_blended([0.5], [0.5], -0.1, [0.5])


class TestFuseBlendedClustered:
    def test_reduction_chain_to_flat(self):
        # p=1, K=1, membership (1.0,) reproduces flat fusion on private
        # weights, bit for bit.
        rng = random.Random(9)
        for _ in range(200):
            n = rng.randint(1, 5)
            wp = [rng.random() for _ in range(n)]
            wq = [rng.random() for _ in range(n)]
            rsv = [rng.random() for _ in range(n)]
            mp = WeightMatrix.from_lists([[x] for x in wp])
            mq = WeightMatrix.from_lists([[x] for x in wq])
            assert fuse_blended_clustered(mp, mq, 1.0, (1.0,), rsv) == fuse_flat(wp, rsv)

    def test_dimension_mismatch(self):
        mp = WeightMatrix.from_lists([[0.5, 0.5]])
        mq = WeightMatrix.from_lists([[0.5]])
        with pytest.raises(ValueError):
            fuse_blended_clustered(mp, mq, 0.5, (1.0, 0.0), [0.5])


class TestLearn:
    def test_zero_rsv_no_update(self):
        assert learn_flat([0.3, 0.7], 1, [0.0, 0.0], 0.1) == [0.3, 0.7]

    def test_hand_computed_increment(self):
        out = learn_flat([0.5], 1, [0.5], 0.1)
        assert out[0] == pytest.approx(0.55, abs=1e-12)

    def test_clamp_upper(self):
        assert learn_flat([0.99], 1, [0.5], 0.1) == [1.0]

    def test_clamp_lower(self):
        assert learn_flat([0.01], -1, [0.5], 0.1) == [0.0]

    def test_bad_rf(self):
        with pytest.raises(ValueError):
            learn_flat([0.5], 0, [0.5], 0.1)

    def test_clustered_zero_membership_column_unchanged(self):
        matrix = WeightMatrix.from_lists([[0.5, 0.5], [0.5, 0.5]])
        out = learn_clustered(matrix, (1.0, 0.0), 1, [0.8, 0.6], 0.1)
        assert out.column(1) == (0.5, 0.5)
        assert out.column(0) != (0.5, 0.5)

    def test_clustered_k1_identical_to_flat(self):
        rng = random.Random(10)
        for _ in range(200):
            n = rng.randint(1, 5)
            w = [rng.random() for _ in range(n)]
            rsv = [rng.random() for _ in range(n)]
            rf = rng.choice([1, -1])
            eps = rng.random()
            matrix = WeightMatrix.from_lists([[x] for x in w])
            out = learn_clustered(matrix, (1.0,), rf, rsv, eps)
            assert list(out.column(0)) == learn_flat(w, rf, rsv, eps)

    def test_clustered_hand_computed(self):
        # delta = 0.1 * 0.5 * 1 * 0.8 = 0.04
        matrix = WeightMatrix.from_lists([[0.5]])
        out = learn_clustered(matrix, (0.5,), 1, [0.8], 0.1)
        assert out.rows[0][0] == pytest.approx(0.54, abs=1e-12)

    def test_update_locality(self):
        matrix = WeightMatrix.from_lists([[0.5, 0.5], [0.5, 0.5], [0.5, 0.5]])
        out = learn_clustered(matrix, (0.7, 0.0), 1, [0.9, 0.0, 0.4], 0.05)
        for s in range(3):
            for c in range(2):
                changed = out.rows[s][c] != matrix.rows[s][c]
                assert changed == ((0.7, 0.0)[c] * (0.9, 0.0, 0.4)[s] != 0.0)

    @given(
        st.lists(unit.map(lambda v: round(v, 6)), min_size=1, max_size=5),
        st.floats(0.001, 0.2),
    )
    def test_monotone_credit_assignment(self, rsvs, eps):
        # rsvs rounded to 1e-6 so increments stay above the ulp of the
        # 0.5 starting weight and remain visible after application
        after = learn_flat([0.5] * len(rsvs), 1, rsvs, eps)
        increments = [a - 0.5 for a in after]
        for i in range(len(rsvs)):
            for j in range(len(rsvs)):
                if rsvs[i] > rsvs[j]:
                    assert increments[i] > increments[j]


class TestBoundsAndScaling:
    @given(
        st.integers(1, 5).flatmap(
            lambda n: st.tuples(
                st.lists(unit, min_size=n, max_size=n),
                st.lists(unit, min_size=n, max_size=n),
            )
        )
    )
    def test_flat_output_bounded(self, wr):
        w, rsv = wr
        assert 0.0 <= fuse_flat(w, rsv) <= 1.0

    @given(
        st.integers(1, 4),
        st.integers(1, 4),
        st.randoms(use_true_random=False),
    )
    def test_clustered_output_bounded(self, n, k, rng):
        matrix = WeightMatrix.from_lists([[rng.random() for _ in range(k)] for _ in range(n)])
        memb = [rng.random() for _ in range(k)]
        total = sum(memb) or 1.0
        memb = [v / total for v in memb]
        rsv = [rng.random() for _ in range(n)]
        assert 0.0 <= fuse_clustered(matrix, memb, rsv) <= 1.0

    def test_positive_scaling_preserves_order(self):
        rng = random.Random(13)
        for _ in range(100):
            n, k = rng.randint(1, 4), rng.randint(1, 4)
            rows = [[rng.random() for _ in range(k)] for _ in range(n)]
            memb = [rng.random() for _ in range(k)]
            docs = [[rng.random() for _ in range(n)] for _ in range(12)]
            for c in (0.1, 0.5):
                base = WeightMatrix.from_lists(rows)
                scaled = WeightMatrix.from_lists([[w * c for w in row] for row in rows])
                order_a = sorted(
                    range(12), key=lambda d: (-fuse_clustered(base, memb, docs[d]), d)
                )
                order_b = sorted(
                    range(12), key=lambda d: (-fuse_clustered(scaled, memb, docs[d]), d)
                )
                assert order_a == order_b


class TestConfigAndMatrix:
    def test_config_defaults(self):
        cfg = FusionConfig()
        assert cfg.learning_rate == 0.05
        assert cfg.weight_init == 0.5

    def test_learning_rate_bounds(self):
        with pytest.raises(ValueError):
            FusionConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            FusionConfig(learning_rate=1.5)

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            FusionConfig(mode="neural")

    def test_matrix_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            WeightMatrix.from_lists([[1.5]])

    def test_matrix_rejects_ragged(self):
        with pytest.raises(ValueError):
            WeightMatrix.from_lists([[0.5, 0.5], [0.5]])

    def test_filled(self):
        m = WeightMatrix.filled(3, 2, 0.5)
        assert m.n_engines == 3
        assert m.n_clusters == 2
        assert all(w == 0.5 for row in m.rows for w in row)
