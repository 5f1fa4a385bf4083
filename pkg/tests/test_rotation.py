"""Rotation contract: padding, determinism, orthogonality, dense-oracle
agreement."""

import numpy as np
import pytest
from scipy.linalg import hadamard

from symqg import apply_inverse_rotation, create_rotator
from symqg.rotation import Rotator, _sign_table


def dense_matrix(rotator):
    """Materialize the rotation as an explicit matrix (test oracle only)."""
    basis = np.eye(rotator.padded_dim, dtype=np.float32)
    rows = rotator._apply_padded(basis)  # row i = map applied to e_i
    return rows.T  # column i = image of e_i


class TestCreate:
    @pytest.mark.parametrize("dim,expected", [(128, 128), (100, 128), (33, 64),
                                              (1, 64), (64, 64), (257, 512)])
    def test_padded_dim(self, dim, expected):
        assert create_rotator(7, dim).padded_dim == expected

    def test_zero_dim_rejected(self):
        with pytest.raises(ValueError):
            create_rotator(7, 0)

    def test_deterministic_sign_tables(self):
        a = create_rotator(123456789, 100)
        b = create_rotator(123456789, 100)
        assert np.array_equal(a.signs, b.signs)
        c = create_rotator(123456790, 100)
        assert not np.array_equal(a.signs, c.signs)

    def test_signs_are_plus_minus_one(self):
        r = create_rotator(11, 200)
        assert set(np.unique(r.signs)) == {-1.0, 1.0}

    def test_regenerated_from_persisted_triple(self):
        # only (seed, dim, rounds) is stored in index files
        r = create_rotator(99, 70, rounds=2)
        again = create_rotator(r.seed, r.dim, r.rounds)
        v = np.random.default_rng(0).standard_normal(70).astype(np.float32)
        assert np.array_equal(apply_inverse_rotation(r, v),
                              apply_inverse_rotation(again, v))


class TestApply:
    def test_zero_maps_to_zero(self):
        r = create_rotator(7, 48)
        out = apply_inverse_rotation(r, np.zeros(48, dtype=np.float32))
        assert out.shape == (64,)
        assert np.all(out == 0.0)

    def test_norm_preserved(self):
        rng = np.random.default_rng(42)
        for dim in (17, 64, 100, 200):
            r = create_rotator(3, dim)
            v = rng.standard_normal(dim).astype(np.float32) * 5.0
            out = apply_inverse_rotation(r, v)
            assert abs(np.linalg.norm(out) - np.linalg.norm(v)) \
                <= 1e-5 * np.linalg.norm(v)

    def test_length_mismatch_rejected(self):
        r = create_rotator(7, 32)
        with pytest.raises(ValueError):
            apply_inverse_rotation(r, np.zeros(33, dtype=np.float32))

    def test_single_round_all_plus_signs_on_basis_vector(self):
        # with all sign flips +1 and one round, the map is the normalized
        # Hadamard itself: e0 lands on the constant vector 1/sqrt(64) = 1/8
        r = create_rotator(0, 64, rounds=1)
        signs = np.ones_like(r.signs)
        forced = Rotator(seed=0, dim=64, padded_dim=64, rounds=1, signs=signs)
        e0 = np.zeros(64, dtype=np.float32)
        e0[0] = 1.0
        out = apply_inverse_rotation(forced, e0)
        np.testing.assert_allclose(out, 1.0 / 8.0, rtol=0, atol=1e-7)
        # against an explicit dense Hadamard multiply
        oracle = (hadamard(64).astype(np.float64) / 8.0) @ e0
        np.testing.assert_allclose(out, oracle, atol=1e-6)

    def test_rounds_zero_is_identity_with_padding(self):
        r = create_rotator(9, 50, rounds=0)
        v = np.arange(50, dtype=np.float32)
        out = apply_inverse_rotation(r, v)
        assert np.array_equal(out[:50], v)
        assert np.all(out[50:] == 0.0)

    def test_linearity(self):
        rng = np.random.default_rng(1)
        r = create_rotator(21, 100)
        u = rng.standard_normal(100).astype(np.float32)
        w = rng.standard_normal(100).astype(np.float32)
        u /= np.linalg.norm(u)
        w /= np.linalg.norm(w)
        a, b = 0.3, -1.7
        lhs = apply_inverse_rotation(r, (a * u + b * w).astype(np.float32))
        rhs = a * apply_inverse_rotation(r, u) + b * apply_inverse_rotation(r, w)
        np.testing.assert_allclose(lhs, rhs, atol=1e-4)

    @pytest.mark.parametrize("dim", [20, 64, 130, 256])
    def test_matches_dense_oracle(self, dim):
        rng = np.random.default_rng(dim)
        r = create_rotator(1000 + dim, dim)
        m = dense_matrix(r)
        # the materialized matrix must itself be orthogonal
        np.testing.assert_allclose(m.T @ m, np.eye(r.padded_dim), atol=1e-4)
        v = rng.standard_normal(dim).astype(np.float32)
        padded = np.zeros(r.padded_dim, dtype=np.float32)
        padded[:dim] = v
        np.testing.assert_allclose(
            apply_inverse_rotation(r, v), m @ padded, atol=1e-4)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(8)
        r = create_rotator(17, 96)
        vs = rng.standard_normal((40, 96)).astype(np.float32)
        batched = r.apply_batch(vs)
        for i in range(vs.shape[0]):
            assert np.array_equal(batched[i], apply_inverse_rotation(r, vs[i]))


class TestSignGenerator:
    def test_counter_based_rows_differ_per_round(self):
        t = _sign_table(5, 3, 64)
        assert not np.array_equal(t[0], t[1])
        assert not np.array_equal(t[1], t[2])

    def test_signs_roughly_balanced(self):
        t = _sign_table(5, 3, 4096)
        frac = (t > 0).mean()
        assert 0.45 < frac < 0.55
