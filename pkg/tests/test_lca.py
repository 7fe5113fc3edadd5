import numpy as np
import pytest

from thumbcodec import lca
from thumbcodec.errors import SolverDivergedError
from thumbcodec.masks import checkerboard_mask, random_mask
from thumbcodec.training import init_dictionary

from oracles import energy_loop, masked_lasso_cd


def unit_atoms(rng, k, p, c):
    atoms = rng.standard_normal((k, p, p, c))
    return atoms / np.linalg.norm(
        atoms.reshape(k, -1), axis=1)[:, None, None, None]


class TestThreshold:
    def test_below_threshold(self):
        assert lca.threshold(0.3, 0.5) == 0.0

    def test_soft_shrinkage(self):
        assert lca.threshold(1.5, 0.5) == 1.0

    def test_rectifies_negatives(self):
        assert lca.threshold(-2.0, 0.5) == 0.0

    def test_elementwise(self):
        u = np.array([-1.0, 0.2, 0.7])
        np.testing.assert_allclose(lca.threshold(u, 0.5), [0.0, 0.0, 0.2])


class TestReconstruct:
    def test_zero_code_gives_zero_image(self, rng):
        d = init_dictionary(4, 3, 2, seed=0, stride=3)
        code = np.zeros(d.code_shape(6, 6), dtype=np.float32)
        out = lca.reconstruct(d, code, (6, 6))
        assert out.shape == (6, 6, 2)
        assert np.all(out == 0)

    def test_single_unit_impulse_response(self, rng):
        atoms = unit_atoms(rng, 1, 4, 1)
        d = lca.Dictionary(atoms=atoms, stride=4)
        code = np.zeros((2, 2, 1))
        code[1, 0, 0] = 1.0
        out = lca.reconstruct(d, code, (8, 8))
        np.testing.assert_allclose(out[4:8, 0:4], atoms[0], atol=1e-12)
        out[4:8, 0:4] = 0
        assert np.all(out == 0)

    def test_superposition(self, rng):
        d = init_dictionary(3, 4, 3, seed=1, stride=2)
        c1 = rng.standard_normal((*d.code_shape(8, 8),)).astype(np.float32)
        c2 = rng.standard_normal((*d.code_shape(8, 8),)).astype(np.float32)
        lhs = lca.reconstruct(d, c1 + c2, (8, 8))
        rhs = lca.reconstruct(d, c1, (8, 8)) + lca.reconstruct(d, c2, (8, 8))
        np.testing.assert_allclose(lhs, rhs, atol=1e-5)

    def test_shape_mismatch(self, rng):
        d = init_dictionary(3, 4, 3, seed=1, stride=2)
        with pytest.raises(ValueError):
            lca.reconstruct(d, np.zeros((2, 2, 3)), (8, 8))


class TestEnergy:
    def test_zero_code_zero_image(self):
        d = init_dictionary(2, 2, 1, seed=0, stride=2)
        img = np.zeros((4, 4, 1))
        code = np.zeros(d.code_shape(4, 4))
        assert lca.energy(img, None, d, code, 0.5) == 0.0

    def test_zero_code_full_mask_is_half_norm(self, rng):
        d = init_dictionary(2, 2, 1, seed=0, stride=2)
        img = rng.uniform(0, 1, (4, 4, 1))
        code = np.zeros(d.code_shape(4, 4))
        expected = 0.5 * float(np.sum(img ** 2))
        assert lca.energy(img, None, d, code, 0.5) == pytest.approx(expected)

    def test_matches_loop_oracle(self, rng):
        d = init_dictionary(3, 2, 1, seed=2, stride=2)
        img = rng.uniform(0, 1, (4, 4, 1))
        code = rng.uniform(0, 0.5, d.code_shape(4, 4))
        mask = checkerboard_mask(4, 4)
        got = lca.energy(img, mask, d, code, 0.3)
        want = energy_loop(img, mask.kept, d.atoms, d.stride, code, 0.3)
        assert got == pytest.approx(want, rel=1e-10)


class TestLcaEncode:
    def test_zero_image_gives_zero_code(self, rng):
        d = init_dictionary(4, 4, 3, seed=3, stride=2)
        img = np.zeros((8, 8, 3), dtype=np.float32)
        code = lca.lca_encode(img, None, d,
                              lca.LcaParams(lam=0.1, iterations=50))
        assert np.all(code.activations == 0)

    def test_one_atom_closed_form(self, rng):
        # whole-image atom, image = 2 * atom: lasso solution is 2 - lam
        atoms = unit_atoms(rng, 1, 6, 1)
        d = lca.Dictionary(atoms=atoms, stride=6)
        img = 2.0 * atoms[0]
        for lam in (0.25, 0.5, 1.0):
            code = lca.lca_encode(
                img, None, d,
                lca.LcaParams(lam=lam, step=0.1, iterations=3000, tol=0.0))
            assert code.activations.ravel()[0] == pytest.approx(
                2.0 - lam, abs=1e-5)

    def test_matches_coordinate_descent_small(self, rng):
        # 4x4 image, 2 atoms of patch 2x2, stride 2, full mask
        atoms = unit_atoms(rng, 2, 2, 1)
        d = lca.Dictionary(atoms=atoms, stride=2)
        img = rng.uniform(0, 1, (4, 4, 1))
        params = lca.LcaParams(lam=0.05, step=0.1, iterations=4000, tol=0.0)
        code = lca.lca_encode(img, None, d, params)
        got = lca.energy(img, None, d, code, 0.05)
        _, want = masked_lasso_cd(img, np.ones((4, 4), bool), atoms, 2, 0.05)
        assert got == pytest.approx(want, abs=1e-4)

    def test_masked_matches_coordinate_descent(self, rng):
        atoms = unit_atoms(rng, 3, 2, 1)
        d = lca.Dictionary(atoms=atoms, stride=2)
        img = rng.uniform(0, 1, (4, 4, 1))
        mask = random_mask(4, 4, 0.5, seed=8)
        params = lca.LcaParams(lam=0.05, step=0.1, iterations=4000, tol=0.0)
        code = lca.lca_encode(img, mask, d, params)
        got = lca.energy(img, mask, d, code, 0.05)
        _, want = masked_lasso_cd(img, mask.kept, atoms, 2, 0.05)
        assert got == pytest.approx(want, abs=1e-4)

    @pytest.mark.parametrize("step", [0.05, 0.1])
    def test_energy_descent(self, rng, step):
        # the invariant covers the whole step range up to 0.1 on
        # freshly-drawn unit-norm dictionaries
        d = init_dictionary(8, 4, 3, seed=4, stride=2)
        img = rng.uniform(0, 1, (8, 8, 3)).astype(np.float32)
        code = lca.lca_encode(
            img, checkerboard_mask(8, 8), d,
            lca.LcaParams(lam=0.1, step=step, iterations=200, tol=0.0))
        e = np.asarray(code.energy_history)
        assert np.all(np.diff(e) <= 1e-6 * (1.0 + np.abs(e[:-1])))

    def test_mask_independence_bit_identical(self, rng):
        d = init_dictionary(6, 4, 3, seed=5, stride=2)
        mask = random_mask(8, 8, 0.5, seed=3)
        img = rng.uniform(0, 1, (8, 8, 3)).astype(np.float32)
        noisy = img.copy()
        noisy[~mask.kept] = rng.uniform(
            0, 1, (int((~mask.kept).sum()), 3)).astype(np.float32)
        params = lca.LcaParams(lam=0.1, iterations=120)
        a = lca.lca_encode(img, mask, d, params)
        b = lca.lca_encode(noisy, mask, d, params)
        assert np.array_equal(a.activations, b.activations)

    def test_rectification(self, rng):
        d = init_dictionary(6, 4, 3, seed=6, stride=2)
        img = rng.uniform(0, 1, (8, 8, 3)).astype(np.float32)
        code = lca.lca_encode(img, None, d, lca.LcaParams(lam=0.05,
                                                          iterations=150))
        assert np.all(code.activations >= 0)

    def test_adjoint_consistency(self, rng):
        d = init_dictionary(5, 4, 3, seed=7, stride=2)
        code = rng.standard_normal(d.code_shape(8, 8))
        img = rng.standard_normal((8, 8, 3))
        lhs = float(np.sum(lca.reconstruct(d, code, (8, 8)).astype(np.float64)
                           * img))
        rhs = float(np.sum(code * lca.correlate(d, img).astype(np.float64)))
        assert abs(lhs - rhs) <= 1e-6 * max(1.0, abs(lhs))

    def test_monotone_sparsity_in_lambda(self, rng):
        # mean active fraction over a fixed 100-image batch never rises
        # with lambda
        d = init_dictionary(8, 4, 3, seed=8, stride=2)
        imgs = rng.uniform(0, 1, (100, 8, 8, 3)).astype(np.float32)
        fractions = []
        for lam in (0.05, 0.1, 0.2, 0.4):
            acts, _ = lca.lca_encode_batch(
                imgs, None, d, lca.LcaParams(lam=lam, iterations=150))
            fractions.append(lca.sparsity(acts))
        assert all(a >= b for a, b in zip(fractions, fractions[1:]))

    def test_divergence_detection(self, rng):
        d = init_dictionary(16, 4, 3, seed=9, stride=2)
        img = rng.uniform(0, 1, (8, 8, 3)).astype(np.float32)
        with pytest.raises(SolverDivergedError, match="step"):
            lca.lca_encode(img, None, d,
                           lca.LcaParams(lam=0.01, step=1.0, iterations=400,
                                         tol=0.0))

    def test_batch_matches_mask_plane_types(self, rng):
        # PixelMask and raw bool array behave identically
        d = init_dictionary(4, 4, 3, seed=10, stride=2)
        imgs = rng.uniform(0, 1, (2, 8, 8, 3)).astype(np.float32)
        m = checkerboard_mask(8, 8)
        a, _ = lca.lca_encode_batch(imgs, m, d, lca.LcaParams(lam=0.1,
                                                              iterations=60))
        b, _ = lca.lca_encode_batch(imgs, m.kept, d,
                                    lca.LcaParams(lam=0.1, iterations=60))
        assert np.array_equal(a, b)


class TestSparsity:
    def test_all_zero(self):
        assert lca.sparsity(np.zeros((2, 2, 4))) == 0.0

    def test_all_positive(self):
        assert lca.sparsity(np.ones((2, 2, 4))) == 1.0

    def test_fraction(self):
        acts = np.zeros(8)
        acts[:2] = 0.5
        assert lca.sparsity(acts) == 0.25


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            lca.LcaParams(lam=0.0)
        with pytest.raises(ValueError):
            lca.LcaParams(lam=0.1, step=0.0)
        with pytest.raises(ValueError):
            lca.LcaParams(lam=0.1, iterations=0)

    def test_overcompleteness_report(self):
        d = init_dictionary(1024, 16, 3, seed=0, stride=2)
        assert d.overcompleteness(32, 32) == pytest.approx(16 * 16 * 1024
                                                           / 3072)
