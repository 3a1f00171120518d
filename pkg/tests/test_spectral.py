import numpy as np
import pytest

from sadprec.krylov import as_operator
from sadprec.problems import StokesConfig, generate_random_saddle, generate_stokes_q1p0
from sadprec.sparse import CsrMatrix, SaddleSystem
from sadprec.spectral import (
    COMPUTED_DENSE,
    PREDICTED,
    Spectrum,
    dense_eigen_real_schur,
    gamma_dense,
    jacobi_symmetric,
    jacobi_symmetric_eigen,
    power_spectral_radius,
    predicted_rmgss_spectrum,
    rmgss_preconditioned_dense,
    iteration_matrix_check,
)


def toy_t1():
    return SaddleSystem(
        CsrMatrix.from_dense([[2.0]]),
        CsrMatrix.from_dense([[1.0]]),
        CsrMatrix.zeros(1, 1),
        np.array([1.0]),
        np.array([0.0]),
    )


class TestJacobi:
    def test_diagonal(self):
        spec = jacobi_symmetric_eigen(np.diag([5.0, 1.0, 3.0]))
        assert np.allclose(spec.eigenvalues, [1.0, 3.0, 5.0])

    def test_hand_2x2(self):
        # characteristic polynomial of [[2,1],[1,2]]: (2-l)^2 = 1 -> {1, 3}
        spec = jacobi_symmetric_eigen(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert np.allclose(spec.eigenvalues, [1.0, 3.0], atol=1e-12)

    def test_toy_G(self):
        # G = C + B A^{-1} B^T = 0 + 1 * (1/2) * 1 = 0.5
        spec = jacobi_symmetric_eigen(np.array([[0.5]]))
        assert spec.eigenvalues[0] == 0.5

    def test_non_symmetric_rejected(self):
        with pytest.raises(ValueError):
            jacobi_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))

    @pytest.mark.parametrize("n,seed", [(6, 0), (40, 1), (150, 2)])
    def test_against_numpy_oracle(self, n, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((n, n))
        a = 0.5 * (a + a.T)
        w, _ = jacobi_symmetric(a)
        assert np.allclose(np.sort(w), np.linalg.eigvalsh(a), atol=1e-10 * max(1, np.linalg.norm(a)))

    @pytest.mark.parametrize("n,seed", [(15, 3), (60, 4)])
    def test_eigenpair_residuals(self, n, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((n, n))
        a = 0.5 * (a + a.T)
        w, V = jacobi_symmetric(a)
        scale = np.linalg.norm(a)
        for i in range(n):
            assert np.linalg.norm(a @ V[:, i] - w[i] * V[:, i]) <= 1e-8 * scale


class TestRealSchur:
    def test_triangular(self):
        spec = dense_eigen_real_schur(np.array([[2.0, 7.0], [0.0, 3.0]]))
        assert np.allclose(spec.eigenvalues, [2.0, 3.0])

    def test_rotation_complex_pair(self):
        spec = dense_eigen_real_schur(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        assert np.allclose(spec.eigenvalues, [-1.0j, 1.0j])

    def test_toy_gamma_nilpotent(self):
        spec = dense_eigen_real_schur(gamma_dense(toy_t1(), 1.0, 1.0))
        assert np.max(np.abs(spec.eigenvalues)) <= 1e-8

    def test_order_cap(self):
        with pytest.raises(ValueError):
            dense_eigen_real_schur(np.eye(401))

    @pytest.mark.parametrize("n,seed", [(3, 0), (17, 1), (80, 2), (200, 3)])
    def test_against_numpy_oracle(self, n, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((n, n))
        mine = dense_eigen_real_schur(a).eigenvalues
        ref = np.linalg.eigvals(a)
        ref = ref[np.lexsort((ref.imag, ref.real))]
        assert np.max(np.abs(mine - ref)) <= 1e-9 * max(1.0, np.linalg.norm(a))

    def test_clustered_identity_plus_coupling(self):
        rng = np.random.default_rng(4)
        n, m = 30, 8
        T = 0.95 * np.eye(m) + 0.01 * rng.standard_normal((m, m))
        psi = np.block(
            [[np.eye(n), rng.standard_normal((n, m))], [np.zeros((m, n)), T]]
        )
        mine = dense_eigen_real_schur(psi).eigenvalues
        ref = np.linalg.eigvals(psi)
        ref = ref[np.lexsort((ref.imag, ref.real))]
        assert np.max(np.abs(mine - ref)) <= 1e-9


class TestPowerRadius:
    def test_scaled_identity(self):
        op = as_operator(CsrMatrix.from_dense(0.5 * np.eye(4)))
        assert power_spectral_radius(op, iters=50, restarts=3) == pytest.approx(0.5, abs=1e-10)

    def test_diagonal_gap(self):
        op = as_operator(CsrMatrix.from_dense(np.diag([0.5, 0.25])))
        assert power_spectral_radius(op, iters=200, restarts=5) == pytest.approx(0.5, abs=1e-6)

    def test_stokes_gamma_below_one(self):
        from sadprec.stationary import IterationMatrixOperator

        sys_ = generate_stokes_q1p0(StokesConfig(8))
        op = IterationMatrixOperator(sys_, 0.01, 0.01)
        assert power_spectral_radius(op, iters=60, restarts=3) < 1.0

    @pytest.mark.parametrize("diag", [[0.9, 0.5, 0.1], [2.0, 1.5, 0.2], [0.6, 0.5, 0.4]])
    def test_bracket_on_diagonal_gap(self, diag):
        op = as_operator(CsrMatrix.from_dense(np.diag(diag)))
        rho = max(abs(d) for d in diag)
        est = power_spectral_radius(op, iters=400, restarts=5)
        assert est <= rho + 1e-4
        assert est >= 0.99 * rho


class TestPredictedSpectrum:
    def test_toy(self):
        spec = predicted_rmgss_spectrum(toy_t1(), 1.0)
        assert spec.source == PREDICTED
        assert np.allclose(spec.eigenvalues, [1.0 / 3.0, 1.0], atol=1e-14)

    def test_large_beta_limit(self):
        spec = predicted_rmgss_spectrum(toy_t1(), 1e6)
        lam_small = spec.eigenvalues[0].real
        assert lam_small == pytest.approx(5e-7, rel=1e-3)

    def test_m_zero_degenerate(self):
        A = CsrMatrix.from_dense(np.diag([2.0, 3.0]))
        sys_ = SaddleSystem(A, CsrMatrix.zeros(0, 2), CsrMatrix.zeros(0, 0), np.zeros(2), np.zeros(0))
        spec = predicted_rmgss_spectrum(sys_, 0.5)
        assert np.allclose(spec.eigenvalues, [1.0, 1.0])

    @pytest.mark.parametrize("beta", [0.001, 0.1, 1.0])
    def test_matches_dense_spectrum(self, beta):
        sys_ = generate_random_saddle(40, 17, seed=8)
        comp = dense_eigen_real_schur(rmgss_preconditioned_dense(sys_, beta)).eigenvalues
        pred = predicted_rmgss_spectrum(sys_, beta).eigenvalues
        assert np.max(np.abs(comp - pred)) <= 1e-8


class TestIterationMatrixCheck:
    def test_toy(self):
        res = iteration_matrix_check(toy_t1(), 1.0, 1.0)
        assert res["rho"] <= 1e-8
        assert res["min_dist_to_plus1"] == pytest.approx(1.0, abs=1e-8)
        assert res["min_dist_to_minus1"] == pytest.approx(1.0, abs=1e-8)

    def test_stokes_q4(self):
        sys_ = generate_stokes_q1p0(StokesConfig(4))
        assert sys_.order == 65
        res = iteration_matrix_check(sys_, 0.01, 0.01)
        assert res["rho"] < 1.0
        assert res["min_dist_to_plus1"] > 0.0 and res["min_dist_to_minus1"] > 0.0

    def test_random_order_40_extreme_shifts(self):
        sys_ = generate_random_saddle(28, 12, seed=12)
        res = iteration_matrix_check(sys_, 10.0, 0.001)
        assert res["rho"] < 1.0


class TestClusteringBound:
    def test_non_unit_deviation_equals_beta_over_beta_plus_mu_min(self):
        sys_ = generate_stokes_q1p0(StokesConfig(4))
        from sadprec import factor
        from sadprec.sparse import to_dense

        Ad, Bd, Cd = to_dense(sys_.A), to_dense(sys_.B), to_dense(sys_.C)
        G = Cd + Bd @ np.linalg.solve(Ad, Bd.T)
        mu, _ = jacobi_symmetric(0.5 * (G + G.T))
        mu_min = float(np.min(mu))
        assert mu_min > 0.0
        bounds = []
        for beta in (1.0, 0.1, 0.01, 0.001):
            lam = dense_eigen_real_schur(rmgss_preconditioned_dense(sys_, beta)).eigenvalues
            dev = np.abs(lam - 1.0)
            worst = np.sort(dev)[::-1][: sys_.m]  # the m non-unit eigenvalues
            assert abs(np.max(worst) - beta / (beta + mu_min)) <= 1e-8
            bounds.append(np.max(worst))
        # decreasing beta tightens the cluster around (1, 0)
        assert all(bounds[i + 1] < bounds[i] for i in range(len(bounds) - 1))


class TestSpectrumContainer:
    def test_sorted_and_sized(self):
        spec = Spectrum(np.array([3.0, 1.0 + 2.0j, 1.0 - 2.0j]), COMPUTED_DENSE, 3)
        assert len(spec) == 3
        re = spec.eigenvalues.real
        assert np.all(np.diff(re) >= 0)

    def test_csv_round_trip(self, tmp_path):
        spec = Spectrum(np.array([0.1234567890123456789, 1.0 + 0.5j]), COMPUTED_DENSE, 2)
        path = tmp_path / "spec.csv"
        spec.save_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "re,im,source"
        re0, im0, src = lines[1].split(",")
        assert float(re0) == spec.eigenvalues[0].real
        assert float(im0) == spec.eigenvalues[0].imag
        assert src == COMPUTED_DENSE
