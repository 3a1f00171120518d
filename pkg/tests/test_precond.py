import numpy as np
import pytest

from sadprec.precond import (
    HssApplicator,
    IdentityApplicator,
    MgssApplicator,
    PrecondSpec,
    dense_preconditioner_matrix,
    form_schur_dense,
    hss_apply,
    make_preconditioner,
    mgss_apply,
    rmgss_apply,
)
from sadprec.problems import generate_random_saddle
from sadprec.sparse import (
    CsrMatrix,
    SaddleSystem,
    assemble_block_saddle,
    to_dense,
)


def toy_t1():
    return SaddleSystem(
        CsrMatrix.from_dense([[2.0]]),
        CsrMatrix.from_dense([[1.0]]),
        CsrMatrix.zeros(1, 1),
        np.array([1.0]),
        np.array([0.0]),
    )


class TestPrecondSpec:
    def test_mgss_requires_positive_shifts(self):
        with pytest.raises(ValueError):
            PrecondSpec("mgss", alpha=0.0, beta=1.0)
        with pytest.raises(ValueError):
            PrecondSpec("mgss", alpha=1.0, beta=0.0)

    def test_rmgss_pins_alpha(self):
        with pytest.raises(ValueError):
            PrecondSpec("rmgss", alpha=0.5, beta=1.0)
        with pytest.raises(ValueError):
            PrecondSpec("rmgss", beta=0.0)

    def test_hss_requires_alpha(self):
        with pytest.raises(ValueError):
            PrecondSpec("hss", alpha=0.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            PrecondSpec("ilu")


class TestMgssApply:
    def test_toy_steps(self):
        # hand elimination: w=0, w1=2, S=[4], z1=0.5, v=0.5, z2=0.5
        sys_ = toy_t1()
        app = MgssApplicator(sys_, PrecondSpec("mgss", 1.0, 1.0, inner="direct"))
        z = mgss_apply(app, np.array([1.0, 0.0]))
        assert np.allclose(z, [0.5, 0.5], atol=1e-14)
        # dense oracle: M z = r with M = 0.5 [[3,1],[-1,1]]
        M = 0.5 * np.array([[3.0, 1.0], [-1.0, 1.0]])
        assert np.allclose(M @ z, [1.0, 0.0], atol=1e-14)

    def test_zero_residual(self):
        app = MgssApplicator(toy_t1(), PrecondSpec("mgss", 1.0, 1.0, inner="direct"))
        assert np.array_equal(app.apply(np.zeros(2)), np.zeros(2))

    def test_remark1_shift_splitting_reduction(self):
        # C = 0 and alpha = beta: apply equals the dense inverse of (alpha I + Acal)/2
        rng = np.random.default_rng(12)
        n, m = 4, 2
        W = rng.standard_normal((n, n))
        Ad = W @ W.T + n * np.eye(n)
        Ad = 0.5 * (Ad + Ad.T)
        Bd = rng.standard_normal((m, n))
        Bd[:, :m] += np.eye(m)
        sys_ = SaddleSystem(
            CsrMatrix.from_dense(Ad),
            CsrMatrix.from_dense(Bd),
            CsrMatrix.zeros(m, m),
            np.zeros(n),
            np.zeros(m),
        )
        alpha = 0.7
        app = MgssApplicator(sys_, PrecondSpec("mgss", alpha, alpha, inner="direct"))
        acal = to_dense(assemble_block_saddle(sys_))
        P_ss = 0.5 * (alpha * np.eye(n + m) + acal)
        r = rng.standard_normal(n + m)
        assert np.linalg.norm(app.apply(r) - np.linalg.solve(P_ss, r)) <= 1e-10 * np.linalg.norm(r)

    def test_inner_cg_stays_close_to_direct(self):
        sys_ = generate_random_saddle(25, 10, seed=4)
        r = np.random.default_rng(6).standard_normal(35)
        z_direct = MgssApplicator(sys_, PrecondSpec("mgss", 0.5, 0.5, inner="direct")).apply(r)
        app = MgssApplicator(
            sys_, PrecondSpec("mgss", 0.5, 0.5, inner="cg", inner_reduction=1e12, inner_max_iters=500)
        )
        z_cg = app.apply(r)
        assert app.inner_iterations > 0
        assert np.linalg.norm(z_cg - z_direct) <= 1e-8 * np.linalg.norm(z_direct)

    def test_inner_cap_is_not_an_error(self):
        sys_ = generate_random_saddle(30, 12, seed=9)
        app = MgssApplicator(
            sys_, PrecondSpec("mgss", 0.01, 0.01, inner="cg", inner_max_iters=2)
        )
        z = app.apply(np.ones(42))
        assert np.all(np.isfinite(z))
        assert app.inner_iterations == 2


class TestRmgssApply:
    def test_toy_steps(self):
        # w=0, w1=1, S0=[3], z1=1/3, v=1/3, z2=1/3
        sys_ = toy_t1()
        app = MgssApplicator(sys_, PrecondSpec("rmgss", beta=1.0, inner="direct"))
        z = rmgss_apply(app, np.array([1.0, 0.0]))
        assert np.allclose(z, [1.0 / 3.0, 1.0 / 3.0], atol=1e-14)
        P = np.array([[2.0, 1.0], [-1.0, 1.0]])
        assert np.allclose(P @ z, [1.0, 0.0], atol=1e-14)

    def test_zero_residual(self):
        app = MgssApplicator(toy_t1(), PrecondSpec("rmgss", beta=1.0, inner="direct"))
        assert np.array_equal(app.apply(np.zeros(2)), np.zeros(2))

    def test_toy_preconditioned_eigenvalues(self):
        # dense eigendecomposition of P^{-1} Acal = [[1, 1/3], [0, 1/3]]
        sys_ = toy_t1()
        app = MgssApplicator(sys_, PrecondSpec("rmgss", beta=1.0, inner="direct"))
        psi = app.apply(to_dense(assemble_block_saddle(sys_)))
        lam = np.sort(np.linalg.eigvals(psi).real)
        assert np.allclose(lam, [1.0 / 3.0, 1.0], atol=1e-12)

    def test_kind_mismatch_raises(self):
        app = MgssApplicator(toy_t1(), PrecondSpec("rmgss", beta=1.0))
        with pytest.raises(ValueError):
            mgss_apply(app, np.zeros(2))


class TestHssApply:
    def test_toy_chain(self):
        sys_ = toy_t1()
        spec = PrecondSpec("hss", alpha=1.0, inner="direct")
        z = hss_apply(spec, sys_, np.array([1.0, 0.0]))
        assert np.allclose(z, [1.0 / 3.0, 1.0 / 3.0], atol=1e-12)
        # check (1/2)(I + H)(I + S) z = r
        H = np.diag([2.0, 0.0])
        S = np.array([[0.0, 1.0], [-1.0, 0.0]])
        P = 0.5 * (np.eye(2) + H) @ (np.eye(2) + S)
        assert np.allclose(P @ z, [1.0, 0.0], atol=1e-12)

    def test_zero_residual(self):
        z = hss_apply(PrecondSpec("hss", alpha=1.0, inner="direct"), toy_t1(), np.zeros(2))
        assert np.array_equal(z, np.zeros(2))

    def test_decoupled_blocks_when_B_and_C_zero(self):
        rng = np.random.default_rng(3)
        n, m = 5, 2
        W = rng.standard_normal((n, n))
        Ad = 0.5 * ((W @ W.T) + (W @ W.T).T) + n * np.eye(n)
        sys_ = SaddleSystem(
            CsrMatrix.from_dense(Ad),
            CsrMatrix.zeros(m, n),
            CsrMatrix.zeros(m, m),
            np.zeros(n),
            np.zeros(m),
        )
        alpha = 0.9
        r = rng.standard_normal(n + m)
        z = hss_apply(PrecondSpec("hss", alpha=alpha, inner="direct"), sys_, r)
        # with B = C = 0 the two factors act blockwise: the velocity part
        # sees 2 alpha (alpha I)^{-1} (alpha I + A)^{-1}, the pressure part
        # 2 alpha (alpha I)^{-1} (alpha I)^{-1}
        z1_exp = 2.0 * np.linalg.solve(Ad + alpha * np.eye(n), r[:n])
        z2_exp = 2.0 * r[n:] / alpha
        assert np.allclose(z[:n], z1_exp, atol=1e-12)
        assert np.allclose(z[n:], z2_exp, atol=1e-12)


class TestSchur:
    def test_toy_values(self):
        sys_ = toy_t1()
        assert np.allclose(form_schur_dense(sys_, 1.0, 1.0), [[4.0]])
        assert np.allclose(form_schur_dense(sys_, 0.0, 1.0), [[3.0]])

    def test_B_zero_gives_shifted_A(self):
        rng = np.random.default_rng(8)
        Ad = np.diag(rng.uniform(1.0, 2.0, 4))
        sys_ = SaddleSystem(
            CsrMatrix.from_dense(Ad),
            CsrMatrix.zeros(0, 4),
            CsrMatrix.zeros(0, 0),
            np.zeros(4),
            np.zeros(0),
        )
        S = form_schur_dense(sys_, 0.3, 1.0)
        assert np.allclose(S, Ad + 0.3 * np.eye(4))

    def test_operator_spd_probe(self):
        sys_ = generate_random_saddle(30, 14, seed=10)
        app = MgssApplicator(sys_, PrecondSpec("mgss", 0.2, 0.7))
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = rng.standard_normal(30)
            assert float(x @ app.schur_op(x)) > 0.0

    def test_operator_matches_dense(self):
        sys_ = generate_random_saddle(20, 9, seed=2)
        app = MgssApplicator(sys_, PrecondSpec("mgss", 0.4, 0.9))
        S = form_schur_dense(sys_, 0.4, 0.9)
        rng = np.random.default_rng(1)
        x = rng.standard_normal(20)
        assert np.allclose(app.schur_op(x), S @ x, atol=1e-10 * np.linalg.norm(S))


def _instances():
    yield toy_t1()
    yield generate_random_saddle(12, 5, seed=0)
    yield generate_random_saddle(40, 16, seed=1)
    yield generate_random_saddle(120, 50, seed=2)


class TestReconstruction:
    @pytest.mark.parametrize("kind", ["mgss", "rmgss", "hss", "none"])
    def test_dense_P_times_apply_is_identity(self, kind):
        rng = np.random.default_rng(77)
        for sys_ in _instances():
            if kind == "mgss":
                spec = PrecondSpec("mgss", 0.3, 0.8, inner="direct")
            elif kind == "rmgss":
                spec = PrecondSpec("rmgss", beta=0.8, inner="direct")
            elif kind == "hss":
                spec = PrecondSpec("hss", alpha=0.6, inner="direct")
            else:
                spec = PrecondSpec("none")
            app = make_preconditioner(sys_, spec)
            P = dense_preconditioner_matrix(sys_, spec)
            for _ in range(5):
                r = rng.standard_normal(sys_.order)
                assert np.linalg.norm(P @ app.apply(r) - r) <= 1e-10 * np.linalg.norm(r)

    def test_three_factor_inverse_identity(self):
        # the block factorization of the mgss matrix, multiplied out,
        # must equal the dense inverse (order <= 100)
        sys_ = generate_random_saddle(60, 25, seed=5)
        alpha, beta = 0.4, 0.9
        n, m = sys_.n, sys_.m
        Ad, Bd, Cd = to_dense(sys_.A), to_dense(sys_.B), to_dense(sys_.C)
        shifted = Cd + beta * np.eye(m)
        S = form_schur_dense(sys_, alpha, beta)
        lower = np.block(
            [[np.eye(n), np.zeros((n, m))], [np.linalg.solve(shifted, Bd), np.eye(m)]]
        )
        middle = np.block(
            [
                [np.linalg.inv(S), np.zeros((n, m))],
                [np.zeros((m, n)), np.linalg.inv(shifted)],
            ]
        )
        upper = np.block(
            [
                [np.eye(n), -Bd.T @ np.linalg.inv(shifted)],
                [np.zeros((m, n)), np.eye(m)],
            ]
        )
        P_inv_factored = 2.0 * lower @ middle @ upper
        P = dense_preconditioner_matrix(sys_, PrecondSpec("mgss", alpha, beta))
        P_inv = np.linalg.inv(P)
        rel = np.linalg.norm(P_inv_factored - P_inv) / np.linalg.norm(P_inv)
        assert rel <= 1e-10

    def test_identity_applicator(self):
        app = IdentityApplicator()
        r = np.array([1.0, 2.0])
        assert np.array_equal(app.apply(r), r)
