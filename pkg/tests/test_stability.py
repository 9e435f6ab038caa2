import numpy as np
import pytest

from riskbound.core import (
    Coupling,
    DomainError,
    InvalidHolderData,
    LossMatrix,
    SpectralGrid,
    validate_marginal,
)
from riskbound.stability import (
    ground_from_labels,
    holder_sensitivity_check,
    lipschitz_estimate,
    perturbation_sweep,
    wasserstein_discrete,
)


def random_ground(rng, n):
    """Random metric from points on the line."""
    x = np.sort(rng.normal(size=n))
    return LossMatrix(np.abs(x[:, None] - x[None, :]))


class TestWasserstein:
    def test_identical_laws(self):
        p = validate_marginal([0.3, 0.7])
        g = LossMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert wasserstein_discrete(p, p, g, 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_two_diracs(self):
        p = validate_marginal([1.0, 0.0])
        q = validate_marginal([0.0, 1.0])
        g = LossMatrix(np.array([[0.0, 2.5], [2.5, 0.0]]))
        for r in (1.0, 2.0, 3.0):
            assert wasserstein_discrete(p, q, g, r) == pytest.approx(2.5, abs=1e-9)

    def test_half_mass_move(self):
        p = validate_marginal([1.0, 0.0])
        q = validate_marginal([0.5, 0.5])
        g = LossMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert wasserstein_discrete(p, q, g, 1.0) == pytest.approx(0.5, abs=1e-9)

    def test_order_validation(self):
        p = validate_marginal([0.5, 0.5])
        g = LossMatrix(np.zeros((2, 2)))
        with pytest.raises(DomainError):
            wasserstein_discrete(p, p, g, 0.5)

    def test_metric_properties_sampled(self):
        rng = np.random.default_rng(19)
        n = 6
        g = random_ground(rng, n)
        laws = [validate_marginal(rng.dirichlet(np.ones(n))) for _ in range(6)]
        for a in laws:
            assert wasserstein_discrete(a, a, g) <= 1e-10
        for a, b in zip(laws, laws[1:]):
            d1 = wasserstein_discrete(a, b, g)
            d2 = wasserstein_discrete(b, a, g)
            assert abs(d1 - d2) <= 1e-10
        for a, b, c in zip(laws, laws[1:], laws[2:]):
            dab = wasserstein_discrete(a, b, g)
            dbc = wasserstein_discrete(b, c, g)
            dac = wasserstein_discrete(a, c, g)
            assert dac <= dab + dbc + 1e-8


class TestLipschitzEstimate:
    def test_linear_loss(self):
        x = np.array([0.0, 1.0, 3.0])
        y = np.array([-1.0, 2.0])
        loss = LossMatrix(x[:, None] + y[None, :])
        gx = LossMatrix(np.abs(x[:, None] - x[None, :]))
        gy = LossMatrix(np.abs(y[:, None] - y[None, :]))
        assert lipschitz_estimate(loss, gx, gy) == pytest.approx(1.0, abs=1e-12)


class TestPerturbationSweep:
    def make_instance(self, rng, n=4):
        x = np.sort(rng.normal(size=n))
        y = np.sort(rng.normal(size=n))
        mu = validate_marginal(rng.dirichlet(np.ones(n)), labels=x.tolist())
        nu = validate_marginal(rng.dirichlet(np.ones(n)), labels=y.tolist())
        loss = LossMatrix(x[:, None] + y[None, :])
        return mu, nu, loss

    def test_zero_epsilon_row(self):
        rng = np.random.default_rng(3)
        mu, nu, loss = self.make_instance(rng)
        rep = perturbation_sweep(mu, nu, loss, 0.5, steps=3)
        last = rep.rows[-1]
        assert last.epsilon == 0.0
        assert last.delta_value == 0.0

    def test_full_mixing_step_matches_direct_solves(self):
        from riskbound.bounds import solve_mes
        from riskbound.core import ProbabilityVector
        rng = np.random.default_rng(7)
        mu, nu, loss = self.make_instance(rng, n=2)
        rep = perturbation_sweep(mu, nu, loss, 0.6, steps=1, include_zero=False)
        uni_mu = ProbabilityVector(np.full(2, 0.5), labels=mu.labels)
        uni_nu = ProbabilityVector(np.full(2, 0.5), labels=nu.labels)
        direct = abs(solve_mes(uni_mu, uni_nu, loss, 0.6).value
                     - solve_mes(mu, nu, loss, 0.6).value)
        assert rep.rows[0].delta_value == pytest.approx(direct, abs=1e-12)

    def test_bound_holds_on_every_row(self):
        rng = np.random.default_rng(11)
        for _ in range(4):
            mu, nu, loss = self.make_instance(rng)
            rep = perturbation_sweep(mu, nu, loss, 0.7, steps=6,
                                     seed=int(rng.integers(2 ** 32)))
            for row in rep.rows:
                assert row.delta_value <= row.bound + 1e-7

    def test_dirac_marginal_perturbation(self):
        # Dirac marginals: mixing moves mass eps to the other atom
        mu = validate_marginal([1.0, 0.0], labels=(0.0, 1.0))
        nu = validate_marginal([1.0, 0.0], labels=(0.0, 2.0))
        loss = LossMatrix(np.array([[0.0, 2.0], [1.0, 3.0]]))
        rep = perturbation_sweep(mu, nu, loss, 0.5, steps=5)
        for row in rep.rows:
            assert row.delta_value <= row.bound + 1e-7

    def test_trend_decays(self):
        rng = np.random.default_rng(23)
        mu, nu, loss = self.make_instance(rng, n=5)
        rep = perturbation_sweep(mu, nu, loss, 0.5, steps=8)
        assert rep.loglog_slope >= 0.5
        deltas = [r.delta_value for r in rep.rows[:-1]]
        assert deltas[-1] <= deltas[0]

    def test_resampling_scheme_runs(self):
        rng = np.random.default_rng(29)
        mu, nu, loss = self.make_instance(rng, n=3)
        rep = perturbation_sweep(mu, nu, loss, 0.5, scheme="resampling",
                                 steps=4, seed=42)
        assert rep.scheme == "resampling"
        assert len(rep.rows) == 5

    def test_grid_argument(self):
        rng = np.random.default_rng(31)
        mu, nu, loss = self.make_instance(rng, n=3)
        grid = SpectralGrid(z0=0.5, levels=np.array([0.5]), weights=np.array([0.5]))
        rep = perturbation_sweep(mu, nu, loss, grid, steps=3)
        assert all(r.delta_value <= r.bound + 1e-7 for r in rep.rows)


class TestHolderCheck:
    def test_equal_couplings(self):
        loss = LossMatrix(np.array([[0.0, 1.0], [1.0, 2.0]]))
        g = LossMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
        pi = Coupling(np.array([[0.5, 0.0], [0.0, 0.5]]))
        lhs, rhs, ok = holder_sensitivity_check(loss, pi, pi, SpectralGrid.dirac(0.5),
                                                c_q=1.0, q=1.0, r=1.0,
                                                ground_x=g, ground_y=g)
        assert lhs == 0.0
        assert rhs == pytest.approx(0.0, abs=1e-10)
        assert ok

    def test_sum_loss_es_grid(self):
        x = np.array([0.0, 1.0])
        y = np.array([0.0, 1.0])
        loss = LossMatrix(x[:, None] + y[None, :])
        g = LossMatrix(np.abs(x[:, None] - x[None, :]))
        pi_co = Coupling(np.array([[0.5, 0.0], [0.0, 0.5]]))
        pi_anti = Coupling(np.array([[0.0, 0.5], [0.5, 0.0]]))
        lhs, rhs, ok = holder_sensitivity_check(loss, pi_co, pi_anti,
                                                SpectralGrid.dirac(0.5),
                                                c_q=1.0, q=1.0, r=1.0,
                                                ground_x=g, ground_y=g)
        assert ok
        assert lhs <= rhs + 1e-7

    def test_kantorovich_rubinstein_reduction(self):
        # flat spectrum, r = q = 1: |E1[L] - E2[L]| <= C_1 W_1
        rng = np.random.default_rng(5)
        x = np.sort(rng.normal(size=3))
        y = np.sort(rng.normal(size=3))
        loss = LossMatrix(x[:, None] + y[None, :])
        gx = LossMatrix(np.abs(x[:, None] - x[None, :]))
        gy = LossMatrix(np.abs(y[:, None] - y[None, :]))
        grid = SpectralGrid(z0=1.0, levels=np.array([]), weights=np.array([]))
        mu = rng.dirichlet(np.ones(3))
        nu = rng.dirichlet(np.ones(3))
        pi1 = Coupling(np.outer(mu, nu))
        pi2 = Coupling(np.diag(mu) @ np.ones((3, 3)) * nu[None, :])  # same marginals
        lhs, rhs, ok = holder_sensitivity_check(loss, pi1, pi2, grid,
                                                c_q=1.0, q=1.0, r=1.0,
                                                ground_x=gx, ground_y=gy)
        e1 = float((loss.values * pi1.matrix).sum())
        e2 = float((loss.values * pi2.matrix).sum())
        assert lhs == pytest.approx(abs(e1 - e2), abs=1e-12)
        assert ok

    def test_invalid_holder_data(self):
        loss = LossMatrix(np.zeros((2, 2)))
        g = LossMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
        pi = Coupling(np.full((2, 2), 0.25))
        with pytest.raises(InvalidHolderData):
            holder_sensitivity_check(loss, pi, pi, SpectralGrid.dirac(0.5),
                                     c_q=-1.0, q=1.0, r=1.0, ground_x=g, ground_y=g)
        with pytest.raises(InvalidHolderData):
            holder_sensitivity_check(loss, pi, pi, SpectralGrid.dirac(0.5),
                                     c_q=1.0, q=2.0, r=1.0, ground_x=g, ground_y=g)
        with pytest.raises(InvalidHolderData):
            holder_sensitivity_check(loss, pi, pi, SpectralGrid.dirac(0.5),
                                     c_q=1.0, q=0.5, r=1.0, ground_x=g, ground_y=g,
                                     r_q=1.5)


class TestGroundFromLabels:
    def test_numeric_labels(self):
        p = validate_marginal([0.5, 0.5], labels=(0.0, 3.0))
        g = ground_from_labels(p)
        assert g.values[0, 1] == 3.0

    def test_fallback_discrete(self):
        p = validate_marginal([0.5, 0.5], labels=("a", "b"))
        g = ground_from_labels(p)
        assert np.array_equal(g.values, 1.0 - np.eye(2))
