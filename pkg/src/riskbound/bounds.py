"""
Worst-case risk bounds over all couplings of two fixed marginals.

``solve_mes`` maximizes Expected Shortfall of L(X,Y) at level alpha over
Pi(mu, nu) by solving the lifted linear program in the pair (pi, Theta):

    max  sum_ij L_ij Theta_ij
    s.t. row sums of pi = mu,  column sums of pi = nu,
         Theta_ij <= (1-alpha)^{-1} pi_ij,   sum_ij Theta_ij = 1,
         pi, Theta >= 0.

``solve_msp`` generalizes to a spectral grid: one shared pi with a tail
variable Theta^k per grid level, objective z0 E_pi[L] + sum_k w_k (L.Theta^k).
The u = 0 atom is always carried by the expectation term, never by a level.

Every solve returns a dual certificate (phi, psi, rho, beta) that is checked
against weak duality; ``brute_force_mes`` provides the independent oracle

    min over beta of  beta + (1-alpha)^{-1} * OTmax(mu, nu, (L - beta)+)

evaluated by golden-section over the convex outer function, with the inner
transport additionally verified by exhaustive vertex enumeration on tiny
instances.  The two routes share no LP assembly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import (
    AlphaOutOfRange,
    CertificateInvalid,
    Coupling,
    DimensionMismatch,
    InvalidParams,
    LossMatrix,
    NumericalFailure,
    ProbabilityVector,
    ProblemTooLarge,
    SpectralGrid,
    check_instance,
)
from .lpsolver import LinearProgram, solve_lp, solve_transport, transport_polytope_vertices
from .riskmeasures import DiscreteLaw, law_from_coupling, var

MSP_MAX_CELLS_TIMES_LEVELS = 5_000_000
_WEAK_DUALITY_TOL = 1e-9
_GAP_TOL = 1e-7
_CERT_FEAS_TOL = 1e-8


# ---------------------------------------------------------------------------
# Certificates and solution containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualCertificate:
    """Feasible dual data proving an upper bound on the primal value.

    For MES: scalar ``beta`` plus the slack matrix ``rho`` satisfying
    (1-alpha)(phi_i + psi_j) >= rho_ij,  rho_ij + beta >= L_ij,  rho >= 0.
    For MSP: ``beta`` holds one entry per grid level (as beta(u_k)), ``rho``
    is None, and ``beta0`` covers the u = 0 atom whenever z0 > 0; the cover
    condition is phi_i + psi_j >= C^beta(x_i, y_j).
    """

    phi: np.ndarray
    psi: np.ndarray
    beta: float | np.ndarray
    rho: np.ndarray | None = None
    beta0: float | None = None

    def value(self, mu: ProbabilityVector, nu: ProbabilityVector,
              grid: SpectralGrid | None = None) -> float:
        """Dual objective: an upper bound on the primal value (weak duality)."""
        base = float(self.phi @ mu.weights + self.psi @ nu.weights)
        if grid is None:
            return base + float(self.beta)
        extra = float(np.dot(grid.weights, np.atleast_1d(self.beta))) if grid.n_levels else 0.0
        if grid.z0 > 0.0:
            extra += grid.z0 * float(self.beta0)
        return base + extra


@dataclass(frozen=True)
class GapReport:
    primal_value: float
    dual_value: float
    gap: float
    primal_residuals: dict
    dual_residuals: dict


@dataclass(frozen=True)
class MesSolution:
    """Optimal value with primal pair (pi*, Theta*) and a dual certificate."""

    value: float
    coupling: Coupling
    theta: np.ndarray
    certificate: DualCertificate
    gap: float
    alpha: float

    def __post_init__(self) -> None:
        inv = 1.0 / (1.0 - self.alpha)
        th = np.asarray(self.theta, dtype=float)
        if th.shape != self.coupling.matrix.shape:
            raise DimensionMismatch("theta must be coupling-shaped")
        if np.any(th < -1e-9) or np.any(th > inv * self.coupling.matrix + 1e-9):
            raise NumericalFailure("theta violates the density bound (1-alpha)^{-1} pi")
        if abs(th.sum() - 1.0) > 1e-9:
            raise NumericalFailure(f"theta mass {th.sum()} != 1")
        if self.gap > _GAP_TOL:
            raise NumericalFailure(f"duality gap {self.gap} exceeds {_GAP_TOL}")
        th = th.copy()
        th.flags.writeable = False
        object.__setattr__(self, "theta", th)


@dataclass(frozen=True)
class MspSolution:
    value: float
    coupling: Coupling
    thetas: np.ndarray          # (K, N_X, N_Y); one tail measure per level
    betas: np.ndarray           # VaR_{u_k, pi*}(L) per level
    certificate: DualCertificate
    gap: float
    grid: SpectralGrid

    def __post_init__(self) -> None:
        if self.gap > _GAP_TOL:
            raise NumericalFailure(f"duality gap {self.gap} exceeds {_GAP_TOL}")


# ---------------------------------------------------------------------------
# LP assembly
# ---------------------------------------------------------------------------


def _require_alpha(alpha: float) -> float:
    if not (0.0 < alpha < 1.0):
        raise AlphaOutOfRange(f"alpha must lie in (0,1), got {alpha}")
    return float(alpha)


def build_mes_lp(mu: ProbabilityVector, nu: ProbabilityVector, loss: LossMatrix,
                 alpha: float) -> LinearProgram:
    """The lifted MES linear program; variables ordered (pi, Theta) row-major."""
    check_instance(mu, nu, loss)
    a = _require_alpha(alpha)
    nx, ny = loss.shape
    n = nx * ny
    inv = 1.0 / (1.0 - a)
    rows = np.concatenate([
        np.repeat(np.arange(nx), ny),            # row sums of pi
        nx + np.tile(np.arange(ny), nx),         # column sums of pi
        np.full(n, nx + ny),                     # total Theta mass
    ])
    cols = np.concatenate([np.arange(n), np.arange(n), n + np.arange(n)])
    a_eq = sp.csr_matrix((np.ones(3 * n), (rows, cols)), shape=(nx + ny + 1, 2 * n))
    b_eq = np.concatenate([mu.weights, nu.weights, [1.0]])
    r = np.repeat(np.arange(n), 2)
    c = np.empty(2 * n, dtype=np.int64)
    c[0::2] = np.arange(n)
    c[1::2] = n + np.arange(n)
    v = np.empty(2 * n)
    v[0::2] = -inv
    v[1::2] = 1.0
    a_ub = sp.csr_matrix((v, (r, c)), shape=(n, 2 * n))
    obj = np.concatenate([np.zeros(n), loss.values.ravel()])
    return LinearProgram(sense="max", c=obj, a_ub=a_ub, b_ub=np.zeros(n),
                         a_eq=a_eq, b_eq=b_eq)


def build_msp_lp(mu: ProbabilityVector, nu: ProbabilityVector, loss: LossMatrix,
                  grid: SpectralGrid) -> LinearProgram:
    """Single-pi, per-level-Theta lift of the spectral objective."""
    nx, ny = loss.shape
    n = nx * ny
    K = grid.n_levels
    lvec = loss.values.ravel()
    nvar = (K + 1) * n
    eq_rows = [np.repeat(np.arange(nx), ny), nx + np.tile(np.arange(ny), nx)]
    eq_cols = [np.arange(n), np.arange(n)]
    for k in range(K):
        eq_rows.append(np.full(n, nx + ny + k))
        eq_cols.append((k + 1) * n + np.arange(n))
    a_eq = sp.csr_matrix(
        (np.ones((K + 2) * n), (np.concatenate(eq_rows), np.concatenate(eq_cols))),
        shape=(nx + ny + K, nvar))
    b_eq = np.concatenate([mu.weights, nu.weights, np.ones(K)])
    ub_r = np.repeat(np.arange(K * n), 2)
    ub_c = np.empty(2 * K * n, dtype=np.int64)
    ub_v = np.empty(2 * K * n)
    for k in range(K):
        inv = 1.0 / (1.0 - grid.levels[k])
        s = slice(2 * k * n, 2 * (k + 1) * n)
        cc = ub_c[s]; vv = ub_v[s]
        cc[0::2] = np.arange(n)
        cc[1::2] = (k + 1) * n + np.arange(n)
        vv[0::2] = -inv
        vv[1::2] = 1.0
    a_ub = sp.csr_matrix((ub_v, (ub_r, ub_c)), shape=(K * n, nvar))
    obj = np.concatenate([grid.z0 * lvec] + [w * lvec for w in grid.weights])
    return LinearProgram(sense="max", c=obj, a_ub=a_ub, b_ub=np.zeros(K * n),
                         a_eq=a_eq, b_eq=b_eq)


# ---------------------------------------------------------------------------
# MES
# ---------------------------------------------------------------------------


def _split_support(mu: ProbabilityVector, nu: ProbabilityVector):
    keep_i = np.nonzero(mu.weights > 0.0)[0]
    keep_j = np.nonzero(nu.weights > 0.0)[0]
    return keep_i, keep_j


def solve_mes(mu: ProbabilityVector, nu: ProbabilityVector, loss: LossMatrix,
              alpha: float, engine: str = "auto") -> MesSolution:
    """Maximum Expected Shortfall with a certified dual and zero LP gap.

    Zero-mass atoms are dropped before assembly; the returned coupling,
    tail measure, and certificate are re-expanded so the certificate covers
    every cell of the original instance.  Potentials are normalized to
    phi[0] = 0.
    """
    check_instance(mu, nu, loss)
    a = _require_alpha(alpha)
    nx, ny = loss.shape
    keep_i, keep_j = _split_support(mu, nu)
    mu_r = ProbabilityVector(mu.weights[keep_i])
    nu_r = ProbabilityVector(nu.weights[keep_j])
    loss_r = LossMatrix(loss.values[np.ix_(keep_i, keep_j)])
    lp = build_mes_lp(mu_r, nu_r, loss_r, a)
    sol = solve_lp(lp, engine=engine)
    if sol.status != "optimal":
        raise NumericalFailure(f"MES LP terminated with status {sol.status}")
    mm, nn = loss_r.shape
    n = mm * nn
    pi = np.zeros((nx, ny))
    th = np.zeros((nx, ny))
    pi[np.ix_(keep_i, keep_j)] = sol.x[:n].reshape(mm, nn)
    th[np.ix_(keep_i, keep_j)] = sol.x[n:].reshape(mm, nn)
    phi = np.zeros(nx)
    psi = np.zeros(ny)
    phi[keep_i] = sol.duals_eq[:mm]
    psi[keep_j] = sol.duals_eq[mm:mm + nn]
    beta = float(sol.duals_eq[mm + nn])
    rho = np.maximum(loss.values - beta, 0.0)
    rho[np.ix_(keep_i, keep_j)] = sol.duals_ub.reshape(mm, nn)
    inv = 1.0 / (1.0 - a)
    drop_i = np.setdiff1d(np.arange(nx), keep_i)
    drop_j = np.setdiff1d(np.arange(ny), keep_j)
    if drop_i.size:
        phi[drop_i] = (inv * rho[drop_i][:, keep_j] - psi[keep_j][None, :]).max(axis=1)
    if drop_j.size:
        psi[drop_j] = (inv * rho[:, drop_j] - phi[:, None]).max(axis=0)
    shift = phi[0]
    phi = phi - shift
    psi = psi + shift
    cert = DualCertificate(phi=phi, psi=psi, beta=beta, rho=rho)
    value = float(sol.objective)
    gap = abs(cert.value(mu, nu) - value)
    return MesSolution(value=value, coupling=Coupling(pi), theta=th,
                       certificate=cert, gap=gap, alpha=a)


def bracket_beta(mu: ProbabilityVector, nu: ProbabilityVector, loss: LossMatrix,
                 alpha: float) -> tuple[float, float]:
    """An interval certain to contain every tail-threshold minimizer, for
    every coupling at once.  On finite supports the loss range suffices."""
    check_instance(mu, nu, loss)
    _require_alpha(alpha)
    return float(loss.values.min() - 1.0), float(loss.values.max() + 1.0)


def brute_force_mes(mu: ProbabilityVector, nu: ProbabilityVector, loss: LossMatrix,
                    alpha: float, beta_grid_size: int = 33) -> float:
    """Independent MES oracle via the scalarized route.

    Minimizes  f(beta) = beta + (1-alpha)^{-1} OTmax(mu, nu, (L-beta)+)
    with a coarse grid bracket followed by golden-section (f is convex: a
    pointwise maximum over couplings of convex functions of beta).  On
    instances of at most 16 cells the transport value at the returned beta
    is re-verified against exhaustive vertex enumeration.
    """
    check_instance(mu, nu, loss)
    a = _require_alpha(alpha)
    if loss.values.size > 100:
        raise ProblemTooLarge("brute-force oracle limited to 100 cells")
    if beta_grid_size < 3:
        raise InvalidParams("beta_grid_size must be at least 3")
    inv = 1.0 / (1.0 - a)

    def f(beta: float) -> float:
        value, _, _ = solve_transport(
            mu, nu, LossMatrix(np.maximum(loss.values - beta, 0.0)), "max")
        return beta + inv * value

    k_star, big_k = bracket_beta(mu, nu, loss, alpha)
    grid = np.linspace(k_star, big_k, beta_grid_size)
    vals = [f(b) for b in grid]
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, beta_grid_size - 1)]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    best = min(vals[i], fc, fd)
    while hi - lo > 1e-7:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
            best = min(best, fc)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
            best = min(best, fd)
    beta_hat = 0.5 * (lo + hi)
    if loss.values.size <= 16:
        shifted = np.maximum(loss.values - beta_hat, 0.0)
        lp_value, _, _ = solve_transport(mu, nu, LossMatrix(shifted), "max")
        enum_value = max(float((shifted * v).sum())
                         for v in transport_polytope_vertices(mu, nu))
        if abs(lp_value - enum_value) > 1e-9:
            raise NumericalFailure(
                f"transport vertex enumeration disagrees with the LP: "
                f"{enum_value} vs {lp_value}")
    return float(min(best, f(beta_hat)))


# ---------------------------------------------------------------------------
# C^beta and MSP
# ---------------------------------------------------------------------------


def c_beta_evaluate(loss: LossMatrix, grid: SpectralGrid, beta) -> LossMatrix:
    """Entrywise  sum_k g_k max(L - beta_k, 0)  against the grid's
    gamma-masses.  ``beta`` has one entry per level, optionally preceded by
    beta0 for the u = 0 atom (required when z0 > 0)."""
    b = np.atleast_1d(np.asarray(beta, dtype=float))
    gammas = grid.gamma_weights
    levels_only = b.size == grid.n_levels
    if not levels_only:
        if b.size != grid.n_levels + 1:
            raise DimensionMismatch(
                f"beta has {b.size} entries for {grid.n_levels} levels")
        gammas = np.concatenate([[grid.z0], gammas])
    elif grid.z0 > 0.0:
        raise DimensionMismatch("grid has a u=0 atom: include beta0 as the first entry")
    out = np.zeros(loss.shape)
    for g, bk in zip(gammas, b):
        if g:
            out += g * np.maximum(loss.values - bk, 0.0)
    return LossMatrix(out)


def solve_msp(mu: ProbabilityVector, nu: ProbabilityVector, loss: LossMatrix,
              grid: SpectralGrid, engine: str = "auto") -> MspSolution:
    """Maximum spectral measure against a grid, with an LP-certified dual.

    The certificate's per-level beta comes from the Theta-mass row duals
    (rescaled by the level weights); its phi absorbs the u = 0 atom through
    beta0 = min L - 1, which is exact on a finite support.
    """
    check_instance(mu, nu, loss)
    nx, ny = loss.shape
    K = grid.n_levels
    if loss.values.size * max(K, 1) > MSP_MAX_CELLS_TIMES_LEVELS:
        raise ProblemTooLarge("cells x levels exceeds the desk-scale envelope")
    if K == 0:
        # sigma == 1: plain optimal transport in expectation
        value, plan, (phi, psi) = solve_transport(mu, nu, loss, "max", engine=engine)
        beta0 = float(loss.values.min() - 1.0)
        cert = DualCertificate(phi=phi - beta0, psi=psi, beta=np.zeros(0), beta0=beta0)
        gap = abs(cert.value(mu, nu, grid) - value)
        return MspSolution(value=value, coupling=plan, thetas=np.zeros((0, nx, ny)),
                           betas=np.zeros(0), certificate=cert, gap=gap, grid=grid)
    keep_i, keep_j = _split_support(mu, nu)
    mu_r = ProbabilityVector(mu.weights[keep_i])
    nu_r = ProbabilityVector(nu.weights[keep_j])
    loss_r = LossMatrix(loss.values[np.ix_(keep_i, keep_j)])
    mm, nn = loss_r.shape
    n = mm * nn
    lp = build_msp_lp(mu_r, nu_r, loss_r, grid)
    sol = solve_lp(lp, engine=engine)
    if sol.status != "optimal":
        raise NumericalFailure(f"MSP LP terminated with status {sol.status}")
    pi = np.zeros((nx, ny))
    pi[np.ix_(keep_i, keep_j)] = sol.x[:n].reshape(mm, nn)
    thetas = np.zeros((K, nx, ny))
    for k in range(K):
        thetas[k][np.ix_(keep_i, keep_j)] = sol.x[(k + 1) * n:(k + 2) * n].reshape(mm, nn)
    phi = np.zeros(nx)
    psi = np.zeros(ny)
    phi[keep_i] = sol.duals_eq[:mm]
    psi[keep_j] = sol.duals_eq[mm:mm + nn]
    beta_lp = sol.duals_eq[mm + nn:]
    beta_levels = beta_lp / grid.weights
    beta0 = float(loss.values.min() - 1.0)
    if grid.z0 > 0.0:
        phi = phi - grid.z0 * beta0
        cert_beta_full = np.concatenate([[beta0], beta_levels])
    else:
        cert_beta_full = beta_levels
    cover = c_beta_evaluate(loss, grid, cert_beta_full).values
    drop_i = np.setdiff1d(np.arange(nx), keep_i)
    drop_j = np.setdiff1d(np.arange(ny), keep_j)
    if drop_i.size:
        phi[drop_i] = (cover[drop_i][:, keep_j] - psi[keep_j][None, :]).max(axis=1)
    if drop_j.size:
        psi[drop_j] = (cover[:, drop_j] - phi[:, None]).max(axis=0)
    shift = phi[0]
    phi = phi - shift
    psi = psi + shift
    cert = DualCertificate(phi=phi, psi=psi, beta=beta_levels,
                           beta0=beta0 if grid.z0 > 0.0 else None)
    value = float(sol.objective)
    gap = abs(cert.value(mu, nu, grid) - value)
    law = law_from_coupling(loss, Coupling(pi))
    betas = np.array([var(law, float(u)) for u in grid.levels])
    return MspSolution(value=value, coupling=Coupling(pi), thetas=thetas, betas=betas,
                       certificate=cert, gap=gap, grid=grid)


# ---------------------------------------------------------------------------
# Duality verification
# ---------------------------------------------------------------------------


def verify_duality(sol: MesSolution | MspSolution, loss: LossMatrix,
                   mu: ProbabilityVector, nu: ProbabilityVector) -> GapReport:
    """Recompute primal and dual values from raw solution data and check
    weak duality and the gap tolerance; raise ``CertificateInvalid`` with
    the violated constraints otherwise."""
    check_instance(mu, nu, loss)
    violations: list[str] = []
    cert = sol.certificate
    pi = sol.coupling.matrix
    row_res, col_res = sol.coupling.marginal_residuals(mu, nu)
    if isinstance(sol, MesSolution):
        inv = 1.0 / (1.0 - sol.alpha)
        primal = float((loss.values * sol.theta).sum())
        theta_box = float(np.maximum(sol.theta - inv * pi, 0.0).max(initial=0.0))
        mass_res = abs(float(sol.theta.sum()) - 1.0)
        dual = cert.value(mu, nu)
        rho = cert.rho
        lhs = (1.0 - sol.alpha) * (cert.phi[:, None] + cert.psi[None, :])
        cover_res = float(np.maximum(rho - lhs, 0.0).max(initial=0.0))
        slack_res = float(np.maximum(loss.values - rho - cert.beta, 0.0).max(initial=0.0))
        rho_neg = float(np.maximum(-rho, 0.0).max(initial=0.0))
        if cover_res > _CERT_FEAS_TOL:
            violations.append(f"(1-a)(phi+psi) >= rho violated by {cover_res:.3e}")
        if slack_res > _CERT_FEAS_TOL:
            violations.append(f"rho + beta >= L violated by {slack_res:.3e}")
        if rho_neg > _CERT_FEAS_TOL:
            violations.append(f"rho >= 0 violated by {rho_neg:.3e}")
        dual_res = {"cover": cover_res, "slack": slack_res, "rho_nonneg": rho_neg}
    else:
        grid = sol.grid
        primal = grid.z0 * float((loss.values * pi).sum())
        for k in range(grid.n_levels):
            primal += grid.weights[k] * float((loss.values * sol.thetas[k]).sum())
        theta_box = 0.0
        mass_res = 0.0
        for k in range(grid.n_levels):
            invk = 1.0 / (1.0 - grid.levels[k])
            theta_box = max(theta_box, float(np.maximum(sol.thetas[k] - invk * pi, 0.0).max(initial=0.0)))
            mass_res = max(mass_res, abs(float(sol.thetas[k].sum()) - 1.0))
        dual = cert.value(mu, nu, grid)
        beta_full = (np.concatenate([[cert.beta0], np.atleast_1d(cert.beta)])
                     if grid.z0 > 0.0 else np.atleast_1d(cert.beta))
        cover = c_beta_evaluate(loss, grid, beta_full).values
        cover_res = float(np.maximum(cover - cert.phi[:, None] - cert.psi[None, :], 0.0).max(initial=0.0))
        if cover_res > _CERT_FEAS_TOL:
            violations.append(f"phi + psi >= C^beta violated by {cover_res:.3e}")
        dual_res = {"cover": cover_res}
    if row_res > 1e-9 or col_res > 1e-9:
        violations.append(f"coupling marginals off by ({row_res:.3e}, {col_res:.3e})")
    if theta_box > 1e-9:
        violations.append(f"theta density bound violated by {theta_box:.3e}")
    if mass_res > 1e-9:
        violations.append(f"theta mass off by {mass_res:.3e}")
    gap = abs(dual - primal)
    if dual < primal - _WEAK_DUALITY_TOL:
        violations.append(f"weak duality violated: dual {dual} < primal {primal}")
    if gap > _GAP_TOL:
        violations.append(f"duality gap {gap:.3e} exceeds {_GAP_TOL}")
    if violations:
        raise CertificateInvalid("; ".join(violations))
    return GapReport(primal_value=primal, dual_value=dual, gap=gap,
                     primal_residuals={"row": row_res, "col": col_res,
                                       "theta_box": theta_box, "theta_mass": mass_res},
                     dual_residuals=dual_res)


# ---------------------------------------------------------------------------
# Solution (de)serialization: {value, gap, coupling, theta, certificate}
# ---------------------------------------------------------------------------


def mes_solution_to_dict(sol: MesSolution) -> dict:
    return {
        "kind": "mes",
        "alpha": sol.alpha,
        "value": sol.value,
        "gap": sol.gap,
        "coupling": sol.coupling.matrix.tolist(),
        "theta": sol.theta.tolist(),
        "certificate": {
            "phi": sol.certificate.phi.tolist(),
            "psi": sol.certificate.psi.tolist(),
            "beta": float(sol.certificate.beta),
            "rho": sol.certificate.rho.tolist(),
        },
    }


def mes_solution_from_dict(d: dict) -> MesSolution:
    cert = DualCertificate(
        phi=np.asarray(d["certificate"]["phi"], dtype=float),
        psi=np.asarray(d["certificate"]["psi"], dtype=float),
        beta=float(d["certificate"]["beta"]),
        rho=np.asarray(d["certificate"]["rho"], dtype=float),
    )
    return MesSolution(value=float(d["value"]), coupling=Coupling(np.asarray(d["coupling"])),
                       theta=np.asarray(d["theta"], dtype=float), certificate=cert,
                       gap=float(d["gap"]), alpha=float(d["alpha"]))


def msp_solution_to_dict(sol: MspSolution) -> dict:
    cert = {
        "phi": sol.certificate.phi.tolist(),
        "psi": sol.certificate.psi.tolist(),
        "beta": np.atleast_1d(sol.certificate.beta).tolist(),
    }
    if sol.certificate.beta0 is not None:
        cert["beta0"] = float(sol.certificate.beta0)
    return {
        "kind": "msp",
        "grid": {"z0": sol.grid.z0, "levels": sol.grid.levels.tolist(),
                 "weights": sol.grid.weights.tolist()},
        "value": sol.value,
        "gap": sol.gap,
        "coupling": sol.coupling.matrix.tolist(),
        "theta": sol.thetas.tolist(),
        "betas": sol.betas.tolist(),
        "certificate": cert,
    }


def msp_solution_from_dict(d: dict) -> MspSolution:
    grid = SpectralGrid(z0=float(d["grid"]["z0"]),
                        levels=np.asarray(d["grid"]["levels"], dtype=float),
                        weights=np.asarray(d["grid"]["weights"], dtype=float))
    cert = DualCertificate(
        phi=np.asarray(d["certificate"]["phi"], dtype=float),
        psi=np.asarray(d["certificate"]["psi"], dtype=float),
        beta=np.asarray(d["certificate"]["beta"], dtype=float),
        beta0=d["certificate"].get("beta0"),
    )
    thetas = np.asarray(d["theta"], dtype=float)
    if thetas.size == 0:
        nx, ny = np.asarray(d["coupling"]).shape
        thetas = thetas.reshape(0, nx, ny)
    return MspSolution(value=float(d["value"]), coupling=Coupling(np.asarray(d["coupling"])),
                       thetas=thetas,
                       betas=np.asarray(d["betas"], dtype=float), certificate=cert,
                       gap=float(d["gap"]), grid=grid)


__all__ = [
    "DualCertificate",
    "GapReport",
    "MesSolution",
    "MspSolution",
    "bracket_beta",
    "brute_force_mes",
    "build_mes_lp",
    "build_msp_lp",
    "c_beta_evaluate",
    "mes_solution_from_dict",
    "mes_solution_to_dict",
    "msp_solution_from_dict",
    "msp_solution_to_dict",
    "solve_mes",
    "solve_msp",
    "verify_duality",
]
