"""
Domain types for dependence-uncertainty risk bounds.

Everything downstream works with four kinds of objects:

- ``ProbabilityVector`` -- a marginal law on a finite support.
- ``LossMatrix``        -- the loss evaluated on the product of two supports.
- ``Coupling``          -- a joint law with prescribed marginals.
- ``SpectralFunction`` / ``SpectralGrid`` -- a risk spectrum sigma and its
  mixing-measure decomposition.

The spectral calculus implemented here: a nonnegative, nondecreasing,
right-continuous sigma on [0,1) with unit integral induces

- ``gamma``: the measure whose distribution function is sigma, and
- ``Gamma``: the probability measure with d(Gamma) = (1-u) d(gamma),

which turns a sigma-weighted average of quantiles into a Gamma-weighted
average of Expected Shortfalls.  ``Gamma`` may place an atom ``z0 = sigma(0)``
at u = 0 (the mean term); the part on (0,1) is discretized to a finite
``SpectralGrid``.  Grids are exact for atomic Gamma (Expected Shortfall,
piecewise-constant sigma) and equal-mass midpoint quantizations otherwise.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

# Input-validation and structural tolerances (double precision headroom
# above simplex round-off; see individual checks).
WEIGHT_TOL = 1e-12      # probability vectors: |sum - 1| below this renormalizes
COUPLING_TOL = 1e-9     # couplings: marginal residual allowance
SIGMA_NORM_TOL = 1e-8   # spectral functions: |integral - 1| allowance
GRID_MASS_TOL = 1e-10   # spectral grids: |z0 + sum(w) - 1| allowance

# Boundedness cap for the square-root spectrum family; sigma is evaluated
# as constant on [POWER_SQRT_UMAX, 1).
POWER_SQRT_UMAX = 1.0 - 1e-6


# ---------------------------------------------------------------------------
# Semantic errors
# ---------------------------------------------------------------------------


class RiskBoundError(Exception):
    """Base error for the riskbound package."""


class NegativeWeight(RiskBoundError):
    """A probability weight is negative."""


class SumNotOne(RiskBoundError):
    """Probability weights do not sum to one within tolerance."""


class Empty(RiskBoundError):
    """An empty support was supplied."""


class AlphaOutOfRange(RiskBoundError):
    """Confidence level outside its admissible interval."""


class InvalidSpectrum(RiskBoundError):
    """Spectral function violates nonnegativity/monotonicity/normalization."""


class DimensionMismatch(RiskBoundError):
    """Array dimensions are inconsistent."""


class NumericalFailure(RiskBoundError):
    """A numerical routine could not certify its result."""


class ProblemTooLarge(RiskBoundError):
    """Instance exceeds the documented desk-scale envelope."""


class CertificateInvalid(RiskBoundError):
    """A dual certificate violates its feasibility constraints."""


class DirectionNotTangent(RiskBoundError):
    """Perturbation direction is not tangent to the probability simplex."""


class TooFewSamples(RiskBoundError):
    """Not enough samples for the requested statistic."""


class InvalidHolderData(RiskBoundError):
    """Holder-continuity data (constant, exponents) are inadmissible."""


class InvalidParams(RiskBoundError):
    """Model parameters outside their admissible ranges."""


class DomainError(RiskBoundError):
    """Function argument outside its mathematical domain."""


# ---------------------------------------------------------------------------
# Probability vectors and loss matrices
# ---------------------------------------------------------------------------


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ProbabilityVector:
    """A finite marginal law: nonnegative weights summing to one.

    ``labels`` optionally carries support-point identifiers (for empirical
    laws these are the sampled coordinates); they take no part in any
    computation except ground-metric construction.
    """

    weights: np.ndarray
    labels: tuple | None = None

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise Empty("probability vector must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(w)):
            raise NegativeWeight("probability weights must be finite")
        if np.any(w < 0.0):
            raise NegativeWeight(f"negative weight at index {int(np.argmin(w))}: {w.min()}")
        s = float(w.sum())
        dev = abs(s - 1.0)
        if dev >= WEIGHT_TOL:
            raise SumNotOne(f"weights sum to {s!r}, deviation {dev:.3e} >= {WEIGHT_TOL}")
        if dev != 0.0:
            w = w / s
        if self.labels is not None and len(self.labels) != w.size:
            raise DimensionMismatch(
                f"{len(self.labels)} labels for {w.size} weights"
            )
        object.__setattr__(self, "weights", _freeze(w))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self) -> int:
        return int(self.weights.size)

    @property
    def size(self) -> int:
        return int(self.weights.size)


def validate_marginal(weights: Sequence[float], labels: Sequence | None = None) -> ProbabilityVector:
    """Validate raw weights into a :class:`ProbabilityVector`.

    Raises :class:`NegativeWeight`, :class:`SumNotOne` (deviation >= 1e-12)
    or :class:`Empty`.  Sums deviating by less than 1e-12 are renormalized.
    """
    return ProbabilityVector(np.asarray(weights, dtype=float), labels=tuple(labels) if labels is not None else None)


@dataclass(frozen=True)
class LossMatrix:
    """Loss values L(x_i, y_j) on the product of two finite supports."""

    values: np.ndarray
    row_labels: tuple | None = None
    col_labels: tuple | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise DimensionMismatch("loss matrix must be a nonempty 2-D array")
        if not np.all(np.isfinite(v)):
            raise NumericalFailure("loss matrix contains non-finite entries")
        if self.row_labels is not None and len(self.row_labels) != v.shape[0]:
            raise DimensionMismatch("row labels do not match loss shape")
        if self.col_labels is not None and len(self.col_labels) != v.shape[1]:
            raise DimensionMismatch("column labels do not match loss shape")
        object.__setattr__(self, "values", _freeze(v))
        if self.row_labels is not None:
            object.__setattr__(self, "row_labels", tuple(self.row_labels))
        if self.col_labels is not None:
            object.__setattr__(self, "col_labels", tuple(self.col_labels))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]


def check_instance(mu: ProbabilityVector, nu: ProbabilityVector, loss: LossMatrix) -> None:
    """Require loss dimensions to match the paired marginals."""
    if loss.shape != (mu.size, nu.size):
        raise DimensionMismatch(
            f"loss is {loss.shape[0]}x{loss.shape[1]} but marginals are {mu.size} and {nu.size}"
        )


@dataclass(frozen=True)
class Coupling:
    """A joint probability matrix; marginal agreement is checked on request."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.size == 0:
            raise DimensionMismatch("coupling must be a nonempty 2-D array")
        if not np.all(np.isfinite(m)):
            raise NumericalFailure("coupling contains non-finite entries")
        if m.min() < -COUPLING_TOL:
            raise NegativeWeight(f"coupling entry {m.min()} below -{COUPLING_TOL}")
        m = np.where(m < 0.0, 0.0, m)
        object.__setattr__(self, "matrix", _freeze(m))

    def marginal_residuals(self, mu: ProbabilityVector, nu: ProbabilityVector) -> tuple[float, float]:
        r = float(np.abs(self.matrix.sum(axis=1) - mu.weights).max())
        c = float(np.abs(self.matrix.sum(axis=0) - nu.weights).max())
        return r, c

    def require_marginals(self, mu: ProbabilityVector, nu: ProbabilityVector,
                          tol: float = COUPLING_TOL) -> None:
        if self.matrix.shape != (mu.size, nu.size):
            raise DimensionMismatch("coupling shape does not match marginals")
        r, c = self.marginal_residuals(mu, nu)
        if r > tol or c > tol:
            raise NumericalFailure(
                f"coupling marginal residuals ({r:.3e}, {c:.3e}) exceed {tol}"
            )


def coupling_between(matrix: np.ndarray, mu: ProbabilityVector, nu: ProbabilityVector) -> Coupling:
    """Construct a coupling and verify it lies in Pi(mu, nu)."""
    pi = Coupling(matrix)
    pi.require_marginals(mu, nu)
    return pi


# ---------------------------------------------------------------------------
# Spectral functions
# ---------------------------------------------------------------------------

_SIGMA_KINDS = ("expected-shortfall", "piecewise-constant", "power-sqrt", "table")


@dataclass(frozen=True)
class SpectralFunction:
    """A risk spectrum: nonnegative, nondecreasing, right-continuous on [0,1),
    bounded, with unit integral.

    Kinds
    -----
    expected-shortfall(alpha)
        sigma = (1-alpha)^{-1} 1_{[alpha,1)}.
    piecewise-constant(breakpoints, levels)
        sigma = levels[m] on [t_m, t_{m+1}); ``breakpoints`` are the interior
        t_1 < ... < t_{M-1}; the outer endpoints 0 and 1 are implicit.
    power-sqrt
        sigma(u) = 3(1 - sqrt(1-u)), capped at u = 1 - 1e-6 to stay bounded.
    table(u, sigma)
        continuous piecewise-linear interpolation of nodes (u_i, sigma_i)
        with u_0 = 0 and u_last = 1 (the final node is read as the left
        limit at 1).
    """

    kind: str
    alpha: float | None = None
    breakpoints: np.ndarray | None = None
    levels: np.ndarray | None = None
    table_u: np.ndarray | None = None
    table_sigma: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in _SIGMA_KINDS:
            raise InvalidSpectrum(f"unknown spectral kind {self.kind!r}")
        if self.kind == "expected-shortfall":
            a = self.alpha
            if a is None or not (0.0 <= a < 1.0):
                raise AlphaOutOfRange(f"expected-shortfall level must lie in [0,1), got {a}")
        elif self.kind == "piecewise-constant":
            b = np.asarray([] if self.breakpoints is None else self.breakpoints, dtype=float)
            s = np.asarray(self.levels, dtype=float)
            if s.ndim != 1 or s.size == 0:
                raise InvalidSpectrum("piecewise-constant sigma needs at least one level")
            if b.size != s.size - 1:
                raise InvalidSpectrum("need exactly len(levels) - 1 interior breakpoints")
            if b.size and (b.min() <= 0.0 or b.max() >= 1.0 or np.any(np.diff(b) <= 0.0)):
                raise InvalidSpectrum("interior breakpoints must be strictly increasing in (0,1)")
            if np.any(s < 0.0) or np.any(np.diff(s) < 0.0):
                raise InvalidSpectrum("sigma levels must be nonnegative and nondecreasing")
            edges = np.concatenate([[0.0], b, [1.0]])
            total = float(np.sum(s * np.diff(edges)))
            if abs(total - 1.0) > SIGMA_NORM_TOL:
                raise InvalidSpectrum(f"sigma integrates to {total}, not 1")
            object.__setattr__(self, "breakpoints", _freeze(b))
            object.__setattr__(self, "levels", _freeze(s))
        elif self.kind == "table":
            u = np.asarray(self.table_u, dtype=float)
            s = np.asarray(self.table_sigma, dtype=float)
            if u.ndim != 1 or u.size < 2 or u.shape != s.shape:
                raise InvalidSpectrum("table needs matching u/sigma arrays with >= 2 nodes")
            if u[0] != 0.0 or u[-1] != 1.0 or np.any(np.diff(u) <= 0.0):
                raise InvalidSpectrum("table nodes must increase strictly from 0 to 1")
            if np.any(s < 0.0) or np.any(np.diff(s) < -1e-15):
                raise InvalidSpectrum("table sigma must be nonnegative and nondecreasing")
            total = float(np.trapezoid(s, u))
            if abs(total - 1.0) > SIGMA_NORM_TOL:
                raise InvalidSpectrum(f"sigma integrates to {total}, not 1")
            object.__setattr__(self, "table_u", _freeze(u))
            object.__setattr__(self, "table_sigma", _freeze(s))
        # power-sqrt carries no parameters; the cap is a module constant.

    # -- factories ---------------------------------------------------------

    @classmethod
    def expected_shortfall(cls, alpha: float) -> "SpectralFunction":
        return cls(kind="expected-shortfall", alpha=float(alpha))

    @classmethod
    def piecewise_constant(cls, breakpoints: Sequence[float], levels: Sequence[float]) -> "SpectralFunction":
        return cls(kind="piecewise-constant",
                   breakpoints=np.asarray(breakpoints, dtype=float),
                   levels=np.asarray(levels, dtype=float))

    @classmethod
    def flat(cls) -> "SpectralFunction":
        """sigma identically one: the plain optimal-transport case."""
        return cls.piecewise_constant([], [1.0])

    @classmethod
    def power_sqrt(cls) -> "SpectralFunction":
        return cls(kind="power-sqrt")

    @classmethod
    def table(cls, u: Sequence[float], sigma: Sequence[float]) -> "SpectralFunction":
        return cls(kind="table", table_u=np.asarray(u, dtype=float),
                   table_sigma=np.asarray(sigma, dtype=float))

    # -- evaluation --------------------------------------------------------

    def sigma(self, u: np.ndarray | float) -> np.ndarray | float:
        """Evaluate sigma pointwise on [0,1)."""
        uu = np.asarray(u, dtype=float)
        if self.kind == "expected-shortfall":
            out = np.where(uu >= self.alpha, 1.0 / (1.0 - self.alpha), 0.0)
        elif self.kind == "piecewise-constant":
            edges = np.concatenate([self.breakpoints, [np.inf]])
            idx = np.searchsorted(edges, uu, side="right")
            out = self.levels[idx]
        elif self.kind == "power-sqrt":
            capped = np.minimum(uu, POWER_SQRT_UMAX)
            out = 3.0 * (1.0 - np.sqrt(1.0 - capped))
        else:  # table
            out = np.interp(uu, self.table_u, self.table_sigma)
        return out if np.ndim(u) else float(out)

    @property
    def z0(self) -> float:
        """Mass of gamma (and Gamma) at u = 0, i.e. sigma(0)."""
        return float(self.sigma(0.0))

    def sup_norm(self) -> float:
        if self.kind == "expected-shortfall":
            return 1.0 / (1.0 - self.alpha)
        if self.kind == "piecewise-constant":
            return float(self.levels[-1])
        if self.kind == "power-sqrt":
            return float(self.sigma(POWER_SQRT_UMAX))
        return float(self.table_sigma[-1])


# -- Gamma-tilde cumulative mass (the part of Gamma on (0,1)) ---------------


def _gamma_tilde_cdf(sf: SpectralFunction, u: np.ndarray) -> np.ndarray:
    """Cumulative Gamma-mass on (0, u] for the continuous kinds.

    Uses the closed-form antiderivatives: d(Gamma) = (1-u) sigma'(u) du away
    from atoms.
    """
    u = np.asarray(u, dtype=float)
    if sf.kind == "power-sqrt":
        # density (3/2) sqrt(1-u) on (0, umax); cdf 1 - (1-u)^{3/2}
        capped = np.minimum(u, POWER_SQRT_UMAX)
        return 1.0 - (1.0 - capped) ** 1.5
    if sf.kind == "table":
        nodes = sf.table_u
        slopes = np.diff(sf.table_sigma) / np.diff(nodes)
        # per-piece Gamma mass: slope * [(1-a)^2 - (1-b)^2] / 2
        a, b = nodes[:-1], nodes[1:]
        piece = slopes * ((1.0 - a) ** 2 - (1.0 - b) ** 2) / 2.0
        cum = np.concatenate([[0.0], np.cumsum(piece)])
        idx = np.clip(np.searchsorted(nodes, u, side="right") - 1, 0, len(slopes) - 1)
        ua = nodes[idx]
        part = slopes[idx] * ((1.0 - ua) ** 2 - (1.0 - np.maximum(u, ua)) ** 2) / 2.0
        return cum[idx] + part
    raise InvalidSpectrum(f"no continuous Gamma cdf for kind {sf.kind!r}")


def _gamma_tilde_quantile(sf: SpectralFunction, mass: np.ndarray) -> np.ndarray:
    """Invert the raw Gamma-tilde cdf at the requested masses."""
    mass = np.asarray(mass, dtype=float)
    if sf.kind == "power-sqrt":
        return 1.0 - (1.0 - mass) ** (2.0 / 3.0)
    # generic monotone bisection on the closed-form cdf
    lo = np.zeros_like(mass)
    hi = np.ones_like(mass)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        below = _gamma_tilde_cdf(sf, mid) < mass
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Spectral grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralGrid:
    """Finite decomposition of Gamma: atom ``z0`` at u = 0 plus weighted
    levels in (0,1).  ``gamma_weights`` are the matching gamma-masses
    g_k = w_k / (1 - u_k), so g_k (1 - u_k) = w_k holds by construction."""

    z0: float
    levels: np.ndarray
    weights: np.ndarray
    gamma_weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        u = np.asarray(self.levels, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if u.shape != w.shape or u.ndim != 1:
            raise DimensionMismatch("levels and weights must be matching 1-D arrays")
        if u.size and (u.min() <= 0.0 or u.max() >= 1.0 or np.any(np.diff(u) <= 0.0)):
            raise InvalidSpectrum("grid levels must be strictly increasing in (0,1)")
        if np.any(w <= 0.0):
            raise InvalidSpectrum("grid weights must be strictly positive")
        if not (0.0 <= self.z0 <= 1.0 + GRID_MASS_TOL):
            raise InvalidSpectrum(f"z0 = {self.z0} outside [0,1]")
        total = float(self.z0 + w.sum())
        if abs(total - 1.0) > GRID_MASS_TOL:
            raise InvalidSpectrum(f"grid mass {total} deviates from 1 beyond {GRID_MASS_TOL}")
        g = self.gamma_weights
        if g is None:
            g = w / (1.0 - u)
        else:
            g = np.asarray(g, dtype=float)
            if g.shape != w.shape:
                raise DimensionMismatch("gamma_weights shape mismatch")
            if u.size and np.max(np.abs(g * (1.0 - u) - w)) > 0.0:
                raise InvalidSpectrum("gamma_weights inconsistent with weights/levels")
        object.__setattr__(self, "z0", float(self.z0))
        object.__setattr__(self, "levels", _freeze(u))
        object.__setattr__(self, "weights", _freeze(w))
        object.__setattr__(self, "gamma_weights", _freeze(g))

    @property
    def n_levels(self) -> int:
        return int(self.levels.size)

    @classmethod
    def dirac(cls, alpha: float) -> "SpectralGrid":
        """Gamma = delta_alpha: the plain Expected Shortfall case."""
        if not (0.0 < alpha < 1.0):
            raise AlphaOutOfRange(f"alpha must lie in (0,1), got {alpha}")
        return cls(z0=0.0, levels=np.array([alpha]), weights=np.array([1.0]))


def discretize_spectrum(sigma: SpectralFunction, K: int) -> SpectralGrid:
    """Decompose Gamma_sigma into a :class:`SpectralGrid`.

    Expected-shortfall and piecewise-constant (and hence flat) spectra have
    purely atomic Gamma, so the grid is exact and independent of ``K``.
    Continuous kinds are quantized into ``K`` bins of equal Gamma-mass with
    each bin represented at its conditional median level; the boundedness
    cap's mass deficit (<= 1e-9 for power-sqrt) folds back proportionally so
    the grid mass is exactly 1 - z0.
    """
    if not isinstance(K, (int, np.integer)) or K < 1:
        raise InvalidSpectrum(f"K must be a positive integer, got {K!r}")
    if sigma.kind == "expected-shortfall":
        if sigma.alpha == 0.0:
            # sigma identically 1: all mass at u = 0
            return SpectralGrid(z0=1.0, levels=np.array([]), weights=np.array([]))
        return SpectralGrid.dirac(sigma.alpha)
    if sigma.kind == "piecewise-constant":
        z0 = float(sigma.levels[0])
        jumps = np.diff(sigma.levels)
        keep = jumps > 0.0
        t = sigma.breakpoints[keep]
        w = (1.0 - t) * jumps[keep]
        # fold any normalization slack (within SIGMA_NORM_TOL) into the weights
        if w.size:
            w = w * (1.0 - z0) / w.sum()
        elif abs(z0 - 1.0) > GRID_MASS_TOL:
            raise InvalidSpectrum("atomless remainder with z0 != 1")
        else:
            z0 = 1.0
        return SpectralGrid(z0=z0, levels=t, weights=w)
    # continuous kinds: equal-mass midpoint quantization of Gamma-tilde
    z0 = sigma.z0
    total = float(_gamma_tilde_cdf(sigma, np.array([1.0 - 1e-15]))[0])
    if total <= 0.0:
        if abs(z0 - 1.0) > GRID_MASS_TOL:
            raise InvalidSpectrum("continuous sigma with no Gamma mass and z0 != 1")
        return SpectralGrid(z0=1.0, levels=np.array([]), weights=np.array([]))
    mids = (np.arange(K) + 0.5) / K * total
    levels = _gamma_tilde_quantile(sigma, mids)
    weights = np.full(K, (1.0 - z0) / K)
    return SpectralGrid(z0=z0, levels=levels, weights=weights)


def grid_sigma_values(grid: SpectralGrid) -> tuple[np.ndarray, np.ndarray]:
    """Step representation of the sigma induced by a grid.

    Returns (edges, values): sigma = values[m] on [edges[m], edges[m+1]),
    reconstructed as the distribution function of the grid's gamma-masses.
    Used for computing Lebesgue norms of sigma exactly.
    """
    edges = np.concatenate([[0.0], grid.levels, [1.0]])
    values = grid.z0 + np.concatenate([[0.0], np.cumsum(grid.gamma_weights)])
    return edges, values


def grid_sigma_norm(grid: SpectralGrid, p: float) -> float:
    """Lebesgue p-norm (p may be inf) of the grid's step sigma on [0,1]."""
    edges, values = grid_sigma_values(grid)
    if math.isinf(p):
        return float(values[-1])
    if p < 1.0:
        raise DomainError(f"norm order must satisfy p >= 1, got {p}")
    lengths = np.diff(edges)
    return float(np.sum(values ** p * lengths) ** (1.0 / p))


# ---------------------------------------------------------------------------
# Instance (de)serialization
# ---------------------------------------------------------------------------


def sigma_to_dict(sf: SpectralFunction) -> dict[str, Any]:
    if sf.kind == "expected-shortfall":
        return {"kind": sf.kind, "alpha": sf.alpha}
    if sf.kind == "piecewise-constant":
        return {"kind": sf.kind, "breakpoints": sf.breakpoints.tolist(),
                "levels": sf.levels.tolist()}
    if sf.kind == "power-sqrt":
        return {"kind": sf.kind}
    return {"kind": sf.kind, "u": sf.table_u.tolist(), "sigma": sf.table_sigma.tolist()}


def sigma_from_dict(d: dict[str, Any]) -> SpectralFunction:
    kind = d.get("kind")
    if kind == "expected-shortfall":
        return SpectralFunction.expected_shortfall(float(d["alpha"]))
    if kind == "piecewise-constant":
        return SpectralFunction.piecewise_constant(d.get("breakpoints", []), d["levels"])
    if kind == "power-sqrt":
        return SpectralFunction.power_sqrt()
    if kind == "table":
        return SpectralFunction.table(d["u"], d["sigma"])
    raise InvalidSpectrum(f"unknown spectral kind {kind!r}")


def instance_to_dict(mu: ProbabilityVector, nu: ProbabilityVector, loss: LossMatrix,
                     sigma: SpectralFunction | None = None) -> dict[str, Any]:
    """Serialize an instance to the interchange schema
    ``{"mu": [...], "nu": [...], "loss": [[...]], "sigma": {...}}``.

    Numeric support coordinates, when known, travel in the optional
    ``x_support`` / ``y_support`` fields.
    """
    out: dict[str, Any] = {
        "mu": mu.weights.tolist(),
        "nu": nu.weights.tolist(),
        "loss": loss.values.tolist(),
    }
    if sigma is not None:
        out["sigma"] = sigma_to_dict(sigma)
    if mu.labels is not None and all(isinstance(v, (int, float)) for v in mu.labels):
        out["x_support"] = list(mu.labels)
    if nu.labels is not None and all(isinstance(v, (int, float)) for v in nu.labels):
        out["y_support"] = list(nu.labels)
    return out


def instance_from_dict(d: dict[str, Any]) -> tuple[ProbabilityVector, ProbabilityVector,
                                                    LossMatrix, SpectralFunction | None]:
    try:
        mu_raw, nu_raw, loss_raw = d["mu"], d["nu"], d["loss"]
    except KeyError as e:
        raise DimensionMismatch(f"instance missing required field {e.args[0]!r}") from None
    mu = validate_marginal(mu_raw, labels=d.get("x_support"))
    nu = validate_marginal(nu_raw, labels=d.get("y_support"))
    loss = LossMatrix(np.asarray(loss_raw, dtype=float))
    check_instance(mu, nu, loss)
    sigma = sigma_from_dict(d["sigma"]) if "sigma" in d else None
    return mu, nu, loss, sigma


def load_instance(path) -> tuple[ProbabilityVector, ProbabilityVector,
                                 LossMatrix, SpectralFunction | None]:
    with open(path, "r", encoding="utf-8") as fh:
        return instance_from_dict(json.load(fh))


def dump_instance(path, mu: ProbabilityVector, nu: ProbabilityVector, loss: LossMatrix,
                  sigma: SpectralFunction | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(mu, nu, loss, sigma), fh)
        fh.write("\n")


__all__ = [
    "AlphaOutOfRange",
    "CertificateInvalid",
    "Coupling",
    "DimensionMismatch",
    "DirectionNotTangent",
    "DomainError",
    "Empty",
    "GRID_MASS_TOL",
    "InvalidHolderData",
    "InvalidParams",
    "InvalidSpectrum",
    "LossMatrix",
    "NegativeWeight",
    "NumericalFailure",
    "POWER_SQRT_UMAX",
    "ProbabilityVector",
    "ProblemTooLarge",
    "RiskBoundError",
    "SIGMA_NORM_TOL",
    "SpectralFunction",
    "SpectralGrid",
    "SumNotOne",
    "TooFewSamples",
    "WEIGHT_TOL",
    "check_instance",
    "coupling_between",
    "discretize_spectrum",
    "dump_instance",
    "grid_sigma_norm",
    "grid_sigma_values",
    "instance_from_dict",
    "instance_to_dict",
    "load_instance",
    "sigma_from_dict",
    "sigma_to_dict",
    "validate_marginal",
]
