"""Core data containers for panels, chain state, priors, and retained draws.

Conventions used throughout the package:

* Adjacency matrices are plain ``(N, N)`` arrays with entries in {0, 1} and a
  zero diagonal; weight matrices are their row-normalized images (each row
  sums to 1, or is identically 0 for an isolated node).
* Regime labels are 0-based internally (``0..K-1``). Serialized artifacts
  (draw files, reports) use 1-based labels.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


def validate_adjacency(omega: np.ndarray) -> np.ndarray:
    """Check the {0,1} / zero-diagonal invariants; returns an int8 copy."""
    omega = np.asarray(omega)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {omega.shape}")
    if not np.isin(omega, (0, 1)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    if np.diagonal(omega).any():
        raise ValueError("adjacency diagonal must be zero (no self-loops)")
    return omega.astype(np.int8)


def validate_weights(W: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Check the row-stochastic-or-zero-row / zero-diagonal invariants."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"weight matrix must be square, got shape {W.shape}")
    if (W < 0).any():
        raise ValueError("weight matrix entries must be nonnegative")
    if np.abs(np.diagonal(W)).max(initial=0.0) > 0:
        raise ValueError("weight matrix diagonal must be zero")
    sums = W.sum(axis=1)
    ok = (np.abs(sums - 1.0) <= tol) | (sums == 0.0)
    if not ok.all():
        bad = int(np.flatnonzero(~ok)[0])
        raise ValueError(f"row {bad} sums to {sums[bad]!r}; must be 1 or 0")
    return W


@dataclass(frozen=True)
class PanelData:
    """Observed panel: responses, covariates, optional aggregation weights.

    Attributes
    ----------
    Y : (T, N) responses, one row per period.
    Z : (T, N, M) covariates; M may be 0.
    basket_weights : optional (T, N) nonnegative aggregation weights used by
        the effect decompositions; rows are used as given (no renormalization).
    unit_labels, period_labels : identifiers for the N units / T periods.
    """

    Y: np.ndarray
    Z: np.ndarray
    basket_weights: Optional[np.ndarray] = None
    unit_labels: Sequence[str] = ()
    period_labels: Sequence[str] = ()

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=np.float64)
        Z = np.asarray(self.Z, dtype=np.float64)
        if Y.ndim != 2:
            raise ValueError("Y must be a T x N matrix")
        T, N = Y.shape
        if T < 1 or N < 2:
            raise ValueError(f"need T >= 1 and N >= 2, got T={T}, N={N}")
        if Z.ndim != 3 or Z.shape[:2] != (T, N):
            raise ValueError(f"Z must have shape (T, N, M), got {Z.shape}")
        M = Z.shape[2]
        if not np.isfinite(Y).all() or not np.isfinite(Z).all():
            raise ValueError("Y and Z must be finite")
        if M > 0:
            for t in range(T):
                if np.linalg.matrix_rank(Z[t]) < M:
                    raise ValueError(f"Z at period index {t} is rank deficient")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Z", Z)
        if self.basket_weights is not None:
            w = np.asarray(self.basket_weights, dtype=np.float64)
            if w.shape != (T, N):
                raise ValueError(f"basket_weights must have shape ({T}, {N})")
            if not np.isfinite(w).all() or (w < 0).any():
                raise ValueError("basket_weights must be finite and nonnegative")
            object.__setattr__(self, "basket_weights", w)
        labels = self.unit_labels or [f"u{i + 1}" for i in range(N)]
        periods = self.period_labels or [f"t{t + 1}" for t in range(T)]
        if len(labels) != N or len(periods) != T:
            raise ValueError("label lengths must match N and T")
        object.__setattr__(self, "unit_labels", tuple(str(u) for u in labels))
        object.__setattr__(self, "period_labels", tuple(str(p) for p in periods))

    @property
    def T(self) -> int:
        return self.Y.shape[0]

    @property
    def N(self) -> int:
        return self.Y.shape[1]

    @property
    def M(self) -> int:
        return self.Z.shape[2]

    def weights_for(self, t: int) -> np.ndarray:
        """Basket weights for period t; uniform 1/N when none were supplied."""
        if self.basket_weights is None:
            return np.full(self.N, 1.0 / self.N)
        return self.basket_weights[t]


@dataclass
class Hyperparams:
    """Prior shapes and post-processing constants.

    ``a_q``/``b_q`` may be scalars (shared across regimes) or length-K arrays.
    ``mu_beta`` and ``sigma_beta`` are resolved against the covariate count at
    fit time: scalars broadcast to a length-M vector and ``scale * I_M``.
    """

    K: int = 2
    a_q: float | np.ndarray = 1.0
    b_q: float | np.ndarray = 1.0
    a_rho: float = 1.0
    b_rho: float = 1.0
    a_xi: float = 1.0
    mu_beta: float | np.ndarray = 0.0
    sigma_beta: float | np.ndarray = 100.0
    a_sigma: float = 0.01
    b_sigma: float = 0.01
    grid_size: int = 100
    harden_threshold: float = 0.68

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        if not 0.0 <= self.harden_threshold <= 1.0:
            raise ValueError("harden_threshold must lie in [0, 1]")
        self.a_q = self._per_state(self.a_q, "a_q")
        self.b_q = self._per_state(self.b_q, "b_q")
        for name in ("a_rho", "b_rho", "a_xi", "a_sigma", "b_sigma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    def _per_state(self, value, name: str) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(value, dtype=np.float64))
        if arr.size == 1:
            arr = np.full(self.K, float(arr[0]))
        if arr.shape != (self.K,):
            raise ValueError(f"{name} must be scalar or length-{self.K}")
        if (arr <= 0).any():
            raise ValueError(f"{name} must be strictly positive")
        return arr

    def beta_prior(self, M: int) -> tuple[np.ndarray, np.ndarray]:
        """Concrete (mu, Sigma) for the coefficient prior at M covariates."""
        mu = np.asarray(self.mu_beta, dtype=np.float64)
        if mu.ndim == 0:
            mu = np.full(M, float(mu))
        if mu.shape != (M,):
            raise ValueError(f"mu_beta must be scalar or length-{M}")
        sig = np.asarray(self.sigma_beta, dtype=np.float64)
        if sig.ndim == 0:
            sig = float(sig) * np.eye(M)
        if sig.shape != (M, M):
            raise ValueError(f"sigma_beta must be scalar or {M}x{M}")
        if M > 0:
            if not np.allclose(sig, sig.T):
                raise ValueError("sigma_beta must be symmetric")
            if np.linalg.eigvalsh(sig).min() <= 0:
                raise ValueError("sigma_beta must be positive definite")
        return mu, sig


@dataclass
class SamplerConfig:
    """Chain length, thinning, seed, and the rho discretization."""

    n_iter: int = 10_000
    n_burn: int = 5_000
    thin: int = 5
    seed: int = 0
    rho_grid: Optional[np.ndarray] = None
    init_strategy: str = "k-segments"

    def __post_init__(self):
        if not 0 <= self.n_burn < self.n_iter:
            raise ValueError("need 0 <= n_burn < n_iter")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.init_strategy not in ("prior-draw", "k-segments"):
            raise ValueError(f"unknown init_strategy {self.init_strategy!r}")
        if self.rho_grid is not None:
            g = np.asarray(self.rho_grid, dtype=np.float64)
            if g.ndim != 1 or g.size < 2:
                raise ValueError("rho_grid must be a 1-d array with >= 2 points")
            if not ((g > 0).all() and (g < 1).all() and (np.diff(g) > 0).all()):
                raise ValueError("rho_grid must be strictly increasing inside (0, 1)")
            self.rho_grid = g

    def resolve_grid(self, grid_size: int) -> np.ndarray:
        """The rho grid: explicit, or the G midpoints of an equal partition of (0,1)."""
        if self.rho_grid is not None:
            return self.rho_grid
        return default_rho_grid(grid_size)

    @property
    def n_keep(self) -> int:
        return (self.n_iter - self.n_burn) // self.thin


def default_rho_grid(grid_size: int) -> np.ndarray:
    """Midpoints of the equal G-cell partition of (0, 1)."""
    return (np.arange(grid_size) + 0.5) / grid_size


@dataclass
class ChainState:
    """One full configuration of the sampler unknowns.

    ``s`` holds 0-based regime labels; ``omegas`` is (K, N, N) int8 with zero
    diagonals; ``Q`` is (K, N, N) link probabilities (diagonal ignored);
    ``Xi`` is the K x K row-stochastic transition matrix.
    """

    s: np.ndarray
    omegas: np.ndarray
    rhos: np.ndarray
    Q: np.ndarray
    Xi: np.ndarray
    beta: np.ndarray
    sigma2: float

    def validate(self) -> None:
        K = self.rhos.shape[0]
        if not ((self.rhos > 0) & (self.rhos < 1)).all():
            raise ValueError("each rho must lie strictly inside (0, 1)")
        if self.s.min(initial=0) < 0 or self.s.max(initial=0) >= K:
            raise ValueError("state labels must lie in 0..K-1")
        if np.abs(self.Xi.sum(axis=1) - 1.0).max() > 1e-12 or (self.Xi < 0).any():
            raise ValueError("Xi rows must be nonnegative and sum to 1")
        for k in range(K):
            validate_adjacency(self.omegas[k])
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")

    def copy(self) -> "ChainState":
        return ChainState(
            s=self.s.copy(),
            omegas=self.omegas.copy(),
            rhos=self.rhos.copy(),
            Q=self.Q.copy(),
            Xi=self.Xi.copy(),
            beta=self.beta.copy(),
            sigma2=float(self.sigma2),
        )


@dataclass
class DrawStore:
    """Retained post-burn-in draws, stacked along the first axis.

    ``logliks`` holds the complete-data log-likelihood evaluated at each
    retained state; ``iterations`` the 0-based sweep index of each snapshot.
    """

    states: np.ndarray      # (R, T) int64
    omegas: np.ndarray      # (R, K, N, N) int8
    rhos: np.ndarray        # (R, K)
    qs: np.ndarray          # (R, K, N, N)
    xis: np.ndarray         # (R, K, K)
    betas: np.ndarray       # (R, M)
    sigma2s: np.ndarray     # (R,)
    logliks: np.ndarray     # (R,)
    iterations: np.ndarray  # (R,) int64
    seed: int = 0
    config_hash: str = ""

    @property
    def n_draws(self) -> int:
        return self.states.shape[0]

    @property
    def K(self) -> int:
        return self.rhos.shape[1]

    def draw(self, r: int) -> ChainState:
        """Materialize retained draw r as a ChainState."""
        return ChainState(
            s=self.states[r].copy(),
            omegas=self.omegas[r].copy(),
            rhos=self.rhos[r].copy(),
            Q=self.qs[r].copy(),
            Xi=self.xis[r].copy(),
            beta=self.betas[r].copy(),
            sigma2=float(self.sigma2s[r]),
        )

    def equals(self, other: "DrawStore") -> bool:
        """Exact (bitwise) equality of all retained content and metadata."""
        arrays = ("states", "omegas", "rhos", "qs", "xis", "betas", "sigma2s",
                  "logliks", "iterations")
        return (
            all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)
            and self.seed == other.seed
            and self.config_hash == other.config_hash
        )


@dataclass
class TruthSpec:
    """Ground-truth parameterization for the synthetic generator.

    Networks come either from ``omegas`` (explicit (K, N, N) adjacencies) or
    from ``link_prob`` (i.i.d. Bernoulli off-diagonal entries per regime).
    With ``intercept`` set, the first covariate column is constant 1 and
    ``beta[0]`` is its coefficient.
    """

    N: int
    T: int
    K: int
    Xi: np.ndarray
    rhos: np.ndarray
    beta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sigma2: float = 1.0
    link_prob: float | np.ndarray = 0.2
    omegas: Optional[np.ndarray] = None
    intercept: bool = False
    seed: int = 0

    def __post_init__(self):
        self.Xi = np.asarray(self.Xi, dtype=np.float64)
        self.rhos = np.asarray(self.rhos, dtype=np.float64)
        self.beta = np.asarray(self.beta, dtype=np.float64)
        if self.Xi.shape != (self.K, self.K):
            raise ValueError("Xi must be K x K")
        if np.abs(self.Xi.sum(axis=1) - 1.0).max() > 1e-12 or (self.Xi < 0).any():
            raise ValueError("Xi rows must be nonnegative and sum to 1")
        if self.rhos.shape != (self.K,) or not ((self.rhos > 0) & (self.rhos < 1)).all():
            raise ValueError("rhos must be length K inside (0, 1)")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if self.omegas is not None:
            self.omegas = np.stack([validate_adjacency(o) for o in self.omegas])
            if self.omegas.shape != (self.K, self.N, self.N):
                raise ValueError("omegas must be (K, N, N)")

    @property
    def M(self) -> int:
        return self.beta.shape[0]


def config_hash(hyper: Hyperparams, config: SamplerConfig) -> str:
    """Stable digest of the run configuration, recorded in draw manifests.

    Numeric scalars are canonicalized to float so that a serialize/parse
    round trip (which may turn 0.0 into 0) hashes identically.
    """

    def clean(value):
        if isinstance(value, bool) or value is None or isinstance(value, str):
            return value
        if isinstance(value, np.ndarray):
            return np.asarray(value, dtype=np.float64).tolist()
        if isinstance(value, (int, float, np.integer, np.floating)):
            return float(value)
        return value

    payload = {
        "hyper": {k: clean(v) for k, v in vars(hyper).items()},
        "sampler": {k: clean(v) for k, v in vars(config).items()},
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
