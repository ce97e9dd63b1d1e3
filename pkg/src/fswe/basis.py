"""Dirichlet eigenbasis of the Laplacian on the unit box, fractional Sobolev
norms, and the L-infinity embedding constant.

Only the unit interval (d=1) and unit square (d=2) are supported: the sine
eigenpairs are explicit there, so no eigensolver is needed. Eigenfunctions
are e_k(x) = sqrt(2) sin(k pi x) in 1d and products of two such factors in 2d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_MIN_GRID = 257


class BasisError(ValueError):
    pass


@dataclass(frozen=True)
class EigenBasis:
    """Sorted Dirichlet eigenpairs of -Laplace on the unit box.

    eigenvalues are non-decreasing; ties in 2d are broken lexicographically
    on the generating multi-indices so that mode ordering is deterministic.
    """

    dimension: int
    eigenvalues: np.ndarray          # (M,)
    multi_indices: np.ndarray        # (M, dimension), int
    grid_size: int                   # quadrature nodes per dimension

    @property
    def mode_count(self) -> int:
        return len(self.eigenvalues)

    # ---- quadrature grid (composite trapezoid on a closed uniform grid) ----

    @property
    def grid_1d(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid_size)

    @property
    def grid_points(self) -> np.ndarray:
        """All quadrature nodes, shape (n_nodes, d)."""
        g = self.grid_1d
        if self.dimension == 1:
            return g[:, None]
        xx, yy = np.meshgrid(g, g, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])

    @property
    def quad_weights(self) -> np.ndarray:
        """Trapezoid weights matching grid_points, shape (n_nodes,)."""
        h = 1.0 / (self.grid_size - 1)
        w = np.full(self.grid_size, h)
        w[0] = w[-1] = h / 2.0
        if self.dimension == 1:
            return w
        return np.outer(w, w).ravel()

    def evaluate_modes(self, points: np.ndarray) -> np.ndarray:
        """Values e_k(x) for all modes, shape (M, n_points).

        points: (n_points, d) array inside the closed unit box.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dimension:
            raise BasisError(
                f"points have dimension {pts.shape[1]}, basis has {self.dimension}"
            )
        if np.any(pts < 0.0) or np.any(pts > 1.0):
            raise BasisError("points must lie in the closed unit box")
        ks = self.multi_indices  # (M, d)
        vals = np.ones((self.mode_count, len(pts)))
        for axis in range(self.dimension):
            vals *= math.sqrt(2.0) * np.sin(
                np.pi * np.outer(ks[:, axis], pts[:, axis])
            )
        return vals

    # cached mode values on the quadrature grid, used heavily by the solver
    _grid_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def modes_on_grid(self) -> np.ndarray:
        if "grid" not in self._grid_cache:
            self._grid_cache["grid"] = self.evaluate_modes(self.grid_points)
        return self._grid_cache["grid"]

    # ---- cells (between grid nodes), used for the Gaussian noise surrogate ----

    @property
    def cell_count(self) -> int:
        return (self.grid_size - 1) ** self.dimension

    @property
    def cell_volume(self) -> float:
        h = 1.0 / (self.grid_size - 1)
        return h**self.dimension

    @property
    def cell_centers(self) -> np.ndarray:
        g = self.grid_1d
        c = 0.5 * (g[:-1] + g[1:])
        if self.dimension == 1:
            return c[:, None]
        xx, yy = np.meshgrid(c, c, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])

    def modes_on_cells(self) -> np.ndarray:
        if "cells" not in self._grid_cache:
            self._grid_cache["cells"] = self.evaluate_modes(self.cell_centers)
        return self._grid_cache["cells"]


@dataclass
class SpectralField:
    """An element of H_r(D) represented by its first M Fourier coefficients."""

    basis: EigenBasis
    coefficients: np.ndarray
    time_stamp: float | None = None

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.basis.mode_count,):
            raise BasisError(
                f"expected {self.basis.mode_count} coefficients, "
                f"got shape {self.coefficients.shape}"
            )


def build_basis(d: int, M: int, grid_size: int | None = None) -> EigenBasis:
    """Enumerate the M smallest Dirichlet eigenpairs on the unit box."""
    if d not in (1, 2):
        raise BasisError(f"unsupported dimension d={d}; only d=1 and d=2 have "
                         "explicit sine eigenpairs on the unit box")
    if M < 1:
        raise BasisError(f"mode count must be >= 1, got {M}")

    if d == 1:
        ks = np.arange(1, M + 1)
        lams = (ks * np.pi) ** 2
        indices = ks[:, None]
        kmax = M
    else:
        # enumerate a lattice square guaranteed to contain the M smallest modes
        R = int(math.ceil(math.sqrt(2.0 * M))) + 2
        k1, k2 = np.meshgrid(np.arange(1, R + 1), np.arange(1, R + 1),
                             indexing="ij")
        pairs = np.column_stack([k1.ravel(), k2.ravel()])
        lam_all = (pairs[:, 0] ** 2 + pairs[:, 1] ** 2) * np.pi**2
        order = np.lexsort((pairs[:, 1], pairs[:, 0], lam_all))
        pairs = pairs[order][:M]
        lams = lam_all[order][:M]
        indices = pairs
        kmax = int(indices.max())

    if grid_size is None:
        grid_size = max(4 * kmax + 1, DEFAULT_MIN_GRID)
    if grid_size < 4 * kmax + 1:
        raise BasisError(
            f"grid_size={grid_size} too coarse for mode index {kmax}; "
            f"need at least {4 * kmax + 1} points per dimension"
        )
    return EigenBasis(dimension=d, eigenvalues=lams.astype(float),
                      multi_indices=indices.astype(int), grid_size=grid_size)


def weyl_ratio(basis: EigenBasis, k: int) -> float:
    """lambda_k / k^(2/d); converges to pi^2 for d=1 and 4*pi for d=2."""
    if not 1 <= k <= basis.mode_count:
        raise BasisError(f"mode index {k} out of range 1..{basis.mode_count}")
    return float(basis.eigenvalues[k - 1] / k ** (2.0 / basis.dimension))


def sobolev_norm(fld: SpectralField, r: float) -> float:
    """(sum_k lambda_k^r a_k^2)^(1/2)."""
    lam = fld.basis.eigenvalues
    return float(np.sqrt(np.sum(lam**r * fld.coefficients**2)))


def lambda_power_sum(basis: EigenBasis, p: float) -> float:
    """Partial sum sum_{k<=M} lambda_k^p over the enumerated modes."""
    return float(np.sum(basis.eigenvalues**p))


def lambda_power_tail(basis: EigenBasis, p: float) -> float:
    """Analytic upper bound on the tail sum_{k>M} lambda_k^p (needs p < -d/2).

    d=1: lambda_k = k^2 pi^2 exactly, so the tail is below the integral bound
    pi^(2p) M^(1+2p) / (-1-2p). d=2 uses the Weyl lower bound lambda_k >= pi*k,
    valid for the unit square.
    """
    M = basis.mode_count
    d = basis.dimension
    if p >= -d / 2.0:
        raise BasisError(f"tail sum diverges for exponent {p} in d={d}")
    if d == 1:
        return float(np.pi ** (2 * p) * M ** (1 + 2 * p) / (-1 - 2 * p))
    return float(np.pi**p * M ** (1 + p) / (-1 - p))


@dataclass(frozen=True)
class EmbeddingConstant:
    """Grid-based embedding constant with crude analytic diagnostics.

    value bounds |f(x)| <= value * ||f||_{H_r} at the probe points for any
    field supported on the first M modes (Cauchy-Schwarz on the coefficient
    series). upper_bound adds |e_k|^2 <= 2^d; tail_bound estimates the
    neglected modes k > M.
    """

    value: float
    upper_bound: float
    tail_bound: float
    probe_points: int


def embedding_constant(basis: EigenBasis, r: float,
                       grid_size: int | None = None) -> EmbeddingConstant:
    """max over a probe grid of (sum_{k<=M} lambda_k^{-r} e_k(x)^2)^(1/2)."""
    d = basis.dimension
    if r <= d / 2.0:
        raise BasisError(
            f"embedding into L-infinity requires r > d/2 = {d / 2}; got r={r}"
        )
    if grid_size is None:
        grid_size = basis.grid_size
    g = np.linspace(0.0, 1.0, grid_size)
    if d == 1:
        points = g[:, None]
    else:
        xx, yy = np.meshgrid(g, g, indexing="ij")
        points = np.column_stack([xx.ravel(), yy.ravel()])
    modes = basis.evaluate_modes(points)  # (M, n)
    lam_w = basis.eigenvalues ** (-r)
    kernel = lam_w @ modes**2
    value = float(np.sqrt(kernel.max()))
    crude = float(np.sqrt(2**d * lambda_power_sum(basis, -r)))
    tail = float(np.sqrt(2**d * lambda_power_tail(basis, -r)))
    return EmbeddingConstant(value=value, upper_bound=crude, tail_bound=tail,
                             probe_points=len(points))


def evaluate(fld: SpectralField, points: np.ndarray) -> np.ndarray:
    """Synthesis sum_k a_k e_k(x) at each point."""
    modes = fld.basis.evaluate_modes(points)
    return fld.coefficients @ modes


def project(samples: np.ndarray, basis: EigenBasis) -> SpectralField:
    """L2 projection of grid samples onto the first M modes by quadrature.

    samples must be the field values at basis.grid_points (flattened order).
    """
    samples = np.asarray(samples, dtype=float).ravel()
    n_nodes = basis.grid_size**basis.dimension
    if samples.shape != (n_nodes,):
        raise BasisError(
            f"expected {n_nodes} grid samples, got shape {samples.shape}"
        )
    coeffs = basis.modes_on_grid() @ (basis.quad_weights * samples)
    return SpectralField(basis=basis, coefficients=coeffs)
