"""Levy measures, Poisson-random-measure sampling, noise truncation, and
stochastic integration of step fields.

Two families of Levy measures are supported: finite-activity atom lists and
the symmetric alpha-stable density (alpha/2) |z|^(-alpha-1) dz. Jumps above
the cutoff eps are simulated exactly; the compensated small-jump part of an
infinite-activity measure is replaced by a cell-wise Gaussian white-noise
surrogate with matched variance sigma_eps^2 = int_{|z|<=eps} z^2 nu(dz) per
unit space-time.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

DEFAULT_STABLE_CUTOFF = 0.01


class NoiseError(ValueError):
    pass


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Declarative Levy measure: either a finite list of atoms (z_i, rho_i)
    or the symmetric alpha-stable density.

    The stable variant has infinite activity and (for alpha < 2) infinite
    second moment; only eps/K-truncated moments exist for it.
    """

    variant: str  # "atoms" | "stable"
    atoms: tuple[tuple[float, float], ...] = ()
    alpha: float | None = None
    cutoff: float = 0.0  # eps: jumps below are surrogate-approximated

    def __post_init__(self):
        if self.variant == "atoms":
            for z, rho in self.atoms:
                if z == 0.0:
                    raise NoiseError("atom at z=0 is not a jump")
                if rho < 0.0:
                    raise NoiseError(f"negative rate {rho}")
        elif self.variant == "stable":
            if self.alpha is None or not 0.0 < self.alpha < 2.0:
                raise NoiseError(f"stable index must be in (0,2), got {self.alpha}")
            if self.cutoff <= 0.0:
                raise NoiseError("stable variant needs a positive jump cutoff")
        else:
            raise NoiseError(f"unknown variant {self.variant!r}")

    # ---- structural properties ----

    @property
    def symmetric(self) -> bool:
        if self.variant == "stable":
            return True
        pos = sorted((z, r) for z, r in self.atoms if z > 0 and r > 0)
        neg = sorted((-z, r) for z, r in self.atoms if z < 0 and r > 0)
        return pos == neg

    @property
    def has_finite_variance(self) -> bool:
        return self.variant == "atoms"

    # ---- moments ----

    @property
    def m1(self) -> float:
        """First moment int z nu(dz) of the simulated (above-cutoff) jumps."""
        if self.variant == "stable":
            return 0.0
        return float(sum(rho * z for z, rho in self.atoms))

    @property
    def m2(self) -> float:
        if self.variant == "stable":
            return math.inf
        return float(sum(rho * z * z for z, rho in self.atoms))

    def m2_truncated(self, K: float) -> float:
        """int_{|z|<=K} z^2 nu(dz)."""
        if self.variant == "stable":
            a = self.alpha
            return float(a / (2.0 - a) * K ** (2.0 - a))
        return float(sum(rho * z * z for z, rho in self.atoms if abs(z) <= K))

    def tail_mass(self, K: float) -> float:
        """nu(|z| > K)."""
        if self.variant == "stable":
            return float(K ** (-self.alpha))
        return float(sum(rho for z, rho in self.atoms if abs(z) > K))

    @property
    def small_jump_variance(self) -> float:
        """sigma_eps^2 = int_{|z|<=eps} z^2 nu(dz), the surrogate intensity."""
        if self.variant == "stable":
            return self.m2_truncated(self.cutoff)
        return 0.0  # atoms are all simulated exactly

    @property
    def jump_rate(self) -> float:
        """Total rate of exactly-simulated jumps per unit space-time."""
        if self.variant == "stable":
            return self.tail_mass(self.cutoff)
        return float(sum(rho for _, rho in self.atoms))

    def sample_jump_sizes(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n sizes from nu restricted to {|z| > cutoff}, normalized."""
        if n == 0:
            return np.empty(0)
        if self.variant == "stable":
            # P(|Z| > z) = (z/eps)^(-alpha) above the cutoff
            mags = self.cutoff * rng.uniform(size=n) ** (-1.0 / self.alpha)
            signs = rng.choice([-1.0, 1.0], size=n)
            return mags * signs
        zs = np.array([z for z, _ in self.atoms])
        rates = np.array([r for _, r in self.atoms])
        return rng.choice(zs, size=n, p=rates / rates.sum())


@dataclass(frozen=True)
class Moments:
    m2: float  # inf for an untruncated stable spec
    m2_truncated: float | None
    tail_mass: float | None


def moments(spec: LevyMeasureSpec, K: float | None = None) -> Moments:
    """Second moment and, when a truncation level K is given, the truncated
    moment m_2^K and large-jump mass nu(|z|>K)."""
    if spec.variant == "stable" and K is None:
        raise NoiseError(
            "the untruncated stable measure has infinite second moment; "
            "pass a truncation level K"
        )
    return Moments(
        m2=spec.m2,
        m2_truncated=None if K is None else spec.m2_truncated(K),
        tail_mass=None if K is None else spec.tail_mass(K),
    )


@dataclass(frozen=True)
class NoisePath:
    """One realized space-time noise on [0,T] x unit box.

    Jump events are sorted by time. The Gaussian surrogate is an array of
    shape (n_steps, n_cells) of increments with per-entry variance
    sigma_eps^2 * dt * cell_volume, or None when sigma_eps = 0.
    """

    spec: LevyMeasureSpec
    T: float
    n_steps: int
    dimension: int
    cells_per_dim: int
    jump_times: np.ndarray      # (J,)
    jump_positions: np.ndarray  # (J, d)
    jump_sizes: np.ndarray      # (J,)
    surrogate: np.ndarray | None
    seed: int

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def n_cells(self) -> int:
        return self.cells_per_dim**self.dimension

    def jumps_in_step(self, n: int) -> slice:
        """Index slice of jumps with t in [n dt, (n+1) dt)."""
        lo = np.searchsorted(self.jump_times, n * self.dt, side="left")
        hi = np.searchsorted(self.jump_times, (n + 1) * self.dt, side="left")
        return slice(lo, hi)

    def cell_index(self, positions: np.ndarray) -> np.ndarray:
        """Flattened cell index of each position, shape (J,)."""
        idx = np.minimum((positions * self.cells_per_dim).astype(int),
                         self.cells_per_dim - 1)
        if self.dimension == 1:
            return idx[:, 0]
        return idx[:, 0] * self.cells_per_dim + idx[:, 1]


def sample_path(spec: LevyMeasureSpec, T: float, n_steps: int, seed: int,
                cells_per_dim: int = 256, dimension: int = 1,
                with_surrogate: bool = True) -> NoisePath:
    """Sample a noise path: Poisson jump events plus Gaussian surrogates.

    Fully reproducible from the seed; the draw order is fixed (count, times,
    positions, sizes, surrogate).
    """
    if T <= 0:
        raise NoiseError(f"horizon must be positive, got {T}")
    rng = np.random.default_rng(seed)
    rate = spec.jump_rate  # |D| = 1
    count = rng.poisson(rate * T) if rate > 0 else 0
    times = np.sort(rng.uniform(0.0, T, size=count))
    positions = rng.uniform(0.0, 1.0, size=(count, dimension))
    # boundary draws have measure zero but would break the Dirichlet pairing
    while positions.size and (np.any(positions <= 0.0) or np.any(positions >= 1.0)):
        bad = np.any((positions <= 0.0) | (positions >= 1.0), axis=1)
        positions[bad] = rng.uniform(0.0, 1.0, size=(bad.sum(), dimension))
    sizes = spec.sample_jump_sizes(rng, count)

    surrogate = None
    sig2 = spec.small_jump_variance
    if with_surrogate and sig2 > 0.0:
        dt = T / n_steps
        cell_vol = (1.0 / cells_per_dim) ** dimension
        std = math.sqrt(sig2 * dt * cell_vol)
        surrogate = std * rng.standard_normal(
            (n_steps, cells_per_dim**dimension)
        )

    return NoisePath(spec=spec, T=T, n_steps=n_steps, dimension=dimension,
                     cells_per_dim=cells_per_dim, jump_times=times,
                     jump_positions=positions, jump_sizes=sizes,
                     surrogate=surrogate, seed=seed)


def truncate(path: NoisePath, K: float) -> NoisePath:
    """Drop jumps with |z| > K; Gaussian surrogates are shared unchanged.

    No drift compensation is added: the truncated driver is only defined for
    symmetric measures, whose large-jump compensator vanishes.
    """
    if math.isinf(K):
        return path
    if K < path.spec.cutoff:
        raise NoiseError(
            f"truncation level {K} below the simulation cutoff {path.spec.cutoff}"
        )
    keep = np.abs(path.jump_sizes) <= K
    if keep.all():
        return path
    return replace(path, jump_times=path.jump_times[keep],
                   jump_positions=path.jump_positions[keep],
                   jump_sizes=path.jump_sizes[keep])


def first_large_jump(path: NoisePath, K: float) -> float:
    """First time a jump exceeds K in magnitude, or +inf."""
    big = np.abs(path.jump_sizes) > K
    if not big.any():
        return math.inf
    return float(path.jump_times[big][0])  # times are sorted


def zero_after(path: NoisePath, t_cut: float) -> NoisePath:
    """Remove all noise strictly after t_cut: jumps with t > t_cut and the
    surrogate of every step starting at or after t_cut."""
    keep = path.jump_times <= t_cut
    surrogate = path.surrogate
    if surrogate is not None:
        n_first = int(math.ceil(t_cut / path.dt - 1e-12))
        surrogate = surrogate.copy()
        surrogate[n_first:] = 0.0
    return replace(path, jump_times=path.jump_times[keep],
                   jump_positions=path.jump_positions[keep],
                   jump_sizes=path.jump_sizes[keep], surrogate=surrogate)


def integrate_step_field(H: np.ndarray, path: NoisePath) -> float:
    """Ito integral of a predictable step field against the (compensated)
    noise: jump sums minus the compensator plus the surrogate contribution.

    H has shape (n_steps, n_cells), constant on each (step, cell).
    """
    H = np.asarray(H, dtype=float)
    if H.shape != (path.n_steps, path.n_cells):
        raise NoiseError(
            f"step field shape {H.shape} does not match partition "
            f"({path.n_steps}, {path.n_cells})"
        )
    total = 0.0
    if len(path.jump_times):
        steps = np.minimum((path.jump_times / path.dt).astype(int),
                           path.n_steps - 1)
        cells = path.cell_index(path.jump_positions)
        total += float(np.sum(H[steps, cells] * path.jump_sizes))
    # compensator of the exactly-simulated jumps (zero for symmetric specs)
    m1 = path.spec.m1
    if m1 != 0.0:
        cell_vol = (1.0 / path.cells_per_dim) ** path.dimension
        total -= m1 * path.dt * cell_vol * float(np.sum(H))
    if path.surrogate is not None:
        total += float(np.sum(H * path.surrogate))
    return total


# ---- persistence ----

def export_path(path: NoisePath, csv_file, json_file) -> None:
    """Write jump events as CSV and the path header as JSON.

    Arguments may be open file objects or filesystem paths.
    """
    if not hasattr(csv_file, "write"):
        with open(csv_file, "w", newline="") as fh:
            with open(json_file, "w") as jh:
                export_path(path, fh, jh)
        return
    writer = csv.writer(csv_file)
    writer.writerow(["t"] + [f"x{i}" for i in range(path.dimension)] + ["z"])
    for t, x, z in zip(path.jump_times, path.jump_positions, path.jump_sizes):
        writer.writerow([repr(t)] + [repr(xi) for xi in x] + [repr(z)])
    header = {
        "spec": spec_to_dict(path.spec),
        "T": path.T,
        "n_steps": path.n_steps,
        "dimension": path.dimension,
        "cells_per_dim": path.cells_per_dim,
        "seed": path.seed,
        "cutoff": path.spec.cutoff,
        "small_jump_variance": path.spec.small_jump_variance,
        "jump_count": int(len(path.jump_times)),
    }
    json.dump(header, json_file, indent=2)


def spec_to_dict(spec: LevyMeasureSpec) -> dict:
    d = {"variant": spec.variant}
    if spec.variant == "atoms":
        d["atoms"] = [list(a) for a in spec.atoms]
    else:
        d["alpha"] = spec.alpha
        d["cutoff"] = spec.cutoff
    return d


def spec_from_dict(d: dict) -> LevyMeasureSpec:
    if d.get("variant") == "atoms":
        return LevyMeasureSpec(variant="atoms",
                               atoms=tuple(tuple(a) for a in d["atoms"]))
    if d.get("variant") == "stable":
        return LevyMeasureSpec(variant="stable", alpha=d["alpha"],
                               cutoff=d.get("cutoff", DEFAULT_STABLE_CUTOFF))
    raise NoiseError(f"unknown noise variant {d.get('variant')!r}")
