"""Dyadic (Littlewood-Paley) frequency decomposition on the periodic lattice.

The band multipliers phi_j are built from a smooth exp(-1/(1-t^2)) bump in
log-radius supported in 3/4 <= |xi|/2^j <= 2, then divided by their
pointwise sum, so sum_j phi_j = 1 at every nonzero lattice point to
rounding.  The low block chi = sum_{j<0} phi_j is supported in the unit
ball and equals 1 on |xi| <= 3/4.

The zero mode is carried as its own block sitting below every band.  The
low-pass operator S_j = chi(2^-j D) therefore keeps the mean, which makes
the Bony identity uv = T_u v + T_v u + R(u, v) exact on the torus.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Grid, SpectralField, VectorField, _advect_coeffs, product_has_headroom

__all__ = [
    "DyadicPartition",
    "build_partition",
    "default_partition",
    "block",
    "low_pass",
    "inhom_block",
    "inhom_low_pass",
    "paraproduct",
    "remainder",
    "bony_decomposition",
    "commutator",
    "band_energies",
    "band_energies_csv",
]

_LO, _HI = 0.75, 2.0
_CENTER = 0.5 * (math.log(_LO) + math.log(_HI))
_HALF = 0.5 * (math.log(_HI) - math.log(_LO))


def _bump(r: np.ndarray) -> np.ndarray:
    """exp(-1/(1-t^2)) in t = normalized log-radius; zero outside (3/4, 2)."""
    out = np.zeros_like(r, dtype=float)
    pos = r > 0
    t = np.zeros_like(r, dtype=float)
    t[pos] = (np.log(r[pos]) - _CENTER) / _HALF
    inside = pos & (np.abs(t) < 1.0)
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    """Precomputed band multipliers for one grid.

    ``bands`` lists every j whose annulus meets the lattice; ``phi[i]`` is the
    multiplier of ``bands[i]``.  ``[j_min, j_max]`` is the analysis range:
    norms sum over it and report what falls outside as a tail.
    """

    grid: Grid
    j_min: int
    j_max: int
    bands: tuple[int, ...]
    phi: np.ndarray
    sharp: bool = False

    def index(self, j: int) -> int:
        if j not in self._band_pos:
            raise ValueError(f"band j={j} outside partition bands [{self.bands[0]}, {self.bands[-1]}]")
        return self._band_pos[j]

    @property
    def _band_pos(self) -> dict[int, int]:
        return {j: i for i, j in enumerate(self.bands)}

    def phi_j(self, j: int) -> np.ndarray:
        """Multiplier of homogeneous band j (zero array if j has no lattice support)."""
        if j in self._band_pos:
            return self.phi[self._band_pos[j]]
        return np.zeros(self.grid.shape)

    @property
    def zero_mode(self) -> np.ndarray:
        z = np.zeros(self.grid.shape)
        z[(0,) * self.grid.d] = 1.0
        return z

    @property
    def chi(self) -> np.ndarray:
        """Inhomogeneous low block: the mean plus every band with j < 0."""
        low = [i for i, j in enumerate(self.bands) if j < 0]
        out = self.zero_mode.copy()
        if low:
            out += self.phi[low].sum(axis=0)
        return out

    def low_pass_multiplier(self, j: int) -> np.ndarray:
        """Multiplier of S_j: the mean plus all bands k <= j - 1."""
        sel = [i for i, jj in enumerate(self.bands) if jj <= j - 1]
        out = self.zero_mode.copy()
        if sel:
            out += self.phi[sel].sum(axis=0)
        return out

    def inhom_multiplier(self, j: int) -> np.ndarray:
        if j <= -2:
            return np.zeros(self.grid.shape)
        if j == -1:
            return self.chi
        return self.phi_j(j)

    @property
    def inhom_bands(self) -> tuple[int, ...]:
        return (-1,) + tuple(j for j in self.bands if j >= 0)

    def inhom_stack(self) -> np.ndarray:
        return np.stack([self.inhom_multiplier(j) for j in self.inhom_bands])

    def homog_range(self) -> list[int]:
        return [j for j in self.bands if self.j_min <= j <= self.j_max]


def _admissible(grid: Grid) -> tuple[int, int]:
    lo = math.ceil(-math.log2(grid.B) - 1e-12)
    hi = math.floor(math.log2(grid.N / (4.0 * grid.B)) + 1e-12)
    return lo, hi


def build_partition(grid: Grid, j_min: int | None = None, j_max: int | None = None,
                    sharp: bool = False) -> DyadicPartition:
    """Build the dyadic partition of unity on ``grid``.

    ``j_min`` must satisfy 2^j_min >= 1/B and ``j_max`` must keep the outer
    radius 2^(j_max+1) of its band inside the Nyquist radius N/(2B).
    ``sharp=True`` replaces the smooth bumps by indicators of
    2^j <= |xi| < 2^(j+1) (diagnostic mode with exact orthogonality).
    """
    lo, hi = _admissible(grid)
    j_min = lo if j_min is None else j_min
    j_max = hi if j_max is None else j_max
    if j_min < lo or j_max > hi or j_min > j_max:
        raise ValueError(
            f"band range [{j_min}, {j_max}] not admissible for {grid}; "
            f"admissible range is [{lo}, {hi}]"
        )
    kabs = grid.kabs
    kmin = 1.0 / grid.B
    kmax = float(kabs.max())
    j_lo = math.floor(math.log2(kmin / _HI))
    j_hi = math.ceil(math.log2(kmax / _LO))
    js = list(range(j_lo, j_hi + 1))
    if sharp:
        raw = np.stack([((kabs >= 2.0**j) & (kabs < 2.0 ** (j + 1))).astype(float) for j in js])
    else:
        raw = np.stack([_bump(kabs / 2.0**j) for j in js])
    total = raw.sum(axis=0)
    nonzero = kabs > 0
    phi = np.zeros_like(raw)
    phi[:, nonzero] = raw[:, nonzero] / total[nonzero]
    keep = [i for i in range(len(js)) if phi[i].any() or j_min <= js[i] <= j_max]
    bands = tuple(js[i] for i in keep)
    return DyadicPartition(grid, j_min, j_max, bands, phi[keep], sharp)


@lru_cache(maxsize=32)
def default_partition(grid: Grid) -> DyadicPartition:
    return build_partition(grid)


def _part(f, partition):
    return default_partition(f.grid) if partition is None else partition


def _apply(f, mult: np.ndarray):
    if isinstance(f, VectorField):
        return VectorField(f.grid, f.coeffs * mult, f.div_free)
    return SpectralField(f.grid, f.coeffs * mult)


def block(f, j: int, partition: DyadicPartition | None = None):
    """Homogeneous block: multiply by phi_j."""
    p = _part(f, partition)
    return _apply(f, p.phi[p.index(j)])


def low_pass(f, j: int, partition: DyadicPartition | None = None):
    """Homogeneous low-pass S_j (sum of blocks below j, plus the mean)."""
    p = _part(f, partition)
    if not p.bands[0] <= j <= p.bands[-1] + 1:
        raise ValueError(f"low-pass index j={j} outside [{p.bands[0]}, {p.bands[-1] + 1}]")
    return _apply(f, p.low_pass_multiplier(j))


def inhom_block(f, j: int, partition: DyadicPartition | None = None):
    """Inhomogeneous block: chi for j = -1, phi_j for j >= 0, zero for j <= -2."""
    p = _part(f, partition)
    if j > p.bands[-1]:
        raise ValueError(f"band j={j} above the partition's top band {p.bands[-1]}")
    return _apply(f, p.inhom_multiplier(j))


def inhom_low_pass(f, j: int, partition: DyadicPartition | None = None):
    p = _part(f, partition)
    if j <= -1:
        return _apply(f, np.zeros(f.grid.shape))
    return _apply(f, p.low_pass_multiplier(j))


# Bony decomposition ---------------------------------------------------------

def _blocks_physical(f: SpectralField, p: DyadicPartition) -> np.ndarray:
    # row 0 is the mean block, then every band in order
    mults = np.concatenate([p.zero_mode[None], p.phi])
    return f.grid.inverse(mults * f.coeffs)


def _paraproduct_phys(bu: np.ndarray, bv: np.ndarray) -> np.ndarray:
    # T_u v = sum over band pairs (a, b) with a <= b - 2, the mean block
    # counting as lower than every band.
    nb = bu.shape[0]
    low = np.cumsum(bu, axis=0)  # low[i] = sum of blocks 0..i
    out = np.zeros(bu.shape[1:])
    for b in range(1, nb):
        out += low[max(b - 2, 0)] * bv[b]
    return out


def _remainder_phys(bu: np.ndarray, bv: np.ndarray) -> np.ndarray:
    nb = bu.shape[0]
    out = bu[0] * bv[0]
    for a in range(1, nb):
        for b in range(max(1, a - 1), min(nb, a + 2)):
            out += bu[a] * bv[b]
    return out


def paraproduct(u: SpectralField, v: SpectralField, partition: DyadicPartition | None = None) -> SpectralField:
    """T_u v = sum_j S_{j-1}u * Delta_j v."""
    if u.grid != v.grid:
        raise ValueError(f"grid mismatch: {u.grid} vs {v.grid}")
    p = _part(u, partition)
    phys = _paraproduct_phys(_blocks_physical(u, p), _blocks_physical(v, p))
    return SpectralField(u.grid, u.grid.forward(phys))


def remainder(u: SpectralField, v: SpectralField, partition: DyadicPartition | None = None) -> SpectralField:
    """R(u, v) = sum_{|j-j'|<=1} Delta_j u * Delta_j' v."""
    if u.grid != v.grid:
        raise ValueError(f"grid mismatch: {u.grid} vs {v.grid}")
    p = _part(u, partition)
    phys = _remainder_phys(_blocks_physical(u, p), _blocks_physical(v, p))
    return SpectralField(u.grid, u.grid.forward(phys))


def bony_decomposition(u: SpectralField, v: SpectralField, partition: DyadicPartition | None = None):
    """Return (T_u v, T_v u, R(u, v)) computed from one set of block transforms."""
    if u.grid != v.grid:
        raise ValueError(f"grid mismatch: {u.grid} vs {v.grid}")
    p = _part(u, partition)
    bu, bv = _blocks_physical(u, p), _blocks_physical(v, p)
    g = u.grid
    return (
        SpectralField(g, g.forward(_paraproduct_phys(bu, bv))),
        SpectralField(g, g.forward(_paraproduct_phys(bv, bu))),
        SpectralField(g, g.forward(_remainder_phys(bu, bv))),
    )


# commutator -----------------------------------------------------------------

def commutator(j: int, u: VectorField, v, partition: DyadicPartition | None = None,
               homogeneous: bool = True):
    """[Delta_j, u.grad] v = Delta_j((u.grad) v) - (u.grad) Delta_j v.

    ``v`` may be scalar or vector.  Products are alias-free when the inputs
    leave enough band headroom; otherwise both products fall back to 2/3
    dealiasing (see :func:`commutator_is_exact`).
    """
    p = _part(u, partition)
    mult = p.phi[p.index(j)] if homogeneous else _inhom_checked(p, j)
    return _commutator_with(mult, u, v, dealias=not product_has_headroom(u, v))


def _inhom_checked(p: DyadicPartition, j: int) -> np.ndarray:
    if j < -1 or j > p.bands[-1]:
        raise ValueError(f"inhomogeneous band j={j} outside [-1, {p.bands[-1]}]")
    return p.inhom_multiplier(j)


def _commutator_with(mult: np.ndarray, u: VectorField, v, dealias: bool):
    g = u.grid
    scalar = isinstance(v, SpectralField)
    vc = v.coeffs[None] if scalar else v.coeffs
    first = mult * _advect_coeffs(g, u.coeffs, vc, dealias)
    second = _advect_coeffs(g, u.coeffs, mult * vc, dealias)
    out = first - second
    if scalar:
        return SpectralField(g, out[0])
    return VectorField(g, out)


def commutator_is_exact(u: VectorField, v) -> bool:
    return product_has_headroom(u, v)


# diagnostics ----------------------------------------------------------------

def band_energies(f, partition: DyadicPartition | None = None) -> dict[int, float]:
    """Squared L^2 norm of every homogeneous block, keyed by band index."""
    p = _part(f, partition)
    power = np.abs(f.coeffs) ** 2
    if power.ndim > f.grid.d:
        power = power.sum(axis=0)
    vals = (p.phi**2).reshape(len(p.bands), -1) @ power.ravel()
    return {j: float(e) for j, e in zip(p.bands, vals)}


def band_energies_csv(f, partition: DyadicPartition | None = None) -> str:
    lines = ["j, l2_energy"]
    for j, e in band_energies(f, partition).items():
        lines.append(f"{j}, {e!r}")
    return "\n".join(lines) + "\n"
