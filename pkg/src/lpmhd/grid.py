"""Periodic Fourier grid, field containers and pseudo-spectral operators.

Coefficients are stored in numpy FFT order with the normalization

    f(x) = L^{-d/2} * sum_k c(k) exp(i k.x),

so that the L^2 norm of a field equals the l^2 norm of its coefficients
(Parseval holds exactly) and a coefficient does not depend on the grid
resolution.  Wavevectors live on the lattice (Z/B)^d for a box of side
L = 2*pi*B.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "SpectralField",
    "VectorField",
    "derivative",
    "gradient",
    "divergence",
    "leray_project",
    "advect",
    "multiply",
    "lp_norm",
    "lp_norm_coeffs",
    "sobolev_norm",
    "random_field",
    "random_divfree_field",
    "product_has_headroom",
    "max_mode_index",
]

DIVFREE_TOL = 1e-12


def fft_workers() -> int:
    """Thread count for FFTs, capped by the MHD_THREADS environment variable."""
    value = os.environ.get("MHD_THREADS")
    if value is None:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """A d-dimensional periodic box of side 2*pi*B sampled with N points per axis."""

    d: int
    N: int
    B: int = 1

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if not _is_pow2(self.N) or self.N < 4:
            raise ValueError(f"N must be a power of two >= 4, got {self.N}")
        if int(self.B) != self.B or self.B < 1:
            raise ValueError(f"box multiplier B must be an integer >= 1, got {self.B}")

    @property
    def L(self) -> float:
        return 2.0 * np.pi * self.B

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.d, 0))

    @cached_property
    def mode_index(self) -> tuple[np.ndarray, ...]:
        """Integer mode numbers per axis, broadcastable to ``shape``."""
        m = np.fft.fftfreq(self.N, 1.0 / self.N).astype(np.int64)
        out = []
        for a in range(self.d):
            s = [1] * self.d
            s[a] = self.N
            out.append(m.reshape(s))
        return tuple(out)

    @cached_property
    def k(self) -> tuple[np.ndarray, ...]:
        """Physical wavevector components m/B (Nyquist kept at -N/(2B))."""
        return tuple(m / self.B for m in self.mode_index)

    @cached_property
    def k_deriv(self) -> tuple[np.ndarray, ...]:
        """Wavevector components used for differentiation; Nyquist zeroed."""
        out = []
        for m in self.mode_index:
            kk = m / self.B
            out.append(np.where(m == -self.N // 2, 0.0, kk))
        return tuple(out)

    @cached_property
    def k2(self) -> np.ndarray:
        return sum(np.broadcast_to(kk, self.shape) ** 2 for kk in self.k)

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def k2_deriv(self) -> np.ndarray:
        return sum(np.broadcast_to(kk, self.shape) ** 2 for kk in self.k_deriv)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep modes with every |m_i| < N/3."""
        keep = np.ones(self.shape, dtype=bool)
        for m in self.mode_index:
            keep = keep & (3 * np.abs(m) < self.N)
        return keep

    def coordinates(self) -> tuple[np.ndarray, ...]:
        x = np.arange(self.N) * self.dx
        return tuple(np.meshgrid(*([x] * self.d), indexing="ij"))

    # transforms -------------------------------------------------------
    def forward(self, values: np.ndarray) -> np.ndarray:
        """Physical samples (last d axes) -> normalized coefficients."""
        scale = self.L ** (self.d / 2) / self.N**self.d
        return sfft.fftn(values, axes=self.axes, workers=fft_workers()) * scale

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        """Normalized coefficients -> real physical samples."""
        scale = self.N**self.d / self.L ** (self.d / 2)
        return sfft.ifftn(coeffs, axes=self.axes, workers=fft_workers()).real * scale

    def inverse_padded(self, coeffs: np.ndarray, factor: int = 2) -> np.ndarray:
        """Evaluate the trigonometric interpolant on a grid refined by ``factor``."""
        M = self.N * factor
        padded = _pad_coeffs(coeffs, self.N, M, self.d)
        scale = M**self.d / self.L ** (self.d / 2)
        return sfft.ifftn(padded, axes=self.axes, workers=fft_workers()).real * scale


def _pad_coeffs(c: np.ndarray, N: int, M: int, d: int) -> np.ndarray:
    # The unpaired Nyquist coefficient is split evenly between +N/2 and -N/2
    # so the padded spectrum stays Hermitian.
    h = N // 2
    out = c
    for a in range(d):
        ax = c.ndim - d + a
        src = np.moveaxis(out, ax, -1)
        dst = np.zeros(src.shape[:-1] + (M,), dtype=complex)
        dst[..., :h] = src[..., :h]
        dst[..., M - h + 1 :] = src[..., h + 1 :]
        nyq = src[..., h]
        dst[..., h] = 0.5 * nyq
        dst[..., M - h] = 0.5 * nyq
        out = np.moveaxis(dst, -1, ax)
    return out


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real scalar field."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {self.coeffs.shape} != grid shape {self.grid.shape}")

    @classmethod
    def zeros(cls, grid: Grid) -> SpectralField:
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray) -> SpectralField:
        return cls(grid, grid.forward(np.asarray(values, dtype=float)))

    def to_physical(self) -> np.ndarray:
        return self.grid.inverse(self.coeffs)

    def with_coeffs(self, coeffs: np.ndarray) -> SpectralField:
        return SpectralField(self.grid, coeffs)

    def __add__(self, other: SpectralField) -> SpectralField:
        _check_same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: SpectralField) -> SpectralField:
        _check_same_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> SpectralField:
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> SpectralField:
        return SpectralField(self.grid, -self.coeffs)

    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))


@dataclass(frozen=True, eq=False)
class VectorField:
    """d scalar components stacked along the first axis of ``coeffs``.

    ``div_free`` is a certificate: it is only set by :func:`leray_project`
    or after :meth:`certify` has checked the divergence.
    """

    grid: Grid
    coeffs: np.ndarray
    div_free: bool = False

    def __post_init__(self):
        if self.coeffs.shape != (self.grid.d,) + self.grid.shape:
            raise ValueError(
                f"vector coefficient shape {self.coeffs.shape} != {(self.grid.d,) + self.grid.shape}"
            )

    @classmethod
    def zeros(cls, grid: Grid) -> VectorField:
        return cls(grid, np.zeros((grid.d,) + grid.shape, dtype=complex), div_free=True)

    @classmethod
    def from_components(cls, comps, div_free: bool = False) -> VectorField:
        comps = list(comps)
        grid = comps[0].grid
        for c in comps:
            _check_same_grid(grid, c.grid)
        return cls(grid, np.stack([c.coeffs for c in comps]), div_free=div_free)

    @classmethod
    def from_physical(cls, grid: Grid, values) -> VectorField:
        return cls(grid, grid.forward(np.asarray(values, dtype=float)))

    @property
    def components(self) -> tuple[SpectralField, ...]:
        return tuple(SpectralField(self.grid, c) for c in self.coeffs)

    def __getitem__(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[i])

    def __len__(self) -> int:
        return self.grid.d

    def to_physical(self) -> np.ndarray:
        return self.grid.inverse(self.coeffs)

    def __add__(self, other: VectorField) -> VectorField:
        _check_same_grid(self.grid, other.grid)
        return VectorField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: VectorField) -> VectorField:
        _check_same_grid(self.grid, other.grid)
        return VectorField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> VectorField:
        return VectorField(self.grid, self.coeffs * scalar, self.div_free)

    __rmul__ = __mul__

    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def divergence_residual(self) -> float:
        """max_k |k . c(k)| relative to max_k |c(k)| (0 for the zero field)."""
        kdotc = sum(kk * c for kk, c in zip(self.grid.k, self.coeffs))
        top = np.max(np.abs(self.coeffs))
        if top == 0:
            return 0.0
        return float(np.max(np.abs(kdotc)) / top)

    def certify(self, tol: float = DIVFREE_TOL) -> VectorField:
        """Return a copy carrying the div-free certificate, or raise if the check fails."""
        res = self.divergence_residual()
        if res > tol:
            raise ValueError(f"field is not divergence-free: relative residual {res:.3e} > {tol:.0e}")
        return VectorField(self.grid, self.coeffs, div_free=True)


def _check_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


# differential operators ---------------------------------------------------

def derivative(f: SpectralField, axis: int) -> SpectralField:
    """Spectral partial derivative along ``axis`` (Nyquist coefficient dropped)."""
    g = f.grid
    if not 0 <= axis < g.d:
        raise IndexError(f"axis {axis} out of range for d={g.d}")
    return SpectralField(g, 1j * g.k_deriv[axis] * f.coeffs)


def gradient(f: SpectralField) -> VectorField:
    g = f.grid
    return VectorField(g, np.stack([1j * kk * f.coeffs for kk in g.k_deriv]))


def divergence(v: VectorField) -> SpectralField:
    g = v.grid
    return SpectralField(g, sum(1j * kk * c for kk, c in zip(g.k_deriv, v.coeffs)))


def _leray_coeffs(grid: Grid, c: np.ndarray) -> np.ndarray:
    k2 = grid.k2
    safe = np.where(k2 == 0, 1.0, k2)
    kdotc = sum(kk * ci for kk, ci in zip(grid.k, c))
    factor = np.where(k2 == 0, 0.0, kdotc / safe)
    return np.stack([ci - kk * factor for kk, ci in zip(grid.k, c)])


def leray_project(v: VectorField) -> VectorField:
    """Orthogonal projection onto divergence-free fields; the mean is untouched."""
    return VectorField(v.grid, _leray_coeffs(v.grid, v.coeffs), div_free=True)


def _grad_coeffs(grid: Grid, c: np.ndarray) -> np.ndarray:
    # c has shape (m, *shape); returns (d, m, *shape)
    return np.stack([1j * kk * c for kk in grid.k_deriv])


def _advect_coeffs(grid: Grid, u: np.ndarray, w: np.ndarray, dealias: bool) -> np.ndarray:
    if dealias:
        mask = grid.dealias_mask
        u = u * mask
        w = w * mask
    phys_u = grid.inverse(u)
    phys_grad = grid.inverse(_grad_coeffs(grid, w))
    prod = np.einsum("i...,ij...->j...", phys_u, phys_grad)
    out = grid.forward(prod)
    if dealias:
        out = out * grid.dealias_mask
    return out


def advect(u: VectorField, w, dealias: bool = True):
    """Pseudo-spectral (u . grad) w for a vector or scalar ``w``."""
    _check_same_grid(u.grid, w.grid)
    if isinstance(w, SpectralField):
        return SpectralField(w.grid, _advect_coeffs(u.grid, u.coeffs, w.coeffs[None], dealias)[0])
    return VectorField(w.grid, _advect_coeffs(u.grid, u.coeffs, w.coeffs, dealias))


def multiply(f: SpectralField, g: SpectralField, dealias: bool = False) -> SpectralField:
    """Pseudo-spectral pointwise product."""
    _check_same_grid(f.grid, g.grid)
    grid = f.grid
    a, b = f.coeffs, g.coeffs
    if dealias:
        a = a * grid.dealias_mask
        b = b * grid.dealias_mask
    out = grid.forward(grid.inverse(a) * grid.inverse(b))
    if dealias:
        out = out * grid.dealias_mask
    return SpectralField(grid, out)


def max_mode_index(coeffs: np.ndarray, grid: Grid, rtol: float = 1e-14) -> int:
    """Largest |m_i| over all axes among coefficients above ``rtol * max``."""
    mag = np.abs(coeffs)
    if mag.ndim > grid.d:
        mag = mag.reshape((-1,) + grid.shape).max(axis=0)
    top = mag.max()
    if top == 0:
        return 0
    active = mag > rtol * top
    return int(max(np.max(np.abs(np.broadcast_to(m, grid.shape))[active]) for m in grid.mode_index))


def product_has_headroom(*fields) -> bool:
    """True when the pseudo-spectral product of the given fields is alias-free."""
    grid = fields[0].grid
    total = sum(max_mode_index(f.coeffs, grid) for f in fields)
    return total < grid.N // 2


# norms --------------------------------------------------------------------

def lp_norm_coeffs(grid: Grid, coeffs: np.ndarray, p: float) -> float:
    """L^p norm of the pointwise Euclidean magnitude of a coefficient stack.

    p = 2 uses Parseval; other exponents sample the interpolant on a 2x
    refined grid (max for p = inf, rectangle rule otherwise).
    """
    if p < 1:
        raise ValueError(f"L^p exponent must be >= 1, got {p}")
    if p == 2:
        return float(np.sqrt(np.sum(np.abs(coeffs) ** 2)))
    stack = coeffs.reshape((-1,) + grid.shape)
    vals = grid.inverse_padded(stack, 2)
    mag = np.sqrt(np.sum(vals**2, axis=0))
    if np.isinf(p):
        return float(mag.max())
    cell = (grid.L / (2 * grid.N)) ** grid.d
    return float((np.sum(mag**p) * cell) ** (1.0 / p))


def lp_norm(f, p: float) -> float:
    """L^p norm of a scalar field, or of the Euclidean magnitude of a vector field."""
    return lp_norm_coeffs(f.grid, f.coeffs, p)


def sobolev_norm(f, s: float, homogeneous: bool = False) -> float:
    """Direct Fourier-side H^s norm: sqrt(sum (1+|k|^2)^s |c|^2) (or |k|^{2s})."""
    grid = f.grid
    power = np.abs(f.coeffs) ** 2
    if power.ndim > grid.d:
        power = power.sum(axis=0)
    if homogeneous:
        k2 = grid.k2
        w = np.zeros_like(k2)
        w[k2 > 0] = k2[k2 > 0] ** s  # mean excluded
    else:
        w = (1.0 + grid.k2) ** s
    return float(np.sqrt(np.sum(w * power)))


# random ensembles -----------------------------------------------------------

def reflect(c: np.ndarray, d: int) -> np.ndarray:
    """Coefficient array evaluated at -k (over the last ``d`` axes)."""
    out = c
    for a in range(c.ndim - d, c.ndim):
        out = np.roll(np.flip(out, axis=a), 1, axis=a)
    return out


def _nested_order(grid: Grid, kmax: int) -> tuple[np.ndarray, tuple[np.ndarray, ...]]:
    # Modes in the box |m_i| <= kmax, ordered by Chebyshev shell then
    # lexicographically, so a coarser box is always a prefix of a finer one.
    r = np.arange(-kmax, kmax + 1)
    mesh = np.meshgrid(*([r] * grid.d), indexing="ij")
    flat = [m.ravel() for m in mesh]
    shell = np.max(np.abs(np.stack(flat)), axis=0)
    order = np.lexsort(tuple(reversed(flat)) + (shell,))
    return order, tuple(f[order] for f in flat)


def _gaussian_coeffs(grid: Grid, s: float, seed: int, ncomp: int, kmax: int | None) -> np.ndarray:
    if kmax is None:
        kmax = grid.N // 2 - 1
    kmax = min(kmax, grid.N // 2 - 1)
    _, modes = _nested_order(grid, kmax)
    count = modes[0].size
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((count, ncomp, 2))
    vals = draws[..., 0] + 1j * draws[..., 1]
    c = np.zeros((ncomp,) + grid.shape, dtype=complex)
    idx = tuple(m % grid.N for m in modes)
    for comp in range(ncomp):
        c[comp][idx] = vals[:, comp]
    # Hermitian symmetrization: c(k) <- (c(k) + conj(c(-k))) / 2
    c = 0.5 * (c + np.conj(reflect(c, grid.d)))
    decay = (1.0 + grid.kabs) ** (-s - grid.d / 2.0)
    c = c * decay
    c[(slice(None),) + (0,) * grid.d] = 0.0
    return c


def random_field(grid: Grid, s: float, seed: int, kmax: int | None = None) -> SpectralField:
    """Mean-free random real field with coefficient std ~ (1+|k|)^(-s-d/2).

    Modes are drawn shell by shell, so for a fixed seed the coefficients of
    modes shared by two resolutions (or two band limits) coincide.
    """
    return SpectralField(grid, _gaussian_coeffs(grid, s, seed, 1, kmax)[0])


def random_divfree_field(grid: Grid, s: float, seed: int, kmax: int | None = None) -> VectorField:
    """Leray-projected random vector field; deterministic given ``seed``."""
    c = _gaussian_coeffs(grid, s, seed, grid.d, kmax)
    return leray_project(VectorField(grid, c))
