"""Empirical verification of the harmonic-analysis inequalities.

Each verifier draws a seeded random ensemble at several resolutions,
computes the ratio LHS/RHS of one inequality per case, and reports the
measured constant (largest ratio) together with the log-log slope of the
per-resolution constant against N.  A bounded constant whose slope stays
flat is the numerical signature of an N-independent estimate.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .besov import NormLedger, chemin_lerner_norm, weighted_lr, band_lp_norms
from .grid import (
    Grid,
    SpectralField,
    VectorField,
    _grad_coeffs,
    lp_norm_coeffs,
    product_has_headroom,
    random_divfree_field,
    random_field,
)
from .littlewood_paley import DyadicPartition, default_partition

__all__ = [
    "Ensemble",
    "VerificationReport",
    "GronwallBound",
    "bernstein_ratio",
    "verify_bernstein",
    "product_ratio",
    "heat_ratio",
    "verify_product_law",
    "verify_commutator_new",
    "verify_commutator_transport",
    "verify_heat_smoothing",
    "commutator_new_ratio",
    "transport_commutator_ratio",
    "heat_band_time_norms",
    "heat_solution",
    "gronwall_bound",
    "stability_slope",
]

SLOPE_TOL = 0.1
CONSTANT_CAP = 100.0


@dataclass(frozen=True)
class Ensemble:
    """Random test ensemble: ``size`` cases per resolution, seeds ``seed0 .. seed0+size-1``."""

    size: int = 100
    resolutions: tuple[int, ...] = (64, 128, 256)
    d: int = 2
    B: int = 1
    seed0: int = 0

    def grids(self):
        for N in self.resolutions:
            yield Grid(self.d, N, self.B)

    def seeds(self):
        return range(self.seed0, self.seed0 + self.size)


@dataclass
class VerificationReport:
    name: str
    ensemble_size: int
    resolutions: tuple[int, ...]
    cases: list[dict]
    constant: float
    slope: float
    passed: bool
    flags: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "ensemble": self.ensemble_size,
            "resolutions": list(self.resolutions),
            "cases": self.cases,
            "constant": self.constant,
            "slope": self.slope,
            "pass": self.passed,
            "flags": sorted(set(self.flags)),
            "details": self.details,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)


def stability_slope(resolutions, constants) -> float:
    """Least-squares slope of log(constant) against log(N); 0 for a single resolution."""
    Ns = np.asarray(resolutions, dtype=float)
    C = np.asarray(constants, dtype=float)
    if Ns.size < 2 or np.all(C == 0):
        return 0.0
    C = np.maximum(C, 1e-300)
    return float(np.polyfit(np.log(Ns), np.log(C), 1)[0])


def _finish(name, ens, cases, per_n, slope_tol, cap, flags, details, extra_ok=True):
    constant = max((c["ratio"] for c in cases), default=0.0)
    slope = stability_slope(ens.resolutions, per_n)
    ratios = np.array([c["ratio"] for c in cases])
    finite = bool(np.all(np.isfinite(ratios)) and np.all(ratios >= 0))
    passed = bool(finite and extra_ok and abs(slope) <= slope_tol and constant <= cap)
    details = dict(details)
    details["constant_per_N"] = {str(N): float(c) for N, c in zip(ens.resolutions, per_n)}
    return VerificationReport(name, ens.size, tuple(ens.resolutions), cases, float(constant),
                              slope, passed, flags, details)


def _headroom_kmax(grid: Grid) -> int:
    # products of two fields with |m_i| <= N/4 - 1 stay below N/2: alias-free
    return grid.N // 4 - 1


# Bernstein ------------------------------------------------------------------

def _derivative_stack(grid: Grid, c: np.ndarray, order: int) -> np.ndarray:
    out = c[None]
    for _ in range(order):
        out = _grad_coeffs(grid, out).reshape((-1,) + grid.shape)
    return out


ANNULUS = (0.75, 8.0 / 3.0)


def bernstein_ratio(f: SpectralField, j: int, k_order: int = 1, p: float = 2.0, q: float = 2.0,
                    support: str = "annulus", rtol: float = 1e-13) -> float:
    """||D^k f||_{L^q} / (2^{j(k + d(1/p - 1/q))} ||f||_{L^p}) for f supported near 2^j.

    Raises ValueError when ``f`` has energy outside the annulus
    3/4 2^j <= |xi| <= 8/3 2^j (or the ball |xi| <= 8/3 2^j).
    """
    if support not in ("annulus", "ball"):
        raise ValueError(f"support must be 'annulus' or 'ball', got {support!r}")
    grid = f.grid
    lo, hi = ANNULUS
    scale = 2.0**j
    inside = grid.kabs <= hi * scale * (1 + 1e-12)
    if support == "annulus":
        inside &= grid.kabs >= lo * scale * (1 - 1e-12)
    total = float(np.sum(np.abs(f.coeffs) ** 2))
    outside = float(np.sum(np.abs(f.coeffs[..., ~inside]) ** 2))
    if total == 0:
        return 0.0
    if outside > rtol**2 * total:
        raise ValueError(f"field is not band-limited to the {support} at j={j} "
                         f"(relative energy outside {math.sqrt(outside / total):.3e})")
    denom = 2.0 ** (j * (k_order + grid.d * (1.0 / p - 1.0 / q))) * lp_norm_coeffs(grid, f.coeffs, p)
    num = lp_norm_coeffs(grid, _derivative_stack(grid, f.coeffs, k_order), q)
    return num / denom


def verify_bernstein(ensemble: Ensemble = Ensemble(), k_order: int = 1, p: float = 2.0,
                     q: float = 2.0, support: str = "annulus", slope_tol: float = SLOPE_TOL,
                     cap: float = CONSTANT_CAP) -> VerificationReport:
    """Bernstein ratios over random band-limited fields.

    ``support="annulus"`` uses f = Delta_j g (both Bernstein bounds apply);
    ``support="ball"`` uses f = S_{j+1} g, supported in |xi| < 2^{j+1} (upper bound only).
    """
    if support not in ("annulus", "ball"):
        raise ValueError(f"support must be 'annulus' or 'ball', got {support!r}")
    if not 1 <= p <= q:
        raise ValueError(f"Bernstein needs 1 <= p <= q, got p={p}, q={q}")
    if support == "annulus" and p != q:
        raise ValueError("the annulus (two-sided) form compares L^p norms: use p == q")
    cases, per_n, mins = [], [], {}
    flags = []
    for grid in ensemble.grids():
        part = default_partition(grid)
        bands = part.homog_range()
        ratios = []
        for seed in ensemble.seeds():
            j = bands[seed % len(bands)]
            g = random_field(grid, 0.0, seed)
            mult = part.phi[part.index(j)] if support == "annulus" else part.low_pass_multiplier(j + 1)
            ratio = bernstein_ratio(g.with_coeffs(g.coeffs * mult), j, k_order, p, q, support)
            ratios.append(ratio)
            cases.append({"seed": seed, "N": grid.N, "j": j, "ratio": ratio})
        per_n.append(max(ratios))
        mins[str(grid.N)] = min(ratios)
    ok = True
    details = {"min_ratio_per_N": mins, "support": support, "k": k_order, "p": p, "q": q}
    if p == 2 and q == 2:
        lo, hi = ANNULUS[0] ** k_order, ANNULUS[1] ** k_order
        if support == "ball":
            lo = 0.0
        all_r = [c["ratio"] for c in cases]
        ok = min(all_r) >= lo - 1e-12 and max(all_r) <= hi + 1e-12
        details["bounds"] = [lo, hi]
        if not ok:
            flags.append("bound_violated")
    return _finish("bernstein", ensemble, cases, per_n, slope_tol, cap, flags, details, ok)


# product laws ---------------------------------------------------------------

def verify_product_law(s1: float, s2: float, ensemble: Ensemble = Ensemble(), p: float = 2.0,
                       r: float = 2.0, form: str = "besov", slope_tol: float = SLOPE_TOL,
                       cap: float = CONSTANT_CAP) -> VerificationReport:
    """Product estimates in homogeneous Besov spaces.

    ``form="besov"``: ||uv||_{B^{s1+s2-d/p}_{p,r}} <= C ||u||_{B^s1_{p,r}} ||v||_{B^s2_{p,r}},
    requiring s1, s2 <= d/p and s1 + s2 > d max(0, 2/p - 1).
    ``form="linf"``: ||uv||_{B^s} <= C(||u||_inf ||v||_{B^s} + ||u||_{B^s} ||v||_inf) with s = s1 > 0.
    """
    d = ensemble.d
    if form == "besov":
        if s1 > d / p or s2 > d / p:
            raise ValueError(f"product law needs s1, s2 <= d/p = {d / p}; got s1={s1}, s2={s2}")
        if s1 + s2 <= d * max(0.0, 2.0 / p - 1.0):
            raise ValueError(f"product law needs s1 + s2 > d*max(0, 2/p - 1); got s1 + s2 = {s1 + s2}")
    elif form == "linf":
        if s1 <= 0:
            raise ValueError(f"the L^inf product law needs s > 0; got s={s1}")
    else:
        raise ValueError(f"form must be 'besov' or 'linf', got {form!r}")
    s_gen = max(s1, s2) + 1.0
    cases, per_n, flags = [], [], []
    for grid in ensemble.grids():
        part = default_partition(grid)
        km = _headroom_kmax(grid)
        ratios = []
        for seed in ensemble.seeds():
            u = random_field(grid, s_gen, seed, kmax=km)
            v = random_field(grid, s_gen, seed + ensemble.size, kmax=km)
            ratio = product_ratio(u, v, s1, s2, p, r, form, part)
            ratios.append(ratio)
            cases.append({"seed": seed, "N": grid.N, "ratio": ratio})
        per_n.append(max(ratios))
    return _finish(f"product_law_{form}", ensemble, cases, per_n, slope_tol, cap, flags,
                   {"s1": s1, "s2": s2, "p": p, "r": r, "form": form})


def _hbesov(f_coeffs, grid, part, s, p, r) -> float:
    bands, vals = band_lp_norms(_Stack(grid, f_coeffs), part, True, p)
    return float(weighted_lr(vals, bands, s, r))


@dataclass(frozen=True)
class _Stack:
    grid: Grid
    coeffs: np.ndarray


def product_ratio(u: SpectralField, v: SpectralField, s1: float, s2: float, p: float = 2.0,
                  r: float = 2.0, form: str = "besov", partition: DyadicPartition | None = None) -> float:
    grid = u.grid
    part = default_partition(grid) if partition is None else partition
    uv = grid.forward(grid.inverse(u.coeffs) * grid.inverse(v.coeffs))
    if form == "besov":
        lhs = _hbesov(uv, grid, part, s1 + s2 - grid.d / p, p, r)
        rhs = _hbesov(u.coeffs, grid, part, s1, p, r) * _hbesov(v.coeffs, grid, part, s2, p, r)
    else:
        s = s1
        lhs = _hbesov(uv, grid, part, s, p, r)
        rhs = (lp_norm_coeffs(grid, u.coeffs, np.inf) * _hbesov(v.coeffs, grid, part, s, p, r)
               + _hbesov(u.coeffs, grid, part, s, p, r) * lp_norm_coeffs(grid, v.coeffs, np.inf))
    return lhs / rhs if rhs > 0 else 0.0


# commutators ----------------------------------------------------------------

def _band_commutator_norms(u: VectorField, v: VectorField, mults: np.ndarray, p: float) -> tuple[np.ndarray, bool]:
    """||[Delta_j, u.grad] v||_{L^p} for every multiplier row; also whether products were exact."""
    g = u.grid
    exact = product_has_headroom(u, v)
    mask = 1.0 if exact else g.dealias_mask
    uc, vc = u.coeffs * mask, v.coeffs * mask
    phys_u = g.inverse(uc)

    def adv(w):
        grad = g.inverse(_grad_coeffs(g, w))
        return g.forward(np.einsum("i...,ij...->j...", phys_u, grad)) * mask

    full = adv(vc)
    out = np.empty(len(mults))
    for i, m in enumerate(mults):
        if not np.any(m * np.abs(vc).sum(axis=0)) and not np.any(m * np.abs(full).sum(axis=0)):
            out[i] = 0.0
            continue
        out[i] = lp_norm_coeffs(g, m * full - adv(m * vc), p)
    return out, exact


def commutator_new_ratio(u: VectorField, v: VectorField, s: float, p: float = 2.0, q: float = 2.0,
                         partition: DyadicPartition | None = None) -> tuple[float, dict]:
    """Measured constant for one pair:

    || 2^{j(s-1)} ||[Delta_j, u.grad] v||_{L^p} ||_{l^q} / (||u||_inf ||v||_{B^s_{p,q}} + ||v||_inf ||u||_{B^s_{p,q}}).
    """
    if not u.div_free:
        raise ValueError("the commutator estimate assumes a divergence-free u (certificate missing)")
    g = u.grid
    part = default_partition(g) if partition is None else partition
    vals, exact = _band_commutator_norms(u, v, part.phi, p)
    lhs = float(weighted_lr(vals, part.bands, s - 1.0, q))
    u_inf = lp_norm_coeffs(g, u.coeffs, np.inf)
    v_inf = lp_norm_coeffs(g, v.coeffs, np.inf)
    rhs = u_inf * _hbesov(v.coeffs, g, part, s, p, q) + v_inf * _hbesov(u.coeffs, g, part, s, p, q)
    ratio = lhs / rhs if rhs > 0 else 0.0
    return ratio, {"lhs": lhs, "rhs": rhs, "exact": exact}


def verify_commutator_new(s: float = 1.5, p: float = 2.0, q: float = 2.0,
                          ensemble: Ensemble = Ensemble(), slope_tol: float = SLOPE_TOL,
                          cap: float = CONSTANT_CAP) -> VerificationReport:
    """Commutator estimate in homogeneous Besov spaces for divergence-free u, s > 0."""
    if s <= 0:
        raise ValueError(f"the commutator estimate needs s > 0, got s={s}")
    cases, per_n, flags = [], [], []
    for grid in ensemble.grids():
        part = default_partition(grid)
        km = _headroom_kmax(grid)
        ratios = []
        for seed in ensemble.seeds():
            u = random_divfree_field(grid, s + 1.0, seed, kmax=km)
            v = random_divfree_field(grid, s + 1.0, seed + ensemble.size, kmax=km)
            ratio, info = commutator_new_ratio(u, v, s, p, q, part)
            if not info["exact"]:
                flags.append("approximate")
            ratios.append(ratio)
            cases.append({"seed": seed, "N": grid.N, "ratio": ratio})
        per_n.append(max(ratios))
    return _finish("commutator_new", ensemble, cases, per_n, slope_tol, cap, flags,
                   {"s": s, "p": p, "q": q})


def _transport_range(s: float, d: int, p: float, p1: float) -> tuple[float, float]:
    pprime = math.inf if p == 1 else p / (p - 1.0)
    inv_pp = 0.0 if math.isinf(pprime) else 1.0 / pprime
    inv_p1 = 0.0 if math.isinf(p1) else 1.0 / p1
    return -1.0 - d * min(inv_p1, inv_pp), 1.0 + d * inv_p1


def transport_commutator_ratio(v: VectorField, u: VectorField, s: float, p: float = 2.0,
                               p1: float = 2.0, r: float = 2.0,
                               partition: DyadicPartition | None = None) -> tuple[float, dict]:
    """Measured constant for one pair, with ``v`` the divergence-free transporting field.

    (sum_j (2^{js} ||[Delta_j, v.grad] u||_{L^p})^r)^{1/r} / (||grad v||_{B^{d/p1}_{p1,r} cap L^inf} ||u||_{B^s_{p,r}})
    with inhomogeneous blocks.
    """
    if not v.div_free:
        raise ValueError("the transport commutator assumes a divergence-free v (certificate missing)")
    g = v.grid
    part = default_partition(g) if partition is None else partition
    vals, exact = _band_commutator_norms(v, u, part.inhom_stack(), p)
    lhs = float(weighted_lr(vals, part.inhom_bands, s, r))
    grad_v = _grad_coeffs(g, v.coeffs)
    gb, gvals = band_lp_norms(_Stack(g, grad_v), part, False, p1)
    grad_norm = float(weighted_lr(gvals, gb, g.d / p1, r)) + lp_norm_coeffs(g, grad_v, np.inf)
    ub, uvals = band_lp_norms(u, part, False, p)
    rhs = grad_norm * float(weighted_lr(uvals, ub, s, r))
    ratio = lhs / rhs if rhs > 0 else 0.0
    return ratio, {"lhs": lhs, "rhs": rhs, "exact": exact,
                   "roles": {"transporting": "v (enters through grad v)", "transported": "u"}}


def verify_commutator_transport(s: float = 1.2, p: float = 2.0, ensemble: Ensemble = Ensemble(),
                                p1: float = 2.0, r: float = 2.0, slope_tol: float = SLOPE_TOL,
                                cap: float = CONSTANT_CAP) -> VerificationReport:
    """Transport-type commutator estimate with inhomogeneous blocks."""
    lo, hi = _transport_range(s, ensemble.d, p, p1)
    if not lo < s < hi:
        raise ValueError(f"s={s} outside the admissible range ({lo}, {hi})")
    if not 1 <= p <= p1:
        raise ValueError(f"need 1 <= p <= p1, got p={p}, p1={p1}")
    cases, per_n, flags = [], [], []
    for grid in ensemble.grids():
        part = default_partition(grid)
        km = _headroom_kmax(grid)
        ratios = []
        for seed in ensemble.seeds():
            v = random_divfree_field(grid, ensemble.d / p1 + 2.0, seed, kmax=km)
            u = random_divfree_field(grid, s + 1.0, seed + ensemble.size, kmax=km)
            ratio, info = transport_commutator_ratio(v, u, s, p, p1, r, part)
            if not info["exact"]:
                flags.append("approximate")
            ratios.append(ratio)
            cases.append({"seed": seed, "N": grid.N, "ratio": ratio})
        per_n.append(max(ratios))
    return _finish("commutator_transport", ensemble, cases, per_n, slope_tol, cap, flags,
                   {"s": s, "p": p, "p1": p1, "r": r,
                    "roles": {"transporting": "v", "transported": "u"}})


# heat equation --------------------------------------------------------------

def _gauss_time_nodes(T: float, rate_max: float, order: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes on geometrically graded panels of [0, T].

    Panels shrink towards t = 0 until rate_max * (first panel) <= 1, which
    resolves the fastest decaying exponential.  t = 0 and t = T are appended
    with zero weight so sup-norms in time see both endpoints.
    """
    levels = max(0, math.ceil(math.log2(max(rate_max * T, 1.0)))) + 1
    edges = [0.0] + [T * 2.0 ** (-m) for m in range(levels, -1, -1)]
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [0.0], [0.0]
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.extend(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.extend(0.5 * (b - a) * w)
    nodes.append(T)
    weights.append(0.0)
    return np.array(nodes), np.array(weights)


def heat_solution(f0: np.ndarray, g: np.ndarray, grid: Grid, nu: float, t) -> np.ndarray:
    """Exact Fourier solution of f_t - nu Lap f = g (g constant in time) at times ``t``.

    Returns coefficients of shape (len(t), *f0.shape).
    """
    lam = nu * grid.k2
    t = np.atleast_1d(np.asarray(t, dtype=float)).reshape((-1,) + (1,) * f0.ndim)
    decay = np.exp(-lam * t)
    safe = np.where(lam == 0, 1.0, lam)
    duhamel = np.where(lam == 0, t, -np.expm1(-lam * t) / safe)
    return decay * f0 + duhamel * g


def heat_band_time_norms(f0: SpectralField, g: SpectralField | None, nu: float, T: float,
                         partition: DyadicPartition | None = None) -> NormLedger:
    """Homogeneous per-band L^2 norms of the exact heat solution on quadrature nodes."""
    grid = f0.grid
    part = default_partition(grid) if partition is None else partition
    gc = np.zeros_like(f0.coeffs) if g is None else g.coeffs
    active = (np.abs(f0.coeffs) > 0) | (np.abs(gc) > 0)
    rate = float(nu * grid.k2[active].max()) if active.any() else 0.0
    times, weights = _gauss_time_nodes(T, rate)
    phi2 = (part.phi**2).reshape(len(part.bands), -1)
    vals = np.empty((len(part.bands), times.size))
    chunk = 64
    for start in range(0, times.size, chunk):
        sol = heat_solution(f0.coeffs, gc, grid, nu, times[start:start + chunk])
        power = (np.abs(sol) ** 2).reshape(sol.shape[0], -1)
        vals[:, start:start + chunk] = np.sqrt(phi2 @ power.T)
    return NormLedger(times, list(part.bands), vals, 2.0, True, weights)


def _constant_ledger(f: SpectralField, like: NormLedger, part: DyadicPartition) -> NormLedger:
    bands, vals = band_lp_norms(f, part, True, 2.0)
    return NormLedger(like.times, bands, np.repeat(vals[:, None], like.times.size, axis=1),
                      2.0, True, like.weights)


def heat_ratio(f0: SpectralField, g: SpectralField | None, rho: float, rho1: float, s: float,
               nu: float, T: float, r: float = 2.0,
               partition: DyadicPartition | None = None) -> tuple[float, dict]:
    """nu^{1/rho} ||f||_{L~^rho_T B^{s+2/rho}} / (||f0||_{B^s} + nu^{1/rho1-1} ||g||_{L~^rho1_T B^{s-2+2/rho1}})."""
    grid = f0.grid
    part = default_partition(grid) if partition is None else partition
    ledger = heat_band_time_norms(f0, g, nu, T, part)
    inv = lambda x: 0.0 if math.isinf(x) else 1.0 / x
    lhs = nu ** inv(rho) * chemin_lerner_norm(ledger, rho, s + 2.0 * inv(rho), r)
    b0, v0 = band_lp_norms(f0, part, True, 2.0)
    rhs = float(weighted_lr(v0, b0, s, r))
    if g is not None:
        gl = _constant_ledger(g, ledger, part)
        rhs += nu ** (inv(rho1) - 1.0) * chemin_lerner_norm(gl, rho1, s - 2.0 + 2.0 * inv(rho1), r)
    ratio = lhs / rhs if rhs > 0 else 0.0
    return ratio, {"lhs": lhs, "rhs": rhs}


def verify_heat_smoothing(rho: float = 1.0, rho1: float = 1.0, s: float = 0.5,
                          ensemble: Ensemble = Ensemble(resolutions=(64, 128)), nu: float = 1.0,
                          T: float = 1.0, r: float = 2.0, forcing: bool = True,
                          slope_tol: float = SLOPE_TOL, cap: float = CONSTANT_CAP) -> VerificationReport:
    """Maximal-regularity estimate for the heat equation in Chemin-Lerner norms.

    Each case solves f_t - nu Lap f = g exactly per Fourier mode from random
    f0 (and, if ``forcing``, a random time-independent g).
    """
    if not 1 <= rho1 <= rho:
        raise ValueError(f"heat estimate needs 1 <= rho1 <= rho <= inf, got rho1={rho1}, rho={rho}")
    inv1 = 0.0 if math.isinf(rho1) else 1.0 / rho1
    cases, per_n = [], []
    for grid in ensemble.grids():
        part = default_partition(grid)
        ratios = []
        for seed in ensemble.seeds():
            f0 = random_field(grid, s + 1.0, seed)
            g = random_field(grid, s - 2.0 + 2.0 * inv1 + 1.0, seed + ensemble.size) if forcing else None
            ratio, _ = heat_ratio(f0, g, rho, rho1, s, nu, T, r, part)
            ratios.append(ratio)
            cases.append({"seed": seed, "N": grid.N, "ratio": ratio})
        per_n.append(max(ratios))
    return _finish("heat_smoothing", ensemble, cases, per_n, slope_tol, cap, [],
                   {"rho": rho, "rho1": rho1, "s": s, "nu": nu, "T": T, "forcing": forcing})


# nonlinear Gronwall ---------------------------------------------------------

@dataclass
class GronwallBound:
    times: np.ndarray
    bound: np.ndarray
    blowup_time: float | None

    @property
    def blew_up(self) -> bool:
        return self.blowup_time is not None


def gronwall_bound(x0: float, c_series, e_series, p: float, t_grid) -> GronwallBound:
    """Closed-form bound for x' <= c(t) x^p + e(t), x(0) = x0, p > 1.

    x(t) <= X(t) (1 - (p-1) X(t)^{p-1} int_0^t c)^{-1/(p-1)},  X(t) = x0 + int_0^t e.

    Integrals use the trapezoid rule on ``t_grid``; scalar c or e are taken
    constant.  Past the first time the bracket reaches zero the bound is
    infinite and ``blowup_time`` holds the (linearly interpolated) crossing.
    """
    if p <= 1:
        raise ValueError(f"the nonlinear Gronwall bound needs p > 1, got p={p}")
    t = np.asarray(t_grid, dtype=float)
    c = np.broadcast_to(np.asarray(c_series, dtype=float), t.shape)
    e = np.broadcast_to(np.asarray(e_series, dtype=float), t.shape)
    C = cumulative_trapezoid(c, t, initial=0.0)
    X = x0 + cumulative_trapezoid(e, t, initial=0.0)
    bracket = 1.0 - (p - 1.0) * X ** (p - 1.0) * C
    bound = np.full(t.shape, np.inf)
    bad = np.nonzero(bracket <= 0)[0]
    stop = bad[0] if bad.size else t.size
    bound[:stop] = X[:stop] * bracket[:stop] ** (-1.0 / (p - 1.0))
    blowup = None
    if bad.size:
        i = bad[0]
        if i == 0:
            blowup = float(t[0])
        else:
            b0, b1 = bracket[i - 1], bracket[i]
            blowup = float(t[i - 1] + (t[i] - t[i - 1]) * b0 / (b0 - b1))
    return GronwallBound(t, bound, blowup)
