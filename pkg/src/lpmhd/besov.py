"""Besov and Chemin-Lerner norms built from per-band L^p norms."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import lp_norm_coeffs
from .littlewood_paley import DyadicPartition, default_partition

__all__ = [
    "BesovParams",
    "NormReport",
    "NormLedger",
    "band_lp_norms",
    "besov_norm",
    "besov_report",
    "chemin_lerner_norm",
    "lebesgue_besov_norm",
    "interpolate_bound",
    "weighted_lr",
]


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float = 2.0
    r: float = 2.0
    homogeneous: bool = True

    def __post_init__(self):
        if not (self.p >= 1 and self.r >= 1):
            raise ValueError(f"Besov exponents p, r must lie in [1, inf], got p={self.p}, r={self.r}")

    def to_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and math.isinf(v) else v) for k, v in asdict(self).items()}


@dataclass
class NormReport:
    norm_kind: str
    params: dict
    value: float
    tail: float
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"norm_kind": self.norm_kind, "params": self.params, "value": self.value,
                "tail": self.tail, "flags": list(self.flags)}


def weighted_lr(values: np.ndarray, bands, s: float, r: float, axis: int = 0) -> np.ndarray:
    """(sum_j (2^{js} a_j)^r)^{1/r} along ``axis`` (max for r = inf)."""
    w = 2.0 ** (s * np.asarray(bands, dtype=float))
    shape = [1] * np.ndim(values)
    shape[axis] = -1
    x = np.abs(values) * w.reshape(shape)
    if math.isinf(r):
        return np.max(x, axis=axis) if x.shape[axis] else np.zeros(np.delete(x.shape, axis))
    return np.sum(x**r, axis=axis) ** (1.0 / r)


def band_lp_norms(f, partition: DyadicPartition | None = None, homogeneous: bool = True,
                  p: float = 2.0) -> tuple[list[int], np.ndarray]:
    """Per-band L^p norms over every band of the partition.

    Homogeneous blocks exclude the mean; inhomogeneous ones start at j = -1.
    """
    part = default_partition(f.grid) if partition is None else partition
    bands = list(part.bands) if homogeneous else list(part.inhom_bands)
    mults = part.phi if homogeneous else part.inhom_stack()
    if p == 2:
        power = (np.abs(f.coeffs) ** 2).reshape((-1,) + f.grid.shape).sum(axis=0)
        vals = np.sqrt(np.maximum((mults**2).reshape(len(bands), -1) @ power.ravel(), 0.0))
        return bands, vals
    vals = np.array([lp_norm_coeffs(f.grid, f.coeffs * m, p) for m in mults])
    return bands, vals


def _range_mask(bands, part: DyadicPartition, homogeneous: bool) -> np.ndarray:
    b = np.asarray(bands)
    lo = part.j_min if homogeneous else -1
    return (b >= lo) & (b <= part.j_max)


def besov_report(f, params: BesovParams, partition: DyadicPartition | None = None) -> NormReport:
    """Besov norm over the analysis range with out-of-range bands reported as ``tail``."""
    part = default_partition(f.grid) if partition is None else partition
    bands, vals = band_lp_norms(f, part, params.homogeneous, params.p)
    inside = _range_mask(bands, part, params.homogeneous)
    b = np.asarray(bands)
    value = float(weighted_lr(vals[inside], b[inside], params.s, params.r))
    tail = float(weighted_lr(vals[~inside], b[~inside], params.s, params.r)) if (~inside).any() else 0.0
    flags = []
    top = max(vals.max(), 1e-300) if vals.size else 1e-300
    if tail > 1e-14 * max(value, top):
        flags.append("truncated")
    if params.homogeneous:
        mean = f.coeffs[(Ellipsis,) + (0,) * f.grid.d]
        if np.any(np.abs(mean) > 0):
            flags.append("mean_excluded")
    kind = "homogeneous_besov" if params.homogeneous else "besov"
    return NormReport(kind, params.to_dict(), value, tail, flags)


def besov_norm(f, params: BesovParams, partition: DyadicPartition | None = None,
               include_tail: bool = False) -> float:
    """Besov norm of ``f``.

    By default only bands in the partition's analysis range are summed;
    ``include_tail=True`` sums every band the lattice supports.
    """
    part = default_partition(f.grid) if partition is None else partition
    bands, vals = band_lp_norms(f, part, params.homogeneous, params.p)
    if not include_tail:
        inside = _range_mask(bands, part, params.homogeneous)
        bands, vals = np.asarray(bands)[inside], vals[inside]
    return float(weighted_lr(vals, bands, params.s, params.r))


# time-space norms -----------------------------------------------------------

@dataclass
class NormLedger:
    """Per-band L^p norms sampled in time: ``values[i, k]`` is band ``bands[i]`` at ``times[k]``.

    ``weights``, when given, are quadrature weights replacing the trapezoid rule.
    """

    times: np.ndarray
    bands: list[int]
    values: np.ndarray
    p: float = 2.0
    homogeneous: bool = True
    weights: np.ndarray | None = None
    flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float).reshape(len(self.bands), self.times.size)
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("ledger times must be strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("ledger norms must be non-negative")

    @classmethod
    def from_snapshots(cls, times, band_norms, bands, **kw) -> NormLedger:
        """Build from a list of per-time band-norm vectors."""
        vals = np.array(band_norms, dtype=float).reshape(len(times), len(bands)).T
        return cls(np.asarray(times, dtype=float), list(bands), vals, **kw)

    def truncated(self, t_end: float) -> NormLedger:
        keep = self.times <= t_end * (1 + 1e-12) + 1e-300
        w = None if self.weights is None else self.weights[keep]
        return NormLedger(self.times[keep], self.bands, self.values[:, keep], self.p,
                          self.homogeneous, w, list(self.flags))

    @property
    def T(self) -> float:
        return float(self.times[-1] - self.times[0]) if self.times.size else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t, j, lp_norm\n")
        for k, t in enumerate(self.times):
            for i, j in enumerate(self.bands):
                buf.write(f"{float(t)!r}, {j}, {float(self.values[i, k])!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, p: float = 2.0, homogeneous: bool = True) -> NormLedger:
        rows = list(csv.reader(io.StringIO(text), skipinitialspace=True))
        header = [h.strip() for h in rows[0]]
        if header != ["t", "j", "lp_norm"]:
            raise ValueError(f"unexpected ledger header {header}")
        data = [(float(t), int(j), float(v)) for t, j, v in rows[1:] if t]
        times = sorted({t for t, _, _ in data})
        bands = sorted({j for _, j, _ in data})
        ti = {t: k for k, t in enumerate(times)}
        bi = {j: i for i, j in enumerate(bands)}
        vals = np.zeros((len(bands), len(times)))
        for t, j, v in data:
            vals[bi[j], ti[t]] = v
        return cls(np.array(times), bands, vals, p, homogeneous)


def _time_lq(values: np.ndarray, ledger: NormLedger, q: float) -> np.ndarray:
    # L^q over time of each row of ``values`` (shape (..., nt))
    if ledger.times.size == 0:
        raise ValueError("empty ledger")
    if math.isinf(q):
        return np.max(values, axis=-1)
    if ledger.weights is not None:
        return (values**q @ ledger.weights) ** (1.0 / q)
    if ledger.times.size == 1:
        return np.zeros(values.shape[:-1])
    return np.trapezoid(values**q, ledger.times, axis=-1) ** (1.0 / q)


def chemin_lerner_norm(ledger: NormLedger, q: float, s: float, r: float) -> float:
    """(sum_j (2^{js} ||Delta_j f||_{L^q_T L^p})^r)^{1/r}: time norm first, then the band sum."""
    if ledger.times.size == 0:
        raise ValueError("empty ledger")
    per_band = _time_lq(ledger.values, ledger, q)
    return float(weighted_lr(per_band, ledger.bands, s, r))


def lebesgue_besov_norm(ledger: NormLedger, q: float, s: float, r: float) -> float:
    """|| ||f(t)||_{B^s_{p,r}} ||_{L^q_T}: band sum first, then the time norm."""
    if ledger.times.size == 0:
        raise ValueError("empty ledger")
    per_time = weighted_lr(ledger.values, ledger.bands, s, r, axis=0)
    return float(_time_lq(per_time[None], ledger, q)[0])


def interpolate_bound(f, s1: float, s2: float, theta: float, p: float = 2.0, r: float = 2.0,
                      partition: DyadicPartition | None = None) -> tuple[float, float]:
    """(||f||_{B^{theta s1 + (1-theta) s2}}, ||f||_{B^s1}^theta ||f||_{B^s2}^(1-theta)), inhomogeneous."""
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if s1 == s2:
        raise ValueError("interpolation needs s1 != s2")
    part = default_partition(f.grid) if partition is None else partition
    bands, vals = band_lp_norms(f, part, homogeneous=False, p=p)
    mid = float(weighted_lr(vals, bands, theta * s1 + (1 - theta) * s2, r))
    a = float(weighted_lr(vals, bands, s1, r))
    b = float(weighted_lr(vals, bands, s2, r))
    return mid, a**theta * b ** (1 - theta)


def report_json(report: NormReport) -> str:
    return json.dumps(report.to_json(), sort_keys=True)
