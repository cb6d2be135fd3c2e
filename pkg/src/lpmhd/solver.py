"""Friedrichs (sharp Fourier cutoff) Galerkin scheme for non-resistive MHD.

The truncated system on the ball |k| <= n is

    u_t - nu Lap u = -J_n P[(u.grad)u] + J_n P[(b.grad)b]
    b_t            = -J_n[(u.grad)b]   + J_n[(b.grad)u]

with P the Leray projector.  Time stepping is a Lawson (integrating
factor) fourth-order Runge-Kutta scheme: the heat semigroup acts exactly on
u, b has no linear part.  For n B <= N/3 every quadratic product of
ball-supported fields is computed without aliasing inside the ball, so
the discrete energy balance is exact up to time discretization.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .besov import NormLedger, chemin_lerner_norm
from .grid import Grid, VectorField, _grad_coeffs, _leray_coeffs, random_divfree_field
from .littlewood_paley import default_partition
from .spf import SPFError, atomic_write, encode, read_field

__all__ = [
    "SolverConfig",
    "MHDState",
    "Tendency",
    "RunRecord",
    "AprioriReport",
    "CFLViolation",
    "InitialDataError",
    "GalerkinRun",
    "friedrichs_project",
    "ball_mask",
    "initial_state",
    "rhs",
    "step",
    "simulate",
    "energy_identity_residual",
    "apriori_monitor",
    "cauchy_study",
    "perturbation_study",
    "PRESETS",
]

PRESETS = ("orszag_tang", "taylor_green", "zero", "random")
TERMINATIONS = ("completed", "cfl_violation", "blow_up", "monitor_bound_exceeded")


class CFLViolation(ValueError):
    """The time step exceeds the advective CFL limit."""


class InitialDataError(ValueError):
    """Initial data could not be built or read."""


@dataclass(frozen=True)
class SolverConfig:
    d: int = 2
    N: int = 64
    B: int = 1
    nu: float = 0.1
    n: int | None = None
    dt: float = 1e-3
    T_end: float = 1.0
    initial: str | dict = "orszag_tang"
    monitor_every: int = 1
    s: float = 2.0
    cfl: float = 0.5
    snapshot_every: int = 0
    seed: int = 0
    max_norm: float = 1e8
    data_kmax: float | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        Grid(self.d, self.N, self.B)
        if not self.nu > 0:
            raise ValueError(f"viscosity nu must be > 0, got {self.nu}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.T_end < 0:
            raise ValueError(f"T_end must be >= 0, got {self.T_end}")
        if self.monitor_every < 1:
            raise ValueError("monitor_every must be >= 1")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")
        if not 0 < self.cfl:
            raise ValueError("cfl must be > 0")
        n = self.cutoff
        if n <= 0:
            raise ValueError(f"cutoff n must be > 0, got {n}")
        if 3 * n * self.B > self.N:
            raise ValueError(f"cutoff n={n} exceeds the dealiasing limit N/(3B) = {self.N / (3 * self.B):.4g}")
        if isinstance(self.initial, str):
            if self.initial not in PRESETS:
                raise ValueError(f"unknown preset {self.initial!r}; choose from {', '.join(PRESETS)}")
        elif not (isinstance(self.initial, dict) and set(self.initial) == {"u", "b"}):
            raise ValueError("initial must be a preset name or {'u': path, 'b': path}")

    @property
    def cutoff(self) -> float:
        return self.N // (3 * self.B) if self.n is None else self.n

    @property
    def grid(self) -> Grid:
        return Grid(self.d, self.N, self.B)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> SolverConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> SolverConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_overrides(self, overrides: dict) -> SolverConfig:
        """Apply key=value overrides given as strings (JSON-parsed when possible)."""
        known = {f.name for f in dataclasses.fields(self)}
        data = self.to_dict()
        for key, raw in overrides.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            if isinstance(raw, str):
                try:
                    raw = json.loads(raw)
                except json.JSONDecodeError:
                    pass
            data[key] = raw
        return SolverConfig.from_dict(data)

    def replace(self, **kw) -> SolverConfig:
        return dataclasses.replace(self, **kw)


@dataclass(frozen=True, eq=False)
class MHDState:
    u: VectorField
    b: VectorField
    t: float
    n: float

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def energy(self) -> float:
        return float(np.sum(np.abs(self.u.coeffs) ** 2) + np.sum(np.abs(self.b.coeffs) ** 2))

    def support_leakage(self) -> float:
        """Relative L^2 mass outside the ball |k| <= n."""
        out = ~ball_mask(self.grid, self.n)
        tot = self.energy()
        if tot == 0:
            return 0.0
        leak = np.sum(np.abs(self.u.coeffs[:, out]) ** 2) + np.sum(np.abs(self.b.coeffs[:, out]) ** 2)
        return float(math.sqrt(leak / tot))


@dataclass(frozen=True, eq=False)
class Tendency:
    du: VectorField
    db: VectorField
    includes_viscous: bool


def ball_mask(grid: Grid, n: float) -> np.ndarray:
    return grid.kabs <= n * (1 + 1e-12)


def friedrichs_project(f: VectorField, n: float) -> VectorField:
    """J_n f: keep Fourier modes with |k| <= n."""
    g = f.grid
    if n > g.N / (2 * g.B):
        raise ValueError(f"cutoff n={n} exceeds the Nyquist radius N/(2B) = {g.N / (2 * g.B)}")
    return VectorField(g, f.coeffs * ball_mask(g, n), div_free=f.div_free)


# initial data ---------------------------------------------------------------

def _preset_physical(name: str, grid: Grid):
    X = grid.coordinates()
    zero = np.zeros(grid.shape)
    if name == "orszag_tang":
        if grid.d != 2:
            raise InitialDataError("the orszag_tang preset is two-dimensional")
        x, y = X
        return np.stack([np.sin(y), np.sin(x)]), np.stack([np.sin(2 * y), np.sin(x)])
    if name == "taylor_green":
        if grid.d == 2:
            x, y = X
            u = np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)])
            b = 0.5 * np.stack([np.sin(2 * y), np.sin(2 * x)])
        else:
            x, y, z = X
            u = np.stack([np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), zero])
            b = 0.5 * np.stack([np.sin(z), np.sin(x), np.sin(y)])
        return u, b
    raise InitialDataError(f"no physical form for preset {name!r}")


def _read_initial(path, grid: Grid) -> VectorField:
    try:
        f = read_field(path, vector=True)
    except OSError as exc:
        raise InitialDataError(f"cannot read initial data file {path}: {exc.strerror}") from None
    except SPFError as exc:
        raise InitialDataError(f"malformed initial data file {path}: {exc}") from None
    if f.grid != grid:
        raise InitialDataError(f"{path}: grid {f.grid} does not match the configured {grid}")
    return f


def initial_state(config: SolverConfig, n: float | None = None) -> MHDState:
    """J_n-projected, divergence-free initial data for ``config`` (cutoff ``n`` overrides)."""
    grid = config.grid
    n = config.cutoff if n is None else n
    init = config.initial
    if isinstance(init, dict):
        u, b = _read_initial(init["u"], grid), _read_initial(init["b"], grid)
        try:
            u, b = u.certify(1e-10), b.certify(1e-10)
        except ValueError as exc:
            raise InitialDataError(f"initial data must be divergence-free: {exc}") from None
    elif init == "zero":
        u, b = VectorField.zeros(grid), VectorField.zeros(grid)
    elif init == "random":
        km = int(config.data_kmax) if config.data_kmax is not None else None
        u = random_divfree_field(grid, config.s + 1.0, config.seed, kmax=km)
        b = random_divfree_field(grid, config.s + 1.0, config.seed + 1, kmax=km)
        if config.data_kmax is not None:
            u, b = friedrichs_project(u, config.data_kmax), friedrichs_project(b, config.data_kmax)
        u = u * (config.amplitude / max(u.l2(), 1e-300))
        b = b * (config.amplitude / max(b.l2(), 1e-300))
        u = VectorField(grid, u.coeffs, True)
        b = VectorField(grid, b.coeffs, True)
    else:
        pu, pb = _preset_physical(init, grid)
        u = VectorField(grid, _leray_coeffs(grid, grid.forward(pu)) * config.amplitude, True)
        b = VectorField(grid, _leray_coeffs(grid, grid.forward(pb)) * config.amplitude, True)
    if config.data_kmax is not None and init != "random":
        u, b = friedrichs_project(u, config.data_kmax), friedrichs_project(b, config.data_kmax)
    return MHDState(friedrichs_project(u, n), friedrichs_project(b, n), 0.0, n)


# tendencies -----------------------------------------------------------------

class _Galerkin:
    """Precomputed multipliers and the batched nonlinear operator for one (grid, n, nu)."""

    def __init__(self, grid: Grid, n: float, nu: float):
        self.grid, self.n, self.nu = grid, n, nu
        self.mask = ball_mask(grid, n)
        self.k2 = grid.k2

    def nonlinear(self, y: np.ndarray) -> tuple[np.ndarray, float]:
        """Tendencies of y = stack(u, b), shape (2, d, ...); also max(|u|, |b|) on the grid."""
        g, d = self.grid, self.grid.d
        grads = _grad_coeffs(g, y.reshape((2 * d,) + g.shape))  # (d, 2d, ...)
        phys = g.inverse(np.concatenate([y.reshape((2 * d,) + g.shape),
                                         grads.reshape((2 * d * d,) + g.shape)]))
        u, b = phys[:d], phys[d:2 * d]
        gr = phys[2 * d:].reshape((d, 2 * d) + g.shape)
        gu, gb = gr[:, :d], gr[:, d:]
        # (a.grad) c_j = sum_i a_i d_i c_j
        adv = lambda a, gc: np.einsum("i...,ij...->j...", a, gc)
        out_phys = np.concatenate([adv(b, gb) - adv(u, gu), adv(b, gu) - adv(u, gb)])
        out = g.forward(out_phys).reshape((2, d) + g.shape)
        out[0] = _leray_coeffs(g, out[0])
        out *= self.mask
        speed = max(np.sqrt(np.sum(u**2, axis=0)).max(), np.sqrt(np.sum(b**2, axis=0)).max())
        return out, float(speed)

    def dissipation_rate(self, y: np.ndarray) -> float:
        """2 nu ||grad u||^2."""
        return 2.0 * self.nu * float(np.sum(self.k2 * np.abs(y[0]) ** 2))

    def factor(self, h: float) -> np.ndarray:
        e = np.ones((2, 1) + self.grid.shape)
        e[0, 0] = np.exp(-self.nu * self.k2 * h)
        return e

    def lawson_rk4(self, y: np.ndarray, h: float) -> tuple[np.ndarray, float, float]:
        """One step; returns (y_new, dissipation increment, max speed at the start)."""
        E1, E = self.factor(0.5 * h), self.factor(h)
        k1, speed = self.nonlinear(y)
        y2 = E1 * (y + 0.5 * h * k1)
        k2, _ = self.nonlinear(y2)
        y3 = E1 * y + 0.5 * h * k2
        k3, _ = self.nonlinear(y3)
        y4 = E * y + h * (E1 * k3)
        k4, _ = self.nonlinear(y4)
        y_new = E * y + (h / 6.0) * (E * k1 + 2.0 * E1 * (k2 + k3) + k4)
        q = self.dissipation_rate
        dq = (h / 6.0) * (q(y) + 2.0 * q(y2) + 2.0 * q(y3) + q(y4))
        return y_new, dq, speed


def _stack(state: MHDState) -> np.ndarray:
    return np.stack([state.u.coeffs, state.b.coeffs])


def _unstack(y: np.ndarray, grid: Grid, t: float, n: float) -> MHDState:
    return MHDState(VectorField(grid, y[0], True), VectorField(grid, y[1], True), t, n)


def rhs(state: MHDState, nu: float = 0.0, include_viscous: bool = False) -> Tendency:
    """Galerkin tendencies; the viscous term -nu |k|^2 u is added only on request."""
    g = _Galerkin(state.grid, state.n, nu)
    out, _ = g.nonlinear(_stack(state))
    if include_viscous:
        out[0] -= nu * state.grid.k2 * state.u.coeffs
    return Tendency(VectorField(state.grid, out[0], True), VectorField(state.grid, out[1], True),
                    include_viscous)


def step(state: MHDState, dt: float, nu: float, cfl: float | None = 0.5) -> MHDState:
    """One Lawson-RK4 step; raises CFLViolation if ``cfl`` is given and violated."""
    g = _Galerkin(state.grid, state.n, nu)
    y, _, speed = g.lawson_rk4(_stack(state), dt)
    if cfl is not None and speed > 0 and dt > cfl * state.grid.dx / speed:
        raise CFLViolation(f"dt={dt} exceeds CFL limit {cfl * state.grid.dx / speed:.4g}")
    return _unstack(y, state.grid, state.t + dt, state.n)


def cfl_limit(state: MHDState, cfl: float) -> float:
    g = state.grid
    phys = g.inverse(_stack(state).reshape((2 * g.d,) + g.shape))
    speed = max(np.sqrt(np.sum(phys[:g.d] ** 2, axis=0)).max(),
                np.sqrt(np.sum(phys[g.d:] ** 2, axis=0)).max())
    return math.inf if speed == 0 else cfl * g.dx / float(speed)


# runs -----------------------------------------------------------------------

@dataclass
class RunRecord:
    config: SolverConfig
    times: list[float] = field(default_factory=list)
    energy_u: list[float] = field(default_factory=list)
    energy_b: list[float] = field(default_factory=list)
    grad_u2: list[float] = field(default_factory=list)
    dissipation: list[float] = field(default_factory=list)
    hs1_u: list[float] = field(default_factory=list)
    hs_b: list[float] = field(default_factory=list)
    div_b: list[float] = field(default_factory=list)
    leakage: list[float] = field(default_factory=list)
    band_u: list[np.ndarray] = field(default_factory=list)
    band_b: list[np.ndarray] = field(default_factory=list)
    bands: list[int] = field(default_factory=list)
    termination: str = "completed"
    message: str = ""
    steps: int = 0
    snapshots: list[dict] = field(default_factory=list)
    flags: list[str] = field(default_factory=lambda: ["viscous_term_in_integrator"])
    final_state: MHDState | None = None

    @property
    def ledger_u(self) -> NormLedger:
        return NormLedger.from_snapshots(self.times, self.band_u, self.bands, homogeneous=False)

    @property
    def ledger_b(self) -> NormLedger:
        return NormLedger.from_snapshots(self.times, self.band_b, self.bands, homogeneous=False)

    def to_json(self) -> dict:
        resid = energy_identity_residual(self)
        ap = apriori_monitor(self)
        return {
            "config": self.config.to_dict(),
            "termination": self.termination,
            "message": self.message,
            "steps": self.steps,
            "flags": list(self.flags),
            "series": {
                "t": self.times,
                "energy_u": self.energy_u,
                "energy_b": self.energy_b,
                "grad_u2": self.grad_u2,
                "dissipation_integral": self.dissipation,
                "hs1_u": self.hs1_u,
                "hs_b": self.hs_b,
                "div_b": self.div_b,
                "support_leakage": self.leakage,
                "energy_residual": [float(r) for r in resid],
            },
            "energy_residual_max": float(np.max(resid)) if len(resid) else 0.0,
            "apriori": ap.to_json(),
            "snapshots": self.snapshots,
        }


class GalerkinRun:
    """Stepper holding one run's state and monitor series."""

    def __init__(self, config: SolverConfig, state: MHDState | None = None, snapshot_dir=None):
        self.config = config
        self.state = initial_state(config) if state is None else state
        self.grid = self.state.grid
        self.op = _Galerkin(self.grid, self.state.n, config.nu)
        self.y = _stack(self.state)
        self.t = self.state.t
        self.Q = 0.0
        self.k = 0
        self.done = False
        self.snapshot_dir = None if snapshot_dir is None else Path(snapshot_dir)
        self.record = RunRecord(config)
        part = default_partition(self.grid)
        self.record.bands = list(part.inhom_bands)
        self._phi2 = (part.inhom_stack() ** 2).reshape(len(part.inhom_bands), -1)
        self._w_u = (1.0 + self.grid.k2) ** (config.s - 1.0)
        self._w_b = (1.0 + self.grid.k2) ** config.s
        limit = cfl_limit(self.state, config.cfl)
        if config.dt > limit:
            raise CFLViolation(f"dt={config.dt} violates the CFL limit {limit:.4g} at t=0 "
                               f"(cfl={config.cfl}, dx={self.grid.dx:.4g})")
        n_full = math.floor(config.T_end / config.dt + 1e-9)
        rem = config.T_end - n_full * config.dt
        self.schedule = [config.dt] * n_full
        self._times = [self.t + config.dt * (i + 1) for i in range(n_full)]
        if rem > 1e-12 * max(config.T_end, 1.0):
            self.schedule.append(rem)
            self._times.append(self.t + config.T_end)
        self.done = not self.schedule
        self._monitor()
        self._snapshot()

    def _monitor(self):
        r, y, g = self.record, self.y, self.grid
        pu = (np.abs(y[0]) ** 2).sum(axis=0)
        pb = (np.abs(y[1]) ** 2).sum(axis=0)
        r.times.append(self.t)
        r.energy_u.append(float(pu.sum()))
        r.energy_b.append(float(pb.sum()))
        r.grad_u2.append(float(np.sum(g.k2 * pu)))
        r.dissipation.append(self.Q)
        r.hs1_u.append(float(np.sqrt(np.sum(self._w_u * pu))))
        r.hs_b.append(float(np.sqrt(np.sum(self._w_b * pb))))
        r.band_u.append(np.sqrt(np.maximum(self._phi2 @ pu.ravel(), 0.0)))
        r.band_b.append(np.sqrt(np.maximum(self._phi2 @ pb.ravel(), 0.0)))
        b = VectorField(g, y[1])
        top = np.sqrt(pb.max())
        r.div_b.append(b.divergence_residual() if top > 0 else 0.0)
        tot = pu.sum() + pb.sum()
        out = ~self.op.mask
        r.leakage.append(float(np.sqrt((pu[out].sum() + pb[out].sum()) / tot)) if tot > 0 else 0.0)

    def _snapshot(self):
        every = self.config.snapshot_every
        if self.snapshot_dir is None or every <= 0 or self.k % every:
            return
        tag = f"{self.k:06d}"
        paths = {}
        for name, c in (("u", self.y[0]), ("b", self.y[1])):
            p = self.snapshot_dir / f"{name}_{tag}.spf"
            atomic_write(p, encode(self.grid, c))
            paths[name] = p.name
        pu = (np.abs(self.y[0]) ** 2).sum(axis=0)
        self.record.snapshots.append({"step": self.k, "t": self.t, "files": paths,
                                      "hs1_u": float(np.sqrt(np.sum(self._w_u * pu)))})

    def _terminate(self, reason: str, message: str):
        self.record.termination = reason
        self.record.message = message
        self.done = True

    def advance(self) -> None:
        """Take one step, or mark the run finished (completed or terminated early)."""
        if self.done:
            return
        h = self.schedule[self.k]
        y, dq, speed = self.op.lawson_rk4(self.y, h)
        if speed > 0 and h > self.config.cfl * self.grid.dx / speed * (1 + 1e-12):
            self._terminate("cfl_violation", f"CFL violated at t={self.t:.6g} (max speed {speed:.4g})")
            return
        if not np.all(np.isfinite(y)) or not math.isfinite(dq):
            self._terminate("blow_up", f"non-finite state after t={self.t:.6g}")
            return
        self.y, self.Q = y, self.Q + dq
        self.t = self._times[self.k]
        self.k += 1
        last = self.k == len(self.schedule)
        if last or self.k % self.config.monitor_every == 0:
            self._monitor()
            r, bound = self.record, self.config.max_norm
            if max(math.sqrt(r.energy_u[-1] + r.energy_b[-1]), r.hs_b[-1], r.hs1_u[-1]) > bound:
                self._terminate("monitor_bound_exceeded", f"monitored norm above {bound:g} at t={self.t:.6g}")
        self._snapshot()
        if last:
            self.done = True

    def run(self) -> RunRecord:
        while not self.done:
            self.advance()
        return self.finish()

    def finish(self) -> RunRecord:
        r = self.record
        if r.times[-1] != self.t:
            self._monitor()
        r.steps = self.k
        r.final_state = _unstack(self.y, self.grid, self.t, self.state.n)
        return r


def simulate(config: SolverConfig, state: MHDState | None = None, snapshot_dir=None) -> RunRecord:
    """Integrate from the configured initial data to ``T_end`` or early termination.

    Raises CFLViolation before stepping when dt violates the CFL limit at t = 0.
    """
    return GalerkinRun(config, state, snapshot_dir).run()


# diagnostics ----------------------------------------------------------------

def energy_identity_residual(record: RunRecord, method: str = "stages") -> np.ndarray:
    """|E(t) + 2 nu int_0^t ||grad u||^2 - E(0)| / E(0) at the monitor times.

    ``method="stages"`` uses the dissipation integral accumulated with the
    Runge-Kutta stage values (fourth order); ``"trapezoid"`` integrates the
    monitored ||grad u||^2 series instead.
    """
    E = np.asarray(record.energy_u) + np.asarray(record.energy_b)
    if E.size == 0:
        return E
    if method == "stages":
        Q = np.asarray(record.dissipation)
    elif method == "trapezoid":
        Q = 2.0 * record.config.nu * cumulative_trapezoid(record.grad_u2, record.times, initial=0.0)
    else:
        raise ValueError(f"method must be 'stages' or 'trapezoid', got {method!r}")
    scale = E[0] if E[0] > 0 else 1.0
    return np.abs(E + Q - E[0]) / scale


@dataclass
class AprioriReport:
    s: float
    terms: dict
    total: float
    b0_norm: float
    bootstrap_holds: bool
    T_prime: float | None
    total_series: list[float]

    def to_json(self) -> dict:
        return {"s": self.s, "terms": self.terms, "total": self.total, "b0_besov": self.b0_norm,
                "bootstrap_holds": self.bootstrap_holds, "T_prime": self.T_prime,
                "total_series": self.total_series}


def _apriori_terms(lu: NormLedger, lb: NormLedger, s: float) -> dict:
    return {
        "u_Linf_Bs-1_sq": chemin_lerner_norm(lu, math.inf, s - 1.0, 2.0) ** 2,
        "u_L1_Bs+1": chemin_lerner_norm(lu, 1.0, s + 1.0, 2.0),
        "u_L2_Bs_sq": chemin_lerner_norm(lu, 2.0, s, 2.0) ** 2,
        "b_Linf_Bs_sq": chemin_lerner_norm(lb, math.inf, s, 2.0) ** 2,
    }


def apriori_monitor(record: RunRecord, s: float | None = None) -> AprioriReport:
    """The four Chemin-Lerner quantities of the uniform bound and the b bootstrap check.

    Norms are inhomogeneous B^._{2,2}; time norms use the trapezoid rule on the
    monitor times.  ``T_prime`` is the first monitor time at which
    ||b||_{L~^inf_t B^s} > 2 ||b_0||_{B^s} (None if the bound holds throughout).
    """
    s = record.config.s if s is None else s
    lu, lb = record.ledger_u, record.ledger_b
    terms = _apriori_terms(lu, lb, s)
    jj = np.asarray(lb.bands, dtype=float)[:, None]
    wsq = lambda v, shift: np.sum(4.0 ** ((s + shift) * jj) * v**2, axis=0)
    b_sup = np.maximum.accumulate(lb.values, axis=1)
    b_sup_norm = np.sqrt(wsq(b_sup, 0.0))
    b0 = float(b_sup_norm[0])
    bad = np.nonzero(b_sup_norm > 2.0 * b0 * (1 + 1e-14))[0]
    # running values of the four terms at every monitor time
    t, vu = lu.times, lu.values
    u_sup = np.maximum.accumulate(vu, axis=1)
    u_l1 = cumulative_trapezoid(vu, t, axis=1, initial=0.0)
    u_l2sq = cumulative_trapezoid(vu**2, t, axis=1, initial=0.0)
    series = (wsq(u_sup, -1.0) + np.sqrt(wsq(u_l1, 1.0)) + wsq(np.sqrt(u_l2sq), 0.0)
              + b_sup_norm**2)
    return AprioriReport(s, terms, float(sum(terms.values())), b0, bad.size == 0,
                         float(lb.times[bad[0]]) if bad.size else None, series.tolist())


@dataclass
class CauchyTable:
    n_list: list
    D: dict
    rate: float | None
    flags: list[str]
    terminations: dict

    def to_json(self) -> dict:
        return {"n": self.n_list, "D": {str(k): v for k, v in self.D.items()}, "rate": self.rate,
                "flags": self.flags, "terminations": {str(k): v for k, v in self.terminations.items()}}


def _lockstep(runs: list[GalerkinRun], observe) -> None:
    # runs share one schedule, so they finish on the same step
    observe()
    while not any(r.done for r in runs):
        for r in runs:
            r.advance()
        if any(r.record.termination != "completed" for r in runs):
            break
        observe()


def cauchy_study(config: SolverConfig, n_list) -> CauchyTable:
    """D(n, 2n) = sup_t (||u_n - u_2n||^2 + ||b_n - b_2n||^2) for each n, from common data.

    All runs share the time grid and are stepped together; the decay rate
    is the least-squares slope of -log D against log n.
    """
    n_list = [float(n) if not float(n).is_integer() else int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    cutoffs = sorted(set(n_list) | {2 * n for n in n_list})
    top = config.N / (3 * config.B)
    if cutoffs[-1] > top:
        raise ValueError(f"cutoff 2n={cutoffs[-1]} exceeds N/(3B) = {top:.4g}; increase N")
    base = config.replace(n=cutoffs[-1])
    full = initial_state(base)
    runs = {}
    for n in cutoffs:
        st = MHDState(friedrichs_project(full.u, n), friedrichs_project(full.b, n), 0.0, n)
        runs[n] = GalerkinRun(config.replace(n=n), st)
    D = {n: 0.0 for n in n_list}

    def observe():
        for n in n_list:
            a, b = runs[n].y, runs[2 * n].y
            D[n] = max(D[n], float(np.sum(np.abs(a - b) ** 2)))

    _lockstep(list(runs.values()), observe)
    recs = {n: r.finish() for n, r in runs.items()}
    flags = [f"run_n={n}_{rec.termination}" for n, rec in recs.items() if rec.termination != "completed"]
    if flags:
        flags.append("partial")
    ns = np.array([n for n in n_list if D[n] > 0], dtype=float)
    rate = None
    if ns.size >= 2:
        rate = float(-np.polyfit(np.log(ns), np.log([D[n] for n in ns.tolist()]), 1)[0])
    return CauchyTable(list(n_list), D, rate, flags, {n: r.termination for n, r in recs.items()})


@dataclass
class PerturbationReport:
    delta: float
    initial_difference: float
    sup_difference: float
    final_difference: float
    identical: bool
    termination: str

    @property
    def amplification(self) -> float:
        return self.final_difference / self.delta if self.delta > 0 else 0.0

    def to_json(self) -> dict:
        return {"delta": self.delta, "initial_difference": self.initial_difference,
                "sup_difference": self.sup_difference, "final_difference": self.final_difference,
                "amplification": self.amplification, "bitwise_identical": self.identical,
                "termination": self.termination}


def perturbation_direction(config: SolverConfig) -> tuple[np.ndarray, np.ndarray]:
    """Unit-L^2 divergence-free direction (du, db) inside the cutoff ball."""
    g, n = config.grid, config.cutoff
    du = friedrichs_project(random_divfree_field(g, config.s + 1.0, config.seed + 1000), n).coeffs
    db = friedrichs_project(random_divfree_field(g, config.s + 1.0, config.seed + 1001), n).coeffs
    norm = math.sqrt(np.sum(np.abs(du) ** 2) + np.sum(np.abs(db) ** 2))
    return du / norm, db / norm


def perturbation_study(config: SolverConfig, delta: float) -> PerturbationReport:
    """Run from the data and from data moved by ``delta`` in L^2; track the separation."""
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    base = initial_state(config)
    du, db = perturbation_direction(config)
    g = config.grid
    pert = MHDState(VectorField(g, base.u.coeffs + delta * du, True),
                    VectorField(g, base.b.coeffs + delta * db, True), 0.0, base.n)
    a, b = GalerkinRun(config, base), GalerkinRun(config, pert)
    diffs = []

    def observe():
        diffs.append(float(np.sqrt(np.sum(np.abs(a.y - b.y) ** 2))))

    _lockstep([a, b], observe)
    ra, rb = a.finish(), b.finish()
    term = ra.termination if ra.termination != "completed" else rb.termination
    identical = bool(np.array_equal(a.y, b.y))
    return PerturbationReport(delta, diffs[0], max(diffs), diffs[-1], identical, term)
