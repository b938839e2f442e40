"""Constructive solution of the forced, damped point-vortex system: integrate
positions between forcing jumps with an embedded Runge-Kutta 5(4) pair, decay
intensities analytically, inject vortices at jump times (cadlag: the state at
a jump time includes the new atom), and monitor close approaches.

Intensities are never stored as mutable state: they are recomputed from birth
times inside the vector field, so they carry no integration error.  Positions
are advanced unwrapped (the vector field is periodic) and wrapped whenever a
state or snapshot is exposed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import DOP853, RK45

from .kernels import KernelConfig, smoothed_green, torus_delta, velocity_at, wrap
from .state import EventStream, LawParams, VortexEnsemble, VortexEvent

__all__ = [
    "IntegratorConfig",
    "Vortex",
    "SimulationState",
    "NearCollisionError",
    "Diagnostics",
    "SimulateResult",
    "initial_state",
    "drift",
    "integrate_between_jumps",
    "inject_vortex",
    "simulate",
    "lyapunov",
    "min_pair_distance",
]

_METHODS = {"RK45": RK45, "DOP853": DOP853}


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and safety limits for the adaptive stepper."""

    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    max_step: float = math.inf
    min_pair_distance_abort: float | None = None  # None: reg_delta / 10
    collision_policy: str = "abort"  # or "continue"
    method: str = "RK45"

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.max_step > 0):
            raise ValueError("tolerances and max_step must be positive")
        if self.collision_policy not in ("abort", "continue"):
            raise ValueError("collision_policy must be 'abort' or 'continue'")
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {sorted(_METHODS)}")


class NearCollisionError(RuntimeError):
    """Two vortices came closer than the abort threshold."""

    def __init__(self, time: float, distance: float):
        super().__init__(f"near collision at t={time:.6g}: min pair distance {distance:.3e}")
        self.time = time
        self.distance = distance


@dataclass
class Vortex:
    """Reporting view of one vortex."""

    birth_time: float
    sign: int
    position: np.ndarray
    born: bool


@dataclass
class SimulationState:
    """Vortex system at one instant; arrays are parallel and sorted by birth time.

    ``coeffs[i]`` is the intensity at birth (sign / sqrt(N) for injected
    vortices, the given intensity for initial atoms); the instantaneous
    intensity is ``coeffs[i] * exp(-theta (t - births[i]))``.
    """

    time: float
    births: np.ndarray
    coeffs: np.ndarray
    positions: np.ndarray
    n_born: int
    params: LawParams
    kernel_cfg: KernelConfig
    smoothed: bool = True
    nonlinear: bool = True

    @property
    def vortices(self) -> list[Vortex]:
        return [
            Vortex(float(b), int(np.sign(c)), p, i < self.n_born)
            for i, (b, c, p) in enumerate(zip(self.births, self.coeffs, self.positions))
        ]

    def intensities(self, t: float | None = None) -> np.ndarray:
        t = self.time if t is None else t
        b = self.births[: self.n_born]
        return self.coeffs[: self.n_born] * np.exp(-self.params.theta * (t - b))

    def ensemble(self, t: float | None = None) -> VortexEnsemble:
        if self.n_born == 0:
            return VortexEnsemble.empty()
        return VortexEnsemble(self.intensities(t), wrap(self.positions[: self.n_born]))


def initial_state(
    initial: VortexEnsemble,
    params: LawParams,
    kernel_cfg: KernelConfig,
    smoothed: bool = True,
    nonlinear: bool = True,
) -> SimulationState:
    """State at t = 0 holding the initial atoms (birth time 0)."""
    n = initial.n_atoms
    return SimulationState(
        time=0.0,
        births=np.zeros(n),
        coeffs=initial.intensities.copy(),
        positions=wrap(initial.positions),
        n_born=n,
        params=params,
        kernel_cfg=kernel_cfg,
        smoothed=smoothed,
        nonlinear=nonlinear,
    )


def min_pair_distance(state_or_positions) -> float:
    """Minimum torus distance over born pairs; +inf with fewer than two vortices."""
    if isinstance(state_or_positions, SimulationState):
        pos = state_or_positions.positions[: state_or_positions.n_born]
    else:
        pos = np.atleast_2d(state_or_positions)
    m = pos.shape[0]
    if m < 2:
        return math.inf
    r = torus_delta(pos[:, None, :], pos[None, :, :])
    d = np.sqrt(np.sum(r * r, axis=-1))
    return float(d[np.triu_indices(m, 1)].min())


def drift(state: SimulationState, t: float | None = None) -> np.ndarray:
    """Velocities of all vortices: born ones feel every other born vortex,
    unborn ones do not move.  A single born vortex has exactly zero drift."""
    t = state.time if t is None else t
    out = np.zeros_like(state.positions)
    m = state.n_born
    if m < 2 or not state.nonlinear:
        return out
    pts = state.positions[:m]
    out[:m] = velocity_at(pts, state.intensities(t), pts, state.kernel_cfg, state.smoothed)
    return out


def lyapunov(state: SimulationState) -> float:
    """Close-approach monitor: sum over born ordered pairs of
    (sup G_delta - G_delta(x_i, x_j)); nonnegative, large when vortices crowd."""
    m = state.n_born
    if m < 2:
        return 0.0
    pos = state.positions[:m]
    ii, jj = np.triu_indices(m, 1)
    g = smoothed_green(pos[ii], pos[jj], state.kernel_cfg)
    return float(2.0 * np.sum(state.kernel_cfg.green_sup - g))


@dataclass
class Diagnostics:
    """Per-run bookkeeping collected by :func:`simulate`."""

    min_pair_distance: float = math.inf
    lyapunov_trace: list[tuple[float, float]] = field(default_factory=list)
    n_steps: int = 0
    n_rhs_evals: int = 0
    collision: tuple[float, float] | None = None


@dataclass
class SimulateResult:
    snapshots: list[tuple[float, VortexEnsemble]]
    diagnostics: Diagnostics
    final_state: SimulationState


def _effective_max_step(icfg: IntegratorConfig, params: LawParams, has_events: bool) -> float:
    # Cap steps well below the mean inter-event gap so injections never
    # straddle long steps; pointless when the run carries no events at all.
    cap = 0.1 / params.rate if has_events else math.inf
    return min(icfg.max_step, cap)


def _advance(
    state: SimulationState,
    t_end: float,
    icfg: IntegratorConfig,
    diag: Diagnostics,
    max_step: float,
    interior: list[float] | None = None,
    on_interior=None,
) -> None:
    """Advance born positions in place to t_end, reporting interior times."""
    interior = interior or []
    m = state.n_born
    abort_at = (
        icfg.min_pair_distance_abort
        if icfg.min_pair_distance_abort is not None
        else state.kernel_cfg.reg_delta / 10.0
    )

    def check(t: float, pos: np.ndarray) -> None:
        d = min_pair_distance(pos)
        if d < diag.min_pair_distance:
            diag.min_pair_distance = d
        if d < abort_at:
            if icfg.collision_policy == "abort":
                raise NearCollisionError(t, d)
            if diag.collision is None:
                diag.collision = (t, d)

    if m < 2 or not state.nonlinear or t_end == state.time:
        # Nothing moves: positions are constant on the segment.
        check(state.time, state.positions[:m])
        for s in interior:
            on_interior(s, state.positions[:m])
        state.time = t_end
        return

    births = state.births[:m]
    coeffs = state.coeffs[:m]
    theta = state.params.theta
    cfg = state.kernel_cfg
    smoothed = state.smoothed
    evals = [0]

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        evals[0] += 1
        pts = y.reshape(m, 2)
        xi = coeffs * np.exp(-theta * (t - births))
        return velocity_at(pts, xi, pts, cfg, smoothed).ravel()

    solver = _METHODS[icfg.method](
        rhs,
        state.time,
        state.positions[:m].ravel().copy(),
        t_bound=t_end,
        rtol=icfg.rel_tol,
        atol=icfg.abs_tol,
        max_step=max_step,
    )
    check(state.time, state.positions[:m])
    pending = list(interior)
    while solver.status == "running":
        solver.step()
        if solver.status == "failed":
            raise NearCollisionError(solver.t, min_pair_distance(solver.y.reshape(m, 2)))
        diag.n_steps += 1
        while pending and pending[0] <= solver.t:
            s = pending.pop(0)
            ys = solver.dense_output()(s).reshape(m, 2)
            on_interior(s, ys)
        check(solver.t, solver.y.reshape(m, 2))
    diag.n_rhs_evals += evals[0]
    state.positions[:m] = wrap(solver.y.reshape(m, 2))
    state.time = t_end


def integrate_between_jumps(
    state: SimulationState, t_end: float, icfg: IntegratorConfig | None = None
) -> SimulationState:
    """Deterministic dynamics on (state.time, t_end]; no forcing event may lie inside."""
    if t_end < state.time:
        raise ValueError("t_end must not precede the state time")
    icfg = icfg or IntegratorConfig()
    out = replace(
        state,
        births=state.births.copy(),
        coeffs=state.coeffs.copy(),
        positions=state.positions.copy(),
    )
    _advance(out, t_end, icfg, Diagnostics(), icfg.max_step)
    return out


def inject_vortex(state: SimulationState, event: VortexEvent) -> SimulationState:
    """Append the vortex carried by a forcing event; the state at the jump time
    includes the new atom (right-continuity)."""
    if event.birth_time < state.time:
        raise ValueError("cannot inject an event in the past")
    coeff = event.sign / math.sqrt(state.params.n_scaling)
    out = replace(
        state,
        time=float(event.birth_time),
        births=np.append(state.births, event.birth_time),
        coeffs=np.append(state.coeffs, coeff),
        positions=np.vstack([state.positions, wrap(event.position)[None, :]]),
        n_born=state.n_born + 1,
    )
    return out


def simulate(
    initial: VortexEnsemble,
    forcing: EventStream,
    params: LawParams,
    kernel_cfg: KernelConfig,
    icfg: IntegratorConfig | None = None,
    snapshot_times=(),
    *,
    smoothed: bool = True,
    nonlinear: bool = True,
    record_lyapunov: bool = True,
) -> SimulateResult:
    """Run the jump-interleaved dynamics over [0, forcing.horizon].

    Between consecutive forcing events the positions follow the adaptive
    stepper; at each event the new vortex is appended.  Snapshots are emitted
    at the requested times (an instant coinciding with a jump sees the
    post-jump state).  Fully deterministic given its inputs.
    """
    icfg = icfg or IntegratorConfig()
    snapshot_times = list(map(float, snapshot_times))
    if any(b > a for a, b in zip(snapshot_times[1:], snapshot_times)):
        raise ValueError("snapshot_times must be increasing")
    if snapshot_times and (snapshot_times[0] < 0 or snapshot_times[-1] > forcing.horizon):
        raise ValueError("snapshot_times must lie within [0, horizon]")

    # Pre-size the arrays: initial atoms (birth 0) then the event stream.
    n0 = initial.n_atoms
    n_total = n0 + forcing.n_events
    births = np.concatenate([np.zeros(n0), forcing.times])
    coeffs = np.concatenate(
        [initial.intensities, forcing.signs / math.sqrt(params.n_scaling)]
    )
    positions = np.vstack([wrap(initial.positions).reshape(-1, 2), wrap(forcing.positions)])
    state = SimulationState(
        time=0.0,
        births=births,
        coeffs=coeffs,
        positions=positions,
        n_born=n0,
        params=params,
        kernel_cfg=kernel_cfg,
        smoothed=smoothed,
        nonlinear=nonlinear,
    )
    diag = Diagnostics()
    max_step = _effective_max_step(icfg, params, forcing.n_events > 0)
    snapshots: list[tuple[float, VortexEnsemble]] = []
    snap_idx = 0

    def ensemble_at(t: float, born_positions: np.ndarray) -> VortexEnsemble:
        m = born_positions.shape[0]
        if m == 0:
            return VortexEnsemble.empty()
        xi = state.coeffs[:m] * np.exp(-params.theta * (t - state.births[:m]))
        return VortexEnsemble(xi, wrap(born_positions))

    def emit_now(t: float) -> None:
        nonlocal snap_idx
        while snap_idx < len(snapshot_times) and snapshot_times[snap_idx] <= t:
            s = snapshot_times[snap_idx]
            snapshots.append((s, state.ensemble(s)))
            snap_idx += 1

    def mark(t: float) -> None:
        if record_lyapunov:
            diag.lyapunov_trace.append((t, lyapunov(state)))

    # Events at t = 0 are part of the initial (cadlag) state.
    next_event = 0
    while next_event < forcing.n_events and forcing.times[next_event] == 0.0:
        state.n_born += 1
        next_event += 1
    emit_now(0.0)
    mark(0.0)

    def run_to(t_target: float) -> None:
        nonlocal snap_idx
        interior = [
            s for s in snapshot_times[snap_idx:] if state.time < s < t_target
        ]

        def on_interior(s: float, pos: np.ndarray) -> None:
            snapshots.append((s, ensemble_at(s, pos)))

        _advance(state, t_target, icfg, diag, max_step, interior, on_interior)
        snap_idx += len(interior)

    while next_event < forcing.n_events:
        t_ev = float(forcing.times[next_event])
        run_to(t_ev)
        while next_event < forcing.n_events and forcing.times[next_event] == t_ev:
            state.n_born += 1
            next_event += 1
        emit_now(t_ev)
        mark(t_ev)

    run_to(forcing.horizon)
    emit_now(forcing.horizon)
    mark(forcing.horizon)
    return SimulateResult(snapshots, diag, state)
