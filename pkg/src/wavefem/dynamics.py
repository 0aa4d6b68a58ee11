"""Time integration of the semi-discrete wave system.

The integrator is the Stormer-Verlet scheme: a half-step kick of the
velocity from the scalar gradient, a full-step drift of the scalar from
the velocity divergence, and a second half-kick from the updated scalar.
It is explicit, time-reversible and symplectic, so the discrete energy
oscillates within an O(dt^2) band instead of drifting; any energy growth
signals a stability violation, which makes long runs a sharp test of the
spatial operators.

Velocity mass solves are exact per-cell block solves; the scalar mass
matrix is factorized once and reused across steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .assembly import AssembledOperators, assemble
from .elements import DofMap, build_dof_maps, h_dof_coords
from .mesh import BcSpec, Mesh
from .spectral import max_eigenvalue

__all__ = [
    "FieldState",
    "SimulationConfig",
    "SimulationResult",
    "ConfigurationError",
    "InstabilityError",
    "interpolate_state",
    "verlet_step",
    "energy",
    "stable_dt_estimate",
    "simulate",
]


class ConfigurationError(ValueError):
    """A run configuration violates its preconditions."""


class InstabilityError(RuntimeError):
    """The time integration produced non-finite values."""

    def __init__(self, step: int):
        super().__init__(f"non-finite field values after step {step}; "
                         "time step exceeds the stability limit")
        self.step = step


@dataclass
class FieldState:
    """Coefficient vectors of the velocity components and the scalar."""

    u: list                 # d arrays of length m_u
    h: np.ndarray           # length m_h
    time: float = 0.0

    def __post_init__(self):
        self.u = [np.asarray(c, dtype=float) for c in self.u]
        self.h = np.asarray(self.h, dtype=float)
        lengths = {c.shape for c in self.u}
        if len(lengths) > 1:
            raise ValueError("velocity components have mismatched lengths")


def interpolate_state(mesh: Mesh, dofs: DofMap, h0: Callable,
                      u0: Optional[Callable] = None) -> FieldState:
    """Nodal interpolation of initial data onto the two spaces.

    ``h0`` is sampled at the scalar nodes (vertices and midpoints); ``u0``,
    when given, must return a ``dim``-vector and is sampled per cell at the
    cell corners (the velocity nodes of each cell's own copy).
    """
    coords = h_dof_coords(mesh, dofs)
    h = np.array([float(h0(x)) for x in coords])
    u = [np.zeros(dofs.m_u) for _ in range(mesh.dim)]
    if u0 is not None:
        for c in range(mesh.n_cells):
            for j, x in enumerate(mesh.cell_coords[c]):
                vec = np.asarray(u0(x), dtype=float)
                for i in range(mesh.dim):
                    u[i][dofs.u_cell_dofs[c, j]] = vec[i]
    return FieldState(u=u, h=h, time=0.0)


def verlet_step(state: FieldState, ops: AssembledOperators, dt: float,
                wave_speed: float = 1.0) -> FieldState:
    """One Stormer-Verlet step: half-kick, drift, half-kick.

    Raises :class:`InstabilityError` when the updated scalar field is no
    longer finite.
    """
    c = wave_speed
    h_solve = ops.h_mass_solver()
    half = 0.5 * dt * c
    u_half = [state.u[i] - half * ops.u_mass.solve(ops.grad[i] @ state.h
                                                   + ops.dirichlet_rhs[i])
              for i in range(ops.dim)]
    div = -ops.neumann_rhs.copy()
    for i in range(ops.dim):
        div += ops.grad[i].T @ u_half[i]
    h_new = state.h + dt * c * h_solve(div)
    u_new = [u_half[i] - half * ops.u_mass.solve(ops.grad[i] @ h_new
                                                 + ops.dirichlet_rhs[i])
             for i in range(ops.dim)]
    if not np.all(np.isfinite(h_new)):
        raise InstabilityError(step=0)
    return FieldState(u=u_new, h=h_new, time=state.time + dt)


def energy(state: FieldState, ops: AssembledOperators) -> float:
    """Discrete energy: half the mass-weighted squares of both fields."""
    e = 0.5 * float(state.h @ (ops.h_mass @ state.h))
    for i in range(ops.dim):
        e += 0.5 * float(state.u[i] @ ops.u_mass.matvec(state.u[i]))
    return e


def stable_dt_estimate(ops: AssembledOperators, wave_speed: float = 1.0,
                       lam_max: Optional[float] = None) -> float:
    """Linear stability bound of the scheme, 2 / (c sqrt(lambda_max)).

    The fastest oscillation of the semi-discrete system has frequency
    c*sqrt(lambda_max); the leapfrog kernel is stable while that
    oscillation is resolved with dt * frequency <= 2.
    """
    if lam_max is None:
        lam_max = max_eigenvalue(ops)
    return 2.0 / (wave_speed * np.sqrt(lam_max))


@dataclass
class SimulationConfig:
    dt: float
    n_steps: int
    energy_stride: int = 1
    ic_h: Callable = lambda x: 0.0
    ic_u: Optional[Callable] = None
    wave_speed: float = 1.0
    allow_unstable_dt: bool = False

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ConfigurationError("dt must be positive")
        if self.n_steps < 1:
            raise ConfigurationError("n_steps must be >= 1")
        if self.energy_stride < 1:
            raise ConfigurationError("energy_stride must be >= 1")


@dataclass
class SimulationResult:
    times: np.ndarray
    energies: np.ndarray
    final_state: FieldState
    stable_dt: Optional[float]
    aborted: bool = False
    abort_step: Optional[int] = None

    @property
    def energy_errors(self) -> np.ndarray:
        e0 = self.energies[0]
        scale = abs(e0) if e0 != 0.0 else 1.0
        return (self.energies - e0) / scale


def simulate(mesh: Mesh, bc: BcSpec, config: SimulationConfig,
             ops: Optional[AssembledOperators] = None,
             snapshot_callback: Optional[Callable] = None,
             snapshot_stride: Optional[int] = None) -> SimulationResult:
    """Run the wave system with Verlet stepping and energy recording.

    Energy is sampled at step 0 and every ``energy_stride`` steps. Unless
    ``config.allow_unstable_dt`` is set, the requested dt is checked
    against the stability estimate first. On instability the partial
    series is returned with ``aborted`` set.
    """
    dofs = ops.dofs if ops is not None else build_dof_maps(mesh)
    if ops is None:
        ops = assemble(mesh, dofs, bc)
    stable_dt = None
    if not config.allow_unstable_dt:
        stable_dt = stable_dt_estimate(ops, config.wave_speed)
        if config.dt > stable_dt:
            raise ConfigurationError(
                f"dt={config.dt} exceeds the stability estimate "
                f"{stable_dt:.6g}; reduce dt or force the run")

    state = interpolate_state(mesh, dofs, config.ic_h, config.ic_u)
    times = [0.0]
    energies = [energy(state, ops)]
    if snapshot_callback is not None:
        snapshot_callback(0, state)

    aborted = False
    abort_step = None
    for step in range(1, config.n_steps + 1):
        try:
            state = verlet_step(state, ops, config.dt, config.wave_speed)
        except InstabilityError as exc:
            aborted = True
            abort_step = step
            break
        if step % config.energy_stride == 0:
            times.append(state.time)
            energies.append(energy(state, ops))
        if (snapshot_callback is not None and snapshot_stride is not None
                and step % snapshot_stride == 0):
            snapshot_callback(step, state)

    return SimulationResult(
        times=np.array(times), energies=np.array(energies),
        final_state=state, stable_dt=stable_dt,
        aborted=aborted, abort_step=abort_step)
