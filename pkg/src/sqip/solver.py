"""IMEX time integration of the two-component reaction-diffusion system.

Each step treats the reaction explicitly and diffusion implicitly
(backward Euler), which removes the diffusive step-size restriction while
keeping the possibly non-Lipschitz reaction out of any nonlinear solve.
Steps that produce a negative value anywhere are rejected and retried at
half the step size; values are never clamped, because clamping would
silently break the discrete mass identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import diagnostics
from .errors import AssumptionError, ConfigError, NumericsError, StiffnessError
from .grid import DiffusionSolver, Domain
from .model import ModelSpec, validate_assumptions

# Hard default ceiling of the auto-chosen initial step.
DT_INIT_CAP = 1e-2
# Multiplier on h^2/d for the auto initial step; implicit diffusion makes
# steps far above the explicit stability limit usable.
DT_INIT_GAIN = 10.0

EVENT_SNAP = 1e-12


@dataclass(frozen=True)
class SystemState:
    """Susceptible and infected fields at one time instant."""

    S: np.ndarray
    I: np.ndarray
    t: float

    def __post_init__(self):
        object.__setattr__(self, "S", np.asarray(self.S, dtype=float))
        object.__setattr__(self, "I", np.asarray(self.I, dtype=float))
        if self.S.shape != self.I.shape:
            raise ConfigError("S and I fields must share a grid")

    def copy(self) -> "SystemState":
        return SystemState(self.S.copy(), self.I.copy(), self.t)


@dataclass(frozen=True)
class SolverSettings:
    """Adaptive stepping controls.

    The only positivity policy is reject-and-halve. ``linear_tol``
    documents the accuracy of the diffusion solves (direct banded
    factorizations resolve to machine precision, well inside it) and is
    the slack allowed in mass-identity checks.
    """

    dt_init: float | None = None
    dt_min: float = 1e-10
    dt_max: float = 2e-2
    linear_tol: float = 1e-12
    max_steps: int = 2_000_000
    growth_factor: float = 1.2
    growth_interval: int = 10
    positivity_policy: str = "reject-and-halve"

    def __post_init__(self):
        if self.positivity_policy != "reject-and-halve":
            raise ConfigError(
                f"unsupported positivity policy {self.positivity_policy!r}")
        if not (0 < self.dt_min <= self.dt_max):
            raise ConfigError("need 0 < dt_min <= dt_max")
        if self.dt_init is not None and not (self.dt_min <= self.dt_init <= self.dt_max):
            raise ConfigError("dt_init must lie in [dt_min, dt_max]")


@dataclass
class Trajectory:
    """Sampled diagnostics of one run plus the state snapshots it kept."""

    rows: np.ndarray
    snapshots: dict[float, SystemState]
    final_state: SystemState
    measure: float
    sup_monitor: float
    floor_S: float
    floor_I: float
    steps_accepted: int
    steps_rejected: int
    clamp_events: int
    flags: tuple[str, ...]
    assumptions: object | None = None

    @property
    def times(self) -> np.ndarray:
        return self.rows["t"]

    @property
    def mass(self) -> np.ndarray:
        return self.rows["mass_S"] + self.rows["mass_I"]

    def tail_sup_monitor(self, window_fraction: float = 0.2) -> float:
        """Largest sup-norm over the final stretch of recorded samples."""
        rows = self.rows
        t0, t1 = rows["t"][0], rows["t"][-1]
        cutoff = t1 - window_fraction * (t1 - t0)
        tail = rows[rows["t"] >= cutoff - EVENT_SNAP]
        return float(np.maximum(tail["sup_S"], tail["sup_I"]).max())


class Stepper:
    """One-step IMEX integrator bound to a model, grid, and settings."""

    def __init__(self, model: ModelSpec, domain: Domain,
                 settings: SolverSettings | None = None):
        self.model = model
        self.domain = domain
        self.settings = settings or SolverSettings()
        self.diffusion = DiffusionSolver(domain)
        self._x = domain.x_coordinate()
        self._const: dict[str, np.ndarray | None] = {}
        for name in ("beta", "gamma", "mu"):
            coeff = getattr(model, name)
            if coeff.is_time_constant:
                self._const[name] = np.broadcast_to(
                    coeff(self._x, 0.0), domain.shape).astype(float)
            else:
                self._const[name] = None

    def _coeff(self, name: str, t: float) -> np.ndarray:
        cached = self._const[name]
        if cached is not None:
            return cached
        coeff = getattr(self.model, name)
        return np.broadcast_to(coeff(self._x, t), self.domain.shape).astype(float)

    def reaction(self, S: np.ndarray, I: np.ndarray, t: float
                 ) -> tuple[np.ndarray, np.ndarray]:
        """Reaction pair (f, g) evaluated at the given state and time."""
        e = self.model.exponents
        beta = self._coeff("beta", t)
        gamma = self._coeff("gamma", t)
        mu = self._coeff("mu", t)
        kernel = self.model.incidence.kernel(S, I)
        if e.s == 0.0 and e.r == 1.0:
            removal = I
        else:
            removal = S**e.s * I**e.r
        f = -beta * kernel + gamma * removal
        g = beta * kernel - (gamma + mu) * removal
        return f, g

    def reaction_dt_cap(self, S: np.ndarray, I: np.ndarray) -> float:
        """Step ceiling 0.5 / (sigma_sup * (1 + M^(p+q))), M the sup norm."""
        sigma = self.model.sigma_sup
        if sigma <= 0:
            return math.inf
        q, p = self.model.incidence.core_exponents
        m = max(float(S.max()), float(I.max()), 0.0)
        return 0.5 / (sigma * (1.0 + m ** (p + q)))

    def step(self, state: SystemState, dt: float) -> SystemState | None:
        """Advance by dt; returns None when positivity rejects the step."""
        f, g = self.reaction(state.S, state.I, state.t)
        S_star = state.S + dt * f
        I_star = state.I + dt * g
        S_new = self.diffusion.solve(dt * self.model.d_S, S_star)
        I_new = self.diffusion.solve(dt * self.model.d_I, I_star)
        if not (np.isfinite(S_new).all() and np.isfinite(I_new).all()):
            raise NumericsError(
                "non-finite value during step",
                t=state.t, dt=dt, S=state.S.copy(), I=state.I.copy())
        if S_new.min() < 0.0 or I_new.min() < 0.0:
            return None
        return SystemState(S_new, I_new, state.t + dt)

    def initial_dt(self, state: SystemState) -> float:
        s = self.settings
        if s.dt_init is not None:
            return s.dt_init
        h = getattr(self.domain, "h", None)
        if h is None:
            h = min(self.domain.hx, self.domain.hy)
        dt = DT_INIT_GAIN * h * h / max(self.model.d_S, self.model.d_I)
        dt = min(dt, DT_INIT_CAP, s.dt_max, self.reaction_dt_cap(state.S, state.I))
        return max(dt, s.dt_min)


def step(state: SystemState, dt: float, model: ModelSpec, domain: Domain,
         settings: SolverSettings | None = None) -> SystemState | None:
    """Single IMEX step; convenience wrapper over :class:`Stepper`."""
    return Stepper(model, domain, settings).step(state, dt)


def _marginal_positivity_flags(model: ModelSpec, S0: np.ndarray,
                               I0: np.ndarray) -> list[str]:
    """Flag strictly positive data sitting at the edge of machine zero.

    Uniqueness theory for fractional exponents needs strictly positive
    data; the discrete scheme accepts marginal floors but the report says
    so out loud.
    """
    flags = []
    eps = np.finfo(float).eps
    e = model.exponents
    if e.p < 1 and 0 < I0.min() < 1e3 * eps * max(I0.max(), 1.0):
        flags.append("marginal-positivity-I0")
    if e.q < 1 and 0 < S0.min() < 1e3 * eps * max(S0.max(), 1.0):
        flags.append("marginal-positivity-S0")
    return flags


def run(config) -> Trajectory:
    """Integrate a scenario to its end time with adaptive stepping.

    The loop clips steps so every requested snapshot time and the end
    time are hit exactly, halves the step on positivity rejection, and
    grows it by the configured factor after every streak of accepted
    steps. Two runs of the same config produce bit-identical output.

    Args:
        config: A fully resolved scenario (see :mod:`sqip.config`).

    Raises:
        AssumptionError: mandatory admissibility checks failed and the
            degenerate-data override is off.
        StiffnessError: the step size underflowed dt_min.
        NumericsError: a non-finite value appeared; the state is attached.
    """
    domain = config.domain
    model = config.model
    settings = config.solver
    S0, I0 = config.initial_arrays()
    state = SystemState(S0, I0, 0.0)

    report = validate_assumptions(model, state, domain)
    failures = report.mandatory_failures
    flags = _marginal_positivity_flags(model, state.S, state.I)
    if failures:
        if not config.allow_degenerate_initial:
            raise AssumptionError(failures)
        flags.append("degenerate-initial-override")

    stepper = Stepper(model, domain, settings)
    t_end = float(config.t_end)
    cadence = float(config.cadence)
    if cadence <= 0:
        raise ConfigError("diagnostics cadence must be positive")

    events = sorted({float(ts) for ts in config.snapshot_times} | {t_end})
    for ts in events:
        if ts < 0 or ts > t_end + EVENT_SNAP:
            raise ConfigError(f"snapshot time {ts} outside [0, t_end]")

    rows = [diagnostics.compute_row(domain, state.S, state.I, 0.0)]
    snapshots: dict[float, SystemState] = {}
    if events and abs(events[0]) <= EVENT_SNAP:
        snapshots[events[0]] = state.copy()
        events = events[1:]

    sup_monitor = max(float(state.S.max()), float(state.I.max()))
    floor_S = float(state.S.min())
    floor_I = float(state.I.min())

    dt = stepper.initial_dt(state)
    accepted = 0
    rejected = 0
    streak = 0
    next_mark = cadence

    while state.t < t_end - EVENT_SNAP:
        if accepted + rejected >= settings.max_steps:
            raise NumericsError(
                "max_steps exhausted before t_end", t=state.t,
                steps=accepted + rejected)
        next_event = events[0] if events else t_end
        dt_try = min(dt, stepper.reaction_dt_cap(state.S, state.I))
        remaining = next_event - state.t
        hit_event = dt_try >= remaining - EVENT_SNAP
        if hit_event:
            dt_try = remaining

        new_state = stepper.step(state, dt_try)
        if new_state is None:
            rejected += 1
            streak = 0
            dt = dt_try / 2.0
            if dt < settings.dt_min:
                worst = np.unravel_index(
                    int(np.argmin(np.minimum(state.S, state.I))), state.S.shape)
                raise StiffnessError(state.t, dt, worst)
            continue

        if hit_event:
            new_state = SystemState(new_state.S, new_state.I, next_event)
        state = new_state
        accepted += 1
        streak += 1
        if streak >= settings.growth_interval:
            dt = min(dt * settings.growth_factor, settings.dt_max)
            streak = 0

        sup_monitor = max(sup_monitor, float(state.S.max()), float(state.I.max()))
        floor_S = min(floor_S, float(state.S.min()))
        floor_I = min(floor_I, float(state.I.min()))

        if hit_event:
            if events and abs(state.t - events[0]) <= EVENT_SNAP:
                events = events[1:]
            if state.t in config.snapshot_times or any(
                    abs(state.t - ts) <= EVENT_SNAP for ts in config.snapshot_times):
                snapshots[state.t] = state.copy()

        if state.t >= next_mark - EVENT_SNAP or state.t >= t_end - EVENT_SNAP:
            rows.append(diagnostics.compute_row(domain, state.S, state.I, state.t))
            next_mark = (math.floor(state.t / cadence + EVENT_SNAP) + 1) * cadence

    return Trajectory(
        rows=np.array(rows, dtype=diagnostics.ROW_DTYPE),
        snapshots=snapshots,
        final_state=state,
        measure=domain.measure,
        sup_monitor=sup_monitor,
        floor_S=floor_S,
        floor_I=floor_I,
        steps_accepted=accepted,
        steps_rejected=rejected,
        clamp_events=0,
        flags=tuple(flags),
        assumptions=report,
    )


class LinearPropagator:
    """Time integrator of the linear problem phi_t = d*Lap(phi) + a(x,t)*phi.

    This is the solver's stepping with the nonlinearity disabled: implicit
    diffusion and an explicitly evaluated potential factor. The potential
    factor uses the exact exponential of the midpoint sample, so a
    spatially uniform potential is integrated with quadrature error only,
    which is what makes the closed-form spectral checks meet their tight
    tolerances.
    """

    def __init__(self, domain: Domain, diffusivity: float,
                 potential: Callable[[np.ndarray, float], np.ndarray]):
        if diffusivity <= 0:
            raise ConfigError("diffusivity must be positive")
        self.domain = domain
        self.diffusivity = diffusivity
        self.potential = potential
        self.diffusion = DiffusionSolver(domain)
        self._x = domain.x_coordinate()

    def advance(self, phi: np.ndarray, t0: float, duration: float,
                nsteps: int) -> np.ndarray:
        dt = duration / nsteps
        out = np.asarray(phi, dtype=float).copy()
        c = dt * self.diffusivity
        for k in range(nsteps):
            tm = t0 + (k + 0.5) * dt
            a = np.broadcast_to(self.potential(self._x, tm), self.domain.shape)
            out = out * np.exp(dt * a)
            out = self.diffusion.solve(c, out)
        return out
