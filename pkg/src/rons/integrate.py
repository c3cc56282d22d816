"""Time integration of the reduced parameter ODE with dense diagnostics.

Two schemes: classical fixed-step RK4 and an adaptive Dormand-Prince 5(4)
pair.  The adaptive driver doubles as a general-purpose ODE solver for the
reference oracles (point vortices, the second-order instability demo).

When integrating reduced dynamics, trial stages can graze the boundary of
the admissible parameter set (for instance L passing through 0); such steps
are rejected and retried with half the step size up to a retry cap before
the run aborts with the partial trajectory attached.  Immersion and
constraint failures abort immediately: they mean the reduced equations
themselves broke down, and no step size fixes that.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import AnsatzFamily
from .engine import assemble, constraint_tangency, reduced_rhs, residual
from .errors import (
    DependentConstraintsError,
    DomainError,
    ImmersionError,
    IntegrationAbort,
)
from .hilbert import FieldSample, QuadratureRule
from .models import PdeModel

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "dense_eval",
    "solve_fixed_rk4",
    "solve_adaptive_rk45",
]


@dataclass(frozen=True)
class IntegratorConfig:
    """Scheme selection and tolerances for one reduced-ODE run."""

    t_end: float
    scheme: str = "rk45"          # "rk45" (adaptive) or "rk4" (fixed step)
    dt: float | None = None       # required for rk4; max step hint for rk45
    rtol: float = 1e-8
    atol: float = 1e-10
    stride: int = 1               # record every stride-th accepted step
    max_domain_retries: int = 20

    def __post_init__(self):
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.scheme not in ("rk45", "rk4"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "rk4" and (self.dt is None or self.dt <= 0):
            raise ValueError("rk4 needs a positive dt")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


@dataclass(eq=False)
class Trajectory:
    """Recorded states and per-step diagnostics of one reduced-ODE run.

    diagnostics maps names to arrays over recorded steps: "J", "J_raw",
    "cond_M", "cond_C" are scalars per step; "invariants" has one column per
    tracked quantity and "tangency" one column per enforced constraint.
    """

    labels: tuple[str, ...]
    times: np.ndarray
    states: np.ndarray            # (S, n)
    qdots: np.ndarray             # (S, n)
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)
    quantity_names: tuple[str, ...] = ()
    constrained: bool = False

    def __len__(self) -> int:
        return len(self.times)

    def interpolate(self, t: float) -> np.ndarray:
        """Cubic Hermite interpolation of q(t) between recorded steps."""
        times = self.times
        if t < times[0] or t > times[-1]:
            raise ValueError(f"t = {t} outside [{times[0]}, {times[-1]}]")
        j = int(np.searchsorted(times, t, side="right")) - 1
        if j >= len(times) - 1:
            return self.states[-1].copy()
        h = times[j + 1] - times[j]
        s = (t - times[j]) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s**2 * (3 - 2 * s)
        h11 = s**2 * (s - 1)
        return (
            h00 * self.states[j]
            + h10 * h * self.qdots[j]
            + h01 * self.states[j + 1]
            + h11 * h * self.qdots[j + 1]
        )

    def invariant_drift(self) -> np.ndarray:
        """Max |I_k(t) - I_k(0)| / |I_k(0)| over the run, per quantity."""
        inv = self.diagnostics.get("invariants")
        if inv is None or inv.size == 0:
            return np.zeros(0)
        ref = inv[0]
        scale = np.where(np.abs(ref) > 0, np.abs(ref), 1.0)
        return np.max(np.abs(inv - ref), axis=0) / scale


# ---------------------------------------------------------------------------
# generic steppers (also used by the oracles)
# ---------------------------------------------------------------------------

# Dormand-Prince 5(4) tableau; the fifth-order solution propagates
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


class _StageRejected(Exception):
    """Internal: a trial stage left the admissible set; retry smaller."""


class StepSizeUnderflow(RuntimeError):
    """Step control collapsed below the resolvable step size.

    Raised when rejection cascades (error- or domain-driven) push the step
    under a floor relative to the integration horizon; without this guard a
    trajectory grazing the admissible boundary can creep forever in
    vanishing increments instead of aborting.
    """


def _initial_step(f, t0, y0, f0, t_end, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.linalg.norm(y0 / scale) / np.sqrt(y0.size)
    d1 = np.linalg.norm(f0 / scale) / np.sqrt(y0.size)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_end - t0)
    try:
        f1 = f(t0 + h0, y0 + h0 * f0)
    except _StageRejected:
        return h0 * 1e-3
    d2 = np.linalg.norm((f1 - f0) / scale) / np.sqrt(y0.size) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_end - t0)


def solve_adaptive_rk45(
    f,
    t0: float,
    y0: np.ndarray,
    t_end: float,
    *,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    max_step: float = np.inf,
    max_domain_retries: int = 0,
    step_callback=None,
):
    """Dormand-Prince 5(4) with standard error-based step control.

    Returns (times, states, derivs) at accepted steps, endpoint included.
    If f raises _StageRejected (used by the reduced-ODE wrapper for domain
    violations at trial states), the step is halved up to
    max_domain_retries times.
    """
    y = np.asarray(y0, dtype=float).copy()
    t = float(t0)
    k0 = f(t, y)
    h = min(_initial_step(f, t, y, k0, t_end, rtol, atol), max_step)

    times, states, derivs = [t], [y.copy()], [k0.copy()]
    if step_callback is not None:
        step_callback(t, y, k0)

    n_stages = 7
    h_floor = max(1e-14, 1e-12 * (t_end - t0))
    max_steps = 1_000_000
    for _ in range(max_steps):
        if t >= t_end:
            break
        h = min(h, t_end - t, max_step)
        domain_retries = 0
        while True:
            if h < h_floor and t + h < t_end:
                raise StepSizeUnderflow(
                    f"step size {h:.3e} fell below the floor {h_floor:.3e} "
                    f"at t = {t:.6g}"
                )
            k = np.empty((n_stages, y.size))
            k[0] = k0
            try:
                for s in range(1, n_stages):
                    ys = y + h * (_DP_A[s] @ k[:s])
                    k[s] = f(t + _DP_C[s] * h, ys)
                y5 = y + h * (_DP_B5 @ k)
                k_next = f(t + h, y5)  # also validates the proposed state
            except _StageRejected:
                domain_retries += 1
                if domain_retries > max_domain_retries:
                    raise
                h *= 0.5
                continue

            y4 = y + h * (_DP_B4 @ k)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
            err = np.linalg.norm((y5 - y4) / scale) / np.sqrt(y.size)
            if err <= 1.0:
                t = t + h
                y = y5
                k0 = k_next
                times.append(t)
                states.append(y.copy())
                derivs.append(k0.copy())
                if step_callback is not None:
                    step_callback(t, y, k0)
                factor = 0.9 * err ** -0.2 if err > 0 else 5.0
                h *= min(5.0, max(0.2, factor))
                break
            h *= min(1.0, max(0.2, 0.9 * err ** -0.2))
    else:
        raise RuntimeError("step budget exhausted before reaching t_end")

    return np.array(times), np.array(states), np.array(derivs)


def solve_fixed_rk4(f, t0, y0, t_end, dt, *, step_callback=None):
    """Classical fixed-step RK4; the final step is shortened to land on t_end."""
    y = np.asarray(y0, dtype=float).copy()
    t = float(t0)
    times, states, derivs = [t], [y.copy()], [f(t, y)]
    if step_callback is not None:
        step_callback(t, y, derivs[0])
    while t < t_end - 1e-14 * max(1.0, abs(t_end)):
        h = min(dt, t_end - t)
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t + h
        fy = f(t, y)
        times.append(t)
        states.append(y.copy())
        derivs.append(fy)
        if step_callback is not None:
            step_callback(t, y, fy)
    return np.array(times), np.array(states), np.array(derivs)


# ---------------------------------------------------------------------------
# reduced-ODE driver
# ---------------------------------------------------------------------------


def integrate(
    family: AnsatzFamily,
    model: PdeModel,
    rule,
    quantities,
    q0,
    config: IntegratorConfig,
    *,
    track_quantities=None,
) -> Trajectory:
    """Integrate qdot = M^-1 [f - sum lambda_k grad I_k] from q0 to t_end.

    `rule` may be a QuadratureRule or a callable q -> QuadratureRule (a
    moving quadrature window for configurations that translate).
    `quantities` are enforced as constraints; `track_quantities` (default:
    the model's conserved set) are additionally evaluated per recorded step
    for drift diagnostics.
    """
    rule_of = rule if callable(rule) else (lambda _q: rule)
    quantities = tuple(quantities)
    if track_quantities is None:
        track_quantities = tuple(model.conserved)
    track_quantities = tuple(track_quantities)

    q0 = family.require_valid(q0)

    def rhs(_t, y):
        if not family.domain_check(y):
            raise _StageRejected
        system = assemble(family, y, model, rule_of(y), quantities)
        return reduced_rhs(system)

    recorder = _Recorder(family, model, rule_of, quantities, track_quantities, config)

    try:
        if config.scheme == "rk4":
            solve_fixed_rk4(
                rhs, 0.0, q0, config.t_end, config.dt, step_callback=recorder
            )
        else:
            solve_adaptive_rk45(
                rhs,
                0.0,
                q0,
                config.t_end,
                rtol=config.rtol,
                atol=config.atol,
                max_step=config.dt if config.dt else np.inf,
                max_domain_retries=config.max_domain_retries,
                step_callback=recorder,
            )
    except _StageRejected as exc:
        raise IntegrationAbort(
            "step size control could not keep the parameters inside the "
            f"admissible set after {config.max_domain_retries} halvings",
            partial=recorder.build(),
            cause=exc,
        ) from exc
    except StepSizeUnderflow as exc:
        raise IntegrationAbort(
            f"integration stalled: {exc}",
            partial=recorder.build(),
            cause=exc,
        ) from exc
    except (DomainError, ImmersionError, DependentConstraintsError) as exc:
        raise IntegrationAbort(
            f"reduced equations broke down: {exc}",
            partial=recorder.build(),
            cause=exc,
        ) from exc

    return recorder.build()


class _Recorder:
    """Collects states and diagnostics at accepted steps."""

    def __init__(self, family, model, rule_of, quantities, track, config):
        self.family = family
        self.model = model
        self.rule_of = rule_of
        self.quantities = quantities
        self.track = track
        self.stride = config.stride
        self.count = 0
        self.times, self.states, self.qdots = [], [], []
        self.J, self.J_raw, self.cond_M, self.cond_C = [], [], [], []
        self.invariants, self.tangency = [], []

    def __call__(self, t, y, ydot):
        take = (self.count % self.stride) == 0
        self.count += 1
        if not take:
            return
        rule = self.rule_of(y)
        system = assemble(self.family, y, self.model, rule, self.quantities)
        qdot = reduced_rhs(system)
        rep = residual(system, qdot)
        self.times.append(t)
        self.states.append(np.asarray(y, dtype=float).copy())
        self.qdots.append(qdot)
        self.J.append(rep.J)
        self.J_raw.append(rep.J_raw)
        self.cond_M.append(rep.condition_M)
        self.cond_C.append(rep.condition_C)
        if self.track:
            self.invariants.append(
                [qt.value(self.family, y, rule) for qt in self.track]
            )
        if self.quantities:
            self.tangency.append(np.abs(constraint_tangency(system, qdot)))

    def build(self) -> Trajectory:
        diag = {
            "J": np.array(self.J),
            "J_raw": np.array(self.J_raw),
            "cond_M": np.array(self.cond_M),
            "cond_C": np.array(self.cond_C),
        }
        if self.track:
            diag["invariants"] = np.array(self.invariants)
        if self.quantities:
            diag["tangency"] = np.array(self.tangency)
        return Trajectory(
            labels=self.family.labels,
            times=np.array(self.times),
            states=np.array(self.states),
            qdots=np.array(self.qdots),
            diagnostics=diag,
            quantity_names=tuple(qt.name for qt in self.track),
            constrained=bool(self.quantities),
        )


def dense_eval(traj: Trajectory, family: AnsatzFamily, rule: QuadratureRule, t: float) -> FieldSample:
    """Reconstruct the field u(., q(t)) at an off-step time."""
    q = traj.interpolate(t)
    return FieldSample(family.evaluate(rule.nodes, q))
