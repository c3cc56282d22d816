"""Independent reference solutions used to validate the reduced dynamics.

* exact closed-form solution of the linear advection-diffusion problem,
* a Fourier pseudospectral solver for the cubic Schroedinger equation with
  fourth-order exponential time differencing (ETDRK4),
* Hamiltonian point-vortex dynamics for the 2D inviscid comparisons,
* the classical Galerkin projection for linear mode sets, and
* the second-order boundary-value pathology of minimizing time-accumulated
  residual error, whose normal modes satisfy qddot = lambda^2 q and grow
  exponentially even from decaying initial data once round-off seeds the
  growing branch.

Everything here is deliberately independent of the engine module so that
agreement between the two is evidence, not tautology.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import LinearModes
from .errors import BlowupError, CollisionError
from .hilbert import QuadratureRule, inner_product
from .integrate import solve_adaptive_rk45
from .models import PdeModel

__all__ = [
    "exact_advdiff",
    "SpectralState",
    "spectral_grid",
    "nlse_dns",
    "PointVortexState",
    "point_vortex_hamiltonian",
    "point_vortex",
    "galerkin_rhs",
    "InstabilityResult",
    "finite_time_instability",
    "fit_growth_rate",
]


def exact_advdiff(A0: float, L0: float, c: float, nu: float, x, t: float):
    """Exact decaying traveling wave A0 e^{-nu t / L0^2} sin((x - c t)/L0)."""
    if L0 <= 0:
        raise ValueError("L0 must be positive")
    x = np.asarray(x, dtype=float)
    return A0 * np.exp(-nu * t / L0**2) * np.sin((x - c * t) / L0)


# ---------------------------------------------------------------------------
# pseudospectral cubic Schroedinger solver, ETDRK4 time stepping
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Complex field on an equispaced periodic grid at one time."""

    length: float
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        n = len(self.values)
        if n < 16 or (n & (n - 1)) != 0:
            raise ValueError(f"grid size {n} must be a power of two >= 16")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @property
    def grid(self) -> np.ndarray:
        n = len(self.values)
        return -self.length / 2 + np.arange(n) * (self.length / n)

    @property
    def dx(self) -> float:
        return self.length / len(self.values)

    def mass(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.dx)

    def center_value(self) -> complex:
        # x = 0 lies exactly on the grid for even n
        return complex(self.values[len(self.values) // 2])


def spectral_grid(length: float, n_modes: int) -> np.ndarray:
    return -length / 2 + np.arange(n_modes) * (length / n_modes)


def _etdrk4_tables(lin: np.ndarray, dt: float, n_contour: int = 32):
    """Coefficient tables for ETDRK4.

    The phi-function combinations are evaluated as means over a unit circle
    of contour points centered at each h*lambda, which sidesteps the severe
    cancellation of the direct formulas near lambda = 0.
    """
    z = dt * lin
    E = np.exp(z)
    E2 = np.exp(z / 2.0)
    theta = 2.0 * np.pi * (np.arange(n_contour) + 0.5) / n_contour
    r = np.exp(1j * theta)
    zr = z[:, None] + r[None, :]
    Q = dt * np.mean((np.exp(zr / 2.0) - 1.0) / zr, axis=1)
    f1 = dt * np.mean(
        (-4.0 - zr + np.exp(zr) * (4.0 - 3.0 * zr + zr**2)) / zr**3, axis=1
    )
    f2 = dt * np.mean((2.0 + zr + np.exp(zr) * (-2.0 + zr)) / zr**3, axis=1)
    f3 = dt * np.mean(
        (-4.0 - 3.0 * zr - zr**2 + np.exp(zr) * (4.0 - zr)) / zr**3, axis=1
    )
    return E, E2, Q, f1, f2, f3


def nlse_dns(
    u0: SpectralState,
    dt: float,
    t_end: float,
    *,
    record_every: int = 1,
) -> list[SpectralState]:
    """Evolve u_t = i u_xx + i |u|^2 u from u0 with ETDRK4.

    The linear part is treated exactly in Fourier space; the cubic term is
    the nonlinearity.  Returns states every `record_every` steps, initial
    state included and final state last.  Raises BlowupError with the last
    finite state if the field stops being finite.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = len(u0.values)
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=u0.dx)
    lin = -1j * k**2
    E, E2, Q, f1, f2, f3 = _etdrk4_tables(lin, dt)

    def nonlin(v_hat):
        u = np.fft.ifft(v_hat)
        return 1j * np.fft.fft(np.abs(u) ** 2 * u)

    v = np.fft.fft(u0.values)
    t = u0.time
    out = [SpectralState(u0.length, u0.values.copy(), t)]
    n_steps = int(round(t_end / dt))
    last_good = out[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, n_steps + 1):
            Nv = nonlin(v)
            a = E2 * v + Q * Nv
            Na = nonlin(a)
            b = E2 * v + Q * Na
            Nb = nonlin(b)
            c = E2 * a + Q * (2.0 * Nb - Nv)
            Nc = nonlin(c)
            v = E * v + f1 * Nv + 2.0 * f2 * (Na + Nb) + f3 * Nc
            t = u0.time + step * dt
            if step % record_every == 0 or step == n_steps:
                u = np.fft.ifft(v)
                if not np.all(np.isfinite(u)):
                    raise BlowupError(
                        f"spectral solution lost finiteness at t = {t:.6g}",
                        last_state=last_good,
                    )
                state = SpectralState(u0.length, u, t)
                out.append(state)
                last_good = state
    return out


# ---------------------------------------------------------------------------
# point-vortex dynamics
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PointVortexState:
    """N point vortices: strengths Gamma_i and centers x_i."""

    strengths: np.ndarray
    centers: np.ndarray     # (N, 2)
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "strengths", np.asarray(self.strengths, dtype=float)
        )
        object.__setattr__(
            self, "centers", np.asarray(self.centers, dtype=float).reshape(-1, 2)
        )
        if len(self.strengths) != len(self.centers):
            raise ValueError("one strength per center required")
        if _min_separation(self.centers) <= 0:
            raise ValueError("vortex centers must be distinct")

    @property
    def n(self) -> int:
        return len(self.strengths)


def _min_separation(centers: np.ndarray) -> float:
    if len(centers) < 2:
        return np.inf
    diff = centers[:, None, :] - centers[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=2))
    np.fill_diagonal(dist, np.inf)
    return float(dist.min())


def point_vortex_hamiltonian(state: PointVortexState) -> float:
    """H = -sum_{i != j} Gamma_i Gamma_j log|x_i - x_j| / (4 pi)."""
    g = state.strengths
    diff = state.centers[:, None, :] - state.centers[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=2))
    np.fill_diagonal(dist, 1.0)
    logd = np.log(dist)
    np.fill_diagonal(logd, 0.0)
    return float(-np.sum(np.outer(g, g) * logd) / (4.0 * np.pi))


def _pv_rhs(strengths: np.ndarray, flat: np.ndarray) -> np.ndarray:
    centers = flat.reshape(-1, 2)
    diff = centers[:, None, :] - centers[None, :, :]       # x_i - x_j
    r2 = np.sum(diff**2, axis=2)
    np.fill_diagonal(r2, np.inf)
    coef = strengths[None, :] / (2.0 * np.pi * r2)          # Gamma_j / (2 pi r^2)
    vx = -np.sum(coef * diff[:, :, 1], axis=1)
    vy = np.sum(coef * diff[:, :, 0], axis=1)
    return np.column_stack([vx, vy]).ravel()


def point_vortex(
    state: PointVortexState,
    dt: float,
    t_end: float,
    *,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    min_separation: float = 1e-6,
) -> list[PointVortexState]:
    """Integrate the point-vortex equations, recording accepted steps.

    `dt` caps the step size (and hence the output spacing).  Aborts with
    CollisionError if any two centers come within `min_separation`, where the
    logarithmic Hamiltonian is about to blow up.
    """

    def rhs(_t, y):
        centers = y.reshape(-1, 2)
        if _min_separation(centers) < min_separation:
            raise CollisionError(
                f"vortex centers closer than {min_separation}; the "
                "Hamiltonian is singular at coincidence"
            )
        return _pv_rhs(state.strengths, y)

    times, ys, _ = solve_adaptive_rk45(
        rhs,
        state.time,
        state.centers.ravel(),
        state.time + t_end,
        rtol=rtol,
        atol=atol,
        max_step=dt,
    )
    return [
        PointVortexState(state.strengths, y.reshape(-1, 2), t)
        for t, y in zip(times, ys)
    ]


# ---------------------------------------------------------------------------
# Galerkin projection for linear mode sets
# ---------------------------------------------------------------------------


def galerkin_rhs(
    family: LinearModes,
    q,
    model: PdeModel,
    rule: QuadratureRule,
    *,
    orthonormal_tol: float = 1e-8,
) -> np.ndarray:
    """qdot_k = <u_k, F(u)> for an orthonormal mode set.

    This is the textbook projection route, computed without the metric
    tensor; the engine's reduced equations must coincide with it on linear
    families.
    """
    q = np.asarray(q, dtype=float)
    mode_fields = [m.value(rule.nodes) for m in family.modes]
    n = len(mode_fields)
    gram = np.array(
        [[inner_product(mi, mj, rule) for mj in mode_fields] for mi in mode_fields]
    )
    if np.max(np.abs(gram - np.eye(n))) > orthonormal_tol:
        raise ValueError(
            "modes are not orthonormal on this rule "
            f"(max Gram deviation {np.max(np.abs(gram - np.eye(n))):.2e})"
        )
    F = model.apply_F(family, q, rule)
    return np.array([inner_product(m, F, rule) for m in mode_fields])


# ---------------------------------------------------------------------------
# instability of the time-accumulated error formulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InstabilityResult:
    """Time series and fitted exponential rates of qddot = lambda^2 q."""

    rates: np.ndarray
    times: np.ndarray
    q: np.ndarray          # (steps, n_modes)
    qdot: np.ndarray
    fitted_rates: np.ndarray


def fit_growth_rate(times: np.ndarray, values: np.ndarray) -> float:
    """Least-squares slope of log|values| over the final half of the record."""
    lo = len(times) // 2
    t, v = times[lo:], np.abs(values[lo:])
    good = v > 0
    if good.sum() < 2:
        return np.nan
    return float(np.polyfit(t[good], np.log(v[good]), 1)[0])


def finite_time_instability(
    lams,
    q0,
    qdot0,
    t_end: float,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-14,
    generic_frame: bool = True,
) -> InstabilityResult:
    """Integrate the decoupled modes qddot_k = lambda_k^2 q_k.

    These are the Euler-Lagrange equations of the accumulated-error action
    for a self-adjoint dissipative operator with eigenvalues -lambda_k; each
    mode mixes e^{+lambda t} and e^{-lambda t}, so even the decaying branch
    is numerically unstable: rounding excites the growing solution.  Growth
    rates are fitted on the final half of the run.

    With generic_frame=True (default) each mode's phase plane is rotated by
    a fixed angle before integrating, which is how the system presents
    itself in any real discretization whose eigenvectors are not exactly
    representable.  In unrotated eigencoordinates with power-of-two rates
    the floating-point update happens to be exactly antisymmetric, so a
    trajectory started on the stable branch never leaves it; that is a
    measure-zero nicety of binary arithmetic, not stability of the scheme.
    """
    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 0):
        raise ValueError("rates lambda_k must be positive")
    q0 = np.broadcast_to(np.asarray(q0, dtype=float), lams.shape).copy()
    qdot0 = np.broadcast_to(np.asarray(qdot0, dtype=float), lams.shape).copy()
    nm = len(lams)

    theta = 0.6 if generic_frame else 0.0
    ct, st = np.cos(theta), np.sin(theta)

    def rhs(_t, z):
        # per mode: z = R [q, qdot], z' = R B R^T z with B = [[0,1],[lam^2,0]]
        zq, zv = z[:nm], z[nm:]
        q = ct * zq + st * zv
        v = -st * zq + ct * zv
        dq, dv = v, lams**2 * q
        return np.concatenate([ct * dq - st * dv, st * dq + ct * dv])

    z0 = np.concatenate([ct * q0 - st * qdot0, st * q0 + ct * qdot0])
    times, zs, _ = solve_adaptive_rk45(rhs, 0.0, z0, t_end, rtol=rtol, atol=atol)
    qs = ct * zs[:, :nm] + st * zs[:, nm:]
    qdots = -st * zs[:, :nm] + ct * zs[:, nm:]
    fitted = np.array([fit_growth_rate(times, qs[:, j]) for j in range(nm)])
    return InstabilityResult(
        rates=lams, times=times, q=qs, qdot=qdots, fitted_rates=fitted
    )
