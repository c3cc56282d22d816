"""Ansatz families: parameterized solution shapes u(x, q).

Every family knows how to evaluate itself on a batch of points, how to
differentiate itself with respect to each parameter (the tangent fields
du/dq_i whose span is the tangent space of the ansatz manifold), and how to
take the spatial derivatives its PDE needs.  All derivatives are closed
forms; no numerical differentiation happens at evaluation time.  The test
suite validates every closed form against central finite differences.

Point batches are arrays of shape (P,) for 1D families and (P, 2) for the
2D stream-function family.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .hilbert import FieldSample, QuadratureRule

__all__ = [
    "ParameterVector",
    "AnsatzFamily",
    "TangentBasis",
    "SineWave",
    "HeatKernel",
    "GaussianWavePacket",
    "VortexStreamFunction",
    "LinearModes",
    "Mode",
    "fourier_modes",
    "sample",
    "tangent_basis",
    "builtin_families",
    "param_values",
]

# admissibility margin for open-set boundaries such as L > 0; integration
# aborts rather than clamping, so the margin only guards against exact zeros
_EPS = 1e-10


@dataclass(frozen=True)
class ParameterVector:
    """Named parameter values of an ansatz family."""

    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if len(vals) != len(self.labels):
            raise ValueError("values and labels must have equal length")
        if not np.all(np.isfinite(vals)):
            raise ValueError("parameter values must be finite")

    def __len__(self) -> int:
        return len(self.values)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.labels, map(float, self.values)))


def param_values(q) -> np.ndarray:
    """Coerce a ParameterVector or array-like to a float array."""
    if isinstance(q, ParameterVector):
        return q.values
    return np.asarray(q, dtype=float)


class AnsatzFamily:
    """Common interface of all ansatz families.

    Subclasses must set `name` and `labels` and implement `domain_violation`,
    `evaluate`, `tangent` and `spatial_derivative`.  Families whose conserved
    quantities are integrated by quadrature additionally implement
    `tangent_spatial_derivative` (the parameter derivative of a spatial
    derivative), which the default implementation declines.
    """

    name: str = "ansatz"
    labels: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return len(self.labels)

    # -- parameter domain ---------------------------------------------------

    def domain_violation(self, q) -> str | None:
        """Return a human-readable reason if q lies outside the admissible
        set, else None."""
        raise NotImplementedError

    def domain_check(self, q) -> bool:
        q = param_values(q)
        if len(q) != self.n:
            return False
        if not np.all(np.isfinite(q)):
            return False
        return self.domain_violation(q) is None

    def require_valid(self, q) -> np.ndarray:
        q = param_values(q)
        if len(q) != self.n:
            raise DomainError(
                f"{self.name}: expected {self.n} parameters, got {len(q)}"
            )
        if not np.all(np.isfinite(q)):
            raise DomainError(f"{self.name}: non-finite parameter values")
        reason = self.domain_violation(q)
        if reason is not None:
            raise DomainError(f"{self.name}: {reason}")
        return q

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, points, q) -> np.ndarray:
        raise NotImplementedError

    def tangent(self, points, q, i: int) -> np.ndarray:
        raise NotImplementedError

    def tangent_stack(self, points, q) -> np.ndarray:
        """All tangent fields as an (n, P) array."""
        return np.stack([self.tangent(points, q, i) for i in range(self.n)])

    def spatial_derivative(self, points, q, order) -> np.ndarray:
        """Spatial derivative; `order` is an int in 1D, an (ax, ay) pair in 2D."""
        raise NotImplementedError

    def tangent_spatial_derivative(self, points, q, i: int, order) -> np.ndarray:
        raise NotImplementedError(
            f"{self.name} does not provide mixed parameter/space derivatives"
        )

    def params(self, *values) -> ParameterVector:
        return ParameterVector(np.asarray(values, dtype=float), self.labels)


@dataclass(frozen=True, eq=False)
class TangentBasis:
    """Tangent fields du/dq_i sampled on a rule, stacked as (n, P)."""

    fields: np.ndarray

    def gram(self, rule: QuadratureRule) -> np.ndarray:
        """Real Gram matrix of the fields under the rule's inner product."""
        weighted = self.fields * rule.weights
        g = weighted @ self.fields.conj().T
        g = np.real(g)
        return 0.5 * (g + g.T)


def sample(family: AnsatzFamily, q, rule: QuadratureRule) -> FieldSample:
    """Evaluate the ansatz at every node of the rule."""
    qv = family.require_valid(q)
    return FieldSample(family.evaluate(rule.nodes, qv))


def tangent_basis(family: AnsatzFamily, q, rule: QuadratureRule) -> TangentBasis:
    """Sample all tangent fields on the rule.

    Positive-definiteness of the Gram matrix (the immersion assumption) is
    checked lazily by the engine when it factors the metric tensor.
    """
    qv = family.require_valid(q)
    return TangentBasis(family.tangent_stack(rule.nodes, qv))


# ---------------------------------------------------------------------------
# Hermite helpers shared by the Gaussian-shaped families.
#
# d^k/dx^k exp(-s^2) = (-1)^k H_k(s) exp(-s^2) / L^k   with s = (x - c) / L,
# where H_k are the physicists' Hermite polynomials.
# ---------------------------------------------------------------------------


def _hermite_table(s: np.ndarray, kmax: int) -> list[np.ndarray]:
    """H_0(s) .. H_kmax(s) via the recurrence H_{k+1} = 2 s H_k - 2 k H_{k-1}."""
    table = [np.ones_like(s)]
    if kmax >= 1:
        table.append(2.0 * s)
    for k in range(1, kmax):
        table.append(2.0 * s * table[k] - 2.0 * k * table[k - 1])
    return table


class SineWave(AnsatzFamily):
    """u(x; A, L, phi) = A sin(x / L + phi) on a periodic interval."""

    name = "sine-wave"
    labels = ("A", "L", "phi")

    def domain_violation(self, q):
        A, L, _ = q
        if A < _EPS:
            return f"amplitude A = {A} must be positive"
        if L < _EPS:
            return f"length scale L = {L} must be positive"
        return None

    @staticmethod
    def _phase(points, q):
        A, L, phi = q
        return np.asarray(points) / L + phi

    def evaluate(self, points, q):
        A, L, phi = q
        return A * np.sin(self._phase(points, q))

    def tangent(self, points, q, i):
        A, L, phi = q
        x = np.asarray(points)
        theta = x / L + phi
        if i == 0:
            return np.sin(theta)
        if i == 1:
            return A * np.cos(theta) * (-x / L**2)
        if i == 2:
            return A * np.cos(theta)
        raise IndexError(i)

    def spatial_derivative(self, points, q, order):
        # every x-derivative multiplies by 1/L and shifts the phase by pi/2
        A, L, phi = q
        k = int(order)
        theta = np.asarray(points) / L + phi + k * np.pi / 2
        return A * L ** (-k) * np.sin(theta)

    def tangent_spatial_derivative(self, points, q, i, order):
        A, L, phi = q
        k = int(order)
        x = np.asarray(points)
        theta = x / L + phi + k * np.pi / 2
        if i == 0:
            return L ** (-k) * np.sin(theta)
        if i == 1:
            return A * (
                -k * L ** (-k - 1) * np.sin(theta)
                + L ** (-k) * np.cos(theta) * (-x / L**2)
            )
        if i == 2:
            return A * L ** (-k) * np.cos(theta)
        raise IndexError(i)


class HeatKernel(AnsatzFamily):
    """u(x; A, L) = A exp(-x^2 / L^2) on the real line."""

    name = "heat-kernel"
    labels = ("A", "L")

    def domain_violation(self, q):
        A, L = q
        if A < _EPS:
            return f"amplitude A = {A} must be positive"
        if L < _EPS:
            return f"length scale L = {L} must be positive"
        return None

    def evaluate(self, points, q):
        A, L = q
        x = np.asarray(points)
        return A * np.exp(-(x**2) / L**2)

    def tangent(self, points, q, i):
        A, L = q
        x = np.asarray(points)
        E = np.exp(-(x**2) / L**2)
        if i == 0:
            return E
        if i == 1:
            return A * E * 2.0 * x**2 / L**3
        raise IndexError(i)

    def spatial_derivative(self, points, q, order):
        A, L = q
        k = int(order)
        s = np.asarray(points) / L
        H = _hermite_table(s, k)
        return A * (-1.0) ** k * L ** (-k) * H[k] * np.exp(-(s**2))

    def tangent_spatial_derivative(self, points, q, i, order):
        A, L = q
        k = int(order)
        s = np.asarray(points) / L
        H = _hermite_table(s, max(k, 1))
        E = np.exp(-(s**2))
        base = (-1.0) ** k * L ** (-k) * H[k] * E
        if i == 0:
            return base
        if i == 1:
            # d/dL of L^-k H_k(s) E with ds/dL = -s/L
            bracket = (2.0 * s**2 - k) * H[k]
            if k >= 1:
                bracket = bracket - 2.0 * k * s * H[k - 1]
            return A * (-1.0) ** k * L ** (-k - 1) * bracket * E
        raise IndexError(i)


class GaussianWavePacket(AnsatzFamily):
    """Complex wave group u = A exp(-x^2/L^2 + i x^2 V / L + i phi).

    A is the amplitude, L the width, V the velocity parameter of the
    quadratic chirp and phi the global phase.  The parameters stay real;
    complex-valuedness is handled by the real Hermitian pairing of the
    hilbert module.
    """

    name = "gaussian-wave-packet"
    labels = ("A", "L", "V", "phi")

    def domain_violation(self, q):
        A, L, _, _ = q
        if A < _EPS:
            return f"amplitude A = {A} must be positive"
        if L < _EPS:
            return f"length scale L = {L} must be positive"
        return None

    def evaluate(self, points, q):
        A, L, V, phi = q
        x = np.asarray(points)
        return A * np.exp(-(x**2) / L**2 + 1j * x**2 * V / L + 1j * phi)

    def tangent(self, points, q, i):
        A, L, V, phi = q
        x = np.asarray(points)
        u = self.evaluate(points, q)
        if i == 0:
            return u / A
        if i == 1:
            return u * (2.0 * x**2 / L**3 - 1j * x**2 * V / L**2)
        if i == 2:
            return u * (1j * x**2 / L)
        if i == 3:
            return 1j * u
        raise IndexError(i)

    def spatial_derivative(self, points, q, order):
        A, L, V, phi = q
        x = np.asarray(points)
        u = self.evaluate(points, q)
        k = int(order)
        if k == 0:
            return u
        # exponent h(x) = -beta x^2 + i phi with beta = 1/L^2 - i V/L
        beta = 1.0 / L**2 - 1j * V / L
        hp = -2.0 * beta * x
        if k == 1:
            return u * hp
        if k == 2:
            return u * (hp**2 - 2.0 * beta)
        raise ValueError("wave-packet derivatives implemented through order 2")


class _GaussianTerm:
    """One axisymmetric vortex's Gaussian factor and its derivative algebra.

    Everything is expressed through the scaled offsets sx, sy, the shared
    exponential E = exp(-sx^2 - sy^2) and Hermite tables, so that an
    arbitrary mixed derivative costs only array products:

        D^(a,b) G = (-1)^(a+b) L^-(a+b) H_a(sx) H_b(sy) E.
    """

    __slots__ = ("L", "sx", "sy", "s2", "E", "Hx", "Hy")

    def __init__(self, points, L, xc, yc, kmax=5):
        self.L = L
        self.sx = (points[:, 0] - xc) / L
        self.sy = (points[:, 1] - yc) / L
        self.s2 = self.sx**2 + self.sy**2
        self.E = np.exp(-self.s2)
        self.Hx = _hermite_table(self.sx, kmax)
        self.Hy = _hermite_table(self.sy, kmax)

    def d(self, a, b):
        n = a + b
        return (-1.0) ** n * self.L ** (-n) * self.Hx[a] * self.Hy[b] * self.E

    def d_dL(self, a, b):
        # d/dL of D^(a,b) G, using dsx/dL = -sx/L and H_k' = 2k H_{k-1}
        n = a + b
        bracket = (2.0 * self.s2 - n) * self.Hx[a] * self.Hy[b]
        if a >= 1:
            bracket = bracket - 2.0 * a * self.sx * self.Hx[a - 1] * self.Hy[b]
        if b >= 1:
            bracket = bracket - 2.0 * b * self.sy * self.Hx[a] * self.Hy[b - 1]
        return (-1.0) ** n * self.L ** (-n - 1) * bracket * self.E

    def d_dxc(self, a, b):
        return -self.d(a + 1, b)

    def d_dyc(self, a, b):
        return -self.d(a, b + 1)


class VortexStreamFunction(AnsatzFamily):
    """Stream function of N axisymmetric Gaussian vortices.

    psi(x; q) = sum_i A_i exp(-|x - x_i|^2 / L_i^2) with 4 parameters
    (A_i, L_i, x_i, y_i) per vortex.  The family evaluates the stream
    function; the vorticity model derives velocity and vorticity from it.
    Spatial derivatives are provided through total order 4 because the
    inviscid right-hand side involves third and fourth derivatives of psi.
    """

    def __init__(self, n_vortices: int):
        if n_vortices < 1:
            raise ValueError("need at least one vortex")
        self.n_vortices = int(n_vortices)
        self.name = f"vortex-stream-function[{n_vortices}]"
        labels = []
        for i in range(1, self.n_vortices + 1):
            labels += [f"A{i}", f"L{i}", f"x{i}", f"y{i}"]
        self.labels = tuple(labels)

    def unpack(self, q):
        q = np.asarray(q, dtype=float).reshape(self.n_vortices, 4)
        return q[:, 0], q[:, 1], q[:, 2], q[:, 3]

    # one-slot memo for the Gaussian kernel tables: within one reduced-system
    # assembly the model evaluation and both fluid invariants ask for the
    # same (points, q) combination back to back
    _terms_key = None
    _terms_value = None

    def centers(self, q) -> np.ndarray:
        _, _, xc, yc = self.unpack(q)
        return np.column_stack([xc, yc])

    def length_scales(self, q) -> np.ndarray:
        return self.unpack(q)[1]

    def domain_violation(self, q):
        A, L, _, _ = self.unpack(q)
        if np.any(L < _EPS):
            return f"length scales must be positive, got {L}"
        if np.any(np.abs(A) < _EPS):
            # a zero-amplitude vortex makes its own tangent fields vanish
            # and the metric tensor singular
            return f"amplitudes must be nonzero, got {A}"
        return None

    def terms(self, points, q) -> list[_GaussianTerm]:
        key = (id(points), np.asarray(q, dtype=float).tobytes())
        if key == self._terms_key:
            return self._terms_value
        A, L, xc, yc = self.unpack(q)
        value = [
            _GaussianTerm(points, L[i], xc[i], yc[i])
            for i in range(self.n_vortices)
        ]
        self._terms_key = key
        self._terms_value = value
        return value

    def psi_derivative(self, points, q, order, terms=None):
        """Mixed spatial derivative of psi of order (ax, ay), total <= 4."""
        a, b = order
        A = self.unpack(q)[0]
        terms = terms if terms is not None else self.terms(points, q)
        out = np.zeros(len(points))
        for Ai, term in zip(A, terms):
            out += Ai * term.d(a, b)
        return out

    def psi_tangent_derivative(self, points, q, i, order, terms=None):
        """d/dq_i of the spatial derivative D^(a,b) psi."""
        a, b = order
        A = self.unpack(q)[0]
        terms = terms if terms is not None else self.terms(points, q)
        vortex, which = divmod(i, 4)
        term = terms[vortex]
        if which == 0:  # amplitude
            return term.d(a, b)
        if which == 1:  # length scale
            return A[vortex] * term.d_dL(a, b)
        if which == 2:  # center x
            return A[vortex] * term.d_dxc(a, b)
        if which == 3:  # center y
            return A[vortex] * term.d_dyc(a, b)
        raise IndexError(i)

    def evaluate(self, points, q):
        return self.psi_derivative(points, q, (0, 0))

    def tangent(self, points, q, i):
        return self.psi_tangent_derivative(points, q, i, (0, 0))

    def tangent_stack(self, points, q):
        terms = self.terms(points, q)
        return np.stack(
            [
                self.psi_tangent_derivative(points, q, i, (0, 0), terms=terms)
                for i in range(self.n)
            ]
        )

    def spatial_derivative(self, points, q, order):
        return self.psi_derivative(points, q, tuple(order))

    def tangent_spatial_derivative(self, points, q, i, order):
        return self.psi_tangent_derivative(points, q, i, tuple(order))


@dataclass(frozen=True)
class Mode:
    """A fixed mode with closed-form spatial derivatives."""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray, int], np.ndarray]


class LinearModes(AnsatzFamily):
    """Linear combination sum_i q_i u_i(x) of fixed modes.

    The tangent fields are the modes themselves, independent of q, so the
    metric tensor equals the modes' Gram matrix and the reduced equations
    coincide with a classical Galerkin truncation.
    """

    def __init__(self, modes: Sequence[Mode]):
        self.modes = tuple(modes)
        if not self.modes:
            raise ValueError("need at least one mode")
        self.name = f"linear-modes[{len(self.modes)}]"
        self.labels = tuple(f"q_{m.name}" for m in self.modes)

    def domain_violation(self, q):
        return None

    def evaluate(self, points, q):
        out = q[0] * self.modes[0].value(points)
        for qi, mode in zip(q[1:], self.modes[1:]):
            out = out + qi * mode.value(points)
        return out

    def tangent(self, points, q, i):
        return self.modes[i].value(points)

    def spatial_derivative(self, points, q, order):
        k = int(order)
        out = q[0] * self.modes[0].derivative(points, k)
        for qi, mode in zip(q[1:], self.modes[1:]):
            out = out + qi * mode.derivative(points, k)
        return out

    def tangent_spatial_derivative(self, points, q, i, order):
        return self.modes[i].derivative(points, int(order))


def fourier_modes(length: float, count: int) -> list[Mode]:
    """Orthonormal sine/cosine modes on a periodic interval of given length.

    Ordered sin(1), cos(1), sin(2), cos(2), ... in units of the base
    wavenumber 2 pi / length; each normalized to unit L2 norm.
    """
    norm = np.sqrt(2.0 / length)
    modes = []

    def make(kind: str, k: int) -> Mode:
        w = 2.0 * np.pi * k / length
        shift = 0.0 if kind == "sin" else np.pi / 2

        def value(x, _w=w, _s=shift):
            return norm * np.sin(_w * np.asarray(x) + _s)

        def derivative(x, order, _w=w, _s=shift):
            return norm * _w**order * np.sin(
                _w * np.asarray(x) + _s + order * np.pi / 2
            )

        return Mode(f"{kind}{k}", value, derivative)

    k = 1
    while len(modes) < count:
        modes.append(make("sin", k))
        if len(modes) < count:
            modes.append(make("cos", k))
        k += 1
    return modes


def builtin_families() -> dict[str, Callable]:
    """Catalog of the built-in ansatz family constructors."""
    return {
        "sine-wave": SineWave,
        "heat-kernel": HeatKernel,
        "gaussian-wave-packet": GaussianWavePacket,
        "vortex-stream-function": VortexStreamFunction,
        "linear-modes": LinearModes,
    }
