"""Minimum-energy control of linear networks with a symmetric state matrix.

Energy is reported as ``E = int_0^tf u(t)^T u(t) dt``, i.e. twice the
``1/2``-weighted cost functional, so that ``E = b^T (C W C^T)^{-1} b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .gramian import FiniteGramian
from .lattice import check_output_controllability

__all__ = [
    "ControlProblem",
    "EnergyReport",
    "MinimumEnergyControl",
    "SingularGramianError",
    "SymmetricExpm",
    "expm_action",
    "control_action",
    "min_energy",
    "energy_report",
    "synthesize_control",
    "simulate",
    "Simulation",
]

SINGULAR_COND = 1e14


class SingularGramianError(np.linalg.LinAlgError):
    """The output Gramian is numerically singular (output controllability lost)."""


class SymmetricExpm:
    """``exp(A t) v`` through one cached eigendecomposition of symmetric ``A``."""

    def __init__(self, A):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if np.max(np.abs(A - A.T), initial=0.0) > 1e-10:
            raise ValueError("A must be symmetric")
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(A)

    def __call__(self, t, v):
        v = np.asarray(v, dtype=float)
        if t == 0:
            return v.copy()
        V = self.eigenvectors
        coeff = V.T @ v
        scale = np.exp(self.eigenvalues * t)
        if coeff.ndim > 1:
            scale = scale[:, None]
        return V @ (scale * coeff)


def expm_action(A, t, v):
    """Return ``exp(A t) @ v`` for symmetric ``A``."""
    return SymmetricExpm(A)(t, v)


@dataclass(frozen=True, eq=False)
class ControlProblem:
    """Drive ``y = C x`` from ``x(0) = x0`` to ``y_f`` at time ``t_f``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    x0: np.ndarray
    y_f: np.ndarray
    t_f: float

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(n, -1)
        C = np.asarray(self.C, dtype=float).reshape(-1, n)
        x0 = np.asarray(self.x0, dtype=float).reshape(n)
        y_f = np.asarray(self.y_f, dtype=float).reshape(C.shape[0])
        if not self.t_f > 0:
            raise ValueError("t_f must be positive")
        for name, val in (("A", A), ("B", B), ("C", C), ("x0", x0), ("y_f", y_f)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "t_f", float(self.t_f))

    @cached_property
    def expm(self):
        return SymmetricExpm(self.A)

    def is_output_controllable(self, rank_tol=1e-10):
        return check_output_controllability(self.A, self.B, self.C, rank_tol)


@dataclass(frozen=True)
class EnergyReport:
    energy: float
    control_action: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    mode_contributions: np.ndarray

    @property
    def mu_min(self):
        return float(self.eigenvalues[0])


def control_action(prob):
    """``b = y_f - C exp(A t_f) x0``: what free evolution leaves undone."""
    return prob.y_f - prob.C @ prob.expm(prob.t_f, prob.x0)


def _cholesky(Wout):
    Wout = np.atleast_2d(np.asarray(Wout, dtype=float))
    if Wout.shape[0] != Wout.shape[1]:
        raise ValueError("output Gramian must be square")
    try:
        factor = scipy.linalg.cho_factor(Wout, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularGramianError("output Gramian is not positive definite") from exc
    diag = np.abs(np.diag(factor[0]))
    # cond(W) >= (max L_ii / min L_ii)^2; cheap screen, then the exact value if close
    if diag.min() == 0 or (diag.max() / diag.min()) ** 2 > SINGULAR_COND \
            or np.linalg.cond(Wout) > SINGULAR_COND:
        raise SingularGramianError("output Gramian is numerically singular")
    return factor


def min_energy(b, Wout):
    """``b^T Wout^{-1} b`` by Cholesky factorisation."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    factor = _cholesky(Wout)
    return float(b @ scipy.linalg.cho_solve(factor, b))


def energy_report(b, Wout):
    """Energy split over the eigenmodes of the output Gramian.

    ``E = sum_i (b^T z_i)^2 / mu_i`` with ``mu`` ascending.
    """
    b = np.atleast_1d(np.asarray(b, dtype=float))
    Wout = np.atleast_2d(np.asarray(Wout, dtype=float))
    _cholesky(Wout)
    mu, Z = np.linalg.eigh(Wout)
    contrib = (Z.T @ b) ** 2 / mu
    return EnergyReport(float(contrib.sum()), b, mu, Z, contrib)


class MinimumEnergyControl:
    """``u(t) = B^T exp(A^T (t_f - t)) C^T Wout^{-1} b`` with the constant part cached.

    ``gramian`` is either a :class:`FiniteGramian` (projected with ``C``) or a
    ``q x q`` output Gramian such as one from the infinite lattice.
    """

    def __init__(self, prob, gramian):
        self.prob = prob
        if isinstance(gramian, FiniteGramian):
            Wout = prob.C @ gramian.matrix @ prob.C.T
        else:
            Wout = np.atleast_2d(np.asarray(gramian, dtype=float))
            q = prob.C.shape[0]
            if Wout.shape != (q, q):
                raise ValueError(f"output Gramian must be {q}x{q}")
        self.output_gramian = 0.5 * (Wout + Wout.T)
        self.b = control_action(prob)
        self._w = scipy.linalg.cho_solve(_cholesky(self.output_gramian), self.b)
        self._v = prob.C.T @ self._w

    @property
    def predicted_energy(self):
        """``b^T Wout^{-1} b`` for the Gramian this control was built from."""
        return float(self.b @ self._w)

    def __call__(self, t):
        if not -1e-12 <= t <= self.prob.t_f * (1 + 1e-12):
            raise ValueError("t outside [0, t_f]")
        # A is symmetric, so exp(A^T s) = exp(A s)
        return self.prob.B.T @ self.prob.expm(self.prob.t_f - t, self._v)


def synthesize_control(prob, gramian, t):
    """Minimum-energy input at time ``t``; see :class:`MinimumEnergyControl`."""
    return MinimumEnergyControl(prob, gramian)(t)


class Simulation(NamedTuple):
    times: np.ndarray
    trajectory: np.ndarray
    realized_energy: float
    y_final: np.ndarray


def simulate(prob, u, steps):
    """Fixed-step RK4 of ``x' = A x + B u(t)`` over ``[0, t_f]``.

    The energy ``int u^T u dt`` is accumulated by Simpson's rule from the
    same ``u(t), u(t + h/2), u(t + h)`` samples RK4 already uses.

    Returns
    -------
    Simulation
        ``times`` (steps + 1), ``trajectory`` (steps + 1, n),
        ``realized_energy`` and ``y_final = C x(t_f)``.
    """
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be positive")
    A, B = prob.A, prob.B
    h = prob.t_f / steps
    times = np.linspace(0.0, prob.t_f, steps + 1)
    traj = np.empty((steps + 1, A.shape[0]))
    x = prob.x0.copy()
    traj[0] = x
    energy = 0.0
    u0 = np.atleast_1d(u(0.0))
    for k in range(steps):
        t = times[k]
        um = np.atleast_1d(u(t + 0.5 * h))
        u1 = np.atleast_1d(u(times[k + 1]))
        k1 = A @ x + B @ u0
        k2 = A @ (x + 0.5 * h * k1) + B @ um
        k3 = A @ (x + 0.5 * h * k2) + B @ um
        k4 = A @ (x + h * k3) + B @ u1
        x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        traj[k + 1] = x
        energy += h / 6.0 * (u0 @ u0 + 4 * (um @ um) + u1 @ u1)
        u0 = u1
    return Simulation(times, traj, float(energy), prob.C @ x)
