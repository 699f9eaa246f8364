r"""Controllability Gramians of lattice networks.

Infinite lattice
    With ``W(0) = 0`` every entry is a one-dimensional integral

    .. math::
        W_{ij}(t) = \int_0^t e^{-2p\tau} \sum_{a \in D}
            \prod_{k=1}^d I_{i_k - a_k}(2s\tau)\, I_{j_k - a_k}(2s\tau)\, d\tau,

    evaluated here as
    :math:`e^{(4ds - 2p)\tau} \sum_a \prod_k \hat I \hat I` with scaled
    Bessel values, so nothing overflows at large ``tau``.

Finite lattice
    ``W(t)`` solves ``W' = AW + WA^T + BB^T`` from ``W(0) = 0``. For
    symmetric ``A`` the spectral closed form is used; an embedded
    Dormand-Prince integrator on the upper triangle is kept as an
    independent cross-check.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bessel import log_mbffk_scaled, mbffk_scaled_sequence
from .lattice import LatticeParams, as_index, flat_index
from .quad import DEFAULT_ABS_TOL, DEFAULT_REL_TOL, integrate, integrate_to_convergence

__all__ = [
    "GramianTable",
    "FiniteGramian",
    "ComparisonReport",
    "SpectralGramian",
    "EnergyRangeError",
    "StiffnessError",
    "integrand",
    "infinite_entry",
    "infinite_entry_limit",
    "build_table",
    "output_gramian_infinite",
    "finite_gramian_closed",
    "finite_gramian_ode",
    "output_gramian_finite",
    "compare",
    "single_target_energy",
]

# Integrals of far-off entries are tiny, so an absolute floor would swamp them.
REL_ONLY_ABS_TOL = 1e-300
DEGENERATE_SUM = 1e-12


class EnergyRangeError(OverflowError):
    """The control energy is not representable; ``log_energy`` holds its natural log."""

    def __init__(self, message, log_energy):
        super().__init__(message)
        self.log_energy = log_energy


class StiffnessError(RuntimeError):
    """The ODE step size collapsed."""


def _normalize(i, j, drivers, params):
    d = params.d
    i = as_index(i, d)
    j = as_index(j, d)
    drivers = [as_index(a, d) for a in drivers]
    if not drivers:
        raise ValueError("at least one driver node is required")
    return i, j, drivers


def _orders(i, j, drivers):
    """Per-driver Bessel orders, shape (|D|, 2d).

    Rows and the orders within each row are sorted, so every symmetry that
    permutes factors or terms yields the same array and bit-identical values.
    """
    rows = sorted(sorted([abs(ik - ak) for ik, ak in zip(i, a)] + [abs(jk - ak) for jk, ak in zip(j, a)])
                  for a in drivers)
    return np.array(rows, dtype=int)


def _make_integrand(i, j, drivers, params):
    orders = _orders(i, j, drivers)
    n_max = int(orders.max())
    rate = params.decay_rate
    two_s = 2.0 * params.s

    def f(tau):
        tau = np.asarray(tau, dtype=float)
        seq = mbffk_scaled_sequence(n_max, two_s * tau)
        terms = np.prod(seq[orders], axis=1)  # (|D|, ...) after the product over 2d factors
        return np.exp(-rate * tau) * terms.sum(axis=0)

    return f


def integrand(i, j, drivers, params, tau):
    r"""Gramian integrand :math:`e^{-2p\tau}\sum_a\prod_k I_{i_k-a_k} I_{j_k-a_k}` at ``tau``.

    ``tau`` may be a scalar or an array. Exact at ``tau = 0``.
    """
    i, j, drivers = _normalize(i, j, drivers, params)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be nonnegative")
    out = _make_integrand(i, j, drivers, params)(tau)
    return float(out) if out.ndim == 0 else out


def infinite_entry(i, j, drivers, params, t, abs_tol=DEFAULT_ABS_TOL, rel_tol=DEFAULT_REL_TOL):
    """Infinite-lattice Gramian entry ``W_ij(t)``.

    Raises
    ------
    QuadratureError
        If the quadrature does not reach the requested accuracy.
    """
    i, j, drivers = _normalize(i, j, drivers, params)
    if t < 0:
        raise ValueError("horizon must be nonnegative")
    if t == 0:
        return 0.0
    return integrate(_make_integrand(i, j, drivers, params), 0.0, t, abs_tol, rel_tol).value


def infinite_entry_limit(i, j, drivers, params, abs_tol=DEFAULT_ABS_TOL, rel_tol=DEFAULT_REL_TOL):
    """``lim_{t->inf} W_ij(t)``, only defined for Hurwitz parameters ``p > 2ds``."""
    i, j, drivers = _normalize(i, j, drivers, params)
    if not params.is_hurwitz:
        raise ValueError("the infinite-horizon Gramian needs p > 2ds")
    f = _make_integrand(i, j, drivers, params)
    return integrate_to_convergence(f, params.decay_rate, abs_tol, rel_tol, bound=len(drivers)).value


@dataclass(frozen=True)
class GramianTable:
    """Infinite-lattice entries for a set of index pairs at one horizon."""

    params: LatticeParams
    drivers: tuple
    horizon: float
    entries: dict = field(default_factory=dict)
    quadratures: int = 0

    def __getitem__(self, key):
        i, j = key
        i, j = as_index(i), as_index(j)
        if (i, j) in self.entries:
            return self.entries[(i, j)]
        return self.entries[(j, i)]

    def __len__(self):
        return len(self.entries)


def _threads(threads):
    if threads is None:
        threads = int(os.environ.get("LATTICE_GRAMIAN_THREADS", "1") or 1)
    return max(1, int(threads))


def parallel_map(fn, items, threads):
    threads = _threads(threads)
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def build_table(pairs, drivers, params, t, abs_tol=DEFAULT_ABS_TOL, rel_tol=DEFAULT_REL_TOL,
                threads=None):
    """Compute infinite-lattice entries for ``pairs``, one quadrature per unordered pair.

    Keys keep the order given by the caller; a pair and its mirror share a
    single quadrature.
    """
    d = params.d
    drivers = tuple(sorted({as_index(a, d) for a in drivers}))
    keys = [(as_index(i, d), as_index(j, d)) for i, j in pairs]
    unique = []
    seen = set()
    for i, j in keys:
        u = (i, j) if i <= j else (j, i)
        if u not in seen:
            seen.add(u)
            unique.append(u)
    values = parallel_map(
        lambda ij: infinite_entry(ij[0], ij[1], drivers, params, t, abs_tol, rel_tol), unique, threads)
    lookup = dict(zip(unique, values))
    entries = {(i, j): lookup[(i, j) if i <= j else (j, i)] for i, j in keys}
    return GramianTable(params, drivers, float(t), entries, quadratures=len(unique))


def output_gramian_infinite(targets, drivers, params, t, abs_tol=DEFAULT_ABS_TOL,
                            rel_tol=DEFAULT_REL_TOL, *, stats=None, threads=None):
    """Output Gramian ``C W(t) C^T`` of the infinite lattice.

    Only the ``q(q+1)/2`` upper-triangle entries are integrated. If ``stats``
    is a dict, its ``"quadratures"`` count is incremented accordingly.
    """
    targets = [as_index(x, params.d) for x in targets]
    if not targets:
        raise ValueError("at least one target is required")
    q = len(targets)
    upper = [(a, b) for a in range(q) for b in range(a, q)]
    values = parallel_map(
        lambda ab: infinite_entry(targets[ab[0]], targets[ab[1]], drivers, params, t, abs_tol, rel_tol),
        upper, threads)
    W = np.empty((q, q))
    for (a, b), v in zip(upper, values):
        W[a, b] = W[b, a] = v
    if stats is not None:
        stats["quadratures"] = stats.get("quadratures", 0) + len(upper)
    return W


@dataclass(frozen=True)
class FiniteGramian:
    """Finite-lattice Gramian ``W(t)``; ``unique_entries`` counts the upper-triangle unknowns."""

    matrix: np.ndarray
    horizon: float
    spec: object = None
    unique_entries: int = 0

    def entry(self, i, j):
        if self.spec is None:
            raise ValueError("node lookup needs a FiniteLatticeSpec")
        return float(self.matrix[flat_index(i, self.spec), flat_index(j, self.spec)])


def _check_symmetric(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-10:
        raise ValueError("A must be symmetric")
    return A


def _phi(lam_sum, t):
    """(exp(x t) - 1) / x with its t-limit at x = 0."""
    small = np.abs(lam_sum) < DEGENERATE_SUM
    safe = np.where(small, 1.0, lam_sum)
    return np.where(small, t, np.expm1(safe * t) / safe)


class SpectralGramian:
    """Cached symmetric eigendecomposition of ``A`` for closed-form Gramians.

    ``W(t) = V M V^T`` with ``M_ab = G_ab (e^{(l_a+l_b)t} - 1)/(l_a+l_b)`` and
    ``G = V^T B B^T V``.
    """

    def __init__(self, A, B, *, _eig=None):
        A = _check_symmetric(A)
        self.B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
        if _eig is None:
            lam, V = np.linalg.eigh(A)
        else:
            lam, V = _eig
        self.eigenvalues = lam
        self.eigenvectors = V
        self._VtB = V.T @ self.B

    def shifted(self, delta):
        """Decomposition for ``A + delta * I`` (e.g. a change of ``p``) without refactoring."""
        obj = object.__new__(SpectralGramian)
        obj.B = self.B
        obj.eigenvalues = self.eigenvalues + delta
        obj.eigenvectors = self.eigenvectors
        obj._VtB = self._VtB
        return obj

    def _core(self, t):
        lam = self.eigenvalues
        G = self._VtB @ self._VtB.T
        return G * _phi(lam[:, None] + lam[None, :], float(t))

    def matrix(self, t):
        V = self.eigenvectors
        W = V @ self._core(t) @ V.T
        return 0.5 * (W + W.T)

    def output(self, C, t):
        CV = np.asarray(C, dtype=float) @ self.eigenvectors
        Wo = CV @ self._core(t) @ CV.T
        return 0.5 * (Wo + Wo.T)


def finite_gramian_closed(A, B, t, *, spec=None):
    """Finite Gramian by the spectral closed form (``A`` must be symmetric)."""
    if t < 0:
        raise ValueError("horizon must be nonnegative")
    sg = SpectralGramian(A, B)
    n = sg.eigenvalues.size
    return FiniteGramian(sg.matrix(t), float(t), spec, n * (n + 1) // 2)


def output_gramian_finite(A, B, C, t):
    """``C W(t) C^T`` from the closed form, without forming the full ``W``."""
    return SpectralGramian(A, B).output(C, t)


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_DP_E = _DP_B5 - _DP_B4


def finite_gramian_ode(A, B, t, tol=1e-10, *, atol=None, spec=None, max_steps=1_000_000):
    """Finite Gramian by integrating the differential Lyapunov equation.

    The ``n(n+1)/2`` upper-triangle entries are advanced with an adaptive
    Dormand-Prince 5(4) pair; ``tol`` is the relative local tolerance and
    ``atol`` (default ``tol * 1e-3``) the absolute one.
    """
    A = _check_symmetric(A)
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    n = A.shape[0]
    iu = np.triu_indices(n)
    BBt = B @ B.T
    if atol is None:
        atol = tol * 1e-3
    if t < 0:
        raise ValueError("horizon must be nonnegative")
    y = np.zeros(iu[0].size)
    if t == 0:
        return FiniteGramian(np.zeros((n, n)), 0.0, spec, y.size)

    W = np.zeros((n, n))

    def rhs(vec):
        W[iu] = vec
        W.T[iu] = vec
        AW = A @ W
        return (AW + AW.T + BBt)[iu]

    t_now = 0.0
    h = min(t, 0.01 / max(1.0, np.abs(A).sum(axis=1).max()))
    k1 = rhs(y)
    steps = 0
    while t_now < t:
        if steps >= max_steps:
            raise StiffnessError("step limit reached")
        h = min(h, t - t_now)
        ks = [k1]
        for stage in range(1, 7):
            incr = sum(coef * ks[m] for m, coef in enumerate(_DP_A[stage]) if coef != 0.0)
            ks.append(rhs(y + h * incr))
        y_new = y + h * sum(w * k for w, k in zip(_DP_B5, ks) if w != 0.0)
        err_vec = h * sum(w * k for w, k in zip(_DP_E, ks) if w != 0.0)
        scale = atol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / scale))
        if err <= 1.0:
            t_now = t if h >= t - t_now else t_now + h
            y = y_new
            k1 = ks[6]
            steps += 1
        factor = 0.9 * err ** -0.2 if err > 0 else 5.0
        h *= min(5.0, max(0.2, factor))
        if h < 1e-14 * max(t, 1.0):
            raise StiffnessError(f"step size underflow at t={t_now}")

    W[iu] = y
    W.T[iu] = y
    return FiniteGramian(W.copy(), float(t), spec, y.size)


@dataclass(frozen=True)
class ComparisonReport:
    """Per-pair errors of the infinite-lattice entries against a finite Gramian."""

    absolute_error: dict
    relative_error: dict
    reference: dict
    approximation: dict

    @property
    def max_abs(self):
        return max(self.absolute_error.values(), default=0.0)

    @property
    def max_rel(self):
        finite = [v for v in self.relative_error.values() if not math.isnan(v)]
        return max(finite, default=0.0)


def compare(finite, params, drivers, t, pairs, *, against=None, abs_tol=REL_ONLY_ABS_TOL,
            rel_tol=DEFAULT_REL_TOL, threads=None):
    """Errors between ``finite`` and the infinite-lattice entries on ``pairs``.

    If ``against`` (another :class:`FiniteGramian` on the same spec) is given
    it replaces the infinite-lattice entries. Relative errors are NaN where
    the finite entry is exactly zero.
    """
    if finite.spec is None:
        raise ValueError("comparison needs a FiniteGramian built with a spec")
    keys = [(as_index(i, params.d), as_index(j, params.d)) for i, j in pairs]
    reference = {k: finite.entry(*k) for k in keys}
    if against is not None:
        approx = {k: against.entry(*k) for k in keys}
    else:
        table = build_table(keys, drivers, params, t, abs_tol, rel_tol, threads=threads)
        approx = {k: table[k] for k in keys}
    abs_err = {k: abs(approx[k] - reference[k]) for k in keys}
    rel_err = {k: (abs_err[k] / abs(reference[k]) if reference[k] != 0 else math.nan) for k in keys}
    return ComparisonReport(abs_err, rel_err, reference, approx)


def single_target_energy(i, params, t, rel_tol=DEFAULT_REL_TOL):
    r"""Energy to move a single target ``i`` by unit amount from a driver at the origin.

    Equal to ``1 / W_ii(t)``; for a control action of size ``b`` multiply by
    ``b**2``.

    Raises
    ------
    EnergyRangeError
        When ``W_ii`` underflows; the exception carries the log-energy.
    """
    d = params.d
    i = as_index(i, d)
    if not t > 0:
        raise ValueError("horizon must be positive")
    origin = (0,) * d
    value = infinite_entry(i, i, [origin], params, t, REL_ONLY_ABS_TOL, rel_tol)
    if value > 1e-300:
        return 1.0 / value
    log_w = _log_diagonal_integral(i, params, t, rel_tol)
    raise EnergyRangeError(f"energy for target {i} overflows (log E = {-log_w:.6g})", -log_w)


def _log_diagonal_integral(i, params, t, rel_tol):
    """log of the integral of e^{-2p tau} prod I_{i_k}^2(2 s tau) over [0, t], in the log domain."""
    rate = params.decay_rate
    two_s = 2.0 * params.s

    def log_f(tau):
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        out = -rate * tau
        for ik in i:
            out = out + 2.0 * log_mbffk_scaled(ik, two_s * tau)
        return out

    grid = np.linspace(0.0, t, 513)[1:]
    shift = float(np.max(log_f(grid)))
    res = integrate(lambda tau: np.exp(log_f(tau) - shift), 0.0, t, REL_ONLY_ABS_TOL, rel_tol)
    return shift + math.log(res.value)
