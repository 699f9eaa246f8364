r"""Modified Bessel functions of the first kind, integer order.

The Gramian integrands multiply many :math:`I_n(2s\tau)` together with an
:math:`e^{-2p\tau}` envelope, so everything here is computed in the
exponentially scaled domain

.. math::
    \hat I_n(z) = e^{-z} I_n(z), \qquad 0 < \hat I_n(z) \le 1 \quad (z > 0),

and the unscaled value is only formed on request.

Three regimes are used for real ``z >= 0``:

* ascending power series when ``z <= max(12, 2|n|)`` (all terms positive,
  no cancellation),
* Miller backward recurrence normalised by
  :math:`e^{-z}\,[I_0 + 2\sum_k I_k] = 1` for the remaining orders,
* Hankel asymptotic expansion once ``z`` is very large compared to ``n**2``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

__all__ = [
    "mbffk",
    "mbffk_scaled",
    "mbffk_scaled_sequence",
    "log_mbffk_scaled",
]

SERIES_Z = 12.0
ASYMPTOTIC_Z = 1000.0
_RESCALE = 1e200
_LOG_MAX = math.log(np.finfo(float).max)


def _check_argument(z):
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)) or np.any(z < 0):
        raise ValueError("Bessel argument must be finite and nonnegative")
    return z


def _series(orders, z, max_terms=2000):
    """Scaled power series on an (orders x z) grid; z must be > 0."""
    n = orders[:, None].astype(float)
    zz = z[None, :]
    log_lead = n * np.log(zz / 2.0) - gammaln(n + 1.0) - zz
    q = (zz / 2.0) ** 2
    total = np.ones(np.broadcast_shapes(n.shape, zz.shape))
    term = total.copy()
    for k in range(1, max_terms):
        term = term * q / (k * (k + n))
        total += term
        # extra terms past convergence are harmless, so test only every fourth
        if k % 4 == 0 and np.all(term <= 1e-17 * total):
            break
    return np.exp(log_lead + np.log(total))


def _miller(n_top, z):
    """Scaled I_0..I_n_top by normalised backward recurrence, z > 0."""
    zmax = float(z.max())
    start = n_top + int(math.sqrt(80.0 * zmax)) + 16
    start += start % 2
    out = np.zeros((n_top + 1, z.size))
    nxt = np.zeros_like(z)
    cur = np.full_like(z, 1e-300)
    norm = np.zeros_like(z)
    for k in range(start, 0, -1):
        prev = (2.0 * k / z) * cur + nxt
        nxt, cur = cur, prev
        # cur now holds I_{k-1}
        if k - 1 >= 1:
            norm += 2.0 * cur
        else:
            norm += cur
        if k - 1 <= n_top:
            out[k - 1] = cur
        # 8 steps grow by at most (2 start / 12)^8, far inside the 1e108 headroom
        if k % 8 == 0 and cur.max() > _RESCALE:
            big = cur > _RESCALE
            scale = np.where(big, 1.0 / _RESCALE, 1.0)
            cur *= scale
            nxt *= scale
            norm *= scale
            out *= scale
    return out / norm


def _asymptotic(orders, z):
    """Hankel expansion of e^{-z} I_n(z) for z >> n**2."""
    mu = 4.0 * orders[:, None].astype(float) ** 2
    zz = z[None, :]
    total = np.ones(np.broadcast_shapes(mu.shape, zz.shape))
    term = total.copy()
    for k in range(1, 60):
        term = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * zz)
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total / np.sqrt(2.0 * np.pi * zz)


def mbffk_scaled_sequence(n_max, z):
    r"""Scaled values :math:`e^{-z} I_k(z)` for ``k = 0..n_max``.

    Parameters
    ----------
    n_max : int
        Highest order, ``n_max >= 0``.
    z : float or array_like
        Nonnegative argument(s).

    Returns
    -------
    numpy.ndarray
        Shape ``(n_max + 1,)`` for scalar ``z``, otherwise
        ``(n_max + 1,) + z.shape``. Non-increasing along the first axis.
    """
    n_max = int(n_max)
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    z = _check_argument(z)
    shape = z.shape
    zf = z.ravel()
    out = np.zeros((n_max + 1, zf.size))

    zero = zf == 0.0
    out[0, zero] = 1.0

    asym = (zf >= ASYMPTOTIC_Z) & (zf >= 2.0 * n_max**2)
    if np.any(asym):
        out[:, asym] = _asymptotic(np.arange(n_max + 1), zf[asym])

    rest = ~zero & ~asym
    if np.any(rest):
        zr = zf[rest]
        block = np.empty((n_max + 1, zr.size))
        orders = np.arange(n_max + 1)
        # series wherever z <= max(SERIES_Z, 2n)
        use_series = (zr[None, :] <= SERIES_Z) | (2.0 * orders[:, None] >= zr[None, :])
        if np.any(use_series):
            rows = np.flatnonzero(use_series.any(axis=1))
            block[rows] = _series(orders[rows], zr)
        if not np.all(use_series):
            n_top = int(np.flatnonzero(~use_series.all(axis=1)).max())
            mill = _miller(n_top, zr)
            low = ~use_series[: n_top + 1]
            block[: n_top + 1][low] = mill[low]
        out[:, rest] = block

    return out.reshape((n_max + 1,) + shape)


def mbffk_scaled(n, z):
    r"""Exponentially scaled :math:`e^{-z} I_n(z)`.

    Never overflows. ``n`` is folded to ``|n|`` since :math:`I_{-n} = I_n`.
    """
    n = abs(int(n))
    z = _check_argument(z)
    zf = z.ravel()
    out = np.empty(zf.size)
    order = np.array([n])
    zero = zf == 0.0
    out[zero] = 1.0 if n == 0 else 0.0
    asym = (zf >= ASYMPTOTIC_Z) & (zf >= 2.0 * n**2)
    if np.any(asym):
        out[asym] = _asymptotic(order, zf[asym])[0]
    series = ~zero & ~asym & ((zf <= SERIES_Z) | (2.0 * n >= zf))
    if np.any(series):
        out[series] = _series(order, zf[series])[0]
    rest = ~zero & ~asym & ~series
    if np.any(rest):
        out[rest] = _miller(n, zf[rest])[n]
    return float(out[0]) if z.ndim == 0 else out.reshape(z.shape)


def mbffk(n, z):
    """Modified Bessel function of the first kind :math:`I_n(z)`.

    Raises
    ------
    ValueError
        If ``z`` is negative.
    OverflowError
        If the unscaled value is not representable; use
        :func:`mbffk_scaled` instead.
    """
    z = _check_argument(z)
    scaled = mbffk_scaled(n, z)
    with np.errstate(divide="ignore"):
        log_val = np.log(scaled) + z
    if np.any(log_val > _LOG_MAX):
        raise OverflowError(f"I_{n}(z) overflows for z={float(np.max(z))}; use mbffk_scaled")
    value = scaled * np.exp(z)
    return float(value) if value.ndim == 0 else value


def log_mbffk_scaled(n, z):
    r"""Natural log of :math:`e^{-z} I_n(z)`, finite even where the value underflows.

    Returns ``-inf`` at ``z == 0`` for ``n != 0``.
    """
    n = abs(int(n))
    z = _check_argument(z)
    zf = np.atleast_1d(z).ravel()
    with np.errstate(divide="ignore"):
        out = np.log(mbffk_scaled(n, zf))
    redo = (zf > 0) & (out < -600.0)
    if np.any(redo):
        # the scaled value is (nearly) subnormal here; sum the series in log form
        zz = zf[redo]
        log_lead = n * np.log(zz / 2.0) - gammaln(n + 1.0) - zz
        q = (zz / 2.0) ** 2
        total = np.ones_like(zz)
        term = np.ones_like(zz)
        for k in range(1, 100000):
            term = term * q / (k * (k + n))
            total += term
            if np.all(term <= 1e-17 * total):
                break
        out[redo] = log_lead + np.log(total)
    out = out.reshape(z.shape)
    return float(out) if out.ndim == 0 else out
