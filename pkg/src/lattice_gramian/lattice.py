"""Lattice indexing and finite-lattice system matrices.

Nodes are addressed by integer coordinate tuples relative to a reference
node at the origin. A finite lattice is a centred box with an odd number of
nodes per axis; neighbours that fall outside the box are simply dropped
(truncated boundary, no wrap-around).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LatticeParams",
    "FiniteLatticeSpec",
    "as_index",
    "neighbors",
    "flat_index",
    "unflat_index",
    "build_system",
    "check_output_controllability",
]

NodeIndex = tuple  # tuple[int, ...]


def as_index(coords, d=None):
    """Coerce ``coords`` to a tuple of ints, optionally checking its length."""
    idx = tuple(int(c) for c in np.atleast_1d(coords))
    if d is not None and len(idx) != d:
        raise ValueError(f"index {idx} has dimension {len(idx)}, expected {d}")
    return idx


@dataclass(frozen=True)
class LatticeParams:
    """Dimension ``d``, self-loop magnitude ``p`` and edge weight ``s``."""

    d: int
    p: float
    s: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("d must be a positive integer")
        if not (self.p > 0 and self.s > 0):
            raise ValueError("p and s must be positive")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "s", float(self.s))

    @property
    def is_hurwitz(self):
        return self.p > 2 * self.d * self.s

    @property
    def decay_rate(self):
        """Exponential rate ``2p - 4ds`` bounding every Gramian integrand."""
        return 2.0 * self.p - 4.0 * self.d * self.s


@dataclass(frozen=True)
class FiniteLatticeSpec:
    """A centred ``extents[0] x ... x extents[d-1]`` box of the lattice.

    ``drivers`` is stored sorted so that column order of ``B`` is
    reproducible; ``targets`` keeps the caller's order (rows of ``C``).
    """

    params: LatticeParams
    extents: tuple
    drivers: tuple = ()
    targets: tuple = ()
    _half: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = self.params.d
        extents = tuple(int(e) for e in self.extents)
        if len(extents) != d:
            raise ValueError(f"need {d} extents, got {len(extents)}")
        if any(e < 1 or e % 2 == 0 for e in extents):
            raise ValueError("extents must be positive odd integers")
        drivers = tuple(sorted({as_index(a, d) for a in self.drivers}))
        targets = tuple(as_index(t, d) for t in self.targets)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "drivers", drivers)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "_half", tuple(e // 2 for e in extents))
        for node in drivers + targets:
            if not self.contains(node):
                raise IndexError(f"node {node} lies outside extents {extents}")

    @property
    def n(self):
        return int(np.prod(self.extents))

    def contains(self, i):
        return len(i) == len(self.extents) and all(abs(c) <= h for c, h in zip(i, self._half))

    def nodes(self):
        """All in-bounds indices in flat-index order."""
        ranges = [range(-h, h + 1) for h in self._half]
        return [tuple(c) for c in itertools.product(*ranges)]


def neighbors(i, params):
    """The ``2d`` nearest neighbours of ``i`` on the infinite lattice."""
    i = as_index(i)
    if len(i) != params.d:
        raise ValueError(f"index {i} has dimension {len(i)}, expected {params.d}")
    out = set()
    for k in range(params.d):
        for step in (1, -1):
            nb = list(i)
            nb[k] += step
            out.add(tuple(nb))
    return out


def flat_index(i, spec):
    """Row-major position of ``i`` inside the finite lattice."""
    i = as_index(i)
    if not spec.contains(i):
        raise IndexError(f"node {i} lies outside extents {spec.extents}")
    flat = 0
    for c, h, e in zip(i, spec._half, spec.extents):
        flat = flat * e + (c + h)
    return flat


def unflat_index(flat, spec):
    """Inverse of :func:`flat_index`."""
    flat = int(flat)
    if not 0 <= flat < spec.n:
        raise IndexError(f"flat index {flat} outside 0..{spec.n - 1}")
    coords = []
    for h, e in zip(reversed(spec._half), reversed(spec.extents)):
        flat, r = divmod(flat, e)
        coords.append(r - h)
    return tuple(reversed(coords))


def build_system(spec):
    """Assemble ``(A, B, C)`` for a finite lattice.

    ``A`` has ``-p`` on the diagonal and ``s`` between in-bounds nearest
    neighbours. ``B`` has one unit column per driver and ``C`` one unit
    row per target.
    """
    if not spec.drivers:
        raise ValueError("at least one driver node is required")
    p, s = spec.params.p, spec.params.s
    n = spec.n
    grid = np.arange(n).reshape(spec.extents)
    A = -p * np.eye(n)
    for axis in range(spec.params.d):
        lo = np.take(grid, np.arange(spec.extents[axis] - 1), axis=axis).ravel()
        hi = np.take(grid, np.arange(1, spec.extents[axis]), axis=axis).ravel()
        A[lo, hi] = s
        A[hi, lo] = s
    B = np.zeros((n, len(spec.drivers)))
    for col, a in enumerate(spec.drivers):
        B[flat_index(a, spec), col] = 1.0
    C = np.zeros((len(spec.targets), n))
    for row, t in enumerate(spec.targets):
        C[row, flat_index(t, spec)] = 1.0
    return A, B, C


def check_output_controllability(A, B, C, rank_tol=1e-10):
    """True iff ``[CB | CAB | ... | CA^{n-1}B]`` has full row rank.

    Rank counts singular values above ``rank_tol`` times the largest.
    Each block is normalised before stacking so that powers of ``A`` do not
    swamp the early blocks.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    q = C.shape[0]
    if q == 0:
        return True
    blocks = []
    AkB = B.copy()
    for _ in range(A.shape[0]):
        blk = C @ AkB
        nrm = np.linalg.norm(blk)
        blocks.append(blk / nrm if nrm > 0 else blk)
        AkB = A @ AkB
        nrm = np.linalg.norm(AkB)
        if nrm == 0:
            break
        AkB = AkB / nrm
        # the Krylov rank can only grow while it is below q
        if len(blocks) % 8 == 0 and _rank(np.hstack(blocks), rank_tol) == q:
            return True
    return _rank(np.hstack(blocks), rank_tol) == q


def _rank(M, rank_tol):
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rank_tol * sv[0]))
