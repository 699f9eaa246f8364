"""
Integrand traces and their running integrals
============================================

Diagonal Gramian entries of the infinite 2-d lattice with a single driver
at the origin. Each integrand rises to a peak and then decays
exponentially when p > 2 d s, so the running integral levels off at a
finite value.
"""

import numpy as np

from lattice_gramian import LatticeParams, infinite_entry, infinite_entry_limit, integrand

params = LatticeParams(d=2, p=5.0, s=1.0)
driver = [(0, 0)]
keys = [(0, 0), (1, 0), (1, 1), (2, 0)]
tau = np.linspace(0.0, 10.0, 11)

print("tau   " + "".join(f"{str(k):>12}" for k in keys))
for t in tau:
    row = [integrand(k, k, driver, params, t) for k in keys]
    print(f"{t:4.1f}  " + "".join(f"{v:12.3e}" for v in row))

# Running integrals approach the t -> infinity limit.
for k in keys:
    partial = [infinite_entry(k, k, driver, params, t) for t in (1.0, 2.0, 5.0)]
    limit = infinite_entry_limit(k, k, driver, params)
    print(k, " ".join(f"{v:.10f}" for v in partial), "->", f"{limit:.10f}")
