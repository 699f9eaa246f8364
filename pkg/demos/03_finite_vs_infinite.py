"""
Finite lattice against the infinite-lattice closed form
=======================================================

A 21 x 21 lattice with a centre driver is compared entry by entry with
the infinite lattice at p = 5, s = 1, t = 5. Relative error is tiny at
the centre and grows towards the truncated boundary.
"""

import numpy as np

from lattice_gramian import FiniteLatticeSpec, LatticeParams, build_system, compare, finite_gramian_closed

params = LatticeParams(d=2, p=5.0, s=1.0)
spec = FiniteLatticeSpec(params, (21, 21), drivers=[(0, 0)])
A, B, _ = build_system(spec)
W = finite_gramian_closed(A, B, 5.0, spec=spec)

pairs = [((x, 0), (0, 0)) for x in range(0, 11)]
report = compare(W, params, spec.drivers, 5.0, pairs)

print(" node      finite            infinite          rel. error")
for key in pairs:
    print(f"{str(key[0]):>8} {report.reference[key]:17.10e} {report.approximation[key]:17.10e} "
          f"{report.relative_error[key]:10.2e}")

column = [(i, (0, 0)) for i in spec.nodes()]
full = compare(W, params, spec.drivers, 5.0, column)
peak = max(full.absolute_error, key=full.absolute_error.get)
print(f"largest absolute error {full.max_abs:.2e} at {peak[0]}")
print(f"centre absolute error  {full.absolute_error[((0, 0), (0, 0))]:.2e}")
print("log10 relative error along the axis:",
      np.round(np.log10([report.relative_error[k] for k in pairs]), 1))
