"""
Modified Bessel functions of integer order
==========================================

Every infinite-lattice Gramian entry is an integral of products of
``I_n(2 s tau)``. This script shows the three regimes the kernel switches
between and the three properties the Gramian formulas rely on.
"""

import numpy as np

from lattice_gramian import mbffk, mbffk_scaled, mbffk_scaled_sequence

# Small arguments use the power series, moderate ones a normalised
# backward recurrence, very large ones the Hankel expansion.
for z in (0.5, 30.0, 5000.0):
    print(f"z = {z:7.1f}   e^-z I_0(z) = {mbffk_scaled(0, z):.16e}")

# Unscaled values overflow near z = 710; the scaled form never does.
try:
    mbffk(0, 800.0)
except OverflowError as exc:
    print("unscaled:", exc)

# Property 1: I_{-n} = I_n
print("I_-3(2.5) == I_3(2.5):", mbffk(-3, 2.5) == mbffk(3, 2.5))

# Property 2: values fall with the order for z > 0
seq = mbffk_scaled_sequence(8, 4.0)
print("decreasing in n:", bool(np.all(np.diff(seq) < 0)), np.array2string(seq, precision=3))

# Property 3: values rise with the argument
z = np.linspace(0.1, 20.0, 50)
print("increasing in z:", bool(np.all(np.diff(mbffk(2, z)) > 0)))

# e^{-z} (I_0 + 2 sum_k I_k) = 1, the normalisation the recurrence uses
seq = mbffk_scaled_sequence(200, 60.0)
print("generating-function sum:", seq[0] + 2 * seq[1:].sum())
