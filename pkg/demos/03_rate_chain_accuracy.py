#!/usr/bin/env python3
"""Accuracy of the second-order-cone encoding of the rate logarithm.

The inner beamformer program carries ``log2(1 + signal)`` as a free rate
variable tied to the signal term by a short cone chain: a quartic expansion
squared ``depth`` times.  This script measures the largest admissible rate
against the exact logarithm over the relevant signal range.
"""

import math

from seeopt import socp_max_rate

print(f"{'signal x':>10s} | {'exact log2(1+x)':>16s} | {'depth 6 error':>14s} | {'depth 10 error':>14s}")
print("-" * 64)
for x in (0.1, 1.0, 3.0, 10.0, 100.0, 1e3, 1e4):
    exact = math.log2(1.0 + x)
    e6 = socp_max_rate(x, 6) - exact
    e10 = socp_max_rate(x, 10) - exact
    print(f"{x:10g} | {exact:16.8f} | {e6:14.3e} | {e10:14.3e}")

print("\nEach extra unit of depth squares the expansion once more, so the")
print("error falls double-exponentially; depth 6 is already below solver")
print("tolerance for every signal level this network produces.")
