"""Pure-python stepping kernel, used when the compiled extension is absent.

Matches volesim._core.run_steps in contract. Summation order differs (numpy
pairwise dot versus sequential accumulation), so long chaotic trajectories
from the two backends agree closely only over short horizons.
"""

from __future__ import annotations

import math

import numpy as np


def run_steps(births, survival_reversed, seasonal,
              p, n_steps, step0,
              m0, gamma, use_quad,
              n1, n2, qa, qb, qc,
              overflow_limit, mature_out):
    """Advance the birth recurrence n_steps steps in place.

    births must hold the 2p-step pre-history in [0:2p] and room for
    n_steps more values; mature values are written to mature_out. Returns
    -1 on success, else the relative index of the step where the mature
    value went non-finite or exceeded overflow_limit.
    """
    twop = 2 * p
    for i in range(n_steps):
        n_val = float(np.dot(survival_reversed, births[i:i + twop]))
        mature_out[i] = n_val
        if not math.isfinite(n_val) or n_val > overflow_limit:
            return i
        if n_val <= n1:
            m = m0
        elif use_quad and n_val <= n2:
            m = m0 * (qa + qb * n_val + qc * n_val * n_val)
        else:
            m = m0 * n_val ** (-gamma)
        births[twop + i] = m * n_val * seasonal[(step0 + i) % p] / p
    return -1
