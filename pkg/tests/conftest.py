import math
from fractions import Fraction

import numpy as np
import pytest


def scan_quantile(p, scores, augment=False):
    """Reference quantile: scan sorted candidates for the first with count/N >= p.

    Uses exact rational arithmetic so ties at ``p * N`` are decided
    without rounding.
    """
    vals = sorted(float(s) for s in scores)
    if augment:
        vals.append(math.inf)
    N = len(vals)
    p = Fraction(p).limit_denominator(10**9)
    for cand in vals:
        count = sum(1 for v in vals if v <= cand)
        if Fraction(count, N) >= p:
            return cand
    raise AssertionError("unreachable for p <= 1")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
