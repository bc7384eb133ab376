"""
Online intervals when the level of a series jumps
=================================================

An AR(1) series shifts its mean halfway through the test stream. The
adaptive miscoverage recursion widens the interval after the jump;
the bootstrap ensemble gives comparable coverage on the stationary
series.
"""

import warnings

import numpy as np

from conformal_ts import AbsoluteResidual, AciState, aci_bound_check, aci_run, enbpi_fit, enbpi_run
from conformal_ts.core import scores_of
from conformal_ts.lab import GeneratorSpec, LinearAR, generate, rolling_coverage
from conformal_ts.lab.forecasters import lag_embed

n_train, shift_at = 500, 2500
y = generate(GeneratorSpec("shift_series",
                           {"T": 5501, "changepoints": [[n_train + 1 + shift_at, 5.0]]}, seed=0))
ds = lag_embed(y, 1)
train, test = ds.subset(range(n_train)), ds.subset(range(n_train, len(ds)))
model = LinearAR().fit(train.X, train.Y)

state = AciState.start(0.1, scores_of(train, model, AbsoluteResidual()), gamma=0.005)
rec = aci_run(state, test, model)
roll = rolling_coverage(rec.err, 200)
print(f"overall coverage {1 - rec.err.mean():.3f}")
for step in (shift_at - 1, shift_at + 100, shift_at + 250, shift_at + 500):
    print(f"  rolling coverage ending {step - shift_at:+5d} steps from the jump: "
          f"{roll[step - 199]:.3f}   alpha_t {rec.alpha_t[step]:.3f}")
lhs, rhs = aci_bound_check(state)
print(f"|mean err - alpha| = {lhs:.5f} <= {rhs:.5f}")

# Same stationary noise, no jump: the ensemble method.
y = generate(GeneratorSpec("ar1", {"T": 1001}, seed=0))
ds = lag_embed(y, 1)
with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    ens = enbpi_fit(ds.subset(range(500)), LinearAR, B=20, seed=0, window=10)
rec, _ = enbpi_run(ens, ds.subset(range(500, 1000)), 0.1)
print(f"\nensemble coverage {1 - rec.err.mean():.3f}, "
      f"mean width {np.mean(rec.hi - rec.lo):.3f}")
