"""
Split conformal intervals, fixed and adaptive width
===================================================

Calibrate a least-squares fit on held-out residuals, then compare it
with conformalized quantile regression on noise that grows with x.
"""

import numpy as np

from conformal_ts import AbsoluteResidual, CqrScore, calibrate, predict_interval, split
from conformal_ts.core import Dataset
from conformal_ts.lab import GeneratorSpec, LinearAR, LinearQuantile, generate
from conformal_ts.lab.generators import heteroscedastic_scale

data = generate(GeneratorSpec("heteroscedastic", {"n": 3000}, seed=1))
parts = split(Dataset(data.X[:2000], data.Y[:2000]), 0.5, seed=1)
test = Dataset(data.X[2000:], data.Y[2000:])

# Absolute residuals give one threshold, hence one width everywhere.
ols = LinearAR().fit(parts.train.X, parts.train.Y)
q_abs = calibrate(parts.cal, ols, AbsoluteResidual(), 0.1)
fixed = predict_interval(test.X, ols, AbsoluteResidual(), q_abs)

# CQR shifts a pair of fitted quantile curves by one calibrated amount.
qr = LinearQuantile(0.05, 0.95).fit(parts.train.X, parts.train.Y)
q_cqr = calibrate(parts.cal, qr, CqrScore(), 0.1)
adaptive = predict_interval(test.X, qr, CqrScore(), q_cqr)

print(f"{'':10s}{'coverage':>10s}{'mean width':>12s}")
for name, iv in (("absolute", fixed), ("cqr", adaptive)):
    print(f"{name:10s}{iv.contains(test.Y).mean():10.3f}{iv.width.mean():12.3f}")

# Width by noise band: flat for the absolute score, rising for CQR.
sigma = heteroscedastic_scale(test.X)
bands = np.quantile(sigma, [0, 0.25, 0.5, 0.75, 1.0])
print("\nnoise band      absolute   cqr")
for lo, hi in zip(bands[:-1], bands[1:]):
    m = (sigma >= lo) & (sigma <= hi)
    print(f"[{lo:.2f}, {hi:.2f}]   {fixed.width[m].mean():8.3f} {adaptive.width[m].mean():6.3f}")
