"""
Calibrating a safety alarm
==========================

Given a noisy predictor of a safety score, pick the alarm threshold so
that at least 95% of truly unsafe states raise an alert.
"""

import numpy as np

from conformal_ts import calibrate_warning, evaluate_warning
from conformal_ts.lab import GeneratorSpec, generate
from conformal_ts.safety import records_from_arrays

phi, phi_hat = generate(GeneratorSpec("safety", {"n": 4000}, seed=7))
recs = records_from_arrays(phi, phi_hat, phi_0=0.0)
cal, test = recs[:2000], recs[2000:]

print("epsilon  threshold  detection  false alerts")
for eps in (0.01, 0.05, 0.2):
    ws = calibrate_warning(cal, eps, phi_0=0.0)
    det, fa = evaluate_warning(ws, test)
    print(f"{eps:7.2f}  {ws.alert_threshold:9.3f}  {det:9.3f}  {fa:12.3f}")

# Alerting on the raw prediction is cheaper but misses unsafe states.
unsafe = np.array([r.unsafe for r in test])
naive = np.array([r.phi_hat <= 0.0 for r in test])
print(f"\nnaive rule: detection {naive[unsafe].mean():.3f}, false alerts {naive[~unsafe].mean():.3f}")
