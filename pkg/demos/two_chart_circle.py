"""Flattening and sewing through a two-chart atlas of the circle, and the
comparison of chart norms for two atlases.

Run ``python3 demos/two_chart_circle.py``; prints CSV suitable for plotting.
"""

import numpy as np

from hscale.charts import CircleAtlas, atlas_independence_experiment, roundtrip_errors
from hscale.params import parse

atlas = CircleAtlas()
errs = roundtrip_errors(lambda th: np.abs(np.sin(th)) ** 3, atlas, Ns=(8, 16, 32, 64))
print("N,roundtrip_error")
for N, e in zip((8, 16, 32, 64), errs):
    print(f"{N},{e:.6e}")

rotated = CircleAtlas(rotation=np.pi / 2)
print("\nphi,N,c_lower,c_upper")
for text in ("pow 0", "pow 1", "* (pow 1) (logpow 1)"):
    for N in (16, 32, 64):
        lo, hi = atlas_independence_experiment(parse(text), atlas, rotated, N)
        print(f"{text},{N},{lo:.6f},{hi:.6f}")
