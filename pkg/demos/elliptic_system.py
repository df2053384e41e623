"""A mixed-order elliptic system on the circle: ellipticity, Fredholm data,
regularity and a local a priori estimate.

Run ``python3 demos/elliptic_system.py``.
"""

import pathlib

import numpy as np

from hscale import FrequencyLattice, SpectralSection, parse
from hscale.psdo import (
    LocalizationWindow,
    apriori_estimate,
    boundedness_certificate,
    dn_ellipticity_check,
    fredholm_solve,
    parse_system,
    regularity_experiment,
)

here = pathlib.Path(__file__).resolve().parent
A = parse_system((here / "systems" / "dn2x2.sys").read_text())
print("orders ell =", A.ell, " m =", A.m)
print("ellipticity:", dn_ellipticity_check(A))

phi = parse("* (pow 1) (logpow 1)")
cert = boundedness_certificate(A, phi)
print("graded operator norm per N:", {N: round(v, 6) for N, v in zip(cert.Ns, cert.values)})

# remove the lower-order term of the (1, 1) entry: A(0) becomes singular
Z = parse_system((here / "systems" / "dn2x2_zero.sys").read_text())
lat = FrequencyLattice(1, 16)
rep = fredholm_solve(Z, SpectralSection.single_mode(lat, (0,), rank=2, component=0))
print(f"kernel {rep.dim_kernel}, cokernel {rep.dim_cokernel}, index {rep.index}, "
      f"f = e_0 solvable: {rep.solvable} (pairing {rep.max_pairing:g})")

# u_k = <k>^-a lies in the source space iff a > 2.5; the image follows suit
lat = FrequencyLattice(1, 128)
for a in (2.25, 2.75):
    u = SpectralSection(lat, np.repeat((lat.bracket ** -a)[:, None], 2, axis=1))
    row = regularity_experiment(A, parse("pow 0"), u, Ns=(128,)).rows[0]
    print(f"a = {a}: u converges {row.u_converges}, Au converges {row.f_converges}")

rep = apriori_estimate(A, LocalizationWindow(), trials=100, Ns=(64, 128))
print(f"local estimate constant: {rep.c[0]:.4f} (N=64), {rep.c[1]:.4f} (N=128)")
