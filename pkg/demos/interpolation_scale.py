"""Function parameters, their indices and the interpolation identity.

Run ``python3 demos/interpolation_scale.py``.
"""

import numpy as np

from hscale import (
    FrequencyLattice,
    InterpolationSetup,
    SpectralSection,
    cq_embedding_check,
    embedding_check,
    h_norm,
    interpolation_parameter,
    matuszewska_indices,
    parse,
)
from hscale.interpolation import interp_norm, sobolev_pair

phi = parse("* (pow 1) (logpow 2)")
idx = matuszewska_indices(phi)
print(f"phi = {phi.to_prefix()}: indices ({idx.sigma0:g}, {idx.sigma1:g}), {idx.provenance}")

wiggly = parse("sexp sinloglog 0.2 0.2 (pow 1)")
idx = matuszewska_indices(wiggly)
print(f"phi = {wiggly.to_prefix()}: indices ({idx.sigma0:.4f}, {idx.sigma1:.4f}) "
      f"on t in [1, {idx.window[1]:g}]")

# H^phi as the interpolation space between H^0 and H^3
setup = InterpolationSetup(0.0, 3.0, phi)
psi = interpolation_parameter(setup)
lat = FrequencyLattice(1, 64)
u = SpectralSection.random(lat, 1, np.random.default_rng(0), decay=1.0)
lhs = interp_norm(sobolev_pair(lat, 0.0, 3.0), psi, u)
rhs = h_norm(u, phi).value
print(f"||u||_[H^0, H^3]_psi = {lhs:.15g}\n||u||_phi             = {rhs:.15g}")

# a log factor alone separates two spaces, compactly
print("H^(t^2 log t) in H^(t^2):", embedding_check(parse("pow 2"), parse("* (pow 2) (logpow 1)")))

# continuity on the circle needs more than half a derivative; a log factor suffices
for text in ("pow 0.5", "* (pow 0.5) (logpow 1)"):
    print(f"H^({text}) in C(T):", cq_embedding_check(parse(text), 0, 1))
