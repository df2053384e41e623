import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hscale.errors import InvalidSetupError, PreconditionError
from hscale.interpolation import (
    DeviationRecord,
    DiagonalPair,
    check_class_b,
    deviation_csv,
    direct_sum,
    embedding_constants,
    interp_norm,
    sobolev_pair,
    verify_duality_interp,
    verify_orthogonal_sum,
    verify_prop1_identity,
    verify_reiteration,
)
from hscale.params import InterpolationSetup, Power, interpolation_parameter, parse
from hscale.torus_spaces import FrequencyLattice, SpectralSection, h_norm

SETUPS = [
    (0.0, 3.0, "* (pow 1) (logpow 2)"),
    (-1.0, 1.0, "pow 0.5"),
    (0.0, 2.0, "* (pow 1) (logpow 1)"),
    (0.0, 2.0, "sexp sinloglog 0.2 0.2 (pow 1)"),
    (0.0, 2.0, "reit (pow 0) (pow 2) (pow 0.5)"),
]


def _setup(s0, s1, text):
    return InterpolationSetup(s0, s1, parse(text))


# -- norms on diagonal pairs -------------------------------------------------

def test_constant_psi_gives_x0_norm(rng):
    lat = FrequencyLattice(1, 16)
    pair = sobolev_pair(lat, 0.5, 2.0)
    u = SpectralSection.random(lat, 1, rng)
    assert interp_norm(pair, Power(0), u) == pytest.approx(h_norm(u, Power(0.5)).value,
                                                           rel=1e-13)


def test_identity_psi_gives_x1_norm(rng):
    lat = FrequencyLattice(1, 16)
    pair = sobolev_pair(lat, 0.5, 2.0)
    u = SpectralSection.random(lat, 1, rng)
    assert interp_norm(pair, Power(1), u) == pytest.approx(h_norm(u, Power(2.0)).value,
                                                           rel=1e-13)


@given(s0=st.floats(-2, 1), gap=st.floats(0.1, 3), theta=st.floats(0, 1))
def test_power_psi_on_sobolev_pair(s0, gap, theta):
    lat = FrequencyLattice(1, 12)
    u = SpectralSection.random(lat, 1, np.random.default_rng(0))
    pair = sobolev_pair(lat, s0, s0 + gap)
    got = interp_norm(pair, Power(theta), u)
    assert got == pytest.approx(h_norm(u, Power(s0 + theta * gap)).value, rel=1e-12)


def test_pair_requires_j_at_least_one():
    lat = FrequencyLattice(1, 2)
    with pytest.raises(ValueError):
        DiagonalPair.from_weights(lat, np.full(5, 2.0), np.ones(5))


def test_embedding_constants_sobolev_pair(rng):
    lat = FrequencyLattice(1, 32)
    pair = sobolev_pair(lat, 0.0, 2.0)
    psi = Power(0.5)
    c0, c1 = embedding_constants(pair, psi)
    u = SpectralSection.random(lat, 1, rng)
    n0, npsi, n1 = (h_norm(u, Power(s)).value for s in (0.0, 1.0, 2.0))
    assert n0 <= c0 * npsi * (1 + 1e-12)
    assert c0 * npsi <= c1 * n1 * (1 + 1e-12)


def test_class_b():
    assert check_class_b(Power(0.5))
    with pytest.raises(PreconditionError):
        check_class_b(Power(-2.0))


# -- interpolation identity ------------------------------------------------

@pytest.mark.parametrize("s0,s1,phi", SETUPS)
def test_identity_random_sections(s0, s1, phi, rng):
    lat = FrequencyLattice(1, 64)
    for _ in range(5):
        u = SpectralSection.random(lat, 1, rng)
        assert verify_prop1_identity(_setup(s0, s1, phi), u) <= 1e-12


def test_identity_single_mode():
    lat = FrequencyLattice(2, 5)
    u = SpectralSection.single_mode(lat, (3, -4))
    assert verify_prop1_identity(_setup(0, 3, "* (pow 1) (logpow 2)"), u) <= 1e-14


def test_identity_on_torus_of_dimension_three(rng):
    lat = FrequencyLattice(3, 4)
    u = SpectralSection.random(lat, 2, rng)
    assert verify_prop1_identity(_setup(0, 3, "* (pow 1) (logpow 2)"), u) <= 1e-12


def test_identity_zero_section_warns():
    u = SpectralSection.zeros(FrequencyLattice(1, 4))
    with pytest.warns(RuntimeWarning):
        assert verify_prop1_identity(_setup(-1, 1, "pow 0.5"), u) == 0.0


def test_identity_rejects_invalid_setup(rng):
    u = SpectralSection.random(FrequencyLattice(1, 4), 1, rng)
    with pytest.raises(InvalidSetupError):
        verify_prop1_identity(_setup(0.6, 1, "pow 0.5"), u)


# -- reiteration -------------------------------------------------------------

def test_reiteration_constant_inner_ratio(rng):
    lat = FrequencyLattice(1, 32)
    pair = sobolev_pair(lat, 0, 2)
    u = SpectralSection.random(lat, 1, rng)
    assert verify_reiteration(pair, Power(0.5), Power(0.5), Power(0.3), u) <= 1e-13


@given(a=st.floats(0, 0.5), b=st.floats(0.5, 1), theta=st.floats(0, 1))
def test_reiteration_of_powers_exponent_arithmetic(a, b, theta):
    lat = FrequencyLattice(1, 16)
    pair = sobolev_pair(lat, 0, 2)
    u = SpectralSection.random(lat, 1, np.random.default_rng(1))
    assert verify_reiteration(pair, Power(a), Power(b), Power(theta), u) <= 1e-12
    # and the composite is the power with the interpolated exponent
    omega = Power(2 * (a + theta * (b - a)))
    from hscale.params import Reiterated
    got = interp_norm(pair, Reiterated(Power(a), Power(b), Power(theta)), u)
    assert got == pytest.approx(h_norm(u, omega).value, rel=1e-12)


@pytest.mark.parametrize("s0,s1,phi", SETUPS)
def test_reiteration_with_interpolation_parameters(s0, s1, phi, rng):
    lat = FrequencyLattice(1, 64)
    pair = sobolev_pair(lat, s0, s1)
    psi1 = Power(0.1)
    psi2 = interpolation_parameter(_setup(s0, s1, phi))
    psi = interpolation_parameter(_setup(0, 2, "* (pow 1) (logpow 1)"))
    u = SpectralSection.random(lat, 1, rng)
    assert verify_reiteration(pair, psi1, psi2, psi, u) <= 1e-12


def test_reiteration_rejects_unbounded_ratio(rng):
    lat = FrequencyLattice(1, 8)
    u = SpectralSection.random(lat, 1, rng)
    with pytest.raises(PreconditionError):
        verify_reiteration(sobolev_pair(lat, 0, 1), Power(1), Power(0.5), Power(0.5), u)


# -- orthogonal sums ----------------------------------------------------------------

def test_single_block_trivial(rng):
    lat = FrequencyLattice(1, 16)
    u = SpectralSection.random(lat, 1, rng)
    assert verify_orthogonal_sum([sobolev_pair(lat, 0, 1)], Power(0.5), [u]) <= 1e-14


def test_two_identical_blocks_double(rng):
    lat = FrequencyLattice(1, 16)
    pair = sobolev_pair(lat, 0, 1)
    u = SpectralSection.random(lat, 1, rng)
    lw0, lw1, offsets = direct_sum([pair, pair])
    assert list(offsets) == [0, lat.size, 2 * lat.size]
    assert verify_orthogonal_sum([pair, pair], Power(0.5), [u, u]) <= 1e-14
    psi = Power(0.5)
    whole = np.sqrt(np.sum(np.exp(2 * (lw0 + 0.5 * (lw1 - lw0)))
                           * np.abs(np.concatenate([u.coeffs, u.coeffs])[:, 0]) ** 2))
    assert whole ** 2 == pytest.approx(2 * interp_norm(pair, psi, u) ** 2, rel=1e-13)


def test_heterogeneous_blocks_against_per_block_sums(rng):
    lats = [FrequencyLattice(1, 8), FrequencyLattice(2, 4), FrequencyLattice(3, 2)]
    pairs = [sobolev_pair(lats[0], 0, 1), sobolev_pair(lats[1], -1, 2),
             sobolev_pair(lats[2], 0.5, 1.5)]
    blocks = [SpectralSection.random(lat, 1, rng) for lat in lats]
    psi = interpolation_parameter(_setup(0, 2, "* (pow 1) (logpow 1)"))
    assert verify_orthogonal_sum(pairs, psi, blocks) <= 1e-12
    # independent per-block oracle: explicit loop over frequencies
    total = 0.0
    for pair, b in zip(pairs, blocks):
        for lw0, lw1, c in zip(pair.log_w0, pair.log_w1, b.coeffs[:, 0]):
            total += (math.exp(lw0) * float(psi(math.exp(lw1 - lw0)))) ** 2 * abs(c) ** 2
    got = sum(interp_norm(p, psi, b) ** 2 for p, b in zip(pairs, blocks))
    assert got == pytest.approx(total, rel=1e-12)


# -- duality ---------------------------------------------------------------------

@pytest.mark.parametrize("s0,s1,phi", [(-1, 1, "pow 0.5"), (0, 2, "* (pow 1) (logpow 1)"),
                                       (0, 3, "* (pow 1) (logpow 2)")])
def test_duality_identities(s0, s1, phi, rng):
    lat = FrequencyLattice(1, 32)
    for _ in range(20):
        u = SpectralSection.random(lat, 1, rng)
        assert verify_duality_interp(_setup(s0, s1, phi), u) <= 1e-12


def test_dual_sobolev_weight():
    # s0 = -1, s1 = 1, phi = t^s: the dual space carries the weight <k>^-s
    lat = FrequencyLattice(1, 8)
    u = SpectralSection.single_mode(lat, (5,))
    setup = _setup(-1, 1, "pow 0.3")
    psi = interpolation_parameter(setup)
    from hscale.interpolation import _Chi
    got = interp_norm(sobolev_pair(lat, -1, 1), _Chi(psi), u)
    assert got == pytest.approx(26 ** (-0.15), rel=1e-13)


# -- reports ----------------------------------------------------------------------

def test_deviation_csv():
    text = deviation_csv([DeviationRecord("prop1_identity", "-1 1 pow 0.5", 0.0, 1e-12),
                          DeviationRecord("reiteration", "x", 2e-12, 1e-12)])
    assert text.splitlines() == [
        "test,setup,deviation,tolerance,pass",
        "prop1_identity,-1 1 pow 0.5,0.000000e+00,1.0e-12,true",
        "reiteration,x,2.000000e-12,1.0e-12,false",
    ]
