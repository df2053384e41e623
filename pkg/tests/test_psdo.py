import numpy as np
import pytest
from hypothesis import given, strategies as st

from hscale.errors import HomogeneityError, NotEllipticError, ParseError, SingularSymbolError, \
    UnboundedSymbolError
from hscale.params import LogPower, Power, Product
from hscale.psdo import (
    Elliptic,
    LocalizationWindow,
    NotElliptic,
    apply,
    apriori_estimate,
    boundedness_certificate,
    classical_smoothness_check,
    dn_ellipticity_check,
    format_system,
    fredholm_solve,
    graded_norm,
    parametrix,
    parametrix_residuals,
    parse_polynomial,
    parse_system,
    regularity_experiment,
)
from hscale.psdo.operators import require_elliptic
from hscale.psdo.regularity import apriori_ratio, shell_decay_exponent
from hscale.torus_spaces import FrequencyLattice, SpectralSection

TLOG = Product((Power(1), LogPower(1)))


def load(system_path, name):
    return parse_system(system_path(name).read_text())


def dense_index(A, N, rtol=1e-10):
    """Nullity of the full block-diagonal truncated matrix minus that of its adjoint."""
    lat = FrequencyLattice(A.n, N)
    p = A.p
    M = np.zeros((lat.size * p, lat.size * p), dtype=complex)
    for i, k in enumerate(lat.points):
        M[i * p:(i + 1) * p, i * p:(i + 1) * p] = A(k[None, :])[0]
    # per-block scale: tolerance relative to each frequency's largest singular value
    s_blocks = [np.linalg.svd(M[i * p:(i + 1) * p, i * p:(i + 1) * p], compute_uv=False)
                for i in range(lat.size)]
    null = sum(int(np.sum(s <= rtol * s[0])) for s in s_blocks)
    s_full = np.linalg.svd(M, compute_uv=False)
    s_adj = np.linalg.svd(M.conj().T, compute_uv=False)
    assert np.sum(s_full <= 1e-12) == np.sum(s_adj <= 1e-12)
    dim_n = int(np.sum(s_full <= 1e-12 * s_full[0]))
    dim_m = int(np.sum(s_adj <= 1e-12 * s_adj[0]))
    assert dim_n == null
    return dim_n, dim_m, dim_n - dim_m


# -- symbols and system files ----------------------------------------------------------

def test_polynomial_parsing():
    P = parse_polynomial("3*k1^2 - 2*i*k1*k2 + 1", 2)
    assert P.degree == 2
    assert complex(P(np.array([[1.0, 2.0]]))[0]) == pytest.approx(4 - 4j)
    assert P.homogeneous_part(2).degree == 2


def test_polynomial_parse_error():
    with pytest.raises(ParseError):
        parse_polynomial("k1 +* 2", 1)


def test_system_round_trip(system_path):
    A = load(system_path, "dn2x2")
    B = parse_system(format_system(A))
    pts = np.array([[-3.0], [0.0], [5.0]])
    np.testing.assert_allclose(B(pts), A(pts), rtol=0, atol=0)
    assert (A.ell, A.m) == (B.ell, B.m)


def test_entry_order_exceeded_raises():
    text = "n = 1\nell = 0 -1\nm = 2 1\na 2 2 = k1^2\n"
    with pytest.raises(ParseError):
        parse_system(text)


# -- ellipticity -----------------------------------------------------------------------

def test_laplacian_elliptic(system_path):
    res = dn_ellipticity_check(load(system_path, "helmholtz2"))
    assert isinstance(res, Elliptic)
    assert res.min_det == pytest.approx(1.0, rel=1e-12)


def test_dx1_on_two_torus_not_elliptic():
    A = parse_system("n = 2\nell = 0\nm = 1\na 1 1 = i*k1\n")
    res = dn_ellipticity_check(A)
    assert isinstance(res, NotElliptic)
    assert res.witness in ((0.0, 1.0), (0.0, -1.0))
    with pytest.raises(NotEllipticError) as exc:
        require_elliptic(A)
    assert exc.value.witness == res.witness


def test_dn_example_min_det(system_path):
    A = load(system_path, "dn2x2")
    res = dn_ellipticity_check(A)
    # det [[xi^2, i xi], [i xi, 1]] = 2 xi^2 by hand
    xi = np.array([[1.0], [-1.0]])
    hand = np.abs(np.linalg.det(A.principal(xi)))
    np.testing.assert_allclose(hand, 2.0, rtol=1e-14)
    assert isinstance(res, Elliptic) and res.min_det == pytest.approx(2.0, rel=1e-14)


def test_inhomogeneous_principal_part_rejected():
    from hscale.psdo import DNSystem

    def symbol(k):
        k = np.atleast_2d(k)
        return (1 + k[:, 0] ** 2)[:, None, None].astype(complex)

    A = DNSystem(1, (1,), (1,), (0.0,), (2.0,), symbol, symbol)
    with pytest.raises(HomogeneityError):
        dn_ellipticity_check(A)


# -- application and boundedness --------------------------------------------------------

def test_apply_identity(rng):
    A = parse_system("n = 1\nell = 0 0\nm = 0 0\na 1 1 = 1\na 2 2 = 1\n")
    u = SpectralSection.random(FrequencyLattice(1, 8), 2, rng)
    np.testing.assert_array_equal(apply(A, u).coeffs, u.coeffs)


def test_apply_helmholtz_single_mode(system_path):
    A = load(system_path, "helmholtz1")
    u = SpectralSection.single_mode(FrequencyLattice(1, 8), (3,))
    f = apply(A, u)
    assert f.coeffs[FrequencyLattice(1, 8).index_of((3,)), 0] == 10


def test_apply_random_system_per_frequency(rng):
    c = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    text = (f"n = 1\nell = 0 -1\nm = 2 1\n"
            f"a 1 1 = ({c[0]:.17g})*k1^2 + ({c[1]:.17g})\n"
            f"a 1 2 = ({c[2]:.17g})*k1\na 2 1 = ({c[3]:.17g})*k1 + ({c[4]:.17g})\n"
            f"a 2 2 = ({c[5]:.17g})\n").replace("j)", "*i)")
    A = parse_system(text)
    lat = FrequencyLattice(1, 16)
    u = SpectralSection.random(lat, 2, rng)
    f = apply(A, u)
    for i, (k,) in enumerate(lat.points):
        M = np.array([[c[0] * k * k + c[1], c[2] * k], [c[3] * k + c[4], c[5]]])
        np.testing.assert_allclose(f.coeffs[i], M @ u.coeffs[i], rtol=1e-13, atol=1e-13)


def test_boundedness_helmholtz_is_one(system_path):
    cert = boundedness_certificate(load(system_path, "helmholtz1"), Power(1.0))
    assert cert.values == pytest.approx((1.0, 1.0, 1.0), rel=1e-14)


def test_boundedness_zero_operator():
    A = parse_system("n = 1\nell = 0\nm = 2\n")
    assert boundedness_certificate(A).constant == 0.0


def test_boundedness_dn_example_per_frequency_oracle(system_path):
    A = load(system_path, "dn2x2")
    cert = boundedness_certificate(A, TLOG, Ns=(16, 32, 64))
    assert cert.stable
    # independent oracle: spectral norms of the weighted 2x2 blocks
    best = 0.0
    for k in range(-64, 65):
        br = np.sqrt(1.0 + k * k)
        M = np.array([[k * k + 1, 1j * k], [1j * k, 1]])
        D1 = np.diag([br ** 2, br])
        D2 = np.diag([1.0, br])
        best = max(best, np.linalg.norm(D2 @ M @ np.linalg.inv(D1), 2))
    assert cert.constant == pytest.approx(best, rel=1e-12)


def test_boundedness_wrong_orders_raise():
    A = parse_system("n = 1\nell = 0\nm = 2\na 1 1 = k1^2 + 1\n")
    A_bad = type(A)(A.n, A.row_sizes, A.col_sizes, (0.0,), (1.0,), A.symbol, A.principal)
    with pytest.raises(UnboundedSymbolError):
        boundedness_certificate(A_bad)


@given(s=st.floats(-2, 2), seed=st.integers(0, 1000))
def test_graded_norms_of_helmholtz(s, seed):
    A = parse_system("n = 1\nell = 0\nm = 2\na 1 1 = k1^2 + 1\n")
    u = SpectralSection.random(FrequencyLattice(1, 8), 1, np.random.default_rng(seed))
    # (1 + k^2) / <k>^2 = 1: the graded norms of u and A u agree
    assert graded_norm(A, apply(A, u), Power(s), "target") == pytest.approx(
        graded_norm(A, u, Power(s), "source"), rel=1e-12)


# -- parametrix --------------------------------------------------------------------------

def test_parametrix_helmholtz_exact(system_path):
    A = load(system_path, "helmholtz1")
    B = parametrix(A, 0.0, N=16)
    res = parametrix_residuals(A, B, 16, 0.0)
    # B(k) A(k) = 1 up to one rounding of the reciprocal
    assert res.beyond_BA <= 1e-15 and res.beyond_AB <= 1e-15 and res.support == ()
    np.testing.assert_allclose(B(np.array([[3.0]]))[0, 0, 0], 0.1, rtol=1e-15)


def test_parametrix_ddx_remainder_at_zero(system_path):
    A = load(system_path, "ddx")
    B = parametrix(A, 1.0, N=16)
    res = parametrix_residuals(A, B, 16, 1.0)
    assert res.support == ((0,),)
    assert res.beyond_BA == 0.0
    np.testing.assert_allclose(B(np.array([[2.0]]))[0, 0, 0], 1 / 2j, rtol=1e-15)


def test_parametrix_singular_beyond_cutoff(system_path):
    with pytest.raises(SingularSymbolError) as exc:
        parametrix(load(system_path, "ddx"), 0.5, N=8)
    assert exc.value.witness == (0,)


def test_parametrix_dn_example_scan(system_path):
    A = load(system_path, "dn2x2_zero")
    R = 1.0  # the only singular block sits at k = 0, <0> = 1
    B = parametrix(A, R, N=32)
    res = parametrix_residuals(A, B, 32, R)
    assert res.beyond_BA <= 1e-12 and res.beyond_AB <= 1e-12
    assert res.support == ((0,),)


# -- Fredholm ------------------------------------------------------------------------------

def test_fredholm_helmholtz(system_path, rng):
    A = load(system_path, "helmholtz1")
    lat = FrequencyLattice(1, 16)
    f = SpectralSection.random(lat, 1, rng)
    rep = fredholm_solve(A, f)
    assert (rep.dim_kernel, rep.dim_cokernel, rep.index) == (0, 0, 0)
    np.testing.assert_allclose(rep.solution.coeffs[:, 0],
                               f.coeffs[:, 0] / (1 + lat.points[:, 0] ** 2), rtol=1e-14)


def test_fredholm_ddx(system_path):
    A = load(system_path, "ddx")
    lat = FrequencyLattice(1, 16)
    rep1 = fredholm_solve(A, SpectralSection.single_mode(lat, (0,)))
    assert (rep1.dim_kernel, rep1.dim_cokernel, rep1.index) == (1, 1, 0)
    assert not rep1.solvable and rep1.max_pairing == pytest.approx(1.0)
    rep2 = fredholm_solve(A, SpectralSection.single_mode(lat, (1,)))
    assert rep2.solvable and rep2.residual <= 1e-14
    np.testing.assert_allclose(rep2.solution.coeffs[lat.index_of((1,)), 0], -1j)


@pytest.mark.parametrize("N", [8, 16])
@pytest.mark.parametrize("name", ["dn2x2", "dn2x2_zero"])
def test_fredholm_index_matches_dense_svd(system_path, rng, name, N):
    A = load(system_path, name)
    f = SpectralSection.random(FrequencyLattice(1, N), 2, rng)
    rep = fredholm_solve(A, f)
    assert (rep.dim_kernel, rep.dim_cokernel, rep.index) == dense_index(A, N)


@pytest.mark.parametrize("phi", [Power(0), Power(1), TLOG])
def test_index_independent_of_phi(system_path, phi):
    A = load(system_path, "dn2x2_zero")
    f = SpectralSection.single_mode(FrequencyLattice(1, 8), (2,), rank=2)
    rep = fredholm_solve(A, f, phi)
    assert (rep.dim_kernel, rep.index) == (1, 0)


def test_fredholm_json_deterministic(system_path):
    A = load(system_path, "ddx")
    f = SpectralSection.single_mode(FrequencyLattice(1, 4), (1,))
    assert fredholm_solve(A, f).to_json() == fredholm_solve(A, f).to_json()


# -- regularity --------------------------------------------------------------------------

def test_shell_decay_exponent_of_power_sequence():
    lat = FrequencyLattice(1, 128)
    u = SpectralSection.from_function(lat, lambda p: (1.0 + p[:, 0] ** 2) ** -0.75)
    beta = shell_decay_exponent(np.zeros((lat.size, 1)), u)
    # shell sums ~ 2 r^-3
    assert beta == pytest.approx(3.0, abs=0.01)


@pytest.mark.parametrize("a", [1.5, 2.25, 2.5, 2.75, 3.5])
@pytest.mark.parametrize("name", ["helmholtz1", "dn2x2"])
def test_regularity_agreement(system_path, name, a):
    A = load(system_path, name)
    lat = FrequencyLattice(1, 128)
    u = SpectralSection(lat, np.repeat((lat.bracket ** -a)[:, None], A.p, axis=1))
    rep = regularity_experiment(A, Power(0), u, Ns=(64, 128))
    assert rep.agree


@pytest.mark.parametrize("s", [0.0, 1.0])
def test_regularity_helmholtz_threshold(system_path, s):
    # u = <k>^-a lies in H^(s+2) iff 2(s + 2 - a) < -1
    A = load(system_path, "helmholtz1")
    lat = FrequencyLattice(1, 128)
    for a in (s + 2.25, s + 2.75):
        u = SpectralSection(lat, (lat.bracket ** -a)[:, None])
        row = regularity_experiment(A, Power(s), u, Ns=(128,)).rows[0]
        assert row.u_converges == (a > s + 2.5) == row.f_converges


# -- a priori estimates ----------------------------------------------------------------

def test_localization_window_valid():
    w = LocalizationWindow()
    theta = np.linspace(0, 2 * np.pi, 1000)
    chi, eta = w.values("chi", theta), w.values("eta", theta)
    assert np.all(eta[np.abs(chi) > 1e-8] >= 1 - 1e-8)
    with pytest.raises(ValueError):
        LocalizationWindow(chi_arc=(0.4, 2.8), eta_arc=(0.5, 3.5))


def test_cutoff_multiplication_matches_pointwise(rng):
    w = LocalizationWindow()
    u = SpectralSection.random(FrequencyLattice(1, 8), 1, rng)
    prod = w.multiply("chi", u)
    theta = np.linspace(0, 2 * np.pi, 37)
    ku = u.lattice.points[:, 0]
    kp = prod.lattice.points[:, 0]
    direct = w.values("chi", theta) * (np.exp(1j * np.outer(theta, ku)) @ u.coeffs[:, 0])
    np.testing.assert_allclose(np.exp(1j * np.outer(theta, kp)) @ prod.coeffs[:, 0], direct,
                               atol=1e-12)


def test_global_estimate_for_helmholtz(system_path):
    A = load(system_path, "helmholtz1")
    rep = apriori_estimate(A, LocalizationWindow.global_window(), Power(1.0), lam=1.0,
                           trials=20, Ns=(16, 32))
    assert all(c <= 1.0 for c in rep.c)
    assert rep.c_principal == pytest.approx((1.0, 1.0), abs=1e-9)


def test_zero_section_ratio_is_zero(system_path):
    A = load(system_path, "dn2x2")
    u = SpectralSection.zeros(FrequencyLattice(1, 8), 2)
    assert apriori_ratio(A, LocalizationWindow(), Power(0), -1.0, u) == (0.0, 0.0)


def test_local_estimate_is_seeded(system_path):
    A = load(system_path, "dn2x2")
    r1 = apriori_estimate(A, LocalizationWindow(), trials=5, Ns=(16,))
    r2 = apriori_estimate(A, LocalizationWindow(), trials=5, Ns=(16,))
    assert r1 == r2


# -- classical smoothness ----------------------------------------------------------------

def test_classical_smoothness(system_path):
    A = load(system_path, "helmholtz1")
    label, verdict = classical_smoothness_check(A, 0, 0)
    assert label == "Implies"
    # int_1^inf t^(-4) dt with m = 2, q = 0, n = 1
    assert verdict.integral == pytest.approx(1 / 3, rel=1e-9)
    assert classical_smoothness_check(A, 0, 2)[0] == "NotImplied"


def test_classical_smoothness_log_refined(system_path):
    A = parse_system("n = 1\nell = 0\nm = 0\na 1 1 = 1\n")
    label, verdict = classical_smoothness_check(A, 0, 0, Product((Power(0.5), LogPower(1))))
    assert label == "Implies"
    assert verdict.integral == pytest.approx(1.1898839703443496, rel=1e-9)
