import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from diamondqfc.errors import ConfigurationError, DomainError, NumericalError
from diamondqfc.propagation import (ConversionMetrics, OperatingPoint, TransferMatrix, _sliced, conversion_metrics, coupled_mode_matrix,
                                    coupled_mode_matrix_oracle, coupling_field, coupling_profile,
                                    efficiency, generator, nonabsorbing_transfer, transfer_matrix)
from diamondqfc.scheme import ground_manifold

E50 = (-13.72, 29.89, -14.38, 50.0, 7.50)
C_POINT = (317.28, -420.58, 317.85, 968.23, 26.75)


def point(params=E50, od=50.0, band="E1367", **kw):
    return OperatingPoint.from_params(band, od, params, **kw)


def rk4_coupling(p, n=20000):
    """RK4 of dOmega_c/dz = (i alpha_c Gamma31 / 2) c13(Omega_c) from the zeroth-order solution."""
    G31, g31, dc, ac = p.scheme.Gamma31, p.gamma[3, 1], p.delta_c, p.scales.alpha_c

    def f(oc):
        return 0.5j * ac * G31 * ground_manifold(G31, g31, dc, oc)[1]

    h, y, out = 1.0 / n, complex(p.omega_c), [complex(p.omega_c)]
    for _ in range(n):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        out.append(y)
    return np.array(out)


@pytest.mark.parametrize("band,od,params", [("E1367", 50.0, E50), ("C1529", 700.0, C_POINT),
                                            ("E1367", 200.0, (2.0, -5.0, 3.0, 4.0, 1.0))])
def test_coupling_field_matches_rk4(band, od, params):
    p = point(params, od, band)
    ref = rk4_coupling(p)
    idx = np.linspace(0, 20000, 64).astype(int)
    got = coupling_field(p, idx / 20000)
    np.testing.assert_allclose(got, ref[idx], rtol=1e-8, atol=1e-8 * p.omega_c)


def test_coupling_intensity_implicit_relation():
    p = point(od=300.0, params=(0.0, 1.0, 0.0, 20.0, 5.0))
    prof = coupling_profile(p, 33)
    u, z = prof.intensity, prof.zeta
    # A0 ln(u/u0) + B0 (u - u0) = D0 z
    lhs = prof.A0 * np.log(u / u[0]) + prof.B0 * (u - u[0])
    np.testing.assert_allclose(lhs, prof.D0 * z, rtol=1e-10, atol=1e-10)
    assert np.all(np.diff(u) < 0)
    assert coupling_field(p, 0.0) == pytest.approx(20.0, abs=1e-15)


@given(st.floats(0, 500), st.floats(-100, 100), st.floats(0.01, 200))
@settings(max_examples=50)
def test_coupling_intensity_monotone(od, dc, oc):
    p = point((0.0, dc, 0.0, oc, 1.0), od)
    u = np.abs(coupling_field(p, np.linspace(0, 1, 17))) ** 2
    assert np.all(np.diff(u) <= 1e-12 * oc ** 2)
    assert np.all(u >= 0)


def test_nonabsorbing_field_is_constant():
    p = point()
    np.testing.assert_array_equal(coupling_field(p, np.linspace(0, 1, 5), absorbing=False), 50.0)


def random_point(rng, band=None):
    band = band or rng.choice(["E1367", "C1529"])
    params = (*rng.uniform(-100, 100, 3), *rng.uniform(0, 200, 2))
    return point(params, rng.uniform(0, 1000), band, gamma_deph=rng.uniform(0, 0.5))


def test_closed_form_matches_linear_solve(rng):
    worst = 0.0
    for _ in range(1000):
        p = random_point(rng)
        oc = p.omega_c * np.exp(1j * rng.uniform(0, 2 * np.pi)) * rng.uniform(0, 1)
        got, ref = coupled_mode_matrix(p, oc), coupled_mode_matrix_oracle(p, oc)
        scale = max(np.max(np.abs(ref)), 1e-300)
        worst = max(worst, np.max(np.abs(got - ref)) / scale)
    assert worst < 1e-10


def test_printed_variant_differs():
    p = point()
    a = coupled_mode_matrix(p, 50.0, variant="printed")
    b = coupled_mode_matrix_oracle(p, 50.0)
    assert np.max(np.abs(a - b)) > 1e-3 * np.max(np.abs(b))
    with pytest.raises(ConfigurationError):
        coupled_mode_matrix(p, 50.0, variant="other")


def test_no_drive_means_no_cross_coupling():
    p = point((3.0, 1.0, -2.0, 10.0, 0.0))
    m = coupled_mode_matrix(p, 10.0)
    assert m[0, 1] == 0 and m[1, 0] == 0


def test_detuning_mirror_conjugates_generator(rng):
    for _ in range(50):
        p = random_point(rng)
        q = p.with_params((-p.delta_p, -p.delta_c, -p.delta, p.omega_c, p.omega_d))
        np.testing.assert_allclose(coupled_mode_matrix(q, p.omega_c),
                                   np.conj(coupled_mode_matrix(p, p.omega_c)), rtol=1e-12, atol=1e-300)


def test_self_coupling_is_lossy(rng):
    for _ in range(500):
        p = random_point(rng)
        m = coupled_mode_matrix(p, p.omega_c)
        assert m[0, 0].real <= 1e-14 * abs(m[0, 0]) and m[1, 1].real <= 1e-14 * abs(m[1, 1])


def test_two_level_beer_lambert():
    # without fields the probe sees a resonant two-level absorber
    p = point((0.0, 0.0, 0.0, 0.0, 0.0), od=7.0)
    T = transfer_matrix(p)
    expected = np.exp(-p.scales.alpha * p.scheme.Gamma780 / p.gamma[2, 1])
    np.testing.assert_allclose(abs(T.A) ** 2, expected, rtol=1e-12)
    assert T.C == 0 and T.B == 0


def test_zero_depth_is_identity():
    for method in ("exact-sliced", "magnus1", "magnus2"):
        np.testing.assert_allclose(transfer_matrix(point(od=0.0), method).matrix, np.eye(2), atol=1e-15)


def ivp_transfer(p, absorbing=True):
    M = generator(p, absorbing)

    def rhs(z, y):
        return (M(np.array([z]))[0] @ y.reshape(2, 2)).ravel()

    sol = solve_ivp(rhs, (0, 1), np.eye(2, dtype=complex).ravel(), method="DOP853",
                    rtol=1e-12, atol=1e-13)
    return sol.y[:, -1].reshape(2, 2)


@pytest.mark.parametrize("band,od,params", [("E1367", 50.0, E50), ("C1529", 700.0, C_POINT),
                                            ("E1367", 1000.0, (-230.0, 330.0, -240.0, 900.0, 70.0))])
def test_sliced_transfer_matches_ode_solver(band, od, params):
    p = point(params, od, band)
    np.testing.assert_allclose(transfer_matrix(p, tol=1e-10).matrix, ivp_transfer(p), atol=1e-8)


def test_slicing_is_second_order():
    M = generator(point(C_POINT, 700.0, "C1529"))
    ref = transfer_matrix(point(C_POINT, 700.0, "C1529"), tol=1e-12).matrix
    errs = [np.max(np.abs(_sliced(M, n) - ref)) for n in (256, 512, 1024)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    np.testing.assert_allclose(ratios, 4.0, rtol=0.05)


def test_zero_coupling_absorption_equals_nonabsorbing():
    p = point(alpha_c=0.0)
    a = transfer_matrix(p).matrix
    b = nonabsorbing_transfer(point()).matrix
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert transfer_matrix(p).diagnostics["constant_generator"]


def test_constant_generator_all_methods_agree():
    p = point()
    ref = nonabsorbing_transfer(p).matrix
    for method in ("magnus1", "magnus2"):
        np.testing.assert_allclose(nonabsorbing_transfer(p, method).matrix, ref, atol=1e-14)


def test_magnus2_closer_than_magnus1():
    p = point(C_POINT, 700.0, "C1529")
    ref = efficiency(p)
    assert abs(efficiency(p, "magnus2") - ref) < abs(efficiency(p, "magnus1") - ref)


def test_branch_mirror_preserves_metrics():
    p = point(C_POINT, 700.0, "C1529")
    q = p.with_params((-C_POINT[0], -C_POINT[1], -C_POINT[2], *C_POINT[3:]))
    a, b = conversion_metrics(transfer_matrix(p)), conversion_metrics(transfer_matrix(q))
    np.testing.assert_allclose([a.eta_d, a.eta_u, a.T_d, a.T_u], [b.eta_d, b.eta_u, b.T_d, b.T_u],
                               rtol=1e-12)


@given(st.sampled_from(["E1367", "C1529"]), st.floats(0, 1000),
       st.tuples(*[st.floats(-300, 300)] * 3, *[st.floats(0, 600)] * 2))
@settings(max_examples=60)
def test_sliced_transfer_is_passive(band, od, params):
    p = point(params, od, band)
    T = transfer_matrix(p, slices=256, tol=1e-6).matrix
    assert np.linalg.norm(T, 2) <= 1.0 + 1e-6


def test_passive_over_random_points():
    # 10^4 random operating points with a coarse reference tolerance
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10_000):
        p = random_point(rng)
        T = transfer_matrix(p, slices=64, tol=1e-4, max_slices=2 ** 16).matrix
        worst = max(worst, np.linalg.norm(T, 2))
        assert np.all(np.isfinite(T))
    assert worst <= 1.0 + 1e-4


def test_tolerance_failure_reports_achieved():
    with pytest.raises(NumericalError) as err:
        transfer_matrix(point(C_POINT, 700.0, "C1529"), slices=4, tol=1e-30, max_slices=64)
    assert np.isfinite(err.value.achieved)


def test_invalid_inputs():
    with pytest.raises(ConfigurationError):
        transfer_matrix(point(), "rk45")
    with pytest.raises(DomainError):
        point(od=-1.0)
    with pytest.raises(DomainError):
        point((0, 0, 0, -1.0, 0))
    with pytest.raises(DomainError):
        point((np.nan, 0, 0, 1.0, 0))


def test_documented_examples():
    # zero coupling absorption leaves the field untouched
    p = point(alpha_c=0.0)
    np.testing.assert_array_equal(coupling_field(p, np.linspace(0, 1, 7)), 50.0)
    # a vanishing coupling field removes both cross couplings
    m = coupled_mode_matrix(point(), 0.0)
    assert m[0, 1] == 0 and m[1, 0] == 0
    # identity transfer matrix
    I = TransferMatrix.from_matrix(np.eye(2), "exact-sliced")
    assert conversion_metrics(I) == ConversionMetrics(1.0, 0.0, 1.0, 0.0)


def test_metrics_bounded(rng):
    for _ in range(200):
        m = conversion_metrics(transfer_matrix(random_point(rng), slices=64, tol=1e-6))
        assert m.T_d + m.eta_d <= 1 + 1e-6 and m.T_u + m.eta_u <= 1 + 1e-6


def test_up_down_symmetry_on_e_band():
    # holds at the E-band reference points; the C-band entries break it (see notes)
    from diamondqfc.calibration import TABLE1, reference_point
    for ref in TABLE1:
        if ref.band == "E1367":
            m = conversion_metrics(transfer_matrix(reference_point(ref)))
            assert abs(m.eta_d - m.eta_u) <= 0.01
