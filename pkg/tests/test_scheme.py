import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import null_space

from diamondqfc.errors import ConfigurationError, DomainError
from diamondqfc.scheme import (build_scheme, decoherence_rates, ground_manifold,
                               load_scheme_override, od_scalings, zeroth_order_steady_state)


def test_build_scheme_rates():
    e = build_scheme("E1367")
    assert e.Gamma31 == pytest.approx(1.0, abs=1e-15)
    assert e.Gamma43 == pytest.approx(0.5 * 2.087 / 6.063, rel=1e-12)
    assert e.Gamma43 == pytest.approx(0.172110, abs=5e-6)
    assert e.gamma_fs["795"] == pytest.approx(5.745 / 6.063)
    c = build_scheme("C1529")
    assert c.Gamma43 == pytest.approx(0.2 * 0.315 / 6.063, rel=1e-12)
    assert c.Gamma43 == pytest.approx(0.010391, abs=5e-7)


def test_squared_coefficients():
    assert [build_scheme("e").coeff_sq[k] for k in ("31", "21", "42", "43")] == [1, 0.5, 0.5, 0.5]
    assert [build_scheme("c").coeff_sq[k] for k in ("31", "21", "42", "43")] == [1, 0.5, 0.5, 0.2]


def test_unknown_band():
    with pytest.raises(ConfigurationError):
        build_scheme("L1600")


def test_partial_convention_values():
    e = build_scheme("E1367")
    g = decoherence_rates(e, convention="partial")
    assert g[2, 1] == pytest.approx(e.Gamma21)
    assert g[2, 1] == pytest.approx(0.47378, abs=5e-6)
    assert g[4, 1] == pytest.approx(e.Gamma42 + e.Gamma43)


def test_fine_structure_convention_values():
    e = build_scheme("E1367")
    g = decoherence_rates(e)
    assert g[2, 1] == pytest.approx(5.745 / 6.063)
    assert g[3, 1] == pytest.approx(1.0)
    assert g[4, 3] == pytest.approx((1.008 + 2.087) / 6.063 + 1.0)


@pytest.mark.parametrize("convention", ["fine_structure", "partial"])
def test_dephasing_is_additive(convention):
    s = build_scheme("C1529")
    g0 = decoherence_rates(s, 0.0, convention).values
    g1 = decoherence_rates(s, 0.1, convention).values
    off = ~np.eye(4, dtype=bool)
    np.testing.assert_allclose((g1 - g0)[off], 0.1, rtol=1e-14)


@given(st.floats(0, 10), st.sampled_from(["E1367", "C1529"]))
def test_decoherence_symmetric_nonnegative(deph, band):
    g = decoherence_rates(build_scheme(band), deph).values
    np.testing.assert_array_equal(g, g.T)
    assert np.all(g >= 0)


def test_negative_dephasing_rejected():
    with pytest.raises(DomainError):
        decoherence_rates(build_scheme("e"), -0.1)


def test_od_scalings():
    e = build_scheme("E1367")
    assert od_scalings(e, 0.0) == od_scalings(e, 0.0, "cross_section")
    z = od_scalings(e, 0.0)
    assert z.alpha_c == 0 and z.alpha_s == 0
    cs = od_scalings(e, 100.0, "cross_section")
    assert cs.alpha_c == pytest.approx(100 * 2 * (780.241 / 794.979) ** 2, rel=1e-12)
    assert cs.alpha_c == pytest.approx(192.65, abs=0.01)
    a1, a2 = od_scalings(e, 37.0), od_scalings(e, 74.0)
    assert a2.alpha_c == 2 * a1.alpha_c and a2.alpha_s == 2 * a1.alpha_s
    ov = od_scalings(e, 10.0, alpha_c_override=3.0, alpha_s_override=4.0)
    assert (ov.alpha_c, ov.alpha_s) == (3.0, 4.0)
    with pytest.raises(DomainError):
        od_scalings(e, -1.0)


def test_zeroth_order_examples():
    p11, c13 = ground_manifold(1.0, 1.0, 2.0, 3.0)
    assert p11 == pytest.approx(26 / 35, rel=1e-15)
    p11, c13 = ground_manifold(1.0, 2.0, 0.5, 0.0)
    assert p11 == 1.0 and c13 == 0
    p11, _ = ground_manifold(1.0, 2.0, 0.5, 1e9)
    assert p11 == pytest.approx(0.5, abs=1e-15)


def bloch_steady_state(G31, g31, dc, oc):
    """Dense null-space solve of the four-component |1>-|3> Bloch equations."""
    # x = (s11, s13, s31, s33); ds13/dt = i[oc/2 (s11 - s33) + dc s13] - g31/2 s13
    L = np.zeros((4, 4), dtype=complex)
    L[1] = [0.5j * oc, 1j * dc - 0.5 * g31, 0, -0.5j * oc]
    L[2] = np.conj(L[1])[[0, 2, 1, 3]]
    L[3] = [0, -0.5j * np.conj(oc), 0.5j * oc, -G31]
    L[0] = -L[3]
    ns = null_space(L)
    x = ns[:, 0] / (ns[0, 0] + ns[3, 0])
    return x[0].real, x[1]


def test_zeroth_order_matches_bloch_solve(rng):
    for _ in range(300):
        G31, g31 = rng.uniform(0.1, 3, 2)
        dc = rng.uniform(-50, 50)
        oc = rng.uniform(0, 60) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        p11, c13 = ground_manifold(G31, g31, dc, oc)
        p11_ref, c13_ref = bloch_steady_state(G31, g31, dc, oc)
        np.testing.assert_allclose(p11, p11_ref, rtol=1e-12)
        if abs(oc) > 0:
            np.testing.assert_allclose(c13, c13_ref, rtol=1e-12)


@given(st.floats(0.01, 5), st.floats(1.0, 5), st.floats(-1e3, 1e3),
       st.floats(0, 1e4), st.floats(0, 2 * np.pi))
def test_ground_manifold_invariants(G31, ratio, dc, mag, phase):
    # positivity requires the coherence decay to be at least the population decay
    g31 = ratio * G31
    p11, c13 = ground_manifold(G31, g31, dc, mag * np.exp(1j * phase))
    p33 = 1.0 - p11
    assert 0.5 - 1e-15 <= p11 <= 1.0
    assert abs(c13) <= 0.5 + 1e-15
    assert abs(c13) ** 2 <= p11 * p33 + 1e-15


def test_zeroth_order_state_object():
    s = build_scheme("E1367")
    st_ = zeroth_order_steady_state(s, decoherence_rates(s), -31.0, 50.0)
    assert st_.p11 + st_.p33 == 1.0
    assert st_.c31 == np.conj(st_.c13)


def test_override_file(tmp_path):
    path = tmp_path / "override.json"
    path.write_text(json.dumps({"band": "E1367", "gamma_fs": {"signal": 3.0},
                                "alpha_c_override": 5.0, "gamma_deph": 0.2}))
    cfg = load_scheme_override(path)
    assert cfg.scheme.Gamma43 == pytest.approx(0.5 * 3.0 / 6.063)
    assert cfg.alpha_c_override == 5.0 and cfg.gamma_deph == 0.2
    with pytest.raises(ConfigurationError):
        load_scheme_override({"band": "E1367", "colour": "red"})
    with pytest.raises(ConfigurationError):
        load_scheme_override({"gamma_fs": {}})
