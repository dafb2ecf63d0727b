import math

import mpmath as mp
import numpy as np
import pytest

from oracle import Oracle, cplx
from slowlight.analytic import (
    branched_root,
    density_matrix,
    field_envelopes,
    grid_evaluate,
    atomic_state,
    soliton_phases,
    solution_for,
    spectral_constant_C,
    spectral_w,
    spectral_z,
)
from slowlight.config import Region
from slowlight.grid import GridSpec, GridTooLarge

W0 = 0.4351207591678587j


@pytest.fixture(scope="module")
def orc():
    return Oracle()


@pytest.fixture(scope="module")
def eng(cfg):
    return solution_for(cfg)


# --- spectral data ---------------------------------------------------------------


@pytest.mark.parametrize(
    "lam, om, expected",
    [(-4.1j, 3.0, -2.794637722496424j), (-4.1j, 0.0, -4.1j), (4.1j, 3.0, 2.794637722496424j)],
)
def test_branched_root(lam, om, expected):
    s = branched_root(lam, om).s
    assert s == pytest.approx(expected, abs=1e-14)
    assert s * s == pytest.approx(lam * lam + om * om, abs=1e-12)


def test_branched_root_sign_rule_for_complex_lambda():
    for lam in (0.5 - 4.1j, -2 + 1j, 3 - 0.1j):
        s = branched_root(lam, 3.0).s
        assert s.imag * lam.imag > 0


def test_constants_match_the_oracle(eng, orc):
    assert eng.s == pytest.approx(cplx(orc.s), abs=1e-14)
    assert eng.w0 == pytest.approx(W0, abs=1e-15)
    assert eng.gamma == pytest.approx(1.0125, abs=1e-15)
    assert eng.x0 == -0.375
    assert eng.c1 == pytest.approx(cplx(orc.C1), abs=1e-13)
    assert eng.z2 == pytest.approx(cplx(orc.z2), abs=1e-13)
    assert eng.c3 == pytest.approx(cplx(orc.C3), abs=1e-13)
    assert eng.c1 == pytest.approx(1.0049174229612666 + 0.0790887164048484j, abs=1e-13)
    assert eng.z2 == pytest.approx(-0.1205854015062997, abs=1e-13)
    assert eng.c3 == pytest.approx(-0.189330075058813697, abs=1e-13)


def test_constant_per_region(cfg, eng):
    assert spectral_constant_C(Region.D0, cfg) == 0
    assert spectral_constant_C(Region.D1, cfg) == spectral_constant_C(Region.D2, cfg) == eng.c1
    assert spectral_constant_C(Region.D3, cfg) == eng.c3


def test_w_per_region(cfg, eng):
    assert spectral_w(-1.0, cfg) == W0
    assert spectral_w(2.0, cfg) == 0
    assert spectral_w(4.0, cfg) == 0
    # D1 right after the switch-off starts continues w0
    assert abs(eng._d1_w(np.array([1e-12]))[0] - eng.w0) < 1e-10
    # D3 relaxes back to w0 on the 1/|Im s| scale
    assert abs(spectral_w(4.0 + 12.0, cfg) - eng.w0) < 1e-8


def test_w_is_continuous_at_revival(eng):
    w, _, _ = eng.spectral([4.0], "right")
    assert abs(w[0]) < 1e-15


def test_z_anchors(cfg, eng):
    assert spectral_z(0.0, cfg) == 0
    _, z, _ = eng.spectral([0.0], "right")
    assert abs(z[0]) < 1e-14
    _, z, _ = eng.spectral([4.0], "right")
    assert abs(z[0] - eng.z2) < 1e-14
    assert spectral_z(3.0, cfg) == eng.z2


def test_z_branch_is_continuous_inside_regions(eng):
    for lo, hi in ((0.0, 1.0), (4.0, 12.0)):
        tau = np.linspace(lo, hi, 4001)[1:]
        _, z, _ = eng.spectral(tau)
        assert np.abs(np.diff(z.imag)).max() < 0.1


@pytest.mark.parametrize("tau", [-2.5, -0.5, 0.0, 0.2, 0.7, 1.0, 2.5, 4.0, 4.3, 5.0, 6.5, 9.0])
def test_spectral_data_against_the_oracle(cfg, orc, tau):
    w, z = orc.wz(tau)
    assert abs(spectral_w(tau, cfg) - cplx(w)) < 1e-12
    dz = spectral_z(tau, cfg) - cplx(z)
    # logs may sit on different sheets; only the real part and Im mod 2 pi are physical
    assert abs(dz.real) < 1e-12
    assert abs(math.remainder(dz.imag, 2 * math.pi)) < 1e-12


# --- phases, fields, atoms -----------------------------------------------------------


def test_phase_examples(cfg, eng):
    phi, theta = soliton_phases(0.0, 0.0, cfg)
    assert phi == pytest.approx(0.5 * math.log(1 + abs(W0) ** 2), abs=1e-14)
    assert phi == pytest.approx(0.08671, abs=5e-5)
    assert theta == 0.0
    assert eng.kzeta.imag == pytest.approx(4.5 / 2 / 4.1, rel=1e-14)
    assert eng.kzeta.imag == pytest.approx(0.54878, abs=1e-5)


def test_peak_probe_amplitude_on_d0(cfg, eng):
    # choose zeta with phi = 0 at tau = -1
    phi, _ = soliton_phases(0.0, -1.0, cfg)
    zc = -phi / eng.kzeta.imag
    f = field_envelopes(zc, -1.0, cfg)
    assert abs(f.omega_a) == pytest.approx(8.2 * abs(W0) / math.sqrt(1 + abs(W0) ** 2), rel=1e-13)
    assert abs(f.omega_a) == pytest.approx(3.2716, abs=1e-4)


def test_control_channel_asymptotes(cfg, eng):
    phi, _ = soliton_phases(0.0, -1.0, cfg)
    zc = -phi / eng.kzeta.imag
    ahead = field_envelopes(zc + 60 / eng.kzeta.imag, -1.0, cfg)
    behind = field_envelopes(zc - 60 / eng.kzeta.imag, -1.0, cfg)
    assert ahead.omega_b == pytest.approx(3.0, abs=1e-12)
    assert behind.omega_b == pytest.approx(-3.0, abs=1e-12)
    assert abs(ahead.omega_a) < 1e-20 and abs(behind.omega_a) < 1e-20
    assert 2 * (-4.1j - 4.1j) * W0 / (1 + abs(W0) ** 2) == pytest.approx(6.0, abs=1e-13)


def test_fields_vanish_during_storage(cfg):
    for zeta in (0.0, 2.6, 7.0):
        f = field_envelopes(zeta, 2.0, cfg)
        assert f.omega_a == 0 and f.omega_b == 0


def test_atomic_state_at_centre_of_d0(cfg, eng):
    phi, _ = soliton_phases(0.0, -1.0, cfg)
    rho = density_matrix(-phi / eng.kzeta.imag, -1.0, cfg)
    n = 1 + abs(W0) ** 2
    assert rho[1, 1].real == pytest.approx(1 / n, abs=1e-13)
    assert rho[2, 2].real == pytest.approx(abs(W0) ** 2 / n, abs=1e-13)
    assert rho[1, 1].real == pytest.approx(0.8408, abs=1e-4)
    assert rho[2, 2].real == pytest.approx(0.1592, abs=1e-4)


def test_atomic_state_at_centre_of_storage(cfg, eng):
    phi, _ = soliton_phases(0.0, 2.0, cfg)
    rho = density_matrix(-phi / eng.kzeta.imag, 2.0, cfg)
    assert np.abs(rho - np.diag([0, 1, 0])).max() < 1e-10


def test_far_field_is_the_dark_state(cfg):
    for zeta in (-80.0, 80.0):
        rho = density_matrix(zeta, -1.0, cfg)
        assert np.abs(np.abs(rho) - np.diag([1, 0, 0])).max() < 1e-12


def test_normalisation_and_purity_at_random_points(cfg, eng):
    rng = np.random.default_rng(11)
    zeta, tau = rng.uniform(-5, 15, 10_000), rng.uniform(-4, 10, 10_000)
    _, _, psi = eng.evaluate_points(zeta, tau)
    rho = np.einsum("ni,nj->nij", psi, psi.conj())
    assert np.abs(np.sum(np.abs(psi) ** 2, axis=1) - 1).max() < 1e-12
    assert np.abs(np.trace(rho, axis1=1, axis2=2) - 1).max() < 1e-12
    assert np.abs(np.einsum("nij,nji->n", rho, rho) - 1).max() < 1e-12


ORACLE_CASES = [
    ({}, {}),
    ({"phi0": -1.3920573707362294, "theta0": 0.4}, {"phi0": -1.3920573707362294, "theta0": 0.4}),
    ({"delta": 0.7, "lam": 0.5 - 4.1j}, {"delta": 0.7, "lam": 0.5 - 4.1j}),
    ({"omega0": 1.0, "alpha": 2.5, "nu0": 0.5, "t1": 1.6, "t_revive": 4.6}, {"omega0": 1.0, "alpha": 2.5, "nu0": 0.5}),
]


@pytest.mark.parametrize("params, oparams", ORACLE_CASES)
def test_fields_and_amplitudes_against_the_oracle(cfg, params, oparams):
    c = cfg.with_params(**params)
    orc = Oracle(**oparams)
    eng = solution_for(c)
    sch = c.schedule
    taus = [-2.0, -0.3, 0.25 * sch.t1, 0.9 * sch.t1, sch.t1 + 0.5, sch.t_revive + 0.2, sch.t_revive + 1.5, sch.t_revive + 4]
    for t in taus:
        for zeta in (-1.0, 0.0, 1.7, 4.0):
            oa, ob, psi = eng.evaluate_points(zeta, t)
            ra, rb, rc = orc.solution(zeta, t)
            assert abs(complex(oa) - cplx(ra)) < 1e-11
            assert abs(complex(ob) - cplx(rb)) < 1e-11
            assert np.abs(psi - np.array([cplx(x) for x in rc])).max() < 1e-11


@pytest.mark.parametrize("params", [{}, {"delta": 0.7, "lam": 0.5 - 4.1j}])
def test_closed_form_satisfies_the_equations(params):
    orc = Oracle(**params)
    for t in (-1.0, 0.4, 2.0, 5.0):
        for zeta in (0.0, 1.5):
            assert orc.pde_residual(zeta, t) < mp.mpf("1e-15")


def test_left_and_right_limits_agree_at_zero_and_revival(eng):
    zeta = np.linspace(0, 12, 241)
    for b in (0.0, 4.0):
        wl, zl, _ = eng.spectral([b])
        wr, zr, _ = eng.spectral([b], "right")
        assert abs(wl[0] - wr[0]) < 1e-9 and abs(zl[0] - zr[0]) < 1e-9
        al, bl, _ = eng.evaluate(zeta, [b])
        ar, br, _ = eng.evaluate(zeta, [b], "right")
        assert np.abs(al - ar).max() < 1e-9
        assert np.abs((bl + eng.background([b])) - (br + eng.background([b], "right"))).max() < 1e-9


def test_level_set_slope_equals_one_plus_w0_squared(eng):
    assert eng.level_set_slope() == pytest.approx(1 + abs(eng.w0) ** 2, abs=1e-10)
    assert eng.level_set_slope() == pytest.approx(1.1893, abs=1e-4)


def test_entry_phase_places_the_centre_at_the_entrance(eng, cfg):
    phi0 = eng.phi0_for_entry(-2.0)
    phi, _ = soliton_phases(0.0, -2.0, cfg.with_params(phi0=phi0))
    assert abs(phi) < 1e-13


def test_grid_one_point_matches_pointwise(cfg):
    g = grid_evaluate(GridSpec(0.5, 0.5, 0.1, 1.0, 1.0, 0.1), cfg, with_rho=True)
    f = field_envelopes(1.0, 0.5, cfg)
    a = atomic_state(1.0, 0.5, cfg)
    assert g.shape == (1, 1)
    assert g.omega_a[0, 0] == f.omega_a and g.omega_b[0, 0] == f.omega_b
    np.testing.assert_allclose(g.populations[0, 0], np.abs(a.vector()) ** 2, rtol=0, atol=1e-16)
    assert g.provenance == "analytic"


def test_grid_snaps_boundaries_and_keeps_earlier_region(cfg):
    g = grid_evaluate(GridSpec(-0.3, 4.3, 0.1, 0.0, 1.0, 0.5), cfg)
    for b in (0.0, 1.0, 4.0):
        assert np.any(g.tau == b)
    i = int(np.nonzero(g.tau == 4.0)[0][0])
    assert np.all(g.omega_a[i] == 0)


def test_grid_memory_cap(cfg):
    with pytest.raises(GridTooLarge):
        grid_evaluate(GridSpec(-3, 8, 0.001, 0, 12, 0.001), cfg, with_rho=True)


def test_restored_soliton_has_the_original_width(eng):
    # after the transient, phi's tau-slope in D3 matches D0's
    tau = np.array([14.0, 16.0])
    _, z, _ = eng.spectral(tau)
    slope3 = (z[1].real - z[0].real) / 2.0
    slope0 = (0.5j * eng.omega0 * eng.w0).real
    assert slope3 == pytest.approx(slope0, rel=1e-2)
