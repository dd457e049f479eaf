import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polariton_tunneling import (DarkStateError, DeviceParams, InjectorSpec,
                                 ParameterError, QGrid, UndefinedEfficiencyError,
                                 build_fano_matrix, default_k_grid,
                                 eigendecompose_arrowhead, electroluminescence_map,
                                 emission_distribution, injection_rate, injector_shape,
                                 photon_ring_weight, polariton_table, quantum_efficiency,
                                 radiative_rate, state_rates)
from polariton_tunneling.electroluminescence import write_elmap_csv, write_elmap_json

KAPPA, RATE_NR = 0.01, 0.005


def setup_system(p, **grid):
    g = QGrid.uniform(p, **grid)
    return eigendecompose_arrowhead(build_fano_matrix(g, p)), polariton_table(g, p)


def axes(params, n_q=80, n_w=301):
    q_axis = np.linspace(0.05, 4.0, n_q) * params.qres_over_kf
    return q_axis, np.linspace(0.6, 1.6, n_w)


class TestInjector:
    def test_box(self):
        assert injector_shape(1.0, InjectorSpec("box", 1.0, 1.0)) == 1.0
        assert injector_shape(1.0, InjectorSpec("box", 1.2, 0.05)) == 0.0
        np.testing.assert_array_equal(
            injector_shape([0.5, 1.5, 1.51], InjectorSpec("box", 1.0, 1.0)), [1, 1, 0])

    def test_gaussian_fwhm(self):
        inj = InjectorSpec("gaussian", 1.2, 0.1)
        assert injector_shape(1.2, inj) == 1.0
        assert injector_shape(1.25, inj) == pytest.approx(0.5, rel=1e-14)

    @pytest.mark.parametrize("kwargs", [dict(shape="tri"), dict(width=0.0),
                                        dict(center=-1.0), dict(strength=-1.0)])
    def test_invalid(self, kwargs):
        with pytest.raises(ParameterError):
            InjectorSpec(**kwargs)


def test_injection_rates(eig, params):
    inj = InjectorSpec("box", 1.0, 1.0, strength=2.0)
    rates = injection_rate(1.2, eig, inj, params)
    inside = np.abs(eig.omega_zeta - 1.0) <= 0.5
    np.testing.assert_allclose(rates[inside], 2.0 * eig.mu[inside] ** 2, rtol=1e-15)
    assert np.all(rates[~inside] == 0)
    assert injection_rate(1.2, eig, InjectorSpec("box", 0.5, 0.05), params).sum() == 0
    # full coverage recovers the apex sum rule
    cover = InjectorSpec("box", 1.5, 3.0, strength=0.7)
    assert injection_rate(1.2, eig, cover, params).sum() == pytest.approx(0.7, rel=1e-12)
    # inside the Fermi sea the bare line at omega_12 is injected
    assert injection_rate(0.5, eig, inj, params).tolist() == [2.0]


def test_dark_state_not_injected():
    p = DeviceParams(rabi_res=0.0)
    eig, _ = setup_system(p, n_q=30)
    rates = injection_rate(1.1, eig, InjectorSpec("box", 1.0, 1.0), p)
    assert np.all(rates[eig.mu == 0] == 0)


def test_photon_weight_completeness(eig, table):
    weight = photon_ring_weight(eig, table)
    np.testing.assert_allclose(weight.sum(axis=0), 1.0, atol=1e-12)
    assert np.array_equal(photon_ring_weight(eig, table, 17), weight[17])


def test_central_state_is_matter_like(eig, table):
    central = np.argmax(eig.mu**2)
    assert abs(eig.omega_zeta[central] - 1.0) < 1e-3
    assert photon_ring_weight(eig, table, central).sum() < 0.1


def test_decoupled_photon_state_is_pure():
    p = DeviceParams(rabi_res=1e-9)
    eig, table = setup_system(p, n_q=40)
    weight = photon_ring_weight(eig, table)
    # rings above resonance: the upper branch is the bare photon
    for i in np.nonzero(table.q_values > 1.5 * p.qres_over_kf)[0][:5]:
        z = np.argmin(np.abs(eig.omega_zeta - table.omega_plus[i]))
        assert weight[z, i] == pytest.approx(eig.lam[z, i] ** 2, rel=1e-6)
        assert weight[z].sum() == pytest.approx(1.0, abs=1e-6)


def test_radiative_rate(eig, table):
    photon = photon_ring_weight(eig, table).sum(axis=1)
    rate = radiative_rate(1.2, eig, table, KAPPA)
    upper = np.argmin(np.abs(eig.omega_zeta - 1.3))
    assert rate[upper] / KAPPA == pytest.approx(photon[upper], abs=1e-9)
    assert radiative_rate(0.5, eig, table, KAPPA).tolist() == [0.0]
    with pytest.raises(ParameterError):
        radiative_rate(1.2, eig, table, -1.0)


def test_fully_photonic_state_decays_at_kappa():
    p = DeviceParams(rabi_res=0.0)
    eig, table = setup_system(p, n_q=40)
    rate = radiative_rate(1.1, eig, table, KAPPA)
    photonic = eig.omega_zeta > 1.0 + 1e-9
    np.testing.assert_allclose(rate[photonic], KAPPA, rtol=1e-14)


def test_emission_distribution(eig, table):
    for target in (0.8, 0.95, 1.05, 1.2, 1.4):
        z = int(np.argmin(np.abs(eig.omega_zeta - target)))
        dist = emission_distribution(z, eig, table)
        assert dist.sum() == pytest.approx(1.0, abs=1e-12)
        detuning = np.minimum(np.abs(table.omega_minus - eig.omega_zeta[z]),
                              np.abs(table.omega_plus - eig.omega_zeta[z]))
        assert np.argmax(dist) == np.argmin(detuning)


def test_emission_distribution_single_ring():
    p = DeviceParams()
    eig, table = setup_system(p, n_q=1, q_min=1.3, q_max=1.3)
    bright = np.argmax(photon_ring_weight(eig, table).sum(axis=1))
    assert emission_distribution(bright, eig, table).tolist() == [1.0]


def test_emission_distribution_dark():
    p = DeviceParams(rabi_res=0.0)
    eig, table = setup_system(p, n_q=10)
    apex_state = int(np.argmax(eig.mu))
    with pytest.raises(DarkStateError):
        emission_distribution(apex_state, eig, table)


def test_quantum_efficiency():
    assert quantum_efficiency(0.01, 0.0) == 1.0
    assert quantum_efficiency(0.0, 0.005) == 0.0
    assert quantum_efficiency(0.01, 0.005) == pytest.approx(2 / 3)
    with pytest.raises(UndefinedEfficiencyError):
        quantum_efficiency(0.0, 0.0)


def test_efficiency_highest_for_branch_states(eig, table, params):
    rates = state_rates(1.2, eig, table, InjectorSpec(), kappa=1.0, rate_nr=1e-4)
    eff = quantum_efficiency(rates.rate_r, rates.rate_nr)
    photon = photon_ring_weight(eig, table).sum(axis=1)
    best = np.argsort(eff)[-20:]
    assert np.all(photon[best] > 0.95)


def test_default_k_grid(params):
    inj = InjectorSpec("box", 1.2, 0.05)
    k = default_k_grid(inj, params, KAPPA, RATE_NR, n=50)
    assert k[0] == 1.0 and k.size == 50
    energy = params.mass_scale * k**2
    np.testing.assert_allclose(np.diff(energy), np.diff(energy)[0], rtol=1e-9)
    assert energy[-1] - energy[0] == pytest.approx(0.05 + 10 * (KAPPA + RATE_NR))


class TestMap:
    def test_broadband_nonnegative_finite(self, eig, table, params):
        q_axis, omega_axis = axes(params)
        inj = InjectorSpec("box", 1.0, 1.0)
        el = electroluminescence_map(default_k_grid(inj, params, n=20), inj, eig, table,
                                     q_axis, omega_axis)
        assert el.intensity.shape == (q_axis.size, omega_axis.size)
        assert np.all(np.isfinite(el.intensity)) and np.all(el.intensity >= 0)
        assert el.total() > 0
        np.testing.assert_array_equal(el.overlays["q"], q_axis)

    def test_linear_in_strength(self, eig, table, params):
        q_axis, omega_axis = axes(params)
        k = [1.0, 1.1]
        one = electroluminescence_map(k, InjectorSpec("box", 1.2, 0.05, 1.0), eig, table,
                                      q_axis, omega_axis)
        two = electroluminescence_map(k, InjectorSpec("box", 1.2, 0.05, 2.0), eig, table,
                                      q_axis, omega_axis)
        assert np.array_equal(two.intensity, 2.0 * one.intensity)

    def test_off_band_injector_gives_zero(self, eig, table, params):
        q_axis, omega_axis = axes(params)
        inj = InjectorSpec("box", 0.5, 0.05)
        el = electroluminescence_map(default_k_grid(inj, params, n=5), inj, eig, table,
                                     q_axis, omega_axis)
        assert not el.intensity.any()

    def test_blocked_states_add_nothing(self, eig, table, params):
        q_axis, omega_axis = axes(params)
        inj = InjectorSpec("box", 1.0, 1.0)
        active = [1.0, 1.05, 1.3]
        mixed = electroluminescence_map([0.2, 0.9, *active, 0.999], inj, eig, table,
                                        q_axis, omega_axis)
        only = electroluminescence_map(active, inj, eig, table, q_axis, omega_axis)
        assert np.array_equal(mixed.intensity, only.intensity)
        blocked = electroluminescence_map([0.1, 0.5], inj, eig, table, q_axis, omega_axis)
        assert not blocked.intensity.any()

    def test_lorentzian_half_width(self):
        p = DeviceParams()
        eig, table = setup_system(p, n_q=1, q_min=1.0, q_max=1.0)
        upper = int(np.argmax(eig.omega_zeta))
        inj = InjectorSpec("box", eig.omega_zeta[upper], 0.01)
        step = 1e-4
        omega_axis = np.arange(0.9, 1.4, step)
        q_axis = np.array([0.5, 1.0, 1.5]) * p.qres_over_kf
        el = electroluminescence_map([1.0], inj, eig, table, q_axis, omega_axis,
                                     kappa=KAPPA, rate_nr=RATE_NR)
        cut = el.intensity[1]
        above = omega_axis[cut >= 0.5 * cut.max()]
        half_width = 0.5 * (above[-1] - above[0])
        rate_r = radiative_rate(1.0, eig, table, KAPPA, upper)
        assert half_width == pytest.approx(rate_r + RATE_NR, abs=2 * step)

    @pytest.mark.parametrize("axis", [[0.01], [0.02, 0.01, 0.03], [0.01, 0.02, 0.04]])
    def test_bad_axes(self, eig, table, axis):
        with pytest.raises(ParameterError):
            electroluminescence_map([1.1], InjectorSpec(), eig, table, axis,
                                    np.linspace(0.6, 1.6, 11))
        with pytest.raises(ParameterError):
            electroluminescence_map([1.1], InjectorSpec(), eig, table,
                                    np.linspace(0.01, 0.02, 5), axis)

    def test_writers(self, tmp_path, eig, table, params):
        q_axis, omega_axis = axes(params, n_q=4, n_w=5)
        el = electroluminescence_map([1.0], InjectorSpec("box", 1.0, 1.0), eig, table,
                                     q_axis, omega_axis)
        write_elmap_csv(el, tmp_path / "m.csv", "fp")
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines[:2] == ["# fingerprint=fp", "q,omega,intensity"]
        data = np.loadtxt(tmp_path / "m.csv", delimiter=",", skiprows=2)
        assert data.shape == (20, 3)
        assert np.array_equal(data[:, 2], el.intensity.ravel())
        write_elmap_json(el, tmp_path / "m.json", "fp", {"echo": 1})
        doc = json.loads((tmp_path / "m.json").read_text())
        assert doc["fingerprint"] == "fp" and doc["config"] == {"echo": 1}
        assert doc["shape"] == [4, 5]
        assert np.array_equal(np.reshape(doc["intensity"], doc["shape"]), el.intensity)
        assert set(doc["overlays"]) == {"q", "omega_minus", "omega_plus"}


@settings(max_examples=15, deadline=None)
@given(center=st.floats(0.7, 1.5), width=st.floats(0.01, 0.5))
def test_map_invariants_property(center, width, eig, table, params):
    q_axis, omega_axis = axes(params, n_q=20, n_w=101)
    inj = InjectorSpec("box", center, width)
    el = electroluminescence_map(default_k_grid(inj, params, n=3), inj, eig, table,
                                 q_axis, omega_axis)
    assert np.all(np.isfinite(el.intensity)) and np.all(el.intensity >= 0)
