import math

import numpy as np
import pytest

from photon_bohm import fields as F
from photon_bohm.scenarios import (
    LAUNCH_FACTOR,
    SingleSlitScenario,
    SlabScenario,
    TwoPhotonScenario,
    build_scenario,
)


def test_build_single_slit_defaults():
    sc = build_scenario("single-slit", {})
    assert isinstance(sc, SingleSlitScenario)
    assert sc.launch_x == pytest.approx(LAUNCH_FACTOR * sc.cfg.d)
    assert sc.screen_x == sc.cfg.D
    icfg = sc.integrator()
    assert icfg.stop_x == sc.screen_x
    assert sc.integrator(method="rk2").method == "rk2"


def test_wavelength_sets_k():
    sc = build_scenario("two-photon", {"wavelength": 6e-7, "a": 3e-4})
    assert isinstance(sc, TwoPhotonScenario)
    assert sc.cfg.k == pytest.approx(2 * math.pi / 6e-7)
    assert sc.cfg.fringe_spacing == pytest.approx(6e-7 * sc.cfg.D / (2 * 3e-4))


def test_wavelength_and_k_conflict():
    with pytest.raises(ValueError, match="either"):
        build_scenario("single-slit", {"wavelength": 5e-7, "k": 1e7})


@pytest.mark.parametrize("name,key", [("single-slit", "n"), ("two-photon", "sigma0"), ("slab", "a")])
def test_unknown_keys_rejected(name, key):
    with pytest.raises(ValueError, match="unknown"):
        build_scenario(name, {key: 1.0})


def test_unknown_scenario():
    with pytest.raises(ValueError):
        build_scenario("triple-slit", {})


def test_launch_line_order():
    with pytest.raises(ValueError):
        SingleSlitScenario(F.DoubleSlitConfig(), launch_x=2.0)
    with pytest.raises(ValueError):
        TwoPhotonScenario(F.DoubleSlitConfig(), launch_x=0.0)


def test_single_from_slits_apertures(cfg):
    sc = SingleSlitScenario(cfg)
    u = np.array([0.0, 0.5, 0.999])
    pts = sc.from_slits(u, u)
    np.testing.assert_allclose(pts[:3, 1], cfg.a + (u - 0.5) * cfg.d)
    np.testing.assert_allclose(pts[3:, 1], -cfg.a + (u - 0.5) * cfg.d)
    assert np.all(pts[:, 0] == sc.launch_x)


def test_pair_from_slits_opposite(cfg):
    sc = TwoPhotonScenario(cfg)
    u = np.linspace(0, 0.99, 5)
    pts = sc.from_slits(u, u)
    # first three pairs: photon 1 through slit A
    assert np.all(pts[:3, 1] > 0) and np.all(pts[3:, 1] < 0)
    np.testing.assert_allclose(pts[:, 1] + pts[:, 2], 2 * (u - 0.5) * cfg.d, atol=1e-18)
    np.testing.assert_array_equal(sc.from_plane(pts[:, 1], pts[:, 2]), pts)


def test_launch_window_covers_main_lobes(cfg):
    sc = SingleSlitScenario(cfg)
    lo, hi = sc.launch_window
    assert lo == -hi
    # first diffraction zeros of each slit sit at +-a +- x lambda / d
    assert hi >= cfg.a + sc.launch_x * cfg.wavelength / cfg.d
    y = np.linspace(lo, hi, 2001)
    rho = sc.launch_density(y)
    assert np.all(rho >= 0) and rho.max() > 0
    assert rho[0] < 1e-3 * rho.max()


def test_line_density_symmetric(cfg):
    sc = SingleSlitScenario(cfg)
    y = np.linspace(-1e-3, 1e-3, 101)
    np.testing.assert_allclose(sc.line_density(y), sc.line_density(-y), rtol=1e-9)
    pair = TwoPhotonScenario(cfg)
    np.testing.assert_allclose(pair.line_density(y, -y), pair.line_density(-y, y), rtol=1e-9)


def test_slab_defaults_and_steps():
    sc = build_scenario("slab", {"n": 1.5, "dt": 1e-3})
    c = sc.cfg
    expected = (c.slab_end - c.x0) + (c.n - 1) * c.width + 10 * math.sqrt(c.sigma0)
    assert sc.t_end == pytest.approx(expected)
    icfg = sc.integrator()
    assert icfg.max_steps * icfg.dt == pytest.approx(sc.t_end, abs=icfg.dt)
    assert build_scenario("slab", {"t_end": 0.5}).t_end == 0.5


def test_slab_single_interface_end():
    sc = SlabScenario(F.SlabConfig(slab_end=math.inf))
    assert sc.t_end == pytest.approx(-sc.cfg.x0 + 10 * math.sqrt(sc.cfg.sigma0))


def test_slab_uniform_start():
    sc = SlabScenario(F.SlabConfig())
    pts = sc.from_slits(np.array([0.0, 0.5, 1.0]))
    w = 2 * math.sqrt(sc.cfg.sigma0)
    np.testing.assert_allclose(pts[:, 0], [sc.cfg.x0 - w, sc.cfg.x0, sc.cfg.x0 + w])
    lo, hi = sc.launch_window
    assert sc.launch_density(np.array([lo]))[0] < 1e-12 * sc.launch_density(np.array([sc.cfg.x0]))[0]
