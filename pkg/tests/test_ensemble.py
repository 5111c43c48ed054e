import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from photon_bohm import ensemble as E
from photon_bohm import fields as F
from photon_bohm.integrate import Status, Trajectory
from photon_bohm.scenarios import SingleSlitScenario, SlabScenario, TwoPhotonScenario


@given(seed=st.integers(0, 2**64 - 1), count=st.integers(1, 300), stream=st.integers(0, 5))
def test_stratified_uniforms_one_per_stratum(seed, count, stream):
    u = E.stratified_uniforms(seed, count, stream)
    assert np.array_equal(np.floor(u * count), np.arange(count))
    assert np.array_equal(u, E.stratified_uniforms(seed, count, stream))


def test_streams_differ():
    assert not np.array_equal(E.stratified_uniforms(1, 10, 0), E.stratified_uniforms(1, 10, 1))
    assert len(E.stratified_uniforms(1, 0)) == 0


@given(p=st.floats(0.5, 4.0))
def test_inverse_cdf_against_power_law(p):
    # density x^p on [0, 1]: exact inverse CDF u^(1/(p+1))
    u = np.linspace(0.01, 0.99, 50)
    got = E.inverse_cdf_sample(lambda x: x**p, 0.0, 1.0, u, nodes=20_000)
    np.testing.assert_allclose(got, u ** (1 / (p + 1)), atol=2e-4)


def test_inverse_cdf_skips_empty_stretches():
    dens = lambda x: np.where((x > 0.4) & (x < 0.6), 1.0, 0.0)  # noqa: E731
    got = E.inverse_cdf_sample(dens, 0.0, 1.0, np.array([0.0, 0.5, 0.999]))
    assert np.all((got >= 0.39) & (got <= 0.61))


def test_inverse_cdf_rejects_zero_density():
    with pytest.raises(ValueError, match="vanishes"):
        E.inverse_cdf_sample(lambda x: 0 * x, 0.0, 1.0, np.array([0.5]))
    with pytest.raises(ValueError):
        E.inverse_cdf_sample(lambda x: -np.ones_like(x), 0.0, 1.0, np.array([0.5]))


def test_sample_spec_validation():
    with pytest.raises(ValueError):
        E.SampleSpec(mode="importance")
    with pytest.raises(ValueError):
        E.SampleSpec(count=0)
    with pytest.raises(ValueError):
        E.SampleSpec(seed=-1)


def test_uniform_slits_cover_both_apertures(cfg):
    sc = SingleSlitScenario(cfg)
    pts = E.sample_initial(E.SampleSpec("uniform_slits", 101, 4), sc)
    assert pts.shape == (101, 2)
    assert np.all(pts[:, 0] == sc.launch_x)
    upper = pts[pts[:, 1] > 0, 1]
    lower = pts[pts[:, 1] < 0, 1]
    assert len(upper) == 51 and len(lower) == 50
    assert np.all(np.abs(upper - cfg.a) <= cfg.d / 2)
    assert np.all(np.abs(lower + cfg.a) <= cfg.d / 2)


def test_two_photon_uniform_pairs_in_opposite_slits(cfg):
    sc = TwoPhotonScenario(cfg)
    pts = E.sample_initial(E.SampleSpec("uniform_slits", 40, 2), sc)
    assert np.all(np.sign(pts[:, 1]) == -np.sign(pts[:, 2]))
    assert np.all(np.abs(np.abs(pts[:, 1:]) - cfg.a) <= cfg.d / 2)


def test_density_weighted_follows_launch_density(cfg):
    sc = SingleSlitScenario(cfg)
    pts = E.sample_initial(E.SampleSpec("density_weighted", 5000, 1), sc)
    lo, hi = sc.launch_window
    cmp = E.compare_histogram(pts[:, 1], sc.launch_density, lo, hi, bins=40)
    assert cmp.l1_distance < 0.02


def test_two_photon_density_sample(cfg):
    sc = TwoPhotonScenario(cfg)
    pts = E.sample_initial(E.SampleSpec("density_weighted", 2000, 5), sc)
    lo, hi = sc.launch_window
    assert np.all((pts[:, 1:] >= lo) & (pts[:, 1:] <= hi))
    # pair density depends only on the separation: the sum stays centred
    assert abs(np.mean(pts[:, 1] + pts[:, 2])) < 0.05 * (hi - lo)


def test_slab_samples():
    sc = SlabScenario(F.SlabConfig())
    u = E.sample_initial(E.SampleSpec("uniform_slits", 10, 0), sc)
    assert np.all(np.abs(u[:, 0] - sc.cfg.x0) <= 2 * math.sqrt(sc.cfg.sigma0))
    d = E.sample_initial(E.SampleSpec("density_weighted", 4000, 0), sc)
    # Gaussian energy density exp(-(x-x0)^2/sigma0): standard deviation sqrt(sigma0/2)
    assert np.std(d[:, 0]) == pytest.approx(math.sqrt(sc.cfg.sigma0 / 2), rel=0.02)


def test_reference_masses_normalised():
    edges = np.linspace(-1, 1, 11)
    q = E.reference_masses(lambda x: np.exp(-(x**2)), edges)
    assert q.sum() == pytest.approx(1.0, abs=1e-12)
    # oracle: erf
    exact = np.diff([math.erf(e) for e in edges])
    np.testing.assert_allclose(q, exact / exact.sum(), rtol=1e-12)


@given(seed=st.integers(0, 1000))
def test_histogram_comparison_invariants(seed):
    r = np.random.default_rng(seed)
    samples = r.normal(size=500)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cmp = E.compare_histogram(samples, lambda x: np.exp(-(x**2) / 2), -2, 2, bins=10)
    assert cmp.empirical.sum() == pytest.approx(1.0, abs=1e-12)
    assert cmp.reference.sum() == pytest.approx(1.0, abs=1e-12)
    assert cmp.l1_distance == pytest.approx(np.abs(cmp.empirical - cmp.reference).sum())
    assert 0 <= cmp.l1_distance <= 2
    assert not cmp.certified


def test_histogram_comparison_certified_for_large_counts():
    u = E.stratified_uniforms(0, 20_000)
    cmp = E.compare_histogram(u, np.ones_like, 0.0, 1.0, bins=50)
    assert cmp.certified and cmp.l1_distance < 1e-3


def _traj(i, pts, t=None, status=Status.REACHED_LINE):
    pts = np.asarray(pts, float)
    t = np.arange(len(pts), dtype=float) if t is None else np.asarray(t, float)
    return Trajectory(i, t, pts, np.arange(len(pts)), status)


def test_arrivals_guard():
    trs = [_traj(i, [[0, 0], [1, 0]]) for i in range(99)] + [_traj(99, [[0, 0]], status=Status.MAX_STEPS)]
    assert E.check_arrivals(trs) == 99
    trs.append(_traj(100, [[0, 0]], status=Status.LEFT_DOMAIN))
    with pytest.raises(E.InsufficientArrivals):
        E.check_arrivals(trs)


def test_fringe_positions_of_cos_squared():
    # maxima of cos^2(pi y / s) at multiples of s
    s = 0.37
    peaks = E.fringe_positions(lambda y: np.cos(math.pi * y / s) ** 2, -1.0, 1.0)
    np.testing.assert_allclose(peaks, s * np.arange(-2, 3), atol=1e-8)


def test_fringe_positions_drop_ripple():
    dens = lambda y: np.exp(-(y**2)) + 1e-6 * np.cos(40 * y) ** 2  # noqa: E731
    peaks = E.fringe_positions(dens, -2.0, 2.0, rel_floor=1e-3)
    assert len(peaks) >= 1
    assert np.min(np.abs(peaks)) < 1e-3


def test_channel_fraction():
    maxima = np.array([-1.0, 0.0, 1.0])
    ends = np.array([0.0, 0.2, 0.26, 0.9, -1.3, 5.0])
    assert E.channel_fraction(ends, maxima, 1.0) == pytest.approx(3 / 6)
    assert E.channel_fraction(ends, np.array([0.0]), 1.0) == pytest.approx(2 / 6)
    assert E.channel_fraction(ends, np.array([]), 1.0) == 0.0


def test_reflected_fraction():
    trs = [_traj(i, [[0.0], [x]]) for i, x in enumerate([-0.5, 0.3, 0.4, 0.5])]
    assert E.reflected_fraction(trs, 0.0) == pytest.approx(0.25)


def test_crossings_counted():
    t = [0.0, 1.0, 2.0]
    a = _traj(0, [[0, 0.0], [1, 0.0], [2, 0.0]], t)
    b = _traj(1, [[0, 1.0], [1, 1.0], [2, -1.0]], t)
    c = _traj(2, [[0, 2.0], [1, 2.0], [2, 2.0]], t)
    assert E.count_crossings([a, c], coord=1, count=5) == 0
    # b drops below a for the later slices
    assert E.count_crossings([a, b, c], coord=1, count=5) > 0
    times, vals = E.time_slices([a, b], coord=1, count=3)
    np.testing.assert_allclose(times, [0, 1, 2])
    np.testing.assert_allclose(vals[:, 1], [1, 1, -1])


def test_equivariance_requires_arrivals(cfg):
    sc = SingleSlitScenario(cfg)
    trs = [_traj(0, [[sc.launch_x, 0.0]], status=Status.MAX_STEPS)]
    with pytest.raises(E.InsufficientArrivals):
        E.equivariance_check(trs, sc)
