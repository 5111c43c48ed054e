"""Initial-condition sampling and endpoint statistics."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import minimize_scalar

from .integrate import Status

log = logging.getLogger(__name__)

SAMPLE_MODES = ("uniform_slits", "density_weighted")
TABLE_NODES = 10_000
MIN_CERTIFY = 1000  # endpoints inside the window needed to certify a comparison
MIN_ARRIVED = 0.99


class InsufficientArrivals(ValueError):
    pass


@dataclass(frozen=True)
class SampleSpec:
    mode: str = "density_weighted"
    count: int = 1000
    seed: int = 0
    window: tuple | None = None  # launch-line interval; scenario default if None

    def __post_init__(self):
        if self.mode not in SAMPLE_MODES:
            raise ValueError(f"mode must be one of {SAMPLE_MODES}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def stratified_uniforms(seed: int, count: int, stream: int = 0):
    """u_i = (i + U_i) / count with U_i from a Philox stream keyed on (seed, stream).

    U_i is the i-th output of the counter-based generator, so it depends only
    on (seed, stream, i).
    """
    if count == 0:
        return np.empty(0)
    gen = np.random.Generator(np.random.Philox(key=int(seed) + (int(stream) << 64)))
    return (np.arange(count) + gen.random(count)) / count


def inverse_cdf_sample(density_fn, lo, hi, u, nodes: int = TABLE_NODES):
    """Map variates u in [0, 1) through the inverse CDF of a tabulated density."""
    grid = np.linspace(lo, hi, nodes)
    rho = np.asarray(density_fn(grid), dtype=float)
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise ValueError("tabulated density must be finite and nonnegative")
    cdf = cumulative_trapezoid(rho, grid, initial=0.0)
    total = cdf[-1]
    if not total > 0:
        raise ValueError("density vanishes on the launch line")
    cdf /= total
    # np.interp needs strictly increasing abscissae; flat stretches carry no mass
    rising = np.diff(cdf) > 0
    keep = np.concatenate([[False], rising])
    keep[np.argmax(rising)] = True  # anchor u = 0 at the start of the support
    return np.interp(u, cdf[keep], grid[keep])


def _two_photon_density_sample(scenario, spec, lo, hi):
    # (y1, y2) from the joint density on a 200 x 200 cell table, jittered in-cell
    m = 200
    edges = np.linspace(lo, hi, m + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    Y1, Y2 = np.meshgrid(mids, mids, indexing="ij")
    x = np.full(Y1.shape, scenario.launch_x)
    rho = scenario.field.density(Y1, Y2, x=x).ravel()
    if not rho.sum() > 0:
        raise ValueError("density vanishes on the launch plane")
    cdf = np.cumsum(rho) / rho.sum()
    u = stratified_uniforms(spec.seed, spec.count, 0)
    cell = np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)
    j1, j2 = np.divmod(cell, m)
    width = edges[1] - edges[0]
    w1 = stratified_uniforms(spec.seed, spec.count, 1)
    w2 = stratified_uniforms(spec.seed, spec.count, 2)
    # shuffle the jitter so it is not correlated with the cell order
    perm = np.random.Generator(np.random.Philox(key=int(spec.seed) + (3 << 64))).permutation(spec.count)
    y1 = edges[j1] + width * w1[perm]
    y2 = edges[j2] + width * w2[perm[::-1]]
    return scenario.from_plane(y1, y2)


def sample_initial(spec: SampleSpec, scenario):
    """Launch points for ``scenario`` as an (count, dim) array."""
    n = spec.count
    if spec.mode == "uniform_slits":
        if scenario.name == "single-slit":
            n_a = (n + 1) // 2
            u_a = stratified_uniforms(spec.seed, n_a, 0)
            u_b = stratified_uniforms(spec.seed, n - n_a, 1)
            return scenario.from_slits(u_a, u_b)
        if scenario.name == "two-photon":
            n_a = (n + 1) // 2
            u1 = np.concatenate([stratified_uniforms(spec.seed, n_a, 0), stratified_uniforms(spec.seed, n - n_a, 1)])
            gen = np.random.Generator(np.random.Philox(key=int(spec.seed) + (2 << 64)))
            u2 = gen.random(n)
            return scenario.from_slits(u1, u2)
        return scenario.from_slits(stratified_uniforms(spec.seed, n, 0))
    lo, hi = spec.window if spec.window is not None else scenario.launch_window
    if scenario.name == "two-photon":
        return _two_photon_density_sample(scenario, spec, lo, hi)
    u = stratified_uniforms(spec.seed, n, 0)
    return scenario.from_line(inverse_cdf_sample(scenario.launch_density, lo, hi, u))


# --------------------------------------------------------------------------
# statistics


@dataclass
class HistogramComparison:
    edges: np.ndarray
    empirical: np.ndarray
    reference: np.ndarray
    l1_distance: float
    count: int
    certified: bool = True
    warning: str = ""
    extra: dict = field(default_factory=dict)


def reference_masses(density_fn, edges, points_per_bin: int = 64):
    """Normalised mass of ``density_fn`` in each bin (Gauss-Legendre per bin)."""
    xg, wg = np.polynomial.legendre.leggauss(points_per_bin)
    lo, hi = edges[:-1, None], edges[1:, None]
    pts = 0.5 * (hi - lo) * xg[None, :] + 0.5 * (hi + lo)
    vals = np.asarray(density_fn(pts.ravel()), dtype=float).reshape(pts.shape)
    mass = 0.5 * (hi[:, 0] - lo[:, 0]) * (vals @ wg)
    return mass / mass.sum()


def compare_histogram(samples, density_fn, lo, hi, bins: int = 50, min_count: int = MIN_CERTIFY):
    """L1 distance between the sample histogram on [lo, hi] and the density
    restricted to the same interval; both normalised over the interval."""
    samples = np.asarray(samples, dtype=float)
    edges = np.linspace(lo, hi, bins + 1)
    inside = samples[(samples >= lo) & (samples <= hi)]
    counts, _ = np.histogram(inside, bins=edges)
    q = reference_masses(density_fn, edges)
    if counts.sum() == 0:
        p = np.full(bins, 1.0 / bins)
    else:
        p = counts / counts.sum()
    l1 = float(np.abs(p - q).sum())
    cmp = HistogramComparison(edges, p, q, l1, int(counts.sum()))
    if cmp.count < min_count:
        cmp.certified = False
        cmp.warning = f"only {cmp.count} endpoints inside the window (< {min_count}); not certified"
        warnings.warn(cmp.warning, stacklevel=2)
    return cmp


def arrived(trajectories):
    return [tr for tr in trajectories if tr.status is Status.REACHED_LINE]


def check_arrivals(trajectories, minimum: float = MIN_ARRIVED):
    n = len(trajectories)
    k = len(arrived(trajectories))
    if n == 0 or k < minimum * n:
        raise InsufficientArrivals(f"{k} of {n} trajectories reached the line (need {minimum:.0%})")
    return k


def equivariance_check(trajectories, scenario, window=None, bins: int = 50, fringes: float = 5.0):
    """Endpoint histogram on the detection line against the line density.

    Default window is +-``fringes`` fringe spacings around the axis.  For the
    pair, photon 1's endpoint is compared against the photon-1 marginal.
    """
    check_arrivals(trajectories)
    ends = np.array([tr.end for tr in arrived(trajectories)])
    if window is None:
        w = fringes * scenario.cfg.fringe_spacing * scenario.screen_x / scenario.cfg.D
        window = (-w, w)
    if scenario.name == "single-slit":
        return compare_histogram(ends[:, 1], scenario.line_density, *window, bins=bins)
    if scenario.name == "two-photon":
        return compare_histogram(ends[:, 1] - ends[:, 2], lambda s: scenario.line_density(s / 2, -s / 2), *window, bins=bins)
    raise ValueError(f"no detection line for scenario {scenario.name!r}")


def fringe_positions(density_fn, lo, hi, nodes: int = TABLE_NODES, rel_floor: float = 1e-3):
    """Local maxima of a 1D density on [lo, hi], refined by bounded Brent search.

    Maxima below ``rel_floor`` of the largest one (envelope sidelobe ripple)
    are dropped.
    """
    grid = np.linspace(lo, hi, nodes)
    rho = np.asarray(density_fn(grid), dtype=float)
    interior = np.nonzero((rho[1:-1] > rho[:-2]) & (rho[1:-1] >= rho[2:]))[0] + 1
    peaks = []
    for i in interior:
        res = minimize_scalar(
            lambda s: -float(density_fn(np.array([s]))[0]),
            bounds=(grid[i - 1], grid[i + 1]),
            method="bounded",
            options={"xatol": 1e-9 * (grid[1] - grid[0])},
        )
        peaks.append((float(res.x), -float(res.fun)))
    if not peaks:
        return np.empty(0)
    top = max(v for _, v in peaks)
    return np.array(sorted(p for p, v in peaks if v >= rel_floor * top))


def channel_fraction(ends, maxima, spacing):
    """Fraction of endpoints within +-spacing/4 of the nearest maximum."""
    ends = np.asarray(ends, dtype=float)
    maxima = np.sort(np.asarray(maxima, dtype=float))
    if len(maxima) == 0 or len(ends) == 0:
        return 0.0
    j = np.clip(np.searchsorted(maxima, ends), 1, len(maxima) - 1) if len(maxima) > 1 else np.zeros(len(ends), int)
    near = np.abs(ends - maxima[j])
    if len(maxima) > 1:
        near = np.minimum(near, np.abs(ends - maxima[j - 1]))
    return float(np.mean(near <= 0.25 * spacing))


def reflected_fraction(trajectories, boundary: float):
    """Fraction of trajectories that end on the incident side of ``boundary``."""
    ends = np.array([tr.end[0] for tr in trajectories])
    return float(np.mean(ends < boundary))


def time_slices(trajectories, coord: int, count: int = 200):
    """Values of ``coord`` at common physical times, shape (count, N).

    Times span from the latest start to the earliest end; each trajectory
    is linearly interpolated in its own (strictly increasing) time samples.
    """
    t_lo = max(tr.t[0] for tr in trajectories)
    t_hi = min(tr.t[-1] for tr in trajectories)
    times = np.linspace(t_lo, t_hi, count)
    return times, np.stack([np.interp(times, tr.t, tr.points[:, coord]) for tr in trajectories], axis=1)


def count_crossings(trajectories, coord: int = 1, count: int = 200):
    """Number of (slice, neighbour-pair) order inversions relative to the start order."""
    order = np.argsort([tr.start[coord] for tr in trajectories], kind="stable")
    _, vals = time_slices([trajectories[i] for i in order], coord, count)
    return int(np.sum(np.diff(vals, axis=1) <= 0))
