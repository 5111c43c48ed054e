"""Bohmian velocity fields.

The bilinear ratio c Re(psi^dagger Gamma beta~ Gamma psi) / psi^dagger Gamma psi
(and its two-photon tensor analogue) is the reference definition.  The
printed closed forms are implemented separately as cross-checks.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import fields as F
from .kdp import BetaSet, default_betas, massless_current, product_tensor_current, two_photon_tensor_current

C = 1.0
EPS_NODE = 1e-12


class VelocitySample(NamedTuple):
    v: np.ndarray
    density: np.ndarray
    degenerate: np.ndarray


class PairVelocity(NamedTuple):
    v1: np.ndarray
    v2: np.ndarray
    density: np.ndarray
    degenerate: np.ndarray


def _ratio(flux, density, scale):
    density = np.asarray(density)
    if scale is None:
        degenerate = density <= 0.0
    else:
        degenerate = ~(density > EPS_NODE * np.asarray(scale))
    safe = np.where(density > 0.0, density, 1.0)
    v = np.where((density > 0.0)[..., None], flux / safe[..., None], 0.0)
    return v, degenerate


def velocity_generic(psi, b: BetaSet | None = None, scale=None) -> VelocitySample:
    """v_i = c Re(psi^dagger Gamma beta~_i Gamma psi) / (psi^dagger Gamma psi).

    ``scale`` is the local density scale used for the node test; without it
    only an exactly vanishing density is flagged.  At a flagged point the
    limiting ratio is still returned (zero where the density is exactly 0).
    """
    b = default_betas() if b is None else b
    density, flux = massless_current(psi, b)
    v, degenerate = _ratio(C * flux, density, scale)
    return VelocitySample(v, density, degenerate)


def velocity_single_closed(x, y, cfg: F.DoubleSlitConfig) -> VelocitySample:
    """Printed closed form for the single photon, 2-vector (v_x, v_y).

    The diffraction factors are divided by r_A, r_B unless
    ``cfg.keep_inverse_r`` is off, so both paths use the same conventions.
    """
    geom = F.slit_geometry(x, y, cfg)
    gA, gB = F.slit_amplitudes(geom, cfg)
    E0, B0 = cfg.E0, cfg.B0
    interference = gA * gB * np.cos(cfg.k * geom.path_difference)
    cos_sum = geom.cos_A * geom.cos_B - geom.sin_A * geom.sin_B  # cos(theta_A + theta_B)
    density = (E0**2 + B0**2) * (gA**2 + gB**2) + 2.0 * interference * (E0**2 * cos_sum + B0**2)
    num_x = gA**2 * geom.cos_A + gB**2 * geom.cos_B + interference * (geom.cos_A + geom.cos_B)
    num_y = -(gA**2) * geom.sin_A + gB**2 * geom.sin_B + interference * (geom.sin_B - geom.sin_A)
    flux = 2.0 * E0 * B0 * C * np.stack([num_x, num_y], axis=-1)
    v, degenerate = _ratio(flux, density, F.single_photon_envelope(geom, cfg))
    return VelocitySample(v, density, degenerate)


def velocity_single_generic(x, y, cfg: F.DoubleSlitConfig, b: BetaSet | None = None) -> VelocitySample:
    """Single-photon velocity (v_x, v_y) from the bilinear form."""
    geom = F.slit_geometry(x, y, cfg)
    psi = F.single_photon_psi(x, y, cfg, geom=geom, global_phase=False)
    out = velocity_generic(psi, b, scale=F.single_photon_envelope(geom, cfg))
    return VelocitySample(out.v[..., :2], out.density, out.degenerate)


def velocity_two_generic(y1, y2, cfg: F.DoubleSlitConfig, x=None, b: BetaSet | None = None) -> PairVelocity:
    """Pair velocities v^(1)_i = c s^{i0}/s^{00}, v^(2)_i = c s^{0i}/s^{00}."""
    b = default_betas() if b is None else b
    pair = F.pair_geometry(y1, y2, cfg, x)
    psi = F.two_photon_psi(y1, y2, cfg, pair=pair)
    s = two_photon_tensor_current(psi, b)
    density = s[..., 0, 0]
    scale = F.two_photon_envelope(pair, cfg)
    v1, degenerate = _ratio(C * s[..., 1:3, 0], density, scale)
    v2, _ = _ratio(C * s[..., 0, 1:3], density, scale)
    return PairVelocity(v1, v2, density, degenerate)


def _two_closed_raw(pair: F.PairGeometry, cfg: F.DoubleSlitConfig):
    p = pair.particle1
    cA, sA, cB, sB = p.cos_A, p.sin_A, p.cos_B, p.sin_B
    g1, g2 = pair.g1, pair.g2
    cos_sum = cA * cB - sA * sB
    mix = g1**2 * g2**2 * (1.0 + cos_sum)
    vx = -2.0 * (g1**4 * cA + g2**4 * cB) + mix * (cA + cB)
    vy = -2.0 * (g1**4 * sA - g2**4 * sB) + mix * (sB - sA)
    dist = pair.distance
    density = (
        8.0 * cfg.d**4 * g1**2 * g2**2 * cfg.E0**2 * cfg.B0**2 / dist**4
        * (1.0 + (cos_sum + 1.0) ** 2 / 4.0 * np.cos(2.0 * pair.phase))
    )
    return vx, vy, density


def closed_pair_normalisation(cfg: F.DoubleSlitConfig, x=None, b: BetaSet | None = None) -> float:
    """Constant that makes the printed pair formula match the tensor current
    at the symmetry point y1 = y2 = 0."""
    pair = F.pair_geometry(0.0, 0.0, cfg, x)
    vx, _, density = _two_closed_raw(pair, cfg)
    ref = velocity_two_generic(0.0, 0.0, cfg, x=x, b=b).v1[..., 0]
    raw = vx / density
    if raw == 0:
        raise ZeroDivisionError("printed pair formula vanishes at the symmetry point")
    return float(ref / raw)


def velocity_two_closed(y1, y2, cfg: F.DoubleSlitConfig, x=None, norm: float | None = None) -> PairVelocity:
    """Printed pair velocities with angles taken at photon 1's position.

    v2x = v1x and v2y = -v1y by construction.  ``norm`` defaults to
    :func:`closed_pair_normalisation`.
    """
    if norm is None:
        norm = closed_pair_normalisation(cfg, x)
    pair = F.pair_geometry(y1, y2, cfg, x)
    vx, vy, density = _two_closed_raw(pair, cfg)
    flux = norm * C * np.stack([vx, vy], axis=-1)
    v1, degenerate = _ratio(flux, density, F.two_photon_envelope(pair, cfg) / 8.0)
    v2 = v1 * np.array([1.0, -1.0])
    return PairVelocity(v1, v2, density, degenerate)


def velocity_slab(x, t, cfg: F.SlabConfig, b: BetaSet | None = None) -> VelocitySample:
    """Longitudinal velocity (c/n_local) * flux/density of the slab spinor.

    Inside the glass the energy-normalised spinor of a single forward packet is
    an eigenvector of beta~_x with eigenvalue 1, so v = c/n.  Flux (and hence
    probability current) is continuous at the interfaces; the velocity jumps.
    """
    E, B = F.slab_fields(x, t, cfg)
    psi = F.slab_psi(x, t, cfg, fields=(E, B))
    out = velocity_generic(psi, b, scale=F.slab_energy_scale(x, t, cfg))
    vx = out.v[..., 0] / F.slab_index(x, cfg)
    return VelocitySample(vx, out.density, out.degenerate)


# --------------------------------------------------------------------------
# engine-facing fields: evaluate(z, t) on batches of configuration points


class FieldSample(NamedTuple):
    v: np.ndarray  # (N, dim)
    density: np.ndarray
    degenerate: np.ndarray
    rate: np.ndarray  # dt/dtau, physical time per unit integration parameter


class VelocityField:
    """Vectorised velocity field over configuration points z of shape (N, dim).

    ``particles`` lists, per particle, the configuration indices of its
    spatial coordinates.  ``evaluate`` also returns the clock rate
    dt/dtau > 0; reparametrising time leaves the integral curves unchanged,
    so stationary fields use it to spend steps where the flow is intricate.
    """

    dim = 2
    particles: tuple = ((0, 1),)
    time_dependent = False
    longitudinal = 0

    def evaluate(self, z, t) -> FieldSample:  # pragma: no cover - interface
        raise NotImplementedError

    def __call__(self, z, t):
        out = self.evaluate(z, t)
        return out.v, out.density, out.degenerate


def interference_clock(x, v, phase_gradients, density, scale, q0):
    """dt/dtau for the stationary double-slit fields.

    rate = x / (1 + x sum_j |v . grad phase_j|) * sqrt(q / (q + q0)), q = density / scale.

    The phases are the relative phase of the interfering waves and the sinc
    arguments of the diffraction factors.  A unit of tau then advances at most
    about one radian of each along the path and at most one e-fold in x
    (far-field patterns are self-similar in x); the last factor shortens
    physical steps near interference nodes.
    """
    q = np.clip(density / np.where(scale > 0, scale, 1.0), 0.0, 1.0)
    winding = sum(np.abs(np.einsum("...i,...i->...", v, g)) for g in phase_gradients)
    x = np.maximum(x, 0.0)
    return x / (1.0 + x * winding) * np.sqrt(q / (q + q0))


class SingleSlitField(VelocityField):
    dim = 2
    particles = ((0, 1),)

    def __init__(self, cfg: F.DoubleSlitConfig, b: BetaSet | None = None, node_q: float = 1e-2):
        self.cfg = cfg
        self.b = default_betas() if b is None else b
        self.node_q = node_q

    def evaluate(self, z, t):
        x = z[:, 0]
        bad = ~(x > 0)
        x = np.where(bad, 1.0, x)
        geom = F.slit_geometry(x, z[:, 1], self.cfg)
        comp = F.single_photon_components(x, z[:, 1], self.cfg, geom=geom, global_phase=False)
        scale = F.single_photon_envelope(geom, self.cfg)
        density, flux = self.b.currents.components(comp.real, comp.imag, F.SINGLE_PHOTON_SLOTS)
        v, degenerate = _ratio(C * flux[:, :2], density, scale)
        # gradient of k (r_A - r_B): unit vectors away from each slit
        grad = self.cfg.k * np.stack([geom.cos_A - geom.cos_B, -geom.sin_A - geom.sin_B], axis=-1)
        grads = [grad, *F.diffraction_argument_gradients(x, z[:, 1], self.cfg)]
        rate = interference_clock(np.where(bad, 0.0, x), v, grads, density, scale, self.node_q)
        return FieldSample(v, density, degenerate | bad, rate)

    def density(self, x, y):
        geom = F.slit_geometry(x, y, self.cfg)
        psi = F.single_photon_psi(x, y, self.cfg, geom=geom, global_phase=False)
        return massless_current(psi, self.b)[0]


class TwoPhotonField(VelocityField):
    """Configuration (x, y1, y2): both photons share x because v1x = v2x."""

    dim = 3
    particles = ((0, 1), (0, 2))

    def __init__(self, cfg: F.DoubleSlitConfig, b: BetaSet | None = None, node_q: float = 1e-2):
        self.cfg = cfg
        self.b = default_betas() if b is None else b
        self.node_q = node_q

    def evaluate(self, z, t):
        x = z[:, 0]
        bad = ~(x > 0)
        x = np.where(bad, 1.0, x)
        pair = F.pair_geometry(z[:, 1], z[:, 2], self.cfg, x)
        s = product_tensor_current(*F.two_photon_terms(z[:, 1], z[:, 2], self.cfg, pair=pair), self.b)
        density = s[:, 0, 0]
        scale = F.two_photon_envelope(pair, self.cfg)
        v1, degenerate = _ratio(C * s[:, 1:3, 0], density, scale)
        v2, _ = _ratio(C * s[:, 0, 1:3], density, scale)
        v = np.stack([v1[:, 0], v1[:, 1], v2[:, 1]], axis=-1)
        local = self.cfg.far_field_mode == "local_x"
        d_eff = x if local else np.full_like(x, self.cfg.D)
        # relative phase 2 k a (y1 - y2) / D_eff of the two pair terms
        kx = 2.0 * self.cfg.k * self.cfg.a / d_eff
        grad = np.zeros((len(x), 3))
        grad[:, 0] = -kx * (z[:, 1] - z[:, 2]) / x if local else 0.0
        grad[:, 1], grad[:, 2] = kx, -kx
        grads = [grad]
        # sinc arguments u_j = k d y_j / (2 D_eff) of each photon's diffraction factor
        scale_u = self.cfg.k * self.cfg.d / (2.0 * d_eff)
        for j in (1, 2):
            g = np.zeros((len(x), 3))
            g[:, 0] = -scale_u * z[:, j] / x if local else 0.0
            g[:, j] = scale_u
            grads.append(g)
        rate = interference_clock(np.where(bad, 0.0, x), v, grads, density, scale, self.node_q)
        return FieldSample(v, density, degenerate | bad, rate)

    def density(self, y1, y2, x=None):
        return product_tensor_current(*F.two_photon_terms(y1, y2, self.cfg, x=x), self.b)[..., 0, 0]


class SlabField(VelocityField):
    dim = 1
    particles = ((0,),)
    time_dependent = True

    def __init__(self, cfg: F.SlabConfig, b: BetaSet | None = None):
        self.cfg = cfg
        self.b = default_betas() if b is None else b

    def evaluate(self, z, t):
        out = velocity_slab(z[:, 0], t, self.cfg, self.b)
        return FieldSample(out.v[:, None], out.density, out.degenerate, np.ones(len(z)))

    def density(self, x, t):
        psi = F.slab_psi(x, t, self.cfg)
        return massless_current(psi, self.b)[0]


class FunctionField(VelocityField):
    """Wrap ``fn(z, t) -> v`` (physical clock, never degenerate); used for tests."""

    def __init__(self, fn, dim, time_dependent=True):
        self.fn = fn
        self.dim = dim
        self.particles = (tuple(range(dim)),)
        self.time_dependent = time_dependent

    def evaluate(self, z, t):
        v = np.asarray(self.fn(z, t), dtype=float)
        n = len(z)
        return FieldSample(v, np.ones(n), np.zeros(n, dtype=bool), np.ones(n))
