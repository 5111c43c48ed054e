"""Wavefunctions for the three scenarios: single photon behind a double slit,
a down-converted photon pair behind the same slits, and a Gaussian packet
meeting a glass slab at normal incidence.

Units: c = 1; lengths in the config's length unit (metres by default).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .kdp import N_COMPONENTS

FAR_FIELD_MODES = ("local_x", "fixed_D")


@dataclass(frozen=True)
class DoubleSlitConfig:
    """Slits of width ``d`` centred at y = +a (slit A) and y = -a (slit B).

    ``far_field_mode`` selects whether the Fraunhofer distance in the
    diffraction factors and pair phases is the constant ``D`` or the local
    longitudinal coordinate x.  ``keep_inverse_r=False`` drops the 1/r
    amplitude factors, as in the printed closed forms.
    """

    E0: float = 1.0
    B0: float = 1.0
    k: float = 2.0 * math.pi / 5e-7
    d: float = 1e-5
    a: float = 2e-4
    D: float = 1.0
    far_field_mode: str = "local_x"
    keep_inverse_r: bool = True

    def __post_init__(self):
        for name in ("k", "d", "a", "D"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.far_field_mode not in FAR_FIELD_MODES:
            raise ValueError(
                f"far_field_mode must be one of {FAR_FIELD_MODES}, got {self.far_field_mode!r}"
            )
        if self.D < 10.0 * self.d**2 / self.wavelength:
            warnings.warn(
                f"screen distance D={self.D:g} is not >> d^2/lambda={self.d**2 / self.wavelength:g};"
                " far-field formulas are unreliable",
                stacklevel=2,
            )

    @property
    def wavelength(self) -> float:
        return 2.0 * math.pi / self.k

    @property
    def fringe_spacing(self) -> float:
        """Small-angle spacing lambda D / (2a) of the single-photon fringes."""
        return self.wavelength * self.D / (2.0 * self.a)

    def distance(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.D) if self.far_field_mode == "fixed_D" else x


class SlitGeometry(NamedTuple):
    r_A: np.ndarray
    r_B: np.ndarray
    sin_A: np.ndarray
    cos_A: np.ndarray
    sin_B: np.ndarray
    cos_B: np.ndarray
    g_A: np.ndarray
    g_B: np.ndarray
    path_difference: np.ndarray  # r_A - r_B, computed without cancellation

    @property
    def theta_A(self):
        return np.arctan2(self.sin_A, self.cos_A)

    @property
    def theta_B(self):
        return np.arctan2(self.sin_B, self.cos_B)


def sinc(u):
    """sin(u)/u with sinc(0) = 1."""
    u = np.asarray(u, dtype=float)
    safe = np.where(u == 0.0, 1.0, u)
    return np.where(u == 0.0, 1.0, np.sin(safe) / safe)


def slit_geometry(x, y, cfg: DoubleSlitConfig) -> SlitGeometry:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0):
        raise ValueError("field point must lie behind the slit plane (x > 0)")
    a = cfg.a
    r_A = np.hypot(x, y - a)
    r_B = np.hypot(x, y + a)
    d_eff = cfg.distance(x)
    scale = cfg.k * cfg.d / (2.0 * d_eff)
    return SlitGeometry(
        r_A=r_A,
        r_B=r_B,
        sin_A=(a - y) / r_A,
        cos_A=x / r_A,
        sin_B=(y + a) / r_B,
        cos_B=x / r_B,
        g_A=sinc(scale * (y - a)),
        g_B=sinc(scale * (y + a)),
        path_difference=-4.0 * a * y / (r_A + r_B),
    )


def diffraction_argument_gradients(x, y, cfg: DoubleSlitConfig):
    """Gradients in (x, y) of the sinc arguments u_A, u_B of the diffraction factors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d_eff = cfg.distance(x)
    scale = cfg.k * cfg.d / (2.0 * d_eff)
    out = []
    for center in (cfg.a, -cfg.a):
        du_dy = scale * np.ones_like(y)
        du_dx = -scale * (y - center) / x if cfg.far_field_mode == "local_x" else np.zeros_like(y)
        out.append(np.stack([du_dx, du_dy], axis=-1))
    return out


def slit_spinor_A(geom: SlitGeometry, cfg: DoubleSlitConfig):
    """Kemmer-Duffin amplitude of the wave leaving slit A (shape (..., 10))."""
    shape = np.shape(geom.sin_A)
    m = np.zeros(shape + (N_COMPONENTS,))
    m[..., 0] = -cfg.E0 * geom.sin_A
    m[..., 1] = -cfg.E0 * geom.cos_A
    m[..., 5] = cfg.B0
    return m


def slit_spinor_B(geom: SlitGeometry, cfg: DoubleSlitConfig):
    shape = np.shape(geom.sin_B)
    m = np.zeros(shape + (N_COMPONENTS,))
    m[..., 0] = cfg.E0 * geom.sin_B
    m[..., 1] = -cfg.E0 * geom.cos_B
    m[..., 5] = cfg.B0
    return m


def slit_amplitudes(geom: SlitGeometry, cfg: DoubleSlitConfig):
    """Real amplitudes g/r (or g) multiplying each slit's spinor."""
    if cfg.keep_inverse_r:
        return geom.g_A / geom.r_A, geom.g_B / geom.r_B
    return geom.g_A, geom.g_B


SINGLE_PHOTON_SLOTS = frozenset((0, 1, 5))


def single_photon_psi(x, y, cfg: DoubleSlitConfig, geom: SlitGeometry | None = None, global_phase: bool = True):
    """psi = M_A g_A e^{ik r_A}/r_A + M_B g_B e^{ik r_B}/r_B.

    The common phase e^{ik (r_A + r_B)/2} is applied last so the relative
    phase k (r_A - r_B) carries no large-argument rounding.  It cancels in
    every bilinear, so ``global_phase=False`` skips it.
    """
    return np.moveaxis(single_photon_components(x, y, cfg, geom, global_phase), 0, -1)


def single_photon_components(x, y, cfg: DoubleSlitConfig, geom: SlitGeometry | None = None, global_phase: bool = True):
    """Component-major psi, shape (10, ...); only SINGLE_PHOTON_SLOTS are nonzero."""
    if geom is None:
        geom = slit_geometry(x, y, cfg)
    amp_A, amp_B = slit_amplitudes(geom, cfg)
    half = 0.5 * cfg.k * geom.path_difference
    rot = np.exp(1j * half)
    cA = amp_A * rot
    cB = amp_B * np.conj(rot)
    if global_phase:
        common = np.exp(0.5j * cfg.k * (geom.r_A + geom.r_B))
        cA, cB = cA * common, cB * common
    # component-major storage keeps each slot contiguous for the bilinear forms
    psi = np.zeros((N_COMPONENTS,) + np.shape(cA), dtype=complex)
    psi[0] = cfg.E0 * (geom.sin_B * cB - geom.sin_A * cA)
    psi[1] = -cfg.E0 * (geom.cos_A * cA + geom.cos_B * cB)
    psi[5] = cfg.B0 * (cA + cB)
    return psi


def single_photon_envelope(geom: SlitGeometry, cfg: DoubleSlitConfig):
    """(|psi_A| + |psi_B|)^2, an upper bound on the local density."""
    amp_A, amp_B = slit_amplitudes(geom, cfg)
    return (cfg.E0**2 + cfg.B0**2) * (np.abs(amp_A) + np.abs(amp_B)) ** 2


class PairGeometry(NamedTuple):
    particle1: SlitGeometry
    particle2: SlitGeometry
    g1: np.ndarray
    g2: np.ndarray
    phase: np.ndarray  # k a (y1 - y2) / D_eff
    distance: np.ndarray


def pair_geometry(y1, y2, cfg: DoubleSlitConfig, x=None) -> PairGeometry:
    """Geometry of a photon pair on the plane x (default: the screen at D).

    The pair amplitude depends on the separation only, so each photon's
    diffraction angles are taken at +-(y1 - y2)/2.  For mirror-symmetric pairs
    (y2 = -y1) these are the photons' own positions.
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    if x is None:
        x = np.full(np.broadcast_shapes(y1.shape, y2.shape), cfg.D)
    x = np.asarray(x, dtype=float)
    half = 0.5 * (y1 - y2)
    d_eff = cfg.distance(x)
    scale = cfg.k * cfg.d / (2.0 * d_eff)
    return PairGeometry(
        particle1=slit_geometry(x, half, cfg),
        particle2=slit_geometry(x, -half, cfg),
        g1=sinc(scale * y1),
        g2=sinc(scale * y2),
        phase=cfg.k * cfg.a * (y1 - y2) / d_eff,
        distance=np.broadcast_to(d_eff, half.shape),
    )


def two_photon_terms(y1, y2, cfg: DoubleSlitConfig, x=None, pair: PairGeometry | None = None):
    """The pair amplitude as two product terms: (coeffs, U, W).

    Psi = sum_k coeffs_k U_k (x) W_k with U = (M_A(1), M_B(1)), W = (M_B(2), M_A(2));
    shapes (..., 2), (..., 2, 10), (..., 2, 10).
    """
    if pair is None:
        pair = pair_geometry(y1, y2, cfg, x)
    p1, p2 = pair.particle1, pair.particle2
    dist = pair.distance
    pref = np.exp(2j * cfg.k * dist) * cfg.d**2 * pair.g1 * pair.g2 / dist**2
    coeffs = np.stack([pref * np.exp(-1j * pair.phase), pref * np.exp(1j * pair.phase)], axis=-1)
    U = np.stack([slit_spinor_A(p1, cfg), slit_spinor_B(p1, cfg)], axis=-2)
    W = np.stack([slit_spinor_B(p2, cfg), slit_spinor_A(p2, cfg)], axis=-2)
    return coeffs, U, W


def two_photon_psi(y1, y2, cfg: DoubleSlitConfig, x=None, pair: PairGeometry | None = None):
    """Symmetrised pair amplitude, shape (..., 10, 10).

    Psi = e^{2ikD} d^2 g1 g2 / D^2 [M_A(1) x M_B(2) e^{-i phi} + M_B(1) x M_A(2) e^{+i phi}]
    with phi = k a (y1 - y2) / D; axis -2 indexes photon 1.
    """
    coeffs, U, W = two_photon_terms(y1, y2, cfg, x, pair)
    return np.einsum("...k,...ka,...kb->...ab", coeffs, U, W)


def two_photon_envelope(pair: PairGeometry, cfg: DoubleSlitConfig):
    """(|term 1| + |term 2|)^2 for the pair amplitude."""
    dist = pair.distance
    pref = cfg.d**2 * np.abs(pair.g1 * pair.g2) / dist**2
    return 4.0 * pref**2 * (cfg.E0**2 + cfg.B0**2) ** 2


# --------------------------------------------------------------------------
# glass slab

@dataclass(frozen=True)
class SlabConfig:
    """Gaussian packet exp(-(x - ct - x0)^2 / (2 sigma0)) incident on a slab.

    ``slab_end = inf`` gives a single air-glass interface.
    ``internal_reflections`` is the number of reflections kept inside the
    slab; each kept internal wave also emits its transmitted packet.  The
    default of 1 is a single pass; larger values converge to the exact
    multiple-reflection series.
    """

    E0: float = 1.0
    sigma0: float = 2.5e-3
    x0: float = -0.5
    n: float = 1.5
    slab_start: float = 0.0
    slab_end: float = 0.2
    internal_reflections: int = 1

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        if not self.n >= 1:
            raise ValueError("refractive index must be >= 1")
        if not (self.x0 < self.slab_start < self.slab_end):
            raise ValueError("need x0 < slab_start < slab_end")
        if self.internal_reflections < 0:
            raise ValueError("internal_reflections must be >= 0")
        if self.slab_start - self.x0 < 5.0 * math.sqrt(self.sigma0):
            warnings.warn("initial packet overlaps the first interface", stacklevel=2)

    @property
    def width(self) -> float:
        return self.slab_end - self.slab_start

    @property
    def single_interface(self) -> bool:
        return not math.isfinite(self.slab_end)

    @property
    def reflection(self) -> float:
        """Amplitude reflection coefficient from air onto glass."""
        return (1.0 - self.n) / (1.0 + self.n)

    @property
    def internal_reflection(self) -> float:
        return (self.n - 1.0) / (self.n + 1.0)

    @property
    def entry_transmission(self) -> float:
        return 2.0 / (1.0 + self.n)

    @property
    def exit_transmission(self) -> float:
        return 2.0 * self.n / (1.0 + self.n)


def slab_index(x, cfg: SlabConfig):
    x = np.asarray(x, dtype=float)
    inside = (x >= cfg.slab_start) & (x < cfg.slab_end)
    return np.where(inside, cfg.n, 1.0)


def _optical_coordinate(x, cfg: SlabConfig):
    s0, s1, n = cfg.slab_start, cfg.slab_end, cfg.n
    xi = np.where(x < s0, x, s0 + n * (x - s0))
    if not cfg.single_interface:
        xi = np.where(x >= s1, s0 + n * cfg.width + (x - s1), xi)
    return xi


def slab_waves(x, t, cfg: SlabConfig):
    """Per-packet (E, B) contributions, as a list of pairs of arrays.

    Each packet is nonzero only in its own region.  Forward packets carry
    B = n E, backward packets B = -n E, with n the local index.
    """
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    s0, s1, n = cfg.slab_start, cfg.slab_end, cfg.n
    two_sigma = 2.0 * cfg.sigma0

    def packet(u):
        return cfg.E0 * np.exp(-(u * u) / two_sigma)

    left = x < s0
    right = x >= s1
    inside = ~left & ~right
    xi = _optical_coordinate(x, cfg)
    shift = t + cfg.x0

    waves = []
    inc = np.where(left, packet(xi - shift), 0.0)
    waves.append((inc, inc))
    refl = np.where(left, cfg.reflection * packet(2.0 * s0 - xi - shift), 0.0)
    waves.append((refl, -refl))

    if cfg.single_interface:
        fwd = np.where(inside, cfg.entry_transmission * packet(xi - shift), 0.0)
        waves.append((fwd, n * fwd))
        return waves

    round_trip = 2.0 * n * cfg.width
    end = s0 + n * cfg.width
    amp = cfg.entry_transmission
    for j in range(cfg.internal_reflections + 1):
        delay = (j // 2) * round_trip
        if j % 2 == 0:
            shape = packet(xi + delay - shift)
            e_in = np.where(inside, amp * shape, 0.0)
            e_out = np.where(right, cfg.exit_transmission * amp * shape, 0.0)
            waves.append((e_in, n * e_in))
            waves.append((e_out, e_out))
        else:
            shape = packet(2.0 * end - xi + delay - shift)
            e_in = np.where(inside, amp * shape, 0.0)
            e_out = np.where(left, cfg.exit_transmission * amp * shape, 0.0)
            waves.append((e_in, -n * e_in))
            waves.append((e_out, -e_out))
        amp *= cfg.internal_reflection
    return waves


def slab_fields(x, t, cfg: SlabConfig):
    """Transverse electric and magnetic field (E, B) at (x, t)."""
    waves = slab_waves(x, t, cfg)
    E = sum(w[0] for w in waves)
    B = sum(w[1] for w in waves)
    return E, B


def slab_psi(x, t, cfg: SlabConfig, fields=None):
    """Real spinor (0, -sqrt(eps) E, 0, 0, 0, B, 0, 0, 0, 0).

    The packet travels along x, so the electric field occupies the y slot and
    the magnetic field the z slot.  The electric slot is energy-normalised (sqrt(eps) E = D / sqrt(eps)), so
    psi^T psi = eps E^2 + B^2 is twice the electromagnetic energy density in
    every region.  In air it is simply -E.
    """
    E, B = slab_fields(x, t, cfg) if fields is None else fields
    n_loc = slab_index(x, cfg)
    psi = np.zeros(np.shape(E) + (N_COMPONENTS,))
    psi[..., 1] = -n_loc * E
    psi[..., 5] = B
    return psi


def slab_energy_scale(x, t, cfg: SlabConfig):
    """Incoherent sum of packet energies, the local density scale."""
    n_loc = slab_index(x, cfg)
    return sum((n_loc * e) ** 2 + b**2 for e, b in slab_waves(x, t, cfg))
