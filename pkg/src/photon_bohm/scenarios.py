"""Scenario bundles: a field, its launch geometry and integration defaults.

Each scenario maps unit-interval variates to launch points (``from_slits``),
maps launch-line coordinates to configuration points (``from_line``) and
exposes the densities used for quantum-equilibrium sampling and comparison.  Configuration vectors are (x, y) for the single photon,
(x, y1, y2) for the pair and (x,) for the slab.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import fields as F
from .integrate import IntegratorConfig
from .velocity import SingleSlitField, SlabField, TwoPhotonField

LAUNCH_FACTOR = 50.0  # launch plane at x = 50 d


def _aperture_points(u, center, cfg: F.DoubleSlitConfig):
    """Variates u in [0, 1) spread uniformly over the aperture [center - d/2, center + d/2]."""
    return center + (np.asarray(u, dtype=float) - 0.5) * cfg.d


@dataclass
class SingleSlitScenario:
    cfg: F.DoubleSlitConfig
    launch_x: float | None = None
    screen_x: float | None = None
    dt: float = 1.2
    max_steps: int = 50_000

    name = "single-slit"
    dim = 2

    def __post_init__(self):
        if self.launch_x is None:
            self.launch_x = LAUNCH_FACTOR * self.cfg.d
        if self.screen_x is None:
            self.screen_x = self.cfg.D
        if not 0 < self.launch_x < self.screen_x:
            raise ValueError("need 0 < launch_x < screen_x")
        self.field = SingleSlitField(self.cfg)

    t0 = 0.0

    def integrator(self, **overrides) -> IntegratorConfig:
        base = IntegratorConfig(dt=self.dt, stop_x=self.screen_x, max_steps=self.max_steps, domain_lo=(0.0, -np.inf))
        return replace(base, **overrides)

    @property
    def launch_window(self):
        half = 2.0 * self.cfg.a + self.launch_x * self.cfg.wavelength / self.cfg.d
        return -half, half

    def launch_density(self, y):
        return self.field.density(np.full_like(y, self.launch_x), y)

    def line_density(self, y, x=None):
        x = self.screen_x if x is None else x
        return self.field.density(np.full_like(np.asarray(y, dtype=float), x), y)

    def from_slits(self, u_a, u_b):
        """Points for variates in [0, 1) across slit A (y = +a) then slit B."""
        center = np.concatenate([np.full(len(u_a), self.cfg.a), np.full(len(u_b), -self.cfg.a)])
        y = _aperture_points(np.concatenate([u_a, u_b]), center, self.cfg)
        return np.stack([np.full(len(y), self.launch_x), y], axis=-1)

    def from_line(self, y):
        return np.stack([np.full(len(y), self.launch_x), y], axis=-1)


@dataclass
class TwoPhotonScenario:
    """Pairs leave from opposite slits; the configuration is (x, y1, y2)."""

    cfg: F.DoubleSlitConfig
    launch_x: float | None = None
    screen_x: float | None = None
    dt: float = 1.2
    max_steps: int = 50_000

    name = "two-photon"
    dim = 3
    t0 = 0.0

    def __post_init__(self):
        if self.launch_x is None:
            self.launch_x = LAUNCH_FACTOR * self.cfg.d
        if self.screen_x is None:
            self.screen_x = self.cfg.D
        if not 0 < self.launch_x < self.screen_x:
            raise ValueError("need 0 < launch_x < screen_x")
        self.field = TwoPhotonField(self.cfg)

    def integrator(self, **overrides) -> IntegratorConfig:
        base = IntegratorConfig(
            dt=self.dt, stop_x=self.screen_x, max_steps=self.max_steps, domain_lo=(0.0, -np.inf, -np.inf)
        )
        return replace(base, **overrides)

    @property
    def launch_window(self):
        half = 2.0 * self.cfg.a + self.launch_x * self.cfg.wavelength / self.cfg.d
        return -half, half

    def line_density(self, y1, y2, x=None):
        x = self.screen_x if x is None else x
        y1 = np.asarray(y1, dtype=float)
        return self.field.density(y1, y2, x=np.full(np.broadcast_shapes(y1.shape, np.shape(y2)), x))

    def from_slits(self, u1, u2):
        """Photon 1 through slit A for the first half of the pairs, slit B
        for the rest; photon 2 always through the other slit."""
        n = len(u1)
        n_a = (n + 1) // 2
        first = np.arange(n) < n_a
        c1 = np.where(first, self.cfg.a, -self.cfg.a)
        y1 = _aperture_points(u1, c1, self.cfg)
        y2 = _aperture_points(u2, -c1, self.cfg)
        return np.stack([np.full(n, self.launch_x), y1, y2], axis=-1)

    def from_plane(self, y1, y2):
        return np.stack([np.full(len(y1), self.launch_x), y1, y2], axis=-1)


@dataclass
class SlabScenario:
    cfg: F.SlabConfig
    t_end: float | None = None
    dt: float = 2e-3

    name = "slab"
    dim = 1
    t0 = 0.0

    def __post_init__(self):
        if self.t_end is None:
            far = self.cfg.slab_end if math.isfinite(self.cfg.slab_end) else self.cfg.slab_start
            width = 0.0 if self.cfg.single_interface else self.cfg.width
            # packet fully past the far interface, plus time for the echo to leave
            self.t_end = (far - self.cfg.x0) + (self.cfg.n - 1.0) * width + 10.0 * math.sqrt(self.cfg.sigma0)
        self.field = SlabField(self.cfg)

    def integrator(self, **overrides) -> IntegratorConfig:
        steps = max(1, int(math.ceil(self.t_end / self.dt - 1e-9)))
        base = IntegratorConfig(dt=self.dt, max_steps=steps)
        return replace(base, **overrides)

    @property
    def launch_window(self):
        w = 8.0 * math.sqrt(self.cfg.sigma0)
        return self.cfg.x0 - w, self.cfg.x0 + w

    def launch_density(self, x):
        return self.field.density(np.asarray(x, dtype=float), self.t0)

    def from_slits(self, u):
        """'uniform' start for the slab: uniform over x0 +- 2 sqrt(sigma0)."""
        w = 2.0 * math.sqrt(self.cfg.sigma0)
        return (self.cfg.x0 + (2.0 * u - 1.0) * w)[:, None]

    def from_line(self, x):
        return np.asarray(x, dtype=float)[:, None]


def build_scenario(name: str, params: dict):
    """Scenario from a flat parameter dict (unknown keys are rejected)."""
    params = dict(params)
    if name in ("single-slit", "two-photon"):
        ds_keys = {"E0", "B0", "k", "d", "a", "D", "far_field_mode", "keep_inverse_r"}
        if "wavelength" in params:
            if "k" in params:
                raise ValueError("give either wavelength or k, not both")
            params["k"] = 2.0 * math.pi / params.pop("wavelength")
        sc_keys = {"launch_x", "screen_x", "dt", "max_steps"}
        unknown = set(params) - ds_keys - sc_keys
        if unknown:
            raise ValueError(f"unknown parameters for {name}: {sorted(unknown)}")
        cfg = F.DoubleSlitConfig(**{k: v for k, v in params.items() if k in ds_keys})
        cls = SingleSlitScenario if name == "single-slit" else TwoPhotonScenario
        return cls(cfg, **{k: v for k, v in params.items() if k in sc_keys})
    if name == "slab":
        slab_keys = {"E0", "sigma0", "x0", "n", "slab_start", "slab_end", "internal_reflections"}
        sc_keys = {"t_end", "dt"}
        unknown = set(params) - slab_keys - sc_keys
        if unknown:
            raise ValueError(f"unknown parameters for slab: {sorted(unknown)}")
        cfg = F.SlabConfig(**{k: v for k, v in params.items() if k in slab_keys})
        return SlabScenario(cfg, **{k: v for k, v in params.items() if k in sc_keys})
    raise ValueError(f"unknown scenario {name!r}")
