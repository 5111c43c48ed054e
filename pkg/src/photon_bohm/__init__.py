"""Bohmian photon trajectories in the Kemmer-Duffin-Petiau / Harish-Chandra formalism."""

__version__ = "0.1.0"

from .kdp import BetaSet, build_spin1_betas, check_kdp_algebra, default_betas  # noqa: E402
