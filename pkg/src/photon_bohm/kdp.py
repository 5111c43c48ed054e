"""Spin-1 Kemmer-Duffin-Petiau matrices, the Harish-Chandra projector and
the bilinear currents built from them.

Component layout of a ten-component spinor::

    0..2  -D_x, -D_y, -D_z      electric block
    3..5   B_x,  B_y,  B_z      magnetic block
    6..9   A_0,  A_1,  A_2, A_3 potential block (zero after projection)

The matrices are the first-order Proca system written in this basis.  All
normalisation constants (m0 c^2, hbar, c) are set to one.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])

# antisymmetric index pairs of the field tensor, in slot order 0..5
_PAIRS = ((0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2))
N_COMPONENTS = 10
PHYSICAL = slice(0, 6)
ALGEBRA_TOL = 1e-12
SPECTRUM_TOL = 1e-10


class AlgebraError(RuntimeError):
    """Raised when a constructed matrix set breaks one of its identities."""


def _pair_slot(m, n):
    for slot, (a, b) in enumerate(_PAIRS):
        if (a, b) == (m, n):
            return slot, 1.0
        if (b, a) == (m, n):
            return slot, -1.0
    return None, 0.0


def _proca_beta(lam):
    # (beta^lam psi)_{F_mn} = delta^lam_m A_n - delta^lam_n A_m
    # (beta^lam psi)_{A_n}   = g^{lam lam} F_{lam n}
    m = np.zeros((N_COMPONENTS, N_COMPONENTS))
    for slot, (a, b) in enumerate(_PAIRS):
        if a == lam:
            m[slot, 6 + b] += 1.0
        if b == lam:
            m[slot, 6 + a] -= 1.0
    for n in range(4):
        slot, sign = _pair_slot(lam, n)
        if slot is not None:
            m[6 + n, slot] += METRIC[lam, lam] * sign
    return m


@dataclass(frozen=True, eq=False)
class BetaSet:
    """The four beta matrices, the projector Gamma and derived operators.

    ``tilde_beta[i]`` is ``beta[0] @ beta[i+1] - beta[i+1] @ beta[0]``; the
    velocity operator is ``c * tilde_beta``.  ``eta`` is ``2 beta_0^2 - 1``,
    the metric that turns psi^dagger into psi-bar.
    """

    beta: np.ndarray
    gamma: np.ndarray
    metric: np.ndarray = field(default_factory=lambda: METRIC.copy())

    def __post_init__(self):
        for arr in (self.beta, self.gamma, self.metric):
            arr.setflags(write=False)

    @property
    def tilde_beta(self):
        b0 = self.beta[0]
        out = np.stack([b0 @ self.beta[i] - self.beta[i] @ b0 for i in (1, 2, 3)])
        out.setflags(write=False)
        return out

    @property
    def eta(self):
        return 2.0 * self.beta[0] @ self.beta[0] - np.eye(N_COMPONENTS)

    @cached_property
    def currents(self):
        return CurrentEvaluator(self)

    def projected_velocity_ops(self):
        """Gamma beta~_i Gamma for i = 1..3, shape (3, 10, 10)."""
        g = self.gamma
        return np.stack([g @ bt @ g for bt in self.tilde_beta])


def algebra_residuals(b: BetaSet) -> dict:
    """Largest residual of each defining identity.

    Keys: ``kdp`` (max over the 64 triples), ``kdp_worst_triple``,
    ``gamma_idempotent``, ``gamma_anticommutator`` and ``spectrum`` (distance
    of the eigenvalues of each beta~_i from {-1, 0, +1}).
    """
    g = b.metric
    worst, worst_triple = 0.0, (0, 0, 0)
    for mu, nu, lam in itertools.product(range(4), repeat=3):
        lhs = b.beta[mu] @ b.beta[nu] @ b.beta[lam] + b.beta[lam] @ b.beta[nu] @ b.beta[mu]
        rhs = b.beta[mu] * g[nu, lam] + b.beta[lam] * g[nu, mu]
        r = float(np.abs(lhs - rhs).max())
        if r > worst:
            worst, worst_triple = r, (mu, nu, lam)
    idem = float(np.abs(b.gamma @ b.gamma - b.gamma).max())
    anti = max(
        float(np.abs(b.gamma @ bm + bm @ b.gamma - bm).max()) for bm in b.beta
    )
    spec = 0.0
    for bt in b.tilde_beta:
        ev = np.linalg.eigvals(bt)
        dist = np.min(np.abs(ev[:, None] - np.array([-1.0, 0.0, 1.0])[None, :]), axis=1)
        spec = max(spec, float(dist.max()))
    return {
        "kdp": worst,
        "kdp_worst_triple": worst_triple,
        "gamma_idempotent": idem,
        "gamma_anticommutator": anti,
        "spectrum": spec,
    }


def check_kdp_algebra(b: BetaSet) -> float:
    """Max elementwise residual of the trilinear beta identity over all 64 triples."""
    return algebra_residuals(b)["kdp"]


def build_spin1_betas() -> BetaSet:
    """Construct the 10x10 spin-1 representation and verify it.

    The field block is negated relative to the textbook Proca ordering so that
    a projected photon state reads (-D, B, 0, 0, 0, 0); with this choice
    d/dt (Gamma psi) = -beta~_i d_i (Gamma psi) is Ampere's and Faraday's law.
    """
    flip = np.diag([-1.0] * 6 + [1.0] * 4)
    beta = np.stack([flip @ _proca_beta(lam) @ flip for lam in range(4)])
    gamma = np.diag([1.0] * 6 + [0.0] * 4)
    b = BetaSet(beta=beta, gamma=gamma)
    res = algebra_residuals(b)
    if res["kdp"] >= ALGEBRA_TOL:
        raise AlgebraError(
            f"beta identity residual {res['kdp']:.3e} at triple {res['kdp_worst_triple']}"
        )
    for key in ("gamma_idempotent", "gamma_anticommutator"):
        if res[key] >= ALGEBRA_TOL:
            raise AlgebraError(f"{key} residual {res[key]:.3e}")
    if res["spectrum"] >= SPECTRUM_TOL:
        raise AlgebraError(f"beta~ spectrum off {{-1,0,1}} by {res['spectrum']:.3e}")
    return b


_DEFAULT = None


def default_betas() -> BetaSet:
    """Module-level shared instance (immutable, safe to share)."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = build_spin1_betas()
    return _DEFAULT


# --------------------------------------------------------------------------
# spinor helpers

def photon_spinor(D, B):
    """Pack field vectors of shape (..., 3) into spinors of shape (..., 10)."""
    D = np.asarray(D)
    B = np.asarray(B)
    dtype = np.result_type(D, B, np.float64)
    shape = np.broadcast_shapes(D.shape, B.shape)[:-1]
    psi = np.zeros(shape + (N_COMPONENTS,), dtype=dtype)
    psi[..., 0:3] = -D
    psi[..., 3:6] = B
    return psi


def spinor_fields(psi):
    """Inverse of :func:`photon_spinor`: returns (D, B)."""
    psi = np.asarray(psi)
    return -psi[..., 0:3], psi[..., 3:6]


def project(psi, b: BetaSet):
    return np.einsum("ab,...b->...a", b.gamma, psi)


class _SparseForm:
    """Re(psi^dagger M psi) for a fixed real matrix M, summed over its nonzeros only.

    Takes component-major real and imaginary parts; elementwise evaluation
    keeps results independent of batch shape.
    """

    def __init__(self, matrix):
        rows, cols = np.nonzero(np.abs(matrix) > 0)
        self.terms = [(int(r), int(c), float(matrix[r, c])) for r, c in zip(rows, cols)]

    def __call__(self, re, im, active=None):
        out = np.zeros(re.shape[1:])
        for r, c, val in self.terms:
            if active is not None and (r not in active or c not in active):
                continue
            out += val * (re[r] * re[c] + im[r] * im[c])
        return out


class CurrentEvaluator:
    """Precomputed sparse forms for density and flux of projected spinors."""

    def __init__(self, b: BetaSet):
        self.density_form = _SparseForm(b.gamma)
        self.flux_forms = [_SparseForm(m) for m in b.projected_velocity_ops()]

    def __call__(self, psi):
        psi = np.moveaxis(np.asarray(psi), -1, 0)
        re = np.ascontiguousarray(psi.real)
        im = np.ascontiguousarray(psi.imag) if np.iscomplexobj(psi) else np.zeros_like(re)
        return self.components(re, im)

    def components(self, re, im, active=None):
        """Density and flux from component-major parts of shape (10, ...).

        ``active`` lists the only slots that may be nonzero; terms touching
        other slots are skipped.
        """
        density = self.density_form(re, im, active)
        flux = np.stack([f(re, im, active) for f in self.flux_forms], axis=-1)
        return density, flux


def massless_current(psi, b: BetaSet, check: bool = True):
    """Density psi^dagger Gamma psi and flux Re(psi^dagger Gamma beta~_i Gamma psi).

    ``psi`` may carry leading batch dimensions.  With ``check`` the potential
    block must vanish (|psi_6..9| < 1e-12), otherwise ValueError.
    """
    psi = np.asarray(psi)
    if psi.shape[-1] != N_COMPONENTS:
        raise ValueError(f"expected trailing dimension 10, got {psi.shape}")
    if check and psi[..., 6:].any():
        leak = np.abs(psi[..., 6:]).max()
        if leak >= 1e-12:
            raise ValueError(f"spinor is not Gamma-projected: |psi[6:]| = {leak:.3e}")
    return b.currents(psi)


def charge_current(psi, b: BetaSet):
    """j_mu = psi^T beta_mu psi with the plain transpose (no conjugation).

    For projected spinors this vanishes identically: every beta_mu maps the
    field block into the potential block.
    """
    psi = np.asarray(psi)
    return np.einsum("...a,mab,...b->...m", psi, b.beta, psi)


def _tensor_ops(b: BetaSet):
    # eta T_mu Gamma, T_mu = beta_mu beta_0 + beta_0 beta_mu - g_mu0.
    # On projected states eta T_0 Gamma = Gamma and eta T_i Gamma = Gamma beta~_i Gamma.
    g = b.metric
    ops = []
    for mu in range(4):
        t = b.beta[mu] @ b.beta[0] + b.beta[0] @ b.beta[mu] - g[mu, 0] * np.eye(N_COMPONENTS)
        ops.append(b.eta @ t @ b.gamma)
    return np.stack(ops)


def two_photon_tensor_current(Psi, b: BetaSet):
    """Rank-2 current s^{mu nu} of a two-photon amplitude, observer at rest.

    ``Psi`` has shape (..., 10, 10); axis -2 is particle 1, axis -1 particle 2.
    Uses psi-bar = psi^dagger (eta x eta).  Spatial indices are signed so that
    s^{00} is the joint density and s^{i0}/s^{00}, s^{0i}/s^{00} are the
    velocities of particle 1 and particle 2.  A product state gives
    s^{mu nu} = s^mu(a) s^nu(b) with s^mu = (density, flux).
    """
    ops = _tensor_ops(b)
    Psi = np.asarray(Psi)
    right = np.einsum("mac,nbd,...cd->...mnab", ops, ops, Psi)
    return np.real(np.einsum("...ab,...mnab->...mn", np.conj(Psi), right))


def product_tensor_current(coeffs, U, W, b: BetaSet):
    """Tensor current of Psi = sum_k coeffs_k U_k (x) W_k without forming Psi.

    ``U`` and ``W`` are real spinors of shape (..., K, 10) for particle 1 and
    particle 2, ``coeffs`` complex of shape (..., K).  Equals
    :func:`two_photon_tensor_current` of the assembled amplitude.
    """
    ops = _tensor_ops(b)
    bil1 = np.einsum("...ka,mab,...lb->...mkl", U, ops, U)
    bil2 = np.einsum("...ka,mab,...lb->...mkl", W, ops, W)
    cc = np.conj(coeffs)[..., :, None] * coeffs[..., None, :]
    return np.real(np.einsum("...kl,...mkl,...nkl->...mn", cc, bil1, bil2))


# --------------------------------------------------------------------------
# field equations

def schrodinger_rhs(grad_psi, b: BetaSet):
    """Predicted time derivative -sum_i beta~_i d_i psi; ``grad_psi`` is (..., 3, 10)."""
    return -np.einsum("iab,...ib->...a", b.tilde_beta, grad_psi)


def constraint_derivative(grad_psi, b: BetaSet):
    """sum_i beta_i beta_0^2 d_i psi, the derivative part of the constraint.

    Slot 6 (A_0) of the result carries div D; slots 3..5 carry curl of the
    potential block.
    """
    b00 = b.beta[0] @ b.beta[0]
    ops = np.stack([b.beta[i] @ b00 for i in (1, 2, 3)])
    return np.einsum("iab,...ib->...a", ops, grad_psi)
