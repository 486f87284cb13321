"""Surface tension matrices and the quadratic form they induce.

A valid matrix sigma is symmetric with zero diagonal, positive off-diagonal
entries, strict triangle inequalities, and is conditionally negative definite:
xi . sigma xi <= -c |xi|^2 for every zero-sum vector xi and some c > 0.  The
largest admissible c is certified spectrally: project sigma onto the zero-sum
subspace with an orthonormal basis B and take the negative of the largest
eigenvalue of B^T sigma B.  The induced cellwise norm on zero-sum phase
vectors is |xi|_sigma^2 = -xi . sigma xi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ValidationError

TRIANGLE_SLACK = 1e-12


@dataclass(frozen=True)
class SurfaceTensionMatrix:
    """Validated tension matrix with its negativity constant."""

    entries: np.ndarray
    sigma_lower_bound: float

    @property
    def phase_count(self):
        return self.entries.shape[0]

    @property
    def operator_norm(self):
        return float(np.linalg.norm(self.entries, 2))

    def apply(self, fields):
        """Contract the phase index: (sigma @ u)_i = sum_j sigma_ij u_j."""
        return np.tensordot(self.entries, fields, axes=(1, 0))


def _zero_sum_basis(P):
    return scipy.linalg.null_space(np.ones((1, P)))


def sigma_rejections(entries):
    """All reasons the candidate matrix fails, naming offending indices."""
    entries = np.asarray(entries, dtype=np.float64)
    reasons = []
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        return [f"matrix must be square, got shape {entries.shape}"]
    P = entries.shape[0]
    if P < 2:
        return [f"need at least 2 phases, got {P}"]
    if not np.allclose(entries, entries.T, rtol=0.0, atol=0.0):
        bad = divmod(int(np.abs(entries - entries.T).argmax()), P)
        reasons.append(f"not symmetric at pair {bad}: {entries[bad]} vs {entries[bad[::-1]]}")
    diag = np.diagonal(entries)
    for i in np.flatnonzero(diag != 0.0):
        reasons.append(f"nonzero diagonal at index {int(i)}: {diag[i]}")
    for i in range(P):
        for j in range(i + 1, P):
            if not entries[i, j] > 0.0:
                reasons.append(f"off-diagonal entry ({i},{j}) not positive: {entries[i, j]}")
    for i in range(P):
        for j in range(i + 1, P):
            for k in range(P):
                if k in (i, j):
                    continue
                if entries[i, j] >= entries[i, k] + entries[k, j] - TRIANGLE_SLACK:
                    reasons.append(
                        f"triangle inequality fails strictly for ({i},{j},{k}): "
                        f"sigma[{i},{j}]={entries[i, j]} >= "
                        f"sigma[{i},{k}]+sigma[{k},{j}]={entries[i, k] + entries[k, j]}"
                    )
    if not reasons:
        B = _zero_sum_basis(P)
        lam_max = float(np.linalg.eigvalsh(B.T @ entries @ B).max())
        if lam_max >= 0.0:
            reasons.append(
                f"not conditionally negative definite: largest projected eigenvalue {lam_max}"
            )
    return reasons


def validate_sigma(entries):
    """Return a SurfaceTensionMatrix or raise with every rejection reason."""
    entries = np.asarray(entries, dtype=np.float64)
    reasons = sigma_rejections(entries)
    if reasons:
        raise ValidationError(
            "surface tension matrix rejected: " + "; ".join(reasons), reasons=reasons
        )
    B = _zero_sum_basis(entries.shape[0])
    lam_max = float(np.linalg.eigvalsh(B.T @ entries @ B).max())
    return SurfaceTensionMatrix(entries=entries.copy(), sigma_lower_bound=-lam_max)


def uniform_sigma(phase_count):
    """sigma_ij = 1 - delta_ij; its negativity constant is exactly 1."""
    entries = np.ones((phase_count, phase_count)) - np.eye(phase_count)
    return validate_sigma(entries)


def read_shockley_sigma(theta_deg, theta_max_deg=15.0, sigma_max=1.0):
    """Misorientation-dependent tensions from per-phase orientations.

    Standard low-angle form sigma(t) = sigma_max * (t/t_max)(1 - log(t/t_max))
    capped at sigma_max; offered as a preset only and passed through the same
    validation as any user matrix (coincident orientations are rejected there).
    """
    theta = np.asarray(theta_deg, dtype=np.float64)
    P = theta.size
    entries = np.zeros((P, P))
    for i in range(P):
        for j in range(P):
            if i == j:
                continue
            t = abs(theta[i] - theta[j]) / theta_max_deg
            if t >= 1.0:
                entries[i, j] = sigma_max
            elif t > 0.0:
                entries[i, j] = sigma_max * t * (1.0 - math.log(t))
    return validate_sigma(entries)


def sigma_preset(name, phase_count=None, theta_deg=None):
    if name == "uniform":
        if phase_count is None:
            raise ValidationError("uniform preset needs a phase count")
        return uniform_sigma(phase_count)
    if name in ("read-shockley", "read_shockley"):
        if theta_deg is None:
            raise ValidationError("read-shockley preset needs an orientation list")
        return read_shockley_sigma(theta_deg)
    raise ValidationError(f"unknown sigma preset {name!r}")


def sigma_norm_sq_density(fields, sigma):
    """Pointwise |xi|_sigma^2 = -xi . sigma xi, without the zero-sum check."""
    mixed = sigma.apply(fields)
    return -(fields * mixed).sum(axis=0)


def sigma_norm_sq(xi, sigma, zero_sum_tol=1e-8):
    """Pointwise squared sigma-norm of a zero-sum phase vector field."""
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape[0] != sigma.phase_count:
        raise ValidationError(
            f"field has {xi.shape[0]} phases, sigma has {sigma.phase_count}"
        )
    gap = np.abs(xi.sum(axis=0)).max()
    if gap > zero_sum_tol:
        raise ValidationError(f"field is not zero-sum: max |sum xi| = {gap:.3e}")
    return sigma_norm_sq_density(xi, sigma)
