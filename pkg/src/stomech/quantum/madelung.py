"""Madelung fields: density, phase action, forward drift, quantum potential.

Conventions. For psi = sqrt(rho) exp(iS/hbar) the forward drift is

    b = (1/m) dS/dx + (hbar/2m) dlog(rho)/dx

and the quantum potential is Q = (hbar^2/2m) (sqrt(rho))'' / sqrt(rho).
Both are grid fields with a validity mask: points where rho falls below
eps = NODE_EPS_REL * max(rho) are nodes. On masked-out points the drift is
replaced by a finite repulsive value of magnitude B_MAX directed toward
increasing density, never interpolated across the node. S is unwrapped per
connected mask segment and is meaningful only up to a constant per segment.
"""

from dataclasses import dataclass

import numpy as np

from ..constants import B_MAX, NODE_EPS_REL
from .grid import deriv1, masked_deriv, segments


@dataclass
class MadelungPair:
    x: np.ndarray
    dx: float
    rho: np.ndarray
    S: np.ndarray
    mask: np.ndarray
    hbar: float
    m: float


@dataclass
class DriftField:
    x: np.ndarray
    dx: float
    b: np.ndarray
    mask: np.ndarray


def valid_mask(rho: np.ndarray) -> np.ndarray:
    return rho > NODE_EPS_REL * float(np.max(rho))


def madelung_split(psi: np.ndarray, x: np.ndarray, dx: float, hbar: float = 1.0, m: float = 1.0) -> MadelungPair:
    """rho = |psi|^2 and S = hbar * unwrapped phase, per mask segment.

    The phase is unwrapped independently on each connected run of valid
    density; across a node S stays undefined (mask False) rather than being
    stitched, since only its gradient within a segment is physical.
    """
    psi = np.asarray(psi)
    rho = np.abs(psi) ** 2
    mask = valid_mask(rho)
    S = np.zeros_like(rho)
    for sl in segments(mask):
        S[sl] = hbar * np.unwrap(np.angle(psi[sl]))
    return MadelungPair(x=np.asarray(x), dx=dx, rho=rho, S=S, mask=mask, hbar=hbar, m=m)


def _repulsive_fill(b: np.ndarray, rho: np.ndarray, dx: float, mask: np.ndarray) -> None:
    """Fill masked-out points with +-B_MAX pointing toward higher density."""
    if mask.all():
        return
    grad = np.gradient(rho, dx)
    bad = ~mask
    b[bad] = B_MAX * np.sign(grad[bad])


def nelson_drift(pair: MadelungPair, m: float | None = None, hbar: float | None = None) -> DriftField:
    """Forward drift on the valid mask; repulsive clamp elsewhere.

    The magnitude is capped at B_MAX everywhere so that near-node stencil
    blowups cannot produce non-finite integrator steps.
    """
    m = pair.m if m is None else m
    hbar = pair.hbar if hbar is None else hbar
    dS, ok_s = masked_deriv(pair.S, pair.dx, pair.mask, order=1)
    log_rho = np.where(pair.mask, np.log(np.maximum(pair.rho, 1e-300)), 0.0)
    dlog, ok_r = masked_deriv(log_rho, pair.dx, pair.mask, order=1)
    ok = ok_s & ok_r
    b = dS / m + (hbar / (2.0 * m)) * dlog
    b[~ok] = 0.0
    _repulsive_fill(b, pair.rho, pair.dx, ok)
    np.clip(b, -B_MAX, B_MAX, out=b)
    return DriftField(x=pair.x, dx=pair.dx, b=b, mask=ok)


def quantum_potential(rho: np.ndarray, dx: float, m: float = 1.0, hbar: float = 1.0):
    """Q = (hbar^2/2m) (sqrt(rho))''/sqrt(rho) on the valid mask.

    Returns (Q, mask); Q is 0 outside the mask.
    """
    rho = np.asarray(rho)
    mask = valid_mask(rho)
    root = np.sqrt(np.maximum(rho, 0.0))
    d2, ok = masked_deriv(root, dx, mask, order=2)
    Q = np.zeros_like(rho)
    Q[ok] = (hbar * hbar / (2.0 * m)) * d2[ok] / root[ok]
    return Q, ok


def drift_from_psi(psi: np.ndarray, dx: float, m: float = 1.0, hbar: float = 1.0, axis: int = -1):
    """Forward drift component along `axis` directly from psi.

    Uses b = (hbar/m) (Re + Im)(d(psi)/psi), which equals the Madelung form
    wherever rho > 0 and needs no phase unwrapping, so it extends to 2-D
    states. Masked points get the repulsive clamp along this axis.
    Returns (b, mask).
    """
    psi = np.asarray(psi)
    rho = np.abs(psi) ** 2
    mask = valid_mask(rho)
    dpsi = deriv1(psi, dx, axis=axis)
    ratio = np.zeros_like(rho)
    ratio[mask] = (dpsi[mask] / psi[mask]).real + (dpsi[mask] / psi[mask]).imag
    b = (hbar / m) * ratio
    if not mask.all():
        grad = np.gradient(rho, dx, axis=axis)
        bad = ~mask
        b[bad] = B_MAX * np.sign(grad[bad])
    np.clip(b, -B_MAX, B_MAX, out=b)
    return b, mask


def continuity_residual(pair_t0: MadelungPair, pair_t1: MadelungPair, dt: float) -> np.ndarray:
    """d(rho)/dt + d(rho * v)/dx with v = (1/m) dS/dx, centered in t at t0+dt/2.

    Diagnostic for oracle outputs; meaningful on the joint valid mask.
    """
    rho_mid = 0.5 * (pair_t0.rho + pair_t1.rho)
    S_mid = 0.5 * (pair_t0.S + pair_t1.S)
    mask = pair_t0.mask & pair_t1.mask
    dS, ok = masked_deriv(S_mid, pair_t0.dx, mask, order=1)
    flux = rho_mid * dS / pair_t0.m
    dflux, ok2 = masked_deriv(flux, pair_t0.dx, ok, order=1)
    drho_dt = (pair_t1.rho - pair_t0.rho) / dt
    out = np.where(ok & ok2, drho_dt + dflux, 0.0)
    return out
