"""Pure numpy four-bar kernels (fallback for ``mechsyn._ckernels``).

Both kernels take

params : (n, 9) float array
    One mechanism per row: ``x0, y0, r1, r2, r3, r4, rcx, rcy, gamma``.
psi : (n, K) float array
    Crank angles per mechanism, radians, mechanism frame.

A state is infeasible when any link length is non-positive or the
coupler-angle discriminant is negative.
"""
import numpy as np


def _solve(params, psi):
    params = np.asarray(params, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    if params.ndim != 2 or params.shape[1] != 9:
        raise ValueError("params must have 9 columns")
    if psi.ndim != 2 or psi.shape[0] != params.shape[0]:
        raise ValueError("params and psi row counts differ")
    x0, y0, r1, r2, r3, r4, rcx, rcy, g = (params[:, j : j + 1] for j in range(9))
    lengths_ok = np.all(params[:, 2:6] > 0.0, axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        L3 = (r4**2 - r1**2 - r2**2 - r3**2) / (2.0 * r2 * r3)
        L2 = r1 / r3
        L1 = r1 / r2
        c = np.cos(psi)
        s = np.sin(psi)
        KA = c - L1 + L2 * c + L3
        KB = -2.0 * s
        KC = L1 + (L2 - 1.0) * c + L3
        disc = KB**2 - 4.0 * KA * KC
        root = np.sqrt(disc)
        ny, nx = -KB - root, 2.0 * KA
        cy, cx = 2.0 * KC, -KB + root
        # conjugate form of the same root when the direct one degenerates
        direct = ny**2 + nx**2 >= cy**2 + cx**2
        theta = 2.0 * np.where(direct, np.arctan2(ny, nx), np.arctan2(cy, cx))
        a = r2 * c + rcx * np.cos(theta) - rcy * np.sin(theta)
        b = r2 * s + rcx * np.sin(theta) + rcy * np.cos(theta)
        px = x0 + np.cos(g) * a - np.sin(g) * b
        py = y0 + np.sin(g) * a + np.cos(g) * b
    ok = lengths_ok & (disc >= 0.0) & np.isfinite(px) & np.isfinite(py)
    return px, py, theta, ok


def path_fob(params, psi, xd, yd, penalty):
    """Sum of squared coupler-point deviations per row; ``penalty`` if infeasible."""
    xd = np.asarray(xd, dtype=np.float64)
    yd = np.asarray(yd, dtype=np.float64)
    px, py, _, ok = _solve(params, psi)
    if xd.shape[0] != px.shape[1] or yd.shape[0] != px.shape[1]:
        raise ValueError("shape mismatch between params, psi and targets")
    with np.errstate(invalid="ignore", over="ignore"):
        fob = ((xd - px) ** 2 + (yd - py) ** 2).sum(axis=1)
    return np.where(ok.all(axis=1), fob, float(penalty))


def coupler_states(params, psi):
    """Coupler point, coupler angle and feasibility mask; NaN where infeasible."""
    px, py, theta, ok = _solve(params, psi)
    nan = np.nan
    return (
        np.where(ok, px, nan),
        np.where(ok, py, nan),
        np.where(ok, theta, nan),
        ok,
    )
