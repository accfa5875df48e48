"""One-dimensional cumulative distribution transform.

Densities are sampled on a uniform grid ``t`` and modelled as sums of
degree-zero B-splines (boxes of width ``r`` centered on the samples), so their
CDFs are piecewise linear with knots at the box edges and can be inverted
exactly.  The transport map ``f`` satisfies ``F_src(f(t)) = F_ref(t)``.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .gridio import t_grid

MASS_TOL = 1e-6
# CDF levels per grid sample; coarser level sets leave the map poorly resolved in the tails
LEVELS_PER_SAMPLE = 16


def _grid(n, t):
    if t is None:
        return t_grid(n), 1.0
    t = np.asarray(t, dtype=float)
    if t.shape != (n,):
        raise DomainError("grid and signal lengths differ")
    if n < 2:
        return t, 1.0
    step = np.diff(t)
    r = float(step.mean())
    if r <= 0 or not np.allclose(step, r, rtol=1e-9, atol=0.0):
        raise DomainError("grid must be uniform and increasing")
    return t, r


def _density(signal, name):
    c = np.asarray(signal, dtype=float)
    if c.ndim != 1 or c.size < 2:
        raise DomainError(f"{name} must be a 1D signal with at least 2 samples")
    if not np.all(np.isfinite(c)):
        raise DomainError(f"{name} has non-finite samples")
    if np.any(c <= 0):
        raise DomainError(f"{name} has nonpositive samples; the CDT needs a strictly positive density")
    return c


def cdf_knots(signal, t=None):
    """Return ``(edges, cdf)``: the piecewise-linear CDF of a sampled density.

    ``cdf`` is scaled to end exactly at 1.
    """
    c = np.asarray(signal, dtype=float)
    t, r = _grid(c.size, t)
    edges = np.concatenate([t - r / 2.0, [t[-1] + r / 2.0]])
    cdf = np.concatenate([[0.0], np.cumsum(c)])
    return edges, cdf / cdf[-1]


def evaluate_cdf(signal, x, t=None):
    edges, cdf = cdf_knots(signal, t)
    return np.interp(x, edges, cdf)


def _interp_extrapolate(x, xp, fp):
    # linear inside, end slopes continued outside
    y = np.interp(x, xp, fp)
    lo, hi = x < xp[0], x > xp[-1]
    if np.any(lo):
        y[lo] = fp[0] + (x[lo] - xp[0]) * (fp[1] - fp[0]) / (xp[1] - xp[0])
    if np.any(hi):
        y[hi] = fp[-1] + (x[hi] - xp[-1]) * (fp[-1] - fp[-2]) / (xp[-1] - xp[-2])
    return y


def _check_pair(src, ref, t):
    c = _density(src, "src")
    c0 = _density(ref, "ref")
    if c.size != c0.size:
        raise DomainError("src and ref must share one grid")
    t, r = _grid(c.size, t)
    for name, sig in (("src", c), ("ref", c0)):
        mass = sig.sum() * r
        if abs(mass - 1.0) > MASS_TOL:
            raise DomainError(f"{name} mass {mass!r} is not 1 within {MASS_TOL}")
    return c, c0, t, r


def quantile_pairs(src, ref, L: int | None = None, t=None, *, knots: bool = False):
    """Inverse CDFs of ``src`` and ``ref`` at common levels.

    Returns ``(tau_src, tau_ref)`` with ``F_src(tau_src[l]) = F_ref(tau_ref[l])
    = rho[l]``, ``rho = [0, 1/L, ..., 1]``.  With ``knots=True`` the levels of
    every CDF knot of both densities are added, which makes the piecewise
    linear interpolant through the pairs the exact transport map between the
    two box-spline densities.
    """
    c, c0, t, r = _check_pair(src, ref, t)
    k = c.size
    L = LEVELS_PER_SAMPLE * k if L is None else int(L)
    if L < k:
        raise DomainError(f"L={L} must be at least the number of samples {k}")
    levels = np.arange(L + 1) / L
    edges, cdf = cdf_knots(c, t)
    edges0, cdf0 = cdf_knots(c0, t)
    if knots:
        levels = np.union1d(levels, np.concatenate([cdf, cdf0]))
    return np.interp(levels, cdf, edges), np.interp(levels, cdf0, edges0)


def transport_map_1d(src, ref, L: int | None = None, t=None) -> np.ndarray:
    """Monotone map ``f`` on the grid with ``F_src(f(t_k)) = F_ref(t_k)``.

    Both CDFs are inverted at the levels ``l/L`` for ``l = 0..L``; the pairs
    ``f(tau_ref[l]) = tau_src[l]`` are then linearly interpolated onto the grid.

    Parameters
    ----------
    src, ref : 1D arrays
        Strictly positive unit-mass densities on the same grid.
    L : int, optional
        Number of CDF levels, at least the number of samples (default ``16K``).
    t : 1D array, optional
        Uniform sample positions; defaults to unit spacing centered on zero.
    """
    tau, tau0 = quantile_pairs(src, ref, L, t)
    return _interp_extrapolate(_grid(np.size(ref), t)[0], tau0, tau)


def wasserstein2_squared(src, ref, L: int | None = None, t=None) -> float:
    """Squared 2-Wasserstein distance between two box-spline densities.

    Integrates ``(f(t) - t)^2 ref(t)`` exactly: the map is built from
    knot-augmented levels, so on every piece of the common refinement of the
    box edges and the map knots ``f - t`` is linear and ``ref`` is constant.
    """
    tau, tau0 = quantile_pairs(src, ref, L, t, knots=True)
    c0 = np.asarray(ref, dtype=float)
    t, r = _grid(c0.size, t)
    edges = np.concatenate([t - r / 2.0, [t[-1] + r / 2.0]])
    pts = np.union1d(edges, tau0)
    disp = np.interp(pts, tau0, tau) - pts
    width = np.diff(pts)
    mid = 0.5 * (pts[1:] + pts[:-1])
    dens = c0[np.clip(np.searchsorted(edges, mid) - 1, 0, c0.size - 1)]
    d0, d1 = disp[:-1], disp[1:]
    return float(np.sum(dens * width * (d0 * d0 + d0 * d1 + d1 * d1)) / 3.0)


def cdt_forward_1d(src, ref, L: int | None = None, t=None) -> np.ndarray:
    """CDT of ``src`` against ``ref``: ``(f - t) * sqrt(ref)``."""
    t_used, _ = _grid(np.size(ref), t)
    f = transport_map_1d(src, ref, L, t)
    return (f - t_used) * np.sqrt(np.asarray(ref, dtype=float))


def _monotone(f):
    return np.maximum.accumulate(f)


def inverse_density(f, ref, t, r):
    """Push ``ref`` through the inverse of the monotone map ``f``.

    Returns ``(f^{-1})' * ref(f^{-1})`` on the grid ``t``, unit mass.
    """
    f = _monotone(f)
    finv = np.interp(t, f, t)
    deriv = np.clip(np.gradient(finv, r), 0.0, None)
    out = deriv * np.interp(finv, t, ref)
    mass = out.sum() * r
    if not mass > 0:
        raise DomainError("inverse transform produced no mass")
    return out / mass


def cdt_inverse_1d(transform, ref, t=None) -> np.ndarray:
    """Recover the density whose CDT against ``ref`` is ``transform``.

    The map is rebuilt as ``f = transform / sqrt(ref) + t``, made monotone with
    a running maximum, inverted by swapping axes and differentiated with
    central differences.
    """
    c0 = _density(ref, "ref")
    tr = np.asarray(transform, dtype=float)
    if tr.shape != c0.shape:
        raise DomainError("transform and ref must share one grid")
    t, r = _grid(c0.size, t)
    root = np.sqrt(c0)
    if np.any(root < np.finfo(float).tiny) or not np.all(np.isfinite(tr / root)):
        raise DomainError("sqrt(ref) underflows; cannot recover the transport map")
    return inverse_density(tr / root + t, c0, t, r)
