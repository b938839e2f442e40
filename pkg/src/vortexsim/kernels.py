"""Flat-torus geometry and spectral evaluation of the Green function and
Biot-Savart kernel, plus their radially blended smoothed variants.

The Green function is the zero-mean solution of ``Laplace G = delta - 1``
truncated to Fourier modes ``0 < |k| <= k_max``:

    G(r) = Re sum_k exp(2 pi i k.r) / (-4 pi^2 |k|^2),

so ``G(r) ~ log(d)/(2 pi) + O(1)`` near the diagonal and the kernel
``K = (d2 G, -d1 G)`` is exactly divergence-free.  All kernels take the
minimum-image separation ``r = x - y`` wrapped to [-1/2, 1/2)^2; they are
band-limited trig polynomials, hence smooth everywhere, and evaluation is a
pair of small complex matrix products per batch (no interpolation tables,
no approximation beyond the spectral cutoff itself).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .state import VortexEnsemble

__all__ = [
    "KernelConfig",
    "wrap",
    "torus_delta",
    "torus_distance",
    "green_function",
    "biot_savart",
    "smoothed_green",
    "smoothed_biot_savart",
    "velocity_at",
    "velocity_field",
    "finite_difference_biot_savart",
    "lattice_log_sum",
    "kernel_check_sweep",
]


def wrap(x: np.ndarray) -> np.ndarray:
    """Map coordinates to the fundamental domain [0, 1)^2.

    Guards the rounding edge where mod of a tiny negative lands on 1.0 exactly.
    """
    w = np.mod(np.asarray(x, dtype=float), 1.0)
    return np.where(w == 1.0, 0.0, w)


def torus_delta(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Minimum-image separation x - y, componentwise in [-1/2, 1/2].

    Implemented as s - rint(s), which is exactly odd in floating point, so
    swapping the arguments negates the result bit for bit.
    """
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return d - np.rint(d)


def torus_distance(x: np.ndarray, y: np.ndarray) -> np.ndarray | float:
    """Geodesic distance on the torus; at most sqrt(2)/2."""
    d = torus_delta(x, y)
    out = np.sqrt(np.sum(d * d, axis=-1))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class KernelConfig:
    """Spectral cutoff, smoothing radius and image count for the lattice check."""

    k_max: int = 64
    reg_delta: float = 1e-3
    lattice_radius: int = 8

    def __post_init__(self) -> None:
        if self.k_max < 8:
            raise ValueError("k_max must be >= 8")
        if not 0 < self.reg_delta < 0.5:
            raise ValueError("reg_delta must lie in (0, 0.5)")
        if self.lattice_radius < 1:
            raise ValueError("lattice_radius must be >= 1")

    @cached_property
    def _table(self) -> "_ModeTable":
        return _ModeTable(self.k_max)

    @cached_property
    def green_sup(self) -> float:
        """Upper bound for the smoothed Green function over the torus.

        Sampled on a 128x128 grid plus the smoothed near field; a small pad
        keeps it a strict upper bound, which is all the Lyapunov offset needs.
        """
        ax = np.arange(128) / 128.0
        pts = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)
        origin = np.zeros(2)
        d = torus_distance(pts, origin)
        far = d >= self.reg_delta
        vals = _eval_green(torus_delta(pts[far], origin), self._table)
        near = _eval_green(
            np.array([[self.reg_delta / 2, 0.0], [0.0, self.reg_delta / 2]]), self._table
        )
        return float(max(vals.max(), near.max())) + 0.05


class _ModeTable:
    """Precomputed mode axis and spectral weights for one cutoff."""

    def __init__(self, k_max: int):
        self.k_max = k_max
        self.axis = np.arange(-k_max, k_max + 1)
        k1 = self.axis[:, None]
        k2 = self.axis[None, :]
        ksq = k1 * k1 + k2 * k2
        self.mask = (ksq > 0) & (ksq <= k_max * k_max)
        with np.errstate(divide="ignore"):
            inv = np.where(self.mask, 1.0 / np.where(ksq == 0, 1, ksq), 0.0)
        # G_hat = -1 / (4 pi^2 |k|^2); K = (d2 G, -d1 G).
        self.w_green = (-inv / (4 * np.pi**2)).astype(complex)
        wk1 = 2j * np.pi * k2 * self.w_green
        wk2 = -2j * np.pi * k1 * self.w_green
        self.w_biot = np.hstack([wk1, wk2])  # (L, 2L)

    def phases(self, coords: np.ndarray) -> np.ndarray:
        """exp(2 pi i * coords x axis) with coords of shape (n,)."""
        return np.exp(2j * np.pi * np.multiply.outer(coords, self.axis))


def _eval_green(r: np.ndarray, table: _ModeTable) -> np.ndarray:
    """G at separations r of shape (..., 2)."""
    r = np.atleast_2d(np.asarray(r, dtype=float))
    e1 = table.phases(r[..., 0])
    e2 = table.phases(r[..., 1])
    return np.real(np.einsum("...a,ab,...b->...", e1, table.w_green, e2))


def _eval_biot(r: np.ndarray, table: _ModeTable) -> np.ndarray:
    """K at separations r of shape (..., 2); returns shape (..., 2)."""
    r = np.atleast_2d(np.asarray(r, dtype=float))
    e1 = table.phases(r[..., 0])
    e2 = table.phases(r[..., 1])
    t = e1 @ table.w_biot  # (..., 2L)
    L = table.axis.size
    u1 = np.real(np.sum(t[..., :L] * e2, axis=-1))
    u2 = np.real(np.sum(t[..., L:] * e2, axis=-1))
    return np.stack([u1, u2], axis=-1)


def _canonical(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orient separations so that (x, y) and (y, x) share one evaluation point.

    Returns the oriented separations and the sign to apply to odd kernels;
    this is what makes antisymmetry of the Biot-Savart kernel bit-exact.
    """
    r = np.atleast_2d(r)
    flip = (r[..., 0] < 0) | ((r[..., 0] == 0) & (r[..., 1] < 0))
    sign = np.where(flip, -1.0, 1.0)
    return r * sign[..., None], sign


def _separation(x, y, require_distinct: bool):
    r = torus_delta(x, y)
    scalar = r.ndim == 1
    r = np.atleast_2d(r)
    d = np.sqrt(np.sum(r * r, axis=-1))
    if require_distinct and np.any(d == 0):
        raise ValueError("singular evaluation: coincident torus points")
    return r, d, scalar


def green_function(x, y, cfg: KernelConfig) -> float | np.ndarray:
    """Zero-mean spectral Green function; even in x - y."""
    r, _, scalar = _separation(x, y, require_distinct=True)
    rc, _ = _canonical(r)
    out = _eval_green(rc, cfg._table)
    return float(out[0]) if scalar else out


def biot_savart(x, y, cfg: KernelConfig) -> np.ndarray:
    """Biot-Savart kernel K(x, y); exactly antisymmetric under swapping x, y."""
    r, _, scalar = _separation(x, y, require_distinct=True)
    rc, sign = _canonical(r)
    out = _eval_biot(rc, cfg._table) * sign[..., None]
    return out[0] if scalar else out


def _blended_distance(d: np.ndarray, delta: float) -> np.ndarray:
    """C^1 radial blend: identity for d >= delta, delta/2 + d^2/(2 delta) inside."""
    return np.where(d >= delta, d, delta / 2 + d * d / (2 * delta))


def _smooth_separation(r: np.ndarray, d: np.ndarray, delta: float) -> np.ndarray:
    """Rescale separations inside the delta-ball so |r| becomes the blend value."""
    safe = np.where(d > 0, d, 1.0)
    scale = np.where(d >= delta, 1.0, _blended_distance(d, delta) / safe)
    out = r * scale[..., None]
    # Direction is undefined at r = 0; park the evaluation at distance delta/2.
    at_zero = d == 0
    if np.any(at_zero):
        out[at_zero] = np.array([delta / 2, 0.0])
    return out


def smoothed_green(x, y, cfg: KernelConfig) -> float | np.ndarray:
    """Green function with the near-diagonal radial blend; defined everywhere."""
    r, d, scalar = _separation(x, y, require_distinct=False)
    rc, _ = _canonical(r)
    out = _eval_green(_smooth_separation(rc, d, cfg.reg_delta), cfg._table)
    return float(out[0]) if scalar else out


def smoothed_biot_savart(x, y, cfg: KernelConfig) -> np.ndarray:
    """Blended Biot-Savart kernel; vanishes at coincident points."""
    r, d, scalar = _separation(x, y, require_distinct=False)
    rc, sign = _canonical(r)
    out = _eval_biot(_smooth_separation(rc, d, cfg.reg_delta), cfg._table)
    out *= sign[..., None]
    out[d == 0] = 0.0
    return out[0] if scalar else out


def velocity_at(
    sources: np.ndarray,
    weights: np.ndarray,
    eval_points: np.ndarray,
    cfg: KernelConfig,
    smoothed: bool = True,
) -> np.ndarray:
    """Velocity sum_j w_j K(x, s_j) at each eval point, via one mode aggregation.

    The aggregation runs over the truncated kernel, which costs
    O((n + p) k_max^2) instead of O(n p k_max^2); since the truncated kernel
    is odd, a source contributes nothing at its own location.  Pairs closer
    than ``reg_delta`` are then corrected to the smoothed kernel.
    """
    sources = np.atleast_2d(np.asarray(sources, dtype=float))
    eval_points = np.atleast_2d(np.asarray(eval_points, dtype=float))
    weights = np.asarray(weights, dtype=float).reshape(-1)
    table = cfg._table
    L = table.axis.size
    if sources.shape[0] == 0 or eval_points.shape[0] == 0:
        return np.zeros((eval_points.shape[0], 2))

    if sources.shape[0] == 2 and eval_points is sources:
        # Hot path for the two-vortex system: one antisymmetric kernel value.
        r = torus_delta(sources[0], sources[1])
        d = float(np.hypot(r[0], r[1]))
        if smoothed and d < cfg.reg_delta:
            r = _smooth_separation(r[None, :], np.array([d]), cfg.reg_delta)[0]
            if d == 0.0:
                return np.zeros((2, 2))
        k = _eval_biot(r, table)[0]
        return np.stack([weights[1] * k, weights[0] * -k])

    es1 = table.phases(-sources[:, 0])
    es2 = table.phases(-sources[:, 1])
    amp = (weights[:, None] * es1).T @ es2  # omega_hat over the mode square
    u_hat = table.w_biot * np.hstack([amp, amp])
    same = eval_points is sources or (
        eval_points.shape == sources.shape and np.array_equal(eval_points, sources)
    )
    ex1 = np.conj(es1) if same else table.phases(eval_points[:, 0])
    ex2 = np.conj(es2) if same else table.phases(eval_points[:, 1])
    t = ex1 @ u_hat
    out = np.stack(
        [
            np.real(np.sum(t[:, :L] * ex2, axis=-1)),
            np.real(np.sum(t[:, L:] * ex2, axis=-1)),
        ],
        axis=-1,
    )

    if smoothed:
        r = torus_delta(eval_points[:, None, :], sources[None, :, :])
        d = np.sqrt(np.sum(r * r, axis=-1))
        close = (d < cfg.reg_delta) & (d > 0)
        if np.any(close):
            ip, js = np.nonzero(close)
            rr = r[ip, js]
            kd = _eval_biot(_smooth_separation(rr, d[ip, js], cfg.reg_delta), table)
            k0 = _eval_biot(rr, table)
            np.add.at(out, ip, weights[js, None] * (kd - k0))
    return out


def velocity_field(
    omega: VortexEnsemble, x, cfg: KernelConfig, smoothed: bool = True
) -> np.ndarray:
    """Velocity induced by an ensemble at x; an atom sitting exactly at x is skipped."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    pts = np.atleast_2d(x)
    if omega.n_atoms == 0:
        out = np.zeros((pts.shape[0], 2))
        return out[0] if scalar else out
    out = np.empty((pts.shape[0], 2))
    src = wrap(omega.positions)
    coincide = np.all(wrap(pts)[:, None, :] == src[None, :, :], axis=-1)
    plain = ~coincide.any(axis=1)
    if np.any(plain):
        out[plain] = velocity_at(omega.positions, omega.intensities, pts[plain], cfg, smoothed)
    for i in np.nonzero(~plain)[0]:
        keep = ~coincide[i]
        if not keep.any():
            out[i] = 0.0
        else:
            out[i] = velocity_at(
                omega.positions[keep], omega.intensities[keep], pts[i : i + 1], cfg, smoothed
            )[0]
    return out[0] if scalar else out


def finite_difference_biot_savart(x, y, cfg: KernelConfig, step: float = 1e-5) -> np.ndarray:
    """Fourth-order central-difference gradient oracle for K = (d2 G, -d1 G)."""
    x = np.asarray(x, dtype=float)

    def g(shift: np.ndarray) -> np.ndarray | float:
        return green_function(x + shift, y, cfg)

    out = []
    for axis_idx in (1, 0):
        e = np.zeros(2)
        e[axis_idx] = 1.0
        d = (
            -g(2 * step * e) + 8 * g(step * e) - 8 * g(-step * e) + g(-2 * step * e)
        ) / (12 * step)
        out.append(d)
    k1, mk2 = out
    return np.stack([np.asarray(k1), -np.asarray(mk2)], axis=-1)


def lattice_log_sum(x, y, radius: int) -> float | np.ndarray:
    """Truncated image sum log(d(x, y + k)) / (2 pi) over |k|_inf <= radius.

    Near-field asymptotic cross-check for the spectral Green function: the sum
    carries an additive constant that depends on the truncation radius, so only
    differences at two separations are meaningful.
    """
    r = torus_delta(x, y)
    scalar = r.ndim == 1
    r = np.atleast_2d(r)
    shifts = np.arange(-radius, radius + 1)
    k1, k2 = np.meshgrid(shifts, shifts, indexing="ij")
    images = np.stack([k1, k2], axis=-1).reshape(-1, 2)
    d = np.linalg.norm(r[:, None, :] + images[None, :, :], axis=-1)
    if np.any(d == 0):
        raise ValueError("singular evaluation: coincident torus points")
    out = np.sum(np.log(d), axis=-1) / (2 * np.pi)
    return float(out[0]) if scalar else out


def kernel_check_sweep(
    cfg: KernelConfig,
    n_distances: int = 40,
    n_angles: int = 16,
    d_min: float = 1e-4,
    d_max: float = 0.5,
    fd_step: float = 1e-5,
    fd_min_distance: float = 0.05,
):
    """Radial diagnostic sweep: columns (d, |K|, d |K|, fd relative error).

    |K| is the max over sampled directions; the finite-difference column is
    only meaningful away from the near field and is NaN below
    ``fd_min_distance``.
    """
    ds = np.geomspace(d_min, d_max, n_distances)
    angles = (np.arange(n_angles) + 0.37) * (2 * np.pi / n_angles)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    y = np.zeros(2)
    rows = []
    for d in ds:
        pts = wrap(d * dirs)
        k = biot_savart(pts, np.broadcast_to(y, pts.shape), cfg)
        kn = np.linalg.norm(k, axis=-1)
        imax = int(np.argmax(kn))
        fd_err = np.nan
        if d >= fd_min_distance:
            fd = finite_difference_biot_savart(pts[imax], y, cfg, fd_step)
            fd_err = float(np.linalg.norm(k[imax] - fd) / np.linalg.norm(k[imax]))
        rows.append((float(d), float(kn.max()), float(d * kn.max()), fd_err))
    return rows
