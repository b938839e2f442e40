"""Truncated Fourier representation of distributions, negative-order Sobolev
norms, double couplings with the diagonal removed, and the bounded symmetric
kernel pairing a test function with the Biot-Savart kernel.

Everything lives on the mode disk 0 < |k| <= k_max; the k = 0 mode is excluded
throughout (zero-average convention), so norms and couplings never see the
total mass of a measure.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .kernels import KernelConfig, biot_savart
from .state import VortexEnsemble

__all__ = [
    "FourierCoefficients",
    "TestFunction",
    "standard_battery",
    "fourier_of_ensemble",
    "sobolev_norm_sq",
    "delta_norm_sq",
    "sobolev_tail_bound",
    "double_coupling_offdiag",
    "double_coupling_full",
    "h_f_kernel",
    "wick_h_f",
]


def _mode_mask(k_max: int) -> np.ndarray:
    ax = np.arange(-k_max, k_max + 1)
    ksq = ax[:, None] ** 2 + ax[None, :] ** 2
    return (ksq > 0) & (ksq <= k_max * k_max)


def _mode_ksq(k_max: int) -> np.ndarray:
    ax = np.arange(-k_max, k_max + 1)
    return (ax[:, None] ** 2 + ax[None, :] ** 2).astype(float)


@dataclass
class FourierCoefficients:
    """Coefficients u_hat(k) on the disk 0 < |k| <= k_max, u_hat(-k) = conj(u_hat(k)).

    ``values[a, b]`` holds the coefficient of exp(2 pi i k.x) for
    k = (a - k_max, b - k_max); entries off the disk are zero.
    """

    k_max: int
    values: np.ndarray

    def __post_init__(self) -> None:
        L = 2 * self.k_max + 1
        if self.values.shape != (L, L):
            raise ValueError(f"values must have shape ({L}, {L})")
        self.values = np.where(_mode_mask(self.k_max), self.values, 0.0)

    @classmethod
    def zeros(cls, k_max: int) -> "FourierCoefficients":
        L = 2 * k_max + 1
        return cls(k_max, np.zeros((L, L), dtype=complex))

    def get(self, k1: int, k2: int) -> complex:
        return complex(self.values[k1 + self.k_max, k2 + self.k_max])

    def is_conjugate_symmetric(self, tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.values, np.conj(self.values[::-1, ::-1]), atol=tol))

    def coupling(self, other: "FourierCoefficients") -> float:
        """L^2 pairing <u, v> = sum_k u_hat(k) conj(v_hat(k)) (real for real fields)."""
        if other.k_max != self.k_max:
            raise ValueError("mode cutoffs differ")
        return float(np.real(np.sum(self.values * np.conj(other.values))))


def fourier_of_ensemble(omega: VortexEnsemble, k_max: int) -> FourierCoefficients:
    """Point-mass transform: coeff(k) = sum_i xi_i exp(-2 pi i k.x_i)."""
    out = FourierCoefficients.zeros(k_max)
    if omega.n_atoms == 0:
        return out
    ax = np.arange(-k_max, k_max + 1)
    e1 = np.exp(-2j * np.pi * np.multiply.outer(omega.positions[:, 0], ax))
    e2 = np.exp(-2j * np.pi * np.multiply.outer(omega.positions[:, 1], ax))
    vals = (omega.intensities[:, None] * e1).T @ e2
    return FourierCoefficients(k_max, vals)


def sobolev_norm_sq(coeffs: FourierCoefficients, alpha: float) -> float:
    """Truncated Sobolev norm sum_k (1 + |k|^2)^alpha |u_hat(k)|^2."""
    w = (1.0 + _mode_ksq(coeffs.k_max)) ** alpha
    w[~_mode_mask(coeffs.k_max)] = 0.0
    return float(np.sum(w * np.abs(coeffs.values) ** 2))


def delta_norm_sq(alpha: float, k_max: int) -> float:
    """Truncated Sobolev norm of a Dirac delta: sum over the disk of (1+|k|^2)^alpha."""
    w = (1.0 + _mode_ksq(k_max)) ** alpha
    return float(np.sum(w[_mode_mask(k_max)]))


def sobolev_tail_bound(alpha: float, k_max: int) -> float:
    """Integral-test bound on the delta-norm mass beyond the cutoff (alpha < -1)."""
    if alpha >= -1:
        raise ValueError("tail bound requires alpha < -1")
    # 2 pi int_{k_max}^inf k (1 + k^2)^alpha dk
    return float(np.pi * (1.0 + k_max * k_max) ** (alpha + 1) / (-(alpha + 1)))


@dataclass(frozen=True)
class TestFunction:
    """Real trig polynomial sum_j c_j exp(2 pi i k_j . x) with conjugate pairs listed."""

    ks: np.ndarray
    coeffs: np.ndarray
    name: str = ""

    @classmethod
    def harmonic(cls, k1: int, k2: int, part: str) -> "TestFunction":
        """cos(2 pi k.x) for part='re' or sin(2 pi k.x) for part='im'."""
        k = np.array([[k1, k2], [-k1, -k2]], dtype=float)
        if part == "re":
            c = np.array([0.5, 0.5], dtype=complex)
        elif part == "im":
            c = np.array([-0.5j, 0.5j], dtype=complex)
        else:
            raise ValueError("part must be 're' or 'im'")
        return cls(k, c, name=f"{'cos' if part == 're' else 'sin'}({k1},{k2})")

    @classmethod
    def constant(cls, value: float) -> "TestFunction":
        return cls(np.zeros((1, 2)), np.array([value], dtype=complex), name=f"const({value})")

    def __call__(self, x: np.ndarray) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        phase = np.exp(2j * np.pi * (x @ self.ks.T))
        out = np.real(phase @ self.coeffs)
        return float(out) if out.ndim == 0 else out

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        phase = np.exp(2j * np.pi * (np.atleast_2d(x) @ self.ks.T))
        g = np.real(np.einsum("pj,jd->pd", phase * self.coeffs, 2j * np.pi * self.ks))
        return g[0] if x.ndim == 1 else g

    @cached_property
    def l2_norm_sq(self) -> float:
        """Exact squared L^2 norm sum_j |c_j|^2 (Parseval)."""
        return float(np.sum(np.abs(self.coeffs) ** 2))

    @cached_property
    def sup_norm(self) -> float:
        """||f||_inf measured on a fine lattice (exact enough for low modes)."""
        ax = np.arange(256) / 256.0
        grid = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)
        return float(np.max(np.abs(self(grid))))

    @cached_property
    def l4_norm_4(self) -> float:
        """||f||_{L^4}^4 by lattice average (exact for band-limited f up to aliasing)."""
        ax = np.arange(64) / 64.0
        grid = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1).reshape(-1, 2)
        return float(np.mean(self(grid) ** 4))

    def to_coefficients(self, k_max: int) -> FourierCoefficients:
        out = FourierCoefficients.zeros(k_max)
        vals = out.values.copy()
        for k, c in zip(self.ks.astype(int), self.coeffs):
            if max(abs(k[0]), abs(k[1])) > k_max:
                raise ValueError("test function exceeds the mode cutoff")
            vals[k[0] + k_max, k[1] + k_max] += c
        return FourierCoefficients(k_max, vals)


def standard_battery() -> list[TestFunction]:
    """The default battery: real and imaginary parts of e_k for the four lowest
    mode pairs, eight functions in total."""
    ks = [(1, 0), (0, 1), (1, 1), (1, -1)]
    return [TestFunction.harmonic(k1, k2, part) for (k1, k2) in ks for part in ("re", "im")]


def double_coupling_offdiag(h, omega: VortexEnsemble) -> float:
    """sum_{i != j} xi_i xi_j h(x_i, x_j); h is never evaluated on the diagonal."""
    n = omega.n_atoms
    if n < 2:
        return 0.0
    ii, jj = np.nonzero(~np.eye(n, dtype=bool))
    vals = np.asarray(h(omega.positions[ii], omega.positions[jj]), dtype=float)
    return float(np.sum(omega.intensities[ii] * omega.intensities[jj] * vals))


def double_coupling_full(h, omega: VortexEnsemble) -> float:
    """Off-diagonal sum plus the diagonal contribution sum_i xi_i^2 h(x_i, x_i)."""
    off = double_coupling_offdiag(h, omega)
    if omega.n_atoms == 0:
        return off
    diag = np.asarray(h(omega.positions, omega.positions), dtype=float)
    return off + float(np.sum(omega.intensities**2 * diag))


def h_f_kernel(f: TestFunction, x, y, cfg: KernelConfig) -> float | np.ndarray:
    """Symmetrized bounded kernel (1/2) K(x, y) . (grad f(x) - grad f(y)).

    Bounded despite the kernel singularity because the gradient difference is
    O(d(x, y)); symmetric under swapping x and y bit for bit.
    """
    k = biot_savart(x, y, cfg)
    gdiff = f.gradient(x) - f.gradient(y)
    out = 0.5 * np.sum(k * gdiff, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def wick_h_f(f: TestFunction, omega: VortexEnsemble, velocities: np.ndarray) -> float:
    """:<H_f, omega x omega>: evaluated as sum_i xi_i grad f(x_i) . u_i.

    ``velocities`` must be the self-interaction-free velocities of the atoms
    under the same kernel used in the coupling; by antisymmetry of the kernel
    this equals the symmetrized off-diagonal double sum.
    """
    if omega.n_atoms == 0:
        return 0.0
    g = f.gradient(omega.positions)
    return float(np.sum(omega.intensities * np.sum(g * velocities, axis=-1)))
