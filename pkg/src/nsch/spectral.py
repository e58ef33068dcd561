"""Fourier pseudo-spectral machinery on periodic boxes.

Scalar fields are arrays of shape ``layout.shape``; vector fields carry a
leading component axis ``(dim, *shape)`` and tensor fields two of them.
Coefficients are normalised by the number of grid points, so a constant
field ``1`` has coefficient ``1`` at ``k = 0`` and ``cos(x)`` has ``1/2`` at
``k = (+-1, 0)``.  With the volume-averaged inner product the complex
exponentials are then orthonormal, which makes the density-weighted mass
operators reduce to the identity for ``rho == 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import os

import numpy as np
import scipy.fft as sfft


def fft_workers() -> int:
    """Worker threads for FFTs, from ``NSCH_THREADS`` (default 1)."""
    raw = os.environ.get("NSCH_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"NSCH_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"NSCH_THREADS must be a positive integer, got {raw!r}")
    return n


class LayoutError(ValueError):
    """Array shapes or sizes do not match the spectral layout."""


def _as_extent(extent, dim):
    if np.isscalar(extent):
        return (float(extent),) * dim
    extent = tuple(float(e) for e in extent)
    if len(extent) != dim:
        raise LayoutError(f"extent has {len(extent)} entries, expected {dim}")
    return extent


@dataclass(frozen=True, eq=False)
class SpectralLayout:
    """Periodic grid, retained Fourier modes and wavenumber tables.

    ``m_cut`` bounds ``|k_i|`` (integer wavenumber) of every retained mode and
    defaults to ``(n_grid - 1) // 3``, the largest value for which quadratic
    products of retained fields do not alias back onto retained modes.
    """

    dim: int = 2
    n_grid: int = 32
    m_cut: int | None = None
    extent: float | Sequence[float] = 2 * np.pi

    shape: tuple = field(init=False, repr=False)
    axes: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise LayoutError("dim must be 2 or 3")
        n = int(self.n_grid)
        if n < 4:
            raise LayoutError("n_grid must be at least 4")
        m = (n - 1) // 3 if self.m_cut is None else int(self.m_cut)
        if m < 1:
            raise LayoutError("m_cut must be >= 1")
        if 3 * m >= n:
            raise LayoutError(
                f"n_grid={n} too small for m_cut={m}: dealiasing needs n_grid > 3*m_cut")
        ext = _as_extent(self.extent, self.dim)
        s = object.__setattr__
        s(self, "n_grid", n)
        s(self, "m_cut", m)
        s(self, "extent", ext)
        s(self, "shape", (n,) * self.dim)
        s(self, "axes", tuple(range(-self.dim, 0)))

        ints = np.fft.fftfreq(n, 1.0 / n).astype(int)
        kint = np.array(np.meshgrid(*([ints] * self.dim), indexing="ij"))
        scale = np.array([2 * np.pi / L for L in ext]).reshape((self.dim,) + (1,) * self.dim)
        k = kint * scale
        k2 = np.sum(k * k, axis=0)
        mask = np.all(np.abs(kint) <= m, axis=0)
        # Nyquist plane of an even grid has no real derivative
        deriv = 1j * k
        if n % 2 == 0:
            deriv = np.where(np.abs(kint) == n // 2, 0.0, deriv)
        inv_k2 = np.zeros_like(k2)
        inv_k2[k2 > 0] = 1.0 / k2[k2 > 0]

        s(self, "kint", kint)
        s(self, "k", k)
        s(self, "k2", k2)
        s(self, "inv_k2", inv_k2)
        s(self, "mask", mask)
        s(self, "vmask", mask & (k2 > 0))
        s(self, "deriv", deriv)
        s(self, "spacing", tuple(L / n for L in ext))
        s(self, "area", float(np.prod(ext)))
        coords = [np.arange(n) * L / n for L in ext]
        s(self, "x", np.array(np.meshgrid(*coords, indexing="ij")))
        # retained band as a dense sub-block, for off-grid evaluation
        band = np.arange(-m, m + 1)
        s(self, "band", band)
        s(self, "band_index", band % n)
        s(self, "k_max", float(np.sqrt(np.max(k2[mask]))))
        for arr in (kint, k, k2, inv_k2, mask, deriv):
            arr.setflags(write=False)

    # -- bookkeeping ---------------------------------------------------
    @property
    def n_points(self) -> int:
        return self.n_grid ** self.dim

    @property
    def resolved_spacing(self) -> float:
        """Length scale ``1/|k|_max`` of the finest retained mode."""
        return 1.0 / self.k_max

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues ``|k|^2 + 1`` of ``-Laplacian + I`` on the retained modes."""
        return np.where(self.mask, self.k2 + 1.0, 0.0)

    def stokes_eigenvalues(self) -> np.ndarray:
        """Stokes eigenvalues ``|k|^2`` of the retained solenoidal modes (k != 0)."""
        return np.where(self.vmask, self.k2, 0.0)

    def check_grid(self, f, rank=0):
        want = (self.dim,) * rank + self.shape
        if np.shape(f) != want:
            raise LayoutError(f"expected array of shape {want}, got {np.shape(f)}")

    def mean(self, f):
        return np.mean(f, axis=self.axes)

    def integrate(self, f):
        """Uniform-weight quadrature of a grid field over the box."""
        return self.area * np.mean(f, axis=self.axes)

    def inner(self, c1, c2):
        """L2 inner product of real fields from coefficient arrays (Plancherel)."""
        return self.area * float(np.real(np.sum(np.conj(c1) * c2)))

    def norm(self, c):
        return np.sqrt(self.inner(c, c))

    def random_coeffs(self, rng, rank=0, amplitude=1.0, band=None, decay=0.0):
        """Coefficients of a random real field supported on ``|k_i| <= band``."""
        band = self.m_cut if band is None else band
        sel = np.all(np.abs(self.kint) <= band, axis=0)
        shape = (self.dim,) * rank + self.shape
        f = rng.standard_normal(shape)
        c = sfft.fftn(f, axes=self.axes) / self.n_points
        c = c * sel * np.exp(-decay * self.k2)
        c = forward_transform(self, inverse_transform(self, c)) * sel
        scale = np.max(np.abs(inverse_transform(self, c)))
        return amplitude * c / (scale if scale > 0 else 1.0)


# -- transforms ----------------------------------------------------------

def forward_transform(layout: SpectralLayout, f: np.ndarray) -> np.ndarray:
    """Grid values -> normalised Fourier coefficients (all grid modes)."""
    f = np.asarray(f)
    if f.shape[-layout.dim:] != layout.shape:
        raise LayoutError(f"grid shape {f.shape} incompatible with layout {layout.shape}")
    return sfft.fftn(f, axes=layout.axes, workers=fft_workers()) / layout.n_points


def inverse_transform(layout: SpectralLayout, c: np.ndarray, real: bool = True) -> np.ndarray:
    c = np.asarray(c)
    if c.shape[-layout.dim:] != layout.shape:
        raise LayoutError(f"coefficient shape {c.shape} incompatible with layout {layout.shape}")
    f = sfft.ifftn(c, axes=layout.axes, workers=fft_workers()) * layout.n_points
    return f.real if real else f


# -- differential operators on coefficients -----------------------------

def gradient(layout, c):
    return layout.deriv * c[None]


def divergence(layout, vc):
    return np.sum(layout.deriv * vc, axis=0)


def laplacian(layout, c):
    return -layout.k2 * c


def sym_gradient(layout, vc):
    """Grid values of the symmetric gradient ``(grad u + grad u^T) / 2``."""
    grad = inverse_transform(layout, layout.deriv[None, :] * vc[:, None])
    # grad[i, j] = d_j u_i
    return 0.5 * (grad + np.swapaxes(grad, 0, 1))


def tensor_divergence(layout, T):
    """Coefficients of ``div T`` (row-wise) from a grid tensor field."""
    That = forward_transform(layout, T)
    return np.sum(layout.deriv[None, :] * That, axis=1)


def leray_project(layout, vc):
    """Project a vector field onto divergence-free fields; ``k = 0`` passes through."""
    kdot = np.sum(layout.k * vc, axis=0)
    return vc - layout.k * (kdot * layout.inv_k2)[None]


def dealias(layout, c):
    """Zero every mode with some ``|k_i| > m_cut``."""
    return c * layout.mask


# -- resampling and off-grid evaluation ---------------------------------

def _resample_axis(c, axis, n_old, n_new):
    out_shape = list(c.shape)
    out_shape[axis] = n_new
    out = np.zeros(out_shape, dtype=complex)
    n_min = min(n_old, n_new)
    half = n_min // 2
    src = np.moveaxis(c, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    if n_min % 2 == 1:
        dst[: half + 1] = src[: half + 1]
        dst[-half:] = src[-half:]
        return out
    dst[:half] = src[:half]
    if half > 1:
        dst[-(half - 1):] = src[-(half - 1):]
    if n_new > n_old:
        # split the Nyquist coefficient between +-n/2
        dst[half] = 0.5 * src[half]
        dst[-half] = 0.5 * src[half]
    else:
        # fold +-n_new/2 onto the new Nyquist slot
        dst[half] = src[half] + src[-half]
    return out


def resample(layout: SpectralLayout, f: np.ndarray, n_new: int) -> np.ndarray:
    """Trigonometric interpolation of grid values onto an ``n_new`` grid."""
    c = sfft.fftn(f, axes=layout.axes)
    for ax in layout.axes:
        c = _resample_axis(c, ax, layout.n_grid, n_new)
    lead = c.ndim - layout.dim
    axes = tuple(range(lead, c.ndim))
    return sfft.ifftn(c, axes=axes).real * (n_new / layout.n_grid) ** layout.dim


def evaluate(layout: SpectralLayout, c: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate retained-band fields at arbitrary points.

    ``c`` has shape ``(*lead, *layout.shape)``, ``points`` has shape
    ``(dim, P)``; the result has shape ``(*lead, P)``.
    """
    idx = layout.band_index
    d = layout.dim
    lead = c.shape[:-d]
    block = c[(Ellipsis,) + np.ix_(*([idx] * d))]
    block = block.reshape((-1,) + (len(idx),) * d)
    phases = [np.exp(1j * (2 * np.pi / L) * np.outer(points[a], layout.band))
              for a, L in enumerate(layout.extent)]
    K = len(idx)
    P = points.shape[1]
    out = []
    for blk in block:
        t = phases[0] @ blk.reshape(K, -1)                   # (P, K^(d-1))
        if d == 2:
            val = np.sum(t * phases[1], axis=1)
        else:
            t = t.reshape(P, K, K)
            val = np.einsum("pab,pa,pb->p", t, phases[1], phases[2])
        out.append(val.real)
    return np.array(out).reshape(lead + (P,))
