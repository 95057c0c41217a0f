"""Nondecimated wavelet transform and the associated correction matrices.

The transform is the stationary (undecimated) pyramid with periodic
boundaries: at stage m the low-pass and high-pass filters act on the running
smooth sequence with their taps spread ``2**(m-1)`` apart.  Conventions are
fixed so that for the Haar filter

    detail_1[k]  = (x[k] - x[(k+1) % w]) / sqrt(2)
    smooth_m[k]  = (smooth_{m-1}[k] + smooth_{m-1}[(k + 2**(m-1)) % w]) / sqrt(2)

i.e. scale 1 is the finest and filters look *forward* (circularly).

Alongside the transform live the discrete wavelet vectors, their
autocorrelation, and the scale inner-product matrix used to unbias raw
wavelet periodograms.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, SizeError, ValidationError

SQRT2 = np.sqrt(2.0)

# Orthonormal low-pass taps, normalised so sum(h) = sqrt(2), sum(h^2) = 1.
_LOWPASS: dict[str, tuple[float, ...]] = {
    "haar": (1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)),
    "d4": (
        0.48296291314469025,
        0.83651630373746899,
        0.22414386804185735,
        -0.12940952255092145,
    ),
    "d6": (
        0.33267055295095688,
        0.80689150931333875,
        0.45987750211933132,
        -0.13501102001039084,
        -0.085441273882241486,
        0.035226291882100656,
    ),
    "d8": (
        0.23037781330885523,
        0.71484657055254153,
        0.63088076792959036,
        -0.027983769416983849,
        -0.18703481171888114,
        0.030841381835986965,
        0.032883011666982945,
        -0.010597401784997278,
    ),
}


@dataclass(frozen=True)
class WaveletFilter:
    """An orthonormal filter pair (h, g) with g the quadrature mirror of h."""

    name: str
    lowpass: np.ndarray
    highpass: np.ndarray

    @classmethod
    def from_name(cls, name: str) -> "WaveletFilter":
        try:
            h = np.asarray(_LOWPASS[name.lower()], dtype=np.float64)
        except KeyError:
            raise ValidationError(
                f"unknown filter {name!r}; choose from {sorted(_LOWPASS)}"
            ) from None
        n = len(h)
        g = (-1.0) ** np.arange(n) * h[::-1]
        h.setflags(write=False)
        g.setflags(write=False)
        return cls(name.lower(), h, g)

    @property
    def length(self) -> int:
        return len(self.lowpass)


def _check_window(w: int) -> int:
    """Validate a window length and return log2(w)."""
    if w < 2 or (w & (w - 1)) != 0:
        raise SizeError(f"window length must be a power of two >= 2, got {w}")
    return int(w).bit_length() - 1


def _check_levels(w: int, levels: int) -> None:
    jmax = _check_window(w)
    if not (1 <= levels <= jmax):
        raise SizeError(f"levels must lie in 1..log2(w)={jmax}, got {levels}")


@dataclass(frozen=True)
class CoefficientPyramid:
    """All smooth and detail coefficients of one window.

    ``smooth`` has shape (J+1, ..., w): row 0 is the raw window, row m the
    stage-m smooth.  ``detail`` has shape (J, ..., w): row j-1 holds scale j
    (finest first).
    """

    smooth: np.ndarray
    detail: np.ndarray

    @property
    def levels(self) -> int:
        return self.detail.shape[0]

    @property
    def window(self) -> int:
        return self.detail.shape[-1]


def ndwt(x: np.ndarray, levels: int, filt: WaveletFilter | str = "haar") -> CoefficientPyramid:
    """Full nondecimated transform of a window (periodic boundary).

    ``x`` may be (w,) or (P, w); the pyramid axes mirror the input shape.
    """
    if isinstance(filt, str):
        filt = WaveletFilter.from_name(filt)
    x = np.asarray(x, dtype=np.float64)
    w = x.shape[-1]
    _check_levels(w, levels)

    smooth = np.empty((levels + 1,) + x.shape, dtype=np.float64)
    detail = np.empty((levels,) + x.shape, dtype=np.float64)
    smooth[0] = x
    for m in range(1, levels + 1):
        step = 1 << (m - 1)
        prev = smooth[m - 1]
        acc_s = np.zeros_like(prev)
        acc_d = np.zeros_like(prev)
        for i, (hi, gi) in enumerate(zip(filt.lowpass, filt.highpass)):
            shifted = np.roll(prev, -i * step, axis=-1)
            acc_s += hi * shifted
            acc_d += gi * shifted
        smooth[m] = acc_s
        detail[m - 1] = acc_d
    smooth.setflags(write=False)
    detail.setflags(write=False)
    return CoefficientPyramid(smooth, detail)


def discrete_wavelets(filt: WaveletFilter | str, levels: int) -> list[np.ndarray]:
    """Discrete wavelet vectors psi_1..psi_J.

    psi_1 = g and psi_{j+1}[n] = sum_k h[n - 2k] psi_j[k]; scale j has
    support (2^j - 1)(N_h - 1) + 1.  They satisfy
    detail_j[k] = sum_n psi_j[n] x[(k + n) % w].
    """
    if isinstance(filt, str):
        filt = WaveletFilter.from_name(filt)
    if levels < 1:
        raise ValidationError(f"levels must be >= 1, got {levels}")
    psis = [np.asarray(filt.highpass, dtype=np.float64)]
    for _ in range(levels - 1):
        prev = psis[-1]
        up = np.zeros(2 * len(prev) - 1)
        up[::2] = prev
        psis.append(np.convolve(filt.lowpass, up))
    for p in psis:
        p.setflags(write=False)
    return psis


def autocorrelation_wavelet(psi: np.ndarray) -> np.ndarray:
    """Autocorrelation Psi(tau) = sum_n psi[n] psi[n+tau].

    Returned as a vector over tau = -(N-1)..N-1 with Psi(0) = 1 at the
    centre index N-1.
    """
    psi = np.asarray(psi, dtype=np.float64)
    acf = np.correlate(psi, psi, mode="full")
    acf.setflags(write=False)
    return acf


def inner_product_matrix(filt: WaveletFilter | str, levels: int) -> np.ndarray:
    """Gram matrix A of the autocorrelation wavelets across scales.

    A[j-1, l-1] = sum_tau Psi_j(tau) Psi_l(tau).  Symmetric positive
    definite; for Haar at one level A = [[3/2]].
    """
    psis = discrete_wavelets(filt, levels)
    acfs = [autocorrelation_wavelet(p) for p in psis]
    a = np.empty((levels, levels))
    for j in range(levels):
        for l in range(j, levels):
            short, long_ = sorted((acfs[j], acfs[l]), key=len)
            # align tau = 0 (centre of each vector), sum over the overlap
            off = (len(long_) - len(short)) // 2
            val = float(np.dot(short, long_[off : off + len(short)]))
            a[j, l] = val
            a[l, j] = val
    a.setflags(write=False)
    return a


def invert_inner_product(a: np.ndarray, cond_limit: float = 1e12) -> np.ndarray:
    """Inverse of the Gram matrix, guarding against near-singularity."""
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > cond_limit:
        raise ConditioningError(
            f"scale inner-product matrix is ill-conditioned (cond={cond:.3g})"
        )
    inv = np.linalg.inv(a)
    inv.setflags(write=False)
    return inv
