"""Sliding-window maintenance of the nondecimated Haar pyramid.

Advancing the window by one sample is a circular shift plus a single value
replacement, so no stored coefficient ever moves: the state keeps every
array in *physical* ring order together with a rotating ``offset`` mapping
logical window position k to physical slot (offset + k) % w.  One slide
touches exactly

    1 + sum_{n=1..J} 2**n  =  2**(J+1) - 1

(level, position) slots: the ring write at level 0 plus, per level n, the
2**n trailing positions whose filter span covers the replaced sample.  Each
touched slot has its smooth and detail entry refreshed together from the
same delta.  Counts are instrumented so tests can assert the bound.

Level-n updates for delta = x_new - x_dropped, at logical positions
k = w - 2**n .. w - 1 (amp = 2**(-n/2)):

    smooth  += amp * delta             at all 2**n positions
    detail  -= amp * delta              first 2**(n-1) of them
    detail  += amp * delta              last  2**(n-1) of them

Only the Haar filter admits these constant-size updates; longer filters go
through the batch transform.
"""
from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .wavelet import CoefficientPyramid, WaveletFilter, _check_levels, ndwt

DEFAULT_REBUILD_EVERY = 1 << 16


class SlidingTransformState:
    """Haar pyramid of the current window, updated in O(2**J) per slide.

    ``window`` may be (w,) for one channel or (P, w) for several; all
    channels share the slide arithmetic and the per-slide write count is
    reported per channel (slots, not scalars).
    """

    def __init__(
        self,
        window: np.ndarray,
        levels: int,
        filt: WaveletFilter | str = "haar",
        rebuild_every: int | None = DEFAULT_REBUILD_EVERY,
    ):
        if isinstance(filt, str):
            filt = WaveletFilter.from_name(filt)
        if filt.name != "haar":
            raise ValidationError(
                f"incremental sliding updates require the haar filter, got {filt.name!r}"
            )
        window = np.asarray(window, dtype=np.float64)
        if window.ndim not in (1, 2):
            raise ValidationError(f"window must be (w,) or (P, w), got shape {window.shape}")
        w = window.shape[-1]
        _check_levels(w, levels)
        pyr = ndwt(window, levels, filt)
        self.filter = filt
        self.levels = levels
        self.window_size = w
        self.offset = 0
        self.smooth = np.array(pyr.smooth)  # writable copy, physical order
        self.detail = np.array(pyr.detail)
        self.rebuild_every = rebuild_every
        self.slides_done = 0
        self.total_slot_writes = 0
        self._amps = (1.0 / np.sqrt(2.0)) ** np.arange(1, levels + 1)

    @property
    def writes_per_slide(self) -> int:
        """Slots touched by one slide: 2**(J+1) - 1."""
        return (1 << (self.levels + 1)) - 1

    def slide(self, x_new) -> int:
        """Advance the window by one sample; returns slots written."""
        w = self.window_size
        x_new = np.asarray(x_new, dtype=np.float64)
        if x_new.shape != self.smooth.shape[1:-1]:
            raise ValidationError(
                f"new sample must have shape {self.smooth.shape[1:-1]}, got {x_new.shape}"
            )
        r = self.offset
        delta = x_new - self.smooth[0][..., r]
        self.smooth[0][..., r] = x_new
        writes = 1
        r_new = (r + 1) & (w - 1)
        # physical slots of logical positions w - 2**J .. w - 1
        idx_all = (r_new + w - (1 << self.levels) + np.arange(1 << self.levels)) & (w - 1)
        delta_b = delta if delta.ndim == 0 else delta[..., None]
        for n in range(1, self.levels + 1):
            span = 1 << n
            idx = idx_all[-span:]
            upd = self._amps[n - 1] * delta_b
            sm = self.smooth[n]
            de = self.detail[n - 1]
            sm[..., idx] += upd
            half = span >> 1
            de[..., idx[:half]] -= upd
            de[..., idx[half:]] += upd
            writes += span
        self.offset = r_new
        self.slides_done += 1
        self.total_slot_writes += writes
        if self.rebuild_every and self.slides_done % self.rebuild_every == 0:
            self.rebuild()
        return writes

    def rebuild(self) -> None:
        """Recompute all coefficients from the ring data (drift control).

        The transform commutes with circular shifts, so transforming the
        physical ring directly reproduces the physically-aligned arrays.
        """
        pyr = ndwt(self.smooth[0], self.levels, self.filter)
        self.smooth = np.array(pyr.smooth)
        self.detail = np.array(pyr.detail)

    def window_values(self) -> np.ndarray:
        """Current window in logical (oldest-first) order."""
        return np.roll(self.smooth[0], -self.offset, axis=-1)

    def pyramid(self) -> CoefficientPyramid:
        """Snapshot of the coefficients in logical order."""
        smooth = np.roll(self.smooth, -self.offset, axis=-1)
        detail = np.roll(self.detail, -self.offset, axis=-1)
        smooth.setflags(write=False)
        detail.setflags(write=False)
        return CoefficientPyramid(smooth, detail)
