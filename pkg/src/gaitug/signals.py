"""Signal primitives used throughout the pipeline.

Gaussian smoothing with reflect padding, an even-order low-pass Butterworth
realized as cascaded biquad sections with zero-phase (forward-backward)
application, a central-difference derivative, and peak detection that reports
half-prominence extents. Everything operates on plain 1-D float arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConfigError, DegenerateSignalError, DomainError

Polarity = Literal["positive", "negative"]


# ---------------------------------------------------------------------------
# Gaussian smoothing

@dataclass(frozen=True)
class GaussianKernel:
    sigma: float
    taps: np.ndarray  # (2*radius + 1,), unit sum

    @property
    def radius(self) -> int:
        return (self.taps.size - 1) // 2


def make_gaussian_kernel(sigma: float) -> GaussianKernel:
    """Discrete Gaussian, truncated at +-3 sigma and normalized to unit sum."""
    if not (sigma > 0 and math.isfinite(sigma)):
        raise DomainError(f"sigma must be positive and finite, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    k = np.arange(-radius, radius + 1, dtype=float)
    taps = np.exp(-0.5 * (k / sigma) ** 2)
    taps /= taps.sum()
    taps.setflags(write=False)
    return GaussianKernel(sigma=float(sigma), taps=taps)


def _reflect_indices(n: int, radius: int) -> np.ndarray:
    # Mirror about the end samples (no repeat of the edge), valid for any
    # radius because reflection is periodic with period 2*(n - 1).
    if n == 1:
        return np.zeros(1 + 2 * radius, dtype=int)
    idx = np.arange(-radius, n + radius)
    period = 2 * (n - 1)
    idx = np.mod(idx, period)
    return np.where(idx >= n, period - idx, idx)


def smooth(x: np.ndarray, kernel: GaussianKernel) -> np.ndarray:
    """Convolve with reflect padding; output length equals input length."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError(f"smooth expects a non-empty 1-D array, got shape {x.shape}")
    padded = x[_reflect_indices(x.size, kernel.radius)]
    return np.convolve(padded, kernel.taps, mode="valid")


# ---------------------------------------------------------------------------
# Butterworth low-pass (cascaded second-order sections, bilinear transform)

@dataclass(frozen=True)
class ButterworthLowPass:
    order: int
    cutoff_hz: float
    sample_rate_hz: float
    sos: np.ndarray  # (order // 2, 6) rows of [b0, b1, b2, 1, a1, a2]


def design_butterworth(cutoff_hz: float, sample_rate_hz: float, order: int = 4) -> ButterworthLowPass:
    """Design the filter from its analog prototype via tan-prewarped bilinear
    transform. DC gain of every section is exactly 1 in exact arithmetic."""
    if not (sample_rate_hz > 0 and math.isfinite(sample_rate_hz)):
        raise ConfigError(f"sample rate must be positive, got {sample_rate_hz}")
    if not (0 < cutoff_hz < sample_rate_hz / 2):
        raise ConfigError(
            f"cutoff must lie in (0, fs/2) = (0, {sample_rate_hz / 2}), got {cutoff_hz}")
    if order < 2 or order % 2 != 0:
        raise ConfigError(f"order must be a positive even integer, got {order}")
    n_sections = order // 2
    a = math.tan(math.pi * cutoff_hz / sample_rate_hz)
    a2 = a * a
    sos = np.empty((n_sections, 6), dtype=float)
    for k in range(n_sections):
        r = math.sin(math.pi * (2.0 * k + 1.0) / (2.0 * order))
        s = a2 + 2.0 * a * r + 1.0
        gain = a2 / s
        d1 = 2.0 * (1.0 - a2) / s
        d2 = -(a2 - 2.0 * a * r + 1.0) / s
        sos[k] = (gain, 2.0 * gain, gain, 1.0, -d1, -d2)
    sos.setflags(write=False)
    return ButterworthLowPass(order=order, cutoff_hz=float(cutoff_hz),
                              sample_rate_hz=float(sample_rate_hz), sos=sos)


def freq_response(filt: ButterworthLowPass, freq_hz: float) -> complex:
    """Frequency response H(e^{j 2 pi f / fs}) of the cascade."""
    z1 = np.exp(-1j * 2.0 * math.pi * freq_hz / filt.sample_rate_hz)
    z2 = z1 * z1
    h = 1.0 + 0.0j
    for b0, b1, b2, _, a1, a2 in filt.sos:
        h *= (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2)
    return h


def _steady_state_zi(sos: np.ndarray) -> np.ndarray:
    """Per-section direct-form-II-transposed state for a unit-step input, so a
    constant signal passes through with no transient."""
    zi = np.empty((sos.shape[0], 2), dtype=float)
    scale = 1.0
    for k, (b0, b1, b2, _, a1, a2) in enumerate(sos):
        g = (b0 + b1 + b2) / (1.0 + a1 + a2)
        z2 = b2 - a2 * g
        z1 = b1 - a1 * g + z2
        zi[k] = (scale * z1, scale * z2)
        scale *= g
    return zi


def _sosfilt(sos: np.ndarray, x: np.ndarray, zi: np.ndarray) -> np.ndarray:
    y = x
    for k in range(sos.shape[0]):
        b0, b1, b2, _, a1, a2 = sos[k]
        z1, z2 = zi[k]
        out = np.empty_like(y)
        for n in range(y.size):
            xn = y[n]
            yn = b0 * xn + z1
            z1 = b1 * xn - a1 * yn + z2
            z2 = b2 * xn - a2 * yn
            out[n] = yn
        y = out
    return y


def butterworth_filtfilt(x: np.ndarray, filt: ButterworthLowPass) -> np.ndarray:
    """Zero-phase application: odd-extension padding at both ends, filter
    forward then backward with steady-state initial conditions."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DomainError(f"expected 1-D array, got shape {x.shape}")
    padlen = 3 * (filt.order + 1)
    if x.size <= padlen:
        raise DomainError(
            f"signal too short for zero-phase filtering: {x.size} samples, need > {padlen}")
    front = 2.0 * x[0] - x[padlen:0:-1]
    back = 2.0 * x[-1] - x[-2:-padlen - 2:-1]
    ext = np.concatenate([front, x, back])
    zi = _steady_state_zi(filt.sos)
    y = _sosfilt(filt.sos, ext, zi * ext[0])
    y = _sosfilt(filt.sos, y[::-1], zi * y[-1])[::-1]
    return y[padlen:-padlen]


# ---------------------------------------------------------------------------
# Derivative

def derivative(x: np.ndarray, fps: float) -> np.ndarray:
    """Central differences in the interior, one-sided at the ends; units per second."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DomainError(f"derivative needs >= 2 samples, got shape {x.shape}")
    if not (fps > 0 and math.isfinite(fps)):
        raise DomainError(f"fps must be positive, got {fps}")
    d = np.empty_like(x)
    d[1:-1] = (x[2:] - x[:-2]) * (fps / 2.0)
    d[0] = (x[1] - x[0]) * fps
    d[-1] = (x[-1] - x[-2]) * fps
    return d


# ---------------------------------------------------------------------------
# Peak detection

@dataclass(frozen=True)
class Peak:
    """A detected peak with half-prominence extent.

    ``peak_value`` is reported in the signal's original units and sign;
    ``prominence`` is measured on the working (polarity-adjusted) signal.
    """

    start_frame: int
    peak_frame: int
    end_frame: int
    peak_value: float
    prominence: float
    polarity: str

    @property
    def duration_frames(self) -> int:
        return self.end_frame - self.start_frame

    def duration_s(self, fps: float) -> float:
        return self.duration_frames / fps


@dataclass(frozen=True)
class PeakParams:
    min_height: float
    min_distance: int
    max_peaks: int | None = None

    def __post_init__(self):
        if self.min_distance < 1:
            raise ConfigError(f"min_distance must be >= 1, got {self.min_distance}")
        if self.max_peaks is not None and self.max_peaks < 1:
            raise ConfigError(f"max_peaks must be >= 1, got {self.max_peaks}")


def adaptive_peak_params(x: np.ndarray, polarity: Polarity = "positive",
                         height_k: float = 0.8, dist_frac: float = 0.7,
                         min_distance: int | None = None,
                         max_peaks: int | None = None) -> PeakParams:
    """Data-driven thresholds: height is mean + height_k * sd of the working
    signal; distance defaults to dist_frac times the frame span between the
    working signal's global maximum and minimum (floored at 1)."""
    w = _working(x, polarity)
    if w.size < 3:
        raise DomainError(f"need >= 3 samples to derive peak parameters, got {w.size}")
    sd = float(w.std())
    if sd == 0.0:
        raise DegenerateSignalError("constant signal: peak thresholds are undefined")
    min_height = float(w.mean()) + height_k * sd
    if min_distance is None:
        span = int(np.argmax(w)) - int(np.argmin(w))
        min_distance = max(1, math.floor(dist_frac * span + 0.5))
    return PeakParams(min_height=min_height, min_distance=int(min_distance),
                      max_peaks=max_peaks)


def _working(x: np.ndarray, polarity: Polarity) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DomainError(f"expected 1-D array, got shape {x.shape}")
    if polarity not in ("positive", "negative"):
        raise ConfigError(f"polarity must be 'positive' or 'negative', got {polarity!r}")
    return x if polarity == "positive" else -x


def _local_maxima(w: np.ndarray) -> list[int]:
    # Strict rise into the sample, strict fall after any flat plateau; the
    # first sample of a plateau is the reported peak location.
    out = []
    n = w.size
    i = 1
    while i < n - 1:
        if w[i] > w[i - 1]:
            j = i
            while j < n - 1 and w[j + 1] == w[j]:
                j += 1
            if j < n - 1 and w[j + 1] < w[j]:
                out.append(i)
            i = j + 1
        else:
            i += 1
    return out


def _prominence(w: np.ndarray, i: int) -> float:
    # Scan each side until a sample exceeds the peak (or the border) and take
    # the lowest value seen; prominence is height above the higher of the two.
    n = w.size
    left_min = w[i]
    j = i - 1
    while j >= 0 and w[j] <= w[i]:
        if w[j] < left_min:
            left_min = w[j]
        j -= 1
    right_min = w[i]
    j = i + 1
    while j < n and w[j] <= w[i]:
        if w[j] < right_min:
            right_min = w[j]
        j += 1
    return float(w[i] - max(left_min, right_min))


def _half_prominence_extent(w: np.ndarray, i: int, prom: float) -> tuple[int, int]:
    ref = w[i] - 0.5 * prom
    j = i - 1
    while j > 0 and w[j] > ref:
        j -= 1
    start = j
    k = i + 1
    n = w.size
    while k < n - 1 and w[k] > ref:
        k += 1
    return start, k


def find_peaks(x: np.ndarray, params: PeakParams,
               polarity: Polarity = "positive") -> list[Peak]:
    """Detect peaks of the requested polarity.

    Candidates are strict local maxima of the working signal, filtered by
    ``min_height`` (inclusive), thinned greedily so survivors are at least
    ``min_distance`` frames apart (larger peaks win, earlier frame on ties),
    and optionally truncated to the ``max_peaks`` largest. Each retained peak
    gets a [start, end] extent at half its prominence.
    """
    w = _working(x, polarity)
    if w.size < 3:
        raise DomainError(f"need >= 3 samples to detect peaks, got {w.size}")
    cand = [i for i in _local_maxima(w) if w[i] >= params.min_height]
    if not cand:
        return []
    # Greedy thinning: biggest first, earlier index breaks ties.
    order = sorted(cand, key=lambda i: (-w[i], i))
    kept: list[int] = []
    for i in order:
        if all(abs(i - j) >= params.min_distance for j in kept):
            kept.append(i)
    if params.max_peaks is not None and len(kept) > params.max_peaks:
        kept = kept[:params.max_peaks]
    kept.sort()
    sign = 1.0 if polarity == "positive" else -1.0
    peaks = []
    for i in kept:
        prom = _prominence(w, i)
        start, end = _half_prominence_extent(w, i, prom)
        peaks.append(Peak(start_frame=start, peak_frame=i, end_frame=end,
                          peak_value=float(sign * w[i]), prominence=prom,
                          polarity=polarity))
    return peaks
