"""Batch Fourier analysis: amplitude spectra, PSD, peaks, linewidths, demodulation.

Conventions
-----------
* Spectra are one-sided, ``0..Nyquist``.
* ``amplitude_spectrum`` is window-gain corrected: a unit sinusoid centred
  on a bin reads 1.0.
* ``pad`` zero-pads the record by an integer factor before the FFT.  The bin
  spacing is then ``1/(pad*T)`` while ``resolution_hz`` stays ``1/T``.
* Linewidths are meant to be taken on power spectra (``psd`` kind).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from .bloch import TimeSeries

WINDOWS = ("rect", "hann")


@dataclass
class Peak:
    freq: float
    amplitude: float
    fwhm: float | None = None
    order_k: int | None = None
    index: int = -1

    def to_dict(self) -> dict:
        return {"freq_hz": self.freq, "amplitude": self.amplitude, "fwhm_hz": self.fwhm,
                "order_k": self.order_k}


@dataclass
class Spectrum:
    freqs: np.ndarray
    values: np.ndarray
    kind: str
    window: str
    resolution_hz: float
    peaks: list[Peak] = field(default_factory=list)

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in ("amplitude", "psd"):
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if len(self.freqs) > 1 and not np.all(np.diff(self.freqs) > 0):
            raise ValueError("frequency grid must be strictly increasing")

    @property
    def bin_hz(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    def nearest_bin(self, freq: float) -> int:
        return int(np.clip(round((freq - self.freqs[0]) / self.bin_hz), 0, len(self.freqs) - 1))

    def value_at(self, freq: float) -> float:
        return float(self.values[self.nearest_bin(freq)])

    def local_max(self, freq: float, half_width_hz: float) -> tuple[float, float]:
        """Largest value within ``freq +/- half_width_hz``: ``(freq, value)``."""
        lo = self.nearest_bin(freq - half_width_hz)
        hi = self.nearest_bin(freq + half_width_hz) + 1
        i = lo + int(np.argmax(self.values[lo:hi]))
        return float(self.freqs[i]), float(self.values[i])

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["freq_hz", "value"])
            for f, v in zip(self.freqs, self.values):
                w.writerow([repr(float(f)), repr(float(v))])
        meta = {"kind": self.kind, "window": self.window, "resolution_hz": self.resolution_hz,
                "bin_hz": self.bin_hz}
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")
        return path


def _check_series(series: TimeSeries):
    x = np.asarray(series.values, dtype=float)
    if x.ndim != 1:
        raise ValueError("spectral analysis needs a scalar time series")
    if len(x) < 16:
        raise ValueError("need at least 16 samples")
    return x


def _window(name: str, n: int) -> np.ndarray:
    if name == "rect":
        return np.ones(n)
    if name == "hann":
        return signal.get_window("hann", n, fftbins=True)
    raise ValueError(f"unknown window {name!r}; expected one of {WINDOWS}")


def amplitude_spectrum(series: TimeSeries, window: str = "rect", pad: int = 1) -> Spectrum:
    x = _check_series(series)
    n = len(x)
    w = _window(window, n)
    nfft = int(pad) * n
    X = np.fft.rfft(x * w, nfft)
    amp = np.abs(X) / w.sum()
    amp[1:] *= 2.0
    if nfft % 2 == 0:
        amp[-1] /= 2.0
    freqs = np.fft.rfftfreq(nfft, series.dt)
    return Spectrum(freqs, amp, "amplitude", window, 1.0 / (n * series.dt))


def psd(series: TimeSeries, method: str = "periodogram", window: str = "rect",
        nperseg: int | None = None, pad: int = 1) -> Spectrum:
    """One-sided power spectral density in units^2/Hz.

    ``averaged-segments`` is Welch's method (50 % overlap, Hann by default,
    ``nperseg`` defaulting to 1/16 of the record).
    """
    x = _check_series(series)
    fs = series.sample_rate
    n = len(x)
    if method == "periodogram":
        w = _window(window, n)
        nfft = int(pad) * n
        X = np.fft.rfft(x * w, nfft)
        p = np.abs(X) ** 2 / (fs * np.sum(w * w))
        p[1:] *= 2.0
        if nfft % 2 == 0:
            p[-1] /= 2.0
        freqs = np.fft.rfftfreq(nfft, series.dt)
        return Spectrum(freqs, p, "psd", window, fs / n)
    if method == "averaged-segments":
        seg = nperseg or max(16, n // 16)
        if seg > n:
            raise ValueError(f"segment length {seg} exceeds series length {n}")
        win = "hann" if window == "rect" else window
        freqs, p = signal.welch(x, fs=fs, window=win, nperseg=seg, detrend=False,
                                scaling="density", return_onesided=True)
        return Spectrum(freqs, p, "psd", f"{win}-welch", fs / seg)
    raise ValueError(f"unknown PSD method {method!r}")


def _parabolic(ym1, y0, yp1):
    denom = ym1 - 2.0 * y0 + yp1
    if denom == 0:
        return 0.0, y0
    d = 0.5 * (ym1 - yp1) / denom
    return d, y0 - 0.25 * (ym1 - yp1) * d


def find_peaks(spec: Spectrum, rel_threshold: float = 0.01,
               min_separation: float = 0.0) -> list[Peak]:
    """Local maxima above ``rel_threshold * max``, refined by a 3-point parabola.

    Candidates closer than ``min_separation`` are merged: the taller one is
    kept.  The result is sorted by frequency.
    """
    if not 0 < rel_threshold < 1:
        raise ValueError("rel_threshold must lie in (0, 1)")
    v = spec.values
    if len(v) < 3:
        return []
    vmax = float(np.max(v))
    if vmax <= 0:
        return []
    thr = rel_threshold * vmax
    mid = v[1:-1]
    idx = np.nonzero((mid > v[:-2]) & (mid >= v[2:]) & (mid > thr))[0] + 1
    order = idx[np.argsort(-v[idx], kind="stable")]
    kept: list[int] = []
    kept_f: list[float] = []
    df = spec.bin_hz
    for i in order:
        d, amp = _parabolic(v[i - 1], v[i], v[i + 1])
        f = spec.freqs[i] + d * df
        if all(abs(f - g) >= min_separation for g in kept_f):
            kept.append(int(i))
            kept_f.append(float(f))
    peaks = []
    for i, f in sorted(zip(kept, kept_f), key=lambda p: p[1]):
        _, amp = _parabolic(v[i - 1], v[i], v[i + 1])
        peaks.append(Peak(freq=f, amplitude=float(amp), index=i))
    return peaks


def fwhm(spec: Spectrum, peak: Peak, search_hz: float | None = None) -> float:
    """Full width at half maximum of ``peak`` by linear interpolation of the crossings."""
    v = spec.values
    i = peak.index if peak.index >= 0 else spec.nearest_bin(peak.freq)
    # climb to the local maximum in case the index is off by a bin
    while 0 < i < len(v) - 1 and max(v[i - 1], v[i + 1]) > v[i]:
        i = i - 1 if v[i - 1] > v[i + 1] else i + 1
    top = v[i]
    half = 0.5 * top
    limit = len(v) if search_hz is None else max(2, int(math.ceil(search_hz / spec.bin_hz)))

    def crossing(step):
        j = i
        for _ in range(limit):
            k = j + step
            if k < 0 or k >= len(v):
                break
            if v[k] > top:
                break
            if v[k] <= half:
                frac = (v[j] - half) / (v[j] - v[k])
                return spec.freqs[j] + step * frac * spec.bin_hz
            j = k
        raise ValueError(f"half maximum not bracketed around {spec.freqs[i]:.6g} Hz")

    return float(crossing(+1) - crossing(-1))


def linewidth(series: TimeSeries, pad: int = 8) -> tuple[float, float]:
    """Frequency and FWHM of the strongest line in a rectangular-window power spectrum."""
    spec = psd(series, "periodogram", "rect", pad=pad)
    v = spec.values.copy()
    v[0] = 0.0
    i = int(np.argmax(v))
    pk = Peak(float(spec.freqs[i]), float(spec.values[i]), index=i)
    return pk.freq, fwhm(spec, pk)


def demodulate(series: TimeSeries, ref_freq: float, lp_cutoff: float,
               transition: float | None = None) -> tuple[TimeSeries, TimeSeries]:
    """Quadrature mixing at ``ref_freq`` followed by a linear-phase FIR low-pass.

    The low-pass is a Blackman windowed sinc whose -6 dB point sits at
    ``lp_cutoff``; ``transition`` (default ``lp_cutoff``) sets the length.
    Samples within half a filter length of either end are dropped, so the
    returned series start later than the input.
    """
    x = _check_series(series)
    fs = series.sample_rate
    if not ref_freq < fs / 4:
        raise ValueError("ref_freq must be below Nyquist/2")
    if not 0 < lp_cutoff < ref_freq / 2:
        raise ValueError("lp_cutoff must lie in (0, ref_freq/2)")
    transition = transition or lp_cutoff
    ntaps = int(math.ceil(5.5 * fs / transition)) | 1
    half = ntaps // 2
    if len(x) <= ntaps:
        raise ValueError("series shorter than the low-pass filter")
    taps = signal.firwin(ntaps, lp_cutoff, window="blackman", fs=fs)
    t = series.times
    z = 2.0 * x * np.exp(-2j * math.pi * ref_freq * t)
    zf = signal.fftconvolve(z, taps, mode="valid")
    t0 = series.t0 + half * series.dt
    env = TimeSeries(np.abs(zf), series.dt, t0, series.units)
    phase = TimeSeries(np.unwrap(np.angle(zf)), series.dt, t0, "rad")
    return env, phase


def phase_slope_frequency(phase: TimeSeries) -> float:
    """Frequency offset (Hz) from a straight-line fit to an unwrapped phase record."""
    slope = np.polyfit(phase.times - phase.t0, phase.values, 1)[0]
    return float(slope / (2.0 * math.pi))
