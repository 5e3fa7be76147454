"""Transmitter chain: Gray-labeled DP-QAM, root-raised-cosine shaping, WDM mux/demux
and the exact log-sum-exp LLR demapper used as the linear-equalizer baseline.

Conventions
-----------
* Bits of one dual-polarization symbol are laid out as ``[x-pol m bits, y-pol m bits]``;
  within a polarization the first half of the bits drive the I axis, the second half Q.
* Bit value 0 maps to the positive half-axis, so an LLR > 0 means "bit 0 more likely".
* Waveform samples are in sqrt(W): ``mean(|x|^2 + |y|^2)`` is the launch power in W.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import logsumexp


class ShapeError(ValueError):
    """Array shapes or lengths are inconsistent with the requested operation."""


class AliasingError(ValueError):
    """A WDM channel does not fit inside the simulation bandwidth."""


def gray_code(n_bits: int) -> np.ndarray:
    """Binary-reflected Gray code of every index in ``range(2**n_bits)``."""
    idx = np.arange(1 << n_bits)
    return idx ^ (idx >> 1)


def int_to_bits(values: np.ndarray, n_bits: int) -> np.ndarray:
    """MSB-first bit expansion, shape ``values.shape + (n_bits,)``."""
    shifts = np.arange(n_bits - 1, -1, -1)
    return ((np.asarray(values)[..., None] >> shifts) & 1).astype(np.uint8)


def bits_to_int(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1)
    return bits @ weights


def _gray_pam(n_bits: int) -> tuple[np.ndarray, np.ndarray]:
    """Levels ``L-1, L-3, ..., -(L-1)`` and their Gray labels (label 0 most positive)."""
    n_levels = 1 << n_bits
    levels = (n_levels - 1) - 2.0 * np.arange(n_levels)
    return levels, gray_code(n_bits)


@dataclass(frozen=True)
class ModFormat:
    """Square Gray-labeled QAM with ``m`` bits per polarization (BPSK for m=1)."""

    m: int

    def __post_init__(self):
        if self.m < 1 or (self.m > 1 and self.m % 2):
            raise ValueError(f"only BPSK or square QAM supported, got m={self.m}")

    @property
    def bits_per_symbol(self) -> int:
        """Bits carried by one dual-polarization symbol."""
        return 2 * self.m

    @property
    def order(self) -> int:
        return 1 << self.m

    @cached_property
    def constellation(self) -> np.ndarray:
        """Unit-energy points indexed by their integer label (MSB-first bits)."""
        pts = np.zeros(self.order, dtype=complex)
        if self.m == 1:
            pts[0], pts[1] = 1.0, -1.0
            return pts
        k = self.m // 2
        levels, labels = _gray_pam(k)
        for i_idx, i_lab in enumerate(labels):
            for q_idx, q_lab in enumerate(labels):
                pts[(i_lab << k) | q_lab] = levels[i_idx] + 1j * levels[q_idx]
        return pts / np.sqrt(np.mean(np.abs(pts) ** 2))

    @cached_property
    def labels(self) -> np.ndarray:
        """Bit pattern of every constellation point, shape ``(2**m, m)``."""
        return int_to_bits(np.arange(self.order), self.m)

    @classmethod
    def from_name(cls, name: str) -> "ModFormat":
        table = {"bpsk": 1, "qpsk": 2, "4qam": 2, "16qam": 4, "64qam": 6, "256qam": 8}
        key = name.lower().replace("dp-", "").replace("-", "")
        if key not in table:
            raise ValueError(f"unknown modulation {name!r}")
        return cls(table[key])


@dataclass
class SymbolFrame:
    x: np.ndarray
    y: np.ndarray
    baud: float = 34e9

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=complex)
        self.y = np.asarray(self.y, dtype=complex)
        if self.x.shape != self.y.shape:
            raise ShapeError("polarizations must have equal length")

    def __len__(self) -> int:
        return len(self.x)

    def stacked(self) -> np.ndarray:
        """Shape ``(2, n)`` view with rows x, y."""
        return np.stack([self.x, self.y])


@dataclass
class DualPolWaveform:
    x: np.ndarray
    y: np.ndarray
    fs: float
    f_center_offset: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=complex)
        self.y = np.asarray(self.y, dtype=complex)
        if self.x.shape != self.y.shape:
            raise ShapeError("polarizations must have equal length")

    def __len__(self) -> int:
        return len(self.x)

    @property
    def power(self) -> float:
        """Mean total power over both polarizations (W)."""
        return float(np.mean(np.abs(self.x) ** 2 + np.abs(self.y) ** 2))

    def replace(self, x: np.ndarray, y: np.ndarray) -> "DualPolWaveform":
        return DualPolWaveform(x, y, self.fs, self.f_center_offset, dict(self.meta))


# --- mapping / demapping ---------------------------------------------------------


def gray_map(bits: np.ndarray, fmt: ModFormat, baud: float = 34e9) -> SymbolFrame:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    n = fmt.bits_per_symbol
    if bits.size % n:
        raise ShapeError(f"bit count {bits.size} not divisible by {n}")
    groups = bits.reshape(-1, 2, fmt.m)
    idx = bits_to_int(groups)
    pts = fmt.constellation
    return SymbolFrame(pts[idx[:, 0]], pts[idx[:, 1]], baud)


def hard_demap(symbols: SymbolFrame, fmt: ModFormat) -> np.ndarray:
    """Nearest-point decisions as a flat bit array in ``gray_map`` layout."""
    pts = fmt.constellation
    out = []
    for r in (symbols.x, symbols.y):
        nearest = np.argmin(np.abs(r[:, None] - pts[None, :]), axis=1)
        out.append(fmt.labels[nearest])
    return np.concatenate(out, axis=1).ravel()


def exact_llr_demap(rx: SymbolFrame, fmt: ModFormat, noise_var) -> np.ndarray:
    """Per-bit LLRs under a circular Gaussian assumption.

    ``noise_var`` is the complex noise variance, either a scalar or one value per
    polarization. Returns shape ``(n_symbols, 2m)``.
    """
    nv = np.broadcast_to(np.asarray(noise_var, dtype=float), (2,))
    if np.any(nv <= 0):
        raise ValueError("noise_var must be positive")
    pts, labels = fmt.constellation, fmt.labels
    out = []
    for r, var in zip((rx.x, rx.y), nv):
        metric = -np.abs(r[:, None] - pts[None, :]) ** 2 / var
        llr = np.empty((len(r), fmt.m))
        for k in range(fmt.m):
            zero = labels[:, k] == 0
            llr[:, k] = logsumexp(metric[:, zero], axis=1) - logsumexp(metric[:, ~zero], axis=1)
        out.append(llr)
    return np.concatenate(out, axis=1)


# --- pulse shaping -----------------------------------------------------------------


def rrc_spectrum(freqs: np.ndarray, rolloff: float) -> np.ndarray:
    """Square-root raised-cosine amplitude at frequencies normalized to the baud rate."""
    if not 0 < rolloff <= 1:
        raise ValueError("rolloff must be in (0, 1]")
    f = np.abs(freqs)
    f1, f2 = (1 - rolloff) / 2, (1 + rolloff) / 2
    rc = np.where(f <= f1, 1.0, 0.0)
    trans = (f > f1) & (f < f2)
    rc = np.where(trans, 0.5 * (1 + np.cos(np.pi / rolloff * (f - f1))), rc)
    return np.sqrt(rc)


def rrc_taps(rolloff: float, oversampling: int, span_symbols: int) -> np.ndarray:
    """Closed-form, truncated RRC impulse response with unit energy (odd length)."""
    if not 0 < rolloff <= 1:
        raise ValueError("rolloff must be in (0, 1]")
    half = span_symbols * oversampling // 2
    t = np.arange(-half, half + 1) / oversampling
    b = rolloff
    h = np.empty_like(t)
    at_zero = np.isclose(t, 0)
    at_sing = np.isclose(np.abs(t), 1 / (4 * b))
    reg = ~(at_zero | at_sing)
    tr = t[reg]
    h[reg] = (np.sin(np.pi * tr * (1 - b)) + 4 * b * tr * np.cos(np.pi * tr * (1 + b))) / (
        np.pi * tr * (1 - (4 * b * tr) ** 2)
    )
    h[at_zero] = 1 - b + 4 * b / np.pi
    h[at_sing] = b / np.sqrt(2) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * b)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b))
    )
    return h / np.sqrt(np.sum(h**2))


def _rrc_frequency_response(n: int, rolloff: float, oversampling: int, span_symbols: int | None):
    """Length-n DFT of a unit-energy RRC filter, zero-phase (centered on sample 0)."""
    if span_symbols is None:
        f = np.fft.fftfreq(n, d=1 / oversampling)
        return np.sqrt(oversampling) * rrc_spectrum(f, rolloff)
    taps = rrc_taps(rolloff, oversampling, span_symbols)
    if len(taps) > n:
        raise ShapeError("filter span longer than the signal block")
    ref = rrc_taps(rolloff, oversampling, 2048)
    if np.sum(ref[: (len(ref) - len(taps)) // 2] ** 2) * 2 > 1e-3:
        warnings.warn("RRC span holds less than 99.9% of the filter energy", stacklevel=3)
    buf = np.zeros(n)
    half = len(taps) // 2
    buf[: half + 1] = taps[half:]
    buf[-half:] = taps[:half]
    return np.fft.fft(buf)


def rrc_impulse(rolloff: float, oversampling: int, n_symbols: int) -> np.ndarray:
    """Periodic (block-length) RRC impulse response centered on sample 0, unit energy."""
    H = _rrc_frequency_response(n_symbols * oversampling, rolloff, oversampling, None)
    return np.fft.ifft(H).real


def rrc_shape(
    symbols: SymbolFrame,
    rolloff: float = 0.1,
    oversampling: int = 4,
    span_symbols: int | None = None,
) -> DualPolWaveform:
    """Upsample and RRC-filter both polarizations (circular, zero-delay).

    With ``span_symbols=None`` the filter is the exact block-periodic RRC designed in
    the frequency domain, which keeps the cascade with the matched filter exactly
    Nyquist. A finite span uses truncated closed-form taps instead. Output sample power
    equals the symbol power.
    """
    if oversampling < 2:
        raise ValueError("oversampling must be >= 2")
    n = len(symbols) * oversampling
    H = _rrc_frequency_response(n, rolloff, oversampling, span_symbols)
    out = []
    for s in (symbols.x, symbols.y):
        up = np.zeros(n, dtype=complex)
        up[::oversampling] = s
        out.append(np.fft.ifft(np.fft.fft(up) * H) * np.sqrt(oversampling))
    wave = DualPolWaveform(out[0], out[1], symbols.baud * oversampling)
    wave.meta.update(baud=symbols.baud, oversampling=oversampling, rolloff=rolloff)
    return wave


# --- WDM ---------------------------------------------------------------------------


def _shift(wave: DualPolWaveform, f_hz: float) -> tuple[np.ndarray, np.ndarray]:
    t = np.arange(len(wave)) / wave.fs
    rot = np.exp(2j * np.pi * f_hz * t)
    return wave.x * rot, wave.y * rot


def wdm_mux(
    channels: list[DualPolWaveform], spacing_hz: float, occupied_bw_hz: float | None = None
) -> DualPolWaveform:
    """Frequency-stack an odd number of channels, center channel at offset 0.

    Offsets are chosen on the DFT grid nearest to ``k * spacing_hz`` so shifted spectra
    stay exactly periodic within the block.
    """
    if len(channels) % 2 == 0:
        raise ValueError("channel count must be odd")
    fs = channels[0].fs
    n = len(channels[0])
    if any(c.fs != fs or len(c) != n for c in channels):
        raise ShapeError("channels must share fs and length")
    half_bw = (occupied_bw_hz or 0.0) / 2
    x = np.zeros(n, dtype=complex)
    y = np.zeros(n, dtype=complex)
    centre = len(channels) // 2
    df = fs / n
    for i, ch in enumerate(channels):
        offset = round((i - centre) * spacing_hz / df) * df
        if abs(offset) + half_bw >= fs / 2:
            raise AliasingError(f"channel {i} at {offset / 1e9:.1f} GHz exceeds fs/2")
        cx, cy = _shift(ch, offset)
        x += cx
        y += cy
    out = DualPolWaveform(x, y, fs)
    out.meta.update(channels[centre].meta, n_channels=len(channels), spacing_hz=spacing_hz)
    return out


def wdm_demux_center(wave: DualPolWaveform, bandwidth_hz: float) -> DualPolWaveform:
    """Ideal brick-wall selection of ``|f| <= bandwidth_hz / 2``."""
    if bandwidth_hz > wave.fs:
        raise ValueError("bandwidth exceeds sample rate")
    if bandwidth_hz == wave.fs:
        return wave.replace(wave.x.copy(), wave.y.copy())
    f = np.fft.fftfreq(len(wave), 1 / wave.fs)
    mask = np.abs(f) <= bandwidth_hz / 2
    x = np.fft.ifft(np.fft.fft(wave.x) * mask)
    y = np.fft.ifft(np.fft.fft(wave.y) * mask)
    return wave.replace(x, y)


def evm_db(rx: np.ndarray, ref: np.ndarray) -> float:
    """Error-vector magnitude in dB relative to the reference power."""
    err = np.mean(np.abs(rx - ref) ** 2)
    return float(10 * np.log10(err / np.mean(np.abs(ref) ** 2)))
