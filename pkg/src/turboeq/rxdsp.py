"""Receiver front end: matched filter, data-aided least-squares butterfly equalizer,
BER and Q-factor metrics.

No carrier-phase recovery block exists because the channel model carries no laser
phase noise; the data-aided equalizer absorbs any static rotation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfcinv

from .signal import DualPolWaveform, ShapeError, SymbolFrame, _rrc_frequency_response


def matched_filter_downsample(
    wave: DualPolWaveform, rolloff: float = 0.1, oversampling: int = 4, span_symbols: int | None = None
) -> SymbolFrame:
    """RRC matched filter and decimation at the zero-delay sampling phase."""
    n = len(wave)
    if n % oversampling:
        raise ShapeError("waveform length must be a multiple of the oversampling factor")
    H = _rrc_frequency_response(n, rolloff, oversampling, span_symbols) / math.sqrt(oversampling)
    out = [np.fft.ifft(np.fft.fft(s) * H)[::oversampling] for s in (wave.x, wave.y)]
    return SymbolFrame(out[0], out[1], wave.fs / oversampling)


class EqualizerStateError(RuntimeError):
    pass


@dataclass
class LinearEq:
    """2x2 butterfly FIR; ``taps[o, i, k]`` weights input pol ``i`` at offset
    ``k - tap_count // 2`` for output pol ``o``."""

    tap_count: int = 31
    taps: np.ndarray | None = None
    trained: bool = False
    mse: np.ndarray = field(default_factory=lambda: np.full(2, np.nan))

    def __post_init__(self):
        if self.tap_count % 2 == 0 or self.tap_count < 1:
            raise ValueError("tap_count must be a positive odd integer")


def _regressors(rx: SymbolFrame, tap_count: int) -> np.ndarray:
    """Rows ``[x[n-c..n+c], y[n-c..n+c]]`` with circular indexing, shape (n, 2T)."""
    c = tap_count // 2
    offsets = np.arange(-c, c + 1)
    idx = (np.arange(len(rx))[:, None] + offsets[None, :]) % len(rx)
    return np.concatenate([rx.x[idx], rx.y[idx]], axis=1)


def ls_equalizer_fit(rx: SymbolFrame, ref: SymbolFrame, tap_count: int = 31, ridge: float = 1e-9) -> LinearEq:
    if len(rx) != len(ref):
        raise ShapeError("rx and reference must be aligned and of equal length")
    if len(rx) < 4 * tap_count:
        raise ShapeError("training sequence too short for the requested tap count")
    A = _regressors(rx, tap_count)
    gram = A.conj().T @ A
    scale = np.real(np.trace(gram)) / gram.shape[0]
    if scale == 0 or np.linalg.cond(gram) > 1e12:
        warnings.warn("ill-conditioned equalizer normal matrix, using ridge solve", stacklevel=2)
        gram = gram + ridge * max(scale, 1.0) * np.eye(gram.shape[0])
    eq = LinearEq(tap_count)
    eq.taps = np.empty((2, 2, tap_count), dtype=complex)
    mse = np.empty(2)
    for o, target in enumerate((ref.x, ref.y)):
        w = np.linalg.solve(gram, A.conj().T @ target)
        eq.taps[o, 0], eq.taps[o, 1] = w[:tap_count], w[tap_count:]
        mse[o] = np.mean(np.abs(A @ w - target) ** 2)
    eq.mse = mse
    eq.trained = True
    return eq


def ls_equalizer_apply(eq: LinearEq, rx: SymbolFrame) -> SymbolFrame:
    if not eq.trained or eq.taps is None:
        raise EqualizerStateError("equalizer has not been fitted")
    A = _regressors(rx, eq.tap_count)
    w = eq.taps.reshape(2, -1)
    out = A @ w.T
    return SymbolFrame(out[:, 0], out[:, 1], rx.baud)


def noise_variance(eq_out: SymbolFrame, ref: SymbolFrame) -> np.ndarray:
    """Per-polarization complex error variance against known symbols."""
    return np.array([np.mean(np.abs(eq_out.x - ref.x) ** 2), np.mean(np.abs(eq_out.y - ref.y) ** 2)])


@dataclass(frozen=True)
class MetricReport:
    ber: float
    q_factor_dB: float
    count: int
    errors: int


def q_from_ber(ber: float) -> float:
    """Q in dB from pre-FEC BER; +inf for error-free, -inf at or beyond 0.5."""
    if ber <= 0:
        return math.inf
    if ber >= 0.5:
        return -math.inf
    return float(20 * np.log10(math.sqrt(2) * erfcinv(2 * ber)))


def ber_and_q(decisions_or_llrs, truth) -> MetricReport:
    """Hard-decision BER and Q. Float input is read as LLRs (negative means bit 1)."""
    est = np.asarray(decisions_or_llrs)
    truth = np.asarray(truth).astype(np.uint8).ravel()
    if est.size != truth.size:
        raise ShapeError("decisions and truth differ in length")
    bits = (est.ravel() < 0) if np.issubdtype(est.dtype, np.floating) else est.ravel().astype(bool)
    errors = int(np.count_nonzero(bits.astype(np.uint8) != truth))
    ber = errors / truth.size if truth.size else 0.0
    return MetricReport(ber, q_from_ber(ber), int(truth.size), errors)
