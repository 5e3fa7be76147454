"""Bit-interleaved turbo equalization: neural detector and LDPC decoder exchanging
extrinsic LLRs through a fixed pseudo-random interleaver."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ldpc import SparseParityCheck, bp_decode
from .neural import NeuralModel, predict_llrs


@dataclass(frozen=True)
class Interleaver:
    """Per-codeword permutation: stream position ``j`` carries codeword bit ``perm[j]``."""

    n: int
    seed: int = 0

    @property
    def perm(self) -> np.ndarray:
        return np.random.default_rng([self.seed, self.n]).permutation(self.n)

    def interleave(self, words: np.ndarray) -> np.ndarray:
        return np.asarray(words)[..., self.perm]

    def deinterleave(self, stream: np.ndarray) -> np.ndarray:
        stream = np.asarray(stream)
        out = np.empty_like(stream)
        out[..., self.perm] = stream
        return out


def codewords_to_symbol_bits(words: np.ndarray, interleaver: Interleaver, bits_per_symbol: int) -> np.ndarray:
    """Interleaves each codeword and regroups the serial stream as (n_symbols, 2m) labels."""
    stream = interleaver.interleave(np.atleast_2d(words)).ravel()
    if stream.size % bits_per_symbol:
        raise ValueError("codeword stream does not fill a whole number of symbols")
    return stream.reshape(-1, bits_per_symbol)


def symbol_llrs_to_codewords(llrs: np.ndarray, interleaver: Interleaver) -> np.ndarray:
    return interleaver.deinterleave(np.asarray(llrs).reshape(-1, interleaver.n))


@dataclass(frozen=True)
class TurboSchedule:
    """Outer passes, BP iterations per pass, and the damping factor applied to the
    decoder extrinsic LLRs before they return to the detector.

    BP extrinsics from words that have not converged are heavier-tailed than the
    consistent Gaussian a-priori the detector was trained on; scaling them down keeps
    overconfident wrong feedback from pulling the detector off. 1.0 feeds them back
    unchanged.
    """

    outer_iterations: int = 3
    bp_iterations: int = 4  # per decoder activation
    extrinsic_scale: float = 0.5

    def __post_init__(self):
        if self.outer_iterations < 1 or self.bp_iterations < 1:
            raise ValueError("iteration counts must be positive")
        if not 0 < self.extrinsic_scale <= 1:
            raise ValueError("extrinsic_scale must lie in (0, 1]")

    @classmethod
    def equal_total_budget(cls, outer_iterations: int, total_bp: int, extrinsic_scale: float = 0.5) -> "TurboSchedule":
        """Splits one BP budget evenly across the outer passes (at least one each)."""
        return cls(outer_iterations, max(1, total_bp // outer_iterations), extrinsic_scale)


@dataclass
class TurboResult:
    hard: np.ndarray  # (n_codewords, n) decoded codewords after the final pass
    info_ber: list = field(default_factory=list)  # per outer pass, if truth was given
    bp_iterations: list = field(default_factory=list)  # mean BP iterations used per pass
    errors: list = field(default_factory=list)
    syndrome_ok: np.ndarray | None = None


def turbo_decode(
    rx_windows: np.ndarray,
    model: NeuralModel,
    code: SparseParityCheck,
    interleaver: Interleaver,
    schedule: TurboSchedule = TurboSchedule(),
    truth: np.ndarray | None = None,
    scrambler: np.ndarray | None = None,
    block: int | None = None,
) -> TurboResult:
    """Iterates detector -> deinterleave -> BP -> interleave, starting from zero a-priori.

    ``rx_windows`` are the window reals of every received symbol in stream order;
    ``truth`` (codewords) enables per-pass information-bit BER.

    With a ``scrambler`` (codeword-order bits), the transmitted word is ``c XOR s``:
    LLR signs are flipped by ``s`` on the way into the decoder and back on the way
    out, so any payload can be decoded as a coset of the code. ``truth`` then
    defaults to the all-zero word. ``block`` is the burst length in symbols for
    windowing the a-priori feedback.

    A codeword whose syndrome is satisfied keeps its decision and is not decoded
    again; the loop ends early once every word has converged, so the per-pass
    lists may be shorter than ``outer_iterations``.
    """
    m2 = model.topology.bits_per_symbol
    n_bits = rx_windows.shape[0] * m2
    if n_bits % code.n or interleaver.n != code.n:
        raise ValueError("symbol stream length is not a whole number of codewords")
    n_cw = n_bits // code.n
    flip = None if scrambler is None else 1.0 - 2.0 * np.asarray(scrambler, dtype=float).reshape(n_cw, code.n)
    if flip is not None and truth is None:
        truth = np.zeros((n_cw, code.n), np.uint8)
    apr_words = np.zeros((n_cw, code.n))
    result = TurboResult(hard=np.zeros((n_cw, code.n), np.uint8), syndrome_ok=np.zeros(n_cw, bool))
    for _ in range(schedule.outer_iterations):
        active = np.flatnonzero(~result.syndrome_ok)
        if active.size == 0:
            break
        apr_symbols = interleaver.interleave(apr_words).reshape(-1, m2)
        ext, _ = predict_llrs(model, rx_windows, apr_symbols if model.topology.use_apr else None, block=block)
        ch = symbol_llrs_to_codewords(ext, interleaver)
        if flip is not None:
            ch = ch * flip
        # words whose syndrome is already satisfied are frozen, like BP's own early exit
        bp = bp_decode(code, ch[active], max_iter=schedule.bp_iterations)
        extr = schedule.extrinsic_scale * np.atleast_2d(bp.extrinsic)
        apr_words[active] = extr if flip is None else extr * flip[active]
        result.hard[active] = np.atleast_2d(bp.hard)
        result.syndrome_ok[active] = np.atleast_1d(bp.syndrome_ok)
        result.bp_iterations.append(float(np.sum(bp.iterations)) / n_cw)
        if truth is not None:
            err = int(np.count_nonzero(result.hard[:, : code.k] != np.atleast_2d(truth)[:, : code.k]))
            result.errors.append(err)
            result.info_ber.append(err / (n_cw * code.k))
    return result
