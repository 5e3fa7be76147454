"""Fast analytic self-checks, runnable without a test framework (``turboeq verify``).

Each check returns an :class:`OracleResult`; all of them finish in seconds.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exitchart import j_function, j_function_quadrature, j_inverse, mi_from_llrs
from .fiber import FiberSpanConfig, SsfmSettings, dispersion_filter, ssfm_span
from .ldpc import DVBS2_5_6, DVBS2_9_10, bp_decode, construct_code, design_rate, encode
from .neural import (
    AprSynthSpec,
    NeuralModel,
    Topology,
    _Cache,
    backward,
    compute_loss,
    loss_bce_multilabel,
    synthesize_apr,
)
from .signal import DualPolWaveform, ModFormat, gray_map, rrc_shape
from .rxdsp import matched_filter_downsample


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    seconds: float


def _random_wave(n_sym=1024, seed=0, power_w=1e-3):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, (n_sym, 8), dtype=np.uint8)
    w = rrc_shape(gray_map(bits, ModFormat(4)), 0.1, 4)
    s = math.sqrt(power_w / w.power)
    return w.replace(w.x * s, w.y * s)


def ssfm_linear_error() -> float:
    """gamma = 0 over one 80 km span against the exact dispersion/loss transfer function."""
    cfg = FiberSpanConfig(gamma_per_W_km=0.0)
    w = _random_wave()
    out = ssfm_span(w, cfg, SsfmSettings(step_km=1.0))
    H = dispersion_filter(len(w), w.fs, cfg.beta2, cfg.length_m) * math.exp(-cfg.alpha * cfg.length_m / 2)
    ref = np.fft.ifft(np.fft.fft(np.stack([w.x, w.y]), axis=1) * H, axis=1)
    got = np.stack([out.x, out.y])
    return float(np.max(np.abs(got - ref)) / np.max(np.abs(ref)))


def ssfm_phase_error() -> float:
    """D = 0, alpha = 0, constant envelope: rotation by (8/9) gamma P L."""
    cfg = FiberSpanConfig(D_ps_nm_km=0.0, alpha_dB_km=0.0)
    n, P = 256, 5e-3
    x = np.full(n, math.sqrt(P / 2), complex)
    w = DualPolWaveform(x, x.copy(), 136e9)
    out = ssfm_span(w, cfg, SsfmSettings(step_km=1.0))
    expected = 8 / 9 * cfg.gamma * P * cfg.length_m
    got = np.angle(out.x / w.x)
    return float(np.max(np.abs(got - expected)))


def ssfm_energy_error() -> float:
    cfg = FiberSpanConfig(alpha_dB_km=0.0)
    w = _random_wave(power_w=1e-2)
    out = ssfm_span(w, cfg, SsfmSettings(step_km=1.0))
    return abs(out.power / w.power - 1)


def rrc_isi() -> float:
    rng = np.random.default_rng(1)
    fr = gray_map(rng.integers(0, 2, 4096 * 8, dtype=np.uint8), ModFormat(4))
    back = matched_filter_downsample(rrc_shape(fr, 0.1, 4), 0.1, 4)
    return float(np.max(np.abs(back.stacked() - fr.stacked())))


def design_rate_error() -> float:
    a = design_rate(DVBS2_9_10, exact=True) - Fraction(9, 10)
    b = design_rate(DVBS2_5_6, exact=True) - Fraction(5, 6)
    return float(abs(a) + abs(b))


def j_roundtrip_error() -> float:
    I = np.arange(1, 100) / 100
    return float(np.max(np.abs(j_function(j_inverse(I)) - I)))


def j_quadrature_error() -> float:
    return max(abs(j_function(s) - j_function_quadrature(s)) for s in np.linspace(0.05, 8, 60))


def apr_mi_error() -> float:
    rng = np.random.default_rng(2)
    bits = rng.integers(0, 2, 100_000)
    worst = 0.0
    for k, I in enumerate((0.1, 0.5, 0.9)):
        llr = synthesize_apr(bits, AprSynthSpec(I, k))
        worst = max(worst, abs(mi_from_llrs(llr, bits) - I))
    return worst


def bce_identity_error() -> float:
    rng = np.random.default_rng(3)
    L = rng.normal(0, 4, 1000)
    b = rng.integers(0, 2, 1000)
    p = 1 / (1 + np.exp(-L))
    ref = -np.mean((1 - b) * np.log(p) + b * np.log1p(-p))
    return abs(loss_bce_multilabel(L, b) - ref)


def gradient_error(width: int = 16, seed: int = 0) -> float:
    """Worst relative FD error over sampled entries of every parameter, both loss branches."""
    topo = Topology(3, 8, width=width, n_hidden=4)
    model = NeuralModel(topo, dropout=0.2, seed=seed)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((32, topo.in_dim))
    bits = rng.integers(0, 2, (32, 8))
    worst = 0.0
    for scale in (0.1, 8.0):  # small APR -> EXT branch binds, large APR -> APP branch
        X[:, topo.n_real :] = scale * rng.standard_normal((32, topo.n_apr))
        X[:, topo.target_apr] = scale * (1 - 2 * bits)
        cache = _Cache(x=None)
        _, d_ext, d_app = compute_loss(model, X, bits, "teq_minmax", "train", 7, cache)
        grads, _ = backward(model, cache, d_ext, d_app)
        for name, p in model.params.items():
            for _ in range(2):
                idx = tuple(int(rng.integers(s)) for s in p.shape)
                state = model.copy_state()
                old = p[idx]
                p[idx] = old + 1e-6
                up = compute_loss(model, X, bits, "teq_minmax", "train", 7)
                model.load_state(state)
                p = model.params[name]
                p[idx] = old - 1e-6
                dn = compute_loss(model, X, bits, "teq_minmax", "train", 7)
                model.load_state(state)
                p = model.params[name]
                fd = (up - dn) / 2e-6
                an = grads[name][idx]
                if abs(fd) + abs(an) > 1e-9:
                    worst = max(worst, abs(fd - an) / (abs(fd) + abs(an)))
    return worst


def ldpc_noiseless_errors() -> float:
    code = construct_code(DVBS2_5_6, 1200, seed=0)
    rng = np.random.default_rng(4)
    words = encode(code, rng.integers(0, 2, (4, code.k)))
    res = bp_decode(code, 10.0 * (1 - 2 * words.astype(float)), max_iter=5)
    return float(np.count_nonzero(res.hard != words)) + float(np.count_nonzero(code.syndrome(words)))


CHECKS = [
    ("ssfm_linear_limit", ssfm_linear_error, 1e-6),
    ("ssfm_nonlinear_phase", ssfm_phase_error, 1e-6),
    ("ssfm_energy_conservation", ssfm_energy_error, 1e-6),
    ("rrc_nyquist_isi", rrc_isi, 1e-6),
    ("design_rate_exact", design_rate_error, 0.0),
    ("j_roundtrip", j_roundtrip_error, 1e-3),
    ("j_vs_quadrature", j_quadrature_error, 1e-3),
    ("apr_mutual_information", apr_mi_error, 0.01),
    ("bce_identity", bce_identity_error, 1e-12),
    ("gradient_finite_difference", gradient_error, 1e-4),
    ("ldpc_noiseless_decode", ldpc_noiseless_errors, 0.0),
]


def run_all() -> list[OracleResult]:
    out = []
    for name, fn, tol in CHECKS:
        t0 = time.perf_counter()
        v = float(fn())
        out.append(OracleResult(name, bool(v <= tol), v, tol, time.perf_counter() - t0))
    return out
