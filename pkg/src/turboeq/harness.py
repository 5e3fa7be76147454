"""Experiment orchestration: channel simulation, datasets, training, sweeps and
result files.

Every random draw is keyed by ``(config seed, stream, power index, burst index)``
so a row can be reproduced in isolation and sweep points may run in any order or
in separate processes.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import _container
from .config import ExperimentConfig
from .exitchart import ExitCurve, fit_cubic, max_check_degree, measure_detector_exit, optimize_degrees
from .fiber import dbm_to_watt, propagate_link, residual_dispersion_filter, set_launch_power
from .ldpc import BCH_RATE, DegreeDistribution, bch_pass, bp_decode, construct_code, design_rate
from .neural import (
    NeuralModel,
    Topology,
    TrainingData,
    TrainingDivergence,
    TrainSpec,
    predict_llrs,
    train,
    window_reals,
)
from .rxdsp import ber_and_q, ls_equalizer_apply, ls_equalizer_fit, matched_filter_downsample, noise_variance
from .signal import (
    ModFormat,
    SymbolFrame,
    exact_llr_demap,
    gray_map,
    hard_demap,
    rrc_shape,
    wdm_demux_center,
    wdm_mux,
)
from .turbo import Interleaver, TurboSchedule, symbol_llrs_to_codewords, turbo_decode

DATASET_FORMAT_VERSION = 1
CSV_FORMAT_VERSION = 1
CSV_COLUMNS = (
    "digest",
    "launch_power_dBm",
    "receiver",
    "code",
    "code_rate",
    "metric",
    "value",
    "count",
    "errors",
    "bp_iterations",
    "seed",
)

# independent random streams
_TRAIN, _TEST, _EXIT, _INTERFERER, _ASE, _MODEL = range(1, 7)


@dataclass(frozen=True)
class ResultRow:
    digest: str
    launch_power_dBm: float
    receiver: str
    metric: str
    value: float
    count: int = 0
    errors: int = 0
    seed: int = 0
    code: str = ""
    code_rate: float = math.nan
    bp_iterations: float = math.nan

    def csv_fields(self) -> list[str]:
        d = asdict(self)
        out = []
        for k in CSV_COLUMNS:
            v = d[k]
            out.append(repr(float(v)) if isinstance(v, float) else str(v))
        return out


def write_results(rows: list[ResultRow], out_dir, stem: str, cfg: ExperimentConfig, summary: dict | None = None) -> dict:
    """Writes ``<stem>.csv`` (one row per measurement) and ``<stem>.json`` (run manifest)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow(r.csv_fields())
    manifest = {
        "csv": csv_path.name,
        "csv_format_version": CSV_FORMAT_VERSION,
        "digest": cfg.digest(),
        "seed": cfg.seed,
        "rows": len(rows),
        "config": cfg.model_dump(mode="json"),
        **(summary or {}),
    }
    (out / f"{stem}.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return {"csv": str(csv_path), "manifest": str(out / f"{stem}.json"), "rows": len(rows)}


def read_results(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for r in reader:
            rows.append(
                ResultRow(
                    digest=r["digest"],
                    launch_power_dBm=float(r["launch_power_dBm"]),
                    receiver=r["receiver"],
                    metric=r["metric"],
                    value=float(r["value"]),
                    count=int(r["count"]),
                    errors=int(r["errors"]),
                    seed=int(r["seed"]),
                    code=r["code"],
                    code_rate=float(r["code_rate"]),
                    bp_iterations=float(r["bp_iterations"]),
                )
            )
    return rows


# --- channel -----------------------------------------------------------------------------


def simulate_burst(cfg: ExperimentConfig, power_dBm: float, bits: np.ndarray, key: tuple) -> tuple[SymbolFrame, SymbolFrame]:
    """TX -> link -> RX front end for one circular burst.

    Returns the transmitted symbols and the matched-filtered centre-channel symbols
    scaled back to unit average power per polarization.
    """
    fmt = ModFormat(cfg.m)
    tx = gray_map(bits, fmt, cfg.baud)
    n_ch_power = power_dBm - 10 * math.log10(cfg.channels)  # equal share per channel
    wave = set_launch_power(rrc_shape(tx, cfg.rolloff, cfg.oversampling), power_dBm if cfg.channels == 1 else n_ch_power)
    if cfg.channels > 1:
        rng = np.random.default_rng([cfg.seed, _INTERFERER, *key])
        chans = []
        for i in range(cfg.channels):
            if i == cfg.channels // 2:
                chans.append(wave)
            else:
                other = gray_map(rng.integers(0, 2, bits.shape, dtype=np.uint8), fmt, cfg.baud)
                chans.append(set_launch_power(rrc_shape(other, cfg.rolloff, cfg.oversampling), n_ch_power))
        wave = wdm_mux(chans, cfg.spacing_hz, cfg.baud * (1 + cfg.rolloff))
    link = cfg.link_config(power_dBm)
    out = propagate_link(wave, link, cfg.ssfm(), rng_seed=[cfg.seed, _ASE, *key])
    H = np.conj(residual_dispersion_filter(len(out), out.fs, link))
    out = out.replace(np.fft.ifft(np.fft.fft(out.x) * H), np.fft.ifft(np.fft.fft(out.y) * H))
    if cfg.channels > 1:
        out = wdm_demux_center(out, cfg.baud * (1 + cfg.rolloff))
    rx = matched_filter_downsample(out, cfg.rolloff, cfg.oversampling)
    scale = math.sqrt(dbm_to_watt(power_dBm if cfg.channels == 1 else n_ch_power) / 2)
    return tx, SymbolFrame(rx.x / scale, rx.y / scale, rx.baud)


@dataclass
class Dataset:
    """LE-equalized windows of one or more bursts at a single launch power."""

    windows: np.ndarray  # (n, 4W) float32
    bits: np.ndarray  # (n, 2m) uint8
    ref_symbols: np.ndarray  # (n, 4) float32, transmitted [xI, xQ, yI, yQ]
    eq_symbols: np.ndarray  # (n, 4) float32, LE output
    power_dBm: float
    seed: int
    burst: int
    W: int
    le_mse: float = math.nan
    noise_var: np.ndarray = field(default_factory=lambda: np.full(2, np.nan))

    def __len__(self) -> int:
        return len(self.bits)

    def training_data(self) -> TrainingData:
        return TrainingData(self.windows, self.bits, self.W, self.burst)

    def eq_frame(self) -> SymbolFrame:
        e = self.eq_symbols.astype(float)
        return SymbolFrame(e[:, 0] + 1j * e[:, 1], e[:, 2] + 1j * e[:, 3])


def _to4(frame: SymbolFrame) -> np.ndarray:
    return np.stack([frame.x.real, frame.x.imag, frame.y.real, frame.y.imag], axis=1).astype(np.float32)


def burst_length(cfg: ExperimentConfig, codeword_bits: int | None = None) -> int:
    """Burst size in symbols, rounded down to whole codewords when a code is given."""
    b = cfg.montecarlo.burst_symbols
    if codeword_bits:
        syms = math.lcm(codeword_bits, cfg.bits_per_symbol) // cfg.bits_per_symbol
        b = max(syms, (b // syms) * syms)
    return b


def simulate_dataset(
    cfg: ExperimentConfig,
    power_dBm: float,
    n_symbols: int,
    stream: int,
    power_index: int,
    burst: int | None = None,
    first_burst: int = 0,
) -> Dataset:
    """Runs enough bursts for ``n_symbols`` (rounded up to whole bursts). Each burst
    draws fresh payload bits and is equalized by its own data-aided LS equalizer."""
    burst = burst or min(cfg.montecarlo.burst_symbols, n_symbols)
    n_bursts = max(1, math.ceil(n_symbols / burst))
    W = cfg.network.window
    parts = {"windows": [], "bits": [], "ref": [], "eq": []}
    mse, nv = [], []
    for b in range(first_burst, first_burst + n_bursts):
        key = (stream, power_index, b)
        rng = np.random.default_rng([cfg.seed, *key])
        bits = rng.integers(0, 2, (burst, cfg.bits_per_symbol), dtype=np.uint8)
        tx, rx = simulate_burst(cfg, power_dBm, bits, key)
        eq = ls_equalizer_fit(rx, tx, min(cfg.le_taps, 2 * (burst // 8) + 1))
        out = ls_equalizer_apply(eq, rx)
        parts["windows"].append(window_reals(out, W).astype(np.float32))
        parts["bits"].append(bits)
        parts["ref"].append(_to4(tx))
        parts["eq"].append(_to4(out))
        mse.append(float(np.mean(eq.mse)))
        nv.append(noise_variance(out, tx))
    return Dataset(
        windows=np.concatenate(parts["windows"]),
        bits=np.concatenate(parts["bits"]),
        ref_symbols=np.concatenate(parts["ref"]),
        eq_symbols=np.concatenate(parts["eq"]),
        power_dBm=power_dBm,
        seed=cfg.seed,
        burst=burst,
        W=W,
        le_mse=float(np.mean(mse)),
        noise_var=np.mean(nv, axis=0),
    )


def save_dataset(ds: Dataset, path, cfg: ExperimentConfig) -> None:
    manifest = {
        "kind": "turboeq-dataset",
        "format_version": DATASET_FORMAT_VERSION,
        "config_digest": cfg.digest(),
        "seed": ds.seed,
        "power_dBm": ds.power_dBm,
        "n_symbols": len(ds),
        "burst": ds.burst,
        "window": ds.W,
        "bits_per_symbol": int(ds.bits.shape[1]),
        "le_mse": ds.le_mse,
        "noise_var": [float(v) for v in ds.noise_var],
        "dtype": "<f4",
    }
    apr = np.zeros((len(ds), ds.bits.shape[1] * ds.W), np.float32)
    _container.write(
        path,
        manifest,
        [
            ("windows", ds.windows.astype("<f4")),
            ("apr", apr.astype("<f4")),
            ("bits", ds.bits.astype(np.uint8)),
            ("ref_symbols", ds.ref_symbols.astype("<f4")),
            ("eq_symbols", ds.eq_symbols.astype("<f4")),
        ],
    )


def load_dataset(path) -> Dataset:
    manifest, a = _container.read(path)
    if manifest.get("kind") != "turboeq-dataset" or manifest.get("format_version") != DATASET_FORMAT_VERSION:
        raise ValueError(f"{path}: not a supported dataset file")
    return Dataset(
        windows=a["windows"],
        bits=a["bits"],
        ref_symbols=a["ref_symbols"],
        eq_symbols=a["eq_symbols"],
        power_dBm=manifest["power_dBm"],
        seed=manifest["seed"],
        burst=manifest["burst"],
        W=manifest["window"],
        le_mse=manifest["le_mse"],
        noise_var=np.array(manifest["noise_var"]),
    )


def generate_dataset(cfg: ExperimentConfig, seed: int | None = None, out_dir=None) -> list[dict]:
    """One training dataset per configured launch power, optionally persisted."""
    cfg = cfg if seed is None else cfg.with_seed(seed)
    summaries = []
    for i, p in enumerate(cfg.link.powers_dBm):
        ds = simulate_dataset(cfg, p, cfg.dataset_symbols, _TRAIN, i)
        info = {"power_dBm": p, "n_symbols": len(ds), "le_mse": ds.le_mse}
        if out_dir is not None:
            path = Path(out_dir) / f"dataset_p{i}.teqd"
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            save_dataset(ds, path, cfg)
            info["path"] = str(path)
        summaries.append(info)
    return summaries


# --- equalizers ----------------------------------------------------------------------------


def build_model(cfg: ExperimentConfig, kind: str, power_index: int) -> tuple[NeuralModel, TrainSpec]:
    net = cfg.network
    teq = kind == "DNN-TEQ"
    topo = Topology(
        n_symbols=net.window,
        bits_per_symbol=cfg.bits_per_symbol,
        width=net.width,
        n_hidden=net.n_hidden,
        head="nb" if kind == "DNN-NB" else "bit",
        use_apr=teq,
    )
    loss = {"DNN-TEQ": "teq_minmax", "DNN-BCE": "bce_multilabel", "DNN-NB": "nb_softmax"}[kind]
    seed = int(np.random.default_rng([cfg.seed, _MODEL, power_index, len(kind)]).integers(2**31))
    model = NeuralModel(
        topo,
        dropout=net.dropout if teq else net.dropout_nonturbo,
        seed=seed,
        dtype=np.float32 if net.float32 else np.float64,
    )
    spec = TrainSpec(
        loss_mode=loss,
        lr=net.lr,
        batch_size=net.batch_size if teq else net.batch_size_nonturbo,
        max_epochs=net.max_epochs,
        patience=net.patience,
        seed=seed,
    )
    return model, spec


def train_equalizer(cfg: ExperimentConfig, kind: str, power_index: int, data: Dataset | None = None, log=None):
    """Trains one network for one launch power on its (regenerated or given) dataset."""
    if data is None:
        data = simulate_dataset(cfg, cfg.link.powers_dBm[power_index], cfg.network.train_symbols, _TRAIN, power_index)
    model, spec = build_model(cfg, kind, power_index)
    return train(model, data.training_data(), spec, log=log)


def _map_powers(fn, cfg: ExperimentConfig, threads: int = 1) -> list:
    idx = list(range(len(cfg.link.powers_dBm)))
    if threads <= 1 or len(idx) == 1:
        return [fn(cfg, i) for i in idx]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, [cfg] * len(idx), idx))


# --- Q-factor sweep -------------------------------------------------------------------------


def _qfactor_point(cfg: ExperimentConfig, i: int) -> list[ResultRow]:
    p = cfg.link.powers_dBm[i]
    digest = cfg.digest()
    test = simulate_dataset(cfg, p, cfg.dataset_symbols, _TEST, i)
    fmt = ModFormat(cfg.m)
    train_ds = None
    rows = []
    for kind in cfg.equalizers:
        if kind == "LE":
            est = hard_demap(test.eq_frame(), fmt)
        else:
            if train_ds is None:
                train_ds = simulate_dataset(cfg, p, cfg.network.train_symbols, _TRAIN, i)
            try:
                model, _ = train_equalizer(cfg, kind, i, train_ds)
            except TrainingDivergence:
                rows.append(ResultRow(digest, p, kind, "training_diverged", math.nan, seed=cfg.seed))
                continue
            est, _ = predict_llrs(model, test.windows, None, block=test.burst)
        rep = ber_and_q(est, test.bits)
        rows.append(ResultRow(digest, p, kind, "ber", rep.ber, rep.count, rep.errors, cfg.seed))
        rows.append(ResultRow(digest, p, kind, "q_factor_dB", rep.q_factor_dB, rep.count, rep.errors, cfg.seed))
    return rows


def run_qfactor_sweep(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    """Pre-FEC BER and BER-derived Q per launch power and equalizer."""
    return [r for rows in _map_powers(_qfactor_point, cfg, threads) for r in rows]


# --- coded BER ----------------------------------------------------------------------------


@dataclass
class CodeSet:
    labels: list
    codes: list

    def __iter__(self):
        return iter(zip(self.labels, self.codes))


def code_family(cfg: ExperimentConfig, extra: dict | None = None) -> CodeSet:
    """The configured code plus the check-concentrated family used for rate search."""
    dist = cfg.code.distribution()
    labels = ["main"]
    dists = [dist]
    for dc in cfg.code.family_check_degrees:
        labels.append(f"dc={dc:g}")
        dists.append(DegreeDistribution.check_concentrated(dist.var_degrees, dc))
    for name, d in (extra or {}).items():
        labels.append(name)
        dists.append(d)
    codes = [construct_code(d, cfg.code.block_length, cfg.code.code_seed) for d in dists]
    return CodeSet(labels, codes)


def _receivers(cfg: ExperimentConfig) -> list[str]:
    out = []
    if "LE" in cfg.equalizers:
        out += ["LE", "LE@total"]
    out += ["DNN", "DNN@total", "DNN-TEQ"]
    return out


def _ber_point(
    cfg: ExperimentConfig,
    i: int,
    teq_model: NeuralModel | None = None,
    codes: CodeSet | None = None,
    extra: dict | None = None,
):
    p = cfg.link.powers_dBm[i]
    digest = cfg.digest()
    codes = codes or code_family(cfg, extra)
    n = cfg.code.block_length
    inter = Interleaver(n, cfg.code.interleaver_seed)
    if teq_model is None:
        teq_model, _ = train_equalizer(cfg, "DNN-TEQ", i)
    bp, outer = cfg.code.bp_iterations, cfg.code.outer_iterations
    burst = burst_length(cfg, n)
    receivers = _receivers(cfg)
    stats = {(r, lab): [0, 0, 0.0, 0] for r in receivers for lab, _ in codes}  # errors, bits, bp_sum, words
    fmt = ModFormat(cfg.m)
    b = 0
    while True:
        pending = [k for k, v in stats.items() if v[0] < cfg.montecarlo.min_errors and v[1] < cfg.montecarlo.max_bits]
        if not pending:
            break
        ds = simulate_dataset(cfg, p, burst, _TEST, i, burst=burst, first_burst=b)
        b += 1
        stream = ds.bits.reshape(-1, n)
        scr = inter.deinterleave(stream)  # payload seen as a coset word in codeword order
        flip = 1.0 - 2.0 * scr
        le_llr = None
        dnn_llr = None
        for rx, lab in pending:
            code = codes.codes[codes.labels.index(lab)]
            if rx.startswith("LE"):
                if le_llr is None:
                    nv = np.maximum(ds.noise_var, 1e-12)
                    le_llr = symbol_llrs_to_codewords(exact_llr_demap(ds.eq_frame(), fmt, nv), inter) * flip
                iters = bp if rx == "LE" else bp * outer
                res = bp_decode(code, le_llr, max_iter=iters)
                hard, used = np.atleast_2d(res.hard), float(np.sum(res.iterations))
            elif rx.startswith("DNN@") or rx == "DNN":
                if dnn_llr is None:
                    ext, _ = predict_llrs(teq_model, ds.windows, None, block=burst)
                    dnn_llr = symbol_llrs_to_codewords(ext, inter) * flip
                iters = bp if rx == "DNN" else bp * outer
                res = bp_decode(code, dnn_llr, max_iter=iters)
                hard, used = np.atleast_2d(res.hard), float(np.sum(res.iterations))
            else:
                sched = TurboSchedule(outer, bp, cfg.code.extrinsic_scale)
                tr = turbo_decode(ds.windows, teq_model, code, inter, sched, scrambler=scr, block=burst)
                hard, used = tr.hard, float(np.sum(tr.bp_iterations)) * len(stream)
            s = stats[(rx, lab)]
            s[0] += int(np.count_nonzero(hard[:, : code.k]))
            s[1] += hard.shape[0] * code.k
            s[2] += used
            s[3] += hard.shape[0]
    rows = []
    for (rx, lab), (err, nbits, used, words) in stats.items():
        code = codes.codes[codes.labels.index(lab)]
        ber = err / nbits if nbits else math.nan
        rows.append(
            ResultRow(digest, p, rx, "post_ber", ber, nbits, err, cfg.seed, lab, code.rate, used / max(words, 1))
        )
    return rows


def run_ber_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    """Post-LDPC information BER per launch power, receiver and code.

    Receivers: LE and the neural detector with zero a-priori (``DNN``) each decoded
    with the per-pass BP budget, the same two with the whole turbo budget
    (``@total``), and the turbo loop (``DNN-TEQ``). Monte-Carlo runs until every
    entry has ``min_errors`` errors or ``max_bits`` information bits.

    With ``code.optimized`` set, the degree optimizer runs first on the measured
    detector curve and its code joins the family under the label ``optimized``.
    """
    fn = _ber_point
    if cfg.code.optimized:
        _, res, _ = optimize_code(cfg)
        if res.dist is not None:
            fn = partial(_ber_point, extra={"optimized": res.dist})
    return [r for rows in _map_powers(fn, cfg, threads) for r in rows]


def bch_rows(rows: list[ResultRow]) -> list[ResultRow]:
    return [
        ResultRow(r.digest, r.launch_power_dBm, r.receiver, "bch_pass", float(bch_pass(r.value)), r.count, r.errors,
                  r.seed, r.code, r.code_rate, r.bp_iterations)
        for r in rows
        if r.metric == "post_ber"
    ]


def spectral_efficiency(cfg: ExperimentConfig, code_rate: float) -> float:
    return cfg.bits_per_symbol * code_rate * BCH_RATE * cfg.baud / cfg.spacing_hz


def achievable_rate(cfg: ExperimentConfig, rows: list[ResultRow] | None = None, threads: int = 1) -> list[ResultRow]:
    """Largest spectral efficiency over the codes whose post-LDPC BER passes the BCH
    threshold, per launch power and receiver. Derived from ``post_ber`` rows only."""
    if rows is None:
        rows = run_ber_experiment(cfg, threads)
    digest = cfg.digest()
    if any(r.digest != digest for r in rows):
        raise ValueError("result rows belong to a different configuration")
    best: dict = {}
    for r in rows:
        if r.metric != "post_ber":
            continue
        key = (r.launch_power_dBm, r.receiver)
        se = spectral_efficiency(cfg, r.code_rate) if bch_pass(r.value) else 0.0
        if key not in best or se > best[key][0]:
            best[key] = (se, r)
    out = []
    for (p, rx), (se, r) in best.items():
        label = r.code if se > 0 else ""
        out.append(ResultRow(digest, p, rx, "spectral_efficiency", se, r.count, r.errors, r.seed, label,
                             r.code_rate if se > 0 else math.nan, r.bp_iterations))
    return out


# --- EXIT analysis --------------------------------------------------------------------------


def exit_power_index(cfg: ExperimentConfig) -> int:
    powers = cfg.link.powers_dBm
    if cfg.exit.power_dBm is None:
        return len(powers) - 1
    return int(np.argmin(np.abs(np.asarray(powers) - cfg.exit.power_dBm)))


def measure_exit(cfg: ExperimentConfig, model: NeuralModel | None = None) -> tuple[ExitCurve, NeuralModel]:
    i = exit_power_index(cfg)
    p = cfg.link.powers_dBm[i]
    if model is None:
        model, _ = train_equalizer(cfg, "DNN-TEQ", i)
    ds = simulate_dataset(cfg, p, cfg.dataset_symbols, _EXIT, i)
    grid = np.linspace(0, 1, cfg.exit.grid_points)
    curve = measure_detector_exit(model, ds.training_data(), grid, tuple(cfg.exit.seeds))
    curve.meta.update(power_dBm=p, digest=cfg.digest())
    return curve, model


def exit_rows(cfg: ExperimentConfig, curve: ExitCurve) -> list[ResultRow]:
    d, p = cfg.digest(), curve.meta.get("power_dBm", math.nan)
    rows = [
        ResultRow(d, p, "DNN-TEQ", f"I_out@{x:.4f}", float(y), int(nn), 0, cfg.seed)
        for x, y, nn in zip(curve.I_in, curve.I_out, curve.n_samples)
    ]
    cubic = fit_cubic(curve)
    rows += [ResultRow(d, p, "DNN-TEQ", f"cubic_c{k}", float(c), seed=cfg.seed) for k, c in enumerate(cubic.coefficients)]
    rows.append(ResultRow(d, p, "DNN-TEQ", "cubic_max_residual", float(cubic.max_residual), seed=cfg.seed))
    return rows


def optimize_code(cfg: ExperimentConfig, curve: ExitCurve | None = None):
    """Degree optimization on the measured detector curve with the configured code as
    the baseline. Returns (rows, result, curve)."""
    if curve is None:
        curve, _ = measure_exit(cfg)
    cubic = fit_cubic(curve)
    base = cfg.code.distribution()
    kw = {}
    if cfg.exit.degree_triples is not None:
        kw["degree_triples"] = [tuple(t) for t in cfg.exit.degree_triples]
    res = optimize_degrees(
        cubic,
        dc_range=tuple(cfg.exit.dc_range),
        delta=cfg.exit.delta,
        fraction_step=cfg.exit.fraction_step,
        include=[base.var_degrees],
        **kw,
    )
    d, p = cfg.digest(), curve.meta.get("power_dBm", math.nan)
    base_dc = max_check_degree(cubic, base.var_degrees, tuple(cfg.exit.dc_range), delta=cfg.exit.delta)
    base_rate = (
        design_rate(DegreeDistribution.check_concentrated(base.var_degrees, base_dc)) if np.isfinite(base_dc) else 0.0
    )
    rows = [
        ResultRow(d, p, "optimized", "design_rate", float(res.rate), seed=cfg.seed, code=json.dumps(res.dist.to_dict()) if res.dist else ""),
        ResultRow(d, p, "baseline", "design_rate", float(base_rate), seed=cfg.seed),
        ResultRow(d, p, "optimized", "tunnel_verified", float(res.verified), seed=cfg.seed),
    ]
    return rows, res, curve
