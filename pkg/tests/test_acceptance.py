"""End-to-end acceptance criteria 1 to 11.

Every test prints one ``PASS``/``FAIL`` line (visible without ``-s``) and then
asserts. Criteria 8, 9 and 10 share one session-scoped desk-scale run: DP-16QAM,
4 spans, single channel, TEQ networks trained at 7, 8 and 9 dBm.

Run only this suite with ``pytest -m acceptance``; the whole file takes about
ten minutes on one CPU core.
"""

import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from turboeq import _container, oracles
from turboeq.cli import main as cli_main
from turboeq.config import ExperimentConfig
from turboeq.exitchart import combined_chart, fit_cubic, max_check_degree, tunnel_open
from turboeq.fiber import FiberSpanConfig, LinkConfig, SsfmSettings, propagate_link
from turboeq.harness import CodeSet, _ber_point, measure_exit, optimize_code, train_equalizer
from turboeq.ldpc import (
    DVBS2_1_2,
    DVBS2_5_6,
    DVBS2_9_10,
    DegreeDistribution,
    bp_decode,
    construct_code,
    design_rate,
)
from turboeq.neural import NeuralModel, Topology, _Cache, backward, compute_loss

pytestmark = pytest.mark.acceptance


def verdict(capsys, number, title, ok, detail, seconds=None):
    timing = "" if seconds is None else f" [{seconds:.1f} s]"
    with capsys.disabled():
        print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}: {title}: {detail}{timing}")
    assert ok, detail


# --- 1 to 3: SSFM -----------------------------------------------------------------------


def test_01_ssfm_linear_limit(capsys):
    t0 = time.perf_counter()
    err = oracles.ssfm_linear_error()
    dt = time.perf_counter() - t0
    verdict(capsys, 1, "SSFM linear limit", err < 1e-6 and dt < 10, f"max rel error {err:.2e} (< 1e-6)", dt)


def test_02_ssfm_nonlinear_phase(capsys):
    t0 = time.perf_counter()
    err = oracles.ssfm_phase_error()
    dt = time.perf_counter() - t0
    verdict(capsys, 2, "SSFM nonlinear phase", err < 1e-6 and dt < 5, f"phase error {err:.2e} rad (< 1e-6)", dt)


def test_03_energy_conservation_and_step_halving(capsys):
    t0 = time.perf_counter()
    wave = oracles._random_wave(n_sym=1024, seed=7, power_w=1e-2)
    link = LinkConfig(spans=2, span=FiberSpanConfig(alpha_dB_km=0.0), edfa_nf_dB=None, launch_power_dBm=10.0)
    coarse = propagate_link(wave, link, SsfmSettings(step_km=0.1))
    fine = propagate_link(wave, link, SsfmSettings(step_km=0.05))
    energy = abs(coarse.power / wave.power - 1)
    a, b = np.stack([coarse.x, coarse.y]), np.stack([fine.x, fine.y])
    halving = float(np.linalg.norm(a - b) / np.linalg.norm(b))
    dt = time.perf_counter() - t0
    ok = energy < 1e-6 and halving < 1e-4
    verdict(capsys, 3, "energy conservation", ok, f"energy drift {energy:.2e} (< 1e-6), step halving {halving:.2e} (< 1e-4)", dt)


# --- 4 and 5: LDPC ----------------------------------------------------------------------


def test_04_design_rates_exact(capsys):
    r9, r5 = design_rate(DVBS2_9_10, exact=True), design_rate(DVBS2_5_6, exact=True)
    ok = r9 == Fraction(9, 10) and r5 == Fraction(5, 6)
    verdict(capsys, 4, "design rates", ok, f"{r9} and {r5}")


def test_05_ldpc_waterfall(capsys):
    t0 = time.perf_counter()
    code = construct_code(DVBS2_1_2, 4800, seed=0)
    assert code.n == 4800 and abs(code.rate - 0.5) < 1e-12
    rng = np.random.default_rng(1)
    points = np.round(np.arange(0.6, 1.61, 0.2), 2)  # 1 dB sweep of Eb/N0
    bers = []
    for ebn0_db in points:
        sigma = math.sqrt(1 / (2 * code.rate * 10 ** (ebn0_db / 10)))
        errors = bits = 0
        while errors < 100 and bits < 5e6:
            y = 1 + sigma * rng.standard_normal((100, code.n))  # all-zero word, BPSK 0 -> +1
            res = bp_decode(code, 2 * y / sigma**2, max_iter=50)
            errors += int(np.count_nonzero(res.hard))
            bits += res.hard.size
        bers.append(errors / bits)
    dt = time.perf_counter() - t0
    decreasing = all(b < a for a, b in zip(bers, bers[1:]))
    ok = decreasing and min(bers) < 1e-4 and dt < 300
    table = ", ".join(f"{p:.1f} dB: {b:.2e}" for p, b in zip(points, bers))
    verdict(capsys, 5, "LDPC waterfall", ok, table, dt)


# --- 6 and 7: gradients and J function --------------------------------------------------


def _nb_head_gradient_error(width=64, seed=0):
    topo = Topology(3, 8, width=width, n_hidden=4, head="nb", use_apr=False)
    model = NeuralModel(topo, dropout=0.2, seed=seed)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((32, topo.in_dim))
    bits = rng.integers(0, 2, (32, 8))
    cache = _Cache(x=None)
    _, d_ext, d_app = compute_loss(model, X, bits, "nb_softmax", "train", 7, cache)
    grads, _ = backward(model, cache, d_ext, d_app)
    worst = 0.0
    for name in list(model.params):
        for _ in range(2):
            idx = tuple(int(rng.integers(s)) for s in model.params[name].shape)
            state = model.copy_state()
            model.params[name][idx] += 1e-6
            up = compute_loss(model, X, bits, "nb_softmax", "train", 7)
            model.load_state(state)
            model.params[name][idx] -= 1e-6
            dn = compute_loss(model, X, bits, "nb_softmax", "train", 7)
            model.load_state(state)
            fd, an = (up - dn) / 2e-6, grads[name][idx]
            if abs(fd) + abs(an) > 1e-9:
                worst = max(worst, abs(fd - an) / (abs(fd) + abs(an)))
    return worst


def test_06_gradient_correctness(capsys):
    t0 = time.perf_counter()
    bit_head = oracles.gradient_error(width=64)  # min-max loss, EXT and APP branches
    nb_head = _nb_head_gradient_error(width=64)
    dt = time.perf_counter() - t0
    ok = bit_head < 1e-4 and nb_head < 1e-4 and dt < 120
    verdict(capsys, 6, "gradient check", ok, f"bit head/min-max {bit_head:.2e}, symbol head {nb_head:.2e} (< 1e-4)", dt)


def test_07_j_function_consistency(capsys):
    roundtrip = oracles.j_roundtrip_error()
    mi = oracles.apr_mi_error()
    ok = roundtrip < 1e-3 and mi < 0.01
    verdict(capsys, 7, "J function", ok, f"roundtrip {roundtrip:.2e} (< 1e-3), MI estimate error {mi:.4f} (< 0.01)")


# --- 8 to 10: desk-scale turbo equalization ----------------------------------------------

DESK = {
    "link": {"spans": 4, "powers_dBm": [7.0, 8.0, 9.0]},
    "code": {"preset": "DVBS2_5_6", "block_length": 4800, "bp_iterations": 8, "outer_iterations": 3},
    "montecarlo": {"min_errors": 100, "max_bits": 400_000, "burst_symbols": 16200},
}


@pytest.fixture(scope="session")
def desk():
    cfg = ExperimentConfig.model_validate(DESK)
    models, train_seconds = [], []
    for i in range(len(cfg.link.powers_dBm)):
        t0 = time.perf_counter()
        model, _ = train_equalizer(cfg, "DNN-TEQ", i)
        models.append(model)
        train_seconds.append(time.perf_counter() - t0)
    t0 = time.perf_counter()
    curve, _ = measure_exit(cfg, models[-1])  # EXIT point: highest configured power
    exit_seconds = time.perf_counter() - t0
    cubic = fit_cubic(curve)
    # Rate matching on the measured curve, DVB-S2 rate-5/6 variable profile. The
    # turbo threshold (tunnel open with detector feedback) is the criterion-10
    # baseline. It is an asymptotic limit that three finite-length passes cannot reach,
    # so the criterion-9 code sits midway between the no-feedback and turbo
    # thresholds: beyond what the detector supports alone, within what feedback opens.
    base = cfg.code.distribution()
    dc_turbo, dc_direct = (
        max_check_degree(cubic, base.var_degrees, tuple(cfg.exit.dc_range), channel_point=cp, delta=cfg.exit.delta)
        for cp in (None, 0.0)
    )
    matched = midway = None
    if np.isfinite(dc_turbo):
        matched = DegreeDistribution.check_concentrated(base.var_degrees, dc_turbo)
        lower = dc_direct if np.isfinite(dc_direct) else cfg.exit.dc_range[0]
        midway = DegreeDistribution.check_concentrated(base.var_degrees, 0.5 * (lower + dc_turbo))
    return {
        "cfg": cfg,
        "models": models,
        "train_seconds": train_seconds,
        "curve": curve,
        "cubic": cubic,
        "exit_seconds": exit_seconds,
        "matched": matched,
        "midway": midway,
    }


def test_08_exit_gain(desk, capsys):
    curve, cubic = desk["curve"], desk["cubic"]
    gain = float(curve.I_out[-1] - curve.I_out[0])
    seconds = desk["train_seconds"][-1] + desk["exit_seconds"]
    ok = curve.I_in[0] == 0 and curve.I_in[-1] == 1 and gain >= 0.05 and cubic.max_residual < 0.02 and seconds < 3600
    detail = (
        f"{curve.meta['power_dBm']:g} dBm: I_out(0)={curve.I_out[0]:.4f} I_out(1)={curve.I_out[-1]:.4f} "
        f"gain {gain:.4f} (>= 0.05), cubic residual {cubic.max_residual:.4f} (< 0.02)"
    )
    verdict(capsys, 8, "EXIT gain", ok, detail, seconds)


def test_09_turbo_gain(desk, capsys):
    cfg, midway = desk["cfg"], desk["midway"]
    assert midway is not None, "no tunnel-feasible rate-matched code on the measured curve"
    t0 = time.perf_counter()
    code = construct_code(midway, cfg.code.block_length, cfg.code.code_seed)
    codes = CodeSet(["matched"], [code])
    budget = cfg.montecarlo.max_bits
    parts, ok = [], len(cfg.link.powers_dBm) >= 3
    for i, p in enumerate(cfg.link.powers_dBm):
        rows = {r.receiver: r for r in _ber_point(cfg, i, teq_model=desk["models"][i], codes=codes)}
        teq, dnn = rows["DNN-TEQ"], rows["DNN"]
        settled = all(r.errors >= cfg.montecarlo.min_errors or r.count >= budget for r in (teq, dnn))
        ok &= settled and teq.value <= dnn.value
        parts.append(
            f"{p:g} dBm: TEQ {teq.value:.2e} ({teq.errors}/{teq.count}) vs APR=0 {dnn.value:.2e} "
            f"({dnn.errors}/{dnn.count}); APR=0 at equal total BP {rows['DNN@total'].value:.2e}"
        )
    seconds = sum(desk["train_seconds"]) + time.perf_counter() - t0
    ok &= seconds < 7200
    verdict(capsys, 9, "turbo gain", ok, f"code rate {code.rate:.4f}; " + "; ".join(parts), seconds)


def test_10_optimizer_dominance(desk, capsys):
    cfg = desk["cfg"]
    t0 = time.perf_counter()
    rows, res, curve = optimize_code(cfg, desk["curve"])
    seconds = time.perf_counter() - t0
    base_rate = next(r.value for r in rows if r.receiver == "baseline")
    baseline_feasible = desk["matched"] is not None
    reverified = False
    if res.dist is not None:
        grid = np.linspace(0, 1, 101)
        vnd, _ = combined_chart(fit_cubic(curve), res.dist, None, len(grid))
        mean_dc = np.array([res.dist.mean_chk_degree])
        reverified = bool(tunnel_open(vnd.I_out[None, :], grid, mean_dc, cfg.exit.delta)[0])
    ok = res.feasible and res.verified and reverified and seconds < 600
    if baseline_feasible:
        ok &= res.rate >= base_rate
    detail = (
        f"optimized rate {res.rate:.4f} vs rate-matched baseline {base_rate:.4f} "
        f"(baseline feasible: {baseline_feasible}), tunnel re-verified: {reverified}, "
        f"var degrees {[(d, round(float(f), 4)) for d, f in res.dist.var_degrees] if res.dist else None}"
    )
    verdict(capsys, 10, "degree optimizer", ok, detail, seconds)


# --- 11: reproducibility ----------------------------------------------------------------

TINY = {
    "link": {"spans": 1, "powers_dBm": [2.0, 6.0]},
    "equalizers": ["LE", "DNN-BCE", "DNN-TEQ"],
    "dataset_symbols": 1200,
    "network": {"width": 16, "n_hidden": 2, "max_epochs": 3, "patience": 2, "train_symbols": 1200,
                "batch_size": 200, "batch_size_nonturbo": 200},
    "code": {"preset": "DVBS2_5_6", "block_length": 600, "bp_iterations": 3, "outer_iterations": 2,
             "family_check_degrees": [12.0, 30.0]},
    "montecarlo": {"burst_symbols": 600, "max_bits": 3000, "min_errors": 50},
    "exit": {"grid_points": 5, "degree_triples": [[2, 3, 12], [2, 4, 20]], "fraction_step": 0.1},
}

CSV_COMMANDS = ("sweep", "ber", "rate", "exit-chart", "optimize-code")


def test_11_cli_reproducibility(tmp_path, capsys):
    t0 = time.perf_counter()
    cfg_path = tmp_path / "tiny.json"
    cfg_path.write_text(json.dumps(TINY))
    runs = {}
    for tag in ("a", "b"):
        out = tmp_path / tag
        for cmd in CSV_COMMANDS + ("dataset", "train"):
            code = cli_main([cmd, "--config", str(cfg_path), "--seed", "3", "--out", str(out / cmd)])
            assert code == 0, cmd
        capsys.readouterr()
        runs[tag] = out
    mismatched = []
    compared = 0
    for path in sorted(runs["a"].rglob("*")):
        if path.suffix not in (".csv", ".teqd", ".teqm"):
            continue
        other = runs["b"] / path.relative_to(runs["a"])
        if path.suffix == ".teqd":
            same = _container.section_bytes(path) == _container.section_bytes(other)
        else:
            same = path.read_bytes() == other.read_bytes()
        compared += 1
        if not same:
            mismatched.append(str(path.relative_to(runs["a"])))
    csv_count = sum(1 for p in runs["a"].rglob("*.csv"))
    seconds = time.perf_counter() - t0
    ok = not mismatched and csv_count >= len(CSV_COMMANDS)
    detail = f"{compared} artifacts compared ({csv_count} CSV files), mismatches: {mismatched or 'none'}"
    verdict(capsys, 11, "bit-identical re-run", ok, detail, seconds)

