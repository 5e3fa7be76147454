"""Small synthetic channels shared by the equalizer and turbo tests."""

import numpy as np

from turboeq.neural import NeuralModel, Topology, TrainingData, TrainSpec, train, window_reals
from turboeq.signal import ModFormat, SymbolFrame, gray_map


def isi_frame(bits, noise_std=0.3, seed=0):
    """Dual-pol BPSK through a strong two-tap ISI channel (circular), so that
    a-priori knowledge of the neighbouring symbol matters."""
    rng = np.random.default_rng(seed)
    fr = gray_map(np.asarray(bits, np.uint8), ModFormat(1))
    n = len(fr)
    h = lambda s: s + 0.9 * np.roll(s, -1)
    noise = lambda: noise_std * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return SymbolFrame(h(fr.x) + noise(), h(fr.y) + noise())


def isi_data(n=4000, seed=0, W=3, noise_std=0.3):
    bits = np.random.default_rng([seed, 1]).integers(0, 2, (n, 2), dtype=np.uint8)
    return TrainingData(window_reals(isi_frame(bits, noise_std, seed), W), bits, W)


def train_isi_teq(seed=0):
    model = NeuralModel(Topology(3, 2, width=32, n_hidden=2), dropout=0.0, seed=seed)
    spec = TrainSpec(batch_size=200, max_epochs=30, patience=13, lr=3e-3, seed=seed)
    return train(model, isi_data(seed=seed), spec)
