import math

import numpy as np
import pytest

from unsharp_lab import quantum as qc
from unsharp_lab import sga

N = 1_000_000


def test_counter_stream_is_index_addressable():
    full = sga.counter_words(7, 0, 1000)
    parts = np.concatenate([sga.counter_words(7, a, b) for a, b in ((0, 333), (333, 334), (334, 1000))])
    assert np.array_equal(full, parts)
    assert not np.array_equal(full, sga.counter_words(8, 0, 1000))


def test_uniforms_open_interval():
    u = sga.counter_uniforms(3, 0, 100_000)
    assert u.min() > 0 and u.max() < 1


def test_config_validation():
    with pytest.raises(ValueError):
        sga.SGAConfig(p_up=1.5)
    with pytest.raises(ValueError):
        sga.SGAConfig(bins=1)
    with pytest.raises(ValueError):
        sga.SGAConfig(range=(1.0, -1.0))
    with pytest.raises(ValueError):
        sga.SGAConfig(model="fuzzy")
    assert sga.SGAConfig(model="sharp", spin_sd=0.3).spin_sd == 0.0


def test_deterministic_positions():
    cfg = sga.SGAConfig(p_up=1.0, spin_sd=0.0, device_sd=0.0, n_samples=1000, deflection_scale=2.5)
    assert np.all(sga.sample_positions(cfg) == 2.5)


def test_fixed_seed_bit_identical():
    cfg = sga.SGAConfig(n_samples=50_000, seed=99)
    a, b = sga.sample_positions(cfg), sga.sample_positions(cfg)
    assert a.tobytes() == b.tobytes()
    assert np.array_equal(sga.sample_positions(cfg, 1000, 2000), a[1000:2000])


def test_unsharp_mean_near_zero():
    cfg = sga.SGAConfig(p_up=0.5, n_samples=N, seed=1)
    x = sga.sample_positions(cfg)
    sd = math.sqrt(1 + cfg.position_sd**2)  # mixture of +-1 with spot width
    assert abs(x.mean()) <= 4 * sd / math.sqrt(N)


@pytest.mark.parametrize("p_up, centre", [(1.0, 1.0), (0.0, -1.0)])
def test_single_spot_law(p_up, centre):
    cfg = sga.SGAConfig(p_up=p_up, spin_sd=0.05, device_sd=0.15, n_samples=N, seed=5)
    x = sga.sample_positions(cfg)
    var = cfg.position_sd**2
    assert abs(x.mean() - centre) <= 4 * math.sqrt(var / N)
    # variance of the sample variance of a normal law is 2 sigma^4 / (n - 1)
    assert abs(x.var(ddof=1) - var) <= 4 * math.sqrt(2 * var**2 / (N - 1))


def test_histogram_empty_and_single():
    cfg = sga.SGAConfig(bins=10, range=(-1.0, 1.0))
    h = sga.histogram([], cfg)
    assert h.counts.sum() == 0 and h.n_total == 0
    h = sga.histogram([0.05], cfg)
    assert h.counts.sum() == 1 and np.count_nonzero(h.counts) == 1


def test_histogram_under_overflow():
    cfg = sga.SGAConfig(bins=4, range=(0.0, 1.0))
    h = sga.histogram([-1, 0, 0.5, 1.0, 2, 3], cfg)
    assert (h.underflow, h.overflow) == (1, 2)
    assert h.counts.sum() + h.underflow + h.overflow == h.n_total == 6


def test_histogram_merge_order_independent():
    cfg = sga.SGAConfig(n_samples=20_000, seed=4)
    x = sga.sample_positions(cfg)
    h1, h2 = sga.histogram(x[:7000], cfg), sga.histogram(x[7000:], cfg)
    whole = sga.histogram(x, cfg)
    for merged in (h1.merge(h2), h2.merge(h1)):
        assert np.array_equal(merged.counts, whole.counts)
        assert merged.n_total == whole.n_total


def test_histogram_csv_roundtrip(tmp_path):
    cfg = sga.SGAConfig(n_samples=5000, seed=2, bins=7, range=(-1.5, 1.5))
    h = sga.histogram(sga.sample_positions(cfg), cfg)
    path = tmp_path / "h.csv"
    h.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "bin_left,bin_right,count"
    assert lines[-2].startswith("underflow,") and lines[-1].startswith("overflow,")
    assert len(lines) == 1 + 7 + 2
    back = sga.Histogram.from_csv(path)
    assert np.array_equal(back.edges, h.edges) and np.array_equal(back.counts, h.counts)
    assert (back.underflow, back.overflow, back.n_total) == (h.underflow, h.overflow, h.n_total)


def test_samples_csv(tmp_path):
    path = tmp_path / "x.csv"
    sga.write_samples_csv([0.5, -1.25], path)
    assert path.read_text() == "x\n0.5\n-1.25\n"


def test_classify_examples():
    cfg = sga.SGAConfig(p_up=1.0, spin_sd=1e-6, device_sd=1e-6, n_samples=1000)
    assert sga.classify(sga.sample_positions(cfg), 0.0)[2] == 1.0
    x = sga.sample_positions(sga.SGAConfig(n_samples=1000))
    assert sga.classify(x, 100.0)[1] == 1000
    assert sga.classify(x, -100.0)[0] == 1000


def test_classify_binomial():
    cfg = sga.SGAConfig(p_up=0.5, spin_sd=0.01, device_sd=0.02, n_samples=N, seed=11)
    _, _, p_hat = sga.classify(sga.sample_positions(cfg))
    assert abs(p_hat - 0.5) <= 3 * math.sqrt(0.25 / N)


def test_matched_models_indistinguishable():
    out = sga.compare_models(sga.SGAConfig(n_samples=N, seed=21))
    assert out["tv_distance"] < 0.01


def test_matched_pair_parameters():
    sharp, unsharp = sga.matched_pair(sga.SGAConfig(spin_sd=0.1, device_sd=0.2, deflection_scale=2.0))
    assert sharp.model == "sharp" and sharp.spin_sd == 0
    assert sharp.device_sd**2 == pytest.approx(0.1**2 * 2.0**2 + 0.2**2)
    assert sharp.seed != unsharp.seed


def test_distinguishable_when_unmatched():
    # sanity check on the TV metric: a wider sharp spot is visibly different
    a = sga.SGAConfig(model="sharp", device_sd=0.15, n_samples=200_000, seed=1)
    b = sga.SGAConfig(model="sharp", device_sd=0.3, n_samples=200_000, seed=2)
    ha, hb = sga.histogram(sga.sample_positions(a), a), sga.histogram(sga.sample_positions(b), b)
    assert sga.total_variation(ha, hb) > 0.05


def test_bell_sampling_phi_plus_sharp():
    _, triples = sga.unsharp_bell_sampling(qc.bell_like_basis()["Phi+"], 0.0, 1000, seed=3)
    assert np.all(triples == np.array([1.0, -1.0, -1.0]))


def test_bell_sampling_born_rule():
    n = 100_000
    psi = qc.QuantumState.pure(np.array([0.6, 0.0, 0.48j, 0.64]))
    probs = sga.born_probabilities(psi)
    outcomes, triples = sga.unsharp_bell_sampling(psi, 0.0, n, seed=8)
    names = list(qc.bell_like_basis())
    # Born oracle computed directly from projectors
    for i, name in enumerate(names):
        b = qc.bell_like_basis()[name].data
        p = abs(np.vdot(b, psi.data)) ** 2
        assert probs[name] == pytest.approx(p, abs=1e-12)
        freq = np.mean(outcomes == i)
        assert abs(freq - p) <= 4 * math.sqrt(p * (1 - p) / n) + 1e-12
    assert np.all(triples[:, 2] == triples[:, 0] * triples[:, 1])


def test_bell_sampling_spread_mean():
    n = 100_000
    _, triples = sga.unsharp_bell_sampling(qc.bell_like_basis()["Phi+"], 0.05, n, seed=9)
    assert abs(triples[:, 0].mean() - 1.0) <= 4 * 0.05 / math.sqrt(n)
    assert abs(triples[:, 1].mean() + 1.0) <= 4 * 0.05 / math.sqrt(n)
    assert np.all(triples[:, 2] == triples[:, 0] * triples[:, 1])


def test_bell_sampling_mixed_state_and_errors():
    outcomes, _ = sga.unsharp_bell_sampling(qc.QuantumState.mixed(np.eye(4) / 4), 0.0, 40_000, seed=1)
    freqs = np.bincount(outcomes, minlength=4) / 40_000
    assert np.all(np.abs(freqs - 0.25) <= 4 * math.sqrt(0.1875 / 40_000))
    with pytest.raises(ValueError):
        sga.unsharp_bell_sampling(qc.bell_like_basis()["Phi+"], -1.0, 10, 0)
    with pytest.raises(TypeError):
        sga.unsharp_bell_sampling(np.ones(4) / 2, 0.0, 10, 0)
