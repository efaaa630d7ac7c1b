"""Monte-Carlo model of a Stern-Gerlach detection screen.

Two hypotheses generate the same screen data:

* ``sharp``: spin values are exactly +-1, all spot width comes from device noise;
* ``unsharp``: spin values scatter around +-1 and the device adds its own noise.

Random numbers come from a counter-based stream: sample ``i`` draws four 64-bit words from
Philox4x64 at counter ``i`` under key ``(seed, 0)``. Any index range can therefore be
generated independently and the concatenation is bit-identical to a single pass.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import quantum as qc

_WORDS = 4
_TWO_PI = 2 * math.pi


def counter_words(seed: int, start: int, stop: int) -> np.ndarray:
    """Raw words for sample indices ``start:stop``, shape (stop - start, 4)."""
    if not 0 <= start <= stop:
        raise ValueError("need 0 <= start <= stop")
    n = stop - start
    if n == 0:
        return np.empty((0, _WORDS), dtype=np.uint64)
    bitgen = np.random.Philox(key=[int(seed) % 2**64, 0], counter=start)
    return bitgen.random_raw(_WORDS * n).reshape(n, _WORDS)


def _uniform(words: np.ndarray) -> np.ndarray:
    """Map 64-bit words to doubles strictly inside (0, 1)."""
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def counter_uniforms(seed: int, start: int, stop: int) -> np.ndarray:
    return _uniform(counter_words(seed, start, stop))


def _box_muller(u1: np.ndarray, u2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = np.sqrt(-2.0 * np.log(u1))
    return r * np.cos(_TWO_PI * u2), r * np.sin(_TWO_PI * u2)


@dataclass(frozen=True)
class SGAConfig:
    p_up: float = 0.5
    deflection_scale: float = 1.0
    spin_sd: float = 0.05
    device_sd: float = 0.15
    model: str = "unsharp"
    n_samples: int = 100_000
    seed: int = 0
    bins: int = 60
    range: tuple[float, float] = (-2.0, 2.0)

    def __post_init__(self):
        if not 0 <= self.p_up <= 1:
            raise ValueError("p_up must lie in [0, 1]")
        if not self.deflection_scale > 0:
            raise ValueError("deflection_scale must be positive")
        if self.spin_sd < 0 or self.device_sd < 0:
            raise ValueError("standard deviations must be non-negative")
        if self.model not in ("sharp", "unsharp"):
            raise ValueError(f"model must be 'sharp' or 'unsharp', got {self.model!r}")
        if self.model == "sharp" and self.spin_sd != 0:
            object.__setattr__(self, "spin_sd", 0.0)
        if self.n_samples < 0:
            raise ValueError("n_samples must be non-negative")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        lo, hi = self.range
        if not lo < hi:
            raise ValueError("range must satisfy x_lo < x_hi")
        object.__setattr__(self, "range", (float(lo), float(hi)))

    @property
    def position_sd(self) -> float:
        """Standard deviation of positions within one population."""
        return math.hypot(self.deflection_scale * self.spin_sd, self.device_sd)


def sample_positions(cfg: SGAConfig, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Screen positions for samples ``start:stop`` (default: all ``n_samples``)."""
    stop = cfg.n_samples if stop is None else stop
    u = counter_uniforms(cfg.seed, start, stop)
    sign = np.where(u[:, 0] < cfg.p_up, 1.0, -1.0)
    g_spin, g_dev = _box_muller(u[:, 1], u[:, 2])
    spin = sign if cfg.model == "sharp" else sign + cfg.spin_sd * g_spin
    return cfg.deflection_scale * spin + cfg.device_sd * g_dev


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    n_total: int
    underflow: int
    overflow: int

    def __post_init__(self):
        if int(self.counts.sum()) + self.underflow + self.overflow != self.n_total:
            raise ValueError("histogram counts do not add up to n_total")
        if not np.all(np.diff(self.edges) > 0):
            raise ValueError("bin edges must be strictly increasing")

    def normalized(self) -> np.ndarray:
        """Fractions per bin plus under/overflow as trailing cells, summing to 1."""
        full = np.concatenate([self.counts, [self.underflow, self.overflow]]).astype(float)
        return full / self.n_total if self.n_total else full

    def merge(self, other: "Histogram") -> "Histogram":
        if not np.array_equal(self.edges, other.edges):
            raise ValueError("cannot merge histograms with different edges")
        return Histogram(
            self.edges,
            self.counts + other.counts,
            self.n_total + other.n_total,
            self.underflow + other.underflow,
            self.overflow + other.overflow,
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_left", "bin_right", "count"])
            for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
                writer.writerow([repr(float(lo)), repr(float(hi)), int(c)])
            writer.writerow(["underflow", self.underflow])
            writer.writerow(["overflow", self.overflow])

    @classmethod
    def from_csv(cls, path) -> "Histogram":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if rows[0] != ["bin_left", "bin_right", "count"]:
            raise ValueError("unexpected histogram CSV header")
        body = rows[1:-2]
        under = int(rows[-2][1])
        over = int(rows[-1][1])
        edges = np.array([float(r[0]) for r in body] + [float(body[-1][1])])
        counts = np.array([int(r[2]) for r in body], dtype=np.int64)
        return cls(edges, counts, int(counts.sum()) + under + over, under, over)


def histogram(samples, cfg: SGAConfig) -> Histogram:
    """Uniform binning over ``cfg.range``; the right edge belongs to the last bin."""
    x = np.asarray(samples, dtype=float)
    lo, hi = cfg.range
    edges = np.linspace(lo, hi, cfg.bins + 1)
    counts, _ = np.histogram(x, bins=edges)
    return Histogram(edges, counts.astype(np.int64), int(x.size), int(np.sum(x < lo)), int(np.sum(x > hi)))


def total_variation(h1: Histogram, h2: Histogram) -> float:
    if not np.array_equal(h1.edges, h2.edges):
        raise ValueError("histograms have different edges")
    return 0.5 * float(np.abs(h1.normalized() - h2.normalized()).sum())


def classify(samples, threshold: float = 0.0) -> tuple[int, int, float]:
    """(+)-detector clicks are samples strictly above ``threshold``."""
    x = np.asarray(samples, dtype=float)
    n_plus = int(np.sum(x > threshold))
    n_minus = int(x.size - n_plus)
    return n_plus, n_minus, (n_plus / x.size if x.size else math.nan)


def matched_pair(cfg: SGAConfig) -> tuple[SGAConfig, SGAConfig]:
    """Sharp and unsharp configs whose per-spot position laws coincide.

    ``cfg`` supplies the unsharp parameters; the sharp twin absorbs the spin spread into
    device noise and uses the next seed.
    """
    unsharp = SGAConfig(**{**cfg.__dict__, "model": "unsharp"})
    sharp = SGAConfig(
        **{**cfg.__dict__, "model": "sharp", "spin_sd": 0.0, "device_sd": unsharp.position_sd, "seed": cfg.seed + 1}
    )
    return sharp, unsharp


def compare_models(cfg: SGAConfig) -> dict:
    sharp, unsharp = matched_pair(cfg)
    h_s = histogram(sample_positions(sharp), sharp)
    h_u = histogram(sample_positions(unsharp), unsharp)
    return {"sharp": h_s, "unsharp": h_u, "tv_distance": total_variation(h_s, h_u)}


# eigenvalue pairs (Z1Z2, X1Y2) of the Bell-like projectors, read off by matrix application
def bell_eigenpairs() -> dict[str, tuple[float, float]]:
    zz, xy = qc.observable("Z1Z2"), qc.observable("X1Y2")
    return {
        name: (qc.eigenvalue_on(zz, st.data), qc.eigenvalue_on(xy, st.data))
        for name, st in qc.bell_like_basis().items()
    }


def born_probabilities(state: qc.QuantumState) -> dict[str, float]:
    rho = state.density()
    if rho.shape != (4, 4):
        raise ValueError("Bell-basis sampling needs a two-qubit state")
    probs = {name: float(np.vdot(b.data, rho @ b.data).real) for name, b in qc.bell_like_basis().items()}
    total = sum(probs.values())
    return {k: max(p, 0.0) / total for k, p in probs.items()}


def unsharp_bell_sampling(
    state: qc.QuantumState, spread: float, n: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Sample Bell-like basis outcomes and unsharp values for (Z1Z2, X1Y2, Y1X2).

    Returns ``(outcomes, triples)``: outcome indices into ``('Phi+', 'Phi-', 'Psi+', 'Psi-')``
    and an (n, 3) array whose last column is the product of the first two.
    """
    if not isinstance(state, qc.QuantumState):
        raise TypeError("state must be a QuantumState")
    if spread < 0:
        raise ValueError("spread must be non-negative")
    probs = born_probabilities(state)
    names = list(qc.bell_like_basis())
    pairs = bell_eigenpairs()
    cdf = np.cumsum([probs[k] for k in names])
    cdf[-1] = 1.0
    u = counter_uniforms(seed, 0, n)
    outcomes = np.minimum(np.searchsorted(cdf, u[:, 0], side="right"), len(names) - 1)
    lam = np.array([pairs[k] for k in names])[outcomes]
    g1, g2 = _box_muller(u[:, 1], u[:, 2])
    v_zz = lam[:, 0] + spread * g1
    v_xy = lam[:, 1] + spread * g2
    return outcomes, np.stack([v_zz, v_xy, v_zz * v_xy], axis=1)


def write_samples_csv(samples, path) -> None:
    Path(path).write_text("x\n" + "".join(f"{float(v)!r}\n" for v in samples))
