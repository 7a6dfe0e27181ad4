"""Synthetic mmWave channel generation and dataset handling.

Channels follow a geometric L-path model over a half-wavelength uniform linear
array: per pilot subcarrier s the channel is
``h_s = sum_l alpha_l * a(theta_l) * exp(-2j*pi*tau_l*f_s)`` with complex
Gaussian path gains under an exponentially decaying power profile. Beam labels
are achievable-rate vectors over a DFT codebook, max-normalized per user.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT_M_PER_NS = 0.299792458

# refuse to allocate datasets above this many float64 entries
DEFAULT_MEMORY_BOUND = 200_000_000


class DegenerateChannelError(ValueError):
    """Raised for an all-zero (or numerically vanishing) channel."""


class DatasetFormatError(ValueError):
    """Raised when a dataset CSV does not match the expected schema."""


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    num_antennas: int
    num_subcarriers: int
    num_pilot_subcarriers: int
    num_users: int
    num_paths: int
    carrier_ghz: float
    bandwidth_ghz: float
    codebook_size: int
    user_region: tuple[float, float, float, float] = (10.0, 100.0, -50.0, 50.0)
    seed: int = 0

    def __post_init__(self):
        if self.num_pilot_subcarriers > self.num_subcarriers:
            raise ValueError("num_pilot_subcarriers exceeds num_subcarriers")
        if self.num_paths < 1:
            raise ValueError("num_paths must be >= 1")
        if self.codebook_size < 2:
            raise ValueError("codebook_size must be >= 2")

    @property
    def feature_dim(self) -> int:
        """k: number of complex features per user."""
        return self.num_antennas * self.num_pilot_subcarriers


PRESETS = {
    # desk-scale stand-ins for the O1_60 / I1_2p5 / I3_60 scenarios
    "O1_60-mini": ScenarioConfig(
        name="O1_60-mini", num_antennas=64, num_subcarriers=1024,
        num_pilot_subcarriers=8, num_users=4000, num_paths=5,
        carrier_ghz=60.0, bandwidth_ghz=0.5, codebook_size=64, seed=601),
    "I1_2p5-mini": ScenarioConfig(
        name="I1_2p5-mini", num_antennas=32, num_subcarriers=64,
        num_pilot_subcarriers=8, num_users=2000, num_paths=5,
        carrier_ghz=2.5, bandwidth_ghz=0.02, codebook_size=32,
        user_region=(2.0, 10.0, -5.0, 5.0), seed=251),
    "I3_60-mini": ScenarioConfig(
        name="I3_60-mini", num_antennas=16, num_subcarriers=32,
        num_pilot_subcarriers=8, num_users=2000, num_paths=5,
        carrier_ghz=60.0, bandwidth_ghz=0.5, codebook_size=16,
        user_region=(2.0, 11.0, -5.0, 5.0), seed=360),
}


@dataclass
class Dataset:
    """Real-valued features paired with beam labels plus split/normalization."""

    X: np.ndarray              # n x 2k, interleaved re/im
    Y: np.ndarray              # n x m, max-normalized rates
    scenario: ScenarioConfig
    train_idx: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))
    test_idx: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))
    feature_scale: float = 1.0  # features were divided by this modulus

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def train_rows(self):
        return self.X[self.train_idx], self.Y[self.train_idx]

    def test_rows(self):
        return self.X[self.test_idx], self.Y[self.test_idx]


def steering_vector(num_antennas: int, theta: np.ndarray) -> np.ndarray:
    """ULA steering vectors at half-wavelength spacing; shape (..., num_antennas)."""
    u = np.arange(num_antennas)
    return np.exp(1j * np.pi * np.multiply.outer(np.sin(theta), u))


def dft_codebook(num_antennas: int, m: int) -> np.ndarray:
    """m unit-norm DFT beams over a ULA; shape (num_antennas, m)."""
    if m < 1:
        raise ValueError("codebook size must be >= 1")
    u = np.arange(num_antennas).reshape(-1, 1)
    b = np.arange(m).reshape(1, -1)
    return np.exp(-2j * np.pi * u * b / m) / np.sqrt(num_antennas)


def _user_channel(cfg: ScenarioConfig, rng: np.random.Generator,
                  pilot_freqs_ghz: np.ndarray) -> np.ndarray:
    """One user's channel matrix, shape (num_pilot_subcarriers, num_antennas)."""
    xmin, xmax, ymin, ymax = cfg.user_region
    px = rng.uniform(xmin, xmax)
    py = rng.uniform(ymin, ymax)
    theta_los = np.arctan2(py, px)

    L = cfg.num_paths
    thetas = theta_los + np.concatenate(([0.0], rng.normal(0.0, 0.1, L - 1)))
    # delays relative to the first arrival (receiver time/phase sync)
    taus = np.concatenate(([0.0], rng.exponential(5.0, L - 1)))  # ns
    powers = np.exp(-np.arange(L))
    powers /= powers.sum()
    gains = np.sqrt(powers / 2.0) * (rng.standard_normal(L) + 1j * rng.standard_normal(L))
    gains[0] = np.sqrt(powers[0])  # dominant path phase-aligned

    a = steering_vector(cfg.num_antennas, thetas)            # (L, A)
    phase = np.exp(-2j * np.pi * np.outer(pilot_freqs_ghz, taus))  # (P, L), GHz * ns
    return (phase * gains) @ a                                # (P, A)


def compute_beam_labels(channel: np.ndarray, codebook: np.ndarray,
                        noise_power: float) -> np.ndarray:
    """Max-normalized achievable-rate vector over the codebook beams.

    ``channel`` is (num_pilot_subcarriers, num_antennas); the rate of beam b is
    the mean over subcarriers of log2(1 + |h_s^H f_b|^2 / noise).
    """
    gains = np.abs(channel.conj() @ codebook) ** 2            # (P, m)
    if not np.any(gains > 0.0):
        raise DegenerateChannelError("all-zero channel has no usable beam")
    rates = np.log2(1.0 + gains / noise_power).mean(axis=0)
    return rates / rates.max()


def complex_to_real(samples: np.ndarray) -> np.ndarray:
    """(n, k) complex -> (n, 2k) real with adjacent (re, im) pairs."""
    samples = np.atleast_2d(samples)
    out = np.empty((samples.shape[0], 2 * samples.shape[1]), dtype=np.float64)
    out[:, 0::2] = samples.real
    out[:, 1::2] = samples.imag
    return out


def real_to_complex(rows: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`complex_to_real`."""
    rows = np.atleast_2d(rows)
    if rows.shape[1] % 2 != 0:
        raise ValueError(f"odd feature width {rows.shape[1]}: expected re/im pairs")
    return rows[:, 0::2] + 1j * rows[:, 1::2]


def generate_scenario(cfg: ScenarioConfig,
                      memory_bound: int = DEFAULT_MEMORY_BOUND) -> Dataset:
    """Generate a synthetic dataset for one scenario, deterministic in cfg.seed."""
    k = cfg.feature_dim
    entries = cfg.num_users * (2 * k + cfg.codebook_size)
    if entries > memory_bound:
        raise MemoryError(
            f"scenario {cfg.name!r} needs {entries} dataset entries "
            f"(k={k}, m={cfg.codebook_size}, n={cfg.num_users}), "
            f"above the bound of {memory_bound}"
        )

    pilots = np.floor(
        np.arange(cfg.num_pilot_subcarriers) * cfg.num_subcarriers
        / cfg.num_pilot_subcarriers).astype(np.int64)
    pilot_freqs = pilots * cfg.bandwidth_ghz / cfg.num_subcarriers

    channels = np.empty((cfg.num_users, cfg.num_pilot_subcarriers, cfg.num_antennas),
                        dtype=np.complex128)
    for u in range(cfg.num_users):
        # per-user seed stream: independent of generation order
        for attempt in range(16):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=cfg.seed, spawn_key=(u, attempt)))
            h = _user_channel(cfg, rng, pilot_freqs)
            peak = np.abs(h).max()
            if peak > 1e-12:
                channels[u] = h / peak
                break
        else:
            raise DegenerateChannelError(f"user {u}: could not draw a usable channel")

    codebook = dft_codebook(cfg.num_antennas, cfg.codebook_size)
    beam_gains = np.abs(np.einsum("ups,sb->upb", channels.conj(),
                                  codebook)) ** 2
    # fix noise so the median per-beam SNR sits at 10 dB (span roughly 0-20 dB)
    noise_power = max(float(np.median(beam_gains)) / 10.0, 1e-30)
    rates = np.log2(1.0 + beam_gains / noise_power).mean(axis=1)   # (n, m)
    Y = rates / rates.max(axis=1, keepdims=True)

    flat = channels.reshape(cfg.num_users, k)
    X = complex_to_real(flat)
    # per-user peak normalization above bounds every feature in [-1, 1]
    return Dataset(X=X, Y=Y, scenario=cfg, feature_scale=1.0)


def split_dataset(dataset: Dataset, train_fraction: float, seed: int) -> Dataset:
    """Deterministic shuffled train/test split."""
    n = dataset.n
    if n < 2:
        raise ValueError(f"need at least 2 samples to split, got {n}")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0x5D117,)))
    perm = rng.permutation(n)
    n_train = int(np.floor(n * train_fraction))
    return dataclasses.replace(
        dataset,
        train_idx=np.sort(perm[:n_train]),
        test_idx=np.sort(perm[n_train:]),
    )


def export_dataset_csv(dataset: Dataset, path) -> None:
    """Write features and labels as CSV at full float64 precision."""
    k = dataset.X.shape[1] // 2
    m = dataset.Y.shape[1]
    header = []
    for i in range(k):
        header += [f"f{i}_re", f"f{i}_im"]
    header += [f"y{j}" for j in range(m)]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for xr, yr in zip(dataset.X, dataset.Y):
            fh.write(",".join(repr(float(v)) for v in xr) + ","
                     + ",".join(repr(float(v)) for v in yr) + "\n")


def import_dataset_csv(path) -> Dataset:
    """Read a dataset CSV produced by :func:`export_dataset_csv`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file, no header")
    header = lines[0].split(",")
    k = sum(1 for c in header if c.endswith("_re"))
    m = sum(1 for c in header if c.startswith("y"))
    expected = []
    for i in range(k):
        expected += [f"f{i}_re", f"f{i}_im"]
    expected += [f"y{j}" for j in range(m)]
    if header != expected or k == 0 or m == 0:
        want = expected[:4] + ["..."] if expected else ["f0_re", "f0_im", "...", "y0"]
        raise DatasetFormatError(
            f"{path}: header mismatch, expected columns like {','.join(want)}")
    if len(lines) < 2:
        raise DatasetFormatError(f"{path}: no data rows")
    width = 2 * k + m
    rows = np.empty((len(lines) - 1, width))
    for ln, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != width:
            raise DatasetFormatError(
                f"{path}:{ln}: expected {width} columns, got {len(cells)}")
        try:
            rows[ln - 2] = [float(c) for c in cells]
        except ValueError as exc:
            raise DatasetFormatError(f"{path}:{ln}: non-numeric cell ({exc})") from None
    cfg = ScenarioConfig(
        name=f"imported:{path}", num_antennas=k, num_subcarriers=1,
        num_pilot_subcarriers=1, num_users=rows.shape[0], num_paths=1,
        carrier_ghz=0.0, bandwidth_ghz=0.0, codebook_size=m, seed=0)
    return Dataset(X=rows[:, :2 * k], Y=rows[:, 2 * k:], scenario=cfg)
