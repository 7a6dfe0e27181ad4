"""Synthetic channel generation, labels, splits, and CSV round-trips."""

import dataclasses

import numpy as np
import pytest

import beamsec as bs
from beamsec.channel import (DatasetFormatError, DegenerateChannelError,
                             ScenarioConfig, compute_beam_labels,
                             steering_vector)
from tests.conftest import TINY_SCENARIO


def test_steering_vector_unit_modulus():
    a = steering_vector(8, np.array([0.3, -0.7]))
    assert a.shape == (2, 8)
    assert np.allclose(np.abs(a), 1.0)


def test_steering_vector_broadside_is_all_ones():
    a = steering_vector(6, np.array([0.0]))
    assert np.allclose(a, 1.0)


def test_dft_codebook_columns_are_unit_norm():
    F = bs.dft_codebook(16, 16)
    assert F.shape == (16, 16)
    assert np.allclose(np.linalg.norm(F, axis=0), 1.0)
    # distinct beams are orthogonal for a square codebook
    gram = np.abs(F.conj().T @ F)
    assert np.allclose(gram, np.eye(16), atol=1e-12)


def test_dft_codebook_rejects_empty():
    with pytest.raises(ValueError, match=">= 1"):
        bs.dft_codebook(8, 0)


def test_complex_real_round_trip(rng):
    z = rng.normal(size=(5, 7)) + 1j * rng.normal(size=(5, 7))
    back = bs.real_to_complex(bs.complex_to_real(z))
    assert np.array_equal(back, z)


def test_real_to_complex_rejects_odd_width():
    with pytest.raises(ValueError, match="odd feature width"):
        bs.real_to_complex(np.ones((2, 5)))


def test_compute_beam_labels_normalized():
    rng = np.random.default_rng(0)
    h = rng.normal(size=(4, 8)) + 1j * rng.normal(size=(4, 8))
    labels = compute_beam_labels(h, bs.dft_codebook(8, 8), noise_power=0.1)
    assert labels.shape == (8,)
    assert labels.max() == 1.0
    assert np.all(labels > 0.0)


def test_compute_beam_labels_degenerate_channel():
    with pytest.raises(DegenerateChannelError, match="all-zero"):
        compute_beam_labels(np.zeros((2, 4), dtype=complex),
                            bs.dft_codebook(4, 4), noise_power=0.1)


def test_generate_scenario_shapes_and_ranges(tiny_dataset):
    cfg = tiny_dataset.scenario
    assert tiny_dataset.X.shape == (cfg.num_users, 2 * cfg.feature_dim)
    assert tiny_dataset.Y.shape == (cfg.num_users, cfg.codebook_size)
    assert np.all(np.abs(tiny_dataset.X) <= 1.0)
    assert np.all((tiny_dataset.Y >= 0.0) & (tiny_dataset.Y <= 1.0))
    assert np.allclose(tiny_dataset.Y.max(axis=1), 1.0)


def test_generate_scenario_is_deterministic():
    a = bs.generate_scenario(TINY_SCENARIO)
    b = bs.generate_scenario(TINY_SCENARIO)
    assert np.array_equal(a.X, b.X)
    assert np.array_equal(a.Y, b.Y)


def test_generate_scenario_seed_changes_data():
    other = dataclasses.replace(TINY_SCENARIO, seed=TINY_SCENARIO.seed + 1)
    a = bs.generate_scenario(TINY_SCENARIO)
    b = bs.generate_scenario(other)
    assert not np.array_equal(a.X, b.X)


def test_generate_scenario_memory_bound():
    big = dataclasses.replace(TINY_SCENARIO, num_users=10**9)
    with pytest.raises(MemoryError, match="entries"):
        bs.generate_scenario(big)


def test_scenario_config_validation():
    with pytest.raises(ValueError, match="pilot"):
        ScenarioConfig(name="x", num_antennas=4, num_subcarriers=4,
                       num_pilot_subcarriers=8, num_users=10, num_paths=2,
                       carrier_ghz=60, bandwidth_ghz=0.5, codebook_size=4)
    with pytest.raises(ValueError, match="paths"):
        dataclasses.replace(TINY_SCENARIO, num_paths=0)
    with pytest.raises(ValueError, match="codebook"):
        dataclasses.replace(TINY_SCENARIO, codebook_size=1)


def test_split_dataset_partitions(tiny_dataset):
    n = tiny_dataset.n
    tr, te = tiny_dataset.train_idx, tiny_dataset.test_idx
    assert len(tr) + len(te) == n
    assert len(np.intersect1d(tr, te)) == 0
    assert len(tr) == int(np.floor(0.8 * n))


def test_split_dataset_deterministic(tiny_dataset):
    again = bs.split_dataset(tiny_dataset, 0.8, seed=5)
    assert np.array_equal(again.train_idx, tiny_dataset.train_idx)
    assert np.array_equal(again.test_idx, tiny_dataset.test_idx)


def test_split_dataset_bad_fraction(tiny_dataset):
    with pytest.raises(ValueError, match="train_fraction"):
        bs.split_dataset(tiny_dataset, 1.5, seed=0)


def test_csv_round_trip_is_byte_identical(tiny_dataset, tmp_path):
    p1 = tmp_path / "d1.csv"
    p2 = tmp_path / "d2.csv"
    bs.export_dataset_csv(tiny_dataset, p1)
    loaded = bs.import_dataset_csv(p1)
    assert np.array_equal(loaded.X, tiny_dataset.X)
    assert np.array_equal(loaded.Y, tiny_dataset.Y)
    bs.export_dataset_csv(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_import_rejects_header_mismatch(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(DatasetFormatError, match="header"):
        bs.import_dataset_csv(p)


def test_import_rejects_short_row(tiny_dataset, tmp_path):
    p = tmp_path / "trunc.csv"
    bs.export_dataset_csv(tiny_dataset, p)
    lines = p.read_text().splitlines()
    lines[3] = ",".join(lines[3].split(",")[:-2])
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetFormatError, match=":4"):
        bs.import_dataset_csv(p)


def test_import_rejects_non_numeric_cell(tiny_dataset, tmp_path):
    p = tmp_path / "corrupt.csv"
    bs.export_dataset_csv(tiny_dataset, p)
    lines = p.read_text().splitlines()
    cells = lines[2].split(",")
    cells[0] = "oops"
    lines[2] = ",".join(cells)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetFormatError, match="non-numeric"):
        bs.import_dataset_csv(p)


def test_import_rejects_empty_file(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(DatasetFormatError, match="empty"):
        bs.import_dataset_csv(p)


def test_presets_are_well_formed():
    for name, cfg in bs.PRESETS.items():
        assert cfg.name == name
        assert cfg.num_pilot_subcarriers <= cfg.num_subcarriers
        assert cfg.codebook_size >= 2
