"""Tests for the reproducible Rayleigh channel ensemble."""

import numpy as np
import pytest

from milacsim import ChannelEnsembleSpec, TrialIndexError, rayleigh_channel


def test_same_seed_and_trial_are_bit_identical():
    spec = ChannelEnsembleSpec(n_rx=4, n_tx=6, n_trials=10, master_seed=42)
    a = rayleigh_channel(spec, 3)
    b = rayleigh_channel(spec, 3)
    assert a.dtype == np.complex128
    assert a.shape == (4, 6)
    assert np.array_equal(a, b)


def test_distinct_trials_differ():
    spec = ChannelEnsembleSpec(n_rx=3, n_tx=3, n_trials=5, master_seed=0)
    mats = [rayleigh_channel(spec, t) for t in range(5)]
    for i in range(5):
        for j in range(i + 1, 5):
            assert not np.array_equal(mats[i], mats[j])


def test_distinct_master_seeds_differ():
    a = rayleigh_channel(ChannelEnsembleSpec(2, 2, 1, master_seed=1), 0)
    b = rayleigh_channel(ChannelEnsembleSpec(2, 2, 1, master_seed=2), 0)
    assert not np.array_equal(a, b)


def test_trials_do_not_depend_on_ensemble_size():
    # Trial 3 must be the same matrix whether the ensemble nominally holds
    # 10 or 1000 trials: draws are keyed per trial, not streamed.
    small = ChannelEnsembleSpec(n_rx=4, n_tx=4, n_trials=10, master_seed=7)
    large = ChannelEnsembleSpec(n_rx=4, n_tx=4, n_trials=1000, master_seed=7)
    assert np.array_equal(rayleigh_channel(small, 3), rayleigh_channel(large, 3))


def test_unit_entry_variance():
    # 10^5 entries: the sample mean of |h|^2 concentrates to 1 within 1 percent.
    spec = ChannelEnsembleSpec(n_rx=100, n_tx=100, n_trials=10, master_seed=2024)
    samples = np.concatenate(
        [np.abs(rayleigh_channel(spec, t)) ** 2 for t in range(10)], axis=None
    )
    assert samples.size == 100_000
    assert abs(samples.mean() - 1.0) < 0.01


def test_component_variances_are_half_each():
    spec = ChannelEnsembleSpec(n_rx=200, n_tx=250, n_trials=1, master_seed=5)
    h = rayleigh_channel(spec, 0)
    assert abs(np.var(h.real) - 0.5) < 0.01
    assert abs(np.var(h.imag) - 0.5) < 0.01
    assert abs(h.real.mean()) < 0.01
    assert abs(h.imag.mean()) < 0.01


def test_trial_index_bounds():
    spec = ChannelEnsembleSpec(n_rx=2, n_tx=2, n_trials=3, master_seed=0)
    with pytest.raises(TrialIndexError):
        rayleigh_channel(spec, 3)
    with pytest.raises(TrialIndexError):
        rayleigh_channel(spec, -1)


def test_trial_index_error_is_an_index_error():
    spec = ChannelEnsembleSpec(n_rx=2, n_tx=2, n_trials=1, master_seed=0)
    with pytest.raises(IndexError):
        rayleigh_channel(spec, 5)


def test_spec_validation():
    with pytest.raises(ValueError):
        ChannelEnsembleSpec(n_rx=0, n_tx=2, n_trials=1, master_seed=0)
    with pytest.raises(ValueError):
        ChannelEnsembleSpec(n_rx=2, n_tx=2, n_trials=0, master_seed=0)
    with pytest.raises(ValueError):
        ChannelEnsembleSpec(n_rx=2, n_tx=2, n_trials=1, master_seed=-1)
    with pytest.raises(ValueError):
        ChannelEnsembleSpec(n_rx=2, n_tx=2, n_trials=1, master_seed=2**64)
    # Largest valid seed is accepted.
    ChannelEnsembleSpec(n_rx=2, n_tx=2, n_trials=1, master_seed=2**64 - 1)
