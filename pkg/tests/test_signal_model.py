import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparse_diffusion.signal_model import (GroundTruthSchedule, NodeProfile, active_truth, generate_run_data,
                                           make_sparse_truth, nested_sparse_schedule, node_normals, sample,
                                           sample_profiles, substream_rng)


def test_noiseless_projection_on_first_basis_vector():
    e1 = np.zeros(5)
    e1[0] = 1.0
    truth = GroundTruthSchedule.constant(e1)
    prof = NodeProfile(1.3, 0.0, 0.1)
    for i in (0, 7, 123):
        s = sample(prof, truth, i, master_seed=9, node_index=2)
        assert s.d == s.u[0]


def test_zero_truth_measurement_moments():
    n = 100_000
    sv = 0.2
    prof = NodeProfile(1.0, sv, 0.1)
    truth = GroundTruthSchedule.constant(np.zeros(3))
    d = generate_run_data([prof], truth, n, master_seed=4).d[:, 0]
    se_mean = np.sqrt(sv / n)
    se_var = sv * np.sqrt(2.0 / n)
    assert abs(d.mean()) < 3 * se_mean
    assert abs(d.var() - sv) < 3 * se_var


def test_regressor_covariance_with_configured_power():
    n, M = 10_000, 50
    su = 1.7
    data = generate_run_data([NodeProfile(su, 0.1, 0.1)], GroundTruthSchedule.constant(np.zeros(M)), n, 21)
    U = data.U[:, 0, :]
    R = U.T @ U / n
    np.testing.assert_allclose(np.diag(R), su, rtol=0.05)
    # off-diagonal entries have standard error su / sqrt(n)
    off = R[~np.eye(M, dtype=bool)]
    assert np.mean(np.abs(off) < 3 * su / np.sqrt(n)) > 0.99


def test_sample_matches_bulk_generation_bitwise():
    profiles = sample_profiles(3, 0.1, np.random.default_rng(0))
    truth = nested_sparse_schedule(6, [(0, 1), (40, 3)], np.random.default_rng(1))
    data = generate_run_data(profiles, truth, 60, master_seed=77, run=5)
    for k in range(3):
        for i in (0, 39, 40, 59):
            s = sample(profiles[k], truth, i, 77, k, run=5)
            assert s.u.tobytes() == data.U[i, k].tobytes()
            assert s.d == data.d[i, k]


def test_streams_are_independent_of_generation_order():
    a = node_normals(3, 0, 1, 4, 10, 5)
    b = node_normals(3, 0, 1, 4, 0, 15)[10:]
    assert a.tobytes() == b.tobytes()


def test_distinct_nodes_and_runs_use_distinct_streams():
    base = node_normals(3, 0, 0, 4, 0, 100)
    assert not np.array_equal(base, node_normals(3, 0, 1, 4, 0, 100))
    assert not np.array_equal(base, node_normals(3, 1, 0, 4, 0, 100))
    assert not np.array_equal(base, node_normals(4, 0, 0, 4, 0, 100))
    # near-zero correlation between neighbouring substreams
    c = np.corrcoef(base.ravel(), node_normals(3, 0, 1, 4, 0, 100).ravel())[0, 1]
    assert abs(c) < 0.1


def test_negative_iteration_rejected():
    with pytest.raises(ValueError):
        sample(NodeProfile(1, 0, 0.1), GroundTruthSchedule.constant([0.0]), -1, 0, 0)


def test_active_truth_single_segment():
    w = np.array([1.0, 2.0])
    truth = GroundTruthSchedule.constant(w)
    for i in (0, 5, 10**6):
        np.testing.assert_array_equal(active_truth(truth, i), w)


def test_active_truth_boundary_convention():
    wa, wb = np.zeros(2), np.ones(2)
    truth = GroundTruthSchedule(2, ((0, wa), (1000, wb)))
    np.testing.assert_array_equal(active_truth(truth, 999), wa)
    np.testing.assert_array_equal(active_truth(truth, 1000), wb)


def test_three_phase_tracking_schedule():
    truth = nested_sparse_schedule(50, [(0, 1), (1000, 25), (2000, 50)], np.random.default_rng(2))
    assert [np.count_nonzero(active_truth(truth, i)) for i in (0, 999, 1000, 1999, 2000, 2999)] == [1, 1, 25, 25, 50, 50]
    np.testing.assert_array_equal(active_truth(truth, 2500), np.ones(50))
    arr = truth.as_array(3000)
    assert arr.shape == (3000, 50)
    np.testing.assert_array_equal(arr[1500], active_truth(truth, 1500))
    assert truth.phase_bounds(3000) == [(0, 1000), (1000, 2000), (2000, 3000)]


def test_schedule_validation():
    with pytest.raises(ValueError):
        GroundTruthSchedule(2, ((5, np.zeros(2)),))
    with pytest.raises(ValueError):
        GroundTruthSchedule(2, ((0, np.zeros(2)), (0, np.ones(2))))
    with pytest.raises(ValueError):
        GroundTruthSchedule(2, ((0, np.zeros(3)),))


def test_make_sparse_truth_examples():
    rng = np.random.default_rng(0)
    np.testing.assert_array_equal(make_sparse_truth(50, 0, 1.0, rng), np.zeros(50))
    np.testing.assert_array_equal(make_sparse_truth(50, 50, 1.0, rng), np.ones(50))
    w = make_sparse_truth(50, 5, 1.0, rng)
    assert np.count_nonzero(w) == 5 and np.abs(w).sum() == 5
    with pytest.raises(ValueError):
        make_sparse_truth(50, 51)
    with pytest.raises(ValueError):
        make_sparse_truth(50, -1)


@given(st.integers(1, 40), st.data())
def test_make_sparse_truth_support_size(M, data):
    s = data.draw(st.integers(0, M))
    value = data.draw(st.floats(0.1, 10))
    w = make_sparse_truth(M, s, value, np.random.default_rng(data.draw(st.integers(0, 1000))))
    assert np.count_nonzero(w) == s
    assert set(np.unique(w)) <= {0.0, value}


def test_default_profile_sampler_ranges():
    prof = sample_profiles(200, 0.1, np.random.default_rng(1))
    su = np.array([p.regressor_variance for p in prof])
    sv = np.array([p.noise_variance for p in prof])
    assert su.min() >= 0.5 and su.max() <= 2.0
    assert sv.min() >= 0.05 and sv.max() <= 0.25


def test_profile_validation():
    with pytest.raises(ValueError):
        NodeProfile(0.0, 0.1, 0.1)
    with pytest.raises(ValueError):
        NodeProfile(1.0, 0.1, 0.0)
    with pytest.raises(ValueError):
        NodeProfile(1.0, -0.1, 0.1)


def test_substream_rng_reproducible():
    assert substream_rng(5, 1).random() == substream_rng(5, 1).random()
    assert substream_rng(5, 1).random() != substream_rng(5, 2).random()
