"""Metropolis dynamics tests.

The exactness anchor is enumeration: on a 3-node path every one of the 8
configurations has a Boltzmann weight computable by hand, and a long
single-flip chain must reproduce them.  Energy identities on complete
graphs are integer arithmetic, so they are asserted exactly rather than
approximately.

Stochastic assertions (ordering, metastability, mean-field agreement) run
under fixed seeds with 3-sigma-ish margins calibrated once; they are
deterministic on a given platform.
"""

import itertools

import numpy as np
import pytest

from graphon_ising import kernels as K
from graphon_ising import montecarlo as mc
from graphon_ising import wrandom as wr

MU_0 = 0.23
MU_1 = 0.9 * np.sin(0.2 * np.pi) / np.pi
MU_7 = 0.9 * np.sin(0.2 * np.pi * 7) / (np.pi * 7)


def graph_from_dense(dense: np.ndarray) -> wr.Adjacency:
    dense = np.asarray(dense, dtype=np.uint8)
    n = dense.shape[0]
    iu = np.triu_indices(n, k=1)
    bits = np.packbits(dense[iu], bitorder="little")
    return wr.Adjacency(n=n, bits=bits, seed=0,
                        source={"variant": "er", "parameters": {"p": 0.5},
                                "domain": [0.0, 1.0]})


def brute_energy(dense: np.ndarray, sigma: np.ndarray, J: int) -> float:
    n = len(sigma)
    total = 0
    for i in range(n):
        for j in range(n):
            total += int(dense[i, j]) * int(sigma[i]) * int(sigma[j])
    # same final scaling expression as the library so the comparison is exact:
    # the pair sum is an integer, so any difference is a real bug, not rounding
    return -J * total / (2.0 * n**2)


@pytest.fixture(scope="module")
def sw5000():
    return wr.sample(K.small_world(0.05, 0.1), 5000, seed=21)


@pytest.fixture(scope="module")
def path3():
    dense = np.zeros((3, 3), dtype=np.uint8)
    dense[0, 1] = dense[1, 0] = 1
    dense[1, 2] = dense[2, 1] = 1
    return dense, graph_from_dense(dense)


# ------------------------------------------------------------------- energy

def test_energy_aligned_complete_graph():
    a = wr.sample(K.er(1.0), 5, seed=0)
    st = mc.spin_state(a, np.ones(5, dtype=np.int8), J=1, T=1.0)
    assert mc.energy(st, a) == -(5 - 1) / (2 * 5)


def test_energy_alternating_complete_graph():
    a = wr.sample(K.er(1.0), 6, seed=0)
    alt = np.resize([1, -1], 6).astype(np.int8)
    st = mc.spin_state(a, alt, J=1, T=1.0)
    # zero magnetization on K_n leaves only the subtracted diagonal
    assert mc.energy(st, a) == 1 / (2 * 6)


def test_energy_matches_brute_force():
    a = wr.sample(K.small_world(0.05, 0.1), 60, seed=8)
    rng = np.random.Generator(np.random.Philox(key=[5, 0]))
    sigma = np.where(rng.random(60) < 0.5, -1, 1).astype(np.int8)
    for J in (1, -1):
        st = mc.spin_state(a, sigma, J=J, T=1.0)
        assert mc.energy(st, a) == brute_energy(a.dense(), sigma, J)


def test_single_flip_energy_difference():
    n = 7
    a = wr.sample(K.er(1.0), n, seed=0)
    up = np.ones(n, dtype=np.int8)
    st = mc.spin_state(a, up, J=1, T=1.0)
    before = mc.energy(st, a)
    predicted = 2.0 * st.J * st.sigma[0] * st.s[0] / n   # Metropolis dE
    flipped = up.copy()
    flipped[0] = -1
    st2 = mc.spin_state(a, flipped, J=1, T=1.0)
    assert (mc.energy(st2, a) - before) * n == pytest.approx(predicted, abs=1e-14)
    assert predicted == pytest.approx(2.0 * (n - 1) / n)


def test_energy_size_mismatch():
    a = wr.sample(K.er(0.5), 10, seed=0)
    b = wr.sample(K.er(0.5), 12, seed=0)
    st = mc.spin_state(a, "random", J=1, T=1.0)
    with pytest.raises(ValueError):
        mc.energy(st, b)


# ------------------------------------------------------------------- sweeps

def test_acceptance_limits():
    a = wr.sample(K.er(1.0), 20, seed=0)
    rng = np.random.Generator(np.random.Philox(key=[6, 0]))
    hot = mc.spin_state(a, "random", J=1, T=1e12, seed=1)
    assert mc.sweep(hot, a, rng) == 1.0
    cold = mc.spin_state(a, np.ones(20, dtype=np.int8), J=1, T=1e-9)
    assert mc.sweep(cold, a, rng) == 0.0


def test_cache_stays_exact():
    a = wr.sample(K.small_world(0.05, 0.1), 500, seed=9)
    st = mc.spin_state(a, "random", J=1, T=0.3, seed=2)
    rng = np.random.Generator(np.random.Philox(key=[7, 0]))
    for _ in range(100):
        mc.sweep(st, a, rng)
    assert mc.cache_error(st, a) == 0
    assert mc.energy(st, a) == brute_energy(a.dense(), st.sigma, 1)


def test_detailed_balance_path_graph(path3):
    dense, a = path3
    T, J = 1.0, 1
    hist = mc.state_histogram(a, J, T, steps=10_000_000, seed=3,
                              burn_in=10_000)
    empirical = hist / hist.sum()
    weights = np.zeros(8)
    for spins in itertools.product([-1, 1], repeat=3):
        sigma = np.array(spins)
        code = sum(1 << i for i in range(3) if sigma[i] > 0)
        weights[code] = np.exp(-brute_energy(dense, sigma, J) * 3 / T)
    exact = weights / weights.sum()
    assert np.abs(empirical - exact).max() < 0.01
    assert 0.5 * np.abs(empirical - exact).sum() < 0.01


# ------------------------------------------------------------------ overlaps

def test_overlap_square_wave_direct_sum():
    for n, k in [(16, 1), (500, 5)]:
        sigma = mc.mode_signs(k, n)
        acc = 0j
        for i in range(n):
            x = (i + 0.5) / n
            acc += sigma[i] * np.exp(-2j * np.pi * k * x)
        assert mc.overlap(sigma, k) == pytest.approx(2 * abs(acc) / n, abs=1e-12)
    # the discrete sum sits within O(1/n^2) of the continuum value 4/pi
    assert abs(mc.overlap(mc.mode_signs(5, 500), 5) - 4 / np.pi) < 1e-3


def test_overlap_uniform_state():
    sigma = np.ones(200, dtype=np.int8)
    assert mc.overlap(sigma, 0) == 1.0
    for k in (1, 2, 3):
        assert mc.overlap(sigma, k) < 1e-12


def test_overlap_random_noise_level():
    rng = np.random.Generator(np.random.Philox(key=[17, 0]))
    sigma = np.where(rng.random(5000) < 0.5, -1, 1).astype(np.int8)
    for k in range(6):
        assert mc.overlap(sigma, k) < 0.05


def test_mode_signs():
    assert np.all(mc.mode_signs(0, 10) == 1)
    s = mc.mode_signs(1, 8)
    assert set(s.tolist()) == {-1, 1}
    assert np.array_equal(s, np.where(
        np.cos(2 * np.pi * K.grid(8)) >= 0, 1, -1))


# ------------------------------------------------------------------ quenches

def test_quench_fm_ground_state(sw5000):
    traj = mc.quench(sw5000, J=1, T=0.9 * MU_0, init="random", sweeps=300,
                     measure_every=10, modes=(0, 1, 2), seed=4)
    assert traj.q[-1, 0] > 0.5
    assert np.all(np.isfinite(traj.energy))
    # relaxation lowers the energy from the random start
    assert traj.energy[-1] < traj.energy[0] - 0.01


def test_quench_afm_selects_most_negative_mode():
    a = wr.sample(K.small_world(0.05, 0.1), 2000, seed=22)
    traj = mc.quench(a, J=-1, T=0.9 * abs(MU_7), init="random", sweeps=400,
                     measure_every=20, modes=tuple(range(10)), seed=3)
    final = dict(zip(traj.modes, traj.q[-1]))
    assert final[7] > 0.5
    for k, q in final.items():
        if k != 7:
            assert final[7] > 2.0 * q


def test_quench_paramagnetic():
    a = wr.sample(K.small_world(0.05, 0.1), 1000, seed=25)
    traj = mc.quench(a, J=1, T=50.0, init="random", sweeps=200,
                     measure_every=20, modes=(0, 1, 2), seed=6)
    assert np.all(traj.q[-1] < 0.1)


def test_quench_deterministic(sw5000):
    kw = dict(J=1, T=0.2, init=("from_mode", 1), sweeps=40, measure_every=10,
              modes=(0, 1), seed=11)
    t1 = mc.quench(sw5000, **kw)
    t2 = mc.quench(sw5000, **kw)
    assert np.array_equal(t1.final_sigma, t2.final_sigma)
    assert np.array_equal(t1.q, t2.q)
    assert np.array_equal(t1.energy, t2.energy)


def test_quench_spin_flip_symmetry():
    a = wr.sample(K.er(0.5), 400, seed=26)
    rng = np.random.Generator(np.random.Philox(key=[8, 0]))
    init = np.where(rng.random(400) < 0.5, -1, 1).astype(np.int8)
    kw = dict(J=1, T=0.4, sweeps=50, measure_every=10, modes=(0, 1), seed=12)
    plus = mc.quench(a, init=init, **kw)
    minus = mc.quench(a, init=-init, **kw)
    # dE is invariant under global flip, so the paired chains mirror exactly
    assert np.array_equal(plus.final_sigma, -minus.final_sigma)
    assert np.array_equal(plus.q, minus.q)
    assert np.array_equal(plus.energy, minus.energy)


def test_quench_profiles_binned():
    a = wr.sample(K.er(0.5), 100, seed=27)
    traj = mc.quench(a, J=1, T=1.0, init=("from_mode", 0), sweeps=10,
                     measure_every=5, bins=10, seed=0)
    assert traj.profiles.shape == (len(traj.sweeps), 10)
    assert np.all(traj.profiles[0] == 1.0)          # initial all-up state
    assert np.all(np.abs(traj.profiles) <= 1.0)


def test_mean_field_agreement_er():
    a = wr.sample(K.er(0.5), 2000, seed=24)
    traj = mc.quench(a, J=1, T=1 / 3, init="random", sweeps=200,
                     measure_every=10, modes=(0,), seed=5, burn_in=300)
    assert abs(traj.q[1:, 0].mean() - 0.8586) < 0.03


# --------------------------------------------------------------- dwell times

def test_dwell_threshold_above_initial(sw5000):
    traj = mc.quench(sw5000, J=1, T=0.95 * MU_1, init=("from_mode", 1),
                     sweeps=20, measure_every=1, modes=(0, 1), seed=0)
    dwell, censored = mc.dwell_time(traj, 1, threshold=2.0)
    assert dwell == 0 and not censored


def test_dwell_censored_when_budget_too_short(sw5000):
    # the harmonic state survives far longer than this budget, so the
    # overlap never drops below threshold and the dwell is right-censored
    traj = mc.quench(sw5000, J=1, T=0.95 * MU_1, init=("from_mode", 1),
                     sweeps=5, measure_every=1, modes=(0, 1), seed=0)
    dwell, censored = mc.dwell_time(traj, 1, threshold=0.2)
    assert censored and dwell == traj.sweeps[-1]


def test_low_temperature_walls_still_move(sw5000):
    # a sign-profile init puts its domain walls at zero local field, so
    # wall flips cost nothing and coarsening proceeds even as T -> 0:
    # escape from the harmonic state is not suppressed at low temperature
    traj = mc.quench(sw5000, J=1, T=0.01 * MU_0, init=("from_mode", 1),
                     sweeps=80, measure_every=5, modes=(0, 1), seed=0)
    dwell, censored = mc.dwell_time(traj, 1, threshold=0.2)
    assert not censored
    assert traj.q[-1, 0] > 0.9 and traj.q[-1, 1] < 0.05


def test_dwell_metastable_exceeds_random(sw5000):
    traj = mc.quench(sw5000, J=1, T=0.95 * MU_1, init=("from_mode", 1),
                     sweeps=600, measure_every=1, modes=(0, 1), seed=13)
    dwell, censored = mc.dwell_time(traj, 1, threshold=0.2)
    assert not censored
    rand = mc.quench(sw5000, J=1, T=0.95 * MU_1, init="random",
                     sweeps=20, measure_every=1, modes=(0, 1), seed=13)
    dwell_rand, _ = mc.dwell_time(rand, 1, threshold=0.2)
    assert dwell_rand == 0
    assert dwell >= 5 * max(dwell_rand, 1)
    # the escape ends on the uniform branch
    assert traj.q[-1, 0] > 0.5 and traj.q[-1, 1] < 0.2


def test_dwell_unknown_mode(sw5000):
    traj = mc.quench(sw5000, J=1, T=0.2, init="random", sweeps=5,
                     measure_every=5, modes=(0, 1), seed=0)
    with pytest.raises(ValueError):
        mc.dwell_time(traj, 3, threshold=0.2)


# --------------------------------------------------------------- validation

def test_state_validation():
    a = wr.sample(K.er(0.5), 10, seed=0)
    with pytest.raises(ValueError):
        mc.spin_state(a, "random", J=2, T=1.0)
    with pytest.raises(ValueError):
        mc.spin_state(a, "random", J=1, T=0.0)
    with pytest.raises(ValueError):
        mc.spin_state(a, np.ones(9, dtype=np.int8), J=1, T=1.0)
    with pytest.raises(ValueError):
        mc.spin_state(a, np.full(10, 2, dtype=np.int8), J=1, T=1.0)
    with pytest.raises(ValueError):
        mc.spin_state(a, "thermal", J=1, T=1.0)


def test_histogram_validation(path3):
    _, a = path3
    with pytest.raises(ValueError):
        mc.state_histogram(a, 1, 1.0, steps=0)
    big = wr.sample(K.er(0.5), 25, seed=0)
    with pytest.raises(ValueError):
        mc.state_histogram(big, 1, 1.0, steps=10)
