"""Metropolis dynamics for the Ising model on sampled graphs.

Hamiltonian with one spin per node, zero field, and the dense-graph
coupling normalization:

    H = -(J / 2n) sum_ij a_ij sigma_i sigma_j,        J in {+1, -1}.

The 1/n keeps the interaction O(1) per spin on dense graphs, so ordering
temperatures sit at the kernel eigenvalues (T_c = J mu_k) and finite runs
compare directly with the mean-field branches.

A sweep proposes n single-spin flips at uniformly random sites (random
updating, so detailed balance holds with no sublattice caveats) and
accepts with probability min(1, exp(-dE/T)), where

    dE = (2 J / n) sigma_i s_i,        s_i = sum_j a_ij sigma_j.

The local sums s_i are cached as integers and updated incrementally on
every accepted flip; the energy reported at each measurement is computed
from the cache, which is exact because the cache is integer-valued (the
bookkeeping test asserts cache == recomputation, not merely closeness).

Overlaps with the kernel eigenmodes diagnose which branch a finite system
sits near: q_0 = |mean sigma| and q_k = (2/n)|sum_i sigma_i e^{-2 pi i k x_i}|
for k >= 1.  The modulus absorbs the free translation phase of a harmonic
state.  A sigma = +-1 square wave along mode k gives q_k near 4/pi * 1/2
... in the continuum; the tests pin the exact discrete sums.

Hot loops are numba-compiled over CSR neighbor lists.  RNG draws are made
per sweep from a Philox generator keyed by the seed, so a trajectory is
reproducible bit for bit from (adjacency, parameters, seed).
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np
from numba import njit

from .kernels import grid
from .wrandom import Adjacency

__all__ = [
    "SpinState",
    "Trajectory",
    "spin_state",
    "mode_signs",
    "energy",
    "sweep",
    "overlap",
    "quench",
    "dwell_time",
    "state_histogram",
    "cache_error",
]

_csr_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def neighbor_lists(a: Adjacency):
    """CSR (indptr, indices) of the symmetric adjacency, cached per object."""
    try:
        return _csr_cache[a]
    except KeyError:
        pass
    dense = a.dense()
    counts = dense.sum(axis=1, dtype=np.int64)
    indptr = np.zeros(a.n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.nonzero(dense)[1].astype(np.int32)
    indptr.setflags(write=False)
    indices.setflags(write=False)
    _csr_cache[a] = (indptr, indices)
    return indptr, indices


@dataclass(eq=False)
class SpinState:
    """Mutable chain state: spins, integer local-sum cache, J and T."""

    sigma: np.ndarray            # int8, entries +-1
    s: np.ndarray                # int32, s_i = sum_j a_ij sigma_j
    J: int
    T: float

    @property
    def n(self) -> int:
        return len(self.sigma)


def _recompute_sums(a: Adjacency, sigma: np.ndarray) -> np.ndarray:
    indptr, indices = neighbor_lists(a)
    return _sums_kernel(indptr, indices, sigma)


@njit(cache=True)
def _sums_kernel(indptr, indices, sigma):
    n = len(indptr) - 1
    s = np.zeros(n, dtype=np.int32)
    for i in range(n):
        acc = 0
        for p in range(indptr[i], indptr[i + 1]):
            acc += sigma[indices[p]]
        s[i] = acc
    return s


def mode_signs(k: int, n: int) -> np.ndarray:
    """sign(cos(2 pi k x_i)) as int8; all +1 for k = 0."""
    if k == 0:
        return np.ones(n, dtype=np.int8)
    c = np.cos(2.0 * np.pi * k * grid(n))
    return np.where(c >= 0.0, 1, -1).astype(np.int8)


def spin_state(a: Adjacency, init, J: int, T: float, seed: int = 0) -> SpinState:
    """Build a chain state on a; init is "random", ("from_mode", k), or +-1 array."""
    if J not in (1, -1):
        raise ValueError("J must be +1 or -1")
    if not T > 0.0:
        raise ValueError("need T > 0")
    if isinstance(init, str):
        if init != "random":
            raise ValueError(f"unknown init {init!r}")
        rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
        sigma = np.where(rng.random(a.n) < 0.5, -1, 1).astype(np.int8)
    elif isinstance(init, tuple) and len(init) == 2 and init[0] == "from_mode":
        sigma = mode_signs(int(init[1]), a.n)
    else:
        sigma = np.asarray(init, dtype=np.int8)
        if sigma.shape != (a.n,):
            raise ValueError(f"explicit init must have length {a.n}")
        if not np.all(np.abs(sigma) == 1):
            raise ValueError("spins must be +-1")
        sigma = sigma.copy()
    return SpinState(sigma=sigma, s=_recompute_sums(a, sigma), J=J, T=float(T))


def energy(state: SpinState, a: Adjacency) -> float:
    """Per-spin energy H/n = -(J / 2n^2) sum_i sigma_i s_i, from the cache."""
    if state.n != a.n:
        raise ValueError("state and adjacency sizes differ")
    pair_sum = int(state.sigma.astype(np.int64) @ state.s)
    return -state.J * pair_sum / (2.0 * state.n**2)


def cache_error(state: SpinState, a: Adjacency) -> int:
    """Max |cached s_i - recomputed s_i|; zero unless the cache is broken."""
    return int(np.abs(state.s - _recompute_sums(a, state.sigma)).max())


@njit(cache=True)
def _sweep_kernel(sigma, s, indptr, indices, J, T, sites, unif):
    n = len(sigma)
    accepted = 0
    for t in range(len(sites)):
        i = sites[t]
        dE = 2.0 * J * sigma[i] * s[i] / n
        if dE <= 0.0 or unif[t] < math.exp(-dE / T):
            sigma[i] = -sigma[i]
            for p in range(indptr[i], indptr[i + 1]):
                s[indices[p]] += 2 * sigma[i]
            accepted += 1
    return accepted


def sweep(state: SpinState, a: Adjacency, rng: np.random.Generator) -> float:
    """One sweep of n random-site proposals in place; returns acceptance rate."""
    indptr, indices = neighbor_lists(a)
    n = state.n
    sites = rng.integers(0, n, size=n)
    unif = rng.random(n)
    acc = _sweep_kernel(state.sigma, state.s, indptr, indices,
                        state.J, state.T, sites, unif)
    return acc / n


def overlap(state_or_sigma, k: int) -> float:
    """q_0 = |mean sigma|; q_k = (2/n)|sum sigma e^{-2 pi i k x}| for k >= 1."""
    sigma = getattr(state_or_sigma, "sigma", state_or_sigma)
    if k < 0:
        raise ValueError("need k >= 0")
    n = len(sigma)
    if k == 0:
        return float(abs(sigma.mean()))
    phase = np.exp(-2j * np.pi * k * grid(n))
    return float(2.0 * abs(sigma @ phase) / n)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Thinned observable records of one chain; arrays share a row index."""

    n: int
    J: int
    T: float
    modes: tuple
    measure_every: int
    bins: int
    sweeps: np.ndarray           # sweep stamp of each record (0 = after burn-in)
    energy: np.ndarray           # per-spin energy
    q: np.ndarray                # overlaps, shape (records, len(modes))
    acceptance: np.ndarray       # mean acceptance since the previous record
    profiles: np.ndarray         # binned magnetization, shape (records, bins)
    final_sigma: np.ndarray

    def overlap_series(self, k: int) -> np.ndarray:
        if k not in self.modes:
            raise ValueError(f"mode {k} was not recorded")
        return self.q[:, self.modes.index(k)]


def quench(
    a: Adjacency,
    J: int,
    T: float,
    init="random",
    sweeps: int = 1000,
    measure_every: int = 10,
    modes: tuple = (0, 1, 2, 3, 4, 5, 6, 7, 8),
    bins: int = 50,
    seed: int = 0,
    burn_in: int = 0,
) -> Trajectory:
    """Run a chain from init and record observables every measure_every sweeps.

    The first record is taken before any recorded sweep (stamp 0), so a
    relaxation run captures its initial condition.  burn_in sweeps run
    unrecorded first; quenches default to zero burn-in because the
    transient is the object of interest, while equilibrium measurement
    runs pass the burn-in explicitly.
    """
    if sweeps < 1:
        raise ValueError("need sweeps >= 1")
    if measure_every < 1:
        raise ValueError("need measure_every >= 1")
    state = spin_state(a, init, J, T, seed=seed)
    rng = np.random.Generator(np.random.Philox(key=[seed, 1]))
    n = a.n
    x = grid(n)
    bins = min(bins, n)
    mode_arr = tuple(int(k) for k in modes)
    doubling = np.where(np.array(mode_arr) == 0, 1.0, 2.0)
    phases = np.array([np.exp(-2j * np.pi * k * x) for k in mode_arr])
    bin_idx = np.minimum((x * bins).astype(np.int64), bins - 1)
    bin_counts = np.bincount(bin_idx, minlength=bins)

    def measure():
        sig = state.sigma.astype(np.float64)
        row = doubling * np.abs(phases @ sig) / n
        prof = np.bincount(bin_idx, weights=sig, minlength=bins) / bin_counts
        return energy(state, a), row, prof

    for _ in range(burn_in):
        sweep(state, a, rng)

    records = []
    e0, q0, p0 = measure()
    records.append((0, e0, q0, np.nan, p0))   # no sweeps behind the first record
    done = 0
    while done < sweeps:
        block = min(measure_every, sweeps - done)
        acc = 0.0
        for _ in range(block):
            acc += sweep(state, a, rng)
        done += block
        e, qrow, prof = measure()
        records.append((done, e, qrow, acc / block, prof))
        if done // 1000 != (done - block) // 1000 and cache_error(state, a):
            raise AssertionError("local-sum cache diverged from the spins")

    stamps = np.array([r[0] for r in records], dtype=np.int64)
    return Trajectory(
        n=n, J=J, T=float(T), modes=mode_arr, measure_every=measure_every,
        bins=bins, sweeps=stamps,
        energy=np.array([r[1] for r in records]),
        q=np.array([r[2] for r in records]),
        acceptance=np.array([r[3] for r in records]),
        profiles=np.array([r[4] for r in records]),
        final_sigma=state.sigma.copy(),
    )


def dwell_time(traj: Trajectory, k: int, threshold: float):
    """(sweeps until q_k first falls below threshold, censored flag).

    Censored means the overlap stayed above threshold for the whole
    recorded trajectory; the returned count is then the last stamp.
    """
    series = traj.overlap_series(k)
    below = np.nonzero(series < threshold)[0]
    if len(below) == 0:
        return int(traj.sweeps[-1]), True
    return int(traj.sweeps[below[0]]), False


@njit(cache=True)
def _hist_kernel(sigma, s, indptr, indices, J, T, sites, unif, hist, tally):
    n = len(sigma)
    for t in range(len(sites)):
        i = sites[t]
        dE = 2.0 * J * sigma[i] * s[i] / n
        if dE <= 0.0 or unif[t] < math.exp(-dE / T):
            sigma[i] = -sigma[i]
            for p in range(indptr[i], indptr[i + 1]):
                s[indices[p]] += 2 * sigma[i]
        if tally:
            code = 0
            for j in range(n):
                if sigma[j] > 0:
                    code |= 1 << j
            hist[code] += 1


def state_histogram(
    a: Adjacency,
    J: int,
    T: float,
    steps: int,
    seed: int = 0,
    burn_in: int = 0,
) -> np.ndarray:
    """Visit counts over all 2^n spin configurations after every step.

    Single-flip proposals at random sites, tallied once per step after
    burn_in unrecorded steps.  Small n only; the histogram is dense.
    """
    if a.n > 20:
        raise ValueError("state histogram needs n <= 20")
    if steps < 1:
        raise ValueError("need steps >= 1")
    indptr, indices = neighbor_lists(a)
    state = spin_state(a, "random", J, T, seed=seed)
    hist = np.zeros(2**a.n, dtype=np.int64)
    chunk = 1_000_000
    done = -burn_in                      # negative while still burning in
    block_id = 0
    while done < steps:
        block = min(chunk, steps - done)
        rng = np.random.Generator(np.random.Philox(key=[seed, 2 + block_id]))
        block_id += 1
        sites = rng.integers(0, a.n, size=block)
        unif = rng.random(block)
        cut = min(block, max(0, -done))  # burn-in portion of this block
        if cut:
            _hist_kernel(state.sigma, state.s, indptr, indices,
                         state.J, state.T, sites[:cut], unif[:cut], hist, False)
        if cut < block:
            _hist_kernel(state.sigma, state.s, indptr, indices,
                         state.J, state.T, sites[cut:], unif[cut:], hist, True)
        done += block
    return hist
