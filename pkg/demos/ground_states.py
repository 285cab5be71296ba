#!/usr/bin/env python3
"""Metropolis ground states on a sampled graph, both coupling signs.

One graph, sampled once from the ring kernel at n = 2000, run twice:

  J = +1, T slightly below mu_0  ->  uniform magnetization, q_0 large
  J = -1, T slightly below |mu_min|  ->  the chain picks the most
          negative Fourier mode and q_k spikes there instead

The overlaps q_k = (2/n) |sum_i sigma_i e^(-2 pi i k x_i)| (q_0 uses the
plain mean) make the selected pattern visible without plotting; the
binned profile printed at the end is the figure in ASCII.
"""

import numpy as np

from graphon_ising import kernels as K
from graphon_ising import montecarlo as mc
from graphon_ising import wrandom as wr


def report(traj, label):
    print(label)
    print(f"  acceptance {traj.acceptance[-1]:.3f}, "
          f"energy per spin {traj.energy[-1]:+.5f}")
    q = traj.q[-1]
    top = np.argsort(q)[::-1][:3]
    line = ", ".join(f"q_{traj.modes[i]} = {q[i]:.3f}" for i in top)
    print(f"  largest overlaps: {line}")
    bars = "".join("#" if b > 0 else "." for b in traj.profiles[-1])
    print(f"  binned profile sign: {bars}")
    print()


def main():
    g = K.small_world(0.05, 0.1)
    mu = {p.k: p.value for p in K.analytic_spectrum(g, 12).pairs}
    a = wr.sample(g, 2000, seed=13)
    print(f"graph: n = {a.n}, density {a.density():.4f} "
          f"(kernel mean {0.23:.2f})")
    print()

    fm = mc.quench(a, J=1, T=0.9 * mu[0], init="random", sweeps=400,
                   measure_every=20, modes=tuple(range(9)), bins=40, seed=1)
    report(fm, f"J = +1 at T = 0.9 mu_0 = {0.9 * mu[0]:.4f}")

    k_min = min((k for k in mu if k >= 1), key=lambda k: mu[k])
    t_afm = 0.9 * abs(mu[k_min])
    afm = mc.quench(a, J=-1, T=t_afm, init="random", sweeps=400,
                    measure_every=20, modes=tuple(range(9)), bins=40, seed=1)
    report(afm, f"J = -1 at T = 0.9 |mu_{k_min}| = {t_afm:.4f} "
                f"(most negative eigenvalue is mode {k_min})")

    print("the uniform state fills every bin with one sign; the "
          f"antiferromagnetic run alternates in {k_min} wave periods")


if __name__ == "__main__":
    main()
