import numpy as np
import pytest
from scipy.integrate import quad

from graphon_ising import kernels as K

SW = K.small_world(0.05, 0.1)


def sw_mu_quadrature(p, r, k):
    # Fourier coefficient of the ring profile, integrated directly with the
    # jump points handed to the integrator
    f = lambda d: (1.0 - p if abs(d) <= r else p) * np.cos(2 * np.pi * k * d)
    val, _ = quad(f, -0.5, 0.5, points=[-r, r], limit=200, epsabs=1e-13)
    return val


def sw_cell_avg_quadrature(p, r, n, i, j):
    # independent per-cell average: integrate over y the x-measure of the
    # in-radius set, splitting at the piecewise-linear breakpoints
    a, b = i / n, (i + 1) / n
    c, d = j / n, (j + 1) / n

    def inside_measure(y):
        m = 0.0
        for shift in (-1.0, 0.0, 1.0):
            m += max(0.0, min(b, y + r + shift) - max(a, y - r + shift))
        return m

    breaks = set()
    for e in (a, b):
        for s in (-1.0, 0.0, 1.0):
            breaks.add(e - r + s)
            breaks.add(e + r + s)
    pts = sorted({c, d, *(x for x in breaks if c < x < d)})
    area = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, _ = quad(inside_measure, lo, hi, epsabs=1e-15, limit=100)
        area += val
    return p + (1.0 - 2.0 * p) * area * n * n


def test_eval_examples():
    assert K.eval_graphon(K.er(0.5), 0.3, 0.9) == 0.5
    assert K.eval_graphon(SW, 0.05, 0.0) == 0.95
    # periodicity: lag 0.95 is lag -0.05
    assert K.eval_graphon(SW, 0.95, 0.0) == 0.95
    assert K.eval_graphon(K.power_law(0.2), 1.0, 1.0) == 1.0


def test_eval_power_law_clips_at_origin():
    pl = K.power_law(0.2)
    assert K.eval_graphon(pl, 0.0, 0.5) == 1.0
    assert K.eval_graphon(pl, 0.01, 0.01) == 1.0
    x = np.array([0.0, 0.2, 0.9])
    v = K.eval_graphon(pl, x, x)
    assert np.all(v <= 1.0) and np.all(np.isfinite(v))


def test_eval_symmetry_exact():
    rng = np.random.default_rng(7)
    grid5 = rng.random((5, 5))
    variants = [
        K.er(0.3),
        K.power_law(0.2),
        SW,
        K.tabulated(0.5 * (grid5 + grid5.T)),
    ]
    x = rng.random(2000)
    y = rng.random(2000)
    for g in variants:
        assert np.array_equal(K.eval_graphon(g, x, y), K.eval_graphon(g, y, x))


def test_eval_sw_depends_on_lag_only():
    rng = np.random.default_rng(11)
    x, y, s = rng.random(2000), rng.random(2000), rng.random(2000) * 4 - 2
    assert np.array_equal(K.eval_graphon(SW, x + s, y + s), K.eval_graphon(SW, x, y))
    assert np.array_equal(K.eval_graphon(SW, x - y, 0.0), K.eval_graphon(SW, x, y))


def test_discretize_er_exact():
    m = K.discretize(K.er(0.5), 4)
    assert m.entries.shape == (4, 4)
    assert np.all(m.entries == 0.5)
    u = np.array([1.0, -1.0, 2.0, 0.0])
    assert np.allclose(m.apply(u), 0.5 * u.mean() * np.ones(4), atol=1e-15)


def test_discretize_power_law_n1():
    pl = K.power_law(0.2)
    raw = K.discretize(pl, 1, truncate=False)
    assert raw.entries[0, 0] == 1.25**2  # (integral of x^-0.2)^2 = (1/0.8)^2
    clipped = K.discretize(pl, 1)
    assert clipped.entries[0, 0] == 1.0
    assert clipped.clipped_cells == 1
    assert raw.clipped_cells == 0


def test_discretize_power_law_cells_vs_quad():
    alpha, n = 0.3, 8
    raw = K.discretize(K.power_law(alpha), n, truncate=False)
    c = np.empty(n)
    for i in range(n):
        val, _ = quad(lambda x: x**-alpha, i / n, (i + 1) / n,
                      points=[0.0] if i == 0 else None, epsabs=1e-14)
        c[i] = n * val
    assert np.allclose(raw.entries, np.outer(c, c), rtol=1e-10)


def test_discretize_sw_row():
    m = K.discretize(SW, 10)
    row = m.entries[0]
    want = np.array([0.95, 0.5] + [0.05] * 7 + [0.5])
    assert np.allclose(row, want, atol=1e-12)
    # straddling cells average the jump exactly in half
    assert row[1] == 0.5 and row[9] == 0.5
    # circulant structure
    for i in range(10):
        assert np.array_equal(m.entries[i], np.roll(row, i))


def test_discretize_sw_vs_gauss_on_smooth_cells():
    # tensor Gauss is exact wherever the kernel is constant on the cell
    for n in (10, 16):
        m = K.discretize(SW, n)
        q = K.cell_average_quadrature(SW, n)
        lag = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
        straddle = np.zeros((n, n), dtype=bool)
        for ell in range(n):
            lo, hi = (ell - 1) / n, (ell + 1) / n
            for jump in (0.1, 0.9, 1.1):
                if lo < jump < hi:
                    straddle |= lag == ell
        smooth = ~straddle
        assert np.abs(m.entries - q)[smooth].max() < 1e-13


def test_discretize_sw_straddling_cells_vs_quad():
    for n, cells in ((10, [(0, 1), (0, 9), (3, 2)]), (7, [(0, 0), (4, 4), (2, 1)])):
        m = K.discretize(SW, n)
        for i, j in cells:
            want = sw_cell_avg_quadrature(0.05, 0.1, n, i, j)
            assert abs(m.entries[i, j] - want) < 1e-12, (n, i, j)


def test_discretize_tabulated():
    rng = np.random.default_rng(3)
    v = rng.random((4, 4))
    v = 0.5 * (v + v.T)
    tab = K.tabulated(v)
    # refinement replicates cells
    fine = K.discretize(tab, 8)
    assert np.abs(fine.entries - np.kron(v, np.ones((2, 2)))).max() < 1e-15
    # coarsening averages blocks
    coarse = K.discretize(tab, 2)
    blocks = v.reshape(2, 2, 2, 2).mean(axis=(1, 3))
    assert np.abs(coarse.entries - blocks).max() < 1e-15
    # misaligned grid agrees with block means on the common refinement
    m3 = K.discretize(tab, 3)
    m12 = K.discretize(tab, 12)
    ref = m12.entries.reshape(3, 4, 3, 4).mean(axis=(1, 3))
    assert np.abs(m3.entries - ref).max() < 1e-14


def test_kernel_matrix_validation():
    bad = np.array([[0.1, 0.2], [0.3, 0.1]])
    with pytest.raises(ValueError):
        K.KernelMatrix(n=2, entries=bad)
    with pytest.raises(ValueError):
        K.KernelMatrix(n=3, entries=np.eye(2))
    with pytest.raises(ValueError):
        K.er(1.5)
    with pytest.raises(ValueError):
        K.power_law(0.5)
    with pytest.raises(ValueError):
        K.small_world(0.6, 0.1)
    with pytest.raises(ValueError):
        K.tabulated(np.array([[0.0, 2.0], [2.0, 0.0]]))


def test_analytic_spectrum_er_and_power_law():
    sp = K.analytic_spectrum(K.er(0.5))
    assert len(sp.pairs) == 1
    assert sp.pairs[0].value == 0.5
    assert sp.pairs[0].descriptor == "constant"
    sp = K.analytic_spectrum(K.power_law(0.2))
    assert sp.pairs[0].value == 1.0 / 0.6
    assert abs(sp.pairs[0].value - 5.0 / 3.0) < 1e-15


def test_analytic_spectrum_small_world():
    sp = K.analytic_spectrum(SW, k_max=8)
    by_k = {ep.k: ep for ep in sp.pairs}
    assert abs(by_k[0].value - 0.23) <= np.spacing(0.23)
    assert by_k[0].multiplicity == 1
    assert abs(by_k[1].value - 0.16839) < 5e-6
    assert by_k[1].value == 0.9 * np.sin(0.2 * np.pi) / np.pi
    assert by_k[1].multiplicity == 2
    assert abs(by_k[5].value) < 1e-15
    vals = sp.values()
    assert np.all(np.diff(vals) <= 0)
    with pytest.raises(ValueError):
        K.analytic_spectrum(K.tabulated(np.zeros((2, 2))))


def test_mu_decay_bound():
    rng = np.random.default_rng(5)
    for _ in range(20):
        p, r = rng.uniform(0.01, 0.49, size=2)
        g = K.small_world(p, r)
        for ep in K.analytic_spectrum(g, k_max=20).pairs:
            if ep.k >= 1:
                assert abs(ep.value) <= (1 - 2 * p) / (np.pi * ep.k) + 1e-15


def test_mu_vs_quadrature():
    for ep in K.analytic_spectrum(SW, k_max=8).pairs:
        assert abs(ep.value - sw_mu_quadrature(0.05, 0.1, ep.k)) < 1e-10


def test_numeric_spectrum_er():
    sp = K.numeric_spectrum(K.discretize(K.er(0.5), 64), count=3)
    assert abs(sp.pairs[0].value - 0.5) < 1e-12
    assert all(abs(ep.value) < 1e-12 for ep in sp.pairs[1:])
    assert np.allclose(sp.pairs[0].vector, 1.0, atol=1e-9)


def test_numeric_spectrum_sw_leading():
    sp = K.numeric_spectrum(K.discretize(SW, 500), count=2)
    assert abs(sp.pairs[0].value - 0.23) < 1e-2


def test_numeric_spectrum_tabulated_ones():
    sp = K.numeric_spectrum(K.discretize(K.tabulated(np.ones((4, 4))), 8), count=1)
    assert abs(sp.pairs[0].value - 1.0) < 1e-12
    assert np.allclose(sp.pairs[0].vector, 1.0, atol=1e-9)


def test_nystrom_convergence():
    # 10 extreme eigenvalues against the closed form: gaps shrink with n and
    # are below 5e-3 at n=512; gaps already at float noise are exempt from
    # strict monotonicity
    expanded = []
    for ep in K.analytic_spectrum(SW, k_max=60).pairs:
        expanded += [ep.value] * ep.multiplicity
    expanded = np.array(expanded)
    top = np.sort(expanded)[::-1][:5]
    bot = np.sort(expanded)[:5]
    targets = np.concatenate([top, bot])
    prev = None
    for n in (128, 256, 512):
        sp = K.numeric_spectrum(K.discretize(SW, n), count=5)
        v = sp.values()
        gaps = np.abs(np.concatenate([v[:5], np.sort(v)[:5]]) - targets)
        if prev is not None:
            assert np.all((gaps <= prev) | (gaps < 1e-12))
        prev = gaps
    assert prev.max() < 5e-3


def test_numeric_spectrum_deterministic():
    a = K.numeric_spectrum(K.discretize(SW, 64), count=4)
    b = K.numeric_spectrum(K.discretize(SW, 64), count=4)
    for pa, pb in zip(a.pairs, b.pairs):
        assert pa.value == pb.value
        assert np.array_equal(pa.vector, pb.vector)
        assert np.abs(pa.vector).max() == 1.0
        assert pa.vector[np.abs(pa.vector).argmax()] > 0


def test_mode_profile():
    n = 4
    prof = K.mode_profile(SW, 1, n)
    assert np.allclose(prof, np.cos(2 * np.pi * (np.arange(n) + 0.5) / n))
    assert np.array_equal(K.mode_profile(K.er(0.3), 0, 5), np.ones(5))
    plp = K.mode_profile(K.power_law(0.2), 0, 16)
    assert plp[0] == 1.0 and np.all(np.diff(plp) < 0)
    with pytest.raises(ValueError):
        K.mode_profile(K.er(0.3), 1, 5)
    with pytest.raises(ValueError):
        K.mode_profile(K.power_law(0.2), 2, 5)


def test_config_roundtrip():
    rng = np.random.default_rng(9)
    v = rng.random((3, 3))
    graphons = [K.er(0.4), K.power_law(0.15), SW, K.tabulated(0.5 * (v + v.T))]
    for g in graphons:
        cfg = K.to_config(g)
        g2 = K.from_config(cfg)
        assert g2.variant == g.variant and g2.domain == g.domain
        if g.variant == "tabulated":
            assert np.array_equal(g2.params[0], g.params[0])
        else:
            assert g2.params == g.params
    with pytest.raises(ValueError):
        K.from_config({"variant": "nope", "parameters": {}})
