"""Graphons, cell-averaged discretizations, and kernel spectra.

A graphon is a symmetric measurable W: [0,1]^2 -> [0,1].  Four variants:

    er(p)             W = p
    power_law(alpha)  W = (x y)^(-alpha), 0 < alpha < 1/2
    small_world(p,r)  W(x,y) = K(x-y) on the circle, K(d) = 1-p for
                      |d| <= r and p otherwise, K even and 1-periodic
    tabulated(grid)   piecewise constant on a uniform m x m grid

The discrete operator on n nodes acts as u |-> (1/n) W^n u where W^n is the
per-cell average

    W^n_ij = n^2 * Integral_{cell ij} W(x,y) dx dy

over cells [(i-1)/n, i/n) x [(j-1)/n, j/n); node coordinates are the cell
midpoints x_i = (i - 1/2)/n.

Closed-form spectra of the integral operator u -> Integral W(., y) u(y) dy:
er has the single nonzero eigenvalue p (constant eigenfunction); power_law
without clipping is rank one with eigenvalue 1/(1 - 2 alpha) and
eigenfunction x^(-alpha); small_world diagonalizes in Fourier modes,

    mu_0 = 2 r (1 - 2 p) + p                  (constant mode)
    mu_k = (pi k)^(-1) (1 - 2 p) sin(2 pi k r),  k >= 1, multiplicity 2.

The power-law kernel exceeds 1 near the origin.  Values above 1 are clipped
to 1 (an edge probability cannot exceed 1); clipping is flagged, never
silent.  The unclipped matrix is available for spectral analysis via
discretize(..., truncate=False) since the closed-form eigenvalue describes
the raw kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Graphon",
    "KernelMatrix",
    "EigenPair",
    "Spectrum",
    "er",
    "power_law",
    "small_world",
    "tabulated",
    "grid",
    "eval_graphon",
    "discretize",
    "cell_average_quadrature",
    "analytic_spectrum",
    "numeric_spectrum",
    "mode_profile",
    "to_config",
    "from_config",
]


@dataclass(frozen=True)
class Graphon:
    """One of the four kernel variants plus its domain flag.

    params holds (p,) for er, (alpha,) for power_law, (p, r) for
    small_world and the value grid for tabulated.  domain is "interval"
    for kernels on [0,1] and "torus" for translation-invariant ones.
    """

    variant: str
    params: tuple
    domain: str = "interval"

    def __post_init__(self):
        if self.variant not in ("er", "power_law", "small_world", "tabulated"):
            raise ValueError(f"unknown graphon variant {self.variant!r}")
        if self.domain not in ("interval", "torus"):
            raise ValueError(f"unknown domain {self.domain!r}")


def er(p: float) -> Graphon:
    """Constant kernel W = p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"er: p={p} outside [0, 1]")
    return Graphon("er", (float(p),))


def power_law(alpha: float) -> Graphon:
    """W = (x y)^(-alpha); integrable self-similar kernel, alpha in (0, 1/2)."""
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"power_law: alpha={alpha} outside (0, 1/2)")
    return Graphon("power_law", (float(alpha),))


def small_world(p: float, r: float) -> Graphon:
    """Ring kernel: probability 1-p inside radius r, p outside."""
    if not 0.0 < p < 0.5:
        raise ValueError(f"small_world: p={p} outside (0, 1/2)")
    if not 0.0 < r < 0.5:
        raise ValueError(f"small_world: r={r} outside (0, 1/2)")
    return Graphon("small_world", (float(p), float(r)), domain="torus")


def tabulated(values) -> Graphon:
    """Piecewise-constant kernel from a symmetric m x m grid of values."""
    v = np.array(values, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ValueError(f"tabulated: grid must be square, got {v.shape}")
    if not np.array_equal(v, v.T):
        raise ValueError("tabulated: grid must be symmetric")
    if v.min() < 0.0 or v.max() > 1.0:
        raise ValueError("tabulated: values must lie in [0, 1]")
    v.setflags(write=False)
    return Graphon("tabulated", (v,))


def grid(n: int) -> np.ndarray:
    """Node coordinates x_i = (i - 1/2)/n, i = 1..n."""
    return (np.arange(n) + 0.5) / n


def eval_graphon(g: Graphon, x, y):
    """Pointwise W(x, y); symmetric in its arguments.

    Accepts scalars or broadcastable arrays.  Torus variants reduce x - y
    mod 1; power_law clips values above 1 (the singular corner near the
    origin) to 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if g.variant == "er":
        (p,) = g.params
        out = np.broadcast_arrays(x, y)[0] * 0.0 + p
    elif g.variant == "power_law":
        (alpha,) = g.params
        with np.errstate(divide="ignore", over="ignore"):
            out = np.where(x * y > 0.0, (x * y) ** -alpha, np.inf)
        out = np.minimum(out, 1.0)
    elif g.variant == "small_world":
        p, r = g.params
        # abs before mod: |x-y| and |y-x| share bits, so symmetry is exact
        d = np.abs(x - y) % 1.0
        d = np.minimum(d, 1.0 - d)
        out = np.where(d <= r, 1.0 - p, p)
    else:
        (v,) = g.params
        m = v.shape[0]
        i = np.minimum((x * m).astype(int), m - 1)
        j = np.minimum((y * m).astype(int), m - 1)
        out = v[i, j]
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class KernelMatrix:
    """Cell-averaged n x n discretization W^n of a graphon.

    The discrete operator is u |-> (1/n) entries @ u.  entries are
    symmetric and, unless built with truncate=False, lie in [0, 1];
    clipped_cells counts entries that were clipped to 1.
    """

    n: int
    entries: np.ndarray
    clipped_cells: int = 0

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.shape != (self.n, self.n):
            raise ValueError(f"entries shape {e.shape} does not match n={self.n}")
        if not np.array_equal(e, e.T):
            raise ValueError("entries must be symmetric")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """The discrete kernel operator (1/n) W^n u."""
        return self.entries @ u / self.n


def _power_law_cell_weights(alpha: float, n: int) -> np.ndarray:
    # c_i = n * Integral_{(i-1)/n}^{i/n} x^(-alpha) dx, so W^n = outer(c, c)
    i = np.arange(n + 1, dtype=float)
    prim = i ** (1.0 - alpha)          # antiderivative x^(1-a)/(1-a), scaled
    return n ** alpha * np.diff(prim) / (1.0 - alpha)


def _triangle_cdf(t, center, h):
    # CDF at t of the triangular density with peak at center, half-width h
    u = np.clip((t - (center - h)) / h, 0.0, 2.0)
    return np.where(u <= 1.0, 0.5 * u * u, 1.0 - 0.5 * (2.0 - u) ** 2)


def _small_world_profile(p: float, r: float, n: int) -> np.ndarray:
    # Cell average over cell (i, j) depends only on the lag l = i - j mod n:
    # it is the mass that the triangular density centered at l/n (half-width
    # 1/n, the density of x - y for x, y uniform on the two cells) puts on
    # {d : d mod 1 in [-r, r]}, mixed as p + (1-2p) * mass.
    h = 1.0 / n
    lags = np.arange(n // 2 + 1) * h
    mass = np.zeros_like(lags)
    for lo, hi in ((-r, r), (1.0 - r, 1.0 + r)):
        mass += _triangle_cdf(hi, lags, h) - _triangle_cdf(lo, lags, h)
    prof = p + (1.0 - 2.0 * p) * mass
    # mirror so prof[l] == prof[n-l] holds bit-exactly
    full = np.empty(n)
    full[: n // 2 + 1] = prof
    full[n // 2 + 1:] = prof[1: (n + 1) // 2][::-1]
    return full


def discretize(g: Graphon, n: int, truncate: bool = True) -> KernelMatrix:
    """Cell averages W^n_ij = n^2 * Integral_{cell ij} W, computed exactly.

    All four variants admit closed-form per-cell integrals (er is constant,
    power_law factorizes, small_world reduces to a triangular-density
    convolution, tabulated to overlap-weighted averages).  truncate=False
    skips the clip-to-1 step for power_law and returns the raw rank-one
    matrix; spectral comparisons against the analytic eigenvalue need it.
    """
    if n < 1:
        raise ValueError(f"discretize: n={n} must be >= 1")
    clipped = 0
    if g.variant == "er":
        (p,) = g.params
        entries = np.full((n, n), p)
    elif g.variant == "power_law":
        (alpha,) = g.params
        c = _power_law_cell_weights(alpha, n)
        entries = np.outer(c, c)
        entries = np.minimum(entries, entries.T)  # exact symmetry
        if truncate:
            over = entries > 1.0
            clipped = int(over.sum())
            entries = np.where(over, 1.0, entries)
    elif g.variant == "small_world":
        prof = _small_world_profile(*g.params, n)
        idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
        entries = prof[idx]
    else:
        (v,) = g.params
        m = v.shape[0]
        # overlap[i, a] = length of cell_n(i) intersect cell_m(a), times n
        edges_n = np.arange(n + 1) / n
        edges_m = np.arange(m + 1) / m
        lo = np.maximum(edges_n[:-1, None], edges_m[None, :-1])
        hi = np.minimum(edges_n[1:, None], edges_m[None, 1:])
        overlap = n * np.maximum(hi - lo, 0.0)
        entries = overlap @ v @ overlap.T
        entries = 0.5 * (entries + entries.T)
    return KernelMatrix(n=n, entries=entries, clipped_cells=clipped)


def cell_average_quadrature(g: Graphon, n: int, order: int = 16) -> np.ndarray:
    """Per-cell tensor Gauss-Legendre averages; slow independent oracle.

    Exact for polynomial-smooth integrands per cell; inaccurate on cells
    where the integrand is singular (power_law cells touching the axes) or
    jumps (small_world cells straddling |x-y| = r).  Tests cross-check the
    closed forms in discretize with it away from those cells.  Not clipped.
    """
    t, w = np.polynomial.legendre.leggauss(order)
    t = (t + 1.0) / 2.0   # nodes on [0, 1]
    w = w / 2.0
    x = (np.arange(n)[:, None] + t[None, :]) / n   # (n, order) nodes per cell
    vals = eval_graphon(g, x[:, None, :, None], x[None, :, None, :])
    if g.variant == "power_law":
        (alpha,) = g.params
        vals = (x[:, None, :, None] * x[None, :, None, :]) ** -alpha
    return np.einsum("p,q,ijpq->ij", w, w, vals)


@dataclass(frozen=True)
class EigenPair:
    """One spectral line: mode index, eigenvalue, multiplicity, and either a
    descriptor string (analytic) or a grid eigenvector (numeric)."""

    k: int
    value: float
    multiplicity: int = 1
    descriptor: str = "grid"
    vector: np.ndarray | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Spectrum:
    """Eigenpairs sorted by eigenvalue, descending."""

    pairs: tuple

    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.pairs])


def analytic_spectrum(g: Graphon, k_max: int = 32) -> Spectrum:
    """Closed-form spectrum of the integral operator.

    er and power_law are rank one; small_world returns the constant mode
    mu_0 plus Fourier modes mu_1 .. mu_k_max, each of multiplicity 2
    (cosine and sine partner).  tabulated has no closed form.
    """
    if g.variant == "er":
        (p,) = g.params
        pairs = [EigenPair(0, p, 1, "constant")]
    elif g.variant == "power_law":
        (alpha,) = g.params
        pairs = [EigenPair(0, 1.0 / (1.0 - 2.0 * alpha), 1, "x**(-alpha)")]
    elif g.variant == "small_world":
        p, r = g.params
        pairs = [EigenPair(0, 2.0 * r * (1.0 - 2.0 * p) + p, 1, "constant")]
        for k in range(1, k_max + 1):
            mu = (1.0 - 2.0 * p) * np.sin(2.0 * np.pi * k * r) / (np.pi * k)
            pairs.append(EigenPair(k, mu, 2, "fourier"))
    else:
        raise ValueError("tabulated graphons have no analytic spectrum")
    pairs.sort(key=lambda ep: -ep.value)
    return Spectrum(tuple(pairs))


def _canonical_eigvecs(vals, vecs, decimals: int = 10):
    # sup-norm 1, largest-magnitude entry positive, and degenerate groups
    # ordered lexicographically by rounded entries so pair order is stable
    vecs = vecs / np.abs(vecs).max(axis=0)
    sign = np.sign(vecs[np.abs(vecs).argmax(axis=0), np.arange(vecs.shape[1])])
    vecs = vecs * sign
    order = np.arange(len(vals))
    rounded = np.round(vals, decimals)
    for val in np.unique(rounded):
        idx = np.flatnonzero(rounded == val)
        if len(idx) > 1:
            keys = [tuple(np.round(vecs[:, i], decimals)) for i in idx]
            order[idx] = idx[sorted(range(len(idx)), key=keys.__getitem__)]
    return vals[order], vecs[:, order]


def numeric_spectrum(m: KernelMatrix, count: int = 10) -> Spectrum:
    """Extreme eigenpairs of the discrete operator (1/n) W^n.

    Returns the count largest and count smallest eigenvalues (merged when
    they overlap), each with its grid eigenvector normalized to sup-norm 1.
    Dense symmetric solve; deterministic ordering with lexicographic
    tie-breaking inside degenerate clusters.
    """
    if not np.array_equal(m.entries, m.entries.T):
        raise ValueError("numeric_spectrum: matrix must be symmetric")
    vals, vecs = np.linalg.eigh(m.entries / m.n)
    vals, vecs = _canonical_eigvecs(vals, vecs)
    n = len(vals)
    take = sorted(set(range(max(n - count, 0), n)) | set(range(min(count, n))))
    pairs = [
        EigenPair(rank, vals[i], 1, "grid", vecs[:, i].copy())
        for rank, i in enumerate(reversed(take))
    ]
    return Spectrum(tuple(pairs))


def mode_profile(g: Graphon, k: int, n: int) -> np.ndarray:
    """Grid samples of eigenfunction k, sup-norm 1; seeds branch switching.

    k=0 is the constant mode for er and small_world and the x^(-alpha)
    profile (its exact cell average) for power_law; k >= 1 are the cosine
    modes of small_world.
    """
    if g.variant == "power_law":
        if k != 0:
            raise ValueError("power_law has a single mode, k=0")
        c = _power_law_cell_weights(g.params[0], n)
        return c / np.abs(c).max()
    if k == 0:
        return np.ones(n)
    if g.variant != "small_world":
        raise ValueError(f"{g.variant} has no mode k={k}")
    return np.cos(2.0 * np.pi * k * grid(n))


def to_config(g: Graphon) -> dict:
    """JSON-able descriptor {variant, parameters, domain}."""
    if g.variant == "er":
        params = {"p": g.params[0]}
    elif g.variant == "power_law":
        params = {"alpha": g.params[0]}
    elif g.variant == "small_world":
        params = {"p": g.params[0], "r": g.params[1]}
    else:
        params = {"grid": np.asarray(g.params[0]).tolist()}
    return {"variant": g.variant, "parameters": params, "domain": g.domain}


def from_config(cfg: dict) -> Graphon:
    """Inverse of to_config; validates parameters on reconstruction."""
    variant = cfg["variant"]
    params = cfg["parameters"]
    if variant == "er":
        return er(params["p"])
    if variant == "power_law":
        return power_law(params["alpha"])
    if variant == "small_world":
        return small_world(params["p"], params["r"])
    if variant == "tabulated":
        return tabulated(params["grid"])
    raise ValueError(f"unknown graphon variant {variant!r}")
