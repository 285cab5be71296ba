"""Critical points, branch switching, and continuation in beta.

The trivial profile u == 0 loses stability along eigenmode k of the kernel
operator at beta_c = 1/lambda_k.  Positive eigenvalues bifurcate for
ferromagnetic coupling (FM); negative ones are reached by continuing in
beta < 0, which encodes J = -1 since the equation depends only on beta * W
(AFM).  Each crossing is a pitchfork: the residual is odd in u, so branches
come in +-u pairs.

Branch switching seeds along xi_k at beta = beta_c (1 + delta), first
refining the seed amplitude by a one-mode projection of the fixed-point
equation (exact for rank-one kernels), then polishing with Newton.  The
k >= 1 branches are saddles (the constant direction is already unstable
there), so growing a small seed by fixed-point iteration loses a race
against contamination of the unstable modes; Newton converges to saddles
and preserves the branch's symmetry.  A damped fixed-point stage remains
as a fallback for seeds outside Newton's basin.

Continuation is pseudo-arclength: secant predictor, Newton corrector on the
bordered system with the tangent constraint, u-components weighted by 1/n in
the arclength metric.  Steps halve on corrector failure, double after four
straight successes, and clamp to the range end; min-step underflow returns
the partial branch with a truncation flag.

Near a bifurcation point the branch amplitude follows the normal form: the
mode-p Fourier coefficient of u grows like sqrt(gamma * mu_p) with
gamma = |beta - beta_c| (the full cosine amplitude is twice that, and the
sup-norm tracks the cosine amplitude).  amplitude_law_check fits the
coefficient, so the expected prefactor is sqrt(mu_p).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import meanfield as mf
from .kernels import KernelMatrix, Spectrum, grid

__all__ = [
    "BifurcationPoint",
    "BranchPoint",
    "Branch",
    "BranchNotFoundError",
    "critical_points",
    "branch_switch",
    "continue_branch",
    "modal_amplitude",
    "amplitude_law_check",
]


class BranchNotFoundError(RuntimeError):
    """Branch switching collapsed back to the trivial solution."""


@dataclass(frozen=True)
class BifurcationPoint:
    """beta_c = 1/lambda_k with its eigenmode and coupling regime."""

    k: int
    eigenvalue: float
    beta_c: float
    mode: str                    # eigenfunction descriptor
    regime: str                  # "FM" (lambda > 0) or "AFM" (lambda < 0)
    vector: np.ndarray | None = None   # grid eigenvector when numeric

    def __post_init__(self):
        assert abs(self.beta_c * self.eigenvalue - 1.0) < 1e-12


@dataclass(frozen=True)
class BranchPoint:
    beta: float
    u: np.ndarray
    amplitude: float             # sup-norm of u
    stability: str


@dataclass(frozen=True)
class Branch:
    """Continuation curve emanating from origin; points ordered along it."""

    origin: BifurcationPoint | None
    points: tuple
    truncated: bool = False
    accepted: int = 0
    rejected: int = 0
    final_step: float = 0.0

    def betas(self) -> np.ndarray:
        return np.array([p.beta for p in self.points])

    def amplitudes(self) -> np.ndarray:
        return np.array([p.amplitude for p in self.points])


def critical_points(spec: Spectrum, count: int = 10, floor: float = 1e-6):
    """Bifurcation points 1/lambda for eigenvalues with |lambda| > floor.

    The count points with smallest |beta_c| are kept, then grouped FM
    first, then AFM, each by |beta_c| ascending, which is the order the
    transitions are met when beta moves away from 0 in either direction.
    Degenerate Fourier pairs yield one point per mode index.
    """
    points = []
    for ep in spec.pairs:
        if abs(ep.value) <= floor:
            continue
        regime = "FM" if ep.value > 0 else "AFM"
        points.append(
            BifurcationPoint(
                k=ep.k,
                eigenvalue=ep.value,
                beta_c=1.0 / ep.value,
                mode=ep.descriptor,
                regime=regime,
                vector=ep.vector,
            )
        )
    points.sort(key=lambda bp: abs(bp.beta_c))
    points = points[:count]
    points.sort(key=lambda bp: (bp.regime == "AFM", abs(bp.beta_c)))
    return points


def _seed_profile(bp: BifurcationPoint, kernel: KernelMatrix) -> np.ndarray:
    if bp.vector is not None:
        return bp.vector / np.abs(bp.vector).max()
    if bp.mode == "constant":
        return np.ones(kernel.n)
    if bp.mode == "fourier":
        return np.cos(2.0 * np.pi * bp.k * grid(kernel.n))
    if bp.mode == "x**(-alpha)":
        c = np.sqrt(np.diag(kernel.entries))   # rank-one kernel: outer(c, c)
        return c / np.abs(c).max()
    raise ValueError(f"no seed profile for mode descriptor {bp.mode!r}")


def branch_switch(
    bp: BifurcationPoint,
    kernel: KernelMatrix,
    eps: float | None = None,
    delta: float = 0.02,
    tol: float = 1e-10,
) -> mf.FieldState:
    """Step onto the branch emerging at bp: a solution at beta_c (1 + delta).

    The seed is eps * xi_k; eps defaults to 0.5 sqrt(delta |beta_c| |lambda_k|)
    (a quarter of the predicted cosine amplitude, and beta_c lambda_k = 1 so
    this is 0.5 sqrt(delta)).  Raises BranchNotFoundError when the converged
    solution is the trivial one, which happens when delta is too small for
    the seed to outgrow the contraction back to u = 0.
    """
    if eps is None:
        eps = min(
            0.1, 0.5 * np.sqrt(abs(delta) * abs(bp.beta_c) * abs(bp.eigenvalue)))
    if not 0.0 < eps <= 0.1:
        raise ValueError(f"eps={eps} outside (0, 0.1]")
    beta = bp.beta_c * (1.0 + delta)
    xi = _seed_profile(bp, kernel)

    # Refine the seed amplitude by bisecting the one-mode projection
    #     g(a) = <xi, tanh(beta W (a xi))> / <xi, xi> - a
    # on [eps, 1.6].  Newton's basin around the branch does not reach down
    # to small seeds (the scalar normal form overshoots to 0 from below
    # ~0.6x the branch amplitude), and growing a small seed by fixed-point
    # iteration loses a race against the unstable constant direction on
    # k >= 1 branches.  The projected amplitude lands within O(gamma) of
    # the branch, where Newton is reliable.
    nrm2 = xi @ xi

    def g(a):
        return (xi @ np.tanh(beta * kernel.apply(a * xi))) / nrm2 - a

    a_lo, a_hi = eps, 1.6
    seed_amp = eps
    if g(a_lo) > 0.0:
        for _ in range(60):
            mid = 0.5 * (a_lo + a_hi)
            if g(mid) > 0.0:
                a_lo = mid
            else:
                a_hi = mid
        seed_amp = 0.5 * (a_lo + a_hi)

    state = None
    try:
        cand, rec = mf.solve(kernel, beta, seed_amp * xi, method="newton", tol=tol)
        if rec.converged:
            state = cand
    except mf.SingularJacobianError:
        pass
    if state is None or np.abs(state.u).max() < eps / 10.0:
        # fallback: damped growth stage from eps, then Newton
        evs = np.linalg.eigvalsh(kernel.entries) / kernel.n
        worst = min(beta * evs[0], beta * evs[-1])
        omega = min(0.7, 1.8 / (1.0 + max(0.0, -worst)))
        u = eps * xi
        for _ in range(2000):
            res = np.tanh(beta * kernel.apply(u)) - u
            if np.abs(res).max() < 1e-6:
                break
            u = u + omega * res
        state, rec = mf.solve(kernel, beta, u, method="newton", tol=tol)
        if not rec.converged:
            raise BranchNotFoundError(f"no convergence at beta={beta}")
    if np.abs(state.u).max() < eps / 10.0:
        raise BranchNotFoundError(
            f"collapsed to the trivial solution at beta={beta}; "
            "increase delta or eps"
        )
    sim = abs(state.u @ xi) / (np.linalg.norm(state.u) * np.sqrt(nrm2))
    if sim < 0.95:
        raise BranchNotFoundError(
            f"converged to a different branch at beta={beta} "
            f"(profile similarity {sim:.3f})"
        )
    return state


def _jacobian(kernel, beta, u):
    z = beta * kernel.apply(u)
    d = 1.0 / np.cosh(z) ** 2
    jac = (beta / kernel.n) * d[:, None] * kernel.entries
    np.fill_diagonal(jac, jac.diagonal() - 1.0)
    return jac, d


def _natural_solve(kernel, beta, init, tol):
    # Newton in u at fixed beta; returns (u, ok)
    u = init.copy()
    for _ in range(12):
        res = np.tanh(beta * kernel.apply(u)) - u
        if np.abs(res).max() <= tol:
            return u, True
        jac, _ = _jacobian(kernel, beta, u)
        try:
            u = u + np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            return u, False
        if not np.all(np.isfinite(u)):
            return u, False
    res = np.tanh(beta * kernel.apply(u)) - u
    return u, bool(np.abs(res).max() <= tol)


def _corrector(kernel, beta, u, tangent_u, tangent_b, zeta, tol):
    # Newton on the bordered system: residual = 0 and the step stays in the
    # hyperplane through the predictor orthogonal (zeta-weighted) to the tangent
    n = kernel.n
    for _ in range(10):
        res = np.tanh(beta * kernel.apply(u)) - u
        if np.abs(res).max() <= tol:
            return u, beta, True
        jac, d = _jacobian(kernel, beta, u)
        f_beta = d * kernel.apply(u)
        bordered = np.empty((n + 1, n + 1))
        bordered[:n, :n] = jac
        bordered[:n, n] = f_beta
        bordered[n, :n] = zeta * tangent_u
        bordered[n, n] = tangent_b
        rhs = np.concatenate([-res, [0.0]])
        try:
            step = np.linalg.solve(bordered, rhs)
        except np.linalg.LinAlgError:
            return u, beta, False
        if not np.all(np.isfinite(step)):
            return u, beta, False
        u = u + step[:n]
        beta = beta + step[n]
    res = np.tanh(beta * kernel.apply(u)) - u
    return u, beta, bool(np.abs(res).max() <= tol)


def continue_branch(
    start: mf.FieldState,
    beta_range,
    initial_step: float = 0.05,
    max_step: float = 0.25,
    min_step: float = 1e-6,
    tol: float = 1e-10,
    max_points: int = 1000,
    compute_stability: bool = True,
    origin: BifurcationPoint | None = None,
) -> Branch:
    """Pseudo-arclength continuation of start toward the far end of beta_range.

    Arclength metric: zeta ||du||^2 + dbeta^2 with zeta = 1/n, so step sizes
    mean the same thing at every grid resolution.  The last point lands on
    the range end exactly (natural solve).  Truncation (min_step underflow
    or a failed clamp) is flagged on the returned Branch.
    """
    kernel = start.kernel
    n = kernel.n
    zeta = 1.0 / n
    lo, hi = sorted(beta_range)
    target = hi if abs(hi - start.beta) >= abs(start.beta - lo) else lo
    direction = 1.0 if target >= start.beta else -1.0

    def classify(u, beta):
        if not compute_stability:
            return "unknown"
        return mf.stability(mf.FieldState(u=np.clip(u, -1, 1), beta=beta,
                                          kernel=kernel)).classification

    def make_point(u, beta):
        return BranchPoint(beta=float(beta), u=u.copy(),
                           amplitude=float(np.abs(u).max()),
                           stability=classify(u, beta))

    points = [make_point(start.u, start.beta)]
    accepted = rejected = 0
    h = initial_step
    truncated = False

    # Second point by a short natural step, for the secant tangent.  Near the
    # onset the branch is steep in beta, and Newton at fixed beta can fall off
    # onto the trivial solution; halve the step until the amplitude survives.
    amp0 = np.abs(start.u).max()
    db1 = min(h, abs(target - start.beta))
    while True:
        beta1 = start.beta + direction * db1
        u1, ok = _natural_solve(kernel, beta1, start.u, tol)
        if ok and (amp0 < 1e-8 or np.abs(u1).max() >= 0.5 * amp0):
            break
        ok = False
        db1 = 0.5 * db1
        if db1 < min_step:
            break
    if not ok or db1 == 0.0:
        return Branch(origin, tuple(points), truncated=not ok,
                      accepted=accepted, rejected=rejected, final_step=h)
    points.append(make_point(u1, beta1))
    accepted += 1

    streak = 0
    while len(points) < max_points:
        beta_prev, u_prev = points[-2].beta, points[-2].u
        beta_cur, u_cur = points[-1].beta, points[-1].u
        if (target - beta_cur) * direction <= 1e-12:
            break
        du = u_cur - u_prev
        db = beta_cur - beta_prev
        norm = np.sqrt(zeta * du @ du + db * db)
        t_u, t_b = du / norm, db / norm
        while True:
            u_pred = u_cur + h * t_u
            beta_pred = beta_cur + h * t_b
            clamped = (target - beta_pred) * direction < 0.0
            if clamped:
                u_new, ok = _natural_solve(kernel, target, u_cur, tol)
                beta_new = target
            else:
                u_new, beta_new, ok = _corrector(
                    kernel, beta_pred, u_pred, t_u, t_b, zeta, tol)
                # reject correctors that ran backwards along the branch
                if ok and (beta_new - beta_cur) * direction < -max_step:
                    ok = False
            if ok:
                points.append(make_point(u_new, beta_new))
                accepted += 1
                streak += 1
                if streak >= 4:
                    h = min(2.0 * h, max_step)
                    streak = 0
                break
            rejected += 1
            streak = 0
            h = 0.5 * h
            if h < min_step:
                truncated = True
                break
        if truncated:
            break

    return Branch(origin, tuple(points), truncated=truncated,
                  accepted=accepted, rejected=rejected, final_step=h)


def modal_amplitude(u: np.ndarray, k: int) -> float:
    """|Fourier coefficient|: (1/n)|sum u exp(-2 pi i k x)|; |mean u| for k=0."""
    n = len(u)
    if k == 0:
        return float(abs(u.mean()))
    phase = np.exp(-2j * np.pi * k * grid(n))
    return float(abs((u @ phase) / n))


def amplitude_law_check(branch: Branch, gamma_max: float | None = None):
    """Least-squares fit of log(modal amplitude) against log(gamma).

    gamma = |beta - beta_c| over the window (0, 0.1 |beta_c|] by default.
    Returns (exponent, prefactor); the normal form predicts exponent 1/2 and,
    for Fourier modes k >= 1, prefactor sqrt(mu_k).  Needs at least 6 branch
    points inside the window.
    """
    if branch.origin is None:
        raise ValueError("branch has no bifurcation point attached")
    beta_c = branch.origin.beta_c
    k = branch.origin.k
    if gamma_max is None:
        gamma_max = 0.1 * abs(beta_c)
    gammas, amps = [], []
    for pt in branch.points:
        gamma = (pt.beta - beta_c) * np.sign(beta_c)
        if 0.0 < gamma <= gamma_max:
            a = modal_amplitude(pt.u, k)
            # float-zero amplitudes are trivial-branch points, not branch data
            if a > 1e-12:
                gammas.append(gamma)
                amps.append(a)
    if len(gammas) < 6:
        raise ValueError(
            f"only {len(gammas)} branch points inside the asymptotic window")
    lg, la = np.log(np.array(gammas)), np.log(np.array(amps))
    design = np.vstack([lg, np.ones_like(lg)]).T
    (exponent, intercept), *_ = np.linalg.lstsq(design, la, rcond=None)
    return float(exponent), float(np.exp(intercept))
