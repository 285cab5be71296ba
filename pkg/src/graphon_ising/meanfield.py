"""Mean-field self-consistency on a discretized kernel.

The stationary magnetization profile u solves

    tanh(beta * (1/n) W^n u) - u = 0,

the discrete form of tanh(beta W[u]) = u.  u == 0 (paramagnet) solves it for
every beta; nonzero profiles appear past the critical points beta = 1/lambda_k.

Per-node free energy at temperature T = 1/beta (coupling absorbed in beta):

    F/n = -(1/(2 n^2)) sum_ij W_ij u_i u_j - (T/n) sum_i S(u_i)
    S(x) = -(l((1+x)/2) + l((1-x)/2)),   l(x) = x log x,  l(0) = 0.

Linear stability of a profile is read from

    L = beta * diag(sech^2(beta W[u])) * (1/n) W - I,

which is similar to a symmetric matrix via the positive diagonal, so its
spectrum is real.  Solvers: damped fixed-point iteration (robust far from
solutions) and Newton with dense LU (quadratic near them).  Newton raises
SingularJacobianError on a genuinely singular Jacobian, which happens at the
bifurcation points beta = 1/lambda_k on the trivial branch; branch_switch in
the bifurcation module is the way past those points.  A merely ill-conditioned
Jacobian is not an error: on nonconstant branches over a ring kernel the
translation phase contributes a near-null direction tangent to the solution
orbit, and Newton still converges quadratically there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelMatrix

__all__ = [
    "FieldState",
    "ConvergenceRecord",
    "StabilityReport",
    "SingularJacobianError",
    "residual",
    "solve",
    "free_energy",
    "stability",
]


class SingularJacobianError(RuntimeError):
    """Newton hit a numerically singular Jacobian.

    Occurs on the trivial branch exactly at beta = 1/lambda_k, where the
    linearization loses invertibility along mode k.  Use
    bifurcation.branch_switch to step onto the emerging branch instead of
    solving at the degenerate point.
    """


@dataclass(frozen=True)
class FieldState:
    """A magnetization profile u (|u_i| <= 1) at inverse temperature beta."""

    u: np.ndarray
    beta: float
    kernel: KernelMatrix

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if len(u) != self.kernel.n:
            raise ValueError(f"u has {len(u)} entries, kernel n={self.kernel.n}")
        if np.abs(u).max() > 1.0 + 1e-12:
            raise ValueError("|u_i| <= 1 required (range of tanh)")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)


@dataclass(frozen=True)
class ConvergenceRecord:
    method: str
    iterations: int
    final_residual: float
    converged: bool


@dataclass(frozen=True)
class StabilityReport:
    """Sign of the leading multiplier of L decides the classification.

    classification is "stable" (leading < -tol), "unstable" (> tol) or
    "marginal" (within tol of zero); tol defaults to 1e-8.  multipliers
    holds the full real spectrum of L, ascending; leading_vector is the
    eigenvector of the leading multiplier.
    """

    leading_multiplier: float
    classification: str
    multipliers: np.ndarray
    leading_vector: np.ndarray


def _residual_raw(kernel: KernelMatrix, beta: float, u: np.ndarray) -> np.ndarray:
    return np.tanh(beta * kernel.apply(u)) - u


def residual(s: FieldState) -> np.ndarray:
    """tanh(beta (1/n) W u) - u, componentwise.

    Odd under u -> -u to the last bit: every operation involved is
    sign-symmetric in IEEE arithmetic.
    """
    return _residual_raw(s.kernel, s.beta, s.u)


def solve(
    kernel: KernelMatrix,
    beta: float,
    init: np.ndarray,
    method: str = "fixed_point",
    tol: float = 1e-10,
    max_iter: int = 10_000,
    omega: float = 0.7,
    callback=None,
):
    """Drive the self-consistency residual below tol in sup-norm.

    fixed_point damps the natural iteration, u <- (1-omega) u + omega
    tanh(beta W u); plain iteration can cycle just above beta_c.  newton
    uses dense LU steps.  Returns (FieldState, ConvergenceRecord); running
    out of iterations is reported in the record, not raised.  The returned
    profile is clipped into [-1, 1] (matters only for wildly non-converged
    Newton iterates).  callback, if given, is invoked as
    callback(u, res_norm) once per iteration.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    u = np.array(init, dtype=float)
    if len(u) != kernel.n:
        raise ValueError(f"init has {len(u)} entries, kernel n={kernel.n}")
    if method == "fixed_point":
        stepper = _fixed_point_step
        state = omega
    elif method == "newton":
        stepper = _newton_step
        state = _NewtonGuard()
    else:
        raise ValueError(f"unknown method {method!r}")

    res = _residual_raw(kernel, beta, u)
    res_norm = np.abs(res).max()
    iterations = 0
    while res_norm > tol and iterations < max_iter:
        u = stepper(kernel, beta, u, res, state)
        res = _residual_raw(kernel, beta, u)
        res_norm = np.abs(res).max()
        iterations += 1
        if callback is not None:
            callback(u, res_norm)
    record = ConvergenceRecord(method, iterations, float(res_norm), res_norm <= tol)
    u = np.clip(u, -1.0, 1.0)
    return FieldState(u=u, beta=beta, kernel=kernel), record


def _fixed_point_step(kernel, beta, u, res, omega):
    # res = tanh(beta W u) - u, so this is (1-omega) u + omega tanh(beta W u)
    return u + omega * res


class _NewtonGuard:
    # consecutive iterations without residual progress; singular Jacobians
    # on the trivial branch show up as exploding or useless steps
    def __init__(self):
        self.best = np.inf
        self.stalled = 0


def _newton_step(kernel, beta, u, res, guard):
    z = beta * kernel.apply(u)
    d = 1.0 / np.cosh(z) ** 2
    jac = (beta / kernel.n) * d[:, None] * kernel.entries
    np.fill_diagonal(jac, jac.diagonal() - 1.0)
    try:
        step = np.linalg.solve(jac, -res)
    except np.linalg.LinAlgError as exc:
        raise SingularJacobianError(
            "Newton Jacobian is singular (beta at a critical value 1/lambda_k "
            "on the trivial branch); use bifurcation.branch_switch"
        ) from exc
    if not np.all(np.isfinite(step)) or np.abs(step).max() > 1e8 * (1.0 + np.abs(u).max()):
        raise SingularJacobianError(
            "Newton step blew up: Jacobian numerically singular; "
            "use bifurcation.branch_switch near critical points"
        )
    res_norm = np.abs(res).max()
    if res_norm < 0.95 * guard.best:
        guard.best = res_norm
        guard.stalled = 0
    else:
        guard.stalled += 1
        if guard.stalled >= 8:
            raise SingularJacobianError(
                "Newton stagnated without residual progress; the Jacobian is "
                "effectively singular (critical point); use branch_switch"
            )
    return u + step


def _entropy(u: np.ndarray) -> np.ndarray:
    # S(x) = -(l((1+x)/2) + l((1-x)/2)), l(x) = x log x with l(0) = 0
    def ell(x):
        out = np.zeros_like(x)
        pos = x > 0.0
        out[pos] = x[pos] * np.log(x[pos])
        return out

    return -(ell((1.0 + u) / 2.0) + ell((1.0 - u) / 2.0))


def free_energy(s: FieldState, temperature: float) -> float:
    """Per-node free energy F/n at the given temperature."""
    n = s.kernel.n
    interaction = -0.5 * (s.u @ s.kernel.entries @ s.u) / n**2
    return float(interaction - temperature * _entropy(s.u).sum() / n)


def stability(s: FieldState, tol: float = 1e-8) -> StabilityReport:
    """Spectrum of L = beta diag(sech^2(beta W u)) (1/n) W - I at s.

    Expects s to approximately solve the self-consistency equation (the
    classification is about solutions).  Computed through the symmetric
    similar matrix D^(1/2) ((beta/n) W) D^(1/2) - I, so multipliers are
    exactly real; the leading eigenvector is mapped back to L's basis.
    """
    d = 1.0 / np.cosh(s.beta * s.kernel.apply(s.u)) ** 2
    sqrt_d = np.sqrt(d)
    sym = (s.beta / s.kernel.n) * (sqrt_d[:, None] * s.kernel.entries * sqrt_d[None, :])
    np.fill_diagonal(sym, sym.diagonal() - 1.0)
    vals, vecs = np.linalg.eigh(sym)
    leading = float(vals[-1])
    vec = sqrt_d * vecs[:, -1]
    vec /= np.abs(vec).max()
    if leading > tol:
        cls = "unstable"
    elif leading < -tol:
        cls = "stable"
    else:
        cls = "marginal"
    return StabilityReport(leading, cls, vals, vec)
