"""Online SDP learner: generalized log-det regularizer, FTRL updates, regret math.

The decision set is K = {W PSD, |W_ii| <= beta, Tr(G W G) <= tau} for a fixed
strictly PD matrix G ("gamma"), the regularizer is R(W) = -ln det(G W G + eps I),
and the per-round update is the FTRL argmin of R(W) + eta * (sum of losses) . W
over K, computed by projected gradient with Dykstra alternating projections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import NotPDError, eigh, frobenius_dot, psd_project, symmetrize

FEAS_TOL = 1e-8


class InfeasibleInputError(ValueError):
    """A matrix argument violates the decision-set feasibility tolerance."""


class LossOutOfClassError(ValueError):
    """A loss matrix violates the loss-class constraints."""


class ProjectionDivergedError(RuntimeError):
    """Dykstra projection failed to reach feasibility within its budget."""


class SolverStalledError(RuntimeError):
    """Backtracking exhausted without objective decrease on a sizeable step."""


@dataclass
class SolverSettings:
    max_iters: int = 500
    grad_tol: float = 1e-7
    dykstra_iters: int = 200
    dykstra_tol: float = 1e-9
    armijo_beta: float = 0.5
    armijo_c: float = 1e-4

    def __post_init__(self):
        if min(self.max_iters, self.dykstra_iters) <= 0:
            raise ValueError("iteration budgets must be positive")
        if min(self.grad_tol, self.dykstra_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if not (0 < self.armijo_beta < 1 and 0 < self.armijo_c < 1):
            raise ValueError("armijo parameters must lie in (0,1)")


@dataclass
class OsdpProblem:
    """Problem data (gamma, beta, tau, epsilon, g, eta) defining K and L.

    `require_psd_losses` selects raw-OSDP mode (losses must be PSD) versus
    reduction mode (only the l1 bound is enforced; the matrix-completion
    reduction feeds indefinite +-Z/gamma losses).
    """

    gamma: np.ndarray
    beta: float
    tau: float
    epsilon: float
    g: float
    eta: float
    require_psd_losses: bool = True
    gamma_sq: np.ndarray = field(init=False, repr=False)
    rho: float = field(init=False)

    def __post_init__(self):
        self.gamma = symmetrize(self.gamma)
        w, v = eigh(self.gamma)
        if w[-1] <= 0.0:
            raise NotPDError(f"gamma must be strictly PD (min eigenvalue {w[-1]:.3e})")
        for name in ("beta", "tau", "epsilon", "g", "eta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        self.gamma_sq = symmetrize((v * w**2) @ v.T)
        gamma_inv_sq = symmetrize((v * w**-2) @ v.T)  # (gamma^-1 gamma^-1)
        self.rho = float(np.max(np.abs(gamma_inv_sq)))

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]


@dataclass
class SolveDiagnostics:
    iterations: int = 0
    grad_norm: float = math.nan
    step_norm: float = math.nan
    dykstra_cycles: int = 0
    objective: float = math.nan
    objective_history: list = field(default_factory=list)


def feasibility_violation(p: OsdpProblem, w: np.ndarray) -> float:
    """Largest constraint violation of W against K (0 when feasible)."""
    w = symmetrize(w)
    lam_min = float(np.linalg.eigvalsh(w)[0])
    v_psd = max(0.0, -lam_min)
    v_diag = max(0.0, float(np.max(np.abs(np.diagonal(w)))) - p.beta)
    v_trace = max(0.0, frobenius_dot(p.gamma_sq, w) - p.tau)
    return max(v_psd, v_diag, v_trace)


def is_feasible(p: OsdpProblem, w: np.ndarray, tol: float = FEAS_TOL) -> bool:
    return feasibility_violation(p, w) <= tol


def _chol_logdet(s: np.ndarray) -> float:
    try:
        c = np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise NotPDError(f"matrix is not PD: {exc}") from exc
    return 2.0 * float(np.sum(np.log(np.diagonal(c))))


def regularizer_value(p: OsdpProblem, w: np.ndarray, *, validate: bool = True) -> float:
    """-ln det(G W G + eps I) for PSD W."""
    w = symmetrize(w)
    if validate and float(np.linalg.eigvalsh(w)[0]) < -FEAS_TOL:
        raise InfeasibleInputError("W must be PSD within tolerance")
    s = symmetrize(p.gamma @ w @ p.gamma) + p.epsilon * np.eye(p.dim)
    return -_chol_logdet(s)


def regularizer_grad(p: OsdpProblem, w: np.ndarray, *, validate: bool = True) -> np.ndarray:
    """Analytic gradient -G (G W G + eps I)^-1 G; symmetric negative definite."""
    w = symmetrize(w)
    if validate and float(np.linalg.eigvalsh(w)[0]) < -FEAS_TOL:
        raise InfeasibleInputError("W must be PSD within tolerance")
    s = symmetrize(p.gamma @ w @ p.gamma) + p.epsilon * np.eye(p.dim)
    return -symmetrize(p.gamma @ np.linalg.solve(s, p.gamma))


class _DykstraState:
    """Dual increments of the Dykstra split, reusable across calls.

    Dykstra is dual block-coordinate ascent on the projection problem, so
    warm-starting the increments between the near-identical projections of
    one projected-gradient solve is valid and cuts cycle counts.
    """

    def __init__(self, n: int):
        self.lin = np.zeros((n, n))
        self.psd = np.zeros((n, n))


def _project_box_halfspace(p: OsdpProblem, y: np.ndarray) -> np.ndarray:
    """Exact projection onto {|W_ii| <= beta} intersect {Tr(gamma^2 W) <= tau}.

    KKT form x(lam) = y - lam*gamma^2 with the diagonal clipped to the box;
    the multiplier solves the piecewise-linear equation <gamma^2, x(lam)> = tau
    (breakpoints where a diagonal entry saturates), found by an exact scan.
    """
    g2 = p.gamma_sq
    d_g = np.diagonal(g2)
    d_y = np.diagonal(y)
    clip0 = np.clip(d_y, -p.beta, p.beta)
    off_dot = float(np.sum(g2 * y)) - float(d_g @ d_y)
    g_at_0 = off_dot + float(d_g @ clip0)
    if g_at_0 <= p.tau:
        if np.array_equal(clip0, d_y):
            return y
        x = y.copy()
        np.fill_diagonal(x, clip0)
        return x

    # strictly-decreasing piecewise-linear g(lam); crossing always exists
    b_off = float(np.sum(g2 * g2)) - float(d_g @ d_g)

    def g_of(lam):
        return off_dot - lam * b_off + float(d_g @ np.clip(d_y - lam * d_g, -p.beta, p.beta))

    bps = np.concatenate([(d_y - p.beta) / d_g, (d_y + p.beta) / d_g])
    bps = np.sort(bps[bps > 0.0])
    lam_lo, g_lo = 0.0, g_at_0
    lam_star = None
    for b in bps:
        g_b = g_of(float(b))
        if g_b <= p.tau:
            frac = (g_lo - p.tau) / (g_lo - g_b) if g_b < g_lo else 1.0
            lam_star = lam_lo + frac * (float(b) - lam_lo)
            break
        lam_lo, g_lo = float(b), g_b
    if lam_star is None:
        # beyond the last breakpoint every diagonal is saturated; slope -b_off
        lam_star = lam_lo + (g_lo - p.tau) / b_off
    x = y - lam_star * g2
    np.fill_diagonal(x, np.clip(d_y - lam_star * d_g, -p.beta, p.beta))
    return x


def _project_k_cycles(
    p: OsdpProblem, a: np.ndarray, s: SolverSettings, dual: _DykstraState | None = None
) -> tuple[np.ndarray, int]:
    """Dykstra alternating projection onto K; returns (point, cycles used).

    Alternates the PSD cone with the exactly-projected box/half-space pair
    (the three-way split leaves the box and half-space fighting over the
    diagonal at rate (N-1)/N per cycle). Ends on the PSD cone so the
    returned iterate is exactly PSD.
    """
    x = symmetrize(a)
    if dual is None:
        dual = _DykstraState(x.shape[0])
    eigh_sym = np.linalg.eigh
    cycles = 0
    for cycles in range(1, s.dykstra_iters + 1):
        x_prev = x

        y = x + dual.lin
        x = _project_box_halfspace(p, y)
        dual.lin = y - x

        y = x + dual.psd
        w, v = eigh_sym(0.5 * (y + y.T))
        if w[0] >= 0.0:
            x = y
            dual.psd = np.zeros_like(y)
        else:
            proj = (v * np.maximum(w, 0.0)) @ v.T
            x = 0.5 * (proj + proj.T)
            dual.psd = y - x

        if float(np.linalg.norm(x - x_prev)) <= s.dykstra_tol:
            break
    return x, cycles


def project_K(p: OsdpProblem, a: np.ndarray, s: SolverSettings | None = None) -> np.ndarray:
    """Frobenius projection of A onto the decision set K."""
    s = s or SolverSettings()
    x, cycles = _project_k_cycles(p, a, s)
    violation = feasibility_violation(p, x)
    if violation > FEAS_TOL:
        raise ProjectionDivergedError(
            f"projection infeasible after {cycles} Dykstra cycles "
            f"(violation {violation:.3e}, tol {FEAS_TOL:.0e})"
        )
    return x


def _pg_minimize(
    p: OsdpProblem,
    cum_loss: np.ndarray,
    eta: float,
    w_start: np.ndarray,
    s: SolverSettings,
) -> tuple[np.ndarray, SolveDiagnostics]:
    """Minimize R(W) + eta * (cum_loss . W) over K by projected gradient.

    Armijo backtracking from alpha=1; terminates when the projected step is
    below grad_tol or the iteration budget is spent. Accepted steps are
    monotone in the objective.
    """

    def objective(w):
        return regularizer_value(p, w, validate=False) + eta * frobenius_dot(cum_loss, w)

    w = symmetrize(w_start)
    f_cur = objective(w)
    diag = SolveDiagnostics(objective=f_cur, objective_history=[f_cur])
    dual = _DykstraState(p.dim)
    for _ in range(s.max_iters):
        grad = regularizer_grad(p, w, validate=False) + eta * cum_loss
        diag.grad_norm = float(np.linalg.norm(grad))

        alpha = 1.0
        accepted = False
        step = math.inf
        descent = -math.inf
        while alpha >= 1e-16:
            w_trial, cycles = _project_k_cycles(p, w - alpha * grad, s, dual)
            diag.dykstra_cycles += cycles
            delta = w_trial - w
            step = float(np.linalg.norm(delta))
            descent = frobenius_dot(grad, delta)
            f_trial = objective(w_trial)
            if f_trial <= f_cur + s.armijo_c * descent:
                accepted = True
                break
            if step <= s.grad_tol:
                break
            alpha *= s.armijo_beta

        if not accepted:
            if step <= s.grad_tol or descent >= -1e-15:
                break  # stationary within tolerance
            raise SolverStalledError(
                f"no decrease from step {step:.3e} (descent {descent:.3e}) "
                f"after backtracking at iteration {diag.iterations}"
            )

        w = w_trial
        f_cur = f_trial
        diag.iterations += 1
        diag.step_norm = step
        diag.objective = f_cur
        diag.objective_history.append(f_cur)
        if step <= s.grad_tol:
            break

    violation = feasibility_violation(p, w)
    if violation > FEAS_TOL:
        raise ProjectionDivergedError(
            f"iterate infeasible after solve (violation {violation:.3e})"
        )
    return w, diag


@dataclass
class FtrlState:
    """Mutable per-run state: accumulated losses and the current iterate."""

    problem: OsdpProblem
    solver: SolverSettings
    cum_loss: np.ndarray
    current: np.ndarray
    round: int = 0
    last_diagnostics: SolveDiagnostics | None = None

    @classmethod
    def initial(cls, problem: OsdpProblem, solver: SolverSettings | None = None) -> "FtrlState":
        solver = solver or SolverSettings()
        n = problem.dim
        scale = min(problem.beta, problem.tau / float(np.trace(problem.gamma_sq)))
        return cls(
            problem=problem,
            solver=solver,
            cum_loss=np.zeros((n, n)),
            current=scale * np.eye(n),
        )


def ftrl_step(state: FtrlState) -> np.ndarray:
    """One FTRL solve: argmin over K of R(W) + eta * cum_loss . W, warm-started."""
    w, diag = _pg_minimize(
        state.problem, state.cum_loss, state.problem.eta, state.current, state.solver
    )
    state.last_diagnostics = diag
    return w


def _validate_loss(p: OsdpProblem, loss: np.ndarray) -> np.ndarray:
    loss = symmetrize(loss)
    if loss.shape != (p.dim, p.dim):
        raise LossOutOfClassError(f"loss shape {loss.shape} != {(p.dim, p.dim)}")
    l1 = float(np.sum(np.abs(loss)))
    if l1 > p.g + 1e-9:
        raise LossOutOfClassError(f"l1 norm {l1:.6g} exceeds g={p.g:.6g}")
    if p.require_psd_losses:
        lam_min = float(np.linalg.eigvalsh(loss)[0])
        if lam_min < -1e-10 * max(1.0, float(np.linalg.norm(loss))):
            raise LossOutOfClassError(
                f"raw-OSDP mode requires PSD losses (min eigenvalue {lam_min:.3e})"
            )
    return loss


def osdp_round(state: FtrlState, loss: np.ndarray) -> tuple[float, FtrlState]:
    """Play one protocol round: incur current . loss, then move to the FTRL argmin."""
    loss = _validate_loss(state.problem, loss)
    incurred = frobenius_dot(state.current, loss)
    state.cum_loss = state.cum_loss + loss
    state.current = ftrl_step(state)
    state.round += 1
    return incurred, state


@dataclass
class RegretLedger:
    """Per-round losses plus their running total (kept consistent by record())."""

    per_round_loss: list = field(default_factory=list)
    loss_history: list = field(default_factory=list)
    cum_algorithm_loss: float = 0.0

    def record(self, loss_value: float, loss_matrix: np.ndarray) -> None:
        self.per_round_loss.append(float(loss_value))
        self.loss_history.append(loss_matrix)
        self.cum_algorithm_loss += float(loss_value)

    def consistent(self, rtol: float = 1e-9) -> bool:
        total = float(sum(self.per_round_loss))
        return abs(total - self.cum_algorithm_loss) <= rtol * max(1.0, abs(total))


# --- regret bound with the proof's explicit constants ------------------------


def strong_convexity_constant(p: OsdpProblem) -> float:
    """s = 1 / (1152 sqrt(e) (beta + rho*epsilon)^2 g^2)."""
    return 1.0 / (1152.0 * math.sqrt(math.e) * (p.beta + p.rho * p.epsilon) ** 2 * p.g**2)


def regret_h0(p: OsdpProblem) -> float:
    """Regularizer range bound over K: tau / epsilon."""
    return p.tau / p.epsilon


def tuned_eta(p: OsdpProblem, t: int) -> float:
    """Learning rate sqrt(s H0 / T) minimizing H0/eta + eta T / s."""
    if t < 1:
        raise ValueError("horizon must be >= 1")
    return math.sqrt(strong_convexity_constant(p) * regret_h0(p) / t)


def theoretical_regret_bound(p: OsdpProblem, t: int) -> float:
    """H0/eta + eta T / s at the problem's eta; equals 2 sqrt(H0 T / s) when tuned."""
    if t < 1:
        raise ValueError("horizon must be >= 1")
    s = strong_convexity_constant(p)
    h0 = regret_h0(p)
    return h0 / p.eta + p.eta * t / s


def strong_convexity_gap(
    p: OsdpProblem, x: np.ndarray, y: np.ndarray, loss: np.ndarray, alpha: float
) -> float:
    """Slack of the s-strong-convexity inequality at (X, Y, L, alpha); >= 0."""
    if not (0.0 <= alpha <= 1.0):
        raise ValueError("alpha must lie in [0,1]")
    if not is_feasible(p, x) or not is_feasible(p, y):
        raise InfeasibleInputError("X and Y must be feasible in K")
    loss = _validate_loss(p, loss)
    s = strong_convexity_constant(p)
    coupling = frobenius_dot(loss, x - y)
    mix = regularizer_value(p, alpha * x + (1.0 - alpha) * y, validate=False)
    return (
        alpha * regularizer_value(p, x, validate=False)
        + (1.0 - alpha) * regularizer_value(p, y, validate=False)
        - 0.5 * s * alpha * (1.0 - alpha) * coupling**2
        - mix
    )


def max_entry_contrast(x: np.ndarray, y: np.ndarray) -> float:
    """max over (i,j) of |X_ij - Y_ij| / (X_ii + Y_ii + X_jj + Y_jj).

    Zero denominators (possible only when the corresponding rows of PSD
    inputs vanish) count as ratio 0.
    """
    num = np.abs(x - y)
    dx = np.diagonal(x)
    dy = np.diagonal(y)
    den = dx[:, None] + dy[:, None] + dx[None, :] + dy[None, :]
    ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return float(np.max(ratio))


# --- samplers and the post-hoc comparator ------------------------------------


def sample_feasible(p: OsdpProblem, rng: np.random.Generator) -> np.ndarray:
    """Random PSD matrix scaled into K (both constraints possibly near-active)."""
    n = p.dim
    rank = int(rng.integers(1, n + 1))
    b = rng.standard_normal((n, rank))
    a = symmetrize(b @ b.T / rank)
    c_max = min(
        p.beta / float(np.max(np.diagonal(a))),
        p.tau / frobenius_dot(p.gamma_sq, a),
    )
    return float(rng.uniform(0.05, 0.999)) * c_max * a


def sample_sparse_psd_loss(
    n: int, g: float, rng: np.random.Generator, support: int = 2
) -> np.ndarray:
    """Rank-one PSD loss on a small support with l1 norm exactly g."""
    idx = rng.choice(n, size=min(support, n), replace=False)
    v = np.zeros(n)
    v[idx] = rng.standard_normal(len(idx))
    if not np.any(v):
        v[idx[0]] = 1.0
    loss = np.outer(v, v)
    return g / float(np.sum(np.abs(loss))) * loss


def best_fixed_weight(
    p: OsdpProblem, total_loss: np.ndarray, settings: SolverSettings | None = None
) -> np.ndarray:
    """Post-hoc comparator: FTRL-style single solve of the total loss over K.

    Minimizes R(W) + eta_lin * total_loss . W with eta_lin large enough that
    the regularizer contributes at most H0/eta_lin to the linear objective.
    """
    settings = settings or SolverSettings(max_iters=2000, grad_tol=1e-9)
    eta_lin = 1e6
    w0 = FtrlState.initial(p, settings).current
    w, _ = _pg_minimize(p, total_loss, eta_lin, w0, settings)
    return w
