"""
Proportional-fair power allocation for HRS by successive convex approximation.

Decision variables are the inner-common powers (one per group) and the
private powers (one per user), x = [p_ic, p_private]. The objective is
sum_g log(R_ic,g + sum_{k in g} R_p,k) subject to

    p_min <= sum_k p_k <= p_max
    sum_g p_ic,g + sum_k p_k <= p_budget - p_oc
    R_sum >= r_min

Each outer iteration replaces every stream rate log2(1 + gamma) by the
concave lower bound a log2(gamma) + b in log-power variables q = ln x.
The per-group minimum over inner-common rates becomes an epigraph
variable t_g, so the subproblem is smooth; SLSQP solves it. A power in
q-space cannot leave the floor (its surrogate slope vanishes there), so
when the surrogate stops improving the same epigraph problem is solved
on the true rates in power space. A point counts as converged only when
its projected-gradient residual is below STATIONARITY_TOL.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import ConfigError, InfeasibleError
from .models import (
    AllocationProblem,
    ChannelMatrix,
    Grouping,
    OptimizerSettings,
    PowerAllocation,
    PrecoderSet,
    RateBreakdown,
    Scheme,
    SinrCoefficients,
)
from .precoding import outer_residual

LN2 = math.log(2.0)

FLOOR_FRACTION = 1e-12  # per-variable lower bound, relative to the budget
FEASIBILITY_TOL = 1e-9
STATIONARITY_TOL = 1e-6
TIE_RTOL = 1e-6  # inner-common rates this close to the group minimum count as tied
ACTIVE_TOL = 1e-9  # relative slack below which a power constraint is active
RATE_FLOOR = 1e-12  # lower bound of the epigraph variables
SLSQP_FTOL = 1e-14
MAX_ORACLE_VARIABLES = 4
ORACLE_CHUNK = 100_000

# (inner-common rates, their jacobian, private rates, their jacobian) in solver coordinates
Pieces = tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
@dataclass(frozen=True, eq=False)
class AllocationEvaluation:
    """True rates and objective of one allocation."""
    objective: float
    group_rates: np.ndarray
    r_inner_common: np.ndarray
    r_private: np.ndarray
    r_outer_common: float
    sum_rate: float
    sinr_inner_common: np.ndarray
    sinr_private: np.ndarray


# --- problem construction ---------------------------------------------------


def build_problem(
    channel: ChannelMatrix,
    grouping: Grouping,
    precoders: PrecoderSet,
    total_power: float,
    alpha: float = 0.8,
    beta: float = 0.8,
    p_min: float = 0.0,
    p_max: float | None = None,
    p_budget: float | None = None,
    r_min: float = 0.0,
) -> AllocationProblem:
    """
    Precompute the SINR coefficients of an HRS transmission.

    Args:
        channel: Channel the precoders were built for
        grouping: User groups
        precoders: HRS precoder set (outer precoders required)
        total_power: Transmit power P of the uniform split
        alpha, beta: Fractions of the uniform split
        p_min, p_max: Bounds on the summed private power (p_max defaults to the budget)
        p_budget: Total power budget (defaults to P)
        r_min: Minimum sum rate

    Returns:
        AllocationProblem with the outer-common power P (1 - beta) reserved
    """
    if precoders.outer is None:
        raise ConfigError("power allocation needs HRS precoders")
    for name, value in (("alpha", alpha), ("beta", beta)):
        if not 0 < value <= 1:
            raise ConfigError(f"{name} must lie in (0, 1], got {value}")
    h = channel.gains
    sigma2 = np.asarray(channel.noise_var, dtype=float)
    g_total, k_total = grouping.num_groups, grouping.num_users
    budget = total_power if p_budget is None else p_budget

    priv_gain = (h @ precoders.private) ** 2
    ic_dirs = np.column_stack([precoders.inner_common_composite(g) for g in range(g_total)])
    ic_gain = (h @ ic_dirs) ** 2
    oc_gain = (h @ precoders.common) ** 2
    groups = grouping.assignments

    other_ic = ic_gain.copy()
    other_ic[np.arange(k_total), groups] = 0.0
    foreign_private = priv_gain.copy()
    np.fill_diagonal(foreign_private, 0.0)

    inner_common = SinrCoefficients(
        signal=ic_gain[np.arange(k_total), groups],
        signal_index=groups.astype(int),
        interference=np.hstack([other_ic, priv_gain]),
        noise=sigma2,
    )
    private = SinrCoefficients(
        signal=np.diag(priv_gain).copy(),
        signal_index=g_total + np.arange(k_total),
        interference=np.hstack([other_ic, foreign_private]),
        noise=sigma2,
    )
    outer_common = SinrCoefficients(
        signal=oc_gain,
        signal_index=np.full(k_total, -1),
        interference=np.hstack([ic_gain, priv_gain]),
        noise=sigma2,
    )
    return AllocationProblem(
        channel=channel,
        grouping=grouping,
        precoders=precoders,
        total_power=total_power,
        alpha=alpha,
        beta=beta,
        p_min=p_min,
        p_max=budget if p_max is None else p_max,
        p_budget=budget,
        r_min=r_min,
        p_outer_common=total_power * (1.0 - beta),
        inner_common=inner_common,
        private=private,
        outer_common=outer_common,
    )


def simplify_high_snr(problem: AllocationProblem, max_residual: float = 1e-9) -> AllocationProblem:
    """
    Drop the outer common message.

    Only allowed when the outer precoders null every other group; the
    reserved outer-common power returns to the budget.
    """
    residual = outer_residual(problem.channel.gains, problem.grouping, problem.precoders.outer)
    if residual > max_residual:
        raise InfeasibleError(
            f"inter-group leakage {residual:.3e} exceeds {max_residual:.1e}; "
            "the outer common message cannot be dropped",
            detail="leakage",
        )
    return replace(problem, p_outer_common=0.0, outer_common=None)


# --- evaluation -------------------------------------------------------------


def _stream_sinrs(coeffs: SinrCoefficients, xs: np.ndarray, reserved: float) -> np.ndarray:
    idx = coeffs.signal_index
    power = np.where(idx < 0, reserved, xs[:, np.maximum(idx, 0)])
    den = xs @ coeffs.interference.T + coeffs.noise
    return coeffs.signal * power / den


def _membership(problem: AllocationProblem) -> np.ndarray:
    return np.eye(problem.num_groups)[problem.grouping.assignments]


def _evaluate_many(problem: AllocationProblem, xs: np.ndarray) -> dict[str, np.ndarray]:
    xs = np.atleast_2d(xs)
    g_ic = _stream_sinrs(problem.inner_common, xs, 0.0)
    g_p = _stream_sinrs(problem.private, xs, 0.0)
    r_p = np.log2(1.0 + g_p)
    r_ic = np.column_stack(
        [np.log2(1.0 + g_ic[:, problem.grouping.members(g)].min(axis=1)) for g in range(problem.num_groups)]
    )
    groups = r_ic + r_p @ _membership(problem)
    with np.errstate(divide="ignore"):
        objective = np.where(np.all(groups > 0, axis=1), np.log(np.maximum(groups, 1e-300)).sum(axis=1), -np.inf)
    if problem.outer_common is not None:
        g_oc = _stream_sinrs(problem.outer_common, xs, problem.p_outer_common)
        r_oc = np.log2(1.0 + g_oc.min(axis=1))
    else:
        r_oc = np.zeros(xs.shape[0])
    return {
        "objective": objective,
        "groups": groups,
        "r_ic": r_ic,
        "r_p": r_p,
        "r_oc": r_oc,
        "sum_rate": groups.sum(axis=1),
        "g_ic": g_ic,
        "g_p": g_p,
    }


def evaluate_allocation(problem: AllocationProblem, x) -> AllocationEvaluation:
    """
    True rates of an allocation vector x = [p_ic, p_private].

    The sum rate counts inner-common and private rates, the quantities of
    the objective; the outer-common rate is reported separately.
    """
    ev = _evaluate_many(problem, np.asarray(x, dtype=float)[None, :])
    return AllocationEvaluation(
        objective=float(ev["objective"][0]),
        group_rates=ev["groups"][0],
        r_inner_common=ev["r_ic"][0],
        r_private=ev["r_p"][0],
        r_outer_common=float(ev["r_oc"][0]),
        sum_rate=float(ev["sum_rate"][0]),
        sinr_inner_common=ev["g_ic"][0],
        sinr_private=ev["g_p"][0],
    )


def _rate_jacobian(coeffs: SinrCoefficients, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stream SINRs and d log2(1 + gamma_s) / dx_j."""
    den = coeffs.interference @ x + coeffs.noise
    gamma = coeffs.signal * x[coeffs.signal_index] / den
    d_gamma = -(gamma / den)[:, None] * coeffs.interference
    rows = np.arange(len(gamma))
    d_gamma[rows, coeffs.signal_index] += coeffs.signal / den
    return gamma, d_gamma / ((1.0 + gamma) * LN2)[:, None]


def _group_pieces(problem: AllocationProblem, x: np.ndarray) -> list[tuple[float, np.ndarray]]:
    """
    Per group: the rate and the gradients of its active pieces.

    Row i is the gradient of R_ic,k + sum_j R_p,j for the i-th member k tied
    for the weakest inner-common rate; the weakest member comes first.
    """
    g_ic, j_ic = _rate_jacobian(problem.inner_common, x)
    g_p, j_p = _rate_jacobian(problem.private, x)
    r_ic = np.log2(1.0 + g_ic)
    r_p = np.log2(1.0 + g_p)
    out = []
    for g in range(problem.num_groups):
        members = problem.grouping.members(g)
        order = members[np.argsort(r_ic[members], kind="stable")]
        weakest = float(r_ic[order[0]])
        rate = weakest + float(r_p[members].sum())
        tied = order[r_ic[order] <= weakest + TIE_RTOL * max(1.0, rate)]
        out.append((rate, j_ic[tied] + j_p[members].sum(axis=0)))
    return out


# --- projection -------------------------------------------------------------


def _floor(problem: AllocationProblem) -> float:
    return FLOOR_FRACTION * problem.p_budget


def _available(problem: AllocationProblem) -> float:
    return problem.p_budget - problem.p_outer_common


def _check_power_feasibility(problem: AllocationProblem) -> None:
    floor = _floor(problem)
    g, k = problem.num_groups, problem.num_users
    available = _available(problem)
    if problem.p_min > problem.p_max:
        raise InfeasibleError(
            f"p_min={problem.p_min} exceeds p_max={problem.p_max}", detail="p_min>p_max"
        )
    if max(problem.p_min, k * floor) + g * floor > available:
        raise InfeasibleError(
            f"private power floor {problem.p_min} does not fit the available budget {available}",
            detail="p_min>budget",
        )
    if problem.p_max < k * floor:
        raise InfeasibleError(f"p_max={problem.p_max} is below the power floor", detail="p_max")


def _budget_shift(z: np.ndarray, floor: float, budget: float) -> np.ndarray:
    """Project onto {x >= floor, sum x <= budget} by a uniform shift."""
    x = np.maximum(z, floor)
    if x.sum() <= budget:
        return x
    u = np.sort(z - floor)[::-1]
    target = budget - floor * len(z)
    cumulative = np.cumsum(u)
    j = np.arange(1, len(u) + 1)
    shifts = (cumulative - target) / j
    active = np.flatnonzero(u > shifts)
    mu = shifts[active[-1]]
    return np.maximum(z - mu, floor)


def project_powers(y, problem: AllocationProblem) -> np.ndarray:
    """
    Euclidean projection onto the feasible power set.

    The set is {x >= floor, p_min <= sum private <= p_max, sum x <= budget}.
    The budget multiplier is exact for a fixed private-sum multiplier;
    the latter is found by root bracketing.
    """
    y = np.asarray(y, dtype=float)
    g = problem.num_groups
    floor = _floor(problem)
    budget = _available(problem)
    upper = min(problem.p_max, budget - g * floor)
    lower = problem.p_min
    private_mask = np.zeros(len(y), dtype=bool)
    private_mask[g:] = True

    def solve(nu: float) -> np.ndarray:
        return _budget_shift(y - nu * private_mask, floor, budget)

    x = solve(0.0)
    s = x[g:].sum()
    if lower <= s <= upper:
        return x
    span = float(np.abs(y).max()) + budget + 1.0
    scale = max(1.0, budget)
    if s > upper:
        nu = brentq(lambda v: solve(v)[g:].sum() - upper, 0.0, span, xtol=1e-14 * scale)
    else:
        nu = brentq(lambda v: solve(v)[g:].sum() - lower, -2.0 * span, 0.0, xtol=1e-14 * scale)
    return solve(nu)


def _normal_cone(problem: AllocationProblem, x: np.ndarray) -> np.ndarray:
    """Outward normals of the power constraints active at x, one per column."""
    g, n = problem.num_groups, len(x)
    available = _available(problem)
    slack = ACTIVE_TOL * max(1.0, available)
    private = np.zeros(n)
    private[g:] = 1.0
    s = float(x[g:].sum())
    normals = [-np.eye(n)[i] for i in np.flatnonzero(x <= _floor(problem) + slack)]
    if x.sum() >= available - slack:
        normals.append(np.ones(n))
    if s >= problem.p_max - slack:
        normals.append(private)
    if problem.p_min > 0 and s <= problem.p_min + slack:
        normals.append(-private)
    return np.column_stack(normals) if normals else np.zeros((n, 0))


def _stationary_weights(problem: AllocationProblem, x: np.ndarray, grads: list[np.ndarray]) -> list[np.ndarray]:
    """
    Convex weights over tied pieces that bring the gradient closest to the normal cone.

    Solves min |sum_g lambda_g G_g - N mu|^2 over lambda_g in the simplex and mu >= 0.
    """
    normals = _normal_cone(problem, x)
    sizes = [rows.shape[0] for rows in grads]
    stacked = np.vstack(grads).T
    basis = np.hstack([stacked, -normals])
    m = stacked.shape[1]
    offsets = np.cumsum([0, *sizes])

    def objective(z):
        r = basis @ z
        return float(r @ r), 2.0 * basis.T @ r

    constraints = [
        {
            "type": "eq",
            "fun": lambda z, a=a, b=b: z[a:b].sum() - 1.0,
            "jac": lambda z, a=a, b=b: np.concatenate([np.zeros(a), np.ones(b - a), np.zeros(len(z) - b)]),
        }
        for a, b in zip(offsets[:-1], offsets[1:])
    ]
    z0 = np.concatenate([np.concatenate([np.full(k, 1.0 / k) for k in sizes]), np.zeros(normals.shape[1])])
    result = minimize(
        objective,
        z0,
        jac=True,
        method="SLSQP",
        bounds=[(0.0, 1.0)] * m + [(0.0, None)] * normals.shape[1],
        constraints=constraints,
        options={"maxiter": 200, "ftol": 1e-20},
    )
    z = result.x if np.all(np.isfinite(result.x)) else z0
    weights = []
    for a, b in zip(offsets[:-1], offsets[1:]):
        w = np.clip(z[a:b], 0.0, None)
        weights.append(w / w.sum() if w.sum() > 0 else np.full(b - a, 1.0 / (b - a)))
    return weights


def projected_gradient_residual(problem: AllocationProblem, x) -> float:
    """
    Stationarity measure |x - P(x + d)| in power space.

    d is the objective gradient. Where members tie for a group's weakest
    inner-common rate the objective has a kink and d ranges over the convex
    hull of the piece gradients; the smallest residual over that hull is
    returned.
    """
    x = np.asarray(x, dtype=float)
    grads = [rows / rate for rate, rows in _group_pieces(problem, x)]

    def residual(d: np.ndarray) -> float:
        return float(np.linalg.norm(x - project_powers(x + d, problem)))

    best = residual(sum(rows[0] for rows in grads))
    if best <= 0.0 or all(rows.shape[0] == 1 for rows in grads):
        return best
    weights = _stationary_weights(problem, x, grads)
    return min(best, residual(sum(w @ rows for w, rows in zip(weights, grads))))


def _power_feasible(problem: AllocationProblem, x: np.ndarray) -> bool:
    s = x[problem.num_groups:].sum()
    return bool(
        np.all(x >= -FEASIBILITY_TOL)
        and problem.p_min - FEASIBILITY_TOL <= s <= problem.p_max + FEASIBILITY_TOL
        and x.sum() <= _available(problem) + FEASIBILITY_TOL
    )


# --- surrogate --------------------------------------------------------------


def surrogate_bound(gamma_t: float) -> tuple[float, float]:
    """
    Coefficients of the concave lower bound a log2(gamma) + b <= log2(1 + gamma).

    Tight at gamma_t: a = gamma_t / (1 + gamma_t), b = log2(1 + gamma_t) - a log2(gamma_t).
    """
    if not gamma_t > 0:
        raise ConfigError(f"expansion point must be positive, got {gamma_t}")
    a = gamma_t / (1.0 + gamma_t)
    return a, math.log2(1.0 + gamma_t) - a * math.log2(gamma_t)


class _Surrogate:
    """Surrogate stream rates expanded at one allocation, as functions of q = ln x."""

    def __init__(self, problem: AllocationProblem, x_t: np.ndarray):
        self.streams = []
        for coeffs in (problem.inner_common, problem.private):
            den = coeffs.interference @ x_t + coeffs.noise
            gamma = coeffs.signal * x_t[coeffs.signal_index] / den
            active = gamma > 0
            a = np.zeros_like(gamma)
            b = np.zeros_like(gamma)
            for s in np.flatnonzero(active):
                a[s], b[s] = surrogate_bound(float(gamma[s]))
            self.streams.append((coeffs, a, b, active))

    def pieces(self, q: np.ndarray) -> Pieces:
        out = []
        x = np.exp(q)
        for coeffs, a, b, active in self.streams:
            den = coeffs.interference @ x + coeffs.noise
            safe = np.where(active, coeffs.signal, 1.0)
            log_gamma = (np.log(safe) + q[coeffs.signal_index] - np.log(den)) / LN2
            d_q = -(coeffs.interference * x[None, :]) / den[:, None]
            d_q[np.arange(len(den)), coeffs.signal_index] += 1.0
            out.append(np.where(active, a * log_gamma + b, 0.0))
            out.append((a / LN2)[:, None] * d_q)
        return out[0], out[1], out[2], out[3]


def _true_pieces(problem: AllocationProblem, scale: float) -> Callable[[np.ndarray], Pieces]:
    """True stream rates in scaled powers y = x / scale."""

    def pieces(y: np.ndarray) -> Pieces:
        g_ic, j_ic = _rate_jacobian(problem.inner_common, scale * y)
        g_p, j_p = _rate_jacobian(problem.private, scale * y)
        return np.log2(1.0 + g_ic), scale * j_ic, np.log2(1.0 + g_p), scale * j_p

    return pieces


def _epigraph_solve(
    problem: AllocationProblem,
    pieces: Callable[[np.ndarray], Pieces],
    to_powers: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    v0: np.ndarray,
    bounds: list[tuple[float, float]],
    kind: str,
    max_inner: int,
) -> np.ndarray | None:
    """
    Maximize the group utility with one epigraph variable per group.

    Variables are z = [v, t]: t_g <= R_ic,k(v) + sum_{j in g} R_p,j(v) for every
    member k of group g, so t_g is the group rate at the optimum. `kind` is
    "pf" (sum_g log t_g, r_min enforced) or "sum" (sum_g t_g).

    Returns:
        Projected powers, or None when SLSQP produced no finite point
    """
    g, n = problem.num_groups, len(v0)
    members = _membership(problem)
    within = members @ members.T
    private = np.zeros(n)
    private[g:] = 1.0
    available = _available(problem)
    enforce_r_min = kind == "pf" and problem.r_min > 0

    def objective(z):
        grad = np.zeros_like(z)
        if kind == "sum":
            grad[n:] = -1.0
            return -float(z[n:].sum()), grad
        t = np.maximum(z[n:], RATE_FLOOR)
        grad[n:] = -1.0 / t
        return -float(np.log(t).sum()), grad

    def rate_margin(z):
        ic, _, p, _ = pieces(z[:n])
        return ic + within @ p - members @ z[n:]

    def rate_margin_jac(z):
        _, d_ic, _, d_p = pieces(z[:n])
        return np.hstack([d_ic + within @ d_p, -members])

    def power_margin(z):
        x, _ = to_powers(z[:n])
        s = float(x[g:].sum())
        out = [available - x.sum(), problem.p_max - s]
        if problem.p_min > 0:
            out.append(s - problem.p_min)
        if enforce_r_min:
            out.append(z[n:].sum() - problem.r_min)
        return np.array(out)

    def power_margin_jac(z):
        _, dx = to_powers(z[:n])
        none = np.zeros(g)
        rows = [np.concatenate([-dx, none]), np.concatenate([-dx * private, none])]
        if problem.p_min > 0:
            rows.append(np.concatenate([dx * private, none]))
        if enforce_r_min:
            rows.append(np.concatenate([np.zeros(n), np.ones(g)]))
        return np.vstack(rows)

    ic, _, p, _ = pieces(v0)
    t0 = np.maximum([float(ic[m].min() + p[m].sum()) for m in map(problem.grouping.members, range(g))], RATE_FLOOR)
    result = minimize(
        objective,
        np.concatenate([v0, t0]),
        jac=True,
        method="SLSQP",
        bounds=bounds + [(RATE_FLOOR, None)] * g,
        constraints=[
            {"type": "ineq", "fun": rate_margin, "jac": rate_margin_jac},
            {"type": "ineq", "fun": power_margin, "jac": power_margin_jac},
        ],
        options={"maxiter": max_inner, "ftol": SLSQP_FTOL},
    )
    if not np.all(np.isfinite(result.x)):
        return None
    x, _ = to_powers(result.x[:n])
    return project_powers(x, problem)


def _surrogate_step(problem: AllocationProblem, x: np.ndarray, kind: str, max_inner: int) -> np.ndarray | None:
    """Maximize the concave surrogate expanded at x in log-power variables."""
    model = _Surrogate(problem, x)
    lower, upper = math.log(_floor(problem)), math.log(_available(problem))
    return _epigraph_solve(
        problem,
        model.pieces,
        lambda q: (np.exp(q), np.exp(q)),
        np.clip(np.log(x), lower, upper),
        [(lower, upper)] * len(x),
        kind,
        max_inner,
    )


def _power_step(problem: AllocationProblem, x: np.ndarray, kind: str, max_inner: int) -> np.ndarray | None:
    """Solve the epigraph problem on the true rates in power space, starting at x."""
    scale = _available(problem)
    slope = np.full(len(x), scale)
    return _epigraph_solve(
        problem,
        _true_pieces(problem, scale),
        lambda y: (scale * y, slope),
        x / scale,
        [(_floor(problem) / scale, 1.0)] * len(x),
        kind,
        max_inner,
    )


# --- solvers ----------------------------------------------------------------


def _allocation(problem: AllocationProblem, x: np.ndarray, **kwargs) -> PowerAllocation:
    ev = evaluate_allocation(problem, x)
    g = problem.num_groups
    return PowerAllocation(
        p_inner_common=tuple(float(v) for v in x[:g]),
        p_private=tuple(float(v) for v in x[g:]),
        objective_value=ev.objective,
        sum_rate=ev.sum_rate,
        **kwargs,
    )


def feasible_init(problem: AllocationProblem) -> PowerAllocation:
    """
    Uniform HRS split adjusted to the power constraints.

    Private powers are scaled into [p_min, p_max], then inner-common powers
    are scaled down if the budget would be exceeded. The start is flagged
    when it misses the minimum sum rate.
    """
    _check_power_feasibility(problem)
    g, k = problem.num_groups, problem.num_users
    floor = _floor(problem)
    p = problem.total_power
    x_ic = np.full(g, p * problem.beta * (1.0 - problem.alpha) / g)
    x_p = np.full(k, p * problem.beta * problem.alpha / k)
    s = x_p.sum()
    upper = min(problem.p_max, _available(problem) - g * floor)
    if s < problem.p_min:
        x_p *= problem.p_min / s
    elif s > upper:
        x_p *= upper / s
    room = _available(problem) - x_p.sum()
    if x_ic.sum() > room:
        x_ic *= room / x_ic.sum()
    x = np.maximum(np.concatenate([x_ic, x_p]), floor)
    x = project_powers(x, problem)
    ev = evaluate_allocation(problem, x)
    if not math.isfinite(ev.objective):
        raise InfeasibleError("uniform start has a zero group rate", detail="rate")
    return _allocation(problem, x, infeasible_start=ev.sum_rate < problem.r_min)


def _score(ev: AllocationEvaluation, kind: str) -> float:
    return ev.objective if kind == "pf" else ev.sum_rate


def _improvement(
    problem: AllocationProblem, x: np.ndarray | None, kind: str, current: float
) -> tuple[np.ndarray, AllocationEvaluation] | None:
    """Candidate and its evaluation when it raises the phase score, else None."""
    if x is None:
        return None
    ev = evaluate_allocation(problem, x)
    score = _score(ev, kind)
    if not math.isfinite(score) or score <= current:
        return None
    if kind == "pf" and ev.sum_rate < problem.r_min - FEASIBILITY_TOL:
        return None
    return x, ev


def sca_solve(
    problem: AllocationProblem,
    init: PowerAllocation,
    tol: float = 1e-6,
    max_outer: int = 50,
    max_inner: int = 500,
) -> PowerAllocation:
    """
    Successive convex approximation of the allocation problem.

    A start that misses r_min first runs a penalty phase that maximizes
    the sum rate; once r_min holds, the proportional-fair objective is
    maximized with r_min enforced on every accepted step. When a surrogate
    step gains less than `tol` (relative) a power-space step on the true
    rates is tried as well; the iteration stops at a stationary point, when
    neither step improves, or after `max_outer` iterations.

    Args:
        problem: Allocation problem
        init: Power-feasible starting allocation
        tol: Relative surrogate gain below which the power-space step is tried
        max_outer: Outer iteration cap
        max_inner: SLSQP iteration cap per subproblem

    Returns:
        PowerAllocation with the objective trajectory of the main phase;
        converged is set only when the projected-gradient residual is at
        most STATIONARITY_TOL
    """
    x = init.powers
    if not _power_feasible(problem, x):
        raise InfeasibleError("starting allocation violates the power constraints", detail="init")
    x = project_powers(np.maximum(x, _floor(problem)), problem)
    ev = evaluate_allocation(problem, x)
    main = ev.sum_rate >= problem.r_min
    trajectory = [ev.objective] if main else []
    iterations = 0
    while iterations < max_outer:
        if main and projected_gradient_residual(problem, x) <= STATIONARITY_TOL:
            break
        iterations += 1
        kind = "pf" if main else "sum"
        current = _score(ev, kind)
        step = _improvement(problem, _surrogate_step(problem, x, kind, max_inner), kind, current)
        if step is None or _score(step[1], kind) - current <= tol * max(1.0, abs(current)):
            polished = _improvement(problem, _power_step(problem, x, kind, max_inner), kind, current)
            if polished is not None and (step is None or _score(polished[1], kind) > _score(step[1], kind)):
                step = polished
        if step is None:
            break
        x, ev = step
        if main:
            trajectory.append(ev.objective)
        elif ev.sum_rate >= problem.r_min:
            main = True
            trajectory = [ev.objective]
    converged = main and projected_gradient_residual(problem, x) <= STATIONARITY_TOL
    return _allocation(
        problem,
        x,
        iterations=iterations,
        converged=converged,
        feasible=ev.sum_rate >= problem.r_min - FEASIBILITY_TOL,
        infeasible_start=init.infeasible_start,
        trajectory=tuple(trajectory),
    )


def grid_oracle(problem: AllocationProblem, points_per_dim: int = 64) -> PowerAllocation:
    """
    Exhaustive search over a log-spaced power grid.

    Every grid point is also rescaled onto the budget face. Only for
    problems with at most four variables.
    """
    n = problem.num_variables
    if n > MAX_ORACLE_VARIABLES:
        raise ConfigError(f"grid oracle supports at most {MAX_ORACLE_VARIABLES} variables, got {n}")
    budget = _available(problem)
    if points_per_dim < 2:
        raise ConfigError("grid oracle needs at least two points per dimension")
    levels = np.logspace(math.log10(budget * 1e-4), math.log10(budget), points_per_dim)
    shape = (points_per_dim,) * n
    total = points_per_dim**n
    g = problem.num_groups
    best_value, best_x = -math.inf, None
    for start in range(0, total, ORACLE_CHUNK):
        flat = np.arange(start, min(start + ORACLE_CHUNK, total))
        mesh = levels[np.stack(np.unravel_index(flat, shape), axis=1)]
        xs = np.vstack([mesh, mesh * (budget / mesh.sum(axis=1, keepdims=True))])
        s = xs[:, g:].sum(axis=1)
        ok = (
            (s >= problem.p_min - FEASIBILITY_TOL)
            & (s <= problem.p_max + FEASIBILITY_TOL)
            & (xs.sum(axis=1) <= budget * (1.0 + 1e-12))
        )
        ev = _evaluate_many(problem, xs)
        ok &= ev["sum_rate"] >= problem.r_min
        if not np.any(ok):
            continue
        values = np.where(ok, ev["objective"], -np.inf)
        i = int(np.argmax(values))
        if values[i] > best_value:
            best_value, best_x = float(values[i]), xs[i]
    if best_x is None:
        raise InfeasibleError("no feasible grid point", detail="grid")
    return _allocation(problem, best_x, converged=True)


def allocation_rates(problem: AllocationProblem, allocation: PowerAllocation) -> RateBreakdown:
    """Rate breakdown of an optimized allocation."""
    ev = evaluate_allocation(problem, allocation.powers)
    return RateBreakdown(
        scheme=Scheme.HRS_OPT,
        r_outer_common=ev.r_outer_common,
        r_inner_common=tuple(float(r) for r in ev.r_inner_common),
        r_private=tuple(float(r) for r in ev.r_private),
    )


def optimize_hrs(
    channel: ChannelMatrix,
    grouping: Grouping,
    precoders: PrecoderSet,
    total_power: float,
    alpha: float,
    beta: float,
    settings: OptimizerSettings | None = None,
) -> tuple[PowerAllocation, RateBreakdown]:
    """
    Optimized HRS: drop the outer common message and reallocate the full power.

    Returns:
        Tuple of (allocation, rate breakdown reported as HRS_OPT)
    """
    settings = settings or OptimizerSettings()
    problem = build_problem(
        channel,
        grouping,
        precoders,
        total_power,
        alpha=alpha,
        beta=beta,
        p_min=settings.p_min,
        p_max=settings.p_max,
        p_budget=total_power,
        r_min=settings.r_min,
    )
    problem = simplify_high_snr(problem, settings.max_residual)
    init = feasible_init(problem)
    allocation = sca_solve(problem, init, settings.tol, settings.max_outer, settings.max_inner)
    return allocation, allocation_rates(problem, allocation)
