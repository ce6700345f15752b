"""The three dispatch algorithms: one exact central solve and two
penalty-based iterative schemes run on a synchronous round engine.

Within a round every agent sees only the previous round's snapshot, so agent
execution order cannot change any number (the engine accepts a schedule
permutation purely to demonstrate that).  Dual variables follow plain
arithmetic recurrences and are replayable bitwise from the recorded trace.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import qp
from .errors import InfeasibleError, NonConvergedError
from .grid import AgentSpec, CommunitySpec, LoadSample, validate

DEFAULT_RHO = 1.0
DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER_DISTRIBUTED = 1000
DEFAULT_MAX_ITER_DECENTRALIZED = 2000

TRACE_COLUMNS = ("iter", "objective", "balance_residual", "consensus_residual", "lambda_or_max_dual")


@dataclass(eq=False)
class DispatchSolution:
    """Final dispatch: generator outputs, net injections, cost, imbalance.

    p_o is always derived as row_sum(p_g) - row_sum(loads), the injection
    identity.  Solver outputs respect the generator boxes; surrogate
    proposals reuse this shape but may violate them (the violation report
    carries the breach, nothing is clipped silently).
    """

    p_g: np.ndarray
    p_o: np.ndarray
    objective: float
    balance_residual: float


@dataclass(eq=False)
class TraceRow:
    iteration: int
    objective: float
    balance_residual: float
    consensus_residual: float | None
    dual: float
    sum_po: float
    max_step: float


@dataclass(eq=False)
class AdmmState:
    """Distributed run state: scalar price plus the injection snapshot."""

    k: int
    lam: float
    p_o_snapshot: np.ndarray
    rho: float
    trace: list[TraceRow] = field(default_factory=list)
    converged: bool = False


@dataclass(eq=False)
class DecentralizedState:
    """Consensus run state: pairwise duals and injection copies."""

    k: int
    lambda_pair: np.ndarray
    p_o_copy: np.ndarray
    p_o_snapshot: np.ndarray
    rho: float
    trace: list[TraceRow] = field(default_factory=list)
    converged: bool = False
    history: list["DecentralizedRound"] | None = None


@dataclass(eq=False)
class DecentralizedRound:
    """One recorded round: post-update primals, copies and duals."""

    iteration: int
    p_o: np.ndarray
    p_o_copy: np.ndarray
    lambda_pair: np.ndarray
    hard_constraint_residuals: np.ndarray


@dataclass(frozen=True)
class MessageStats:
    messages: int
    links: int


@lru_cache(maxsize=512)
def _agent_fleet(agent: AgentSpec) -> qp.Fleet:
    return qp.Fleet(
        a=[g.a for g in agent.generators],
        b=[g.b for g in agent.generators],
        c=[g.c for g in agent.generators],
        p_max=[g.p_max for g in agent.generators],
    )


def _community_fleet(spec: CommunitySpec) -> qp.Fleet:
    a, b, c, p_max = spec.cost_arrays()
    return qp.Fleet(a.ravel(), b.ravel(), c.ravel(), p_max.ravel())


def _load_matrix(spec: CommunitySpec, loads) -> np.ndarray:
    values = loads.values if isinstance(loads, LoadSample) else np.asarray(loads, dtype=float)
    expected = (spec.n_agents, spec.n_loads)
    if values.shape != expected:
        raise ValueError(f"loads shape {values.shape} does not match community {expected}")
    return values


def community_objective(spec: CommunitySpec, p_g: np.ndarray) -> float:
    """Total generation cost sum_i sum_g a*p^2 + b*p + c at dispatch p_g."""
    a, b, c, _ = spec.cost_arrays()
    p = np.asarray(p_g, dtype=float)
    return float(np.sum(a * p * p + b * p + c))


def _solution_from_pg(spec: CommunitySpec, p_g: np.ndarray, loads: np.ndarray) -> DispatchSolution:
    p_o = p_g.sum(axis=1) - loads.sum(axis=1)
    return DispatchSolution(
        p_g=p_g,
        p_o=p_o,
        objective=community_objective(spec, p_g),
        balance_residual=abs(float(np.sum(p_o))),
    )


# ---------------------------------------------------------------------------
# centralized


def solve_centralized(spec: CommunitySpec, loads, tol: float = 1e-6) -> DispatchSolution:
    """Exact community-wide dispatch: merit-order allocation of total demand.

    Minimizes total cost subject to the generator boxes and zero net
    community exchange (total generation equals total demand).  Raises
    InfeasibleError when the sampled loads exceed total capacity.
    """
    validate(spec)
    load_mat = _load_matrix(spec, loads)
    demand = float(np.sum(load_mat))
    fleet = _community_fleet(spec)
    if demand > fleet.capacity + tol:
        raise InfeasibleError(
            f"sampled demand {demand} MW exceeds total capacity {fleet.capacity} MW"
        )
    if demand < 0.0:
        raise InfeasibleError(f"total demand is negative: {demand} MW")
    p_flat, _ = qp.allocate(fleet, min(demand, fleet.capacity))
    p_g = p_flat.reshape(spec.n_agents, spec.n_gens)
    return _solution_from_pg(spec, p_g, load_mat)


# ---------------------------------------------------------------------------
# distributed (coordinator holds one price)


def local_solve_distributed(
    agent: AgentSpec,
    loads_i: np.ndarray,
    lam: float,
    sum_others_po: float,
    rho: float,
) -> tuple[np.ndarray, float]:
    """One agent's best response given the price and the others' snapshot.

    Minimizes own cost + lam*(p_o + s) + (rho/2)*(p_o + s)^2 over the
    generator boxes, with p_o tied to outputs by the injection identity and
    s the snapshot sum of all other agents' injections.
    """
    if rho <= 0.0:
        raise ValueError(f"rho must be positive, got {rho}")
    fleet = _agent_fleet(agent)
    demand = float(np.sum(np.asarray(loads_i, dtype=float)))
    # d/dt of the coupling at total output t: lam + rho*(t - demand + s)
    g_lin = lam + rho * (sum_others_po - demand)
    p_g, _, _ = qp.minimize_coupled(fleet, g_lin, rho)
    p_o = float(np.sum(p_g)) - demand
    return p_g, p_o


def dual_update_distributed(lam: float, rho: float, sum_po: float) -> float:
    """Price ascent on the community balance residual."""
    return lam + rho * sum_po


def run_distributed(
    spec: CommunitySpec,
    loads,
    rho: float = DEFAULT_RHO,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER_DISTRIBUTED,
    agent_order=None,
    observer=None,
) -> tuple[DispatchSolution, AdmmState]:
    """Synchronous rounds of local solves plus one shared price update.

    Stops when |sum of injections| <= tol and no injection moved more than
    tol; otherwise raises NonConvergedError carrying the state and trace.
    ``agent_order`` only schedules the within-round loop and cannot affect
    results.  ``observer(k, lam, snapshot, p_g_next, p_o_next)`` is called
    once per round for dataset capture.
    """
    validate(spec)
    load_mat = _load_matrix(spec, loads)
    n = spec.n_agents
    order = list(range(n)) if agent_order is None else list(agent_order)
    if sorted(order) != list(range(n)):
        raise ValueError("agent_order must be a permutation of all agent indices")

    lam = 0.0
    po = np.zeros(n)
    state = AdmmState(k=0, lam=lam, p_o_snapshot=po, rho=rho)
    mask = ~np.eye(n, dtype=bool)

    for k in range(max_iter):
        pg_next = np.zeros((n, spec.n_gens))
        po_next = np.zeros(n)
        for i in order:
            s_i = float(np.sum(po[mask[i]]))
            pg_i, po_i = local_solve_distributed(
                spec.agents[i], load_mat[i], lam, s_i, rho
            )
            pg_next[i] = pg_i
            po_next[i] = po_i
        sum_po = float(np.sum(po_next))
        new_lam = dual_update_distributed(lam, rho, sum_po)
        max_step = float(np.max(np.abs(po_next - po)))
        state.trace.append(
            TraceRow(
                iteration=k,
                objective=community_objective(spec, pg_next),
                balance_residual=abs(sum_po),
                consensus_residual=None,
                dual=new_lam,
                sum_po=sum_po,
                max_step=max_step,
            )
        )
        if observer is not None:
            observer(k, lam, po.copy(), pg_next, po_next)
        po = po_next
        lam = new_lam
        state.k = k + 1
        state.lam = lam
        state.p_o_snapshot = po
        if abs(sum_po) <= tol and max_step <= tol:
            state.converged = True
            return _solution_from_pg(spec, pg_next, load_mat), state

    raise NonConvergedError(
        f"distributed dispatch did not converge within {max_iter} iterations "
        f"(last balance residual "
        f"{state.trace[-1].balance_residual if state.trace else float('nan')})",
        state=state,
    )


# ---------------------------------------------------------------------------
# decentralized (pairwise copies, no coordinator)


def local_solve_decentralized(
    agent: AgentSpec,
    loads_i: np.ndarray,
    duals_out: np.ndarray,
    duals_in: np.ndarray,
    neighbor_po: np.ndarray,
    my_copies_held_by_others: np.ndarray,
    rho: float,
) -> tuple[np.ndarray, float, np.ndarray]:
    """One agent's primal step with its neighbor copies as variables.

    The agent minimizes own cost plus the pairwise price and penalty terms,
    subject to the hard constraint that its injection plus all of its copies
    sums to zero.  The copies solve in closed form given the injection, so
    the problem reduces to qp.minimize_coupled; the returned copies satisfy
    the hard constraint exactly (the last copy absorbs the float residual).

    duals_out[j] prices this agent's copy of neighbor j; duals_in[j] is the
    neighbors' price on their copies of this agent; neighbor_po and
    my_copies_held_by_others are the matching snapshots.
    """
    if rho <= 0.0:
        raise ValueError(f"rho must be positive, got {rho}")
    fleet = _agent_fleet(agent)
    demand = float(np.sum(np.asarray(loads_i, dtype=float)))
    duals_out = np.asarray(duals_out, dtype=float)
    duals_in = np.asarray(duals_in, dtype=float)
    neighbor_po = np.asarray(neighbor_po, dtype=float)
    copies_of_me = np.asarray(my_copies_held_by_others, dtype=float)
    m = duals_out.size
    if not (duals_in.size == neighbor_po.size == copies_of_me.size == m):
        raise ValueError("neighbor-indexed inputs must share one length")

    if m == 0:
        # no neighbors: the hard constraint pins the injection to zero
        target = min(max(demand, 0.0), fleet.capacity)
        p_g, _ = qp.allocate(fleet, target)
        p_o = float(np.sum(p_g)) - demand
        return p_g, p_o, np.zeros(0)

    lam_out_sum = float(np.sum(duals_out))
    lam_in_sum = float(np.sum(duals_in))
    r_sum = float(np.sum(neighbor_po))
    c_in_sum = float(np.sum(copies_of_me))

    # derivative of the reduced coupling in u = p_o: the copy block
    # contributes mu(u) (its constraint multiplier), the incoming penalty
    # terms contribute rho*(m*u - sum of copies of me) - sum of duals_in
    g_quad = rho / m + rho * m
    alpha_u = (rho * r_sum - lam_out_sum) / m - lam_in_sum - rho * c_in_sum
    g_lin = alpha_u - g_quad * demand  # shift from u = t - demand to t

    p_g, _, _ = qp.minimize_coupled(fleet, g_lin, g_quad)
    p_o = float(np.sum(p_g)) - demand

    mu = (rho * (p_o + r_sum) - lam_out_sum) / m
    copies = neighbor_po - (duals_out + mu) / rho
    # force the hard constraint to hold bitwise under left-to-right summation
    partial = p_o
    for v in copies[:-1]:
        partial += float(v)
    copies[-1] = -partial
    return p_g, p_o, copies


def dual_update_decentralized(lam_ij: float, rho: float, copy_ij: float, po_j: float) -> float:
    """Pairwise price ascent on the copy disagreement."""
    return lam_ij + rho * (copy_ij - po_j)


def hard_constraint_residual(p_o_i: float, copies_row: np.ndarray) -> float:
    """Injection plus copies, summed left to right (the enforced identity)."""
    r = float(p_o_i)
    for v in copies_row:
        r += float(v)
    return r


def run_decentralized(
    spec: CommunitySpec,
    loads,
    rho: float = DEFAULT_RHO,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER_DECENTRALIZED,
    agent_order=None,
    observer=None,
    record_history: bool = False,
) -> tuple[DispatchSolution, DecentralizedState]:
    """Synchronous consensus rounds without any coordinator.

    Each round every agent takes its primal step from the previous round's
    snapshot, then every pairwise dual moves on the new copy disagreement.
    Stops when the worst copy disagreement and |sum of injections| are both
    within tol.  ``observer(k, lambda_pair, copies, snapshot, p_g_next,
    p_o_next, copies_next)`` is called once per round.
    """
    validate(spec)
    load_mat = _load_matrix(spec, loads)
    n = spec.n_agents
    order = list(range(n)) if agent_order is None else list(agent_order)
    if sorted(order) != list(range(n)):
        raise ValueError("agent_order must be a permutation of all agent indices")

    lam = np.zeros((n, n))
    copies = np.zeros((n, n))
    po = np.zeros(n)
    mask = ~np.eye(n, dtype=bool)
    state = DecentralizedState(
        k=0, lambda_pair=lam, p_o_copy=copies, p_o_snapshot=po, rho=rho,
        history=[] if record_history else None,
    )

    for k in range(max_iter):
        pg_next = np.zeros((n, spec.n_gens))
        po_next = np.zeros(n)
        copies_next = np.zeros((n, n))
        for i in order:
            row = mask[i]
            pg_i, po_i, copies_i = local_solve_decentralized(
                spec.agents[i],
                load_mat[i],
                duals_out=lam[i, row],
                duals_in=lam[row, i],
                neighbor_po=po[row],
                my_copies_held_by_others=copies[row, i],
                rho=rho,
            )
            pg_next[i] = pg_i
            po_next[i] = po_i
            copies_next[i, row] = copies_i
        disagreement = copies_next - po_next[None, :]
        lam_next = lam + rho * disagreement
        np.fill_diagonal(lam_next, 0.0)
        consensus = float(np.max(np.abs(disagreement[mask]))) if n > 1 else 0.0
        sum_po = float(np.sum(po_next))
        max_dual = float(np.max(np.abs(lam_next)))
        state.trace.append(
            TraceRow(
                iteration=k,
                objective=community_objective(spec, pg_next),
                balance_residual=abs(sum_po),
                consensus_residual=consensus,
                dual=max_dual,
                sum_po=sum_po,
                max_step=float(np.max(np.abs(po_next - po))),
            )
        )
        if observer is not None:
            observer(k, lam.copy(), copies.copy(), po.copy(), pg_next, po_next, copies_next)
        if state.history is not None:
            residuals = np.array(
                [hard_constraint_residual(po_next[i], copies_next[i, mask[i]]) for i in range(n)]
            )
            state.history.append(
                DecentralizedRound(
                    iteration=k,
                    p_o=po_next.copy(),
                    p_o_copy=copies_next.copy(),
                    lambda_pair=lam_next.copy(),
                    hard_constraint_residuals=residuals,
                )
            )
        po = po_next
        copies = copies_next
        lam = lam_next
        state.k = k + 1
        state.lambda_pair = lam
        state.p_o_copy = copies
        state.p_o_snapshot = po
        if consensus <= tol and abs(sum_po) <= tol:
            state.converged = True
            return _solution_from_pg(spec, pg_next, load_mat), state

    raise NonConvergedError(
        f"decentralized dispatch did not converge within {max_iter} iterations "
        f"(last consensus residual "
        f"{state.trace[-1].consensus_residual if state.trace else float('nan')})",
        state=state,
    )


# ---------------------------------------------------------------------------
# communication accounting and trace export


def message_stats(setup: str, n_agents: int, rounds: int = 1) -> MessageStats:
    """Messages exchanged and links used by one solve (or inference) run.

    centralized: one result broadcast, n messages over n hub links,
    independent of rounds.  distributed: each round every agent sends its
    injection up and receives the price, 2*n*rounds over n links.
    decentralized: each round every agent sends to every other,
    n*(n-1)*rounds over the n*(n-1)/2 pairwise links.
    """
    if n_agents < 1:
        raise ValueError("n_agents must be >= 1")
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    if setup == "centralized":
        return MessageStats(messages=n_agents, links=n_agents)
    if setup == "distributed":
        return MessageStats(messages=2 * n_agents * rounds, links=n_agents)
    if setup == "decentralized":
        return MessageStats(
            messages=n_agents * (n_agents - 1) * rounds,
            links=n_agents * (n_agents - 1) // 2,
        )
    raise ValueError(f"unknown setup {setup!r}")


def _fmt12(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def write_trace_csv(trace, path) -> None:
    """Write per-iteration residuals with a fixed header and 12-digit floats."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in trace:
            writer.writerow(
                [
                    row.iteration,
                    _fmt12(row.objective),
                    _fmt12(row.balance_residual),
                    _fmt12(row.consensus_residual),
                    _fmt12(row.dual),
                ]
            )
