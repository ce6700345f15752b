"""Neural stand-ins for the dispatch algorithms' per-iteration computations.

Each deployment setup maps to a fixed input/output layout:

- centralized: one network maps every load in the community to every
  injection and generator output, input n_loads*n_agents, output
  (n_gens+1)*n_agents, laid out agent-major as [p_o, p_g...] per agent;
- distributed: one network per agent maps [own loads, shared price, the
  other agents' injection snapshot] to [p_o, p_g...], input n_loads +
  n_agents, output n_gens + 1;
- decentralized: one network per agent maps [own loads, incoming pair
  prices, the other agents' injection snapshot, the copies others hold of
  this agent] to [p_o, p_g..., own copies], input n_loads + 3*(n_agents-1),
  output n_gens + n_agents.

Neighbor-indexed blocks always run over the other agents in ascending agent
index.  Networks are single-hidden-layer MLPs (ReLU, linear output) trained
by plain mini-batch gradient descent on mean squared error; outputs are
never projected into the feasible box, violations are reported as metrics.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import SETUPS
from .errors import (
    DimensionMismatchError,
    NonConvergedError,
    SolverFailedError,
    TargetTooSmallError,
)
from .grid import CommunitySpec, LoadSample, sample_loads
from .solvers import (
    DispatchSolution,
    community_objective,
    dual_update_distributed,
    run_decentralized,
    run_distributed,
    solve_centralized,
)


@dataclass(frozen=True)
class SetupDims:
    setup: str
    n_agents: int
    n_loads: int
    n_gens: int
    in_dim: int
    out_dim: int
    network_count: int


def setup_dims(setup: str, n_agents: int, n_loads: int, n_gens: int) -> SetupDims:
    """Input/output widths and network count for one deployment setup."""
    if n_agents < 1 or n_loads < 1 or n_gens < 1:
        raise ValueError("n_agents, n_loads and n_gens must all be >= 1")
    if setup == "centralized":
        in_dim = n_loads * n_agents
        out_dim = (n_gens + 1) * n_agents
        count = 1
    elif setup == "distributed":
        in_dim = n_loads + n_agents
        out_dim = n_gens + 1
        count = n_agents
    elif setup == "decentralized":
        in_dim = n_loads + 3 * (n_agents - 1)
        out_dim = n_gens + n_agents
        count = n_agents
    else:
        raise ValueError(f"unknown setup {setup!r}; expected one of {SETUPS}")
    return SetupDims(setup, n_agents, n_loads, n_gens, in_dim, out_dim, count)


def per_network_params(dims: SetupDims, hidden: int) -> int:
    """Parameters of one network: both layers carry biases."""
    if hidden < 1:
        raise ValueError(f"hidden must be >= 1, got {hidden}")
    return hidden * (dims.in_dim + dims.out_dim + 1) + dims.out_dim


def param_count(dims: SetupDims, hidden: int) -> int:
    """Total parameters across all networks of the setup."""
    return dims.network_count * per_network_params(dims, hidden)


def equalize_hidden_nodes(dims: SetupDims, target_params: int) -> int:
    """Largest hidden width whose total parameter count fits under target."""
    denom = dims.network_count * (dims.in_dim + dims.out_dim + 1)
    hidden = (target_params - dims.network_count * dims.out_dim) // denom
    if hidden < 1:
        raise TargetTooSmallError(
            f"target {target_params} cannot fit one hidden node for {dims.setup} "
            f"(minimum {param_count(dims, 1)})"
        )
    return int(hidden)


def nearest_hidden_nodes(dims: SetupDims, target_params: int) -> int:
    """Hidden width whose total parameter count lands closest to target.

    Equal-budget comparisons size every setup against one shared budget;
    the per-agent setups rarely divide it exactly, and the fairest width is
    the closest total, whichever side of the budget it falls on (ties round
    up).  equalize_hidden_nodes is the one-sided variant that never exceeds
    the budget.
    """
    denom = dims.network_count * (dims.in_dim + dims.out_dim + 1)
    numer = target_params - dims.network_count * dims.out_dim
    hidden = (2 * numer + denom) // (2 * denom)
    if hidden < 1:
        raise TargetTooSmallError(
            f"target {target_params} cannot fit one hidden node for {dims.setup} "
            f"(minimum {param_count(dims, 1)})"
        )
    return int(hidden)


def flops_per_call(dims: SetupDims, hidden: int) -> int:
    """FLOPs of one forward pass of one network.

    Multiply-accumulate pairs for both layers plus one add per bias and one
    comparison per hidden activation.
    """
    if hidden < 1:
        raise ValueError(f"hidden must be >= 1, got {hidden}")
    return (
        2 * dims.in_dim * hidden
        + hidden  # hidden bias adds
        + hidden  # activation comparisons
        + 2 * hidden * dims.out_dim
        + dims.out_dim  # output bias adds
    )


@dataclass(eq=False)
class MlpSurrogate:
    """One-hidden-layer perceptron, ReLU hidden, linear output.

    Treat as immutable once built or trained; train() is the single writer.
    """

    in_dim: int
    hidden_dim: int
    out_dim: int
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    seed: int
    agent_index: int = 0

    @property
    def n_params(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + self.b2.size


def _build_one(in_dim: int, hidden: int, out_dim: int, seed: int, agent_index: int) -> MlpSurrogate:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=[seed, agent_index]))
    bound_in = 1.0 / np.sqrt(in_dim)
    bound_hidden = 1.0 / np.sqrt(hidden)
    return MlpSurrogate(
        in_dim=in_dim,
        hidden_dim=hidden,
        out_dim=out_dim,
        w1=rng.uniform(-bound_in, bound_in, (in_dim, hidden)),
        b1=rng.uniform(-bound_in, bound_in, hidden),
        w2=rng.uniform(-bound_hidden, bound_hidden, (hidden, out_dim)),
        b2=rng.uniform(-bound_hidden, bound_hidden, out_dim),
        seed=seed,
        agent_index=agent_index,
    )


def build_surrogate(dims: SetupDims, hidden: int, seed: int):
    """Seeded weight init, uniform in +-1/sqrt(fan_in) layerwise.

    Returns one network for the centralized setup, else a list with one
    network per agent; agent i draws from the (seed, i) stream so networks
    are independent yet reproducible.
    """
    if hidden < 1:
        raise ValueError(f"hidden must be >= 1, got {hidden}")
    if dims.setup == "centralized":
        return _build_one(dims.in_dim, hidden, dims.out_dim, seed, 0)
    return [
        _build_one(dims.in_dim, hidden, dims.out_dim, seed, i)
        for i in range(dims.n_agents)
    ]


def forward(net: MlpSurrogate, x: np.ndarray) -> np.ndarray:
    """One inference pass on a single input vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.in_dim,):
        raise DimensionMismatchError(
            f"input shape {x.shape} does not match network input ({net.in_dim},)"
        )
    hidden = np.maximum(x @ net.w1 + net.b1, 0.0)
    return hidden @ net.w2 + net.b2


def _forward_batch(net: MlpSurrogate, x: np.ndarray) -> np.ndarray:
    hidden = np.maximum(x @ net.w1 + net.b1, 0.0)
    return hidden @ net.w2 + net.b2


def save_network(net: MlpSurrogate, path) -> None:
    """Binary write; load_network(save_network(net)) is bitwise identical."""
    np.savez(
        Path(path),
        in_dim=net.in_dim,
        hidden_dim=net.hidden_dim,
        out_dim=net.out_dim,
        seed=net.seed,
        agent_index=net.agent_index,
        w1=net.w1,
        b1=net.b1,
        w2=net.w2,
        b2=net.b2,
    )


def load_network(path) -> MlpSurrogate:
    with np.load(Path(path)) as data:
        return MlpSurrogate(
            in_dim=int(data["in_dim"]),
            hidden_dim=int(data["hidden_dim"]),
            out_dim=int(data["out_dim"]),
            w1=data["w1"],
            b1=data["b1"],
            w2=data["w2"],
            b2=data["b2"],
            seed=int(data["seed"]),
            agent_index=int(data["agent_index"]),
        )


# ---------------------------------------------------------------------------
# imitation datasets


@dataclass(frozen=True)
class SolverSettings:
    """Knobs for the solver runs that label a dataset."""

    rho: float = 1.0
    tol: float = 1e-4
    max_iter: int = 1000
    fluctuation: float = 0.1


@dataclass(eq=False)
class ImitationDataset:
    """Solver transitions as (input, target) rows.

    For the per-agent setups agent_ids says which agent's network each row
    trains; it is None for centralized data.
    """

    mode: str
    inputs: np.ndarray
    targets: np.ndarray
    agent_ids: np.ndarray | None
    provenance: dict = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return int(self.inputs.shape[0])


def _others(n: int, i: int) -> np.ndarray:
    idx = np.arange(n)
    return idx[idx != i]


def distributed_input(loads_i, lam: float, po_others) -> np.ndarray:
    return np.concatenate([np.asarray(loads_i, float).ravel(), [lam], np.asarray(po_others, float)])


def decentralized_input(loads_i, duals_in, po_others, copies_of_me) -> np.ndarray:
    return np.concatenate(
        [
            np.asarray(loads_i, float).ravel(),
            np.asarray(duals_in, float),
            np.asarray(po_others, float),
            np.asarray(copies_of_me, float),
        ]
    )


def centralized_target(solution: DispatchSolution) -> np.ndarray:
    """Agent-major [p_o, p_g...] blocks, the centralized output layout."""
    n_agents = solution.p_o.shape[0]
    blocks = [
        np.concatenate([[solution.p_o[i]], solution.p_g[i]]) for i in range(n_agents)
    ]
    return np.concatenate(blocks)


def generate_dataset(
    spec: CommunitySpec,
    mode: str,
    n_samples: int,
    settings: SolverSettings = SolverSettings(),
    seed: int = 0,
) -> ImitationDataset:
    """Label load scenarios with solver outputs.

    centralized: one row per sampled scenario, labeled by the exact solve.
    distributed/decentralized: every scenario contributes one row per agent
    per solver iteration, pairing the round's snapshot inputs with its
    primal outputs, so the networks imitate exactly one local step.
    Scenario s draws its loads with seed + s.
    """
    if mode not in SETUPS:
        raise ValueError(f"unknown mode {mode!r}; expected one of {SETUPS}")
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    dims = setup_dims(mode, spec.n_agents, spec.n_loads, spec.n_gens)
    provenance = {
        "mode": mode,
        "seed": seed,
        "n_samples": n_samples,
        "rho": settings.rho,
        "tol": settings.tol,
        "max_iter": settings.max_iter,
        "fluctuation": settings.fluctuation,
        "n_agents": spec.n_agents,
    }
    inputs: list[np.ndarray] = []
    targets: list[np.ndarray] = []
    agent_ids: list[int] = []

    for s in range(n_samples):
        loads = sample_loads(spec, settings.fluctuation, seed + s)
        if mode == "centralized":
            solution = solve_centralized(spec, loads)
            inputs.append(loads.values.ravel().copy())
            targets.append(centralized_target(solution))
            continue
        try:
            if mode == "distributed":
                def observe(k, lam, snapshot, pg_next, po_next):
                    for i in range(spec.n_agents):
                        rest = _others(spec.n_agents, i)
                        inputs.append(distributed_input(loads.values[i], lam, snapshot[rest]))
                        targets.append(np.concatenate([[po_next[i]], pg_next[i]]))
                        agent_ids.append(i)

                run_distributed(
                    spec, loads, rho=settings.rho, tol=settings.tol,
                    max_iter=settings.max_iter, observer=observe,
                )
            else:
                def observe(k, lam_pair, copies, snapshot, pg_next, po_next, copies_next):
                    for i in range(spec.n_agents):
                        rest = _others(spec.n_agents, i)
                        inputs.append(
                            decentralized_input(
                                loads.values[i], lam_pair[rest, i], snapshot[rest],
                                copies[rest, i],
                            )
                        )
                        targets.append(
                            np.concatenate([[po_next[i]], pg_next[i], copies_next[i, rest]])
                        )
                        agent_ids.append(i)

                run_decentralized(
                    spec, loads, rho=settings.rho, tol=settings.tol,
                    max_iter=settings.max_iter, observer=observe,
                )
        except NonConvergedError as exc:
            raise SolverFailedError(
                f"{mode} labeling run for scenario {s} did not converge: {exc}"
            ) from exc

    input_arr = (
        np.array(inputs) if inputs else np.zeros((0, dims.in_dim))
    )
    target_arr = (
        np.array(targets) if targets else np.zeros((0, dims.out_dim))
    )
    ids = None
    if mode != "centralized":
        ids = np.array(agent_ids, dtype=int) if agent_ids else np.zeros(0, dtype=int)
    return ImitationDataset(
        mode=mode, inputs=input_arr, targets=target_arr, agent_ids=ids,
        provenance=provenance,
    )


def _dataset_headers(mode: str, dims: SetupDims) -> tuple[list[str], list[str]]:
    slots = dims.n_agents - 1
    if mode == "centralized":
        ins = [
            f"load_a{i}_d{d}" for i in range(dims.n_agents) for d in range(dims.n_loads)
        ]
        outs = []
        for i in range(dims.n_agents):
            outs.append(f"po_a{i}")
            outs.extend(f"pg_a{i}_g{g}" for g in range(dims.n_gens))
        return ins, outs
    ins = [f"load_d{d}" for d in range(dims.n_loads)]
    if mode == "distributed":
        ins += ["price"]
        ins += [f"po_other_{j}" for j in range(slots)]
        outs = ["po"] + [f"pg_g{g}" for g in range(dims.n_gens)]
        return ins, outs
    ins += [f"dual_in_{j}" for j in range(slots)]
    ins += [f"po_other_{j}" for j in range(slots)]
    ins += [f"copy_in_{j}" for j in range(slots)]
    outs = ["po"] + [f"pg_g{g}" for g in range(dims.n_gens)]
    outs += [f"copy_out_{j}" for j in range(slots)]
    return ins, outs


def save_dataset(dataset: ImitationDataset, path, spec: CommunitySpec) -> None:
    """CSV with one row per sample, named feature columns then targets."""
    dims = setup_dims(dataset.mode, spec.n_agents, spec.n_loads, spec.n_gens)
    in_names, out_names = _dataset_headers(dataset.mode, dims)
    header = (["agent"] if dataset.agent_ids is not None else []) + in_names + out_names
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in range(dataset.n_rows):
            row: list[str] = []
            if dataset.agent_ids is not None:
                row.append(str(int(dataset.agent_ids[r])))
            row.extend(f"{v:.17g}" for v in dataset.inputs[r])
            row.extend(f"{v:.17g}" for v in dataset.targets[r])
            writer.writerow(row)


def load_dataset(path, spec: CommunitySpec, mode: str) -> ImitationDataset:
    """Read back a dataset CSV written by save_dataset; exact round trip."""
    dims = setup_dims(mode, spec.n_agents, spec.n_loads, spec.n_gens)
    in_names, out_names = _dataset_headers(mode, dims)
    has_agent = mode != "centralized"
    expected = (["agent"] if has_agent else []) + in_names + out_names
    with Path(path).open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise DimensionMismatchError(
                f"dataset header does not match {mode} layout for this community"
            )
        inputs, targets, ids = [], [], []
        offset = 1 if has_agent else 0
        for record in reader:
            if not record:
                continue
            if has_agent:
                ids.append(int(record[0]))
            values = [float(v) for v in record[offset:]]
            inputs.append(values[: dims.in_dim])
            targets.append(values[dims.in_dim:])
    return ImitationDataset(
        mode=mode,
        inputs=np.array(inputs) if inputs else np.zeros((0, dims.in_dim)),
        targets=np.array(targets) if targets else np.zeros((0, dims.out_dim)),
        agent_ids=(np.array(ids, dtype=int) if ids else np.zeros(0, dtype=int)) if has_agent else None,
        provenance={"mode": mode, "source": str(path)},
    )


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainSettings:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 0.01
    seed: int = 0


def _sgd_epoch(net: MlpSurrogate, x: np.ndarray, y: np.ndarray, order: np.ndarray,
               lr: float, batch_size: int) -> float:
    losses = []
    for start in range(0, order.size, batch_size):
        idx = order[start:start + batch_size]
        xb = x[idx]
        yb = y[idx]
        z1 = xb @ net.w1 + net.b1
        h = np.maximum(z1, 0.0)
        pred = h @ net.w2 + net.b2
        err = pred - yb
        losses.append(float(np.mean(err * err)))
        scale = 2.0 / err.size
        g_out = scale * err
        g_w2 = h.T @ g_out
        g_b2 = g_out.sum(axis=0)
        g_h = g_out @ net.w2.T
        g_z1 = g_h * (z1 > 0.0)
        g_w1 = xb.T @ g_z1
        g_b1 = g_z1.sum(axis=0)
        net.w1 -= lr * g_w1
        net.b1 -= lr * g_b1
        net.w2 -= lr * g_w2
        net.b2 -= lr * g_b2
    return float(np.mean(losses)) if losses else float("nan")


def mse_gradients(net: MlpSurrogate, x: np.ndarray, y: np.ndarray):
    """Gradients of mean squared error over a batch, without updating.

    Returned in parameter order (w1, b1, w2, b2); exposed so the training
    step stays checkable against finite differences.
    """
    z1 = x @ net.w1 + net.b1
    h = np.maximum(z1, 0.0)
    err = h @ net.w2 + net.b2 - y
    scale = 2.0 / err.size
    g_out = scale * err
    g_w2 = h.T @ g_out
    g_b2 = g_out.sum(axis=0)
    g_z1 = (g_out @ net.w2.T) * (z1 > 0.0)
    g_w1 = x.T @ g_z1
    g_b1 = g_z1.sum(axis=0)
    return g_w1, g_b1, g_w2, g_b2


def train(nets, dataset: ImitationDataset, settings: TrainSettings = TrainSettings()) -> np.ndarray:
    """Mini-batch gradient descent on MSE; deterministic given the seed.

    ``nets`` is one network (centralized) or the per-agent list; per-agent
    networks train only on their own rows.  Returns the loss history, shape
    (epochs, n_networks), mean batch MSE per epoch.
    """
    net_list = [nets] if isinstance(nets, MlpSurrogate) else list(nets)
    if not net_list:
        raise DimensionMismatchError("no networks to train")
    if dataset.inputs.shape[1] != net_list[0].in_dim:
        raise DimensionMismatchError(
            f"dataset input width {dataset.inputs.shape[1]} does not match "
            f"network input {net_list[0].in_dim}"
        )
    if dataset.targets.shape[1] != net_list[0].out_dim:
        raise DimensionMismatchError(
            f"dataset target width {dataset.targets.shape[1]} does not match "
            f"network output {net_list[0].out_dim}"
        )
    if len(net_list) > 1 and dataset.agent_ids is None:
        raise DimensionMismatchError("per-agent training needs dataset agent_ids")

    history = np.full((settings.epochs, len(net_list)), np.nan)
    for n_idx, net in enumerate(net_list):
        if len(net_list) == 1 and dataset.agent_ids is None:
            x, y = dataset.inputs, dataset.targets
        else:
            rows = np.flatnonzero(dataset.agent_ids == n_idx)
            x, y = dataset.inputs[rows], dataset.targets[rows]
        if x.shape[0] == 0:
            continue
        rng = np.random.default_rng(np.random.SeedSequence(entropy=[settings.seed, n_idx]))
        for epoch in range(settings.epochs):
            order = rng.permutation(x.shape[0])
            history[epoch, n_idx] = _sgd_epoch(
                net, x, y, order, settings.learning_rate, settings.batch_size
            )
    return history


# ---------------------------------------------------------------------------
# inference


@dataclass(eq=False)
class ViolationReport:
    """How far a proposal strays from feasibility; nothing is clipped."""

    box_violation_max: float
    box_violation_sum: float
    identity_residual_max: float
    balance_residual: float


@dataclass(eq=False)
class InferenceResult:
    solution: DispatchSolution
    report: ViolationReport
    copies: np.ndarray | None = None


def _net_list_for(setup: str, nets, dims: SetupDims) -> list[MlpSurrogate]:
    net_list = [nets] if isinstance(nets, MlpSurrogate) else list(nets)
    if len(net_list) != dims.network_count:
        raise DimensionMismatchError(
            f"{setup} needs {dims.network_count} network(s), got {len(net_list)}"
        )
    for net in net_list:
        if net.in_dim != dims.in_dim or net.out_dim != dims.out_dim:
            raise DimensionMismatchError(
                f"network dims ({net.in_dim}, {net.out_dim}) do not match "
                f"{setup} dims ({dims.in_dim}, {dims.out_dim})"
            )
    return net_list


def infer_dispatch(setup: str, nets, inputs, spec: CommunitySpec) -> InferenceResult:
    """Assemble network outputs into a dispatch proposal plus violations.

    ``inputs`` is the centralized input vector, or the per-agent list of
    input vectors laid out as the module docstring describes.  The proposal
    keeps the networks' raw numbers: p_o comes from the network, not from
    the injection identity, and the report carries the identity residual,
    box violations, and the community balance residual.
    """
    dims = setup_dims(setup, spec.n_agents, spec.n_loads, spec.n_gens)
    net_list = _net_list_for(setup, nets, dims)
    n_a, n_g, n_d = spec.n_agents, spec.n_gens, spec.n_loads

    p_g = np.zeros((n_a, n_g))
    p_o = np.zeros(n_a)
    copies = None
    loads_mat = np.zeros((n_a, n_d))
    if setup == "centralized":
        x = np.asarray(inputs, dtype=float).ravel()
        y = forward(net_list[0], x)
        loads_mat = x.reshape(n_a, n_d)
        block = n_g + 1
        for i in range(n_a):
            p_o[i] = y[i * block]
            p_g[i] = y[i * block + 1:(i + 1) * block]
    else:
        if len(inputs) != n_a:
            raise DimensionMismatchError(f"expected {n_a} input vectors, got {len(inputs)}")
        if setup == "decentralized":
            copies = np.zeros((n_a, n_a))
        for i in range(n_a):
            x = np.asarray(inputs[i], dtype=float).ravel()
            y = forward(net_list[i], x)
            loads_mat[i] = x[:n_d]
            p_o[i] = y[0]
            p_g[i] = y[1:1 + n_g]
            if setup == "decentralized":
                rest = _others(n_a, i)
                copies[i, rest] = y[1 + n_g:]

    _, _, _, p_max = spec.cost_arrays()
    over = np.maximum(p_g - p_max, 0.0)
    under = np.maximum(-p_g, 0.0)
    identity = np.abs(p_o - (p_g.sum(axis=1) - loads_mat.sum(axis=1)))
    report = ViolationReport(
        box_violation_max=float(np.max(np.maximum(over, under))),
        box_violation_sum=float(np.sum(over) + np.sum(under)),
        identity_residual_max=float(np.max(identity)),
        balance_residual=abs(float(np.sum(p_o))),
    )
    solution = DispatchSolution(
        p_g=p_g,
        p_o=p_o,
        objective=community_objective(spec, p_g),
        balance_residual=report.balance_residual,
    )
    return InferenceResult(solution=solution, report=report, copies=copies)


def run_surrogate_rounds(
    spec: CommunitySpec,
    setup: str,
    nets,
    loads,
    rounds: int = 1,
    rho: float = 1.0,
) -> tuple[InferenceResult, int]:
    """Run the deployment loop: network calls plus exact dual arithmetic.

    Multi-agent setups start cold (prices, snapshots and copies at zero) and
    after every round update the duals with the same recurrences the solvers
    use, feeding the next round's inputs.  Returns the last round's
    inference result and the number of network calls made.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    dims = setup_dims(setup, spec.n_agents, spec.n_loads, spec.n_gens)
    net_list = _net_list_for(setup, nets, dims)
    values = loads.values if isinstance(loads, LoadSample) else np.asarray(loads, dtype=float)
    n = spec.n_agents
    calls = 0

    if setup == "centralized":
        result = None
        for _ in range(rounds):
            result = infer_dispatch(setup, net_list[0], values.ravel(), spec)
            calls += 1
        return result, calls

    lam = 0.0
    lam_pair = np.zeros((n, n))
    po = np.zeros(n)
    copies = np.zeros((n, n))
    result = None
    for _ in range(rounds):
        if setup == "distributed":
            inputs = [
                distributed_input(values[i], lam, po[_others(n, i)]) for i in range(n)
            ]
        else:
            inputs = [
                decentralized_input(
                    values[i],
                    lam_pair[_others(n, i), i],
                    po[_others(n, i)],
                    copies[_others(n, i), i],
                )
                for i in range(n)
            ]
        result = infer_dispatch(setup, net_list, inputs, spec)
        calls += n
        po = result.solution.p_o
        if setup == "distributed":
            lam = dual_update_distributed(lam, rho, float(np.sum(po)))
        else:
            copies = result.copies
            lam_pair = lam_pair + rho * (copies - po[None, :])
            np.fill_diagonal(lam_pair, 0.0)
    return result, calls
