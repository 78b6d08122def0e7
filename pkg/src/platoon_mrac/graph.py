"""Directed leader-follower communication graphs.

Node 0 is the reference (leader); followers are numbered 1..N.  Row ``i-1``
of the adjacency matrix lists the in-neighbours of follower ``i``, with
column 0 standing for the reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    """Raised when a topology violates one of the structural requirements.

    ``kind`` is one of ``"cycle-detected"``, ``"unreachable-node"``,
    ``"isolated-node"``, ``"unknown-agent"`` or ``"bad-entry"``; ``nodes``
    lists the offending node ids (the cycle, in order, for cycles).
    """

    def __init__(self, kind: str, nodes: list[int], message: str):
        super().__init__(message)
        self.kind = kind
        self.nodes = list(nodes)


@dataclass(frozen=True)
class GraphTopology:
    n_agents: int
    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=int)
        if adj.shape != (self.n_agents, self.n_agents + 1):
            raise ValueError(
                f"adjacency must be {self.n_agents}x{self.n_agents + 1}, got {adj.shape}"
            )
        adj = adj.copy()
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @classmethod
    def from_edges(cls, n_agents: int, edges) -> "GraphTopology":
        """Build from ``(source, target)`` pairs; ``source`` may be 0."""
        adj = np.zeros((n_agents, n_agents + 1), dtype=int)
        for src, dst in edges:
            src, dst = int(src), int(dst)
            if not (1 <= dst <= n_agents) or not (0 <= src <= n_agents):
                raise GraphError("unknown-agent", [src, dst], f"edge {src}->{dst} out of range")
            adj[dst - 1, src] = 1
        return cls(n_agents, adj)

    @classmethod
    def chain(cls, n_agents: int) -> "GraphTopology":
        return cls.from_edges(n_agents, [(k, k + 1) for k in range(n_agents)])

    def a(self, i: int, j: int) -> int:
        return int(self.adjacency[i - 1, j])

    def edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(self.adjacency)
        return sorted((int(c), int(r) + 1) for r, c in zip(rows, cols))


def in_neighbors(topology: GraphTopology, i: int) -> list[int]:
    if not 1 <= i <= topology.n_agents:
        raise GraphError("unknown-agent", [i], f"agent {i} is not a follower id")
    return [int(j) for j in np.flatnonzero(topology.adjacency[i - 1])]


def alpha(topology: GraphTopology, i: int) -> float:
    """Normalisation 1 / (number of in-neighbours of follower ``i``)."""
    deg = len(in_neighbors(topology, i))
    if deg == 0:
        raise GraphError("isolated-node", [i], f"agent {i} has no in-neighbours")
    return 1.0 / deg


def _find_cycle(topology: GraphTopology) -> list[int] | None:
    # Iterative DFS over follower->follower edges; returns the first cycle found.
    n = topology.n_agents
    succ = {j: [] for j in range(1, n + 1)}
    for src, dst in topology.edges():
        if src != 0:
            succ[src].append(dst)
    colour = dict.fromkeys(succ, 0)
    parent: dict[int, int] = {}
    for root in succ:
        if colour[root]:
            continue
        stack = [(root, iter(succ[root]))]
        colour[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[node] = 2
                stack.pop()
            elif colour[nxt] == 0:
                colour[nxt] = 1
                parent[nxt] = node
                stack.append((nxt, iter(succ[nxt])))
            elif colour[nxt] == 1:
                cycle = [node]
                while cycle[-1] != nxt:
                    cycle.append(parent[cycle[-1]])
                return sorted(cycle)
    return None


def evaluation_order(topology: GraphTopology) -> list[int]:
    """Topological order of the followers, ties broken by ascending id.

    Raises :class:`GraphError` for any topology :func:`validate` rejects.
    """
    validate(topology)
    return _topological_order(topology)


def _topological_order(topology: GraphTopology) -> list[int]:
    n = topology.n_agents
    pending = {
        i: {j for j in in_neighbors(topology, i) if j != 0 and j != i}
        for i in range(1, n + 1)
    }
    order: list[int] = []
    ready = sorted(i for i, deps in pending.items() if not deps)
    done: set[int] = set()
    while ready:
        i = ready.pop(0)
        order.append(i)
        done.add(i)
        for k, deps in pending.items():
            if k not in done and k not in ready and i in deps:
                deps.discard(i)
                if not deps:
                    ready.append(k)
        ready.sort()
    if len(order) != n:
        cycle = _find_cycle(topology) or sorted(set(pending) - done)
        raise GraphError("cycle-detected", cycle, f"follower graph contains a cycle through {cycle}")
    return order


def validate(topology: GraphTopology) -> None:
    """Raise :class:`GraphError` unless the topology is usable.

    Checks, in order: 0/1 entries, no self loops, acyclic follower
    subgraph, every follower has an in-neighbour, every follower is
    reachable from the reference.
    """
    adj = topology.adjacency
    if not np.isin(adj, (0, 1)).all():
        bad = sorted({int(r) + 1 for r in np.nonzero(~np.isin(adj, (0, 1)))[0]})
        raise GraphError("bad-entry", bad, "adjacency entries must be 0 or 1")
    for i in range(1, topology.n_agents + 1):
        if adj[i - 1, i]:
            raise GraphError("cycle-detected", [i], f"self loop on agent {i}")
    cycle = _find_cycle(topology)
    if cycle is not None:
        raise GraphError("cycle-detected", cycle, f"follower graph contains a cycle through {cycle}")
    for i in range(1, topology.n_agents + 1):
        if not adj[i - 1].any():
            raise GraphError("isolated-node", [i], f"agent {i} has no in-neighbours")
    reached = {0}
    for i in _topological_order(topology):
        if any(j in reached for j in in_neighbors(topology, i)):
            reached.add(i)
    missing = [i for i in range(1, topology.n_agents + 1) if i not in reached]
    if missing:
        raise GraphError("unreachable-node", missing, f"agents {missing} are not reachable from the reference")
