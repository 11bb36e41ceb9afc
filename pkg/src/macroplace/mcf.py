"""Bipartite assignment by successive shortest paths with node potentials.

solve_assignment returns the minimum-cost perfect matching of all left
items; among optimal matchings it returns the lexicographically smallest
assignment vector (by left index, then right index). Costs must be
nonnegative integers so all comparisons are exact.

assignment_oracle is the independent test oracle: an exhaustive subset
dynamic program that implicitly enumerates every injection.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .model import ValidationError

_INF = float("inf")


class InfeasibleAssignmentError(ValueError):
    """No perfect left-matching exists; ``item`` names an unmatchable left."""

    def __init__(self, item, message=None):
        super().__init__(message or f"no feasible assignment for {item}")
        self.item = item


@dataclass(frozen=True)
class AssignmentProblem:
    left: tuple
    right: tuple
    arcs: tuple[tuple[int, int, int], ...]  # (left idx, right idx, cost)

    def __post_init__(self):
        if len(self.right) < len(self.left):
            raise ValidationError("need at least as many right items as left items")
        seen = set()
        for li, ri, cost in self.arcs:
            if not (0 <= li < len(self.left) and 0 <= ri < len(self.right)):
                raise ValidationError(f"arc ({li}, {ri}) out of range")
            if not isinstance(cost, (int, np.integer)) or cost < 0:
                raise ValidationError(f"arc ({li}, {ri}): cost must be a nonnegative integer")
            seen.add(li)
        for li in range(len(self.left)):
            if li not in seen:
                raise ValidationError(f"left item {self.left[li]} has no arcs")


def _adjacency(problem: AssignmentProblem):
    adj: list[list[tuple[int, int]]] = [[] for _ in problem.left]
    for li, ri, cost in problem.arcs:
        adj[li].append((ri, int(cost)))
    for lst in adj:
        lst.sort()
    return adj


def _ssp(problem: AssignmentProblem, adj):
    """Successive shortest augmenting paths; returns (match_l, match_r,
    pot_l, pot_r) with all reduced costs nonnegative and matched arcs tight."""
    n, m = len(problem.left), len(problem.right)
    pot_l = [0] * n
    pot_r = [0] * m
    match_l = [-1] * n
    match_r = [-1] * m

    for s in range(n):
        dist = [_INF] * m
        parent = [-1] * m  # right we came through (-1: directly from s)
        done = [False] * m
        heap = []
        for r, c in adj[s]:
            d = c - pot_l[s] - pot_r[r]
            if d < dist[r]:
                dist[r] = d
                heapq.heappush(heap, (d, r))
        free = -1
        while heap:
            d, r = heapq.heappop(heap)
            if done[r] or d > dist[r]:
                continue
            done[r] = True
            if match_r[r] == -1:
                free = r
                break
            l2 = match_r[r]
            for r2, c in adj[l2]:
                if done[r2]:
                    continue
                nd = d + c - pot_l[l2] - pot_r[r2]
                if nd < dist[r2]:
                    dist[r2] = nd
                    parent[r2] = r
                    heapq.heappush(heap, (nd, r2))
        if free == -1:
            raise InfeasibleAssignmentError(problem.left[s])
        total = dist[free]
        pot_l[s] += total
        for r in range(m):
            if done[r] and r != free:
                pot_r[r] += dist[r] - total
                pot_l[match_r[r]] += total - dist[r]
        # augment along the parent chain
        r = free
        while r != -1:
            prev = parent[r]
            l2 = match_r[prev] if prev != -1 else s
            match_r[r] = l2
            match_l[l2], r = r, prev
    return match_l, match_r, pot_l, pot_r


def _tarjan_scc(adjacency: list[list[int]], alive: list[bool]) -> list[int]:
    """Iterative Tarjan strongly connected components over live nodes."""
    n_nodes = len(adjacency)
    index = [-1] * n_nodes
    low = [0] * n_nodes
    on_stack = [False] * n_nodes
    comp = [-1] * n_nodes
    stack: list[int] = []
    counter = 0
    n_comp = 0
    for root in range(n_nodes):
        if index[root] != -1 or not alive[root]:
            continue
        work = [(root, 0)]
        while work:
            v, ei = work[-1]
            if ei == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            nbrs = adjacency[v]
            advanced = False
            while ei < len(nbrs):
                w = nbrs[ei]
                ei += 1
                if not alive[w]:
                    continue
                if index[w] == -1:
                    work[-1] = (v, ei)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work[-1] = (v, ei)
            work.pop()
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = n_comp
                    if w == v:
                        break
                n_comp += 1
            if work:
                pv, _ = work[-1]
                low[pv] = min(low[pv], low[v])
    return comp


def _canonical_duals(problem, adj, match_l):
    """Optimal LP duals certifying the found matching: reduced costs
    nonnegative on all arcs, zero on matched arcs, right potentials <= 0
    and exactly 0 on free rights. Found by relaxing the difference
    constraints v_r - v_{M(l)} <= c_lr - c_{l, M(l)} from v = 0."""
    from collections import deque

    n, m = len(problem.left), len(problem.right)
    c_matched = [0] * n
    for l in range(n):
        for r, c in adj[l]:
            if match_l[l] == r:
                c_matched[l] = c
                break
    arcs_by_src: dict[int, list[tuple[int, int]]] = {}
    for l in range(n):
        src = match_l[l]
        lst = arcs_by_src.setdefault(src, [])
        for r, c in adj[l]:
            if r != src:
                lst.append((r, c - c_matched[l]))

    pot_r = [0] * m
    in_queue = [r in arcs_by_src for r in range(m)]
    queue = deque(r for r in range(m) if in_queue[r])
    while queue:
        src = queue.popleft()
        in_queue[src] = False
        base = pot_r[src]
        for r, w in arcs_by_src.get(src, ()):
            if base + w < pot_r[r]:
                pot_r[r] = base + w
                if not in_queue[r] and r in arcs_by_src:
                    in_queue[r] = True
                    queue.append(r)
    pot_l = [c_matched[l] - pot_r[match_l[l]] for l in range(n)]
    return pot_l, pot_r


def _zero_graph(n, m, t_node, adj, match_l, match_r, pot_l, pot_r, alive):
    """Adjacency of the zero-reduced-cost residual graph.

    Nodes: lefts, rights (offset n), and a virtual node pooling free
    rights (potential 0, so its arcs require a zero right potential).
    An unused tight arc (l, r) can enter some optimal matching exactly
    when l and r share a strongly connected component here."""
    adjacency: list[list[int]] = [[] for _ in range(n + m + 1)]
    for l in range(n):
        if not alive[l]:
            continue
        for r, c in adj[l]:
            if match_l[l] != r and alive[n + r] and c - pot_l[l] - pot_r[r] == 0:
                adjacency[l].append(n + r)
    for r in range(m):
        if not alive[n + r]:
            continue
        if match_r[r] != -1:
            adjacency[n + r].append(match_r[r])
            if pot_r[r] == 0:
                adjacency[t_node].append(n + r)
        elif pot_r[r] == 0:
            adjacency[n + r].append(t_node)
    return adjacency


def _lexicographic_refine(problem, adj, match_l, match_r, pot_l, pot_r):
    """Rewire the optimal matching to the lexicographically smallest
    assignment vector (by left index, then right index) using zero-cost
    residual cycles; the total cost is unchanged."""
    n, m = len(problem.left), len(problem.right)
    t_node = n + m
    alive = [True] * (n + m + 1)

    for l in range(n):
        tight_smaller = [
            r
            for r, c in adj[l]
            if r < match_l[l] and alive[n + r] and c - pot_l[l] - pot_r[r] == 0
        ]
        if tight_smaller:
            graph = _zero_graph(n, m, t_node, adj, match_l, match_r, pot_l, pot_r, alive)
            comp = _tarjan_scc(graph, alive)
            for r_new in tight_smaller:  # ascending (adj sorted)
                if comp[l] == comp[n + r_new]:
                    _apply_zero_cycle(l, r_new, n, graph, match_l, match_r)
                    break
        alive[l] = False
        alive[n + match_l[l]] = False
    return match_l


def _apply_zero_cycle(l, r_new, n, graph, match_l, match_r):
    """Flip the matching along a zero-cost residual path r_new ~> l and
    assign l -> r_new."""
    start = n + r_new
    parent = {start: None}
    stack = [start]
    while stack and l not in parent:
        v = stack.pop()
        for w in graph[v]:
            if w not in parent:
                parent[w] = v
                if w == l:
                    break
                stack.append(w)
    assert l in parent, "zero-cost cycle promised by SCC structure not found"

    # rebuild path r_new ~> l from parent pointers, then orient the cycle
    path = [l]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    path.reverse()  # start(=r_new) ... l
    cycle = [l] + path  # l -> r_new -> ... -> l

    rights_on_cycle = [v - n for v in cycle if n <= v < n + len(match_r)]
    for a, b in zip(cycle, cycle[1:]):
        if a < n and n <= b < n + len(match_r):  # add matched pair
            match_l[a] = b - n
            match_r[b - n] = a
    for r in rights_on_cycle:  # rights that lost their left become free
        if match_r[r] != -1 and match_l[match_r[r]] != r:
            match_r[r] = -1


def solve_assignment(problem: AssignmentProblem):
    """Minimum-cost perfect matching of all left items.

    Returns (assignment, total_cost) where assignment maps left index to
    right index. Ties between optimal matchings break to the
    lexicographically smallest assignment vector.
    """
    adj = _adjacency(problem)
    if not problem.left:
        return {}, 0
    match_l, match_r, _, _ = _ssp(problem, adj)
    pot_l, pot_r = _canonical_duals(problem, adj, match_l)
    match_l = _lexicographic_refine(problem, adj, match_l, match_r, pot_l, pot_r)
    total = 0
    for l in range(len(problem.left)):
        for r, c in adj[l]:
            if r == match_l[l]:
                total += c
                break
    return {l: match_l[l] for l in range(len(problem.left))}, total


def assignment_oracle(problem: AssignmentProblem) -> int:
    """Exact optimum by exhaustive subset enumeration (dynamic program
    over used-right masks). Bounded to small instances."""
    n, m = len(problem.left), len(problem.right)
    if n > 9:
        raise ValidationError("oracle bound exceeded: |left| <= 9")
    if m > 20:
        raise ValidationError("oracle bound exceeded: |right| <= 20")
    if n == 0:
        return 0
    adj = _adjacency(problem)
    full = 1 << m
    big = np.iinfo(np.int64).max // 4
    dp = np.full(full, big, dtype=np.int64)
    dp[0] = 0
    masks = np.arange(full)
    for l in range(n):
        ndp = np.full(full, big, dtype=np.int64)
        for r, c in adj[l]:
            bit = 1 << r
            src = masks[(masks & bit) == 0]
            np.minimum.at(ndp, src | bit, dp[src] + c)
        dp = ndp
        if dp.min() >= big:
            raise InfeasibleAssignmentError(problem.left[l], "no perfect matching exists")
    return int(dp.min())
