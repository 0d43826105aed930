"""Align explainer effects with model effects and score the alignment.

Model and explainer effects are the two vertex sides of a bipartite graph,
with an edge wherever two effects share a feature. Each connected component
is a group whose contributions are compared as sums. A component in which
every vertex has an identical counterpart on the other side is split into
one group per distinct feature set.
"""
from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Sequence

__all__ = ["MatchGroup", "MatchResult", "bipartite_edges", "connected_components",
           "match_effects", "maiou", "iou"]


@dataclass(frozen=True)
class MatchGroup:
    model: tuple[int, ...]
    explainer: tuple[int, ...]


@dataclass(frozen=True)
class MatchResult:
    groups: tuple[MatchGroup, ...]
    edges: tuple[tuple[int, int], ...]
    maiou: float

    def to_dict(self) -> dict:
        return {"groups": [{"model": list(g.model), "explainer": list(g.explainer)}
                           for g in self.groups],
                "maiou": self.maiou}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def iou(a, b) -> float:
    a, b = set(a), set(b)
    return len(a & b) / len(a | b)


def bipartite_edges(model_effects, explainer_effects) -> list[tuple[int, int]]:
    left = [frozenset(e) for e in model_effects]
    right = [frozenset(e) for e in explainer_effects]
    return [(j, k) for j, a in enumerate(left) for k, b in enumerate(right)
            if not a.isdisjoint(b)]


def _group_key(g: MatchGroup):
    return (0, min(g.model)) if g.model else (1, min(g.explainer))


def connected_components(model_effects, explainer_effects, edges=None) -> list[MatchGroup]:
    """Connected components of the effect graph, isolated vertices included."""
    if edges is None:
        edges = bipartite_edges(model_effects, explainer_effects)
    m = len(model_effects)
    adj = defaultdict(list)
    for j, k in edges:
        adj[j].append(m + k)
        adj[m + k].append(j)
    seen = [False] * (m + len(explainer_effects))
    groups = []
    for start in range(len(seen)):
        if seen[start]:
            continue
        seen[start] = True
        queue, members = deque([start]), []
        while queue:
            v = queue.popleft()
            members.append(v)
            for u in adj[v]:
                if not seen[u]:
                    seen[u] = True
                    queue.append(u)
        groups.append(MatchGroup(tuple(sorted(v for v in members if v < m)),
                                 tuple(sorted(v - m for v in members if v >= m))))
    return sorted(groups, key=_group_key)


def _split_exact(group: MatchGroup, left, right) -> list[MatchGroup]:
    by_set = defaultdict(lambda: ([], []))
    for j in group.model:
        by_set[left[j]][0].append(j)
    for k in group.explainer:
        by_set[right[k]][1].append(k)
    if len(by_set) < 2 or any(not a or not b for a, b in by_set.values()):
        return [group]
    return [MatchGroup(tuple(a), tuple(b)) for a, b in by_set.values()]


def match_effects(model_effects: Sequence, explainer_effects: Sequence,
                  split: bool = True) -> MatchResult:
    left = [frozenset(e) for e in model_effects]
    right = [frozenset(e) for e in explainer_effects]
    if any(not s for s in left + right):
        raise ValueError("effects must have at least one feature")
    edges = bipartite_edges(left, right)
    groups = connected_components(left, right, edges)
    if split:
        groups = sorted((g for comp in groups for g in _split_exact(comp, left, right)),
                        key=_group_key)
    where = {}
    for c, g in enumerate(groups):
        for j in g.model:
            where[j] = c
    kept = tuple((j, k) for j, k in edges if k in groups[where[j]].explainer)
    result = MatchResult(tuple(groups), kept, 0.0)
    return MatchResult(result.groups, kept, maiou(result, left, right))


def maiou(result: MatchResult, model_effects, explainer_effects) -> float:
    """Mean over groups of the average IoU of each group's edges.

    Groups without edges (one-sided groups) contribute zero.
    """
    if not result.groups:
        return 0.0
    per_group = defaultdict(list)
    where = {j: c for c, g in enumerate(result.groups) for j in g.model}
    for j, k in result.edges:
        per_group[where[j]].append(iou(model_effects[j], explainer_effects[k]))
    total = 0.0
    for c in range(len(result.groups)):
        scores = per_group.get(c)
        if scores:
            total += sum(scores) / len(scores)
    return total / len(result.groups)
