"""Follower graph construction and influencer scoring.

The community is whatever the input edge file delivers; an author's
influencer score is their in-degree inside that graph (how many community
members follow them), and the top tier is everyone strictly above the
follower threshold.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .data_ingest import FollowEdge

DEFAULT_INFLUENCER_THRESHOLD = 100


@dataclass(frozen=True)
class CommunityGraph:
    """Directed follower graph: an edge (a, b) means a follows b."""

    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]


def build_graph(edges: Iterable[FollowEdge | tuple[str, str]]) -> CommunityGraph:
    """Build the community graph from follower edges, deduplicating pairs.

    Self-loop edges are rejected: an author cannot follow themselves.
    """
    edge_set: set[tuple[str, str]] = set()
    nodes: set[str] = set()
    for edge in edges:
        follower, followee = (edge.follower, edge.followee) \
            if isinstance(edge, FollowEdge) else (edge[0], edge[1])
        if follower == followee:
            raise ValueError(f"self-loop edge rejected: {follower!r}")
        edge_set.add((follower, followee))
        nodes.add(follower)
        nodes.add(followee)
    return CommunityGraph(nodes=frozenset(nodes), edges=frozenset(edge_set))


def influencer_scores(graph: CommunityGraph) -> dict[str, int]:
    """In-community follower count for every node (zero included)."""
    scores = {node: 0 for node in graph.nodes}
    for _, followee in graph.edges:
        scores[followee] += 1
    return scores


def top_influencers(scores: Mapping[str, int],
                    threshold: int = DEFAULT_INFLUENCER_THRESHOLD) -> set[str]:
    """Users with strictly more than ``threshold`` in-community followers."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return {user for user, score in scores.items() if score > threshold}


def write_scores_csv(path: str | Path, scores: Mapping[str, int]) -> None:
    """Dump user_id,score rows sorted by descending score then user id."""
    ordered = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["user_id", "score"])
        writer.writerows(ordered)


def read_scores_csv(path: str | Path) -> dict[str, int]:
    """Read back a score table written by :func:`write_scores_csv`."""
    scores: dict[str, int] = {}
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            scores[row["user_id"]] = int(row["score"])
    return scores
