"""Exhaustive enumeration oracle for walk pairs and their weighted sums.

This module computes the coefficients n_{k,m} the slow, direct way: generate
every admissible pair of closed walks, keep the essential ones, and add up
their weights.  It exists to cross-check the recurrence engine, so it shares
nothing with it beyond the family catalog and the edge weights.

Walks and minimality
--------------------
A vertex is encoded as a signed integer: +j is the j-th vertex of part 1, -j
the j-th vertex of part 2.  Steps alternate parts, so a closed walk has even
length.  A walk of half-length l is stored as a tuple of 2l + 1 vertices whose
first and last entries coincide; the empty walk at a vertex x is the 1-tuple
(x,).

Walk pairs are counted up to relabeling within each part, so exactly one
*minimal* representative per orbit is enumerated: scanning the gray walk and
then the blue walk, every first visit to a new vertex must use the smallest
label not yet used in its part.  The gray root is therefore +1 or -1.  The
blue root may be any vertex the gray walk used, or a brand-new vertex, which
then takes the smallest unused label of its part (either part is allowed).

Weights
-------
For a pair with tree skeleton the weight is

    alpha1^{|V_1|} * alpha2^{|V_2|} * prod_e edge_factor(n(e))

where n(e) counts traversals of edge e by both walks together.  A closed walk
system on a tree covers each edge an even number of times, so every factor is
one of the stored even moments.  A pair is *essential* when its skeleton is a
tree and at least one edge is used by both walks; n_{k,m} is the weight sum
over essential pairs of half-lengths (k/2, m/2), and vanishes for odd k or m.

Families are evaluated by filtering the same enumeration through the
predicates of :mod:`bipcorr.families`.  Enumeration order is deterministic:
depth-first, visiting existing labels in increasing order before a new one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, NamedTuple, Optional

from . import families as fam
from .model import ModelParams, MomentSequence, edge_factor

Vertex = int
ClosedWalk = tuple


class DoubleWalk(NamedTuple):
    gray: ClosedWalk
    blue: ClosedWalk


def vertex_part(v: Vertex) -> int:
    return 1 if v > 0 else 2


def vertex_label(v: Vertex) -> int:
    return abs(v)


def format_walk(walk: ClosedWalk) -> str:
    return " ".join(f"{vertex_part(v)}:{vertex_label(v)}" for v in walk)


def format_double_walk(dw: DoubleWalk) -> str:
    return f"{format_walk(dw.gray)} | {format_walk(dw.blue)}"


def parse_walk(text: str) -> ClosedWalk:
    out = []
    for token in text.split():
        part_text, _, label_text = token.partition(":")
        part, label = int(part_text), int(label_text)
        if part not in (1, 2) or label < 1:
            raise ValueError(f"bad vertex token {token!r}")
        out.append(label if part == 1 else -label)
    return tuple(out)


def parse_double_walk(text: str) -> DoubleWalk:
    gray_text, sep, blue_text = text.partition("|")
    if not sep:
        raise ValueError("double walk text needs a '|' separator")
    return DoubleWalk(parse_walk(gray_text), parse_walk(blue_text))


# ---------------------------------------------------------------------------
# Enumeration


def _extend(walk: list, n1: int, n2: int, remaining: int, root: Vertex) -> Iterator:
    """Yield (walk, n1, n2) for all minimal closed continuations of ``walk``.

    ``n1``/``n2`` count the labels already in use per part.  The walk list is
    mutated in place; yielded walks are materialized tuples.
    """
    if remaining == 0:
        if walk[-1] == root:
            yield tuple(walk), n1, n2
        return
    cur = walk[-1]
    if remaining == 1:
        # Last step must close the walk, so it must reach the root, and the
        # root must lie in the opposite part (fails for odd-length walks).
        if (cur > 0) != (root > 0):
            walk.append(root)
            yield tuple(walk), n1, n2
            walk.pop()
        return
    if cur > 0:
        for lab in range(1, n2 + 1):
            walk.append(-lab)
            yield from _extend(walk, n1, n2, remaining - 1, root)
            walk.pop()
        walk.append(-(n2 + 1))
        yield from _extend(walk, n1, n2 + 1, remaining - 1, root)
        walk.pop()
    else:
        for lab in range(1, n1 + 1):
            walk.append(lab)
            yield from _extend(walk, n1, n2, remaining - 1, root)
            walk.pop()
        walk.append(n1 + 1)
        yield from _extend(walk, n1 + 1, n2, remaining - 1, root)
        walk.pop()


def _root_walks(root_component: int, length: int) -> Iterator:
    root = 1 if root_component == 1 else -1
    n1, n2 = (1, 0) if root_component == 1 else (0, 1)
    yield from _extend([root], n1, n2, length, root)


def iter_minimal_walks(half_length: int, root_component: int) -> Iterator[ClosedWalk]:
    """Minimal closed walks of ``half_length`` steps out and back."""
    if root_component not in (1, 2):
        raise ValueError("root_component must be 1 or 2")
    for walk, _, _ in _root_walks(root_component, 2 * half_length):
        yield walk


def enumerate_minimal_walks(half_length: int, root_component: int) -> list:
    return list(iter_minimal_walks(half_length, root_component))


def iter_minimal_double_walks(k: int, m: int) -> Iterator[DoubleWalk]:
    """Minimal walk pairs with gray length k and blue length m.

    The gray root ranges over both parts; blue roots over used vertices first
    (part 1 ascending, then part 2 ascending), then a fresh vertex in part 1,
    then a fresh vertex in part 2.
    """
    if k < 0 or m < 0:
        raise ValueError("walk lengths must be >= 0")
    for root_component in (1, 2):
        for gray, g1, g2 in _root_walks(root_component, k):
            for blue_root in range(1, g1 + 1):
                for blue, _, _ in _extend([blue_root], g1, g2, m, blue_root):
                    yield DoubleWalk(gray, blue)
            for lab in range(1, g2 + 1):
                for blue, _, _ in _extend([-lab], g1, g2, m, -lab):
                    yield DoubleWalk(gray, blue)
            for blue, _, _ in _extend([g1 + 1], g1 + 1, g2, m, g1 + 1):
                yield DoubleWalk(gray, blue)
            for blue, _, _ in _extend([-(g2 + 1)], g1, g2 + 1, m, -(g2 + 1)):
                yield DoubleWalk(gray, blue)


def enumerate_minimal_double_walks(k: int, m: int) -> list:
    return list(iter_minimal_double_walks(k, m))


def canonicalize(dw: DoubleWalk) -> DoubleWalk:
    """Relabel a walk pair into its minimal representative."""
    mapping: dict = {}
    counts = [0, 0, 0]  # index by part
    def relab(v: Vertex) -> Vertex:
        new = mapping.get(v)
        if new is None:
            part = vertex_part(v)
            counts[part] += 1
            new = counts[part] if part == 1 else -counts[part]
            mapping[v] = new
        return new

    gray = tuple(relab(v) for v in dw.gray)
    blue = tuple(relab(v) for v in dw.blue)
    return DoubleWalk(gray, blue)


def is_minimal(dw: DoubleWalk) -> bool:
    return canonicalize(dw) == dw


# ---------------------------------------------------------------------------
# Skeletons and weights


def _edge(a: Vertex, b: Vertex):
    return (a, b) if a < b else (b, a)


@dataclass
class Skeleton:
    """Undirected multigraph left by forgetting traversal order.

    ``edges`` maps an edge (as a sorted vertex pair) to its (gray, blue)
    traversal counts.  ``c`` is the number of edges used by both walks.
    """

    part1_count: int
    part2_count: int
    edges: dict
    c: int
    is_tree: bool

    def multiplicity(self, a: Vertex, b: Vertex) -> int:
        gray, blue = self.edges.get(_edge(a, b), (0, 0))
        return gray + blue

    def edge_totals(self) -> list:
        return [g + b for g, b in self.edges.values()]


def skeleton(dw: DoubleWalk) -> Skeleton:
    edges: dict = {}
    for seq, slot in ((dw.gray, 0), (dw.blue, 1)):
        for i in range(len(seq) - 1):
            key = _edge(seq[i], seq[i + 1])
            counts = edges.setdefault(key, [0, 0])
            counts[slot] += 1
    vertices = set(dw.gray) | set(dw.blue)
    shared = sum(1 for g, b in edges.values() if g > 0 and b > 0)

    # A tree has |V| = |E| + 1 and is connected; isolated vertices (an empty
    # or disjoint blue walk) break connectivity.
    is_tree = len(vertices) == len(edges) + 1 and _is_connected(vertices, edges)
    return Skeleton(
        part1_count=sum(1 for v in vertices if v > 0),
        part2_count=sum(1 for v in vertices if v < 0),
        edges={key: (g, b) for key, (g, b) in edges.items()},
        c=shared,
        is_tree=is_tree,
    )


def _is_connected(vertices: set, edges: dict) -> bool:
    if not vertices:
        return True
    adjacency: dict = {v: [] for v in vertices}
    for a, b in edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    seen = set()
    stack = [next(iter(vertices))]
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        stack.extend(adjacency[v])
    return len(seen) == len(vertices)


def is_essential(dw: DoubleWalk) -> bool:
    sk = skeleton(dw)
    return sk.is_tree and sk.c > 0


def walk_weight(dw: DoubleWalk, params: ModelParams, moments: MomentSequence) -> Fraction:
    """Weight of a tree-skeleton walk pair."""
    sk = skeleton(dw)
    if not sk.is_tree:
        raise ValueError(f"walk pair has a non-tree skeleton: {format_double_walk(dw)}")
    return _profile_weight(_profile_of(sk), params, moments)


# A profile is the part of a skeleton the weight depends on: vertex counts per
# part plus the sorted edge multiplicities.  Many walks share one profile, so
# censuses store (profile, count) pairs instead of walks.


def _profile_of(sk: Skeleton):
    return (sk.part1_count, sk.part2_count, tuple(sorted(sk.edge_totals())))


def _profile_weight(profile, params: ModelParams, moments: MomentSequence) -> Fraction:
    p1, p2, totals = profile
    weight = params.alpha1**p1 * params.alpha2**p2
    for total in totals:
        weight *= edge_factor(moments, params, total)
    return weight


# ---------------------------------------------------------------------------
# Census and coefficient


def census(k: int, m: int):
    """(minimal pair count, essential pair count) at lengths (k, m)."""
    minimal, essential = _essential_profiles(k, m)
    return minimal, sum(count for _, count in essential)


@lru_cache(maxsize=None)
def _essential_profiles(k: int, m: int):
    minimal = 0
    profiles: dict = {}
    for dw in iter_minimal_double_walks(k, m):
        minimal += 1
        sk = skeleton(dw)
        if sk.is_tree and sk.c > 0:
            profile = _profile_of(sk)
            profiles[profile] = profiles.get(profile, 0) + 1
    return minimal, tuple(sorted(profiles.items()))


def n_oracle(k: int, m: int, params: ModelParams, moments: MomentSequence) -> Fraction:
    """Coefficient n_{k,m} by direct enumeration."""
    if k < 1 or m < 1:
        raise ValueError(f"need k, m >= 1, got ({k}, {m})")
    if k % 2 != 0 or m % 2 != 0:
        return Fraction(0)
    _, profiles = _essential_profiles(k, m)
    total = Fraction(0)
    for profile, count in profiles:
        total += count * _profile_weight(profile, params, moments)
    return total


# ---------------------------------------------------------------------------
# Families


def _root_departures(walk: ClosedWalk, r: Vertex) -> int:
    return sum(1 for i in range(len(walk) - 1) if walk[i] == r)


def _upper_vertices(sk: Skeleton, r: Vertex, v: Vertex) -> set:
    """Vertices on the v side of the tree once edge (r, v) is removed."""
    cut = _edge(r, v)
    adjacency: dict = {}
    for a, b in sk.edges:
        if (a, b) == cut:
            continue
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, []).append(a)
    seen = {v}
    stack = [v]
    while stack:
        x = stack.pop()
        for y in adjacency.get(x, ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


def _memberships(dw: DoubleWalk, sk: Skeleton):
    """All (tag, component, r_g, r_b) family slots a tree-skeleton pair fills."""
    r = dw.gray[0]
    component = vertex_part(r)
    r_g = _root_departures(dw.gray, r)
    r_b = _root_departures(dw.blue, r)
    blue_root = dw.blue[0]
    roots_equal = blue_root == r
    shared = sk.c > 0
    tags = []
    if roots_equal:
        tags.append(fam.EQ_ANYC)
        if shared:
            tags.append(fam.EQ_C)
    else:
        if shared:
            tags.append(fam.NEQ_C)
        if r in dw.blue:
            tags.append(fam.NEQ_ANYC_S)
            if len(dw.gray) == 1:
                tags.append(fam.NEQ_ANYC_SN)

    if len(dw.gray) > 1:
        v = dw.gray[1]
        blue_uses_cut = sk.edges[_edge(r, v)][1] > 0
        if fam.EQ_C in tags:
            tags.append(fam.EQ_C_R if blue_uses_cut else fam.EQ_C_G)
        if fam.NEQ_ANYC_S in tags and not blue_uses_cut:
            tags.append(fam.NEQ_ANYC_SGD)
        if fam.NEQ_C in tags:
            in_upper = blue_root in _upper_vertices(sk, r, v)
            if blue_uses_cut:
                tags.append(fam.NEQ_C_R)
                tags.append(fam.NEQ_C_RU if in_upper else fam.NEQ_C_RD)
            else:
                tags.append(fam.NEQ_C_G)
                tags.append(fam.NEQ_C_GU if in_upper else fam.NEQ_C_GD)
    return [(tag, component, r_g, r_b) for tag in tags]


@lru_cache(maxsize=None)
def _double_family_profiles(l_g: int, l_b: int):
    """Map (tag, component, r_g, r_b) -> ((profile, count), ...) at (l_g, l_b)."""
    buckets: dict = {}
    for dw in iter_minimal_double_walks(2 * l_g, 2 * l_b):
        sk = skeleton(dw)
        if not sk.is_tree:
            continue
        profile = _profile_of(sk)
        for slot in _memberships(dw, sk):
            bucket = buckets.setdefault(slot, {})
            bucket[profile] = bucket.get(profile, 0) + 1
    return {
        slot: tuple(sorted(bucket.items()))
        for slot, bucket in sorted(buckets.items())
    }


@lru_cache(maxsize=None)
def _single_family_profiles(l: int):
    """Map (component, r) -> ((profile, count), ...) for tree single walks."""
    buckets: dict = {}
    for component in (1, 2):
        for walk in iter_minimal_walks(l, component):
            dw = DoubleWalk(walk, (walk[0],))
            sk = skeleton(dw)
            if not sk.is_tree:
                continue
            slot = (component, _root_departures(walk, walk[0]))
            bucket = buckets.setdefault(slot, {})
            profile = _profile_of(sk)
            bucket[profile] = bucket.get(profile, 0) + 1
    return {
        slot: tuple(sorted(bucket.items()))
        for slot, bucket in sorted(buckets.items())
    }


def family_members(key: fam.FamilyKey) -> list:
    """Every walk (pair) in a family, as explicit walks.

    Returns ``ClosedWalk`` items for ``S1`` and ``DoubleWalk`` items
    otherwise (``S1S`` members have the empty gray walk at the root).
    Intended for inspection and golden tests; the weighted sums below use the
    cached profile censuses instead.
    """
    fam.validate_key(key)
    if key.tag == fam.S1:
        out = []
        for walk in iter_minimal_walks(key.l_g, key.component):
            dw = DoubleWalk(walk, (walk[0],))
            if skeleton(dw).is_tree and _root_departures(walk, walk[0]) == key.r_g:
                out.append(walk)
        return out
    if key.tag == fam.S1S:
        slot = (fam.NEQ_ANYC_SN, key.component, 0, key.r_g)
        pairs = iter_minimal_double_walks(0, 2 * key.l_g)
    elif key.tag == fam.TOP:
        return [dw for dw in iter_minimal_double_walks(2 * key.l_g, 2 * key.l_b) if is_essential(dw)]
    else:
        slot = (key.tag, key.component, key.r_g, key.r_b)
        pairs = iter_minimal_double_walks(2 * key.l_g, 2 * key.l_b)
    out = []
    for dw in pairs:
        sk = skeleton(dw)
        if sk.is_tree and slot in _memberships(dw, sk):
            out.append(dw)
    return out


def family_total_weight(
    key: fam.FamilyKey, params: ModelParams, moments: MomentSequence
) -> Fraction:
    """Weight sum over a family, from the cached profile census."""
    fam.validate_key(key)
    if key.tag == fam.TOP:
        if key.l_g == 0 or key.l_b == 0:
            return Fraction(0)
        return n_oracle(2 * key.l_g, 2 * key.l_b, params, moments)
    if key.tag == fam.S1:
        profiles = _single_family_profiles(key.l_g).get((key.component, key.r_g), ())
    elif key.tag == fam.S1S:
        profiles = _double_family_profiles(0, key.l_g).get(
            (fam.NEQ_ANYC_SN, key.component, 0, key.r_g), ()
        )
    else:
        profiles = _double_family_profiles(key.l_g, key.l_b).get(
            (key.tag, key.component, key.r_g, key.r_b), ()
        )
    total = Fraction(0)
    for profile, count in profiles:
        total += count * _profile_weight(profile, params, moments)
    return total
