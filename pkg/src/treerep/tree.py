"""Rooted word model of the (q+1)-regular tree.

A vertex is a finite word of child indices: the first letter ranges over
{1..q+1} (the basepoint has q+1 neighbours), every later letter over
{1..q}.  The empty word is the basepoint.  Adjacency is "extend by one
letter", so the parent of a nonempty word is the word minus its last
letter, and graph distance reduces to longest-common-prefix arithmetic:

    d(u, v) = |u| + |v| - 2 |lcp(u, v)|

The boundary at infinity is the set of infinite words; the cylinder at a
vertex u collects the ends whose word starts with u.  The horofunction
(Busemann) increment between two vertices is constant on a cylinder as
soon as the cylinder is deep enough, which is what `busemann_on_cylinder`
computes exactly; too-shallow cylinders raise instead of averaging.

A depth cap (runtime parameter, default 8) bounds every enumeration.
Operations that would have to enumerate or accept addresses deeper than
the cap raise DepthBudgetError rather than truncating silently.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    ConfigError,
    CylinderTooShallowError,
    DepthBudgetError,
    MalformedAddressError,
    SubtreeError,
)

Address = tuple[int, ...]

ROOT: Address = ()


@dataclass(frozen=True)
class TreeParams:
    """Degree and depth-cap configuration.

    q >= 2 is the branching number: every vertex has q+1 neighbours.
    depth_cap bounds the depth of any address an enumeration may touch.
    """

    q: int
    depth_cap: int = 8

    def __post_init__(self):
        if not isinstance(self.q, int) or self.q < 2:
            raise ConfigError(f"q must be an integer >= 2, got {self.q!r}")
        if not isinstance(self.depth_cap, int) or self.depth_cap < 1:
            raise ConfigError(f"depth_cap must be a positive integer, got {self.depth_cap!r}")

    def letter_range(self, position: int) -> range:
        """Valid letters at a given position (0-based) of an address."""
        return range(1, self.q + 2) if position == 0 else range(1, self.q + 1)


def check_address(params: TreeParams, addr: Address, *, allow_deep: bool = False) -> Address:
    """Validate letter ranges (and, unless allow_deep, the depth cap)."""
    if not isinstance(addr, tuple):
        raise MalformedAddressError(f"address must be a tuple of letters, got {type(addr).__name__}")
    for i, letter in enumerate(addr):
        if not isinstance(letter, (int, np.integer)):
            raise MalformedAddressError(f"letter {letter!r} at position {i} is not an integer")
        hi = params.q + 1 if i == 0 else params.q
        if not 1 <= letter <= hi:
            raise MalformedAddressError(
                f"letter {letter} at position {i} outside 1..{hi} (q={params.q})"
            )
    if not allow_deep and len(addr) > params.depth_cap:
        raise DepthBudgetError(f"address depth {len(addr)} exceeds cap {params.depth_cap}")
    return addr


def parse_address(text: str) -> Address:
    """Parse the dotted serialization; '-' denotes the basepoint."""
    if text == "-":
        return ROOT
    if not text:
        raise MalformedAddressError("empty address string (use '-' for the basepoint)")
    try:
        return tuple(int(part) for part in text.split("."))
    except ValueError as exc:
        raise MalformedAddressError(f"bad address string {text!r}") from exc


def format_address(addr: Address) -> str:
    return "-" if not addr else ".".join(str(letter) for letter in addr)


def parent(addr: Address) -> Address:
    if not addr:
        raise MalformedAddressError("the basepoint has no parent")
    return addr[:-1]


def children(params: TreeParams, addr: Address) -> list[Address]:
    return [addr + (letter,) for letter in params.letter_range(len(addr))]


def neighbors(params: TreeParams, addr: Address) -> list[Address]:
    out = [] if not addr else [addr[:-1]]
    out.extend(children(params, addr))
    return out


def lcp(u: Address, v: Address) -> Address:
    n = 0
    for a, b in zip(u, v):
        if a != b:
            break
        n += 1
    return u[:n]


def is_proper_prefix(u: Address, v: Address) -> bool:
    return len(u) < len(v) and v[: len(u)] == u


def distance(params: TreeParams, u: Address, v: Address) -> int:
    check_address(params, u)
    check_address(params, v)
    return len(u) + len(v) - 2 * len(lcp(u, v))


def median(params: TreeParams, u: Address, v: Address, w: Address) -> Address:
    """The unique vertex lying on all three pairwise geodesics.

    It is the deepest of the three pairwise longest common prefixes (the two
    shallower ones always coincide).
    """
    for a in (u, v, w):
        check_address(params, a)
    return max(lcp(u, v), lcp(u, w), lcp(v, w), key=len)


def geodesic(params: TreeParams, u: Address, v: Address) -> list[Address]:
    """Vertex sequence from u to v, inclusive; length distance(u,v)+1."""
    check_address(params, u)
    check_address(params, v)
    meet = lcp(u, v)
    up = [u[:k] for k in range(len(u), len(meet) - 1, -1)]
    down = [v[:k] for k in range(len(meet) + 1, len(v) + 1)]
    return up + down


def busemann_on_cylinder(params: TreeParams, u: Address, x: Address, y: Address) -> int:
    """Horofunction increment B_xi(x, y) for every end xi in the cylinder at u.

    For an end approached along vertices z_k the increment is
    lim d(x, z_k) - d(y, z_k).  Every geodesic from x to a point deep in
    the cylinder enters through the same vertex (the meet of x with u)
    once u is a proper prefix of neither x nor y, so the limit is the
    same for every end of the cell and equals d(x, u) - d(y, u).  If u
    sits strictly above x or y the increment genuinely varies over the
    cell, and the function raises CylinderTooShallowError so the caller
    refines instead of receiving one value of many.
    """
    check_address(params, u)
    check_address(params, x, allow_deep=True)
    check_address(params, y, allow_deep=True)
    if x == y:
        return 0
    if is_proper_prefix(u, x) or is_proper_prefix(u, y):
        raise CylinderTooShallowError(
            f"cylinder {format_address(u)} lies strictly above {format_address(x)} or "
            f"{format_address(y)}; the increment is not constant on it"
        )
    return (len(x) + len(u) - 2 * len(lcp(x, u))) - (len(y) + len(u) - 2 * len(lcp(y, u)))


# ---------------------------------------------------------------------------
# depth-level enumeration
#
# Addresses of a fixed depth m are ordered lexicographically.  The order is
# realized by an integer index: the first letter contributes (a1-1)*q^(m-1),
# each later letter a_j contributes (a_j-1)*q^(m-j).  Cylinders at a prefix
# are then contiguous index ranges, which the boundary-measure and
# representation modules exploit heavily.
# ---------------------------------------------------------------------------


def n_addresses(params: TreeParams, depth: int) -> int:
    if depth < 0:
        raise ConfigError("depth must be nonnegative")
    if depth == 0:
        return 1
    return (params.q + 1) * params.q ** (depth - 1)


@functools.lru_cache(maxsize=64)
def letter_matrix(params: TreeParams, depth: int) -> np.ndarray:
    """All depth-`depth` addresses as an (n, depth) int16 matrix, sorted."""
    if depth > params.depth_cap:
        raise DepthBudgetError(f"depth {depth} exceeds cap {params.depth_cap}")
    n = n_addresses(params, depth)
    out = np.zeros((n, depth), dtype=np.int16)
    if depth == 0:
        return out
    block = params.q ** (depth - 1)
    out[:, 0] = 1 + np.arange(n) // block
    for j in range(1, depth):
        block = params.q ** (depth - 1 - j)
        out[:, j] = 1 + (np.arange(n) // block) % params.q
    out.setflags(write=False)
    return out


def addresses_at_depth(params: TreeParams, depth: int) -> list[Address]:
    return [tuple(int(x) for x in row) for row in letter_matrix(params, depth)]


def address_index(params: TreeParams, addr: Address) -> int:
    """Index of addr within the sorted enumeration of its own depth."""
    check_address(params, addr)
    if not addr:
        return 0
    idx = addr[0] - 1
    for letter in addr[1:]:
        idx = idx * params.q + (letter - 1)
    return idx


def address_from_index(params: TreeParams, depth: int, idx: int) -> Address:
    if not 0 <= idx < n_addresses(params, depth):
        raise MalformedAddressError(f"index {idx} out of range at depth {depth}")
    if depth == 0:
        return ROOT
    letters = []
    for _ in range(depth - 1):
        letters.append(1 + idx % params.q)
        idx //= params.q
    letters.append(1 + idx)
    return tuple(reversed(letters))


def prefix_indices(params: TreeParams, letters: np.ndarray, lengths: np.ndarray, m: int) -> np.ndarray:
    """Vectorized address_index of the depth-m prefix of every row.

    Rows must have length >= m.
    """
    if m == 0:
        return np.zeros(letters.shape[0], dtype=np.int64)
    if np.any(lengths < m):
        raise MalformedAddressError(f"a row is shorter than the requested prefix length {m}")
    idx = (letters[:, 0].astype(np.int64) - 1)
    for j in range(1, m):
        idx = idx * params.q + (letters[:, j].astype(np.int64) - 1)
    return idx


# ---------------------------------------------------------------------------
# finite subtrees
# ---------------------------------------------------------------------------


class FiniteSubtree:
    """A nonempty, connected (hence geodesically closed) finite vertex set."""

    __slots__ = ("params", "vertices")

    def __init__(self, params: TreeParams, vertices: Iterable[Address]):
        verts = frozenset(tuple(v) for v in vertices)
        if not verts:
            raise SubtreeError("a subtree needs at least one vertex")
        for v in verts:
            check_address(params, v)
        self.params = params
        self.vertices = verts
        self._check_connected()

    def _check_connected(self):
        start = next(iter(self.vertices))
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in neighbors(self.params, v):
                if w in self.vertices and w not in seen:
                    seen.add(w)
                    stack.append(w)
        if seen != self.vertices:
            raise SubtreeError("vertex set is not connected")

    def __contains__(self, addr: Address) -> bool:
        return addr in self.vertices

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self) -> Iterator[Address]:
        return iter(sorted(self.vertices))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FiniteSubtree)
            and self.params == other.params
            and self.vertices == other.vertices
        )

    def __hash__(self) -> int:
        return hash((self.params, self.vertices))

    def __repr__(self) -> str:
        return f"FiniteSubtree({sorted(format_address(v) for v in self.vertices)})"

    def valency_in(self, addr: Address) -> int:
        if addr not in self.vertices:
            raise SubtreeError(f"{format_address(addr)} is not a vertex of the subtree")
        return sum(1 for w in neighbors(self.params, addr) if w in self.vertices)

    def to_json_obj(self) -> list[str]:
        return [format_address(v) for v in sorted(self.vertices)]

    @classmethod
    def from_json_obj(cls, params: TreeParams, obj: list[str]) -> "FiniteSubtree":
        return cls(params, [parse_address(s) for s in obj])


def boundary_vertices(tree: FiniteSubtree) -> list[Address]:
    """Vertices with tree-valency in S strictly below q+1, sorted."""
    return [v for v in tree if tree.valency_in(v) < tree.params.q + 1]


def is_complete(tree: FiniteSubtree) -> bool:
    """True iff every vertex is a leaf of S (valency <= 1) or has full
    valency q+1 within S.

    Single vertices, single edges, and balls are complete; a path of length
    two is not, since its middle vertex has valency 2.
    """
    q = tree.params.q
    return all(tree.valency_in(v) == q + 1 or tree.valency_in(v) <= 1 for v in tree)


def closed_neighborhood(tree: FiniteSubtree, radius: int) -> FiniteSubtree:
    """All vertices within the given distance of S.  Always complete."""
    if radius < 0:
        raise ConfigError("radius must be nonnegative")
    params = tree.params
    current = set(tree.vertices)
    frontier = set(current)
    for _ in range(radius):
        new = set()
        for v in frontier:
            for w in neighbors(params, v):
                if w not in current:
                    if len(w) > params.depth_cap:
                        raise DepthBudgetError(
                            f"{radius}-neighborhood would pass depth cap {params.depth_cap}"
                        )
                    new.add(w)
        current |= new
        frontier = new
    return FiniteSubtree(params, current)
