"""Exact measure theory on the boundary of the rooted tree.

Ends are infinite address words.  The reference measure charges the
cylinder below a depth-k vertex with 1/((q+1) q^(k-1)): one uniform
factor per letter.  Everything here is exact rational arithmetic; no
floats enter until the representation layer multiplies cell values by
matrices.

Two cell shapes cover all sets the verification needs.  A cylinder is
the set of ends through one vertex.  A half-tree is the set of ends on
one side of an oriented edge; when the edge points away from the
basepoint it collapses to a cylinder, and when it points toward the
basepoint it is the complement of one.  `canonicalize` normalizes to
these two cases, after which measures, refinements and index ranges are
a few lines each.

The boundary action of an automorphism distorts the measure by an exact
power of q.  `rn_cocycle(g, c)` returns that power on a cell c deep
enough for the distortion to be constant on it, and the companion
`map_cell` computes images of cells so the change-of-variables identity

    measure(g^-1 . c) = rn_cocycle(g, c) * measure(c)

can be asserted with exact equality.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .automorphism import TreeAutomorphism
from .errors import (
    CylinderTooShallowError,
    DepthBudgetError,
    MalformedAddressError,
    NotCompleteError,
    PartitionError,
    PruningError,
    RefinementError,
)
from .tree import (
    ROOT,
    Address,
    FiniteSubtree,
    TreeParams,
    address_index,
    boundary_vertices,
    busemann_on_cylinder,
    check_address,
    format_address,
    is_complete,
    n_addresses,
    parent,
    parse_address,
)


@dataclass(frozen=True)
class Cylinder:
    """Ends whose word starts with `base`; base = root means the whole boundary."""

    base: Address

    def to_json_obj(self) -> dict:
        return {"kind": "cylinder", "base": format_address(self.base)}


@dataclass(frozen=True)
class Halftree:
    """Ends beyond `head`, away from the adjacent vertex `tail`."""

    tail: Address
    head: Address

    def to_json_obj(self) -> dict:
        return {"kind": "halftree", "from": format_address(self.tail), "to": format_address(self.head)}


EndCell = Cylinder | Halftree


def cell_from_json_obj(obj: dict) -> EndCell:
    kind = obj.get("kind")
    if kind == "cylinder":
        return Cylinder(parse_address(obj["base"]))
    if kind == "halftree":
        return Halftree(parse_address(obj["from"]), parse_address(obj["to"]))
    raise MalformedAddressError(f"unknown cell kind {kind!r}")


def whole_boundary() -> Cylinder:
    return Cylinder(ROOT)


def canonicalize(params: TreeParams, cell: EndCell) -> EndCell:
    """Collapse a half-tree pointing away from the basepoint to a cylinder.

    The surviving half-tree shape always points toward the basepoint,
    i.e. describes the complement of the cylinder at its tail.
    """
    if isinstance(cell, Cylinder):
        check_address(params, cell.base, allow_deep=True)
        return cell
    check_address(params, cell.tail, allow_deep=True)
    check_address(params, cell.head, allow_deep=True)
    if cell.head != ROOT and parent(cell.head) == cell.tail:
        return Cylinder(cell.head)
    if cell.tail != ROOT and parent(cell.tail) == cell.head:
        return cell
    raise MalformedAddressError(
        f"half-tree endpoints {format_address(cell.tail)}, {format_address(cell.head)} "
        "are not adjacent"
    )


def min_expressible_depth(params: TreeParams, cell: EndCell) -> int:
    """Smallest m at which the cell is a union of depth-m cylinders."""
    cell = canonicalize(params, cell)
    if isinstance(cell, Cylinder):
        return len(cell.base)
    return len(cell.tail)


def cell_measure(params: TreeParams, cell: EndCell) -> Fraction:
    cell = canonicalize(params, cell)
    if isinstance(cell, Cylinder):
        k = len(cell.base)
        if k == 0:
            return Fraction(1)
        return Fraction(1, (params.q + 1) * params.q ** (k - 1))
    return 1 - cell_measure(params, Cylinder(cell.tail))


def _complement_pieces(params: TreeParams, excluded: Address) -> list[Cylinder]:
    # maximal cylinders covering everything outside cyl(excluded): the
    # siblings of each prefix
    pieces = []
    for k in range(len(excluded)):
        for letter in params.letter_range(k):
            if letter != excluded[k]:
                pieces.append(Cylinder(excluded[:k] + (letter,)))
    return pieces


def refine_to_depth(params: TreeParams, cell: EndCell, depth: int) -> list[Cylinder]:
    """The cell as a disjoint list of depth-`depth` cylinders, sorted."""
    if depth > params.depth_cap:
        raise DepthBudgetError(f"refinement depth {depth} exceeds cap {params.depth_cap}")
    cell = canonicalize(params, cell)
    need = min_expressible_depth(params, cell)
    if depth < need:
        raise RefinementError(
            f"cell needs depth {need} but refinement to depth {depth} was requested"
        )
    if isinstance(cell, Cylinder):
        bases = [cell.base]
    else:
        bases = [p.base for p in _complement_pieces(params, cell.tail)]
    out = []
    for base in bases:
        stack = [base]
        for pos in range(len(base), depth):
            stack = [u + (letter,) for u in stack for letter in params.letter_range(pos)]
        out.extend(Cylinder(u) for u in stack)
    out.sort(key=lambda c: c.base)
    return out


def cell_index_ranges(params: TreeParams, cell: EndCell, depth: int) -> list[tuple[int, int]]:
    """The cell as index ranges into the lexicographic depth-`depth` grid.

    A cylinder is one contiguous block; a complement is at most two.
    """
    cell = canonicalize(params, cell)
    need = min_expressible_depth(params, cell)
    if depth < need:
        raise RefinementError(
            f"cell needs depth {need} but an index view at depth {depth} was requested"
        )
    total = n_addresses(params, depth)
    if isinstance(cell, Cylinder):
        u = cell.base
        if not u:
            return [(0, total)]
        start = address_index(params, u + (1,) * (depth - len(u)))
        return [(start, start + params.q ** (depth - len(u)))]
    (start, stop), = cell_index_ranges(params, Cylinder(cell.tail), depth)
    out = []
    if start > 0:
        out.append((0, start))
    if stop < total:
        out.append((stop, total))
    return out


def assert_partition(params: TreeParams, cells: list[EndCell], depth: int | None = None) -> None:
    """Check the cells tile the boundary exactly once; raise PartitionError if not."""
    if depth is None:
        depth = max((min_expressible_depth(params, c) for c in cells), default=0)
    covered = 0
    seen: list[tuple[int, int]] = []
    for cell in cells:
        for rng in cell_index_ranges(params, cell, depth):
            seen.append(rng)
            covered += rng[1] - rng[0]
    seen.sort()
    for (a, b), (c, d) in zip(seen, seen[1:]):
        if c < b:
            raise PartitionError(f"cells overlap on index range [{c}, {min(b, d)})")
    if covered != n_addresses(params, depth):
        raise PartitionError(
            f"cells cover {covered} of {n_addresses(params, depth)} depth-{depth} cylinders"
        )


# -- stabilizer orbits --------------------------------------------------------


def _neighbors_in(sub: FiniteSubtree, b: Address) -> list[Address]:
    params = sub.params
    near = list(b + (l,) for l in params.letter_range(len(b)))
    if b:
        near.append(parent(b))
    return [v for v in near if v in sub]


def orbit_cells(tree: FiniteSubtree) -> list[EndCell]:
    """Orbits on the boundary of the pointwise stabilizer of a complete subtree.

    Each orbit is the set of ends leaving the subtree through one of its
    boundary vertices: the half-tree at that vertex pointing away from
    its unique neighbour inside.  A single-vertex subtree has the whole
    boundary as its one orbit.
    """
    params = tree.params
    if not is_complete(tree):
        raise NotCompleteError(
            "orbit cells exist only for complete subtrees (every vertex a leaf or full)"
        )
    if len(tree) == 1:
        return [whole_boundary()]
    cells = []
    for b in boundary_vertices(tree):
        # complete + more than one vertex: a leaf has exactly one neighbour inside
        (s,) = _neighbors_in(tree, b)
        cells.append(canonicalize(params, Halftree(s, b)))
    return cells


def orbit_merge_under_pruning(
    tree: FiniteSubtree, pruned: FiniteSubtree
) -> dict[EndCell, EndCell]:
    """Surjection from the orbit cells of `tree` onto those of `pruned`.

    `pruned` must arise by deleting, around one full vertex v of `tree`,
    all of its neighbours except one; then the q cells at the deleted
    leaves merge into the new cell at v and every other cell is kept.
    """
    params = tree.params
    if pruned.params != params:
        raise PruningError("subtrees live over different tree parameters")
    removed = sorted(set(tree) - set(pruned))
    if not removed or not set(pruned) <= set(tree):
        raise PruningError("pruned subtree must be a proper subset of the original")
    if not (is_complete(tree) and is_complete(pruned)):
        raise PruningError("both subtrees must be complete")

    def sole_neighbor(sub: FiniteSubtree, b: Address) -> Address:
        near = _neighbors_in(sub, b)
        if len(near) != 1:
            raise PruningError(f"{format_address(b)} is not a leaf of the larger subtree")
        return near[0]

    v = sole_neighbor(tree, removed[0])
    for b in removed:
        if sole_neighbor(tree, b) != v:
            raise PruningError("deleted vertices do not share a single interior vertex")
    if len(removed) != params.q or v not in pruned:
        raise PruningError(
            f"expected exactly q={params.q} deleted leaves around a kept vertex, "
            f"got {len(removed)}"
        )
    if tree.valency_in(v) != params.q + 1 or pruned.valency_in(v) != 1:
        raise PruningError("the pruning vertex must go from full valency to a leaf")

    merged_target = canonicalize(params, Halftree(sole_neighbor(pruned, v), v))
    mapping: dict[EndCell, EndCell] = {}
    removed_set = set(removed)
    for b in boundary_vertices(tree):
        cell = canonicalize(params, Halftree(sole_neighbor(tree, b), b))
        if b in removed_set:
            mapping[cell] = merged_target
        else:
            mapping[cell] = canonicalize(params, Halftree(sole_neighbor(pruned, b), b))
    return mapping


# -- boundary action ----------------------------------------------------------


def map_cell(g: TreeAutomorphism, cell: EndCell) -> EndCell:
    """Image of a cell under the boundary action of g."""
    params = g.params
    cell = canonicalize(params, cell)
    if isinstance(cell, Cylinder):
        if not cell.base:
            return cell
        tail, head = parent(cell.base), cell.base
    else:
        tail, head = cell.tail, cell.head
    return canonicalize(params, Halftree(g.apply_vertex(tail), g.apply_vertex(head)))


def rn_cocycle(g: TreeAutomorphism, cell: EndCell) -> Fraction:
    """Measure distortion of g on a cell: the exact power q^b with b the
    horofunction increment from the basepoint to g(basepoint), constant
    on the cell.

    Defined only where that increment really is constant; a too-shallow
    cell raises CylinderTooShallowError and the caller should refine.
    The value is the density of the pushforward measure, so

        measure(g^-1 . c) = rn_cocycle(g, c) * measure(c)

    and the composition law reads
    rn_cocycle(g h, c) = rn_cocycle(g, c) * rn_cocycle(h, g^-1 . c).
    """
    params = g.params
    cell = canonicalize(params, cell)
    y = g.x0_image
    if isinstance(cell, Cylinder):
        b = busemann_on_cylinder(params, cell.base, ROOT, y)
    else:
        # a complement decomposes into finitely many maximal cylinders;
        # the increment is defined on the whole cell iff it is defined
        # and equal on each of them
        values = set()
        for piece in _complement_pieces(params, cell.tail):
            values.add(busemann_on_cylinder(params, piece.base, ROOT, y))
            if len(values) > 1:
                raise CylinderTooShallowError(
                    "the increment is not constant on the half-tree; refine it"
                )
        (b,) = values
    return Fraction(params.q) ** b


def measure_to_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def measure_from_str(text: str) -> Fraction:
    num, _, den = text.partition("/")
    return Fraction(int(num), int(den) if den else 1)
