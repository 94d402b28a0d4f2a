"""Boundary representation on vector-valued step functions.

A step function assigns a vector in C^d to every depth-m cylinder; the
array of values is kept dense in the lexicographic cylinder order, so a
cylinder is an index range and refinement is np.repeat.  All depth-m
cylinders carry equal measure, which turns integrals into row means and
keeps the rational bookkeeping implicit and exact.

The action of an automorphism g with basepoint displacement D sends a
resolution-m function to a resolution max(m+D, D+1) one:

    (pi(g) v)(end) = tau^{b} . v(g^{-1} end)

where b is the horofunction increment from the basepoint to g(basepoint),
constant on each output cylinder, and tau is the matrix produced by the
operator-calculus layer.  On each output cylinder u the increment is
2 |lcp(u, g x0)| - D and the lookup vertex is the depth-m prefix of
g^{-1} u; the resolution rule makes both well defined (every output
cylinder is strictly deeper than g x0, so its preimage is again a
cylinder, of depth at least m).  The homomorphism property suite is the
empirical proof of this cylinder-level evaluation.

Averages over compact stabilizers are finite measure-weighted sums over
orbit cells (conditional means), never samples over group elements.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import measure as bm
from .automorphism import (
    TreeAutomorphism,
    Portrait,
    compose,
    edge_inversion,
    from_portrait,
)
from .errors import (
    ConfigError,
    DepthBudgetError,
    RefinementError,
    SpectralGuardError,
)
from .operators import OperatorPair, power, spectral_norm
from .tree import (
    ROOT,
    Address,
    FiniteSubtree,
    TreeParams,
    letter_matrix,
    n_addresses,
    prefix_indices,
)


class StepFunction:
    """Vector-valued step function at uniform cylinder resolution."""

    __slots__ = ("params", "resolution", "values")

    def __init__(self, params: TreeParams, resolution: int, values: np.ndarray):
        if not 0 <= resolution <= params.depth_cap:
            raise DepthBudgetError(
                f"resolution {resolution} outside [0, {params.depth_cap}]"
            )
        values = np.asarray(values, dtype=np.complex128)
        if values.ndim != 2 or values.shape[0] != n_addresses(params, resolution):
            raise ConfigError(
                f"expected a ({n_addresses(params, resolution)}, d) value array, "
                f"got shape {values.shape}"
            )
        self.params = params
        self.resolution = resolution
        self.values = values

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def refine(self, resolution: int) -> "StepFunction":
        if resolution == self.resolution:
            return self
        if resolution < self.resolution:
            raise RefinementError(
                f"cannot coarsen from resolution {self.resolution} to {resolution}"
            )
        factor = n_addresses(self.params, resolution) // n_addresses(self.params, self.resolution)
        return StepFunction(self.params, resolution, np.repeat(self.values, factor, axis=0))

    def integral(self) -> np.ndarray:
        """Measure-weighted integral; cells at one depth weigh equally."""
        return self.values.mean(axis=0)

    def lp_norm(self, p: int) -> float:
        cell_norms = np.linalg.norm(self.values, axis=1)
        return float(np.mean(cell_norms**p) ** (1.0 / p))

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=1))) if self.values.size else 0.0

    def common_refinement(self, other: "StepFunction") -> tuple["StepFunction", "StepFunction"]:
        if self.params != other.params or self.dim != other.dim:
            raise ConfigError("step functions live on different trees or dimensions")
        m = max(self.resolution, other.resolution)
        return self.refine(m), other.refine(m)

    def __add__(self, other: "StepFunction") -> "StepFunction":
        a, b = self.common_refinement(other)
        return StepFunction(a.params, a.resolution, a.values + b.values)

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        a, b = self.common_refinement(other)
        return StepFunction(a.params, a.resolution, a.values - b.values)

    def __rmul__(self, scalar: complex) -> "StepFunction":
        return StepFunction(self.params, self.resolution, scalar * self.values)

    def max_cell_distance(self, other: "StepFunction") -> float:
        a, b = self.common_refinement(other)
        diff = a.values - b.values
        return float(np.max(np.linalg.norm(diff, axis=1))) if diff.size else 0.0

    def cells(self):
        """Iterate (cylinder, value) pairs in lexicographic order."""
        letters = letter_matrix(self.params, self.resolution)
        for row, val in zip(letters, self.values):
            yield bm.Cylinder(tuple(int(x) for x in row)), val

    def to_json_obj(self) -> dict:
        return {
            "resolution": self.resolution,
            "dim": self.dim,
            "cells": [
                {"cell": c.to_json_obj(), "value": [[float(z.real), float(z.imag)] for z in v]}
                for c, v in self.cells()
            ],
        }


def constant_fn(params: TreeParams, w: np.ndarray) -> StepFunction:
    w = np.atleast_1d(np.asarray(w, dtype=np.complex128))
    return StepFunction(params, 0, w.reshape(1, -1))


def indicator_fn(params: TreeParams, cell: bm.EndCell, w: np.ndarray) -> StepFunction:
    w = np.atleast_1d(np.asarray(w, dtype=np.complex128))
    m = bm.min_expressible_depth(params, cell)
    values = np.zeros((n_addresses(params, m), w.shape[0]), dtype=np.complex128)
    for a, b in bm.cell_index_ranges(params, cell, m):
        values[a:b] = w
    return StepFunction(params, m, values)


def pi_apply(g: TreeAutomorphism, v: StepFunction, pair: OperatorPair) -> StepFunction:
    """Apply the boundary representation of g to v.

    Output resolution is max(m + D, D + 1); exceeding the depth cap is a
    DepthBudgetError rather than a truncation.
    """
    params = v.params
    if g.params != params:
        raise ConfigError("automorphism and step function use different tree parameters")
    if pair.q != params.q:
        raise ConfigError(f"operator pair is for q={pair.q}, tree has q={params.q}")
    if pair.dim != v.dim:
        raise ConfigError(f"operator dimension {pair.dim} != function dimension {v.dim}")
    m = v.resolution
    d = g.displacement
    m_out = max(m + d, d + 1)
    if m_out > params.depth_cap:
        raise DepthBudgetError(
            f"resolution {m} plus displacement {d} needs depth {m_out}, cap is {params.depth_cap}"
        )
    letters = letter_matrix(params, m_out)
    n = letters.shape[0]

    if d == 0:
        exponents = np.zeros(n, dtype=np.int64)
    else:
        y = np.asarray(g.x0_image, dtype=letters.dtype)
        matches = letters[:, : len(y)] == y
        exponents = 2 * np.cumprod(matches, axis=1).sum(axis=1) - d

    if m == 0:
        looked_up = np.broadcast_to(v.values[0], (n, v.dim))
    else:
        inv_letters, inv_lengths = g.inverse().apply_batch(
            letters, np.full(n, m_out, dtype=np.int64)
        )
        looked_up = v.values[prefix_indices(params, inv_letters, inv_lengths, m)]

    out = np.empty((n, v.dim), dtype=np.complex128)
    for k in np.unique(exponents):
        rows = exponents == k
        out[rows] = looked_up[rows] @ power(pair, int(k)).T
    return StepFunction(params, m_out, out)


def haar_average_K(v: StepFunction) -> StepFunction:
    """Average over the full basepoint stabilizer: the constant function
    at the integral of v."""
    return constant_fn(v.params, v.integral())


def haar_average_fix(tree: FiniteSubtree, v: StepFunction) -> StepFunction:
    """Average over the pointwise stabilizer of a complete subtree.

    The output is the conditional mean of v on each stabilizer orbit,
    computed at whatever common resolution expresses all orbit cells.
    """
    params = v.params
    if tree.params != params:
        raise ConfigError("subtree and step function use different tree parameters")
    cells = bm.orbit_cells(tree)
    m = max([v.resolution] + [bm.min_expressible_depth(params, c) for c in cells])
    vv = v.refine(m)
    out = np.empty_like(vv.values)
    for cell in cells:
        ranges = bm.cell_index_ranges(params, cell, m)
        count = sum(b - a for a, b in ranges)
        mean = sum(vv.values[a:b].sum(axis=0) for a, b in ranges) / count
        for a, b in ranges:
            out[a:b] = mean
    return StepFunction(params, m, out)


def alpha_via_rep(params: TreeParams, w: np.ndarray, pair: OperatorPair) -> np.ndarray:
    """Recover alpha . w from the representation alone: apply the edge
    inversion to the constant function at w, average over the basepoint
    stabilizer, and rescale by the index q+1 of the cylinder partition."""
    moved = pi_apply(edge_inversion(params), constant_fn(params, w), pair)
    return (params.q + 1) * haar_average_K(moved).values[0]


def basepoint_shift(params: TreeParams, head: Address) -> TreeAutomorphism:
    """An automorphism carrying the basepoint to the adjacent vertex `head`:
    the edge inversion followed by the root transposition onto `head`."""
    if len(head) != 1:
        raise ConfigError(f"{head!r} is not adjacent to the basepoint")
    h = edge_inversion(params)
    j = head[0]
    if j == 1:
        return h
    perm = list(range(1, params.q + 2))
    perm[0], perm[j - 1] = perm[j - 1], perm[0]
    return compose(from_portrait(params, Portrait(tuple(perm))), h)


def halftree_element(
    params: TreeParams, w_prime: np.ndarray, edge: tuple[Address, Address], pair: OperatorPair
) -> StepFunction:
    """The step function (tau - tau^{-1}) w' supported on the half-tree at
    `edge`, which one group element reaches from the constant function w'
    (see the half-tree reachability suite for the two-path check)."""
    tail, head = edge
    if tail != ROOT:
        raise ConfigError("only edges leaving the basepoint are supported")
    if len(head) != 1:
        raise ConfigError("edge endpoints must be adjacent")
    w_prime = np.atleast_1d(np.asarray(w_prime, dtype=np.complex128))
    return indicator_fn(params, bm.Cylinder(head), (pair.tau - pair.tau_inv) @ w_prime)


def halftree_preimage(pair: OperatorPair, w: np.ndarray) -> np.ndarray:
    """Solve (tau - tau^{-1}) w' = w; the guard layer promises solvability."""
    diff = pair.tau - pair.tau_inv
    sing = scipy.linalg.svdvals(diff)
    if sing[-1] <= 1e-14 * max(1.0, sing[0]):
        raise SpectralGuardError(
            f"tau - tau_inv is numerically singular (smallest singular value {sing[-1]:.3g})"
        )
    return np.linalg.solve(diff, np.asarray(w, dtype=np.complex128))


@dataclass(frozen=True)
class FixedSpaceReport:
    subtree: FiniteSubtree
    orbit_count: int
    fixed_dim: int
    per_orbit_cells: tuple

    def to_json_obj(self) -> dict:
        return {
            "subtree": self.subtree.to_json_obj(),
            "orbit_count": self.orbit_count,
            "fixed_dim": self.fixed_dim,
            "cells": [c.to_json_obj() for c in self.per_orbit_cells],
        }


def fixed_space_report(tree: FiniteSubtree, d: int) -> FixedSpaceReport:
    """Dimension of the subspace fixed by the pointwise stabilizer of a
    complete subtree: d per orbit cell.

    Constructively verified: a step function with a distinct value on
    each orbit cell must survive haar_average_fix unchanged, which
    exercises the conditional mean on every cell; values split per
    coordinate, so the scalar check covers all d coordinates.
    """
    if d < 1:
        raise ConfigError(f"fiber dimension must be positive, got {d}")
    params = tree.params
    cells = bm.orbit_cells(tree)
    m = max(bm.min_expressible_depth(params, c) for c in cells)
    probe = np.zeros((n_addresses(params, m), 1), dtype=np.complex128)
    for j, cell in enumerate(cells):
        for a, b in bm.cell_index_ranges(params, cell, m):
            probe[a:b] = j + 1
    fn = StepFunction(params, m, probe)
    averaged = haar_average_fix(tree, fn)
    if averaged.resolution != m or not np.array_equal(averaged.values, probe):
        raise ConfigError("orbit cells are not stabilizer-average invariant")
    return FixedSpaceReport(
        subtree=tree, orbit_count=len(cells), fixed_dim=d * len(cells), per_orbit_cells=tuple(cells)
    )


def invariant_lift_check(
    params: TreeParams,
    basis: list[np.ndarray] | np.ndarray,
    pair: OperatorPair,
    generators: list[TreeAutomorphism],
    trials: int,
    rng: np.random.Generator,
) -> dict:
    """Measure how far the lift of span(basis) is from being invariant.

    `basis` is a list of vectors or a matrix whose columns span the
    subspace.  For random unit vectors w in the span, the probes are
    every cell value of pi(g) applied to the constant function at w,
    plus the vector alpha.w reconstructed through the representation.
    Reported leakage is the norm of the component outside the span;
    thresholds are the caller's business.
    """
    if isinstance(basis, np.ndarray) and basis.ndim == 2:
        mat = np.asarray(basis, dtype=np.complex128)
    else:
        mat = np.column_stack([np.asarray(b, dtype=np.complex128) for b in basis])
    sing = scipy.linalg.svdvals(mat)
    if sing[-1] <= 1e-10 * max(1.0, sing[0]):
        raise ConfigError("subspace basis is numerically dependent")
    ortho, _ = np.linalg.qr(mat)

    def leak(vectors: np.ndarray) -> float:
        vectors = np.atleast_2d(vectors)
        outside = vectors - (vectors @ ortho.conj()) @ ortho.T
        return float(np.max(np.linalg.norm(outside, axis=1)))

    per_generator = {}
    reconstruction = 0.0
    for trial in range(trials):
        coeff = rng.standard_normal(mat.shape[1]) + 1j * rng.standard_normal(mat.shape[1])
        w = mat @ coeff
        w = w / np.linalg.norm(w)
        for idx, g in enumerate(generators):
            name = f"{idx}:" + "*".join(kind for kind, _ in _word_kinds(g))
            moved = pi_apply(g, constant_fn(params, w), pair)
            per_generator[name] = max(per_generator.get(name, 0.0), leak(moved.values))
        reconstruction = max(reconstruction, leak(alpha_via_rep(params, w, pair)))
    worst = max(list(per_generator.values()) + [reconstruction], default=0.0)
    return {
        "per_generator": per_generator,
        "reconstruction": reconstruction,
        "max_leakage": worst,
        "trials": trials,
        "subspace_dim": mat.shape[1],
    }


def _word_kinds(g: TreeAutomorphism):
    return [(gen.kind, flag) for gen, flag in g.word]


def operator_norm_bound(pair: OperatorPair, displacement: int) -> float:
    """Upper bound for the representation norm of any element with the
    given basepoint displacement: the worst power of tau in range."""
    return max(
        spectral_norm(power(pair, k)) for k in range(-displacement, displacement + 1)
    )
