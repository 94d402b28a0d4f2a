"""Tree automorphisms as words in explicit generators.

Three generator kinds suffice for everything the verification suites need:

* rooted portraits -- fix the basepoint and permute child letters, with a
  (sparse) permutation attached to each vertex: the word (a1, a2, ...) maps
  to (s[](a1), s[a1](a2), s[a1 a2](a3), ...).  Unspecified vertices carry
  the identity, so a portrait is a total map on addresses of any depth.

* the edge inversion h -- exchanges the basepoint with its first neighbour
  (1) and, with it, the half-tree at (1) with its complement:

      h(1, a2, a3, ...) = (a2 + 1, a3, ...)
      h(a1, a2, ...)    = (1, a1 - 1, a2, ...)      for a1 >= 2

* the step translation t -- shifts the standard line x_k = 1^k (k >= 0),
  x_{-k} = 2 1^(k-1) (k >= 1) by one: t x_k = x_{k+1}.  Realized as the
  edge inversion composed with the portrait swapping branches 1 and 2.

An automorphism is a word of (generator, inverted) pairs applied left to
right; composition concatenates words, inversion reverses the word and
flips the flags.  Every generator is a total, exactly invertible map on
addresses, so evaluation never truncates; depth budgets only bite where a
caller enumerates cylinders.  The image of the basepoint and its distance
from the basepoint (the displacement) are cached at construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DepthBudgetError, MalformedAddressError
from .tree import (
    ROOT,
    Address,
    TreeParams,
    addresses_at_depth,
    check_address,
    format_address,
    parse_address,
)


def _check_perm(perm: Sequence[int], n: int, what: str) -> tuple[int, ...]:
    t = tuple(int(x) for x in perm)
    if sorted(t) != list(range(1, n + 1)):
        raise ConfigError(f"{what} is not a permutation of 1..{n}: {perm!r}")
    return t


def _table(perm: tuple[int, ...]) -> np.ndarray:
    # table[letter] = image letter; slot 0 unused
    t = np.zeros(len(perm) + 1, dtype=np.int16)
    for i, img in enumerate(perm):
        t[i + 1] = img
    return t


def _inv_perm(perm: tuple[int, ...]) -> tuple[int, ...]:
    out = [0] * len(perm)
    for i, img in enumerate(perm):
        out[img - 1] = i + 1
    return tuple(out)


@dataclass(frozen=True, eq=True)
class Portrait:
    """Sparse letterwise description of a basepoint-fixing automorphism.

    root_perm permutes the q+1 first letters; node_perms maps a vertex
    address to the permutation of 1..q applied to the letter right below
    that vertex.  Missing vertices act as the identity.
    """

    root_perm: tuple[int, ...]
    node_perms: Mapping[Address, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        q = len(self.root_perm) - 1
        if q < 2:
            raise ConfigError("root permutation must act on at least 3 letters")
        object.__setattr__(self, "root_perm", _check_perm(self.root_perm, q + 1, "root perm"))
        clean = {}
        for addr, perm in self.node_perms.items():
            if not addr:
                raise ConfigError("attach the basepoint permutation via root_perm")
            clean[tuple(addr)] = _check_perm(perm, q, f"node perm at {format_address(addr)}")
        object.__setattr__(self, "node_perms", clean)

    @property
    def q(self) -> int:
        return len(self.root_perm) - 1

    @classmethod
    def identity(cls, params: TreeParams) -> "Portrait":
        return cls(tuple(range(1, params.q + 2)), {})

    def __hash__(self):
        return hash((self.root_perm, tuple(sorted(self.node_perms.items()))))


class PortraitGen:
    kind = "portrait"
    grows = 0  # never changes address length

    def __init__(self, portrait: Portrait):
        self.portrait = portrait
        self._root = _table(portrait.root_perm)
        self._root_inv = _table(_inv_perm(portrait.root_perm))
        items = sorted(portrait.node_perms.items(), key=lambda kv: (len(kv[0]), kv[0]))
        self._nodes = [(addr, _table(p)) for addr, p in items]
        self._nodes_inv = [(addr, _table(_inv_perm(p))) for addr, p in items]

    def apply(self, addr: Address, inverted: bool) -> Address:
        if not addr:
            return addr
        perms = dict(self.portrait.node_perms)
        out = []
        if inverted:
            inv_root = _inv_perm(self.portrait.root_perm)
            out.append(inv_root[addr[0] - 1])
            for j in range(1, len(addr)):
                perm = perms.get(tuple(out), None)
                letter = addr[j]
                out.append(_inv_perm(perm)[letter - 1] if perm else letter)
        else:
            out.append(self.portrait.root_perm[addr[0] - 1])
            for j in range(1, len(addr)):
                perm = perms.get(addr[:j], None)
                letter = addr[j]
                out.append(perm[letter - 1] if perm else letter)
        return tuple(out)

    def batch(self, letters: np.ndarray, lengths: np.ndarray, inverted: bool):
        if letters.shape[1] == 0:
            return letters, lengths
        out = letters.copy()
        root = self._root_inv if inverted else self._root
        has0 = lengths >= 1
        out[has0, 0] = root[letters[has0, 0]]
        # the permutation below a vertex is keyed by the original prefix
        # going forward, by the preimage prefix (built so far) going backward
        ref = out if inverted else letters
        for addr, table in (self._nodes_inv if inverted else self._nodes):
            j = len(addr)
            if j >= letters.shape[1]:
                continue
            rows = lengths >= j + 1
            key = np.asarray(addr, dtype=letters.dtype)
            rows &= (ref[:, :j] == key).all(axis=1)
            out[rows, j] = table[letters[rows, j]]
        return out, lengths

    def to_json_obj(self) -> dict:
        return {
            "kind": self.kind,
            "root": list(self.portrait.root_perm),
            "nodes": {
                format_address(a): list(p)
                for a, p in sorted(self.portrait.node_perms.items())
            },
        }


class EdgeInversionGen:
    kind = "edge_inversion"
    grows = 1  # address length can change by one

    def apply(self, addr: Address, inverted: bool) -> Address:
        # self-inverse, so the flag is irrelevant
        if not addr:
            return (1,)
        if addr[0] == 1:
            if len(addr) == 1:
                return ROOT
            return (addr[1] + 1,) + addr[2:]
        return (1, addr[0] - 1) + addr[1:]

    def batch(self, letters: np.ndarray, lengths: np.ndarray, inverted: bool):
        n, width = letters.shape
        out = np.zeros_like(letters)
        new = lengths.copy()
        at_root = lengths == 0
        out[at_root, 0] = 1
        new[at_root] = 1
        m1 = (lengths >= 1) & (letters[:, 0] == 1)
        out[np.ix_(m1, np.arange(width - 1))] = letters[np.ix_(m1, np.arange(1, width))]
        new[m1] = lengths[m1] - 1
        bump = m1 & (lengths >= 2)
        out[bump, 0] += 1
        m2 = (lengths >= 1) & (letters[:, 0] >= 2)
        if width >= 2:
            out[np.ix_(m2, np.arange(2, width))] = letters[np.ix_(m2, np.arange(1, width - 1))]
            out[m2, 1] = letters[m2, 0] - 1
        out[m2, 0] = 1
        new[m2] = lengths[m2] + 1
        if np.any(new > width):
            raise MalformedAddressError("batch buffer too narrow for an inversion step")
        return out, new

    def to_json_obj(self) -> dict:
        return {"kind": self.kind}


class StepTranslationGen:
    """Unit shift along the standard line; the branch swap then the inversion."""

    kind = "step_translation"
    grows = 1

    _swap = None  # class-level cache of the 1<->2 letter table

    def __init__(self):
        self._edge = EdgeInversionGen()

    @staticmethod
    def _swap12(addr: Address) -> Address:
        if not addr:
            return addr
        a0 = {1: 2, 2: 1}.get(addr[0], addr[0])
        return (a0,) + addr[1:]

    def apply(self, addr: Address, inverted: bool) -> Address:
        if inverted:
            return self._swap12(self._edge.apply(addr, False))
        return self._edge.apply(self._swap12(addr), False)

    def _swap_batch(self, letters: np.ndarray, lengths: np.ndarray):
        out = letters.copy()
        has0 = lengths >= 1
        ones = has0 & (letters[:, 0] == 1)
        twos = has0 & (letters[:, 0] == 2)
        out[ones, 0] = 2
        out[twos, 0] = 1
        return out, lengths

    def batch(self, letters: np.ndarray, lengths: np.ndarray, inverted: bool):
        if inverted:
            letters, lengths = self._edge.batch(letters, lengths, False)
            return self._swap_batch(letters, lengths)
        letters, lengths = self._swap_batch(letters, lengths)
        return self._edge.batch(letters, lengths, False)

    def to_json_obj(self) -> dict:
        return {"kind": self.kind}


Generator = PortraitGen | EdgeInversionGen | StepTranslationGen


class TreeAutomorphism:
    """A word of (generator, inverted) pairs, applied left to right."""

    __slots__ = ("params", "word", "x0_image", "displacement", "_inverse")

    def __init__(self, params: TreeParams, word: Iterable[tuple[Generator, bool]]):
        self.params = params
        self.word = tuple((gen, bool(flag)) for gen, flag in word)
        img: Address = ROOT
        for gen, flag in self.word:
            img = gen.apply(img, flag)
        self.x0_image = img
        self.displacement = len(img)
        self._inverse = None

    # -- evaluation ---------------------------------------------------------

    def apply_vertex(self, addr: Address) -> Address:
        """Image of a vertex.  The input must respect the depth cap; the
        image may be up to `displacement` deeper."""
        check_address(self.params, addr)
        for gen, flag in self.word:
            addr = gen.apply(addr, flag)
        return addr

    def apply_batch(self, letters: np.ndarray, lengths: np.ndarray):
        """Vectorized apply_vertex over rows of a letter matrix."""
        growth = sum(gen.grows for gen, _ in self.word)
        if growth:
            pad = np.zeros((letters.shape[0], growth), dtype=letters.dtype)
            letters = np.concatenate([letters, pad], axis=1)
        else:
            letters = letters.copy()
        lengths = np.asarray(lengths).copy()
        for gen, flag in self.word:
            letters, lengths = gen.batch(letters, lengths, flag)
        return letters, lengths

    # -- algebra ------------------------------------------------------------

    def inverse(self) -> "TreeAutomorphism":
        if self._inverse is None:
            inv = TreeAutomorphism(
                self.params, [(gen, not flag) for gen, flag in reversed(self.word)]
            )
            inv._inverse = self
            self._inverse = inv
        return self._inverse

    def word_cost(self) -> int:
        """How much deeper than its input an evaluation can get."""
        return sum(gen.grows for gen, _ in self.word)

    def to_json_obj(self) -> list[dict]:
        out = []
        for gen, flag in self.word:
            rec = gen.to_json_obj()
            if flag:
                rec = dict(rec, inverted=True)
            out.append(rec)
        return out

    def __repr__(self) -> str:
        tags = [("~" if flag else "") + gen.kind for gen, flag in self.word]
        return f"TreeAutomorphism([{', '.join(tags)}] -> x0 at {format_address(self.x0_image)})"


# -- factories (the public construction surface) ----------------------------


def identity(params: TreeParams) -> TreeAutomorphism:
    return TreeAutomorphism(params, [])


def from_portrait(params: TreeParams, portrait: Portrait) -> TreeAutomorphism:
    if portrait.q != params.q:
        raise ConfigError(f"portrait is for q={portrait.q}, tree has q={params.q}")
    for addr in portrait.node_perms:
        check_address(params, addr)
    return TreeAutomorphism(params, [(PortraitGen(portrait), False)])


def edge_inversion(params: TreeParams) -> TreeAutomorphism:
    return TreeAutomorphism(params, [(EdgeInversionGen(), False)])


def step_translation(params: TreeParams) -> TreeAutomorphism:
    return TreeAutomorphism(params, [(StepTranslationGen(), False)])


def compose(g: TreeAutomorphism, h: TreeAutomorphism) -> TreeAutomorphism:
    """g after h (apply h first)."""
    if g.params != h.params:
        raise ConfigError("cannot compose automorphisms over different trees")
    out = TreeAutomorphism(g.params, h.word + g.word)
    if out.displacement > g.params.depth_cap:
        raise DepthBudgetError(
            f"composition moves the basepoint to depth {out.displacement}, "
            f"past the cap {g.params.depth_cap}"
        )
    return out


def inverse(g: TreeAutomorphism) -> TreeAutomorphism:
    return g.inverse()


def apply_vertex(g: TreeAutomorphism, addr: Address) -> Address:
    return g.apply_vertex(addr)


def line_vertex(k: int) -> Address:
    """The standard line: x_k = 1^k for k >= 0, x_{-k} = 2 1^(k-1)."""
    if k >= 0:
        return (1,) * k
    return (2,) + (1,) * (-k - 1)


def random_portrait(params: TreeParams, depth: int, rng: np.random.Generator) -> Portrait:
    """Uniform portrait down to `depth`; identity below."""
    if depth < 1:
        raise ConfigError("portrait depth must be >= 1")
    if depth > params.depth_cap:
        raise DepthBudgetError(f"portrait depth {depth} exceeds cap {params.depth_cap}")
    root = tuple(int(x) for x in rng.permutation(params.q + 1) + 1)
    nodes = {}
    for level in range(1, depth):
        for addr in addresses_at_depth(params, level):
            nodes[addr] = tuple(int(x) for x in rng.permutation(params.q) + 1)
    return Portrait(root, nodes)


def random_rooted(params: TreeParams, depth: int, seed: int) -> TreeAutomorphism:
    """Seeded uniformly random basepoint-fixing automorphism to `depth`."""
    rng = np.random.default_rng(seed)
    return from_portrait(params, random_portrait(params, depth, rng))


# -- serialization -----------------------------------------------------------


def word_from_json(params: TreeParams, obj: list[dict]) -> TreeAutomorphism:
    word = []
    for rec in obj:
        kind = rec.get("kind")
        flag = bool(rec.get("inverted", False))
        if kind == "portrait":
            portrait = Portrait(
                tuple(rec["root"]),
                {parse_address(a): tuple(p) for a, p in rec.get("nodes", {}).items()},
            )
            if portrait.q != params.q:
                raise ConfigError("portrait arity does not match the tree")
            word.append((PortraitGen(portrait), flag))
        elif kind == "edge_inversion":
            word.append((EdgeInversionGen(), flag))
        elif kind == "step_translation":
            word.append((StepTranslationGen(), flag))
        else:
            raise ConfigError(f"unknown generator kind {kind!r}")
    return TreeAutomorphism(params, word)
