"""Planar binary trees as a free magma, with decorations.

Trees are immutable and hashable; the trivial tree (leaf) is the shared
constants ``LEAF`` / ``DLEAF``.  Order counts interior vertices.  Decorated
trees carry one alphabet letter (a non-negative int, 0 reserved for the
drift channel) per interior vertex; the foliation reads them in in-order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

__all__ = [
    "AlphabetError",
    "TreeError",
    "EnumerationCapError",
    "PlanarTree",
    "DecoratedTree",
    "LEAF",
    "DLEAF",
    "Word",
    "parse_word",
    "word_to_str",
    "graft",
    "graft_skeletons",
    "skeleton",
    "foliation",
    "decorate",
    "catalan",
    "enumerate_trees",
    "enumerate_decorated_trees",
    "left_comb",
    "right_comb",
    "left_comb_skeleton",
    "right_comb_skeleton",
    "tree_factorial",
    "canonical_key",
    "skeleton_string",
    "skeleton_from_string",
    "tree_to_json",
    "tree_from_json",
    "DEFAULT_ENUMERATION_CAP",
]

Word = tuple[int, ...]

DEFAULT_ENUMERATION_CAP = 14


class TreeError(ValueError):
    """Structural misuse of tree operations (arity/shape mismatches)."""


class AlphabetError(ValueError):
    """A letter index outside the configured alphabet."""


class EnumerationCapError(ValueError):
    """Requested enumeration order above the configured cap."""


@dataclass(frozen=True)
class PlanarTree:
    """Undecorated planar binary tree; a leaf has both children ``None``."""

    left: "PlanarTree | None" = None
    right: "PlanarTree | None" = None
    order: int = field(default=0, compare=False, hash=False)

    def __post_init__(self) -> None:
        if (self.left is None) != (self.right is None):
            raise TreeError("a node needs both children; a leaf has neither")
        if self.left is not None:
            assert self.right is not None
            object.__setattr__(self, "order", self.left.order + self.right.order + 1)

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def __repr__(self) -> str:
        return f"PlanarTree({skeleton_string(self)!r})"


@dataclass(frozen=True)
class DecoratedTree:
    """Planar binary tree with one letter per interior vertex."""

    left: "DecoratedTree | None" = None
    letter: int | None = None
    right: "DecoratedTree | None" = None
    order: int = field(default=0, compare=False, hash=False)

    def __post_init__(self) -> None:
        filled = (self.left is not None, self.letter is not None, self.right is not None)
        if any(filled) and not all(filled):
            raise TreeError("a decorated node needs left child, letter and right child")
        if self.letter is not None:
            if self.letter < 0:
                raise AlphabetError(f"letter index must be >= 0, got {self.letter}")
            assert self.left is not None and self.right is not None
            object.__setattr__(self, "order", self.left.order + self.right.order + 1)

    @property
    def is_leaf(self) -> bool:
        return self.letter is None

    def __repr__(self) -> str:
        from .algebra import render_tree_expr  # local to avoid a cycle

        return f"DecoratedTree({render_tree_expr(self)!r})"


LEAF = PlanarTree()
DLEAF = DecoratedTree()


def graft(left: DecoratedTree, letter: int, right: DecoratedTree,
          alphabet_size: int | None = None) -> DecoratedTree:
    """Decorated binary grafting: join two trees under a new ``letter`` root."""
    if letter < 0 or (alphabet_size is not None and letter > alphabet_size):
        raise AlphabetError(
            f"letter x{letter} outside alphabet x0..x{alphabet_size}")
    return DecoratedTree(left, letter, right)


def graft_skeletons(left: PlanarTree, right: PlanarTree) -> PlanarTree:
    """Undecorated binary grafting."""
    return PlanarTree(left, right)


def skeleton(t: DecoratedTree) -> PlanarTree:
    """Erase decorations."""
    if t.is_leaf:
        return LEAF
    assert t.left is not None and t.right is not None
    return PlanarTree(skeleton(t.left), skeleton(t.right))


def foliation(t: DecoratedTree) -> Word:
    """In-order read of the interior-vertex letters."""
    if t.is_leaf:
        return ()
    assert t.left is not None and t.right is not None and t.letter is not None
    return foliation(t.left) + (t.letter,) + foliation(t.right)


def decorate(word: Sequence[int], skel: PlanarTree) -> DecoratedTree:
    """Attach ``word`` to the interior vertices of ``skel`` in in-order.

    Vertex ``v_j`` is where the paths from leaves ``j`` and ``j+1`` join,
    which is exactly the in-order position of the vertex.
    """
    word = tuple(word)
    if len(word) != skel.order:
        raise TreeError(
            f"word length {len(word)} != tree order {skel.order}")

    def rec(s: PlanarTree, lo: int) -> DecoratedTree:
        if s.is_leaf:
            return DLEAF
        assert s.left is not None and s.right is not None
        left = rec(s.left, lo)
        root = lo + s.left.order
        right = rec(s.right, root + 1)
        return DecoratedTree(left, word[root], right)

    return rec(skel, 0)


def catalan(n: int) -> int:
    """n-th Catalan number, exact."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return math.comb(2 * n, n) // (n + 1)


@lru_cache(maxsize=None)
def _enumerate(n: int) -> tuple[PlanarTree, ...]:
    if n == 0:
        return (LEAF,)
    out: list[PlanarTree] = []
    for k in range(n):
        for l in _enumerate(k):
            for r in _enumerate(n - 1 - k):
                out.append(PlanarTree(l, r))
    return tuple(out)


def enumerate_trees(n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> tuple[PlanarTree, ...]:
    """All planar binary trees of order ``n`` in canonical order.

    Canonical order is (left-subtree key, right-subtree key) lexicographic,
    which the Segner-style generation produces directly.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > cap:
        raise EnumerationCapError(
            f"order {n} above enumeration cap {cap} (C_{n} trees)")
    return _enumerate(n)


def enumerate_decorated_trees(n: int, alphabet_size: int,
                              cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[DecoratedTree]:
    """All trees of order ``n`` decorated with all words over x0..x<alphabet_size>."""
    import itertools

    letters = range(alphabet_size + 1)
    for skel in enumerate_trees(n, cap=cap):
        for word in itertools.product(letters, repeat=n):
            yield decorate(word, skel)


def left_comb(word: Sequence[int]) -> DecoratedTree:
    """Left-comb tree on ``word``; the first letter sits at the root.

    This orientation makes the iterated integral over a left comb coincide
    with the classical recursion E_{x_i eta'} = int u_i E_{eta'}.
    """
    word = tuple(word)
    if not word:
        return DLEAF
    return DecoratedTree(DLEAF, word[0], left_comb(word[1:]))


def right_comb(word: Sequence[int]) -> DecoratedTree:
    """Right-comb tree on ``word``; the last letter sits at the root."""
    word = tuple(word)
    if not word:
        return DLEAF
    return DecoratedTree(right_comb(word[:-1]), word[-1], DLEAF)


def left_comb_skeleton(n: int) -> PlanarTree:
    t = LEAF
    for _ in range(n):
        t = PlanarTree(LEAF, t)
    return t


def right_comb_skeleton(n: int) -> PlanarTree:
    t = LEAF
    for _ in range(n):
        t = PlanarTree(t, LEAF)
    return t


def tree_factorial(t: PlanarTree | DecoratedTree) -> int:
    """Recursive tree factorial; equals n! on combs.

    The unit value on the leaf is 1 (the multiplicative unit), which is what
    makes gamma(comb of order n) = n! come out of the recursion.
    """
    if t.is_leaf:
        return 1
    assert t.left is not None and t.right is not None
    return (t.left.order + t.right.order + 1) * tree_factorial(t.left) * tree_factorial(t.right)


def canonical_key(t: DecoratedTree):
    """Sort key realizing the canonical order on decorated trees."""
    if t.is_leaf:
        return (0,)
    assert t.left is not None and t.right is not None and t.letter is not None
    return (t.order, canonical_key(t.left), t.letter, canonical_key(t.right))


def skeleton_string(t: PlanarTree) -> str:
    """Balanced-parenthesis encoding: leaf -> '', node -> skel(l) + '(' + skel(r) + ')'."""
    if t.is_leaf:
        return ""
    assert t.left is not None and t.right is not None
    return skeleton_string(t.left) + "(" + skeleton_string(t.right) + ")"


def skeleton_from_string(text: str) -> PlanarTree:
    """Inverse of :func:`skeleton_string`."""
    pos = 0

    def rec() -> PlanarTree:
        nonlocal pos
        t = LEAF
        while pos < len(text) and text[pos] == "(":
            pos += 1
            inner = rec()
            if pos >= len(text) or text[pos] != ")":
                raise TreeError(f"unbalanced skeleton string {text!r}")
            pos += 1
            t = PlanarTree(t, inner)
        return t

    # Build left-to-right: '(' groups attach as right children of a new root.
    out = rec()
    if pos != len(text):
        raise TreeError(f"trailing characters in skeleton string {text!r}")
    return out


def tree_to_json(t: DecoratedTree) -> dict | None:
    """JSON form {"l": ..., "x": i, "r": ...}; leaf -> null."""
    if t.is_leaf:
        return None
    assert t.left is not None and t.right is not None
    return {"l": tree_to_json(t.left), "x": t.letter, "r": tree_to_json(t.right)}


def tree_from_json(obj: dict | None) -> DecoratedTree:
    if obj is None:
        return DLEAF
    return DecoratedTree(tree_from_json(obj["l"]), int(obj["x"]), tree_from_json(obj["r"]))


def tree_json_str(t: DecoratedTree) -> str:
    return json.dumps(tree_to_json(t))


def parse_word(text: str) -> Word:
    """Parse a catenated word like 'x1x2x0' into letter indices."""
    out: list[int] = []
    i = 0
    while i < len(text):
        if text[i] != "x":
            raise AlphabetError(f"expected 'x<digits>' at position {i} in {text!r}")
        j = i + 1
        while j < len(text) and text[j].isdigit():
            j += 1
        if j == i + 1:
            raise AlphabetError(f"missing letter index at position {i} in {text!r}")
        out.append(int(text[i + 1:j]))
        i = j
    return tuple(out)


def word_to_str(word: Sequence[int]) -> str:
    return "".join(f"x{i}" for i in word)
