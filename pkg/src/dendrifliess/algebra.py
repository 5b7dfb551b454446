"""The free dendriform algebra on decorated planar binary trees.

Dendriform words are stored canonically as decorated trees (the tree
isomorphism is applied eagerly), so equality of words is plain tree
equality.  Polynomials carry exact ``Fraction`` coefficients by default;
matrix coefficients (numpy arrays of one fixed shape) are also accepted.

Products provided: the two dendriform half-products ``prec`` / ``succ``,
their associative sum ``shuffle``, the pre-Lie combination ``pre_lie``,
and bilinear grafting.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

import numpy as np

from .trees import (
    DLEAF,
    AlphabetError,
    DecoratedTree,
    TreeError,
    canonical_key,
    decorate,
    enumerate_trees,
    graft,
    tree_from_json,
    tree_to_json,
)

__all__ = [
    "DendriformError",
    "ParseError",
    "ParenthesisWord",
    "parse_parenthesis_word",
    "delta_to_tree",
    "TreePolynomial",
    "shuffle",
    "prec",
    "succ",
    "pre_lie",
    "graft_poly",
    "char_trees",
    "parse_dendriform_expr",
    "render_tree_expr",
    "render_polynomial",
]

Coefficient = Fraction | np.ndarray


class DendriformError(ValueError):
    """Domain error in a dendriform product (disallowed empty-word slot, shapes)."""


class ParseError(ValueError):
    """Invalid surface syntax; carries the violated condition when known."""

    def __init__(self, message: str, condition: str | None = None):
        super().__init__(message)
        self.condition = condition


# ---------------------------------------------------------------------------
# coefficients

def _is_zero(c: Coefficient) -> bool:
    if isinstance(c, np.ndarray):
        return not np.any(c)
    return c == 0


def _mul(a: Coefficient, b: Coefficient) -> Coefficient:
    a_mat = isinstance(a, np.ndarray)
    b_mat = isinstance(b, np.ndarray)
    if a_mat and b_mat:
        raise DendriformError("cannot multiply two matrix coefficients in a tree product")
    if a_mat or b_mat:
        return (a * float(b)) if a_mat else (float(a) * b)
    return a * b


def _coeff_shape(c: Coefficient) -> tuple[int, ...] | None:
    return c.shape if isinstance(c, np.ndarray) else None


def _coeff_eq(a: Coefficient, b: Coefficient) -> bool:
    a_mat = isinstance(a, np.ndarray)
    b_mat = isinstance(b, np.ndarray)
    if a_mat != b_mat:
        return False
    if a_mat:
        return a.shape == b.shape and bool(np.array_equal(a, b))
    return a == b


# ---------------------------------------------------------------------------
# tree polynomials

class TreePolynomial:
    """Finite linear combination of decorated trees.

    Immutable; zero coefficients are never stored; all coefficients of one
    polynomial share a single shape (scalars or one matrix shape).
    """

    __slots__ = ("_terms", "_shape")

    def __init__(self, terms: Mapping[DecoratedTree, Coefficient] | None = None):
        clean: dict[DecoratedTree, Coefficient] = {}
        shape: tuple[int, ...] | None | str = "unset"
        for t, c in (terms or {}).items():
            if _is_zero(c):
                continue
            s = _coeff_shape(c)
            if shape == "unset":
                shape = s
            elif shape != s:
                raise DendriformError("mixed coefficient shapes in one polynomial")
            if isinstance(c, np.ndarray):
                c = c.copy()
                c.setflags(write=False)
            clean[t] = c
        self._terms = clean
        self._shape = None if shape == "unset" else shape

    # construction helpers -------------------------------------------------
    @classmethod
    def zero(cls) -> "TreePolynomial":
        return cls()

    @classmethod
    def single(cls, tree: DecoratedTree, coeff: Coefficient = Fraction(1)) -> "TreePolynomial":
        return cls({tree: coeff})

    @classmethod
    def unit(cls) -> "TreePolynomial":
        """The empty word (leaf) with coefficient 1: the shuffle unit."""
        return cls({DLEAF: Fraction(1)})

    # inspection -----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...] | None:
        return self._shape

    def coefficient(self, tree: DecoratedTree) -> Coefficient:
        return self._terms.get(tree, Fraction(0))

    def support(self) -> set[DecoratedTree]:
        return set(self._terms)

    def items(self) -> Iterator[tuple[DecoratedTree, Coefficient]]:
        return iter(sorted(self._terms.items(), key=lambda kv: canonical_key(kv[0])))

    def is_zero(self) -> bool:
        return not self._terms

    def has_leaf_term(self) -> bool:
        return DLEAF in self._terms

    def max_order(self) -> int:
        return max((t.order for t in self._terms), default=0)

    def homogeneous_part(self, n: int) -> "TreePolynomial":
        return TreePolynomial({t: c for t, c in self._terms.items() if t.order == n})

    def truncate(self, n: int) -> "TreePolynomial":
        return TreePolynomial({t: c for t, c in self._terms.items() if t.order <= n})

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TreePolynomial):
            return NotImplemented
        if set(self._terms) != set(other._terms):
            return False
        return all(_coeff_eq(c, other._terms[t]) for t, c in self._terms.items())

    def __hash__(self):
        raise TypeError("TreePolynomial is not hashable")

    def __repr__(self) -> str:
        return f"TreePolynomial({render_polynomial(self)})"

    # arithmetic -----------------------------------------------------------
    def __add__(self, other: "TreePolynomial") -> "TreePolynomial":
        out = dict(self._terms)
        for t, c in other._terms.items():
            cur = out.get(t)
            out[t] = c if cur is None else cur + c
        return TreePolynomial(out)

    def __sub__(self, other: "TreePolynomial") -> "TreePolynomial":
        return self + (-other)

    def __neg__(self) -> "TreePolynomial":
        return TreePolynomial({t: -c for t, c in self._terms.items()})

    def scale(self, k: Coefficient) -> "TreePolynomial":
        if _is_zero(k):
            return TreePolynomial()
        return TreePolynomial({t: _mul(k, c) for t, c in self._terms.items()})

    def __rmul__(self, k) -> "TreePolynomial":
        return self.scale(k if isinstance(k, (Fraction, np.ndarray)) else Fraction(k))

    # serialization --------------------------------------------------------
    def to_json(self) -> list[dict]:
        out = []
        for t, c in self.items():
            coeff = c.tolist() if isinstance(c, np.ndarray) else str(c)
            out.append({"coeff": coeff, "tree": tree_to_json(t)})
        return out

    @classmethod
    def from_json(cls, data: Iterable[dict]) -> "TreePolynomial":
        terms: dict[DecoratedTree, Coefficient] = {}
        for rec in data:
            raw = rec["coeff"]
            coeff: Coefficient = np.asarray(raw, dtype=float) if isinstance(raw, list) \
                else Fraction(raw)
            tree = tree_from_json(rec["tree"])
            terms[tree] = terms.get(tree, Fraction(0)) + coeff
        return cls(terms)


# ---------------------------------------------------------------------------
# tree-level products (memoized, integer multiplicities)

@lru_cache(maxsize=200_000)
def _shuffle_trees(t1: DecoratedTree, t2: DecoratedTree) -> tuple[tuple[DecoratedTree, int], ...]:
    if t1.is_leaf:
        return ((t2, 1),)
    if t2.is_leaf:
        return ((t1, 1),)
    out: Counter[DecoratedTree] = Counter()
    # left branch: t1^1 v_x ( t1^2 sh t2 )
    for s, k in _shuffle_trees(t1.right, t2):
        out[DecoratedTree(t1.left, t1.letter, s)] += k
    # right branch: ( t1 sh t2^1 ) v_y t2^2
    for s, k in _shuffle_trees(t1, t2.left):
        out[DecoratedTree(s, t2.letter, t2.right)] += k
    return tuple(out.items())


def _prec_trees(t1: DecoratedTree, t2: DecoratedTree) -> tuple[tuple[DecoratedTree, int], ...]:
    if t1.is_leaf:
        raise DendriformError("empty word is not allowed as the left operand of prec")
    if t2.is_leaf:
        return ((t1, 1),)
    out: Counter[DecoratedTree] = Counter()
    for s, k in _shuffle_trees(t1.right, t2):
        out[DecoratedTree(t1.left, t1.letter, s)] += k
    return tuple(out.items())


def _succ_trees(t1: DecoratedTree, t2: DecoratedTree) -> tuple[tuple[DecoratedTree, int], ...]:
    if t2.is_leaf:
        raise DendriformError("empty word is not allowed as the right operand of succ")
    if t1.is_leaf:
        return ((t2, 1),)
    out: Counter[DecoratedTree] = Counter()
    for s, k in _shuffle_trees(t1, t2.left):
        out[DecoratedTree(s, t2.letter, t2.right)] += k
    return tuple(out.items())


def _bilinear(p: TreePolynomial, q: TreePolynomial, tree_product) -> TreePolynomial:
    out: dict[DecoratedTree, Coefficient] = {}
    for t1, c1 in p._terms.items():
        for t2, c2 in q._terms.items():
            c = _mul(c1, c2)
            for s, k in tree_product(t1, t2):
                cur = out.get(s)
                kc = _mul(Fraction(k), c) if not isinstance(c, np.ndarray) else k * c
                out[s] = kc if cur is None else cur + kc
    return TreePolynomial(out)


def shuffle(p: TreePolynomial, q: TreePolynomial) -> TreePolynomial:
    """Associative tree shuffle; the empty word is its two-sided unit."""
    return _bilinear(p, q, _shuffle_trees)


def prec(p: TreePolynomial, q: TreePolynomial) -> TreePolynomial:
    """Left half-product; the left operand must have no empty-word term."""
    if p.has_leaf_term():
        raise DendriformError("empty word is not allowed as the left operand of prec")
    return _bilinear(p, q, _prec_trees)


def succ(p: TreePolynomial, q: TreePolynomial) -> TreePolynomial:
    """Right half-product; the right operand must have no empty-word term."""
    if q.has_leaf_term():
        raise DendriformError("empty word is not allowed as the right operand of succ")
    return _bilinear(p, q, _succ_trees)


def pre_lie(p: TreePolynomial, q: TreePolynomial) -> TreePolynomial:
    """The combination prec - succ (non-associative)."""
    return prec(p, q) - succ(p, q)


def graft_poly(p: TreePolynomial, letter: int, q: TreePolynomial) -> TreePolynomial:
    """Bilinear extension of decorated grafting."""
    def product(t1: DecoratedTree, t2: DecoratedTree):
        return ((DecoratedTree(t1, letter, t2), 1),)

    return _bilinear(p, q, product)


def char_trees(n: int, letter: int = 1) -> TreePolynomial:
    """Sum of all order-``n`` trees decorated with ``letter``^n, coefficients 1."""
    return TreePolynomial({
        decorate((letter,) * n, skel): Fraction(1) for skel in enumerate_trees(n)
    })


# ---------------------------------------------------------------------------
# parenthesis words

_TOKEN_RE = re.compile(r"x\d+|\[|\]|\s+")


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unknown token at position {pos} in {text!r}")
        tok = m.group(0)
        pos = m.end()
        if not tok.isspace():
            tokens.append(tok)
    return tokens


@dataclass(frozen=True)
class ParenthesisWord:
    """A validated token sequence over the letters and '[' / ']'."""

    tokens: tuple[str, ...]

    def __str__(self) -> str:
        return "".join(self.tokens)


def _matching_brackets(tokens: list[str]) -> dict[int, int]:
    stack: list[int] = []
    match: dict[int, int] = {}
    for i, tok in enumerate(tokens):
        if tok == "[":
            stack.append(i)
        elif tok == "]":
            if not stack:
                raise ParseError("unbalanced ']' (condition i)", condition="i")
            match[stack.pop()] = i
    if stack:
        raise ParseError("unbalanced '[' (condition i)", condition="i")
    return match


def parse_parenthesis_word(text: str) -> ParenthesisWord:
    """Validate a parenthesis word; rejections name the violated condition."""
    tokens = _tokenize(text)
    if not tokens:
        return ParenthesisWord(())
    match = _matching_brackets(tokens)
    for i in range(len(tokens) - 1):
        a, b = tokens[i], tokens[i + 1]
        if a.startswith("x") and b.startswith("x"):
            raise ParseError("adjacent bare letters (condition ii)", condition="ii")
        if (a, b) == ("[", "]") or (a, b) == ("]", "["):
            raise ParseError(f"forbidden pair '{a}{b}' (condition iii)", condition="iii")
    if tokens[0] == "[" and match[0] == len(tokens) - 1:
        raise ParseError("globally wrapped word (condition iv)", condition="iv")
    for i, j in match.items():
        if i + 1 in match and match[i + 1] == j - 1:
            raise ParseError("redundant double wrapping (condition v)", condition="v")
        if 0 < i and j + 1 < len(tokens) \
                and tokens[i - 1].startswith("x") and tokens[j + 1].startswith("x"):
            raise ParseError(
                "bracket group flanked by letters on both sides (condition v)",
                condition="v")
    pw = ParenthesisWord(tuple(tokens))
    delta_to_tree(pw)  # any residual structural defect surfaces here
    return pw


def delta_to_tree(pw: ParenthesisWord) -> DecoratedTree:
    """The decorated tree of a parenthesis word (delta followed by the tree map).

    Every nonempty parenthesis word has the shape
    ``[group]? letter [group]?`` with groups again parenthesis words, and the
    three shapes map to grafting a leaf/subtree pair under the letter.
    """
    tokens = pw.tokens

    def parse_range(lo: int, hi: int) -> DecoratedTree:
        if lo == hi:
            return DLEAF
        left = DLEAF
        if tokens[lo] == "[":
            close = _find_close(lo, hi)
            left = parse_range(lo + 1, close)
            lo = close + 1
        if lo >= hi or not tokens[lo].startswith("x"):
            raise ParseError(f"expected a letter in {''.join(tokens)!r}")
        letter = int(tokens[lo][1:])
        lo += 1
        right = DLEAF
        if lo < hi:
            if tokens[lo] != "[" or _find_close(lo, hi) != hi - 1:
                raise ParseError(f"malformed parenthesis word {''.join(tokens)!r}")
            right = parse_range(lo + 1, hi - 1)
            lo = hi
        return DecoratedTree(left, letter, right)

    def _find_close(lo: int, hi: int) -> int:
        depth = 0
        for i in range(lo, hi):
            if tokens[i] == "[":
                depth += 1
            elif tokens[i] == "]":
                depth -= 1
                if depth == 0:
                    return i
        raise ParseError("unbalanced '[' (condition i)", condition="i")

    return parse_range(0, len(tokens))


# ---------------------------------------------------------------------------
# dendriform expressions (ASCII surface syntax)

_EXPR_TOKEN_RE = re.compile(r"x\d+|\d+/\d+|\d+|[()<>+\-*]|\s+")


class _ExprParser:
    """Recursive descent for
    expr   := term (('+'|'-') term)*
    term   := [rational '*'] factor
    factor := letter | '(' expr ('<'|'>') expr ')'
    Products must be fully parenthesized (they are non-associative).
    """

    def __init__(self, text: str):
        self.text = text
        self.tokens: list[str] = []
        pos = 0
        while pos < len(text):
            m = _EXPR_TOKEN_RE.match(text, pos)
            if m is None:
                raise ParseError(f"unknown token at position {pos} in {text!r}")
            tok = m.group(0)
            pos = m.end()
            if not tok.isspace():
                self.tokens.append(tok)
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"unexpected end of expression {self.text!r}")
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, got {tok!r} in {self.text!r}")
        self.pos += 1
        return tok

    def parse(self) -> TreePolynomial:
        out = self.expr()
        if self.peek() is not None:
            raise ParseError(f"trailing tokens from {self.peek()!r} in {self.text!r}")
        return out

    def expr(self) -> TreePolynomial:
        negate = False
        if self.peek() in ("+", "-"):
            negate = self.take() == "-"
        out = self.term()
        if negate:
            out = -out
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> TreePolynomial:
        coeff = Fraction(1)
        tok = self.peek()
        if tok is not None and re.fullmatch(r"\d+(/\d+)?", tok):
            self.take()
            coeff = Fraction(tok)
            self.take("*")
        return self.factor().scale(coeff)

    def factor(self) -> TreePolynomial:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"unexpected end of expression {self.text!r}")
        if tok.startswith("x"):
            self.take()
            letter = int(tok[1:])
            return TreePolynomial.single(graft(DLEAF, letter, DLEAF))
        if tok == "(":
            self.take("(")
            lhs = self.expr()
            op = self.take()
            if op not in ("<", ">"):
                raise ParseError(
                    f"products must be parenthesized pairs; got {op!r} in {self.text!r}")
            rhs = self.expr()
            self.take(")")
            return prec(lhs, rhs) if op == "<" else succ(lhs, rhs)
        raise ParseError(f"unexpected token {tok!r} in {self.text!r}")


def parse_dendriform_expr(text: str) -> TreePolynomial:
    """Parse an ASCII '<' / '>' expression into a polynomial."""
    return _ExprParser(text).parse()


def render_tree_expr(t: DecoratedTree) -> str:
    """Fully parenthesized '<' / '>' rendering of one tree; '1' for the leaf."""
    if t.is_leaf:
        return "1"
    assert t.left is not None and t.right is not None
    root = f"x{t.letter}"
    if t.left.is_leaf and t.right.is_leaf:
        return root
    if t.left.is_leaf:
        return f"({root}<{render_tree_expr(t.right)})"
    if t.right.is_leaf:
        return f"({render_tree_expr(t.left)}>{root})"
    # left-associated choice of the two equal readings of l > x < r
    return f"(({render_tree_expr(t.left)}>{root})<{render_tree_expr(t.right)})"


def render_polynomial(p: TreePolynomial) -> str:
    if p.is_zero():
        return "0"
    parts: list[str] = []
    for t, c in p.items():
        expr = render_tree_expr(t)
        if isinstance(c, np.ndarray):
            parts.append(f"+ {np.array2string(c, separator=',')}*{expr}")
        elif c == 1:
            parts.append(f"+ {expr}")
        elif c == -1:
            parts.append(f"- {expr}")
        else:
            sign = "-" if c < 0 else "+"
            parts.append(f"{sign} {abs(c)}*{expr}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text
