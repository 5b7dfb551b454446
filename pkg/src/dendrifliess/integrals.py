"""Numerical evaluation of non-commutative iterated integrals over trees.

The defining recursion is followed literally on the shared uniform grid: for
a tree ``l v_x r`` the integrand at each node is ``E_l . u_x . E_r`` and the
running integral is a composite trapezoid (second-order scheme).  Subtree
values are memoized per evaluator, so a polynomial costs one vectorized pass
per distinct subtree.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import TreePolynomial, char_trees, shuffle
from .signals import (
    MatrixSignal,
    ScalarSignal,
    SignalError,
    stack_norm1,
    trapezoid_prefix,
    ubar,
)
from .trees import DecoratedTree, Word, foliation, left_comb, skeleton, tree_factorial

__all__ = [
    "EvaluationResult",
    "TreeEvaluator",
    "evaluate_tree",
    "evaluate_polynomial",
    "check_product_identity",
    "bound_tree_factorial",
    "bound_left_comb",
    "check_ubar_domination",
    "check_factorial_identity",
]


@dataclass(frozen=True, eq=False)
class EvaluationResult:
    """Values of an iterated integral (or polynomial thereof) on the grid."""

    grid: np.ndarray
    values: np.ndarray  # (N+1, n, n)
    tree: DecoratedTree | TreePolynomial | None = None
    scheme_order: int = 2

    @property
    def at_horizon(self) -> np.ndarray:
        return self.values[-1]

    def to_csv(self, path: str) -> None:
        n = self.values.shape[-1]
        header = ["t"] + [f"e{i + 1}{j + 1}" for i in range(n) for j in range(n)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for t, mat in zip(self.grid, self.values):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in mat.ravel()])

    def to_json(self) -> str:
        return json.dumps({
            "t": self.grid.tolist(),
            "values": self.values.tolist(),
            "scheme_order": self.scheme_order,
        })


class TreeEvaluator:
    """Evaluates trees against one signal, sharing a subtree cache."""

    def __init__(self, u: MatrixSignal):
        self.u = u
        self._eye = np.broadcast_to(
            np.eye(u.dim), (u.num_steps + 1, u.dim, u.dim))
        self._cache: dict[DecoratedTree, np.ndarray] = {}

    def values(self, t: DecoratedTree) -> np.ndarray:
        if t.is_leaf:
            return self._eye
        cached = self._cache.get(t)
        if cached is not None:
            return cached
        assert t.left is not None and t.right is not None and t.letter is not None
        if t.letter > self.u.m:
            raise SignalError(
                f"tree letter x{t.letter} outside signal alphabet x0..x{self.u.m}")
        left = self.values(t.left)
        right = self.values(t.right)
        ch = self.u.channel(t.letter)
        if t.left.is_leaf and t.right.is_leaf:
            integrand = ch
        elif t.left.is_leaf:
            integrand = ch @ right
        elif t.right.is_leaf:
            integrand = left @ ch
        else:
            integrand = left @ ch @ right
        out = trapezoid_prefix(integrand, self.u.h)
        self._cache[t] = out
        return out

    def polynomial(self, p: TreePolynomial) -> np.ndarray:
        nodes = self.u.num_steps + 1
        if p.shape is not None:
            ell = p.shape[0]
            acc = np.zeros((nodes, ell, self.u.dim))
        else:
            acc = np.zeros((nodes, self.u.dim, self.u.dim))
        for tree, coeff in p.items():
            e = self.values(tree)
            if isinstance(coeff, np.ndarray):
                acc = acc + coeff @ e  # matrix coefficients act by left multiplication
            else:
                acc = acc + float(coeff) * e
        return acc


def evaluate_tree(t: DecoratedTree, u: MatrixSignal) -> EvaluationResult:
    return EvaluationResult(u.grid, TreeEvaluator(u).values(t), tree=t)


def evaluate_polynomial(p: TreePolynomial, u: MatrixSignal) -> EvaluationResult:
    return EvaluationResult(u.grid, TreeEvaluator(u).polynomial(p), tree=p)


def check_product_identity(t1: DecoratedTree, t2: DecoratedTree,
                           u: MatrixSignal) -> float:
    """Max-over-grid residual of E_t1 . E_t2 = E_{t1 shuffle t2}."""
    ev = TreeEvaluator(u)
    lhs = ev.values(t1) @ ev.values(t2)
    rhs = ev.polynomial(shuffle(
        TreePolynomial.single(t1), TreePolynomial.single(t2)))
    return float(stack_norm1(lhs - rhs).max())


def _ubar_integrals(u: MatrixSignal) -> np.ndarray:
    """Running integrals of the dominating scalar channels; shape (m, N+1)."""
    bar = ubar(u)
    return trapezoid_prefix(bar.samples.T, u.h).T


def bound_tree_factorial(t: DecoratedTree, u: MatrixSignal) -> float:
    """Single-letter bound: Ubar_i(T)^order / tree-factorial."""
    word = foliation(t)
    if len(set(word)) > 1:
        raise ValueError("the tree-factorial bound needs a single-letter decoration")
    if not word:
        return 1.0
    i = word[0]
    if i == 0:
        big_u = u.horizon
    else:
        big_u = float(_ubar_integrals(u)[i - 1, -1])
    return big_u ** t.order / tree_factorial(skeleton(t))


def bound_left_comb(word: Word, u: MatrixSignal) -> float:
    """Left-comb bound: product over letters of Ubar_j(T)^{n_j} / n_j!."""
    integrals = _ubar_integrals(u)
    out = 1.0
    for j in set(word):
        n_j = word.count(j)
        big_u = u.horizon if j == 0 else float(integrals[j - 1, -1])
        out *= big_u ** n_j / math.factorial(n_j)
    return out


def check_ubar_domination(t: DecoratedTree, u: MatrixSignal) -> tuple[float, float]:
    """(max-over-grid norm of E[u], matching scalar evaluation with ubar)."""
    lhs = stack_norm1(TreeEvaluator(u).values(t))
    bar = ubar(u).as_matrix_signal()
    rhs = TreeEvaluator(bar).values(t)[:, 0, 0]
    k = int(np.argmax(lhs))
    return float(lhs[k]), float(rhs[k])


def check_factorial_identity(n: int, u: MatrixSignal) -> float:
    """Residual at T of: E over the n-fold shuffle power (with ubar input)
    minus n! times E over the left comb (with ubar input)."""
    if n > 7:
        raise ValueError("factorial identity capped at n = 7")
    bar = ubar(u).as_matrix_signal()
    letter = 1
    lhs = evaluate_polynomial(char_trees(n, letter), bar).at_horizon[0, 0]
    rhs = math.factorial(n) * evaluate_tree(left_comb((letter,) * n), bar).at_horizon[0, 0]
    return abs(float(lhs - rhs))
