"""Dendriform Fliess operators: truncated evaluation, convergence
certificates, the Dyson series, the product connection, and the
Bernoulli/pre-Lie recursion for the true-exponential representation.

The pre-Lie bracket used in the exponent recursion comes in several
orientations; see :func:`resolve_pre_lie_orientation`.  The default,
``"standard"``, is the dendriform pre-Lie product a |> b = a > b - b < a,
the orientation validated against the ODE oracle (and, exactly, against the
shuffle-exponential of the recursion's fixed point).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .algebra import TreePolynomial, prec, shuffle, succ
from .integrals import EvaluationResult, TreeEvaluator, evaluate_polynomial
from .signals import MatrixSignal, SignalError, signal_norm, stack_norm1
from .trees import (
    DLEAF,
    DecoratedTree,
    EnumerationCapError,
    enumerate_decorated_trees,
    graft,
    left_comb,
    left_comb_skeleton,
    skeleton,
)

__all__ = [
    "GeneratingSeries",
    "FliessOutput",
    "Certificate",
    "MagnusSeries",
    "evaluate_fliess",
    "convergence_certificate",
    "dyson_series",
    "full_support_series",
    "finite_series",
    "product_connection",
    "bernoulli",
    "magnus_generating_series",
    "magnus_evaluate",
    "resolve_pre_lie_orientation",
    "matrix_exp",
    "expm_stack",
    "rk4_reference",
    "DEFAULT_GENERAL_ORDER_CAP",
    "BRACKET_ORIENTATIONS",
]

DEFAULT_GENERAL_ORDER_CAP = 8


@dataclass(frozen=True, eq=False)
class GeneratingSeries:
    """Coefficient assignment on decorated trees with growth metadata.

    ``support_class`` is one of ``general`` (all trees, rule-based
    coefficients), ``left_comb`` (rule-based on left combs) or ``finite``
    (an explicit polynomial).  ``growth_regime`` declares which convergence
    theorem applies: ``geometric`` or ``factorial_left_comb``.
    """

    m: int
    support_class: str
    K: float
    M: float
    growth_regime: str
    terms: TreePolynomial | None = None
    rule: Callable[[DecoratedTree], Fraction | np.ndarray] | None = None
    support_fn: Callable[[int], Sequence[DecoratedTree]] | None = None
    rule_name: str | None = None

    def coefficient(self, tree: DecoratedTree):
        if self.terms is not None:
            return self.terms.coefficient(tree)
        assert self.rule is not None
        if self.support_class == "left_comb" and not tree.is_leaf \
                and skeleton(tree) != left_comb_skeleton(tree.order):
            return Fraction(0)
        return self.rule(tree)

    def trees_of_order(self, n: int, cap: int = DEFAULT_GENERAL_ORDER_CAP):
        if self.terms is not None:
            return [t for t, _ in self.terms.items() if t.order == n]
        if self.support_fn is not None:
            return list(self.support_fn(n))
        if n > cap:
            raise EnumerationCapError(
                f"general-support order {n} above cap {cap}")
        return list(enumerate_decorated_trees(n, self.m))

    def verify_growth(self, max_order: int = 5) -> bool:
        """Spot-check the declared growth regime on all trees up to ``max_order``."""
        for n in range(max_order + 1):
            bound = self.K * self.M ** n
            if self.growth_regime == "factorial_left_comb":
                bound *= math.factorial(n)
            for tree in self.trees_of_order(n):
                c = self.coefficient(tree)
                mag = float(np.abs(np.asarray(c, dtype=float)).sum(axis=0).max()) \
                    if isinstance(c, np.ndarray) else abs(float(c))
                if mag > bound * (1 + 1e-12):
                    return False
        return True

    def to_json(self) -> str:
        if self.terms is not None:
            payload: object = self.terms.to_json()
        else:
            payload = {"rule": self.rule_name or "custom"}
        return json.dumps({
            "m": self.m, "support_class": self.support_class,
            "K": self.K, "M": self.M, "growth_regime": self.growth_regime,
            "coefficients": payload,
        })


@dataclass(frozen=True, eq=False)
class FliessOutput:
    """Truncated operator output with per-order increments."""

    grid: np.ndarray
    values: np.ndarray
    truncation_order: int
    tail_bound: float | None
    increments: list[np.ndarray]

    @property
    def at_horizon(self) -> np.ndarray:
        return self.values[-1]


def evaluate_fliess(c: GeneratingSeries, u: MatrixSignal, order: int,
                    cap: int = DEFAULT_GENERAL_ORDER_CAP,
                    with_certificate: bool = False) -> FliessOutput:
    """Sum coefficient-weighted iterated integrals over orders 0..order."""
    ev = TreeEvaluator(u)
    nodes = u.num_steps + 1
    acc: np.ndarray | None = None
    increments: list[np.ndarray] = []
    for n in range(order + 1):
        inc: np.ndarray | None = None
        for tree in c.trees_of_order(n, cap=cap):
            coeff = c.coefficient(tree)
            if isinstance(coeff, np.ndarray):
                if not np.any(coeff):
                    continue
                term = coeff @ ev.values(tree)
            else:
                if coeff == 0:
                    continue
                term = float(coeff) * ev.values(tree)
            inc = term if inc is None else inc + term
        if inc is None:
            inc = np.zeros((nodes, u.dim, u.dim))
        increments.append(inc)
        acc = inc if acc is None else acc + inc
    assert acc is not None
    tail = None
    if with_certificate:
        cert = convergence_certificate(c, u, order)
        tail = cert.tail
    return FliessOutput(u.grid, acc, order, tail, increments)


@dataclass(frozen=True)
class Certificate:
    K: float
    M: float
    m: int
    R: float
    radius: float
    tail: float | None
    truncation_order: int
    diagnostic: str | None = None

    def to_json(self) -> str:
        return json.dumps({
            "K": self.K, "M": self.M, "m": self.m, "R": self.R,
            "radius": self.radius, "tail": self.tail,
            "N": self.truncation_order, "diagnostic": self.diagnostic,
        })


def convergence_certificate(c: GeneratingSeries, u: MatrixSignal,
                            order: int) -> Certificate:
    """Geometric tail bound for series in the geometric growth regime."""
    if c.growth_regime != "geometric":
        raise ValueError(
            f"certificate requires the geometric regime, got {c.growth_regime!r}")
    radius = 1.0 / (c.M * (c.m + 1))
    R = max(signal_norm(u), u.horizon)
    ratio = c.M * R * (c.m + 1)
    if ratio < 1.0:
        tail = c.K * ratio ** (order + 1) / (1.0 - ratio)
        diagnostic = None
    else:
        tail = None
        diagnostic = (f"R = {R:.6g} is not below the radius {radius:.6g}; "
                      "the geometric majorant diverges")
    return Certificate(c.K, c.M, c.m, R, radius, tail, order, diagnostic)


def dyson_series(order: int) -> GeneratingSeries:
    """Identity coefficients on x1-decorated left combs up to ``order``."""
    def rule(tree: DecoratedTree):
        if tree.order > order:
            return Fraction(0)
        if any(letter != 1 for letter in _letters(tree)):
            return Fraction(0)
        return Fraction(1)

    def support(n: int):
        return [left_comb((1,) * n)] if n <= order else []

    return GeneratingSeries(
        m=1, support_class="left_comb", K=1.0, M=1.0,
        growth_regime="factorial_left_comb", rule=rule, support_fn=support,
        rule_name=f"dyson:{order}")


def _letters(tree: DecoratedTree):
    if tree.is_leaf:
        return
    assert tree.left is not None and tree.right is not None
    yield from _letters(tree.left)
    yield tree.letter
    yield from _letters(tree.right)


def full_support_series(m: int, K: float = 1.0, M: float = 1.0) -> GeneratingSeries:
    """All trees, all words, coefficient K * M^order (geometric regime)."""
    def rule(tree: DecoratedTree):
        return Fraction(K) * Fraction(M) ** tree.order

    return GeneratingSeries(
        m=m, support_class="general", K=K, M=M,
        growth_regime="geometric", rule=rule, rule_name=f"full:{K}:{M}")


def finite_series(terms: TreePolynomial, m: int) -> GeneratingSeries:
    order = terms.max_order()
    scale = max((abs(float(c)) for _, c in terms.items()
                 if not isinstance(c, np.ndarray)), default=1.0)
    return GeneratingSeries(
        m=m, support_class="finite", K=max(scale, 1.0), M=1.0,
        growth_regime="geometric", terms=terms)


def product_connection(c: GeneratingSeries, d: GeneratingSeries) -> GeneratingSeries:
    """Finite series whose operator equals the product of the two operators.

    Both inputs must be finite with scalar (identity-multiple) coefficients;
    the result's coefficients come from shuffling the supports.
    """
    if c.terms is None or d.terms is None:
        raise ValueError("product connection requires finite-support series")
    for _, coeff in list(c.terms.items()) + list(d.terms.items()):
        if isinstance(coeff, np.ndarray):
            raise ValueError("product connection requires scalar coefficients")
    return finite_series(shuffle(c.terms, d.terms), max(c.m, d.m))


# ---------------------------------------------------------------------------
# Bernoulli numbers and the exponent recursion

BERNOULLI_CAP = 20


def bernoulli(n: int) -> Fraction:
    """n-th Bernoulli number (B1 = -1/2), exact."""
    if n < 0 or n > BERNOULLI_CAP:
        raise ValueError(f"Bernoulli index must be in 0..{BERNOULLI_CAP}")
    return _bernoulli_table(n)[n]


def _bernoulli_table(n: int) -> list[Fraction]:
    table: list[Fraction] = []
    for k in range(n + 1):
        if k == 0:
            table.append(Fraction(1))
            continue
        acc = Fraction(0)
        for j in range(k):
            acc += math.comb(k + 1, j) * table[j]
        table.append(-acc / (k + 1))
    return table


#: bracket orientations selectable in the exponent recursion.  "standard"
#: is the dendriform pre-Lie product a |> b = a>b - b<a; the two
#: same-operand differences are kept for the empirical resolution.
BRACKET_ORIENTATIONS = ("standard", "literal", "reversed")


def _bracket(orientation: str):
    if orientation == "standard":
        return lambda a, b: succ(a, b) - prec(b, a)
    if orientation == "literal":
        return lambda a, b: prec(a, b) - succ(a, b)
    if orientation == "reversed":
        return lambda a, b: succ(a, b) - prec(a, b)
    raise ValueError(f"unknown pre-Lie orientation {orientation!r}")


@dataclass(frozen=True, eq=False)
class MagnusSeries:
    """Generating series of the true exponent, exact rationals."""

    truncation_order: int
    iterations: int
    poly: TreePolynomial
    orientation: str


MAGNUS_ORDER_CAP = 6


def magnus_generating_series(order: int,
                             orientation: str = "standard") -> MagnusSeries:
    """Fixed point of d = sum_n (B_n / n!) bracket^n applied to the letter.

    Iterates the Bernoulli recursion, truncating to ``order``, until the
    polynomial is stationary; the order-<=N part stabilizes after at most
    N iterations.
    """
    if order < 1 or order > MAGNUS_ORDER_CAP:
        raise ValueError(f"truncation order must be in 1..{MAGNUS_ORDER_CAP}")
    bracket = _bracket(orientation)
    x1 = TreePolynomial.single(graft(DLEAF, 1, DLEAF))
    d = x1
    for iteration in range(1, order + 3):
        new = x1  # n = 0 term: B_0 * L^(0)(x1) = x1
        level = x1
        for n in range(1, order):
            level = bracket(d, level).truncate(order)
            if level.is_zero():
                break
            b_n = bernoulli(n)
            if b_n != 0:
                new = new + level.scale(b_n / Fraction(math.factorial(n)))
        new = new.truncate(order)
        if new == d:
            return MagnusSeries(order, iteration, d, orientation)
        d = new
    raise RuntimeError(
        "exponent recursion failed to become stationary; this indicates a bug")


def magnus_evaluate(series: MagnusSeries,
                    u: MatrixSignal) -> tuple[EvaluationResult, np.ndarray]:
    """Evaluate the exponent on the grid and exponentiate node by node."""
    if u.m != 1:
        raise SignalError("the exponent recursion is single-channel")
    omega = evaluate_polynomial(series.poly, u)
    return omega, expm_stack(omega.values)


def resolve_pre_lie_orientation(u: MatrixSignal, max_order: int = 3,
                                refinement: int = 4) -> str:
    """Pick the bracket orientation that actually converges to the ODE flow.

    For each orientation, exponentiate the truncated exponent at orders
    1..max_order and compare against the Runge-Kutta reference; the
    orientation whose error at the top order is smaller wins.
    """
    reference = rk4_reference(u, refinement)[-1]
    best: tuple[float, str] | None = None
    for orientation in BRACKET_ORIENTATIONS:
        series = magnus_generating_series(max_order, orientation)
        _, z = magnus_evaluate(series, u)
        err = float(stack_norm1(z[-1] - reference))
        if best is None or err < best[0]:
            best = (err, orientation)
    assert best is not None
    return best[1]


# ---------------------------------------------------------------------------
# matrix exponential and the ODE oracle

def matrix_exp(a: np.ndarray) -> np.ndarray:
    """Scaling-and-squaring with a truncated Taylor series."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix_exp needs a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite entries")
    norm = float(np.abs(a).sum(axis=0).max())
    squarings = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    b = a / (2 ** squarings)
    out = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, 40):
        term = term @ b / k
        out = out + term
        if float(np.abs(term).max()) < 1e-18:
            break
    for _ in range(squarings):
        out = out @ out
    return out


def expm_stack(values: np.ndarray) -> np.ndarray:
    return np.stack([matrix_exp(v) for v in values])


def rk4_reference(u: MatrixSignal, refinement: int = 1) -> np.ndarray:
    """Classical Runge-Kutta flow of Zdot = U(t) Z, Z(0) = I, on the coarse grid.

    The system matrix is channel 1, linearly interpolated onto a grid
    ``refinement`` times denser.
    """
    if refinement < 1:
        raise ValueError("refinement must be >= 1")
    big_u = u.channel(1)
    fine = u.num_steps * refinement
    hf = u.horizon / fine
    # channel values at half-step resolution via linear interpolation
    tt = np.linspace(0.0, u.horizon, 2 * fine + 1)
    pos = tt / u.h
    idx = np.minimum(pos.astype(int), u.num_steps - 1)
    frac = (pos - idx)[:, None, None]
    u_half = (1.0 - frac) * big_u[idx] + frac * big_u[idx + 1]

    z = np.eye(u.dim)
    out = np.empty((u.num_steps + 1, u.dim, u.dim))
    out[0] = z
    for j in range(fine):
        a1, a2, a4 = u_half[2 * j], u_half[2 * j + 1], u_half[2 * j + 2]
        k1 = a1 @ z
        k2 = a2 @ (z + 0.5 * hf * k1)
        k3 = a2 @ (z + 0.5 * hf * k2)
        k4 = a4 @ (z + hf * k3)
        z = z + hf / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (j + 1) % refinement == 0:
            out[(j + 1) // refinement] = z
    return out
