"""Dense polynomials over GF(p), Lagrange interpolation and a GF(p) linear solver."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DuplicateAbscissa, EmptyInput, FieldExhausted, MixedModulus, SingularSystem
from .field import FieldElement, FieldParams, random_element


@dataclass(frozen=True)
class Point:
    x: FieldElement
    y: FieldElement

    def __post_init__(self):
        if self.x.p != self.y.p:
            raise MixedModulus("point coordinates live in different fields")


class Polynomial:
    """Coefficient vector, ``coeffs[k]`` multiplies x**k. Trailing zeros are dropped."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[FieldElement]):
        coeffs = list(coeffs)
        if not coeffs:
            raise EmptyInput("a polynomial needs at least one coefficient")
        p = coeffs[0].p
        if any(c.p != p for c in coeffs):
            raise MixedModulus("coefficients live in different fields")
        while len(coeffs) > 1 and coeffs[-1].value == 0:
            coeffs.pop()
        self.coeffs = tuple(coeffs)

    @classmethod
    def from_ints(cls, values: Sequence[int], params: FieldParams) -> Polynomial:
        return cls(params(v) for v in values)

    @classmethod
    def zero(cls, params: FieldParams) -> Polynomial:
        return cls([params.zero])

    @property
    def params(self) -> FieldParams:
        return self.coeffs[0].params

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        if self.is_zero():
            return -1
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0].value == 0

    def __call__(self, x: FieldElement) -> FieldElement:
        return evaluate(self, x)

    def __add__(self, other: Polynomial) -> Polynomial:
        return poly_add(self, other)

    def __neg__(self) -> Polynomial:
        return Polynomial(-c for c in self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def ints(self) -> list[int]:
        return [c.value for c in self.coeffs]

    def __repr__(self):
        return f"Polynomial({self.ints()} mod {self.params.p})"


def evaluate(f: Polynomial, x: FieldElement) -> FieldElement:
    if x.p != f.params.p:
        raise MixedModulus(f"evaluating a GF({f.params.p}) polynomial at a GF({x.p}) point")
    p, xv = x.p, x.value
    acc = 0
    for c in reversed(f.coeffs):
        acc = (acc * xv + c.value) % p
    return FieldElement(acc, f.params)


def poly_add(f: Polynomial, g: Polynomial) -> Polynomial:
    if f.params.p != g.params.p:
        raise MixedModulus("adding polynomials over different fields")
    n = max(len(f.coeffs), len(g.coeffs))
    zero = f.params.zero
    a = f.coeffs + (zero,) * (n - len(f.coeffs))
    b = g.coeffs + (zero,) * (n - len(g.coeffs))
    return Polynomial(x + y for x, y in zip(a, b))


def interpolate(points: Sequence[Point]) -> Polynomial:
    """Unique polynomial of degree <= n-1 through n points (Lagrange basis).

    Raises DuplicateAbscissa carrying the first repeated x.
    """
    if not points:
        raise EmptyInput("interpolation needs at least one point")
    params = points[0].x.params
    p = params.p
    seen = set()
    for pt in points:
        if pt.x.p != p or pt.y.p != p:
            raise MixedModulus("interpolation points live in different fields")
        if pt.x.value in seen:
            raise DuplicateAbscissa(pt.x)
        seen.add(pt.x.value)

    xs = [pt.x.value for pt in points]
    ys = [pt.y.value for pt in points]
    n = len(xs)

    # master(x) = prod (x - x_k), low-order coefficient first
    master = [1]
    for xk in xs:
        nxt = [0] * (len(master) + 1)
        for i, c in enumerate(master):
            nxt[i] = (nxt[i] - xk * c) % p
            nxt[i + 1] = (nxt[i + 1] + c) % p
        master = nxt

    result = [0] * n
    for j in range(n):
        # basis numerator master(x) / (x - x_j) by synthetic division
        xj = xs[j]
        quotient = [0] * n
        carry = 0
        for i in range(n, 0, -1):
            carry = (master[i] + carry * xj) % p
            quotient[i - 1] = carry
        denom = 1
        for k in range(n):
            if k != j:
                denom = denom * (xj - xs[k]) % p
        scale = ys[j] * pow(denom, -1, p) % p
        for i in range(n):
            result[i] = (result[i] + scale * quotient[i]) % p
    return Polynomial.from_ints(result, params)


def sample_points(f: Polynomial, count: int, excluded_x: Iterable[FieldElement], rng) -> list[Point]:
    """``count`` points on ``f`` with distinct random abscissae outside ``excluded_x``."""
    params = f.params
    taken = {x.value for x in excluded_x}
    if count < 0:
        raise ValueError("count must be non-negative")
    if count + len(taken) > params.p:
        raise FieldExhausted(
            f"cannot pick {count} fresh abscissae with {len(taken)} excluded in GF({params.p})"
        )
    points = []
    while len(points) < count:
        x = random_element(rng, params)
        if x.value in taken:
            continue
        taken.add(x.value)
        points.append(Point(x, evaluate(f, x)))
    return points


@dataclass(frozen=True)
class LinearSystem:
    matrix: tuple[tuple[FieldElement, ...], ...]
    rhs: tuple[FieldElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "matrix", tuple(tuple(row) for row in self.matrix))
        object.__setattr__(self, "rhs", tuple(self.rhs))
        if not self.matrix:
            raise EmptyInput("empty linear system")
        width = len(self.matrix[0])
        if any(len(row) != width for row in self.matrix):
            raise ValueError("matrix rows differ in length")
        if len(self.rhs) != len(self.matrix):
            raise ValueError("rhs length does not match row count")
        p = self.rhs[0].p
        if any(e.p != p for row in self.matrix for e in row):
            raise MixedModulus("linear system mixes fields")

    @property
    def params(self) -> FieldParams:
        return self.rhs[0].params

    def residual(self, solution: Sequence[FieldElement]) -> list[FieldElement]:
        """matrix . solution - rhs, entrywise."""
        zero = self.params.zero
        out = []
        for row, b in zip(self.matrix, self.rhs):
            acc = zero
            for a, c in zip(row, solution):
                acc = acc + a * c
            out.append(acc - b)
        return out


def solve_linear(system: LinearSystem) -> list[FieldElement]:
    """Gauss-Jordan elimination over GF(p); pivot is the first nonzero entry."""
    params = system.params
    p = params.p
    n = len(system.matrix[0])
    if len(system.matrix) != n:
        raise ValueError(f"expected a square system, got {len(system.matrix)}x{n}")
    rows = [[e.value for e in row] + [b.value] for row, b in zip(system.matrix, system.rhs)]

    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col] % p), None)
        if pivot is None:
            raise SingularSystem(f"no pivot in column {col}")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        inv = pow(rows[col][col], -1, p)
        rows[col] = [v * inv % p for v in rows[col]]
        for r in range(n):
            if r != col and rows[r][col]:
                factor = rows[r][col]
                rows[r] = [(v - factor * w) % p for v, w in zip(rows[r], rows[col])]
    return [FieldElement(rows[i][n], params) for i in range(n)]
