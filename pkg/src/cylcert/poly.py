"""Exact sparse polynomials over named variable blocks.

A polynomial lives over a :class:`BlockShape` that fixes the variable
layout: ``n`` compact variables X1..Xn (ranging over a box or simplex),
a first unbounded block Y1..Y{r1}, an optional second unbounded block
W1..W{r2}, and any active homogenizing variables drawn from
``("X0", "Z", "Z1", "Z2")``.  Terms are stored sparsely as a dict from
exponent tuples (one slot per variable, in the layout order above) to
nonzero ``Fraction`` coefficients.  All arithmetic is exact; operations
never mutate their inputs.

The norm used throughout treats the X-part of each monomial in the
multinomial-weighted representation

    f = sum_{a,b} binom(|a|, a) * c_{a,b} * X^a * (unbounded part)^b,

i.e. ``weighted_norm(f) = max |stored coefficient| / multinomial(a)``
over all terms, where ``a`` is the X-block exponent (homogenizer ``X0``
counts as part of the X block for the weight).  Exponents of unbounded
blocks and of Z-type homogenizers carry no weight.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Iterable, Iterator, Mapping

from .errors import ShapeMismatchError

HOMOGENIZER_ORDER = ("X0", "Z", "Z1", "Z2")

Exponent = tuple[int, ...]


@lru_cache(maxsize=None)
def multinomial(exponents: Exponent) -> int:
    """Multinomial coefficient binom(e1+...+ek; e1,...,ek)."""
    total = sum(exponents)
    out = factorial(total)
    for e in exponents:
        out //= factorial(e)
    return out


@dataclass(frozen=True)
class BlockShape:
    """Variable layout: X block, up to two unbounded blocks, homogenizers."""

    n: int
    r1: int
    r2: int = 0
    homs: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.n < 0 or self.r1 < 0 or self.r2 < 0:
            raise ValueError("block sizes must be nonnegative")
        if tuple(h for h in HOMOGENIZER_ORDER if h in self.homs) != self.homs:
            raise ValueError(f"homogenizers must be a subsequence of {HOMOGENIZER_ORDER}")

    @property
    def width(self) -> int:
        return self.n + self.r1 + self.r2 + len(self.homs)

    # ----- index helpers ------------------------------------------------
    def x_index(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"x index {i} out of range for n={self.n}")
        return i

    def y1_index(self, j: int) -> int:
        if not 0 <= j < self.r1:
            raise IndexError(f"y1 index {j} out of range for r1={self.r1}")
        return self.n + j

    def y2_index(self, j: int) -> int:
        if not 0 <= j < self.r2:
            raise IndexError(f"y2 index {j} out of range for r2={self.r2}")
        return self.n + self.r1 + j

    def hom_index(self, name: str) -> int:
        try:
            return self.n + self.r1 + self.r2 + self.homs.index(name)
        except ValueError:
            raise KeyError(f"homogenizer {name!r} not active in shape {self}") from None

    def block_indices(self, block: str) -> tuple[int, ...]:
        """Indices of a named part: 'x', 'y1', 'y2', or a homogenizer name."""
        if block == "x":
            return tuple(range(self.n))
        if block == "y1":
            return tuple(self.n + j for j in range(self.r1))
        if block == "y2":
            return tuple(self.n + self.r1 + j for j in range(self.r2))
        return (self.hom_index(block),)

    def with_homogenizers(self, *names: str) -> "BlockShape":
        """Shape extended by the given homogenizers (idempotent)."""
        wanted = set(self.homs) | set(names)
        bad = wanted - set(HOMOGENIZER_ORDER)
        if bad:
            raise KeyError(f"unknown homogenizers {sorted(bad)}")
        homs = tuple(h for h in HOMOGENIZER_ORDER if h in wanted)
        return BlockShape(self.n, self.r1, self.r2, homs)

    def var_name(self, index: int) -> str:
        """Printable name of a variable slot (X1.., Y1.., W1.., X0/Z/..)."""
        if index < self.n:
            return f"X{index + 1}"
        index -= self.n
        if index < self.r1:
            return f"Y{index + 1}"
        index -= self.r1
        if index < self.r2:
            return f"W{index + 1}"
        return self.homs[index - self.r2]


class BlockedPoly:
    """Immutable sparse polynomial over a :class:`BlockShape`."""

    __slots__ = ("shape", "terms")

    def __init__(self, shape: BlockShape, terms: Mapping[Exponent, Fraction] | None = None):
        cleaned: dict[Exponent, Fraction] = {}
        width = shape.width
        for exp, coeff in (terms or {}).items():
            if len(exp) != width:
                raise ShapeMismatchError(
                    f"exponent {exp} has length {len(exp)}, shape width is {width}"
                )
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            c = Fraction(coeff)
            if c:
                cleaned[tuple(exp)] = c
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "terms", cleaned)

    def __setattr__(self, *_: object) -> None:  # pragma: no cover - guard
        raise AttributeError("BlockedPoly is immutable")

    # ----- constructors -------------------------------------------------
    @staticmethod
    def zero(shape: BlockShape) -> "BlockedPoly":
        return BlockedPoly(shape, {})

    @staticmethod
    def constant(shape: BlockShape, c: Fraction | int) -> "BlockedPoly":
        return BlockedPoly(shape, {(0,) * shape.width: Fraction(c)})

    @staticmethod
    def variable(shape: BlockShape, index: int) -> "BlockedPoly":
        exp = [0] * shape.width
        exp[index] = 1
        return BlockedPoly(shape, {tuple(exp): Fraction(1)})

    @staticmethod
    def monomial(shape: BlockShape, exp: Exponent, c: Fraction | int = 1) -> "BlockedPoly":
        return BlockedPoly(shape, {tuple(exp): Fraction(c)})

    # ----- basic protocol ----------------------------------------------
    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BlockedPoly):
            return NotImplemented
        return self.shape == other.shape and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.shape, tuple(sorted(self.terms.items()))))

    def __repr__(self) -> str:
        if not self.terms:
            return "BlockedPoly(0)"
        bits = []
        for exp, coeff in self.sorted_terms()[:6]:
            mono = "*".join(
                f"{self.shape.var_name(i)}^{e}" if e > 1 else self.shape.var_name(i)
                for i, e in enumerate(exp)
                if e
            )
            bits.append(f"{coeff}" + (f"*{mono}" if mono else ""))
        tail = " + ..." if len(self.terms) > 6 else ""
        return f"BlockedPoly({' + '.join(bits)}{tail})"

    def sorted_terms(self) -> list[tuple[Exponent, Fraction]]:
        """Terms in canonical (lexicographic exponent) order."""
        return sorted(self.terms.items())

    def _check_shape(self, other: "BlockedPoly") -> None:
        if self.shape != other.shape:
            raise ShapeMismatchError(
                f"shape mismatch: {self.shape} vs {other.shape}"
            )

    # ----- ring operations ----------------------------------------------
    def __add__(self, other: "BlockedPoly") -> "BlockedPoly":
        self._check_shape(other)
        out = dict(self.terms)
        for exp, coeff in other.terms.items():
            s = out.get(exp, Fraction(0)) + coeff
            if s:
                out[exp] = s
            else:
                out.pop(exp, None)
        return BlockedPoly(self.shape, out)

    def __neg__(self) -> "BlockedPoly":
        return BlockedPoly(self.shape, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "BlockedPoly") -> "BlockedPoly":
        return self + (-other)

    def __mul__(self, other: "BlockedPoly") -> "BlockedPoly":
        self._check_shape(other)
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(exp, Fraction(0)) + c1 * c2
                if s:
                    out[exp] = s
                else:
                    out.pop(exp, None)
        return BlockedPoly(self.shape, out)

    def scale(self, c: Fraction | int) -> "BlockedPoly":
        c = Fraction(c)
        if not c:
            return BlockedPoly.zero(self.shape)
        return BlockedPoly(self.shape, {e: k * c for e, k in self.terms.items()})

    def __pow__(self, exponent: int) -> "BlockedPoly":
        if exponent < 0:
            raise ValueError("negative power of a polynomial")
        result = BlockedPoly.constant(self.shape, 1)
        base = self
        e = exponent
        while e:
            if e & 1:
                result = result * base
            base = base * base if e > 1 else base
            e >>= 1
        return result

    # ----- degrees ------------------------------------------------------
    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def block_degree(self, block: str, *extra: str) -> int:
        """Max combined exponent over a named block (plus extra parts)."""
        idx = self.shape.block_indices(block)
        for name in extra:
            idx = idx + self.shape.block_indices(name)
        return max((sum(e[i] for i in idx) for e in self.terms), default=0)

    def is_block_homogeneous(self, block: str, *extra: str) -> bool:
        """True when every term has the same combined block degree."""
        idx = self.shape.block_indices(block)
        for name in extra:
            idx = idx + self.shape.block_indices(name)
        degs = {sum(e[i] for i in idx) for e in self.terms}
        return len(degs) <= 1

    # ----- evaluation ---------------------------------------------------
    def eval_at(self, point: Iterable[Fraction]) -> Fraction:
        """Exact value at a point given as one Fraction per variable slot."""
        pt = tuple(Fraction(v) for v in point)
        if len(pt) != self.shape.width:
            raise ShapeMismatchError(
                f"point has {len(pt)} coordinates, shape width {self.shape.width}"
            )
        total = Fraction(0)
        for exp, coeff in self.terms.items():
            val = coeff
            for v, e in zip(pt, exp):
                if e:
                    val *= v**e
            total += val
        return total

    # ----- shape changes -------------------------------------------------
    def embed(self, shape: BlockShape) -> "BlockedPoly":
        """Re-interpret over a larger shape sharing this one's blocks.

        The target must agree on n, r1, r2 and contain this shape's
        homogenizers; new homogenizer slots get exponent 0.
        """
        if shape == self.shape:
            return self
        if (shape.n, shape.r1, shape.r2) != (self.shape.n, self.shape.r1, self.shape.r2):
            raise ShapeMismatchError(f"cannot embed {self.shape} into {shape}")
        if not set(self.shape.homs) <= set(shape.homs):
            raise ShapeMismatchError(f"cannot embed {self.shape} into {shape}")
        base = self.shape.n + self.shape.r1 + self.shape.r2
        out: dict[Exponent, Fraction] = {}
        for exp, coeff in self.terms.items():
            new = list(exp[:base]) + [0] * len(shape.homs)
            for pos, h in enumerate(self.shape.homs):
                new[base + shape.homs.index(h)] = exp[base + pos]
            out[tuple(new)] = coeff
        return BlockedPoly(shape, out)

    def drop_unused_homogenizers(self) -> "BlockedPoly":
        """Remove homogenizer slots whose exponent is 0 in every term."""
        base = self.shape.n + self.shape.r1 + self.shape.r2
        used = [
            h
            for pos, h in enumerate(self.shape.homs)
            if any(e[base + pos] for e in self.terms)
        ]
        if len(used) == len(self.shape.homs):
            return self
        shape = BlockShape(self.shape.n, self.shape.r1, self.shape.r2, tuple(used))
        keep = [base + pos for pos, h in enumerate(self.shape.homs) if h in used]
        out = {
            tuple(exp[:base]) + tuple(exp[i] for i in keep): c
            for exp, c in self.terms.items()
        }
        return BlockedPoly(shape, out)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def weighted_norm(p: BlockedPoly, degree_hint: int | None = None) -> Fraction:
    """Max |coefficient| of ``p`` in the multinomial-weighted representation.

    The weight of a term is the multinomial coefficient of its X-part
    (including ``X0`` when active); unbounded blocks and Z-type
    homogenizers contribute no weight.  For polynomials with no unbounded
    variables this is the classical weighted coefficient norm.  The value
    does not depend on any ambient degree; ``degree_hint``, when given,
    is only validated against the actual X-degree.
    """
    shape = p.shape
    xidx = list(range(shape.n))
    if "X0" in shape.homs:
        xidx.append(shape.hom_index("X0"))
    if degree_hint is not None:
        actual = max((sum(e[i] for i in xidx) for e in p.terms), default=0)
        if degree_hint < actual:
            raise ValueError(f"degree hint {degree_hint} below X-degree {actual}")
    best = Fraction(0)
    for exp, coeff in p.terms.items():
        w = multinomial(tuple(exp[i] for i in xidx))
        cand = abs(coeff) / w
        if cand > best:
            best = cand
    return best


def coeff_abs_sum(p: BlockedPoly) -> Fraction:
    """Sum of absolute stored coefficients (used for rounding-error slack)."""
    return sum((abs(c) for c in p.terms.values()), start=Fraction(0))


# ---------------------------------------------------------------------------
# homogenization and substitution
# ---------------------------------------------------------------------------

def homogenize_block(
    p: BlockedPoly, block: str, target_degree: int, homogenizer: str
) -> BlockedPoly:
    """Pad each term with the homogenizer so the block degree is constant.

    A term with block degree d picks up ``homogenizer^(target_degree-d)``.
    The shape is extended with the homogenizer if needed.  Requires
    ``target_degree >= block_degree(p, block)``.
    """
    if homogenizer not in p.shape.homs:
        p = p.embed(p.shape.with_homogenizers(homogenizer))
    idx = p.shape.block_indices(block)
    hidx = p.shape.hom_index(homogenizer)
    out: dict[Exponent, Fraction] = {}
    for exp, coeff in p.terms.items():
        d = sum(exp[i] for i in idx)
        pad = target_degree - d - exp[hidx]
        if pad < 0:
            raise ValueError(
                f"target degree {target_degree} below term block degree {d + exp[hidx]}"
            )
        new = list(exp)
        new[hidx] += pad
        key = tuple(new)
        out[key] = out.get(key, Fraction(0)) + coeff
    return BlockedPoly(p.shape, out)


def substitute(p: BlockedPoly, assignments: Mapping[int, BlockedPoly]) -> BlockedPoly:
    """Replace variables (by slot index) with polynomials of the same shape.

    Unlisted variables are untouched.  Replacement powers are cached per
    call, so repeated exponents cost one multiplication each.
    """
    for idx, rhs in assignments.items():
        if not 0 <= idx < p.shape.width:
            raise IndexError(f"variable index {idx} out of range")
        if rhs.shape != p.shape:
            raise ShapeMismatchError("replacement shape differs from target shape")
    power_cache: dict[tuple[int, int], BlockedPoly] = {}

    def rhs_power(idx: int, e: int) -> BlockedPoly:
        key = (idx, e)
        if key not in power_cache:
            power_cache[key] = assignments[idx] ** e
        return power_cache[key]

    total = BlockedPoly.zero(p.shape)
    for exp, coeff in p.terms.items():
        residual = list(exp)
        factors: list[BlockedPoly] = []
        for idx in assignments:
            e = residual[idx]
            if e:
                residual[idx] = 0
                factors.append(rhs_power(idx, e))
        term = BlockedPoly.monomial(p.shape, tuple(residual), coeff)
        for f in factors:
            term = term * f
        total = total + term
    return total


def block_sum_of_squares(shape: BlockShape, block: str, *extra: str) -> BlockedPoly:
    """The quadric ``sum v^2`` over a block plus optional homogenizers."""
    idx = shape.block_indices(block)
    for name in extra:
        idx = idx + shape.block_indices(name)
    terms: dict[Exponent, Fraction] = {}
    for i in idx:
        exp = [0] * shape.width
        exp[i] = 2
        terms[tuple(exp)] = Fraction(1)
    return BlockedPoly(shape, terms)


def simplex_sum(shape: BlockShape, include_x0: bool = True) -> BlockedPoly:
    """X1 + ... + Xn, plus X0 when active and requested."""
    total = BlockedPoly.zero(shape)
    for i in range(shape.n):
        total = total + BlockedPoly.variable(shape, i)
    if include_x0 and "X0" in shape.homs:
        total = total + BlockedPoly.variable(shape, shape.hom_index("X0"))
    return total
