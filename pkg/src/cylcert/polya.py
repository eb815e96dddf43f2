"""Simplex saturation: make every slack-variable coefficient positive.

A target positive on the reference simplex lifts to a form on the
probability simplex by completing each term to full degree with powers
of ``X0 + X1 + ... + Xn`` (``X0`` is the slack variable, so substituting
``X0 -> 1 - sum(X)`` recovers the original exactly).  Multiplying the
lifted form by further powers of the total sum eventually turns every
coefficient -- here a polynomial in the sphere variables -- into a form
that is strictly positive on the sphere(s).  The smallest such power is
found by incremental search: a cheap float screen over sphere sample
points first, then an exact certified minimum for every surviving
coefficient.  The quantitative positivity bound caps the search.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .certified import CertifiedMin, certified_excess_check
from .covers import sphere_cover
from .errors import (
    BelowThresholdError,
    CapExceededError,
    ResolutionExhaustedError,
    ValidationError,
)
from .poly import BlockedPoly, BlockShape, weighted_norm
from .problem import SphereBlock


def homogenize_with_slack(target: BlockedPoly) -> BlockedPoly:
    """Complete every term to full simplex degree with (X0 + sum X)."""
    shape = target.shape.with_homogenizers("X0")
    lifted = target.embed(shape)
    x_slots = shape.block_indices("x") + shape.block_indices("X0")
    ell = lifted.block_degree("x", "X0")
    total = BlockedPoly(
        shape, {tuple(1 if i == s else 0 for i in range(shape.width)): Fraction(1)
                for s in x_slots},
    )
    out = BlockedPoly.zero(shape)
    by_deficit: dict[int, BlockedPoly] = {}
    for key, coeff in lifted.terms.items():
        deficit = ell - sum(key[s] for s in x_slots)
        part = by_deficit.setdefault(deficit, BlockedPoly.zero(shape))
        by_deficit[deficit] = part + BlockedPoly(shape, {key: coeff})
    for deficit, part in by_deficit.items():
        out = out + part * (total ** deficit)
    return out


def polya_exponent_cap(ell: int, target_norm: Fraction, fstar: Fraction) -> int:
    """Quantitative cap on the saturation exponent.

    ``fstar`` is the certified clearance of the target over the simplex
    (half the certified minimum, in the pipeline).  Degrees 0 and 1 get
    tiny caps, which is correct: those searches finish at exponent 0.
    """
    if fstar <= 0:
        raise ValueError("fstar must be positive")
    bound = Fraction(15 * (ell + 1) * ell * (ell - 1)) * target_norm / fstar - ell
    return bound.__floor__() + 1


def _compositions(total: int, parts: int):
    """All exponent vectors of the given length summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def coefficient_forms(
    lifted: BlockedPoly,
) -> dict[tuple[int, ...], BlockedPoly]:
    """Split a lifted target into sphere-variable forms per simplex monomial.

    Keys are exponent vectors over ``(X0, X1, ..., Xn)``, one for *every*
    monomial of the full simplex degree -- absent coefficients appear as
    zero polynomials, since saturation must reject those.  Values keep
    the full shape but use no simplex variables.
    """
    shape = lifted.shape
    x_slots = shape.block_indices("X0") + shape.block_indices("x")
    degree = lifted.block_degree("x", "X0")
    forms: dict[tuple[int, ...], dict[tuple[int, ...], Fraction]] = {
        alpha: {} for alpha in _compositions(degree, len(x_slots))
    }
    for key, coeff in lifted.terms.items():
        alpha = tuple(key[s] for s in x_slots)
        stripped = list(key)
        for s in x_slots:
            stripped[s] = 0
        forms[alpha][tuple(stripped)] = coeff
    return {a: BlockedPoly(shape, t) for a, t in sorted(forms.items())}


def _remap_blocks(
    old: BlockShape, new: BlockShape, blocks: tuple[SphereBlock, ...]
) -> tuple[SphereBlock, ...]:
    """Re-express sphere blocks after homogenizer slots moved.

    Variable slots keep their meaning by name; adding ``X0`` shifts every
    later homogenizer slot by one.
    """
    base = old.n + old.r1 + old.r2

    def shift(i: int) -> int:
        if i < base:
            return i
        return new.hom_index(old.homs[i - base])

    return tuple(
        SphereBlock(indices=tuple(shift(i) for i in b.indices), degree=b.degree)
        for b in blocks
    )


def _screen_values(
    form: BlockedPoly, blocks: tuple[SphereBlock, ...], resolution: int
) -> list[float]:
    """Float values of a sphere-only form on a product of cover points."""
    shape = form.shape
    covers = [sphere_cover(len(b.indices), resolution).points for b in blocks]
    values = []
    for combo in itertools.product(*covers):
        point = [0.0] * shape.width
        for block, u in zip(blocks, combo):
            for slot, coord in zip(block.indices, u):
                point[slot] = float(coord)
        acc = 0.0
        for key, coeff in form.terms.items():
            term = float(coeff)
            for slot, e in enumerate(key):
                if e:
                    term *= point[slot] ** e
            acc += term
        values.append(acc)
    return values


@dataclass(frozen=True)
class PolyaResult:
    exponent: int                      # power of the total sum applied
    ell: int                           # simplex degree of the lifted target
    cap: int                           # search bound that was in force
    saturated: BlockedPoly             # (sum X)^exponent * lifted target
    blocks: tuple[SphereBlock, ...]    # sphere blocks in lifted coordinates
    forms: dict[tuple[int, ...], BlockedPoly]
    evidence: dict[tuple[int, ...], CertifiedMin]


def polya_saturate(
    target: BlockedPoly,
    fstar: Fraction,
    blocks: tuple[SphereBlock, ...],
    *,
    cap: int | None = None,
    screen_resolution: int = 24,
    start_resolution: int = 8,
    depth_cap: int = 24,
    pair_budget: int = 250_000_000,
) -> PolyaResult:
    """Smallest exponent making every coefficient form certifiably positive.

    The target must already clear ``fstar`` on the simplex-cross-sphere
    domain; the caller certifies that beforehand.  Raises
    :class:`CapExceededError` when no exponent up to the cap works (in
    particular when the target merely touches zero, where saturation can
    never succeed).
    """
    if "X0" in target.shape.homs and target.block_degree("X0") != 0:
        raise ValidationError("target must not use the slack variable yet")
    lifted = homogenize_with_slack(target)
    ell = lifted.block_degree("x", "X0")
    if cap is None:
        cap = polya_exponent_cap(ell, weighted_norm(target), fstar)
    shape = lifted.shape
    blocks = _remap_blocks(target.shape, shape, tuple(blocks))
    x_slots = shape.block_indices("X0") + shape.block_indices("x")
    total = BlockedPoly(
        shape, {tuple(1 if i == s else 0 for i in range(shape.width)): Fraction(1)
                for s in x_slots},
    )
    current = lifted
    rejected: list[dict[str, object]] = []
    for exponent in range(cap + 1):
        if exponent:
            current = current * total
        forms = coefficient_forms(current)
        evidence, diagnostic = _certify_forms(
            forms, blocks,
            screen_resolution=screen_resolution,
            start_resolution=start_resolution,
            depth_cap=depth_cap,
            pair_budget=pair_budget,
        )
        if evidence is not None:
            return PolyaResult(
                exponent=exponent, ell=ell, cap=cap,
                saturated=current, blocks=blocks,
                forms=forms, evidence=evidence,
            )
        rejected.append({"exponent": exponent, **diagnostic})
    raise CapExceededError(
        "no saturation exponent up to the cap makes every coefficient "
        "form positive",
        cap=cap,
        ell=ell,
        rejected=rejected[-3:],
    )


def _certify_forms(
    forms: dict[tuple[int, ...], BlockedPoly],
    blocks: tuple[SphereBlock, ...],
    *,
    screen_resolution: int,
    start_resolution: int,
    depth_cap: int,
    pair_budget: int,
) -> tuple[dict[tuple[int, ...], CertifiedMin] | None, dict[str, object]]:
    """All-or-nothing certification pass over the coefficient forms.

    Returns ``(evidence, {})`` on success or ``(None, diagnostic)``
    naming the first offending multi-index.  The float screen runs over
    every form before any exact work starts.
    """
    screened: dict[tuple[int, ...], float] = {}
    for alpha, form in forms.items():
        if not form.terms:
            return None, {"alpha": list(alpha), "reason": "zero coefficient"}
        low = min(_screen_values(form, blocks, screen_resolution))
        if low <= 0.0:
            return None, {"alpha": list(alpha), "reason": "screen", "value": low}
        screened[alpha] = low
    evidence: dict[tuple[int, ...], CertifiedMin] = {}
    for alpha, form in forms.items():
        threshold = Fraction(screened[alpha]).limit_denominator(10 ** 6) / 2
        cert = None
        for attempt in (threshold, threshold / 8):
            try:
                cert = certified_excess_check(
                    form, attempt, blocks,
                    start_resolution=start_resolution,
                    depth_cap=depth_cap,
                    pair_budget=pair_budget,
                )
                break
            except BelowThresholdError:
                return None, {"alpha": list(alpha), "reason": "witness"}
            except ResolutionExhaustedError:
                continue
        if cert is None:
            return None, {"alpha": list(alpha), "reason": "resolution"}
        evidence[alpha] = cert
    return evidence, {}
