"""Final certificates: assembly, verification, serialization, size bounds.

A certificate for ``f > 0`` on the cylinder is the list of SOS
multipliers ``sigma_0, ..., sigma_s`` with

    f = sigma_0 + sum_i sigma_i * g_i

checked coefficient-by-coefficient in exact rational arithmetic.  The
assembly stitches together the upstream stages:

  * the absorption step contributes, to each sigma_i, the explicit
    squares ``(lam/c_i) * (sq * (ghat_i - 1)^k)^2`` where the sq run
    over a square decomposition of the sphere-padding factor;
  * the saturated remainder contributes, per simplex monomial
    ``u^(a0) x^alpha``, products of its coefficient-form squares, the
    even square root of the monomial, and the facet-product witnesses;
  * the slack variable is substituted back to ``u = 1 - sum(x)`` and
    the sphere padding variables to 1, inside each square, so stored
    squares live over the original variables.

Verification is independent of generation: it re-expands every square,
compares against f exactly (or within the declared residual for
numeric-tier certificates), and re-derives the degree report.  Nothing
is trusted from metadata.

``theorem_bound`` evaluates the headline degree-bound formulas as
certified rational upper bounds; they are reporting devices, never used
by the pipeline itself.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Mapping

from .errors import (
    IdentityMismatchError,
    SchemaError,
    ValidationError,
    VerificationError,
)
from .perturb import factor_squares, normalized_constraints
from .poly import BlockedPoly, BlockShape, substitute
from .polya import PolyaResult
from .problem import CylinderProblem, RescaleRecord, Variant
from .putinar_base import ModuleWitness, Parity, even_square_root, parity_vector
from .serialize import frac_from_str, frac_to_str, poly_from_obj, poly_to_obj
from .sos import SosDecomposition

TIER_EXACT = "exact"
TIER_NUMERIC = "numeric"

# Rational upper bound for e, used to keep bound reports sound.
E_UPPER = Fraction(2_718_281_829, 10**9)


def variant_degree(variant: Variant, m: int) -> int:
    """Total degree of the sphere-padding SOS factor for the regime."""
    return m + 2 if variant is Variant.SPLIT_M_BY_2 else m


# ---------------------------------------------------------------------------
# certificate data model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DegreeReport:
    """Degrees of the two construction terms, measured before padding
    variables are substituted away (substitution can only lower them).

    ``first_term[i]`` is the exact degree of the absorption contribution
    to ``sigma_i * g_i``; ``second_term`` has one entry per sigma
    (sigma_0 first) with the largest remainder-contribution degree; all
    second-term entries are bounded by ``cap``.
    """

    first_term: tuple[int, ...]
    second_term: tuple[int, ...]
    cap: int

    def to_obj(self) -> dict[str, Any]:
        return {
            "first_term": list(self.first_term),
            "second_term": list(self.second_term),
            "cap": self.cap,
        }

    @staticmethod
    def from_obj(obj: Any) -> "DegreeReport":
        if not isinstance(obj, dict):
            raise SchemaError("degree report must be an object")
        try:
            return DegreeReport(
                first_term=tuple(int(v) for v in obj["first_term"]),
                second_term=tuple(int(v) for v in obj["second_term"]),
                cap=int(obj["cap"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad degree report: {exc}") from None


@dataclass(frozen=True)
class CertificateMeta:
    lam: Fraction
    k: int
    ell: int
    polya_exponent: int
    c9: int
    fstar_lb: Fraction
    rescale: RescaleRecord
    archimedean_attested: bool
    scales: tuple[Fraction, ...]
    degrees: DegreeReport
    residual: Fraction | None = None

    def to_obj(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "lambda": frac_to_str(self.lam),
            "k": self.k,
            "ell": self.ell,
            "N": self.polya_exponent,
            "c9": self.c9,
            "fstar_lb": frac_to_str(self.fstar_lb),
            "rescale": self.rescale.to_obj(),
            "archimedean_attested": self.archimedean_attested,
            "scales": [frac_to_str(c) for c in self.scales],
            "degrees": self.degrees.to_obj(),
        }
        if self.residual is not None:
            out["residual"] = frac_to_str(self.residual)
        return out

    @staticmethod
    def from_obj(obj: Any) -> "CertificateMeta":
        if not isinstance(obj, dict):
            raise SchemaError("certificate metadata must be an object")
        try:
            return CertificateMeta(
                lam=frac_from_str(obj["lambda"]),
                k=int(obj["k"]),
                ell=int(obj["ell"]),
                polya_exponent=int(obj["N"]),
                c9=int(obj["c9"]),
                fstar_lb=frac_from_str(obj["fstar_lb"]),
                rescale=RescaleRecord.from_obj(obj["rescale"]),
                archimedean_attested=bool(obj["archimedean_attested"]),
                scales=tuple(frac_from_str(v) for v in obj["scales"]),
                degrees=DegreeReport.from_obj(obj["degrees"]),
                residual=(
                    frac_from_str(obj["residual"]) if "residual" in obj else None
                ),
            )
        except KeyError as exc:
            raise SchemaError(f"certificate metadata missing field {exc}") from None


@dataclass(frozen=True)
class Certificate:
    """The full representation f = sigma_0 + sum sigma_i g_i."""

    problem_hash: str
    tier: str
    sigmas: tuple[SosDecomposition, ...]
    meta: CertificateMeta


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def sos_to_obj(deco: SosDecomposition) -> dict[str, Any]:
    return {
        "weights": [frac_to_str(w) for w in deco.weights],
        "squares": [poly_to_obj(q) for q in deco.squares],
    }


def sos_from_obj(obj: Any, shape: BlockShape) -> SosDecomposition:
    if not isinstance(obj, dict) or "weights" not in obj or "squares" not in obj:
        raise SchemaError("an SOS entry needs 'weights' and 'squares'")
    weights = tuple(frac_from_str(w) for w in obj["weights"])
    squares = tuple(poly_from_obj(q, shape) for q in obj["squares"])
    if len(weights) != len(squares):
        raise SchemaError("SOS weights and squares differ in length")
    return SosDecomposition(shape, weights, squares, (), ())


def certificate_to_obj(cert: Certificate) -> dict[str, Any]:
    return {
        "problem_hash": cert.problem_hash,
        "tier": cert.tier,
        "sigmas": [sos_to_obj(s) for s in cert.sigmas],
        "metadata": cert.meta.to_obj(),
    }


def certificate_from_obj(obj: Any, shape: BlockShape) -> Certificate:
    if not isinstance(obj, dict):
        raise SchemaError("certificate file must contain a JSON object")
    try:
        problem_hash = obj["problem_hash"]
        tier = obj["tier"]
        sigma_objs = obj["sigmas"]
        meta_obj = obj["metadata"]
    except KeyError as exc:
        raise SchemaError(f"certificate file missing field {exc}") from None
    if tier not in (TIER_EXACT, TIER_NUMERIC):
        raise SchemaError(f"unknown certificate tier {tier!r}")
    if not isinstance(sigma_objs, list) or not sigma_objs:
        raise SchemaError("certificate needs a nonempty sigma list")
    return Certificate(
        problem_hash=str(problem_hash),
        tier=tier,
        sigmas=tuple(sos_from_obj(s, shape) for s in sigma_objs),
        meta=CertificateMeta.from_obj(meta_obj),
    )


def witness_to_obj(witness: ModuleWitness) -> dict[str, Any]:
    return {
        "target": poly_to_obj(witness.target),
        "budget": witness.budget,
        "sigma0": sos_to_obj(witness.sigma0),
        "multipliers": [
            [idx, sos_to_obj(deco)] for idx, deco in witness.multipliers
        ],
    }


def witness_from_obj(obj: Any, shape: BlockShape) -> ModuleWitness:
    if not isinstance(obj, dict):
        raise SchemaError("a cached witness must be an object")
    try:
        return ModuleWitness(
            target=poly_from_obj(obj["target"], shape),
            sigma0=sos_from_obj(obj["sigma0"], shape),
            multipliers=tuple(
                (int(idx), sos_from_obj(deco, shape))
                for idx, deco in obj["multipliers"]
            ),
            budget=int(obj["budget"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad cached witness: {exc}") from None


def base_cache_to_obj(
    constraints_key: str, witnesses: Mapping[Parity, ModuleWitness]
) -> dict[str, Any]:
    return {
        "constraints_hash": constraints_key,
        "witnesses": {
            "".join(str(b) for b in parity): witness_to_obj(w)
            for parity, w in sorted(witnesses.items())
        },
    }


def base_cache_from_obj(
    obj: Any, constraints_key: str, shape: BlockShape
) -> dict[Parity, ModuleWitness]:
    """Decode a witness cache; an unrelated or malformed cache is empty.

    Cache misuse must never poison a run: entries are re-verified by the
    consumer anyway, and a key mismatch simply means the constraints
    changed since the cache was written.
    """
    if not isinstance(obj, dict) or obj.get("constraints_hash") != constraints_key:
        return {}
    out: dict[Parity, ModuleWitness] = {}
    raw = obj.get("witnesses")
    if not isinstance(raw, dict):
        return {}
    for key, wobj in raw.items():
        try:
            parity = tuple(int(ch) for ch in key)
            out[parity] = witness_from_obj(wobj, shape)
        except (SchemaError, ValueError):
            continue
    return out


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def _strip_padding(p: BlockedPoly, shape: BlockShape) -> BlockedPoly:
    """Drop the (now unused) homogenizer slots, landing in ``shape``."""
    width = shape.width
    terms: dict[tuple[int, ...], Fraction] = {}
    for expo, coeff in p.terms.items():
        if any(expo[width:]):
            raise IdentityMismatchError(
                "a padding variable survived substitution", exponent=list(expo)
            )
        terms[expo[:width]] = coeff
    return BlockedPoly(shape, terms)


def _simplex_u(shape: BlockShape) -> BlockedPoly:
    out = BlockedPoly.constant(shape, 1)
    for i in shape.block_indices("x"):
        out = out - BlockedPoly.variable(shape, i)
    return out


class _SigmaBuilder:
    """Accumulates weighted squares per sigma with degree tracking."""

    def __init__(self, problem: CylinderProblem, lifted_shape: BlockShape):
        self.problem = problem
        self.lifted = lifted_shape
        self.weights: list[list[Fraction]] = [[] for _ in range(problem.s + 1)]
        self.squares: list[list[BlockedPoly]] = [[] for _ in range(problem.s + 1)]
        self.second_term = [0] * (problem.s + 1)
        mapping = {lifted_shape.hom_index("X0"): _simplex_u(lifted_shape)}
        one = BlockedPoly.constant(lifted_shape, 1)
        for name in lifted_shape.homs:
            if name != "X0":
                mapping[lifted_shape.hom_index(name)] = one
        self._mapping = mapping

    def ground(self, square: BlockedPoly) -> BlockedPoly:
        return _strip_padding(
            substitute(square, self._mapping), self.problem.shape
        )

    def add(self, index: int, weight: Fraction, square: BlockedPoly) -> None:
        if weight == 0:
            return
        self.weights[index].append(weight)
        self.squares[index].append(self.ground(square))

    def sigmas(self) -> tuple[SosDecomposition, ...]:
        shape = self.problem.shape
        return tuple(
            SosDecomposition(shape, tuple(w), tuple(q), (), ())
            for w, q in zip(self.weights, self.squares)
        )


def _sos_degree(deco: SosDecomposition) -> int:
    """Total degree of the expanded SOS (tops of squares cannot cancel)."""
    if not deco.weights:
        return 0
    return max(2 * q.total_degree() for q in deco.squares)


def assemble(
    problem: CylinderProblem,
    lam: Fraction,
    k: int,
    polya: PolyaResult,
    form_sos: Mapping[tuple[int, ...], SosDecomposition],
    base: Mapping[Parity, ModuleWitness],
    *,
    rescale: RescaleRecord | None = None,
    fstar_lb: Fraction,
) -> Certificate:
    """Stitch the pipeline stages into a verified exact certificate.

    ``form_sos`` maps each coefficient-form key of ``polya.forms`` to an
    SOS decomposition of that form; ``base`` must cover every parity
    that occurs.  The identity is re-expanded and compared to f before
    returning; a mismatch is an internal invariant breach and aborts.
    """
    shape = problem.shape
    lifted = polya.saturated.shape
    builder = _SigmaBuilder(problem, lifted)
    vdeg = variant_degree(problem.variant, problem.m)

    # Term one: absorption squares for each constraint.
    scales = tuple(c for _ghat, c in normalized_constraints(problem))
    sphere_squares = [q.embed(lifted) for q in factor_squares(problem)]
    one = BlockedPoly.constant(lifted, 1)
    first_term = []
    for i, (ghat, c_i) in enumerate(normalized_constraints(problem)):
        slack = (ghat.embed(lifted) - one) ** k
        for sq in sphere_squares:
            builder.add(i + 1, lam / c_i, sq * slack)
        expected = vdeg + (2 * k + 1) * problem.g[i].block_degree("x")
        measured = max(
            2 * (sq * slack).total_degree() + problem.g[i].block_degree("x")
            for sq in sphere_squares
        )
        if measured != expected:
            raise IdentityMismatchError(
                "absorption-term degree drifted from its formula",
                constraint=i + 1,
                measured=measured,
                expected=expected,
            )
        first_term.append(expected)

    # Term two: saturated remainder through the facet-product witnesses.
    used_parities: set[Parity] = set()
    for key in sorted(polya.forms):
        deco = form_sos[key]
        parity = parity_vector(key)
        used_parities.add(parity)
        witness = base[parity]
        root = even_square_root(key)
        sq_x = _simplex_u(shape) ** root[0]
        for slot, power in zip(shape.block_indices("x"), root[1:]):
            if power:
                sq_x = sq_x * BlockedPoly.variable(shape, slot) ** power
        sq_x = sq_x.embed(lifted)
        tau_blocks = [(0, witness.sigma0)] + [
            (idx + 1, tau) for idx, tau in witness.multipliers
        ]
        for w_form, q_form in zip(deco.weights, deco.squares):
            partial = q_form * sq_x
            for sigma_index, tau in tau_blocks:
                gdeg = (
                    0
                    if sigma_index == 0
                    else problem.g[sigma_index - 1].block_degree("x")
                )
                for w_tau, t in zip(tau.weights, tau.squares):
                    square = partial * t.embed(lifted)
                    builder.add(sigma_index, w_form * w_tau, square)
                    degree = 2 * square.total_degree() + gdeg
                    if degree > builder.second_term[sigma_index]:
                        builder.second_term[sigma_index] = degree

    # c9 from the witnesses actually used (sigma_0's generator is 1).
    c9 = 0
    for parity in sorted(used_parities):
        witness = base[parity]
        c9 = max(c9, _sos_degree(witness.sigma0))
        for idx, tau in witness.multipliers:
            c9 = max(c9, _sos_degree(tau) + problem.g[idx].block_degree("x"))

    cap = vdeg + polya.exponent + polya.ell + c9
    for index, degree in enumerate(builder.second_term):
        if degree > cap:
            raise IdentityMismatchError(
                "remainder-term degree exceeded its cap",
                sigma=index,
                measured=degree,
                cap=cap,
            )

    sigmas = builder.sigmas()
    total = sigmas[0].as_poly()
    for i, g in enumerate(problem.g):
        total = total + sigmas[i + 1].as_poly() * g
    if total != problem.f:
        diff = total - problem.f
        raise IdentityMismatchError(
            "assembled certificate does not reproduce f",
            residual_terms=len(diff.terms),
        )

    meta = CertificateMeta(
        lam=lam,
        k=k,
        ell=polya.ell,
        polya_exponent=polya.exponent,
        c9=c9,
        fstar_lb=fstar_lb,
        rescale=rescale if rescale is not None else RescaleRecord(False),
        archimedean_attested=problem.archimedean_attested,
        scales=scales,
        degrees=DegreeReport(tuple(first_term), tuple(builder.second_term), cap),
    )
    return Certificate(
        problem_hash=problem.problem_hash(),
        tier=TIER_EXACT,
        sigmas=sigmas,
        meta=meta,
    )


def sos_only_certificate(
    problem: CylinderProblem,
    sigma0: SosDecomposition,
    *,
    rescale: RescaleRecord | None = None,
    fstar_lb: Fraction,
) -> Certificate:
    """Certificate for the degenerate case with no compact variables used.

    When f does not involve the X-block it is certified as a single sum
    of squares; the constraint multipliers are all zero.
    """
    shape = problem.shape
    if sigma0.as_poly() != problem.f:
        raise IdentityMismatchError("sum of squares does not reproduce f")
    empty = SosDecomposition(shape, (), (), (), ())
    sigmas = (sigma0,) + (empty,) * problem.s
    cap = variant_degree(problem.variant, problem.m)
    meta = CertificateMeta(
        lam=Fraction(0),
        k=0,
        ell=0,
        polya_exponent=0,
        c9=0,
        fstar_lb=fstar_lb,
        rescale=rescale if rescale is not None else RescaleRecord(False),
        archimedean_attested=problem.archimedean_attested,
        scales=tuple(c for _g, c in normalized_constraints(problem)),
        degrees=DegreeReport((), (_sos_degree(sigma0),) + (0,) * problem.s, cap),
    )
    return Certificate(
        problem_hash=problem.problem_hash(),
        tier=TIER_EXACT,
        sigmas=sigmas,
        meta=meta,
    )


def compose_with_frame(
    cert: Certificate, record: RescaleRecord, box_problem: CylinderProblem
) -> Certificate:
    """Pull a simplex-frame certificate back to the original box frame.

    Every square is composed with the forward change of variables; the
    constraint multipliers keep their indices because the box problem's
    constraints transport to the simplex ones under the same map.
    Degrees are unchanged (the map is affine and invertible).
    """
    if not record.applied:
        return cert
    shape = box_problem.shape
    mapping = record.forward_subst(shape)
    sigmas = tuple(
        SosDecomposition(
            shape,
            deco.weights,
            tuple(substitute(q, mapping) for q in deco.squares),
            (),
            (),
        )
        for deco in cert.sigmas
    )
    return Certificate(
        problem_hash=box_problem.problem_hash(),
        tier=cert.tier,
        sigmas=sigmas,
        meta=replace(cert.meta, rescale=record),
    )


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    tier: str
    residual: Fraction
    sigma_degrees: tuple[int, ...]
    product_degrees: tuple[int, ...]

    def to_obj(self) -> dict[str, Any]:
        return {
            "tier": self.tier,
            "residual": frac_to_str(self.residual),
            "sigma_degrees": list(self.sigma_degrees),
            "product_degrees": list(self.product_degrees),
        }


def _fail(kind: str, message: str, **payload: Any) -> VerificationError:
    return VerificationError(message, kind=kind, **payload)


def verify_certificate(
    problem: CylinderProblem,
    cert: Certificate,
    *,
    require_tier: str = TIER_EXACT,
) -> VerificationReport:
    """Re-expand a certificate from scratch and check it against f.

    Raises :class:`VerificationError` with a ``kind`` payload naming the
    first failed check; returns a report with measured degrees when all
    checks pass.
    """
    if require_tier not in (TIER_EXACT, TIER_NUMERIC):
        raise ValidationError(f"unknown tier requirement {require_tier!r}")
    if cert.problem_hash != problem.problem_hash():
        raise _fail(
            "IDENTITY_FAIL",
            "certificate was issued for a different problem",
            expected=problem.problem_hash(),
            declared=cert.problem_hash,
        )
    if len(cert.sigmas) != problem.s + 1:
        raise _fail(
            "IDENTITY_FAIL",
            "certificate must carry one sigma per constraint plus sigma_0",
            sigmas=len(cert.sigmas),
            constraints=problem.s,
        )
    for index, deco in enumerate(cert.sigmas):
        if any(w <= 0 for w in deco.weights):
            raise _fail(
                "NEGATIVE_WEIGHT",
                "all square weights must be strictly positive",
                sigma=index,
            )

    sigma_polys = [deco.as_poly() for deco in cert.sigmas]
    total = sigma_polys[0]
    for sigma, g in zip(sigma_polys[1:], problem.g):
        total = total + sigma * g
    diff = total - problem.f
    if not diff:
        achieved = TIER_EXACT
        residual = Fraction(0)
    else:
        residual = max(abs(c) for c in diff.terms.values())
        declared = cert.meta.residual
        if cert.tier != TIER_NUMERIC or declared is None or residual > declared:
            raise _fail(
                "IDENTITY_FAIL",
                "re-expanded sigmas do not reproduce f",
                residual=frac_to_str(residual),
            )
        achieved = TIER_NUMERIC
    if cert.tier == TIER_EXACT and achieved != TIER_EXACT:
        raise _fail(
            "IDENTITY_FAIL",
            "certificate declares the exact tier but the identity has residue",
            residual=frac_to_str(residual),
        )
    if require_tier == TIER_EXACT and achieved != TIER_EXACT:
        raise _fail(
            "TIER_INSUFFICIENT",
            "exact tier demanded but the certificate is numeric",
            residual=frac_to_str(residual),
        )

    meta = cert.meta
    degrees = meta.degrees
    vdeg = variant_degree(problem.variant, problem.m)
    cap = vdeg + meta.polya_exponent + meta.ell + meta.c9
    if degrees.cap != cap:
        raise _fail(
            "DEGREE_METADATA_MISMATCH",
            "degree cap does not match its components",
            declared=degrees.cap,
            recomputed=cap,
        )
    if len(degrees.second_term) != problem.s + 1 or any(
        d > cap for d in degrees.second_term
    ):
        raise _fail(
            "DEGREE_METADATA_MISMATCH",
            "remainder-term degrees must stay within the cap",
            declared=list(degrees.second_term),
            cap=cap,
        )
    if meta.lam == 0:
        if degrees.first_term or any(p for p in sigma_polys[1:]):
            raise _fail(
                "DEGREE_METADATA_MISMATCH",
                "a certificate without absorption must not use constraints",
            )
    else:
        if len(degrees.first_term) != problem.s:
            raise _fail(
                "DEGREE_METADATA_MISMATCH",
                "one absorption degree per constraint is required",
                declared=len(degrees.first_term),
                constraints=problem.s,
            )
        for i, declared_deg in enumerate(degrees.first_term):
            expected = vdeg + (2 * meta.k + 1) * problem.g[i].block_degree("x")
            if declared_deg != expected:
                raise _fail(
                    "DEGREE_METADATA_MISMATCH",
                    "absorption-term degree differs from its formula",
                    constraint=i + 1,
                    declared=declared_deg,
                    expected=expected,
                )
    product_degrees = []
    for i, sigma in enumerate(sigma_polys):
        if i == 0 or meta.lam == 0:
            bound = cap
        else:
            bound = max(degrees.first_term[i - 1], cap)
        if not sigma:
            measured = 0
        elif i == 0:
            measured = sigma.total_degree()
        else:
            measured = sigma.total_degree() + problem.g[i - 1].block_degree("x")
        if measured > bound:
            raise _fail(
                "DEGREE_METADATA_MISMATCH",
                "a sigma exceeds every degree recorded for it",
                sigma=i,
                measured=measured,
                bound=bound,
            )
        product_degrees.append(measured)
    return VerificationReport(
        tier=achieved,
        residual=residual,
        sigma_degrees=tuple(p.total_degree() if p else 0 for p in sigma_polys),
        product_degrees=tuple(product_degrees),
    )


# ---------------------------------------------------------------------------
# headline bound formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundInputs:
    """Arguments of the degree-bound formulas.

    ``c`` is the formulas' undetermined positive constant, supplied by
    the caller; ``f_norm`` is the weighted coefficient norm and ``fstar``
    the positive infimum the bound is taken against.
    """

    c: Fraction
    d: int
    m: int
    r: int
    n: int
    f_norm: Fraction
    fstar: Fraction

    def __post_init__(self) -> None:
        if self.c <= 0 or self.f_norm <= 0 or self.fstar <= 0:
            raise ValidationError("bound inputs must be positive")
        if self.d < 0 or self.m < 0 or self.r < 0 or self.n < 1:
            raise ValidationError("bound dimensions out of range")
        if self.m % 2:
            raise ValidationError("the unbounded-block degree must be even")


def integer_root_upper(value: int, degree: int) -> int:
    """Smallest integer t with t**degree >= value (value >= 0)."""
    if value < 0 or degree < 1:
        raise ValidationError("root of a negative number or bad degree")
    if value in (0, 1):
        return value
    t = max(1, round(value ** (1.0 / degree)))
    while t**degree >= value:
        t -= 1
    while t**degree < value:
        t += 1
    return t


def rational_power_upper(base: Fraction, exponent: Fraction) -> Fraction:
    """A certified rational y >= base**exponent for positive base.

    Exact when the exponent is an integer; otherwise the q-th root is
    replaced by an integer-root ceiling.
    """
    if base <= 0:
        raise ValidationError("power bounds need a positive base")
    p, q = exponent.numerator, exponent.denominator
    if p < 0:
        raise ValidationError("negative exponents are not needed here")
    power = base**p
    if q == 1:
        return power
    a, b = power.numerator, power.denominator
    # (a/b)^(1/q) = root(a * b^(q-1)) / b, rounded up in the numerator.
    return Fraction(integer_root_upper(a * b ** (q - 1), q), b)


def exp_upper(t: Fraction) -> Fraction:
    """A certified rational upper bound of e**t for t >= 0."""
    if t < 0:
        raise ValidationError("nonnegative exponents only")
    if t.denominator == 1:
        return E_UPPER ** int(t)
    return E_UPPER ** -(-t.numerator // t.denominator)


_BOUND_FORMULAS = ("1.1", "1.2", "1.3", "1.4", "1.5", "2.3")


def theorem_bound(formula: str, inputs: BoundInputs) -> Fraction:
    """Certified rational upper evaluation of a headline bound formula.

    Every formula has the shape ``prefactor * e**(argument**c)``; both
    the argument and the prefactor are exact rationals, e is replaced by
    an upper rational, and fractional powers are rounded up, so the
    result is always an upper bound of the displayed expression.
    """
    if formula not in _BOUND_FORMULAS:
        raise ValidationError(
            f"unknown bound formula {formula!r}; expected one of "
            f"{list(_BOUND_FORMULAS)}"
        )
    c, d, m, r, n = inputs.c, inputs.d, inputs.m, inputs.r, inputs.n
    base = inputs.f_norm * d * d / inputs.fstar
    scaled = base * Fraction(3 * n) ** d
    if formula == "1.1":
        prefactor, argument = c, base * Fraction(n) ** d
    elif formula == "1.2":
        prefactor, argument = c * (m + 1) * 2 ** (m // 2), scaled * (m + 1)
    elif formula == "1.3":
        prefactor, argument = c, scaled
    elif formula == "1.4":
        prefactor, argument = c * r * r, scaled * r * r
    elif formula == "1.5":
        prefactor = c * (m + 1) * 2 ** (m // 2) * r * r
        argument = scaled * (m + 1) * r * r
    else:
        prefactor, argument = c, base
    if argument <= 0:
        raise ValidationError("bound argument must be positive")
    if c.denominator == 1:
        exponent = argument ** int(c)
    else:
        exponent = rational_power_upper(argument, c)
    return prefactor * exp_upper(exponent)
