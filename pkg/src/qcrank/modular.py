"""Cusp geometry and certification bounds for generalized eta-products.

The certification pipeline: express an identity as a vanishing linear
combination of eta-product monomials, divide through by one monomial,
check each ratio is a modular function (congruence conditions on the
exponents), bound pole orders at all cusps away from infinity, then
verify the q-expansion beyond that bound.  Everything is exact: cusp
orders are Fractions, the bound is a Fraction, and the final expansion
check is integer arithmetic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from multiprocessing import get_context

from .qproducts import GeneralizedEtaProduct
from .series import LaurentSeries


class NotModular(ValueError):
    """A constituent fails the modularity conditions."""


class InsufficientPrecision(ValueError):
    pass


def P2_frac(x: Fraction) -> Fraction:
    """Second periodic Bernoulli polynomial {x}^2 - {x} + 1/6, exact."""
    x = Fraction(x)
    t = x - (x.numerator // x.denominator)
    return t * t - t + Fraction(1, 6)


# ---------------------------------------------------------------------------
# cusps


@dataclass(frozen=True)
class Cusp:
    """Canonical cusp a/c of Gamma_1(N); infinity is 1/0."""

    a: int
    c: int
    width: int

    @property
    def is_infinity(self) -> bool:
        return self.c == 0

    def label(self) -> str:
        return "oo" if self.c == 0 else f"{self.a}/{self.c}"


def _width(N: int, c: int) -> int:
    if N == 4 and gcd(c, 4) == 2:
        return 1
    return N // gcd(c, N)


def cusp_set(N: int) -> list[Cusp]:
    """A complete duplicate-free set of inequivalent cusps of Gamma_1(N).

    A pair (a, c), gcd(a,c) = 1, is equivalent to (a', c') iff
    (a', c') = +-(a + n c, c) mod N for some n.  Orbits are therefore
    indexed by c mod N together with a mod gcd(c, N), all taken modulo
    simultaneous negation.  Representatives are lifted to actual
    coprime integer pairs, smallest c then smallest a.
    """
    if N < 1:
        raise ValueError("N must be positive")
    seen: set[tuple[int, int]] = set()
    classes: list[tuple[int, int, int]] = []
    for cbar in range(N):
        g = gcd(cbar, N)  # gcd(0, N) == N covers the cbar == 0 column
        for abar in range(g):
            if gcd(abar, g) != 1:
                continue
            key = (cbar, abar)
            mirror = ((-cbar) % N, (-abar) % g)
            if mirror in seen:
                continue
            seen.add(key)
            classes.append((cbar, abar, g))
    cusps = []
    for cbar, abar, g in sorted(classes):
        if cbar == 0 and abar % N in (1 % N, (N - 1) % N) and g == N:
            a, c = 1, 0
        elif cbar == 0:
            a, c = abar, N
        else:
            c = cbar
            a = abar if abar else g
            while gcd(a, c) != 1:
                a += g
        cusps.append(Cusp(a, c, _width(N, c)))
    # infinity first, then by (c, a)
    cusps.sort(key=lambda s: (s.c != 0, s.c, s.a))
    return cusps


def cusps_equivalent(a: int, c: int, a2: int, c2: int, N: int) -> bool:
    """The equivalence test, by direct search over a full period of n."""
    for n in range(N):
        if (a2 - (a + n * c)) % N == 0 and (c2 - c) % N == 0:
            return True
        if (a2 + (a + n * c)) % N == 0 and (c2 + c) % N == 0:
            return True
    return False


def cusp_count_oracle(N: int) -> int:
    """(1/2) sum_{d|N} phi(d) phi(N/d), valid for N > 4."""

    def phi(n: int) -> int:
        out, p, m = 1, 2, n
        while p * p <= m:
            if m % p == 0:
                out *= p - 1
                m //= p
                while m % p == 0:
                    out *= p
                    m //= p
            p += 1
        if m > 1:
            out *= m - 1
        return out

    total = sum(phi(d) * phi(N // d) for d in range(1, N + 1) if N % d == 0)
    return total // 2


# ---------------------------------------------------------------------------
# modularity conditions and orders


@dataclass
class ModularityReport:
    level: int
    weight: Fraction
    condition_i: Fraction
    condition_ii: Fraction
    shift_integral: bool
    note: str = ""

    @property
    def ok(self) -> bool:
        return (
            self.weight == 0
            and self.condition_i.denominator == 1
            and self.condition_i.numerator % 2 == 0
            and self.condition_ii.denominator == 1
            and self.condition_ii.numerator % 2 == 0
            and self.shift_integral
        )

    def failures(self) -> list[str]:
        out = []
        if self.weight != 0:
            out.append(f"weight {self.weight} != 0")
        if self.condition_i.denominator != 1 or self.condition_i.numerator % 2:
            out.append(f"condition (i) sum {self.condition_i} not in 2Z")
        if self.condition_ii.denominator != 1 or self.condition_ii.numerator % 2:
            out.append(f"condition (ii) sum {self.condition_ii} not in 2Z")
        if not self.shift_integral:
            out.append("total q-power at infinity not an integer")
        return out


def is_modular(f: GeneralizedEtaProduct) -> ModularityReport:
    """Congruence test for a modular function on Gamma_1(level).

    Generalized factors enter condition (i) as delta*P2(g/delta)*r and
    condition (ii) as (N/delta)*P2(0)*r.  Classical factors
    (q^delta;q^delta) fold in at 1/12 weight, the exact exchange rate
    between one classical eta and the full +-g family at that delta.
    """
    N = f.level
    c1 = Fraction(0)
    c2 = Fraction(0)
    weight = Fraction(0)
    for (delta, g), r in f.exponents.items():
        if N % delta:
            raise NotModular(f"factor delta={delta} does not divide level {N}")
        c1 += Fraction(delta) * P2_frac(Fraction(g, delta)) * r
        c2 += Fraction(N, delta) * Fraction(1, 6) * r
    for delta, r in f.classical.items():
        if N % delta:
            raise NotModular(f"factor delta={delta} does not divide level {N}")
        c1 += Fraction(delta, 12) * r
        c2 += Fraction(N, delta) * Fraction(1, 12) * r
        weight += Fraction(r, 2)
    shift = f.total_shift()
    return ModularityReport(
        level=N,
        weight=weight,
        condition_i=c1,
        condition_ii=c2,
        shift_integral=(shift.denominator == 1),
    )


def order_at_cusp(f: GeneralizedEtaProduct, s: Cusp) -> Fraction:
    """Invariant order of f at the cusp s (not yet width-scaled).

    Generalized factor: (eps^2/2delta) P2(a g/eps), eps = gcd(delta, c).
    Classical factor: eps^2/(24 delta).  The explicit q-power prefactor
    contributes only at infinity.
    """
    total = Fraction(0)
    for (delta, g), r in f.exponents.items():
        eps = gcd(delta, s.c) if s.c else delta
        total += r * Fraction(eps * eps, 2 * delta) * P2_frac(Fraction(s.a * g, eps))
    for delta, r in f.classical.items():
        eps = gcd(delta, s.c) if s.c else delta
        total += r * Fraction(eps * eps, 24 * delta)
    if s.is_infinity:
        total += f.q_prefactor
    return total


def scaled_order(f: GeneralizedEtaProduct, s: Cusp) -> Fraction:
    """Ord(f, s, Gamma_1(N)) = fan width times the invariant order."""
    return s.width * order_at_cusp(f, s)


def valence_sum(f: GeneralizedEtaProduct, cusps: list[Cusp]) -> Fraction:
    """Sum of width-scaled orders over all cusps; zero for a modular function."""
    return sum((scaled_order(f, s) for s in cusps), Fraction(0))


def compute_B(constituents: list[GeneralizedEtaProduct], N: int,
              cusps: list[Cusp] | None = None) -> Fraction:
    """B = sum over cusps s != oo of min({Ord(f_j, s)} u {0})."""
    for idx, f in enumerate(constituents):
        rep = is_modular(f)
        if not rep.ok:
            raise NotModular(
                f"constituent {idx} is not modular: " + "; ".join(rep.failures())
            )
    if cusps is None:
        cusps = cusp_set(N)
    B = Fraction(0)
    for s in cusps:
        if s.is_infinity:
            continue
        worst = min(scaled_order(f, s) for f in constituents)
        B += min(worst, Fraction(0))
    return B


# ---------------------------------------------------------------------------
# certification


@dataclass
class Certificate:
    identity: str
    level: int
    B: Fraction
    required_order: int
    verified_to: int
    per_cusp: list[dict]
    status: str
    detail: str = ""

    def to_json(self) -> str:
        body = {
            "identity": self.identity,
            "level": self.level,
            "B": f"{self.B.numerator}/{self.B.denominator}",
            "requiredOrder": self.required_order,
            "verifiedTo": self.verified_to,
            "perCusp": self.per_cusp,
            "status": self.status,
        }
        if self.detail:
            body["detail"] = self.detail
        return json.dumps(body, indent=2, sort_keys=True)


@dataclass
class CertificationInput:
    """A vanishing combination sum_j coef_j * monomial_j = 0."""

    identity: str
    level: int
    terms: list[tuple[Fraction, GeneralizedEtaProduct]] = field(default_factory=list)


def _pick_normalizer(inp: CertificationInput) -> int:
    """Index of the monomial used to divide the identity through.

    The term whose expansion starts at the lowest q-exponent (smallest
    order at infinity) is used; ties broken by listing order.  With
    this choice every ratio is a Taylor series at infinity and the
    verified expansion begins at q^0.
    """
    best, best_key = -1, None
    for j, (coef, mono) in enumerate(inp.terms):
        if coef == 0:
            continue
        key = mono.total_shift()
        if best_key is None or key < best_key:
            best, best_key = j, key
    if best < 0:
        raise ValueError("no monomial term to normalize by")
    return best


def normalized_ratios(
    inp: CertificationInput,
) -> list[tuple[Fraction, GeneralizedEtaProduct]]:
    """Divide the identity through by the normalizing monomial.

    Returns (alpha_j, f_j) with the normalizer itself omitted, so the
    certified object is 1 + sum_j alpha_j f_j.
    """
    terms = [(c, m) for c, m in inp.terms if c != 0]
    if not terms:
        raise ValueError("empty identity")
    inp = CertificationInput(inp.identity, inp.level, terms)
    j0 = _pick_normalizer(inp)
    c0, M0 = inp.terms[j0]
    ratios: list[tuple[Fraction, GeneralizedEtaProduct]] = []
    for j, (c, M) in enumerate(inp.terms):
        if j == j0:
            continue
        ratios.append((c / c0, M / M0))
    return ratios


def identity_bound(inp: CertificationInput, cusps=None) -> Fraction:
    """The order bound B of the identity's normalized ratio family."""
    ratios = normalized_ratios(inp)
    return compute_B([r for _, r in ratios], inp.level, cusps)


def _expand_ratio(payload):
    alpha, r, required = payload
    return r.expand(required).truncate(required).mul(alpha)


def certify(inp: CertificationInput, prec: int | None = None,
            progress=None, jobs: int = 1) -> Certificate:
    """Run the full bound-and-expand certification for one identity.

    jobs > 1 expands the normalized ratios in a worker pool; the merge
    order is fixed, so the result is identical to the serial run.
    """
    N = inp.level
    ratios = normalized_ratios(inp)
    cusps = cusp_set(N)
    B = compute_B([r for _, r in ratios], N, cusps)
    # vanishing to order strictly beyond -B forces the function to be 0,
    # so coefficients of q^0 .. q^floor(-B) must all vanish
    neg_b = -B
    required = neg_b.numerator // neg_b.denominator + 1
    if prec is not None and prec <= neg_b:
        raise InsufficientPrecision(
            f"need precision > {neg_b}, got {prec}"
        )
    per_cusp = []
    for s in cusps:
        if s.is_infinity:
            continue
        worst = min(scaled_order(r, s) for _, r in ratios)
        per_cusp.append({
            "a": s.a, "c": s.c, "width": s.width,
            "minOrd": f"{worst.numerator}/{worst.denominator}",
        })
    total = LaurentSeries.from_terms({0: 1}, required)
    if jobs <= 1:
        for k, (alpha, r) in enumerate(ratios):
            total = total.add(_expand_ratio((alpha, r, required)))
            if progress is not None:
                progress(k + 1, len(ratios))
    else:
        payloads = [(alpha, r, required) for alpha, r in ratios]
        ctx = get_context("fork")
        with ctx.Pool(jobs) as pool:
            for k, part in enumerate(pool.imap(_expand_ratio, payloads)):
                total = total.add(part)
                if progress is not None:
                    progress(k + 1, len(ratios))
    ok = all(c == 0 for c in total.coeffs)
    detail = ""
    if not ok:
        bad = next(i for i, c in enumerate(total.coeffs) if c != 0)
        detail = f"first nonzero coefficient at q^{total.lo + bad}"
    return Certificate(
        identity=inp.identity,
        level=N,
        B=B,
        required_order=required,
        verified_to=required,
        per_cusp=per_cusp,
        status="certified" if ok else "failed",
        detail=detail,
    )
