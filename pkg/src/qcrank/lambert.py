"""Lambert-type series: signed geometric sums and their theta variants.

Everything here expands sums of the shape

    sum_k (sign)^k q^(quadratic in k) / (1 - q^(linear in k))^d

exactly, as truncated Laurent series.  Negative-exponent denominators
are rewritten through (1 - q^(-P))^(-d) = (-1)^d q^(dP) (1 - q^P)^(-d),
and the bilateral summation range is derived from the quadratic
exponent each time, so no truncation is ever hard-coded.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, isqrt

from .series import LaurentSeries


@dataclass(frozen=True)
class LambertSpec:
    """One concrete Lambert-type sum.

    kind 'X'/'H': parameters j, K.
    kind 'S': parameters (m, a, k, l, jexp); the n=0 term is excluded
    when m = 0 (the primed sum).
    """

    kind: str
    j: int = 0
    K: int = 0
    m: int = 0
    a: int = 0
    k: int = 11
    l: int = 1
    jexp: int = 1

    @staticmethod
    def X(j: int, K: int) -> "LambertSpec":
        return LambertSpec("X", j=j, K=K)

    @staticmethod
    def H(j: int, K: int) -> "LambertSpec":
        return LambertSpec("H", j=j, K=K)

    @staticmethod
    def S(m: int, a: int, k: int, l: int, jexp: int) -> "LambertSpec":
        return LambertSpec("S", m=m, a=a, k=k, l=l, jexp=jexp)


def X_series(j: int, K: int, prec: int) -> LaurentSeries:
    """sum_{n>=0} [q^(j+Kn)/(1-q^(j+Kn)) - q^(K-j+Kn)/(1-q^(K-j+Kn))]."""
    if not 0 < j < K:
        raise ValueError("need 0 < j < K")
    coeffs = [0] * max(prec, 1)
    for base, w in ((j, 1), (K - j, -1)):
        e = base
        while e < prec:
            for t in range(e, prec, e):
                coeffs[t] += w
            e += K
    return LaurentSeries(0, coeffs)


def H_series(j: int, K: int, prec: int) -> LaurentSeries:
    """Bilateral sum_n q^(j+Kn)/(1-q^(j+Kn))^2 made one-sided.

    The n < 0 half uses x/(1-x)^2 = (1/x)/(1-1/x)^2, giving positive
    exponents K*n - j for n >= 1.
    """
    if not 0 < j < K:
        raise ValueError("need 0 < j < K")
    coeffs = [0] * max(prec, 1)
    for base, step in ((j, K), (K - j, K)):
        e = base
        while e < prec:
            for i, t in enumerate(range(e, prec, e), start=1):
                coeffs[t] += i
            e += step
    return LaurentSeries(0, coeffs)


def lam_series(K: int, prec: int) -> LaurentSeries:
    """sum_{n>=1} q^(Kn)/(1-q^(Kn))^2, the modulus-aligned correction sum."""
    if K < 1:
        raise ValueError("K must be a positive integer")
    coeffs = [0] * max(prec, 1)
    e = K
    while e < prec:
        for i, t in enumerate(range(e, prec, e), start=1):
            coeffs[t] += i
        e += K
    return LaurentSeries(0, coeffs)


def x_general(j: int, K: int, prec: int) -> LaurentSeries:
    """X at q^j for any integer j with j not divisible by K.

    Reduction to the canonical range uses X(q^(j+K)) = X(q^j) + 1,
    a consequence of shifting the summation index.
    """
    r = j % K
    if r == 0:
        raise ValueError("j must not be divisible by K")
    shift = (j - r) // K
    base = X_series(r, K, prec)
    return base.add(shift) if shift else base


def h_general(j: int, K: int, prec: int) -> LaurentSeries:
    """H at q^j for any integer j not divisible by K (H is K-periodic in j)."""
    r = j % K
    if r == 0:
        raise ValueError("j must not be divisible by K")
    return H_series(r, K, prec)


def s1_series(ja: int, jb: int, K: int, prec: int) -> LaurentSeries:
    """X(q^ja; q^K) - X(q^jb; q^K), the first proof-local combination."""
    return x_general(ja, K, prec).sub(x_general(jb, K, prec))


def s2_series(ja: int, jb: int, K: int, prec: int) -> LaurentSeries:
    """-X(q^ja) + X(q^jb) - H(q^ja) + H(q^jb), the second combination."""
    return (
        x_general(jb, K, prec)
        .sub(x_general(ja, K, prec))
        .add(h_general(jb, K, prec))
        .sub(h_general(ja, K, prec))
    )


def _expand_fraction(acc: dict[int, int], base: int, P: int, d: int,
                     sign: int, prec: int) -> None:
    """acc += sign * q^base / (1-q^P)^d truncated below prec; P > 0."""
    i = 0
    e = base
    while e < prec:
        acc[e] = acc.get(e, 0) + sign * comb(i + d - 1, d - 1)
        i += 1
        e += P


def S_series(spec: LambertSpec, prec: int) -> LaurentSeries:
    """The signed theta-fraction sum S_m(a, k, l, jexp).

    sum over integers N = k*n + m, N != 0, of
      (-1)^N q^(N(lN+1)/2 + aN) / (1 - q^(kN))^jexp.
    """
    if spec.kind != "S":
        raise ValueError("spec.kind must be 'S'")
    m, a, k, l, d = spec.m, spec.a, spec.k, spec.l, spec.jexp
    if k < 1 or l < 1 or d < 1 or not 0 <= m < k:
        raise ValueError("invalid S-sum parameters")
    acc: dict[int, int] = {}
    c = abs(a) + d * k + k * l + 2
    bound = (c + isqrt(c * c + 2 * l * max(prec, 1))) // l + 2 * k + 4
    n_lo = -((bound + m) // k) - 1
    n_hi = (bound - m) // k + 1
    for n in range(n_lo, n_hi + 1):
        N = k * n + m
        if N == 0:
            continue  # primed sum: the m=0, n=0 term is excluded
        E = N * (l * N + 1) // 2 + a * N
        sign = -1 if N % 2 else 1
        P = k * N
        if P < 0:
            P = -P
            E += d * P
            if d % 2:
                sign = -sign
        _expand_fraction(acc, E, P, d, sign, prec)
    return LaurentSeries.from_terms(acc, prec)


def s_sum(m: int, a: int, k: int, l: int, jexp: int, prec: int) -> LaurentSeries:
    return S_series(LambertSpec.S(m, a, k, l, jexp), prec)


def s_row_sum(a: int, jexp: int, prec: int, k: int = 11) -> LaurentSeries:
    """sum_{m=0}^{k-1} S_m(a, k, 1, jexp)."""
    total = LaurentSeries.zero(prec)
    for m in range(k):
        total = total.add(s_sum(m, a, k, 1, jexp, prec))
    return total


def primed_weighted_sum(b: int, jexp: int, prec: int) -> LaurentSeries:
    """sum over n != 0 of (-1)^n q^(n(n+1)/2+(b-1)n) (1-q^n)/(1-q^(11n))^jexp.

    Independent of S_series: used to cross-check the m-indexed split
    sum_m [S_m(b-1,11,1,jexp) - S_m(b,11,1,jexp)].
    """
    if not 1 <= b <= 10:
        raise ValueError("need 1 <= b <= 10")
    if jexp not in (1, 2):
        raise ValueError("jexp must be 1 or 2")
    acc: dict[int, int] = {}
    c = abs(b) + 11 * jexp + 13
    bound = c + isqrt(c * c + 2 * max(prec, 1)) + 4
    for n in range(-bound, bound + 1):
        if n == 0:
            continue
        E = n * (n + 1) // 2 + (b - 1) * n
        sign = -1 if n % 2 else 1
        P = 11 * n
        if P < 0:
            P = -P
            E += jexp * P
            if jexp % 2:
                sign = -sign
        _expand_fraction(acc, E, P, jexp, sign, prec)
        _expand_fraction(acc, E + n, P, jexp, -sign, prec)
    return LaurentSeries.from_terms(acc, prec)


def bilateral_theta_fraction(prec: int, K: int, lin: int, den_base: int,
                             den_pow: int, shift: int = 0, flip: bool = False,
                             primed: bool = False) -> LaurentSeries:
    """sum_k (+-)(-1)^k q^(K k(k+1)/2 + lin*k + shift) / (1-q^(den_base+Kk))^den_pow.

    flip negates the whole sum; primed excludes k = 0 (required whenever
    den_base = 0, where the k = 0 denominator would vanish).
    """
    if K < 1 or den_pow < 1:
        raise ValueError("invalid theta-fraction parameters")
    acc: dict[int, int] = {}
    c = abs(lin) + abs(den_base) * den_pow + K * (den_pow + 2) + abs(shift) + 2
    eff = max(prec - min(shift, 0), 1)
    bound = (c + isqrt(c * c + 2 * K * eff)) // K + 4
    for k in range(-bound, bound + 1):
        if primed and k == 0:
            continue
        E_den = den_base + K * k
        if E_den == 0:
            raise ValueError("denominator factor vanishes at k = "
                             f"{k}; use primed=True if k=0 was meant to be excluded")
        E = K * k * (k + 1) // 2 + lin * k + shift
        sign = -1 if k % 2 else 1
        if flip:
            sign = -sign
        P = E_den
        if P < 0:
            P = -P
            E += den_pow * P
            if den_pow % 2:
                sign = -sign
        _expand_fraction(acc, E, P, den_pow, sign, prec)
    return LaurentSeries.from_terms(acc, prec)


def bracket_general(j: int, K: int, prec: int) -> LaurentSeries:
    """(q^j; q^K)(q^{K-j}; q^K) for any integer j not divisible by K."""
    from .qproducts import pochhammer

    return pochhammer(j, K, prec).mul(pochhammer(K - j, K, prec))
