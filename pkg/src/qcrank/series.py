"""Truncated Laurent series with exact rational coefficients.

A series is a finite window of coefficients for exponents lo..prec-1
together with the promise that every exponent below lo has coefficient
zero and everything from prec upward is unknown.  All arithmetic is
exact; precision only ever shrinks, following the usual rules for sums
and Cauchy products of truncated series.

Internally coefficients are stored as a list of integers over a single
positive common denominator.  Every hot-path series in this package has
denominator 1, so multiplication reduces to integer convolution, which
is done by Kronecker substitution: pack each operand into one big
integer, multiply once (gmpy2 does the heavy lifting), and unpack
balanced digits.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from gmpy2 import mpz


class SeriesError(Exception):
    pass


class OutOfPrecision(SeriesError):
    """Requested a coefficient outside the tracked window."""


class ZeroLeadingCoefficient(SeriesError):
    """Inversion of a series with no known nonzero coefficient."""


# ---------------------------------------------------------------------------
# integer convolution


def _schoolbook(a: list[int], b: list[int], out_len: int) -> list[int]:
    out = [0] * min(out_len, len(a) + len(b) - 1)
    n = len(out)
    for i, x in enumerate(a):
        if i >= n:
            break
        if not x:
            continue
        jmax = min(len(b), n - i)
        for j in range(jmax):
            y = b[j]
            if y:
                out[i + j] += x * y
    return out


def _kronecker(a: list[int], b: list[int], out_len: int) -> list[int]:
    ma = max(map(abs, a))
    mb = max(map(abs, b))
    if ma == 0 or mb == 0:
        return [0] * min(out_len, len(a) + len(b) - 1)
    # |conv coeff| <= ma*mb*min(len) < 2^(bits-1) <= 2^(8*nbytes-2)
    bits = ma.bit_length() + mb.bit_length() + min(len(a), len(b)).bit_length() + 1
    nbytes = bits // 8 + 1
    packed = []
    for seq in (a, b):
        pos = bytearray(len(seq) * nbytes)
        neg = bytearray(len(seq) * nbytes)
        for i, x in enumerate(seq):
            if x > 0:
                pos[i * nbytes : i * nbytes + (x.bit_length() + 7) // 8] = x.to_bytes(
                    (x.bit_length() + 7) // 8, "little"
                )
            elif x < 0:
                x = -x
                neg[i * nbytes : i * nbytes + (x.bit_length() + 7) // 8] = x.to_bytes(
                    (x.bit_length() + 7) // 8, "little"
                )
        packed.append(int.from_bytes(pos, "little") - int.from_bytes(neg, "little"))
    prod = int(mpz(packed[0]) * mpz(packed[1]))
    sign = prod < 0
    if sign:
        prod = -prod
    total = len(a) + len(b) - 1
    keep = min(out_len, total)
    buf = prod.to_bytes((total + 1) * nbytes, "little")
    half = 1 << (8 * nbytes - 1)
    full = 1 << (8 * nbytes)
    out = []
    carry = 0
    for i in range(keep):
        v = int.from_bytes(buf[i * nbytes : (i + 1) * nbytes], "little") + carry
        if v >= half:
            v -= full
            carry = 1
        else:
            carry = 0
        out.append(-v if sign else v)
    return out


def _conv(a: list[int], b: list[int], out_len: int) -> list[int]:
    if not a or not b or out_len <= 0:
        return []
    if min(len(a), len(b)) < 24 or len(a) * len(b) <= 2048:
        return _schoolbook(a, b, out_len)
    return _kronecker(a, b, out_len)


def _reduce(nums: list[int], den: int) -> tuple[list[int], int]:
    if den == 1:
        return nums, 1
    g = den
    for x in nums:
        if x:
            g = gcd(g, x)
            if g == 1:
                return nums, den
    # all nums zero: g stays den
    return [x // g for x in nums], den // g


def _inv_unit(u: list[int], uden: int, n: int) -> tuple[list[int], int]:
    """Invert a power series u/uden with u[0] != 0, to n coefficients.

    Newton iteration b <- b*(2 - u*b), doubling correct terms each round.
    """
    bnum = [uden]
    bden = u[0]
    if bden < 0:
        bnum, bden = [-uden], -bden
    g = gcd(bnum[0], bden)
    if g > 1:
        bnum, bden = [bnum[0] // g], bden // g
    k = 1
    while k < n:
        k2 = min(2 * k, n)
        t = _conv(u[:k2], bnum, k2)
        t += [0] * (k2 - len(t))
        d = uden * bden
        e = [2 * d - t[0]] + [-x for x in t[1:]]
        bnum = _conv(bnum, e, k2)
        bnum += [0] * (k2 - len(bnum))
        bden = bden * d
        bnum, bden = _reduce(bnum, bden)
        k = k2
    return bnum, bden


# ---------------------------------------------------------------------------


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


class LaurentSeries:
    """Exact truncated Laurent series in q."""

    __slots__ = ("lo", "_num", "_den")

    def __init__(self, lo: int, nums: list[int], den: int = 1, _trust: bool = False):
        if den <= 0:
            raise ValueError("denominator must be positive")
        if not nums:
            raise ValueError("empty coefficient window")
        self.lo = lo
        if _trust:
            self._num = nums
            self._den = den
        else:
            self._num, self._den = _reduce(list(nums), den)

    # -- construction -------------------------------------------------------

    @staticmethod
    def from_terms(terms: dict[int, object], prec: int) -> "LaurentSeries":
        """Series from an {exponent: rational} mapping, truncated at prec."""
        known = {e: _as_fraction(c) for e, c in terms.items() if e < prec}
        lo = min(known, default=0)
        if lo >= prec:
            lo = prec - 1
        den = 1
        for c in known.values():
            den = den * c.denominator // gcd(den, c.denominator)
        nums = [0] * (prec - lo)
        for e, c in known.items():
            nums[e - lo] = c.numerator * (den // c.denominator)
        return LaurentSeries(lo, nums, den)

    @staticmethod
    def zero(prec: int, lo: int = 0) -> "LaurentSeries":
        if lo >= prec:
            lo = prec - 1
        return LaurentSeries(lo, [0] * (prec - lo), 1, _trust=True)

    @staticmethod
    def one(prec: int) -> "LaurentSeries":
        return LaurentSeries.from_terms({0: 1}, prec)

    @staticmethod
    def monomial(coef, exp: int, prec: int) -> "LaurentSeries":
        return LaurentSeries.from_terms({exp: coef}, prec)

    # -- basic views ---------------------------------------------------------

    @property
    def prec(self) -> int:
        return self.lo + len(self._num)

    @property
    def coeffs(self) -> list[Fraction]:
        d = self._den
        return [Fraction(n, d) for n in self._num]

    def coeff(self, n: int) -> Fraction:
        if n < self.lo or n >= self.prec:
            raise OutOfPrecision(f"coefficient of q^{n} outside window [{self.lo}, {self.prec})")
        return Fraction(self._num[n - self.lo], self._den)

    def valuation(self) -> int | None:
        """Exponent of the first nonzero tracked coefficient, or None."""
        for i, x in enumerate(self._num):
            if x:
                return self.lo + i
        return None

    def is_integral(self) -> bool:
        return self._den == 1

    def nonzero_items(self) -> list[tuple[int, Fraction]]:
        d = self._den
        return [(self.lo + i, Fraction(x, d)) for i, x in enumerate(self._num) if x]

    def __repr__(self) -> str:
        items = self.nonzero_items()
        shown = " + ".join(f"{c}*q^{e}" for e, c in items[:6]) or "0"
        if len(items) > 6:
            shown += " + ..."
        return f"<{shown} + O(q^{self.prec})>"

    def __eq__(self, other) -> bool:
        """Identical window and identical coefficients."""
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return (
            self.lo == other.lo
            and self._den == other._den
            and self._num == other._num
        )

    __hash__ = None

    # -- ring operations -----------------------------------------------------

    def _scalar(self, c) -> "LaurentSeries":
        c = _as_fraction(c)
        if c == 0:
            return LaurentSeries.zero(self.prec, self.lo)
        num = c.numerator
        den = self._den * c.denominator
        return LaurentSeries(self.lo, [x * num for x in self._num], den)

    def add(self, other) -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            return self.add(LaurentSeries.monomial(other, 0, self.prec))
        lo = min(self.lo, other.lo)
        prec = min(self.prec, other.prec)
        d = self._den * other._den // gcd(self._den, other._den)
        ma = d // self._den
        mb = d // other._den
        nums = [0] * (prec - lo)
        for i in range(max(self.lo, lo), min(self.prec, prec)):
            nums[i - lo] += self._num[i - self.lo] * ma
        for i in range(max(other.lo, lo), min(other.prec, prec)):
            nums[i - lo] += other._num[i - other.lo] * mb
        return LaurentSeries(lo, nums, d)

    def neg(self) -> "LaurentSeries":
        return LaurentSeries(self.lo, [-x for x in self._num], self._den, _trust=True)

    def sub(self, other) -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            return self.sub(LaurentSeries.monomial(other, 0, self.prec))
        return self.add(other.neg())

    def mul(self, other) -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            return self._scalar(other)
        lo = self.lo + other.lo
        out_len = min(len(self._num), len(other._num))
        nums = _conv(self._num, other._num, out_len)
        nums += [0] * (out_len - len(nums))
        return LaurentSeries(lo, nums, self._den * other._den)

    def invert(self) -> "LaurentSeries":
        v = self.valuation()
        if v is None:
            raise ZeroLeadingCoefficient(
                f"no nonzero coefficient below precision {self.prec}"
            )
        i0 = v - self.lo
        n = len(self._num) - i0
        bnum, bden = _inv_unit(self._num[i0:], self._den, n)
        return LaurentSeries(-v, bnum, bden)

    def pow(self, k: int) -> "LaurentSeries":
        if not isinstance(k, int):
            raise TypeError("exponent must be an integer")
        if k < 0:
            return self.invert().pow(-k)
        rel = len(self._num)
        result = LaurentSeries.one(rel)  # relative precision window
        base = LaurentSeries(0, self._num, self._den, _trust=True)
        e = k
        while e:
            if e & 1:
                result = result.mul(base)
            e >>= 1
            if e:
                base = base.mul(base)
        return LaurentSeries(self.lo * k + result.lo, result._num, result._den, _trust=True)

    # -- exponent surgery ----------------------------------------------------

    def shift(self, e: int) -> "LaurentSeries":
        """Multiply by q^e."""
        return LaurentSeries(self.lo + e, self._num, self._den, _trust=True)

    def scale_exponents(self, k: int) -> "LaurentSeries":
        """Substitute q -> q^k (k >= 1).  Precision becomes k*prec."""
        if k < 1:
            raise ValueError("scale factor must be a positive integer")
        if k == 1:
            return self
        nums = [0] * (k * len(self._num))
        for i, x in enumerate(self._num):
            nums[k * i] = x
        return LaurentSeries(k * self.lo, nums, self._den, _trust=True)

    def dissect(self, M: int, r: int) -> "LaurentSeries":
        """Extract sum_n c(M*n+r) q^n from the series.

        The result window: n runs from ceil((lo-r)/M) up to
        floor((prec-1-r)/M), so its precision is floor((prec-r-1)/M)+1.
        """
        if M < 1:
            raise ValueError("modulus must be a positive integer")
        prec_out = (self.prec - r - 1) // M + 1
        n0 = -((r - self.lo) // M)
        if n0 >= prec_out:
            return LaurentSeries.zero(prec_out)
        nums = []
        for n in range(n0, prec_out):
            e = M * n + r
            nums.append(self._num[e - self.lo] if e >= self.lo else 0)
        return LaurentSeries(n0, nums, self._den)

    def truncate(self, prec: int) -> "LaurentSeries":
        """Forget coefficients at exponents >= prec."""
        if prec >= self.prec:
            return self
        if prec <= self.lo:
            return LaurentSeries.zero(prec, prec - 1)
        return LaurentSeries(self.lo, self._num[: prec - self.lo], self._den)

    # -- operator sugar ------------------------------------------------------

    def __add__(self, other):
        return self.add(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.sub(other)

    def __rsub__(self, other):
        return self.neg().add(other)

    def __neg__(self):
        return self.neg()

    def __mul__(self, other):
        return self.mul(other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, LaurentSeries):
            return self.mul(other.invert())
        return self._scalar(Fraction(1) / _as_fraction(other))

    def __rtruediv__(self, other):
        return self.invert()._scalar(other)

    def __pow__(self, k):
        return self.pow(k)


def first_mismatch(a: LaurentSeries, b: LaurentSeries, start: int | None = None,
                   stop: int | None = None) -> int | None:
    """Smallest exponent in the comparable window where a and b differ.

    The comparable window is [min(lo), min(prec)) intersected with
    [start, stop); coefficients below a series' lo count as zero.
    """
    lo = min(a.lo, b.lo)
    hi = min(a.prec, b.prec)
    if start is not None:
        lo = max(lo, start)
    if stop is not None:
        hi = min(hi, stop)
    for e in range(lo, hi):
        ca = a.coeff(e) if a.lo <= e < a.prec else Fraction(0)
        cb = b.coeff(e) if b.lo <= e < b.prec else Fraction(0)
        if ca != cb:
            return e
    return None


def comparable_through(a: LaurentSeries, b: LaurentSeries) -> int:
    """Exclusive upper end of the window usable by first_mismatch."""
    return min(a.prec, b.prec)
