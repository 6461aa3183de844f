"""Partition enumeration and crank/rank statistics, by brute force.

This module is the combinatorial ground truth the analytic machinery is
checked against.  Partitions are enumerated with Kelleher's accelerated
ascending-composition algorithm; statistics tables tally, per residue
class of crank or rank, the partition counts, the number of ones, and
the number of parts.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field


ENUMERATION_GUARD = 70


class EmptyPartition(Exception):
    """Crank and rank are undefined for the empty partition."""


class ResourceLimit(Exception):
    """Refused: the requested enumeration exceeds the resource guard."""


def _check_guard(n: int, allow_large: bool) -> None:
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > ENUMERATION_GUARD and not allow_large:
        raise ResourceLimit(
            f"enumerating partitions of {n} exceeds the guard "
            f"({ENUMERATION_GUARD}); pass allow_large to override"
        )


def partition_counts(n_max: int) -> list[int]:
    """p(0), p(1), ..., p(n_max) by Euler's pentagonal-number recurrence."""
    p = [0] * (n_max + 1)
    p[0] = 1
    for n in range(1, n_max + 1):
        total = 0
        k = 1
        while True:
            g1 = k * (3 * k - 1) // 2
            if g1 > n:
                break
            sign = 1 if k % 2 else -1
            total += sign * p[n - g1]
            g2 = k * (3 * k + 1) // 2
            if g2 <= n:
                total += sign * p[n - g2]
            k += 1
        p[n] = total
    return p


def _ascending(n: int):
    """Yield (buffer, length) for each partition of n in ascending part order.

    The buffer is reused between yields; callers must not keep references.
    """
    a = [0] * (n + 1)
    k = 1
    a[1] = n
    while k != 0:
        x = a[k - 1] + 1
        y = a[k] - 1
        k -= 1
        while x <= y:
            a[k] = x
            y -= x
            k += 1
        a[k] = x + y
        yield a, k + 1


def enumerate_partitions(n: int, allow_large: bool = False):
    """Yield every partition of n as a non-increasing tuple of parts."""
    _check_guard(n, allow_large)
    if n == 0:
        yield ()
        return
    for buf, cnt in _ascending(n):
        yield tuple(buf[cnt - 1 :: -1])


def _validate(parts) -> list[int]:
    ps = sorted(parts)
    if not ps:
        raise EmptyPartition("statistic undefined for the empty partition")
    if ps[0] < 1:
        raise ValueError("parts must be positive integers")
    return ps


def ones(parts) -> int:
    """Number of parts equal to 1."""
    return sum(1 for x in parts if x == 1)


def crank(parts) -> int:
    """Largest part if there are no ones, else (#parts > #ones) - #ones."""
    ps = _validate(parts)
    w = bisect_right(ps, 1)
    if w == 0:
        return ps[-1]
    mu = len(ps) - bisect_right(ps, w)
    return mu - w


def rank(parts) -> int:
    """Largest part minus the number of parts."""
    ps = _validate(parts)
    return ps[-1] - len(ps)


@dataclass
class PartitionStats:
    """Residue-class tables for modulus m over all partitions of n.

    crank_counts[r]   partitions with crank = r (mod m)
    rank_counts[r]    partitions with rank = r (mod m)
    ones_by_crank[r]  total ones over partitions with crank = r (mod m)
    parts_by_rank[r]  total parts over partitions with rank = r (mod m)

    n = 0 is recorded as a bare count: crank and rank are left undefined
    for the empty partition, so every table stays all-zero there.
    """

    n: int
    m: int
    partitions: int
    crank_counts: list[int] = field(repr=False)
    rank_counts: list[int] = field(repr=False)
    ones_by_crank: list[int] = field(repr=False)
    parts_by_rank: list[int] = field(repr=False)

    @property
    def total_ones(self) -> int:
        return sum(self.ones_by_crank)

    @property
    def total_parts(self) -> int:
        return sum(self.parts_by_rank)

    def rows(self) -> list[dict]:
        return [
            {
                "n": self.n,
                "m": self.m,
                "class": r,
                "M": self.crank_counts[r],
                "N": self.rank_counts[r],
                "M_omega": self.ones_by_crank[r],
                "NT": self.parts_by_rank[r],
            }
            for r in range(self.m)
        ]


def stats_table(n: int, m: int, allow_large: bool = False) -> PartitionStats:
    """Tally crank/rank residue tables for all partitions of n."""
    _check_guard(n, allow_large)
    if m < 1:
        raise ValueError("modulus must be a positive integer")
    M = [0] * m
    N = [0] * m
    MW = [0] * m
    NT = [0] * m
    count = 0
    if n > 0:
        for a, cnt in _ascending(n):
            count += 1
            largest = a[cnt - 1]
            rk = largest - cnt
            w = 0
            while w < cnt and a[w] == 1:
                w += 1
            if w == 0:
                cr = largest
            else:
                cr = cnt - bisect_right(a, w, 0, cnt) - w
            M[cr % m] += 1
            N[rk % m] += 1
            MW[cr % m] += w
            NT[rk % m] += cnt
    else:
        count = 1
    return PartitionStats(n, m, count, M, N, MW, NT)


def delta_offset(p: int) -> int:
    """(p^2 - 1)/24, the shift appearing in the prime dissection identities."""
    if (p * p - 1) % 24:
        raise ValueError("p^2 - 1 must be divisible by 24")
    return (p * p - 1) // 24


# offsets t for which sum_m m*NT(m,p,pn+t) = 0 (mod p) is asserted
_PARTS_BY_RANK_OFFSETS = {5: (1, 4), 7: (1, 5)}
# offsets for sum_m m*M_omega(m,p,pn+t) = 0 (mod p)
_ONES_BY_CRANK_OFFSETS = {5: (4,)}


@dataclass
class CongruenceReport:
    kind: str
    p: int
    rows: list[dict]

    @property
    def all_ok(self) -> bool:
        return all(r["ok"] for r in self.rows)


def beck_congruence_check(kind: str, p: int, n_max: int,
                          allow_large: bool = False) -> CongruenceReport:
    """Evaluate a weighted-statistic congruence family by enumeration.

    kind "parts_by_rank":  sum_{m=1}^{p-1} m*NT(m,p,pn+t) = 0 (mod p)
    kind "ones_by_crank":  sum_{m=1}^{p-1} m*M_omega(m,p,pn+t) = 0 (mod p)
    kind "ones_difference" (exact, not just mod p):
        sum_{m=1}^{(p-1)/2} m*(M_omega(m,p,N) - M_omega(p-m,p,N)) = 0
        at N = pn - delta_offset(p).

    Every admissible argument up to n_max is evaluated and reported.
    """
    rows: list[dict] = []
    if kind == "parts_by_rank":
        offsets = _PARTS_BY_RANK_OFFSETS.get(p)
        if offsets is None:
            raise ValueError(f"no parts_by_rank congruence supported for p={p}")
        for n in range(n_max + 1):
            for t in offsets:
                arg = p * n + t
                st = stats_table(arg, p, allow_large)
                val = sum(m * st.parts_by_rank[m] for m in range(1, p))
                rows.append({"n": n, "arg": arg, "offset": t,
                             "value": val, "residue": val % p, "ok": val % p == 0})
    elif kind == "ones_by_crank":
        offsets = _ONES_BY_CRANK_OFFSETS.get(p)
        if offsets is None:
            raise ValueError(f"no ones_by_crank congruence supported for p={p}")
        for n in range(n_max + 1):
            for t in offsets:
                arg = p * n + t
                st = stats_table(arg, p, allow_large)
                val = sum(m * st.ones_by_crank[m] for m in range(1, p))
                rows.append({"n": n, "arg": arg, "offset": t,
                             "value": val, "residue": val % p, "ok": val % p == 0})
    elif kind == "ones_difference":
        if p not in (5, 7, 11):
            raise ValueError("ones_difference supports p in {5, 7, 11}")
        d = delta_offset(p)
        for n in range(1, n_max + 1):
            arg = p * n - d
            if arg < 0:
                continue
            st = stats_table(arg, p, allow_large)
            val = sum(
                m * (st.ones_by_crank[m] - st.ones_by_crank[p - m])
                for m in range(1, (p - 1) // 2 + 1)
            )
            rows.append({"n": n, "arg": arg, "value": val, "ok": val == 0})
    else:
        raise ValueError(f"unknown congruence kind: {kind!r}")
    return CongruenceReport(kind, p, rows)
