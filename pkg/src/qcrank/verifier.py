"""Identity corpus, suite verification, and certification assembly.

Records live in JSON files under ``qcrank/data``; each one names two
expressions in the qproducts grammar and the order through which their
expansions must agree.  This module evaluates records, runs whole
suites (optionally in parallel), and assembles the two weight-routed
eta-quotient identities whose modular certification proves the b=1
dissection split.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from multiprocessing import get_context
from pathlib import Path

from .lambert import s_row_sum, primed_weighted_sum
from .modular import Certificate, CertificationInput, certify, identity_bound
from .partitions import stats_table
from .qproducts import GeneralizedEtaProduct, _call_int, eval_expr, monomial_parts
from .series import LaurentSeries

DATA_DIR = Path(__file__).resolve().parent / "data"

# Identity records evaluate at order + margin, so the default 600-order
# corpus runs at global precision 700.  Certification precision comes
# from the computed bound instead of a flat default.
PREC_MARGIN = 100

CACHE_ENV = "QCRANK_CACHE_DIR"

SUITE_FILES = {
    "lemma-2": ("lemma2.json", "xeta.json"),
    "lemma-3": ("lemma3.json", "displays.json"),
    "appendix": ("appendix.json",),
    "corollary": ("corollary.json",),
    "theorem1": ("theorem1.json",),
    "combinatorial": ("combinatorial.json",),
    "certification": ("certification.json",),
}

SUITE_NAMES = tuple(SUITE_FILES)

# X(q^a; q^11) in the quotient basis: 242*X(a) = sum_i M[a][i]*Q_i + C[a].
# Scaled by q -> q^11 these eliminate every X(11a, 121) during the
# weight-routed split below.
X_QUOTIENTS = {
    1: "J(2,11)^3*J(11)^3/(J(1,11)^3*J(3,11))",
    2: "J(4,11)^3*J(11)^3/(J(2,11)^3*J(5,11))",
    3: "J(5,11)^3*J(11)^3/(J(3,11)^3*J(2,11))",
    4: "q*J(3,11)^3*J(11)^3/(J(4,11)^3*J(1,11))",
    5: "q^4*J(1,11)^3*J(11)^3/(J(5,11)^3*J(4,11))",
}

X_MATRIX = {
    1: ((81, -9, 27, -1, -3), -99),
    2: ((-3, 81, -1, 9, 27), -77),
    3: ((1, -27, 81, -3, -9), -55),
    4: ((27, -3, 9, -81, -1), -33),
    5: ((9, -1, 3, -27, -81), -11),
}


class VerifierError(Exception):
    pass


@dataclass(frozen=True)
class IdentityRecord:
    """One corpus entry: two expressions and the order they must match to.

    kind selects the handling: "identity" compares expansions, "bound"
    recomputes a certification bound, "probe" measures an alternative
    reading without asserting it, "anomaly" reports low-order analytic
    vs enumerated coefficients.  mod compares coefficients modulo an
    integer; from_order ignores exponents below it.
    """

    id: str
    lhs: str
    rhs: str
    order: int = 600
    ref: str = ""
    kind: str = "identity"
    mod: int | None = None
    from_order: int | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "IdentityRecord":
        return cls(
            id=d["id"],
            lhs=d.get("lhs", ""),
            rhs=d.get("rhs", ""),
            order=int(d.get("order", 600)),
            ref=d.get("ref", ""),
            kind=d.get("kind", "identity"),
            mod=d.get("mod"),
            from_order=d.get("fromOrder"),
            extra=d.get("extra", {}),
        )

    def to_dict(self) -> dict:
        d = {"id": self.id, "lhs": self.lhs, "rhs": self.rhs,
             "order": self.order, "ref": self.ref}
        if self.kind != "identity":
            d["kind"] = self.kind
        if self.mod is not None:
            d["mod"] = self.mod
        if self.from_order is not None:
            d["fromOrder"] = self.from_order
        if self.extra:
            d["extra"] = self.extra
        return d


@dataclass
class VerificationReport:
    """Outcome of one record: status, the order actually checked, and on
    failure the first differing exponent with both coefficients."""

    id: str
    status: str
    checked: int
    detail: str = ""
    first_failure: int | None = None
    lhs_coefficient: str | None = None
    rhs_coefficient: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        d = {"id": self.id, "status": self.status, "checked": self.checked}
        if self.detail:
            d["detail"] = self.detail
        if self.first_failure is not None:
            d["firstFailure"] = self.first_failure
            d["lhsCoefficient"] = self.lhs_coefficient
            d["rhsCoefficient"] = self.rhs_coefficient
        return d


def load_records(path) -> list[IdentityRecord]:
    raw = json.loads(Path(path).read_text())
    if isinstance(raw, dict):
        raw = [raw]
    return [IdentityRecord.from_dict(d) for d in raw]


def suite_records(name: str) -> list[IdentityRecord]:
    if name not in SUITE_FILES:
        raise VerifierError(
            f"unknown suite {name!r}; choose from: {', '.join(SUITE_FILES)}")
    out: list[IdentityRecord] = []
    for fn in SUITE_FILES[name]:
        out.extend(load_records(DATA_DIR / fn))
    return sorted(out, key=lambda r: r.id)


# ---------------------------------------------------------------------------
# series caches

_SERIES_CACHE: dict[tuple, LaurentSeries] = {}
_STATS_CACHE: dict[tuple[int, int], object] = {}


def clear_caches() -> None:
    _SERIES_CACHE.clear()
    _STATS_CACHE.clear()


def _round_up(prec: int) -> int:
    # round requests to coarse steps so repeated orders share one build
    prec = max(prec, 64)
    return prec + (-prec) % 64 + 16


def _disk_path(slug: str) -> Path | None:
    root = os.environ.get(CACHE_ENV)
    return Path(root) / f"{slug}.json" if root else None


def _disk_get(slug: str, prec: int) -> LaurentSeries | None:
    path = _disk_path(slug)
    if path is None or not path.exists():
        return None
    try:
        d = json.loads(path.read_text())
        if d["lo"] + len(d["num"]) < prec:
            return None
        return LaurentSeries(int(d["lo"]), [int(x) for x in d["num"]],
                             int(d["den"]))
    except (OSError, ValueError, KeyError):
        return None


def _disk_put(slug: str, s: LaurentSeries) -> None:
    path = _disk_path(slug)
    if path is None:
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".tmp{os.getpid()}")
        tmp.write_text(json.dumps(
            {"lo": s.lo, "den": int(s._den), "num": [int(x) for x in s._num]}))
        os.replace(tmp, path)
    except OSError:
        pass


def _cached_series(key: tuple, slug: str, prec: int, build) -> LaurentSeries:
    s = _SERIES_CACHE.get(key)
    if s is not None and s.prec >= prec:
        return s
    s = _disk_get(slug, prec)
    if s is None:
        s = build(_round_up(prec))
        _disk_put(slug, s)
    _SERIES_CACHE[key] = s
    return s


def _stats(n: int, m: int, allow_large: bool):
    key = (n, m)
    st = _STATS_CACHE.get(key)
    if st is None:
        st = stats_table(n, m, allow_large=allow_large)
        _STATS_CACHE[key] = st
    return st


# ---------------------------------------------------------------------------
# pipeline series

def _srow(a: int, j: int, prec: int) -> LaurentSeries:
    return _cached_series(("SROW", a, j), f"SROW-a{a}-j{j}", prec,
                          lambda p: s_row_sum(a, j, p))


def _j1_inverse(prec: int) -> LaurentSeries:
    from .qproducts import euler_product
    return _cached_series(("J1INV",), "J1INV", prec,
                          lambda p: euler_product(1, p).invert())


def _build_F(b: int, prec: int) -> LaurentSeries:
    d2 = _srow(b - 1, 2, prec) - _srow(b, 2, prec)
    d1 = _srow(b - 1, 1, prec) - _srow(b, 1, prec)
    return (d2 * 11 - d1 * (11 - b)) * _j1_inverse(prec)


def mathcalF(b: int, prec: int) -> LaurentSeries:
    """Generating function of the ones-count difference between the crank
    classes b and 11-b (mod 11), built from the bilateral row sums."""
    if not 1 <= b <= 10:
        raise ValueError(f"b must be in 1..10, got {b}")
    if b > 5:
        return -mathcalF(11 - b, prec)
    s = _cached_series(("F", b), f"F-b{b}", prec, lambda p: _build_F(b, p))
    return s.truncate(prec) if s.prec > prec else s


def mw_difference_series(b: int, prec: int,
                         allow_large: bool = False) -> LaurentSeries:
    """The same difference by direct enumeration of partitions."""
    nums = []
    for n in range(prec):
        st = _stats(n, 11, allow_large)
        nums.append(st.ones_by_crank[b % 11] - st.ones_by_crank[(11 - b) % 11])
    return LaurentSeries(0, nums)


def rank_weight_residue_series(p: int, t: int, prec: int,
                               allow_large: bool = False) -> LaurentSeries:
    """Coefficient n: the rank-weighted parts count at p*n + t."""
    nums = []
    for n in range(prec):
        st = _stats(p * n + t, p, allow_large)
        nums.append(sum(m * st.parts_by_rank[m] for m in range(1, p)))
    return LaurentSeries(0, nums)


def crank_weight_residue_series(p: int, t: int, prec: int,
                                allow_large: bool = False) -> LaurentSeries:
    """Coefficient n: the crank-weighted ones count at p*n + t."""
    nums = []
    for n in range(prec):
        st = _stats(p * n + t, p, allow_large)
        nums.append(sum(m * st.ones_by_crank[m] for m in range(1, p)))
    return LaurentSeries(0, nums)


def _folded_ones(p: int, t: int, n0: int, prec: int,
                 allow_large: bool) -> LaurentSeries:
    nums = [0] * min(n0, prec)
    for n in range(n0, prec):
        arg = p * n + t
        if arg < 0:
            nums.append(0)
            continue
        st = _stats(arg, p, allow_large)
        nums.append(sum(
            m * (st.ones_by_crank[m] - st.ones_by_crank[p - m])
            for m in range(1, (p - 1) // 2 + 1)))
    return LaurentSeries(0, nums[:prec])


def folded_weight_series(p: int, t: int, prec: int,
                         allow_large: bool = False) -> LaurentSeries:
    """Coefficient n: sum over m of m*(ones in crank class m minus ones in
    crank class p-m), folded to 1 <= m <= (p-1)/2, at p*n + t."""
    return _folded_ones(p, t, 0, prec, allow_large)


def ones_difference_series(p: int, prec: int,
                           allow_large: bool = False) -> LaurentSeries:
    """The same folded difference at p*n - d, d = (p*p - 1)/24, n >= 1."""
    return _folded_ones(p, -((p * p - 1) // 24), 1, prec, allow_large)


def _int_args(args, count: int, what: str) -> tuple[int, ...]:
    if len(args) != count:
        raise VerifierError(f"{what} takes {count} argument(s), got {len(args)}")
    return tuple(_call_int(a, what) for a in args)


def make_resolver(allow_large: bool = False):
    """Extension atoms for record expressions.

    F(b) the generating function; SROW(a,j) a bilateral row sum;
    PWS(b,j) the direct primed weighted sum; MWDIFF/NTWRES/MWRES/ONESDIFF
    the enumerative series.
    """

    def resolver(name: str, args, prec: int):
        if name == "F":
            (b,) = _int_args(args, 1, "F")
            return mathcalF(b, prec)
        if name == "SROW":
            a, j = _int_args(args, 2, "SROW")
            s = _srow(a, j, prec)
            return s.truncate(prec) if s.prec > prec else s
        if name == "PWS":
            b, j = _int_args(args, 2, "PWS")
            return primed_weighted_sum(b, j, prec)
        if name == "MWDIFF":
            (b,) = _int_args(args, 1, "MWDIFF")
            return mw_difference_series(b, prec, allow_large)
        if name == "NTWRES":
            p, t = _int_args(args, 2, "NTWRES")
            return rank_weight_residue_series(p, t, prec, allow_large)
        if name == "MWRES":
            p, t = _int_args(args, 2, "MWRES")
            return crank_weight_residue_series(p, t, prec, allow_large)
        if name == "MWFOLD":
            p, t = _int_args(args, 2, "MWFOLD")
            return folded_weight_series(p, t, prec, allow_large)
        if name == "ONESDIFF":
            (p,) = _int_args(args, 1, "ONESDIFF")
            return ones_difference_series(p, prec, allow_large)
        return None

    return resolver


# ---------------------------------------------------------------------------
# record verification

def _coef_at(s: LaurentSeries, e: int) -> Fraction:
    if s.lo <= e < s.prec:
        return s.coeff(e)
    return Fraction(0)


def _verify_identity(rec: IdentityRecord, order: int, allow_large: bool,
                     margin: int) -> VerificationReport:
    resolver = make_resolver(allow_large)
    # records whose expressions enumerate partitions pin their own margin
    # so the evaluation window stays inside the enumeration guard
    if "margin" in rec.extra:
        margin = int(rec.extra["margin"])
    w = order + margin
    lhs = eval_expr(rec.lhs, w, resolver)
    rhs = eval_expr(rec.rhs, w, resolver)
    stop = min(order, lhs.prec, rhs.prec)
    start = min(lhs.lo, rhs.lo)
    if rec.from_order is not None:
        start = max(start, rec.from_order)
    for e in range(start, stop):
        cl = _coef_at(lhs, e)
        cr = _coef_at(rhs, e)
        if rec.mod is None:
            bad = cl != cr
        else:
            d = cl - cr
            bad = d.denominator != 1 or d.numerator % rec.mod != 0
        if bad:
            what = "coefficient mismatch" if rec.mod is None else \
                f"coefficient mismatch mod {rec.mod}"
            return VerificationReport(
                rec.id, "fail", stop, detail=f"{what} at q^{e}",
                first_failure=e, lhs_coefficient=str(cl),
                rhs_coefficient=str(cr))
    return VerificationReport(rec.id, "pass", stop)


def _verify_bound(rec: IdentityRecord) -> VerificationReport:
    b = int(rec.extra["b"])
    weight = rec.extra["weight"]
    expected = Fraction(str(rec.extra["expectedB"]))
    terms, _ = weight_split_terms(b, weight)
    bound = identity_bound(CertificationInput(rec.id, 121, terms))
    neg = -bound
    required = neg.numerator // neg.denominator + 1
    detail = f"B = {bound}, required expansion order {required}"
    if bound == expected:
        return VerificationReport(rec.id, "pass", 0, detail=detail)
    return VerificationReport(
        rec.id, "fail", 0, detail=detail + f", expected B = {expected}")


def _verify_probe(rec: IdentityRecord, order: int, allow_large: bool,
                  margin: int) -> VerificationReport:
    # measurement only: reports where the alternative reading diverges,
    # without asserting either reading
    base = _verify_identity(rec, order, allow_large, margin)
    primary = rec.extra.get("primary", "")
    if base.ok:
        detail = (f"alternative reading also matches through q^{base.checked}"
                  f"; primary record {primary} remains authoritative")
        return VerificationReport(rec.id, "pass", base.checked, detail=detail)
    detail = (f"alternative reading differs first at q^{base.first_failure}"
              f" (lhs {base.lhs_coefficient} vs rhs {base.rhs_coefficient});"
              f" the verified reading is record {primary}")
    return VerificationReport(rec.id, "pass", base.checked, detail=detail)


def _verify_anomaly(rec: IdentityRecord,
                    allow_large: bool) -> VerificationReport:
    b = int(rec.extra["b"])
    rows = low_order_anomaly(b, allow_large)
    parts = [f"q^{n}: series {a} vs count {c}" for n, a, c in rows]
    return VerificationReport(rec.id, "pass", len(rows),
                              detail="; ".join(parts))


def low_order_anomaly(b: int, allow_large: bool = False):
    """Analytic vs enumerated coefficients at n = 0, 1 (reported, never
    asserted: the bilateral route is only claimed from n = 2 on)."""
    f = mathcalF(b, 2)
    g = mw_difference_series(b, 2, allow_large)
    return [(n, _coef_at(f, n), _coef_at(g, n)) for n in (0, 1)]


def verify(record, allow_large: bool = False, max_order: int | None = None,
           margin: int = PREC_MARGIN) -> VerificationReport:
    """Evaluate one record and report the outcome.

    Evaluation errors never raise; they come back as failing reports so
    suite runs always complete.
    """
    rec = record if isinstance(record, IdentityRecord) \
        else IdentityRecord.from_dict(record)
    order = rec.order if max_order is None else min(rec.order, max_order)
    try:
        if rec.kind == "bound":
            return _verify_bound(rec)
        if rec.kind == "probe":
            return _verify_probe(rec, order, allow_large, margin)
        if rec.kind == "anomaly":
            return _verify_anomaly(rec, allow_large)
        return _verify_identity(rec, order, allow_large, margin)
    except Exception as exc:
        return VerificationReport(rec.id, "fail", 0,
                                  detail=f"{type(exc).__name__}: {exc}")


def _exec_key(rec: IdentityRecord) -> tuple:
    # group by trailing id segment so one worker reuses one F(b) build
    return (rec.id.rsplit(".", 1)[-1], rec.id)


def _suite_worker(payload):
    rec, allow_large, max_order, margin = payload
    return verify(rec, allow_large=allow_large, max_order=max_order,
                  margin=margin)


def run_suite(name: str, jobs: int = 1, allow_large: bool = False,
              max_order: int | None = None, margin: int = PREC_MARGIN,
              progress=None) -> list[VerificationReport]:
    """Verify every record in a suite; reports come back ordered by id."""
    return run_records(suite_records(name), jobs=jobs,
                       allow_large=allow_large, max_order=max_order,
                       margin=margin, progress=progress)


def run_records(records, jobs: int = 1, allow_large: bool = False,
                max_order: int | None = None, margin: int = PREC_MARGIN,
                progress=None) -> list[VerificationReport]:
    """Verify a record list; reports come back ordered by id."""
    work = sorted(records, key=_exec_key)
    reports: list[VerificationReport] = []
    if jobs <= 1:
        for k, rec in enumerate(work):
            rep = verify(rec, allow_large=allow_large, max_order=max_order,
                         margin=margin)
            reports.append(rep)
            if progress is not None:
                progress(k + 1, len(work), rep)
    else:
        payloads = [(rec, allow_large, max_order, margin) for rec in work]
        ctx = get_context("fork")
        with ctx.Pool(jobs) as pool:
            for k, rep in enumerate(pool.imap(_suite_worker, payloads)):
                reports.append(rep)
                if progress is not None:
                    progress(k + 1, len(work), rep)
    return sorted(reports, key=lambda r: r.id)


# ---------------------------------------------------------------------------
# rendering helpers shared by the corpus generator and the split

def _fraction_term(coef: Fraction, body: str) -> tuple[int, str]:
    coef = Fraction(coef)
    mag = abs(coef)
    if not body:
        text = str(mag)
    elif mag == 1:
        text = body
    else:
        text = f"{mag}*{body}"
    return (1 if coef > 0 else -1), text


def _join_terms(terms) -> str:
    terms = list(terms)
    if not terms:
        return "0"
    out = []
    for k, (sign, mag) in enumerate(terms):
        if k == 0:
            if sign < 0:
                out.append("-" + mag if mag[0].isdigit() else "-1*" + mag)
            else:
                out.append(mag)
        else:
            out.append(" - " if sign < 0 else " + ")
            out.append(mag)
    return "".join(out)


def _pow_factor(name: str, p: int, scaled: bool = False) -> str:
    if p == 0:
        return ""
    text = name if p == 1 else f"{name}^{p}"
    return text + "@11" if scaled else text


def _xsum_text(x: dict[int, int], const: Fraction) -> str:
    # positive entries first so the leading factor is parser-friendly
    items = sorted(x.items())
    ordered = [it for it in items if it[1] > 0] + \
              [it for it in items if it[1] < 0]
    if not ordered or ordered[0][1] < 0:
        raise VerifierError(f"bracket {x} has no positive leading entry")
    terms = [_fraction_term(Fraction(c), f"X({11 * i},121)")
             for i, c in ordered]
    const = Fraction(const)
    if const:
        terms.append(_fraction_term(const, ""))
    return "(" + _join_terms(terms) + ")"


def _norm_terms(terms: list[dict]) -> list[dict]:
    out = []
    for t in terms:
        d = {"kind": t["kind"], "coef": Fraction(str(t["coef"]))}
        if "mono" in t:
            d["mono"] = t["mono"]
        if "x" in t:
            d["x"] = {int(k): int(v) for k, v in t["x"].items()}
        if "const" in t:
            d["const"] = Fraction(str(t["const"]))
        out.append(d)
    return out


def display_rhs_text(terms: list[dict]) -> str:
    """Right side of one row-sum display, rendered in the grammar."""
    out = []
    for t in _norm_terms(terms):
        kind, coef = t["kind"], t["coef"]
        if kind == "mono":
            x = t["x"]
            if x:
                out.append(_fraction_term(coef,
                                          t["mono"] + "*" + _xsum_text(x, t["const"])))
            else:
                out.append(_fraction_term(coef * t["const"], t["mono"]))
        elif kind == "lam":
            out.append(_fraction_term(coef, "LAM(121)"))
        elif kind == "square":
            out.append(_fraction_term(coef, _xsum_text(t["x"], Fraction(0)) + "^2"))
        elif kind == "xlin":
            out.append(_fraction_term(coef, _xsum_text(t["x"], Fraction(0))))
        else:
            raise VerifierError(f"unknown display term kind {kind!r}")
    return _join_terms(out)


def appendix_rhs_text(m: int, vterms, ycoef) -> str:
    """Right side of one dissection-table row: V_m-terms then the Y_m term."""
    out = []
    for c, tp, sp in vterms:
        body = "*".join(p for p in (
            f"V{m}", _pow_factor("T", tp), _pow_factor("t", sp)) if p)
        out.append(_fraction_term(Fraction(str(c)), body))
    y = Fraction(str(ycoef)) if ycoef is not None else Fraction(0)
    if y:
        out.append(_fraction_term(y, f"Y{m}"))
    return _join_terms(out)


# ---------------------------------------------------------------------------
# the weight-routed split

def _gamma(x: dict[int, int]) -> Fraction:
    return sum((Fraction(11 - 2 * i, 22) * c for i, c in x.items()),
               Fraction(0))


def _display_structures() -> dict[tuple[int, int], list[dict]]:
    out = {}
    for rec in load_records(DATA_DIR / "displays.json"):
        if "terms" in rec.extra:
            out[(int(rec.extra["j"]), int(rec.extra["a"]))] = rec.extra["terms"]
    return out


def _appendix_structures(b: int) -> list[dict]:
    rows = []
    for rec in load_records(DATA_DIR / "appendix.json"):
        if rec.kind == "identity" and int(rec.extra["b"]) == b:
            rows.append({"m": int(rec.extra["m"]),
                         "vterms": rec.extra["vterms"],
                         "ycoef": rec.extra.get("ycoef")})
    rows.sort(key=lambda r: r["m"])
    if len(rows) != 11:
        raise VerifierError(f"expected 11 table rows for b={b}, got {len(rows)}")
    return rows


def _row_blocks(b: int):
    # (j, a, weight) blocks whose weighted sum is J(1)*F(b)
    for jexp, blockcoef in ((2, Fraction(11)), (1, Fraction(-(11 - b)))):
        for a, rowsign in ((b - 1, 1), (b, -1)):
            yield jexp, a, blockcoef * rowsign


def _split_rows(terms: list[dict]):
    """Separate one display row into mono terms and its square/xlin pair."""
    monos, sq, xl, lam = [], None, None, None
    for t in terms:
        kind = t["kind"]
        if kind == "mono":
            monos.append(t)
        elif kind == "square":
            sq = t
        elif kind == "xlin":
            xl = t
        elif kind == "lam":
            lam = t
        else:
            raise VerifierError(f"unknown display term kind {kind!r}")
    if sq is not None and xl is not None and sq["x"] != xl["x"]:
        raise VerifierError("square and linear brackets disagree")
    if sq is not None and xl is None:
        raise VerifierError("square bracket without its linear companion")
    return monos, sq, xl, lam


class MonomialSum:
    """Rational combination of eta-quotient monomials with merging."""

    def __init__(self):
        self._terms: dict[tuple, list] = {}

    @staticmethod
    def _key(g: GeneralizedEtaProduct) -> tuple:
        return (g.q_prefactor,
                tuple(sorted((d, r) for d, r in g.classical.items() if r)),
                tuple(sorted((d, gg, r) for (d, gg), r
                             in g.exponents.items() if r)))

    def add(self, coef, gep: GeneralizedEtaProduct) -> None:
        coef = Fraction(coef)
        if not coef:
            return
        key = self._key(gep)
        cur = self._terms.get(key)
        if cur is None:
            self._terms[key] = [coef, gep]
        else:
            cur[0] += coef
            if not cur[0]:
                del self._terms[key]

    def terms(self) -> list[tuple[Fraction, GeneralizedEtaProduct]]:
        return [(c, g) for c, g in self._terms.values()]

    def __len__(self) -> int:
        return len(self._terms)


def _classical_degree(g: GeneralizedEtaProduct) -> int:
    return sum(g.classical.values())


def certification_split(b: int, displays=None):
    """Split J(1)*F(b) into eta-quotient monomials routed by weight.

    Every display bracket is eliminated through the scaled quotient
    basis; each resulting monomial lands in the weight-1/2 or the
    weight-3/2 bucket according to its classical eta degree (2 or 4).
    Returns (half, threehalf, leftover) where leftover is the rational
    constant the routing leaves behind (zero for every b).
    """
    if displays is None:
        displays = _display_structures()
    qbasis = {}
    for i, text in X_QUOTIENTS.items():
        c, gep = monomial_parts(f"({text})@11", 121)
        if c != 1:
            raise VerifierError(f"quotient basis element {i} not monic")
        qbasis[i] = gep

    half, threehalf = MonomialSum(), MonomialSum()
    leftover = Fraction(0)
    lam_total = Fraction(0)

    def xhat(x: dict[int, int]) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for i, xi in x.items():
            row, _ = X_MATRIX[i]
            for jq in range(1, 6):
                c = out.get(jq, Fraction(0)) + Fraction(xi * row[jq - 1], 242)
                out[jq] = c
        return {k: v for k, v in out.items() if v}

    def route(coef: Fraction, gep: GeneralizedEtaProduct) -> None:
        deg = _classical_degree(gep)
        if deg == 2:
            half.add(coef, gep)
        elif deg == 4:
            threehalf.add(coef, gep)
        else:
            raise VerifierError(f"unroutable eta degree {deg}")

    for jexp, a, w in _row_blocks(b):
        monos, sq, xl, lam = _split_rows(_norm_terms(displays[(jexp, a)]))
        if lam is not None:
            lam_total += w * lam["coef"]
        for t in monos:
            coef = w * t["coef"]
            cm, gm = monomial_parts(t["mono"], 121)
            if cm != 1:
                raise VerifierError(f"display monomial not monic: {t['mono']}")
            x = t["x"]
            if not x:
                route(coef * t["const"], gm)
                continue
            g = _gamma(x)
            for jq, cq in xhat(x).items():
                route(coef * cq, gm * qbasis[jq])
            lv = coef * (t["const"] - g)
            if lv:
                route(lv, gm)
        if xl is not None:
            x = xl["x"]
            g = _gamma(x)
            basis = xhat(x)
            csq = w * sq["coef"] if sq is not None else Fraction(0)
            cxl = w * xl["coef"]
            for j1, c1 in basis.items():
                for j2, c2 in basis.items():
                    c = csq * c1 * c2
                    if c:
                        route(c, qbasis[j1] * qbasis[j2])
            for jq, cq in basis.items():
                c = (cxl - 2 * g * csq) * cq
                if c:
                    route(c, qbasis[jq])
            leftover += csq * g * g - cxl * g
    if lam_total:
        raise VerifierError(
            f"Lambert-type terms do not cancel (residue {lam_total})")
    return half, threehalf, leftover


def gside_terms(b: int, weight: str, rows=None):
    """The dissection-table side of one weight identity, as monomials
    already multiplied by J(1)."""
    if rows is None:
        rows = _appendix_structures(b)
    j1c, j1 = monomial_parts("J(1)", 121)
    if j1c != 1:
        raise VerifierError("euler factor not monic")
    out = []
    for row in rows:
        m = row["m"]
        prefix = [f"q^{m}"] if m else []
        if weight == "half":
            y = row["ycoef"]
            if y is None or not Fraction(str(y)):
                continue
            text = "*".join(prefix + [f"Y{m}@11"])
            c, gep = monomial_parts(text, 121)
            if c != 1:
                raise VerifierError(f"correction monomial not monic: {text}")
            out.append((Fraction(str(y)), gep * j1))
        elif weight == "threehalf":
            for cv, tp, sp in row["vterms"]:
                parts = prefix + [f"V{m}@11"]
                if tp:
                    parts.append(_pow_factor("T", tp, scaled=True))
                if sp:
                    parts.append(_pow_factor("t", sp, scaled=True))
                text = "*".join(parts)
                c, gep = monomial_parts(text, 121)
                if c != 1:
                    raise VerifierError(f"table monomial not monic: {text}")
                out.append((Fraction(str(cv)), gep * j1))
        else:
            raise VerifierError(f"unknown weight {weight!r}")
    return out


def weight_split_terms(b: int, weight: str):
    """Terms of the homogeneous identity J(1)*h - J(1)*g = 0 for one
    weight, plus the rational leftover of the split."""
    half, threehalf, leftover = certification_split(b)
    bucket = half if weight == "half" else threehalf
    if weight not in ("half", "threehalf"):
        raise VerifierError(f"unknown weight {weight!r}")
    expect = 2 if weight == "half" else 4
    terms = list(bucket.terms())
    for coef, gep in gside_terms(b, weight):
        if _classical_degree(gep) != expect:
            raise VerifierError("table side lands in the wrong weight bucket")
        terms.append((-coef, gep))
    return terms, leftover


def certification_input(b: int, weight: str) -> CertificationInput:
    terms, leftover = weight_split_terms(b, weight)
    if weight == "half" and leftover:
        raise VerifierError(
            f"weight-1/2 split for b={b} leaves rational constant {leftover}")
    return CertificationInput(f"b{b}-{weight}", 121, terms)


def certify_weight(b: int, weight: str, prec: int | None = None,
                   progress=None) -> Certificate:
    return certify(certification_input(b, weight), prec=prec,
                   progress=progress)


def bound_table() -> list[dict]:
    """Order bounds for all ten weight identities, from constituents built
    by the same routing recipe as the certified b = 1 pair."""
    rows = []
    for weight in ("half", "threehalf"):
        for b in range(1, 6):
            terms, _ = weight_split_terms(b, weight)
            bound = identity_bound(
                CertificationInput(f"b{b}-{weight}", 121, terms))
            neg = -bound
            rows.append({
                "b": b,
                "weight": weight,
                "B": bound,
                "requiredOrder": neg.numerator // neg.denominator + 1,
            })
    return rows


# ---------------------------------------------------------------------------
# the certified identities in series form

def h_series_texts(b: int, displays=None) -> tuple[str, str]:
    """X-form left sides of the two weight identities for F(b).

    The weight-1/2 text keeps the first-order display rows verbatim and
    the bracket leftovers of the second-order rows; the weight-3/2 text
    carries the bracket-weighted monomials and the squared sums.  Their
    sum reassembles F(b) exactly.
    """
    if displays is None:
        displays = _display_structures()
    low: list[tuple[int, str]] = []
    high: list[tuple[int, str]] = []
    const_total = Fraction(0)
    for jexp, a, w in _row_blocks(b):
        monos, sq, xl, _ = _split_rows(_norm_terms(displays[(jexp, a)]))
        # first-order rows are pure low-weight content; second-order rows
        # put their monomial brackets and squares in the high bucket and
        # shed low-weight remnants
        bracket_bucket = low if jexp == 1 else high
        for t in monos:
            coef = w * t["coef"]
            x = t["x"]
            if not x:
                bracket_bucket.append(_fraction_term(coef * t["const"],
                                                     t["mono"]))
                continue
            g = _gamma(x)
            bracket_bucket.append(_fraction_term(
                coef, t["mono"] + "*" + _xsum_text(x, g)))
            lv = coef * (t["const"] - g)
            if lv:
                low.append(_fraction_term(lv, t["mono"]))
        if xl is not None:
            x = xl["x"]
            g = _gamma(x)
            csq = w * sq["coef"] if sq is not None else Fraction(0)
            cxl = w * xl["coef"]
            if csq:
                high.append(_fraction_term(csq, _xsum_text(x, g) + "^2"))
            lin = cxl - 2 * g * csq
            if lin:
                low.append(_fraction_term(lin, _xsum_text(x, g)))
            const_total += csq * g * g - cxl * g
    if const_total:
        low.append(_fraction_term(const_total, ""))
    return (f"1/J(1)*({_join_terms(low)})",
            f"1/J(1)*({_join_terms(high)})")


def g_series_texts(b: int, rows=None) -> tuple[str, str]:
    """Dissection-table right sides of the two weight identities."""
    if rows is None:
        rows = _appendix_structures(b)
    low: list[tuple[int, str]] = []
    high: list[tuple[int, str]] = []
    for row in rows:
        m = row["m"]
        prefix = [f"q^{m}"] if m else []
        y = row["ycoef"]
        if y is not None and Fraction(str(y)):
            low.append(_fraction_term(Fraction(str(y)),
                                      "*".join(prefix + [f"Y{m}@11"])))
        for cv, tp, sp in row["vterms"]:
            parts = prefix + [f"V{m}@11"]
            if tp:
                parts.append(_pow_factor("T", tp, scaled=True))
            if sp:
                parts.append(_pow_factor("t", sp, scaled=True))
            high.append(_fraction_term(Fraction(str(cv)), "*".join(parts)))
    return _join_terms(low), _join_terms(high)


def build_b1_certification_inputs() -> tuple[IdentityRecord, IdentityRecord]:
    """The two certified identities for b = 1 as series records.

    Left sides come verbatim from the display rows (X atoms included);
    right sides are the scaled correction/table combinations.  The
    eta-quotient forms handed to the modular module are produced by
    certification_input, which eliminates the X atoms through the
    quotient basis.
    """
    h_half, h_threehalf = h_series_texts(1)
    g_half, g_threehalf = g_series_texts(1)
    rec_half = IdentityRecord(
        id="certify.b1.half", lhs=h_half, rhs=g_half, order=600,
        ref="weight-1/2 part of the b=1 split")
    rec_threehalf = IdentityRecord(
        id="certify.b1.threehalf", lhs=h_threehalf, rhs=g_threehalf,
        order=600, ref="weight-3/2 part of the b=1 split")
    return rec_half, rec_threehalf


# ---------------------------------------------------------------------------
# certification input serialization (the CLI's certify files)

def certification_input_to_dict(inp: CertificationInput) -> dict:
    terms = []
    for coef, g in inp.terms:
        terms.append({
            "coef": str(Fraction(coef)),
            "q": str(g.q_prefactor),
            "classical": [[d, r] for d, r
                          in sorted(g.classical.items()) if r],
            "generalized": [[d, gg, r] for (d, gg), r
                            in sorted(g.exponents.items()) if r],
        })
    return {"identity": inp.identity, "level": inp.level, "terms": terms}


def certification_input_from_dict(d: dict) -> CertificationInput:
    level = int(d["level"])
    terms = []
    for t in d["terms"]:
        gep = GeneralizedEtaProduct(
            level=level,
            exponents={(int(dd), int(gg)): int(r)
                       for dd, gg, r in t.get("generalized", ())},
            classical={int(dd): int(r) for dd, r in t.get("classical", ())},
            q_prefactor=Fraction(t.get("q", "0")),
        )
        terms.append((Fraction(t["coef"]), gep))
    return CertificationInput(d["identity"], level, terms)
