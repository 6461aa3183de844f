"""Record corpus plumbing, the extension atoms, and the weight split."""

import json
from fractions import Fraction

import pytest

from qcrank.lambert import lam_series, primed_weighted_sum, s_row_sum
from qcrank.modular import CertificationInput, identity_bound
from qcrank.partitions import stats_table
from qcrank.qproducts import EvalError, eval_expr, monomial_parts, parse
from qcrank.series import LaurentSeries, first_mismatch
from qcrank.verifier import (
    DATA_DIR,
    SUITE_NAMES,
    IdentityRecord,
    VerificationReport,
    bound_table,
    certification_input_from_dict,
    certification_input_to_dict,
    certification_split,
    clear_caches,
    crank_weight_residue_series,
    folded_weight_series,
    g_series_texts,
    gside_terms,
    h_series_texts,
    load_records,
    low_order_anomaly,
    make_resolver,
    mathcalF,
    mw_difference_series,
    ones_difference_series,
    rank_weight_residue_series,
    run_records,
    run_suite,
    suite_records,
    verify,
)

EXPECTED_SUITE_SIZES = {
    "lemma-2": 27,
    "lemma-3": 26,
    "appendix": 56,
    "corollary": 5,
    "theorem1": 3,
    "combinatorial": 23,
    "certification": 13,
}


def test_suite_names_and_sizes():
    assert set(SUITE_NAMES) == set(EXPECTED_SUITE_SIZES)
    for name, size in EXPECTED_SUITE_SIZES.items():
        assert len(suite_records(name)) == size, name


def test_suite_records_unknown():
    with pytest.raises(Exception):
        suite_records("no-such-suite")


def test_record_round_trip():
    rec = IdentityRecord(id="t.one", lhs="J(1)", rhs="J(1)", order=50,
                         ref="sanity", mod=5, from_order=2,
                         extra={"b": 1})
    again = IdentityRecord.from_dict(rec.to_dict())
    assert again.id == rec.id
    assert again.mod == 5
    assert again.from_order == 2
    assert again.extra == {"b": 1}


def test_record_defaults():
    rec = IdentityRecord.from_dict({"id": "t", "lhs": "q", "rhs": "q"})
    assert rec.order == 600
    assert rec.kind == "identity"
    assert rec.mod is None


def test_every_stored_record_parses():
    for name in SUITE_NAMES:
        for rec in suite_records(name):
            if rec.kind in ("identity", "probe"):
                parse(rec.lhs)
                parse(rec.rhs)


def test_mathcal_f_low_orders():
    # brute-force ones-count difference between crank classes 1 and 10
    f = mathcalF(1, 12)
    for n in range(2, 12):
        st = stats_table(n, 11)
        assert f.coeff(n) == st.ones_by_crank[1] - st.ones_by_crank[10], n


def test_mathcal_f_negation_symmetry():
    a = mathcalF(3, 20)
    b = mathcalF(8, 20)
    assert first_mismatch(a, b.neg()) is None


def test_mathcal_f_validates_b():
    with pytest.raises(ValueError):
        mathcalF(0, 10)
    with pytest.raises(ValueError):
        mathcalF(11, 10)


def test_resolver_atoms_match_functions():
    res = make_resolver()
    # window sizes keep the enumerated arguments inside the guard
    cases = {
        "F(2)": (25, mathcalF(2, 25)),
        "SROW(1,2)": (25, s_row_sum(1, 2, 25)),
        "PWS(3,1)": (25, primed_weighted_sum(3, 1, 25)),
        "MWDIFF(1)": (25, mw_difference_series(1, 25)),
        "NTWRES(5,1)": (13, rank_weight_residue_series(5, 1, 13)),
        "MWRES(5,4)": (13, crank_weight_residue_series(5, 4, 13)),
        "MWFOLD(11,6)": (6, folded_weight_series(11, 6, 6)),
        "ONESDIFF(5)": (14, ones_difference_series(5, 14)),
    }
    for text, (prec, want) in cases.items():
        got = eval_expr(parse(text), prec, res)
        assert first_mismatch(got, want) is None, text


def test_resolver_unknown_atom():
    res = make_resolver()
    with pytest.raises(EvalError):
        eval_expr(parse("NOSUCH(1)"), 10, res)


def test_native_lambert_atoms():
    got = eval_expr(parse("LAM(11)"), 30)
    assert first_mismatch(got, lam_series(11, 30)) is None
    br = eval_expr(parse("BR(2,11)"), 30)
    from qcrank.lambert import bracket_general
    assert first_mismatch(br, bracket_general(2, 11, 30)) is None


def test_verify_passing_record():
    rec = IdentityRecord(id="t.pass", lhs="J(1)*(1/J(1))", rhs="1",
                         order=30, ref="sanity")
    rep = verify(rec)
    assert rep.ok
    assert rep.checked == 30


def test_verify_failing_record_pinpoints():
    rec = IdentityRecord(id="t.fail", lhs="1/J(1)", rhs="1/J(1) + q^7",
                         order=30, ref="sanity")
    rep = verify(rec)
    assert not rep.ok
    assert rep.first_failure == 7
    assert Fraction(rep.rhs_coefficient) - Fraction(rep.lhs_coefficient) == 1


def test_verify_mod_record():
    # p(5n+4) = 0 mod 5
    rec = IdentityRecord(id="t.mod", lhs="dissect(1/J(1),5,4)", rhs="0",
                         order=20, ref="sanity", mod=5,
                         extra={"margin": 5})
    assert verify(rec).ok
    rec2 = IdentityRecord(id="t.mod7", lhs="dissect(1/J(1),5,4)", rhs="0",
                          order=20, ref="sanity", mod=7,
                          extra={"margin": 5})
    assert not verify(rec2).ok


def test_verify_from_order():
    rec = IdentityRecord(id="t.from", lhs="1/J(1) + q", rhs="1/J(1) + 2*q",
                         order=20, ref="sanity", from_order=2,
                         extra={"margin": 5})
    assert verify(rec).ok
    full = IdentityRecord(id="t.from0", lhs="1/J(1) + q", rhs="1/J(1) + 2*q",
                          order=20, ref="sanity", extra={"margin": 5})
    assert verify(full).ok is False


def test_verify_errors_become_failures():
    rec = IdentityRecord(id="t.err", lhs="F(99)", rhs="0", order=10,
                         ref="sanity")
    rep = verify(rec)
    assert not rep.ok
    assert "ValueError" in rep.detail or "99" in rep.detail


def test_verify_max_order_clamps():
    rec = IdentityRecord(id="t.clamp", lhs="J(1)", rhs="J(1)", order=500,
                         ref="sanity")
    rep = verify(rec, max_order=25)
    assert rep.ok
    assert rep.checked == 25


def test_run_records_orders_and_parallel():
    recs = [
        IdentityRecord(id=f"t.{k}", lhs="J(1)", rhs="J(1)", order=15,
                       ref="sanity", extra={"margin": 5})
        for k in ("c", "a", "b")
    ]
    serial = run_records(recs)
    assert [r.id for r in serial] == ["t.a", "t.b", "t.c"]
    pooled = run_records(recs, jobs=2)
    assert [(r.id, r.status, r.checked) for r in pooled] == \
        [(r.id, r.status, r.checked) for r in serial]


def test_run_suite_small_order():
    reports = run_suite("corollary", max_order=30)
    assert len(reports) == 5
    assert all(r.ok for r in reports)
    assert all(r.checked == 30 for r in reports)


def test_report_round_trip():
    rep = VerificationReport("t", "fail", 10, detail="boom",
                             first_failure=3, lhs_coefficient="1",
                             rhs_coefficient="2")
    d = rep.to_dict()
    assert d["firstFailure"] == 3
    assert d["status"] == "fail"
    ok = VerificationReport("t", "pass", 10)
    assert "firstFailure" not in ok.to_dict()


def test_probe_records_never_fail():
    probes = [r for r in suite_records("appendix") if r.kind == "probe"]
    assert probes
    rep = verify(probes[0], max_order=30)
    assert rep.ok
    assert "table.m10.b1" in rep.detail


def test_low_order_anomaly_shape():
    rows = low_order_anomaly(1)
    assert [n for n, _, _ in rows] == [0, 1]
    for _, analytic, counted in rows:
        assert analytic == counted


# ---------------------------------------------------------------------------
# the weight-routed split


def test_split_leftover_zero_every_b():
    for b in range(1, 6):
        half, threehalf, leftover = certification_split(b)
        assert leftover == 0, b
        assert len(half) > 0 and len(threehalf) > 0


def test_split_bucket_counts_b1():
    half, threehalf, _ = certification_split(1)
    assert len(half) == 52
    assert len(threehalf) == 94


def test_gside_terms_weight_routing():
    from qcrank.verifier import _classical_degree
    for weight, expect in (("half", 2), ("threehalf", 4)):
        for coef, gep in gside_terms(1, weight):
            assert _classical_degree(gep) == expect


def test_split_reassembles_f():
    # both weight routes summed recover J(1)*F(b) as a series
    b = 2
    order = 40
    half, threehalf, leftover = certification_split(b)
    total = LaurentSeries.zero(order)
    for coef, gep in list(half.terms()) + list(threehalf.terms()):
        total = total.add(gep.expand(order).mul(coef))
    total = total.add(leftover)
    j1f = eval_expr(parse("J(1)*F(" + str(b) + ")"), order, make_resolver())
    assert first_mismatch(total, j1f) is None


def test_h_g_texts_reassemble_f():
    b = 3
    order = 40
    res = make_resolver()
    h_lo, h_hi = h_series_texts(b)
    g_lo, g_hi = g_series_texts(b)
    f = mathcalF(b, order)
    h_sum = eval_expr(parse(f"({h_lo}) + ({h_hi})"), order, res)
    assert first_mismatch(h_sum, f) is None
    # the table rows dissect F(b) directly, so their scaled sum is F(b)
    g_sum = eval_expr(parse(f"({g_lo}) + ({g_hi})"), order, res)
    assert first_mismatch(g_sum, f) is None


def test_bound_table_values():
    rows = bound_table()
    by_key = {(r["b"], r["weight"]): r for r in rows}
    assert len(rows) == 10
    expected_half = {1: -946, 2: -935, 3: -946, 4: -935, 5: -814}
    for b in range(1, 6):
        row = by_key[(b, "half")]
        assert row["B"] == expected_half[b]
        assert row["requiredOrder"] == -expected_half[b] + 1
        row3 = by_key[(b, "threehalf")]
        assert row3["B"] == -1683
        assert row3["requiredOrder"] == 1684


def test_certification_input_round_trip():
    path = DATA_DIR / "b1-half.json"
    inp = certification_input_from_dict(json.loads(path.read_text()))
    assert inp.identity == "b1-half"
    assert inp.level == 121
    again = certification_input_from_dict(certification_input_to_dict(inp))
    assert again.terms == inp.terms
    assert identity_bound(again) == Fraction(-946)


def test_stored_inputs_match_split():
    # the shipped constituent files are exactly the split's output
    from qcrank.verifier import certification_input
    stored = certification_input_from_dict(
        json.loads((DATA_DIR / "b1-threehalf.json").read_text()))
    built = certification_input(1, "threehalf")

    def canon(terms):
        return sorted(
            (coef, g.q_prefactor, tuple(sorted(g.exponents.items())),
             tuple(sorted(g.classical.items())))
            for coef, g in terms)

    assert canon(stored.terms) == canon(built.terms)


def test_clear_caches_rebuilds_identically():
    before = mathcalF(1, 10)
    clear_caches()
    after = mathcalF(1, 10)
    assert first_mismatch(before, after) is None


def test_disk_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv("QCRANK_CACHE_DIR", str(tmp_path))
    clear_caches()
    s = mathcalF(1, 30)
    files = list(tmp_path.glob("*"))
    assert files, "expected a cache file"
    clear_caches()
    again = mathcalF(1, 30)
    assert first_mismatch(s.truncate(30), again.truncate(30)) is None
    monkeypatch.delenv("QCRANK_CACHE_DIR")
    clear_caches()


def test_load_records_missing_file():
    with pytest.raises(Exception):
        load_records(DATA_DIR / "definitely-missing.json")
