"""The nine acceptance criteria, each printing one PASS/FAIL line."""

import json
import math

import numpy as np
import pytest

from qesdwp.algebraic import (
    ALGEBRAIZATION_FACTOR,
    algebraized_matrix,
    build_pencil,
    closed_form_energies,
    commutator,
    sl2_generators,
)
from qesdwp.bethe import closed_form_roots, razavy_m3_candidates, solve_bae
from qesdwp.cli import main
from qesdwp.models import ManningParams, RazavyParams, ShifmanParams
from qesdwp.oracle import verify_states
from qesdwp.spectra import assemble_spectrum, pairing_check, splitting_table

from reference_values import (
    MANNING_T1,
    RAZAVY_T3,
    RAZAVY_T3_DELTAS,
    RAZAVY_T3_MISPRINTS,
    RAZAVY_XI,
    SHIFMAN_A,
    SHIFMAN_N2_ROOTS,
    SHIFMAN_T4,
    last_place,
)

MANNING_CASES = [ManningParams(*key) for key in MANNING_T1]
RAZAVY_CASES = [RazavyParams(RAZAVY_XI, M) for M in range(1, 13)]
SHIFMAN_CASES = [ShifmanParams(SHIFMAN_A, n) for n in SHIFMAN_T4]
ALL_CASES = MANNING_CASES + RAZAVY_CASES + SHIFMAN_CASES


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def spectra_by_case():
    return {p: assemble_spectrum(p) for p in ALL_CASES}


@pytest.fixture(scope="module")
def table():
    return splitting_table(RAZAVY_XI, 12)


def test_criterion_1_manning_table(capsys):
    worst = 0.0
    ok = True
    for (v1, v2, n), (energy, v3_ref) in MANNING_T1.items():
        p = ManningParams(v1, v2, n)
        # each route on its own
        det = assemble_spectrum(p, method="determinant")
        bae = assemble_spectrum(p, method="bethe")
        for spec in (det, bae):
            ok &= all(e == energy for e in spec.energies)
            ok &= len(spec.keys) == len(v3_ref)
            if len(spec.keys) == len(v3_ref):
                worst = max(worst, float(np.max(np.abs(np.sort(spec.keys) - v3_ref))))
    ok &= worst < 5e-5
    report(capsys, 1, ok, f"Manning energies exact, max v3 error {worst:.2e} (limit 5e-5) by both routes")


def _razavy_digit_misses(table):
    misses = []
    for row in table.rows:
        for got, text in zip(row.energies, RAZAVY_T3[row.M]):
            if abs(got - float(text)) > 5 * last_place(text):
                misses.append((row.M, text, got))
        for got, text in zip(row.deltas, RAZAVY_T3_DELTAS.get(row.M, [])):
            if abs(got - float(text)) > 5 * last_place(text):
                misses.append((row.M, text, got))
    return misses


@pytest.mark.xfail(
    strict=True,
    reason="six 15-digit entries for M=9,10 are 5.9 to 47 last-place units from the exact eigenvalues",
)
def test_criterion_2_razavy_every_printed_digit(capsys, table):
    misses = _razavy_digit_misses(table)
    total = sum(len(v) for v in RAZAVY_T3.values()) + sum(len(v) for v in RAZAVY_T3_DELTAS.values())
    detail = f"{total - len(misses)}/{total} printed entries within 5 last-place units"
    if misses:
        detail += "; outside: " + ", ".join(f"M={M} {t} (got {g:.15g})" for M, t, g in misses)
    report(capsys, 2, not misses, detail)


def test_criterion_2_razavy_against_exact_values(table):
    # every miss is a known misprint, and there the solver matches the 40-digit value
    misses = _razavy_digit_misses(table)
    assert {(M, t) for M, t, _ in misses} == set(RAZAVY_T3_MISPRINTS)
    for M, text, got in misses:
        assert abs(got - float(RAZAVY_T3_MISPRINTS[(M, text)])) < 1e-12
    assert abs(table.rows[11].deltas[0] - 0.00002127) <= 5e-8


def test_criterion_3_shifman_table(capsys, spectra_by_case):
    worst = 0.0
    for p in SHIFMAN_CASES:
        got = sorted(spectra_by_case[p].energies)
        worst = max(worst, float(np.max(np.abs(np.array(got) - SHIFMAN_T4[p.n]))))
    configs = solve_bae(ShifmanParams(SHIFMAN_A, 2))
    root_err = max(min(float(np.max(np.abs(np.sort(c) - np.sort(ref)))) for c in configs) for ref in SHIFMAN_N2_ROOTS)
    ok = worst < 5e-5 and root_err < 1e-4
    report(capsys, 3, ok, f"max energy error {worst:.2e} (limit 5e-5), max root error {root_err:.2e} (limit 1e-4)")


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


def test_criterion_4_closed_forms(capsys):
    worst = 0.0
    cases = [
        ManningParams(1.0, -12.0, 1),
        ManningParams(2.5, -40.0, 1),
        ManningParams(1.0, -6.0, 0),
        RazavyParams(RAZAVY_XI, 1),
        RazavyParams(RAZAVY_XI, 2),
        RazavyParams(RAZAVY_XI, 3),
        RazavyParams(0.7, 3),
        ShifmanParams(SHIFMAN_A, 1),
        ShifmanParams(SHIFMAN_A, 2),
        ShifmanParams(2.0, 2),
    ]
    for p in cases:
        spec = assemble_spectrum(p)
        closed = sorted(closed_form_energies(p))
        got = sorted(spec.keys) if p.model == "manning" else sorted(spec.energies)
        if p.model == "manning":
            closed = sorted(p.v3_from_epsilon(u) for u in closed)
        worst = max(worst, max(_rel(a, b) for a, b in zip(got, closed)))
        if p.dim <= 2:
            found = [np.sort(np.real(c)) for c in solve_bae(p)]
            for cf in closed_form_roots(p):
                worst = max(worst, min(float(np.max(np.abs(np.sort(cf) - f), initial=0.0)) for f in found))
    cand = razavy_m3_candidates(RAZAVY_XI)
    for c in solve_bae(RazavyParams(RAZAVY_XI, 3)):
        for z in c:
            worst = max(worst, float(np.min(np.abs(cand - z)) / max(1.0, abs(z))))
    report(capsys, 4, worst < 1e-9, f"closed forms vs solver, max relative gap {worst:.2e} (limit 1e-9)")


def test_criterion_5_cross_method(capsys, spectra_by_case):
    agree = max(s.method_agreement for s in spectra_by_case.values())
    roots = max(s.root_agreement for s in spectra_by_case.values())
    corroborated = all(s.fully_corroborated for s in spectra_by_case.values())
    ok = agree < 1e-9 and roots < 1e-7 and corroborated
    report(
        capsys,
        5,
        ok,
        f"{len(spectra_by_case)} tabulated cases, energy/v3 gap {agree:.2e} (limit 1e-9), root gap {roots:.2e} (limit 1e-7)",
    )


def test_criterion_6_oracle(capsys, spectra_by_case):
    err = resid = 0.0
    ratio = math.inf
    matched = total = 0
    for p, spec in spectra_by_case.items():
        rep = verify_states(p, spec.states)
        matched += rep.matched(1e-4)
        total += len(spec.states)
        err = max(err, rep.max_error)
        resid = max(resid, max(rep.residuals))
        ratio = min(ratio, min(rep.residual_ratios))
    ok = matched == total and resid < 1e-4 and ratio >= 3
    report(
        capsys,
        6,
        ok,
        f"{matched}/{total} levels matched, max error {err:.2e} (limit 1e-4), "
        f"max residual {resid:.2e} (limit 1e-4), min halving ratio {ratio:.2f} (limit 3)",
    )


def test_criterion_7_algebraic_structure(capsys):
    exact = True
    for n in range(13):
        g = sl2_generators(n)
        exact &= np.array_equal(commutator(g.jplus, g.jminus), 2 * g.jzero)
        exact &= np.array_equal(commutator(g.jzero, g.jplus), g.jplus)
        exact &= np.array_equal(commutator(g.jzero, g.jminus), -g.jminus)
    worst = 0.0
    for p in ALL_CASES:
        pen = build_pencil(p)
        for u in (-2.5, 0.0, 3.7):
            diff = algebraized_matrix(p, u) - ALGEBRAIZATION_FACTOR[p.model] * pen.matrix(u)
            worst = max(worst, float(np.max(np.abs(diff))))
    ok = exact and worst < 1e-12
    report(capsys, 7, ok, f"commutators exact for n<=12: {exact}; generator form vs pencil max entry gap {worst:.1e} (limit 1e-12)")


def test_criterion_8_pairing(capsys, table):
    flags = pairing_check(table)
    d12 = table.rows[11].deltas
    report(capsys, 8, all(flags), f"deltas strictly increasing in {sum(flags)}/{len(flags)} rows; M=12 deltas {', '.join(f'{d:.4g}' for d in d12)}")


CLI_COMMANDS = [
    ["solve", "razavy", "--xi", "2", "--m", "12"],
    ["solve", "manning", "--v1", "1", "--v2", "-18", "--n", "2", "--format", "csv"],
    ["solve", "shifman", "--a", "0.1", "--n", "2", "--format", "table"],
    ["table", "manning-t1"],
    ["table", "razavy-t2"],
    ["table", "razavy-splitting"],
    ["table", "shifman-t4", "--format", "json"],
    ["verify", "razavy", "--xi", "2", "--m", "3", "--richardson"],
    ["plot-data", "fig1"],
    ["plot-data", "fig2", "--format", "json"],
    ["plot-data", "fig3"],
]

SEED_COMMANDS = [
    ["solve", "razavy", "--xi", "2", "--m", "12", "--format", "json"],
    ["solve", "manning", "--v1", "1", "--v2", "-18", "--n", "2", "--format", "json"],
    ["solve", "shifman", "--a", "0.1", "--n", "2", "--format", "json"],
]


def _capture(capsys, argv):
    status = main(argv)
    out, _ = capsys.readouterr()
    return status, out


def test_criterion_9_determinism(capsys, monkeypatch):
    monkeypatch.delenv("QESDWP_SEED", raising=False)
    identical = all(_capture(capsys, argv) == _capture(capsys, argv) for argv in CLI_COMMANDS)
    shift = 0.0
    for argv in SEED_COMMANDS:
        docs = []
        for seed in ("0", "17", "424242"):
            monkeypatch.setenv("QESDWP_SEED", seed)
            docs.append(json.loads(_capture(capsys, argv)[1]))
        for doc in docs[1:]:
            for a, b in zip(docs[0]["states"], doc["states"]):
                shift = max(shift, abs(a["energy"] - b["energy"]), abs((a.get("v3") or 0) - (b.get("v3") or 0)))
    ok = identical and shift <= 1e-10
    report(capsys, 9, ok, f"{len(CLI_COMMANDS)} commands byte-identical on rerun: {identical}; max energy shift across seeds {shift:.1e} (limit 1e-10)")
