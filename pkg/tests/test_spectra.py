import math

import pytest

from qesdwp.bethe import SolverOptions
from qesdwp.errors import MethodDisagreement
from qesdwp.models import ManningParams, RazavyParams, ShifmanParams
from qesdwp.spectra import assemble_spectrum, pairing_check, splitting_table, trace_identity

from reference_values import RAZAVY_T3, RAZAVY_T3_DELTAS, RAZAVY_T3_MISPRINTS, last_place


@pytest.fixture(scope="module")
def table12():
    return splitting_table(2.0, 12)


def test_spectrum_examples():
    spec = assemble_spectrum(RazavyParams(2.0, 3))
    assert spec.energies == pytest.approx([2.7538, 9.0, 19.2462], abs=5e-5)
    assert spec.method_agreement < 1e-9 and spec.fully_corroborated and not spec.flags
    assert [s.level_index for s in spec.states] == [0, 1, 2]

    spec = assemble_spectrum(ShifmanParams(0.1, 2))
    assert spec.energies == pytest.approx([-2.0067, -0.5479, 0.05457], abs=5e-5)

    spec = assemble_spectrum(ManningParams(1.0, -6.0, 0))
    assert spec.energies == [-1.0] and spec.keys == pytest.approx([6.0])


def test_single_route_spectra():
    p = ShifmanParams(0.1, 3)
    a = assemble_spectrum(p, method="determinant")
    b = assemble_spectrum(p, method="bethe")
    assert all(s.method == "determinant" for s in a.states)
    assert a.energies == pytest.approx(b.energies, abs=1e-10)
    assert not a.fully_corroborated
    with pytest.raises(ValueError):
        assemble_spectrum(p, method="nope")


def test_missing_bethe_configuration_is_flagged_not_dropped():
    # one multistart seed is not enough at this size
    p = ShifmanParams(2.0, 16)
    spec = assemble_spectrum(p, SolverOptions(max_starts=1))
    assert len(spec.states) == p.dim
    if not spec.fully_corroborated:
        assert any("determinant route only" in f for f in spec.flags)


def test_disagreement_raises(monkeypatch):
    from qesdwp import bethe

    real = bethe.reconstruct_observables

    def shifted(params, z):
        obs = real(params, z)
        return type(obs)(obs.energy + 1e-3, obs.manning_v3, obs.manning_epsilon)

    monkeypatch.setattr(bethe, "reconstruct_observables", shifted)
    with pytest.raises(MethodDisagreement):
        assemble_spectrum(RazavyParams(2.0, 3))
    spec = assemble_spectrum(RazavyParams(2.0, 3), strict=False)
    assert spec.method_agreement > 1e-6


def test_splitting_rows(table12):
    rows = {r.M: r for r in table12.rows}
    assert rows[1].energies == pytest.approx((5.0,)) and rows[1].deltas == ()
    assert rows[8].energies[0] == pytest.approx(14.2739943644243, abs=5e-13)
    assert rows[12].deltas[0] == pytest.approx(0.00002127, abs=5e-8)
    for M, row in rows.items():
        assert len(row.energies) == M and len(row.deltas) == M // 2


def test_splitting_matches_printed_digits(table12):
    for row in table12.rows:
        for got, text in zip(row.energies, RAZAVY_T3[row.M]):
            exact = RAZAVY_T3_MISPRINTS.get((row.M, text))
            if exact is None:
                assert abs(got - float(text)) <= 5 * last_place(text)
            else:
                assert abs(got - float(exact)) < 1e-12
        for got, text in zip(row.deltas, RAZAVY_T3_DELTAS.get(row.M, [])):
            assert abs(got - float(text)) <= 5 * last_place(text)


def test_pairing(table12):
    assert all(pairing_check(table12))
    row10 = table12.rows[9]
    assert [round(d, 4) for d in row10.deltas] == [0.0015, 0.4023, 7.1256, 14.4339, 18.0367]


def test_splitting_validation():
    with pytest.raises(ValueError):
        splitting_table(2.0, 0)


def test_seed_invariance():
    p = RazavyParams(2.0, 9)
    a = assemble_spectrum(p, SolverOptions(rng_seed=3)).energies
    b = assemble_spectrum(p, SolverOptions(rng_seed=12345)).energies
    assert max(abs(x - y) for x, y in zip(a, b)) < 1e-10


@pytest.mark.parametrize("M", [1, 2, 5, 12])
def test_trace_identity(M):
    p = RazavyParams(2.0, M)
    assert trace_identity(p, assemble_spectrum(p).energies) < 1e-9


def test_trace_identity_closed_form():
    # the three energies sum to 31
    r = math.sqrt(17)
    energies = [11 - 2 * r, 9.0, 11 + 2 * r]
    assert trace_identity(RazavyParams(2.0, 3), energies) < 1e-12


def test_with_oracle():
    spec = assemble_spectrum(ShifmanParams(0.1, 1), with_oracle=True)
    assert spec.oracle_report.all_matched(1e-4)
