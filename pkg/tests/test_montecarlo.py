import math

import pytest
from pydantic import ValidationError

from netmisfit.ergm import ErgMode
from netmisfit.errors import InvalidArgument, MismatchedSpecs
from netmisfit.metrics import metrics
from netmisfit.montecarlo import (
    CSV_COLUMNS,
    ESTIMATION_FAILED,
    McSummary,
    ModelKind,
    ScenarioKind,
    ScenarioSpec,
    TestOptions,
    compare_scenarios,
    format_csv,
    replicate,
    run_scenario,
    write_csv,
)

PAPER_LITERAL = TestOptions(erg_mode=ErgMode.PAPER_LITERAL)


def _erg(replications=20, scenario=ScenarioKind.NULL, n=50, **kwargs):
    return ScenarioSpec(model=ModelKind.ERG, scenario=scenario, n=n, replications=replications, **kwargs)


def _summary(spec, well, miss, degenerate=0, failed=0):
    counts = {"WellSpecified": well, "Misspecified": miss, "Degenerate": degenerate, ESTIMATION_FAILED: failed}
    return McSummary(spec=spec, counts=counts)


def test_spec_validation():
    with pytest.raises(ValidationError):
        _erg(n=55, scenario=ScenarioKind.PERTURBED)
    with pytest.raises(ValidationError):
        ScenarioSpec(model=ModelKind.SBM, n=30, replications=1)
    with pytest.raises(ValidationError):
        ScenarioSpec(model=ModelKind.SBM, n=3, m=4, replications=1)
    with pytest.raises(ValidationError):
        _erg(m=2)
    with pytest.raises(ValidationError):
        _erg(replications=0)
    assert _erg(n=55).n == 55


@pytest.mark.slow
@pytest.mark.parametrize("n", [50, 100, 200])
def test_erg_null_is_accepted_in_paper_literal_mode(n):
    summary = run_scenario(_erg(replications=1000, n=n, options=PAPER_LITERAL, master_seed=2024))
    assert summary.proportion_well_specified >= 0.99
    assert summary.counts["Misspecified"] <= 1


def test_general_mode_counts_degenerate():
    summary = run_scenario(_erg(replications=10))
    assert summary.counts["Degenerate"] + summary.n_failed == 10
    assert summary.proportion_well_specified == 0.0


def test_counts_add_up_and_records_are_ordered():
    spec = _erg(replications=15, options=PAPER_LITERAL, scenario=ScenarioKind.PERTURBED)
    summary = run_scenario(spec, keep_records=True)
    assert sum(summary.counts.values()) == 15
    assert [r["index"] for r in summary.records] == list(range(15))
    assert summary.denominator == 15 - summary.n_failed
    assert metrics.snapshot()["counters"]["replications_total"] == 15


def test_replicate_is_deterministic():
    spec = _erg(options=PAPER_LITERAL, master_seed=7)
    assert replicate(spec, 3) == replicate(spec, 3)
    assert replicate(spec, 3) != replicate(spec, 4)


def test_same_seed_same_summary_across_workers():
    spec = _erg(replications=12, options=PAPER_LITERAL, master_seed=11)
    serial = run_scenario(spec, workers=1, keep_records=True)
    parallel = run_scenario(spec, workers=2, keep_records=True)
    assert serial.counts == parallel.counts
    assert serial.records == parallel.records
    assert format_csv([serial]) == format_csv([parallel])


def test_parallel_run_reports_test_metrics():
    spec = _erg(replications=12, options=PAPER_LITERAL, master_seed=11)
    serial = run_scenario(spec, workers=1)
    serial_snap = metrics.snapshot()
    metrics.reset()
    run_scenario(spec, workers=2)
    parallel_snap = metrics.snapshot()
    assert parallel_snap["counters"] == serial_snap["counters"]
    assert parallel_snap["decisions"] == serial_snap["decisions"]
    assert parallel_snap["counters"]["tests_total"] == 12 - serial.n_failed


def test_erg_null_paper_literal_rarely_rejects():
    spec = _erg(replications=200, options=PAPER_LITERAL, master_seed=31)
    summary = run_scenario(spec)
    assert summary.counts["Misspecified"] <= 1


def test_single_replication_is_reproducible():
    spec = _erg(replications=1, options=PAPER_LITERAL, master_seed=99)
    assert run_scenario(spec).counts == run_scenario(spec).counts


def test_sbm_cell_structure():
    spec = ScenarioSpec(model=ModelKind.SBM, n=30, m=2, replications=4, options=TestOptions(clamp=1e-6), master_seed=3)
    summary = run_scenario(spec, keep_records=True)
    assert sum(summary.counts.values()) == 4
    for record in summary.records:
        if record["decision"] == ESTIMATION_FAILED:
            assert record["reason"]
        else:
            assert record["reason"] is None
    assert sum(summary.failure_reasons.values()) == summary.n_failed
    assert run_scenario(spec, keep_records=True).records == summary.records


def test_all_failed_has_no_proportion():
    summary = _summary(_erg(replications=3), 0, 0, failed=3)
    assert summary.proportion_well_specified is None
    assert summary.csv_row()["proportion_well_specified"] == ""


def test_proportion_excludes_failures():
    summary = _summary(_erg(replications=10), 6, 1, degenerate=1, failed=2)
    assert summary.proportion_well_specified == 0.75
    assert summary.rejection_rate == 0.125
    row = summary.csv_row()
    assert row == {
        "model": "ERG",
        "scenario": "Null",
        "reps": "10",
        "n": "50",
        "m": "",
        "proportion_well_specified": "0.750000",
        "n_degenerate": "1",
        "n_failed": "2",
    }
    assert summary.as_dict()["denominator"] == "replications - EstimationFailed"


def test_csv(tmp_path):
    summary = _summary(_erg(replications=4), 4, 0)
    text = format_csv([summary, summary])
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1] == "ERG,Null,4,50,,1.000000,0,0"
    assert len(lines) == 3
    path = tmp_path / "t.csv"
    write_csv([summary], path)
    assert path.read_text(encoding="utf-8") == format_csv([summary])


def test_compare_identical():
    spec = _erg(replications=100)
    report = compare_scenarios(_summary(spec, 95, 5), _summary(spec, 95, 5))
    assert report.difference == 0.0
    assert not report.flagged
    assert report.z == 0.0


def test_compare_flags_higher_perturbed_rejection():
    null = _summary(_erg(replications=100), 98, 2)
    perturbed = _summary(_erg(replications=100, scenario=ScenarioKind.PERTURBED), 2, 98)
    report = compare_scenarios(null, perturbed)
    assert report.flagged
    assert report.difference == pytest.approx(0.96)
    assert report.z == pytest.approx(0.96 / math.sqrt(0.25 * 0.02))
    assert report.as_dict()["null_rejection_rate"] == 0.02


def test_compare_rejects_mismatched_specs():
    with pytest.raises(MismatchedSpecs):
        compare_scenarios(_summary(_erg(replications=100), 50, 50), _summary(_erg(replications=100, n=60), 50, 50))
    with pytest.raises(InvalidArgument):
        compare_scenarios(_summary(_erg(replications=2), 0, 0, failed=2), _summary(_erg(replications=2), 1, 1))


def test_worker_count_validated():
    with pytest.raises(InvalidArgument):
        run_scenario(_erg(), workers=0)
