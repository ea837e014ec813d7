"""
Tests for planning sweeps and their report figures.
"""

import pytest
from pydantic import ValidationError

from app.services.evaluation import (
    SweepResult,
    SweepSpec,
    TrialRow,
    read_sweep_csv,
    run_sweep,
    trial_seed,
    write_sweep_csv,
)
from app.services.evaluation.report_service import render_report, render_report_file
from app.services.planning import CemConfig

SMALL_CEM = CemConfig(n_samples=6, n_elites=2, n_iterations=1)


def _row(model: str, value: int, trial: int, success: bool) -> TrialRow:
    return TrialRow(
        model=model,
        axis="n_objects",
        value=value,
        trial=trial,
        seed=trial_seed(0, value, trial),
        n_objects=value,
        n_goal_relations=2,
        n_steps=1,
        trivial=False,
        success=success,
        n_achieved=int(success),
        learned_agreement=1.0,
        predicted_score=-0.25,
    )


class TestSweepSpec:
    """Tests for SweepSpec."""

    def test_setting_overrides_axis(self):
        """Test the swept value replaces only its own axis."""
        spec = SweepSpec(axis="n_goal_relations", n_objects=4)
        assert spec.setting(3) == {"n_objects": 4, "n_goal_relations": 3, "n_steps": 1}

    def test_empty_values(self):
        """Test an empty value list is rejected."""
        with pytest.raises(ValidationError):
            SweepSpec(values=[])

    def test_trial_seeds_distinct(self):
        """Test trial seeds differ across values and trials and fit in a signed 64-bit int."""
        seeds = {trial_seed(0, v, t) for v in (2, 3) for t in range(10)}
        assert len(seeds) == 20
        assert all(0 <= s < 2**63 for s in seeds)


class TestRunSweep:
    """Tests for run_sweep."""

    @pytest.fixture
    def spec(self):
        return SweepSpec(axis="n_objects", values=[2, 3], trials=2, seed=1)

    def test_rows_in_order(self, spec, small_model):
        """Test one row per (model, value, trial) in that order."""
        result = run_sweep(spec, {"rd_gnn": small_model}, SMALL_CEM)
        assert [(r.model, r.value, r.trial) for r in result.rows] == [
            ("rd_gnn", 2, 0),
            ("rd_gnn", 2, 1),
            ("rd_gnn", 3, 0),
            ("rd_gnn", 3, 1),
        ]
        for row in result.rows:
            assert row.n_objects == row.value
            assert 0 <= row.n_achieved <= row.n_steps
            assert 0.0 <= row.learned_agreement <= 1.0

    def test_deterministic_and_thread_independent(self, spec, small_model):
        """Test repeated and threaded sweeps give identical rows."""
        first = run_sweep(spec, {"m": small_model}, SMALL_CEM)
        second = run_sweep(spec, {"m": small_model}, SMALL_CEM, threads=2)
        assert first.rows == second.rows

    def test_models_share_trials(self, spec, small_model):
        """Test every model is scored on the same seeds."""
        result = run_sweep(spec, {"a": small_model, "b": small_model}, SMALL_CEM)
        seeds = {}
        for row in result.rows:
            seeds.setdefault(row.model, []).append(row.seed)
        assert seeds["a"] == seeds["b"]

    def test_success_rates(self):
        """Test rates are mean success per model and value."""
        result = SweepResult([_row("a", 2, 0, True), _row("a", 2, 1, False), _row("a", 3, 0, True)])
        assert result.success_rates() == {"a": {2: 0.5, 3: 1.0}}


class TestSweepCsv:
    """Tests for the sweep CSV."""

    def test_write_then_read(self, tmp_path):
        """Test rows come back from the CSV unchanged."""
        result = SweepResult([_row("a", 2, 0, True), _row("b", 3, 1, False)])
        path = tmp_path / "sweep.csv"
        write_sweep_csv(result, path)
        assert read_sweep_csv(path).rows == result.rows

    def test_missing_column(self, tmp_path):
        """Test a CSV without the sweep columns is refused."""
        path = tmp_path / "bad.csv"
        path.write_text("model,value\na,2\n", encoding="utf-8")
        with pytest.raises(ValueError, match="missing sweep columns"):
            read_sweep_csv(path)


class TestReport:
    """Tests for the SVG report."""

    def test_one_figure_per_axis(self, tmp_path):
        """Test an SVG is written for the swept axis."""
        result = SweepResult([_row("a", 2, 0, True), _row("b", 2, 0, False), _row("a", 3, 0, True)])
        paths = render_report(result, tmp_path, stem="run")
        assert [p.name for p in paths] == ["run_n_objects.svg"]
        assert "<svg" in paths[0].read_text(encoding="utf-8")

    def test_reproducible_bytes(self, tmp_path):
        """Test rendering the same result twice writes identical files."""
        result = SweepResult([_row("a", 2, 0, True), _row("a", 3, 0, False)])
        first = render_report(result, tmp_path / "one")[0].read_bytes()
        second = render_report(result, tmp_path / "two")[0].read_bytes()
        assert first == second

    def test_from_csv(self, tmp_path):
        """Test figures are named after the CSV file."""
        path = tmp_path / "objects.csv"
        write_sweep_csv(SweepResult([_row("a", 2, 0, True)]), path)
        paths = render_report_file(path, tmp_path / "figs")
        assert [p.name for p in paths] == ["objects_n_objects.svg"]
