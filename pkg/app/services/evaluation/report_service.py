"""
SVG figures of sweep results: success rate against the swept axis, one line per model.
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from app.services.evaluation.sweep_service import SweepResult, read_sweep_csv  # noqa: E402

logger = logging.getLogger(__name__)

AXIS_LABELS = {
    "n_objects": "Number of objects",
    "n_goal_relations": "Number of goal relations",
    "n_steps": "Number of plan steps",
}


def render_report(result: SweepResult, out_dir: Path, stem: str = "sweep") -> list[Path]:
    """
    Write one `<stem>_<axis>.svg` per swept axis found in result.

    Returns:
        Paths of the written figures
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_axis: dict[str, SweepResult] = {}
    for row in result.rows:
        by_axis.setdefault(row.axis, SweepResult([])).rows.append(row)

    written = []
    # Fixed hash salt and no date keep the SVG bytes reproducible
    with plt.rc_context({"svg.hashsalt": "reldyn", "svg.fonttype": "none"}):
        for axis, subset in by_axis.items():
            fig, ax = plt.subplots(figsize=(5, 3.5))
            for model, rates in subset.success_rates().items():
                values = sorted(rates)
                ax.plot(values, [rates[v] for v in values], marker="o", label=model)
            ax.set_xlabel(AXIS_LABELS.get(axis, axis))
            ax.set_ylabel("Success rate")
            ax.set_ylim(-0.05, 1.05)
            ax.grid(alpha=0.3)
            ax.legend()
            fig.tight_layout()
            path = out_dir / f"{stem}_{axis}.svg"
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            written.append(path)
            logger.info(f"Wrote {path}")
    return written


def render_report_file(csv_path: Path, out_dir: Path) -> list[Path]:
    """Render figures for a sweep CSV, named after the CSV file."""
    csv_path = Path(csv_path)
    return render_report(read_sweep_csv(csv_path), out_dir, stem=csv_path.stem)
