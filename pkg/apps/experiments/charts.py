"""
Static SVG learning-curve charts.
"""
import logging
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from apps.core.exceptions import ChartError  # noqa: E402

logger = logging.getLogger(__name__)

SVG_HASH_SALT = "drlab"


def _legend_name(table, index):
    return table.label.get("algorithm") or f"series {index}"


def emit_chart(summary_tables, output_path, title=""):
    """
    Render mean lines with shaded interval bands, one series per table.

    The SVG is byte-deterministic for identical inputs.

    Raises:
        ChartError for an empty table list or an unwritable path
    """
    summary_tables = list(summary_tables)
    if not summary_tables:
        raise ChartError("no summary tables to chart")
    output_path = Path(output_path)
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        try:
            for index, table in enumerate(summary_tables):
                single = len(table) == 1
                (line,) = ax.plot(
                    table.episode,
                    table.mean,
                    marker="o" if single else None,
                    linewidth=1.2,
                    label=_legend_name(table, index),
                )
                if table.interval_defined:
                    ax.fill_between(table.episode, table.ci_low, table.ci_high, color=line.get_color(), alpha=0.2)
            ax.set_xlabel("episode")
            ax.set_ylabel("team reward")
            if title:
                ax.set_title(title)
            ax.legend(loc="lower right")
            fig.tight_layout()
            try:
                fig.savefig(output_path, format="svg", metadata={"Date": None})
            except OSError as exc:
                raise ChartError(f"cannot write chart to {output_path}: {exc}") from exc
        finally:
            plt.close(fig)
    logger.info(f"chart written to {output_path}")
    return output_path


def chart_key(table):
    return table.label.get("env", "unknown"), table.label.get("n_agents", 0)


def emit_charts(summary_tables, output_dir):
    """One chart per (environment, N) group of tables, sorted by algorithm."""
    groups = defaultdict(list)
    for table in summary_tables:
        groups[chart_key(table)].append(table)
    if not groups:
        raise ChartError("no summary tables to chart")
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for (env, n_agents), tables in sorted(groups.items()):
        tables.sort(key=lambda t: t.label.get("algorithm", ""))
        path = output_dir / f"{env}-N{n_agents}.svg"
        paths.append(emit_chart(tables, path, title=f"{env}, N={n_agents}"))
    return paths
