"""Optional SVG rendering of the CSV artifacts (needs matplotlib)."""

from __future__ import annotations

from pathlib import Path

from .analyzer import read_spectrum_csv


def plot_report(report) -> list:
    """Render every CSV in the report to a sibling SVG; return the new paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    csvs = [Path(a) for a in report.artifacts if a.endswith(".csv") and "trace" not in a]
    if not csvs:
        return []
    fig, ax = plt.subplots(figsize=(6, 4))
    for path in csvs:
        settings, x, y = read_spectrum_csv(path)
        zero_span = settings.get("mode") == "zero_span"
        ax.plot(x if zero_span else x / 1e6, y, lw=0.8, label=path.stem)
        ax.set_xlabel("time (s)" if zero_span else "frequency (MHz)")
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_ylabel("noise power (dB rel. SNL)")
    ax.legend(fontsize=7)
    out = csvs[0].parent / f"{report.scenario}.svg"
    fig.savefig(out)
    plt.close(fig)
    return [str(out)]
