"""Tests for SVG figures (skipped without the plot extra)."""

import numpy as np
import pytest

pytest.importorskip("matplotlib")

from corrlab.measures import WeightedPointCloud  # noqa: E402
from corrlab.pairing import PairingReport, PairingRow  # noqa: E402
from corrlab.plotting import plot_cloud, plot_pairing_report  # noqa: E402


def test_plot_pairing_report_writes_svg(tmp_path):
    report = PairingReport(
        form_id="Omega",
        rows=[PairingRow(n=n, pairing=1.0, limit=1.0, abs_error=2.0**-n, noise=1e-12) for n in (1, 2, 3)],
        fitted_rate=0.5,
    )
    path = plot_pairing_report(report, tmp_path / "figs" / "pairing.svg")
    assert path.read_text(encoding="utf-8").lstrip().startswith("<?xml")


def test_plot_cloud_skips_infinity(tmp_path):
    nu = WeightedPointCloud(np.array([0.5j, -1.0, np.inf + 0j]), np.array([0.25, 0.25, 0.5]))
    path = plot_cloud(nu, tmp_path / "cloud.svg")
    assert path.is_file()
    assert "<svg" in path.read_text(encoding="utf-8")
