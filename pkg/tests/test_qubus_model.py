"""Tests for the qubus beam algebra and the QND error model."""

from __future__ import annotations

import cmath
import csv
import io
import math
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest
from scipy.stats import poisson

from graphweaver.core.errors import DomainError
from graphweaver.core.qubus_model import (
    SWEEP_COLUMNS,
    TAIL_CUTOFF,
    QubusParams,
    bs_50_50,
    coherent_projection,
    linspace_arg,
    no_click_prob,
    poisson_pmf,
    probe_intensity,
    qnd_error_formula,
    qnd_error_sum,
    sample_odd_photons,
    sample_qnd,
    save_sweep,
    sweep,
    write_sweep_csv,
    xpm_shift,
)


def _params(
    alpha_sin: float, gamma_theta: float, eta: float = 1.0, theta: float = 0.01
) -> QubusParams:
    """Parameters with the given ``alpha sin(theta)`` and ``gamma theta``."""
    return QubusParams(
        alpha=alpha_sin / math.sin(theta), theta=theta, gamma=gamma_theta / theta, eta=eta
    )


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


class TestQubusParams:
    """Validation and derived quantities."""

    def test_defaults_are_deterministic_regime(self) -> None:
        p = QubusParams()
        assert p.alpha * math.sin(p.theta) == pytest.approx(4.0, rel=1e-4)
        assert p.gamma * p.theta == pytest.approx(10.0)

    def test_beta_and_mean(self) -> None:
        p = _params(3.0, 10.0)
        assert p.beta == pytest.approx(3.0 * math.sqrt(2))
        assert p.mean_photons == pytest.approx(18.0)

    @pytest.mark.parametrize(
        "kwargs",
        [{"alpha": -1.0}, {"theta": 0.0}, {"theta": 2.0}, {"gamma": -5.0}, {"eta": 1.5}],
    )
    def test_out_of_range_rejected(self, kwargs: dict) -> None:
        with pytest.raises(DomainError):
            QubusParams(**kwargs)


# ---------------------------------------------------------------------------
# Beam algebra
# ---------------------------------------------------------------------------


class TestBeamAlgebra:
    """Phase shifts, beam splitter and Fock projections."""

    def test_xpm_shift(self) -> None:
        assert xpm_shift(2.0, math.pi / 2) == pytest.approx(2j)

    def test_balanced_beams_leave_difference_port_dark(self) -> None:
        diff, total = bs_50_50(3 + 1j, 3 + 1j)
        assert diff == 0
        assert total == pytest.approx((3 + 1j) * math.sqrt(2))

    def test_opposite_phases_give_odd_amplitude(self) -> None:
        alpha, theta = 100.0, 0.02
        diff, _ = bs_50_50(xpm_shift(alpha, theta), xpm_shift(alpha, -theta))
        assert diff == pytest.approx(1j * math.sqrt(2) * alpha * math.sin(theta))

    def test_vacuum_projection(self) -> None:
        assert coherent_projection(0, 0) == 1
        assert coherent_projection(0, 3) == 0

    def test_projection_matches_poisson(self) -> None:
        beta = 2 + 1j
        for n in range(12):
            assert abs(coherent_projection(beta, n)) ** 2 == pytest.approx(
                poisson.pmf(n, abs(beta) ** 2)
            )

    def test_projection_phase(self) -> None:
        amp = coherent_projection(1j, 3)
        assert cmath.phase(amp) == pytest.approx(cmath.phase((1j) ** 3))

    def test_projection_large_n_is_finite(self) -> None:
        total = sum(abs(coherent_projection(8.0, n)) ** 2 for n in range(200))
        assert total == pytest.approx(1.0)

    def test_negative_photon_number(self) -> None:
        with pytest.raises(DomainError):
            coherent_projection(1.0, -1)

    def test_poisson_pmf_zero_mean(self) -> None:
        assert poisson_pmf(0.0, 0) == 1.0
        assert poisson_pmf(0.0, 2) == 0.0

    def test_no_click(self) -> None:
        assert no_click_prob(2.0, 0.5) == pytest.approx(math.exp(-1.0))


# ---------------------------------------------------------------------------
# QND error
# ---------------------------------------------------------------------------


class TestQndError:
    """Closed form against the photon-number sums."""

    def test_deterministic_regime_value(self) -> None:
        assert qnd_error_formula(_params(5.0, 10.0)) == pytest.approx(1.93e-22, rel=1e-2)

    def test_dark_detector_always_errs(self) -> None:
        p = _params(5.0, 10.0, eta=0.0)
        assert qnd_error_formula(p) == 1.0
        assert qnd_error_sum(p, "linearized") == pytest.approx(1.0, abs=1e-12)
        assert qnd_error_sum(p, "cosine") == pytest.approx(1.0, abs=1e-12)

    def test_zero_amplitude_never_errs_by_missing(self) -> None:
        p = QubusParams(alpha=0.0)
        assert qnd_error_formula(p) == 1.0
        assert qnd_error_sum(p) == 1.0

    @pytest.mark.parametrize("alpha_sin", [0.5, 1.0, 2.0, 4.0, 6.0])
    @pytest.mark.parametrize("gamma_theta", [0.5, 1.0, 2.0, 3.0, 10.0])
    @pytest.mark.parametrize("eta", [0.1, 0.3, 0.6, 1.0])
    def test_linearized_sum_matches_formula(
        self, alpha_sin: float, gamma_theta: float, eta: float
    ) -> None:
        p = _params(alpha_sin, gamma_theta, eta)
        assert qnd_error_sum(p, "linearized") == pytest.approx(qnd_error_formula(p), rel=1e-9)

    def test_formula_decreases_with_alpha(self) -> None:
        values = [
            qnd_error_formula(QubusParams(alpha=a, gamma=100.0, eta=0.5))
            for a in np.linspace(10.0, 300.0, 30)
        ]
        assert np.all(np.diff(values) < 0)

    def test_formula_decreases_with_gamma(self) -> None:
        values = [
            qnd_error_formula(QubusParams(alpha=100.0, gamma=g, eta=0.5))
            for g in np.linspace(10.0, 500.0, 30)
        ]
        assert np.all(np.diff(values) < 0)

    def test_formula_decreases_with_eta(self) -> None:
        values = [
            qnd_error_formula(QubusParams(alpha=100.0, gamma=100.0, eta=e))
            for e in np.linspace(0.05, 1.0, 20)
        ]
        assert np.all(np.diff(values) < 0)

    @pytest.mark.parametrize("model", ["linearized", "cosine"])
    @pytest.mark.parametrize("cutoff", [1e-6, 1e-10])
    def test_looser_tail_cutoff_changes_little(self, model: str, cutoff: float) -> None:
        p = _params(3.0, 1.0, eta=0.3)
        tight = qnd_error_sum(p, model)
        assert TAIL_CUTOFF == 1e-15
        with patch("graphweaver.core.qubus_model.TAIL_CUTOFF", cutoff):
            loose = qnd_error_sum(p, model)
        assert abs(tight - loose) <= cutoff

    @pytest.mark.parametrize("alpha_sin", [1.0, 3.0, 6.0])
    @pytest.mark.parametrize("gamma_theta", [3.0, 10.0])
    def test_cosine_close_in_log(self, alpha_sin: float, gamma_theta: float) -> None:
        p = _params(alpha_sin, gamma_theta)
        log_formula = math.log(qnd_error_formula(p))
        log_cosine = math.log(qnd_error_sum(p, "cosine"))
        assert abs(log_cosine - log_formula) <= 0.05 * abs(log_formula)

    def test_unknown_probe_model(self) -> None:
        with pytest.raises(DomainError, match="probe model"):
            probe_intensity(np.arange(3), QubusParams(), "quartic")


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


class TestSampling:
    """Detector readings and conditioned photon numbers."""

    def test_vacuum_reads_zero(self) -> None:
        assert sample_qnd(0, QubusParams(), np.random.default_rng(0)).is_zero

    def test_bright_probe_reads_photons(self) -> None:
        rng = np.random.default_rng(1)
        readings = [sample_qnd(3, _params(4.0, 10.0), rng) for _ in range(200)]
        assert all(r.n == 3 for r in readings)

    def test_dark_detector_misses(self) -> None:
        rng = np.random.default_rng(2)
        assert sample_qnd(5, _params(4.0, 10.0, eta=0.0), rng).is_zero

    @pytest.mark.parametrize("mean", [0.1, 1.0, 32.0])
    def test_odd_branch_conditioned_on_click(self, mean: float) -> None:
        p = _params(math.sqrt(mean / 2), 10.0)
        rng = np.random.default_rng(3)
        draws = np.array([sample_odd_photons(p, rng, allow_zero=False) for _ in range(4000)])
        assert draws.min() >= 1
        expected = mean / -math.expm1(-mean)
        sd = math.sqrt(max(draws.var(), 1e-12) / len(draws))
        assert abs(draws.mean() - expected) < 5 * sd + 1e-9

    def test_allow_zero_is_plain_poisson(self) -> None:
        p = _params(math.sqrt(0.5), 10.0)
        rng = np.random.default_rng(4)
        draws = [sample_odd_photons(p, rng, allow_zero=True) for _ in range(4000)]
        zeros = draws.count(0) / len(draws)
        assert zeros == pytest.approx(math.exp(-1.0), abs=0.04)

    def test_empty_odd_branch_rejected(self) -> None:
        with pytest.raises(DomainError):
            sample_odd_photons(QubusParams(alpha=0.0), np.random.default_rng(0), allow_zero=False)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


class TestSweep:
    """Ranges, grids and CSV output."""

    def test_linspace_single_value(self) -> None:
        assert linspace_arg("2.5") == [2.5]

    def test_linspace_range(self) -> None:
        assert linspace_arg("0:1:3") == [0.0, 0.5, 1.0]

    @pytest.mark.parametrize("text", ["1:2", "a:b:c", "0:1:0", "x", "0:1:2.5"])
    def test_linspace_malformed(self, text: str) -> None:
        with pytest.raises(DomainError):
            linspace_arg(text)

    def test_grid_of_one_hundred(self) -> None:
        rows = sweep(
            linspace_arg("100:600:5"),
            linspace_arg("0.002:0.01:4"),
            linspace_arg("500:1500:5"),
            [1.0],
        )
        out = io.StringIO()
        assert write_sweep_csv(rows, out) == 100
        lines = out.getvalue().splitlines()
        assert lines[0] == ",".join(SWEEP_COLUMNS)
        assert len(lines) == 101

    def test_row_values_parse_back(self) -> None:
        out = io.StringIO()
        write_sweep_csv(sweep([400.0], [0.01], [1000.0], [0.0]), out)
        row = next(csv.DictReader(io.StringIO(out.getvalue())))
        assert float(row["formula"]) == 1.0
        assert float(row["sum_linearized"]) == pytest.approx(1.0)
        assert float(row["sum_cosine"]) == pytest.approx(1.0)

    def test_save_sweep(self, tmp_path: Path) -> None:
        path = tmp_path / "out" / "sweep.csv"
        assert save_sweep(sweep([400.0], [0.01], [1000.0], [1.0]), path) == 1
        assert path.read_text(encoding="utf-8").startswith("alpha,theta")
