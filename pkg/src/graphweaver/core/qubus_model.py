"""Coherent-state qubus and QND photon-number readout.

The qubus is a bright coherent beam whose phase picks up ``theta`` for each
coupled photon mode (cross-phase modulation).  After the phase shifters
and a 50:50 beam splitter the difference port holds ``|0>`` for
even-parity photon pairs and ``|+-sqrt(2) alpha sin(theta)>`` for
odd-parity pairs.  The QND module couples that port to a probe
``|gamma>`` and reads a non-resolving detector of efficiency ``eta``.

The detector is modelled as click / no-click on the probe difference port:
a click on a state with ``n >= 1`` photons reports ``nonzero(n)`` and the
protocol takes the parity of ``n`` from the true photon number.
"""

from __future__ import annotations

import cmath
import csv
import itertools
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, List, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from graphweaver.core.errors import DomainError

logger = logging.getLogger(__name__)

TAIL_CUTOFF = 1e-15
PROBE_MODELS = ("linearized", "cosine")
SWEEP_COLUMNS = ("alpha", "theta", "gamma", "eta", "formula", "sum_linearized", "sum_cosine")


@dataclass(frozen=True)
class QubusParams:
    """Qubus amplitude ``alpha``, XPM phase ``theta``, probe ``gamma``, detector ``eta``."""

    alpha: float = 400.0
    theta: float = 0.01
    gamma: float = 1000.0
    eta: float = 1.0

    def __post_init__(self) -> None:
        if not self.alpha >= 0.0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if not 0.0 < self.theta < math.pi / 2:
            raise DomainError(f"theta must lie in (0, pi/2), got {self.theta}")
        if not self.gamma >= 0.0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError(f"eta must lie in [0, 1], got {self.eta}")

    @property
    def beta(self) -> float:
        """Odd-branch amplitude ``sqrt(2) alpha sin(theta)`` on the difference port."""
        return math.sqrt(2.0) * self.alpha * math.sin(self.theta)

    @property
    def mean_photons(self) -> float:
        """Poisson mean ``|beta|^2`` of the odd branch."""
        return self.beta**2


# ---------------------------------------------------------------------------
# Beam transformations
# ---------------------------------------------------------------------------


def xpm_shift(amp: complex, theta: float) -> complex:
    """Phase shift from one cross-Kerr coupling (or a phase shifter for ``-theta``)."""
    return complex(amp) * cmath.exp(1j * theta)


def bs_50_50(a1: complex, a2: complex) -> tuple[complex, complex]:
    """``|a1>|a2> -> |(a1 - a2)/sqrt2>|(a1 + a2)/sqrt2>``."""
    s = math.sqrt(2.0)
    return (complex(a1) - complex(a2)) / s, (complex(a1) + complex(a2)) / s


def coherent_projection(beta: complex, n: int) -> complex:
    """Amplitude ``<n|beta> = exp(-|beta|^2/2) beta^n / sqrt(n!)``."""
    if n < 0:
        raise DomainError(f"photon number must be >= 0, got {n}")
    magnitude = abs(beta)
    if magnitude == 0.0:
        return 1.0 + 0j if n == 0 else 0j
    log_mag = -0.5 * magnitude**2 + n * math.log(magnitude) - 0.5 * float(gammaln(n + 1))
    return cmath.rect(math.exp(log_mag), n * cmath.phase(beta))


# ---------------------------------------------------------------------------
# Photon statistics
# ---------------------------------------------------------------------------


def poisson_pmf(mean_photons: float, n: int) -> float:
    """Probability of ``n`` photons in a coherent state with mean ``mean_photons``."""
    if mean_photons == 0.0:
        return 1.0 if n == 0 else 0.0
    return float(poisson.pmf(n, mean_photons))


def no_click_prob(zeta_sq: float, eta: float) -> float:
    """No-click probability ``exp(-eta |zeta|^2)`` of a coherent probe of intensity ``zeta_sq``."""
    return math.exp(-eta * zeta_sq)


def _truncation(mean_photons: float) -> int:
    if mean_photons == 0.0:
        return 0
    return int(poisson.isf(TAIL_CUTOFF, mean_photons)) + 1


def qnd_error_formula(p: QubusParams) -> float:
    """Closed-form QND error ``exp{-2 (1 - exp(-eta gamma^2 theta^2 / 2)) alpha^2 sin^2 theta}``."""
    contrast = -math.expm1(-0.5 * p.eta * p.gamma**2 * p.theta**2)
    return math.exp(-2.0 * contrast * p.alpha**2 * math.sin(p.theta) ** 2)


def probe_intensity(n: np.ndarray, p: QubusParams, probe_model: str) -> np.ndarray:
    """``|zeta_n|^2`` of the probe difference port for photon numbers *n*."""
    if probe_model == "linearized":
        return n * (p.gamma * p.theta) ** 2 / 2.0
    if probe_model == "cosine":
        return p.gamma**2 * (1.0 - np.cos(n * p.theta))
    raise DomainError(f"unknown probe model {probe_model!r}; expected one of {PROBE_MODELS}")


def qnd_error_sum(p: QubusParams, probe_model: str = "linearized") -> float:
    """Probability that the detector stays dark, summed over the odd-branch photon numbers."""
    mu = p.mean_photons
    n = np.arange(_truncation(mu) + 1)
    weights = poisson.pmf(n, mu) if mu > 0.0 else (n == 0).astype(float)
    dark = np.exp(-p.eta * probe_intensity(n.astype(float), p, probe_model))
    return float(min(1.0, np.sum(weights * dark)))


# ---------------------------------------------------------------------------
# Detector sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QndReading:
    """Detector verdict: ``n == 0`` means no click."""

    n: int

    @property
    def is_zero(self) -> bool:
        return self.n == 0


def sample_qnd(n_true: int, p: QubusParams, rng: np.random.Generator) -> QndReading:
    """Read the QND module for a qubus holding ``n_true`` photons."""
    if n_true == 0:
        return QndReading(0)
    zeta_sq = float(probe_intensity(np.array(float(n_true)), p, "cosine"))
    if rng.random() < no_click_prob(zeta_sq, p.eta):
        logger.debug("QND missed %d photons", n_true)
        return QndReading(0)
    return QndReading(n_true)


def sample_odd_photons(p: QubusParams, rng: np.random.Generator, allow_zero: bool) -> int:
    """Draw the odd-branch photon number; ``allow_zero=False`` conditions on ``n >= 1``."""
    mu = p.mean_photons
    if allow_zero:
        return int(rng.poisson(mu))
    if mu == 0.0:
        raise DomainError("the odd branch carries no photons when alpha sin(theta) = 0")
    p0 = math.exp(-mu)
    if p0 < 0.5:
        while True:
            n = int(rng.poisson(mu))
            if n >= 1:
                return n
    u = min(p0 + (1.0 - p0) * rng.random(), float(np.nextafter(1.0, 0.0)))
    return max(1, int(poisson.ppf(u, mu)))


# ---------------------------------------------------------------------------
# Parameter sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    theta: float
    gamma: float
    eta: float
    formula: float
    sum_linearized: float
    sum_cosine: float


def sweep(
    alphas: Sequence[float],
    thetas: Sequence[float],
    gammas: Sequence[float],
    etas: Sequence[float],
) -> Iterator[SweepRow]:
    """Evaluate the QND error three ways on the cartesian parameter grid."""
    for alpha, theta, gamma, eta in itertools.product(alphas, thetas, gammas, etas):
        params = QubusParams(alpha=alpha, theta=theta, gamma=gamma, eta=eta)
        yield SweepRow(
            alpha=alpha,
            theta=theta,
            gamma=gamma,
            eta=eta,
            formula=qnd_error_formula(params),
            sum_linearized=qnd_error_sum(params, "linearized"),
            sum_cosine=qnd_error_sum(params, "cosine"),
        )


def write_sweep_csv(rows: Iterable[SweepRow], out: IO[str]) -> int:
    """Write *rows* as CSV with a header; returns the number of data rows."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    count = 0
    for row in rows:
        writer.writerow([repr(getattr(row, column)) for column in SWEEP_COLUMNS])
        count += 1
    return count


def linspace_arg(text: str) -> List[float]:
    """Parse ``value`` or ``start:stop:num`` into a list of floats."""
    parts = text.split(":")
    if len(parts) not in (1, 3):
        raise DomainError(f"malformed range {text!r}; expected value or start:stop:num")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise DomainError(f"malformed range {text!r}: {exc}") from exc
    if num < 1:
        raise DomainError(f"range {text!r} needs at least one point")
    return [float(x) for x in np.linspace(start, stop, num)]


def save_sweep(rows: Iterable[SweepRow], path: Path) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        return write_sweep_csv(rows, f)
