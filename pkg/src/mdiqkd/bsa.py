"""Linear-optics Bell-state analyzer: click statistics and outcome classification.

Layout: a 50:50 coupler with transmission amplitude 1/sqrt(2) and reflection
amplitude i/sqrt(2), followed by one polarizing splitter per output port.
Detectors are numbered 1..4 as (port1, H), (port1, V), (port2, H), (port2, V).

Outcome rule over the 16 click patterns:
  * exactly detectors {1, 2} or exactly {3, 4} fire: PSI_PLUS
  * exactly detectors {1, 4} or exactly {2, 3} fire: PSI_MINUS
  * every other pattern, including no clicks: INCONCLUSIVE

Temporal-mode model: each source occupies a common mode with amplitude weight
sqrt(overlap) plus its own leftover mode with weight sqrt(1 - overlap).  In the
common mode the two sources interfere with a uniformly random relative phase;
leftover-mode intensities add incoherently.  Click probabilities for coherent
inputs are exact: the per-phase 16-pattern distribution is a product of
independent per-detector click laws p = 1 - (1 - dark) exp(-efficiency * n),
and the phase average is taken with a periodic trapezoid rule whose error
decays geometrically (Fourier coefficients fall off as modified Bessel I_k).
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np

from .optics import ParameterError, PolarizationState

DIST_TOL = 1e-9
PHASE_NODES = 128
MAX_FOCK_PHOTONS = 4
PATTERN_COUNT = 16

# Pattern index encodes detector d (1-based) as bit d-1.
PSI_PLUS_PATTERNS = (0b0011, 0b1100)
PSI_MINUS_PATTERNS = (0b1001, 0b0110)
COINCIDENCE_PATTERNS: dict[str, int] = {
    "C12": 0b0011,
    "C34": 0b1100,
    "C14": 0b1001,
    "C23": 0b0110,
    "C13": 0b0101,
    "C24": 0b1010,
}

_BITS = ((np.arange(PATTERN_COUNT)[:, None] >> np.arange(4)[None, :]) & 1).astype(bool)


class UnsupportedSizeError(ValueError):
    """Requested Fock expansion exceeds the brute-force photon-number bound."""


class BellOutcome(enum.Enum):
    PSI_PLUS = "psi_plus"
    PSI_MINUS = "psi_minus"
    INCONCLUSIVE = "inconclusive"


@dataclasses.dataclass(frozen=True, slots=True)
class ClickPattern:
    """Which of the four detectors fired in one gate."""

    d1: bool
    d2: bool
    d3: bool
    d4: bool

    @property
    def index(self) -> int:
        return int(self.d1) | int(self.d2) << 1 | int(self.d3) << 2 | int(self.d4) << 3

    @classmethod
    def from_index(cls, index: int) -> "ClickPattern":
        if not 0 <= index < PATTERN_COUNT:
            raise ParameterError(f"pattern index must lie in [0, 16), got {index!r}")
        return cls(bool(index & 1), bool(index & 2), bool(index & 4), bool(index & 8))

    def fired(self) -> tuple[int, ...]:
        """Detector numbers (1-based) that clicked."""
        return tuple(d + 1 for d in range(4) if (self.index >> d) & 1)


@dataclasses.dataclass(frozen=True, slots=True)
class DetectorModel:
    """Threshold single-photon detector with efficiency and dark counts.

    Attributes:
        efficiency: detection efficiency in (0, 1].
        dark_prob: dark-count probability per gate per detector, in
            [0, max_dark_prob).
        max_dark_prob: sanity ceiling for dark_prob, default 0.01.
    """

    efficiency: float = 1.0
    dark_prob: float = 0.0
    max_dark_prob: float = 0.01

    def __post_init__(self) -> None:
        if not 0.0 < self.efficiency <= 1.0:
            raise ParameterError(
                f"efficiency must lie in (0, 1], got {self.efficiency!r}"
            )
        if not 0.0 < self.max_dark_prob <= 1.0:
            raise ParameterError(
                f"max_dark_prob must lie in (0, 1], got {self.max_dark_prob!r}"
            )
        if not 0.0 <= self.dark_prob < self.max_dark_prob:
            raise ParameterError(
                f"dark_prob must lie in [0, {self.max_dark_prob!r}), got {self.dark_prob!r}"
            )


@dataclasses.dataclass(frozen=True, slots=True)
class BsaInput:
    """Two incoming pulses at the analyzer plus their shared temporal overlap."""

    mu_a: float
    mu_b: float
    sop_a: PolarizationState
    sop_b: PolarizationState
    overlap: float = 1.0

    def __post_init__(self) -> None:
        for name, mu in (("mu_a", self.mu_a), ("mu_b", self.mu_b)):
            if not math.isfinite(mu) or mu < 0.0:
                raise ParameterError(f"{name} must be finite and >= 0, got {mu!r}")
        if not 0.0 <= self.overlap <= 1.0:
            raise ParameterError(f"overlap must lie in [0, 1], got {self.overlap!r}")


def classify_outcome(pattern: ClickPattern | int) -> BellOutcome:
    """Map a click pattern to its announced Bell outcome."""
    index = pattern.index if isinstance(pattern, ClickPattern) else int(pattern)
    if not 0 <= index < PATTERN_COUNT:
        raise ParameterError(f"pattern index must lie in [0, 16), got {index!r}")
    if index in PSI_PLUS_PATTERNS:
        return BellOutcome.PSI_PLUS
    if index in PSI_MINUS_PATTERNS:
        return BellOutcome.PSI_MINUS
    return BellOutcome.INCONCLUSIVE


OUTCOME_BY_PATTERN: tuple[BellOutcome, ...] = tuple(
    classify_outcome(i) for i in range(PATTERN_COUNT)
)


@dataclasses.dataclass(frozen=True)
class BsaResponse:
    """Distribution over the 16 click patterns for one analyzer input."""

    pattern_probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.pattern_probs, dtype=float)
        if probs.shape != (PATTERN_COUNT,):
            raise ParameterError(
                f"pattern_probs must have shape (16,), got {probs.shape!r}"
            )
        if np.any(probs < -DIST_TOL) or abs(float(probs.sum()) - 1.0) > DIST_TOL:
            raise ParameterError("pattern_probs must be a probability distribution")
        object.__setattr__(self, "pattern_probs", np.clip(probs, 0.0, None))

    @property
    def marginals(self) -> np.ndarray:
        """Per-detector click probabilities implied by the pattern distribution."""
        return np.array(
            [float(self.pattern_probs[_BITS[:, d]].sum()) for d in range(4)]
        )

    @property
    def psi_plus_prob(self) -> float:
        return float(sum(self.pattern_probs[i] for i in PSI_PLUS_PATTERNS))

    @property
    def psi_minus_prob(self) -> float:
        return float(sum(self.pattern_probs[i] for i in PSI_MINUS_PATTERNS))

    @property
    def conclusive_prob(self) -> float:
        return self.psi_plus_prob + self.psi_minus_prob

    @property
    def outcome_probs(self) -> dict[BellOutcome, float]:
        plus, minus = self.psi_plus_prob, self.psi_minus_prob
        return {
            BellOutcome.PSI_PLUS: plus,
            BellOutcome.PSI_MINUS: minus,
            BellOutcome.INCONCLUSIVE: 1.0 - plus - minus,
        }

    @property
    def conditional_fractions(self) -> dict[BellOutcome, float]:
        """Bell fractions conditioned on a conclusive outcome (0, 0 if none)."""
        plus, minus = self.psi_plus_prob, self.psi_minus_prob
        total = plus + minus
        if total <= 0.0:
            return {BellOutcome.PSI_PLUS: 0.0, BellOutcome.PSI_MINUS: 0.0}
        return {BellOutcome.PSI_PLUS: plus / total, BellOutcome.PSI_MINUS: minus / total}


def _detector_amplitudes(
    sop_a: PolarizationState, sop_b: PolarizationState
) -> tuple[np.ndarray, np.ndarray]:
    """Unit-amplitude transfer coefficients of each source onto the 4 detectors."""
    inv = 1.0 / math.sqrt(2.0)
    a = np.array(
        [inv * sop_a.amp_h, inv * sop_a.amp_v, 1j * inv * sop_a.amp_h, 1j * inv * sop_a.amp_v]
    )
    b = np.array(
        [1j * inv * sop_b.amp_h, 1j * inv * sop_b.amp_v, inv * sop_b.amp_h, inv * sop_b.amp_v]
    )
    return a, b


def coherent_click_probs(
    inp: BsaInput, detector: DetectorModel, phase_nodes: int = PHASE_NODES
) -> BsaResponse:
    """Exact click-pattern distribution for two phase-randomized coherent pulses.

    Args:
        inp: the two mean photon numbers, states, and shared temporal overlap.
        detector: detector model applied identically to all four detectors.
        phase_nodes: quadrature nodes for the relative-phase average; raised
            automatically when large mean photon numbers need more.

    Returns:
        BsaResponse over the 16 click patterns (marginals derivable from it).
    """
    if phase_nodes < 8:
        raise ParameterError(f"phase_nodes must be >= 8, got {phase_nodes!r}")
    amp_a, amp_b = _detector_amplitudes(inp.sop_a, inp.sop_b)
    xi = inp.overlap
    # Interference strength sets the Fourier bandwidth of the integrand.
    strength = detector.efficiency * xi * math.sqrt(inp.mu_a * inp.mu_b)
    nodes = max(phase_nodes, 64 + int(16.0 * strength))
    theta = 2.0 * math.pi * np.arange(nodes) / nodes

    own = (1.0 - xi) * (
        inp.mu_a * np.abs(amp_a) ** 2 + inp.mu_b * np.abs(amp_b) ** 2
    )
    common_amp = (
        math.sqrt(xi * inp.mu_a) * amp_a[None, :]
        + np.exp(1j * theta)[:, None] * math.sqrt(xi * inp.mu_b) * amp_b[None, :]
    )
    n_mean = np.abs(common_amp) ** 2 + own[None, :]
    p_click = 1.0 - (1.0 - detector.dark_prob) * np.exp(-detector.efficiency * n_mean)

    probs = np.ones((nodes, PATTERN_COUNT))
    for d in range(4):
        col = p_click[:, d][:, None]
        probs *= np.where(_BITS[:, d][None, :], col, 1.0 - col)
    return BsaResponse(pattern_probs=probs.mean(axis=0))


def _apply_creation(
    poly: dict[tuple[int, ...], complex], coeffs: np.ndarray
) -> dict[tuple[int, ...], complex]:
    """Multiply a creation-operator polynomial by sum_j coeffs[j] e_j^dagger."""
    out: dict[tuple[int, ...], complex] = {}
    nonzero = [(j, c) for j, c in enumerate(coeffs) if c != 0.0]
    for occ, value in poly.items():
        for j, c in nonzero:
            new_occ = occ[:j] + (occ[j] + 1,) + occ[j + 1 :]
            out[new_occ] = out.get(new_occ, 0.0) + value * c
    return out


def fock_bsa_oracle(
    photons_a: int,
    photons_b: int,
    sop_a: PolarizationState,
    sop_b: PolarizationState,
    overlap: float = 1.0,
) -> BsaResponse:
    """Brute-force photon-number reference for the analyzer with ideal detectors.

    Expands (A^dagger)^m (B^dagger)^n |0> over 12 orthonormal modes
    (4 detectors x {common, leftover-A, leftover-B}) and tallies the exact
    click-pattern distribution assuming unit efficiency and no dark counts.

    Args:
        photons_a, photons_b: Fock photon numbers, m + n <= 4.
        sop_a, sop_b: source polarization states.
        overlap: shared temporal-overlap parameter in [0, 1].

    Returns:
        BsaResponse with the exact 16-pattern distribution.
    """
    for name, k in (("photons_a", photons_a), ("photons_b", photons_b)):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ParameterError(f"{name} must be a non-negative integer, got {k!r}")
    if photons_a + photons_b > MAX_FOCK_PHOTONS:
        raise UnsupportedSizeError(
            f"total photon number {photons_a + photons_b} exceeds the supported "
            f"brute-force bound {MAX_FOCK_PHOTONS}"
        )
    if not 0.0 <= overlap <= 1.0:
        raise ParameterError(f"overlap must lie in [0, 1], got {overlap!r}")

    amp_a, amp_b = _detector_amplitudes(sop_a, sop_b)
    root_common = math.sqrt(overlap)
    root_left = math.sqrt(1.0 - overlap)
    # Mode order per detector d: 3d = common, 3d+1 = leftover-A, 3d+2 = leftover-B.
    coeff_a = np.zeros(12, dtype=complex)
    coeff_b = np.zeros(12, dtype=complex)
    for d in range(4):
        coeff_a[3 * d] = root_common * amp_a[d]
        coeff_a[3 * d + 1] = root_left * amp_a[d]
        coeff_b[3 * d] = root_common * amp_b[d]
        coeff_b[3 * d + 2] = root_left * amp_b[d]

    poly: dict[tuple[int, ...], complex] = {(0,) * 12: 1.0 + 0.0j}
    for _ in range(photons_a):
        poly = _apply_creation(poly, coeff_a)
    for _ in range(photons_b):
        poly = _apply_creation(poly, coeff_b)

    norm = math.factorial(photons_a) * math.factorial(photons_b)
    pattern = np.zeros(PATTERN_COUNT)
    for occ, value in poly.items():
        weight = 1.0
        for k in occ:
            weight *= math.factorial(k)
        prob = (abs(value) ** 2) * weight / norm
        index = 0
        for d in range(4):
            if occ[3 * d] + occ[3 * d + 1] + occ[3 * d + 2] > 0:
                index |= 1 << d
        pattern[index] += prob
    return BsaResponse(pattern_probs=pattern)
