"""Protocol session simulation: pulse preparation, analyzer sampling, tallies.

The gate stream is partitioned into fixed-size batches.  Batch k draws its
randomness from four dedicated PCG64 streams seeded as
SeedSequence(master_seed, spawn_key=(k, s)) with s = 0 (sender A preparation,
one uniform per gate), 1 (sender B preparation, one uniform per gate),
2 (polarization flips, one uniform per gate per channel with nonzero
misalignment, channel A first), 3 (detector outcome, one uniform per gate).
Counts merge additively as int64, so results are bit-identical for a fixed
(seed, pulses, batch_gates) regardless of how batches are spread over workers.

Cell indexing: intensity pair (ia, ib) with 0 = signal, 1 = decoy, 2 = vacuum,
and state codes (sa, sb) in H=0, V=1, +45=2, -45=3.  The flat cell index is
((ia * 3 + ib) * 4 + sa) * 4 + sb in [0, 144).  Detector outcomes are sampled
over the analyzer's 16 click patterns, then folded into the seven tallied
columns (c12, c34, c14, c23, c13, c24, other).  Mismatched-basis gates are
counted in pulses_sent but their detector outcomes are not tabulated (they
are discarded at sifting).
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import math

import numpy as np

from .bsa import (
    COINCIDENCE_PATTERNS,
    PATTERN_COUNT,
    BsaInput,
    DetectorModel,
    coherent_click_probs,
)
from .optics import (
    SOP_BY_CODE,
    ChannelModel,
    IntensityClass,
    ParameterError,
    attenuate,
    validate_classes,
)

N_CLASSES = 3
N_SOPS = 4
N_CELLS = N_CLASSES * N_CLASSES * N_SOPS * N_SOPS
DEFAULT_BATCH_GATES = 1_000_000

# Tally columns per cell, in serialization order.  The first four are the
# conclusive coincidence classes; "other" absorbs every remaining pattern.
COUNT_COLUMNS = ("c12", "c34", "c14", "c23", "c13", "c24", "other")
N_COLUMNS = len(COUNT_COLUMNS)
_COLUMN_BY_NAME = {name.upper(): k for k, name in enumerate(COUNT_COLUMNS[:-1])}
_FOLD = np.full(PATTERN_COUNT, N_COLUMNS - 1, dtype=np.int64)
for _name, _pattern in COINCIDENCE_PATTERNS.items():
    _FOLD[_pattern] = _COLUMN_BY_NAME[_name]

MODE_RANDOM = "random"
MODE_SWEEP = "sweep"

# Sweep mode cycles through the 72 agreeing-basis configurations gate by gate:
# 9 intensity pairs x 8 same-basis state pairs, rectilinear block first.
SWEEP_SOP_PAIRS: tuple[tuple[int, int], ...] = (
    (0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3),
)
SWEEP_SLOTS: tuple[tuple[int, int, int, int], ...] = tuple(
    (ia, ib, sa, sb)
    for ia in range(N_CLASSES)
    for ib in range(N_CLASSES)
    for sa, sb in SWEEP_SOP_PAIRS
)


@dataclasses.dataclass(frozen=True, slots=True)
class SessionConfig:
    """Full configuration of one simulated session.

    Attributes:
        pulses: number of gates (pulse pairs) to simulate.
        seed: master RNG seed.
        classes: (signal, decoy, vacuum) intensity classes.
        class_probs: per-gate selection probabilities for the three classes,
            applied independently at each sender.
        channel_a, channel_b: optical links from the two senders.
        detector: detector model at the analyzer.
        rect_prob: per-sender probability of choosing the rectilinear basis
            in random mode.
        mode: "random" (independent choices per gate) or "sweep" (deterministic
            cycle through the 72 agreeing-basis configurations).
        batch_gates: batch size of the deterministic gate partition.  Part of
            the reproducibility contract: results are bit-identical only for
            equal (seed, pulses, batch_gates).
        repetition_rate_hz: gate rate, used only to convert to wall-clock units.
    """

    pulses: int
    seed: int
    classes: tuple[IntensityClass, IntensityClass, IntensityClass]
    class_probs: tuple[float, float, float]
    channel_a: ChannelModel
    channel_b: ChannelModel
    detector: DetectorModel
    rect_prob: float = 0.5
    mode: str = MODE_RANDOM
    batch_gates: int = DEFAULT_BATCH_GATES
    repetition_rate_hz: float = 1e6

    def __post_init__(self) -> None:
        if self.pulses < 1:
            raise ParameterError(f"pulses must be >= 1, got {self.pulses!r}")
        if self.batch_gates < 1:
            raise ParameterError(f"batch_gates must be >= 1, got {self.batch_gates!r}")
        validate_classes(self.classes)
        probs = self.class_probs
        if len(probs) != N_CLASSES or any(p < 0.0 for p in probs):
            raise ParameterError(f"class_probs must be 3 probabilities >= 0, got {probs!r}")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ParameterError(f"class_probs must sum to 1, got {probs!r}")
        if not 0.0 <= self.rect_prob <= 1.0:
            raise ParameterError(f"rect_prob must lie in [0, 1], got {self.rect_prob!r}")
        if self.mode not in (MODE_RANDOM, MODE_SWEEP):
            raise ParameterError(
                f"mode must be {MODE_RANDOM!r} or {MODE_SWEEP!r}, got {self.mode!r}"
            )
        if not self.repetition_rate_hz > 0.0:
            raise ParameterError(
                f"repetition_rate_hz must be > 0, got {self.repetition_rate_hz!r}"
            )


@dataclasses.dataclass(eq=False)
class CountTables:
    """Per-cell pulse and coincidence tallies of one session.

    pulses_sent has shape (3, 3, 4, 4); counts has shape (3, 3, 4, 4, 7) with
    columns ordered as COUNT_COLUMNS.  Click counts are tabulated only for
    agreeing-basis cells; mismatched-basis cells carry pulses_sent but
    all-zero counts.
    """

    class_labels: tuple[str, str, str]
    class_mus: tuple[float, float, float]
    pulses_total: int
    seed: int
    mode: str
    pulses_sent: np.ndarray
    counts: np.ndarray
    sifted: bool = False
    repetition_rate_hz: float = 1e6

    def __post_init__(self) -> None:
        self.pulses_sent = np.asarray(self.pulses_sent, dtype=np.int64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.pulses_sent.shape != (N_CLASSES, N_CLASSES, N_SOPS, N_SOPS):
            raise ParameterError(
                f"pulses_sent must have shape (3, 3, 4, 4), got {self.pulses_sent.shape!r}"
            )
        if self.counts.shape != (N_CLASSES, N_CLASSES, N_SOPS, N_SOPS, N_COLUMNS):
            raise ParameterError(
                f"counts must have shape (3, 3, 4, 4, 7), got {self.counts.shape!r}"
            )
        if not self.repetition_rate_hz > 0.0:
            raise ParameterError(
                f"repetition_rate_hz must be > 0, got {self.repetition_rate_hz!r}"
            )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CountTables):
            return NotImplemented
        return (
            self.class_labels == other.class_labels
            and self.class_mus == other.class_mus
            and self.pulses_total == other.pulses_total
            and self.seed == other.seed
            and self.mode == other.mode
            and self.sifted == other.sifted
            and self.repetition_rate_hz == other.repetition_rate_hz
            and np.array_equal(self.pulses_sent, other.pulses_sent)
            and np.array_equal(self.counts, other.counts)
        )

    def copy(self) -> "CountTables":
        return CountTables(
            class_labels=self.class_labels,
            class_mus=self.class_mus,
            pulses_total=self.pulses_total,
            seed=self.seed,
            mode=self.mode,
            pulses_sent=self.pulses_sent.copy(),
            counts=self.counts.copy(),
            sifted=self.sifted,
            repetition_rate_hz=self.repetition_rate_hz,
        )

    def coincidence(self, ia: int, ib: int, sa: int, sb: int, name: str) -> int:
        """Count of one named two-detector coincidence class in a cell."""
        return int(self.counts[ia, ib, sa, sb, _COLUMN_BY_NAME[name.upper()]])

    def conclusive_sum(self, ia: int, ib: int, sa: int, sb: int) -> int:
        """C12 + C34 + C14 + C23 in a cell."""
        return int(self.counts[ia, ib, sa, sb, :4].sum())


@dataclasses.dataclass(frozen=True)
class _EngineSpec:
    """Picklable precomputed sampling tables for the batch workers."""

    pulses: int
    seed: int
    batch_gates: int
    mode: str
    prep_cum: np.ndarray
    mis_a: float
    mis_b: float
    pattern_grid: np.ndarray
    sweep_slots: np.ndarray


def _cell_pattern_cdfs(config: SessionConfig) -> np.ndarray:
    """Cumulative 16-pattern distributions for all 144 cells, first 15 entries."""
    mus_a = [attenuate(c.mu, config.channel_a.loss_db) for c in config.classes]
    mus_b = [attenuate(c.mu, config.channel_b.loss_db) for c in config.classes]
    overlap = config.channel_a.temporal_overlap * config.channel_b.temporal_overlap
    cdf15 = np.empty((N_CELLS, PATTERN_COUNT - 1))
    for ia in range(N_CLASSES):
        for ib in range(N_CLASSES):
            for sa in range(N_SOPS):
                for sb in range(N_SOPS):
                    response = coherent_click_probs(
                        BsaInput(
                            mu_a=mus_a[ia],
                            mu_b=mus_b[ib],
                            sop_a=SOP_BY_CODE[sa],
                            sop_b=SOP_BY_CODE[sb],
                            overlap=overlap,
                        ),
                        config.detector,
                    )
                    probs = response.pattern_probs
                    cell = ((ia * N_CLASSES + ib) * N_SOPS + sa) * N_SOPS + sb
                    cdf15[cell] = np.cumsum(probs / probs.sum())[:-1]
    return cdf15


def _pattern_grid(cdf15: np.ndarray) -> np.ndarray:
    """Flatten per-cell pattern CDFs into one sorted grid for searchsorted.

    Entry (cell * 15 + k) holds cell + cdf15[cell, k], so looking up
    cell + uniform with side="right" and subtracting cell * 15 inverts the
    cell's CDF in a single vectorized call.
    """
    return (np.arange(cdf15.shape[0])[:, None] + cdf15).ravel()


def _prep_cum(class_probs, rect_prob: float) -> np.ndarray:
    """Joint CDF over the 12 (intensity, state) preparation outcomes."""
    sop_probs = np.array(
        [rect_prob / 2.0, rect_prob / 2.0, (1.0 - rect_prob) / 2.0, (1.0 - rect_prob) / 2.0]
    )
    cum = np.cumsum(np.outer(np.asarray(class_probs, dtype=float), sop_probs).ravel())
    cum[-1] = 1.0
    return cum


def _batch_stream(seed: int, batch: int, stream: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(batch, stream)))
    )


def _run_batch(spec: _EngineSpec, batch: int) -> tuple[np.ndarray, np.ndarray]:
    start = batch * spec.batch_gates
    n_gates = min(spec.batch_gates, spec.pulses - start)
    gen_flip = _batch_stream(spec.seed, batch, 2)
    gen_det = _batch_stream(spec.seed, batch, 3)

    if spec.mode == MODE_RANDOM:
        gen_a = _batch_stream(spec.seed, batch, 0)
        gen_b = _batch_stream(spec.seed, batch, 1)
        prep_a = np.searchsorted(spec.prep_cum, gen_a.random(n_gates), side="right")
        prep_b = np.searchsorted(spec.prep_cum, gen_b.random(n_gates), side="right")
        ia = prep_a >> 2
        ib = prep_b >> 2
        sop_a = prep_a & 3
        sop_b = prep_b & 3
    else:
        slot = (start + np.arange(n_gates, dtype=np.int64)) % len(SWEEP_SLOTS)
        ia = spec.sweep_slots[slot, 0]
        ib = spec.sweep_slots[slot, 1]
        sop_a = spec.sweep_slots[slot, 2].copy()
        sop_b = spec.sweep_slots[slot, 3].copy()

    # Tables are indexed by the prepared states; misalignment flips only the
    # states the analyzer sees.  Flips stay within the prepared basis.
    phys_a = sop_a
    phys_b = sop_b
    if spec.mis_a > 0.0:
        phys_a = sop_a ^ (gen_flip.random(n_gates) < spec.mis_a)
    if spec.mis_b > 0.0:
        phys_b = sop_b ^ (gen_flip.random(n_gates) < spec.mis_b)

    cell = ((ia * N_CLASSES + ib) * N_SOPS + sop_a) * N_SOPS + sop_b
    phys_cell = ((ia * N_CLASSES + ib) * N_SOPS + phys_a) * N_SOPS + phys_b
    pulses_sent = np.bincount(cell, minlength=N_CELLS)

    uniforms = gen_det.random(n_gates)
    agree = (sop_a ^ sop_b) < 2
    cells_kept = cell[agree]
    phys_kept = phys_cell[agree]
    lookup = np.searchsorted(spec.pattern_grid, phys_kept + uniforms[agree], side="right")
    patterns = lookup - phys_kept * (PATTERN_COUNT - 1)
    counts = np.bincount(
        cells_kept * N_COLUMNS + _FOLD[patterns], minlength=N_CELLS * N_COLUMNS
    )
    return pulses_sent, counts


def _run_batch_range(
    spec: _EngineSpec, batches: list[int]
) -> tuple[np.ndarray, np.ndarray]:
    pulses_sent = np.zeros(N_CELLS, dtype=np.int64)
    counts = np.zeros(N_CELLS * N_COLUMNS, dtype=np.int64)
    for batch in batches:
        batch_pulses, batch_counts = _run_batch(spec, batch)
        pulses_sent += batch_pulses
        counts += batch_counts
    return pulses_sent, counts


def run_session(config: SessionConfig, workers: int = 1) -> CountTables:
    """Simulate a full session and return its count tables.

    Args:
        config: session configuration.
        workers: process count for batch execution.  The result is
            bit-identical for any worker count.
    """
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers!r}")
    spec = _EngineSpec(
        pulses=config.pulses,
        seed=config.seed,
        batch_gates=config.batch_gates,
        mode=config.mode,
        prep_cum=_prep_cum(config.class_probs, config.rect_prob),
        mis_a=config.channel_a.misalignment,
        mis_b=config.channel_b.misalignment,
        pattern_grid=_pattern_grid(_cell_pattern_cdfs(config)),
        sweep_slots=np.asarray(SWEEP_SLOTS, dtype=np.int64),
    )
    n_batches = (config.pulses + config.batch_gates - 1) // config.batch_gates
    assignments = [list(range(w, n_batches, workers)) for w in range(workers)]
    assignments = [a for a in assignments if a]

    pulses_sent = np.zeros(N_CELLS, dtype=np.int64)
    counts = np.zeros(N_CELLS * N_COLUMNS, dtype=np.int64)
    if len(assignments) <= 1:
        pulses_sent, counts = _run_batch_range(spec, list(range(n_batches)))
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=len(assignments)) as pool:
            futures = [pool.submit(_run_batch_range, spec, a) for a in assignments]
            for future in futures:
                part_pulses, part_counts = future.result()
                pulses_sent += part_pulses
                counts += part_counts

    return CountTables(
        class_labels=tuple(c.label for c in config.classes),
        class_mus=tuple(c.mu for c in config.classes),
        pulses_total=config.pulses,
        seed=config.seed,
        mode=config.mode,
        pulses_sent=pulses_sent.reshape(N_CLASSES, N_CLASSES, N_SOPS, N_SOPS),
        counts=counts.reshape(N_CLASSES, N_CLASSES, N_SOPS, N_SOPS, N_COLUMNS),
        repetition_rate_hz=config.repetition_rate_hz,
    )


def sift(tables: CountTables) -> CountTables:
    """Drop mismatched-basis cells, keeping agreeing-basis pulses and counts."""
    out = tables.copy()
    for sa in range(N_SOPS):
        for sb in range(N_SOPS):
            if (sa >> 1) != (sb >> 1):
                out.pulses_sent[:, :, sa, sb] = 0
                out.counts[:, :, sa, sb, :] = 0
    out.sifted = True
    return out


@dataclasses.dataclass(frozen=True, slots=True)
class HomScanConfig:
    """Two-pulse interference scan configuration.

    Both sources send H-polarized pulses of equal mean photon number mu (taken
    at the analyzer).  The temporal overlap at relative delay tau follows
    xi(tau) = (1 - |tau| / pulse_width_ns)^2 for |tau| < pulse_width_ns, else 0.
    """

    mu: float
    pulse_width_ns: float
    delays_ns: tuple[float, ...]
    pulses_per_point: int
    seed: int
    detector: DetectorModel

    def __post_init__(self) -> None:
        if not math.isfinite(self.mu) or self.mu < 0.0:
            raise ParameterError(f"mu must be finite and >= 0, got {self.mu!r}")
        if not self.pulse_width_ns > 0.0:
            raise ParameterError(
                f"pulse_width_ns must be > 0, got {self.pulse_width_ns!r}"
            )
        if not self.delays_ns or any(not math.isfinite(t) for t in self.delays_ns):
            raise ParameterError("delays_ns must be a non-empty tuple of finite floats")
        if self.pulses_per_point < 1:
            raise ParameterError(
                f"pulses_per_point must be >= 1, got {self.pulses_per_point!r}"
            )


@dataclasses.dataclass(frozen=True)
class HomScanResult:
    """Scan of the cross-port same-polarization coincidence dip.

    Rates are per gate for the C13 coincidence class.  visibility[k] is
    (rate_distinguishable - rate_indistinguishable) / rate_distinguishable at
    delays_ns[k], with a propagated binomial standard error.
    """

    delays_ns: np.ndarray
    rate_indistinguishable: np.ndarray
    rate_distinguishable: np.ndarray
    visibility: np.ndarray
    visibility_stderr: np.ndarray
    pulse_width_ns: float

    def dip_width_ns(self, threshold: float = 0.0125) -> float:
        """Full width of the above-threshold region containing the dip maximum.

        The default threshold is 2.5% of the ideal zero-delay ceiling 0.5.
        Starting from the highest-visibility point, the scan is walked outward
        on both sides to the first threshold crossing, located by linear
        interpolation.  Isolated noise excursions far from the dip do not
        contribute.  Returns nan when the scan does not bracket the dip.
        """
        order = np.argsort(self.delays_ns)
        tau = self.delays_ns[order]
        vis = np.where(np.isfinite(self.visibility[order]), self.visibility[order], 0.0)
        peak = int(np.argmax(vis))
        if vis[peak] <= threshold:
            return float("nan")

        def cross(inner: int, outer: int) -> float:
            v0, v1 = vis[inner], vis[outer]
            return float(tau[inner] + (tau[outer] - tau[inner]) * (v0 - threshold) / (v0 - v1))

        left = float("nan")
        for k in range(peak, 0, -1):
            if vis[k - 1] <= threshold:
                left = cross(k, k - 1)
                break
        right = float("nan")
        for k in range(peak, len(vis) - 1):
            if vis[k + 1] <= threshold:
                right = cross(k, k + 1)
                break
        return right - left


def hom_scan(config: HomScanConfig) -> HomScanResult:
    """Run the interference dip scan and return per-delay rates and visibility."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
    sop = SOP_BY_CODE[0]
    c13 = COINCIDENCE_PATTERNS["C13"]
    n = config.pulses_per_point

    delays = np.asarray(config.delays_ns, dtype=float)
    rate_ind = np.empty(delays.shape)
    rate_dis = np.empty(delays.shape)
    vis = np.empty(delays.shape)
    stderr = np.empty(delays.shape)
    p_dis = coherent_click_probs(
        BsaInput(config.mu, config.mu, sop, sop, overlap=0.0), config.detector
    ).pattern_probs[c13]
    for k, tau in enumerate(delays):
        frac = max(0.0, 1.0 - abs(tau) / config.pulse_width_ns)
        overlap = frac * frac
        p_ind = coherent_click_probs(
            BsaInput(config.mu, config.mu, sop, sop, overlap=overlap), config.detector
        ).pattern_probs[c13]
        c_ind = int(rng.binomial(n, p_ind))
        c_dis = int(rng.binomial(n, p_dis))
        r_ind = c_ind / n
        r_dis = c_dis / n
        rate_ind[k] = r_ind
        rate_dis[k] = r_dis
        if c_dis == 0:
            vis[k] = float("nan")
            stderr[k] = float("nan")
            continue
        vis[k] = (r_dis - r_ind) / r_dis
        var_ind = r_ind * (1.0 - r_ind) / n
        var_dis = r_dis * (1.0 - r_dis) / n
        stderr[k] = math.sqrt(
            var_ind / r_dis**2 + (r_ind**2) * var_dis / r_dis**4
        )
    return HomScanResult(
        delays_ns=delays,
        rate_indistinguishable=rate_ind,
        rate_distinguishable=rate_dis,
        visibility=vis,
        visibility_stderr=stderr,
        pulse_width_ns=config.pulse_width_ns,
    )
