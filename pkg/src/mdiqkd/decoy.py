"""Decoy-state bounds via linear programming and secret-key accounting.

Gain and error matrices are indexed by intensity class (0 = signal, 1 = decoy,
2 = vacuum) for each sender.  The truncated photon-number expansion keeps
joint numbers (m, n) with m, n <= truncation and brackets each measured gain:

    Q_ij - T_ij <= sum_{m,n} P_m(mu_i) P_n(mu_j) Y^{mn} <= Q_ij

where T_ij is the Poisson mass outside the truncation box (all yields lie in
[0, 1], so the discarded terms contribute between 0 and T_ij).  Error-weighted
yields (YE)^{mn} = Y^{mn} e^{mn} obey the same brackets against Q_ij E_ij and
are coupled by 0 <= (YE)^{mn} <= Y^{mn} <= 1.  The single-photon error bound
divides the maximal (YE)^{11} by the minimal diagonal-basis Y^{11}.

Only the optimal values of the programs are contractual; the reported yield
surfaces are one optimal vertex and may differ between solver versions.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.optimize import linprog

from .optics import ParameterError, poisson_pmf

DEFAULT_TRUNCATION = 7
DEFAULT_F_EC = 1.164
_SLACK_TOL = 1e-9
_DENOM_FLOOR = 1e-15


class InfeasibleModelError(RuntimeError):
    """No yield surface is consistent with the supplied gain/error matrices.

    Attributes:
        violations: list of (matrix, i, j, slack) naming the brackets that
            cannot be met and the minimal total slack assigned to each.
    """

    def __init__(self, message: str, violations: list[tuple[str, int, int, float]]):
        super().__init__(message)
        self.violations = violations


class DegenerateBoundError(RuntimeError):
    """The single-photon yield lower bound vanished, so no error bound exists."""


class InsufficientCountsError(ValueError):
    """A cell required by the analysis has no recorded pulses."""


@dataclasses.dataclass(eq=False)
class GainErrorMatrices:
    """Measured per-intensity-pair gains and error rates in both bases.

    Attributes:
        mus: (signal, decoy, vacuum) mean photon numbers, signal > decoy > 0,
            vacuum exactly 0.
        q_rect, q_diag: 3x3 gain matrices, entries in [0, 1].
        e_rect, e_diag: 3x3 error-rate matrices, entries in [0, 1].
    """

    mus: tuple[float, float, float]
    q_rect: np.ndarray
    q_diag: np.ndarray
    e_rect: np.ndarray
    e_diag: np.ndarray

    def __post_init__(self) -> None:
        if len(self.mus) != 3:
            raise ParameterError(f"mus must have 3 entries, got {self.mus!r}")
        signal, decoy, vacuum = self.mus
        if vacuum != 0.0:
            raise ParameterError(f"vacuum mu must be exactly 0, got {vacuum!r}")
        if not signal > decoy > 0.0:
            raise ParameterError(
                f"intensities must satisfy signal > decoy > 0, got {self.mus!r}"
            )
        for name in ("q_rect", "q_diag", "e_rect", "e_diag"):
            matrix = np.asarray(getattr(self, name), dtype=float)
            if matrix.shape != (3, 3):
                raise ParameterError(f"{name} must have shape (3, 3), got {matrix.shape!r}")
            if np.any(~np.isfinite(matrix)) or np.any(matrix < 0.0) or np.any(matrix > 1.0):
                raise ParameterError(f"{name} entries must be finite and lie in [0, 1]")
            setattr(self, name, matrix)


@dataclasses.dataclass(frozen=True)
class YieldSolution:
    """Optimal-vertex yield surfaces from the bounding programs.

    Shapes are (truncation + 1, truncation + 1).  ye_diag holds the
    error-weighted yields of the diagonal-basis program.  The surfaces are
    diagnostic only; bounds are the contractual outputs.
    """

    y_rect: np.ndarray
    y_diag: np.ndarray
    ye_diag: np.ndarray


@dataclasses.dataclass(frozen=True)
class YieldBound:
    """Result of the single-photon yield program: bound plus its vertex."""

    value: float
    surface: np.ndarray


@dataclasses.dataclass(frozen=True)
class ErrorBound:
    """Result of the single-photon error program."""

    value: float
    y11_diag_lower: float
    y_surface: np.ndarray
    ye_surface: np.ndarray


@dataclasses.dataclass(frozen=True)
class DecoyResult:
    """Full analysis output: bounds, reconstructed totals, and the key rate."""

    y11_lower: float
    e11_upper: float
    q11: float
    q_rect_measured: float
    q_rect_reconstructed: float
    q_rect_global: float
    e_rect_global: float
    rate: float
    f_ec: float
    truncation: int
    mus: tuple[float, float, float]
    solution: YieldSolution
    warnings: tuple[str, ...]


def shannon_entropy(p: float) -> float:
    """Binary entropy H2(p) in bits, with H2(0) = H2(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"entropy argument must lie in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def single_photon_gain(y11: float, mu_signal: float) -> float:
    """Gain of the (1, 1) photon component at signal intensity both sides."""
    if not 0.0 <= y11 <= 1.0:
        raise ParameterError(f"y11 must lie in [0, 1], got {y11!r}")
    if not mu_signal > 0.0:
        raise ParameterError(f"mu_signal must be > 0, got {mu_signal!r}")
    return y11 * mu_signal**2 * math.exp(-2.0 * mu_signal)


def secret_key_rate(
    q11: float, e11: float, q_rect: float, e_rect: float, f_ec: float = DEFAULT_F_EC
) -> float:
    """Secret fraction per gate from the single-photon and error-correction terms."""
    if f_ec < 1.0:
        raise ParameterError(f"f_ec must be >= 1, got {f_ec!r}")
    return q11 * (1.0 - shannon_entropy(e11)) - q_rect * shannon_entropy(e_rect) * f_ec


def _poisson_rows(
    mus: tuple[float, float, float], truncation: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-intensity Poisson rows P_m and the per-pair excluded tail masses."""
    if truncation < 2:
        raise ParameterError(f"truncation must be >= 2, got {truncation!r}")
    ns = np.arange(truncation + 1)
    rows = np.stack([np.asarray(poisson_pmf(mu, ns), dtype=float) for mu in mus])
    kept = rows.sum(axis=1)
    tails = 1.0 - np.outer(kept, kept)
    return rows, np.clip(tails, 0.0, None)


def _solve_bracket_lp(
    n_vars: int,
    c: np.ndarray,
    brackets: list[tuple[str, int, int, np.ndarray, float, float]],
    hard_rows: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Minimize c @ x subject to lo <= row @ x <= hi brackets and hard rows.

    Each bracket is posed as an equality with its own slack variable bounded
    by the bracket width (row @ x + t = hi, 0 <= t <= hi - lo), which avoids
    near-duplicate inequality rows when the width is tiny.  On infeasibility,
    re-solves with elastic slacks to identify which measured entries cannot be
    reconciled, then raises InfeasibleModelError.
    """
    n_brackets = len(brackets)
    rows = np.stack([b[3] for b in brackets])
    his = np.array([b[5] for b in brackets])
    widths = np.clip(np.array([b[5] - b[4] for b in brackets]), 0.0, None)
    # Row-normalize so every equality has O(1) right-hand side; the raw gains
    # sit far below the solver's absolute feasibility tolerances otherwise.
    scales = 1.0 / np.maximum(his, 1e-9)
    rows_s = rows * scales[:, None]
    his_s = his * scales
    widths_s = widths * scales
    a_eq = np.hstack([rows_s, np.eye(n_brackets)])
    bounds = [(0.0, 1.0)] * n_vars + [(0.0, w) for w in widths_s]
    a_ub = None
    b_ub = None
    if hard_rows is not None:
        a_ub = np.hstack([hard_rows[0], np.zeros((hard_rows[0].shape[0], n_brackets))])
        b_ub = hard_rows[1]
    c_full = np.concatenate([c, np.zeros(n_brackets)])
    options = {
        "primal_feasibility_tolerance": 1e-10,
        "dual_feasibility_tolerance": 1e-10,
    }
    res = linprog(
        c_full,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=his_s,
        bounds=bounds,
        method="highs",
        options=options,
    )
    if res.status == 0:
        return res.x[:n_vars]
    if res.status not in (2, 4):
        raise RuntimeError(f"linear program failed: {res.message}")

    # Elastic reformulation: let each equality miss by u (shortfall) or v
    # (excess) and minimize the total scaled miss.  Near-zero total miss means
    # the program was feasible and only numerically troubled.
    elastic = np.hstack([a_eq, np.eye(n_brackets), -np.eye(n_brackets)])
    c_diag = np.concatenate([np.zeros(n_vars + n_brackets), np.ones(2 * n_brackets)])
    bounds_diag = bounds + [(0.0, None)] * (2 * n_brackets)
    a_ub_diag = None
    if a_ub is not None:
        a_ub_diag = np.hstack([a_ub, np.zeros((a_ub.shape[0], 2 * n_brackets))])
    diag = linprog(
        c_diag,
        A_ub=a_ub_diag,
        b_ub=b_ub,
        A_eq=elastic,
        b_eq=his_s,
        bounds=bounds_diag,
        method="highs",
        options=options,
    )
    if diag.status != 0:
        raise RuntimeError(f"linear program failed: {res.message}")
    misses_scaled = diag.x[n_vars + n_brackets :]
    if float(misses_scaled.sum()) <= _SLACK_TOL:
        retry = linprog(
            c_full,
            A_ub=a_ub,
            b_ub=b_ub,
            A_eq=a_eq,
            b_eq=his_s,
            bounds=bounds,
            method="highs",
            options={**options, "presolve": False},
        )
        if retry.status == 0:
            return retry.x[:n_vars]
        raise RuntimeError(
            f"linear program failed numerically on a feasible instance: {res.message}"
        )
    per_bracket_scaled = misses_scaled[:n_brackets] + misses_scaled[n_brackets:]
    violations = [
        (tag, i, j, float(miss / scale))
        for (tag, i, j, _, _, _), miss, scale in zip(brackets, per_bracket_scaled, scales)
        if miss > _SLACK_TOL
    ]
    detail = ", ".join(f"{t}[{i},{j}] off by {s:.3e}" for t, i, j, s in violations)
    raise InfeasibleModelError(
        "no yield surface is consistent with the measured matrices"
        + (f": {detail}" if detail else ""),
        violations,
    )


def lp_bound_yield(
    gains: np.ndarray, mus: tuple[float, float, float], truncation: int = DEFAULT_TRUNCATION
) -> YieldBound:
    """Lower-bound the single-photon yield Y^{11} from one basis's gain matrix.

    Args:
        gains: 3x3 measured gains indexed (signal, decoy, vacuum) per axis.
        mus: the three mean photon numbers, (signal, decoy, vacuum).
        truncation: photon-number cutoff per sender.

    Returns:
        YieldBound with the minimal feasible Y^{11} and one attaining surface.
    """
    gains = np.asarray(gains, dtype=float)
    if gains.shape != (3, 3):
        raise ParameterError(f"gains must have shape (3, 3), got {gains.shape!r}")
    rows, tails = _poisson_rows(mus, truncation)
    width = truncation + 1
    n_vars = width * width
    brackets = []
    for i in range(3):
        for j in range(3):
            coeff = np.outer(rows[i], rows[j]).ravel()
            lo = gains[i, j] - tails[i, j]
            brackets.append(("Q", i, j, coeff, lo, gains[i, j]))
    c = np.zeros(n_vars)
    c[width + 1] = 1.0
    x = _solve_bracket_lp(n_vars, c, brackets)
    surface = x.reshape(width, width)
    return YieldBound(value=float(surface[1, 1]), surface=surface)


_RATIO_MAX_ITER = 60
_RATIO_OBJ_TOL = 1e-14


def lp_bound_error(
    gains: np.ndarray,
    qbers: np.ndarray,
    mus: tuple[float, float, float],
    truncation: int = DEFAULT_TRUNCATION,
) -> ErrorBound:
    """Upper-bound the single-photon error rate e^{11} from one basis's data.

    Maximizes the ratio (YE)^{11} / Y^{11} over the joint polytope of yields Y
    and error-weighted yields YE with 0 <= YE <= Y <= 1 and both bracket sets
    satisfied.  The true surfaces lie in the polytope, so the ratio optimum
    dominates the true e^{11}.  Solved by Dinkelbach iteration: each step
    maximizes (YE)^{11} - lam * Y^{11}; the optimum ratio is the fixed point.

    Raises:
        DegenerateBoundError: the Y^{11} lower bound is numerically zero.
    """
    gains = np.asarray(gains, dtype=float)
    qbers = np.asarray(qbers, dtype=float)
    if gains.shape != (3, 3) or qbers.shape != (3, 3):
        raise ParameterError("gains and qbers must both have shape (3, 3)")
    rows, tails = _poisson_rows(mus, truncation)
    width = truncation + 1
    n_half = width * width
    n_vars = 2 * n_half
    idx_y11 = width + 1
    idx_ye11 = n_half + width + 1

    brackets = []
    for i in range(3):
        for j in range(3):
            coeff = np.outer(rows[i], rows[j]).ravel()
            row_y = np.concatenate([coeff, np.zeros(n_half)])
            brackets.append(
                ("Q", i, j, row_y, gains[i, j] - tails[i, j], gains[i, j])
            )
            qe = gains[i, j] * qbers[i, j]
            row_ye = np.concatenate([np.zeros(n_half), coeff])
            brackets.append(("QE", i, j, row_ye, qe - tails[i, j], qe))
    coupling = np.hstack([-np.eye(n_half), np.eye(n_half)])
    hard = (coupling, np.zeros(n_half))

    denominator = lp_bound_yield(gains, mus, truncation)
    if denominator.value <= _DENOM_FLOOR:
        raise DegenerateBoundError(
            f"single-photon yield lower bound {denominator.value!r} is too small "
            "to divide the error mass by"
        )

    lam = 0.0
    x = None
    for _ in range(_RATIO_MAX_ITER):
        c = np.zeros(n_vars)
        c[idx_ye11] = -1.0
        c[idx_y11] = lam
        x = _solve_bracket_lp(n_vars, c, brackets, hard_rows=hard)
        gap = float(x[idx_ye11] - lam * x[idx_y11])
        if gap <= _RATIO_OBJ_TOL:
            break
        lam = float(x[idx_ye11] / x[idx_y11])
    else:
        raise RuntimeError("ratio iteration failed to converge")

    y_surface = x[:n_half].reshape(width, width)
    ye_surface = x[n_half:].reshape(width, width)
    e11 = min(0.5, max(0.0, lam))
    return ErrorBound(
        value=e11,
        y11_diag_lower=denominator.value,
        y_surface=y_surface,
        ye_surface=ye_surface,
    )


def global_gain_qber(
    yield_surface: np.ndarray, error_surface: np.ndarray, mu_signal: float
) -> tuple[float, float]:
    """Reconstruct the signal-signal gain and error rate from yield surfaces.

    Args:
        yield_surface: (M+1, M+1) per-photon-number yields.
        error_surface: (M+1, M+1) per-photon-number error fractions.
        mu_signal: signal intensity applied on both sides.

    Returns:
        (gain, qber) of the truncated reconstruction; the Poisson mass outside
        the truncation box is not included.
    """
    yields = np.asarray(yield_surface, dtype=float)
    errors = np.asarray(error_surface, dtype=float)
    if yields.ndim != 2 or yields.shape[0] != yields.shape[1]:
        raise ParameterError(f"yield_surface must be square, got {yields.shape!r}")
    if errors.shape != yields.shape:
        raise ParameterError("error_surface must match yield_surface in shape")
    if not mu_signal > 0.0:
        raise ParameterError(f"mu_signal must be > 0, got {mu_signal!r}")
    row = np.asarray(poisson_pmf(mu_signal, np.arange(yields.shape[0])), dtype=float)
    weights = np.outer(row, row)
    gain = float((weights * yields).sum())
    if gain <= 0.0:
        return 0.0, 0.0
    qber = float((weights * yields * errors).sum()) / gain
    return gain, qber


def _basis_cells(basis: str) -> tuple[tuple[int, int], ...]:
    if basis == "rect":
        return ((0, 0), (0, 1), (1, 0), (1, 1))
    if basis == "diag":
        return ((2, 2), (2, 3), (3, 2), (3, 3))
    raise ParameterError(f"basis must be 'rect' or 'diag', got {basis!r}")


def gains_from_counts(tables, basis: str) -> np.ndarray:
    """Per-intensity-pair gain: mean over the four same-basis cells of the
    conclusive-count rate."""
    cells = _basis_cells(basis)
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            rates = []
            for sa, sb in cells:
                pulses = int(tables.pulses_sent[i, j, sa, sb])
                if pulses <= 0:
                    raise InsufficientCountsError(
                        f"cell ({i}, {j}, {sa}, {sb}) has no pulses"
                    )
                rates.append(tables.conclusive_sum(i, j, sa, sb) / pulses)
            out[i, j] = sum(rates) / len(rates)
    return out


# Error bookkeeping per basis: for rectilinear preparation both conclusive
# outcomes imply anticorrelated bits, so identical-bit cells are errors for
# all four conclusive classes.  For diagonal preparation the {1,4}/{2,3}
# outcome implies anticorrelated bits while {1,2}/{3,4} implies correlated
# ones, so the erroneous classes depend on the prepared pair.
_PSI_PLUS_CLASSES = ("C12", "C34")
_PSI_MINUS_CLASSES = ("C14", "C23")


def _wrong_counts(tables, i: int, j: int, sa: int, sb: int, basis: str) -> int:
    same_bit = (sa & 1) == (sb & 1)
    if basis == "rect":
        classes = _PSI_PLUS_CLASSES + _PSI_MINUS_CLASSES if same_bit else ()
    else:
        classes = _PSI_MINUS_CLASSES if same_bit else _PSI_PLUS_CLASSES
    return sum(tables.coincidence(i, j, sa, sb, name) for name in classes)


def errors_from_counts(tables, basis: str) -> tuple[np.ndarray, list[str]]:
    """Per-intensity-pair error rate among conclusive events.

    Pairs with zero conclusive counts carry no error information; their rate
    defaults to the random-outcome value 0.5 with a warning, the same
    convention the vacuum-vacuum pair uses.
    """
    cells = _basis_cells(basis)
    out = np.zeros((3, 3))
    warnings: list[str] = []
    for i in range(3):
        for j in range(3):
            wrong = 0
            total = 0
            for sa, sb in cells:
                total += tables.conclusive_sum(i, j, sa, sb)
                wrong += _wrong_counts(tables, i, j, sa, sb, basis)
            if total == 0:
                out[i, j] = 0.5
                warnings.append(
                    f"{basis} intensity pair ({i}, {j}) has no conclusive counts; "
                    "error rate defaulted to 0.5"
                )
            else:
                out[i, j] = wrong / total
    return out, warnings


def matrices_from_counts(tables) -> tuple[GainErrorMatrices, list[str]]:
    """Build measured gain and error matrices from session count tables."""
    q_rect = gains_from_counts(tables, "rect")
    q_diag = gains_from_counts(tables, "diag")
    e_rect, warn_rect = errors_from_counts(tables, "rect")
    e_diag, warn_diag = errors_from_counts(tables, "diag")
    matrices = GainErrorMatrices(
        mus=tuple(tables.class_mus),
        q_rect=q_rect,
        q_diag=q_diag,
        e_rect=e_rect,
        e_diag=e_diag,
    )
    return matrices, warn_rect + warn_diag


def analyze_matrices(
    matrices: GainErrorMatrices,
    truncation: int = DEFAULT_TRUNCATION,
    f_ec: float = DEFAULT_F_EC,
    extra_warnings: tuple[str, ...] = (),
) -> DecoyResult:
    """Run the full bounding pipeline on measured gain/error matrices."""
    rect_bound = lp_bound_yield(matrices.q_rect, matrices.mus, truncation)
    error_bound = lp_bound_error(matrices.q_diag, matrices.e_diag, matrices.mus, truncation)
    mu_signal = matrices.mus[0]
    q11 = single_photon_gain(rect_bound.value, mu_signal)

    e_rect_measured = float(matrices.e_rect[0, 0])
    constant_error = np.full_like(rect_bound.surface, e_rect_measured)
    q_trunc, _ = global_gain_qber(rect_bound.surface, constant_error, mu_signal)
    _, tails = _poisson_rows(matrices.mus, truncation)
    # Yields outside the truncation box are taken at the cap, keeping the
    # reconstruction conservative for the subtraction term.
    q_rect_reconstructed = q_trunc + float(tails[0, 0])

    rate = secret_key_rate(
        q11, error_bound.value, q_rect_reconstructed, e_rect_measured, f_ec
    )
    warnings = tuple(extra_warnings)
    return DecoyResult(
        y11_lower=rect_bound.value,
        e11_upper=error_bound.value,
        q11=q11,
        q_rect_measured=float(matrices.q_rect[0, 0]),
        q_rect_reconstructed=q_rect_reconstructed,
        q_rect_global=q_rect_reconstructed,
        e_rect_global=e_rect_measured,
        rate=rate,
        f_ec=f_ec,
        truncation=truncation,
        mus=matrices.mus,
        solution=YieldSolution(
            y_rect=rect_bound.surface,
            y_diag=error_bound.y_surface,
            ye_diag=error_bound.ye_surface,
        ),
        warnings=warnings,
    )


def analyze(
    tables, truncation: int = DEFAULT_TRUNCATION, f_ec: float = DEFAULT_F_EC
) -> DecoyResult:
    """Full pipeline from count tables to bounds and key rate."""
    matrices, warnings = matrices_from_counts(tables)
    return analyze_matrices(
        matrices, truncation=truncation, f_ec=f_ec, extra_warnings=tuple(warnings)
    )
