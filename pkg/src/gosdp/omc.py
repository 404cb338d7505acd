"""Mistake-driven online binary matrix completion with side information.

The reduction embeds an m x n completion problem into the (m+n) x (m+n)
online SDP: side information (M, N) becomes the block-diagonal gamma matrix,
a queried entry (i, j) becomes the sparse symmetric coupler Z<i,j>, and the
learner updates only on mistakes with the hinge-gradient loss -(y/margin) Z.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    NotPDError,
    frobenius_dot,
    sqrt_psd,
    squared_radius,
    symmetrize,
)
from .osdp import (
    FtrlState,
    OsdpProblem,
    ProjectionDivergedError,
    SolverSettings,
    SolverStalledError,
    osdp_round,
)


class ZeroRowError(ValueError):
    """Row normalization hit a zero row."""


def hinge(gamma_margin: float, x: float) -> float:
    """h(x) = 0 when x >= margin, else 1 - x/margin."""
    if gamma_margin <= 0:
        raise ValueError("margin must be positive")
    return 0.0 if x >= gamma_margin else 1.0 - x / gamma_margin


def normalize_rows(a: np.ndarray) -> np.ndarray:
    """Scale every row to unit l2 norm."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    norms = np.linalg.norm(a, axis=1)
    if np.any(norms == 0.0):
        raise ZeroRowError(f"zero rows at indices {np.flatnonzero(norms == 0.0).tolist()}")
    return a / norms[:, None]


@dataclass(frozen=True)
class SideInfo:
    """Strictly PD side-information pair with cached roots and squared radii."""

    m_rows: np.ndarray
    m_cols: np.ndarray
    r_rows: float
    r_cols: float
    sqrt_rows: np.ndarray
    sqrt_cols: np.ndarray

    @classmethod
    def from_matrices(cls, rows: np.ndarray, cols: np.ndarray) -> "SideInfo":
        rows = symmetrize(rows)
        cols = symmetrize(cols)
        for name, mat in (("row", rows), ("column", cols)):
            if float(np.linalg.eigvalsh(mat)[0]) <= 0.0:
                raise NotPDError(f"{name} side-information matrix must be strictly PD")
        return cls(
            m_rows=rows,
            m_cols=cols,
            r_rows=squared_radius(rows),
            r_cols=squared_radius(cols),
            sqrt_rows=sqrt_psd(rows),
            sqrt_cols=sqrt_psd(cols),
        )

    @classmethod
    def identity(cls, m: int, n: int) -> "SideInfo":
        return cls.from_matrices(np.eye(m), np.eye(n))


def build_gamma(si: SideInfo) -> np.ndarray:
    """Block-diagonal gamma: sqrt(r_rows)*sqrt(M) on rows, sqrt(r_cols)*sqrt(N) on cols."""
    m = si.m_rows.shape[0]
    n = si.m_cols.shape[0]
    gamma = np.zeros((m + n, m + n))
    gamma[:m, :m] = np.sqrt(si.r_rows) * si.sqrt_rows
    gamma[m:, m:] = np.sqrt(si.r_cols) * si.sqrt_cols
    return gamma


def embed_WPQ(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """PSD embedding [Pbar; Qbar][Pbar; Qbar]^T with unit diagonal."""
    v = np.vstack([normalize_rows(p), normalize_rows(q)])
    w = symmetrize(v @ v.T)
    np.fill_diagonal(w, 1.0)
    return w


def quasi_dimension_of_factorization(p: np.ndarray, q: np.ndarray, si: SideInfo) -> float:
    """r_M Tr(Pbar^T M Pbar) + r_N Tr(Qbar^T N Qbar) for the row-normalized factors."""
    pb = normalize_rows(p)
    qb = normalize_rows(q)
    return float(
        si.r_rows * np.sum(pb * (si.m_rows @ pb))
        + si.r_cols * np.sum(qb * (si.m_cols @ qb))
    )


def coupler(i: int, j: int, m: int, n: int) -> np.ndarray:
    """Z<i,j>: 1/2 at (i, m+j) and (m+j, i), zero elsewhere."""
    z = np.zeros((m + n, m + n))
    z[i, m + j] = 0.5
    z[m + j, i] = 0.5
    return z


def loss_matrix(
    i: int, j: int, y: int, gamma_margin: float, m: int, n: int, margin_ok: bool
) -> np.ndarray:
    """Hinge-gradient loss: zero when the margin held, else -(y/margin) Z<i,j>."""
    if not (0 <= i < m and 0 <= j < n):
        raise ValueError(f"entry ({i},{j}) out of range for {m}x{n}")
    if margin_ok:
        return np.zeros((m + n, m + n))
    return (-y / gamma_margin) * coupler(i, j, m, n)


@dataclass(frozen=True)
class LabeledSequence:
    """Ordered (row, col, label) triples with labels in {-1, +1}."""

    triples: tuple

    def __post_init__(self):
        norm = []
        for i, j, y in self.triples:
            y = int(y)
            if y not in (-1, 1):
                raise ValueError(f"label {y} not in {{-1,+1}}")
            norm.append((int(i), int(j), y))
        object.__setattr__(self, "triples", tuple(norm))

    def __len__(self) -> int:
        return len(self.triples)


def hloss_sequence(
    s: LabeledSequence, p: np.ndarray, q: np.ndarray, gamma_margin: float
) -> float:
    """Cumulative hinge loss of the normalized factorization over the sequence."""
    x = normalize_rows(p) @ normalize_rows(q).T
    return float(sum(hinge(gamma_margin, y * x[i, j]) for i, j, y in s.triples))


def write_sequence(path, s: LabeledSequence) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "i", "j", "y"])
        for t, (i, j, y) in enumerate(s.triples):
            writer.writerow([t, i, j, y])


def read_sequence(path) -> LabeledSequence:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        triples = [(int(r["i"]), int(r["j"]), int(r["y"])) for r in reader]
    return LabeledSequence(tuple(triples))


@dataclass
class OmcConfig:
    m: int
    n: int
    gamma_margin: float
    d_hat: float
    c_eta: float
    side_info: SideInfo
    solver: SolverSettings = field(default_factory=SolverSettings)
    epsilon: float = 1.0  # the reduction fixes eps=1; override only for ablation

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        if not (0.0 < self.gamma_margin <= 1.0):
            raise ValueError("margin must lie in (0, 1]")
        if self.d_hat < 1.0:
            raise ValueError("quasi-dimension estimate must be >= 1")
        if self.c_eta <= 0.0:
            raise ValueError("c_eta must be positive")
        if self.side_info.m_rows.shape[0] != self.m or self.side_info.m_cols.shape[0] != self.n:
            raise ValueError("side-information dimensions do not match (m, n)")


def build_problem(config: OmcConfig) -> OsdpProblem:
    """Reduction parameters: beta=1, tau=d_hat, g=1/margin, eta=c*margin^2."""
    return OsdpProblem(
        gamma=build_gamma(config.side_info),
        beta=1.0,
        tau=config.d_hat,
        epsilon=config.epsilon,
        g=1.0 / config.gamma_margin,
        eta=config.c_eta * config.gamma_margin**2,
        require_psd_losses=False,
    )


@dataclass(frozen=True)
class TraceRow:
    t: int
    i: int
    j: int
    y: int
    y_hat: int
    margin_value: float
    mistake: bool
    ftrl_invoked: bool
    ftrl_iters: int


@dataclass
class MistakeTrace:
    rows: list
    total_mistakes: int

    def mistake_driven(self) -> bool:
        return all(r.ftrl_invoked == r.mistake for r in self.rows)

    def cumulative_mistakes(self) -> np.ndarray:
        return np.cumsum([int(r.mistake) for r in self.rows])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["t", "i", "j", "y", "yhat", "margin", "mistake", "cum_mistakes", "ftrl_iters"]
            )
            cum = 0
            for r in self.rows:
                cum += int(r.mistake)
                writer.writerow(
                    [r.t, r.i, r.j, r.y, r.y_hat, format(r.margin_value, ".12g"),
                     int(r.mistake), cum, r.ftrl_iters]
                )


def read_trace_csv(path) -> MistakeTrace:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                TraceRow(
                    t=int(rec["t"]),
                    i=int(rec["i"]),
                    j=int(rec["j"]),
                    y=int(rec["y"]),
                    y_hat=int(rec["yhat"]),
                    margin_value=float(rec["margin"]),
                    mistake=bool(int(rec["mistake"])),
                    ftrl_invoked=bool(int(rec["mistake"])),
                    ftrl_iters=int(rec["ftrl_iters"]),
                )
            )
    return MistakeTrace(rows=rows, total_mistakes=sum(int(r.mistake) for r in rows))


class SequenceSource:
    """Replays a fixed labeled sequence; ignores feedback."""

    def __init__(self, s: LabeledSequence):
        self._triples = s.triples
        self._pos = 0

    def next(self) -> tuple[int, int, int]:
        triple = self._triples[self._pos]
        self._pos += 1
        return triple

    def feedback(self, i: int, j: int, y: int, mistake: bool) -> None:
        pass


def _run_mistake_driven(config: OmcConfig, source, t_rounds: int) -> MistakeTrace:
    problem = build_problem(config)
    state = FtrlState.initial(problem, config.solver)
    rows = []
    mistakes = 0
    for t in range(t_rounds):
        i, j, y = source.next()
        if not (0 <= i < config.m and 0 <= j < config.n):
            raise ValueError(f"round {t}: entry ({i},{j}) out of range")
        val = float(state.current[i, config.m + j])
        y_hat = 1 if val >= 0.0 else -1  # sign(0) := +1
        mistake = y_hat != y
        iters = 0
        if mistake:
            # on erring rounds the hinge dominates the mistake indicator
            assert hinge(config.gamma_margin, y * val) >= 1.0
            loss = loss_matrix(
                i, j, y, config.gamma_margin, config.m, config.n, margin_ok=False
            )
            try:
                osdp_round(state, loss)
            except (ProjectionDivergedError, SolverStalledError) as exc:
                raise type(exc)(f"round {t}: {exc}") from exc
            iters = state.last_diagnostics.iterations
            mistakes += 1
        source.feedback(i, j, y, mistake)
        rows.append(TraceRow(t, i, j, y, y_hat, val, mistake, mistake, iters))
    return MistakeTrace(rows=rows, total_mistakes=mistakes)


def omc_run(config: OmcConfig, s: LabeledSequence) -> MistakeTrace:
    """Run the mistake-driven completion protocol over a fixed sequence."""
    return _run_mistake_driven(config, SequenceSource(s), len(s))


def omc_run_adaptive(config: OmcConfig, source, t_rounds: int) -> MistakeTrace:
    """Run against an adaptive query source (e.g. adversarial replay)."""
    return _run_mistake_driven(config, source, t_rounds)


def mistake_bound(config: OmcConfig, hloss_value: float, c_mb: float = 1.0) -> float:
    """Reporting bound c_mb * d_hat / margin^2 + 2 * hloss (constant not asserted)."""
    return c_mb * config.d_hat / config.gamma_margin**2 + 2.0 * hloss_value
