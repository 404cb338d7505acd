"""Online same-class prediction on a graph, via the matrix-completion reduction.

Vertices carry hidden class labels; each round a vertex pair is queried and
the learner predicts whether the two are in the same class (+1) or not (-1).
Side information is the PD-Laplacian of the graph, used on both blocks of the
2n x 2n embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import Graph, laplacian, pd_laplacian, resistance_matrix, squared_radius
from .omc import (
    LabeledSequence,
    MistakeTrace,
    OmcConfig,
    SideInfo,
    build_gamma,
    omc_run,
    omc_run_adaptive,
)
from .osdp import SolverSettings


@dataclass(frozen=True)
class ClassAssignment:
    """Vertex labels in [0, n_classes)."""

    labels: tuple
    n_classes: int

    def __post_init__(self):
        labels = tuple(int(v) for v in self.labels)
        if self.n_classes < 1:
            raise ValueError("need at least one class")
        if any(not 0 <= v < self.n_classes for v in labels):
            raise ValueError("labels must lie in [0, n_classes)")
        object.__setattr__(self, "labels", labels)

    def uses_all_classes(self) -> bool:
        return len(set(self.labels)) == self.n_classes

    def indicator(self) -> np.ndarray:
        r = np.zeros((len(self.labels), self.n_classes))
        r[np.arange(len(self.labels)), self.labels] = 1.0
        return r


def cut_size(g: Graph, y: ClassAssignment) -> int:
    """Number of edges joining differently-labeled vertices."""
    if len(y.labels) != g.n_vertices:
        raise ValueError("label vector length does not match vertex count")
    return sum(1 for u, v, _ in g.edges if y.labels[u] != y.labels[v])


def cut_size_per_class(g: Graph, y: ClassAssignment, s: int) -> int:
    """Cut edges touching class s; sums to twice the total cut over classes."""
    if len(y.labels) != g.n_vertices:
        raise ValueError("label vector length does not match vertex count")
    return sum(
        1
        for u, v, _ in g.edges
        if y.labels[u] != y.labels[v] and s in (y.labels[u], y.labels[v])
    )


def similarity_gamma(g: Graph) -> np.ndarray:
    """2n x 2n block-diagonal gamma with sqrt(R * PD-Laplacian) on both blocks."""
    lbar = pd_laplacian(g)
    return build_gamma(SideInfo.from_matrices(lbar, lbar))


def similarity_d_hat(g: Graph, y: ClassAssignment) -> float:
    """Quasi-dimension estimate 2 Tr(R^T Lbar R) R_Lbar + 2k for labeled cliques."""
    lbar = pd_laplacian(g)
    r = y.indicator()
    return float(2.0 * np.sum(r * (lbar @ r)) * squared_radius(lbar) + 2.0 * y.n_classes)


@dataclass
class SimilarityConfig:
    graph: Graph
    labels: ClassAssignment  # ground truth; used for generation/diagnostics only
    gamma_margin: float
    d_hat: float
    c_eta: float
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if len(self.labels.labels) != self.graph.n_vertices:
            raise ValueError("labels do not match graph size")
        if not self.graph.is_connected():
            raise ValueError("similarity prediction requires a connected graph")

    def to_omc(self) -> OmcConfig:
        lbar = pd_laplacian(self.graph)
        si = SideInfo.from_matrices(lbar, lbar)
        return OmcConfig(
            m=self.graph.n_vertices,
            n=self.graph.n_vertices,
            gamma_margin=self.gamma_margin,
            d_hat=self.d_hat,
            c_eta=self.c_eta,
            side_info=si,
            solver=self.solver,
        )


def similarity_run(config: SimilarityConfig, s: LabeledSequence) -> MistakeTrace:
    """Mistake-driven loop over vertex-pair queries (same machinery as omc_run)."""
    return omc_run(config.to_omc(), s)


def similarity_run_adaptive(config: SimilarityConfig, source, t_rounds: int) -> MistakeTrace:
    return omc_run_adaptive(config.to_omc(), source, t_rounds)


def resistance_diameter(g: Graph) -> float:
    """Maximum effective resistance over vertex pairs."""
    return float(np.max(resistance_matrix(g)))


def resistance_bound_report(g: Graph) -> tuple[float, float, bool]:
    """(max resistance, 2 * squared radius of L, whether the bound holds).

    The 2 R_L >= max R_ij relation fails on some graphs (a single edge
    already violates it), so it is reported rather than asserted.
    """
    diam = resistance_diameter(g)
    bound = 2.0 * squared_radius(laplacian(g))
    return diam, bound, diam <= bound + 1e-9
