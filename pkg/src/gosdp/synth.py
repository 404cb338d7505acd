"""Synthetic instances: planted biclustered matrices, clique graphs, sequences.

A planted (k,l)-biclustered target is U = R U* C^T with one-hot assignment
matrices R, C and a +-1 core U*. Side-information graphs are one clique per
factor, bridged through a hub vertex in the first clique so the graph is
connected with diameter <= 4 (the disjoint-clique picture alone would make
the PD-Laplacian ill-posed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import Graph, pd_laplacian, read_graph, read_matrix, squared_radius, write_graph, write_matrix
from .omc import LabeledSequence


class SpecError(ValueError):
    """Invalid generation parameters."""


@dataclass(frozen=True)
class BiclusterSpec:
    m: int
    n: int
    k: int
    l: int
    seed: int
    noise_rate: float = 0.0

    def __post_init__(self):
        if not (self.m >= self.k >= 1 and self.n >= self.l >= 1):
            raise SpecError("need m >= k >= 1 and n >= l >= 1")
        if not (0.0 <= self.noise_rate < 0.5):
            raise SpecError("noise rate must lie in [0, 0.5)")


@dataclass(frozen=True)
class PlantedInstance:
    u: np.ndarray          # m x n target over {-1,+1}
    r: np.ndarray          # m x k one-hot row assignments
    c: np.ndarray          # n x l one-hot column assignments
    u_star: np.ndarray     # k x l core over {-1,+1}
    row_graph: Graph
    col_graph: Graph
    d_hat_bound: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape

    def row_factors(self) -> np.ndarray:
        return np.argmax(self.r, axis=1)

    def col_factors(self) -> np.ndarray:
        return np.argmax(self.c, axis=1)


def _sample_assignment(rng: np.random.Generator, count: int, factors: int) -> np.ndarray:
    # resample until every factor is used at least once
    while True:
        a = rng.integers(0, factors, size=count)
        if len(np.unique(a)) == factors:
            return a


def clique_graph(assignment: np.ndarray, factors: int) -> Graph:
    """One clique per factor plus a hub-bridge star keeping the graph connected.

    The hub is the lowest-index vertex of factor 0; one unit edge joins it to
    the lowest-index vertex of each other factor, so any two vertices are
    within 4 hops.
    """
    assignment = np.asarray(assignment, dtype=int)
    edges = []
    for f in range(factors):
        members = np.flatnonzero(assignment == f)
        for a_idx in range(len(members)):
            for b_idx in range(a_idx + 1, len(members)):
                edges.append((int(members[a_idx]), int(members[b_idx]), 1.0))
    hub = int(np.flatnonzero(assignment == 0)[0])
    for f in range(1, factors):
        rep = int(np.flatnonzero(assignment == f)[0])
        edges.append((hub, rep, 1.0))
    return Graph(len(assignment), tuple(edges))


def _one_hot(assignment: np.ndarray, factors: int) -> np.ndarray:
    out = np.zeros((len(assignment), factors))
    out[np.arange(len(assignment)), assignment] = 1.0
    return out


def quasi_dimension_bound_parts(
    r: np.ndarray, c: np.ndarray, row_graph: Graph, col_graph: Graph, k: int, l: int
) -> float:
    row_lbar = pd_laplacian(row_graph)
    col_lbar = pd_laplacian(col_graph)
    return float(
        2.0 * np.sum(r * (row_lbar @ r)) * squared_radius(row_lbar)
        + 2.0 * np.sum(c * (col_lbar @ c)) * squared_radius(col_lbar)
        + 2.0 * k
        + 2.0 * l
    )


def quasi_dimension_bound(inst: PlantedInstance) -> float:
    """2 Tr(R^T M R) R_M + 2 Tr(C^T N C) R_N + 2k + 2l with PD-Laplacian M, N."""
    k = inst.r.shape[1]
    l = inst.c.shape[1]
    return quasi_dimension_bound_parts(inst.r, inst.c, inst.row_graph, inst.col_graph, k, l)


def gen_bicluster(spec: BiclusterSpec) -> PlantedInstance:
    """Sample a planted instance: assignments, core, clique graphs, and its bound."""
    rng = np.random.default_rng(spec.seed)
    row_assign = _sample_assignment(rng, spec.m, spec.k)
    col_assign = _sample_assignment(rng, spec.n, spec.l)
    u_star = rng.choice([-1.0, 1.0], size=(spec.k, spec.l))
    r = _one_hot(row_assign, spec.k)
    c = _one_hot(col_assign, spec.l)
    u = r @ u_star @ c.T
    row_graph = clique_graph(row_assign, spec.k)
    col_graph = clique_graph(col_assign, spec.l)
    bound = quasi_dimension_bound_parts(r, c, row_graph, col_graph, spec.k, spec.l)
    return PlantedInstance(
        u=u, r=r, c=c, u_star=u_star,
        row_graph=row_graph, col_graph=col_graph, d_hat_bound=bound,
    )


def planted_factorization(inst: PlantedInstance) -> tuple[np.ndarray, np.ndarray]:
    """Factorization (R U*, C): normalized product U/sqrt(l), margin exactly 1/sqrt(l)."""
    return inst.r @ inst.u_star, inst.c


def planted_margin(inst: PlantedInstance) -> float:
    return 1.0 / np.sqrt(inst.u_star.shape[1])


def gen_sequence(
    inst: PlantedInstance, t_rounds: int, noise_rate: float, seed
) -> LabeledSequence:
    """Uniform entries labeled from U, each flipped independently at noise_rate."""
    if t_rounds < 1:
        raise SpecError("sequence length must be >= 1")
    rng = np.random.default_rng(seed)
    m, n = inst.shape
    triples = []
    for _ in range(t_rounds):
        i = int(rng.integers(m))
        j = int(rng.integers(n))
        y = int(inst.u[i, j])
        if noise_rate > 0.0 and rng.random() < noise_rate:
            y = -y
        triples.append((i, j, y))
    return LabeledSequence(tuple(triples))


class UniformEntrySampler:
    """Uniform (i, j) queries labeled from a target matrix, with label noise."""

    def __init__(self, u: np.ndarray, rng: np.random.Generator, noise_rate: float = 0.0):
        self.u = u
        self.rng = rng
        self.noise_rate = noise_rate

    def _label(self, i: int, j: int) -> int:
        y = int(self.u[i, j])
        if self.noise_rate > 0.0 and self.rng.random() < self.noise_rate:
            y = -y
        return y

    def next(self) -> tuple[int, int, int]:
        i = int(self.rng.integers(self.u.shape[0]))
        j = int(self.rng.integers(self.u.shape[1]))
        return i, j, self._label(i, j)

    def feedback(self, i, j, y, mistake) -> None:
        pass


class ReplayEntrySampler:
    """Adversarial replay: with probability 1/2 re-query a past mistaken entry."""

    def __init__(self, base, rng: np.random.Generator, replay_prob: float = 0.5):
        self.base = base
        self.rng = rng
        self.replay_prob = replay_prob
        self.mistaken: list = []

    def next(self) -> tuple[int, int, int]:
        if self.mistaken and self.rng.random() < self.replay_prob:
            return self.mistaken[int(self.rng.integers(len(self.mistaken)))]
        return self.base.next()

    def feedback(self, i, j, y, mistake) -> None:
        if mistake:
            self.mistaken.append((i, j, y))
        self.base.feedback(i, j, y, mistake)


# --- similarity-side generation ----------------------------------------------


def gen_clique_graph(sizes) -> tuple[Graph, np.ndarray]:
    """Cliques of the given sizes (+ hub bridges); returns the graph and labels."""
    assignment = np.repeat(np.arange(len(sizes)), sizes)
    return clique_graph(assignment, len(sizes)), assignment


def gen_pair_sequence(
    labels: np.ndarray, t_rounds: int, noise_rate: float, seed
) -> LabeledSequence:
    """Uniform vertex pairs (i != j) labeled +1 when same class, -1 otherwise."""
    if t_rounds < 1:
        raise SpecError("sequence length must be >= 1")
    rng = np.random.default_rng(seed)
    n = len(labels)
    if n < 2:
        raise SpecError("need at least two vertices")
    triples = []
    for _ in range(t_rounds):
        i = int(rng.integers(n))
        j = int(rng.integers(n - 1))
        if j >= i:
            j += 1
        y = 1 if labels[i] == labels[j] else -1
        if noise_rate > 0.0 and rng.random() < noise_rate:
            y = -y
        triples.append((i, j, y))
    return LabeledSequence(tuple(triples))


class UniformPairSampler:
    """Uniform vertex-pair queries labeled by class equality."""

    def __init__(self, labels: np.ndarray, rng: np.random.Generator, noise_rate: float = 0.0):
        self.labels = np.asarray(labels, dtype=int)
        self.rng = rng
        self.noise_rate = noise_rate

    def next(self) -> tuple[int, int, int]:
        n = len(self.labels)
        i = int(self.rng.integers(n))
        j = int(self.rng.integers(n - 1))
        if j >= i:
            j += 1
        y = 1 if self.labels[i] == self.labels[j] else -1
        if self.noise_rate > 0.0 and self.rng.random() < self.noise_rate:
            y = -y
        return i, j, y

    def feedback(self, i, j, y, mistake) -> None:
        pass


# --- instance files -----------------------------------------------------------

INSTANCE_FILES = ("U.txt", "row_graph.txt", "col_graph.txt", "row_factors.txt", "col_factors.txt")


def write_instance(out_dir, inst: PlantedInstance, spec: BiclusterSpec) -> list:
    """Write the five instance files plus manifest.json; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_matrix(out_dir / "U.txt", inst.u)
    write_graph(out_dir / "row_graph.txt", inst.row_graph)
    write_graph(out_dir / "col_graph.txt", inst.col_graph)
    for name, factors in (
        ("row_factors.txt", inst.row_factors()),
        ("col_factors.txt", inst.col_factors()),
    ):
        with open(out_dir / name, "w", newline="\n") as fh:
            fh.write("\n".join(str(int(v)) for v in factors) + "\n")
    manifest = {
        "m": spec.m,
        "n": spec.n,
        "k": spec.k,
        "l": spec.l,
        "seed": spec.seed,
        "noise_rate": spec.noise_rate,
        "d_hat_bound": inst.d_hat_bound,
        "planted_gamma": planted_margin(inst),
    }
    with open(out_dir / "manifest.json", "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return [out_dir / p for p in INSTANCE_FILES] + [out_dir / "manifest.json"]


def read_instance(in_dir) -> tuple[PlantedInstance, dict]:
    """Rebuild a PlantedInstance (core recovered from U and the factors)."""
    in_dir = Path(in_dir)
    with open(in_dir / "manifest.json") as fh:
        manifest = json.load(fh)
    u = read_matrix(in_dir / "U.txt")
    row_graph = read_graph(in_dir / "row_graph.txt")
    col_graph = read_graph(in_dir / "col_graph.txt")
    row_assign = np.loadtxt(in_dir / "row_factors.txt", dtype=int, ndmin=1)
    col_assign = np.loadtxt(in_dir / "col_factors.txt", dtype=int, ndmin=1)
    k = int(manifest["k"])
    l = int(manifest["l"])
    u_star = np.zeros((k, l))
    for f_row in range(k):
        i = int(np.flatnonzero(row_assign == f_row)[0])
        for f_col in range(l):
            j = int(np.flatnonzero(col_assign == f_col)[0])
            u_star[f_row, f_col] = u[i, j]
    inst = PlantedInstance(
        u=u,
        r=_one_hot(row_assign, k),
        c=_one_hot(col_assign, l),
        u_star=u_star,
        row_graph=row_graph,
        col_graph=col_graph,
        d_hat_bound=float(manifest["d_hat_bound"]),
    )
    return inst, manifest
