"""Dense symmetric-matrix primitives and graph Laplacian helpers.

Everything is eigendecomposition-based and operates on plain numpy arrays.
Symmetric matrices are the universal carrier here; callers are expected to
pass symmetric input, and constructors/symmetrize() enforce it where noise
could creep in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Relative eigenvalue tolerances shared by the PSD/rank decisions below.
PSD_TOL = 1e-10
RANK_TOL = 1e-10


class NotPSDError(ValueError):
    """Matrix required to be positive semi-definite is not."""


class NotPDError(ValueError):
    """Matrix required to be strictly positive definite is not."""


class NotConnectedError(ValueError):
    """Graph operation requires a connected graph."""


class EigenDecompositionError(RuntimeError):
    """The symmetric eigensolver failed to converge."""


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return (A + A^T)/2 as a float array."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


def eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Returns (w, V) with A = V diag(w) V^T and w sorted from largest to
    smallest. Wraps LAPACK via numpy; a convergence failure is re-raised
    with the matrix dimensions attached.
    """
    a = symmetrize(a)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigenDecompositionError(
            f"eigh failed on {a.shape[0]}x{a.shape[1]} matrix "
            f"(fro norm {np.linalg.norm(a):.3e}): {exc}"
        ) from exc
    return w[::-1], v[:, ::-1]


def psd_project(a: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix: clip negative eigenvalues to zero."""
    w, v = eigh(a)
    return symmetrize((v * np.maximum(w, 0.0)) @ v.T)


def sqrt_psd(a: np.ndarray) -> np.ndarray:
    """PSD square root S with S @ S == A.

    Eigenvalues in [-PSD_TOL*||A||_F, 0) are treated as rounding noise and
    clipped to zero; anything more negative raises NotPSDError.
    """
    w, v = eigh(a)
    tol = PSD_TOL * max(np.linalg.norm(a), 1e-300)
    if w[-1] < -tol:
        raise NotPSDError(f"min eigenvalue {w[-1]:.3e} below -{tol:.3e}")
    return symmetrize((v * np.sqrt(np.maximum(w, 0.0))) @ v.T)


def pinv(a: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a symmetric matrix.

    Eigenvalues with |w| <= RANK_TOL * max|w| are inverted to zero.
    """
    w, v = eigh(a)
    cutoff = RANK_TOL * np.max(np.abs(w), initial=0.0)
    inv_w = np.where(np.abs(w) > cutoff, 1.0 / np.where(w == 0.0, 1.0, w), 0.0)
    return symmetrize((v * inv_w) @ v.T)


def logdet(a: np.ndarray) -> float:
    """ln det(A) for strictly PD symmetric A, as the sum of ln eigenvalues."""
    w, _ = eigh(a)
    if w[-1] <= 0.0:
        raise NotPDError(f"min eigenvalue {w[-1]:.3e} is not positive")
    return float(np.sum(np.log(w)))


def frobenius_dot(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius inner product sum_ij A_ij B_ij."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sum(a * b))


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph stored as an edge list.

    Edges are (u, v, weight) with u != v and positive weight; a 2-tuple
    (u, v) is accepted and given weight 1.0.
    """

    n_vertices: int
    edges: tuple = field(default=())

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        norm = []
        for e in self.edges:
            if len(e) == 2:
                u, v, w = e[0], e[1], 1.0
            else:
                u, v, w = e
            u, v, w = int(u), int(v), float(w)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"edge ({u},{v}) out of range")
            if w <= 0:
                raise ValueError(f"edge ({u},{v}) has non-positive weight {w}")
            norm.append((u, v, w))
        object.__setattr__(self, "edges", tuple(norm))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_vertices, self.n_vertices))
        for u, v, w in self.edges:
            a[u, v] += w
            a[v, u] += w
        return a

    def is_connected(self) -> bool:
        if self.n_vertices == 1:
            return True
        nbr: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for u, v, _ in self.edges:
            nbr[u].append(v)
            nbr[v].append(u)
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in nbr[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n_vertices


def laplacian(g: Graph) -> np.ndarray:
    """Combinatorial Laplacian L = D - A (weighted degrees on the diagonal)."""
    a = g.adjacency()
    return np.diag(a.sum(axis=1)) - a


def squared_radius(m: np.ndarray) -> float:
    """Maximum diagonal entry of the pseudo-inverse of a PSD matrix."""
    m = symmetrize(m)
    w, v = eigh(m)
    tol = PSD_TOL * max(np.linalg.norm(m), 1e-300)
    if w[-1] < -tol:
        raise NotPSDError(f"min eigenvalue {w[-1]:.3e} below -{tol:.3e}")
    cutoff = RANK_TOL * np.max(np.abs(w), initial=0.0)
    inv_w = np.where(np.abs(w) > cutoff, 1.0 / np.where(w == 0.0, 1.0, w), 0.0)
    diag = np.einsum("ik,k,ik->i", v, inv_w, v)
    return float(np.max(diag))


def pd_laplacian(g: Graph) -> np.ndarray:
    """Strictly PD Laplacian: L plus (squared radius of L)/m^2 times all-ones."""
    if not g.is_connected():
        raise NotConnectedError("PD-Laplacian requires a connected graph")
    lap = laplacian(g)
    m = g.n_vertices
    return lap + squared_radius(lap) / (m * m) * np.ones((m, m))


def effective_resistance(g: Graph, i: int, j: int) -> float:
    """Electrical-network distance (e_i - e_j)^T L^+ (e_i - e_j)."""
    if i == j:
        return 0.0
    if not g.is_connected():
        raise NotConnectedError("effective resistance requires a connected graph")
    lp = pinv(laplacian(g))
    return float(lp[i, i] + lp[j, j] - 2.0 * lp[i, j])


def resistance_matrix(g: Graph) -> np.ndarray:
    """All-pairs effective resistances from a single pseudo-inverse."""
    if not g.is_connected():
        raise NotConnectedError("effective resistance requires a connected graph")
    lp = pinv(laplacian(g))
    d = np.diag(lp)
    return d[:, None] + d[None, :] - 2.0 * lp


# --- text file formats -------------------------------------------------------
# Matrix: first line "<rows> <cols>", then rows of whitespace-separated values.
# Graph: first line "<n_vertices> <n_edges>", then "u v w" lines (w optional).


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_matrix(path, a: np.ndarray) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{a.shape[0]} {a.shape[1]}\n")
        for row in a:
            fh.write(" ".join(_fmt(x) for x in row) + "\n")


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        rows, cols = (int(t) for t in fh.readline().split())
        a = np.loadtxt(fh, ndmin=2)
    if a.shape != (rows, cols):
        raise ValueError(f"{path}: header says {rows}x{cols}, data is {a.shape}")
    return a


def write_graph(path, g: Graph) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{g.n_vertices} {len(g.edges)}\n")
        for u, v, w in g.edges:
            fh.write(f"{u} {v} {_fmt(w)}\n")


def read_graph(path) -> Graph:
    with open(path) as fh:
        n, m = (int(t) for t in fh.readline().split())
        edges = []
        for _ in range(m):
            parts = fh.readline().split()
            if len(parts) == 2:
                edges.append((int(parts[0]), int(parts[1]), 1.0))
            else:
                edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
    return Graph(n, tuple(edges))
