"""Attributed graphs as (features, structure, node weights) triples.

A graph here is the optimal-transport view of a molecule or an abstract
network: a node feature matrix ``H`` (n x d), a symmetric structure matrix
``A`` (n x n, e.g. interatomic distances in Angstrom), and a probability
vector ``omega`` over the nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

SYMMETRY_RTOL = 1e-12
SIMPLEX_ATOL = 1e-9


class Loss(Enum):
    SQUARE = "l2"
    KL = "kl"


@dataclass(frozen=True)
class AttributedGraph:
    """Immutable attributed graph (H, A, omega).

    Parameters
    ----------
    H : ndarray, shape (n, d)
        Node feature matrix.
    A : ndarray, shape (n, n)
        Symmetric structure matrix (zero diagonal for distance matrices).
    omega : ndarray, shape (n,)
        Node weight histogram on the simplex. Defaults to uniform.
    """

    H: np.ndarray
    A: np.ndarray
    omega: np.ndarray = None

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        A = np.asarray(self.A, dtype=float)
        if H.ndim != 2:
            raise ValueError("H must be a 2-D matrix")
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be a square matrix")
        if A.shape[0] != H.shape[0]:
            raise ValueError(
                f"A is {A.shape[0]}x{A.shape[1]} but H has {H.shape[0]} rows"
            )
        omega = self.omega
        if omega is None:
            omega = np.full(H.shape[0], 1.0 / H.shape[0])
        omega = np.asarray(omega, dtype=float)
        if omega.shape != (H.shape[0],):
            raise ValueError("omega length must equal the node count")
        # Symmetrize within tolerance; reject genuinely asymmetric input.
        scale = np.maximum(1.0, np.abs(A))
        if np.any(np.abs(A - A.T) > SYMMETRY_RTOL * np.maximum(scale, scale.T)):
            raise ValueError("A is asymmetric beyond tolerance")
        A = 0.5 * (A + A.T)
        for name, arr in (("H", H), ("A", A), ("omega", omega)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def d(self) -> int:
        return self.H.shape[1]


@dataclass(frozen=True)
class FgwParams:
    """Solver parameters shared by the FGW distance and barycenter paths."""

    alpha: float = 0.5
    p: int = 2
    epsilon: float = 0.1
    loss: Loss = Loss.SQUARE
    inner_iters: int = 30
    sinkhorn_iters: int = 50
    outer_iters: int = 10
    tol: float = 1e-6

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.p < 1:
            raise ValueError("p must be a positive integer")
        for name in ("inner_iters", "sinkhorn_iters", "outer_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)


def validate_graph(g: AttributedGraph) -> ValidationReport:
    """Diagnostic check of the graph invariants; never raises."""
    violations = []
    for name, arr in (("H", g.H), ("A", g.A), ("omega", g.omega)):
        if not np.all(np.isfinite(arr)):
            violations.append(f"{name} contains non-finite entries")
    scale = np.maximum(1.0, np.abs(g.A))
    if np.any(np.abs(g.A - g.A.T) > SYMMETRY_RTOL * np.maximum(scale, scale.T)):
        violations.append("A is asymmetric")
    if np.any(g.omega < 0):
        violations.append("omega has negative entries")
    total = float(np.sum(g.omega))
    if abs(total - 1.0) > SIMPLEX_ATOL:
        violations.append(f"weights sum {total:.6g} != 1")
    return ValidationReport(ok=not violations, violations=violations)


def check_raw_graph(H, A, omega=None) -> ValidationReport:
    """Validate raw arrays without constructing an AttributedGraph.

    Used by the CLI ``validate`` path so that invalid input produces a
    report instead of a constructor exception.
    """
    violations = []
    H = np.asarray(H, dtype=float)
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        violations.append("A is not square")
        return ValidationReport(ok=False, violations=violations)
    if omega is None:
        omega = np.full(H.shape[0], 1.0 / H.shape[0])
    omega = np.asarray(omega, dtype=float)
    for name, arr in (("H", H), ("A", A), ("omega", omega)):
        if not np.all(np.isfinite(arr)):
            violations.append(f"{name} contains non-finite entries")
    scale = np.maximum(1.0, np.abs(A))
    if np.any(np.abs(A - A.T) > SYMMETRY_RTOL * np.maximum(scale, scale.T)):
        violations.append("A is asymmetric")
    if np.any(omega < 0):
        violations.append("omega has negative entries")
    total = float(np.sum(omega))
    if abs(total - 1.0) > SIMPLEX_ATOL:
        violations.append(f"weights sum {total:.6g} != 1")
    return ValidationReport(ok=not violations, violations=violations)


def permute_nodes(g: AttributedGraph, perm) -> AttributedGraph:
    """Apply a node permutation consistently to H rows, A rows+cols, omega."""
    perm = np.asarray(perm, dtype=int)
    if perm.shape != (g.n,) or sorted(perm.tolist()) != list(range(g.n)):
        raise ValueError(f"permutation size != {g.n} or not a bijection")
    return AttributedGraph(
        H=g.H[perm], A=g.A[np.ix_(perm, perm)], omega=g.omega[perm]
    )


def feature_distance_matrix(H1, H2, p: int = 2) -> np.ndarray:
    """Pairwise Euclidean feature distances raised to the power ``p``.

    M[i, j] = ||H1[i] - H2[j]||^p. Computed from explicit row differences
    so identical rows give an exact zero.
    """
    H1 = np.atleast_2d(np.asarray(H1, dtype=float))
    H2 = np.atleast_2d(np.asarray(H2, dtype=float))
    if H1.shape[1] != H2.shape[1]:
        raise ValueError(
            f"feature dimension mismatch: {H1.shape[1]} vs {H2.shape[1]}"
        )
    diff = H1[:, None, :] - H2[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    if p == 2:
        return sq
    return np.sqrt(sq) ** p
