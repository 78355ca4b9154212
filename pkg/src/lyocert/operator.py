"""Discretized projective transfer operators for d = 2 cocycles.

Real, complex-weight, twisted, and chain Markov operators on a uniform
angular grid over the projective line, with leading-eigenpair extraction,
holomorphic-extension evaluation, contour Taylor coefficients, and the
Neumann contraction criterion.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .geometry import MatrixTuple
from .oracles import _max_workers

DENSE_EIG_LIMIT = 600
MODULUS_SHELL = 1e-8


class EigenvalueCollisionError(ArithmeticError):
    """Two distinct eigenvalues share the maximal modulus: isolation lost."""


class ContourTooLargeError(ArithmeticError):
    """A contour point left the region where the leading eigenvalue is simple."""


class ResolventSolveError(ArithmeticError):
    """A resolvent linear solve failed on the isolating circle."""


@dataclass(frozen=True)
class ProjectiveGrid:
    """Uniform angular grid on the projective line: angles j*pi/m."""

    m: int
    angles: np.ndarray
    nodes: np.ndarray  # (m, 2) unit vectors

    @property
    def spacing(self) -> float:
        return math.pi / self.m


def build_grid(m: int) -> ProjectiveGrid:
    """Uniform m-node grid; m >= 8."""
    if m < 8:
        raise ValueError(f"grid needs m >= 8 nodes, got {m}")
    angles = np.arange(m) * (math.pi / m)
    nodes = np.column_stack([np.cos(angles), np.sin(angles)])
    angles.setflags(write=False)
    nodes.setflags(write=False)
    return ProjectiveGrid(m=m, angles=angles, nodes=nodes)


@dataclass(frozen=True)
class DiscretizedOperator:
    """Dense matrix representation of a (possibly complex/twisted) operator."""

    grid: ProjectiveGrid
    matrix: np.ndarray
    weights: np.ndarray | None  # complex z for iid, None for chain form
    transition: np.ndarray | None  # chain P, None for iid
    twist: float
    n_states: int  # 1 for iid, N for chain block form

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class FunctionalOnGrid:
    """Left functional eta as node weights, normalized eta(1) = 1."""

    weights: np.ndarray

    def __call__(self, values: np.ndarray) -> complex:
        return complex(np.dot(self.weights, values))


def log_stretch_table(tuple_: MatrixTuple, grid: ProjectiveGrid) -> np.ndarray:
    """phi(A_i, v_j) = log ||A_i v_j|| on the grid, shape (N, m)."""
    out = np.empty((tuple_.N, grid.m))
    for i, g in enumerate(tuple_.matrices):
        img = grid.nodes @ g.T
        out[i] = 0.5 * np.log(np.einsum("ij,ij->i", img, img))
    return out


def _interpolation_matrix(g: np.ndarray, grid: ProjectiveGrid) -> np.ndarray:
    """Row-stochastic matrix of the grid dynamics v_j -> g v_j.

    The image angle is resolved onto its two neighboring nodes with periodic
    (period pi) linear hat weights, so rows sum to 1 exactly.
    """
    m = grid.m
    img = grid.nodes @ g.T
    ang = np.mod(np.arctan2(img[:, 1], img[:, 0]), math.pi)
    u = ang * (m / math.pi)
    j0 = np.floor(u).astype(int) % m
    w = u - np.floor(u)
    T = np.zeros((m, m))
    rows = np.arange(m)
    np.add.at(T, (rows, j0), 1.0 - w)
    np.add.at(T, (rows, (j0 + 1) % m), w)
    return T


def assemble_operator(tuple_: MatrixTuple, z, grid: ProjectiveGrid,
                      twist: float = 0.0) -> DiscretizedOperator:
    """Weighted (optionally twisted) projective Markov operator.

    Row j carries sum_i z_i e^{twist * phi(A_i, v_j)} times the hat weights
    of the image angle of A_i v_j. For real simplex z and twist 0 the result
    is row-stochastic.
    """
    if tuple_.d != 2:
        raise ValueError("operator discretization is implemented for d = 2 only")
    z = np.asarray(z, dtype=complex)
    if z.shape != (tuple_.N,):
        raise ValueError(f"need {tuple_.N} weights, got shape {z.shape}")
    if abs(z.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1, got {z.sum()}")
    phis = log_stretch_table(tuple_, grid)
    M = np.zeros((grid.m, grid.m), dtype=complex)
    for i, g in enumerate(tuple_.matrices):
        factor = z[i] * np.exp(twist * phis[i]) if twist != 0.0 else z[i]
        M += (factor[:, None] if twist != 0.0 else factor) \
            * _interpolation_matrix(g, grid)
    if twist == 0.0 and np.all(np.abs(z.imag) == 0.0):
        M = M.real.astype(complex)
    M.setflags(write=False)
    return DiscretizedOperator(grid=grid, matrix=M, weights=z,
                               transition=None, twist=twist, n_states=1)


def assemble_chain_operator(P, tuple_: MatrixTuple,
                            grid: ProjectiveGrid) -> DiscretizedOperator:
    """Block operator of the chain-driven cocycle: block (i,j) = P_ij T_{A_j}."""
    if tuple_.d != 2:
        raise ValueError("operator discretization is implemented for d = 2 only")
    P = np.asarray(P, dtype=complex)
    N, m = tuple_.N, grid.m
    if P.shape != (N, N):
        raise ValueError(f"transition matrix must be {N}x{N}")
    if np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-12:
        raise ValueError("transition rows must sum to 1")
    blocks = [_interpolation_matrix(g, grid) for g in tuple_.matrices]
    M = np.zeros((N * m, N * m), dtype=complex)
    for i in range(N):
        for j in range(N):
            M[i * m:(i + 1) * m, j * m:(j + 1) * m] = P[i, j] * blocks[j]
    M.setflags(write=False)
    return DiscretizedOperator(grid=grid, matrix=M, weights=None,
                               transition=P, twist=0.0, n_states=N)


# ---------------------------------------------------------------------------
# Eigen extraction.

def _top_eigenvalues(M: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """k largest-modulus eigenpairs (values desc by modulus, right vectors)."""
    n = M.shape[0]
    if n <= DENSE_EIG_LIMIT or k >= n - 2:
        vals, vecs = scipy.linalg.eig(M)
    else:
        try:
            vals, vecs = scipy.sparse.linalg.eigs(M, k=min(k, n - 2), which="LM",
                                                  maxiter=5000, tol=1e-12)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            vals, vecs = exc.eigenvalues, exc.eigenvectors
            if vals is None or len(vals) == 0:
                vals, vecs = scipy.linalg.eig(M)
    order = np.argsort(-np.abs(vals))[:k]
    return vals[order], vecs[:, order]


def _select_leading(vals: np.ndarray) -> int:
    """Index of the maximal-modulus eigenvalue closest to 1; collision on ties."""
    mods = np.abs(vals)
    shell = np.flatnonzero(mods >= mods.max() - MODULUS_SHELL)
    best = shell[np.argmin(np.abs(vals[shell] - 1.0))]
    for idx in shell:
        if idx != best and abs(vals[idx] - vals[best]) > MODULUS_SHELL:
            raise EigenvalueCollisionError(
                f"maximal-modulus eigenvalues {vals[best]} and {vals[idx]} "
                "collide: leading eigenvalue is not isolated")
    return int(best)


def leading_eigenpair(op: DiscretizedOperator, k: int = 8):
    """(mu, right vector, left FunctionalOnGrid) of the assembled operator.

    The right vector has unit sup-norm; the left functional is normalized so
    that it maps the constant 1-vector to 1. Raises EigenvalueCollisionError
    when two distinct eigenvalues share the maximal modulus.
    """
    M = op.matrix
    vals, vecs = _top_eigenvalues(M, k)
    idx = _select_leading(vals)
    mu = complex(vals[idx])
    right = vecs[:, idx]
    peak = np.argmax(np.abs(right))
    right = right / right[peak]

    lvals, lvecs = _top_eigenvalues(M.T, k)
    lidx = int(np.argmin(np.abs(lvals - mu)))
    if abs(lvals[lidx] - mu) > 1e-6 * max(1.0, abs(mu)):
        raise ResolventSolveError(
            f"left solve found no eigenvalue matching mu = {mu}")
    left = lvecs[:, lidx]
    mass = left.sum()
    if abs(mass) < 1e-14:
        raise ResolventSolveError("left eigenvector has vanishing total mass")
    eta = left / mass
    if op.weights is not None and np.all(np.abs(np.asarray(op.weights).imag) == 0.0):
        eta = eta.real + 0j
    return mu, right, FunctionalOnGrid(weights=eta)


def spectral_gap_measured(op: DiscretizedOperator, k: int = 8) -> tuple[float, float]:
    """(second-largest eigenvalue modulus rho2, gap 1 - rho2)."""
    vals, _ = _top_eigenvalues(op.matrix, k)
    mods = np.sort(np.abs(vals))[::-1]
    rho2 = float(mods[1]) if len(mods) > 1 else 0.0
    return rho2, 1.0 - rho2


# ---------------------------------------------------------------------------
# Holomorphic extension values.

def analytic_extension_value(tuple_: MatrixTuple, z, grid: ProjectiveGrid,
                             phis: np.ndarray | None = None) -> complex:
    """lambda~_+(z) = sum_i z_i eta_z(phi(A_i, .)) on the grid."""
    op = assemble_operator(tuple_, z, grid)
    _, _, eta = leading_eigenpair(op)
    if phis is None:
        phis = log_stretch_table(tuple_, grid)
    z = np.asarray(z, dtype=complex)
    return complex(np.dot(z, phis @ eta.weights))


def lyapunov_via_log_deriv(tuple_: MatrixTuple, p, grid: ProjectiveGrid,
                           h: float = 1e-3) -> float:
    """Log-derivative at s = 0 of the twisted leading eigenvalue.

    Central difference (log mu(h) - log mu(-h)) / (2h).
    """
    if not 0.0 < h <= 0.1:
        raise ValueError("twist step h must lie in (0, 0.1]")
    mu_plus, _, _ = leading_eigenpair(assemble_operator(tuple_, p, grid, twist=h))
    mu_minus, _, _ = leading_eigenpair(assemble_operator(tuple_, p, grid, twist=-h))
    return float((np.log(mu_plus) - np.log(mu_minus)).real / (2.0 * h))


def chain_extension_value(P, tuple_: MatrixTuple, grid: ProjectiveGrid) -> complex:
    """Chain Furstenberg-Khasminskii value from the block operator.

    Uses the leading left functional eta of the block operator, normalized to
    total mass 1; the value is sum_{i,j} P_ij eta_i(phi(A_j, .)).
    """
    op = assemble_chain_operator(P, tuple_, grid)
    _, _, eta = leading_eigenpair(op)
    m = grid.m
    P = np.asarray(P, dtype=complex)
    phis = log_stretch_table(tuple_, grid)
    val = 0.0 + 0.0j
    for i in range(tuple_.N):
        eta_i = eta.weights[i * m:(i + 1) * m]
        for j in range(tuple_.N):
            val += P[i, j] * np.dot(eta_i, phis[j])
    return complex(val)


# ---------------------------------------------------------------------------
# Contour Taylor coefficients and sharp-radius surrogate.

def taylor_coefficients(tuple_: MatrixTuple, p0, direction, order: int,
                        contour_radius: float, nodes: int,
                        grid: ProjectiveGrid) -> np.ndarray:
    """Coefficients c_0..c_order of t -> lambda~_+(p0 + t u), |t| = contour_radius.

    Trapezoid quadrature of the Cauchy integral with `nodes` equally spaced
    contour points; requires nodes >= 4 * order and a zero-sum direction.
    """
    p0 = np.asarray(p0, dtype=float)
    u = np.asarray(direction, dtype=float)
    if np.allclose(u, 0.0):
        raise ValueError("direction must be nonzero")
    if abs(u.sum()) > 1e-12:
        raise ValueError("direction must be zero-sum to stay on the hyperplane")
    if nodes < 4 * order:
        raise ValueError(f"need >= {4 * order} contour nodes for order {order}")
    if contour_radius <= 0.0:
        raise ValueError("contour radius must be positive")
    thetas = 2.0 * math.pi * np.arange(nodes) / nodes
    phis = log_stretch_table(tuple_, grid)

    def _eval(theta):
        z = p0 + contour_radius * np.exp(1j * theta) * u
        return analytic_extension_value(tuple_, z, grid, phis)

    try:
        workers = _max_workers()
        if workers > 1 and nodes > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                values = np.array(list(pool.map(_eval, thetas)), dtype=complex)
        else:
            values = np.array([_eval(t) for t in thetas], dtype=complex)
    except EigenvalueCollisionError as exc:
        raise ContourTooLargeError(
            f"leading eigenvalue collided on the contour of radius "
            f"{contour_radius}: {exc}") from exc

    js = np.arange(order + 1)
    kernel = np.exp(-1j * np.outer(js, thetas))
    return (kernel @ values) / nodes / contour_radius ** js


def estimate_sharp_radius(coefficients) -> dict:
    """Finite-order Cauchy-Hadamard surrogate for the convergence radius.

    1 / max_{j >= J/2} |c_j|^{1/j}; flagged indeterminate when the whole tail
    sits below 1e-14 (polynomial-like coefficient decay).
    """
    c = np.asarray(coefficients, dtype=complex)
    if len(c) < 8:
        raise ValueError("need at least 8 coefficients")
    J = len(c) - 1
    tail = np.arange(math.ceil(J / 2), J + 1)
    mags = np.abs(c[tail])
    if np.all(mags < 1e-14):
        return {"radius": math.inf, "indeterminate": True}
    roots = mags[mags > 0] ** (1.0 / tail[mags > 0])
    return {"radius": float(1.0 / roots.max()), "indeterminate": False}


# ---------------------------------------------------------------------------
# Holomorphy and Neumann checks.

def cr_holomorphy_check(evaluator, t0: complex, h: float) -> float:
    """Cauchy-Riemann residual |d_x f - (1/i) d_y f| by central differences."""
    if not 1e-6 < h < 1e-2:
        raise ValueError("h must lie in (1e-6, 1e-2)")
    dfdx = (evaluator(t0 + h) - evaluator(t0 - h)) / (2.0 * h)
    dfdy = (evaluator(t0 + 1j * h) - evaluator(t0 - 1j * h)) / (2.0 * h)
    return float(abs(dfdx + 1j * dfdy))


def neumann_criterion_check(tuple_: MatrixTuple, p0, z, grid: ProjectiveGrid,
                            rho_star: float, contour_nodes: int = 8) -> float:
    """max over the isolating circle of ||(P_z - P_p0)(zeta I - P_p0)^{-1}||.

    zeta runs over contour_nodes points on |zeta - 1| = rho_star; the value
    reports the Neumann-series contraction factor of the perturbed resolvent.
    """
    M0 = assemble_operator(tuple_, p0, grid).matrix
    Dz = assemble_operator(tuple_, z, grid).matrix - M0
    m = grid.m
    worst = 0.0
    for q in range(contour_nodes):
        zeta = 1.0 + rho_star * np.exp(2j * math.pi * (q + 0.5) / contour_nodes)
        S = zeta * np.eye(m) - M0
        try:
            X = scipy.linalg.solve(S.T, Dz.T).T
        except scipy.linalg.LinAlgError as exc:
            raise ResolventSolveError(
                f"resolvent solve failed at zeta = {zeta}") from exc
        worst = max(worst, float(np.linalg.norm(X, 2)))
    return worst
