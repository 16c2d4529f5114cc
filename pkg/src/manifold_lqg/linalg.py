"""Dense kernels: discrete Lyapunov / Riccati solvers and spectral helpers.

Everything here is a pure function of its inputs. The Lyapunov solver works on
the Kronecker-vectorized system ``(I - A kron A) vec(X) = vec(Z)``, which is
exact and cheap for the state sizes used in this package (n <= ~10).
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import (
    NoConvergence,
    NonSquare,
    NotStabilizable,
    NotStable,
    NotSymmetric,
    SingularSolve,
)

STABILITY_MARGIN = 1e-9
SYMMETRY_TOL = 1e-12
DARE_TOL = 1e-12
DARE_MAX_ITER = 100


def _square(M, name="matrix"):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NonSquare(f"{name} must be square, got shape {M.shape}")
    return M


def symmetrize(M):
    return 0.5 * (M + M.T)


def spectral_radius(M) -> float:
    M = _square(M)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def sym_eig_extremes(M, tol: float = SYMMETRY_TOL) -> tuple[float, float]:
    M = _square(M)
    if np.linalg.norm(M - M.T) > tol * (1.0 + np.linalg.norm(M)):
        raise NotSymmetric("matrix is not symmetric")
    w = np.linalg.eigvalsh(symmetrize(M))
    return float(w[0]), float(w[-1])


class LyapunovSolver:
    """Factored solver for ``X = A X A^T + Z`` with a fixed ``A``.

    The LU factorization of ``I - A kron A`` is computed once, so repeated
    right-hand sides (directional derivatives, Christoffel assembly) cost only
    a pair of triangular solves each.
    """

    def __init__(self, A, margin: float = STABILITY_MARGIN):
        A = _square(A, "A")
        rho = spectral_radius(A)
        if rho >= 1.0 - margin:
            raise NotStable(f"spectral radius {rho:.6g} is not below 1")
        self.A = A
        self.n = A.shape[0]
        op = np.eye(self.n * self.n) - np.kron(A, A)
        try:
            with np.errstate(all="raise"):
                self._lu = sla.lu_factor(op, check_finite=True)
        except (sla.LinAlgError, FloatingPointError, ValueError) as exc:
            raise SingularSolve(str(exc)) from exc
        if np.min(np.abs(np.diag(self._lu[0]))) < 1e-14:
            raise SingularSolve("vectorized Lyapunov operator is numerically singular")

    def solve(self, Z):
        Z = np.asarray(Z, dtype=float)
        x = sla.lu_solve(self._lu, Z.reshape(-1))
        return symmetrize(x.reshape(self.n, self.n))

    def solve_many(self, Zs):
        """Solve for a stack of right-hand sides with shape ``(k, n, n)``."""
        Zs = np.asarray(Zs, dtype=float)
        k = Zs.shape[0]
        if k == 0:
            return np.zeros((0, self.n, self.n))
        X = sla.lu_solve(self._lu, Zs.reshape(k, -1).T).T.reshape(k, self.n, self.n)
        return 0.5 * (X + X.transpose(0, 2, 1))


def solve_discrete_lyapunov(A, Z):
    """Return the unique ``X`` with ``X = A X A^T + Z`` (requires rho(A) < 1)."""
    Z = _square(Z, "Z")
    return LyapunovSolver(A).solve(Z)


def lyapunov_residual(A, X, Z) -> float:
    return float(np.linalg.norm(X - A @ X @ A.T - Z))


def dare_residual(A, B, Q, R, P) -> float:
    BtPA = B.T @ P @ A
    rhs = A.T @ P @ A - BtPA.T @ np.linalg.solve(R + B.T @ P @ B, BtPA) + Q
    return float(np.linalg.norm(P - rhs))


def _newton_kleinman(A, B, Q, R, K, tol, max_iter):
    # Hewer iteration: policy evaluation by Lyapunov solve, then greedy gain
    P = None
    for it in range(max_iter):
        Acl = A + B @ K
        P = solve_discrete_lyapunov(Acl.T, Q + K.T @ R @ K)
        K_new = -np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
        stalled = np.linalg.norm(K_new - K) <= 1e-14 * (1.0 + np.linalg.norm(K))
        if stalled or dare_residual(A, B, Q, R, P) <= tol * (1.0 + np.linalg.norm(Q)):
            K = K_new
            P = solve_discrete_lyapunov((A + B @ K).T, Q + K.T @ R @ K)
            return P, K, it + 1
        K = K_new
    raise NoConvergence(f"Newton-Kleinman did not converge in {max_iter} iterations")


def _stabilizing_seed(A, B, Q, R, max_stages=60):
    """Find K with rho(A + BK) < 1 by a discount homotopy on the scaled pair (A/r, B/r)."""
    m, n = B.shape[1], A.shape[0]
    K = np.zeros((m, n))
    rho = spectral_radius(A)
    if rho < 1.0 - STABILITY_MARGIN:
        return K
    r = 1.5 * rho + 0.5
    for _ in range(max_stages):
        try:
            _, K, _ = _newton_kleinman(A / r, B / r, Q, R, K, 1e-10, DARE_MAX_ITER)
        except (NotStable, SingularSolve, NoConvergence) as exc:
            raise NotStabilizable("could not build a stabilizing seed gain") from exc
        rho_cl = spectral_radius(A + B @ K)
        if rho_cl < 1.0 - 1e-6:
            return K
        r_next = 0.5 * (r + rho_cl)
        if r_next >= r * (1 - 1e-9):
            break
        r = r_next
    raise NotStabilizable("(A, B) appears not to be stabilizable")


def solve_dare(A, B, Q, R, K0=None, tol: float = DARE_TOL, max_iter: int = DARE_MAX_ITER):
    """Solve ``P = A'PA - A'PB (R + B'PB)^-1 B'PA + Q`` by Newton-Kleinman.

    Returns ``(P, K_opt)`` with ``K_opt = -(R + B'PB)^-1 B'PA`` so that the
    closed loop is ``A + B K_opt`` (the ``u = Kx`` convention used throughout).
    """
    A = _square(A, "A")
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Q = _square(Q, "Q")
    R = _square(R, "R")
    if K0 is None:
        K0 = _stabilizing_seed(A, B, Q, R)
    elif spectral_radius(A + B @ K0) >= 1.0 - STABILITY_MARGIN:
        raise NotStabilizable("supplied seed gain is not stabilizing")
    P, K, _ = _newton_kleinman(A, B, Q, R, np.asarray(K0, dtype=float), tol, max_iter)
    return P, K
