"""Newton correction of homoclinic predictors against the defining system.

The defining system couples orthogonal collocation of the rescaled orbit,
the saddle equation, an integral phase condition against a reference orbit,
projection boundary conditions built from Riccati-updated invariant-subspace
bases, and the two end-distance equations.  The system has one unknown more
than equations (the homoclinic branch), so corrections are minimum-norm
(Moore-Penrose) Newton steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import OdeModel, eval_rhs
from .nfcoeffs import CmExpansion
from .predictor import (HomPredictor, Mesh, amplitude_to_eps, make_mesh,
                        sample_predictor, Method)

__all__ = [
    "NoConvergenceError",
    "HomBvp",
    "ConvergenceRecord",
    "build_bvp",
    "pack_unknowns",
    "unpack_orbit",
    "bvp_residual",
    "bvp_jacobian",
    "newton_correct",
    "correct_predictor",
    "convergence_study",
]


class NoConvergenceError(Exception):
    pass


def _lagrange_matrices(ncol: int, gauss: np.ndarray):
    """Values and derivatives of the local Lagrange basis at Gauss points."""
    nodes = np.linspace(0.0, 1.0, ncol + 1)
    P = np.empty((ncol + 1, ncol))
    D = np.empty((ncol + 1, ncol))
    for k in range(ncol + 1):
        others = np.delete(nodes, k)
        denom = np.prod(nodes[k] - others)
        for c, g in enumerate(gauss):
            diffs = g - others
            P[k, c] = np.prod(diffs) / denom
            dsum = 0.0
            for j in range(len(others)):
                mask = np.ones(len(others), bool)
                mask[j] = False
                dsum += np.prod(diffs[mask])
            D[k, c] = dsum / denom
    return P, D


@dataclass
class HomBvp:
    """Discretized homoclinic defining system with frozen bases and reference."""

    model: OdeModel
    mesh: Mesh
    T: float
    x_tilde: np.ndarray          # reference orbit on the fine mesh
    QU: np.ndarray
    QUperp: np.ndarray
    QS: np.ndarray
    QSperp: np.ndarray
    n_unstable: int
    n_stable: int
    P: np.ndarray                # local basis values at Gauss points
    D: np.ndarray                # local basis derivatives (unit interval)
    xt_gauss: np.ndarray         # reference orbit at collocation points
    xt_dot_gauss: np.ndarray     # its scaled-time derivative there

    @property
    def n(self) -> int:
        return self.model.dim

    @property
    def n_orbit(self) -> int:
        return self.mesh.ntst * self.mesh.ncol + 1

    def sizes(self):
        n, nU, nS = self.n, self.n_unstable, self.n_stable
        n_orb = self.n_orbit * n
        return {
            "orbit": n_orb,
            "s0": n,
            "alpha": 2,
            "YU": nS * nU,
            "YS": nU * nS,
            "dist": 2,
            "total": n_orb + n + 2 + 2 * nS * nU + 2,
        }


def build_bvp(model: OdeModel, mesh: Mesh, T: float, x_tilde: np.ndarray,
              s0: np.ndarray, alpha: np.ndarray, jac_step: float = 1e-6) -> HomBvp:
    """Freeze eigenspace bases at (s0, alpha) and precompute collocation data."""
    n = model.dim
    A = _fd_jacobian(model, s0, alpha, jac_step)
    TU, ZU, nU = scipy.linalg.schur(A, output="real", sort="rhp")
    if nU == 0 or nU == n:
        raise NoConvergenceError(f"saddle has {nU} unstable directions; need 1..{n-1}")
    TS, ZS, nS = scipy.linalg.schur(A, output="real", sort="lhp")
    if nS != n - nU:
        raise NoConvergenceError("eigenvalues too close to the imaginary axis "
                                 "to split stable/unstable subspaces")
    P, D = _lagrange_matrices(mesh.ncol, mesh.gauss)

    ntst, ncol = mesh.ntst, mesh.ncol
    xt_gauss = np.empty((ntst * ncol, n))
    xt_dot = np.empty((ntst * ncol, n))
    for j in range(ntst):
        seg = x_tilde[j * ncol:j * ncol + ncol + 1]
        xt_gauss[j * ncol:(j + 1) * ncol] = P.T @ seg
        xt_dot[j * ncol:(j + 1) * ncol] = (D.T @ seg) * ntst
    return HomBvp(model=model, mesh=mesh, T=float(T), x_tilde=np.array(x_tilde),
                  QU=ZU[:, :nU], QUperp=ZU[:, nU:], QS=ZS[:, :nS],
                  QSperp=ZS[:, nS:], n_unstable=nU, n_stable=nS,
                  P=P, D=D, xt_gauss=xt_gauss, xt_dot_gauss=xt_dot)


def _fd_jacobian(model, x, alpha, h=1e-6):
    n = model.dim
    scale = h * (1.0 + float(np.linalg.norm(x)))
    J = np.empty((n, n))
    for i in range(n):
        dx = np.zeros(n)
        dx[i] = scale
        J[:, i] = (eval_rhs(model, x + dx, alpha) - eval_rhs(model, x - dx, alpha)) / (2 * scale)
    return J


def _fd_param_jacobian(model, x, alpha, h=1e-6):
    n = model.dim
    scale = h * (1.0 + float(np.linalg.norm(alpha)))
    J = np.empty((n, 2))
    for i in range(2):
        da = np.zeros(2)
        da[i] = scale
        J[:, i] = (eval_rhs(model, x, alpha + da) - eval_rhs(model, x, alpha - da)) / (2 * scale)
    return J


def pack_unknowns(bvp: HomBvp, orbit, s0, alpha, YU=None, YS=None,
                  eps0=0.0, eps1=0.0) -> np.ndarray:
    nU, nS = bvp.n_unstable, bvp.n_stable
    YU = np.zeros((nS, nU)) if YU is None else YU
    YS = np.zeros((nU, nS)) if YS is None else YS
    return np.concatenate([np.asarray(orbit, float).ravel(), np.asarray(s0, float),
                           np.asarray(alpha, float), YU.ravel(), YS.ravel(),
                           [eps0, eps1]])


def _unpack(bvp: HomBvp, z: np.ndarray):
    n, nU, nS = bvp.n, bvp.n_unstable, bvp.n_stable
    n_orb = bvp.n_orbit * n
    orbit = z[:n_orb].reshape(bvp.n_orbit, n)
    s0 = z[n_orb:n_orb + n]
    alpha = z[n_orb + n:n_orb + n + 2]
    o = n_orb + n + 2
    YU = z[o:o + nS * nU].reshape(nS, nU)
    YS = z[o + nS * nU:o + 2 * nS * nU].reshape(nU, nS)
    eps0, eps1 = z[-2], z[-1]
    return orbit, s0, alpha, YU, YS, eps0, eps1


def unpack_orbit(bvp: HomBvp, z: np.ndarray) -> np.ndarray:
    return _unpack(bvp, z)[0]


def _ricatti(t, Y, nU):
    t11, t12 = t[:nU, :nU], t[:nU, nU:]
    t21, t22 = t[nU:, :nU], t[nU:, nU:]
    return t22 @ Y - Y @ t11 + t21 - Y @ t12 @ Y


def bvp_residual(bvp: HomBvp, z: np.ndarray) -> np.ndarray:
    sizes = bvp.sizes()
    if z.size != sizes["total"]:
        raise ValueError(f"unknown vector has size {z.size}, expected {sizes['total']}")
    orbit, s0, alpha, YU, YS, eps0, eps1 = _unpack(bvp, z)
    model, mesh = bvp.model, bvp.mesh
    ntst, ncol, n = mesh.ntst, mesh.ncol, bvp.n

    # collocation: dx/dsigma = 2T f(x, alpha) at Gauss points; the rows are
    # scaled by 1/(2T) so the residual is in vector-field units regardless of
    # the half-return time (the Newton step is invariant under row scaling)
    xg = np.empty((ntst * ncol, n))
    dxg = np.empty((ntst * ncol, n))
    for j in range(ntst):
        seg = orbit[j * ncol:j * ncol + ncol + 1]
        xg[j * ncol:(j + 1) * ncol] = bvp.P.T @ seg
        dxg[j * ncol:(j + 1) * ncol] = (bvp.D.T @ seg) * ntst
    coll = dxg / (2.0 * bvp.T) - eval_rhs(model, xg, alpha)

    saddle = eval_rhs(model, s0, alpha)

    w = np.tile(bvp.mesh.gauss_weights, ntst) / ntst
    phase = float(np.sum(w[:, None] * bvp.xt_dot_gauss * (xg - bvp.xt_gauss)))

    PU = bvp.QUperp - bvp.QU @ YU.T      # n x nS, orthogonal to the unstable space
    PS = bvp.QSperp - bvp.QS @ YS.T      # n x nU, orthogonal to the stable space
    bc_left = PU.T @ (orbit[0] - s0)
    bc_right = PS.T @ (orbit[-1] - s0)

    A = _fd_jacobian(model, s0, alpha)
    QUfull = np.hstack([bvp.QU, bvp.QUperp])
    QSfull = np.hstack([bvp.QS, bvp.QSperp])
    ric_u = _ricatti(QUfull.T @ A @ QUfull, YU, bvp.n_unstable)
    ric_s = _ricatti(QSfull.T @ A @ QSfull, YS, bvp.n_stable)

    dist0 = np.linalg.norm(orbit[0] - s0) - eps0
    dist1 = np.linalg.norm(orbit[-1] - s0) - eps1

    return np.concatenate([coll.ravel(), saddle, [phase], bc_left, bc_right,
                           ric_u.ravel(), ric_s.ravel(), [dist0, dist1]])


def bvp_jacobian(bvp: HomBvp, z: np.ndarray) -> np.ndarray:
    orbit, s0, alpha, YU, YS, eps0, eps1 = _unpack(bvp, z)
    model, mesh = bvp.model, bvp.mesh
    ntst, ncol, n = mesh.ntst, mesh.ncol, bvp.n
    nU, nS = bvp.n_unstable, bvp.n_stable
    sizes = bvp.sizes()
    m_total = sizes["total"]
    n_orb = sizes["orbit"]
    i_s0 = n_orb
    i_al = n_orb + n
    i_yu = i_al + 2
    i_ys = i_yu + nS * nU
    i_e0 = m_total - 2

    xg = np.empty((ntst * ncol, n))
    for j in range(ntst):
        seg = orbit[j * ncol:j * ncol + ncol + 1]
        xg[j * ncol:(j + 1) * ncol] = bvp.P.T @ seg

    # batched state/parameter Jacobians of f at all collocation points
    hx = 1e-6 * (1.0 + np.max(np.abs(xg)))
    fx = np.empty((ntst * ncol, n, n))
    for i in range(n):
        dx = np.zeros(n)
        dx[i] = hx
        fx[:, :, i] = (eval_rhs(model, xg + dx, alpha) - eval_rhs(model, xg - dx, alpha)) / (2 * hx)
    ha = 1e-6 * (1.0 + np.max(np.abs(alpha)))
    fa = np.empty((ntst * ncol, n, 2))
    for i in range(2):
        da = np.zeros(2)
        da[i] = ha
        fa[:, :, i] = (eval_rhs(model, xg, alpha + da) - eval_rhs(model, xg, alpha - da)) / (2 * ha)

    J = np.zeros((m_total - 1, m_total))
    row = 0
    inv2T = 1.0 / (2.0 * bvp.T)
    for j in range(ntst):
        cols = slice(j * ncol * n, (j * ncol + ncol + 1) * n)
        for c in range(ncol):
            g = j * ncol + c
            block = np.zeros((n, (ncol + 1) * n))
            for k in range(ncol + 1):
                block[:, k * n:(k + 1) * n] = (bvp.D[k, c] * ntst * inv2T * np.eye(n)
                                               - bvp.P[k, c] * fx[g])
            J[row:row + n, cols] = block
            J[row:row + n, i_al:i_al + 2] = -fa[g]
            row += n

    # saddle rows
    J[row:row + n, i_s0:i_s0 + n] = _fd_jacobian(model, s0, alpha)
    J[row:row + n, i_al:i_al + 2] = _fd_param_jacobian(model, s0, alpha)
    row += n

    # phase row
    w = np.tile(bvp.mesh.gauss_weights, ntst) / ntst
    for j in range(ntst):
        for c in range(ncol):
            g = j * ncol + c
            coeff = w[g] * bvp.xt_dot_gauss[g]
            for k in range(ncol + 1):
                col = (j * ncol + k) * n
                J[row, col:col + n] += bvp.P[k, c] * coeff
    row += 1

    # boundary condition rows
    PU = bvp.QUperp - bvp.QU @ YU.T
    PS = bvp.QSperp - bvp.QS @ YS.T
    du0 = orbit[0] - s0
    du1 = orbit[-1] - s0
    J[row:row + nS, 0:n] = PU.T
    J[row:row + nS, i_s0:i_s0 + n] = -PU.T
    for r in range(nS):
        for jcol in range(nU):
            J[row + r, i_yu + r * nU + jcol] = -(bvp.QU[:, jcol] @ du0)
    row += nS
    J[row:row + nU, n_orb - n:n_orb] = PS.T
    J[row:row + nU, i_s0:i_s0 + n] = -PS.T
    for r in range(nU):
        for jcol in range(nS):
            J[row + r, i_ys + r * nS + jcol] = -(bvp.QS[:, jcol] @ du1)
    row += nU

    # Riccati rows: analytic in Y, finite differences in (s0, alpha)
    A = _fd_jacobian(model, s0, alpha)
    QUfull = np.hstack([bvp.QU, bvp.QUperp])
    QSfull = np.hstack([bvp.QS, bvp.QSperp])
    tU = QUfull.T @ A @ QUfull
    tS = QSfull.T @ A @ QSfull

    def ric_y_block(t, Y, k):
        left = t[k:, k:] - Y @ t[:k, k:]
        right = t[:k, :k] + t[:k, k:] @ Y
        return np.kron(left, np.eye(Y.shape[1])) - np.kron(np.eye(Y.shape[0]), right.T)

    J[row:row + nS * nU, i_yu:i_yu + nS * nU] = ric_y_block(tU, YU, nU)
    J[row + nS * nU:row + 2 * nS * nU, i_ys:i_ys + nS * nU] = ric_y_block(tS, YS, nS)

    h = 1e-5 * (1.0 + float(np.linalg.norm(s0)))
    for i in range(n + 2):
        sp, ap = s0.copy(), alpha.copy()
        sm, am = s0.copy(), alpha.copy()
        if i < n:
            sp[i] += h
            sm[i] -= h
        else:
            ap[i - n] += h
            am[i - n] -= h
        Ap = _fd_jacobian(model, sp, ap)
        Am = _fd_jacobian(model, sm, am)
        dtU = QUfull.T @ (Ap - Am) @ QUfull / (2 * h)
        dtS = QSfull.T @ (Ap - Am) @ QSfull / (2 * h)
        col = i_s0 + i
        # the Riccati residual is linear homogeneous in the T-blocks
        J[row:row + nS * nU, col] = _ricatti(dtU, YU, nU).ravel()
        J[row + nS * nU:row + 2 * nS * nU, col] = _ricatti(dtS, YS, nS).ravel()
    row += 2 * nS * nU

    # distance rows
    r0 = np.linalg.norm(du0)
    r1 = np.linalg.norm(du1)
    J[row, 0:n] = du0 / r0
    J[row, i_s0:i_s0 + n] = -du0 / r0
    J[row, i_e0] = -1.0
    J[row + 1, n_orb - n:n_orb] = du1 / r1
    J[row + 1, i_s0:i_s0 + n] = -du1 / r1
    J[row + 1, i_e0 + 1] = -1.0
    return J


def newton_correct(bvp: HomBvp, z0: np.ndarray, tol: float = 1e-10,
                   max_iter: int = 20) -> tuple[np.ndarray, int]:
    """Moore-Penrose (minimum-norm) Newton onto the solution manifold."""
    z = np.array(z0, float)
    scale = 1.0 + float(np.max(np.abs(z0)))
    r = bvp_residual(bvp, z)
    for it in range(1, max_iter + 1):
        rn = np.linalg.norm(r)
        if not np.isfinite(rn):
            raise NoConvergenceError("residual became non-finite")
        if rn <= tol * scale:
            return z, it - 1
        J = bvp_jacobian(bvp, z)
        step, *_ = scipy.linalg.lstsq(J, -r, lapack_driver="gelsd")
        damp = 1.0
        for _ in range(6):
            z_new = z + damp * step
            try:
                r_new = bvp_residual(bvp, z_new)
            except Exception:
                r_new = np.array([np.inf])
            if np.linalg.norm(r_new) < rn:
                break
            damp *= 0.5
        else:
            raise NoConvergenceError(f"no descent after damping (residual {rn:.3e})")
        z, r = z_new, r_new
    rn = np.linalg.norm(r)
    if rn <= tol * scale:
        return z, max_iter
    raise NoConvergenceError(f"Newton stalled at residual {rn:.3e}")


def correct_predictor(model: OdeModel, pred: HomPredictor,
                      tol: float = 1e-10) -> tuple[HomBvp, np.ndarray, int]:
    """Build the defining system around a predictor and Newton-correct it."""
    bvp = build_bvp(model, pred.mesh, pred.T, pred.orbit, pred.s0, pred.alpha)
    z0 = pack_unknowns(bvp, pred.orbit, pred.s0, pred.alpha,
                       eps0=pred.eps0, eps1=pred.eps1)
    z, iters = newton_correct(bvp, z0, tol=tol)
    return bvp, z, iters


def correct_with_retries(model: OdeModel, expansion: CmExpansion, method,
                         mesh: Mesh | None = None, eps: float = 0.1,
                         k_factor: float = 1e-4, max_tries: int = 8,
                         tol: float = 1e-10):
    """Automatic perturbation-parameter policy: halve eps until Newton converges.

    Starts at eps = 0.1 with end distance k = eps * 1e-4 and retries up to
    ``max_tries`` times.  Returns (predictor, bvp, corrected z, iterations).
    """
    if mesh is None:
        mesh = make_mesh()
    last_exc = None
    for _ in range(max_tries):
        pred = sample_predictor(expansion, method, eps, mesh, k=eps * k_factor)
        try:
            bvp, z, iters = correct_predictor(model, pred, tol=tol)
            return pred, bvp, z, iters
        except NoConvergenceError as exc:
            last_exc = exc
            eps *= 0.5
    raise NoConvergenceError(
        f"no convergence after {max_tries} eps-halvings: {last_exc}")


@dataclass
class ConvergenceRecord:
    model: str
    method: str
    variant: str
    order: int
    amplitude: float
    eps: float
    delta: float
    iterations: int
    converged: bool

    CSV_HEADER = "model,method,variant,order,amplitude,eps,delta,iterations,converged"

    def csv_row(self) -> str:
        return (f"{self.model},{self.method},{self.variant},{self.order},"
                f"{self.amplitude:.17g},{self.eps:.17g},{self.delta:.17g},"
                f"{self.iterations},{int(self.converged)}")


def _method_label(m: Method) -> str:
    label = m.kind
    if m.phase.value != "vzero":
        label += "-" + m.phase.value
    if m.lp_xi_identity:
        label += "-xid"
    return label


def convergence_study(model: OdeModel, expansion: CmExpansion, methods,
                      orders, amplitudes, mesh: Mesh | None = None,
                      k_factor: float = 1e-4, tol: float = 1e-11) -> list[ConvergenceRecord]:
    """delta(X) between predicted and corrected orbits over a method/order/A0 grid.

    A failed correction is recorded with delta = nan rather than raised.
    """
    if mesh is None:
        mesh = make_mesh()
    records = []
    for spec in methods:
        base = spec if isinstance(spec, Method) else Method(kind=str(spec))
        for order in orders:
            m = Method(kind=base.kind, phase=base.phase, order=order,
                       lp_xi_identity=base.lp_xi_identity)
            for A0 in amplitudes:
                eps = amplitude_to_eps(A0, expansion.a, expansion.b, expansion.variant)
                pred = sample_predictor(expansion, m, eps, mesh, k=eps * k_factor)
                delta, iters, ok = float("nan"), 0, False
                try:
                    bvp, z, iters = correct_predictor(model, pred, tol=tol)
                    corr = unpack_orbit(bvp, z)
                    delta = float(np.linalg.norm(pred.orbit - corr)
                                  / np.linalg.norm(corr))
                    ok = True
                except NoConvergenceError:
                    pass
                records.append(ConvergenceRecord(
                    model=model.name, method=_method_label(m),
                    variant=expansion.variant.value, order=order,
                    amplitude=float(A0), eps=float(eps), delta=delta,
                    iterations=iters, converged=ok))
    return records
