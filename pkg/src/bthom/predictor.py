"""Lift planar homoclinic asymptotics to the n-dimensional phase space.

A predictor method is the pair (series method, phase condition) plus a
truncation order; the normal-form variant lives on the CmExpansion.  The lift
evaluates x = x0 + H(w(eta), beta) on a collocation mesh together with the
parameter pair alpha = alpha0 + K(beta), the saddle, the half-return time and
the orientation data needed to start continuation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics as asy
from .asymptotics import PhaseChoice
from .nfcoeffs import CmExpansion, Variant

__all__ = [
    "Method",
    "Mesh",
    "HomPredictor",
    "make_mesh",
    "planar_series",
    "lift_orbit",
    "lift_parameters",
    "time_reparam",
    "invert_time",
    "saddle_point",
    "amplitude_to_eps",
    "ttol_to_T",
    "sample_predictor",
    "tangent_orientation",
    "d_alpha_d_eps",
]


@dataclass(frozen=True)
class Method:
    """Planar-series selection: RP or LP, phase condition, truncation order.

    ``lp_xi_identity`` drops the higher-order time transform of the LP method
    (the historical predictor that degrades to zeroth-order accuracy).
    """

    kind: str = "lp"
    phase: PhaseChoice = PhaseChoice.VZERO
    order: int = 3
    lp_xi_identity: bool = False

    def __post_init__(self):
        if self.kind not in ("rp", "lp"):
            raise ValueError("method kind must be 'rp' or 'lp'")
        if not 0 <= self.order <= 3:
            raise ValueError("order must be in 0..3")


def _as_method(method) -> Method:
    if isinstance(method, Method):
        return method
    return Method(kind=str(method).lower())


@dataclass(frozen=True)
class Mesh:
    """Uniform collocation mesh on [0, 1]: ntst intervals, ncol Gauss points."""

    ntst: int
    ncol: int
    fine: np.ndarray = field(repr=False)
    gauss: np.ndarray = field(repr=False)
    gauss_weights: np.ndarray = field(repr=False)


def make_mesh(ntst: int = 40, ncol: int = 4) -> Mesh:
    if ntst < 2 or ncol < 2:
        raise ValueError("need ntst >= 2 and ncol >= 2")
    fine = np.linspace(0.0, 1.0, ntst * ncol + 1)
    nodes, weights = np.polynomial.legendre.leggauss(ncol)
    return Mesh(ntst=ntst, ncol=ncol, fine=fine,
                gauss=0.5 * (nodes + 1.0), gauss_weights=0.5 * weights)


@dataclass
class HomPredictor:
    method: Method
    variant: Variant
    eps: float
    alpha: np.ndarray
    T: float
    mesh: Mesh
    orbit: np.ndarray          # (ntst*ncol+1, n)
    s0: np.ndarray
    eps0: float
    eps1: float
    tangent_sign: float        # sign of d(alpha_1)/d(eps)

    def as_dict(self) -> dict:
        return {
            "method": self.method.kind,
            "phase": self.method.phase.value,
            "order": self.method.order,
            "variant": self.variant.value,
            "eps": self.eps,
            "alpha": self.alpha.tolist(),
            "T": self.T,
            "ntst": self.mesh.ntst,
            "ncol": self.mesh.ncol,
            "mesh": self.mesh.fine.tolist(),
            "orbit": self.orbit.tolist(),
            "s0": self.s0.tolist(),
            "eps0": self.eps0,
            "eps1": self.eps1,
            "tangent_sign": self.tangent_sign,
        }


# ---------------------------------------------------------------------------
# planar series and blow-up scalings
# ---------------------------------------------------------------------------

def _smooth_coeffs(expansion: CmExpansion):
    return (expansion.a, expansion.b, expansion.a1, expansion.b1,
            expansion.d, expansion.e)


def planar_series(expansion: CmExpansion, method, eps: float, s):
    """Planar (u, v) of the blown-up oscillator at time s for this variant."""
    m = _as_method(method)
    if expansion.variant is Variant.ORBITAL:
        if m.kind == "rp":
            return asy.rp_orbit(s, eps, m.phase, order=m.order)
        return asy.lp_orbit_of_s(s, eps, m.phase, order=m.order,
                                 xi_identity=m.lp_xi_identity)
    coeffs = _smooth_coeffs(expansion)
    if m.kind == "rp":
        return asy.smooth_orbit(s, eps, coeffs, mode="RP", order=m.order)
    return asy.smooth_orbit_of_s(s, eps, coeffs, order=m.order,
                                 xi_identity=m.lp_xi_identity)


def _tau(expansion: CmExpansion, method, eps: float) -> float:
    m = _as_method(method)
    if expansion.variant is Variant.ORBITAL:
        return asy.rp_tau(eps, order=m.order)
    return asy.smooth_tau(eps, _smooth_coeffs(expansion), order=m.order)


def _w_beta(expansion: CmExpansion, method, eps: float, eta):
    """Blow-up: (w0, w1, beta1, beta2) at normal-form time eta."""
    a, b = expansion.a, expansion.b
    tau = _tau(expansion, method, eps)
    if expansion.variant is Variant.ORBITAL:
        s = (a / b) * eps * np.asarray(eta, float)
        u, v = planar_series(expansion, method, eps, s)
        w0 = (a / b ** 2) * u * eps ** 2
        w1 = (a ** 2 / b ** 3) * v * eps ** 3
        beta1 = -4.0 * a ** 3 / b ** 4 * eps ** 4
        beta2 = (a / b) * tau * eps ** 2
    else:
        s = eps * np.asarray(eta, float)
        u, v = planar_series(expansion, method, eps, s)
        w0 = u / a * eps ** 2
        w1 = v / a * eps ** 3
        beta1 = -4.0 / a * eps ** 4
        beta2 = (b / a) * tau * eps ** 2
    return w0, w1, beta1, beta2


def lift_orbit(expansion: CmExpansion, method, eps: float, eta):
    """Phase-space predictor x(eta) = x0 + H(w(eta), beta)."""
    w0, w1, b1, b2 = _w_beta(expansion, method, eps, eta)
    if np.ndim(w0) == 0:
        return expansion.x0 + expansion.H_eval(float(w0), float(w1), b1, b2)
    pts = np.empty(np.shape(w0) + (expansion.n,))
    for i in range(w0.size):
        pts[i] = expansion.x0 + expansion.H_eval(w0[i], w1[i], b1, b2)
    return pts


def lift_parameters(expansion: CmExpansion, method, eps: float) -> np.ndarray:
    """Parameter predictor alpha(eps) = alpha0 + K(beta(eps))."""
    _, _, b1, b2 = _w_beta(expansion, method, eps, 0.0)
    return expansion.alpha0 + expansion.K_eval(b1, b2)


# ---------------------------------------------------------------------------
# time reparametrization (orbital variant only)
# ---------------------------------------------------------------------------

def time_reparam(expansion: CmExpansion, method, eps: float, eta):
    """Original-system time t(eta) with t(0) = 0."""
    m = _as_method(method)
    if expansion.variant is not Variant.ORBITAL:
        return np.asarray(eta, float) + 0.0
    a, b = expansion.a, expansion.b
    eta = np.asarray(eta, float)
    tau = asy.rp_tau(eps, order=m.order)
    lin = eta * (1.0 + expansion.theta0001 * (a / b) * eps ** 2 * tau)
    if expansion.theta1000 == 0.0:
        return lin
    s = (a / b) * eps * eta
    if m.kind == "rp":
        integral = asy.rp_int_u(s, eps, order=m.order)
    else:
        if m.lp_xi_identity:
            xi = s
            xi0 = 0.0
        else:
            xi = asy.xi_of_s(s, eps, m.phase, order=m.order)
            xi0 = asy.xi_of_s(0.0, eps, m.phase, order=m.order)
        integral = (asy.lp_int_u_over_omega(xi, eps, order=m.order)
                    - asy.lp_int_u_over_omega(xi0, eps, order=m.order))
    return lin + expansion.theta1000 * (1.0 / b) * eps * integral


def _dt_deta(expansion: CmExpansion, method, eps: float, eta):
    w0, _, _, b2 = _w_beta(expansion, method, eps, eta)
    return 1.0 + expansion.theta1000 * w0 + expansion.theta0001 * b2


def invert_time(expansion: CmExpansion, method, eps: float, t: float,
                max_iter: int = 100) -> float:
    """Solve time_reparam(eta) = t by safeguarded Newton."""
    if expansion.variant is not Variant.ORBITAL or (
            expansion.theta1000 == 0.0 and expansion.theta0001 == 0.0):
        return float(t)
    tol = 1e-12 * (1.0 + abs(t))
    eta = float(t)
    lo, hi = None, None
    for _ in range(max_iter):
        r = float(time_reparam(expansion, method, eps, eta)) - t
        if abs(r) <= tol:
            return eta
        if r > 0:
            hi = eta if hi is None else min(hi, eta)
        else:
            lo = eta if lo is None else max(lo, eta)
        deriv = float(_dt_deta(expansion, method, eps, eta))
        step = -r / deriv if deriv > 1e-12 else -r
        new = eta + step
        if lo is not None and hi is not None and not (lo < new < hi):
            new = 0.5 * (lo + hi)
        eta = new
    raise RuntimeError(f"time inversion did not converge for t = {t!r}")


# ---------------------------------------------------------------------------
# saddle, eps and T selection, tangent orientation
# ---------------------------------------------------------------------------

def saddle_point(expansion: CmExpansion, method, eps: float) -> np.ndarray:
    """Saddle approximation: the eta -> infinity limit of the lifted orbit."""
    m = _as_method(method)
    a, b = expansion.a, expansion.b
    tau = _tau(expansion, method, eps)
    if expansion.variant is Variant.ORBITAL:
        w0_inf = 2.0 * (a / b ** 2) * eps ** 2
        beta1 = -4.0 * a ** 3 / b ** 4 * eps ** 4
        beta2 = (a / b) * tau * eps ** 2
    else:
        a1, d = expansion.a1, expansion.d
        w0_inf = (1.0 / a) * eps ** 2 * (2.0 - (2.0 * (5.0 * a1 * b + 7.0 * d)
                                                / (7.0 * a ** 2)) * eps ** 2
                                         * (1.0 if m.order >= 2 else 0.0))
        beta1 = -4.0 / a * eps ** 4
        beta2 = (b / a) * tau * eps ** 2
    return expansion.x0 + expansion.H_eval(w0_inf, 0.0, beta1, beta2)


def amplitude_to_eps(A0: float, a: float, b: float, variant: Variant | str) -> float:
    """Perturbation parameter from the requested orbit amplitude."""
    if A0 <= 0:
        raise ValueError("amplitude must be positive")
    if isinstance(variant, str):
        variant = Variant(variant)
    if variant is Variant.ORBITAL:
        return abs(b) * math.sqrt(A0 / (6.0 * abs(a)))
    return math.sqrt(A0 * abs(a) / 6.0)


def ttol_to_T(k: float, eps: float, A0: float, expansion: CmExpansion,
              method) -> float:
    """Half-return time from the end-point distance k (TTolerance)."""
    if not 0.0 < k < A0:
        raise ValueError("need 0 < k < A0")
    a, b = expansion.a, expansion.b
    if expansion.variant is not Variant.ORBITAL:
        return (1.0 / eps) * float(np.arccosh(math.sqrt(A0 / k)))
    arg = (abs(b) / eps) * math.sqrt(k / (6.0 * abs(a)))
    eta_end = abs((b / a) / eps) * float(np.arccosh(1.0 / arg))
    return float(time_reparam(expansion, method, eps, eta_end))


def d_alpha_d_eps(expansion: CmExpansion, method, eps: float) -> np.ndarray:
    """Derivative of the parameter predictor along the branch."""
    m = _as_method(method)
    a, b = expansion.a, expansion.b
    tau0 = 10.0 / 7.0
    tau2 = 288.0 / 2401.0 if m.order >= 2 else 0.0
    if expansion.variant is Variant.ORBITAL:
        b1p = -16.0 * a ** 3 / b ** 4 * eps ** 3
        b2p = (a / b) * (2.0 * tau0 + 4.0 * tau2 * eps ** 2) * eps
    else:
        cs = _smooth_coeffs(expansion)
        tau2 = (asy.smooth_tau(1.0, cs) - tau0) if m.order >= 2 else 0.0
        b1p = -16.0 / a * eps ** 3
        b2p = (b / a) * (2.0 * tau0 + 4.0 * tau2 * eps ** 2) * eps
    _, _, beta1, beta2 = _w_beta(expansion, method, eps, 0.0)
    K = expansion.K
    return (K["K10"] * b1p + K["K01"] * b2p + K["K02"] * beta2 * b2p
            + K["K11"] * (b1p * beta2 + beta1 * b2p)
            + 0.5 * K["K03"] * beta2 ** 2 * b2p)


def tangent_orientation(tangent_alpha1: float, expansion: CmExpansion, method,
                        eps: float) -> int:
    """+1 if the alpha_1 tangent component points away from the BT point."""
    if tangent_alpha1 == 0.0:
        raise ValueError("tangent has vanishing alpha_1 component")
    da1 = float(d_alpha_d_eps(expansion, method, eps)[0])
    if da1 == 0.0:
        raise ValueError("d(alpha_1)/d(eps) vanishes (eps = 0?)")
    return 1 if tangent_alpha1 * da1 > 0 else -1


def sample_predictor(expansion: CmExpansion, method, eps: float,
                     mesh: Mesh | None = None, k: float | None = None) -> HomPredictor:
    """Assemble the full predictor on a collocation mesh."""
    m = _as_method(method)
    if mesh is None:
        mesh = make_mesh()
    a, b = expansion.a, expansion.b
    if expansion.variant is Variant.ORBITAL:
        A0 = 6.0 * abs(a) / b ** 2 * eps ** 2
    else:
        A0 = 6.0 * eps ** 2 / abs(a)
    if k is None:
        k = eps * 1e-4
    T = ttol_to_T(k, eps, A0, expansion, m)

    times = -T + 2.0 * T * mesh.fine
    if expansion.variant is Variant.ORBITAL and (
            expansion.theta1000 != 0.0 or expansion.theta0001 != 0.0):
        etas = np.array([invert_time(expansion, m, eps, t) for t in times])
    else:
        etas = times
    orbit = lift_orbit(expansion, m, eps, etas)
    alpha = lift_parameters(expansion, m, eps)
    s0 = saddle_point(expansion, m, eps)
    eps0 = float(np.linalg.norm(orbit[0] - s0))
    eps1 = float(np.linalg.norm(orbit[-1] - s0))
    sign = float(np.sign(d_alpha_d_eps(expansion, m, eps)[0]))
    return HomPredictor(method=m, variant=expansion.variant, eps=eps,
                        alpha=alpha, T=T, mesh=mesh, orbit=orbit, s0=s0,
                        eps0=eps0, eps1=eps1, tangent_sign=sign)
