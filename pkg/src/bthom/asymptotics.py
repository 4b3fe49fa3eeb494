"""Planar homoclinic asymptotics for the Bogdanov-Takens oscillator.

Everything here lives on the blown-up planar oscillator

    u'' = -4 + u^2 + eps * u' * (u + tau)           (orbital normal form)

and its smooth-normal-form counterpart.  Provided are the regular-perturbation
series under two phase conditions, the polynomial Lindstedt-Poincare series
(exact-rational and floating), the nonlinear time transform xi(s), the smooth
normal-form series, and the closed-form log-sech integrals.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

__all__ = [
    "PhaseChoice",
    "Jet",
    "jtanh",
    "jcosh",
    "jsinh",
    "jsech",
    "jexp",
    "jlogcosh",
    "LN2",
    "ZETA2",
    "ZETA3",
    "GAMMA1_L2",
    "GAMMA3_L2",
    "ALT_GAMMA1",
    "u0",
    "rp_orbit",
    "rp_tau",
    "In_closed",
    "In_closed_parts",
    "LpSeries",
    "lp_solve_quadratic",
    "lp_orbit_third",
    "xi_of_s",
    "lp_orbit_of_s",
    "smooth_orbit",
    "smooth_tau",
    "rp_int_u",
    "lp_int_u_over_omega",
]

LN2 = 0.6931471805599453094172321214581765680755
ZETA2 = 1.6449340668482264364724151666460251892190   # pi^2 / 6
ZETA3 = 1.2020569031595942853997381615114499907650

# L2 phase constants of the regular-perturbation chain
GAMMA1_L2 = -(3.0 / 245.0) * (70.0 * LN2 - 59.0)
GAMMA3_L2 = (264.0 * ZETA3 / 343.0 - 884895199.0 / 7147176750.0
             - 100.0 * math.pi ** 2 / 3087.0 - 1104228.0 * LN2 / 420175.0)

# Alternative Lindstedt-Poincare phase constant: the real root of
# 12005 g^3 + 4116 g^2 + 2205 g - 252 = 0.
_ALT_C = (836.0 + 15.0 * math.sqrt(4019.0)) ** (1.0 / 3.0)
ALT_GAMMA1 = (-4.0 - 59.0 / _ALT_C + _ALT_C) / 35.0


class PhaseChoice(enum.Enum):
    """Phase condition selecting one representative homoclinic solution."""

    VZERO = "vzero"        # v(0) = 0, i.e. u'(0) = 0
    L2 = "l2"              # L2-distance minimization (regular perturbation)
    ALTGAMMA = "altgamma"  # alternative LP phase with gamma_1 != 0


# ---------------------------------------------------------------------------
# second-order jets: exact value/derivative/second-derivative arithmetic
# ---------------------------------------------------------------------------

class Jet:
    """Truncated second-order Taylor arithmetic in one variable.

    Supports numpy array payloads, so series can be evaluated on grids.
    """

    __slots__ = ("f", "d", "dd")

    def __init__(self, f, d=0.0, dd=0.0):
        self.f, self.d, self.dd = f, d, dd

    @staticmethod
    def variable(s):
        return Jet(np.asarray(s, float) + 0.0, np.ones_like(np.asarray(s, float)), 0.0)

    def __add__(self, o):
        if isinstance(o, Jet):
            return Jet(self.f + o.f, self.d + o.d, self.dd + o.dd)
        return Jet(self.f + o, self.d, self.dd)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.f, -self.d, -self.dd)

    def __sub__(self, o):
        return self + (-o if isinstance(o, Jet) else -o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if isinstance(o, Jet):
            return Jet(self.f * o.f, self.d * o.f + self.f * o.d,
                       self.dd * o.f + 2.0 * self.d * o.d + self.f * o.dd)
        return Jet(self.f * o, self.d * o, self.dd * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Jet):
            inv = o._chain(1.0 / o.f, -1.0 / o.f ** 2, 2.0 / o.f ** 3)
            return self * inv
        return Jet(self.f / o, self.d / o, self.dd / o)

    def __rtruediv__(self, o):
        inv = self._chain(1.0 / self.f, -1.0 / self.f ** 2, 2.0 / self.f ** 3)
        return inv * o

    def __pow__(self, k: int):
        out = Jet(np.ones_like(np.asarray(self.f, float)) + 0.0)
        base = self
        for _ in range(k):
            out = out * base
        return out

    def _chain(self, g, gp, gpp):
        return Jet(g, gp * self.d, gpp * self.d * self.d + gp * self.dd)


def _as_jet(x):
    return x if isinstance(x, Jet) else Jet(np.asarray(x, float) + 0.0)


def jtanh(x):
    x = _as_jet(x)
    t = np.tanh(x.f)
    return x._chain(t, 1.0 - t * t, -2.0 * t * (1.0 - t * t))


def jcosh(x):
    x = _as_jet(x)
    return x._chain(np.cosh(x.f), np.sinh(x.f), np.cosh(x.f))


def jsinh(x):
    x = _as_jet(x)
    return x._chain(np.sinh(x.f), np.cosh(x.f), np.sinh(x.f))


def jsech(x):
    x = _as_jet(x)
    s, t = 1.0 / np.cosh(x.f), np.tanh(x.f)
    return x._chain(s, -s * t, s * (t * t - s * s))


def jexp(x):
    x = _as_jet(x)
    e = np.exp(x.f)
    return x._chain(e, e, e)


def jlogcosh(x):
    """log(cosh(x)), stable for large |x|."""
    x = _as_jet(x)
    a = np.abs(x.f)
    val = a + np.log1p(np.exp(-2.0 * a)) - LN2
    t = np.tanh(x.f)
    return x._chain(val, t, 1.0 - t * t)


# ---------------------------------------------------------------------------
# zeroth order and the regular-perturbation chain
# ---------------------------------------------------------------------------

def u0(s):
    """Explicit homoclinic solution of the Hamiltonian limit: (u, u')."""
    t = np.tanh(s)
    sech2 = 1.0 - t * t
    return 6.0 * t * t - 4.0, 12.0 * t * sech2


def _u0_jet(s):
    t = jtanh(s)
    return t * t * 6.0 - 4.0


def _udot0_jet(s):
    t, S = jtanh(s), jsech(s)
    return t * S * S * 12.0


def _u1_vzero(s):
    t, S, L = jtanh(s), jsech(s), jlogcosh(s)
    return t * S * S * L * (-72.0 / 7.0)


def _u2_vzero(s):
    t, S, L = jtanh(s), jsech(s), jlogcosh(s)
    inner = (S * S * (L * (-32.0) + (L * (L + 2.0)) * 12.0 - 5.0) * 3.0
             + _as_jet(s) * t * (-12.0) - (L - 1.0) * L * 24.0 + 14.0)
    return S * S * inner * (18.0 / 49.0)


def _u3_vzero(s):
    sj = _as_jet(s)
    S, L = jsech(s), jlogcosh(s)
    sh, sh3 = jsinh(s), jsinh(sj * 3.0)
    ch, ch3 = jcosh(s), jcosh(sj * 3.0)
    inner = (sh * (-273.0) + sh3 * 91.0
             + sj * ch3 * (L * 2.0 - 1.0) * 84.0
             - sj * ch * (L * 6.0 - 1.0) * 84.0
             - sh * L ** 3 * 1232.0 + sh3 * L ** 3 * 112.0
             + sh * L * L * 2016.0 - sh3 * L * L * 336.0
             + sh * L * 904.0 - sh3 * L * 104.0)
    return S ** 5 * inner * (-27.0 / 2401.0)


def _u1_l2(s):
    # L2-corrected first order (the gamma_1 shift is already folded in)
    M = jlogcosh(s) + LN2
    return (M * (-70.0) + 59.0) * _udot0_jet(s) * (3.0 / 245.0)


def _u2_l2(s):
    sj = _as_jet(s)
    t, S = jtanh(s), jsech(s)
    M = jlogcosh(s) + LN2
    inner = (S * S * ((M * (M * 105.0 - 247.0)) * 70.0 + 6289.0) * 3.0
             - (sj * t * 3675.0 + M * (M * 35.0 - 94.0) * 210.0 + 7129.0) * 2.0)
    return S * S * inner * (36.0 / 60025.0)


def _u3_l2_raw(s):
    sj = _as_jet(s)
    t, S, L = jtanh(s), jsech(s), jlogcosh(s)
    M = L + LN2
    ch2 = jcosh(sj * 2.0)
    inner = (S * S * (sj * (M * 210.0 - 247.0) * 3675.0
                      + t * (M ** 3 * (ch2 - 5.0) * (-171500.0)
                             + M * M * (ch2 * 129.0 - 470.0) * 7350.0
                             + M * 4456830.0 - 966242.0))
             - (sj * (M * 35.0 - 47.0) * 210.0 + t * L * 30673.0) * 70.0)
    return S * S * inner * (216.0 / 14706125.0)


def _rp_terms(phase: PhaseChoice):
    if phase is PhaseChoice.VZERO:
        return (_u0_jet, _u1_vzero, _u2_vzero, _u3_vzero)
    if phase is PhaseChoice.L2:
        return (_u0_jet, _u1_l2, _u2_l2,
                lambda s: _u3_l2_raw(s) + _udot0_jet(s) * GAMMA3_L2)
    raise ValueError("regular perturbation supports the VZERO and L2 phases only")


def rp_orbit(s, eps: float, phase: PhaseChoice = PhaseChoice.VZERO,
             order: int = 3):
    """Regular-perturbation orbit (u, u') at time s, truncated at eps^order."""
    terms = _rp_terms(phase)
    sj = Jet.variable(s)
    acc = terms[0](sj)
    for i in range(1, min(order, 3) + 1):
        acc = acc + terms[i](sj) * (eps ** i)
    return acc.f, acc.d


def rp_tau(eps: float, order: int = 3) -> float:
    """tau(eps) = 10/7 + (288/2401) eps^2, truncated below order 2."""
    tau = 10.0 / 7.0
    if order >= 2:
        tau += (288.0 / 2401.0) * eps * eps
    return tau


# ---------------------------------------------------------------------------
# closed-form integrals I_n = int_0^inf log^3(2 cosh s) sech^n s ds
# ---------------------------------------------------------------------------

def In_closed_parts(n: int) -> tuple[Fraction, Fraction, Fraction]:
    """Exact decomposition I_n = r0 + r2*pi^2 + r3*zeta(3) (rationals)."""
    if n % 2 != 0 or n < 4 or n > 64:
        raise ValueError("n must be an even integer with 4 <= n <= 64")
    m = n // 2
    r0 = Fraction(0)
    r2 = Fraction(0)
    r3 = Fraction(0)
    pref = Fraction(2) ** (n - 3) * 3
    for k in range(m):
        c = pref * comb(m - 1, k) * (-1) ** k
        mk = m + k
        h1 = sum(Fraction(1, j) for j in range(1, mk + 1))
        h2 = sum(Fraction(1, j * j) for j in range(1, mk + 1))
        h3 = sum(Fraction(1, j ** 3) for j in range(1, mk + 1))
        q = 2 * k + n
        r0 += c * (Fraction(1, mk ** 4)
                   + Fraction(8, q) * (h1 / q ** 2 + h2 / (2 * q) + h3 / 4))
        # zeta(2) = pi^2/6 enters through -zeta(2)/(2q) inside the 8/q bracket
        r2 += c * Fraction(-8, q) * Fraction(1, 12 * q)
        r3 += c * Fraction(-8, q) * Fraction(1, 4)
    return r0, r2, r3


def In_closed(n: int) -> float:
    r0, r2, r3 = In_closed_parts(n)
    return float(r0) + float(r2) * math.pi ** 2 + float(r3) * ZETA3


# ---------------------------------------------------------------------------
# exact-rational polynomial helpers (dense, ascending degree)
# ---------------------------------------------------------------------------

def _trim(p):
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def _padd(p, q):
    n = max(len(p), len(q))
    return _trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0)
                  for i in range(n)])


def _pscale(p, c):
    return _trim([c * x for x in p])


def _pmul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _trim(out)


def _pderiv(p):
    return _trim([i * p[i] for i in range(1, len(p))]) if len(p) > 1 else [0 * p[0]]


def _pinteg(p):
    # antiderivative vanishing at 0; int/Fraction coefficients stay exact
    out = [0 * p[0]]
    for i, a in enumerate(p):
        out.append(a / (i + 1.0) if isinstance(a, float) else Fraction(a) / (i + 1))
    return _trim(out)


def _peval(p, x):
    out = 0 * p[0]
    for a in reversed(p):
        out = out * x + a
    return out


def _pdivexact(num, den, exact: bool):
    """Polynomial long division; the remainder must vanish."""
    num = list(num)
    q = [0 * den[0]] * max(len(num) - len(den) + 1, 1)
    dlead = den[-1]
    for i in range(len(num) - len(den), -1, -1):
        c = num[i + len(den) - 1] / dlead
        q[i] = c
        if c != 0:
            for j, b in enumerate(den):
                num[i + j] -= c * b
    if exact:
        if any(x != 0 for x in num):
            raise ArithmeticError("inexact polynomial division in LP recursion")
    else:
        scale = max((abs(x) for x in q), default=1.0) + 1.0
        if any(abs(float(x)) > 1e-9 * scale for x in num):
            raise ArithmeticError("polynomial division remainder too large")
    return _trim(q)


@dataclass
class LpSeries:
    """Exact coefficients of the polynomial Lindstedt-Poincare recursion.

    tau has entries tau_0..tau_{order-1}; sigma and delta run through index
    order-2; omega holds the polynomials omega_0..omega_{order-1} as ascending
    coefficient lists in zeta.
    """

    order: int
    tau: list
    sigma: list
    delta: list
    omega: list


def _lp_recursion(order: int, gamma=None, exact: bool = True):
    if order < 1:
        raise ValueError("order must be >= 1")
    one = Fraction(1) if exact else 1.0
    zero = 0 * one
    gamma = list(gamma) if gamma is not None else []
    gamma += [zero] * (order - len(gamma))
    if exact and any(g != 0 for g in gamma):
        raise ValueError("the exact engine implements the gamma = 0 phase")

    one_m = [one, zero, -one]                       # 1 - zeta^2
    u0p = [zero, 12 * one]                          # u0' = 12 zeta
    lhs_fac = [12 * one, zero, -36 * one]           # ((1-z^2) u0')'
    denom = _pmul(_pmul(one_m, u0p), _pmul(one_m, u0p))
    p_int = _pinteg(_pmul(one_m, _pmul(u0p, u0p)))  # int (1-z^2) u0'^2

    u = [[-4 * one, zero, 6 * one]]
    up = [u0p]
    om = [[one]]
    tau = []
    sig = [6 * one]
    delt = [-4 * one]

    for i in range(1, order + 1):
        # z_i per the quadratic normal-form recursion
        acc = [zero]
        for k in range(1, i):
            acc = _padd(acc, _pmul(u[k], u[i - k]))
        inner = [zero]
        for l in range(1, i):
            inner = _padd(inner, _pscale(up[l], tau[i - 1 - l]))
        for k in range(1, i):
            for l in range(0, i - k):
                inner = _padd(inner, _pscale(_pmul(om[k], up[l]), tau[i - 1 - l - k]))
        for k in range(0, i):
            for l in range(0, i - k):
                inner = _padd(inner, _pmul(_pmul(om[k], up[l]), u[i - 1 - l - k]))
        for l in range(1, i):
            inner = _padd(inner, _pscale(_pmul(om[l], _pderiv(_pmul(one_m, up[i - l]))), -1))
        for k in range(1, i):
            for l in range(0, i - k + 1):
                inner = _padd(inner, _pscale(
                    _pmul(om[l], _pderiv(_pmul(one_m, _pmul(om[k], up[i - l - k])))), -1))
        z = _padd(acc, _pmul(one_m, inner))

        gtilde = _pinteg(_pmul(u0p, z))
        g1, gm1 = _peval(gtilde, one), _peval(gtilde, -one)
        tau_i = -(5 * one / 192) * (g1 - gm1)
        tau.append(tau_i)
        if exact and i % 2 == 0 and tau_i != 0:
            raise ArithmeticError(f"tau_{i-1} expected to vanish by symmetry")
        if i == order:
            break

        g = _padd(_pscale(p_int, tau_i), gtilde)
        g_at_1 = _peval(g, one)
        delta_i = g_at_1 / 12
        sigma_i = -delta_i - _peval(z, one) / 4
        if exact:
            if i % 2 == 1 and (sigma_i != 0 or delta_i != 0):
                raise ArithmeticError(f"sigma_{i}/delta_{i} expected to vanish by symmetry")
            if sigma_i != -delta_i:
                raise ArithmeticError(f"sigma_{i} != -delta_{i} on the quadratic normal form")
        sig.append(sigma_i)
        delt.append(delta_i)

        gi = gamma[i]
        ui = _padd([delta_i, 12 * gi, sigma_i], [zero, zero, zero, -12 * gi])
        upi = _pderiv(ui)
        numer = _padd(
            _padd(_pmul(_pmul(one_m, lhs_fac), ui),
                  _pscale(_pmul(_pmul(one_m, one_m), _pmul(u0p, upi)), -1)),
            _padd(g, [-g_at_1]))
        om_i = _pdivexact(numer, denom, exact)
        if len(om_i) > 2 * i + 2:
            raise ArithmeticError(f"deg omega_{i} = {len(om_i)-1} above the 2i+1 bound")
        u.append(ui)
        up.append(upi)
        om.append(om_i)

    return tau, sig, delt, om


@lru_cache(maxsize=None)
def lp_solve_quadratic(order: int) -> LpSeries:
    """Exact-rational LP series of the quadratic BT normal form up to eps^order."""
    tau, sig, delt, om = _lp_recursion(order, exact=True)
    return LpSeries(order=order, tau=tau, sigma=sig[:order - 1] if order > 1 else sig[:1],
                    delta=delt[:order - 1] if order > 1 else delt[:1], omega=om)


@lru_cache(maxsize=None)
def _lp_float_series(phase: PhaseChoice, order: int = 4):
    """Floating u_i / omega_i polynomial coefficients through eps^3."""
    if phase is PhaseChoice.VZERO:
        gamma = None
    elif phase is PhaseChoice.ALTGAMMA:
        gamma = [0.0, ALT_GAMMA1, 0.0, 0.0]
    else:
        raise ValueError("the Lindstedt-Poincare series supports the VZERO "
                         "and ALTGAMMA phases only (L2 is a regular-perturbation concept)")
    tau, sig, delt, om = _lp_recursion(order, gamma=gamma, exact=False)
    gam = [0.0, ALT_GAMMA1 if phase is PhaseChoice.ALTGAMMA else 0.0, 0.0, 0.0]
    u_polys = []
    for i in range(order):
        if i == 0:
            u_polys.append([-4.0, 0.0, 6.0])
        else:
            gi = gam[i] if i < len(gam) else 0.0
            u_polys.append(_padd([delt[i], 12.0 * gi, sig[i]], [0.0, 0.0, 0.0, -12.0 * gi]))
    return tuple(float(t) for t in tau), tuple(tuple(map(float, p)) for p in u_polys), \
        tuple(tuple(map(float, p)) for p in om)


def lp_orbit_third(zeta, eps: float, phase: PhaseChoice = PhaseChoice.VZERO,
                   order: int = 3):
    """Third-order LP orbit (u, v) as a function of the transformed time zeta."""
    _, u_polys, om = _lp_float_series(phase)
    zeta = np.asarray(zeta, float)
    order = min(order, 3)
    u = np.zeros_like(zeta)
    for i in range(order + 1):
        u = u + _peval_np(u_polys[i], zeta) * eps ** i
    # v = (1 - zeta^2) * omega(zeta) * u'(zeta), truncated at the same order
    v = np.zeros_like(zeta)
    for i in range(order + 1):
        for j in range(order + 1 - i):
            up = _pderiv(list(u_polys[j]))
            v = v + _peval_np(om[i], zeta) * _peval_np(up, zeta) * eps ** (i + j)
    return u, (1.0 - zeta * zeta) * v


def _peval_np(p, x):
    out = np.zeros_like(np.asarray(x, float))
    for a in reversed(list(p)):
        out = out * x + a
    return out


# ---------------------------------------------------------------------------
# the nonlinear time transform xi(s)
# ---------------------------------------------------------------------------

def _xi_terms_vzero(s):
    sj = _as_jet(s)
    t, S, L = jtanh(s), jsech(s), jlogcosh(s)
    xi1 = L * (-6.0 / 7.0)
    xi2 = sj * (-18.0 / 49.0) + t * (45.0 / 98.0) + t * L * (36.0 / 49.0)
    ch2, sh2 = jcosh(sj * 2.0), jsinh(sj * 2.0)
    xi3 = (S * S * (L * L * (-504.0) - ch2 * L * 276.0 + L * 102.0
                    + sj * sh2 * 252.0 + 546.0) * 3.0) * (1.0 / 4802.0) - 117.0 / 343.0
    return xi1, xi2, xi3


def _xi_terms_altgamma(s):
    # The second-order term needs a -((6/7)g + (3/2)g^2) tanh(s) shift relative
    # to the v(0)=0 phase; with it the third-order closed form is consistent
    # with the omega recursion for the gamma_1-modified family.
    g = ALT_GAMMA1
    sj = _as_jet(s)
    t, S, L = jtanh(s), jsech(s), jlogcosh(s)
    xi1, xi2, _ = _xi_terms_vzero(s)
    xi2 = xi2 - t * (6.0 * g / 7.0 + 1.5 * g * g)
    xi3 = ((L * (-92.0) + sj * t * 84.0 + (49.0 * g * (7.0 * g + 4.0) - 105.0)) * 18.0
           - S * S * (L * (-18.0 * (7.0 * g * (7.0 * g + 4.0) + 9.0))
                      + L * L * 216.0
                      + (-7.0 * g * (7.0 * g - 3.0) * (35.0 * g + 9.0) - 234.0)) * 7.0
           ) * (1.0 / 4802.0)
    return xi1, xi2, xi3


def xi_of_s(s, eps: float, phase: PhaseChoice = PhaseChoice.VZERO,
            order: int = 3):
    """xi(s) = s + sum_i xi_i(s) eps^i with the phase-appropriate constants."""
    if phase is PhaseChoice.VZERO:
        terms = _xi_terms_vzero(s)
    elif phase is PhaseChoice.ALTGAMMA:
        terms = _xi_terms_altgamma(s)
    else:
        raise ValueError("xi(s) exists for the VZERO and ALTGAMMA phases only")
    acc = _as_jet(s) if isinstance(s, Jet) else Jet.variable(s)
    for i, term in enumerate(terms[:min(order, 3)], start=1):
        acc = acc + term * eps ** i
    return acc if isinstance(s, Jet) else acc.f


def lp_orbit_of_s(s, eps: float, phase: PhaseChoice = PhaseChoice.VZERO,
                  order: int = 3, xi_identity: bool = False):
    """LP orbit (u, v) as a function of the original time s.

    With ``xi_identity`` the higher-order time transform is dropped (xi = s),
    which reproduces the historical predictor that loses the uniform accuracy.
    """
    if xi_identity:
        xi = np.asarray(s, float)
    else:
        xi = xi_of_s(s, eps, phase, order)
    return lp_orbit_third(np.tanh(xi), eps, phase, order)


# ---------------------------------------------------------------------------
# smooth normal-form asymptotics (coefficients a, b, a1, b1, d, e)
# ---------------------------------------------------------------------------

def smooth_tau(eps: float, coeffs, order: int = 3) -> float:
    a, b, a1, b1, d, e = coeffs
    tau = 10.0 / 7.0
    if order >= 2:
        tau += ((98.0 * b * (50.0 * a * b1 + 73.0 * d) - 9604.0 * a * e
                 - 2450.0 * a1 * b ** 2 + 288.0 * b ** 3)
                / (2401.0 * a ** 2 * b)) * eps * eps
    return tau


def _smooth_omega_polys(coeffs):
    a, b, a1, b1, d, e = coeffs
    om0 = [1.0]
    om1 = [0.0, -6.0 * b / (7.0 * a)]
    om2 = [(70.0 * a1 * b + 18.0 * b * b - 245.0 * d) / (196.0 * a * a),
           0.0,
           (54.0 * b * b + 441.0 * d) / (196.0 * a * a)]
    c3 = 1.0 / (2401.0 * a ** 3)
    om3 = [0.0,
           c3 * (-147.0 * b * (20.0 * a * b1 + 11.0 * d) + 9604.0 * a * e
                 + 1470.0 * a1 * b * b - 198.0 * b ** 3),
           0.0,
           c3 * (147.0 * b * 7.0 * d - 9604.0 * a * e + 126.0 * b ** 3)]
    return om0, om1, om2, om3


def _smooth_u_polys(coeffs):
    a, b, a1, b1, d, e = coeffs
    u0p = [-4.0, 0.0, 6.0]
    u2 = [(140.0 * a1 * b - 18.0 * b * b - 245.0 * d) / (49.0 * a * a),
          0.0,
          (-210.0 * a1 * b + 18.0 * b * b + 147.0 * d) / (49.0 * a * a)]
    return u0p, [0.0], u2, [0.0]


def _smooth_xi_terms(s, coeffs):
    a, b, a1, b1, d, e = coeffs
    sj = _as_jet(s)
    t, S, L = jtanh(s), jsech(s), jlogcosh(s)
    xi1 = L * (-6.0 * b / (7.0 * a))
    xi2 = (sj * (2.0 * (35.0 * a1 * b - 36.0 * b * b + 98.0 * d))
           + t * (L * (16.0 * b * b) + 10.0 * b * b - 49.0 * d) * 9.0) * (1.0 / (196.0 * a * a))
    xi3 = (S * S * (L * (-27.0 * b * (6.0 * b * b + 49.0 * d))
                    + L * L * (216.0 * b ** 3)
                    + (1372.0 * a * e - 234.0 * b ** 3 - 147.0 * b * d)) * (-7.0)
           + L * (-5880.0 * a * b * b1 + 4410.0 * a1 * b * b
                  - 1656.0 * b ** 3 + 2940.0 * b * d)
           + sj * t * (42.0 * b * (-35.0 * a1 * b + 36.0 * b * b - 98.0 * d))
           + 9604.0 * a * e - 1638.0 * b ** 3 - 1029.0 * b * d) * (1.0 / (4802.0 * a ** 3))
    return xi1, xi2, xi3


def _smooth_rp_terms(s, coeffs):
    a, b, a1, b1, d, e = coeffs
    sj = _as_jet(s)
    t, S, L = jtanh(s), jsech(s), jlogcosh(s)
    sh, ch = jsinh(s), jcosh(s)
    ch2, ch3, ch4 = jcosh(sj * 2.0), jcosh(sj * 3.0), jcosh(sj * 4.0)
    sh2 = jsinh(sj * 2.0)

    u1 = t * S * S * L * (-72.0 * b / (7.0 * a))
    u2 = (sj * sh2 * (12.0 * (35.0 * a1 * b - 36.0 * b * b + 98.0 * d))
          + ch2 * ((7.0 * (5.0 * a1 * b + 9.0 * b * b - 56.0 * d))
                   - L * L * (108.0 * b * b) + L * (108.0 * b * b)) * 8.0
          + (L * L * (192.0 * b * b) - L * (96.0 * b * b)
             + 35.0 * a1 * b - 64.0 * b * b + 245.0 * d) * 9.0
          - ch4 * (7.0 * (5.0 * a1 * b + 7.0 * d))) * S ** 4 * (1.0 / (196.0 * a * a))
    u3 = ((sh * (ch2 * (L * (-6.0 * b) * (-980.0 * (a * b1 + 3.0 * d)
                             + 1225.0 * a1 * b + 312.0 * b * b)
                        + 7.0 * (-1372.0 * a * e + 234.0 * b ** 3 + 147.0 * b * d)
                        + L ** 3 * (2016.0 * b ** 3) - L * L * (6048.0 * b ** 3))
                 + L * (6.0 * b) * (980.0 * a * b1 - 1225.0 * a1 * b
                                    + 1200.0 * b * b - 9408.0 * d)
                 + 7.0 * (1372.0 * a * e - 234.0 * b ** 3 - 147.0 * b * d)
                 - L ** 3 * (10080.0 * b ** 3) + L * L * (15120.0 * b ** 3)) * (-2.0))
          + sj * ch3 * (42.0 * b * (35.0 * a1 * b - 36.0 * b * b + 98.0 * d)) * (L * 2.0 - 1.0)
          + sj * ch * (42.0 * b * (-35.0 * a1 * b + 36.0 * b * b - 98.0 * d)) * (L * 6.0 - 1.0)
          ) * S ** 5 * (3.0 / (4802.0 * a ** 3))
    return u1, u2, u3


def smooth_orbit(s_or_zeta, eps: float, coeffs, mode: str = "LP",
                 order: int = 3, xi_identity: bool = False):
    """Smooth normal-form homoclinic orbit (u, v).

    mode 'LP' takes zeta as the argument and evaluates the LP series in zeta;
    mode 'RP' takes the time s and evaluates the regular-perturbation series.
    """
    a, b = coeffs[0], coeffs[1]
    if a == 0 or b == 0:
        raise ValueError("a and b must be nonzero")
    order = min(order, 3)
    if mode.upper() == "RP":
        sj = Jet.variable(s_or_zeta)
        terms = (_u0_jet(sj),) + _smooth_rp_terms(sj, coeffs)
        acc = terms[0]
        for i in range(1, order + 1):
            acc = acc + terms[i] * eps ** i
        return acc.f, acc.d
    if mode.upper() != "LP":
        raise ValueError("mode must be 'RP' or 'LP'")
    zeta = np.asarray(s_or_zeta, float)
    u_polys = _smooth_u_polys(coeffs)
    om = _smooth_omega_polys(coeffs)
    u = np.zeros_like(zeta)
    for i in range(order + 1):
        u = u + _peval_np(u_polys[i], zeta) * eps ** i
    v = np.zeros_like(zeta)
    for i in range(order + 1):
        for j in range(order + 1 - i):
            v = v + (_peval_np(om[i], zeta)
                     * _peval_np(_pderiv(list(u_polys[j])), zeta) * eps ** (i + j))
    return u, (1.0 - zeta * zeta) * v


def smooth_orbit_of_s(s, eps: float, coeffs, order: int = 3,
                      xi_identity: bool = False):
    """Smooth-normal-form LP orbit as a function of the time s."""
    if xi_identity:
        xi = np.asarray(s, float)
    else:
        terms = _smooth_xi_terms(Jet.variable(s), coeffs)
        acc = Jet.variable(s)
        for i, term in enumerate(terms[:min(order, 3)], start=1):
            acc = acc + term * eps ** i
        xi = acc.f
    return smooth_orbit(np.tanh(xi), eps, coeffs, mode="LP", order=order)


def smooth_xi_of_s(s, eps: float, coeffs, order: int = 3):
    terms = _smooth_xi_terms(Jet.variable(s), coeffs)
    acc = Jet.variable(s)
    for i, term in enumerate(terms[:min(order, 3)], start=1):
        acc = acc + term * eps ** i
    return acc.f


# ---------------------------------------------------------------------------
# antiderivatives feeding the orbital time reparametrization
# ---------------------------------------------------------------------------

def rp_int_u(s, eps: float, order: int = 3):
    """int u ds for the regular-perturbation orbit, anchored so t(0) = 0."""
    sj = _as_jet(s) if isinstance(s, Jet) else Jet.variable(s)
    t, S, L = jtanh(sj), jsech(sj), jlogcosh(sj)
    sh, ch = jsinh(sj), jcosh(sj)
    ch2, sh2, ch4 = jcosh(sj * 2.0), jsinh(sj * 2.0), jcosh(sj * 4.0)
    acc = (sj - t * 3.0) * 2.0
    if order >= 1:
        acc = acc + S * S * (ch2 - L * 4.0 - 1.0) * (-9.0 / 7.0) * eps
    if order >= 2:
        acc = acc + (S ** 3 * (sh * (ch2 - L * L * 12.0 + 6.0) * 2.0 - sj * ch * 12.0)
                     * (-9.0 / 49.0) * eps ** 2)
    if order >= 3:
        acc = acc + (S ** 4 * (ch4 + ch2 * (L ** 3 * (-112.0) + L * L * 168.0
                                            + L * 188.0 + 7.0)
                               + (L ** 3 * 28.0 - L * L * 21.0 - L * 29.0
                                  - sj * sh2 * L * 21.0 - 1.0) * 8.0)
                     * (-27.0 / 2401.0) * eps ** 3)
    return acc.f if not isinstance(s, Jet) else acc


def lp_int_u_over_omega(xi, eps: float, order: int = 3):
    """int u_hat / omega d(xi) for the LP orbit (not anchored)."""
    xj = _as_jet(xi) if isinstance(xi, Jet) else Jet.variable(xi)
    t, S, L = jtanh(xj), jsech(xj), jlogcosh(xj)
    acc = xj * 2.0 - t * 6.0
    if order >= 1:
        acc = acc + (S * S * (18.0 / 7.0) + L * (12.0 / 7.0)) * eps
    if order >= 2:
        acc = acc + (xj * 4.0 - t * 9.0 + t * S * S * 5.0) * (9.0 / 49.0) * eps ** 2
    if order >= 3:
        acc = acc + (S ** 4 * (-21.0) + S * S * 47.0 + L * 8.0) * (18.0 / 2401.0) * eps ** 3
    return acc.f if not isinstance(xi, Jet) else acc
