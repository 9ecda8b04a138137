"""Gaussian quasi-modes concentrating near the plane x2 = 0.

The functions here build the phase ``Psi(x1, x2) = sum_j psi_j(x1) x2**j`` and
the amplitude coefficients ``v_{k;j}(x1)`` as exact :class:`CoeffSeries`,
check the eikonal and transport requirements order by order, evaluate the
explicit part ``exp(+-tau x0) exp(i tau Psi) a_tau`` of the quasi-mode and
tabulate the regrouped expansion of its normalized gradient.

Bivariate objects (polynomials in x2 with series coefficients) are plain
lists indexed by the power of x2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp
from scipy.integrate import trapezoid

from .series import CoeffSeries, solve_transport

# ---------------------------------------------------------------------------
# x2-polynomials with CoeffSeries coefficients
# ---------------------------------------------------------------------------


def _zero_like(s: CoeffSeries) -> CoeffSeries:
    return CoeffSeries.zero(s.eps, s.branch)


def poly_d1(p):
    return [c.diff() for c in p]


def poly_d2(p):
    return [c * (j + 1) for j, c in enumerate(p[1:])]


def poly_add(p, q):
    n = max(len(p), len(q))
    z = _zero_like((p or q)[0])
    return [(p[j] if j < len(p) else z) + (q[j] if j < len(q) else z) for j in range(n)]


def poly_mul(p, q, order=None):
    z = _zero_like(p[0])
    n = len(p) + len(q) - 1 if order is None else order + 1
    out = [z] * n
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            if i + j < n:
                out[i + j] = out[i + j] + a * b
    return out


def poly_scale(p, c):
    return [a * c for a in p]


def _coef(p, j):
    return p[j] if j < len(p) else _zero_like(p[0])


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def psi_series(eps, p3=0, p4=0, p5=0):
    """psi_0..psi_5 with psi_0 = x1, psi_1 = 0 and psi_2 = (x1 - i eps)^-1 / 2."""
    half = sp.Rational(1, 2) if isinstance(eps, sp.Basic) else 0.5
    eighth = sp.Rational(1, 8) if isinstance(eps, sp.Basic) else 0.125
    nine_half = sp.Rational(9, 2) if isinstance(eps, sp.Basic) else 4.5
    S = lambda terms: CoeffSeries(terms, eps)  # noqa: E731
    return [
        CoeffSeries.x1(eps),
        S({}),
        S({-1: half}),
        S({-3: p3}),
        S({-3: -eighth, -5: nine_half * p3**2, -4: p4}),
        S({-7: 27 * p3**3, -6: 12 * p3 * p4, -5: p5}),
    ]


def v_closed_forms(eps, q1=0, p3=0):
    """v_{0;0} and v_{0;1} in closed form."""
    v00 = CoeffSeries({sp.Rational(-1, 2): 1}, eps)
    v01 = CoeffSeries({sp.Rational(-5, 2): 3 * p3, sp.Rational(-3, 2): q1}, eps)
    return v00, v01


# ---------------------------------------------------------------------------
# requirement residuals
# ---------------------------------------------------------------------------


def eikonal_coefficients(psi, order=5):
    """x2-Taylor coefficients 0..order of |grad' Psi|^2 - 1."""
    d1, d2 = poly_d1(psi), poly_d2(psi)
    sq = poly_add(poly_mul(d1, d1, order), poly_mul(d2, d2, order))
    sq[0] = sq[0] - 1
    return [c.simplify() for c in sq[: order + 1]]


def transport_expression(psi, v, order, v_prev=None):
    """Coefficients of 2 grad'Psi.grad'v + (Lap'Psi) v - i Lap' v_prev up to x2**order."""
    two = 2
    d1p, d2p = poly_d1(psi), poly_d2(psi)
    lap_psi = poly_add(poly_d1(d1p), poly_d2(d2p))
    d1v, d2v = poly_d1(v), poly_d2(v)
    out = poly_add(
        poly_scale(poly_add(poly_mul(d1p, d1v, order), poly_mul(d2p, d2v, order)), two),
        poly_mul(lap_psi, v, order),
    )
    if v_prev is not None:
        imag = sp.I if isinstance(psi[0].eps, sp.Basic) else 1j
        lap_prev = poly_add(poly_d1(poly_d1(v_prev)), poly_d2(poly_d2(v_prev)))
        out = poly_add(out, poly_scale(lap_prev, -imag))
    out = out[: order + 1]
    z = _zero_like(psi[0])
    out += [z] * (order + 1 - len(out))
    return [c.simplify() for c in out]


def _transport_rate(psi, j):
    if not psi[1].is_zero():
        raise ValueError("recurrence assumes psi_1 = 0")
    rate = (psi[0].diff().diff() + psi[2] * (4 * j + 2)) * (sp.Rational(1, 2) if isinstance(psi[0].eps, sp.Basic) else 0.5)
    rate = rate.simplify()
    if set(rate.terms) != {-1}:
        raise ValueError("transport rate is not a pure z^-1 term")
    c = rate.terms[-1]
    return sp.nsimplify(c) if not isinstance(c, sp.Basic) else c


def v_series(psi, orders=(2,), homogeneous=None):
    """Solve the transport recurrences for v_{k;j}.

    ``orders[k]`` is the number of x2-coefficients computed for ``v_k``.
    ``homogeneous[(k, j)]`` sets the free constant multiplying
    ``z**-(2j+1)/2``; the defaults are 1 for ``v_{0;0}`` and 0 elsewhere
    (the caller passes ``q1`` for ``(0, 1)``).

    Requirement (iv) for v_k at order j needs ``v_{k-1}`` through order
    ``j + 2``; requesting more raises ``ValueError``.
    """
    homogeneous = dict(homogeneous or {})
    homogeneous.setdefault((0, 0), 1)
    eps = psi[0].eps
    z = CoeffSeries.zero(eps)
    vs = []
    for k, n in enumerate(orders):
        if n > len(psi) - 2:
            raise ValueError(f"v_{k} with {n} coefficients needs psi beyond order {len(psi) - 1}")
        if k > 0 and n + 2 > orders[k - 1]:
            raise ValueError(
                f"v_{k} with {n} coefficients needs v_{k - 1} through order {n + 1}, "
                f"only {orders[k - 1] - 1} requested")
        v = [z] * n
        prev = vs[k - 1] if k > 0 else None
        for j in range(n):
            rest = transport_expression(psi, v, j, prev)[j]
            rate = _transport_rate(psi, j)
            if not rest.is_zero() or homogeneous.get((k, j), 0) != 0:
                v[j] = solve_transport(rate, rest * (sp.Rational(1, 2) if isinstance(eps, sp.Basic) else 0.5),
                                       homogeneous.get((k, j), 0)).simplify()
        vs.append(v)
    return vs


# ---------------------------------------------------------------------------
# cutoff
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1)
def _cutoff_funcs():
    t = sp.Symbol("t", real=True)
    s = 2 * (1 - t)  # s in (0, 1) on the ramp 1/2 < t < 1
    f = lambda a: sp.exp(-1 / a)  # noqa: E731
    step = f(s) / (f(s) + f(1 - s))
    return tuple(sp.lambdify(t, sp.diff(step, t, k), "numpy") for k in range(3))


def cutoff(t, derivative=0):
    """Smooth even cutoff: 1 for |t| <= 1/2, 0 for |t| >= 1."""
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    out = np.zeros_like(a)
    if derivative == 0:
        out[a <= 0.5] = 1.0
    ramp = (a > 0.5) & (a < 1.0)
    if np.any(ramp):
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            val = _cutoff_funcs()[derivative](a[ramp])
        val = np.nan_to_num(val)
        if derivative == 1:
            val = val * np.sign(t[ramp])
        out[ramp] = val
    return out


# ---------------------------------------------------------------------------
# quasi-mode evaluator
# ---------------------------------------------------------------------------


@dataclass
class QuasimodeParams:
    lam: float
    sigma: float = 0.0
    eps: float = 1.0
    p3: complex = 0.0
    p4: complex = 0.0
    p5: complex = 0.0
    q1: complex = 0.0
    delta: float = 0.3
    v_orders: tuple = (2,)
    sign: int = 1
    h: object = None          # harmonic function of x''' with .value/.gradient, or None
    origin: np.ndarray = None
    rotation: np.ndarray = None

    @property
    def tau(self) -> complex:
        return complex(self.lam, self.sigma)


@dataclass
class Quasimode:
    """Explicit part exp(+-tau x0) exp(i tau Psi) a_tau of a Gaussian quasi-mode."""

    params: QuasimodeParams
    dim: int = 3
    psi: list = field(init=False)
    v: list = field(init=False)

    def __post_init__(self):
        p = self.params
        if p.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        self.psi = psi_series(p.eps, p.p3, p.p4, p.p5)
        hom = {(0, 1): p.q1} if p.v_orders[0] > 1 else {}
        self.v = v_series(self.psi, p.v_orders, hom)
        # closed forms take precedence where they exist (they agree with the recurrence)
        v00, v01 = v_closed_forms(p.eps, p.q1, p.p3)
        self.v[0][0] = CoeffSeries({k: complex(c) for k, c in v00.terms.items()}, p.eps)
        if p.v_orders[0] > 1:
            self.v[0][1] = CoeffSeries({k: complex(c) for k, c in v01.terms.items()}, p.eps)
        self.origin = np.zeros(self.dim) if p.origin is None else np.asarray(p.origin, float)
        self.rotation = np.eye(self.dim) if p.rotation is None else np.asarray(p.rotation, float)
        if not np.allclose(self.rotation @ self.rotation.T, np.eye(self.dim), atol=1e-12):
            raise ValueError("frame rotation is not orthogonal")

    def local(self, X):
        X = np.asarray(X, float)
        return np.tensordot(self.rotation, X - self.origin.reshape((-1,) + (1,) * (X.ndim - 1)), axes=1)

    # pieces on the (x1, x2) plane; arrays broadcast
    def phase(self, y1, y2):
        return sum(self.psi[j](y1) * y2**j for j in range(len(self.psi)))

    def phase_grad(self, y1, y2):
        d1 = sum(self.psi[j].diff()(y1) * y2**j for j in range(len(self.psi)))
        d2 = sum(j * self.psi[j](y1) * y2 ** (j - 1) for j in range(1, len(self.psi)))
        return d1, d2

    def phase_laplacian(self, y1, y2):
        return sum(self.psi[j].diff().diff()(y1) * y2**j for j in range(len(self.psi))) + sum(
            j * (j - 1) * self.psi[j](y1) * y2 ** (j - 2) for j in range(2, len(self.psi)))

    def amplitude_series(self, y1, y2, derivs=False):
        """sum_k tau^-k v_k and (optionally) its first and second partials."""
        tau = self.params.tau
        V = np.zeros(np.broadcast(y1, y2).shape, complex)
        V1, V2, V11, V22 = (np.zeros_like(V) for _ in range(4))
        for k, vk in enumerate(self.v):
            w = tau ** (-k)
            for j, c in enumerate(vk):
                if c.is_zero():
                    continue
                cv = c(y1)
                V = V + w * cv * y2**j
                if derivs:
                    d1 = c.diff()
                    V1 = V1 + w * d1(y1) * y2**j
                    V11 = V11 + w * d1.diff()(y1) * y2**j
                    if j >= 1:
                        V2 = V2 + w * j * cv * y2 ** (j - 1)
                    if j >= 2:
                        V22 = V22 + w * j * (j - 1) * cv * y2 ** (j - 2)
        if derivs:
            return V, V1, V2, V11, V22
        return V

    def _check_branch(self, y1, chi):
        if np.any((y1 <= 0) & (chi != 0)):
            raise ValueError("quasi-mode support reaches x1 <= 0 (branch violation)")

    def _h(self, Y):
        h = self.params.h
        if h is None or self.dim <= 3:
            return np.ones(Y.shape[1:]), np.zeros((max(self.dim - 3, 0),) + Y.shape[1:])
        return h.value(Y[3:]), h.gradient(Y[3:])

    def value(self, X):
        """u at points X of shape (d, ...)."""
        Y = self.local(X)
        p = self.params
        chi = cutoff(Y[2] / p.delta)
        self._check_branch(Y[1], chi)
        hv, _ = self._h(Y)
        a = chi * hv * self.amplitude_series(Y[1], Y[2])
        return np.exp(p.sign * p.tau * Y[0] + 1j * p.tau * self.phase(Y[1], Y[2])) * a

    def gradient(self, X):
        """Exact gradient, tau e^{+-tau x0} e^{i tau Psi}(+-a e0 + i grad'Psi a + grad'a/tau)."""
        Y = self.local(X)
        p = self.params
        tau = p.tau
        t = Y[2] / p.delta
        chi, dchi = cutoff(t), cutoff(t, 1) / p.delta
        self._check_branch(Y[1], chi)
        hv, dh = self._h(Y)
        V, V1, V2, _, _ = self.amplitude_series(Y[1], Y[2], derivs=True)
        a = chi * hv * V
        P1, P2 = self.phase_grad(Y[1], Y[2])
        G = np.zeros((self.dim,) + a.shape, complex)
        G[0] = p.sign * a
        G[1] = 1j * P1 * a + chi * hv * V1 / tau
        G[2] = 1j * P2 * a + (dchi * V + chi * V2) * hv / tau
        for m in range(3, self.dim):
            G[m] = chi * dh[m - 3] * V / tau
        G = tau * np.exp(p.sign * tau * Y[0] + 1j * tau * self.phase(Y[1], Y[2])) * G
        return np.tensordot(self.rotation.T, G, axes=1)

    def conjugated_residual(self, y1, y2):
        """(R, A) with e^{-i tau Psi}(tau^2 + Lap')(e^{i tau Psi} A) = R on the (x1, x2) plane.

        Every derivative is exact (series algebra and analytic cutoff), so
        this resolves arbitrarily large tau.  The x0 and x''' factors drop
        out of the residual because h is harmonic.
        """
        p = self.params
        tau = p.tau
        t = y2 / p.delta
        chi, dchi, ddchi = cutoff(t), cutoff(t, 1) / p.delta, cutoff(t, 2) / p.delta**2
        self._check_branch(y1, chi)
        V, V1, V2, V11, V22 = self.amplitude_series(y1, y2, derivs=True)
        A = chi * V
        A1, A2 = chi * V1, dchi * V + chi * V2
        lapA = chi * V11 + ddchi * V + 2 * dchi * V2 + chi * V22
        P1, P2 = self.phase_grad(y1, y2)
        lapP = self.phase_laplacian(y1, y2)
        R = tau**2 * (1 - P1**2 - P2**2) * A + 1j * tau * (2 * (P1 * A1 + P2 * A2) + lapP * A) + lapA
        return R, A

    def residual_ratio(self, x1_range=(0.8, 1.2), n1=201, n2=4001):
        """||Lap u|| / ||u|| over a slab x1 in x1_range, |x2| < delta (trapezoid rule)."""
        y1 = np.linspace(*x1_range, n1)[:, None]
        y2 = np.linspace(-self.params.delta, self.params.delta, n2)[None, :]
        R, A = self.conjugated_residual(y1, y2)
        weight = np.abs(np.exp(1j * self.params.tau * self.phase(y1, y2))) ** 2
        num = trapezoid(trapezoid(weight * np.abs(R) ** 2, y2[0], axis=1), y1[:, 0])
        den = trapezoid(trapezoid(weight * np.abs(A) ** 2, y2[0], axis=1), y1[:, 0])
        return float(np.sqrt(num / den))


def quasimode(params: QuasimodeParams, dim: int = 3) -> Quasimode:
    return Quasimode(params, dim)


# ---------------------------------------------------------------------------
# regrouped gradient expansion
# ---------------------------------------------------------------------------

BASIS = ("alpha", "e1", "e2", "dh")


def v_expansion(psi, v, sign=1, max_tau=1, max_x2=3, tau_scale=1):
    """Table (tau^-m power, x2 power, basis) -> CoeffSeries for the normalized gradient.

    For ``sign=+1`` the table expands ``tau^-1 e^{-tau x0} e^{-i tau Psi} grad u^+``
    divided by ``chi h``.  For ``sign=-1`` it expands ``(-1) conj`` of the matching
    quantity for ``u^-`` (powers then count ``conj(tau)^-1``); those entries live on
    the conjugate branch.  With ``alpha = e0 + i e1`` each entry is
    ``i (phase-gradient convolution) + (amplitude-gradient part)`` and the minus
    table flips the sign of the amplitude-gradient part only.

    ``tau_scale`` rescales the frequency (2 for the third probe), multiplying
    the m-th power entries by ``tau_scale**-m``.  The ``dh`` slot carries the
    transverse gradient of h divided by h; cutoff-derivative terms vanish on
    the plateau and are omitted.  Missing coefficients count as zero.
    """
    eps = psi[0].eps
    symbolic = isinstance(eps, sp.Basic)
    z = CoeffSeries.zero(eps)
    dpsi1 = poly_d1(psi)
    dpsi1[0] = dpsi1[0] - 1  # d1 Psi - 1, the rest is absorbed by alpha
    dpsi2 = poly_d2(psi)
    imag = sp.I if symbolic else 1j

    def vc(k, j):
        if 0 <= k < len(v) and 0 <= j < len(v[k]):
            return v[k][j]
        return z

    def conv(dpsi, m, j):
        return sum((vc(m, l) * _coef(dpsi, j - l) for l in range(j + 1)), z)

    table = {}
    for m in range(max_tau + 1):
        scale = sp.Rational(1, tau_scale**m) if symbolic else tau_scale ** (-m)
        for j in range(max_x2 + 1):
            parts = {
                "alpha": (z, vc(m, j)),
                "e1": (conv(dpsi1, m, j), vc(m - 1, j).diff() if m >= 1 else z),
                "e2": (conv(dpsi2, m, j), vc(m - 1, j + 1) * (j + 1) if m >= 1 else z),
                "dh": (z, vc(m - 1, j) if m >= 1 else z),
            }
            for b, (phase_part, amp_part) in parts.items():
                if sign == 1:
                    val = phase_part * imag + amp_part
                elif b == "alpha":
                    val = amp_part.conjugate()
                else:
                    val = phase_part.conjugate() * imag - amp_part.conjugate()
                val = (val * scale).simplify()
                if not val.is_zero():
                    table[(m, j, b)] = val
    return table


def evaluate_expansion(table, y1, y2, tau, dim=3):
    """Sum a v_expansion table into (e0, e1, e2) components; the dh slot is dropped.

    ``tau`` is the frequency counted by the table's powers (pass ``conj(tau)``
    for a minus table).
    """
    out = np.zeros((dim,) + np.broadcast(y1, y2).shape, complex)
    for (m, j, b), c in table.items():
        val = c(y1) * y2**j * tau ** (-m)
        if b == "alpha":
            out[0] += val
            out[1] += 1j * val
        elif b == "e1":
            out[1] += val
        elif b == "e2":
            out[2] += val
    return out
