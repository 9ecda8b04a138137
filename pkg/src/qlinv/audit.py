"""Symbolic audit of the triple-product coefficient identities.

The product ``C : V1 (x) V2 (x) W3`` of two plus-tables and one conjugated
minus-table (frequency doubled) is expanded over (tau^-1 power, x2 power,
basis triple), passed through the stationary-phase operators and reduced to
a normal form for tensors ``C`` symmetric in the first two slots with
vanishing fully symmetric part.

Exactness: every half-integer power of ``x1 -+ i eps`` is written with the
square roots ``a = (x1 - i eps)^(1/2)`` and ``b = (x1 + i eps)^(1/2)``, and
``x1, eps`` are eliminated through ``a^2 + b^2 = 2 x1`` and
``a^2 - b^2 = -2 i eps``.  After clearing powers of ``eps`` every quantity is
a Laurent polynomial in ``a, b`` (and polynomial in the free constants) with
Gaussian-rational coefficients, where zero testing is exact.

Working assumptions: ``sigma = 0`` (so ``conj(tau) = tau = lam``), ``C`` is
constant in ``x2`` near the plane, ``p3 = p4 = p5 = 0`` and the transverse
factor ``h`` is constant (three dimensions).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import sympy as sp

from .asymptotics import AmplitudeSample, lj_terms, phase_F_symbolic
from .quasimode import psi_series, v_expansion, v_series

X1, EPS = sp.symbols("x1 eps", positive=True)
A, B = sp.symbols("a b")  # square roots of x1 - i eps and x1 + i eps
Q = sp.symbols("q1 q2 q3")
QB = sp.symbols("qb1 qb2 qb3")
CONSTS = tuple(Q) + tuple(QB)
VECTORS = ("alpha", "e1", "e2")

_AB_SUBS = {X1: (A**2 + B**2) / 2, EPS: sp.I * (A**2 - B**2) / 2}


# ---------------------------------------------------------------------------
# Laurent polynomials over Q(i)
# ---------------------------------------------------------------------------


class Laurent:
    """Sparse sum of c * a^i * b^j * prod(consts^k) with Gaussian-rational c."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {k: v for k, v in (terms or {}).items() if v != (0, 0)}

    @staticmethod
    def _mulc(x, y):
        return (x[0] * y[0] - x[1] * y[1], x[0] * y[1] + x[1] * y[0])

    def __add__(self, other):
        if not isinstance(other, Laurent):
            other = Laurent.const(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            w = out.get(k, (0, 0))
            out[k] = (w[0] + v[0], w[1] + v[1])
        return Laurent(out)

    __radd__ = __add__

    def __neg__(self):
        return Laurent({k: (-v[0], -v[1]) for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Laurent):
            other = Laurent.const(other)
        out = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = tuple(x + y for x, y in zip(k1, k2))
                c = self._mulc(c1, c2)
                w = out.get(k, (0, 0))
                out[k] = (w[0] + c[0], w[1] + c[1])
        return Laurent(out)

    __rmul__ = __mul__

    def __pow__(self, n):
        out = Laurent.const(1)
        for _ in range(n):
            out = out * self
        return out

    def is_zero(self):
        return not self.terms

    def channel(self, powers: dict) -> "Laurent":
        """Coefficient of the given constant monomial (the monomial itself stripped)."""
        mono = tuple(powers.get(s, 0) for s in CONSTS)
        zero = (0,) * len(CONSTS)
        return Laurent({k[:2] + zero: v for k, v in self.terms.items() if k[2:] == mono})

    def substitute_equal(self, src, dst) -> "Laurent":
        """Set constant ``src`` equal to constant ``dst``."""
        i, j = CONSTS.index(src) + 2, CONSTS.index(dst) + 2
        out = Laurent()
        for k, v in self.terms.items():
            k2 = list(k)
            k2[j] += k2[i]
            k2[i] = 0
            out = out + Laurent({tuple(k2): v})
        return out

    @classmethod
    def const(cls, c):
        c = sp.nsimplify(c) if not isinstance(c, (int, Fraction)) else sp.Rational(c)
        re, im = sp.re(c), sp.im(c)
        return cls({(0, 0) + (0,) * len(CONSTS): (Fraction(int(re.p), int(re.q)), Fraction(int(im.p), int(im.q)))})

    @classmethod
    def from_expr(cls, expr) -> "Laurent":
        expr = sp.expand(expr)
        out = {}
        for term in sp.Add.make_args(expr):
            if term == 0:
                continue
            c, rest = term.as_independent(A, B, *CONSTS, as_Add=False)
            re, im = sp.re(c), sp.im(c)
            if not (re.is_Rational and im.is_Rational):
                raise ValueError(f"non-rational coefficient {c}")
            powers = rest.as_powers_dict()
            key = [int(powers.get(A, 0)), int(powers.get(B, 0))] + [int(powers.get(s, 0)) for s in CONSTS]
            extra = set(powers) - {A, B, *CONSTS}
            if extra - {sp.Integer(1)}:
                raise ValueError(f"unexpected factor in {term}")
            key = tuple(key)
            w = out.get(key, (0, 0))
            out[key] = (w[0] + Fraction(int(re.p), int(re.q)), w[1] + Fraction(int(im.p), int(im.q)))
        return cls(out)

    def __call__(self, a, b, consts=None):
        """Numeric value at square roots a, b (constants default to 0)."""
        consts = consts or {}
        total = 0j
        for k, (re, im) in self.terms.items():
            val = complex(float(re), float(im)) * a ** k[0] * b ** k[1]
            for s, e in zip(CONSTS, k[2:]):
                if e:
                    val *= consts.get(s, 0) ** e
            total += val
        return total

    def to_expr(self):
        out = sp.Integer(0)
        for k, (re, im) in self.terms.items():
            c = sp.Rational(re.numerator, re.denominator) + sp.I * sp.Rational(im.numerator, im.denominator)
            mono = A ** k[0] * B ** k[1]
            for s, e in zip(CONSTS, k[2:]):
                mono *= s**e
            out += c * mono
        return out


EPS_L = Laurent.from_expr(sp.I * (A**2 - B**2) / 2)


def series_to_laurent(s) -> Laurent:
    root = A if s.branch == 1 else B
    out = sp.Integer(0)
    for e, c in s.terms.items():
        out += sp.sympify(c) * root ** int(2 * e)
    out = out.subs({sp.conjugate(q): qb for q, qb in zip(Q, QB)}).subs(_AB_SUBS)
    return Laurent.from_expr(out)


def to_display(L: Laurent, eps_power=0):
    """sympy form of L / eps^eps_power in terms of x1 and eps."""
    e = L.to_expr() / (sp.I * (A**2 - B**2) / 2) ** eps_power
    return sp.factor(sp.cancel(sp.together(e)))


# ---------------------------------------------------------------------------
# tensor normal form
# ---------------------------------------------------------------------------


class TensorNormalForm:
    """Coordinates of C(u, v, w) on abstract independent vectors, modulo the relations.

    Relations: C(u, v, w) = C(v, u, w) and
    C(u, v, w) + C(u, w, v) + C(v, w, u) = 0 (vanishing symmetric part).
    Free coordinates are chosen among components C(y, y, x) where possible.
    """

    relations_used = ("C(u,v,w) = C(v,u,w)", "C(u,v,w) + C(u,w,v) + C(v,w,u) = 0")

    def __init__(self, vectors=VECTORS):
        self.vectors = tuple(vectors)
        n = len(self.vectors)
        comps = list(itertools.product(range(n), repeat=3))

        def rank(c):
            i, j, k = c
            if i == j == k or i > j:
                return 0
            if i == j:
                return 2
            if k in (i, j):
                return 1
            return 2 if j < k else 1

        comps.sort(key=lambda c: (rank(c), c))
        index = {c: m for m, c in enumerate(comps)}
        rows = []
        for i, j, k in comps:
            r = [0] * len(comps)
            r[index[(i, j, k)]] += 1
            r[index[(j, i, k)]] -= 1
            if any(r):
                rows.append(r)
            r = [0] * len(comps)
            r[index[(i, j, k)]] += 1
            r[index[(i, k, j)]] += 1
            r[index[(j, k, i)]] += 1
            rows.append(r)
        rref, pivots = sp.Matrix(rows).rref()
        free_cols = [c for c in range(len(comps)) if c not in pivots]
        self.free = [comps[c] for c in free_cols]
        self.coords = {}
        for c in comps:
            col = index[c]
            if col in free_cols:
                vec = [Fraction(int(f == free_cols.index(col))) for f in range(len(free_cols))]
            else:
                row = pivots.index(col)
                vec = [Fraction(-int(rref[row, fc].p), int(rref[row, fc].q)) for fc in free_cols]
            self.coords[c] = vec

    @property
    def dimension(self):
        return len(self.free)

    def reduce(self, combo: dict) -> list:
        """combo: basis-name triple -> Laurent; returns Laurent coordinates on the free set."""
        out = [Laurent() for _ in range(self.dimension)]
        pos = {v: m for m, v in enumerate(self.vectors)}
        for triple, coef in combo.items():
            for f, w in enumerate(self.coords[tuple(pos[t] for t in triple)]):
                if w != 0:
                    out[f] = out[f] + coef * Laurent.const(sp.Rational(w.numerator, w.denominator))
        return out

    def label(self, f):
        return "C:" + "(x)".join(self.vectors[i] for i in self.free[f])


# ---------------------------------------------------------------------------
# product expansion
# ---------------------------------------------------------------------------

V_ORDERS = (4, 2)


@dataclass
class ProductExpansion:
    orders: dict                  # (M, J) -> {triple: Laurent}
    provenance: dict              # (M, J, triple) -> list of factor keys
    incomplete: set               # (probe, m, j) entries whose coefficient is truncated
    tables: list                  # per-probe table, key (m, j, basis) -> Laurent


@lru_cache(maxsize=4)
def probe_tables(max_tau, max_x2):
    psi = psi_series(EPS)
    tabs, incomplete = [], set()
    for n in range(3):
        v = v_series(psi, V_ORDERS, {(0, 1): Q[n]})
        sign, scale = (1, 1) if n < 2 else (-1, 2)
        tab = v_expansion(psi, v, sign=sign, max_tau=max_tau, max_x2=max_x2, tau_scale=scale)
        tabs.append({k: series_to_laurent(c) for k, c in tab.items() if k[2] != "dh"})
        for m in range(max_tau + 1):
            for j in range(max_x2 + 1):
                # alpha needs v_{m;j}, the e2 amplitude part needs v_{m-1;j+1}
                have = V_ORDERS[m] if m < len(V_ORDERS) else 0
                have_prev = V_ORDERS[m - 1] if 0 <= m - 1 < len(V_ORDERS) else 0
                if j >= have or (m >= 1 and j + 1 >= have_prev):
                    incomplete.add((n, m, j))
    return tabs, frozenset(incomplete)


def expand_product(max_tau=2, max_x2=4, wanted=None) -> ProductExpansion:
    """Expand C:V1 (x) V2 (x) W3; ``wanted`` restricts to a set of (M, J) orders."""
    tabs, incomplete = probe_tables(max_tau, max_x2)
    orders, prov = {}, {}
    for (k1, c1), (k2, c2) in itertools.product(tabs[0].items(), tabs[1].items()):
        M12, J12 = k1[0] + k2[0], k1[1] + k2[1]
        if M12 > max_tau or J12 > max_x2:
            continue
        c12 = None
        for k3, c3 in tabs[2].items():
            M, J = M12 + k3[0], J12 + k3[1]
            if M > max_tau or J > max_x2 or (wanted is not None and (M, J) not in wanted):
                continue
            if c12 is None:
                c12 = c1 * c2
            triple = (k1[2], k2[2], k3[2])
            bucket = orders.setdefault((M, J), {})
            bucket[triple] = bucket.get(triple, Laurent()) + c12 * c3
            prov.setdefault((M, J, triple), []).append((k1, k2, k3))
    return ProductExpansion(orders, prov, set(incomplete), tabs)


@lru_cache(maxsize=4)
def lj_weights(max_j=2, max_m=4):
    """w[j][m] = eps^j * ell[j][m], with L_j U = sum_m ell[j][m] U_m (U_m: x2^m coefficient)."""
    phase = phase_F_symbolic(X1, EPS)
    u = sp.symbols(f"u0:{max_m + 1}")
    terms = lj_terms(phase, AmplitudeSample(list(u)), max_j + 1)
    out = []
    for j, t in enumerate(terms):
        row = []
        for m in range(max_m + 1):
            e = sp.cancel(sp.together((sp.expand(t).coeff(u[m]) * EPS**j).subs(_AB_SUBS)))
            num, den = sp.fraction(e)
            if not den.is_Mul and not den.is_Pow and not den.is_Symbol and not den.is_Number:
                raise ValueError("operator weight is not a Laurent polynomial")
            row.append(Laurent.from_expr(sp.expand(num) / den))
        out.append(row)
    return out


def lambda_coefficient(expansion: ProductExpansion, n: int, max_x2=4) -> dict:
    """Triple -> eps^n times the coefficient of lam^-n in sum_j lam^-j L_j U."""
    w = lj_weights(max(n, 1), max_x2)
    out = {}
    for j in range(n + 1):
        M = n - j
        scale = EPS_L ** (n - j)
        for m in range(max_x2 + 1):
            if w[j][m].is_zero():
                continue
            wm = w[j][m] * scale
            for triple, c in expansion.orders.get((M, m), {}).items():
                out[triple] = out.get(triple, Laurent()) + wm * c
    return out


# ---------------------------------------------------------------------------
# audits
# ---------------------------------------------------------------------------


@dataclass
class AuditReport:
    target: str
    ok: bool
    lines: list = field(default_factory=list)
    mismatches: list = field(default_factory=list)

    def text(self) -> str:
        head = f"audit {self.target}: {'PASS' if self.ok else 'FAIL'}"
        return "\n".join([head] + self.lines + [f"MISMATCH {m}" for m in self.mismatches])


def _compare(nf, computed: dict, expected: dict, report: AuditReport, tag: str, eps_power: int):
    got = nf.reduce(computed)
    want = nf.reduce(expected)
    for f in range(nf.dimension):
        g, w = to_display(got[f], eps_power), to_display(want[f], eps_power)
        report.lines.append(f"  [{tag}] {nf.label(f)}: computed {g} | displayed {w}")
        if not (got[f] - want[f]).is_zero():
            report.mismatches.append(f"[{tag}] {nf.label(f)}: computed {g}, displayed {w}")


def _provenance_lines(expansion, orders, report, limit=40):
    count = 0
    for (M, J, triple), keys in sorted(expansion.provenance.items()):
        if (M, J) not in orders:
            continue
        for key in keys:
            if count < limit:
                report.lines.append(f"    term lam^-{M} x2^{J} {triple} <- {key}")
            count += 1
    report.lines.append(f"    ({count} table products at the audited orders)")


def _closed_v():
    """v00, conj(v00), v01 and conj(v01) per probe as Laurent polynomials."""
    v00 = Laurent.from_expr(A**-1)
    v00b = Laurent.from_expr(B**-1)
    v01 = [Laurent.from_expr(Q[n] * A**-3) for n in range(3)]
    v01b = [Laurent.from_expr(QB[n] * B**-3) for n in range(3)]
    return v00, v00b, v01, v01b


def audit_magic() -> AuditReport:
    rep = AuditReport("magic", True)
    psi2 = series_to_laurent(psi_series(EPS)[2])
    psi2b = series_to_laurent(psi_series(EPS)[2].conjugate())
    s = Laurent.from_expr(A**2 * B**2)
    # 2i s/(4 eps) (conj psi2 - psi2) = 1/2   <=>   2i s (conj psi2 - psi2) = 2 eps
    lhs = Laurent.const(2 * sp.I) * s * (psi2b - psi2)
    ok = (lhs - EPS_L * Laurent.const(2)).is_zero()
    rep.lines.append(f"  2i (x1^2+eps^2)/(4 eps) (conj(psi2) - psi2) = {to_display(lhs * Laurent.const(sp.Rational(1, 4)), 1)}")
    w = lj_weights(1, 2)
    via = w[1][2] * Laurent.const(2 * sp.I) * (psi2b - psi2)
    ok2 = (via - EPS_L * Laurent.const(sp.Rational(1, 2))).is_zero()
    rep.lines.append(f"  through the generic L1 second-derivative weight: {to_display(via, 1)}")
    num = 2j * (1.25 / 2) * (complex(0.4, -0.2) - complex(0.4, 0.2))
    rep.lines.append(f"  x1=1, eps=0.5: psi2=0.4+0.2i, value {num}")
    rep.ok = ok and ok2 and abs(num - 0.5) < 1e-15
    if not rep.ok:
        rep.mismatches.append("magic identity does not reduce to 1/2")
    return rep


def audit_first_order() -> AuditReport:
    """lam^-1 coefficient (q-linear part) against the displayed bracket."""
    rep = AuditReport("first-order", True)
    expansion = expand_product(1, 2, wanted={(0, 0), (0, 2), (1, 0)})
    nf = TensorNormalForm()
    lam1 = lambda_coefficient(expansion, 1, max_x2=2)
    v00, v00b, v01, v01b = _closed_v()
    absv = v00 * v00b
    half = Laurent.const(sp.Rational(1, 2))
    displayed = {
        ("e2", "alpha", "alpha"): (absv * v01[0] - absv * v01[1]) * half * EPS_L,
        ("alpha", "e2", "alpha"): (absv * v01[1] - absv * v01[0]) * half * EPS_L,
        ("alpha", "alpha", "e2"): v00 * v00 * v01b[2] * EPS_L,
    }
    lead = nf.reduce(expansion.orders.get((0, 0), {}))
    rep.lines.append("  lam^0 x2^0 term is a multiple of C:alpha(x)alpha(x)alpha: "
                     + str(set(expansion.orders.get((0, 0), {})) == {("alpha",) * 3}))
    rep.lines.append("  lam^0 x2^0 term vanishes under the relations: "
                     + str(all(c.is_zero() for c in lead)))
    for name, powers in (("q1", {Q[0]: 1}), ("q2", {Q[1]: 1}), ("conj q3", {QB[2]: 1})):
        comp = {t: c.channel(powers) for t, c in lam1.items()}
        exp = {t: c.channel(powers) for t, c in displayed.items()}
        _compare(nf, comp, exp, rep, name, eps_power=1)
    rep.lines.append("  rewrite rules: " + "; ".join(nf.relations_used))
    _provenance_lines(expansion, {(1, 0), (0, 2)}, rep)
    rep.ok = not rep.mismatches
    return rep


def audit_qq13() -> AuditReport:
    """lam^-2 coefficient of q conj(q3) with q1 = q2 = q, against the displayed bracket."""
    rep = AuditReport("qq13", True)
    wanted = {(2, 0), (1, 0), (1, 2), (0, 0), (0, 2), (0, 4)}
    expansion = expand_product(2, 4, wanted=wanted)
    _check_truncation(expansion, rep)
    nf = TensorNormalForm()
    lam2 = lambda_coefficient(expansion, 2, max_x2=4)
    comp = {}
    for t, c in lam2.items():
        c = c.substitute_equal(Q[1], Q[0])
        comp[t] = c.channel({Q[0]: 1, QB[2]: 1})
    # (1/(4 eps)) (x1 + i eps) (x1 - i eps)^(-1/2) s^(-3/2) = b^2 a^-1 (ab)^-3 / (4 eps)
    pref = Laurent.from_expr(B**2 * A**-1 * (A * B) ** -3 / 4) * EPS_L  # eps^2 / (4 eps)
    displayed = {
        ("alpha", "alpha", "e1"): pref * Laurent.const(sp.Rational(1, 2)),
        ("e2", "e2", "alpha"): pref * Laurent.const(3 - 2 * sp.I),
    }
    _compare(nf, comp, displayed, rep, "q conj(q3)", eps_power=2)
    rep.lines.append("  rewrite rules: " + "; ".join(nf.relations_used))
    _provenance_lines(expansion, {(2, 0), (1, 2), (0, 4)}, rep)
    rep.ok = not rep.mismatches
    return rep


def _check_truncation(expansion, rep):
    """Products touching a truncated table entry must not feed a q conj(q3) term.

    Each entry is linear in its own probe's constant, so a truncated entry of
    probe 3 is harmless when its partners carry no q1, q2, and a truncated
    entry of probe 1 or 2 is harmless when the probe-3 partner carries no q3.
    """
    idx = {s: CONSTS.index(s) + 2 for s in CONSTS}

    def has(L, syms):
        return any(k[idx[s]] for k in L.terms for s in syms)

    bad = 0
    for keys in expansion.provenance.values():
        for key in keys:
            for p, k in enumerate(key):
                if (p, k[0], k[1]) not in expansion.incomplete:
                    continue
                need = [QB[2]] if p < 2 else [Q[0], Q[1]]
                for p2, k2 in enumerate(key):
                    if p2 != p and has(expansion.tables[p2][k2], need):
                        bad += 1
                        rep.mismatches.append(f"truncated entry {(p,) + k} meets dependent partner {k2}")
    rep.lines.append(f"  truncated-entry products that could feed the channel: {bad}")


def run_audit(target: str) -> AuditReport:
    if target == "magic":
        return audit_magic()
    if target == "first-order":
        return audit_first_order()
    if target == "qq13":
        return audit_qq13()
    raise ValueError(f"unknown audit target {target!r}")
