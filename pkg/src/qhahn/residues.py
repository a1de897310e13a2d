"""Iterated residues of products of linear forms.

An expression is a finite sum of terms ``coef * prod_k F_k^{e_k}`` where each
``F_k`` is a linear form with at most two monomials: ``a + b u_i`` or
``b u_i + c u_j``.  Substitution of a pole location into such a form gives
again a form of that shape, so the class is closed under the iterated residue
operation used for the Bethe integrals.

Forms are kept canonical (coefficient of the lowest-index variable equal to
1), with the scale folded into the term coefficient.  Identical forms
therefore merge and their exponents add.

Contour convention: variables are integrated in increasing index order on
circles ``1 < R_0 < R_1 < ...`` all taken arbitrarily close to 1.  Hence, for
the variable ``u_i`` being integrated,

* a constant pole ``c`` lies inside iff ``|c| < 1`` or ``c == 1``;
  ``|c| == 1, c != 1`` sits on the contour and is refused;
* a relative pole ``c u_j`` (``j > i``, integrated later) lies inside iff
  ``|c| < 1``.

Residues are counterclockwise.  Coefficients may be Fractions (exact) or
complex floats.
"""
from __future__ import annotations

import cmath
from fractions import Fraction

__all__ = [
    "ContourError",
    "form",
    "Expression",
    "binom_general",
    "residue_sum",
    "integrate_all",
]


class ContourError(ValueError):
    """A pole lies on the integration contour."""


# a form is a tuple of (var, coef) pairs sorted by var; var -1 is the constant


def _canon(pairs):
    """Canonicalize; returns (scale, form) or (value, None) for a constant."""
    pairs = [(v, c) for v, c in pairs]
    if any(isinstance(c, (float, complex)) for _, c in pairs):
        # floating cancellations leave residue-level noise instead of zeros
        big = max((abs(c) for _, c in pairs), default=0)
        pairs = [(v, c) for v, c in pairs if abs(c) > 1e-13 * big]
    pairs = tuple(sorted((v, c) for v, c in pairs if c != 0))
    variables = [(v, c) for v, c in pairs if v >= 0]
    if not variables:
        return (pairs[0][1] if pairs else 0), None
    lead = variables[0][1]
    return lead, tuple((v, _div(c, lead)) for v, c in pairs)


def _div(a, b):
    if isinstance(a, int) and isinstance(b, int):
        return Fraction(a, b)
    return a / b


def form(const=0, **coeffs):
    """Build a canonical form, e.g. ``form(1, u0=-1)`` for ``1 - u_0``.

    Returns ``(scale, form)`` like the internal helper.
    """
    pairs = [(-1, const)] + [(int(k[1:]), v) for k, v in coeffs.items()]
    return _canon(pairs)


def binom_general(e: int, j: int):
    """e (e-1) ... (e-j+1) / j!, valid for negative e."""
    num = 1
    for k in range(j):
        num *= e - k
    den = 1
    for k in range(2, j + 1):
        den *= k
    return Fraction(num, den)


class Expression:
    """Sum of coef * prod form^exp, stored as {frozenset(form -> exp): coef}."""

    def __init__(self, terms=None):
        self.terms: dict = dict(terms or {})

    @classmethod
    def product(cls, coef, factors):
        """coef * prod (scale, form)^e over ``factors = [((scale, form), e), ...]``."""
        exps: dict = {}
        for (scale, fm), e in factors:
            if fm is None:
                if scale == 0 and e < 0:
                    raise ZeroDivisionError("constant zero factor with negative exponent")
                coef = coef * scale**e if e >= 0 else _div(coef, scale ** (-e))
                continue
            coef = coef * scale**e if e >= 0 else _div(coef, scale ** (-e))
            exps[fm] = exps.get(fm, 0) + e
        exps = {k: v for k, v in exps.items() if v != 0}
        return cls({frozenset(exps.items()): coef})

    def __add__(self, other: "Expression") -> "Expression":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return Expression({k: v for k, v in out.items() if v != 0})

    def add_term(self, key, coef):
        new = self.terms.get(key, 0) + coef
        if new == 0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = new

    def value(self):
        """Scalar value once every variable has been integrated out."""
        total = 0
        for key, c in self.terms.items():
            if key:
                raise ValueError("expression still depends on variables")
            total += c
        return total

    def __len__(self):
        return len(self.terms)


def _is_inside(rest, var: int) -> bool:
    """Pole of u_var at -rest (rest is a constant or c*u_j with j > var)."""
    if not rest:
        return True  # pole at 0
    (v, c), = rest
    loc = -c
    if v < 0:
        if loc == 1:
            return True
        mag = abs(loc)
        if _on_unit_circle(mag):
            raise ContourError(f"constant pole {loc} on the unit circle")
        return mag < 1
    if v <= var:
        raise ValueError("relative pole refers to an already-integrated variable")
    return abs(loc) < 1


def _on_unit_circle(mag) -> bool:
    if isinstance(mag, Fraction) or isinstance(mag, int):
        return mag == 1
    return cmath.isclose(mag, 1.0, rel_tol=1e-12)


def _subtract(rest_k, rest_p):
    """(u + rest_k) evaluated at u = -rest_p, i.e. rest_k - rest_p, canonicalized."""
    acc: dict = {}
    for v, c in rest_k:
        acc[v] = acc.get(v, 0) + c
    for v, c in rest_p:
        acc[v] = acc.get(v, 0) - c
    return _canon(acc.items())


def _power(scale, e):
    return scale**e if e >= 0 else _div(1, scale ** (-e))


def residue_sum(expr: Expression, var: int) -> Expression:
    """Sum of counterclockwise residues in ``u_var`` at the poles inside the contour."""
    out = Expression()
    for key, coef in expr.terms.items():
        with_v, without = [], []
        for fm, e in key:
            # var is the lowest live index, so it carries coefficient 1 when present
            if any(v == var for v, _ in fm):
                with_v.append((tuple(pc for pc in fm if pc[0] != var), e))
            else:
                without.append((fm, e))
        for idx, (rest_p, ep) in enumerate(with_v):
            if ep >= 0 or not _is_inside(rest_p, var):
                continue
            order = -ep
            others = [w for k, w in enumerate(with_v) if k != idx]
            _residue_term(coef, rest_p, order, others, without, out)
    return out


def _residue_term(coef, rest_p, order, others, without, out: Expression):
    # coefficient of (u - r)^(order-1) in prod_k ((r - r_k) + (u - r))^{e_k}
    n = order - 1
    partial = {0: {frozenset(without): coef}}
    for rest_k, ek in others:
        scale, fm = _subtract(rest_k, rest_p)
        nxt: dict = {}
        for j, bucket in partial.items():
            for jk in range(0, n - j + 1):
                b = binom_general(ek, jk)
                if b == 0:
                    continue
                pw = ek - jk
                if fm is None:
                    if scale == 0:
                        if pw < 0:
                            raise ZeroDivisionError("colliding poles")
                        if pw > 0:
                            continue
                        factor, extra = b, None
                    else:
                        factor, extra = b * _power(scale, pw), None
                else:
                    factor, extra = b * _power(scale, pw), (fm, pw) if pw else None
                dest = nxt.setdefault(j + jk, {})
                for k2, c2 in bucket.items():
                    if extra is not None:
                        d = dict(k2)
                        d[extra[0]] = d.get(extra[0], 0) + extra[1]
                        if d[extra[0]] == 0:
                            del d[extra[0]]
                        k2 = frozenset(d.items())
                    val = dest.get(k2, 0) + c2 * factor
                    if val == 0:
                        dest.pop(k2, None)
                    else:
                        dest[k2] = val
        partial = nxt
    for k2, c2 in partial.get(n, {}).items():
        out.add_term(k2, c2)


def integrate_all(expr: Expression, nvars: int):
    """Iterated residue sums in u_0, u_1, ... ; returns the scalar result."""
    for var in range(nvars):
        expr = residue_sum(expr, var)
    return expr.value()
