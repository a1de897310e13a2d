"""Model parameters and the q-Hahn chipping distribution.

A site holding ``n`` particles sends ``m`` of them to its right neighbour with
probability ``phi(m, n, params)``.  The distribution factorizes as
``v(m) w(n-m) / f(n)``, which is what makes the stationary state a product
measure with single-site weight ``f``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from math import comb

from .qcalc import exact, q_binomial, q_factorial, q_number, q_pochhammer

__all__ = [
    "ParameterError",
    "ModelParams",
    "derive_params",
    "params_from_relation",
    "random_params",
    "weight_v",
    "weight_w",
    "weight_f",
    "weight_f_convolution",
    "site_weight",
    "phi",
    "phi_from_weights",
    "phi_limit",
    "LIMIT_KINDS",
    "phi_table",
    "phi_table_csv",
    "format_scalar",
]


class ParameterError(ValueError):
    """Raised for singular or out-of-domain (q, mu, nu)."""


@dataclass(frozen=True)
class ModelParams:
    """The triple (q, mu, nu) and everything derived from it.

    ``p`` is the one-particle hopping probability and ``alpha``, ``beta``,
    ``gamma`` are the coefficients of the exchange relation
    ``BA = alpha AA + beta AB + gamma BB``.  Instances are immutable and
    hashable, so they double as memoization keys.
    """

    q: object
    mu: object
    nu: object
    strict: bool = True
    # part of equality/hash: Fraction(1, 2) == 0.5 must not share cache entries
    backend: str = field(init=False, repr=False)
    p: object = field(init=False, compare=False)
    alpha: object = field(init=False, compare=False)
    beta: object = field(init=False, compare=False)
    gamma: object = field(init=False, compare=False)

    def __post_init__(self):
        q, mu, nu = self.q, self.mu, self.nu
        if nu == 1:
            raise ParameterError("nu = 1 is singular (p is undefined)")
        if q * nu == 1:
            raise ParameterError("q*nu = 1 is singular")
        if self.strict:
            _check_domain(q, mu, nu)
        den = 1 - q * nu
        kinds = {type(x).__name__ for x in (q, mu, nu)}
        object.__setattr__(self, "backend", "exact" if kinds <= {"int", "Fraction"} else "float")
        object.__setattr__(self, "p", (mu - nu) / (1 - nu))
        object.__setattr__(self, "alpha", nu * (1 - q) / den)
        object.__setattr__(self, "beta", (q - nu) / den)
        object.__setattr__(self, "gamma", (1 - q) / den)

    @property
    def is_exact(self) -> bool:
        return self.backend == "exact"

    def as_float(self) -> "ModelParams":
        return ModelParams(float(self.q), float(self.mu), float(self.nu), strict=False)

    def is_valid(self, horizon: int = 30) -> bool:
        """True iff v(k), w(k) >= 0 and nu != q^-k for every k <= horizon."""
        for k in range(horizon + 1):
            if 1 - self.nu * self.q**k == 0:
                return False
        if self.q == 1:
            p = self.p
            return _is_real(p) and 0 <= p <= 1
        try:
            for k in range(horizon + 1):
                v, w = weight_v(k, self), weight_w(k, self)
                if not (_is_real(v) and _is_real(w)) or v.real < 0 or w.real < 0:
                    return False
        except ZeroDivisionError:
            return False
        return True

    def describe(self) -> dict:
        return {"q": str(self.q), "mu": str(self.mu), "nu": str(self.nu)}


def _is_real(x) -> bool:
    return not isinstance(x, complex) or x.imag == 0


def _check_domain(q, mu, nu):
    if any(isinstance(x, complex) for x in (q, mu, nu)):
        raise ParameterError("complex parameters need strict=False")
    # q = 1 is admitted as the binomial limit point
    if not (-1 < q <= 1):
        raise ParameterError(f"|q| < 1 required (q = {q})")
    if not (0 <= nu <= mu < 1):
        raise ParameterError(f"0 <= nu <= mu < 1 required (mu = {mu}, nu = {nu})")


def derive_params(q, mu, nu, strict: bool = True) -> ModelParams:
    return ModelParams(q, mu, nu, strict=strict)


def random_params(rng, denominator: int = 20, exact: bool = True) -> ModelParams:
    """Random valid triple with rational entries on a grid of ``1/denominator``.

    ``rng`` is a numpy Generator.  Draws are repeated until the hopping
    weights are nonnegative, so the triple lies in the probabilistic domain.
    """
    d = denominator
    while True:
        q = Fraction(int(rng.integers(-d + 1, d)), d)
        k = int(rng.integers(0, d - 1))
        nu = Fraction(k, d)
        mu = Fraction(int(rng.integers(k + 1, d)), d)
        try:
            params = ModelParams(q, mu, nu)
        except ParameterError:
            continue
        if params.is_valid():
            return params if exact else params.as_float()


def params_from_relation(alpha, beta, gamma, p, strict: bool = True) -> ModelParams:
    """Invert the (q, nu) parametrization of the exchange relation.

    Refuses coefficients with ``alpha + beta + gamma != 1``.
    """
    if alpha + beta + gamma != 1:
        raise ParameterError(f"alpha + beta + gamma = {alpha + beta + gamma}, expected 1")
    if gamma == 0:
        raise ParameterError("gamma = 0 is outside the (q, nu) parametrization")
    nu = alpha / gamma
    q = (beta + nu) / (1 + beta * nu)
    mu = p + nu * (1 - p)
    return ModelParams(q, mu, nu, strict=strict)


def _need_q_not_one(params: ModelParams):
    if params.q == 1:
        raise ParameterError("v, w, f are singular at q = 1; use phi or site_weight")


def _mu_nu_product(m: int, params: ModelParams):
    # mu^m (nu/mu; q)_m expanded, so mu = 0 is not a pole
    q, mu, nu = params.q, params.mu, params.nu
    result = 1 + 0 * q
    for j in range(m):
        result *= mu - nu * q**j
    return result


@lru_cache(maxsize=None)
def weight_v(k: int, params: ModelParams):
    _need_q_not_one(params)
    return _mu_nu_product(k, params) / q_pochhammer(params.q, params.q, k)


@lru_cache(maxsize=None)
def weight_w(k: int, params: ModelParams):
    _need_q_not_one(params)
    q = params.q
    return q_pochhammer(params.mu, q, k) / q_pochhammer(q, q, k)


@lru_cache(maxsize=None)
def weight_f(n: int, params: ModelParams):
    _need_q_not_one(params)
    q = params.q
    return q_pochhammer(params.nu, q, n) / q_pochhammer(q, q, n)


def weight_f_convolution(n: int, params: ModelParams):
    return sum(weight_v(k, params) * weight_w(n - k, params) for k in range(n + 1))


@lru_cache(maxsize=None)
def site_weight(n: int, params: ModelParams):
    """f(n) (1-q)^n, a gauge of f that stays finite at q = 1.

    With the particle number fixed the factor (1-q)^N is a constant, so this
    gives the same normalized stationary measure as f.
    """
    q = params.q
    return q_pochhammer(params.nu, q, n) / q_factorial(n, q)


@lru_cache(maxsize=None)
def phi(m: int, n: int, params: ModelParams):
    """Probability that m of n particles leave a site in one step."""
    if m < 0 or m > n:
        return 0 * params.q
    q = params.q
    den = q_pochhammer(params.nu, q, n)
    if den == 0:
        raise ParameterError(f"(nu;q)_{n} = 0: f({n}) vanishes")
    num = _mu_nu_product(m, params) * q_pochhammer(params.mu, q, n - m)
    return num / den * q_binomial(n, m, q)


def phi_from_weights(m: int, n: int, v, w):
    """v(m) w(n-m) / sum_k v(k) w(n-k) for arbitrary weight callables."""
    if m < 0 or m > n:
        return 0
    norm = sum(v(k) * w(n - k) for k in range(n + 1))
    return v(m) * w(n - m) / norm


LIMIT_KINDS = ("q1_binomial", "q0_generalized", "single_jump_qtasep", "geometric_nu0")


def _limit_gap(kind: str, params: ModelParams):
    q, mu, nu = params.q, params.mu, params.nu
    if kind == "q1_binomial":
        return abs(q - 1)
    if kind == "q0_generalized":
        return abs(q)
    if kind == "single_jump_qtasep":
        return abs(mu - q * nu)
    if kind == "geometric_nu0":
        return abs(nu)
    raise ValueError(f"unknown limit {kind!r}; expected one of {LIMIT_KINDS}")


def phi_limit(kind: str, m: int, n: int, params: ModelParams, tol=0):
    """Closed-form hopping law at one of the classical limit points.

    ``tol`` bounds how far ``params`` may sit from the limit surface; the
    default 0 demands an exact hit.
    """
    if _limit_gap(kind, params) > tol:
        raise ParameterError(f"parameters do not satisfy the {kind} constraint")
    if m < 0 or m > n:
        return 0
    q, mu, p = params.q, params.mu, params.p
    if kind == "q1_binomial":
        return comb(n, m) * p**m * (1 - p) ** (n - m)
    if kind == "q0_generalized":
        if n == 0:
            return 1 + 0 * p
        if m == 0:
            return 1 - p
        if m == n:
            return p * mu ** (n - 1)
        return (1 - mu) * p * mu ** (m - 1)
    if kind == "single_jump_qtasep":
        if m == 0:
            return 1 - p * q_number(n, q)
        if m == 1:
            return p * q_number(n, q)
        return 0 * p
    # geometric q-TASEP jump-length law
    return mu**m * q_pochhammer(mu, q, n - m) * q_binomial(n, m, q)


def phi_table(params: ModelParams, n_max: int):
    """Rows (n, m, phi(m|n)) for 0 <= m <= n <= n_max."""
    return [(n, m, phi(m, n, params)) for n in range(n_max + 1) for m in range(n + 1)]


def format_scalar(value, digits: int = 17) -> str:
    """Decimal rendering; exact rationals are rounded to ``digits`` significant digits."""
    if isinstance(value, (int, Fraction)):
        value = Fraction(value)
        with localcontext() as ctx:
            ctx.prec = digits
            return str(Decimal(value.numerator) / Decimal(value.denominator))
    if isinstance(value, complex):
        if value.imag == 0:
            value = value.real
        else:
            return f"{value.real:.{digits}g}{value.imag:+.{digits}g}j"
    return f"{value:.{digits}g}"


def phi_table_csv(params: ModelParams, n_max: int, digits: int = 17, exact_fractions: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "m", "phi"])
    for n, m, value in phi_table(params, n_max):
        text = str(exact(value)) if exact_fractions else format_scalar(value, digits)
        writer.writerow([n, m, text])
    return buf.getvalue()
