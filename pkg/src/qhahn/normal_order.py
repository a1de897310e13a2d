"""Normal ordering in the algebra BA = alpha AA + beta AB + gamma BB.

Words are strings over ``{"A", "B"}``; a word is normally ordered when no
``B`` precedes an ``A``.  Degree-n normal forms are stored as coefficient
vectors indexed by the number of ``A`` letters, i.e. ``coeffs[k]`` multiplies
``A^k B^(n-k)``.

Naive rewriting does not terminate for this relation: reducing ``B^l A``
eventually regenerates ``B^l A`` itself through the ``alpha AA`` branch.
The reducer therefore treats every rewrite step as a linear equation
``NF(u BA v) = alpha NF(u AA v) + beta NF(u AB v) + gamma NF(u BB v)`` over
the finitely many same-length words and solves that system exactly.  Two
rewrite strategies (leftmost / rightmost ``BA`` first) yield different linear
systems; agreement of their solutions is the confluence check.

Three independent routes to the expansion coefficients are provided:

* brute force through :class:`Reducer`;
* the triangular recursion for ``a_k^l`` and the hopping recursion
  :func:`phi_recursive`;
* closed forms (:func:`coeff_a_closed`, :func:`partial_sum_s_closed`).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .hopping import ModelParams, phi, weight_v
from .qcalc import q_pochhammer

__all__ = [
    "NormalOrderingError",
    "NormalForm",
    "Reducer",
    "reduce_word",
    "shared_reducer",
    "is_normal",
    "expand_skew_binomial",
    "binomial_check",
    "coeff_a",
    "coeff_a_rewrite",
    "coeff_a_recursion",
    "coeff_a_closed",
    "a_table_recursion",
    "partial_sum_s",
    "partial_sum_s_direct",
    "partial_sum_s_closed",
    "phi_recursive",
    "w_over_f_product",
]


class NormalOrderingError(ArithmeticError):
    """The rewrite system is singular at these parameters."""


def _require_exact(params: ModelParams):
    if not params.is_exact:
        raise TypeError("normal ordering needs exact rational parameters")


@dataclass(frozen=True)
class NormalForm:
    degree: int
    coeffs: tuple

    def __getitem__(self, k: int):
        if 0 <= k <= self.degree:
            return self.coeffs[k]
        return Fraction(0)

    def total(self):
        return sum(self.coeffs, Fraction(0))

    def terms(self) -> dict:
        """Nonzero coefficients keyed by the normally ordered word."""
        n = self.degree
        return {"A" * k + "B" * (n - k): c for k, c in enumerate(self.coeffs) if c != 0}

    def __str__(self):
        parts = [f"({c})*{w or '1'}" for w, c in self.terms().items()]
        return " + ".join(parts) if parts else "0"


def is_normal(word: str) -> bool:
    return "BA" not in word


def _strip(word: str):
    """Split ``A^a core B^b`` with ``core`` empty or starting with B and ending with A."""
    a = len(word) - len(word.lstrip("A"))
    rest = word[a:]
    b = len(rest) - len(rest.rstrip("B"))
    return a, rest[: len(rest) - b], b


class Reducer:
    """Exact normal-ordering engine for one parameter set and strategy.

    Normal forms of the "cores" (words that start with B and end with A) are
    memoized; a core of length l depends only on cores of length <= l, and
    those of equal length are solved together as one sparse linear system.
    """

    def __init__(self, params: ModelParams, strategy: str = "leftmost"):
        _require_exact(params)
        if strategy not in ("leftmost", "rightmost"):
            raise ValueError(f"unknown strategy {strategy!r}")
        self.params = params
        self.strategy = strategy
        self._rule = (params.alpha, params.beta, params.gamma)
        self._cores: dict[str, list] = {}

    def rewrite(self, word: str):
        """One application of the relation at the strategy's BA occurrence."""
        i = word.find("BA") if self.strategy == "leftmost" else word.rfind("BA")
        if i < 0:
            return None
        head, tail = word[:i], word[i + 2 :]
        alpha, beta, gamma = self._rule
        return [(alpha, head + "AA" + tail), (beta, head + "AB" + tail), (gamma, head + "BB" + tail)]

    def reduce_word(self, word: str) -> NormalForm:
        n = len(word)
        coeffs = [Fraction(0)] * (n + 1)
        self._accumulate(word, Fraction(1), coeffs)
        return NormalForm(n, tuple(coeffs))

    def reduce(self, poly: dict) -> NormalForm:
        """Normal form of a homogeneous combination ``{word: coefficient}``."""
        degrees = {len(w) for w in poly}
        if len(degrees) > 1:
            raise ValueError("polynomial is not homogeneous")
        n = degrees.pop() if degrees else 0
        coeffs = [Fraction(0)] * (n + 1)
        for word, c in poly.items():
            self._accumulate(word, c, coeffs)
        return NormalForm(n, tuple(coeffs))

    def _accumulate(self, word: str, weight, out: list):
        a, core, _ = _strip(word)
        if not core:
            out[word.count("A")] += weight
            return
        for k, c in enumerate(self._core_form(core)):
            if c:
                out[a + k] += weight * c

    def _core_form(self, core: str) -> list:
        if core not in self._cores:
            self._solve_from(core)
        return self._cores[core]

    def _solve_from(self, root: str):
        length = len(root)
        # collect every same-length core reachable by rewriting
        rows: dict[str, dict] = {}
        rhs: dict[str, list] = {}
        pending = [root]
        while pending:
            w = pending.pop()
            if w in rows:
                continue
            row = {w: Fraction(1)}
            vec = [Fraction(0)] * (length + 1)
            for c, image in self.rewrite(w):
                if c == 0:
                    continue
                a, core, _ = _strip(image)
                if core in self._cores:
                    self._add_shifted(vec, c, a, self._cores[core])
                elif core and len(core) == length:
                    row[core] = row.get(core, 0) - c
                    if core not in rows:
                        pending.append(core)
                else:
                    self._accumulate(image, c, vec)
            rows[w] = row
            rhs[w] = vec
        self._cores.update(_solve_sparse(rows, rhs))

    @staticmethod
    def _add_shifted(vec, c, shift, form):
        for k, x in enumerate(form):
            if x:
                vec[shift + k] += c * x


def _solve_sparse(rows: dict, rhs: dict) -> dict:
    """Gaussian elimination on {eq: {var: coef}} with vector right-hand sides.

    Equation ``w`` is the rewrite of core ``w``, so each equation's own
    variable is tried as its pivot first.
    """
    rows = {k: dict(v) for k, v in rows.items()}
    rhs = {k: list(v) for k, v in rhs.items()}
    column: dict[str, set] = {}
    for eq, row in rows.items():
        for var in row:
            column.setdefault(var, set()).add(eq)
    order = []
    remaining = set(rows)
    for var in list(rows):
        candidates = [eq for eq in column.get(var, ()) if eq in remaining and rows[eq].get(var)]
        if not candidates:
            raise NormalOrderingError(f"singular rewrite system at word {var}")
        pivot = var if var in candidates else min(candidates, key=lambda e: len(rows[e]))
        remaining.discard(pivot)
        prow, pvec = rows[pivot], rhs[pivot]
        inv = 1 / prow[var]
        for key in prow:
            prow[key] *= inv
        for i in range(len(pvec)):
            pvec[i] *= inv
        for eq in list(column[var]):
            if eq == pivot or eq not in remaining:
                continue
            row = rows[eq]
            f = row.get(var)
            if not f:
                continue
            for key, val in prow.items():
                new = row.get(key, 0) - f * val
                if new:
                    row[key] = new
                    column.setdefault(key, set()).add(eq)
                else:
                    row.pop(key, None)
            vec = rhs[eq]
            for i, val in enumerate(pvec):
                if val:
                    vec[i] -= f * val
        order.append((var, pivot))
    solution: dict[str, list] = {}
    for var, pivot in reversed(order):
        vec = list(rhs[pivot])
        for key, val in rows[pivot].items():
            if key == var:
                continue
            other = solution[key]
            for i, x in enumerate(other):
                if x:
                    vec[i] -= val * x
        solution[var] = vec
    return solution


@lru_cache(maxsize=64)
def shared_reducer(params: ModelParams, strategy: str = "leftmost") -> Reducer:
    """A memoizing reducer reused across calls with the same parameters."""
    return Reducer(params, strategy)


def reduce_word(word: str, params: ModelParams, strategy: str = "leftmost") -> NormalForm:
    return shared_reducer(params, strategy).reduce_word(word)


def expand_skew_binomial(n: int, params: ModelParams, reducer: Reducer | None = None) -> NormalForm:
    """Normal form of (pA + (1-p)B)^n by repeated right multiplication."""
    reducer = reducer or shared_reducer(params)
    p = params.p
    coeffs = [Fraction(1)]
    for deg in range(1, n + 1):
        nxt = [Fraction(0)] * (deg + 1)
        for k, c in enumerate(coeffs):
            if not c:
                continue
            nxt[k] += (1 - p) * c
            word = "A" * k + "B" * (deg - 1 - k) + "A"
            for j, x in enumerate(reducer.reduce_word(word).coeffs):
                if x:
                    nxt[j] += p * c * x
        coeffs = nxt
    return NormalForm(n, tuple(coeffs))


def binomial_check(n_max: int, params: ModelParams) -> dict:
    """Compare the normal form of (pA + (1-p)B)^n with phi(.|n) for every n <= n_max."""
    _require_exact(params)
    reducer = shared_reducer(params)
    mismatches = []
    for n in range(n_max + 1):
        form = expand_skew_binomial(n, params, reducer)
        for m in range(n + 1):
            if form[m] != phi(m, n, params):
                mismatches.append((n, m))
    return {"n_max": n_max, "params": params.describe(), "mismatches": mismatches, "pass": not mismatches}


# --- coefficients a_k^l of B^(l-1) A = sum_k a_k^l A^(l-k) B^k -------------------


def coeff_a_rewrite(k: int, l: int, params: ModelParams, reducer: Reducer | None = None):
    if k < 0 or k > l:
        return Fraction(0)
    reducer = reducer or shared_reducer(params)
    return reducer.reduce_word("B" * (l - 1) + "A")[l - k]


@lru_cache(maxsize=None)
def a_table_recursion(l_max: int, params: ModelParams) -> dict:
    """All a_k^l with l <= l_max from the triangular recursion."""
    _require_exact(params)
    alpha, beta, gamma = params.alpha, params.beta, params.gamma
    a = {(0, 1): Fraction(1), (1, 1): Fraction(0)}

    def get(j, l):
        return a.get((j, l), Fraction(0)) if 0 <= j <= l else Fraction(0)

    for l in range(1, l_max):
        den = 1 - alpha * get(l, l)
        if den == 0:
            raise NormalOrderingError(f"1 - alpha a_{l}^{l} = 0")
        for j in range(l + 2):
            acc = Fraction(0)
            for k in range(max(j - 1, 0), l):
                acc += get(k, l) * get(j, k + 1)
            acc = alpha * acc + beta * get(j - 1, l)
            if j == l + 1:
                acc += gamma
            a[(j, l + 1)] = acc / den
    return a


def coeff_a_recursion(k: int, l: int, params: ModelParams):
    if k < 0 or k > l:
        return Fraction(0)
    return a_table_recursion(l, params)[(k, l)]


def coeff_a_closed(k: int, l: int, params: ModelParams):
    if k < 0 or k > l:
        return 0 * params.q
    q, nu = params.q, params.nu
    if k == l:
        return (1 - q ** (l - 1)) / (1 - nu * q ** (l - 1))
    head = (1 - nu) * nu ** (l - k - 1) * q_pochhammer(q, q, l - 1) / q_pochhammer(nu, q, l)
    if k == 0:
        # the general expression has q^(k-1) (nu;q)_(k-1) = 1/(q - nu) here
        return head
    return head * (q - nu) * q ** (k - 1) * q_pochhammer(nu, q, k - 1) / q_pochhammer(q, q, k)


def coeff_a(k: int, l: int, params: ModelParams, method: str = "closed"):
    """a_k^l by ``method`` in {"rewrite", "recursion", "closed"}.

    The recursion route falls back to the closed form when it hits a
    vanishing denominator.
    """
    if method == "rewrite":
        return coeff_a_rewrite(k, l, params)
    if method == "recursion":
        try:
            return coeff_a_recursion(k, l, params)
        except NormalOrderingError:
            return coeff_a_closed(k, l, params)
    if method == "closed":
        return coeff_a_closed(k, l, params)
    raise ValueError(f"unknown method {method!r}")


# --- partial sums s_{n,k} --------------------------------------------------------


def partial_sum_s_direct(n: int, k: int, params: ModelParams):
    q, mu, nu = params.q, params.mu, params.nu
    total = 0 * q
    for m in range(k + 1):
        total += weight_v(m, params) * q_pochhammer(mu, q, n - m - 1) / (nu**m * q_pochhammer(nu, q, n - m))
    return total


def partial_sum_s_closed(n: int, k: int, params: ModelParams):
    q, mu, nu = params.q, params.mu, params.nu
    if nu == 0 or mu == 0 or mu == nu:
        raise ValueError("closed form of s_{n,k} needs nu != 0, mu != 0, mu != nu")
    return (
        1 / (1 - nu * q ** (n - 1)) * mu / (mu - nu) * (mu / nu) ** k
        * q_pochhammer(mu, q, n - k - 1) * q_pochhammer(nu / mu, q, k + 1)
        / (q_pochhammer(q, q, k) * q_pochhammer(nu, q, n - k - 1))
    )


def partial_sum_s(n: int, k: int, params: ModelParams, method: str = "closed"):
    if not 0 <= k < n:
        raise ValueError("need 0 <= k < n")
    if method == "direct":
        return partial_sum_s_direct(n, k, params)
    return partial_sum_s_closed(n, k, params)


# --- hopping probabilities from the expansion recursion ---------------------------


@lru_cache(maxsize=None)
def _phi_rec_row(n: int, params: ModelParams) -> tuple:
    p = params.p
    if n == 0:
        return (Fraction(1),)
    prev = _phi_rec_row(n - 1, params)
    a = a_table_recursion(n, params)
    row = []
    for l in range(n):
        acc = sum((prev[m] * a[(n - l, n - m)] for m in range(l + 1)), Fraction(0))
        row.append(p * acc + (1 - p) * prev[l])
    row.append(p * sum((prev[m] * a[(0, n - m)] for m in range(n)), Fraction(0)))
    return tuple(row)


def phi_recursive(l: int, n: int, params: ModelParams):
    """phi(l|n) built up from phi(.|n-1) and the rewrite coefficients."""
    _require_exact(params)
    if l < 0 or l > n:
        return Fraction(0)
    return _phi_rec_row(n, params)[l]


def w_over_f_product(n: int, params: ModelParams):
    """prod_{k=1}^n (p a_k^k + 1 - p), which should equal (mu;q)_n/(nu;q)_n."""
    p = params.p
    result = 1 + 0 * p
    for k in range(1, n + 1):
        result *= p * coeff_a_closed(k, k, params) + 1 - p
    return result
