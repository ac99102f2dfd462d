"""Exact Bernoulli data, generalized Bernoulli polynomials, integer polylogarithms.

Branch conventions used across the whole package are fixed here once:

* ``log`` always means the principal branch (imaginary part in (-pi, pi]),
  both for ``cmath.log`` and ``mpmath.log``.
* ``polylog(1, z) = -log(1 - z)`` with that principal branch.
* Residuals of multiplicative functional equations are compared modulo
  2*pi*i; the folding helper lives in :mod:`conifold_flows.barnes`.

Numerical kernels in this module are generic over ``complex`` and
``mpmath`` scalars so higher layers can run them at extended precision.
"""
from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import mpmath as mp

from .errors import DomainError, PoleError

__all__ = [
    "bernoulli_number",
    "BernoulliTable",
    "bernoulli_table",
    "gen_bernoulli",
    "polylog",
]

Scalar = Union[complex, "mp.mpc"]

# Bernoulli numbers, first-kind convention (B_1 = -1/2), exact rationals.
_BERNOULLI = [Fraction(1), Fraction(-1, 2)]
_BERNOULLI_LOCK = threading.Lock()


def bernoulli_number(k: int) -> Fraction:
    """Exact Bernoulli number B_k (B_1 = -1/2)."""
    if k < 0:
        raise DomainError(f"Bernoulli index must be non-negative, got {k}")
    if k >= len(_BERNOULLI):
        with _BERNOULLI_LOCK:
            while len(_BERNOULLI) <= k:
                m = len(_BERNOULLI)
                # sum_{j=0}^{m} C(m+1, j) B_j = 0  for m >= 1
                acc = Fraction(0)
                for j in range(m):
                    acc += math.comb(m + 1, j) * _BERNOULLI[j]
                _BERNOULLI.append(-acc / (m + 1))
    return _BERNOULLI[k]


@dataclass(frozen=True)
class BernoulliTable:
    """Immutable prefix B_0..B_max_index of the Bernoulli sequence."""

    max_index: int
    values: tuple[Fraction, ...]

    def __getitem__(self, k: int) -> Fraction:
        if not 0 <= k <= self.max_index:
            raise DomainError(f"index {k} outside table range 0..{self.max_index}")
        return self.values[k]


def bernoulli_table(max_index: int) -> BernoulliTable:
    """Build the exact table B_0..B_max_index."""
    if max_index < 0:
        raise DomainError("table length must be non-negative")
    bernoulli_number(max_index)
    return BernoulliTable(max_index, tuple(_BERNOULLI[: max_index + 1]))


# ---------------------------------------------------------------------------
# generalized Bernoulli polynomials
# ---------------------------------------------------------------------------

def _egf_coefficients(z, omegas, nmax: int, conv):
    """Taylor coefficients c_n = B_{r,n}(z|omega)/n! of the generating function

        x^r e^{z x} / prod_i (e^{omega_i x} - 1) = sum_n c_n x^n.

    ``conv`` lifts a Fraction into the coefficient ring of ``z``/``omegas``;
    the same code therefore serves the exact, complex and mpmath paths.
    """
    one = conv(Fraction(1))
    inv_fact = [one]
    for k in range(1, nmax + 1):
        inv_fact.append(inv_fact[-1] / k)

    prod = [one] + [one * 0] * nmax
    for w in omegas:
        # x/(e^{w x} - 1) = sum_k B_k w^{k-1} x^k / k!
        factor = []
        w_pow = one / w
        for k in range(nmax + 1):
            factor.append(conv(bernoulli_number(k)) * w_pow * inv_fact[k])
            w_pow = w_pow * w
        prod = _convolve(prod, factor, nmax)

    expz = []
    z_pow = one
    for k in range(nmax + 1):
        expz.append(z_pow * inv_fact[k])
        z_pow = z_pow * z
    return _convolve(prod, expz, nmax)


def _convolve(a, b, nmax: int):
    out = [a[0] * 0 for _ in range(nmax + 1)]
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j in range(nmax + 1 - i):
            out[i + j] += ai * b[j]
    return out


def gen_bernoulli(r: int, n: int, z, omega: Sequence):
    """Generalized Bernoulli polynomial B_{r,n}(z | omega_1..omega_r).

    Defined by x^r e^{z x} / prod_i (e^{omega_i x} - 1)
             = sum_{n>=0} B_{r,n}(z|omega) x^n / n!.

    Exact Fraction arithmetic when every input is rational, complex
    arithmetic otherwise.  Symmetric in the omega entries.
    """
    omega = tuple(omega)
    if r < 1:
        raise DomainError(f"rank must be >= 1, got {r}")
    if len(omega) != r:
        raise DomainError(f"expected {r} periods, got {len(omega)}")
    if n < 0:
        raise DomainError(f"order must be non-negative, got {n}")
    if any(w == 0 for w in omega):
        raise DomainError("periods must be non-zero")

    exact = isinstance(z, (int, Fraction)) and all(
        isinstance(w, (int, Fraction)) for w in omega
    )
    if exact:
        coeffs = _egf_coefficients(Fraction(z), [Fraction(w) for w in omega], n,
                                   lambda q: q)
        return coeffs[n] * math.factorial(n)
    coeffs = _egf_coefficients(complex(z), [complex(w) for w in omega], n,
                               lambda q: complex(float(q)))
    return coeffs[n] * math.factorial(n)


# ---------------------------------------------------------------------------
# integer-order polylogarithms
# ---------------------------------------------------------------------------

_STIRLING2: dict[tuple[int, int], int] = {(0, 0): 1}


def _stirling2(n: int, k: int) -> int:
    """Stirling numbers of the second kind, memoized."""
    if k < 0 or k > n:
        return 0
    if (n, k) not in _STIRLING2:
        _STIRLING2[(n, k)] = k * _stirling2(n - 1, k) + _stirling2(n - 1, k - 1)
    return _STIRLING2[(n, k)]


def _is_mp(x) -> bool:
    return isinstance(x, (mp.mpf, mp.mpc))


def _log(x):
    return mp.log(x) if _is_mp(x) else cmath.log(x)


def polylog(s: int, z, tol: float = 1e-15):
    """Polylogarithm Li_s(z) for integer order s <= 3.

    Closed forms for s <= 1 (rational in z for s <= 0, principal log for
    s = 1); direct power series with a proven tail bound for s in {2, 3},
    valid for |z| < 1.  Accepts ``complex`` or mpmath scalars and computes
    in the matching arithmetic.
    """
    if s > 3:
        raise DomainError(f"order {s} not supported (maximum 3)")
    if z == 0:
        return z * 0
    if s <= 1:
        if z == 1:
            raise PoleError(f"Li_{s} has a singularity at z = 1")
        if s == 1:
            return -_log(1 - z)
        # Li_{-n}(z) = sum_{k=0}^{n} k! S(n+1, k+1) (z/(1-z))^{k+1}
        n = -s
        w = z / (1 - z)
        acc = z * 0
        w_pow = w
        for k in range(n + 1):
            acc += math.factorial(k) * _stirling2(n + 1, k + 1) * w_pow
            w_pow = w_pow * w
        return acc
    # s in {2, 3}: series sum_{m>=1} z^m / m^s with tail bound
    # |z|^{N+1} / ((N+1)^s (1 - |z|)) <= tol.
    az = abs(z)
    if az >= 1:
        raise DomainError(f"series for Li_{s} needs |z| < 1, got |z| = {az}")
    nterms = 1
    while float(az) ** (nterms + 1) / ((nterms + 1) ** s * (1 - float(az))) > tol:
        nterms += 1
    acc = z * 0
    z_pow = z * 0 + 1
    for m in range(1, nterms + 1):
        z_pow = z_pow * z
        acc += z_pow / m**s
    return acc
