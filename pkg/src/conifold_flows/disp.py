"""Dispersionless two-field flows on a periodic spatial grid.

The fields u(x), v(x) live on x in [0, L) and evolve under a hierarchy of
commuting flows whose right sides are zeta-coefficients of closed-form
generating functions.  With E = e^v (or e^{-v} for the second family),
F = e^{-u} and S = sqrt((1 + zeta E)^2 - 4 zeta E F), the generating
functions are

    G_v = log((1 - zeta E + S)/2),     G_u = log((1 + zeta E + S)/2)

and the j-th flow right side is +/- i d/dx of j times the zeta^j
coefficient.  The same data packages into Hamiltonian form: the density
generating function is

    h(zeta; u, v) = -i atanh((1 + zeta E)/S)

with closed-form gradients dh/du = -i(1+zeta E)/(2S) and
dh/dv = +i(1-zeta E)/(2S); the second family mirrors these under
v -> -v.  All nonlinear operations act on total field values sampled on
one period; linear-in-x parts are carried as explicit mean slopes (with a
commensurability guard so exponentials stay periodic), and the spatial
derivative is pseudo-spectral on the periodic part.
"""
from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (DomainError, GradientCatastropheError,
                     TruncationOrderError)
from .reporting import fmt_float, worker_count, write_csv, write_json
from .specfun import polylog

__all__ = [
    "GridFunction",
    "DispersionlessFields",
    "PotentialField",
    "FrobeniusData",
    "ZetaExpansion",
    "flow_generating_series",
    "flow_coefficient",
    "flow_rhs",
    "recombined_flow",
    "hamiltonian_density",
    "hamiltonian_gradients",
    "delta_flow",
    "check_hamiltonian_form",
    "check_density_constraint",
    "evolve_dispersionless",
    "check_xdif",
    "check_principal_identification",
    "u_from_r",
    "export_fields",
]

_BRANCH_TOL = 1e-12
_COMMENSURATE_TOL = 1e-9


# ---------------------------------------------------------------------------
# spatial grid


def _wavenumbers(n: int, length: float) -> np.ndarray:
    return 2j * math.pi * np.fft.fftfreq(n, d=1.0 / n) / length


def spectral_derivative(values: np.ndarray, length: float) -> np.ndarray:
    vals = np.asarray(values, dtype=complex)
    return np.fft.ifft(_wavenumbers(vals.size, length) * np.fft.fft(vals))


def spectral_antiderivative(values: np.ndarray, length: float) -> np.ndarray:
    """Periodic antiderivative of a zero-mean periodic function (the mean
    mode is pinned to zero)."""
    vals = np.asarray(values, dtype=complex)
    hat = np.fft.fft(vals)
    ik = _wavenumbers(vals.size, length)
    out = np.zeros_like(hat)
    out[1:] = hat[1:] / ik[1:]
    return np.fft.ifft(out)


class GridFunction:
    """Complex function on a periodic grid: value(x) = mean_slope*x + p(x)
    with p periodic, represented by samples of p at x_k = k L / N."""

    __slots__ = ("length", "values", "mean_slope")

    def __init__(self, length: float, values, mean_slope: complex = 0.0):
        self.length = float(length)
        self.values = np.asarray(values, dtype=complex)
        self.mean_slope = complex(mean_slope)
        if self.length <= 0:
            raise DomainError("grid length must be positive")
        if self.values.ndim != 1 or self.values.size < 4:
            raise DomainError("need a 1-d grid with at least four points")

    @classmethod
    def constant(cls, length: float, n: int, value: complex = 0.0):
        return cls(length, np.full(n, complex(value)))

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.size) * (self.length / self.size)

    def total_values(self) -> np.ndarray:
        if self.mean_slope == 0:
            return self.values.copy()
        return self.values + self.mean_slope * self.nodes

    def derivative(self) -> "GridFunction":
        return GridFunction(self.length,
                            spectral_derivative(self.values, self.length)
                            + self.mean_slope)

    def second_derivative(self) -> "GridFunction":
        d1 = spectral_derivative(self.values, self.length)
        return GridFunction(self.length, spectral_derivative(d1, self.length))

    def mean(self) -> complex:
        return complex(np.mean(self.values))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) + abs(self.mean_slope)

    def copy(self) -> "GridFunction":
        return GridFunction(self.length, self.values.copy(), self.mean_slope)

    def _compatible(self, other: "GridFunction"):
        if (self.length != other.length) or (self.size != other.size):
            raise DomainError("grid mismatch")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._compatible(other)
            return GridFunction(self.length, self.values + other.values,
                                self.mean_slope + other.mean_slope)
        return GridFunction(self.length, self.values + complex(other),
                            self.mean_slope)

    __radd__ = __add__

    def __sub__(self, other):
        return self.__add__(other * (-1) if isinstance(other, GridFunction)
                            else -complex(other))

    def __mul__(self, scalar):
        c = complex(scalar)
        return GridFunction(self.length, self.values * c, self.mean_slope * c)

    __rmul__ = __mul__


def _check_commensurate(gf: GridFunction, label: str):
    """exp(field) is periodic only when slope*L is a multiple of 2*pi*i."""
    if gf.mean_slope == 0:
        return
    w = gf.mean_slope * gf.length
    k = round(w.imag / (2.0 * math.pi))
    if abs(w - 2j * math.pi * k) > _COMMENSURATE_TOL:
        raise DomainError(
            f"{label} slope is incommensurate: slope*L = {w} is not a "
            "multiple of 2*pi*i, so exponentials of the field are not periodic")


@dataclass
class DispersionlessFields:
    """The two hydrodynamic fields, with optional auxiliary potentials
    (varpi with u = -varpi'', s with v = s', r with u = -log(1-e^{2r}))."""

    u: GridFunction
    v: GridFunction
    varpi: "PotentialField | None" = None
    s: GridFunction | None = None
    r: GridFunction | None = None

    def __post_init__(self):
        self.u._compatible(self.v)
        _check_commensurate(self.u, "u")
        _check_commensurate(self.v, "v")
        f = np.exp(-self.u.total_values())
        if not np.all(np.isfinite(f)):
            raise DomainError("exp(-u) overflows on the grid")
        if np.any(np.abs(1.0 - f) < _BRANCH_TOL):
            raise DomainError("branch guard: exp(-u) = 1 on the grid")

    @property
    def grid(self) -> GridFunction:
        return self.u

    @classmethod
    def from_auxiliary(cls, s: GridFunction, r: GridFunction,
                       varpi: "PotentialField | None" = None):
        v = s.derivative()
        u = u_from_r(r)
        return cls(u, v, varpi=varpi, s=s, r=r)

    def copy(self) -> "DispersionlessFields":
        return DispersionlessFields(self.u.copy(), self.v.copy(),
                                    varpi=self.varpi.copy() if self.varpi else None,
                                    s=self.s.copy() if self.s else None,
                                    r=self.r.copy() if self.r else None)


def u_from_r(r: GridFunction) -> GridFunction:
    """u = -log(1 - e^{2r}), principal branch, elementwise on totals."""
    vals = np.exp(2.0 * r.total_values())
    if np.any(np.abs(1.0 - vals) < _BRANCH_TOL):
        raise DomainError("branch guard: exp(2r) = 1 on the grid")
    return GridFunction(r.length, -np.log(1.0 - vals))


@dataclass
class PotentialField:
    """Potential varpi(x) = quad*x^2 + slope*x + p(x) with p periodic;
    u = -varpi'' is then the periodic function -2*quad - p''."""

    length: float
    periodic: np.ndarray
    slope: complex = 0.0
    quad: complex = 0.0

    def __post_init__(self):
        self.periodic = np.asarray(self.periodic, dtype=complex)

    def u_field(self) -> GridFunction:
        p2 = spectral_derivative(
            spectral_derivative(self.periodic, self.length), self.length)
        return GridFunction(self.length, -2.0 * self.quad - p2)

    def copy(self) -> "PotentialField":
        return PotentialField(self.length, self.periodic.copy(),
                              self.slope, self.quad)


# ---------------------------------------------------------------------------
# truncated expansions in the spectral parameter


class ZetaExpansion:
    """Truncated power series in the spectral parameter with grid-valued
    (numpy array) or scalar coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = [np.asarray(c, dtype=complex) for c in coeffs]
        if not self.coeffs:
            raise DomainError("expansion needs at least the constant term")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def from_polynomial(cls, coeffs, order: int):
        base = [np.asarray(c, dtype=complex) for c in coeffs]
        shape = np.broadcast_shapes(*(c.shape for c in base))
        out = [np.broadcast_to(c, shape).astype(complex) for c in base]
        while len(out) <= order:
            out.append(np.zeros(shape, dtype=complex))
        return cls(out[:order + 1])

    def coefficient(self, j: int) -> np.ndarray:
        if j > self.order:
            raise TruncationOrderError(
                f"coefficient {j} beyond truncation order {self.order}")
        return self.coeffs[j]

    def __add__(self, other):
        if isinstance(other, ZetaExpansion):
            n = min(self.order, other.order)
            return ZetaExpansion([self.coeffs[k] + other.coeffs[k]
                                  for k in range(n + 1)])
        out = [c.copy() for c in self.coeffs]
        out[0] = out[0] + other
        return ZetaExpansion(out)

    def __mul__(self, other):
        if isinstance(other, ZetaExpansion):
            n = min(self.order, other.order)
            out = []
            for k in range(n + 1):
                acc = self.coeffs[0] * other.coeffs[k]
                for i in range(1, k + 1):
                    acc = acc + self.coeffs[i] * other.coeffs[k - i]
                out.append(acc)
            return ZetaExpansion(out)
        return ZetaExpansion([c * other for c in self.coeffs])

    __rmul__ = __mul__

    def sqrt(self) -> "ZetaExpansion":
        """Branch-free square root about the constant term (which must be
        bounded away from zero; here it is identically 1)."""
        c0 = self.coeffs[0]
        if np.any(np.abs(c0) < _BRANCH_TOL):
            raise DomainError("square-root expansion hits a branch point")
        s0 = np.sqrt(c0)
        out = [s0]
        for k in range(1, self.order + 1):
            acc = self.coeffs[k].astype(complex).copy()
            for i in range(1, k):
                acc = acc - out[i] * out[k - i]
            out.append(acc / (2.0 * s0))
        return ZetaExpansion(out)

    def log(self) -> "ZetaExpansion":
        c0 = self.coeffs[0]
        if np.any(np.abs(c0) < _BRANCH_TOL):
            raise DomainError("log expansion hits a branch point")
        out = [np.log(c0)]
        for k in range(1, self.order + 1):
            acc = self.coeffs[k].astype(complex).copy()
            for i in range(1, k):
                acc = acc - (float(k - i) / k) * self.coeffs[i] * out[k - i]
            out.append(acc / c0)
        return ZetaExpansion(out)

    def eval(self, zeta0: complex):
        acc = self.coeffs[self.order].astype(complex)
        for k in range(self.order - 1, -1, -1):
            acc = acc * zeta0 + self.coeffs[k]
        return acc


# ---------------------------------------------------------------------------
# flows


def _exponentials(fields: DispersionlessFields, direction: str):
    if direction not in ("z", "zt"):
        raise DomainError("direction must be 'z' or 'zt'")
    v_tot = fields.v.total_values()
    e = np.exp(v_tot if direction == "z" else -v_tot)
    f = np.exp(-fields.u.total_values())
    if not (np.all(np.isfinite(e)) and np.all(np.isfinite(f))):
        raise DomainError("field exponentials overflow on the grid")
    if np.any(np.abs(1.0 - f) < _BRANCH_TOL):
        raise DomainError("branch guard: exp(-u) = 1 on the grid")
    return e, f


def flow_generating_series(fields: DispersionlessFields, direction: str,
                           order: int):
    """Expansions of the two log generating functions up to the given
    order; returns (G_u, G_v) as ZetaExpansions with grid coefficients."""
    if order < 1:
        raise TruncationOrderError("expansion order must be at least 1")
    e, f = _exponentials(fields, direction)
    one = np.ones_like(e)
    s2 = ZetaExpansion.from_polynomial([one, 2.0 * e - 4.0 * e * f, e * e],
                                       order)
    s = s2.sqrt()
    half = 0.5
    g_u = ((ZetaExpansion.from_polynomial([one, e], order) + s) * half).log()
    g_v = ((ZetaExpansion.from_polynomial([one, -e], order) + s) * half).log()
    return g_u, g_v


def flow_coefficient(fields: DispersionlessFields, j: int, direction: str):
    """zeta^j coefficients (c_u, c_v) of the log generating functions,
    before the j-scaling, the i factor and the x-derivative."""
    g_u, g_v = flow_generating_series(fields, direction, j)
    return g_u.coefficient(j), g_v.coefficient(j)


def flow_rhs(fields: DispersionlessFields, j: int, direction: str,
             order: int | None = None):
    """Right side (du/dz_j, dv/dz_j) of the j-th flow, as GridFunctions.

    du = s_dir * i * d/dx (j * [zeta^j] G_u),  dv = +i * d/dx (j * [zeta^j] G_v)
    with s_dir = +1 for the first family (z) and -1 for the second (zt).
    """
    if order is None:
        order = j
    if order < j:
        raise TruncationOrderError(f"truncation order {order} below flow index {j}")
    if j < 1:
        raise DomainError("flow index must be a positive integer")
    g_u, g_v = flow_generating_series(fields, direction, order)
    length = fields.u.length
    sign_u = 1.0 if direction == "z" else -1.0
    du = sign_u * 1j * spectral_derivative(j * g_u.coefficient(j), length)
    dv = 1j * spectral_derivative(j * g_v.coefficient(j), length)
    return GridFunction(length, du), GridFunction(length, dv)


def recombined_flow(zeta0: complex, fields: DispersionlessFields,
                    direction: str, jmax: int = 10):
    """Sum_{j=1..jmax} zeta0^j (du_j, dv_j): the grouped flow that the
    Hamiltonian form generates in one stroke."""
    g_u, g_v = flow_generating_series(fields, direction, jmax)
    length = fields.u.length
    sign_u = 1.0 if direction == "z" else -1.0
    acc_u = np.zeros_like(g_u.coefficient(0))
    acc_v = np.zeros_like(acc_u)
    z = complex(zeta0)
    for j in range(1, jmax + 1):
        acc_u = acc_u + (z ** j) * j * g_u.coefficient(j)
        acc_v = acc_v + (z ** j) * j * g_v.coefficient(j)
    du = sign_u * 1j * spectral_derivative(acc_u, length)
    dv = 1j * spectral_derivative(acc_v, length)
    return GridFunction(length, du), GridFunction(length, dv)


# ---------------------------------------------------------------------------
# Hamiltonian densities


def _density_pointwise(zeta0: complex, u, v, which: str):
    """Scalar/array evaluation of the density generating function."""
    if which not in ("h", "ht"):
        raise DomainError("which must be 'h' or 'ht'")
    v = np.asarray(v, dtype=complex)
    e = np.exp(v if which == "h" else -v)
    f = np.exp(-np.asarray(u, dtype=complex))
    a = 1.0 + zeta0 * e
    s2 = a * a - 4.0 * zeta0 * e * f
    if np.any(np.abs(s2) < _BRANCH_TOL):
        raise DomainError("density generating function: branch point on the grid")
    s = np.sqrt(s2)
    y = a / s
    if np.any(np.abs(1.0 - y * y) < _BRANCH_TOL):
        raise DomainError("density generating function: atanh argument at +/-1")
    return -1j * 0.5 * np.log((1.0 + y) / (1.0 - y))


def hamiltonian_density(zeta0: complex, fields: DispersionlessFields,
                        which: str = "h") -> GridFunction:
    """Generating function -i atanh((1+zeta e^{+/-v})/S) of conserved
    densities, evaluated at a fixed numeric zeta."""
    vals = _density_pointwise(complex(zeta0), fields.u.total_values(),
                              fields.v.total_values(), which)
    return GridFunction(fields.u.length, vals)


def hamiltonian_gradients(zeta0: complex, u, v, which: str = "h"):
    """Closed-form (dh/du, dh/dv) for the density generating function."""
    if which not in ("h", "ht"):
        raise DomainError("which must be 'h' or 'ht'")
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    e = np.exp(v if which == "h" else -v)
    f = np.exp(-u)
    a = 1.0 + zeta0 * e
    s = np.sqrt(a * a - 4.0 * zeta0 * e * f)
    dh_du = -1j * a / (2.0 * s)
    dh_dv = 1j * (1.0 - zeta0 * e) / (2.0 * s)
    if which == "ht":
        dh_dv = -dh_dv
    return dh_du, dh_dv


def delta_flow(zeta0: complex, fields: DispersionlessFields,
               direction: str):
    """Closed-form grouped flow (Delta u, Delta v) at numeric zeta:
    Delta v = -i d/dx[(1+zeta E)/(2S)], Delta u = +/- i d/dx[(1-zeta E)/(2S)]
    (plus for the first family, minus for the second)."""
    if direction not in ("z", "zt"):
        raise DomainError("direction must be 'z' or 'zt'")
    e, f = _exponentials(fields, direction)
    a = 1.0 + zeta0 * e
    s = np.sqrt(a * a - 4.0 * zeta0 * e * f)
    length = fields.u.length
    dv = -1j * spectral_derivative(a / (2.0 * s), length)
    sign = 1.0 if direction == "z" else -1.0
    du = sign * 1j * spectral_derivative((1.0 - zeta0 * e) / (2.0 * s), length)
    return GridFunction(length, du), GridFunction(length, dv)


def _fd_gradients(zeta0, u, v, which, step):
    """Centered finite-difference gradients of the density in (u, v) with
    one Richardson step (h and h/2)."""
    def grad(h):
        gu = (_density_pointwise(zeta0, u + h, v, which)
              - _density_pointwise(zeta0, u - h, v, which)) / (2.0 * h)
        gv = (_density_pointwise(zeta0, u, v + h, which)
              - _density_pointwise(zeta0, u, v - h, which)) / (2.0 * h)
        return gu, gv
    gu1, gv1 = grad(step)
    gu2, gv2 = grad(step / 2.0)
    return (4.0 * gu2 - gu1) / 3.0, (4.0 * gv2 - gv1) / 3.0


RECOMBINATION_SIGNS = {"u": -1, "v": +1}


def check_hamiltonian_form(zeta0: complex, fields: DispersionlessFields,
                           direction: str = "z", jmax: int = 10,
                           fd_step: float = 1e-4) -> dict:
    """Consistency of the three routes to the grouped flow at numeric zeta.

    1. density gradients by centered differences vs the closed forms;
    2. d/dx of the finite-difference gradients vs the closed grouped flow
       (the acceptance check between the density generating function and
       the first-order form of the flow equations);
    3. the zeta-recombined series flow vs the closed grouped flow, which
       agrees per-row only up to the recorded sign matrix (u row: -1,
       v row: +1) relative to the printed flow signs;
    4. the same comparison routed through the Poisson bracket
       {u(x), v(y)} = delta'(x - y), i.e. du/dt = d/dx(dh/dv),
       dv/dt = d/dx(dh/du), with plain centered differences.
    """
    zeta0 = complex(zeta0)
    which = "h" if direction == "z" else "ht"
    u = fields.u.total_values()
    v = fields.v.total_values()
    length = fields.u.length

    gu_fd, gv_fd = _fd_gradients(zeta0, u, v, which, fd_step)
    gu_cl, gv_cl = hamiltonian_gradients(zeta0, u, v, which)

    def rel(a, b):
        scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-300)
        return float(np.max(np.abs(a - b))) / scale

    du_cl, dv_cl = delta_flow(zeta0, fields, direction)
    dv_from_h = spectral_derivative(gu_fd, length)
    du_from_h = spectral_derivative(gv_fd, length)
    # the closed Delta u carries the direction sign; so does d/dx(dh/dv)
    # through the which-dependent dh/dv, hence these compare directly
    report = {
        "zeta": zeta0,
        "direction": direction,
        "gradient_residual_u": rel(gu_fd, gu_cl),
        "gradient_residual_v": rel(gv_fd, gv_cl),
        "hamiltonian_vs_delta_v": rel(dv_from_h, dv_cl.values),
        "hamiltonian_vs_delta_u": rel(du_from_h, du_cl.values),
        "recombination_signs": dict(RECOMBINATION_SIGNS),
    }

    du_rec, dv_rec = recombined_flow(zeta0, fields, direction, jmax)
    report["recombination_residual_u"] = rel(
        du_rec.values, RECOMBINATION_SIGNS["u"] * du_cl.values)
    report["recombination_residual_v"] = rel(
        dv_rec.values, RECOMBINATION_SIGNS["v"] * dv_cl.values)

    def grad_plain(h):
        gu = (_density_pointwise(zeta0, u + h, v, which)
              - _density_pointwise(zeta0, u - h, v, which)) / (2.0 * h)
        gv = (_density_pointwise(zeta0, u, v + h, which)
              - _density_pointwise(zeta0, u, v - h, which)) / (2.0 * h)
        return gu, gv
    gu_p, gv_p = grad_plain(fd_step / 2.0)
    report["poisson_residual_u"] = rel(spectral_derivative(gv_p, length),
                                       du_cl.values)
    report["poisson_residual_v"] = rel(spectral_derivative(gu_p, length),
                                       dv_cl.values)
    report["max_residual"] = max(
        report[k] for k in ("gradient_residual_u", "gradient_residual_v",
                            "hamiltonian_vs_delta_u", "hamiltonian_vs_delta_v",
                            "recombination_residual_u",
                            "recombination_residual_v",
                            "poisson_residual_u", "poisson_residual_v"))
    return report


# ---------------------------------------------------------------------------
# Frobenius layer


@dataclass(frozen=True)
class FrobeniusData:
    """Potential Phi = u v^2 / 2 + f(u) with f'''(u) = 1/(e^u - 1),
    f(u) = -Li_3(e^{-u}); flat metric with unit antidiagonal."""

    @staticmethod
    def metric() -> np.ndarray:
        return np.array([[0.0, 1.0], [1.0, 0.0]])

    @staticmethod
    def f(u):
        return -polylog(3, cmath.exp(-complex(u)))

    @staticmethod
    def fppp(u):
        """Third derivative 1/(e^u - 1)."""
        return 1.0 / (cmath.exp(complex(u)) - 1.0)

    @staticmethod
    def fppp_polylog(u):
        """The same quantity as Li_0(e^{-u}), for the identity check."""
        return polylog(0, cmath.exp(-complex(u)))

    @classmethod
    def potential(cls, u, v):
        return complex(u) * complex(v) ** 2 / 2.0 + cls.f(u)

    @classmethod
    def topological_tau(cls, u, v):
        return cmath.exp(cls.potential(u, v))


def _second_derivative_fd(fn, center, step):
    """5-point second derivative with one Richardson refinement."""
    def d2(h):
        return (-fn(center + 2 * h) + 16 * fn(center + h) - 30 * fn(center)
                + 16 * fn(center - h) - fn(center - 2 * h)) / (12.0 * h * h)
    coarse = d2(step)
    fine = d2(step / 2.0)
    return (16.0 * fine - coarse) / 15.0


def check_density_constraint(which: str = "h", samples: int = 20,
                             zeta0: complex = 0.15 + 0.1j, seed: int = 7,
                             fd_step: float = 5e-3) -> dict:
    """The density generating functions satisfy the hydrodynamic constraint
    d2g/du2 = c(u) d2g/dv2 with the elementary prefactor c(u) = s/(e^u - 1)
    for a definite sign s that is itself fixed by substituting the density
    into the constraint.  Direct evaluation gives s = -1 for both families
    (equivalently c(u) = 1/(1 - e^u)); residuals for both candidate signs
    are reported alongside the empirically selected one, mirroring the
    both-sign reporting of the small-phase-space identification check.
    Verified by finite differences at random sample points with
    Re u in [0.5, 2]."""
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(samples):
        u0 = complex(rng.uniform(0.5, 2.0), rng.uniform(-0.3, 0.3))
        v0 = complex(rng.uniform(-0.8, 0.8), rng.uniform(-0.5, 0.5))
        pts.append((u0, v0))

    def one(point):
        u0, v0 = point
        g_uu = _second_derivative_fd(
            lambda du: _density_pointwise(zeta0, u0 + du, v0, which),
            0.0, fd_step)
        g_vv = _second_derivative_fd(
            lambda dv: _density_pointwise(zeta0, u0, v0 + dv, which),
            0.0, fd_step)
        factor = 1.0 / (cmath.exp(u0) - 1.0)
        scale = max(abs(g_uu), abs(factor * g_vv), 1e-300)
        return (abs(g_uu - factor * g_vv) / scale,
                abs(g_uu + factor * g_vv) / scale)

    workers = min(worker_count(), samples)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(one, pts))
    else:
        pairs = [one(p) for p in pts]

    plus = [p for p, _ in pairs]
    minus = [m for _, m in pairs]
    signs = {-1 if m < p else +1 for p, m in pairs}
    sign = signs.pop() if len(signs) == 1 else 0

    identity_err = max(abs(FrobeniusData.fppp(u0)
                           - FrobeniusData.fppp_polylog(u0))
                       for u0, _ in pts)
    return {
        "which": which,
        "zeta": complex(zeta0),
        "samples": samples,
        "constraint_sign": sign,
        "max_residual": max(min(p, m) for p, m in pairs),
        "residual_factor_plus": max(plus),
        "residual_factor_minus": max(minus),
        "residuals": [min(p, m) for p, m in pairs],
        "fppp_identity_error": identity_err,
    }


# ---------------------------------------------------------------------------
# time evolution


def _flow_arrays(u_vals, v_vals, length, j, direction):
    f = DispersionlessFields(GridFunction(length, u_vals),
                             GridFunction(length, v_vals))
    du, dv = flow_rhs(f, j, direction)
    return du.values, dv.values


def evolve_dispersionless(fields: DispersionlessFields, j: int,
                          direction: str, T: float, dt: float = 1e-3,
                          catastrophe_factor: float = 10.0,
                          co_evolve_potential: bool = False):
    """Fixed-step RK4 integration of the j-th flow up to time T.

    Mean slopes of u and v are exactly conserved by the flow (the right
    sides are x-derivatives of periodic functions) and are carried through
    unchanged.  A growth of max|du/dx| beyond catastrophe_factor times its
    initial value aborts with a GradientCatastropheError carrying the
    time reached.  With co_evolve_potential the auxiliary potential varpi
    (u = -varpi'') is advanced alongside via the antiderivative of the
    u-flow right side; only the first flow of the first family supports
    this.
    """
    if dt <= 0 or T < 0:
        raise DomainError("need dt > 0 and T >= 0")
    if co_evolve_potential and (j != 1 or direction != "z"):
        raise DomainError("potential co-evolution is defined for j=1, direction z")
    if co_evolve_potential and fields.varpi is None:
        raise DomainError("no potential attached to the fields")
    if co_evolve_potential and fields.u.mean_slope != 0:
        raise DomainError("potential co-evolution needs a periodic u "
                          "(linear parts of u would require a cubic potential)")

    length = fields.u.length
    su, sv = fields.u.mean_slope, fields.v.mean_slope
    _check_commensurate(fields.u, "u")
    _check_commensurate(fields.v, "v")
    xs = fields.u.nodes

    def rhs(state):
        u_p, v_p, pot_p, pot_slope = state
        du, dv = _flow_arrays(u_p + su * xs, v_p + sv * xs, length, j, direction)
        if co_evolve_potential:
            # d(varpi)/dt is the x-antiderivative of -(du/dt); its mean
            # part advances the slope, the rest the periodic part
            g = 1j * np.exp(v_p + sv * xs) * (1.0 - np.exp(-(u_p + su * xs)))
            g = -g  # antiderivative integrand fixed so that -d2/dx2 gives du
            mu = np.mean(g)
            dpot = spectral_antiderivative(g - mu, length)
            return du, dv, dpot, mu
        return du, dv, np.zeros(1), 0.0

    u_p = fields.u.values.copy()
    v_p = fields.v.values.copy()
    pot = fields.varpi.copy() if fields.varpi is not None else None
    pot_p = pot.periodic.copy() if pot is not None else np.zeros(1)
    pot_s = pot.slope if pot is not None else 0.0

    gradient0 = float(np.max(np.abs(spectral_derivative(u_p, length) + su)))
    steps = int(round(T / dt))
    t = 0.0
    for _ in range(steps):
        s0 = (u_p, v_p, pot_p, pot_s)
        k1 = rhs(s0)
        k2 = rhs(tuple(a + 0.5 * dt * b for a, b in zip(s0, k1)))
        k3 = rhs(tuple(a + 0.5 * dt * b for a, b in zip(s0, k2)))
        k4 = rhs(tuple(a + dt * b for a, b in zip(s0, k3)))
        u_p, v_p, pot_p, pot_s = tuple(
            a + (dt / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)
            for a, b1, b2, b3, b4 in zip(s0, k1, k2, k3, k4))
        t += dt
        gnow = float(np.max(np.abs(spectral_derivative(u_p, length) + su)))
        if not math.isfinite(gnow) or gnow > catastrophe_factor * max(gradient0, 1e-300):
            raise GradientCatastropheError(
                f"gradient growth {gnow:.3g} vs initial {gradient0:.3g}", time=t)

    out_pot = None
    if pot is not None:
        out_pot = PotentialField(length, pot_p, pot_s, pot.quad)
    return DispersionlessFields(GridFunction(length, u_p, su),
                                GridFunction(length, v_p, sv),
                                varpi=out_pot)


# ---------------------------------------------------------------------------
# x-difference relation and small-phase-space identification


def check_xdif(varpi_provider, r_lambda: GridFunction, lam_check: complex) -> dict:
    """Residual of log(1 - e^{2 r}) = (varpi(x+l) - 2 varpi(x) + varpi(x-l))/l^2
    where the shift is realized as exact argument shift of the closed-form
    provider."""
    lam = complex(lam_check)
    if lam == 0:
        raise DomainError("shift parameter must be nonzero")
    xs = r_lambda.nodes
    lhs = np.log(1.0 - np.exp(2.0 * r_lambda.total_values()))
    second = np.array([(varpi_provider(x + lam) - 2.0 * varpi_provider(x)
                        + varpi_provider(x - lam)) / (lam * lam) for x in xs])
    resid = np.abs(lhs - second)
    return {
        "lam_check": lam,
        "max_residual": float(np.max(resid)),
        "mean_residual": float(np.mean(resid)),
        "left": lhs,
        "right": second,
    }


def classical_varpi(t: complex, kappa: complex = 1.0):
    """Closed-form provider x -> 2*pi*i*t*x^2/(2*kappa^2), the quadratic
    classical part of the potential in the rescaled normalization."""
    t = complex(t)
    kappa = complex(kappa)
    if kappa == 0:
        raise DomainError("kappa must be nonzero")
    c = 2j * math.pi * t / (2.0 * kappa ** 2)
    return lambda x: c * x * x


def check_principal_identification(t: complex, x: float,
                                   kappa: complex = 1.0) -> dict:
    """Small-phase-space comparison of the rescaled potential against
    -u v^2/2 + Li_3(q) with u = -2*pi*i*t, v = 2*pi*i*x/kappa; both sign
    conventions of the cubic term are reported."""
    t = complex(t)
    if t.imag <= 0:
        raise DomainError("need Im t > 0")
    kappa = complex(kappa)
    if kappa == 0:
        raise DomainError("kappa must be nonzero")
    x = complex(x)
    q = cmath.exp(2j * math.pi * t)
    f0 = polylog(3, q)
    u0 = -2j * math.pi * t
    v0 = 2j * math.pi * x / kappa
    classical = (2.0 * math.pi) ** 3 * 1j * x * x * t / (2.0 * kappa ** 2)
    lhs = classical + f0
    rhs_minus = -u0 * v0 ** 2 / 2.0 + f0
    rhs_plus = u0 * v0 ** 2 / 2.0 + f0
    return {
        "t": t, "x": x, "kappa": kappa,
        "lhs": lhs,
        "rhs_minus_sign": rhs_minus,
        "rhs_plus_sign": rhs_plus,
        "difference_minus_sign": lhs - rhs_minus,
        "difference_plus_sign": lhs - rhs_plus,
        "match_sign": "plus" if abs(lhs - rhs_plus) <= abs(lhs - rhs_minus)
        else "minus",
    }


# ---------------------------------------------------------------------------
# export


def export_fields(fields: DispersionlessFields, csv_path: str,
                  meta_path: str, extra_meta: dict | None = None) -> None:
    """CSV of total field values per grid node plus JSON metadata."""
    xs = fields.u.nodes
    u_tot = fields.u.total_values()
    v_tot = fields.v.total_values()
    rows = []
    for k in range(xs.size):
        rows.append([fmt_float(float(xs[k])),
                     fmt_float(u_tot[k].real), fmt_float(u_tot[k].imag),
                     fmt_float(v_tot[k].real), fmt_float(v_tot[k].imag)])
    write_csv(csv_path, ["x", "re_u", "im_u", "re_v", "im_v"], rows)
    meta = {
        "schema": 1,
        "grid_points": fields.u.size,
        "length": fields.u.length,
        "u_mean_slope": fields.u.mean_slope,
        "v_mean_slope": fields.v.mean_slope,
    }
    if extra_meta:
        meta.update(extra_meta)
    write_json(meta_path, meta)
