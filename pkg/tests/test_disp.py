"""Hydrodynamic-limit flows, Hamiltonian densities, and the Frobenius layer.

Oracles: a generic truncated-power-series engine expanded per grid point
(independent of the array-valued expansion code under test), printed
closed forms for the first flows, high-precision finite differences for the
density constraint, and exact quadratics for the shift relation.
"""
import cmath
import csv
import json
import math

import numpy as np
import pytest

from conifold_flows import DomainError, GradientCatastropheError, TruncationOrderError
from conifold_flows.disp import (
    DispersionlessFields,
    FrobeniusData,
    GridFunction,
    PotentialField,
    ZetaExpansion,
    check_density_constraint,
    check_hamiltonian_form,
    check_principal_identification,
    check_xdif,
    classical_varpi,
    delta_flow,
    evolve_dispersionless,
    export_fields,
    flow_generating_series,
    flow_rhs,
    hamiltonian_density,
    recombined_flow,
    spectral_derivative,
    u_from_r,
)
from conifold_flows.series import SeriesRing, series_log, series_sqrt

N = 32
L = 2.0


def _fields(seed=3, amp=0.25, base_u=1.0):
    rng = np.random.default_rng(seed)
    x = np.arange(N) * (L / N)
    tp = 2 * math.pi / L

    def profile():
        c = amp * (rng.random(4) - 0.5 + 1j * (rng.random(4) - 0.5))
        return (c[0] * np.cos(tp * x) + c[1] * np.sin(tp * x)
                + c[2] * np.cos(2 * tp * x) + c[3] * np.sin(2 * tp * x))

    return DispersionlessFields(GridFunction(L, base_u + profile()),
                                GridFunction(L, profile()))


def oracle_flow_rhs(fields, j, direction):
    """Per-point expansion through the generic series engine."""
    ring = SeriesRing(["zeta"], var_caps={"zeta": j}, total_cap=j)
    zeta = ring.variable("zeta")
    one = ring.constant(1)
    u = fields.u.total_values()
    v = fields.v.total_values()
    cu = np.zeros(N, complex)
    cv = np.zeros(N, complex)
    for i in range(N):
        e = cmath.exp(v[i] if direction == "z" else -v[i])
        f = cmath.exp(-u[i])
        s = series_sqrt((one + zeta * e) ** 2 - zeta * (4 * e * f))
        cu[i] = complex(series_log((one + zeta * e + s) * 0.5).coefficient(zeta=j))
        cv[i] = complex(series_log((one - zeta * e + s) * 0.5).coefficient(zeta=j))
    sign_u = 1.0 if direction == "z" else -1.0
    du = sign_u * 1j * spectral_derivative(j * cu, L)
    dv = 1j * spectral_derivative(j * cv, L)
    return du, dv


# ---------------------------------------------------------------------------
# grid calculus


def test_spectral_derivative_on_trig_polynomial():
    x = np.arange(N) * (L / N)
    tp = 2 * math.pi / L
    f = GridFunction(L, np.cos(tp * x) + 0.5 * np.sin(3 * tp * x))
    want = -tp * np.sin(tp * x) + 1.5 * tp * np.cos(3 * tp * x)
    assert np.max(np.abs(f.derivative().values - want)) < 1e-12
    want2 = -tp**2 * np.cos(tp * x) - 4.5 * tp**2 * np.sin(3 * tp * x)
    assert np.max(np.abs(f.second_derivative().values - want2)) < 1e-11


def test_grid_function_slope_bookkeeping():
    x = np.arange(N) * (L / N)
    slope = 2j * math.pi / L  # commensurate: slope * L = 2 pi i
    f = GridFunction(L, np.cos(2 * math.pi * x / L), mean_slope=slope)
    assert np.max(np.abs(f.total_values() - (f.values + slope * x))) < 1e-15
    d = f.derivative()
    assert d.mean_slope == 0
    assert abs(np.mean(d.values) - slope) < 1e-13


def test_grid_function_guards_and_arithmetic():
    with pytest.raises(DomainError):
        GridFunction(L, np.zeros(3))
    with pytest.raises(DomainError):
        GridFunction(-1.0, np.zeros(8))
    f = GridFunction(L, np.ones(8), mean_slope=1.0)
    g = 2.0 * f - f
    assert np.all(g.values == 1.0) and g.mean_slope == 1.0
    with pytest.raises(DomainError):
        f + GridFunction(3.0, np.ones(8))


def test_incommensurate_slope_rejected():
    u = GridFunction(L, np.full(N, 1.0))
    v = GridFunction(L, np.zeros(N), mean_slope=0.7)  # slope*L not in 2 pi i Z
    with pytest.raises(DomainError):
        DispersionlessFields(u, v)


def test_branch_guard_on_u():
    u = GridFunction(L, np.zeros(N))  # exp(-u) = 1 everywhere
    v = GridFunction(L, np.zeros(N))
    with pytest.raises(DomainError):
        DispersionlessFields(u, v)


def test_auxiliary_construction():
    x = np.arange(N) * (L / N)
    s = GridFunction(L, 0.1 * np.sin(2 * math.pi * x / L))
    r = GridFunction(L, np.full(N, -0.8 + 0.3j))
    fields = DispersionlessFields.from_auxiliary(s, r)
    assert np.max(np.abs(fields.v.values - s.derivative().values)) < 1e-14
    want_u = -np.log(1 - np.exp(2 * (-0.8 + 0.3j)))
    assert np.max(np.abs(fields.u.values - want_u)) < 1e-14
    with pytest.raises(DomainError):
        u_from_r(GridFunction(L, np.zeros(N)))  # exp(2r) = 1


def test_potential_field_u_relation():
    x = np.arange(N) * (L / N)
    tp = 2 * math.pi / L
    pot = PotentialField(L, 0.05 * np.cos(tp * x), slope=0.3, quad=-0.5)
    u = pot.u_field()
    want = 1.0 + 0.05 * tp**2 * np.cos(tp * x)
    assert np.max(np.abs(u.values - want)) < 1e-12


# ---------------------------------------------------------------------------
# zeta expansions


def test_zeta_expansion_against_series_engine():
    rng = np.random.default_rng(11)
    c = [rng.random(4) + 1j * rng.random(4) for _ in range(3)]
    c[0] = c[0] + 2.0  # keep constant term away from zero
    order = 5
    ze = ZetaExpansion.from_polynomial(c, order)
    ring = SeriesRing(["zeta"], var_caps={"zeta": order}, total_cap=order)
    zeta = ring.variable("zeta")
    for i in range(4):
        f = ring.constant(c[0][i]) + zeta * c[1][i] + zeta**2 * c[2][i]
        for pack, ref in ((ze.sqrt(), series_sqrt(f)),
                          (ze.log(), series_log(f)),
                          ((ze * ze), f * f)):
            for jj in range(order + 1):
                assert abs(pack.coefficient(jj)[i]
                           - complex(ref.coefficient(zeta=jj))) < 1e-12


def test_zeta_expansion_order_guard():
    ze = ZetaExpansion.from_polynomial([np.ones(4)], 2)
    with pytest.raises(TruncationOrderError):
        ze.coefficient(3)


def test_zeta_expansion_eval_matches_direct():
    c0, c1 = np.full(4, 1.2), np.full(4, 0.3 - 0.1j)
    ze = ZetaExpansion.from_polynomial([c0, c1], 6)
    z0 = 0.2 + 0.1j
    got = ze.log().eval(z0)
    want = np.log(c0 + z0 * c1)
    # truncation error ~ |z0 c1/c0|^7
    assert np.max(np.abs(got - want)) < 1e-5


# ---------------------------------------------------------------------------
# flows


def test_first_flow_closed_forms():
    fields = _fields()
    u = fields.u.total_values()
    v = fields.v.total_values()
    du, dv = flow_rhs(fields, 1, "z")
    want_dv = -1j * spectral_derivative(np.exp(v - u), L)
    want_du = 1j * spectral_derivative(np.exp(v) * (1 - np.exp(-u)), L)
    assert np.max(np.abs(dv.values - want_dv)) < 1e-12
    assert np.max(np.abs(du.values - want_du)) < 1e-12


def test_first_flow_second_family_closed_forms():
    fields = _fields(seed=5)
    u = fields.u.total_values()
    v = fields.v.total_values()
    du, dv = flow_rhs(fields, 1, "zt")
    want_dv = -1j * spectral_derivative(np.exp(-v - u), L)
    want_du = -1j * spectral_derivative(np.exp(-v) * (1 - np.exp(-u)), L)
    assert np.max(np.abs(dv.values - want_dv)) < 1e-12
    assert np.max(np.abs(du.values - want_du)) < 1e-12


@pytest.mark.parametrize("direction", ["z", "zt"])
@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_flow_coefficients_match_series_oracle(j, direction):
    fields = _fields(seed=7)
    du, dv = flow_rhs(fields, j, direction)
    odu, odv = oracle_flow_rhs(fields, j, direction)
    scale = max(np.max(np.abs(odu)), np.max(np.abs(odv)), 1e-300)
    assert np.max(np.abs(du.values - odu)) / scale < 1e-12
    assert np.max(np.abs(dv.values - odv)) / scale < 1e-12


def test_flows_vanish_on_constants():
    fields = DispersionlessFields(GridFunction(L, np.full(N, 1.3 + 0.2j)),
                                  GridFunction(L, np.full(N, -0.4j)))
    for j in (1, 3):
        du, dv = flow_rhs(fields, j, "z")
        assert du.max_abs() < 1e-13 and dv.max_abs() < 1e-13


def test_mirror_map_between_families():
    # (u, v) -> (u, -v) exchanges the families up to (du, dv) -> (-du, +dv)
    fields = _fields(seed=9)
    mirrored = DispersionlessFields(fields.u.copy(),
                                    fields.v * (-1))
    for j in (1, 2, 4):
        du_z, dv_z = flow_rhs(fields, j, "z")
        du_m, dv_m = flow_rhs(mirrored, j, "zt")
        assert np.max(np.abs(du_m.values + du_z.values)) == 0.0
        assert np.max(np.abs(dv_m.values - dv_z.values)) == 0.0


def test_degenerate_limit_suppresses_second_row():
    # for large u the v-family generating coefficients collapse like e^{-u}
    fields = _fields(seed=13, amp=0.15, base_u=10.0)
    g_u, g_v = flow_generating_series(fields, "z", 3)
    for jj in (1, 2, 3):
        assert np.max(np.abs(g_v.coefficient(jj))) < 1e-3
    assert np.max(np.abs(g_u.coefficient(1))) > 0.5


def test_flow_guards():
    fields = _fields()
    with pytest.raises(DomainError):
        flow_rhs(fields, 0, "z")
    with pytest.raises(DomainError):
        flow_rhs(fields, 1, "w")
    with pytest.raises(TruncationOrderError):
        flow_rhs(fields, 3, "z", order=2)
    with np.errstate(over="ignore"), pytest.raises(DomainError):
        # overflow guard on exp(-u)
        DispersionlessFields(GridFunction(L, np.full(N, -1e4)),
                             GridFunction(L, np.zeros(N)))


# ---------------------------------------------------------------------------
# Hamiltonian form


@pytest.mark.parametrize("direction", ["z", "zt"])
def test_hamiltonian_form_consistency(direction):
    fields = _fields(seed=3, amp=0.2)
    rep = check_hamiltonian_form(0.12 + 0.08j, fields, direction, jmax=14)
    assert rep["max_residual"] <= 1e-6, rep
    assert rep["recombination_signs"] == {"u": -1, "v": +1}


def test_recombined_flow_matches_partial_sums():
    fields = _fields(seed=17, amp=0.15)
    z0 = 0.1 + 0.05j
    du_r, dv_r = recombined_flow(z0, fields, "z", jmax=12)
    acc_u = np.zeros(N, complex)
    acc_v = np.zeros(N, complex)
    for j in range(1, 13):
        du, dv = flow_rhs(fields, j, "z")
        acc_u += z0**j * du.values
        acc_v += z0**j * dv.values
    assert np.max(np.abs(du_r.values - acc_u)) < 1e-12
    assert np.max(np.abs(dv_r.values - acc_v)) < 1e-12


def test_density_and_delta_flow_guards():
    fields = _fields()
    with pytest.raises(DomainError):
        hamiltonian_density(0.0, fields)  # atanh argument hits 1 at zeta = 0
    with pytest.raises(DomainError):
        hamiltonian_density(0.1, fields, which="x")
    with pytest.raises(DomainError):
        delta_flow(0.1, fields, "w")
    dens = hamiltonian_density(0.15 + 0.1j, fields)
    assert dens.size == N and np.all(np.isfinite(dens.values))


# ---------------------------------------------------------------------------
# density constraint (Frobenius layer)


@pytest.mark.parametrize("which", ["h", "ht"])
def test_density_constraint_both_signs_reported(which):
    rep = check_density_constraint(which=which)
    # sharp residual within tolerance, and the satisfied prefactor is
    # uniformly 1/(1 - e^u) (sign -1 relative to 1/(e^u - 1))
    assert rep["max_residual"] <= 1e-6, rep
    assert rep["constraint_sign"] == -1
    assert rep["residual_factor_minus"] <= 1e-6
    assert rep["residual_factor_plus"] > 0.1
    assert len(rep["residuals"]) == 20


def test_density_constraint_fppp_identity():
    rep = check_density_constraint()
    assert rep["fppp_identity_error"] < 1e-12
    u = 1.3 + 0.2j
    assert abs(FrobeniusData.fppp(u) - FrobeniusData.fppp_polylog(u)) < 1e-14


def test_frobenius_potential_structure():
    u, v = 1.1, 0.4
    phi = FrobeniusData.potential(u, v)
    assert abs(phi - (u * v**2 / 2 + FrobeniusData.f(u))) < 1e-15
    assert abs(FrobeniusData.topological_tau(u, v) - cmath.exp(phi)) < 1e-15
    assert np.all(FrobeniusData.metric() == np.array([[0, 1], [1, 0]]))


# ---------------------------------------------------------------------------
# evolution


def test_constants_are_fixed_points_of_evolution():
    fields = DispersionlessFields(GridFunction(L, np.full(N, 1.2)),
                                  GridFunction(L, np.full(N, 0.3)))
    out = evolve_dispersionless(fields, 1, "z", T=0.05, dt=1e-3)
    assert np.max(np.abs(out.u.values - 1.2)) == 0.0
    assert np.max(np.abs(out.v.values - 0.3)) == 0.0


def test_linearized_evolution_matches_mode_analysis():
    # tiny perturbation of a constant background against exp(t A) per mode;
    # mode growth rates scale with the wavenumber, so a short horizon and a
    # coarse grid keep the roundoff-seeded fast modes below tolerance
    u0, v0 = 1.1, 0.2
    eps = 1e-5
    n, T = 16, 0.5
    q = 2 * math.pi / L  # first mode
    x = np.arange(n) * (L / n)
    du0, dv0 = 0.7 * eps, -0.4 * eps
    fields = DispersionlessFields(
        GridFunction(L, u0 + du0 * np.exp(1j * q * x)),
        GridFunction(L, v0 + dv0 * np.exp(1j * q * x)))
    out = evolve_dispersionless(fields, 1, "z", T=T, dt=1e-3,
                                catastrophe_factor=1e12)

    e0, f0 = math.exp(v0), math.exp(-u0)
    A = np.array([[-q * e0 * f0, -q * e0 * (1 - f0)],
                  [-q * e0 * f0, q * e0 * f0]], dtype=complex)
    w, V = np.linalg.eig(A)
    c = np.linalg.solve(V, np.array([du0, dv0]))
    du_t, dv_t = V @ (np.exp(w * T) * c)

    want_u = u0 + du_t * np.exp(1j * q * x)
    want_v = v0 + dv_t * np.exp(1j * q * x)
    # the seeded mode grows by ~e^{1.1}; nonlinear feedback is O(eps^2)
    assert np.max(np.abs(out.u.values - u0)) > 1e-5
    assert np.max(np.abs(out.u.values - want_u)) < 1e-6
    assert np.max(np.abs(out.v.values - want_v)) < 1e-6


def test_mirror_trajectory_is_exact_time_reversal():
    # v -> -v conjugates the second family to the time-reversed first one;
    # for RK4 with negated step the stage arithmetic is an exact negation,
    # so the mirrored run reproduces the forward trajectory bitwise
    fields = _fields(seed=19, amp=0.08)
    h = 5e-4

    def rk4(u0_vals, v0_vals, direction, dt, steps):
        u, v = u0_vals.copy(), v0_vals.copy()

        def f(uu, vv):
            du, dv = flow_rhs(DispersionlessFields(
                GridFunction(L, uu), GridFunction(L, vv)), 1, direction)
            return du.values, dv.values

        for _ in range(steps):
            k1 = f(u, v)
            k2 = f(u + 0.5 * dt * k1[0], v + 0.5 * dt * k1[1])
            k3 = f(u + 0.5 * dt * k2[0], v + 0.5 * dt * k2[1])
            k4 = f(u + dt * k3[0], v + dt * k3[1])
            u = u + (dt / 6) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            v = v + (dt / 6) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        return u, v

    u_T, v_T = rk4(fields.u.values, fields.v.values, "z", h, 100)
    u_m, v_m = rk4(fields.u.values, -fields.v.values, "zt", -h, 100)
    assert np.max(np.abs(u_m - u_T)) == 0.0
    assert np.max(np.abs(v_m + v_T)) == 0.0


def test_gradient_catastrophe_detection():
    # modes of the first flow grow like exp(q e^{v} e^{-u/2} t), so an
    # order-one profile trips a modest growth factor quickly
    x = np.arange(N) * (L / N)
    steep = DispersionlessFields(
        GridFunction(L, 1.5 + 0.3 * np.cos(2 * math.pi * x / L)),
        GridFunction(L, 1.2 * np.sin(2 * math.pi * x / L)))
    with pytest.raises(GradientCatastropheError) as err:
        evolve_dispersionless(steep, 1, "z", T=5.0, dt=1e-3,
                              catastrophe_factor=1.5)
    assert err.value.time > 0


def test_potential_co_evolution_keeps_u_consistent():
    x = np.arange(N) * (L / N)
    tp = 2 * math.pi / L
    pot = PotentialField(L, 0.02 * np.cos(tp * x), slope=0.1, quad=-0.5)
    u = pot.u_field()
    v = GridFunction(L, 0.02 * np.sin(tp * x))
    fields = DispersionlessFields(u, v, varpi=pot)
    out = evolve_dispersionless(fields, 1, "z", T=0.1, dt=1e-3,
                                co_evolve_potential=True)
    again = out.varpi.u_field()
    assert np.max(np.abs(again.values - out.u.values)) < 1e-9


def test_co_evolution_guards():
    fields = _fields()
    with pytest.raises(DomainError):
        evolve_dispersionless(fields, 1, "z", T=0.1, co_evolve_potential=True)
    with pytest.raises(DomainError):
        evolve_dispersionless(fields, 2, "z", T=0.1, co_evolve_potential=True)
    with pytest.raises(DomainError):
        evolve_dispersionless(fields, 1, "z", T=-1.0)


# ---------------------------------------------------------------------------
# shift relation and small-phase-space identification


def test_xdif_exact_on_quadratics():
    alpha, beta, gamma = 0.3 + 0.2j, -0.7, 1.1j
    lhs_value = 2 * alpha  # second difference of a quadratic / l^2
    r_const = 0.5 * cmath.log(1 - cmath.exp(lhs_value))
    r = GridFunction(L, np.full(N, r_const))
    rep = check_xdif(lambda x: alpha * x * x + beta * x + gamma, r, 0.23 + 0.11j)
    assert rep["max_residual"] < 1e-12


def test_xdif_classical_potential_and_initial_value():
    t = 0.3 + 0.4j
    q = cmath.exp(2j * math.pi * t)
    r_const = 0.5 * cmath.log(1 - q)
    r = GridFunction(L, np.full(N, r_const))
    rep = check_xdif(classical_varpi(t, 1.0), r, 0.2)
    assert rep["max_residual"] < 1e-12
    # with kappa = 1 the induced u is the constant -2 pi i t
    u = u_from_r(r)
    assert np.max(np.abs(u.values - (-2j * math.pi * t))) < 1e-13
    # x-independent additions to the potential drop out of the difference
    rep2 = check_xdif(lambda x: classical_varpi(t, 1.0)(x) + 5.0 - 2.0j, r, 0.2)
    assert rep2["max_residual"] < 1e-12


def test_xdif_guard():
    r = GridFunction(L, np.full(N, -0.5))
    with pytest.raises(DomainError):
        check_xdif(lambda x: x * x, r, 0.0)


def test_principal_identification_signs():
    rep = check_principal_identification(0.3 + 0.4j, 0.7)
    assert rep["match_sign"] == "plus"
    assert abs(rep["difference_plus_sign"]) < 1e-12
    want_gap = 8 * math.pi**3 * abs(0.3 + 0.4j) * 0.49
    assert abs(rep["difference_minus_sign"]) == pytest.approx(want_gap, rel=1e-12)
    zero = check_principal_identification(0.3 + 0.4j, 0.0)
    assert zero["difference_plus_sign"] == 0
    assert zero["difference_minus_sign"] == 0
    with pytest.raises(DomainError):
        check_principal_identification(0.3 - 0.4j, 0.7)


# ---------------------------------------------------------------------------
# export


def test_export_fields_round_trip(tmp_path):
    fields = _fields(seed=23)
    csv_path = tmp_path / "fields.csv"
    meta_path = tmp_path / "fields.json"
    export_fields(fields, str(csv_path), str(meta_path), {"tag": "smoke"})
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "re_u", "im_u", "re_v", "im_v"]
    assert len(rows) == 1 + N
    got = float(rows[1][1]) + 1j * float(rows[1][2])
    assert got == complex(fields.u.total_values()[0])
    meta = json.loads(meta_path.read_text())
    assert meta["schema"] == 1 and meta["grid_points"] == N
    assert meta["tag"] == "smoke"
