import math

import numpy as np
import pytest

from ino_pca.errors import ConfigError, DomainError, IntegrationBlowupError
from ino_pca.theory_ode import (LEARNING, UNSTABLE, OdeParams, alignment_growth, critical_snr, integrate,
                                integrate_oja, ode_rhs, oja_ode_rhs, optimal_lambda0, optimal_nu, steady_state)

# Reference values from an independent high-order adaptive integrator
# (Dormand-Prince 8(5,3), rtol 1e-12) started at Q0 = 0.1, lambda0 = 1, omega = 1.
REF_T5 = (0.44950975280491107, 1.3074725606296718)     # tau = 0.5, t = 5
REF_T30 = (0.8818045701174667, 1.9995058413360025)     # tau = 0.5, t = 30
REF_OJA_T10 = 0.6289004995149231                       # tau_hat = 0.25, t = 10
REF_ADAPTIVE_T10 = (0.8346701468387138, 1.7815709903897237)


def test_rhs_zero_alignment_is_stationary_in_q():
    for lam in (0.3, 1.0, 4.0):
        assert ode_rhs(0.0, lam, 1.0, 0.5)[0] == 0.0


def test_rhs_learning_fixed_point():
    q2 = 1.75 / 2.25
    dq, dl = ode_rhs(math.sqrt(q2), 2.0, 1.0, 0.5)
    assert abs(dq) <= 1e-12 and abs(dl) <= 1e-12


def test_rhs_unstable_fixed_point():
    lam = (1 + math.sqrt(2)) / 2
    assert lam == pytest.approx(1.20711, abs=1e-5)
    assert abs(ode_rhs(0.0, lam, 1.0, 0.5)[1]) <= 1e-10


def test_rhs_domain():
    with pytest.raises(DomainError):
        ode_rhs(0.1, 0.0, 1.0, 0.5)


def test_integrate_matches_reference():
    tr = integrate(OdeParams(1.0, 0.5, 0.1, 1.0), 5.0)
    assert tr.Q[-1] == pytest.approx(REF_T5[0], abs=1e-9)
    assert tr.lam[-1] == pytest.approx(REF_T5[1], abs=1e-9)
    tr = integrate(OdeParams(1.0, 0.5, 0.1, 1.0), 30.0)
    assert tr.final == pytest.approx(REF_T30, abs=1e-9)


def test_integrate_converges_to_steady_state():
    tr = integrate(OdeParams(1.0, 0.5, 0.1, 1.0), 60.0)
    assert abs(tr.Q[-1] - math.sqrt(7 / 9)) < 1e-3
    assert abs(tr.lam[-1] - 2.0) < 1e-3


def test_vanishing_rate_gives_perfect_alignment():
    tr = integrate(OdeParams(1.0, 1e-3, 0.1, 1.0), 12_000.0, dt=0.5, record_every=1000)
    assert tr.Q[-1] > 0.999


def test_integrator_is_fourth_order():
    a = integrate(OdeParams(1.0, 0.5, 0.1, 1.0), 10.0, dt=1e-2).final
    b = integrate(OdeParams(1.0, 0.5, 0.1, 1.0), 10.0, dt=5e-3).final
    assert max(abs(a[0] - b[0]), abs(a[1] - b[1])) <= 1e-6
    c = integrate(OdeParams(1.0, 0.5, 0.1, 1.0), 10.0, dt=1e-3).final
    assert abs(c[0] - b[0]) <= 1e-6


def test_integrate_grid_and_final_step():
    tr = integrate(OdeParams(1.0, 0.5, 0.1, 1.0), 1.05, dt=0.1)
    assert tr.t[-1] == pytest.approx(1.05, abs=1e-12)
    tr = integrate(OdeParams(1.0, 0.5, 0.1, 1.0), 1.0, dt=0.01, record_every=10)
    assert tr.t.size == 11
    q, lam = tr.at([0.0, 1.0])
    assert q[0] == 0.1 and lam[0] == 1.0


def test_integrate_blowup_is_reported():
    with pytest.raises(IntegrationBlowupError, match="smaller dt"):
        integrate(OdeParams(1.0, 0.5, 0.1, 0.01), 2.0, dt=0.5)


def test_ode_params_validation():
    for kwargs in (dict(q0=0.0), dict(q0=1.0), dict(lambda0=0.0), dict(tau=0.0), dict(omega=-1.0)):
        base = dict(omega=1.0, tau=0.5, q0=0.1, lambda0=1.0)
        base.update(kwargs)
        with pytest.raises(ConfigError):
            OdeParams(**base)


def test_steady_state_branches():
    ss = steady_state(1.0, 0.5)
    assert ss.branch == LEARNING
    assert ss.Q2 == pytest.approx(0.77778, abs=1e-5) and ss.lam == 2.0
    ss = steady_state(0.1, 0.5)
    assert ss.branch == UNSTABLE and ss.Q2 == 0.0
    assert ss.lam == pytest.approx(1.20711, abs=1e-5)


def test_steady_state_tie_is_unstable():
    tau = 0.5
    wc = critical_snr(tau)
    # at omega_c the numerator vanishes up to round-off; exact tie with tau = 2(w^2 + w)
    w = 0.5
    assert steady_state(w, 2 * (w * w + w)).branch == UNSTABLE
    assert steady_state(wc * 1.001, tau).branch == LEARNING


def test_critical_snr_values():
    assert critical_snr(0.5) == pytest.approx(0.20711, abs=1e-5)
    assert round(critical_snr(0.5), 3) == 0.207
    assert critical_snr(4.0) == pytest.approx(1.0, abs=1e-15)
    assert critical_snr(1e-12) == pytest.approx(1e-12 / 2, rel=1e-6)


def test_optimal_nu_values():
    assert optimal_nu(0.0, 2.0) == 2.0
    assert optimal_nu(1.0, 2.0) == 0.0
    assert optimal_nu(0.5, 1.0) == pytest.approx(0.6, abs=1e-15)


def test_optimal_nu_maximizes_growth():
    rng = np.random.default_rng(0)
    for _ in range(200):
        Q = rng.uniform(0.01, 0.99)
        omega = rng.uniform(0.05, 3.0)
        nu = optimal_nu(Q, omega)
        best = alignment_growth(nu, Q, omega)
        assert best > alignment_growth(nu * 1.01, Q, omega)
        assert best > alignment_growth(nu * 0.99, Q, omega)


def test_optimal_lambda0():
    assert optimal_lambda0(0.5, 1.0) == 0.5
    assert optimal_lambda0(0.7, 0.7) == 1.0
    with pytest.raises(DomainError):
        optimal_lambda0(0.5, 0.0)


def test_oja_rhs_matches_ino_rhs_at_unit_norm():
    for Q in (0.0, 0.2, 0.7):
        assert oja_ode_rhs(Q, 1.3, 0.4) == pytest.approx(ode_rhs(Q, 1.0, 1.3, 0.4)[0], rel=1e-14, abs=1e-16)


def test_oja_steady_state_matches_ino_at_scaled_rate():
    omega, tau = 1.0, 0.5
    th = tau / (1 + omega)
    q2 = (omega - th / 2) / (omega + th * omega / 2)
    assert q2 == pytest.approx(steady_state(omega, tau).Q2, rel=1e-14)
    assert abs(oja_ode_rhs(math.sqrt(q2), omega, th)) < 1e-14


def test_integrate_oja_matches_reference():
    tr = integrate_oja(1.0, 0.25, 0.1, 10.0)
    assert tr.Q[-1] == pytest.approx(REF_OJA_T10, abs=1e-9)
    assert np.all(tr.lam == 1.0)


def test_adaptive_integration_matches_reference():
    tr = integrate(OdeParams(1.0, 0.0, 0.1, 1.0, adaptive=True), 10.0)
    assert tr.final == pytest.approx(REF_ADAPTIVE_T10, abs=1e-9)


def test_norm_rises_to_leading_eigenvalue():
    tr = integrate(OdeParams(1.0, 0.5, 0.1, 1.0), 200.0, record_every=100)
    assert abs(tr.lam[-1] - 2.0) < 1e-3
    tail = tr.lam[tr.t >= 5.0]
    assert np.all(np.diff(tail) >= -1e-12)


def test_steady_state_independent_of_initial_norm():
    finals = [integrate(OdeParams(1.0, 0.5, 0.1, l0), 120.0, record_every=1000).final for l0 in (0.2, 1.0, 3.0)]
    for q, lam in finals:
        assert abs(q - finals[0][0]) < 1e-3 and abs(lam - finals[0][1]) < 1e-3


def test_initial_alignment_dip_threshold():
    # dQ/dt < 0 at t = 0 exactly when lambda0 < tau (omega Q0^2 + 1) / (2 omega (1 - Q0^2))
    omega, tau, q0 = 1.0, 0.5, 0.1
    thresh = tau * (omega * q0 * q0 + 1) / (2 * omega * (1 - q0 * q0))
    assert thresh == pytest.approx(0.255050505, abs=1e-9)
    dips = {l0: integrate(OdeParams(omega, tau, q0, l0), 0.5).Q[1] < q0 for l0 in (0.1, 0.25, 0.26, 0.5, 2.5)}
    assert dips == {0.1: True, 0.25: True, 0.26: False, 0.5: False, 2.5: False}
