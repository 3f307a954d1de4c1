import math

import numpy as np
import pytest

from sqip.errors import DomainError
from sqip.ode import (BOTH_TO_ZERO, S_HITS_ZERO, S_POSITIVE_LIMIT,
                      SiOdeParams, SisOdeParams, extinction_time_bound,
                      n_star, rk4_integrate, settle_batch, si_classify,
                      sis_classify, sis_steady_states)


# ------------------------------------------------------------- SI system

def test_si_classify_equality_case():
    # mu*p*S0^(1-q) = 1*1*1 = (1-q)*beta*I0^p = 0.5*2*1: knife edge
    params = SiOdeParams(beta=2, mu=1, p=1, q=0.5, S0=1, I0=1)
    out = si_classify(params)
    assert out.kind == BOTH_TO_ZERO
    assert out.rule == "depletion-balance-equality"


def test_si_classify_finite_time_hit():
    params = SiOdeParams(beta=1, mu=1, p=1, q=0.5, S0=1, I0=4)
    out = si_classify(params)
    assert out.kind == S_HITS_ZERO
    assert out.t_upper == pytest.approx(math.log(2.0), abs=1e-14)


def test_si_classify_sublinear_p():
    out = si_classify(SiOdeParams(beta=1, mu=1, p=0.5, q=1, S0=1, I0=1))
    assert out.kind == BOTH_TO_ZERO
    out = si_classify(SiOdeParams(beta=0.3, mu=2, p=0.7, q=3, S0=2, I0=0.5))
    assert out.kind == BOTH_TO_ZERO


def test_si_classify_superlinear():
    out = si_classify(SiOdeParams(beta=1, mu=1, p=2, q=1.5, S0=1, I0=1))
    assert out.kind == S_POSITIVE_LIMIT


def test_si_classify_unclassified_corner():
    # q < 1, p >= 1, balance reversed but decay margin too weak
    params = SiOdeParams(beta=2, mu=1, p=1.5, q=0.5, S0=1, I0=1)
    lhs = params.mu * params.p * params.S0 ** 0.5
    rhs = 0.5 * params.beta * params.I0**1.5
    assert lhs > rhs  # not the finite-time case
    out = si_classify(params)
    assert out.kind == "Unclassified"


def test_extinction_time_bound_worked_example():
    # solve 1 + 2(e^-t - 1) = 0 by hand: t = ln 2
    params = SiOdeParams(beta=1, mu=1, p=1, q=0.5, S0=1, I0=4)
    assert extinction_time_bound(params) == pytest.approx(math.log(2.0),
                                                          abs=1e-14)


def test_extinction_time_bound_rejects_equality():
    params = SiOdeParams(beta=2, mu=1, p=1, q=0.5, S0=1, I0=1)
    with pytest.raises(DomainError):
        extinction_time_bound(params)


def test_extinction_time_bound_precondition_arithmetic():
    # mu*p*S0^(1-q) = 4 >= (1-q)*beta*I0^p = 2: precondition rejects, so
    # the impossible log argument is never reached
    params = SiOdeParams(beta=1, mu=2, p=2, q=0.5, S0=1, I0=2)
    with pytest.raises(DomainError) as err:
        extinction_time_bound(params)
    assert "4" in str(err.value) and "2" in str(err.value)


def test_extinction_time_bound_needs_fractional_q():
    with pytest.raises(DomainError):
        extinction_time_bound(SiOdeParams(beta=1, mu=1, p=1, q=1.5, S0=1, I0=4))


def test_si_rk4_clamp_time_within_bound():
    params = SiOdeParams(beta=1, mu=1, p=1, q=0.5, S0=1, I0=4)
    traj = rk4_integrate("si", params, t_end=2.0, dt=1e-3)
    assert traj.clamp_events, "S never reached zero"
    t_clamp, comp = traj.clamp_events[0]
    assert comp == 0
    assert t_clamp <= math.log(2.0) + 0.01
    assert traj.terminal[0] == 0.0


def test_si_params_validated():
    with pytest.raises(DomainError):
        SiOdeParams(beta=1, mu=0, p=1, q=1, S0=1, I0=1)


# ------------------------------------------------------------ SIS system

def test_n_star_values():
    assert n_star(2, 1, 1) == pytest.approx(0.25, abs=1e-15)
    assert n_star(2, 1, 2) == pytest.approx(1.0, abs=1e-15)
    assert n_star(3, 1, 1) == pytest.approx(4.0 / 27.0, abs=1e-15)


def test_n_star_monotone_in_total_mass():
    rng = np.random.default_rng(21)
    for _ in range(50):
        p = float(rng.uniform(1.05, 3.0))
        q = float(rng.uniform(0.2, 2.5))
        n1 = float(rng.uniform(0.2, 3.0))
        n2 = n1 * float(rng.uniform(1.01, 2.0))
        assert n_star(p, q, n2) > n_star(p, q, n1)


def test_n_star_needs_superlinear_p():
    with pytest.raises(DomainError):
        n_star(1.0, 1.0, 1.0)


def test_sis_steady_states_bistable_pair():
    # S(1-S) = 0.21 solves to S in {0.3, 0.7}
    params = SisOdeParams(beta=1, gamma=0.21, p=2, q=1, N=1, S0=0.5)
    states = sis_steady_states(params)
    assert states.n_interior == 2
    low, high = states.interior
    assert low.S == pytest.approx(0.3, abs=1e-10)
    assert high.S == pytest.approx(0.7, abs=1e-10)
    assert low.I == pytest.approx(0.7, abs=1e-10)
    assert abs(low.S - high.S) > 1e-8
    assert low.stability == ("attracting-from-below", "attracting-from-above")
    assert high.stability == ("repelling",)
    assert states.boundary.S == 1.0
    assert "attracting-from-below" in states.boundary.stability


def test_sis_steady_state_residuals():
    rng = np.random.default_rng(30)
    for _ in range(20):
        p = float(rng.uniform(1.2, 2.5))
        q = float(rng.uniform(0.4, 2.0))
        N = float(rng.uniform(0.5, 2.0))
        beta = float(rng.uniform(0.5, 2.0))
        gamma = 0.7 * beta * n_star(p, q, N)
        params = SisOdeParams(beta=beta, gamma=gamma, p=p, q=q, N=N, S0=0.5 * N)
        for st in sis_steady_states(params).interior:
            residual = abs(-beta * st.S**q * st.I**p + gamma * st.I)
            assert residual <= 1e-10


def test_sis_unique_state_linear_p():
    params = SisOdeParams(beta=2, gamma=1, p=1, q=1, N=1, S0=0.9)
    states = sis_steady_states(params)
    assert states.n_interior == 1
    assert states.interior[0].S == pytest.approx(0.5, abs=1e-12)  # (gamma/beta)^(1/q)


def test_sis_no_interior_state_above_threshold():
    params = SisOdeParams(beta=1, gamma=0.3, p=2, q=1, N=1, S0=0.5)
    assert sis_steady_states(params).n_interior == 0  # gamma > beta*N* = 0.25


def test_sis_count_transitions_across_threshold():
    # steady-state count steps 2 -> 1 -> 0 as gamma crosses beta*N*
    fold = 1.0 * n_star(2, 1, 1)
    counts = []
    for gamma in (0.8 * fold, fold, 1.2 * fold):
        params = SisOdeParams(beta=1, gamma=gamma, p=2, q=1, N=1, S0=0.5)
        counts.append(sis_steady_states(params).n_interior)
    assert counts == [2, 1, 0]


def test_sis_tangent_state_semistable():
    fold = n_star(2, 1, 1)
    params = SisOdeParams(beta=1, gamma=fold, p=2, q=1, N=1, S0=0.5)
    (state,) = sis_steady_states(params).interior
    assert state.S == pytest.approx(0.5, abs=1e-12)  # peak of S(1-S)
    assert "semi-stable" in state.stability


def test_sis_sublinear_always_unique():
    rng = np.random.default_rng(31)
    for _ in range(20):
        params = SisOdeParams(beta=float(rng.uniform(0.5, 2)),
                              gamma=float(rng.uniform(0.05, 3)),
                              p=float(rng.uniform(0.2, 0.9)),
                              q=float(rng.uniform(0.4, 2)),
                              N=float(rng.uniform(0.5, 2)), S0=0.3)
        states = sis_steady_states(params)
        assert states.n_interior == 1
        st = states.interior[0]
        assert st.stability == ("attracting-from-below", "attracting-from-above")


def test_sis_classify_spot_checks():
    params = SisOdeParams(beta=1, gamma=0.21, p=2, q=1, N=1, S0=0.75)
    out = sis_classify(params)
    assert (out.limit_S, out.limit_I) == (1.0, 0.0)
    out = sis_classify(params, 0.5)
    assert out.limit_S == pytest.approx(0.3, abs=1e-10)
    assert out.limit_I == pytest.approx(0.7, abs=1e-10)


def test_sis_classify_sublinear():
    params = SisOdeParams(beta=1, gamma=0.1, p=0.5, q=1, N=1, S0=0.9)
    out = sis_classify(params)
    assert 0 < out.limit_S < 1
    assert out.case == "endemic-sublinear"


# ------------------------------------------------------------- RK4 oracle

def test_rk4_sis_terminal_equilibrium():
    params = SisOdeParams(beta=2, gamma=1, p=1, q=1, N=1, S0=0.9)
    traj = rk4_integrate("sis", params, t_end=50.0, dt=1e-3, record_every=100)
    assert traj.terminal[0] == pytest.approx(0.5, abs=1e-6)
    assert traj.terminal[1] == pytest.approx(0.5, abs=1e-6)


def test_rk4_sis_conserves_total():
    params = SisOdeParams(beta=1.3, gamma=0.4, p=1.7, q=0.8, N=1.5, S0=1.0)
    traj = rk4_integrate("sis", params, t_end=10.0, dt=1e-3)
    assert traj.conservation_drift <= 1e-10 * params.N
    sums = traj.y.sum(axis=1)
    assert np.abs(sums - params.N).max() <= 1e-10 * params.N


def test_rk4_reduced_matches_full():
    params = SisOdeParams(beta=1, gamma=0.21, p=2, q=1, N=1, S0=0.45)
    full = rk4_integrate("sis", params, t_end=30.0, dt=1e-3, record_every=500)
    reduced = rk4_integrate("reduced", params, t_end=30.0, dt=1e-3,
                            record_every=500)
    assert np.abs(full.y[:, 0] - reduced.y[:, 0]).max() < 1e-9


def test_rk4_rejects_unknown_system():
    params = SisOdeParams(beta=1, gamma=1, p=1, q=1, N=1, S0=0.5)
    with pytest.raises(DomainError):
        rk4_integrate("sir", params, 1.0, 0.1)


def test_settle_batch_freezes_converged_points():
    batch = {
        "beta": np.array([2.0, 1.0]),
        "gamma": np.array([1.0, 0.21]),
        "p": np.array([1.0, 2.0]),
        "q": np.array([1.0, 1.0]),
    }
    y0 = np.array([[0.9, 0.1], [0.75, 0.25]])
    report = settle_batch("sis", batch, y0, dt=0.01, t_max=300.0)
    assert report.converged.all()
    assert report.y[0, 0] == pytest.approx(0.5, abs=1e-4)
    assert report.y[1, 0] == pytest.approx(1.0, abs=1e-4)
