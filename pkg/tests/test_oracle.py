import numpy as np
import pytest
from scipy.linalg import expm

from otoc_qrt.emitter import EXCITED, SIGMA_MINUS, SIGMA_PLUS, EmitterParams, hamiltonian, liouvillian, noise_model
from otoc_qrt.operators import evolve
from otoc_qrt.oracle import CollisionConfig, _Dilation, collision_unitary, oracle_correlation
from otoc_qrt.qrt import Engine

GROUND = np.diag([1.0, 0.0]).astype(complex)
EXC = np.diag([0.0, 1.0]).astype(complex)


@pytest.mark.parametrize("p", [EmitterParams(), EmitterParams(omega=1.0, delta=0.3, nbar=1.0)])
@pytest.mark.parametrize("dt", [0.5, 0.02, 1e-4])
def test_collision_unitary_is_unitary(p, dt):
    U = collision_unitary(p, dt)
    assert np.max(np.abs(U.conj().T @ U - np.eye(4))) < 1e-12


def test_weak_coupling_limit_is_free_evolution():
    p = EmitterParams(omega=1.3, delta=0.2, gamma=1e-12)
    dt = 0.1
    free = np.kron(expm(-1j * dt * hamiltonian(p)), np.eye(2))
    assert np.max(np.abs(collision_unitary(p, dt) - free)) < 1e-6
    with pytest.raises(ValueError):
        collision_unitary(p, 0.0)


def test_single_time_decay_converges_to_master_equation():
    p = EmitterParams(omega=1.0)
    L = liouvillian(p)
    t = 0.4
    exact = evolve(L, EXC, t)[1, 1].real
    errs = []
    for dt in (0.08, 0.04, 0.02):
        cfg = CollisionConfig(dt, round(t / dt))
        errs.append(abs(oracle_correlation([(EXCITED, t), (np.eye(2), 0.0)], p, cfg, EXC) - exact))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.01
    assert np.log2(errs[1] / errs[2]) > 0.8


def test_equal_time_from_steady_state_is_exact():
    p = EmitterParams(omega=2.0)
    value = oracle_correlation([(SIGMA_PLUS, 0.0), (SIGMA_MINUS, 0.0)], p, CollisionConfig(0.1, 1))
    assert value == pytest.approx(4 / 9, abs=1e-12)


@pytest.mark.parametrize("thermal", [False, True])
def test_norm_preserved(thermal):
    p = EmitterParams(omega=1.0, nbar=0.5 if thermal else 0.0)
    cfg = CollisionConfig(0.05, 6, thermal)
    dil = _Dilation(p, cfg)
    psi = dil.initial_state(np.array([0.6, 0.8j]))
    assert abs(np.linalg.norm(psi) - 1) < 1e-12
    out = dil.move(psi, 0, 6)
    assert abs(np.linalg.norm(out) - 1) < 1e-12
    back = dil.move(out, 6, 0)
    assert np.max(np.abs(back - psi)) < 1e-12


def test_two_time_first_order_convergence():
    p = EmitterParams(omega=1.0)
    engine = Engine(liouvillian(p), noise_model(p))
    tau = 0.24
    exact = engine.two_time(SIGMA_PLUS, SIGMA_MINUS, [tau])[0]
    errs = []
    for dt in (0.08, 0.04, 0.02):
        cfg = CollisionConfig(dt, round(tau / dt))
        errs.append(abs(oracle_correlation([(SIGMA_PLUS, 0.0), (SIGMA_MINUS, tau)], p, cfg) - exact))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 0.9)


def test_thermal_oracle_needs_the_noise_term():
    p = EmitterParams(omega=0.5, nbar=1.0)
    engine = Engine(liouvillian(p), noise_model(p))
    events = [(SIGMA_PLUS, 0.24), (SIGMA_PLUS, 0.0), (SIGMA_MINUS, 0.24), (SIGMA_MINUS, 0.0)]
    with_noise = engine.correlation(events)
    without = engine.correlation(events, include_noise=False)
    coarse, fine = (oracle_correlation(events, p, CollisionConfig.covering(events, dt, p.nbar))
                    for dt in (0.08, 0.04))
    extrapolated = 2 * fine - coarse
    assert abs(extrapolated - with_noise) < 0.1 * abs(with_noise)
    assert abs(extrapolated - without) > 0.5 * abs(with_noise)


def test_config_errors():
    with pytest.raises(ValueError):
        CollisionConfig(0.0, 3)
    with pytest.raises(ValueError):
        CollisionConfig(0.1, 0)
    with pytest.raises(ValueError, match="budget"):
        CollisionConfig(0.01, 22)
    with pytest.raises(ValueError, match="budget"):
        CollisionConfig(0.01, 11, thermal=True)
    assert CollisionConfig(0.01, 10, thermal=True).n_qubits == 21
    p = EmitterParams(omega=1.0)
    with pytest.raises(ValueError, match="grid"):
        oracle_correlation([(SIGMA_PLUS, 0.0), (SIGMA_MINUS, 0.1)], p, CollisionConfig(0.08, 2))
    with pytest.raises(ValueError):
        oracle_correlation([(SIGMA_PLUS, 0.0), (SIGMA_MINUS, 0.24)], p, CollisionConfig(0.08, 2))
    with pytest.raises(ValueError, match="thermal"):
        oracle_correlation([(SIGMA_PLUS, 0.0)], EmitterParams(nbar=1.0), CollisionConfig(0.08, 1))
