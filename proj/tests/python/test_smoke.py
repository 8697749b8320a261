import math

import numpy as np
import pytest

pendusim = pytest.importorskip("pendusim")


def test_model_preset():
    m = pendusim.model_preset("paper_n3")
    assert m.dof == 8
    assert m.input_count == 6
    assert m.total_mass == pytest.approx(45.0)
    assert pendusim.model_preset("paper_n7").dof == 12
    with pytest.raises(pendusim.UnsupportedPreset):
        pendusim.model_preset("paper_n4")


def test_mass_matrix_and_energy():
    m = pendusim.model_preset()
    rng = np.random.default_rng(3)
    q = rng.uniform(-0.3, 0.3, m.dof)
    qd = rng.uniform(-1.0, 1.0, m.dof)
    M = pendusim.mass_matrix(m, q)
    assert M.shape == (8, 8)
    assert np.allclose(M, M.T, rtol=0, atol=1e-10)
    assert np.linalg.eigvalsh(M).min() > 0
    assert pendusim.kinetic_energy(m, q, qd) == pytest.approx(0.5 * qd @ M @ qd, rel=1e-12)


def test_gravity_is_potential_gradient():
    m = pendusim.model_preset()
    q = np.linspace(-0.2, 0.2, m.dof)
    h = 1e-6
    fd = np.array([
        (pendusim.potential_energy(m, q + h * e) - pendusim.potential_energy(m, q - h * e)) / (2 * h)
        for e in np.eye(m.dof)
    ])
    assert np.allclose(pendusim.gravity_vector(m, q), fd, atol=1e-5)


def test_forward_dynamics_residual():
    m = pendusim.model_preset()
    q = np.full(m.dof, 0.1)
    qd = np.full(m.dof, -0.2)
    tau = np.zeros(m.dof)
    qdd = pendusim.forward_dynamics(m, q, qd, tau)
    M = pendusim.mass_matrix(m, q)
    C = pendusim.coriolis_matrix(m, q, qd)
    g = pendusim.gravity_vector(m, q)
    assert np.linalg.norm(M @ qdd + C @ qd + g - tau) < 1e-8


def test_equilibrium():
    m = pendusim.model_preset()
    qm, residual = pendusim.solve_equilibrium(m, [math.pi / 4, math.pi / 2, 0.0])
    assert residual < 1e-10
    assert qm[0] * qm[1] < 0
    qm0, _ = pendusim.solve_equilibrium(m, [0.0, 0.0, 0.0])
    assert np.allclose(qm0, 0.0, atol=1e-12)


def test_short_run():
    out = pendusim.run("fig6_proposed", duration=1.0)
    traj = out["trajectory"]
    assert traj["q"].shape == (101, 8)
    assert traj["t"][-1] == pytest.approx(1.0)
    assert set(out["report"]["signals"]) == {"phi", "xc", "q_m", "gamma", "q_r"}
    with pytest.raises(pendusim.InvalidConfig):
        pendusim.run({"controller": "proposed", "dt_s": -1.0})


def test_verify_passes():
    results = pendusim.verify(pendusim.model_preset(), seed=2, samples=10)
    assert results and all(r["passed"] for r in results)
