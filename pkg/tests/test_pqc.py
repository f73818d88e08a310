from dataclasses import replace

import numpy as np
import pytest
from scipy.linalg import expm

from dqgan.datasets import data_line
from dqgan.dqnn import Architecture, forward
from dqgan.gan import loss_D
from dqgan.linalg import PAULI_X, PAULI_Y, PAULI_Z, is_unitary, ket, random_pure_states, to_density
from dqgan.pqc import (
    CircuitGan,
    CircuitHyper,
    CircuitPlan,
    Gate,
    build_circuit,
    can_gate,
    circuit_to_perceptrons,
    evaluate_circuit,
    fd_gradient,
    init_params,
    standard_param_count,
    train_dqgan_q,
    u3_gate,
)

XX = np.kron(PAULI_X, PAULI_X)
YY = np.kron(PAULI_Y, PAULI_Y)
ZZ = np.kron(PAULI_Z, PAULI_Z)


def test_can_gate_values():
    assert np.allclose(can_gate(0, 0, 0), np.eye(4))
    assert np.allclose(can_gate(1, 0, 0), -1j * XX)


def test_can_gate_matches_exponential(rng):
    for tx, ty, tz in rng.uniform(-2, 2, size=(20, 3)):
        expected = expm(-1j * np.pi / 2 * (tx * XX + ty * YY + tz * ZZ))
        assert np.allclose(can_gate(tx, ty, tz), expected, atol=1e-12)
        # factors commute
        other = expm(-1j * np.pi / 2 * tz * ZZ) @ expm(-1j * np.pi / 2 * tx * XX) @ expm(-1j * np.pi / 2 * ty * YY)
        assert np.allclose(can_gate(tx, ty, tz), other, atol=1e-12)


def test_u3_gate_values(rng):
    assert np.allclose(u3_gate(0, 0, 0), np.eye(2))
    assert np.allclose(u3_gate(np.pi, 0, np.pi), PAULI_X)
    for t in rng.uniform(-7, 7, size=(100, 3)):
        assert is_unitary(u3_gate(*t), 1e-12)


def test_gates_vectorise(rng):
    t = rng.uniform(0, 2, size=(5, 3))
    stacked = can_gate(t[:, 0], t[:, 1], t[:, 2])
    assert stacked.shape == (5, 4, 4)
    for p in range(5):
        assert np.allclose(stacked[p], can_gate(*t[p]))
        assert np.allclose(u3_gate(t[:, 0], t[:, 1], t[:, 2])[p], u3_gate(*t[p]))


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("CAN", (0, 0), (0, 1, 2))
    with pytest.raises(ValueError):
        Gate("U3", (0, 1), (0, 1, 2))
    with pytest.raises(ValueError):
        Gate("RX", (0,), (0, 1, 2))


def test_parameter_counts():
    assert build_circuit("1-1").num_params == 9
    assert build_circuit("2-3-2").num_params == 57
    assert build_circuit("1-1", plus=True).num_params == 18
    for widths in [(1, 1), (2, 1), (1, 3, 2), (3, 3, 3)]:
        assert build_circuit(Architecture(widths)).num_params == standard_param_count(widths)


def test_layout_order():
    plan = build_circuit("2-1")
    text = plan.to_text().splitlines()
    assert text == [
        "# dqnn 2-1",
        "U3 0 0 1 2",
        "U3 1 3 4 5",
        "CAN 0 2 6 7 8",
        "CAN 1 2 9 10 11",
        "TRACE 0 1",
        "U3 2 12 13 14",
    ]


def test_plan_text_round_trip():
    for arch, plus in [("2-3-2", False), ("1-1", True), ("1-2-1", True)]:
        plan = build_circuit(arch, plus)
        assert CircuitPlan.from_text(plan.to_text()) == plan


def test_plan_text_errors():
    with pytest.raises(ValueError, match="line 2"):
        CircuitPlan.from_text("# dqnn 1-1\nFOO 1 2 3\n")
    with pytest.raises(ValueError, match="header"):
        CircuitPlan.from_text("U3 0 0 1 2\n")


def test_zero_parameters_give_zero_state(rng):
    plan = build_circuit("2-3-2")
    out = evaluate_circuit(plan, np.zeros(plan.num_params), random_pure_states(2, 1, rng)[0])
    expected = np.zeros((4, 4))
    expected[0, 0] = 1
    assert np.allclose(out, expected)


def test_swap_equivalent_parameters_copy_input(rng):
    # CAN(1/2, 1/2, 1/2) is SWAP up to a global phase; all u gates identity
    plan = build_circuit("1-1")
    params = np.zeros(plan.num_params)
    params[3:6] = 0.5
    for psi in random_pure_states(1, 5, rng):
        assert np.allclose(evaluate_circuit(plan, params, psi), to_density(psi), atol=1e-9)


@pytest.mark.parametrize("arch,plus", [("1-1", False), ("2-1", False), ("1-2-1", False), ("1-1", True)])
def test_circuit_matches_composed_perceptrons(arch, plus, rng):
    plan = build_circuit(arch, plus)
    for _ in range(10):
        params = init_params(plan, rng)
        net = circuit_to_perceptrons(plan, params)
        rho = to_density(random_pure_states(plan.widths[0], 1, rng)[0])
        assert np.allclose(evaluate_circuit(plan, params, rho), forward(rho, net), atol=1e-9)


def test_plus_with_wide_layer_has_no_perceptron_form():
    plan = build_circuit("1-2", plus=True)
    with pytest.raises(ValueError):
        circuit_to_perceptrons(plan, np.zeros(plan.num_params))


def test_evaluate_circuit_batched_params(rng):
    plan = build_circuit("1-2-1")
    stack = np.array([init_params(plan, rng) for _ in range(4)])
    rhos = np.array([to_density(s) for s in random_pure_states(1, 3, rng)])
    out = evaluate_circuit(plan, stack, rhos)
    assert out.shape == (4, 3, 2, 2)
    for p in range(4):
        assert np.allclose(out[p], evaluate_circuit(plan, stack[p], rhos))


def test_evaluate_circuit_errors(rng):
    plan = build_circuit("1-1")
    with pytest.raises(ValueError):
        evaluate_circuit(plan, np.zeros(5), ket("0"))
    with pytest.raises(ValueError):
        evaluate_circuit(plan, np.zeros(9), ket("00"))


def test_fd_gradient_constant_and_analytic():
    assert np.allclose(fd_gradient(lambda p: 3.0, np.ones(4)), 0)

    # u(pi t, 0, 0) = RY(pi t): <1|rho|1> = sin^2(pi t / 2)
    def loss(p):
        u = u3_gate(np.pi * p[0], 0, 0)
        return abs((u @ ket("0"))[1]) ** 2

    step = 1e-3
    grad = fd_gradient(loss, np.array([0.5]), step)
    exact = np.pi / 2 * np.sin(np.pi * 0.5)
    assert abs(grad[0] - exact) < step**2 * 5


def test_fd_gradient_second_order(rng):
    plan = build_circuit("1-2-1")
    params = init_params(plan, rng)
    rho = to_density(random_pure_states(1, 1, rng)[0])

    def loss(p):
        return evaluate_circuit(plan, p, rho)[1, 1].real

    reference = fd_gradient(loss, params, 1e-5)
    err1 = np.abs(fd_gradient(loss, params, 2e-2) - reference).max()
    err2 = np.abs(fd_gradient(loss, params, 1e-2) - reference).max()
    assert 3.5 < err1 / err2 < 4.5


def test_fd_gradient_batched_matches_loop(rng):
    plan = build_circuit("1-1", plus=True)
    params = init_params(plan, rng)
    rho = to_density(random_pure_states(1, 1, rng)[0])
    looped = fd_gradient(lambda p: evaluate_circuit(plan, p, rho)[1, 1].real, params)
    batched = fd_gradient(lambda p: evaluate_circuit(plan, p, rho)[:, 1, 1].real, params, batched=True)
    assert np.allclose(looped, batched, atol=1e-12)


def test_fd_gradient_errors():
    with pytest.raises(ValueError):
        fd_gradient(lambda p: 0.0, np.zeros(2), 0)
    with pytest.raises(FloatingPointError):
        fd_gradient(lambda p: np.nan, np.zeros(2))


def test_init_params_ranges(rng):
    plan = build_circuit("2-3-2")
    params = init_params(plan, rng)
    for gate in plan.gates:
        high = 2 if gate.kind == "CAN" else 2 * np.pi
        assert np.all((params[list(gate.slots)] >= 0) & (params[list(gate.slots)] < high))


def _circuit_run(seed, r_T):
    rng = np.random.default_rng(seed)
    model = CircuitGan.create(build_circuit("1-1", True), build_circuit("1-1", True), rng)
    data = data_line(20)
    hyper = CircuitHyper(r_T=r_T, r_D=2, S=4, V=10)
    return model, train_dqgan_q(model, data.states[::5], data.states, hyper, rng)


def test_train_dqgan_q_zero_epochs_and_determinism():
    model, (same, records) = _circuit_run(0, 0)
    assert same is model and records == []
    _, (m1, r1) = _circuit_run(1, 3)
    _, (m2, r2) = _circuit_run(1, 3)
    assert r1 == r2 and np.array_equal(m1.gen_params, m2.gen_params)
    assert [r.t for r in r1] == [1.0, 2.0, 3.0]


def test_circuit_discriminator_step_ascends(rng):
    # one gradient step with a small rate raises L_D on the same batch
    plan = build_circuit("1-1", True)
    for _ in range(5):
        model = CircuitGan.create(plan, plan, rng)
        inputs = random_pure_states(1, 4, rng)
        training = random_pure_states(1, 4, rng)
        grad = fd_gradient(lambda p: loss_D(replace(model, dis_params=p), inputs, training), model.dis_params)
        stepped = replace(model, dis_params=model.dis_params + 1e-3 * grad)
        assert loss_D(stepped, inputs, training) >= loss_D(model, inputs, training)


def test_circuit_gan_seam_check(rng):
    with pytest.raises(ValueError, match="width 2"):
        CircuitGan.create(build_circuit("1-2"), build_circuit("1-1"), rng)
