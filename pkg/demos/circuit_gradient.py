"""Circuit form of a dissipative network and its finite-difference training.

Run with ``python3 demos/circuit_gradient.py``. Shows that the circuit and the
perceptron form of the same network agree, then runs a short DQGAN_Q training.
"""

import numpy as np

from dqgan import datasets
from dqgan.dqnn import forward
from dqgan.linalg import random_pure_states, to_density
from dqgan.pqc import (
    CircuitGan,
    CircuitHyper,
    build_circuit,
    circuit_to_perceptrons,
    evaluate_circuit,
    init_params,
    train_dqgan_q,
)

rng = np.random.default_rng(1)

plan = build_circuit("2-1")
print(plan.to_text())
print("parameters:", plan.num_params)

# the same parameters as a circuit and as perceptron unitaries
params = init_params(plan, rng)
rho = to_density(random_pure_states(2, 1, rng)[0])
gap = np.abs(evaluate_circuit(plan, params, rho) - forward(rho, circuit_to_perceptrons(plan, params))).max()
print(f"circuit vs perceptrons: max deviation {gap:.1e}")

# a short adversarial run with the doubled 1-1+ layout
data = datasets.data_line(50)
train_idx, _ = datasets.select_training(data, 10, "equally_spaced")
model = CircuitGan.create(build_circuit("1-1", plus=True), build_circuit("1-1", plus=True), rng)
hyper = CircuitHyper(r_T=40, r_D=4, S=10, V=100)
model, records = train_dqgan_q(model, data.states[train_idx], data.states, hyper, rng)
for r in records[9::10]:
    print(f"epoch {r.epoch:>3}: L_D={r.loss_D:.4f} L_G={r.loss_G:.4f} L_V={r.loss_V:.4f}")
