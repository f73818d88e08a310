"""Train a 1-1 generator against a 1-1 discriminator on the line dataset.

Run with ``python3 demos/line_exact.py``. Prints the loss curve every 50
epochs and the coverage of the dataset by 100 generated samples at the end.
"""

import numpy as np

from dqgan import datasets
from dqgan.gan import DqganModel, TrainHyper, diversity_histogram, train

rng = np.random.default_rng(0)

# 50 single-qubit states running from |0> to |1>
data = datasets.data_line(50)
train_idx, val_idx = datasets.select_training(data, 10, "random", rng)
print("training indices (1-based):", list(train_idx + 1))

model = DqganModel.create("1-1", "1-1", rng)
hyper = TrainHyper(r_T=400, S=10, V=100, eta=1.0, epsilon=0.01)
model, records = train(model, data.states[train_idx], data.states, hyper, rng)

print(f"{'epoch':>6} {'L_D':>8} {'L_G':>8} {'L_V':>8}")
for r in records[49::50]:
    print(f"{r.epoch:>6} {r.loss_D:8.4f} {r.loss_G:8.4f} {r.loss_V:8.4f}")

hist = diversity_histogram(model, 100, data.states, train_idx, rng)
print(f"coverage after {hyper.r_T} epochs: {hist.coverage:.0%}")
# counts per dataset index, as a crude text bar chart
for i, c in enumerate(hist.counts):
    if c:
        print(f"{i + 1:>3} {'#' * int(c)}")
