"""Training sets of pure states and train/validation splits."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Literal

import numpy as np

from dqgan.linalg import num_qubits as _num_qubits

Policy = Literal["random", "equally_spaced"]


@dataclass(frozen=True, eq=False)
class StateDataset:
    """Ordered pure states; row ``i`` is the element with (1-based) index ``i + 1``."""

    name: str
    states: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=complex)
        if states.ndim != 2 or len(states) == 0:
            raise ValueError("a dataset is a non-empty (N, 2**n) array of state vectors")
        _num_qubits(states.shape[1])
        norms = np.linalg.norm(states, axis=1)
        if not np.allclose(norms, 1.0, rtol=0, atol=1e-12):
            raise ValueError("dataset states must be normalised")
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def num_qubits(self) -> int:
        return _num_qubits(self.states.shape[1])

    def to_csv(self) -> str:
        """CSV text with an ``index`` column and real/imaginary amplitude columns."""
        dim = self.states.shape[1]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index"] + [f"{part}_{k}" for k in range(dim) for part in ("re", "im")])
        for i, psi in enumerate(self.states, start=1):
            row = [str(i)]
            for a in psi:
                row += [f"{a.real:.17g}", f"{a.imag:.17g}"]
            writer.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, name: str = "csv") -> "StateDataset":
        rows = list(csv.reader(io.StringIO(text)))
        body = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
        return cls(name, body[:, 0::2] + 1j * body[:, 1::2])


def _normalise(rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=complex)
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def _check_line_size(n: int) -> None:
    if n < 2:
        raise ValueError(f"need at least two states, got N={n}")


def data_line(n: int = 50) -> StateDataset:
    """``N`` one-qubit states on the arc from ``|0>`` to ``|1>``: ``(N-x)|0> + (x-1)|1>``."""
    _check_line_size(n)
    x = np.arange(1, n + 1)
    return StateDataset("line", _normalise(np.stack([n - x, x - 1], axis=1)))


def data_line_prime(n: int = 50) -> StateDataset:
    """Three-qubit version of :func:`data_line` on ``|000>`` and ``|001>``."""
    _check_line_size(n)
    x = np.arange(1, n + 1)
    rows = np.zeros((n, 8))
    rows[:, 0] = n - x
    rows[:, 1] = x - 1
    return StateDataset("line_prime", _normalise(rows))


def _cluster_ranges(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n < 4 or n % 2:
        raise ValueError(f"cluster datasets need an even N >= 4, got N={n}")
    return np.arange(1, n // 2 + 1), np.arange(3 * n // 2, 2 * n + 1)


def data_cl(n: int = 50, symmetric: bool = False) -> StateDataset:
    """Two clusters of one-qubit states, ``N + 1`` states in total.

    Both ranges ``x = 1..N/2`` and ``x = 3N/2..2N`` use
    ``(2N-1)|0> + (x-1)|1>``. With ``symmetric=True`` the second range uses
    ``(x-1)|0> + (2N-1)|1>`` instead, which places the second cluster near
    ``|1>``.
    """
    first, second = _cluster_ranges(n)
    a = np.stack([np.full(len(first), 2 * n - 1), first - 1], axis=1)
    if symmetric:
        b = np.stack([second - 1, np.full(len(second), 2 * n - 1)], axis=1)
    else:
        b = np.stack([np.full(len(second), 2 * n - 1), second - 1], axis=1)
    name = "cl_sym" if symmetric else "cl"
    return StateDataset(name, _normalise(np.concatenate([a, b])))


def data_cl_plus(n: int = 50, symmetric: bool = False) -> StateDataset:
    """:func:`data_cl` with its middle element replaced by ``(|0> + |1>)/sqrt(2)``."""
    base = data_cl(n, symmetric)
    states = base.states.copy()
    states[len(states) // 2] = np.array([1, 1]) / np.sqrt(2)
    return StateDataset(base.name.replace("cl", "cl_plus"), states)


DATASETS = {
    "line": data_line,
    "line_prime": data_line_prime,
    "cl": data_cl,
    "cl_sym": lambda n: data_cl(n, symmetric=True),
    "cl_plus": data_cl_plus,
    "cl_plus_sym": lambda n: data_cl_plus(n, symmetric=True),
}


def load(name: str, n: int) -> StateDataset:
    try:
        return DATASETS[name](n)
    except KeyError:
        raise ValueError(f"unknown dataset {name!r}; choose from {sorted(DATASETS)}") from None


def equally_spaced_indices(n: int, s: int) -> np.ndarray:
    """0-based indices ``round(k (N-1)/(S-1))``, halves rounded up, duplicates dropped."""
    if s == 1:
        return np.array([0])
    k = np.arange(s)
    return np.unique(np.floor(k * (n - 1) / (s - 1) + 0.5).astype(int))


def select_training(
    dataset: StateDataset | int,
    s: int,
    policy: Policy = "random",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Split dataset indices (0-based) into training and validation parts.

    ``random`` shuffles and keeps the first ``S``; ``equally_spaced`` spreads
    ``S`` indices evenly over the dataset. Both returned arrays are sorted.
    """
    n = dataset if isinstance(dataset, int) else len(dataset)
    if not 1 <= s <= n:
        raise ValueError(f"cannot pick S={s} training states from N={n}")
    if policy == "random":
        if rng is None:
            raise ValueError("the random policy needs a generator")
        train = rng.permutation(n)[:s]
    elif policy == "equally_spaced":
        train = equally_spaced_indices(n, s)
    else:
        raise ValueError(f"unknown selection policy {policy!r}")
    train = np.sort(train)
    return train, np.setdiff1d(np.arange(n), train)
