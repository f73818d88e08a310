"""
Command-line experiment runner.

``dqgan run CONFIG [--set key=value ...]`` trains a model and writes the loss
curve plus diversity histograms as CSV files. ``dqgan bloch CONFIG --epoch K``
trains up to epoch ``K`` and exports Bloch coordinates of generated states.

A config is a flat text file of ``key = value`` lines; ``#`` starts a comment.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import secrets
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from dqgan import datasets
from dqgan.dqnn import Architecture
from dqgan.gan import DqganModel, TrainHyper, check_seam, diversity_histogram, train
from dqgan.linalg import bloch_vector, random_pure_states
from dqgan.pqc import CircuitGan, CircuitHyper, build_circuit, train_dqgan_q

log = logging.getLogger("dqgan")

OUTPUT_DIR_ENV = "DQGAN_OUTPUT_DIR"
TRAINING_HEADER = ["step_times_epsilon", "costFunctionDis", "costFunctionGen", "costFunctionTest"]
HISTOGRAM_HEADER = ["indexData", "countOut"]
BLOCH_HEADER = ["x", "y", "z"]


class ConfigError(ValueError):
    pass


def fmt(x: float) -> str:
    return f"{x:.12g}"


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(",", " ").split())


# value parser per config key
FIELDS: dict[str, Callable] = {
    "mode": str,
    "architecture": str,
    "dataset": str,
    "N": int,
    "selection": str,
    "S": int,
    "V": int,
    "r_T": int,
    "r_D": int,
    "r_G": int,
    "eta": float,
    "eta_D": float,
    "eta_G": float,
    "epsilon": float,
    "fd_step": float,
    "seed": int,
    "output_dir": str,
    "histogram_epochs": _int_list,
    "sample_count": int,
}


@dataclass
class ExperimentConfig:
    mode: str = "exact"
    architecture: str = "1-1|1-1"
    dataset: str = "line"
    N: int = 50
    selection: str = "random"
    S: int = 10
    V: int = 100
    r_T: int = 1000
    r_D: int = 1
    r_G: int = 1
    eta: float = 1.0
    eta_D: float = 0.5
    eta_G: float = 0.1
    epsilon: float = 0.01
    fd_step: float = 1e-3
    seed: int | None = None
    output_dir: str | None = None
    histogram_epochs: tuple[int, ...] = field(default_factory=tuple)
    sample_count: int = 100

    def validate(self) -> None:
        if self.mode not in ("exact", "circuit"):
            raise ConfigError(f"mode must be 'exact' or 'circuit', got {self.mode!r}")
        if self.selection not in ("random", "equally_spaced"):
            raise ConfigError(f"selection must be 'random' or 'equally_spaced', got {self.selection!r}")
        if self.dataset not in datasets.DATASETS:
            raise ConfigError(f"unknown dataset {self.dataset!r}; choose from {sorted(datasets.DATASETS)}")
        for name in ("S", "V", "sample_count"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        for name in ("r_T", "r_D", "r_G"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if any(k < 1 for k in self.histogram_epochs):
            raise ConfigError("histogram epochs must be positive")
        gen, dis = self.architectures()
        if self.mode == "exact" and (gen[1] or dis[1]):
            raise ConfigError("'+' circuit layouts are only available in circuit mode")
        try:
            check_seam(gen[0], dis[0])
        except ValueError as err:
            raise ConfigError(str(err)) from None

    def architectures(self) -> tuple[tuple[Architecture, bool], tuple[Architecture, bool]]:
        """``((gen, gen_plus), (dis, dis_plus))`` from ``"gen|dis"``."""
        parts = self.architecture.split("|")
        if len(parts) != 2:
            raise ConfigError(f"architecture must look like 'gen|dis', got {self.architecture!r}")
        out = []
        for part in parts:
            part = part.strip()
            plus = part.endswith("+")
            try:
                out.append((Architecture.parse(part.rstrip("+")), plus))
            except ValueError as err:
                raise ConfigError(str(err)) from None
        return out[0], out[1]

    def resolved_text(self) -> str:
        lines = []
        for key in FIELDS:
            value = getattr(self, key)
            if isinstance(value, tuple):
                value = ",".join(map(str, value))
            elif isinstance(value, float):
                value = fmt(value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def _set(values: dict, key: str, raw: str, where: str) -> None:
    if key not in FIELDS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    parse = FIELDS[key]
    try:
        values[key] = parse(raw)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} for {key}") from None


def parse_config(text: str, overrides: list[str] = (), source: str = "config") -> ExperimentConfig:
    """Read ``key = value`` lines, then apply ``key=value`` overrides in order."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        _set(values, key, value, f"{source}:{lineno}")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        _set(values, key, value, f"--set {item!r}")
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def resolve(cfg: ExperimentConfig) -> ExperimentConfig:
    """Fill in a fresh seed and the output directory when they are unset."""
    if cfg.seed is None:
        cfg.seed = secrets.randbits(63)
    if cfg.output_dir is None:
        cfg.output_dir = os.environ.get(OUTPUT_DIR_ENV, "runs")
    return cfg


# -- experiment ---------------------------------------------------------------

# independent streams per purpose, all derived from the config seed
_SPLIT, _INIT, _TRAIN, _HIST, _BLOCH = range(5)


@dataclass
class Experiment:
    cfg: ExperimentConfig
    dataset: datasets.StateDataset
    train_idx: np.ndarray
    model: object

    @classmethod
    def setup(cls, cfg: ExperimentConfig) -> "Experiment":
        try:
            data = datasets.load(cfg.dataset, cfg.N)
        except ValueError as err:
            raise ConfigError(str(err)) from None
        (gen, gen_plus), (dis, dis_plus) = cfg.architectures()
        if gen.widths[-1] != data.num_qubits:
            raise ConfigError(
                f"generator output width {gen.widths[-1]} does not match the "
                f"{data.num_qubits}-qubit dataset {cfg.dataset!r}"
            )
        if cfg.S > len(data):
            raise ConfigError(f"cannot pick S={cfg.S} training states from N={len(data)}")
        train_idx, _ = datasets.select_training(
            data, cfg.S, cfg.selection, np.random.default_rng([cfg.seed, _SPLIT])
        )
        init_rng = np.random.default_rng([cfg.seed, _INIT])
        if cfg.mode == "exact":
            model = DqganModel.create(gen, dis, init_rng)
        else:
            model = CircuitGan.create(build_circuit(gen, gen_plus), build_circuit(dis, dis_plus), init_rng)
        return cls(cfg, data, train_idx, model)

    def train(self, epochs: int, callback=None):
        cfg = self.cfg
        rng = np.random.default_rng([cfg.seed, _TRAIN])
        pool = self.dataset.states[self.train_idx]
        if cfg.mode == "exact":
            hyper = TrainHyper(epochs, cfg.r_D, cfg.r_G, cfg.S, cfg.V, cfg.eta, cfg.epsilon)
            return train(self.model, pool, self.dataset.states, hyper, rng, callback)
        hyper = CircuitHyper(epochs, cfg.r_D, cfg.r_G, cfg.S, cfg.V, cfg.eta_D, cfg.eta_G, cfg.fd_step)
        return train_dqgan_q(self.model, pool, self.dataset.states, hyper, rng, callback)

    def histogram(self, model, epoch: int):
        rng = np.random.default_rng([self.cfg.seed, _HIST, epoch])
        return diversity_histogram(model, self.cfg.sample_count, self.dataset.states, self.train_idx, rng)


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def training_csv(records) -> str:
    return _csv_text(
        TRAINING_HEADER,
        ([fmt(r.t), fmt(r.loss_D), fmt(r.loss_G), fmt(r.loss_V)] for r in records),
    )


def histogram_csvs(hist) -> tuple[str, str]:
    """Training and validation count tables with 1-based dataset indices."""
    out = []
    for idx, counts in (hist.training(), hist.validation()):
        out.append(_csv_text(HISTOGRAM_HEADER, ([i + 1, int(c)] for i, c in zip(idx, counts))))
    return out[0], out[1]


def bloch_export(model, sample_count: int, seed) -> str:
    """Bloch coordinates of ``sample_count`` generated states, one ``x,y,z`` row each.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts.
    """
    inputs = random_pure_states(model.input_qubits, sample_count, np.random.default_rng(seed))
    outputs = model.generate(np.array([np.outer(v, v.conj()) for v in inputs]))
    if outputs.shape[-1] != 2:
        raise ValueError(
            f"Bloch export needs a one-qubit generator output, got {outputs.shape[-1]}-dimensional states"
        )
    return _csv_text(BLOCH_HEADER, ([fmt(c) for c in row] for row in bloch_vector(outputs)))


def run(cfg: ExperimentConfig) -> Path:
    """Train and write every artifact; returns the output directory."""
    cfg = resolve(cfg)
    exp = Experiment.setup(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config_resolved").write_text(cfg.resolved_text())

    wanted = set(cfg.histogram_epochs)
    late = sorted(k for k in wanted if k > cfg.r_T)
    if late:
        log.warning("histogram epochs %s exceed r_T=%d and are skipped", late, cfg.r_T)

    def callback(epoch, model):
        if epoch in wanted:
            train_text, val_text = histogram_csvs(exp.histogram(model, epoch))
            (out / f"statistics_epoch{epoch}_training.csv").write_text(train_text)
            (out / f"statistics_epoch{epoch}_validation.csv").write_text(val_text)
        if epoch % 100 == 0:
            log.info("epoch %d / %d", epoch, cfg.r_T)

    _, records = exp.train(cfg.r_T, callback)
    (out / "training.csv").write_text(training_csv(records))
    return out


def bloch(cfg: ExperimentConfig, epoch: int) -> Path:
    """Train up to ``epoch`` and write ``bloch_epoch<k>.csv``."""
    cfg = resolve(cfg)
    if epoch < 0:
        raise ConfigError("epoch must be non-negative")
    exp = Experiment.setup(cfg)
    (gen, _), _ = cfg.architectures()
    if gen.widths[-1] != 1:
        raise ConfigError(f"Bloch export needs a one-qubit generator output, got width {gen.widths[-1]}")
    model, _ = exp.train(epoch)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"bloch_epoch{epoch}.csv"
    path.write_text(bloch_export(model, cfg.sample_count, [cfg.seed, _BLOCH, epoch]))
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dqgan", description="Train dissipative quantum GANs.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train and write loss curve and histograms")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides")

    p_bloch = sub.add_parser("bloch", help="export Bloch coordinates of generated states")
    p_bloch.add_argument("config", type=Path)
    p_bloch.add_argument("--epoch", type=int, required=True)
    p_bloch.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        text = args.config.read_text()
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text, args.overrides, source=str(args.config))
        if args.command == "run":
            out = run(cfg)
        else:
            out = bloch(cfg, args.epoch)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ValueError, FloatingPointError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(out)
    return 0
