"""Skip-gram with negative sampling over walk corpora.

Two float64 matrices are trained with plain SGD: input vectors (the
embeddings that get exported) and context vectors (initialized to
zero).  For a center u and context v with negatives n_j the objective
per pair is

    J = log sigmoid(u . v) + sum_j log sigmoid(-u . n_j)

maximized by ascending its exact gradients.  Negatives are drawn from
the unigram distribution raised to a configurable exponent.  The
learning rate decays linearly over the total number of pair updates,
never below a floor.

Single-threaded training is bit-for-bit deterministic for a given
corpus and seed.  With threads > 1 the walks are split across worker
threads that update the shared matrices without locks, which trades
determinism away.
"""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .walks import WalkCorpus

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 128
    window: int = 5
    negatives: int = 7
    epochs: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    neg_exponent: float = 0.75
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be at least 1")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if self.negatives < 0:
            raise ValueError("negatives must be non-negative")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.min_learning_rate <= self.learning_rate:
            raise ValueError("min_learning_rate must lie in [0, learning_rate]")
        if self.neg_exponent < 0:
            raise ValueError("neg_exponent must be non-negative")


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    # log sigmoid(x) = -log(1 + exp(-x)), computed stably
    return -np.logaddexp(0.0, -x)


def sgns_loss(
    center: np.ndarray,
    context: np.ndarray,
    negatives: Sequence[np.ndarray] | np.ndarray,
) -> float:
    """The objective J for one training pair; larger is better."""
    center = np.asarray(center, dtype=np.float64)
    context = np.asarray(context, dtype=np.float64)
    negatives = np.asarray(negatives, dtype=np.float64).reshape(-1, center.shape[0])
    value = float(_log_sigmoid(center @ context))
    if negatives.size:
        value += float(_log_sigmoid(-(negatives @ center)).sum())
    return value


def sgns_gradients(
    center: np.ndarray,
    context: np.ndarray,
    negatives: Sequence[np.ndarray] | np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ascent gradients of J with respect to (center, context, negatives)."""
    center = np.asarray(center, dtype=np.float64)
    context = np.asarray(context, dtype=np.float64)
    negatives = np.asarray(negatives, dtype=np.float64).reshape(-1, center.shape[0])
    pos_coeff = 1.0 - float(sigmoid(center @ context))
    grad_center = pos_coeff * context
    grad_context = pos_coeff * center
    grad_negatives = np.zeros_like(negatives)
    if negatives.size:
        neg_coeff = sigmoid(negatives @ center)
        grad_center = grad_center - neg_coeff @ negatives
        grad_negatives = -neg_coeff[:, None] * center[None, :]
    return grad_center, grad_context, grad_negatives


def _pair_positions(length: int, window: int) -> Iterator[tuple[int, int]]:
    for t in range(length):
        for offset in range(-window, window + 1):
            s = t + offset
            if offset != 0 and 0 <= s < length:
                yield t, s


def positive_pairs(corpus: WalkCorpus, window: int) -> Iterator[tuple[str, str]]:
    """(center, context) node pairs within the window, walk by walk."""
    if window < 1:
        raise ValueError("window must be at least 1")
    for walk in corpus.walks:
        for t, s in _pair_positions(len(walk), window):
            yield walk[t], walk[s]


class NegativeSampler:
    """Draws vocabulary indices from counts raised to an exponent."""

    def __init__(self, counts: np.ndarray, exponent: float = 0.75) -> None:
        counts = np.asarray(counts, dtype=np.float64)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("counts must be a non-empty 1-d array")
        if np.any(counts <= 0):
            raise ValueError("all counts must be positive")
        weights = counts**exponent
        self.probabilities = weights / weights.sum()
        self._cumulative = np.cumsum(self.probabilities)

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        """Indices sampled i.i.d. from the smoothed unigram distribution."""
        picks = np.searchsorted(self._cumulative, rng.random(shape), side="right")
        return np.minimum(picks, len(self.probabilities) - 1)


@dataclass
class EmbeddingMatrix:
    """Trained vocabulary with input (exported) and context vectors."""

    vocab: list[str]
    input_vectors: np.ndarray
    context_vectors: np.ndarray
    epoch_losses: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._index = {node: i for i, node in enumerate(self.vocab)}
        if len(self._index) != len(self.vocab):
            raise ValueError("duplicate node ids in vocabulary")
        if self.input_vectors.shape != (len(self.vocab), self.dim):
            raise ValueError("input matrix shape does not match vocabulary")

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._index

    def __len__(self) -> int:
        return len(self.vocab)

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def vector(self, node_id: str) -> np.ndarray:
        try:
            return self.input_vectors[self._index[node_id]]
        except KeyError:
            raise KeyError(f"node {node_id!r} not in embedding vocabulary") from None

    def save(self, path: str | Path) -> None:
        """Export the input matrix in the text embedding format."""
        write_vectors(path, self.vocab, self.input_vectors)

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingMatrix":
        """Read an exported matrix; context vectors come back as zeros."""
        ids, matrix = read_vectors(path)
        return cls(vocab=ids, input_vectors=matrix, context_vectors=np.zeros_like(matrix))


def write_vectors(path: str | Path, ids: Sequence[str], matrix: np.ndarray) -> None:
    """Text format: "<count> <dim>" header, then "<id> <v1> ... <vd>" rows.

    Floats are written with repr, which round-trips float64 exactly.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise ValueError("matrix shape does not match id count")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"{len(ids)} {matrix.shape[1]}\n")
        for node_id, row in zip(ids, matrix):
            fh.write(node_id + " " + " ".join(repr(float(v)) for v in row) + "\n")


def read_vectors(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Parse the text embedding format, validating counts and row widths."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: malformed header")
        count, dim = int(header[0]), int(header[1])
        ids: list[str] = []
        rows: list[list[float]] = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"{path}:{lineno}: expected {dim} values")
            ids.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
    if len(ids) != count:
        raise ValueError(f"{path}: header promised {count} rows, found {len(ids)}")
    if len(set(ids)) != len(ids):
        raise ValueError(f"{path}: duplicate node ids")
    matrix = np.asarray(rows, dtype=np.float64).reshape(len(ids), dim)
    return ids, matrix


def _walk_pair_arrays(
    walk_ids: np.ndarray, window: int
) -> tuple[np.ndarray, np.ndarray]:
    positions = list(_pair_positions(len(walk_ids), window))
    if not positions:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    t_idx, s_idx = zip(*positions)
    return walk_ids[list(t_idx)], walk_ids[list(s_idx)]


class _Trainer:
    def __init__(self, corpus: WalkCorpus, config: TrainConfig) -> None:
        self.config = config
        self.vocab = corpus.vocabulary()
        if not self.vocab:
            raise ValueError("empty walk corpus")
        index = {node: i for i, node in enumerate(self.vocab)}
        counts = np.zeros(len(self.vocab), dtype=np.float64)
        self.pairs: list[tuple[np.ndarray, np.ndarray]] = []
        for walk in corpus.walks:
            ids = np.asarray([index[node] for node in walk], dtype=np.int64)
            np.add.at(counts, ids, 1.0)
            centers, contexts = _walk_pair_arrays(ids, config.window)
            if len(centers):
                self.pairs.append((centers, contexts))
        self.sampler = NegativeSampler(counts, config.neg_exponent)
        init_rng = np.random.default_rng(np.random.SeedSequence((config.rng_seed, 0)))
        d = config.dim
        self.win = (init_rng.random((len(self.vocab), d)) - 0.5) / d
        self.wout = np.zeros((len(self.vocab), d), dtype=np.float64)
        self.pairs_per_epoch = sum(len(c) for c, _ in self.pairs)
        self.total_updates = self.pairs_per_epoch * config.epochs
        self.progress = 0
        self.epoch_losses: list[float] = []

    def _learning_rate(self) -> float:
        cfg = self.config
        remaining = 1.0 - self.progress / self.total_updates
        return max(cfg.min_learning_rate, cfg.learning_rate * remaining)

    def _train_span(
        self,
        spans: Sequence[tuple[np.ndarray, np.ndarray]],
        rng: np.random.Generator,
        sink: list[float],
    ) -> None:
        cfg = self.config
        n_neg = cfg.negatives
        win, wout = self.win, self.wout
        labels = np.zeros(n_neg + 1, dtype=np.float64)
        labels[0] = 1.0
        targets = np.empty(n_neg + 1, dtype=np.int64)
        total = 0.0
        for centers, contexts in spans:
            negs = self.sampler.draw(rng, (len(centers), n_neg)) if n_neg else None
            for k in range(len(centers)):
                lr = self._learning_rate()
                self.progress += 1
                u = win[centers[k]]
                if negs is None:
                    s = float(u @ wout[contexts[k]])
                    total += float(_log_sigmoid(np.float64(s)))
                    coeff = (1.0 - 1.0 / (1.0 + np.exp(-s))) * lr
                    grad_u = coeff * wout[contexts[k]]
                    wout[contexts[k]] += coeff * u
                    win[centers[k]] = u + grad_u
                    continue
                targets[0] = contexts[k]
                targets[1:] = negs[k]
                rows = wout[targets]
                scores = rows @ u
                total += float(_log_sigmoid(scores[0]) + _log_sigmoid(-scores[1:]).sum())
                coeffs = (labels - 1.0 / (1.0 + np.exp(-scores))) * lr
                np.add.at(wout, targets, coeffs[:, None] * u)
                win[centers[k]] = u + coeffs @ rows
        sink.append(total)

    def run_epoch(self, epoch: int, threads: int) -> None:
        cfg = self.config
        losses: list[float] = []
        if threads <= 1:
            rng = np.random.default_rng(np.random.SeedSequence((cfg.rng_seed, 1, epoch)))
            self._train_span(self.pairs, rng, losses)
        else:
            spans = [self.pairs[t::threads] for t in range(threads)]
            workers = []
            for t, span in enumerate(spans):
                rng = np.random.default_rng(
                    np.random.SeedSequence((cfg.rng_seed, 1, epoch, t))
                )
                worker = threading.Thread(
                    target=self._train_span, args=(span, rng, losses)
                )
                workers.append(worker)
                worker.start()
            for worker in workers:
                worker.join()
        mean = sum(losses) / self.pairs_per_epoch if self.pairs_per_epoch else 0.0
        if not np.isfinite(mean):
            raise RuntimeError(f"epoch {epoch}: objective diverged ({mean})")
        self.epoch_losses.append(mean)


def train(corpus: WalkCorpus, config: TrainConfig, threads: int = 1) -> EmbeddingMatrix:
    """Train embeddings over the walk corpus.

    With ``threads=1`` the result is deterministic: pairs are visited in
    corpus order and every random draw comes from streams derived from
    the seed.  More threads split walks across lock-free workers.
    """
    if threads < 1:
        raise ValueError("threads must be at least 1")
    trainer = _Trainer(corpus, config)
    if trainer.total_updates == 0:
        logger.warning("corpus has no training pairs; returning initial vectors")
        trainer.epoch_losses = [0.0] * config.epochs
    else:
        for epoch in range(config.epochs):
            trainer.run_epoch(epoch, threads)
            logger.info(
                "epoch %d/%d: mean objective %.6f",
                epoch + 1,
                config.epochs,
                trainer.epoch_losses[-1],
            )
    return EmbeddingMatrix(
        vocab=trainer.vocab,
        input_vectors=trainer.win,
        context_vectors=trainer.wout,
        epoch_losses=trainer.epoch_losses,
    )
