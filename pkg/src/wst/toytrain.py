"""Minimal trainable transducer for desk-scale experiments.

The model mirrors the encoder / decoder / joiner factorization: a linear
encoder over per-frame features, a one-token embedding table as the stateless
decoder (the context for row u is just the previous transcript token, blank
for u=0), and an additive joiner h = tanh(f + g) followed by a linear
classification layer. All weights for a lattice — including star weights —
are read from the single logit tensor computed for the nominal transcript, so
no per-path decoder state exists anywhere.

Training is plain mini-batch gradient descent (optional momentum), fully
deterministic given the seeds: fixed shuffles, shape-grouped batches, and
sequential reductions.
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .corruption import CorruptionSpec, corrupt_dataset, edit_counts, measure_corruption
from .exceptions import Divergence, ShapeMismatch
from .graphs import PenaltyConfig
from .loss import batched_grid_loss
from .vocab import Vocab

Utterance = Tuple[np.ndarray, List[int]]


@dataclass(frozen=True)
class ToyTask:
    """Synthetic task: token one-hots repeated per frame plus Gaussian noise."""

    vocab_size: int = 11
    frames_per_token: int = 3
    feature_noise: float = 0.2
    min_len: int = 3
    max_len: int = 8
    train_size: int = 400
    eval_size: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.frames_per_token < 1:
            raise ValueError("frames_per_token must be >= 1")
        if self.feature_noise < 0:
            raise ValueError("feature_noise must be >= 0")

    @property
    def feature_dim(self) -> int:
        return self.vocab_size - 1


@dataclass(frozen=True)
class ExperimentConfig:
    task: ToyTask = field(default_factory=ToyTask)
    corruption: CorruptionSpec = field(default_factory=lambda: CorruptionSpec("sub", 0.0, 7))
    criterion: str = "rnnt"
    penalties: PenaltyConfig = field(default_factory=lambda: PenaltyConfig(0.0, 0.0))
    hidden: int = 32
    learning_rate: float = 0.1
    epochs: int = 60
    batch_size: int = 64
    momentum: float = 0.0
    max_symbols_per_frame: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")
        if self.criterion not in ("rnnt", "wst"):
            raise ValueError(f"criterion must be 'rnnt' or 'wst', got {self.criterion!r}")


@dataclass
class ToyModelParams:
    encoder: np.ndarray       # [H, D]
    decoder_embed: np.ndarray  # [V, H]
    joiner_w: np.ndarray       # [V, H]
    joiner_b: np.ndarray       # [V]

    def copy(self) -> "ToyModelParams":
        return ToyModelParams(*(f.copy() for f in self.fields()))

    def fields(self) -> Tuple[np.ndarray, ...]:
        return (self.encoder, self.decoder_embed, self.joiner_w, self.joiner_b)


def _gen_split(task: ToyTask, rng: np.random.Generator, count: int) -> List[Utterance]:
    utts = []
    for _ in range(count):
        length = int(rng.integers(task.min_len, task.max_len + 1))
        toks = [int(t) for t in rng.integers(1, task.vocab_size, size=length)]
        feats = np.zeros((length * task.frames_per_token, task.feature_dim))
        for u, tok in enumerate(toks):
            feats[u * task.frames_per_token:(u + 1) * task.frames_per_token, tok - 1] = 1.0
        if task.feature_noise > 0:
            feats = feats + task.feature_noise * rng.standard_normal(feats.shape)
        utts.append((feats, toks))
    return utts


def generate_task_data(task: ToyTask) -> Tuple[List[Utterance], List[Utterance]]:
    """(train, eval) utterances, deterministic given task.seed.

    Eval transcripts are never corrupted; corruption is applied by the trainer
    to the training side only.
    """
    train_rng = np.random.default_rng(np.random.SeedSequence([task.seed, 0]))
    eval_rng = np.random.default_rng(np.random.SeedSequence([task.seed, 1]))
    return _gen_split(task, train_rng, task.train_size), _gen_split(task, eval_rng, task.eval_size)


def init_params(task: ToyTask, hidden: int, seed: int) -> ToyModelParams:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    d = task.feature_dim
    v = task.vocab_size
    return ToyModelParams(
        encoder=rng.standard_normal((hidden, d)) / np.sqrt(d),
        decoder_embed=rng.standard_normal((v, hidden)) * 0.5,
        joiner_w=rng.standard_normal((v, hidden)) / np.sqrt(hidden),
        joiner_b=np.zeros(v),
    )


def forward(params: ToyModelParams, features: np.ndarray, tokens: Sequence[int]) -> np.ndarray:
    """Logit tensor [T][U+1][|V|] for one utterance."""
    logits, _, _ = _forward_batch(params, features[None], np.asarray([list(tokens)], dtype=int))
    return logits[0]


def _forward_batch(params: ToyModelParams, xs: np.ndarray, ys: np.ndarray):
    """xs: [B, T, D]; ys: [B, U]. Returns (logits, tanh activations, contexts)."""
    if xs.shape[-1] != params.encoder.shape[1]:
        raise ShapeMismatch(
            f"feature dim {xs.shape[-1]} does not match encoder input {params.encoder.shape[1]}")
    f = xs @ params.encoder.T                       # [B, T, H]
    b_sz, u_len = ys.shape
    ctx = np.concatenate([np.zeros((b_sz, 1), dtype=int), ys], axis=1)  # blank-prefixed
    g = params.decoder_embed[ctx]                   # [B, U+1, H]
    h = np.tanh(f[:, :, None, :] + g[:, None, :, :])
    logits = h @ params.joiner_w.T + params.joiner_b
    return logits, h, ctx


def _backward_batch(params: ToyModelParams, xs, ctx, h, dlogits) -> ToyModelParams:
    """Gradient of sum-loss with respect to the parameters."""
    db = dlogits.sum(axis=(0, 1, 2))
    dw = np.einsum("btuv,btuh->vh", dlogits, h)
    dh = dlogits @ params.joiner_w                  # [B, T, U+1, H]
    dpre = dh * (1.0 - h * h)
    df = dpre.sum(axis=2)                           # [B, T, H]
    dg = dpre.sum(axis=1)                           # [B, U+1, H]
    denc = np.einsum("bth,btd->hd", df, xs)
    dembed = np.zeros_like(params.decoder_embed)
    np.add.at(dembed, ctx, dg)
    return ToyModelParams(denc, dembed, dw, db)


def _shape_grouped_batches(
    utts: List[Utterance], order: np.ndarray, batch_size: int
) -> List[List[int]]:
    groups: Dict[Tuple[int, int], List[int]] = {}
    for i in order:
        feats, toks = utts[i]
        groups.setdefault((feats.shape[0], len(toks)), []).append(int(i))
    batches = []
    for key in sorted(groups):
        idxs = groups[key]
        for s in range(0, len(idxs), batch_size):
            batches.append(idxs[s:s + batch_size])
    return batches


def train(config: ExperimentConfig) -> Tuple[ToyModelParams, List[float]]:
    """Mini-batch gradient descent on (possibly corrupted) training transcripts.

    Returns the trained parameters and the per-epoch mean training loss.
    Deterministic given the seeds in the config; raises Divergence on a
    non-finite loss.
    """
    task = config.task
    vocab = Vocab(task.vocab_size)
    train_set, _ = generate_task_data(task)
    clean = [toks for _, toks in train_set]
    noisy = corrupt_dataset(vocab, clean, config.corruption)
    utts = [(feats, toks) for (feats, _), toks in zip(train_set, noisy)]

    params = init_params(task, config.hidden, task.seed)
    velocity = ToyModelParams(*(np.zeros_like(f) for f in params.fields()))
    curve: List[float] = []
    for epoch in range(config.epochs):
        rng = np.random.default_rng(np.random.SeedSequence([task.seed, 3, epoch]))
        order = rng.permutation(len(utts))
        batches = _shape_grouped_batches(utts, order, config.batch_size)
        loss_sum = 0.0
        for b_idx, batch in enumerate(batches):
            xs = np.stack([utts[i][0] for i in batch])
            ys = np.asarray([utts[i][1] for i in batch], dtype=int).reshape(len(batch), -1)
            logits, h, ctx = _forward_batch(params, xs, ys)
            losses, dlogits = batched_grid_loss(
                logits, ys, criterion=config.criterion, penalties=config.penalties)
            if not np.all(np.isfinite(losses)):
                raise Divergence(epoch, b_idx)
            loss_sum += float(losses.sum())
            grads = _backward_batch(params, xs, ctx, h, dlogits / len(batch))
            for p, g, v in zip(params.fields(), grads.fields(), velocity.fields()):
                if config.momentum > 0:
                    v *= config.momentum
                    v += g
                    g = v
                p -= config.learning_rate * g
        curve.append(loss_sum / len(utts))
    return params, curve


def greedy_decode(
    params: ToyModelParams, features: np.ndarray, max_symbols_per_frame: int = 4
) -> List[int]:
    """Frame-synchronous greedy search; never emits blank or star.

    Emits the argmax token while it is non-blank (updating the one-token
    context and staying on the frame, up to the per-frame cap), otherwise
    advances to the next frame.
    """
    if max_symbols_per_frame < 1:
        raise ValueError("max_symbols_per_frame must be >= 1")
    f = features @ params.encoder.T
    out: List[int] = []
    ctx = 0  # blank context
    for t in range(f.shape[0]):
        for _ in range(max_symbols_per_frame):
            h = np.tanh(f[t] + params.decoder_embed[ctx])
            logits = params.joiner_w @ h + params.joiner_b
            best = int(np.argmax(logits))
            if best == 0:
                break
            out.append(best)
            ctx = best
    return out


def evaluate(
    params: ToyModelParams, eval_set: List[Utterance], max_symbols_per_frame: int = 4
) -> float:
    """Pooled WER over the eval set: total edits / total reference tokens."""
    edits = 0
    total = 0
    for feats, toks in eval_set:
        hyp = greedy_decode(params, feats, max_symbols_per_frame)
        s, i, d = edit_counts(toks, hyp)
        edits += s + i + d
        total += len(toks)
    return edits / max(total, 1)


def run_experiment(config: ExperimentConfig) -> Dict:
    """Train, greedily decode the clean eval set, and report metrics.

    The report is a plain JSON-serializable dict; identical configs produce
    identical reports.
    """
    params, curve = train(config)
    _, eval_set = generate_task_data(config.task)
    eval_wer = evaluate(params, eval_set, config.max_symbols_per_frame)
    clean_train = [toks for _, toks in generate_task_data(config.task)[0]]
    realized = measure_corruption(Vocab(config.task.vocab_size), clean_train, config.corruption)
    return {
        "config": config_to_dict(config),
        "criterion": config.criterion,
        "epochs": curve,
        "eval_wer": eval_wer,
        "realized_error_rate": realized["error_rate"],
    }


def config_to_dict(config: ExperimentConfig) -> Dict:
    d = dataclasses.asdict(config)
    return d


def config_from_dict(d: Dict) -> ExperimentConfig:
    d = dict(d)
    if "task" in d:
        d["task"] = ToyTask(**d["task"])
    if "corruption" in d:
        d["corruption"] = CorruptionSpec(**d["corruption"])
    if "penalties" in d:
        p = d["penalties"]
        d["penalties"] = PenaltyConfig(**{k: float(v) for k, v in p.items()})
    return ExperimentConfig(**d)
