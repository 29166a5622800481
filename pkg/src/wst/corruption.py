"""Synthetic transcript corruption and WER scoring.

The corruption procedure is pinned for reproducibility: every token draws an
independent Bernoulli(rate) corruption event; a substitution replaces the
token with a uniformly random *different* non-blank token, an insertion adds
a uniformly random non-blank token immediately after the current one, and a
deletion drops the token. ``mixed`` picks one of the three uniformly per
event. Randomness comes from NumPy's default PCG64 generator seeded from the
spec, so corpora are bit-reproducible; dataset-level corruption derives one
child seed per utterance index, keeping results independent of processing
order or thread count.
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .exceptions import EmptyReference
from .vocab import Vocab, validate_transcript

KINDS = ("sub", "ins", "del", "mixed")


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    rate: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"rate must be in [0, 1], got {self.rate}")


def _random_token(rng: np.random.Generator, vocab: Vocab) -> int:
    return int(rng.integers(1, vocab.size))


def _random_other_token(rng: np.random.Generator, vocab: Vocab, avoid: int) -> int:
    if vocab.size < 3:
        raise ValueError("substitution needs at least two distinct non-blank tokens")
    tok = int(rng.integers(1, vocab.size - 1))
    return tok + 1 if tok >= avoid else tok


def corrupt(
    vocab: Vocab,
    tokens: Sequence[int],
    spec: CorruptionSpec,
    rng: np.random.Generator = None,
) -> List[int]:
    """Apply the pinned corruption procedure to one transcript."""
    validate_transcript(vocab, tokens)
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    out: List[int] = []
    for tok in tokens:
        tok = int(tok)
        if rng.random() >= spec.rate:
            out.append(tok)
            continue
        kind = spec.kind
        if kind == "mixed":
            kind = ("sub", "ins", "del")[int(rng.integers(3))]
        if kind == "sub":
            out.append(_random_other_token(rng, vocab, tok))
        elif kind == "ins":
            out.append(tok)
            out.append(_random_token(rng, vocab))
        # "del": drop the token
    return out


def corrupt_dataset(
    vocab: Vocab,
    transcripts: Sequence[Sequence[int]],
    spec: CorruptionSpec,
) -> List[List[int]]:
    """Corrupt each transcript with a per-utterance derived seed.

    Utterance i uses PCG64 seeded from SeedSequence([spec.seed, i]), so the
    output is the same no matter how the work is ordered or sharded.
    """
    out = []
    for i, toks in enumerate(transcripts):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, i]))
        out.append(corrupt(vocab, toks, spec, rng=rng))
    return out


def edit_counts(ref: Sequence[int], hyp: Sequence[int]) -> Tuple[int, int, int]:
    """(substitutions, insertions, deletions) of a minimal edit alignment.

    Ties prefer substitution over insertion over deletion.
    """
    n, m = len(ref), len(hyp)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    op = [[""] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
        op[i][0] = "d"
    for j in range(1, m + 1):
        dist[0][j] = j
        op[0][j] = "i"
    for i in range(1, n + 1):
        ri = ref[i - 1]
        for j in range(1, m + 1):
            sub = dist[i - 1][j - 1] + (0 if ri == hyp[j - 1] else 1)
            ins = dist[i][j - 1] + 1
            dele = dist[i - 1][j] + 1
            best = min(sub, ins, dele)
            dist[i][j] = best
            if sub == best:
                op[i][j] = "m" if ri == hyp[j - 1] else "s"
            elif ins == best:
                op[i][j] = "i"
            else:
                op[i][j] = "d"
    subs = ins = dels = 0
    i, j = n, m
    while i > 0 or j > 0:
        o = op[i][j]
        if o in ("m", "s"):
            subs += o == "s"
            i -= 1
            j -= 1
        elif o == "i":
            ins += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    return subs, ins, dels


def wer(ref: Sequence[int], hyp: Sequence[int]) -> Tuple[float, int, int, int]:
    """(rate, subs, ins, dels) under a minimal edit alignment.

    The rate is (S + I + D) / len(ref); raises EmptyReference when the
    reference is empty.
    """
    if len(ref) == 0:
        raise EmptyReference("WER rate is undefined for an empty reference")
    subs, ins, dels = edit_counts(ref, hyp)
    return (subs + ins + dels) / len(ref), subs, ins, dels


def measure_corruption(
    vocab: Vocab,
    transcripts: Sequence[Sequence[int]],
    spec: CorruptionSpec,
) -> Dict[str, float]:
    """Realized error rates of the corruption procedure on a dataset.

    Rates are pooled over the corpus: total edit counts divided by the total
    reference token count, broken down by substitution / insertion / deletion.
    """
    corrupted = corrupt_dataset(vocab, transcripts, spec)
    total_tokens = 0
    subs = ins = dels = 0
    for clean, noisy in zip(transcripts, corrupted):
        s, i, d = edit_counts(clean, noisy)
        subs += s
        ins += i
        dels += d
        total_tokens += len(clean)
    denom = max(total_tokens, 1)
    return {
        "total_ref_tokens": total_tokens,
        "sub_count": subs,
        "ins_count": ins,
        "del_count": dels,
        "sub_rate": subs / denom,
        "ins_rate": ins / denom,
        "del_rate": dels / denom,
        "error_rate": (subs + ins + dels) / denom,
    }
