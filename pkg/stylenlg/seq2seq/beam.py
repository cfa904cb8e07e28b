"""Beam-search inference over a frozen parameter set."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import special

from ..errors import NoHypothesisWarning
from ..numerics import no_grad, take_rows
from ..textpipe import BOS_ID, EOS_ID, TokenSequence, Vocabulary
from .data import PreparedExample, make_batch
from .model import (
    DecoderState,
    ModelParams,
    constraint_input,
    decode_step,
    encode_batch,
    initial_state,
)


@dataclass(frozen=True)
class Hypothesis:
    ids: Tuple[int, ...]
    logp: float
    row: int = 0

    def score(self, length_normalize: bool) -> float:
        return self.logp / max(len(self.ids), 1) if length_normalize else self.logp


@dataclass(frozen=True)
class Generation:
    tokens: TokenSequence
    ids: Tuple[int, ...]
    score: float
    finished: bool


def _select(state: DecoderState, rows: np.ndarray) -> DecoderState:
    return DecoderState(
        [(take_rows(h, rows), take_rows(c, rows)) for h, c in state.hidden],
        take_rows(state.context, rows),
    )


def _best(hyps: List[Hypothesis], length_normalize: bool) -> Hypothesis:
    return min(hyps, key=lambda h: (-h.score(length_normalize), h.ids))


def beam_generate(
    params: ModelParams,
    example: PreparedExample,
    target_vocab: Vocabulary,
    beam_width: Optional[int] = None,
    max_len: int = 50,
    length_normalize: bool = True,
) -> Generation:
    """
    Keeps the `beam_width` best partial hypotheses by summed log-probability (ties go
    to the lower token-id sequence). A hypothesis that emits EOS is set aside and
    takes one slot of the beam with it; the search stops once every slot is
    finished or `max_len` tokens were produced. The best finished hypothesis by
    `logP / length` (or raw `logP`) wins. With `beam_width=1` this is greedy
    decoding.

    If nothing finished, the best unfinished hypothesis is returned with
    `finished=False` and a `NoHypothesisWarning` is issued.
    """
    width = beam_width if beam_width is not None else params.config.beam_width
    if width < 1:
        raise ValueError(f"beam_width must be >= 1, got {width}")

    with no_grad():
        batch = make_batch([example])
        c = constraint_input(batch)
        enc = encode_batch(params, batch, c)
        state = initial_state(params, enc)

        live = [Hypothesis((), 0.0)]
        finished: List[Hypothesis] = []
        tiled = {1: (enc, c)}

        for _ in range(max_len):
            slots = width - len(finished)
            if slots <= 0 or not live:
                break

            k = len(live)
            if k not in tiled:
                tiled[k] = (
                    enc.repeat(k),
                    None if c is None else take_rows(c, np.zeros(k, dtype=np.int64)),
                )
            enc_k, c_k = tiled[k]

            state = _select(state, np.array([h.row for h in live], dtype=np.int64))
            prev = np.array([h.ids[-1] if h.ids else BOS_ID for h in live])
            logits, state, _ = decode_step(params, state, prev, enc_k, c_k)

            totals = np.array([h.logp for h in live])[:, None] + special.log_softmax(
                logits.value, axis=-1
            )
            vocab = totals.shape[1]
            flat = totals.ravel()
            if flat.size > slots:
                cutoff = np.partition(flat, flat.size - slots)[flat.size - slots]
                candidates = np.flatnonzero(flat >= cutoff)
            else:
                candidates = np.arange(flat.size)
            ranked = sorted(
                candidates,
                key=lambda i: (-flat[i], live[i // vocab].ids + (int(i % vocab),)),
            )[:slots]

            next_live: List[Hypothesis] = []
            for i in ranked:
                row, token = divmod(int(i), vocab)
                hyp = Hypothesis(live[row].ids + (token,), float(flat[i]), row)
                (finished if token == EOS_ID else next_live).append(hyp)
            live = next_live

    if finished:
        best, done = _best(finished, length_normalize), True
    else:
        warnings.warn(
            f"no hypothesis reached EOS within {max_len} tokens", NoHypothesisWarning
        )
        best, done = _best(live, length_normalize), False

    ids = best.ids[:-1] if done else best.ids
    return Generation(
        TokenSequence(tuple(target_vocab.decode_all(ids))),
        ids,
        best.score(length_normalize),
        done,
    )


def greedy_generate(
    params: ModelParams,
    example: PreparedExample,
    target_vocab: Vocabulary,
    max_len: int = 50,
) -> Generation:
    """Arg-max decoding, one token at a time."""
    with no_grad():
        batch = make_batch([example])
        c = constraint_input(batch)
        enc = encode_batch(params, batch, c)
        state = initial_state(params, enc)
        ids: List[int] = []
        logp = 0.0
        prev = BOS_ID
        for _ in range(max_len):
            logits, state, _ = decode_step(params, state, np.array([prev]), enc, c)
            row = special.log_softmax(logits.value[0])
            prev = int(np.argmax(row))
            logp += float(row[prev])
            ids.append(prev)
            if prev == EOS_ID:
                break

    done = bool(ids) and ids[-1] == EOS_ID
    body = tuple(ids[:-1] if done else ids)
    return Generation(
        TokenSequence(tuple(target_vocab.decode_all(body))),
        body,
        logp / max(len(ids), 1),
        done,
    )


__all__ = ["Generation", "Hypothesis", "beam_generate", "greedy_generate"]
