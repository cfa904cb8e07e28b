"""
End-to-end checks that train real (if small) models. They take minutes, so they are
deselected by default; run them with `pytest -m acceptance`.
"""
import shutil
import warnings
from pathlib import Path
from typing import List, Sequence, Tuple

import pytest

from stylenlg.errors import NoHypothesisWarning
from stylenlg.metrics import MarkerCategory, bleu, marker_correlations, marker_counts
from stylenlg.mr import (
    FINE_PARAM_COUNT,
    DatasetRecord,
    Granularity,
    Personality,
    StyleConstraint,
    parse_mr,
)
from stylenlg.numerics import RngState
from stylenlg.processed import build_vocabularies
from stylenlg.seq2seq import (
    Method,
    ModelConfig,
    ModelParams,
    PreparedDataset,
    Task,
    TrainingConfig,
    Vocabularies,
    beam_generate,
    prepare_records,
    train,
)
from stylenlg.textpipe import relexicalize

from .conftest import FOODS, STYLE, toy_records

pytestmark = pytest.mark.acceptance

DELEX = ("name", "near")


def _fit(
    records: Sequence[DatasetRecord],
    config: ModelConfig,
    training: TrainingConfig,
    seed: int = 1,
) -> Tuple[ModelParams, Vocabularies, float]:
    vocabs = build_vocabularies(records, DELEX, 1)
    examples = prepare_records(records, vocabs, config, DELEX)
    dataset = PreparedDataset(examples, [], vocabs)
    result = train(dataset, config, training, RngState(seed))
    return result.params, vocabs, result.best_dev_perplexity


def _generate(
    params: ModelParams, vocabs: Vocabularies, records: Sequence[DatasetRecord]
) -> List[str]:
    examples = prepare_records(
        records, vocabs, params.config, DELEX, with_targets=False
    )
    outputs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoHypothesisWarning)
        for example in examples:
            gen = beam_generate(params, example, vocabs.target, beam_width=3, max_len=30)
            outputs.append(relexicalize(gen.tokens, example.delex))
    return outputs


def test_overfit_reproduces_every_reference():
    records = toy_records(50)
    config = ModelConfig(
        rnn_size=48, embed_size=24, method=Method.M3, dropout_p=0.0, batch_size=10
    )
    training = TrainingConfig(learning_rate=1.0, max_epochs=300, lr_decay=0.9)

    params, vocabs, train_ppl = _fit(records, config, training)

    assert train_ppl < 1.1
    examples = prepare_records(records, vocabs, config, DELEX)
    for example in examples:
        gen = beam_generate(params, example, vocabs.target, beam_width=3, max_len=30)
        assert gen.ids == example.target_ids[1:-1]


def _toggle_corpus(count: int, offset: int = 0) -> List[DatasetRecord]:
    """The contrast bit alone decides whether a realization ends in '!'."""
    records = []
    for i in range(count):
        food = FOODS[(i // 2) % len(FOODS)]
        bit = bool(i % 2)
        ref = f"place{offset + i} serves {food.lower()} food {'!' if bit else '.'}"
        records.append(
            DatasetRecord(
                parse_mr(f"name[place{offset + i}], food[{food}]"),
                StyleConstraint.of_contrast(bit),
                (ref,),
            )
        )
    return records


def _toggle_accuracy(outputs: Sequence[str], records: Sequence[DatasetRecord]) -> float:
    hits = sum(
        ("!" in out) == bool(r.constraint.contrast) for out, r in zip(outputs, records)
    )
    return hits / len(records)


@pytest.mark.parametrize(
    "method,expected",
    [
        (Method.NOCON, (0.45, 0.55)),
        (Method.M1, (1.0, 1.0)),
        (Method.M2, (1.0, 1.0)),
        (Method.M3, (1.0, 1.0)),
    ],
)
def test_control_efficacy(method, expected):
    config = ModelConfig(
        rnn_size=24,
        embed_size=16,
        method=method,
        task=Task.CONTRAST,
        dropout_p=0.0,
        batch_size=10,
    )
    training = TrainingConfig(learning_rate=0.5, max_epochs=40)
    held_out = _toggle_corpus(100, offset=1000)

    params, vocabs, _ = _fit(_toggle_corpus(80), config, training)
    accuracy = _toggle_accuracy(_generate(params, vocabs, held_out), held_out)

    low, high = expected
    assert low <= accuracy <= high


# style parameters that each switch one pragmatic marker on
PARAM_MARKERS = {0: "really ", 1: "quite "}


def _fine_corpus(count: int, seed: int) -> List[DatasetRecord]:
    gen = RngState(seed).generator()
    personalities = list(Personality)
    records = []
    for i in range(count):
        personality = personalities[i % len(personalities)]
        bits = tuple(int(b) for b in gen.integers(0, 2, FINE_PARAM_COUNT))
        opener, closer = STYLE[personality]
        extra = "".join(w for k, w in PARAM_MARKERS.items() if bits[k])
        food = FOODS[(i // 5) % len(FOODS)]
        ref = f"{opener}place{i} {extra}serves {food.lower()} food{closer}"
        records.append(
            DatasetRecord(
                parse_mr(f"name[place{i}], food[{food}]"),
                StyleConstraint.of_personality(personality, bits),
                (ref,),
            )
        )
    return records


def _prag(outputs: Sequence[str], records: Sequence[DatasetRecord]) -> float:
    labels = [r.constraint.personality for r in records]
    model = marker_counts(zip(labels, outputs))
    reference = marker_counts((p, r.references[0]) for p, r in zip(labels, records))
    return marker_correlations(model, reference, MarkerCategory.PRAGMATIC).average


def test_directional_orderings():
    """Conditioned models beat NoCon, and fine control beats coarse control."""
    corpus = _fine_corpus(300, seed=11)
    train_records, test_records = corpus[:250], corpus[250:]
    references = [list(r.references) for r in test_records]
    training = TrainingConfig(learning_rate=0.5, max_epochs=30)

    scores = {}
    for method, granularity in [
        (Method.NOCON, Granularity.COARSE),
        (Method.M1, Granularity.COARSE),
        (Method.M2, Granularity.COARSE),
        (Method.M3, Granularity.COARSE),
        (Method.M3, Granularity.FINE),
    ]:
        config = ModelConfig(
            rnn_size=32,
            embed_size=16,
            method=method,
            granularity=granularity,
            dropout_p=0.0,
            batch_size=25,
        )
        params, vocabs, _ = _fit(train_records, config, training)
        outputs = _generate(params, vocabs, test_records)
        scores[method, granularity] = (
            bleu(outputs, references),
            _prag(outputs, test_records),
        )

    nocon_bleu, nocon_prag = scores[Method.NOCON, Granularity.COARSE]
    for method in (Method.M1, Method.M2, Method.M3):
        assert scores[method, Granularity.COARSE][0] > nocon_bleu
    fine_prag = scores[Method.M3, Granularity.FINE][1]
    coarse_prag = scores[Method.M3, Granularity.COARSE][1]
    assert fine_prag > coarse_prag > nocon_prag


def _pipeline(invoke_command, tiny_config) -> Tuple[bytes, bytes]:
    commands = [
        "ingest toy-train.jsonl --test toy-test.jsonl --out data --seed 4",
        f"train --config {tiny_config.name} --data data --seed 4 --method m2",
    ]
    for cmd in commands:
        assert invoke_command(cmd).exit_code == 0
    (ckpt,) = Path("runs").glob("*/model.ckpt")
    checkpoint = ckpt.read_bytes()

    generate = f"generate {ckpt} --data data --output out.txt --seed 4"
    assert invoke_command(generate).exit_code == 0
    assert invoke_command("evaluate out.txt --data data --seed 4").exit_code == 0
    (report,) = Path("runs").glob("*/report.jsonl")
    return checkpoint, report.read_bytes()


def test_pipeline_is_deterministic(invoke_command, toy_corpus, tiny_config):
    first = _pipeline(invoke_command, tiny_config)
    for path in ("data", "runs", "out.txt", "out.txt.meta.json"):
        if Path(path).is_dir():
            shutil.rmtree(path)
        else:
            Path(path).unlink()

    assert _pipeline(invoke_command, tiny_config) == first
