"""Tests the generate command with a tiny trained model."""
import json
from pathlib import Path

import pytest

from stylenlg.commands.generate import _realize, check_overrides
from stylenlg.errors import ConfigError
from stylenlg.mr import DatasetRecord, Personality, StyleConstraint, parse_mr
from stylenlg.seq2seq import ModelConfig
from stylenlg.textpipe import DelexMap, TokenSequence

from ..conftest import toy_records, write_records


def test_generate(invoke_command, checkpoint):
    res = invoke_command(f"generate {checkpoint} --data data --output out.txt --beam 2")

    assert res.exit_code == 0
    assert "[ ✔ ] Wrote 10 realization(s) to 'out.txt'." in res.output

    lines = Path("out.txt").read_text().splitlines()
    assert len(lines) == 10

    meta = json.loads(Path("out.txt.meta.json").read_text())
    assert meta["count"] == 10
    assert meta["beam_width"] == 2
    assert meta["input"] == "test"
    assert meta["model"]["rnn_size"] == 8
    assert meta["data_fingerprint"] == json.loads(
        Path("data/manifest.json").read_text()
    )["fingerprint"]
    assert meta["overrides"] == {"contrast": None, "personality": None}


def test_generate_is_deterministic(invoke_command, checkpoint):
    for out in ("a.txt", "b.txt"):
        cmd = f"generate {checkpoint} --data data --output {out} --max-len 8"
        assert invoke_command(cmd).exit_code == 0

    assert Path("a.txt").read_text() == Path("b.txt").read_text()


def test_generate_relexicalizes(invoke_command, checkpoint, filesystem):
    """Outputs never show placeholders for slots the model was given."""
    invoke_command(f"generate {checkpoint} --data data --output out.txt")

    text = Path("out.txt").read_text()
    assert "__NAME__" not in text


def test_generate_from_input_file(invoke_command, checkpoint, filesystem):
    records = [
        DatasetRecord(
            parse_mr("name[Bibimbap House], food[Chinese], area[riverside]"),
            StyleConstraint.of_personality(Personality.EXTRAVERT),
            ("yeah , bibimbap house serves chinese food in the riverside , alright ?",),
        )
    ]
    write_records(filesystem / "inputs.jsonl", records)

    res = invoke_command(
        f"generate {checkpoint} --data data --input inputs.jsonl --output out.txt"
        " --personality agreeable"
    )

    assert res.exit_code == 0
    meta = json.loads(Path("out.txt.meta.json").read_text())
    assert meta["count"] == 1
    assert meta["input"] == "inputs.jsonl"
    assert meta["overrides"]["personality"] == "agreeable"


def test_generate_missing_checkpoint(invoke_command, processed):
    res = invoke_command("generate absent.ckpt --data data")

    assert res.exit_code == 2
    assert "checkpoint 'absent.ckpt' does not exist" in res.output


def test_generate_truncated_checkpoint(invoke_command, checkpoint):
    checkpoint.write_bytes(checkpoint.read_bytes()[:100])

    res = invoke_command(f"generate {checkpoint} --data data")

    assert res.exit_code == 3
    assert "truncated" in res.output


def test_generate_against_other_vocabularies(invoke_command, checkpoint, filesystem):
    """A checkpoint only runs with the vocabularies it was trained with."""
    write_records(filesystem / "other.jsonl", toy_records(60)[10:])
    assert invoke_command("ingest other.jsonl --out other --seed 1").exit_code == 0

    res = invoke_command(f"generate {checkpoint} --data other")

    assert res.exit_code == 3


def test_generate_without_test_set(invoke_command, checkpoint, filesystem, toy_corpus):
    train, _ = toy_corpus
    # same records and seed, so the vocabularies match, but no test split
    assert invoke_command(f"ingest {train.name} --out notest --seed 1").exit_code == 0

    res = invoke_command(f"generate {checkpoint} --data notest")

    assert res.exit_code == 2
    assert "has no test set" in res.output


def test_realize_drops_placeholders_of_absent_slots():
    delex = DelexMap((("__NAME__", "name", "Aromi"),))
    out = TokenSequence(("__NAME__", "is", "near", "__NEAR__", "."))

    assert _realize(out, delex) == ("Aromi is near.", True)
    assert _realize(TokenSequence(("__NAME__", ".")), delex) == ("Aromi.", False)


def test_generate_exclusive_overrides(invoke_command, checkpoint):
    res = invoke_command(
        f"generate {checkpoint} --data data --contrast --personality agreeable"
    )

    assert res.exit_code == 2
    assert "are exclusive" in res.output
    assert not Path("outputs.txt").exists()


@pytest.mark.parametrize(
    "model",
    [
        ModelConfig(method="nocon", granularity="fine"),
        ModelConfig(method="m1"),
        ModelConfig(method="m3"),
    ],
)
def test_check_overrides_accepts_personality(model):
    check_overrides(model, None, Personality.AGREEABLE)


@pytest.mark.parametrize("method", ["m1", "m2", "m3"])
def test_check_overrides_rejects_personality_for_fine_models(method):
    model = ModelConfig(method=method, granularity="fine")

    with pytest.raises(ConfigError, match="cannot be used with a fine-grained model"):
        check_overrides(model, None, Personality.EXTRAVERT)

    # the records' own fine parameters are still usable
    check_overrides(model, None, None)


def test_check_overrides_matches_the_task():
    with pytest.raises(ConfigError, match="trained for personalities"):
        check_overrides(ModelConfig(method="m3", task="contrast"), None, Personality.AGREEABLE)
    with pytest.raises(ConfigError, match="trained for contrast"):
        check_overrides(ModelConfig(method="m3"), True, None)

    check_overrides(ModelConfig(method="m3", task="contrast"), False, None)
