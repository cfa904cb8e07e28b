import json
from pathlib import Path
from typing import List

import pytest
from typer.testing import CliRunner

from stylenlg.main import app
from stylenlg.mr import (
    DatasetRecord,
    Personality,
    StyleConstraint,
    dump_record,
    parse_mr,
)

FIXTURES = Path(__file__).with_name("fixtures")

# surface fragments that give each toy personality a recognizable style
STYLE = {
    Personality.AGREEABLE: ("well , ", " , you know ."),
    Personality.DISAGREEABLE: ("damn , ", " , obviously ."),
    Personality.CONSCIENTIOUS: ("let's see , ", " ."),
    Personality.UNCONSCIENTIOUS: ("oh god , ", " , mate !"),
    Personality.EXTRAVERT: ("yeah , ", " , alright ?"),
}
NAMES = ("Aromi", "Clowns", "Cotto", "The Eagle", "Zizzi")
FOODS = ("Italian", "French", "Chinese", "Indian")
AREAS = ("riverside", "city centre")


def toy_records(count: int = 50) -> List[DatasetRecord]:
    """A small, fully regular personality corpus: the style depends only on the label."""
    records = []
    personalities = list(Personality)
    for i in range(count):
        name, food, area = (
            NAMES[i % len(NAMES)],
            FOODS[(i // 5) % len(FOODS)],
            AREAS[(i // 20) % len(AREAS)],
        )
        personality = personalities[i % len(personalities)]
        opener, closer = STYLE[personality]
        ref = f"{opener}{name} serves {food.lower()} food in the {area}{closer}"
        records.append(
            DatasetRecord(
                parse_mr(f"name[{name}], food[{food}], area[{area}]"),
                StyleConstraint.of_personality(personality),
                (ref,),
            )
        )
    return records


def write_records(path: Path, records: List[DatasetRecord]) -> Path:
    path.write_text("".join(dump_record(r) + "\n" for r in records), encoding="utf-8")
    return path


def load_fixture(name: str) -> List[dict]:
    text = (FIXTURES / name).read_text(encoding="utf-8")
    return [json.loads(line) for line in text.splitlines() if line.strip()]


@pytest.fixture(scope="session")
def runner():
    yield CliRunner()


@pytest.fixture(autouse=True)
def filesystem(runner, monkeypatch):
    with runner.isolated_filesystem() as fs:
        home = Path(fs)

        # also change Path.home() to return the isolated fs
        monkeypatch.setattr("pathlib.Path.home", lambda: home)

        yield home


@pytest.fixture
def invoke_command(runner):
    def _run(cmd, **kwargs):
        args = cmd.split() if isinstance(cmd, str) else cmd
        return runner.invoke(app, args, catch_exceptions=False, **kwargs)

    yield _run


@pytest.fixture
def toy_corpus(filesystem):
    """Raw train and test files of the toy corpus in the isolated filesystem."""
    records = toy_records(60)
    train = write_records(filesystem / "toy-train.jsonl", records[:50])
    test = write_records(filesystem / "toy-test.jsonl", records[50:])
    yield train, test


@pytest.fixture
def tiny_config(filesystem):
    """A configuration small enough to train in a few seconds."""
    path = filesystem / "tiny.json"
    path.write_text(
        json.dumps(
            {
                "model": {
                    "rnn_size": 8,
                    "embed_size": 6,
                    "batch_size": 10,
                    "dropout_p": 0.0,
                },
                "training": {"max_epochs": 2, "learning_rate": 0.5},
                "grid": {"layers": [1], "sizes": [6, 8]},
            }
        )
    )
    yield path


@pytest.fixture
def processed(invoke_command, filesystem, toy_corpus):
    """The toy corpus ingested into `data/` with seed 1."""
    train, test = toy_corpus
    res = invoke_command(f"ingest {train.name} --test {test.name} --out data --seed 1")
    assert res.exit_code == 0
    yield filesystem / "data"


@pytest.fixture
def checkpoint(invoke_command, processed, tiny_config):
    """A tiny model trained on the processed toy corpus."""
    res = invoke_command(f"train --config {tiny_config.name} --data data --seed 1")
    assert res.exit_code == 0
    (path,) = Path("runs").glob("*/model.ckpt")
    yield path
