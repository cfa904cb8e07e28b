"""Tests the run configuration: file loading, flag overrides and fingerprints."""
import json

import pytest

from stylenlg.config import GridSpec, MetricOptions, RunConfig
from stylenlg.errors import ConfigError, MissingPath
from stylenlg.mr import Granularity
from stylenlg.seq2seq import Method, Task


def _write(path, obj):
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return path


def test_defaults():
    run = RunConfig.load()

    assert run.model.method is Method.NOCON
    assert run.model.rnn_size == 200
    assert run.training.learning_rate == 0.1
    assert run.delex_slots == ("name", "near")
    assert run.grid.layers == (1, 2)
    assert run.grid.sizes == (150, 200, 250, 300)
    assert run.metrics.contrast_cues == ("although", "but", "however", "yet")


def test_file_sections_are_read(filesystem):
    path = _write(
        filesystem / "run.json",
        {
            "seed": 7,
            "model": {"method": "m3", "granularity": "fine", "rnn_size": 300},
            "training": {"max_epochs": 30},
            "grid": {"workers": 4},
        },
    )
    run = RunConfig.load(path)

    assert run.seed == 7
    assert run.model.method is Method.M3
    assert run.model.granularity is Granularity.FINE
    assert run.model.rnn_size == 300
    assert run.training.max_epochs == 30
    assert run.grid.workers == 4


def test_flags_win_over_the_file(filesystem):
    path = _write(filesystem / "run.json", {"seed": 7, "model": {"method": "m1"}})
    run = RunConfig.load(path, seed=3, method=Method.M2, rnn_size=None)

    assert run.seed == 3
    assert run.model.method is Method.M2
    assert run.model.rnn_size == 200


@pytest.mark.parametrize(
    "content,exception,message",
    [
        ("{not json", ConfigError, "invalid JSON"),
        ("[1, 2]", ConfigError, "expected a JSON object"),
        ({"modle": {}}, ConfigError, "unknown configuration key 'modle'"),
        ({"model": {"layers": 2}}, ConfigError, "unknown key"),
        ({"model": 3}, ConfigError, "must be an object"),
        ({"model": {"method": "m9"}}, ConfigError, "invalid method"),
        ({"model": {"rnn_layers": 3}}, ConfigError, "rnn_layers"),
        (
            {"model": {"task": "contrast", "granularity": "fine"}},
            ConfigError,
            "no fine-grained",
        ),
        ({"seed": -1}, ConfigError, "seed"),
        ({"dev_fraction": 1.0}, ConfigError, "dev_fraction"),
        ({"delex_slots": ["name", " "]}, ConfigError, "blank slot types"),
        (
            {"delex_slots": ["eat type", "eat-type"]},
            ConfigError,
            "share the placeholder __EAT_TYPE__",
        ),
        ({"grid": {"layers": [3]}}, ConfigError, "grid.layers"),
        ({"metrics": {"contrast_cues": []}}, ConfigError, "cannot be empty"),
        ({"metrics": {"slot_lexicon": "nope.tsv"}}, MissingPath, "slot_lexicon"),
    ],
)
def test_invalid_files(filesystem, content, exception, message):
    path = _write(filesystem / "run.json", content)
    with pytest.raises(exception, match=message):
        RunConfig.load(path)


def test_missing_file(filesystem):
    with pytest.raises(MissingPath):
        RunConfig.load(filesystem / "absent.json")


def test_unknown_flag():
    with pytest.raises(ConfigError, match="unknown setting"):
        RunConfig().with_overrides(verbosity=2)


def test_missing_exit_code_is_config():
    assert MissingPath.exit_code == ConfigError.exit_code == 2


def test_require_paths(filesystem):
    (filesystem / "train.jsonl").write_text("")
    paths = RunConfig.load(train="train.jsonl", test="absent.jsonl").paths

    assert paths.require("train") == "train.jsonl"
    with pytest.raises(MissingPath, match="does not exist"):
        paths.require("test")
    with pytest.raises(MissingPath, match="no dev dataset"):
        paths.require("dev")
    # remote sources are only checked when they are fetched
    remote = RunConfig.load(train="https://example.com/train.jsonl").paths
    assert remote.require("train") == "https://example.com/train.jsonl"


def test_fingerprints():
    base = RunConfig()
    bigger = base.with_overrides(rnn_size=300)
    reseeded = base.with_overrides(seed=1)

    assert base.fingerprint() == RunConfig().fingerprint()
    assert base.fingerprint() != bigger.fingerprint()
    # model settings do not change which dataset ingestion produces
    assert base.data_fingerprint() == bigger.data_fingerprint()
    assert base.data_fingerprint() != reseeded.data_fingerprint()


def test_dump_and_reload(filesystem):
    run = RunConfig.load(
        seed=11,
        method=Method.M1,
        granularity=Granularity.FINE,
        delex_slots=("near", "name", "near"),
        smooth_bleu=True,
    )
    run.dump(filesystem / "config.json")
    again = RunConfig.load(filesystem / "config.json")

    assert again == run
    assert again.fingerprint() == run.fingerprint()
    assert again.delex_slots == ("name", "near")


def test_sections_normalize_sequences():
    assert GridSpec(layers=[2, 1], sizes=[10]).layers == (2, 1)
    assert MetricOptions(contrast_cues=["but"]).contrast_cues == ("but",)
    assert RunConfig().with_overrides(task=Task.CONTRAST).model.task is Task.CONTRAST


def test_delex_slots_with_spaces_are_accepted():
    run = RunConfig(delex_slots=("near", "customer rating", "name", "near"))
    assert run.delex_slots == ("customer rating", "name", "near")
