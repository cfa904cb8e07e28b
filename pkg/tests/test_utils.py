"""Tests utilities used by the CLI."""
import hashlib
from datetime import datetime, timezone

import pytest
from typer import Exit as ExitError

from stylenlg.errors import ConfigError, DataError, DivergedTraining, MissingPath
from stylenlg.utils import (
    _get_hashlib_kwargs,
    canonical_json,
    file_digest,
    fingerprint,
    read_source,
    reported_errors,
    run_directory,
    wrap_session,
)


@pytest.fixture
def fresh_hashlib_kwargs():
    # earlier tests populate the lru_cache via fingerprint()
    _get_hashlib_kwargs.cache_clear()
    yield
    _get_hashlib_kwargs.cache_clear()


@pytest.mark.usefixtures("fresh_hashlib_kwargs")
@pytest.mark.parametrize("version", [(3, 7), (3, 9)])
def test_hashlib_kwargs(monkeypatch, version):
    """
    Checks that the `usedforsecurity` kwarg to hashlib is only present on compatible
    Python versions (3.9+).
    """
    monkeypatch.setattr("sys.version_info", version)

    kwargs = _get_hashlib_kwargs()
    _get_hashlib_kwargs.cache_clear()

    if version[1] == 7:
        assert "usedforsecurity" not in kwargs
    else:
        assert kwargs["usedforsecurity"] is False


def test_fingerprint():
    """Fingerprints are md5 digests of the parts joined by '|'."""
    assert fingerprint() == "d41d8cd98f00b204e9800998ecf8427e"
    assert fingerprint("a", "b") == hashlib.md5(b"a|b").hexdigest()
    assert fingerprint("a", "b") != fingerprint("ab")


def test_canonical_json():
    assert canonical_json({"b": 1, "a": [1, "é"]}) == '{"a":[1,"é"],"b":1}'


def test_file_digest(filesystem):
    path = filesystem / "blob"
    path.write_bytes(b"abc")
    assert file_digest(path) == hashlib.sha256(b"abc").hexdigest()


def test_run_directory(filesystem):
    now = datetime(2024, 1, 2, 3, 4, 5, tzinfo=timezone.utc)
    path = run_directory(filesystem / "runs", "0123456789abcdef", now)

    assert path == filesystem / "runs" / "20240102T030405Z-01234567"
    assert path.is_dir()
    # the same second and fingerprint reuse the directory
    assert run_directory(filesystem / "runs", "0123456789abcdef", now) == path


def test_read_source_local(filesystem):
    (filesystem / "train.jsonl").write_text("line\n", encoding="utf-8")

    assert read_source("train.jsonl") == "line\n"
    with pytest.raises(MissingPath):
        read_source("absent.jsonl")


def test_read_source_remote(requests_mock):
    """Remote datasets are downloaded with the stylenlg user agent."""
    requests_mock.get("https://example.com/train.jsonl", text="remote £\n")

    assert read_source("https://example.com/train.jsonl") == "remote £\n"
    assert requests_mock.last_request.headers["User-Agent"] == "stylenlg"


def test_wrap_session_http_error(requests_mock):
    """Checks that failed downloads surface as data errors."""
    requests_mock.get("https://example.com/missing", status_code=404)

    with pytest.raises(DataError, match="could not fetch"):
        with wrap_session() as session:
            session.get("https://example.com/missing")


@pytest.mark.parametrize(
    "error,code",
    [
        (ConfigError("bad config"), 2),
        (MissingPath("no such file"), 2),
        (DataError("bad data"), 3),
        (DivergedTraining("nan loss"), 4),
    ],
)
def test_reported_errors(error, code, capfd):
    """Library errors become a red message and the exit code of their class."""
    with pytest.raises(ExitError) as exc:
        with reported_errors():
            raise error

    assert exc.value.exit_code == code
    assert f"[ X ] {error}" in capfd.readouterr().out


def test_reported_errors_passes_others_through():
    with pytest.raises(KeyError):
        with reported_errors():
            raise KeyError("not ours")
