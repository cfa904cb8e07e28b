from __future__ import annotations

import hashlib
import json
import sys
from contextlib import contextmanager
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, cast

import requests
import typer
from cachecontrol import CacheControl

from .errors import DataError, MissingPath, StyleNLGError
from .retry_session import RetrySession


@lru_cache(maxsize=None)
def _get_hashlib_kwargs() -> Dict[str, bool]:
    kwargs: Dict[str, bool] = {}
    if sys.version_info >= (3, 9):
        kwargs["usedforsecurity"] = False

    return kwargs


def fingerprint(*parts: str) -> str:
    """
    A deterministic md5 over the given strings. Used to tie every artifact back to
    the configuration that produced it, not for anything security related.
    """
    # we need predictable results between interpreters, which hash() won't provide
    return hashlib.md5("|".join(parts).encode(), **_get_hashlib_kwargs()).hexdigest()


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_directory(
    root: Path, config_fingerprint: str, now: Optional[datetime] = None
) -> Path:
    """Creates `<root>/<UTC timestamp>-<fingerprint[:8]>/` and returns it."""
    stamp = (now or datetime.now(timezone.utc)).strftime("%Y%m%dT%H%M%SZ")
    path = Path(root) / f"{stamp}-{config_fingerprint[:8]}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def is_remote(source: str) -> bool:
    return source.startswith(("http://", "https://"))


@contextmanager
def wrap_session() -> Iterator[RetrySession]:
    """
    Yields a cached requests session that retries rate-limited responses and raises
    on HTTP errors. Any request failure surfaces as a `DataError`.
    """
    try:
        with RetrySession() as session:
            cc_session: RetrySession = cast(RetrySession, CacheControl(session))
            cc_session.headers.update({"User-Agent": "stylenlg"})
            yield cc_session
    except requests.RequestException as err:
        raise DataError(f"could not fetch the dataset: {err}") from err


def read_source(source: str) -> str:
    """Reads a local file or downloads an `http(s)://` URL as UTF-8 text."""
    if is_remote(source):
        with wrap_session() as session:
            resp = session.get(source)
            resp.encoding = "utf-8"
            return resp.text

    path = Path(source)
    if not path.is_file():
        raise MissingPath(f"'{source}' does not exist")
    return path.read_text(encoding="utf-8")


@contextmanager
def reported_errors() -> Iterator[None]:
    """Turns library errors into a red message and the matching exit code."""
    try:
        yield
    except StyleNLGError as err:
        typer.secho(f"\n[ X ] {err}\n", fg=typer.colors.BRIGHT_RED)
        raise typer.Exit(code=err.exit_code)
