# mypy: disable-error-code="override"

import time
from typing import Any, Union

from requests import Response, Session

# give up on a host that keeps asking us to wait
MAX_RETRIES = 5


class RetrySession(Session):
    """
    A requests Session that waits and retries when a response carries a
    "Retry-After" header, and raises if the final response is an HTTP error.
    """

    def request(
        self,
        method: Union[str, bytes],
        url: Union[str, bytes],
        *args: Any,
        _attempt: int = 0,
        **kwargs: Any,
    ) -> Response:
        resp: Response = super().request(method, url, *args, **kwargs)

        # dataset mirrors may rate limit us, in which case we wait as long as
        # they tell us to before retrying
        retry: float = float(resp.headers.get("Retry-After", 0))
        if retry and _attempt < MAX_RETRIES:
            time.sleep(retry)
            return self.request(method, url, *args, _attempt=_attempt + 1, **kwargs)

        resp.raise_for_status()
        return resp
