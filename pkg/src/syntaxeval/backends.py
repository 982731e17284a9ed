"""Fill-mask backends: HTTP client for real models, deterministic stubs for tests.

Wire protocol (shared with the inference shim, see PROTOCOL.md):
POST {base_url}/fill-mask with {"text": str, "mask_token": str, "top_k": int};
response {"predictions": [[{"token": str, "score": float}, ...], ...]} with
one inner list per sentinel in document order, scores non-increasing.

Stubs are pure functions of (request, seed). The oracle and corruptor need the
originating MaskedSample (ground truth / treatment arm), which the harness
passes through fill_masks' sample side channel; they are test machinery and
never cacheable, because identical request texts may demand different answers
per arm.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .masking import MaskedSample, MaskingError, unmask

log = logging.getLogger(__name__)

ENV_BACKEND_URL = "SYNTAXEVAL_BACKEND_URL"

DEFAULT_TIMEOUT = 30.0
DEFAULT_RETRIES = 3
DEFAULT_BACKOFF = 0.25

# vocabulary for the seeded-random stub: plausible code tokens
_RANDOM_VOCAB = (
    "x y z i j n self data value result item key name obj args out total "
    "0 1 2 42 None True False if else for while return def print len range "
    "+ - * / = == ( ) [ ] : , . 'a' \"s\"".split()
)


class BackendError(RuntimeError):
    """Transport-level failure after exhausting retries."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class ProtocolError(RuntimeError):
    """A response that violates the fill-mask contract."""


@dataclass(frozen=True)
class Candidate:
    token: str
    score: float


@dataclass(frozen=True)
class FillRequest:
    text: str
    mask_sentinel: str
    top_k: int = 1

    def sentinel_count(self) -> int:
        return self.text.count(self.mask_sentinel)

    def cache_key(self) -> str:
        payload = f"{self.mask_sentinel}\x00{self.top_k}\x00{self.text}"
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class FillResponse:
    predictions: tuple[tuple[Candidate, ...], ...]

    def top_tokens(self) -> list[str]:
        return [cands[0].token for cands in self.predictions]


class Backend:
    """Anything that can answer fill-mask requests. Thread-safe."""

    id: str = "backend"

    def fill(self, request: FillRequest) -> FillResponse:
        raise NotImplementedError

    def fill_for_sample(self, sample: MaskedSample | None, request: FillRequest) -> FillResponse:
        return self.fill(request)


def _single(tokens: list[str]) -> FillResponse:
    return FillResponse(tuple((Candidate(tok, 1.0),) for tok in tokens))


class OracleBackend(Backend):
    """Answers every mask with its ground-truth token. Test harness only."""

    id = "oracle"

    def fill(self, request: FillRequest) -> FillResponse:
        raise BackendError("oracle backend needs the originating sample (side channel)")

    def fill_for_sample(self, sample: MaskedSample | None, request: FillRequest) -> FillResponse:
        if sample is None:
            return self.fill(request)
        return _single(list(sample.ground_truth_tokens))


class ConstantBackend(Backend):
    def __init__(self, token: str):
        self.token = token
        self.id = f"constant:{token}"

    def fill(self, request: FillRequest) -> FillResponse:
        return _single([self.token] * request.sentinel_count())


class RandomBackend(Backend):
    """Seeded vocabulary sampling; a pure function of (request, seed)."""

    def __init__(self, seed: int):
        self.seed = seed
        self.id = f"random:{seed}"

    def fill(self, request: FillRequest) -> FillResponse:
        digest = hashlib.sha256(f"{self.seed}\x00{request.cache_key()}".encode()).digest()
        state = int.from_bytes(digest[:8], "big")
        predictions = []
        k = min(request.top_k, len(_RANDOM_VOCAB))
        for _ in range(request.sentinel_count()):
            cands = []
            weight = 0.5
            for rank in range(k):
                state = (state * 6364136223846793005 + 1442695040888963407) % (1 << 64)
                token = _RANDOM_VOCAB[state % len(_RANDOM_VOCAB)]
                cands.append(Candidate(token, weight))
                weight /= 2
            predictions.append(tuple(cands))
        return FillResponse(tuple(predictions))


class CorruptorBackend(Backend):
    """Ground truth for control samples, a junk token for treatment samples.

    Manufactures a known negative effect of treatment on every outcome, which
    end-to-end tests use to validate the causal engine's sign recovery.
    """

    id = "corruptor"

    def __init__(self, junk_token: str = "0"):
        self.junk_token = junk_token

    def fill(self, request: FillRequest) -> FillResponse:
        raise BackendError("corruptor backend needs the originating sample (side channel)")

    def fill_for_sample(self, sample: MaskedSample | None, request: FillRequest) -> FillResponse:
        if sample is None:
            return self.fill(request)
        if sample.arm == "control":
            return _single(list(sample.ground_truth_tokens))
        return _single([self.junk_token] * sample.mask_count)


class ResponseCache:
    """Disk cache of HTTP responses keyed by (backend id, request hash).

    One JSON file per key; writes are atomic (tmp file + rename) and
    serialized by a lock so concurrent fills cannot interleave.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _path(self, backend_id: str, request: FillRequest) -> Path:
        key = hashlib.sha256(f"{backend_id}\x00{request.cache_key()}".encode()).hexdigest()
        return self.directory / f"{key}.json"

    def get(self, backend_id: str, request: FillRequest) -> FillResponse | None:
        path = self._path(backend_id, request)
        if not path.exists():
            self.misses += 1
            return None
        with path.open(encoding="utf-8") as fh:
            raw = json.load(fh)
        self.hits += 1
        return _parse_predictions(raw["predictions"])

    def put(self, backend_id: str, request: FillRequest, response: FillResponse) -> None:
        path = self._path(backend_id, request)
        payload = {
            "predictions": [[{"token": c.token, "score": c.score} for c in cands] for cands in response.predictions]
        }
        with self._lock:
            fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    json.dump(payload, fh)
                os.replace(tmp, path)
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)


def _parse_predictions(raw) -> FillResponse:
    if not isinstance(raw, list):
        raise ProtocolError("'predictions' must be a list of per-sentinel candidate lists")
    predictions = []
    for cands in raw:
        if not isinstance(cands, list) or not cands:
            raise ProtocolError("each sentinel needs a non-empty candidate list")
        parsed = []
        for cand in cands:
            try:
                parsed.append(Candidate(str(cand["token"]), float(cand["score"])))
            except (TypeError, KeyError) as exc:
                raise ProtocolError(f"malformed candidate {cand!r}") from exc
        predictions.append(tuple(parsed))
    return FillResponse(tuple(predictions))


class HttpBackend(Backend):
    def __init__(
        self,
        base_url: str,
        timeout: float = DEFAULT_TIMEOUT,
        retries: int = DEFAULT_RETRIES,
        backoff: float = DEFAULT_BACKOFF,
        cache: ResponseCache | None = None,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.cache = cache
        self.session = session or requests.Session()
        self.id = f"http:{self.base_url}"

    def fill(self, request: FillRequest) -> FillResponse:
        if self.cache is not None:
            cached = self.cache.get(self.id, request)
            if cached is not None:
                return cached
        body = {"text": request.text, "mask_token": request.mask_sentinel, "top_k": request.top_k}
        last_error = ""
        attempts = 0
        for attempt in range(self.retries + 1):
            attempts = attempt + 1
            try:
                resp = self.session.post(f"{self.base_url}/fill-mask", json=body, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = str(exc)
            else:
                if resp.status_code == 200:
                    try:
                        raw = resp.json()
                    except ValueError as exc:
                        raise ProtocolError(f"non-JSON response body: {exc}") from exc
                    response = _parse_predictions(raw.get("predictions"))
                    if self.cache is not None:
                        self.cache.put(self.id, request, response)
                    return response
                last_error = f"HTTP {resp.status_code}: {resp.text[:200]}"
                if 400 <= resp.status_code < 500:
                    break  # client errors will not heal on retry
            if attempt < self.retries:
                time.sleep(self.backoff * (2**attempt))
        raise BackendError(f"fill-mask request failed after {attempts} attempts: {last_error}", attempts)


def fill_masks(backend: Backend, request: FillRequest, sample: MaskedSample | None = None) -> FillResponse:
    """Run one fill-mask request and validate the response contract."""
    expected = request.sentinel_count()
    if expected < 1:
        raise ValueError("request text contains no mask sentinel")
    response = backend.fill_for_sample(sample, request)
    if len(response.predictions) != expected:
        raise ProtocolError(
            f"backend {backend.id} returned {len(response.predictions)} prediction lists "
            f"for {expected} sentinels"
        )
    for cands in response.predictions:
        if not cands:
            raise ProtocolError(f"backend {backend.id} returned an empty candidate list")
        prev = 1.0
        for cand in cands:
            if not 0.0 <= cand.score <= 1.0:
                raise ProtocolError(f"score {cand.score} outside [0, 1]")
            if cand.score > prev + 1e-12:
                raise ProtocolError("candidate scores must be non-increasing")
            prev = cand.score
    return response


def reconstruct(sample: MaskedSample, response: FillResponse) -> str:
    """Predicted source: each sentinel replaced by its top-1 token, in order."""
    if len(response.predictions) != sample.mask_count:
        raise MaskingError(
            f"snippet {sample.snippet_id}: {len(response.predictions)} predictions "
            f"for {sample.mask_count} masks"
        )
    return unmask(sample, response.top_tokens())


def make_backend(
    spec: str,
    base_url: str | None = None,
    cache_dir: str | Path | None = None,
    timeout: float = DEFAULT_TIMEOUT,
    retries: int = DEFAULT_RETRIES,
    backoff: float = DEFAULT_BACKOFF,
) -> Backend:
    """Build a backend from its CLI spelling.

    http | oracle | constant:<tok> | random:<seed> | corruptor
    """
    if spec == "http":
        url = base_url or os.environ.get(ENV_BACKEND_URL, "")
        if not url:
            raise ValueError(f"http backend needs --backend-url or {ENV_BACKEND_URL}")
        cache = ResponseCache(cache_dir) if cache_dir else None
        return HttpBackend(url, timeout=timeout, retries=retries, backoff=backoff, cache=cache)
    if spec == "oracle":
        return OracleBackend()
    if spec == "corruptor":
        return CorruptorBackend()
    if spec.startswith("constant:"):
        return ConstantBackend(spec.split(":", 1)[1])
    if spec.startswith("random:"):
        return RandomBackend(int(spec.split(":", 1)[1]))
    raise ValueError(f"unknown backend spec {spec!r}")
