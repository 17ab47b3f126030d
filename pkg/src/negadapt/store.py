"""Embedding acquisition, content-addressed caching, and vector file formats.

One wire protocol only: POST {endpoint}/embeddings with {"model", "input"},
answered by {"data": [{"index", "embedding"}]}. Cache keys are
sha256(instruction_prefix + NUL + text) so instruction-tuned variants of
the same text never collide. On disk, vectors live either as JSONL
(full double precision) or as a packed little-endian binary32 format.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
import struct
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import requests

from .errors import (
    CacheCorruption,
    FormatError,
    InconsistentDimensions,
    ProviderError,
    RetriesExhausted,
    VersionUnsupported,
)
from .vectors import EmbeddingVector

DEFAULT_BATCH_SIZE = 64
DEFAULT_MAX_TEXT_BYTES = 65536
DEFAULT_MAX_IN_FLIGHT = 4
BACKOFF_BASE = 1.0
BACKOFF_FACTOR = 2.0
MAX_ATTEMPTS = 5

STORE_MAGIC = b"NEGV"
STORE_VERSION = 1
_HEADER = struct.Struct("<IIQ")  # version, dim, count (after the 4 magic bytes)
_ID_LEN = struct.Struct("<H")


@dataclass(frozen=True)
class EmbedRequest:
    """One batch of texts bound for the provider."""

    texts: tuple[str, ...]
    model: str
    instruction_prefix: str = ""
    max_batch: int = DEFAULT_BATCH_SIZE
    max_text_bytes: int = DEFAULT_MAX_TEXT_BYTES

    def __post_init__(self) -> None:
        if not 1 <= len(self.texts) <= self.max_batch:
            raise ValueError(f"batch of {len(self.texts)} outside 1..{self.max_batch}")
        if not self.model:
            raise ValueError("model must be non-empty")
        for t in self.texts:
            if not t:
                raise ValueError("texts must be non-empty")
            if len(t.encode("utf-8")) > self.max_text_bytes:
                raise ValueError(f"text exceeds {self.max_text_bytes} bytes")


@dataclass(frozen=True)
class StoreKey:
    """Content address of one vector: model plus text digest."""

    model: str
    text_digest: str

    def __post_init__(self) -> None:
        if len(self.text_digest) != 64 or not all(c in "0123456789abcdef" for c in self.text_digest):
            raise ValueError("text_digest must be 64 lowercase hex characters")

    @classmethod
    def for_text(cls, model: str, text: str, instruction_prefix: str = "") -> "StoreKey":
        digest = hashlib.sha256(
            (instruction_prefix + "\x00" + text).encode("utf-8")
        ).hexdigest()
        return cls(model=model, text_digest=digest)


def _excerpt(text: str, limit: int = 200) -> str:
    return text if len(text) <= limit else text[:limit] + "…"


def fetch_embeddings(
    req: EmbedRequest,
    endpoint: str,
    credentials: str | None = None,
    *,
    session=None,
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
    timeout: float = 30.0,
    embeddings_path: str = "/embeddings",
) -> tuple[EmbeddingVector, ...]:
    """POST one batch to the provider, retrying transient failures.

    Retries HTTP 429/5xx and connection errors with exponential backoff:
    attempt k waits base*factor^k seconds plus up to the same again in
    jitter, so delays never undercut the deterministic schedule. session,
    sleep and rng are injectable for tests.
    """
    poster = session if session is not None else requests
    rng = rng if rng is not None else random.Random()
    url = endpoint.rstrip("/") + embeddings_path
    body = {
        "model": req.model,
        "input": [req.instruction_prefix + t for t in req.texts],
    }
    headers = {"Content-Type": "application/json"}
    if credentials:
        headers["Authorization"] = f"Bearer {credentials}"

    last_failure = "no attempt made"
    for attempt in range(MAX_ATTEMPTS):
        retryable = False
        try:
            resp = poster.post(url, json=body, headers=headers, timeout=timeout)
        except (requests.exceptions.Timeout, requests.exceptions.ConnectionError) as exc:
            last_failure = f"connection failure: {exc}"
            retryable = True
        else:
            if resp.status_code == 200:
                return _parse_response(resp, req)
            if resp.status_code == 429 or resp.status_code >= 500:
                last_failure = f"HTTP {resp.status_code}"
                retryable = True
            else:
                raise ProviderError(
                    f"provider rejected request: HTTP {resp.status_code}: "
                    f"{_excerpt(resp.text)}",
                    status=resp.status_code,
                    body=_excerpt(resp.text),
                )
        if retryable and attempt < MAX_ATTEMPTS - 1:
            base_delay = BACKOFF_BASE * BACKOFF_FACTOR ** attempt
            sleep(base_delay * (1.0 + rng.random()))
    raise RetriesExhausted(f"gave up after {MAX_ATTEMPTS} attempts; last failure: {last_failure}")


def _parse_response(resp, req: EmbedRequest) -> tuple[EmbeddingVector, ...]:
    try:
        payload = resp.json()
    except ValueError as exc:
        raise ProviderError(
            f"provider returned non-JSON body: {_excerpt(resp.text)}",
            status=resp.status_code,
            body=_excerpt(resp.text),
        ) from exc
    data = payload.get("data")
    if not isinstance(data, list) or len(data) != len(req.texts):
        raise ProviderError(
            f"expected {len(req.texts)} embeddings, got "
            f"{len(data) if isinstance(data, list) else 'no data list'}",
            status=resp.status_code,
        )
    by_index: dict[int, list] = {}
    for entry in data:
        try:
            by_index[int(entry["index"])] = entry["embedding"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed data entry: {entry!r}") from exc
    if sorted(by_index) != list(range(len(req.texts))):
        raise ProviderError(f"response indices {sorted(by_index)} do not cover the batch")

    vectors = []
    dim = None
    for i, text in enumerate(req.texts):
        values = np.asarray(by_index[i], dtype=np.float64)
        if dim is None:
            dim = values.shape[-1] if values.ndim else 0
        elif values.shape != (dim,):
            raise InconsistentDimensions(
                f"embedding {i} has dim {values.shape}, expected ({dim},)"
            )
        key = StoreKey.for_text(req.model, text, req.instruction_prefix)
        vectors.append(EmbeddingVector(id=key.text_digest, values=values, model_tag=req.model))
    return tuple(vectors)


_SAFE_CHARS = re.compile(r"[^A-Za-z0-9._-]")


def _sanitize(name: str) -> str:
    return _SAFE_CHARS.sub("_", name) or "_"


class VectorStoreCache:
    """One JSON file per StoreKey under root/model/digest-prefix/digest.json.

    Writes go to a temp file then an atomic rename, so concurrent writers
    of the same key are safe; contents for a key are always identical.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path_for(self, key: StoreKey) -> Path:
        return (
            self.root
            / _sanitize(key.model)
            / key.text_digest[:2]
            / f"{key.text_digest}.json"
        )

    def get(self, key: StoreKey) -> EmbeddingVector | None:
        path = self.path_for(key)
        if not path.exists():
            return None
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
            if obj["id"] != key.text_digest:
                raise ValueError(f"stored id {obj['id']!r} does not match key")
            values = np.asarray(obj["vector"], dtype=np.float64)
            if obj["dim"] != len(values):
                raise ValueError(f"dim field {obj['dim']} != vector length {len(values)}")
            return EmbeddingVector(
                id=key.text_digest, values=values, model_tag=obj.get("model", key.model)
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CacheCorruption(
                f"cache entry {key.model}/{key.text_digest} unreadable: {exc}",
                key=key,
            ) from exc

    def put(self, key: StoreKey, vector: EmbeddingVector) -> None:
        path = self.path_for(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = json.dumps(
            {
                "dim": vector.dim,
                "id": key.text_digest,
                "model": vector.model_tag or key.model,
                "vector": [float(x) for x in vector.values],
            },
            sort_keys=True,
            separators=(",", ":"),
        )
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                f.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


@dataclass(frozen=True)
class FetchStats:
    """Counts over unique texts; requests_made is logical batch calls."""

    unique_texts: int
    hits: int
    misses: int
    requests_made: int


def get_or_fetch(
    texts: Sequence[str],
    model: str,
    cache: VectorStoreCache,
    endpoint: str,
    credentials: str | None = None,
    *,
    instruction_prefix: str = "",
    batch_size: int = DEFAULT_BATCH_SIZE,
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
    session=None,
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
    timeout: float = 30.0,
    embeddings_path: str = "/embeddings",
) -> tuple[list[EmbeddingVector], FetchStats]:
    """Serve texts from cache, fetching and persisting only the misses.

    Duplicates collapse to one lookup; the returned list still matches the
    input order and length. Up to max_in_flight batches fetch concurrently.
    """
    unique = list(dict.fromkeys(texts))
    resolved: dict[str, EmbeddingVector] = {}
    misses: list[str] = []
    for text in unique:
        key = StoreKey.for_text(model, text, instruction_prefix)
        vec = cache.get(key)
        if vec is None:
            misses.append(text)
        else:
            resolved[text] = vec

    batches = [misses[i:i + batch_size] for i in range(0, len(misses), batch_size)]

    def fetch_batch(batch: list[str]) -> tuple[EmbeddingVector, ...]:
        req = EmbedRequest(
            texts=tuple(batch),
            model=model,
            instruction_prefix=instruction_prefix,
            max_batch=batch_size,
        )
        return fetch_embeddings(
            req, endpoint, credentials,
            session=session, sleep=sleep, rng=rng,
            timeout=timeout, embeddings_path=embeddings_path,
        )

    if batches:
        if max_in_flight > 1 and len(batches) > 1:
            with ThreadPoolExecutor(max_workers=min(max_in_flight, len(batches))) as ex:
                results = list(ex.map(fetch_batch, batches))
        else:
            results = [fetch_batch(b) for b in batches]
        for batch, vectors in zip(batches, results):
            for text, vec in zip(batch, vectors):
                cache.put(StoreKey.for_text(model, text, instruction_prefix), vec)
                resolved[text] = vec

    stats = FetchStats(
        unique_texts=len(unique),
        hits=len(unique) - len(misses),
        misses=len(misses),
        requests_made=len(batches),
    )
    return [resolved[t] for t in texts], stats


def write_store(vectors: Sequence[EmbeddingVector], path: str | Path, fmt: str = "jsonl") -> None:
    """Persist vectors as JSONL (full precision) or packed binary32."""
    path = Path(path)
    if fmt == "jsonl":
        lines = []
        for v in vectors:
            lines.append(json.dumps(
                {
                    "id": v.id,
                    "model": v.model_tag,
                    "dim": v.dim,
                    "vector": [float(x) for x in v.values],
                },
                ensure_ascii=False,
            ))
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    elif fmt == "packed":
        dim = vectors[0].dim if vectors else 0
        for v in vectors:
            if v.dim != dim:
                raise InconsistentDimensions(f"vector {v.id!r} has dim {v.dim}, expected {dim}")
        chunks = [STORE_MAGIC, _HEADER.pack(STORE_VERSION, dim, len(vectors))]
        for v in vectors:
            id_bytes = v.id.encode("utf-8")
            if len(id_bytes) > 0xFFFF:
                raise ValueError(f"id too long for packed format: {len(id_bytes)} bytes")
            chunks.append(_ID_LEN.pack(len(id_bytes)))
            chunks.append(id_bytes)
            chunks.append(np.asarray(v.values, dtype="<f4").tobytes())
        path.write_bytes(b"".join(chunks))
    else:
        raise ValueError(f"unknown store format {fmt!r}")


def read_store(path: str | Path) -> tuple[EmbeddingVector, ...]:
    """Read either store format back; the packed header is self-identifying."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == STORE_MAGIC:
        return _read_packed(data)
    return _read_jsonl(data)


def _read_packed(data: bytes) -> tuple[EmbeddingVector, ...]:
    header_end = 4 + _HEADER.size
    if len(data) < header_end:
        raise FormatError("truncated packed header", offset=len(data))
    version, dim, count = _HEADER.unpack_from(data, 4)
    if version != STORE_VERSION:
        raise VersionUnsupported(f"packed store version {version}; this reader speaks {STORE_VERSION}")
    vectors = []
    offset = header_end
    for i in range(count):
        if offset + _ID_LEN.size > len(data):
            raise FormatError(f"record {i}: id length truncated", offset=offset)
        (id_len,) = _ID_LEN.unpack_from(data, offset)
        offset += _ID_LEN.size
        if offset + id_len > len(data):
            raise FormatError(f"record {i}: id truncated", offset=offset)
        try:
            vec_id = data[offset:offset + id_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"record {i}: id is not UTF-8", offset=offset) from exc
        offset += id_len
        vec_bytes = dim * 4
        if offset + vec_bytes > len(data):
            raise FormatError(f"record {i}: vector truncated", offset=offset)
        values = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).astype(np.float64)
        offset += vec_bytes
        vectors.append(EmbeddingVector(id=vec_id, values=values))
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes after last record", offset=offset)
    return tuple(vectors)


def _read_jsonl(data: bytes) -> tuple[EmbeddingVector, ...]:
    vectors = []
    offset = 0
    for raw_line in data.split(b"\n"):
        line = raw_line.decode("utf-8", errors="replace").strip()
        if line:
            try:
                obj = json.loads(line)
                values = np.asarray(obj["vector"], dtype=np.float64)
                if obj["dim"] != len(values):
                    raise ValueError(f"dim field {obj['dim']} != vector length {len(values)}")
                vectors.append(EmbeddingVector(
                    id=str(obj["id"]), values=values, model_tag=str(obj.get("model", "")),
                ))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"bad JSONL record: {exc}", offset=offset) from exc
        offset += len(raw_line) + 1
    return tuple(vectors)
