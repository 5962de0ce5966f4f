"""Event streams: D sorted timestamp arrays on [0, T), plus file formats.

Two on-disk forms:

* text: one header line, then ``timestamp<TAB>label`` records sorted by
  timestamp (ties resolved by component order);
* binary columnar: magic ``HWEV1\\n``, a length-prefixed JSON header, then per
  component a little-endian uint64 count followed by that many float64
  seconds.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ._io import atomic_write_bytes, atomic_write_text
from .errors import DataFormatError, ParameterError

JITTER = 1e-9  # deterministic tie-break step within a component, seconds


@dataclass(frozen=True)
class EventStream:
    times: tuple  # D sorted float64 arrays
    horizon: float
    labels: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.horizon > 0:
            raise ParameterError(f"horizon must be > 0, got {self.horizon}")
        if len(self.times) != len(self.labels):
            raise ParameterError("one label per component required")
        frozen = []
        for k, arr in enumerate(self.times):
            a = np.asarray(arr, dtype=float)
            if a.ndim != 1:
                raise ParameterError("each component must be a 1-d array")
            if a.size and (a[0] < 0 or a[-1] >= self.horizon):
                raise DataFormatError(
                    f"component {self.labels[k]!r} has timestamps outside [0, horizon)"
                )
            if a.size > 1 and not np.all(np.diff(a) > 0):
                raise DataFormatError(
                    f"component {self.labels[k]!r} timestamps are not strictly increasing"
                )
            a = a.copy()
            a.flags.writeable = False
            frozen.append(a)
        object.__setattr__(self, "times", tuple(frozen))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dimension(self) -> int:
        return len(self.times)

    @property
    def counts(self) -> np.ndarray:
        return np.array([a.size for a in self.times], dtype=np.int64)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def make_stream(times, horizon, labels, metadata=None) -> EventStream:
    """Build an EventStream from raw per-component arrays.

    Sorts each component, drops events outside [0, horizon), and enforces
    strict ordering by bumping ties with a deterministic 1 ns jitter (the
    number of bumped timestamps is recorded in the metadata).
    """
    meta = dict(metadata or {})
    cleaned = []
    bumped = 0
    for arr in times:
        a = np.sort(np.asarray(arr, dtype=float))
        a = a[(a >= 0.0) & (a < horizon)]
        a, nb = _strictify(a)
        bumped += nb
        a = a[a < horizon]
        cleaned.append(a)
    meta["tie_jitter_count"] = bumped
    return EventStream(times=tuple(cleaned), horizon=float(horizon), labels=tuple(labels), metadata=meta)


def _strictify(a):
    """Make a sorted array strictly increasing with minimal forward bumps."""
    if a.size < 2:
        return a, 0
    bumped = 0
    out = a.copy()
    for k in range(1, out.size):
        if out[k] <= out[k - 1]:
            step = max(JITTER, np.spacing(out[k - 1]))
            out[k] = out[k - 1] + step
            bumped += 1
    return out, bumped


# --- text format ---------------------------------------------------------

def dumps_events(stream: EventStream) -> str:
    head = {
        "format": "hawkes-events",
        "version": 1,
        "dimension": stream.dimension,
        "horizon": stream.horizon,
        "labels": list(stream.labels),
    }
    for key in ("seed", "model_hash", "generator"):
        if key in stream.metadata:
            head[key] = stream.metadata[key]
    lines = ["# " + json.dumps(head, sort_keys=True)]
    merged_t = np.concatenate(stream.times) if stream.dimension else np.empty(0)
    merged_c = np.concatenate(
        [np.full(a.size, k, dtype=np.int64) for k, a in enumerate(stream.times)]
    ) if stream.dimension else np.empty(0, dtype=np.int64)
    order = np.lexsort((merged_c, merged_t))
    labels = stream.labels
    for idx in order:
        lines.append(f"{float(merged_t[idx])!r}\t{labels[merged_c[idx]]}")
    return "\n".join(lines) + "\n"


def loads_events(text: str) -> EventStream:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise DataFormatError("missing event-stream header line")
    try:
        head = json.loads(lines[0][2:])
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"bad event-stream header: {exc}") from exc
    if head.get("format") != "hawkes-events":
        raise DataFormatError("not a hawkes-events file")
    labels = tuple(head["labels"])
    index = {lab: k for k, lab in enumerate(labels)}
    per = [[] for _ in labels]
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataFormatError(f"line {ln}: expected 'time<TAB>label'")
        try:
            t = float(parts[0])
            k = index[parts[1]]
        except (ValueError, KeyError) as exc:
            raise DataFormatError(f"line {ln}: bad record {line!r}") from exc
        per[k].append(t)
    meta = {k: head[k] for k in ("seed", "model_hash", "generator") if k in head}
    times = tuple(np.asarray(p, dtype=float) for p in per)
    return EventStream(times=times, horizon=float(head["horizon"]), labels=labels, metadata=meta)


def write_events(stream: EventStream, path) -> None:
    atomic_write_text(path, dumps_events(stream))


def read_events(path) -> EventStream:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_events(fh.read())


# --- binary format ---------------------------------------------------------

_MAGIC = b"HWEV1\n"


def dumps_events_binary(stream: EventStream) -> bytes:
    head = {
        "dimension": stream.dimension,
        "horizon": stream.horizon,
        "labels": list(stream.labels),
    }
    for key in ("seed", "model_hash", "generator"):
        if key in stream.metadata:
            head[key] = stream.metadata[key]
    hb = json.dumps(head, sort_keys=True).encode("utf-8")
    parts = [_MAGIC, struct.pack("<Q", len(hb)), hb]
    for a in stream.times:
        parts.append(struct.pack("<Q", a.size))
        parts.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
    return b"".join(parts)


def loads_events_binary(data: bytes) -> EventStream:
    if not data.startswith(_MAGIC):
        raise DataFormatError("not a hawkes binary event file")
    off = len(_MAGIC)
    (hlen,) = struct.unpack_from("<Q", data, off)
    off += 8
    head = json.loads(data[off:off + hlen].decode("utf-8"))
    off += hlen
    times = []
    for _ in range(head["dimension"]):
        (n,) = struct.unpack_from("<Q", data, off)
        off += 8
        arr = np.frombuffer(data, dtype="<f8", count=n, offset=off).astype(float)
        off += 8 * n
        times.append(arr)
    meta = {k: head[k] for k in ("seed", "model_hash", "generator") if k in head}
    return EventStream(
        times=tuple(times),
        horizon=float(head["horizon"]),
        labels=tuple(head["labels"]),
        metadata=meta,
    )


def write_events_binary(stream: EventStream, path) -> None:
    atomic_write_bytes(path, dumps_events_binary(stream))


def read_events_binary(path) -> EventStream:
    with open(path, "rb") as fh:
        return loads_events_binary(fh.read())
