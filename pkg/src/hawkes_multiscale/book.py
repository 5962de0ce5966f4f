"""Level-one order-book ingestion and event classification.

Raw updates are snapshots of one side's best quote after each book change.
Classification maintains the mid-price and emits one of eight components per
update: an upward or downward mid move (P_a / P_b, whatever order type caused
it), or a trade / limit insertion / cancellation at the ask or bid that left
the mid unchanged (T, L, C).  An update that both moves the mid and changes a
queue emits the price event alone; every input record is either classified or
dropped with a counted reason.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analytics import BOOK_LABELS
from .errors import DataFormatError
from .events import EventStream, make_stream

ASK = "ask"
BID = "bid"
_KINDS = ("trade", "insert", "delete")


@dataclass(frozen=True)
class BookUpdate:
    timestamp: float        # seconds, microsecond precision
    side: str               # "ask" | "bid"
    best_price: float       # ticks
    best_qty: float         # contracts at the best level
    kind: str | None = None  # "trade" | "insert" | "delete" when the feed provides it

    def __post_init__(self):
        for name in ("timestamp", "best_price", "best_qty"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.side not in (ASK, BID):
            raise DataFormatError(f"side must be 'ask' or 'bid', got {self.side!r}")
        if self.kind is not None and self.kind not in _KINDS:
            raise DataFormatError(f"unknown update kind {self.kind!r}")
        if not self.best_price > 0:
            raise DataFormatError(f"price must be positive, got {self.best_price}")
        if self.best_qty < 0:
            raise DataFormatError(f"quantity must be >= 0, got {self.best_qty}")


@dataclass
class ClassificationStats:
    emitted: dict = field(default_factory=dict)
    dropped: dict = field(default_factory=dict)
    inferred_kinds: int = 0

    def drop(self, reason):
        self.dropped[reason] = self.dropped.get(reason, 0) + 1

    def emit(self, label):
        self.emitted[label] = self.emitted.get(label, 0) + 1

    @property
    def total_emitted(self):
        return sum(self.emitted.values())

    @property
    def total_dropped(self):
        return sum(self.dropped.values())

    def as_dict(self):
        return {
            "emitted": dict(sorted(self.emitted.items())),
            "dropped": dict(sorted(self.dropped.items())),
            "inferred_kinds": self.inferred_kinds,
        }


_COMP = {lab: k for k, lab in enumerate(BOOK_LABELS)}


def classify_book_events(updates, horizon=None):
    """Classify a time-ordered update sequence into the eight components.

    Returns (EventStream, ClassificationStats).  Raises DataFormatError on a
    non-monotone timestamp.  Updates arriving before both sides of the book
    are known are dropped (reason "book-incomplete"); state-identical updates
    are dropped (reason "no-change").
    """
    stats = ClassificationStats()
    times = [[] for _ in BOOK_LABELS]
    book = {ASK: None, BID: None}  # side -> (price, qty)
    last_t = -np.inf
    for n, u in enumerate(updates):
        if u.timestamp < last_t:
            raise DataFormatError(
                f"record {n}: timestamp {u.timestamp!r} decreases (previous {last_t!r})"
            )
        last_t = u.timestamp
        prev = book[u.side]
        other = book[BID if u.side == ASK else ASK]
        book[u.side] = (u.best_price, u.best_qty)
        if prev is None or other is None:
            stats.drop("book-incomplete")
            continue
        old_mid = 0.5 * (prev[0] + other[0])
        new_mid = 0.5 * (u.best_price + other[0])
        if new_mid > old_mid:
            label = "P_a"
        elif new_mid < old_mid:
            label = "P_b"
        else:
            kind = u.kind
            if kind is None:
                kind = _infer_kind(prev, (u.best_price, u.best_qty))
                if kind is not None:
                    stats.inferred_kinds += 1
            if kind is None:
                stats.drop("no-change")
                continue
            suffix = "a" if u.side == ASK else "b"
            label = {"trade": "T_", "insert": "L_", "delete": "C_"}[kind] + suffix
        stats.emit(label)
        times[_COMP[label]].append(u.timestamp)

    if horizon is None:
        horizon = (last_t + 1e-6) if np.isfinite(last_t) else 1.0
    stream = make_stream(
        [np.asarray(t) for t in times],
        horizon=horizon,
        labels=BOOK_LABELS,
        metadata={"generator": "book-classification", **stats.as_dict()},
    )
    return stream, stats


def _infer_kind(prev, new):
    """State-diff fallback when the feed carries no explicit update kind.

    Queue growth at the same price is an insertion, shrinkage a cancellation;
    trades cannot be told apart from cancellations without a flag, so plain
    quantity drops count as deletions.
    """
    p0, q0 = prev
    p1, q1 = new
    if p1 == p0:
        if q1 > q0:
            return "insert"
        if q1 < q0:
            return "delete"
        return None
    # price changed with the mid unchanged cannot happen from one side alone
    return None


def parse_timestamp_us(text: str) -> float:
    """Parse decimal seconds with exact microsecond handling.

    The integer microsecond count is formed first and divided by 1e6 once,
    so '1.000001' and '1.0000010' land on the identical float64.
    """
    text = text.strip()
    if not text:
        raise DataFormatError("empty timestamp")
    neg = text.startswith("-")
    if neg:
        raise DataFormatError(f"negative timestamp {text!r}")
    whole, _, frac = text.partition(".")
    try:
        us = int(whole or "0") * 1_000_000 + int((frac or "0").ljust(6, "0")[:6])
    except ValueError as exc:
        raise DataFormatError(f"bad timestamp {text!r}") from exc
    return us / 1e6


def read_book_updates(path):
    """Read updates from TSV: timestamp, side, best_price, best_qty[, kind].

    Lines starting with '#' are comments.  Raises DataFormatError with the
    line number on malformed records.
    """
    updates = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (4, 5):
                raise DataFormatError(
                    f"line {ln}: expected 4 or 5 tab-separated fields, got {len(parts)}"
                )
            try:
                kind = parts[4] if len(parts) == 5 and parts[4] else None
                updates.append(
                    BookUpdate(
                        timestamp=parse_timestamp_us(parts[0]),
                        side=parts[1],
                        best_price=float(parts[2]),
                        best_qty=float(parts[3]),
                        kind=kind,
                    )
                )
            except DataFormatError as exc:
                raise DataFormatError(f"line {ln}: {exc}") from exc
            except ValueError as exc:
                raise DataFormatError(f"line {ln}: {exc}") from exc
    return updates


def write_book_updates(updates, path) -> None:
    from ._io import atomic_write_text

    lines = ["# book updates v1: timestamp<TAB>side<TAB>best_price<TAB>best_qty[<TAB>kind]"]
    for u in updates:
        kind = u.kind or ""
        lines.append(f"{u.timestamp!r}\t{u.side}\t{u.best_price!r}\t{u.best_qty!r}\t{kind}")
    atomic_write_text(path, "\n".join(lines) + "\n")
