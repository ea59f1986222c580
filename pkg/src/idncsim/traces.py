"""Per-packet importance traces.

Plain CSV with header ``packet_id,importance``; lines starting with ``#`` are
comments. Rows are grouped, in file order, into blocks of ``block_size``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .errors import TraceParseError
from .model import PacketUniverse

HEADER = ("packet_id", "importance")


@dataclass(frozen=True)
class ImportanceTrace:
    blocks: tuple  # each block: tuple of (packet_id, importance)
    block_size: int
    path: str = None

    def __len__(self):
        return len(self.blocks)

    def importances(self, block):
        return [imp for _, imp in self.blocks[block]]

    def universe(self, block, n_devices):
        """Universe for one block with every device sharing the importances."""
        return PacketUniverse.broadcast(self.importances(block), n_devices)

    def summary(self):
        flat = [imp for b in self.blocks for _, imp in b]
        totals = [math.fsum(imp for _, imp in b) for b in self.blocks]
        return {
            "path": self.path,
            "blocks": len(self.blocks),
            "block_size": self.block_size,
            "packets": len(flat),
            "mean_importance": math.fsum(flat) / len(flat) if flat else 0.0,
            "max_importance": max(flat, default=0.0),
            "zero_importance_packets": sum(1 for x in flat if x == 0),
            "mean_block_total": math.fsum(totals) / len(totals) if totals else 0.0,
        }


def load_trace(path, block_size=10):
    if block_size < 1:
        raise TraceParseError(path, 0, "block size must be >= 1")
    rows = []
    header_seen = False
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise TraceParseError(path, 0, f"cannot open trace: {exc.strerror}") from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = next(csv.reader([line]))
            fields = [f.strip() for f in fields]
            if not header_seen:
                if tuple(f.lower() for f in fields) != HEADER:
                    raise TraceParseError(path, lineno, "expected header 'packet_id,importance'")
                header_seen = True
                continue
            if len(fields) != 2:
                raise TraceParseError(path, lineno, f"expected 2 fields, got {len(fields)}")
            try:
                pid = int(fields[0])
            except ValueError:
                raise TraceParseError(path, lineno, f"bad packet id {fields[0]!r}") from None
            try:
                imp = float(fields[1])
            except ValueError:
                raise TraceParseError(path, lineno, f"bad importance {fields[1]!r}") from None
            if not math.isfinite(imp) or imp < 0:
                raise TraceParseError(path, lineno, f"importance must be finite and >= 0, got {fields[1]}")
            rows.append((lineno, pid, imp))
    if not header_seen:
        raise TraceParseError(path, 0, "empty trace")
    if not rows:
        raise TraceParseError(path, 0, "trace has no rows")
    if len(rows) % block_size:
        start = rows[len(rows) - len(rows) % block_size][0]
        raise TraceParseError(path, start,
                              f"last block has {len(rows) % block_size} rows, expected {block_size}")
    blocks = tuple(tuple((pid, imp) for _, pid, imp in rows[i:i + block_size])
                   for i in range(0, len(rows), block_size))
    return ImportanceTrace(blocks, block_size, str(path))


def write_trace(path, rows, comment=None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for pid, imp in rows:
            w.writerow([int(pid), repr(float(imp))])
