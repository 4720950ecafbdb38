"""
Plain-text file formats.

* challenge file: one challenge per line, space-separated ``+1``/``-1`` tokens, optional
  ``# n=<n>`` header
* CRP file: a challenge line, a tab, then the response token
* model file: ``n``, then the n+1 weights, then the bias, one value per line
* trace CSV: ``replica,crp_count,k,learner,noise_p,test_accuracy``

Readers raise :class:`FormatError` naming the offending line.
"""
from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass

import numpy as np

from .learner import LinearModel
from .puf import CHALLENGE_DTYPE, CrpSet

__all__ = [
    "FormatError", "TraceRow", "TRACE_COLUMNS",
    "write_challenges", "read_challenges", "write_crps", "read_crps",
    "write_model", "read_model", "write_trace", "read_trace",
]

TRACE_COLUMNS = ("replica", "crp_count", "k", "learner", "noise_p", "test_accuracy")
_HEADER = re.compile(r"#\s*n\s*=\s*(\d+)\s*$")
_TOKENS = {"+1": 1, "1": 1, "-1": -1}


class FormatError(ValueError):
    """Malformed input file; ``line`` is 1-based."""

    def __init__(self, path, line: int, message: str):
        self.path, self.line = str(path), line
        super().__init__(f"{path}:{line}: {message}")


def _fmt_challenge(c) -> str:
    return " ".join("+1" if v > 0 else "-1" for v in c)


def _parse_challenge(text: str, path, lineno: int, width: int | None) -> list[int]:
    tokens = text.split()
    if not tokens:
        raise FormatError(path, lineno, "empty challenge")
    try:
        row = [_TOKENS[t] for t in tokens]
    except KeyError as e:
        raise FormatError(path, lineno, f"bad token {e.args[0]!r}, expected +1 or -1") from None
    if len(row) < 2:
        raise FormatError(path, lineno, "challenge needs at least 2 tokens (n >= 1 plus the trailing +1)")
    if row[-1] != 1:
        raise FormatError(path, lineno, "last challenge token must be +1")
    if width is not None and len(row) != width:
        raise FormatError(path, lineno, f"expected {width} tokens, got {len(row)}")
    return row


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            yield lineno, line.rstrip("\r\n")


def _body(path):
    """Yield (lineno, text) for data lines and the n from a ``# n=`` header, if any."""
    n = None
    rows = []
    for lineno, line in _lines(path):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            m = _HEADER.match(stripped)
            if m:
                if rows or n is not None:
                    raise FormatError(path, lineno, "the '# n=' header must come before any data")
                n = int(m.group(1))
                if n < 1:
                    raise FormatError(path, lineno, "n must be >= 1")
            continue
        rows.append((lineno, line))
    return n, rows


def write_challenges(path, challenges, header: bool = True) -> None:
    c = np.atleast_2d(np.asarray(challenges))
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# n={c.shape[1] - 1}\n")
        for row in c:
            fh.write(_fmt_challenge(row) + "\n")


def read_challenges(path) -> np.ndarray:
    """
    :return: int8 array of shape (N, n+1)
    :raises FormatError: bad token, wrong length, or a last token other than +1
    """
    n, rows = _body(path)
    width = None if n is None else n + 1
    out = []
    for lineno, line in rows:
        row = _parse_challenge(line, path, lineno, width)
        width = len(row)
        out.append(row)
    if not out:
        if width is None:
            raise FormatError(path, 1, "no challenges and no '# n=' header")
        return np.empty((0, width), dtype=CHALLENGE_DTYPE)
    return np.array(out, dtype=CHALLENGE_DTYPE)


def write_crps(path, crps: CrpSet, header: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# n={crps.n}\n")
        for c, r in zip(crps.challenges, crps.responses):
            fh.write(f"{_fmt_challenge(c)}\t{'+1' if r > 0 else '-1'}\n")


def read_crps(path) -> CrpSet:
    n, rows = _body(path)
    width = None if n is None else n + 1
    ch, resp = [], []
    for lineno, line in rows:
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(path, lineno, "expected '<challenge>\\t<response>'")
        row = _parse_challenge(parts[0], path, lineno, width)
        width = len(row)
        token = parts[1].strip()
        if token not in _TOKENS:
            raise FormatError(path, lineno, f"bad response {token!r}, expected +1 or -1")
        ch.append(row)
        resp.append(_TOKENS[token])
    if not ch:
        if width is None:
            raise FormatError(path, 1, "no CRPs and no '# n=' header")
        return CrpSet.empty(width - 1)
    return CrpSet(np.array(ch, dtype=CHALLENGE_DTYPE), np.array(resp, dtype=CHALLENGE_DTYPE))


def write_model(path, model: LinearModel) -> None:
    # 17 significant digits round-trip every float64 exactly
    values = [str(model.n)] + [format(float(v), ".17g") for v in model.weights] + [format(model.bias, ".17g")]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(values) + "\n")


def read_model(path) -> LinearModel:
    lines = [(i, t.strip()) for i, t in _lines(path) if t.strip()]
    if not lines:
        raise FormatError(path, 1, "empty model file")
    lineno, head = lines[0]
    try:
        n = int(head)
    except ValueError:
        raise FormatError(path, lineno, f"expected integer n, got {head!r}") from None
    if n < 1:
        raise FormatError(path, lineno, "n must be >= 1")
    if len(lines) != n + 3:
        last = lines[-1][0]
        raise FormatError(path, last, f"expected {n + 2} values after n={n}, found {len(lines) - 1}")
    vals = []
    for lineno, t in lines[1:]:
        try:
            v = float(t)
        except ValueError:
            raise FormatError(path, lineno, f"not a number: {t!r}") from None
        if not np.isfinite(v):
            raise FormatError(path, lineno, "value must be finite")
        vals.append(v)
    return LinearModel(np.array(vals[:-1]), vals[-1])


@dataclass(frozen=True)
class TraceRow:
    replica: int
    crp_count: int
    k: float | None
    learner: str
    noise_p: float
    test_accuracy: float


def write_trace(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in rows:
            w.writerow([r.replica, r.crp_count, "" if r.k is None else repr(float(r.k)), r.learner,
                        repr(float(r.noise_p)), repr(float(r.test_accuracy))])


def read_trace(path) -> list[TraceRow]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACE_COLUMNS:
            raise FormatError(path, 1, f"expected header {','.join(TRACE_COLUMNS)}")
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != len(TRACE_COLUMNS):
                raise FormatError(path, lineno, f"expected {len(TRACE_COLUMNS)} fields, got {len(row)}")
            try:
                out.append(TraceRow(int(row[0]), int(row[1]), float(row[2]) if row[2] else None, row[3],
                                    float(row[4]), float(row[5])))
            except ValueError as e:
                raise FormatError(path, lineno, str(e)) from None
    return out


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return str(path)
