"""Plain-text instance files.

::

    MESP n s            DOPT n m q s
    <n rows of C>       <n rows of A>
                        <q rows of B>

Entries are whitespace separated and ``#`` starts a comment.  Floats are
written with ``repr`` so a file read back and re-written is byte-identical.
Offsets and provenance are not stored; a file always describes a root
instance.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .instances import DOptInstance, MespInstance


class ParseError(ValidationError):
    """Malformed instance file; ``line`` is 1-based (0 when not tied to a line)."""

    def __init__(self, msg, line=0):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


def _fmt_row(row):
    return " ".join(repr(float(v)) for v in row)


def dumps(inst):
    """Serialize a :class:`MespInstance` or :class:`DOptInstance`."""
    if isinstance(inst, MespInstance):
        lines = [f"MESP {inst.n} {inst.s}"]
        lines += [_fmt_row(r) for r in inst.C]
    else:
        B = np.asarray(inst.B)
        lines = [f"DOPT {inst.n} {inst.m} {B.shape[0]} {inst.s}"]
        lines += [_fmt_row(r) for r in inst.A]
        lines += [_fmt_row(r) for r in B]
    return "\n".join(lines) + "\n"


def _tokens(text):
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield no, body.split()


def _ints(fields, no, k, what):
    if len(fields) != k:
        raise ParseError(f"{what} header needs {k - 1} integers", no)
    try:
        vals = [int(f) for f in fields[1:]]
    except ValueError:
        raise ParseError(f"non-integer in {what} header", no) from None
    if any(v < 0 for v in vals):
        raise ParseError("header values must be non-negative", no)
    return vals


def _rows(lines, count, width, what):
    out = np.empty((count, width))
    for r in range(count):
        try:
            no, fields = next(lines)
        except StopIteration:
            raise ParseError(f"expected {count} rows of {what}, found {r}") from None
        if len(fields) != width:
            raise ParseError(f"row of {what} has {len(fields)} entries, expected {width}", no)
        try:
            out[r] = [float(f) for f in fields]
        except ValueError:
            raise ParseError(f"non-numeric entry in {what}", no) from None
        if not np.all(np.isfinite(out[r])):
            raise ParseError(f"non-finite entry in {what}", no)
    return out


def loads(text):
    """Parse an instance; errors carry the offending line number."""
    lines = _tokens(text)
    try:
        no, head = next(lines)
    except StopIteration:
        raise ParseError("empty instance file") from None
    tag = head[0].upper()
    if tag == "MESP":
        n, s = _ints(head, no, 3, "MESP")
        C = _rows(lines, n, n, "C")
        build = lambda: MespInstance(C, s)  # noqa: E731
    elif tag == "DOPT":
        n, m, q, s = _ints(head, no, 5, "DOPT")
        if q < 1:
            raise ParseError("q must be at least 1", no)
        A = _rows(lines, n, m, "A")
        B = _rows(lines, q, m, "B")
        build = lambda: DOptInstance(A, B, s)  # noqa: E731
    else:
        raise ParseError(f"unknown header {head[0]!r}; expected MESP or DOPT", no)
    extra = next(lines, None)
    if extra is not None:
        raise ParseError("unexpected data after the last row", extra[0])
    try:
        return build()
    except ValidationError as exc:
        raise ParseError(str(exc), no) from exc


def read_instance(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def write_instance(inst, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(inst))
