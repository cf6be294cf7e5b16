"""Plain-text quadratic-form files for the ``solve`` subcommand.

Layout, one item per line (blank lines and ``#`` comments ignored)::

    N
    re im        # B[0, 0]
    ...          # N*N entries of B, row-major
    re im        # b[0]
    ...          # N entries of b
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ris_sesd.errors import ParseError
from ris_sesd.ils_core import QuadraticForm

__all__ = ["parse_quadratic_form", "read_quadratic_form", "format_quadratic_form", "write_quadratic_form"]


def _content_lines(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def parse_quadratic_form(text: str) -> QuadraticForm:
    lines = _content_lines(text)
    try:
        lineno, first = next(lines)
    except StopIteration:
        raise ParseError("empty file", 1) from None
    try:
        N = int(first)
    except ValueError:
        raise ParseError(f"expected N, got {first!r}", lineno) from None
    if N < 1:
        raise ParseError(f"N must be >= 1, got {N}", lineno)
    values = []
    last = lineno
    for lineno, line in lines:
        last = lineno
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 're im', got {line!r}", lineno)
        try:
            values.append(complex(float(parts[0]), float(parts[1])))
        except ValueError:
            raise ParseError(f"non-numeric entry {line!r}", lineno) from None
        if len(values) > N * N + N:
            raise ParseError(f"too many entries (expected {N * N + N})", lineno)
    if len(values) != N * N + N:
        raise ParseError(f"expected {N * N + N} complex entries, found {len(values)}", last + 1)
    B = np.array(values[: N * N]).reshape(N, N)
    b = np.array(values[N * N:])
    return QuadraticForm(B=B, b=b)


def read_quadratic_form(path: str | Path) -> QuadraticForm:
    return parse_quadratic_form(Path(path).read_text())


def format_quadratic_form(form: QuadraticForm) -> str:
    out = [str(form.N)]
    for z in list(form.B.reshape(-1)) + list(form.b):
        out.append(f"{z.real:.17g} {z.imag:.17g}")
    return "\n".join(out) + "\n"


def write_quadratic_form(form: QuadraticForm, path: str | Path) -> None:
    Path(path).write_text(format_quadratic_form(form))
