"""Deterministic text formats for matrices, tables, reports and interactions.

Every float is printed with %.15g so that reruns of the same configuration
produce byte-identical artifacts; negative zero is normalized away for the
same reason.  The formats are line-based and binary-free:

matrix   header "latframe-matrix <rows> <cols> <window-hash>", then one
         "re im" pair per entry, row-major.
csv      comma-separated with a header row; fields never contain commas
         (site ids use the colon form "r:i:j").
json     plain JSON with sorted keys and two-space indent.
terms    one interaction term per line, "k f sites monomial"; sites are
         semicolon-joined "r:i:j" tokens and monomial factors append "*"
         for a creation operator.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .interactions import Interaction, InteractionError, InteractionTerm, MonomialDescriptor
from .lattice import LatticeError, Site, Window

__all__ = [
    "SerializeError",
    "fmt_float",
    "write_matrix_text",
    "read_matrix_text",
    "write_csv",
    "read_csv",
    "json_text",
    "write_json",
    "site_token",
    "parse_site_token",
    "interaction_lines",
    "parse_interaction_lines",
    "write_interaction",
    "read_interaction",
]


class SerializeError(ValueError):
    pass


def fmt_float(x: float) -> str:
    """15 significant digits, with -0 folded into 0."""
    x = float(x)
    if x == 0.0:
        x = 0.0  # drops the sign of -0.0
    if math.isnan(x) or math.isinf(x):
        raise SerializeError(f"non-finite value {x!r} in output")
    return "%.15g" % x


def _fmt_cell(value) -> str:
    if isinstance(value, str):
        if "," in value or "\n" in value:
            raise SerializeError(f"cell {value!r} contains a separator")
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt_float(float(value))
    raise SerializeError(f"unsupported cell type {type(value).__name__}")


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    width = len(header)
    for row in rows:
        if len(row) != width:
            raise SerializeError(f"row width {len(row)} mismatches header width {width}")
        lines.append(",".join(_fmt_cell(c) for c in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines:
        raise SerializeError(f"{path}: empty csv")
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def write_matrix_text(path: str | Path, matrix: np.ndarray, window_hash: str) -> None:
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise SerializeError(f"matrix must be 2-d, got shape {m.shape}")
    lines = [f"latframe-matrix {m.shape[0]} {m.shape[1]} {window_hash}"]
    for v in m.ravel():
        c = complex(v)
        lines.append(f"{fmt_float(c.real)} {fmt_float(c.imag)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix_text(path: str | Path) -> tuple[np.ndarray, str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("latframe-matrix "):
        raise SerializeError(f"{path}: missing matrix header")
    parts = lines[0].split()
    if len(parts) != 4:
        raise SerializeError(f"{path}: malformed header {lines[0]!r}")
    rows, cols = int(parts[1]), int(parts[2])
    if len(lines) - 1 != rows * cols:
        raise SerializeError(f"{path}: expected {rows * cols} entries, found {len(lines) - 1}")
    out = np.empty(rows * cols, dtype=np.complex128)
    for k, ln in enumerate(lines[1:]):
        re_s, im_s = ln.split()
        out[k] = float(re_s) + 1j * float(im_s)
    return out.reshape(rows, cols), parts[3]


def _json_value(obj, indent: int) -> str:
    pad = "  " * (indent + 1)
    close = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            if not isinstance(key, str):
                raise SerializeError(f"json keys must be strings, got {key!r}")
            items.append(f"{pad}{json.dumps(key)}: {_json_value(obj[key], indent + 1)}")
        return "{\n" + ",\n".join(items) + f"\n{close}}}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{pad}{_json_value(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + f"\n{close}]"
    raise SerializeError(f"unsupported json type {type(obj).__name__}")


def json_text(obj) -> str:
    """Canonical JSON: sorted keys, two-space indent, %.15g floats."""
    return _json_value(obj, 0) + "\n"


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json_text(obj), encoding="utf-8")


def site_token(site: Site) -> str:
    return f"{site.r}:{site.i}:{site.j}"


def parse_site_token(token: str) -> tuple[int, int, int]:
    parts = token.split(":")
    if len(parts) != 3:
        raise SerializeError(f"malformed site token {token!r}")
    try:
        r, i, j = (int(p) for p in parts)
    except ValueError as exc:
        raise SerializeError(f"malformed site token {token!r}") from exc
    return r, i, j


def interaction_lines(inter: Interaction) -> list[str]:
    """One term per line: degree, coupling, support sites, ordered monomial."""
    window = inter.window
    out = []
    for term in inter.terms:
        sites = ";".join(site_token(window.sites[k]) for k in sorted(term.support))
        mono = ";".join(
            site_token(window.sites[k]) + ("*" if dag else "")
            for k, dag in term.monomial.factors
        )
        out.append(f"{term.k} {fmt_float(term.coupling)} {sites} {mono}")
    return out


def parse_interaction_lines(lines: Iterable[str], window: Window) -> Interaction:
    terms = []
    for ln in lines:
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) != 4:
            raise SerializeError(f"malformed term line {ln!r}")
        try:
            k = int(parts[0])
            coupling = float(parts[1])
            support = frozenset(
                window.index(Site(*parse_site_token(tok))) for tok in parts[2].split(";")
            )
            factors = []
            for tok in parts[3].split(";"):
                dagger = tok.endswith("*")
                triple = parse_site_token(tok[:-1] if dagger else tok)
                factors.append((window.index(Site(*triple)), dagger))
            mono = MonomialDescriptor(factors=tuple(factors))
            term = InteractionTerm(support=support, k=k, coupling=coupling, monomial=mono)
        except SerializeError:
            raise
        except (ValueError, LatticeError, InteractionError) as exc:
            raise SerializeError(f"bad term line {ln!r}: {exc}") from exc
        terms.append(term)
    return Interaction(window=window, terms=tuple(terms))


def write_interaction(path: str | Path, inter: Interaction) -> None:
    Path(path).write_text("\n".join(interaction_lines(inter)) + "\n", encoding="utf-8")


def read_interaction(path: str | Path, window: Window) -> Interaction:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise SerializeError(f"{path}: {exc}") from exc
    return parse_interaction_lines(text.splitlines(), window)
