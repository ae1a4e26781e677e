"""Plain-text model files laid out like a lambda table.

    # optional comments
    label: Deterministic no-signaling model IV (p=1/2)
    pairing: FullyLocal
    lambda  A_x  A_x'  B_y  B_y'  C_z  C_z'  rho(x'yz)  rho(xy'z)  rho(xyz')  rho(x'y'z')
    1       +1   +1    +1   +1    +1   +1    1          1/2        1          1/2
    2       -1   +1    +1   -1    +1   +1    0          1/2        0          1/2

Response columns are named by the pairing (``AB_xy'`` and so on for joint
pairings) and hold +1 or -1.  ``rho(...)`` columns hold exact rationals such
as ``1/2``; decimals like ``0.25`` are read exactly as well.  A strategy file
is the same table without rho columns.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .scenario import (
    Context, MDLModel, ModelError, Pairing, ResponseTable, build_model, fmt_number, is_exact,
)

_TOKEN = re.compile(r"\S+")
_RHO = re.compile(r"^rho\((.+)\)$")


class ModelFileError(ModelError):
    def __init__(self, message: str, line: int = 0, column: int = 0, path: str = "<model>"):
        self.line, self.column, self.path = line, column, path
        where = f"{path}:{line}:{column}" if line else path
        super().__init__(f"{where}: {message}")


def _tokens(line: str):
    return [(m.start() + 1, m.group()) for m in _TOKEN.finditer(line)]


def _parse(text: str, path: str, need_rho: bool):
    label, pairing = "", None
    header = None
    header_line = 0
    rows: List[Tuple[int, List[Tuple[int, str]]]] = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if header is None:
            key, sep, val = line.partition(":")
            if sep and key.strip().lower() in ("label", "pairing"):
                k = key.strip().lower()
                if k == "label":
                    label = val.strip()
                else:
                    try:
                        pairing = Pairing.parse(val)
                    except ModelError as e:
                        raise ModelFileError(str(e), ln, raw.index(":") + 2, path) from None
                continue
            toks = _tokens(line)
            if toks[0][1].lower() != "lambda":
                raise ModelFileError("expected a header row starting with 'lambda'", ln, toks[0][0], path)
            header, header_line = toks, ln
            continue
        rows.append((ln, _tokens(line)))
    if pairing is None:
        raise ModelFileError("missing 'pairing:' directive", 0, 0, path)
    if header is None:
        raise ModelFileError("missing header row", 0, 0, path)

    resp_cols = list(pairing.columns)
    resp_idx: Dict[str, int] = {}
    ctx_cols: List[Tuple[int, Context, int]] = []
    for i, (col, name) in enumerate(header[1:], 1):
        m = _RHO.match(name)
        if m:
            try:
                ctx = Context.parse(m.group(1))
            except ModelError as e:
                raise ModelFileError(str(e), header_line, col, path) from None
            if any(c == ctx for _, c, _ in ctx_cols):
                raise ModelFileError(f"context {ctx} appears twice", header_line, col, path)
            ctx_cols.append((i, ctx, col))
        elif name in resp_cols:
            if name in resp_idx:
                raise ModelFileError(f"column {name} appears twice", header_line, col, path)
            resp_idx[name] = i
        else:
            raise ModelFileError(
                f"unknown column {name!r} for pairing {pairing.value} (expected {' '.join(resp_cols)} or rho(...))",
                header_line, col, path)
    for name in resp_cols:
        if name not in resp_idx:
            raise ModelFileError(f"missing response column {name}", header_line, 1, path)
    if need_rho and not ctx_cols:
        raise ModelFileError("no rho(...) columns", header_line, 1, path)
    if not rows:
        raise ModelFileError("no hidden-variable rows", header_line, 1, path)

    resp_rows, dist = [], {ctx: [] for _, ctx, _ in ctx_cols}
    for k, (ln, toks) in enumerate(rows, 1):
        if len(toks) != len(header):
            col = toks[min(len(toks), len(header)) - 1][0] if toks else 1
            raise ModelFileError(f"expected {len(header)} fields, found {len(toks)}", ln, col, path)
        if toks[0][1] != str(k):
            raise ModelFileError(f"expected lambda index {k}, found {toks[0][1]!r}", ln, toks[0][0], path)
        r = []
        for name in resp_cols:
            col, tok = toks[resp_idx[name]]
            if tok in ("+1", "1"):
                r.append(1)
            elif tok == "-1":
                r.append(-1)
            else:
                raise ModelFileError(f"response {name} must be +1 or -1, got {tok!r}", ln, col, path)
        resp_rows.append(tuple(r))
        for i, ctx, _ in ctx_cols:
            col, tok = toks[i]
            try:
                v = Fraction(tok)
            except (ValueError, ZeroDivisionError):
                raise ModelFileError(f"rho({ctx}) entry {tok!r} is not a rational number", ln, col, path) from None
            if v < 0:
                raise ModelFileError(f"rho({ctx}) entry {tok} is negative", ln, col, path)
            dist[ctx].append(v)
    for _, ctx, col in ctx_cols:
        tot = sum(dist[ctx], Fraction(0))
        if tot != 1:
            raise ModelFileError(
                f"distribution rho({ctx}) sums to {fmt_number(tot)}, expected 1", header_line, col, path)
    try:
        responses = ResponseTable(pairing, tuple(resp_rows))
    except ModelError as e:
        raise ModelFileError(str(e), header_line, 1, path) from None
    return label, responses, dist, header_line, ctx_cols


def loads_model(text: str, path: str = "<model>") -> MDLModel:
    label, responses, dist, hl, ctx_cols = _parse(text, path, True)
    try:
        return build_model(responses, dist, label)
    except ModelError as e:
        col = 1
        for _, ctx, c in ctx_cols:
            if f"{ctx} " in str(e) or f"({ctx})" in str(e):
                col = c
        raise ModelFileError(str(e), hl, col, path) from None


def loads_strategy(text: str, path: str = "<strategy>") -> ResponseTable:
    """Response table from a model or strategy file; rho columns are ignored."""
    return _parse(text, path, False)[1]


def read_model(path: str) -> MDLModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read(), path)


def read_strategy(path: str) -> ResponseTable:
    with open(path, encoding="utf-8") as fh:
        return loads_strategy(fh.read(), path)


def _sign(v: int) -> str:
    return "+1" if v > 0 else "-1"


def dumps_table(responses: ResponseTable, distributions: Optional[Dict[Context, tuple]] = None,
                label: str = "") -> str:
    head = ["lambda"] + list(responses.pairing.columns)
    ctxs = list(distributions or {})
    head += [f"rho({c})" for c in ctxs]
    body = []
    for lam, r in enumerate(responses.rows):
        row = [str(lam + 1)] + [_sign(v) for v in r]
        row += [fmt_number(distributions[c][lam]) for c in ctxs]
        body.append(row)
    widths = [max(len(x) for x in col) for col in zip(head, *body)]

    def line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    out = []
    if label:
        out.append(f"label: {label}")
    out.append(f"pairing: {responses.pairing.value}")
    out.append(line(head))
    out.extend(line(b) for b in body)
    return "\n".join(out) + "\n"


def dumps_model(model: MDLModel) -> str:
    if not model.exact:
        raise ModelError("model files hold exact rationals; this model has float entries")
    return dumps_table(model.responses, dict(model.distributions), model.label)


def write_model(model: MDLModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))
