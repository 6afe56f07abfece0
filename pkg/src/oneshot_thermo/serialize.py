"""Deterministic JSON/CSV emission.

Doubles print with 17 significant digits (round-trip exact); the +inf/-inf
sentinels serialize as the strings "inf"/"-inf".  JSON keys keep insertion
order and no whitespace varies with the data, so identical inputs give
byte-identical output.  CSV is RFC-4180 (CRLF, quoted fields when needed)
with a mandatory header row; an optional metadata block is emitted as '#'
comment lines above the header.
"""

import io
import math


def format_double(x):
    x = float(x)
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if math.isnan(x):
        return '"nan"'
    if x == 0.0:
        x = 0.0  # normalize -0.0
    return f"{x:.17g}"


def _fmt_csv_double(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    if x == 0.0:
        x = 0.0
    return f"{x:.17g}"


def dumps_json(obj, indent=0):
    """Serialize nested dict/list/scalars with the double convention above."""
    out = io.StringIO()
    _write_json(obj, out, indent, 0)
    out.write("\n")
    return out.getvalue()


def _escape(s):
    return (
        s.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )


def _write_json(obj, out, indent, depth):
    pad = " " * (indent * (depth + 1)) if indent else ""
    pad_close = " " * (indent * depth) if indent else ""
    sep = "\n" if indent else ""
    if obj is None:
        out.write("null")
    elif isinstance(obj, bool):
        out.write("true" if obj else "false")
    elif isinstance(obj, int):
        out.write(str(obj))
    elif isinstance(obj, float):
        out.write(format_double(obj))
    elif isinstance(obj, str):
        out.write(f'"{_escape(obj)}"')
    elif isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{" + sep)
        for i, (k, v) in enumerate(obj.items()):
            out.write(f'{pad}"{_escape(str(k))}":' + (" " if indent else ""))
            _write_json(v, out, indent, depth + 1)
            out.write(("," if i < len(obj) - 1 else "") + sep)
        out.write(pad_close + "}")
    elif isinstance(obj, (list, tuple)):
        if not len(obj):
            out.write("[]")
            return
        out.write("[" + sep)        # noqa: consistency with dict branch
        for i, v in enumerate(obj):
            out.write(pad)
            _write_json(v, out, indent, depth + 1)
            out.write(("," if i < len(obj) - 1 else "") + sep)
        out.write(pad_close + "]")
    else:
        try:
            out.write(format_double(float(obj)))
        except (TypeError, ValueError):
            out.write(f'"{_escape(str(obj))}"')


def _csv_field(v):
    if isinstance(v, str):
        if any(c in v for c in ',"\r\n'):
            return '"' + v.replace('"', '""') + '"'
        return v
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return _fmt_csv_double(v)


def dumps_csv(header, rows, metadata=None):
    """RFC-4180 body with mandatory header; metadata as '#' comment lines."""
    lines = []
    if metadata:
        for k, v in metadata.items():
            lines.append(f"# {k} = {_csv_field(v)}")
    lines.append(",".join(_csv_field(h) for h in header))
    for row in rows:
        lines.append(",".join(_csv_field(v) for v in row))
    return "\r\n".join(lines) + "\r\n"
