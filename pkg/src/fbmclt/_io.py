"""Header-stamped JSON and CSV writers.

Every file starts with a line carrying the package version and the config
hash.  Floats go through ``repr`` so reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__


def config_hash(payload: dict) -> str:
    """Short sha256 of the canonical JSON form of ``payload``."""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def header_line(cfg_hash: str) -> str:
    return f"fbmclt {__version__} config={cfg_hash}"


def write_json(path, cfg_hash: str, payload: dict) -> Path:
    """JSON object whose first line is the ``"header"`` member."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = json.dumps(payload, indent=1)
    head = '{"header": ' + json.dumps(header_line(cfg_hash))
    text = head + ("\n}" if body == "{}" else ",\n" + body[2:])
    path.write_text(text + "\n", encoding="utf-8")
    return path


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, cfg_hash: str, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# " + header_line(cfg_hash), ",".join(columns)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_header(path) -> str:
    """First line of an emitted file, stripped of CSV/JSON decoration."""
    first = Path(path).read_text(encoding="utf-8").splitlines()[0]
    if first.startswith("# "):
        return first[2:]
    if first.startswith('{"header": '):
        return json.loads(first[len('{"header": '):].rstrip(","))
    return first
