"""Text formats: domain files, network files, coefficient specs, flat
key=value configs and CSV output."""

from __future__ import annotations

import math
from pathlib import Path

from .geometry import CoefficientField, Domain, SigmaNetwork


class ParseError(ValueError):
    def __init__(self, msg, path=None, line=None):
        loc = f"{path or '<input>'}:{line}: " if line is not None else ""
        super().__init__(f"{loc}{msg}")
        self.path, self.line = path, line


# ---------------------------------------------------------------------------
# domain files: `outer: x0 y0 x1 y1 ...` then zero or more `hole: ...`
# ---------------------------------------------------------------------------

def parse_domain(text: str, path=None) -> Domain:
    outer = None
    holes = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        if ':' not in line:
            raise ParseError("expected 'outer:' or 'hole:' line", path, ln)
        key, _, rest = line.partition(':')
        key = key.strip()
        try:
            nums = [float(t) for t in rest.split()]
        except ValueError as e:
            raise ParseError(f"bad coordinate: {e}", path, ln)
        if len(nums) < 6 or len(nums) % 2:
            raise ParseError("need an even number (>= 6) of coordinates", path, ln)
        pts = tuple(zip(nums[0::2], nums[1::2]))
        if key == 'outer':
            if outer is not None:
                raise ParseError("duplicate outer boundary", path, ln)
            outer = pts
        elif key == 'hole':
            holes.append(pts)
        else:
            raise ParseError(f"unknown key {key!r}", path, ln)
    if outer is None:
        raise ParseError("missing outer boundary", path)
    try:
        return Domain(outer, tuple(holes))
    except ValueError as e:
        raise ParseError(str(e), path)


def format_domain(domain: Domain) -> str:
    out = ["outer: " + " ".join(f"{x!r} {y!r}" for x, y in domain.outer)]
    for h in domain.holes:
        out.append("hole: " + " ".join(f"{x!r} {y!r}" for x, y in h))
    return "\n".join(out) + "\n"


def read_domain(path) -> Domain:
    return parse_domain(Path(path).read_text(), str(path))


# ---------------------------------------------------------------------------
# network files: `v <x> <y>` lines then `e <i> <j>` lines
# ---------------------------------------------------------------------------

def parse_sigma(text: str, path=None) -> SigmaNetwork:
    verts = []
    edges = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        toks = line.split()
        try:
            if toks[0] == 'v' and len(toks) == 3:
                verts.append((float(toks[1]), float(toks[2])))
            elif toks[0] == 'e' and len(toks) == 3:
                edges.append((int(toks[1]), int(toks[2])))
            else:
                raise ParseError("expected 'v x y' or 'e i j'", path, ln)
        except ParseError:
            raise
        except ValueError as e:
            raise ParseError(f"bad token: {e}", path, ln)
    try:
        return SigmaNetwork(tuple(verts), tuple(edges))
    except ValueError as e:
        raise ParseError(str(e), path)


def format_sigma(sigma: SigmaNetwork) -> str:
    out = [f"v {x!r} {y!r}" for x, y in sigma.vertices]
    out += [f"e {i} {j}" for i, j in sigma.edges]
    return "\n".join(out) + "\n"


def read_sigma(path) -> SigmaNetwork:
    return parse_sigma(Path(path).read_text(), str(path))


# ---------------------------------------------------------------------------
# coefficient specs: `kind=<constant|affine|radialq|exp|affinesq>
#                     params=<comma-separated reals>`
# ---------------------------------------------------------------------------

def parse_field(spec: str) -> CoefficientField:
    kind = None
    params = None
    for tok in spec.replace(';', ' ').split():
        key, _, val = tok.partition('=')
        if key == 'kind':
            kind = val
        elif key == 'params':
            try:
                params = tuple(float(v) for v in val.split(',') if v)
            except ValueError as e:
                raise ParseError(f"bad params in field spec {spec!r}: {e}")
        else:
            raise ParseError(f"unknown token {tok!r} in field spec")
    if kind is None or params is None:
        raise ParseError(f"field spec needs kind= and params=, got {spec!r}")
    try:
        return CoefficientField(kind, params)
    except ValueError as e:
        raise ParseError(str(e))


def format_field(field: CoefficientField) -> str:
    return f"kind={field.kind} params=" + ",".join(f"{p:g}" for p in field.params)


# ---------------------------------------------------------------------------
# flat configs: one `key=value` per line, '#' comments
# ---------------------------------------------------------------------------

def parse_config(text: str, path=None) -> dict[str, str]:
    out: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        if '=' not in line:
            raise ParseError("expected key=value", path, ln)
        key, _, val = line.partition('=')
        key = key.strip()
        if not key:
            raise ParseError("empty key", path, ln)
        out[key] = val.strip()
    return out


def write_csv(path, header: list[str], rows) -> None:
    """Deterministic CSV: %.12g floats, header first."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(f"{v:.12g}")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")
