"""Plain-text model files.

Grammar (``#`` starts a comment; blank lines are ignored)::

    [dims]
    nu = 3
    name = cubic-cosine          # optional

    [w0]
    1.0                          # a single decimal number

    [w1]                         # records: k_1 ... k_nu  cos_coeff  sin_coeff
    0 0 0   3.0  0.0
    1 0 0  -1.0  0.0

    [v0]  /  [v1]                # same record format as [w1]

    [w2]                         # sum of products left(p) * right(q)
    term
    left
    0 0 0  1.0 0.0
    right
    1 0 0 -1.0 0.0
    term
    ...

    [v2]                         # symmetric factor form sum_k phi_k(p) phi_k(q)
    factor
    1 0 0  1.0 0.0
    factor
    0 1 0  1.0 0.0

The ``[dims]`` section must come first. All other sections are required
except ``[v0]``, ``[v1]`` and ``[v2]``, which default to zero. Errors are
raised as :class:`ModelFileError` and name the failing section and line.
"""
from __future__ import annotations

from pathlib import Path

from .model import ModelSpec, SeparableKernel
from .torus import TrigPoly

SECTIONS = ("dims", "w0", "w1", "v0", "v1", "w2", "v2")
REQUIRED = ("dims", "w0", "w1", "w2")


class ModelFileError(ValueError):
    def __init__(self, section: str | None, line: int | None, message: str):
        self.section = section
        self.line = line
        where = f"section [{section}]" if section else "model file"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}")


def _split_sections(text: str):
    sections: dict[str, list] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ModelFileError(None, lineno, f"malformed section header {line!r}")
            current = line[1:-1].strip().lower()
            if current not in SECTIONS:
                raise ModelFileError(current, lineno, "unknown section")
            if current in sections:
                raise ModelFileError(current, lineno, "section given twice")
            sections[current] = []
            continue
        if current is None:
            raise ModelFileError(None, lineno, "content before the first section header")
        sections[current].append((lineno, line))
    return sections


def _record(section: str, nu: int, lineno: int, line: str):
    parts = line.split()
    if len(parts) != nu + 2:
        raise ModelFileError(section, lineno,
                             f"expected {nu} frequency components and 2 coefficients, "
                             f"got {len(parts)} fields")
    try:
        k = tuple(int(x) for x in parts[:nu])
    except ValueError:
        raise ModelFileError(section, lineno, "frequency components must be integers") from None
    try:
        a, b = float(parts[nu]), float(parts[nu + 1])
    except ValueError:
        raise ModelFileError(section, lineno, "coefficients must be decimal numbers") from None
    return k, a, b


def _poly(section: str, nu: int, lines) -> TrigPoly:
    return TrigPoly(nu, [_record(section, nu, n, l) for n, l in lines])


def _grouped(section: str, lines, keyword: str):
    groups = []
    for lineno, line in lines:
        if line.lower() == keyword:
            groups.append([])
            continue
        if not groups:
            raise ModelFileError(section, lineno, f"expected '{keyword}' before records")
        groups[-1].append((lineno, line))
    return groups


def parse_model(text: str, source: str = "<string>") -> ModelSpec:
    sections = _split_sections(text)
    for name in REQUIRED:
        if name not in sections:
            raise ModelFileError(name, None, "required section is missing")
    nu = None
    name = Path(source).stem if source != "<string>" else ""
    for lineno, line in sections["dims"]:
        if "=" not in line:
            raise ModelFileError("dims", lineno, "expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "nu":
            try:
                nu = int(value)
            except ValueError:
                raise ModelFileError("dims", lineno, "nu must be an integer") from None
            if nu < 1:
                raise ModelFileError("dims", lineno, "nu must be >= 1")
        elif key == "name":
            name = value
        else:
            raise ModelFileError("dims", lineno, f"unknown key {key!r}")
    if nu is None:
        raise ModelFileError("dims", None, "missing 'nu = ...'")

    w0_lines = sections["w0"]
    if len(w0_lines) != 1:
        raise ModelFileError("w0", w0_lines[0][0] if w0_lines else None,
                             "expected exactly one number")
    try:
        w0 = float(w0_lines[0][1])
    except ValueError:
        raise ModelFileError("w0", w0_lines[0][0], "w0 must be a decimal number") from None

    polys = {key: _poly(key, nu, sections.get(key, [])) for key in ("w1", "v0", "v1")}

    terms = []
    for group in _grouped("w2", sections["w2"], "term"):
        parts: dict[str, list] = {}
        current = None
        for lineno, line in group:
            low = line.lower()
            if low in ("left", "right"):
                if low in parts:
                    raise ModelFileError("w2", lineno, f"'{low}' given twice in one term")
                current = low
                parts[current] = []
                continue
            if current is None:
                raise ModelFileError("w2", lineno, "expected 'left' or 'right' before records")
            parts[current].append((lineno, line))
        if set(parts) != {"left", "right"}:
            first = group[0][0] if group else None
            raise ModelFileError("w2", first, "each term needs a 'left' and a 'right' block")
        terms.append((_poly("w2", nu, parts["left"]), _poly("w2", nu, parts["right"])))
    if not terms:
        raise ModelFileError("w2", None, "at least one term is required")
    w2 = SeparableKernel(nu, terms)

    factors = [_poly("v2", nu, g) for g in _grouped("v2", sections.get("v2", []), "factor")]
    v2 = SeparableKernel.from_factors(nu, factors)
    return ModelSpec(nu, w0, polys["w1"], polys["v0"], polys["v1"], w2, v2, name=name)


def load_model(path) -> ModelSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelFileError(None, None, f"cannot read {path}: {exc.strerror}") from None
    return parse_model(text, source=str(path))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _dump_poly(f: TrigPoly):
    return [" ".join(str(c) for c in k) + f"  {_fmt(a)} {_fmt(b)}" for k, a, b in f.terms()]


def dump_model(spec: ModelSpec) -> str:
    """Serialize a model; :func:`parse_model` reads it back exactly."""
    out = ["[dims]", f"nu = {spec.nu}"]
    if spec.name:
        out.append(f"name = {spec.name}")
    out += ["", "[w0]", _fmt(spec.w0)]
    for key in ("w1", "v0", "v1"):
        out += ["", f"[{key}]"] + _dump_poly(getattr(spec, key))
    out += ["", "[w2]"]
    for left, right in spec.w2.terms:
        out += ["term", "left"] + _dump_poly(left) + ["right"] + _dump_poly(right)
    out += ["", "[v2]"]
    for f in spec.v2.symmetric_factors():
        out += ["factor"] + _dump_poly(f)
    return "\n".join(out) + "\n"
