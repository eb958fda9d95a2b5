"""Line-oriented run configuration.

Three sections: [system], [params], [output]. The system is either a preset
reference or inline matrices, one `g = ...` line per generator with eight
comma-separated entries (re,im pairs row-major); entries may be decimal or
exact rational literals `p/q`. A probability line `p = ...` and an optional
`exact = true/false` complete the system.

Float-mode inline matrices are accepted when |det - 1| <= 1e-8 and then
rescaled by the principal square root of the determinant, so downstream code
sees determinant one to machine precision. Exact mode requires rational
entries with determinant exactly one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .errors import ConfigError
from .presets import get_preset
from .sl2 import GaussianRational, GroupElement
from .words import System

DET_TOL = 1e-8


@dataclass
class RunConfig:
    system: System
    preset: Optional[str] = None          # set when the system came by name
    seed: int = 0
    workers: int = 1
    params: Dict[str, str] = field(default_factory=dict)
    out_path: Optional[str] = None
    out_format: str = "json"

    def param(self, key: str, default=None, cast=str):
        if key not in self.params:
            return default
        return cast(self.params[key])

    def to_text(self) -> str:
        lines = ["[system]"]
        if self.preset is not None:
            lines.append(f"preset = {self.preset}")
        else:
            for g in self.system.generators:
                if self.system.exact:
                    parts = []
                    for x in g.exact_key():
                        parts.extend([_frac_str(x.re), _frac_str(x.im)])
                else:
                    parts = []
                    for z in g.entries():
                        parts.extend([f"{z.real:.17g}", f"{z.imag:.17g}"])
                lines.append("g = " + ",".join(parts))
            lines.append("p = " + ",".join(f"{p:.17g}" for p in self.system.probs))
            lines.append(f"exact = {'true' if self.system.exact else 'false'}")
        lines.append("")
        lines.append("[params]")
        lines.append(f"seed = {self.seed}")
        lines.append(f"workers = {self.workers}")
        for k in sorted(self.params):
            lines.append(f"{k} = {self.params[k]}")
        lines.append("")
        lines.append("[output]")
        if self.out_path is not None:
            lines.append(f"path = {self.out_path}")
        lines.append(f"format = {self.out_format}")
        return "\n".join(lines) + "\n"


def _frac_str(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def _parse_scalar(tok: str, line_no: int) -> Tuple[float, Optional[Fraction]]:
    tok = tok.strip()
    try:
        if "/" in tok:
            fr = Fraction(tok)
            return float(fr), fr
        if "." not in tok and "e" not in tok.lower():
            fr = Fraction(int(tok))
            return float(fr), fr
        return float(tok), None
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad numeric literal {tok!r}: {exc}", line_no)


def _build_matrix(tokens: List[str], line_no: int, want_exact: bool) -> GroupElement:
    if len(tokens) != 8:
        raise ConfigError(f"matrix line needs 8 entries, got {len(tokens)}",
                          line_no)
    vals = [_parse_scalar(t, line_no) for t in tokens]
    floats = [v[0] for v in vals]
    fracs = [v[1] for v in vals]
    a, b, c, d = (complex(floats[2 * i], floats[2 * i + 1]) for i in range(4))
    if want_exact:
        if any(f is None for f in fracs):
            raise ConfigError("exact mode needs rational entries (p/q or "
                              "integer literals)", line_no)
        gr = [GaussianRational(fracs[2 * i], fracs[2 * i + 1]) for i in range(4)]
        det = gr[0] * gr[3] - gr[1] * gr[2]
        if not (det.re == 1 and det.im == 0):
            raise ConfigError(
                f"exact determinant is {det.re}+{det.im}i, not 1", line_no)
        return GroupElement.from_exact(*gr)
    det = a * d - b * c
    if abs(det - 1.0) > DET_TOL:
        raise ConfigError(
            f"determinant {det:.12g} violates |det-1| <= {DET_TOL:g}; "
            f"entries ({a}, {b}; {c}, {d})", line_no)
    s = det ** 0.5
    return GroupElement(a / s, b / s, c / s, d / s)


def parse_config(text: str) -> RunConfig:
    section = None
    preset_name: Optional[str] = None
    g_lines: List[Tuple[int, List[str]]] = []
    p_line: Optional[Tuple[int, List[str]]] = None
    exact = False
    exact_set_at: Optional[int] = None
    params: Dict[str, str] = {}
    seed = 0
    workers = 1
    out_path: Optional[str] = None
    out_format = "json"

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("system", "params", "output"):
                raise ConfigError(f"unknown section [{section}]", line_no)
            continue
        if "=" not in line:
            raise ConfigError("expected key = value", line_no)
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if section == "system":
            if key == "preset":
                preset_name = val
            elif key == "g":
                g_lines.append((line_no, val.split(",")))
            elif key == "p":
                p_line = (line_no, val.split(","))
            elif key == "exact":
                exact = val.lower() in ("true", "1", "yes")
                exact_set_at = line_no
            else:
                raise ConfigError(f"unknown system key {key!r}", line_no)
        elif section == "params":
            if key == "seed":
                try:
                    seed = int(val)
                except ValueError:
                    raise ConfigError(f"bad seed {val!r}", line_no)
                if not (0 <= seed < 2 ** 64):
                    raise ConfigError("seed must fit in 64 unsigned bits",
                                      line_no)
            elif key == "workers":
                workers = int(val)
            else:
                params[key] = val
        elif section == "output":
            if key == "path":
                out_path = val
            elif key == "format":
                if val not in ("json", "csv"):
                    raise ConfigError(f"unknown format {val!r}", line_no)
                out_format = val
            else:
                raise ConfigError(f"unknown output key {key!r}", line_no)
        else:
            raise ConfigError("key outside any section", line_no)

    if preset_name is not None:
        if g_lines:
            raise ConfigError("preset and inline matrices are exclusive",
                              g_lines[0][0])
        try:
            system = get_preset(preset_name)
        except KeyError as exc:
            raise ConfigError(str(exc), 1)
        return RunConfig(system, preset_name, seed, workers, params,
                         out_path, out_format)

    if not g_lines:
        raise ConfigError("no system given: need `preset = ...` or g lines", 1)
    gens = tuple(_build_matrix(toks, ln, exact) for ln, toks in g_lines)
    if p_line is None:
        probs = tuple(1.0 / len(gens) for _ in gens)
    else:
        ln, toks = p_line
        if len(toks) != len(gens):
            raise ConfigError(
                f"{len(toks)} probabilities for {len(gens)} matrices", ln)
        probs = tuple(_parse_scalar(t, ln)[0] for t in toks)
        if any(p <= 0 for p in probs):
            raise ConfigError("probabilities must be positive", ln)
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ConfigError(
                f"probabilities sum to {math.fsum(probs)!r}, not 1", ln)
    try:
        system = System(gens, probs, exact=exact, name="inline")
    except ValueError as exc:
        raise ConfigError(str(exc), exact_set_at or g_lines[0][0])
    return RunConfig(system, None, seed, workers, params, out_path, out_format)


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
