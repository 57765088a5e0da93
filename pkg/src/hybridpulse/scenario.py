"""Declarative scenario files: parse, validate, serialize.

The format is a flat, line-oriented `key = value` syntax under bracketed
section headers, chosen so a scenario can be embedded bit-exactly in the
comment header of every CSV artifact (floats are printed with 17
significant digits and re-parse to identical values). Unknown sections
or keys are rejected with their line numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

KINDS = ("single-gate", "hybrid-sweep", "st-comparison", "two-qubit", "figure2-bundle")
ORDERS = ("standard", "alternative")
MATERIAL_NAMES = ("gaas", "natural_si", "purified_si")


class ParseError(ValueError):
    """Malformed scenario text; .errors lists line-precise messages."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class UnknownKey(ParseError):
    pass


class ValidationError(ValueError):
    """A structurally valid scenario that violates a field invariant."""


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one experiment run."""

    kind: str = "single-gate"
    label: str = ""
    seed: int = 0
    # [qubit]
    e01: float = 200.0
    t1: float = 10.0
    t2: float | None = None
    gamma_charge: float = 0.2
    gamma_spin: float = 1e-3
    # [gate]
    beta: float = math.pi
    eta: float = math.pi / 2.0
    zeta: float = 0.0
    order: str = "standard"
    # [sweep]
    t1_min: float = 1.0
    t1_max: float = 100.0
    points: int = 20
    e01_values: tuple = (50.0, 500.0)
    # [st]
    materials: tuple = MATERIAL_NAMES
    t_min: float = 1.0
    t_max: float = 100.0
    st_points: int = 20
    # [two_qubit]
    delta_eps: float = 100.0
    phi: float = math.pi
    # [integrator]
    samples_per_segment: int = 0
    dt_max: float = 1e-3
    calibration_tol: float = 1e-6

    def resolved_label(self) -> str:
        return self.label or self.kind

    def validate(self) -> "Scenario":
        def need(cond, msg):
            if not cond:
                raise ValidationError(msg)

        need(self.kind in KINDS, f"scenario.kind must be one of {KINDS}, got {self.kind!r}")
        need(self.e01 > 0, f"qubit.e01 must be > 0, got {self.e01}")
        need(self.t1 > 0, f"qubit.t1 must be > 0, got {self.t1}")
        need(self.t2 is None or self.t2 > 0, f"qubit.t2 must be > 0, got {self.t2}")
        need(self.gamma_charge >= 0, f"qubit.gamma_charge must be >= 0, got {self.gamma_charge}")
        need(self.gamma_spin >= 0, f"qubit.gamma_spin must be >= 0, got {self.gamma_spin}")
        need(0 <= self.beta < 2 * math.pi, f"gate.beta must lie in [0, 2*pi), got {self.beta}")
        need(0 <= self.eta <= math.pi, f"gate.eta must lie in [0, pi], got {self.eta}")
        need(0 <= self.zeta < 2 * math.pi, f"gate.zeta must lie in [0, 2*pi), got {self.zeta}")
        need(self.order in ORDERS, f"gate.order must be one of {ORDERS}, got {self.order!r}")
        need(0 < self.t1_min < self.t1_max, "sweep.t1_min/t1_max must satisfy 0 < min < max")
        need(self.points >= 2, f"sweep.points must be >= 2, got {self.points}")
        need(all(v > 0 for v in self.e01_values), "sweep.e01_values must be positive")
        need(len(self.materials) > 0, "st.materials must not be empty")
        for m in self.materials:
            need(m in MATERIAL_NAMES, f"st.materials entry {m!r} not one of {MATERIAL_NAMES}")
        need(0 < self.t_min < self.t_max, "st.t_min/t_max must satisfy 0 < min < max")
        need(self.st_points >= 2, f"st.points must be >= 2, got {self.st_points}")
        need(self.delta_eps >= 0, f"two_qubit.delta_eps must be >= 0, got {self.delta_eps}")
        need(self.samples_per_segment >= 0, "integrator.samples_per_segment must be >= 0")
        need(self.dt_max > 0, f"integrator.dt_max must be > 0, got {self.dt_max}")
        need(self.calibration_tol > 0, "integrator.calibration_tol must be > 0")
        return self


# (section, key) -> (dataclass field, value parser)
def _parse_float(text):
    return float(text)


def _parse_int(text):
    return int(text)


def _parse_str(text):
    return text


def _parse_floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _parse_strs(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


_SCHEMA = {
    ("scenario", "kind"): ("kind", _parse_str),
    ("scenario", "label"): ("label", _parse_str),
    ("scenario", "seed"): ("seed", _parse_int),
    ("qubit", "e01"): ("e01", _parse_float),
    ("qubit", "t1"): ("t1", _parse_float),
    ("qubit", "t2"): ("t2", _parse_float),
    ("qubit", "gamma_charge"): ("gamma_charge", _parse_float),
    ("qubit", "gamma_spin"): ("gamma_spin", _parse_float),
    ("gate", "beta"): ("beta", _parse_float),
    ("gate", "eta"): ("eta", _parse_float),
    ("gate", "zeta"): ("zeta", _parse_float),
    ("gate", "order"): ("order", _parse_str),
    ("sweep", "t1_min"): ("t1_min", _parse_float),
    ("sweep", "t1_max"): ("t1_max", _parse_float),
    ("sweep", "points"): ("points", _parse_int),
    ("sweep", "e01_values"): ("e01_values", _parse_floats),
    ("st", "materials"): ("materials", _parse_strs),
    ("st", "t_min"): ("t_min", _parse_float),
    ("st", "t_max"): ("t_max", _parse_float),
    ("st", "points"): ("st_points", _parse_int),
    ("two_qubit", "delta_eps"): ("delta_eps", _parse_float),
    ("two_qubit", "phi"): ("phi", _parse_float),
    ("integrator", "samples_per_segment"): ("samples_per_segment", _parse_int),
    ("integrator", "dt_max"): ("dt_max", _parse_float),
    ("integrator", "calibration_tol"): ("calibration_tol", _parse_float),
}

_SECTIONS = tuple(dict.fromkeys(section for section, _ in _SCHEMA))


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document.

    Raises ParseError/UnknownKey with one message per offending line, or
    ValidationError naming the field whose invariant fails.
    """
    errors = []
    unknown = []
    values = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                unknown.append(f"line {lineno}: unknown section [{section}]")
                section = None
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        if section is None:
            errors.append(f"line {lineno}: key outside of any known section")
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        spec = _SCHEMA.get((section, key))
        if spec is None:
            unknown.append(f"line {lineno}: unknown key {key!r} in section [{section}]")
            continue
        name, parser = spec
        try:
            values[name] = parser(value)
        except ValueError:
            errors.append(f"line {lineno}: cannot parse {section}.{key} value {value!r}")
    if errors:
        raise ParseError(errors + unknown)
    if unknown:
        raise UnknownKey(unknown)
    return Scenario(**values).validate()


def scenario_to_text(s: Scenario) -> str:
    """Canonical serialization; parse(serialize(s)) == s, bit-exact."""
    by_field = {f_name: (section, key) for (section, key), (f_name, _) in _SCHEMA.items()}
    lines = []
    current = None
    for f in fields(Scenario):
        if f.name not in by_field:
            continue
        section, key = by_field[f.name]
        value = getattr(s, f.name)
        if value is None:
            continue
        if section != current:
            if lines:
                lines.append("")
            lines.append(f"[{section}]")
            current = section
        lines.append(f"{key} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


SCENARIO_BEGIN = "--- scenario ---"
SCENARIO_END = "--- end scenario ---"


def scenario_header_lines(s: Scenario):
    """Header block embedding the full canonical scenario into a CSV."""
    lines = [SCENARIO_BEGIN]
    lines.extend(scenario_to_text(s).splitlines())
    lines.append(SCENARIO_END)
    return lines


def scenario_from_csv_header(path_or_text) -> Scenario:
    """Recover the exact Scenario from an artifact's comment header."""
    text = path_or_text
    if "\n" not in text:
        with open(text, "r", encoding="utf-8") as fh:
            text = fh.read()
    collected = []
    inside = False
    for raw in text.splitlines():
        if not raw.startswith("#"):
            continue
        body = raw[1:].strip()
        if body == SCENARIO_BEGIN:
            inside = True
            continue
        if body == SCENARIO_END:
            break
        if inside:
            collected.append(raw[2:] if raw.startswith("# ") else body)
    if not collected:
        raise ParseError(["no scenario block found in header"])
    return parse_scenario("\n".join(collected))
