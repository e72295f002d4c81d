"""Run configuration documents.

A configuration is a YAML (or JSON) mapping::

    schema_version: 1
    experiment:
      R: 0.5
      qubit: {c_H: 1, c_V: 0}     # complex values as numbers, [re, im] or "a+bj"
      cutoff: 12
      n_max: 4
      gain: optimal                # or a number; alternatively `feedback: f`
    integrator:
      kind: gauss-hermite          # gauss-hermite | monte-carlo | analytic
      points: 14
      samples: 100000
      seed: 0
      workers: 1
      batches: 20
      check_order: false
    sweep:                         # optional
      gains: [1.2, 1.4142135623730951, 1.6]
      # or R_values: [0.1, 0.5, 0.9]

A run manifest (which embeds the resolved configuration under ``config``) is
accepted in place of a configuration.
"""
from __future__ import annotations

import copy
from pathlib import Path
from typing import Any

import yaml

from .engine import INTEGRATORS, MIN_BATCHES, ExperimentConfig
from .fock import STRUCT_TOL, PolarizationQubit

SCHEMA_VERSION = 1

_SECTIONS = {
    "experiment": {"R", "qubit", "cutoff", "n_max", "gain", "feedback"},
    "integrator": {"kind", "points", "samples", "seed", "workers", "batches", "check_order"},
    "sweep": {"gains", "R_values"},
}


class ConfigError(ValueError):
    """Configuration rejected; ``errors`` lists ``(field_path, message)`` pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{p}: {m}" for p, m in errors))


def parse_complex(value: Any) -> complex:
    if isinstance(value, bool):
        raise ValueError("expected a complex number")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    raise ValueError("expected a number, [re, im] or a string like '0.6+0.8j'")


def _complex_doc(z: complex) -> list[float]:
    return [z.real, z.imag]


def load_document(path: str | Path) -> dict:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ConfigError([("<root>", "configuration must be a mapping")])
    if "manifest_version" in doc:
        if not isinstance(doc.get("config"), dict):
            raise ConfigError([("config", "manifest has no embedded configuration")])
        doc = doc["config"]
    return doc


def _number(errors, path, value, kind=float, lo=None, hi=None, lo_open=False, hi_open=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append((path, f"expected a number, got {value!r}"))
        return None
    if kind is int and int(value) != value:
        errors.append((path, f"expected an integer, got {value!r}"))
        return None
    v = kind(value)
    if lo is not None and (v < lo or (lo_open and v == lo)):
        errors.append((path, f"must be {'>' if lo_open else '>='} {lo}, got {v!r}"))
        return None
    if hi is not None and (v > hi or (hi_open and v == hi)):
        errors.append((path, f"must be {'<' if hi_open else '<='} {hi}, got {v!r}"))
        return None
    return v


def resolve(doc: dict, seed: int | None = None, workers: int | None = None) -> tuple[ExperimentConfig, dict]:
    """Validate a configuration document.

    Returns the engine configuration and the fully resolved document (all
    defaults filled in, overrides applied) for the run manifest. Raises
    :class:`ConfigError` listing every problem found.
    """
    doc = copy.deepcopy(doc)
    errors: list[tuple[str, str]] = []
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        errors.append(("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}"))
    for key in doc:
        if key != "schema_version" and key not in _SECTIONS:
            errors.append((key, "unknown section"))
    sections = {}
    for name, allowed in _SECTIONS.items():
        sec = doc.get(name, {}) or {}
        if not isinstance(sec, dict):
            errors.append((name, "must be a mapping"))
            sec = {}
        for key in sec:
            if key not in allowed:
                errors.append((f"{name}.{key}", "unknown field"))
        sections[name] = sec
    exp, integ, sweep = sections["experiment"], sections["integrator"], sections["sweep"]

    if "R" not in exp:
        errors.append(("experiment.R", "required"))
        R = None
    else:
        R = _number(errors, "experiment.R", exp["R"], lo=0.0, hi=1.0, hi_open=True)

    qubit = None
    qdoc = exp.get("qubit", {"c_H": 1, "c_V": 0})
    if not isinstance(qdoc, dict) or set(qdoc) != {"c_H", "c_V"}:
        errors.append(("experiment.qubit", "must be a mapping with keys c_H and c_V"))
    else:
        amps = {}
        for k in ("c_H", "c_V"):
            try:
                amps[k] = parse_complex(qdoc[k])
            except ValueError as exc:
                errors.append((f"experiment.qubit.{k}", str(exc)))
        if len(amps) == 2:
            norm = abs(amps["c_H"]) ** 2 + abs(amps["c_V"]) ** 2
            if abs(norm - 1.0) > STRUCT_TOL:
                errors.append(("experiment.qubit", f"|c_H|^2 + |c_V|^2 must be 1, got {norm!r}"))
            else:
                qubit = PolarizationQubit(amps["c_H"], amps["c_V"])

    n_max = _number(errors, "experiment.n_max", exp.get("n_max", 4), kind=int, lo=1)
    cutoff = _number(errors, "experiment.cutoff", exp.get("cutoff", 12), kind=int, lo=1)
    if n_max is not None and cutoff is not None and cutoff < n_max + 2:
        errors.append(("experiment.cutoff", f"must be >= n_max + 2 = {n_max + 2}, got {cutoff}"))

    gain = feedback = None
    if "gain" in exp and "feedback" in exp:
        errors.append(("experiment.feedback", "give either gain or feedback, not both"))
    elif "feedback" in exp:
        feedback = _number(errors, "experiment.feedback", exp["feedback"], lo=0.0)
    elif exp.get("gain", "optimal") != "optimal":
        gain = _number(errors, "experiment.gain", exp["gain"], lo=0.0, lo_open=True)

    kind = integ.get("kind", "gauss-hermite")
    if kind not in INTEGRATORS:
        errors.append(("integrator.kind", f"must be one of {list(INTEGRATORS)}, got {kind!r}"))
    points = integ.get("points")
    if points is not None:
        points = _number(errors, "integrator.points", points, kind=int, lo=2)
    samples = _number(errors, "integrator.samples", integ.get("samples", 100_000), kind=int, lo=1)
    batches = _number(errors, "integrator.batches", integ.get("batches", MIN_BATCHES), kind=int, lo=MIN_BATCHES)
    if seed is None:
        seed = integ.get("seed", 0)
    seed = _number(errors, "integrator.seed", seed, kind=int, lo=0, hi=2**64 - 1)
    if workers is None:
        workers = integ.get("workers", 1)
    workers = _number(errors, "integrator.workers", workers, kind=int, lo=1)
    check_order = integ.get("check_order", False)
    if not isinstance(check_order, bool):
        errors.append(("integrator.check_order", "must be true or false"))
    if kind == "monte-carlo" and samples is not None and batches is not None and samples < batches:
        errors.append(("integrator.samples", f"must be >= batches ({batches})"))

    gains = R_values = None
    if "gains" in sweep and "R_values" in sweep:
        errors.append(("sweep", "give either gains or R_values, not both"))
    for key in ("gains", "R_values"):
        if key not in sweep:
            continue
        vals = sweep[key]
        if not isinstance(vals, list) or not vals:
            errors.append((f"sweep.{key}", "must be a nonempty list"))
            continue
        parsed = []
        for i, v in enumerate(vals):
            if key == "R_values":
                x = _number(errors, f"sweep.{key}[{i}]", v, lo=0.0, hi=1.0, hi_open=True)
            else:
                x = _number(errors, f"sweep.{key}[{i}]", v, lo=0.0, lo_open=True)
            parsed.append(x)
        if None in parsed:
            continue
        if key == "gains":
            if any(b <= a for a, b in zip(parsed, parsed[1:])):
                errors.append(("sweep.gains", "must be strictly increasing"))
            else:
                gains = tuple(parsed)
        else:
            R_values = tuple(parsed)

    if errors:
        raise ConfigError(errors)
    try:
        config = ExperimentConfig(
            R=R,
            qubit=qubit,
            cutoff=cutoff,
            n_max=n_max,
            gain=gain,
            feedback=feedback,
            integrator=kind,
            points=points,
            samples=samples,
            seed=seed,
            workers=workers,
            batches=batches,
            gains=gains,
            R_values=R_values,
            check_order=check_order,
        )
    except ValueError as exc:
        raise ConfigError([("experiment", str(exc))]) from exc
    return config, to_document(config)


def to_document(config: ExperimentConfig) -> dict:
    exp: dict = {
        "R": config.R,
        "qubit": {"c_H": _complex_doc(config.qubit.c_H), "c_V": _complex_doc(config.qubit.c_V)},
        "cutoff": config.cutoff,
        "n_max": config.n_max,
    }
    if config.feedback is not None:
        exp["feedback"] = config.feedback
    else:
        exp["gain"] = "optimal" if config.gain is None else config.gain
    doc = {
        "schema_version": SCHEMA_VERSION,
        "experiment": exp,
        "integrator": {
            "kind": config.integrator,
            "points": config.quadrature_points,
            "samples": config.samples,
            "seed": config.seed,
            "workers": config.workers,
            "batches": config.batches,
            "check_order": config.check_order,
        },
    }
    if config.gains is not None:
        doc["sweep"] = {"gains": list(config.gains)}
    elif config.R_values is not None:
        doc["sweep"] = {"R_values": list(config.R_values)}
    return doc
