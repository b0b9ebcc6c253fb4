"""Scenario (JSON) and point-set (CSV) file formats."""
from dataclasses import asdict, dataclass, field
import csv
import json
import math
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ContractViolation
from .geometry import free_space

_NUM = {"type": "number"}
_POINT = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 3}
_BOX = {"type": "array", "items": _NUM, "minItems": 6, "maxItems": 6}
_RING = {"type": "array", "items": _POINT, "minItems": 3}

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dimension", "boundary", "data_file", "kernel", "H"],
    "properties": {
        "dimension": {"enum": [2, 3]},
        "units": {"type": "string"},
        "boundary": {"oneOf": [_RING, _BOX]},
        "obstacles": {"type": "array", "items": {"oneOf": [_RING, _BOX]}},
        "safety_distance": {"type": "number", "minimum": 0},
        "data_file": {"type": "string"},
        "kernel": {"enum": ["box", "epanechnikov", "gaussian"]},
        "H": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 9},
        "start": _POINT,
        "goal": _POINT,
        "planner": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "step": {"type": "number", "exclusiveMinimum": 0},
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "goal_tolerance": {"type": "number", "minimum": 0},
                "goal_bias": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
            },
        },
        "radius_choice": {"enum": ["tight", "paper"]},
        "q": {"enum": [1, 2, "inf"]},
        "truncation": {"enum": ["renormalize", "refit"]},
        "mc_budget": {"type": "integer", "minimum": 10000},
    },
}


@dataclass
class ScenarioFile:
    """In-memory image of a scenario JSON document (lengths share ``units``)."""

    dimension: int
    boundary: list
    data_file: str
    kernel: str
    H: list
    units: str = "m"
    obstacles: list = field(default_factory=list)
    safety_distance: float = 0.0
    start: list = None
    goal: list = None
    planner: dict = field(default_factory=dict)
    radius_choice: str = "tight"
    q: object = 2
    truncation: str = "renormalize"
    mc_budget: int = 100000

    @classmethod
    def from_dict(cls, doc):
        jsonschema.validate(doc, SCENARIO_SCHEMA)
        p = doc["dimension"]
        if len(doc["H"]) != p * p:
            raise ContractViolation(f"H needs {p * p} entries for dimension {p}")
        for key in ("start", "goal"):
            if key in doc and len(doc[key]) != p:
                raise ContractViolation(f"{key} must have {p} coordinates")
        return cls(**doc)

    def to_dict(self):
        doc = asdict(self)
        return {k: v for k, v in doc.items() if v is not None}

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def to_scenario(self, data=None, base_dir=".", radius_choice=None):
        """Build the pipeline ``Scenario``, reading the data CSV relative to ``base_dir``."""
        from .pipeline import Scenario

        if data is None:
            data = read_points(Path(base_dir) / self.data_file, self.dimension)
        w1 = free_space(self.boundary, self.obstacles, self.safety_distance)
        if w1.dimension != self.dimension:
            raise ContractViolation("boundary shape does not match the declared dimension")
        q = math.inf if self.q == "inf" else self.q
        return Scenario(w1, data, self.kernel, np.reshape(self.H, (self.dimension,) * 2),
                        start=self.start, goal=self.goal, safety_distance=self.safety_distance,
                        radius_choice=radius_choice or self.radius_choice, q=q,
                        truncation=self.truncation, mc_budget=self.mc_budget,
                        planner=dict(self.planner))


def load_scenario(path, data_path=None, radius_choice=None):
    path = Path(path)
    sf = ScenarioFile.load(path)
    data = read_points(data_path, sf.dimension) if data_path else None
    return sf, sf.to_scenario(data, path.parent, radius_choice)


AXES = ("x", "y", "z")


def fmt(v):
    """Full-precision text for a number (17 significant digits for floats)."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_points(path, pts, extra=None):
    """Write ``x,y[,z]`` rows; ``extra`` maps column name to a per-row sequence."""
    pts = np.asarray(pts, dtype=float)
    extra = extra or {}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(AXES[:pts.shape[1]]) + list(extra))
        cols = list(extra.values())
        for k, row in enumerate(pts):
            w.writerow([fmt(v) for v in row] + [c[k] if isinstance(c[k], str) else fmt(c[k])
                                                 for c in cols])


def read_points(path, dimension=None):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ContractViolation(f"{path}: empty data file")
    header = [h.strip() for h in rows[0]]
    p = len(header)
    if header != list(AXES[:p]) or p not in (1, 2, 3):
        raise ContractViolation(f"{path}: header must be x,y or x,y,z, got {','.join(header)}")
    if dimension is not None and p != dimension:
        raise ContractViolation(f"{path}: {p} columns but dimension {dimension}")
    try:
        pts = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ContractViolation(f"{path}: {exc}") from None
    if pts.size == 0 or pts.shape[1] != p or not np.all(np.isfinite(pts)):
        raise ContractViolation(f"{path}: need at least one row of {p} finite values")
    return pts
