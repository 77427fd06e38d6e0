"""Scenario configuration: JSON schema plus semantic validation."""

import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from .fields import Grid
from .flows import FlowParams
from .harmonic import HolomorphicMapSpec

SCENARIOS = ("stationary", "heat_relax", "theorem1", "gauge_check",
             "lemma36_sametower", "mcgahagan_delta", "kernel_check")


def _schema():
    with resources.files("llflow.data").joinpath(
            "scenario_schema.json").open() as fh:
        return json.load(fh)


@dataclass
class ScenarioConfig:
    raw: dict
    path: str = ""

    @property
    def scenario(self):
        return self.raw["scenario"]

    @property
    def output_dir(self):
        return self.raw["output_dir"]

    @property
    def seed(self):
        return int(self.raw.get("seed", 0))

    @property
    def snapshot_stride(self):
        return int(self.raw.get("snapshot_stride", 0))

    def grid(self):
        g = self.raw["grid"]
        return Grid(tuple(g["x1_range"]), tuple(g["x2_range"]),
                    g["n1"], g["n2"])

    def flow_params(self, delta=0.0):
        f = self.raw.get("flow", {})
        return FlowParams(alpha=f.get("alpha", 1.0), beta=f.get("beta", 0.0),
                          delta=delta, cfl=f.get("cfl", 0.85),
                          dt_rule=f.get("dt_rule", "sharp"))

    def delta_values(self):
        return list(self.raw.get("flow", {}).get("delta_values", []))

    def map_spec(self):
        hm = self.raw.get("harmonic_map", {"coefficients": [[0, 0], [0.5, 0]]})
        return HolomorphicMapSpec.from_pairs(hm["coefficients"])

    def perturbation(self):
        return self.raw.get("perturbation")

    def tower(self):
        t = dict(self.raw.get("tower") or {})
        return {"s_max": t.get("s_max", 80.0), "ds": t.get("ds", 0.05),
                "tail_tol": t.get("tail_tol", 1e-7)}

    def time(self):
        t = self.raw.get("time", {})
        return {"T": t.get("T", 1.0), "checkpoints": t.get("checkpoints", 40)}

    def kernel(self):
        k = self.raw.get("kernel", {})
        return {"s_samples": k.get("s_samples",
                                   [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0]),
                "refine_check": k.get("refine_check", True)}

    def threshold(self, name, default):
        return float(self.raw.get("thresholds", {}).get(name, default))


def validate_config(doc):
    """Itemized validation report; an empty list means the config is valid.

    Schema violations (including unknown keys) are collected first, then
    cross-field semantic checks.
    """
    errors = []
    validator = jsonschema.Draft7Validator(_schema())
    for err in sorted(validator.iter_errors(doc), key=str):
        loc = "/".join(str(p) for p in err.absolute_path) or "<root>"
        errors.append(f"{loc}: {err.message}")
    if errors:
        return errors

    cfg = ScenarioConfig(doc)
    flow = doc.get("flow", {})
    scenario = doc["scenario"]
    if scenario != "kernel_check":
        if flow.get("alpha", 1.0) <= 0:
            errors.append("flow/alpha: must be positive for flow scenarios")
    if scenario == "mcgahagan_delta" and not cfg.delta_values():
        errors.append("flow/delta_values: required for mcgahagan_delta")
    tower = doc.get("tower")
    if tower:
        ds = tower.get("ds", 0.05)
        s_max = tower.get("s_max", 80.0)
        if ds >= s_max:
            errors.append("tower/ds: must be smaller than tower/s_max")
    spec = cfg.map_spec()
    if not spec.coefficient_sum() < 1.0:
        errors.append("harmonic_map/coefficients: sum of moduli is "
                      f"{spec.coefficient_sum():.6g}, must be < 1")
    pert = doc.get("perturbation")
    if pert:
        g = cfg.grid()
        c, r = pert["center"], pert["radius"]
        if (c[0] - r <= g.x1_range[0] + g.h1
                or c[0] + r >= g.x1_range[1] - g.h1
                or c[1] - r <= g.x2_range[0] + g.h2
                or c[1] + r >= g.x2_range[1] - g.h2):
            errors.append("perturbation: support ball touches the "
                          "boundary ring")
    for name, val in doc.get("thresholds", {}).items():
        if val <= 0:
            errors.append(f"thresholds/{name}: must be positive")
    return errors


def load_config(path):
    """Load and validate; raises ValueError with the itemized report."""
    with open(path) as fh:
        doc = json.load(fh)
    errors = validate_config(doc)
    if errors:
        raise ValueError("invalid configuration:\n  "
                         + "\n  ".join(errors))
    return ScenarioConfig(doc, path=str(path))
