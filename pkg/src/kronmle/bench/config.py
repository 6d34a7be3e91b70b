"""YAML experiment files mapped onto :class:`ExperimentSpec`.

Example::

    generator:
      dims: [25, 50]
      kind: spiked
      strength: 10
    n_list: [1]
    trials: 5
    sweep:
      alpha: [0.05, 0.2, 0.5, 0.9, 1.0]
    solver:
      delta: 1.0e-6
      max_iters: 5000
    seed: 7
    outputs:
      csv: out/spiked.csv
      svg: out/spiked.svg
"""
import yaml

from ..errors import InvalidInput
from .experiment import ExperimentSpec
from .generators import GeneratorSpec


def load_config(path):
    with open(path) as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise InvalidInput("config file must contain a mapping")
    return doc


def spec_from_dict(doc, **overrides):
    """Build an ExperimentSpec; non-None ``overrides`` win over file values."""
    doc = dict(doc)
    gen = doc.get("generator")
    if gen is None:
        raise InvalidInput("config needs a 'generator' section")
    sweep = doc.get("sweep") or {"alpha": [0.0]}
    if not isinstance(sweep, dict) or len(sweep) != 1:
        raise InvalidInput("sweep must map exactly one of 'alpha' or 'delta' to a list")
    (sweep_kind, values), = sweep.items()
    solver = doc.get("solver") or {}
    outputs = doc.get("outputs") or {}
    fields = {
        "generator": GeneratorSpec.from_dict(gen),
        "n_list": doc.get("n_list"),
        "trials": doc.get("trials", 1),
        "seed": doc.get("seed"),
        "sweep_kind": sweep_kind,
        "sweep": values,
        "delta": float(solver.get("delta", 1e-8)),
        "alpha": float(solver.get("alpha", 0.0)),
        "max_iters": solver.get("max_iters"),
        "csv_path": outputs.get("csv"),
        "svg_path": outputs.get("svg"),
        "record_runtime": bool(doc.get("record_runtime", False)),
        "jobs": int(doc.get("jobs", 1)),
    }
    fields.update({k: v for k, v in overrides.items() if v is not None})
    if fields["seed"] is None:
        raise InvalidInput("a seed is required")
    if fields["n_list"] is None:
        raise InvalidInput("n_list is required")
    if isinstance(values, (int, float)):
        fields["sweep"] = [values]
    try:
        return ExperimentSpec(**fields)
    except TypeError as exc:
        raise InvalidInput(f"bad experiment spec: {exc}") from None
