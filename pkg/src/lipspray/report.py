"""Probe reports, run reports, and deterministic JSON/CSV emission."""

import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

SCHEMA_VERSION = 1


@dataclass
class ProbeReport:
    """Structured pass/fail record of one inequality check."""

    name: str
    passed: bool
    worst: float
    threshold: float
    count: int = 0
    failures: int = 0
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "worst": float(self.worst),
            "threshold": float(self.threshold),
            "count": int(self.count),
            "failures": int(self.failures),
            "details": _plain(self.details),
        }


@dataclass
class RunReport:
    """Top-level JSON report emitted by the CLI."""

    tool_version: str
    input_digest: str
    seed: int
    probes: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    timing_s: Optional[float] = None

    def all_passed(self):
        return all(p.passed for p in self.probes) and all(
            c.get("status") == "certified-sampled" for c in self.certificates
        )

    def to_dict(self):
        return {
            "schema": SCHEMA_VERSION,
            "tool_version": self.tool_version,
            "input_digest": self.input_digest,
            "seed": int(self.seed),
            "certificates": _plain(self.certificates),
            "probes": [p.to_dict() for p in self.probes],
            "timing_s": self.timing_s,
        }


def _plain(obj):
    """Convert numpy scalars/arrays into JSON-friendly python objects."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):  # bool precedes int: bool is an int
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def format_float(x):
    """Decimal formatting with 17 significant digits (round-trip exact)."""
    if x != x:
        return "NaN"
    if x in (float("inf"), float("-inf")):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return format(float(x), ".17g")


def dumps(obj, indent=0):
    """JSON writer with fixed float formatting so identical runs are byte-identical."""
    pad = " " * indent
    if isinstance(obj, dict):
        items = ",\n".join(
            f'{pad}  {json.dumps(str(k))}: {dumps(v, indent + 2).lstrip()}'
            for k, v in obj.items()
        )
        return f"{pad}{{\n{items}\n{pad}}}" if obj else f"{pad}{{}}"
    if isinstance(obj, (list, tuple)):
        items = ",\n".join(dumps(v, indent + 2) for v in obj)
        return f"{pad}[\n{items}\n{pad}]" if len(obj) else f"{pad}[]"
    if isinstance(obj, bool):
        return pad + ("true" if obj else "false")
    if isinstance(obj, float):
        return pad + format_float(obj)
    if isinstance(obj, (int, np.integer)):
        return pad + str(int(obj))
    if obj is None:
        return pad + "null"
    return pad + json.dumps(obj)


def write_report(report, path):
    text = dumps(_plain(report.to_dict())) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text


def read_report(path):
    with open(path) as fh:
        return json.load(fh)


def digest_geometry(spec):
    blob = json.dumps(_plain(spec), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def write_trajectory_csv(path, ts, xs, vs):
    """CSV dump with header t, x_0..x_{n-1}, v_0..v_{n-1}."""
    xs = np.asarray(xs)
    n = xs.shape[1]
    header = ",".join(["t"] + [f"x_{i}" for i in range(n)] + [f"v_{i}" for i in range(n)])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for t, x, v in zip(ts, xs, vs):
            row = [format(t, ".17g")]
            row += [format(float(c), ".17g") for c in x]
            row += [format(float(c), ".17g") for c in v]
            fh.write(",".join(row) + "\n")


class Stopwatch:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
