"""Run configuration: JSON loading, schema validation and object construction."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from functools import cache
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .aggregation import (
    INTERSECTION,
    InfimumOp,
    TaskSpec,
    identity_rsystem,
    min_plus,
    operator,
    required_delta,
    table_operator,
)
from .errors import ConfigError, MissingTask, ParamError
from .protocol import Configuration, ProtocolParams, default_params
from .scheduler import Daemon, load_schedule, random_configuration, unison_configuration
from .topology import Graph, family, parse_graph, read_edge_list

SCHEMA_VERSION = 1


@cache
def schema(name: str) -> dict:
    """Load a shipped schema (``"config"`` or ``"trace"``)."""
    text = resources.files(__package__).joinpath(f"schema/{name}.v{SCHEMA_VERSION}.schema.json")
    return json.loads(text.read_text())


def validate(doc: Any, name: str) -> None:
    try:
        jsonschema.validate(doc, schema(name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{name} invalid at {where}: {exc.message}") from None


def decode_value(x: Any, op: InfimumOp) -> Any:
    """JSON value to carrier element: ``"inf"``/``"-inf"`` strings, lists as sets."""
    if isinstance(x, str) and x in ("inf", "-inf", "+inf"):
        return -math.inf if x.startswith("-") else math.inf
    if op.name == INTERSECTION.name and isinstance(x, list):
        return frozenset(x)
    return x


def encode_value(x: Any) -> Any:
    """Inverse of :func:`decode_value` for output."""
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, frozenset):
        return sorted(x)
    return x


def to_jsonable(doc: Any) -> Any:
    """Recursively apply :func:`encode_value` so the result is strict JSON."""
    if isinstance(doc, dict):
        return {k: to_jsonable(v) for k, v in doc.items()}
    if isinstance(doc, (list, tuple)):
        return [to_jsonable(v) for v in doc]
    return encode_value(doc)


@dataclass
class RunConfig:
    graph: Graph
    params: ProtocolParams
    daemon: dict
    init: Any = None
    task: dict | None = None
    max_steps: int | None = None
    phases: int = 2
    sweep: dict = field(default_factory=dict)
    base_dir: Path = Path(".")
    warnings: list[str] = field(default_factory=list)

    def make_daemon(self) -> Daemon:
        d = self.daemon
        schedule = None
        if d["kind"] == "replay":
            if "schedule" not in d:
                raise ConfigError("replay daemon needs a 'schedule' file")
            schedule = load_schedule(self.base_dir / d["schedule"])
        return Daemon(d["kind"], seed=d.get("seed", 0), bias=d.get("bias", 0.5), schedule=schedule)

    def initial_configuration(self) -> Configuration:
        init = self.init
        if init == "in-unison":
            return unison_configuration(self.graph)
        if isinstance(init, dict) and "clocks" in init:
            clocks = init["clocks"]
            if len(clocks) != self.graph.n:
                raise ConfigError(f"init has {len(clocks)} clocks for {self.graph.n} processes")
            sys = self.params.sys
            bad = [r for r in clocks if not sys.in_domain(r)]
            if bad:
                raise ConfigError(f"clock values {bad} outside [{-sys.alpha}, {sys.K - 1}]")
            return Configuration.from_clocks(clocks)
        seed = init["random"] if isinstance(init, dict) else 0
        return random_configuration(self.graph, self.params, seed)

    @property
    def init_seed(self) -> int:
        return self.init["random"] if isinstance(self.init, dict) and "random" in self.init else 0

    def make_task(self) -> TaskSpec:
        if not self.task:
            raise MissingTask("the configuration has no 'task' section")
        t = self.task
        g = self.graph
        op_spec = t["op"]
        if isinstance(op_spec, dict):
            op = table_operator(op_spec.get("name", "table"), op_spec["table"], op_spec["identity"])
        else:
            op = operator(op_spec)
        if "inputs" in t:
            inputs = tuple(decode_value(x, op) for x in t["inputs"])
        else:
            rng = random.Random(t.get("input_seed", 0))
            inputs = tuple(op.sample(rng) for _ in range(g.n))
        rsystem = None
        if t["kind"] == "r-operator":
            if "weights" in t:
                if op.name != "min":
                    raise ConfigError("edge weights define a min-plus system; use op 'min'")
                weights = {}
                for u, v, w in t["weights"]:
                    if not g.has_edge(u, v):
                        raise ConfigError(f"weight given for non-edge ({u}, {v})")
                    weights[(u, v)] = decode_value(w, op)
                rsystem = min_plus(g, weights)
            else:
                rsystem = identity_rsystem(g, op)
        try:
            return TaskSpec(t["kind"], op, inputs, rho=t.get("rho", self.params.rho), rsystem=rsystem)
        except ParamError as exc:
            raise ConfigError(str(exc)) from None

    def effective(self) -> dict:
        """Echo of the parameters actually used, defaults filled in."""
        out = {
            "version": SCHEMA_VERSION,
            "graph": self.graph.to_dict(),
            "params": self.params.to_dict(),
            "daemon": {k: v for k, v in self.daemon.items()},
            "init": self.init,
            "limits": {"max_steps": self.max_steps, "phases": self.phases},
        }
        if self.task:
            out["task"] = self.task
        if self.warnings:
            out["warnings"] = self.warnings
        return out


def _graph_from(doc: dict, base_dir: Path) -> Graph:
    if "edges" in doc:
        return parse_graph([tuple(e) for e in doc["edges"]], doc["n"])
    if "file" in doc:
        return read_edge_list(base_dir / doc["file"])
    return family(doc["family"], doc["n"], doc.get("seed", 0))


def parse_config(doc: dict, base_dir: Path | str = ".", seed: int | None = None) -> RunConfig:
    """Validate ``doc`` and build a :class:`RunConfig`. ``seed`` overrides every seed."""
    validate(doc, "config")
    base_dir = Path(base_dir)
    graph = _graph_from(doc["graph"], base_dir)
    p = doc.get("params", {})
    task = dict(doc["task"]) if "task" in doc else None
    rho = p.get("rho", task.get("rho") if task else None)
    delta = p.get("delta")
    if delta is None and task is not None:
        delta = required_delta(task["kind"], graph, rho or 1)
    params = default_params(graph, K=p.get("K"), alpha=p.get("alpha"), delta=delta, rho=rho)
    warnings = []
    if "K" in p and params.K != p["K"]:
        # An explicit K is honored even when it breaks the period bound, so that
        # deadlocking setups stay reproducible.
        params = ProtocolParams(p["K"], params.alpha, params.delta, params.rho)
    try:
        params.validate(graph)
    except ParamError as exc:
        warnings.append(str(exc))
    daemon = dict(doc.get("daemon", {"kind": "random-subset"}))
    init = doc.get("init", {"random": 0})
    if seed is not None:
        daemon["seed"] = seed
        if isinstance(init, dict) and "random" in init:
            init = {"random": seed}
        if task is not None and "inputs" not in task:
            task["input_seed"] = seed
    limits = doc.get("limits", {})
    return RunConfig(
        graph=graph,
        params=params,
        daemon=daemon,
        init=init,
        task=task,
        max_steps=limits.get("max_steps"),
        phases=limits.get("phases", 2),
        sweep=doc.get("sweep", {}),
        base_dir=base_dir,
        warnings=warnings,
    )


def load_config(path: str | Path, seed: int | None = None) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(doc, path.parent, seed)
