"""CSV formats for policy maps, value functions, sweeps and traces.

Floats are written with ``repr`` so output is exact and byte-stable.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .model import ModelParams, State, state_index, state_space
from .policies import Policy

POLICY_HEADER = ("battery", "age", "action")
VALUE_HEADER = ("battery", "age", "value")
SWEEP_HEADER = ("param_value", "policy", "avg_aoi", "std_aoi")
CONVERGENCE_HEADER = ("slot", "policy", "running_avg_aoi")


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) for x in row])


def write_policy_csv(policy: Policy, path) -> None:
    write_rows(path, POLICY_HEADER, policy.rows())


def write_value_csv(values: np.ndarray, params: ModelParams, path) -> None:
    write_rows(path, VALUE_HEADER,
               ((s.battery, s.age, float(v)) for s, v in zip(state_space(params), values)))


def read_policy_csv(path, params: ModelParams, label: str = "policy") -> Policy:
    """Load a policy map; every state must appear exactly once."""
    table = np.full(params.n_states, -1, dtype=np.int8)
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != POLICY_HEADER:
            raise ValueError(f"{path}: expected header {','.join(POLICY_HEADER)}")
        for lineno, row in enumerate(reader, 2):
            b, d, a = (int(x) for x in row)
            state = State(b, d)
            if not (0 <= b <= params.battery_capacity and 1 <= d <= params.age_max):
                raise ValueError(f"{path}:{lineno}: state {tuple(state)} out of range")
            idx = state_index(state, params)
            if table[idx] != -1:
                raise ValueError(f"{path}:{lineno}: duplicate state {tuple(state)}")
            table[idx] = a
    if (table < 0).any():
        raise ValueError(f"{path}: {int((table < 0).sum())} states missing")
    return Policy(params, table, label=label)
