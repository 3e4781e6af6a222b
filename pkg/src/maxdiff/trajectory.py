"""Trajectory record and its JSON-lines serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError

TRAJ_MAGIC = {"format": "maxdiff-trajectories", "version": 1}


@dataclass
class Trajectory:
    """Time-indexed states (T+1, d), actions (T, m) and rewards (T,).

    Actions and rewards may be absent for analysis-only paths (e.g. fixtures
    for diffusion statistics).
    """

    states: np.ndarray
    actions: Optional[np.ndarray] = None
    rewards: Optional[np.ndarray] = None
    failed: bool = False

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2:
            raise ConfigError(f"states must be 2-D, got shape {self.states.shape}")
        if self.actions is not None:
            self.actions = np.asarray(self.actions, dtype=float)
        if self.rewards is not None:
            self.rewards = np.asarray(self.rewards, dtype=float)

    def __len__(self):
        return self.states.shape[0]

    @property
    def total_reward(self) -> float:
        return 0.0 if self.rewards is None else float(np.sum(self.rewards))


def save_trajectories(path, trajectories) -> None:
    """One JSON object per line, preceded by a magic/version line."""
    with open(path, "w") as f:
        f.write(json.dumps(TRAJ_MAGIC) + "\n")
        for traj in trajectories:
            rec = {"states": traj.states.tolist()}
            if traj.actions is not None:
                rec["actions"] = traj.actions.tolist()
            if traj.rewards is not None:
                rec["rewards"] = traj.rewards.tolist()
            f.write(json.dumps(rec) + "\n")


def load_trajectories(path) -> list[Trajectory]:
    """Parse a trajectory file; malformed lines raise ConfigError with the line number."""
    out = []
    with open(path) as f:
        first = f.readline()
        if not first.strip():
            raise ConfigError(f"{path}: line 1: empty trajectory file")
        try:
            magic = json.loads(first)
            if magic.get("format") != TRAJ_MAGIC["format"]:
                raise ValueError("bad magic")
        except (ValueError, AttributeError):
            raise ConfigError(f"{path}: line 1: not a trajectory file") from None
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(Trajectory(
                    states=np.asarray(rec["states"], dtype=float),
                    actions=(np.asarray(rec["actions"], dtype=float)
                             if "actions" in rec else None),
                    rewards=(np.asarray(rec["rewards"], dtype=float)
                             if "rewards" in rec else None)))
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"{path}: line {lineno}: {exc}") from None
    return out
