"""Counter-based random streams for reproducible parallel runs.

Every run owns a Philox-based stream keyed by (master seed, run id), so
cells of an experiment grid can execute in any order or in parallel and
still draw identical values. Within a run, independent purposes (oracle
noise, segment sampling, ...) get disjoint counter ranges; each purpose
consumes a fixed number of draws per iteration, which pins every draw to
a deterministic counter position.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["run_stream", "RunRng"]

# Purpose indices carve the 256-bit Philox counter into disjoint blocks.
PURPOSE_ORACLE = 0
PURPOSE_SEGMENT = 1
PURPOSE_AUX = 2


def _key(master_seed: int, run_id: str) -> np.ndarray:
    digest = hashlib.sha256(f"{int(master_seed)}|{run_id}".encode()).digest()
    return np.frombuffer(digest[:16], dtype=np.uint64)


def run_stream(master_seed: int, run_id: str, purpose: int = 0) -> np.random.Generator:
    """Generator for one (seed, run, purpose) triple; same args, same stream."""
    if purpose < 0:
        raise ValueError("purpose must be >= 0")
    counter = int(purpose) << 192
    return np.random.Generator(np.random.Philox(key=_key(master_seed, run_id), counter=counter))


class RunRng:
    """Bundle of per-purpose streams owned by a single run."""

    def __init__(self, master_seed: int, run_id: str):
        self.master_seed = int(master_seed)
        self.run_id = str(run_id)
        self._streams: dict[int, np.random.Generator] = {}

    def stream(self, purpose: int = PURPOSE_ORACLE) -> np.random.Generator:
        gen = self._streams.get(purpose)
        if gen is None:
            gen = run_stream(self.master_seed, self.run_id, purpose)
            self._streams[purpose] = gen
        return gen

    @property
    def oracle(self) -> np.random.Generator:
        return self.stream(PURPOSE_ORACLE)

    @property
    def segment(self) -> np.random.Generator:
        return self.stream(PURPOSE_SEGMENT)
