"""Deterministic fan-out of independent Monte Carlo samples.

All per-sample randomness is keyed by (master_seed, sample_index) and
nothing else, so the partition of samples over workers can never change
a result: running on 1 or 8 processes, or re-running half the samples,
reproduces the same numbers bit for bit.
"""

from __future__ import annotations

import os
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait

import numpy as np

WORKERS_ENV_VAR = "CRYOCHAIN_WORKERS"

# keep enough tasks in flight to cover scheduling gaps without submitting
# the whole sample list up front
_MAX_IN_FLIGHT_PER_WORKER = 4


def sample_seed_sequence(master_seed: int, index: int) -> np.random.SeedSequence:
    """Independent seed stream for one sample, stable under any scheduling."""
    if index < 0:
        raise ValueError(f"sample index must be >= 0, got {index}")
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))


def default_worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV_VAR, "").strip()
    if raw:
        count = int(raw)
        if count < 1:
            raise ValueError(f"{WORKERS_ENV_VAR} must be >= 1, got {count}")
        return count
    return os.cpu_count() or 1


def _guarded(task, payload):
    try:
        return True, task(payload)
    except Exception as exc:  # worker errors travel back as data
        return False, f"{type(exc).__name__}: {exc}"


def parallel_map(task, payloads, workers: int = 1, progress=None):
    """Map `task` over `payloads`, returning (results, failures).

    `results[i]` is the task value for payload i, or None if that sample
    raised; `failures` lists (index, message) pairs.  `task` must be a
    module-level callable so it can cross process boundaries.  `progress`,
    if given, is called with the running completion count.  Results are
    indexed, never ordered by completion, so worker count cannot affect
    the output.
    """
    payloads = list(payloads)
    results = [None] * len(payloads)
    failures = []

    if workers <= 1:
        for i, payload in enumerate(payloads):
            ok, value = _guarded(task, payload)
            if ok:
                results[i] = value
            else:
                failures.append((i, value))
            if progress is not None:
                progress(i + 1)
        return results, failures

    done_count = 0
    limit = workers * _MAX_IN_FLIGHT_PER_WORKER
    with ProcessPoolExecutor(max_workers=workers) as pool:
        pending = {}
        next_idx = 0
        while next_idx < len(payloads) or pending:
            while next_idx < len(payloads) and len(pending) < limit:
                fut = pool.submit(_guarded, task, payloads[next_idx])
                pending[fut] = next_idx
                next_idx += 1
            finished, _ = wait(pending, return_when=FIRST_COMPLETED)
            for fut in finished:
                i = pending.pop(fut)
                ok, value = fut.result()
                if ok:
                    results[i] = value
                else:
                    failures.append((i, value))
                done_count += 1
                if progress is not None:
                    progress(done_count)
    failures.sort()
    return results, failures
