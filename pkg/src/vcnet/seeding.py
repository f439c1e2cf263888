"""Deterministic fan-out of one master seed into per-task seeds.

Every randomized procedure in the pipeline derives its own seed as
``derive_seed(master, label, index, ...)``. The derivation hashes the
master seed together with the task labels, so results never depend on
the order in which tasks are scheduled.
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *labels: object) -> int:
    """Derive a 63-bit seed from a master seed and a label path.

    The same ``(master, labels)`` pair always yields the same seed; any
    change in a label yields an unrelated one.
    """
    key = "|".join([str(int(master))] + [str(lab) for lab in labels])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1
