"""Stable seed derivation for reproducible parallel runs.

Every stochastic call in a run gets its own seed derived from the run seed
plus a structural path (problem id, trial index, iteration, phase, attempt).
Seeds therefore do not depend on scheduling order or on how much of the run
was replayed after a crash.
"""

import hashlib


def derive_seed(*parts) -> int:
    """Hash an arbitrary tuple of ints/strings into a 63-bit seed."""
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "big") >> 1
