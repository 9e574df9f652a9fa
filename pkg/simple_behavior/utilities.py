"""Utilities shared by the pipeline components."""

# Copyright (c) Microsoft Corporation.
# Licensed under the MIT license.

import hashlib
import json
import math
from typing import Any, Iterable

import numpy as np


def canonical_json(value: Any) -> str:
    """Serialize a value to JSON with a stable key order and layout.

    :param value: The JSON compatible value to serialize

    :returns: The serialized text
    """
    return json.dumps(value, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(raw_config: dict[str, Any]) -> str:
    """Hash a merged configuration dictionary.

    :param raw_config: The configuration as plain data

    :returns: The hex encoded SHA-256 digest of the canonical JSON form
    """
    return hashlib.sha256(canonical_json(raw_config).encode("utf-8")).hexdigest()


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a child seed that only depends on the root seed and the keys.

    Derived seeds do not depend on scheduling, so parallel work stays reproducible.

    :param seed: The root seed
    :param keys: The integers identifying the unit of work

    :returns: A 63-bit seed
    """
    sequence = np.random.SeedSequence([seed, *keys])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def masked(value: float | None) -> float | None:
    """Normalize non-finite numbers to the masked marker.

    :param value: The value to check

    :returns: The value, or None when it is missing or not finite
    """
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def finite_values(values: Iterable[float | None]) -> list[float]:
    """Drop masked values from a sequence.

    :param values: The values to filter

    :returns: The finite values in their original order
    """
    return [float(value) for value in values if value is not None and math.isfinite(value)]
