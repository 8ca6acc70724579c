"""Reference strings shared by every theory in binding files.

``state:[...]``, ``effect:[...]`` and ``transform:[[...]]`` give raw fiducial
data, ``effect:unit`` is the deterministic effect and ``channel:identity``
the do-nothing transformation.
"""
from __future__ import annotations

import json
from math import prod

import numpy as np

from ..errors import UnknownReference
from ..tensor import GptTensor


def _inline(text: str, ref: str):
    try:
        return np.array(json.loads(text), dtype=float)
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise UnknownReference(f"cannot read inline data in {ref!r}: {exc}") from None


def resolve_common(theory, ref: str, inputs, outputs) -> GptTensor | None:
    inputs, outputs = tuple(inputs), tuple(outputs)
    kind, _, rest = ref.partition(":")
    if kind in ("state", "effect", "transform") and rest.startswith("["):
        return GptTensor(_inline(rest, ref), outputs, inputs)
    if ref == "effect:unit" and not outputs:
        vec = np.ones(1)
        for t in inputs:
            vec = np.kron(vec, theory.unit_effect(t))
        return GptTensor(vec, (), inputs)
    if ref == "channel:identity" and [t.K for t in inputs] == [t.K for t in outputs]:
        k = prod(t.K for t in inputs)
        return GptTensor(np.eye(k), outputs, inputs)
    return None
