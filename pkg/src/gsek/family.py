"""The fixed, versioned family of potentials used by the verification suites."""

from __future__ import annotations

from typing import List, Tuple

from .dsl import parse_potential
from .potentials import Potential

FAMILY_VERSION = "1"

# (name, dsl, dimensions)
_MEMBERS = (
    ("ball", "ball:1,1", (1, 2, 3)),
    ("const", "const:1", (1, 2, 3)),
    ("ball_half", "ball:1,0.5", (1, 2, 3)),
    ("ball_double", "ball:1,2", (1, 2, 3)),
    ("dilate_0.25", "dilate:0.25(ball:1,1)", (1, 2, 3)),
    ("dilate_4", "dilate:4(ball:1,1)", (1, 2, 3)),
    ("cyl_1", "cyl3:1", (3,)),
    ("cyl_10", "cyl3:10", (3,)),
)


def standard_family(dim: int, include_cylinders: bool = True) -> List[Tuple[str, Potential]]:
    """[(name, potential)] for the given dimension, in a stable order."""
    out = []
    for name, dsl, dims in _MEMBERS:
        if dim not in dims:
            continue
        if name.startswith("cyl") and not include_cylinders:
            continue
        out.append((name, parse_potential(dsl, dim)))
    return out


def family_listing() -> list:
    return [{"name": n, "dsl": s, "dims": list(d)} for n, s, d in _MEMBERS]
