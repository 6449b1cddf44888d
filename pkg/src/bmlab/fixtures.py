"""Fixture corpus: named bodies with reproducible known values."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .body import (SymmetricBody, cross_polytope, cube, in_circum, lp_ball_polygon,
                   regular_polygon)
from .decomposition import AderDecomposition, find_ader, verify_ader
from .distance import bm_to_ball, bm_to_parallelogram
from .onesym import equality_condition_check, is_rotation_invariant, mirrored_arc_body

SQRT2 = math.sqrt(2.0)
CUT_LEVEL = 1e-3


@dataclass
class Known:
    value: float
    tol: float
    source: str  # how the value is known: "closed form", "derived", "trivial"


@dataclass
class Fixture:
    name: str
    body: SymmetricBody
    known_values: dict[str, Known] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "body": self.body.to_dict(),
                "known_values": {k: {"value": v.value, "tol": v.tol, "source": v.source}
                                 for k, v in self.known_values.items()}}


def truncated_cube4() -> SymmetricBody:
    """4-cube with one antipodal vertex pair shaved off by a slab."""
    F = np.vstack([np.eye(4), np.ones(4) / (2.0 * (1.0 + CUT_LEVEL))])
    return SymmetricBody.from_halfspaces(F, "cube4-truncated")


def _builders() -> dict[str, Callable[[], Fixture]]:
    def fx(name, body, **vals):
        return lambda: Fixture(name, body(), {k: Known(*v) for k, v in vals.items()})

    c8 = 1.0 / math.cos(math.pi / 8)
    c16 = 1.0 / math.cos(math.pi / 16)
    return {
        "cube2": fx("cube2", lambda: cube(2), d_ball=(SQRT2, 1e-6, "closed form"), d_pgram=(1.0, 1e-9, "trivial")),
        "cross2": fx("cross2", lambda: cross_polytope(2), d_ball=(SQRT2, 1e-6, "closed form"),
                     d_pgram=(1.0, 1e-9, "trivial")),
        "cube3": fx("cube3", lambda: cube(3), d_ball=(math.sqrt(3), 1e-6, "closed form")),
        "cross3": fx("cross3", lambda: cross_polytope(3), d_ball=(math.sqrt(3), 1e-6, "closed form")),
        "cube4-truncated": fx("cube4-truncated", truncated_cube4, d_ball=(2.0, 1e-4, "closed form"),
                              certified_at_1_2=(1.0, 0.0, "closed form")),
        "hexagon": fx("hexagon", lambda: regular_polygon(6, "hexagon"),
                      d_ball=(2 / math.sqrt(3), 1e-6, "derived"), d_pgram=(1.5, 1e-6, "closed form")),
        "octagon": fx("octagon", lambda: regular_polygon(8, "octagon"),
                      d_ball=(c8, 1e-6, "derived"), d_pgram=(SQRT2, 1e-5, "closed form")),
        "16-gon": fx("16-gon", lambda: regular_polygon(16, "16-gon"),
                     d_ball=(c16, 1e-6, "derived"), d_pgram=(SQRT2, 1e-5, "closed form")),
        "l4-512": fx("l4-512", lambda: lp_ball_polygon(4, 512, "l4-512"),
                     d_ball=(2 ** 0.25, 1e-3, "closed form"), d_pgram=(2 ** 0.25, 1e-3, "closed form")),
        "l1.5-512": fx("l1.5-512", lambda: lp_ball_polygon(1.5, 512, "l1.5-512"),
                       d_ball=(2 ** (1 / 6), 1e-3, "derived"), d_pgram=(2 ** (1 / 3), 1e-3, "derived")),
        "mirrored-arc": fx("mirrored-arc", lambda: mirrored_arc_body(),
                           d_pgram=(SQRT2, 1e-4, "closed form"), condition_holds=(1.0, 0.0, "closed form"),
                           rot45_invariant=(0.0, 0.0, "derived")),
    }


FIXTURE_NAMES = tuple(_builders())


def load_fixture(name: str) -> Fixture:
    try:
        return _builders()[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURE_NAMES)}") from None


def all_fixtures() -> list[Fixture]:
    return [load_fixture(n) for n in FIXTURE_NAMES]


def compute_quantity(fx: Fixture, quantity: str) -> float:
    K = fx.body
    if quantity == "d_ball":
        return bm_to_ball(K).value
    if quantity == "d_pgram":
        return bm_to_parallelogram(K).value
    if quantity == "certified_at_1_2":
        r, R = in_circum(K)
        D = find_ader(K, 1.0, 2.0)
        ok = (abs(r - 1) < 1e-12 and abs(R - 2) < 1e-12 and isinstance(D, AderDecomposition)
              and verify_ader(D, 1e-8, K))
        return 1.0 if ok else 0.0
    if quantity == "condition_holds":
        return 1.0 if equality_condition_check(K, with_distance=False).condition_holds else 0.0
    if quantity == "rot45_invariant":
        return 1.0 if is_rotation_invariant(K) else 0.0
    raise KeyError(quantity)


@dataclass
class FixtureCheck:
    fixture: str
    quantity: str
    expected: float
    got: float
    tol: float
    ok: bool


def verify_fixture(fx: Fixture) -> list[FixtureCheck]:
    out = []
    for q, kv in fx.known_values.items():
        got = compute_quantity(fx, q)
        out.append(FixtureCheck(fx.name, q, kv.value, got, kv.tol, abs(got - kv.value) <= kv.tol))
    return out


def export_fixtures(directory: str | Path) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for fx in all_fixtures():
        p = d / f"{fx.name}.json"
        p.write_text(json.dumps(fx.to_dict(), indent=1) + "\n")
        paths.append(p)
    return paths


def body_from_file(path: str | Path) -> SymmetricBody:
    """Read a body JSON, or the body inside an exported fixture file."""
    data = json.loads(Path(path).read_text())
    if "body" in data and isinstance(data["body"], dict):
        data = data["body"]
    return SymmetricBody.from_dict(data)
