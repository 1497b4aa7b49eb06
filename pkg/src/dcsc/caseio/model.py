"""Grid case data model (MW and per-unit reactance, MATPOWER conventions)."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace


class BusType(enum.IntEnum):
    PQ = 1
    PV = 2
    REF = 3
    ISOLATED = 4


@dataclass(frozen=True)
class Bus:
    id: int
    bus_type: BusType
    pd: float


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    x: float
    rate_a: float = 0.0  # MW; 0 means unlimited
    status: bool = True

    @property
    def limited(self) -> bool:
        return self.rate_a > 0


@dataclass(frozen=True)
class Generator:
    bus: int
    pmin: float
    pmax: float
    cost: tuple[float, float, float]  # a*p^2 + b*p + c, p in MW
    ramp: float | None = None  # MW/h
    status: bool = True
    # original members when this unit is the aggregate of colocated units
    merged_from: tuple["Generator", ...] = ()

    @property
    def a(self) -> float:
        return self.cost[0]

    @property
    def b(self) -> float:
        return self.cost[1]

    @property
    def c(self) -> float:
        return self.cost[2]

    def cost_at(self, p):
        a, b, c = self.cost
        return a * p * p + b * p + c

    def ramp_or(self, frac: float = 0.3) -> float:
        """Ramp rate, falling back to ``frac * pmax`` per hour."""
        return self.ramp if self.ramp is not None else frac * self.pmax


@dataclass(frozen=True)
class GridCase:
    base_mva: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        for attr in ("buses", "branches", "generators"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))

    @property
    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    @property
    def bus_index(self) -> dict[int, int]:
        """External bus id to dense internal index."""
        return {b.id: k for k, b in enumerate(self.buses)}

    @property
    def n_limited(self) -> int:
        return sum(1 for br in self.branches if br.status and br.limited)

    @property
    def total_load(self) -> float:
        return sum(b.pd for b in self.buses)

    def replace(self, **changes) -> "GridCase":
        return replace(self, **changes)

    def summary(self) -> dict:
        return {
            "name": self.name,
            "base_mva": self.base_mva,
            "buses": len(self.buses),
            "branches": len(self.branches),
            "limited_branches": self.n_limited,
            "generators": len(self.generators),
            "total_load_mw": self.total_load,
        }
