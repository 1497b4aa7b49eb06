from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..errors import ParseError
from .matpower import case_from_dict, case_to_dict, emit_json, parse_case, parse_json, parse_matpower
from .model import Branch, Bus, BusType, Generator, GridCase
from .preprocess import (
    has_colocated,
    merge_colocated_generators,
    merged_cost,
    prepare,
    reference_bus,
    remove_out_of_service,
    with_reference,
)
from .validate import Diagnostic, bus_components, errors, validate

BUILTIN = ("case39", "case118", "case300", "case1354pegase")


def builtin_path(name: str) -> Path:
    if name not in BUILTIN:
        raise ParseError(f"unknown built-in case {name!r}; choose from {', '.join(BUILTIN)}")
    return Path(str(resources.files(__package__) / "data" / f"{name}.m"))


def load_builtin(name: str) -> GridCase:
    return parse_matpower(builtin_path(name).read_text(), name=name)


def load_case(source: str) -> GridCase:
    """Load a built-in case by name, or a MATPOWER/JSON file by path."""
    if source in BUILTIN:
        return load_builtin(source)
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read case {source!r}: {exc.strerror}") from None
    return parse_case(text, name=path.stem)


__all__ = [
    "BUILTIN", "Branch", "Bus", "BusType", "Diagnostic", "Generator", "GridCase",
    "builtin_path", "bus_components", "case_from_dict", "case_to_dict", "emit_json",
    "errors", "has_colocated", "load_builtin", "load_case", "merge_colocated_generators",
    "merged_cost", "parse_case", "parse_json", "parse_matpower", "prepare", "reference_bus",
    "remove_out_of_service", "validate", "with_reference",
]
