"""Discovery of the calculator modules and parsing of their TOML-like headers.

Every module in ``calculators`` opens with a header docstring: a ``# Title``
line followed by bracketed sections (``[Description]``, ``[inputs]``,
``[result]``, ``[working]``...). Headers are read from source without
importing, so ``list`` and ``doc`` stay cheap.
"""

from __future__ import annotations

import importlib
import importlib.util
import io
import os
import pkgutil
import re
from dataclasses import dataclass
from types import ModuleType
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Extra, Field

import calculators
from core.errors import CalculatorNotFoundError

_SECTION = re.compile(r"^\[([A-Za-z_]+)\]$")
_FIELD_START = re.compile(r"^-\s*name:\s*(.+)$", re.IGNORECASE)
_KEY_VALUE = re.compile(r"^([A-Za-z_][A-Za-z0-9_\-]*)\s*:\s*(.+)$")


class InputField(BaseModel):
    """One entry of a header's ``[inputs]`` block."""

    name: str
    type: str = "string"
    required: bool = False
    minimum: Optional[float] = Field(None, alias="min")
    maximum: Optional[float] = Field(None, alias="max")
    enum: Optional[List[str]] = None
    description: str = ""

    class Config:
        extra = Extra.forbid
        allow_population_by_field_name = True

    def summary(self) -> Dict[str, Any]:
        return self.dict(by_alias=True, exclude_none=True)


@dataclass(frozen=True)
class CalculatorHeader:
    name: str
    text: str

    @property
    def title(self) -> str:
        first = self.text.splitlines()[0] if self.text else ""
        return first.lstrip("# ").strip() or self.name

    @property
    def description(self) -> str:
        return " ".join(line for line in section_lines(self.text, "description") if line)

    @property
    def inputs(self) -> List[InputField]:
        return parse_inputs(self.text)

    @property
    def sections(self) -> List[str]:
        found = (_SECTION.match(line.strip()) for line in self.text.splitlines())
        return [m.group(1).lower() for m in found if m]


def _module_path(name: str) -> Optional[str]:
    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
        return None
    try:
        found = importlib.util.find_spec(f"calculators.{name}")
    except (ImportError, ValueError):
        return None
    if not found or not found.origin or not os.path.isfile(found.origin):
        return None
    return found.origin


def _top_docstring(source: str) -> str:
    m = re.search(r"^\s*([\"\']{3})([\s\S]*?)\1", source)
    return m.group(2).strip() if m else ""


def section_lines(doc: str, section: str) -> List[str]:
    """Stripped lines of ``[section]`` up to the next ``[...]`` or ``#`` heading."""
    lines: List[str] = []
    inside = False
    for raw in doc.splitlines():
        line = raw.strip()
        if not inside:
            inside = line.lower() == f"[{section.lower()}]"
            continue
        if line.startswith("#") or _SECTION.match(line):
            break
        lines.append(line)
    return lines


def _header_value(raw: str) -> Any:
    v = raw.strip()
    if v.lower() in {"true", "false"}:
        return v.lower() == "true"
    if v.startswith("[") and v.endswith("]"):
        return [p.strip().strip("\"'") for p in v[1:-1].split(",") if p.strip()]
    return v


def parse_inputs(doc: str) -> List[InputField]:
    """Fields of the ``[inputs]`` block, in declaration order."""
    fields: List[InputField] = []
    current: Optional[Dict[str, Any]] = None
    for line in section_lines(doc, "inputs") + [""]:
        start = _FIELD_START.match(line)
        if start or not line:
            if current:
                fields.append(InputField(**current))
            current = {"name": start.group(1).strip()} if start else None
            continue
        kv = _KEY_VALUE.match(line)
        if kv and current is not None:
            current[kv.group(1).lower()] = _header_value(kv.group(2))
    return fields


def read_header(name: str) -> CalculatorHeader:
    """Header of ``calculators/<name>.py`` read from source."""
    path = _module_path(name)
    if path is None:
        raise CalculatorNotFoundError(name)
    with io.open(path, "r", encoding="utf-8") as f:
        return CalculatorHeader(name, _top_docstring(f.read()))


def load_calculator(name: str) -> ModuleType:
    """Import ``calculators.<name>``; it must define ``calculate``."""
    if _module_path(name) is None:
        raise CalculatorNotFoundError(name)
    module = importlib.import_module(f"calculators.{name}")
    if not callable(getattr(module, "calculate", None)):
        raise CalculatorNotFoundError(name, "module has no calculate() function")
    return module


def available_calculators() -> Dict[str, str]:
    """Calculator names mapped to their header titles."""
    names = sorted(m.name for m in pkgutil.iter_modules(calculators.__path__) if not m.ispkg)
    return {name: read_header(name).title for name in names}
