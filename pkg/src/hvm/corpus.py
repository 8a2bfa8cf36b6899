"""Text ingestion and model persistence.

Text is atomized at the character level (Unicode code points), mapped to
dense atom ids through an insertion-ordered symbol table so that decoding
round-trips exactly.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InsufficientDataError, SchemaVersionError
from .model import MODEL_SCHEMA_VERSION, Inventory


class SymbolTable:
    """Bijective char <-> atom id mapping, insertion ordered."""

    def __init__(self):
        self.to_id: dict[str, int] = {}
        self.to_char: dict[int, str] = {}

    @classmethod
    def from_chars(cls, chars) -> "SymbolTable":
        table = cls()
        for ch in chars:
            table.intern(ch)
        return table

    def intern(self, ch: str) -> int:
        atom = self.to_id.get(ch)
        if atom is None:
            atom = len(self.to_id)
            self.to_id[ch] = atom
            self.to_char[atom] = ch
        return atom

    def encode(self, text: str) -> list[int]:
        return [self.intern(ch) for ch in text]

    def decode(self, atoms) -> str:
        return "".join(self.to_char[a] for a in atoms)

    def __len__(self) -> int:
        return len(self.to_id)

    def to_dict(self) -> dict:
        return {"symbols": list(self.to_id.keys())}

    @classmethod
    def from_dict(cls, data: dict) -> "SymbolTable":
        return cls.from_chars(data["symbols"])


def load_snippet(path, length: int = 1000, seed: int = 0) -> tuple[list[int], SymbolTable]:
    """Atomize a random snippet of the given length from a text file.

    The start offset is drawn uniformly from the seeded generator, so the
    same (path, length, seed) always yields the same snippet.
    """
    text = Path(path).read_text(encoding="utf-8")
    if len(text) < length:
        raise InsufficientDataError(
            f"{path}: file has {len(text)} characters, need at least {length}"
        )
    rng = np.random.default_rng(seed)
    start = int(rng.integers(0, len(text) - length + 1))
    table = SymbolTable()
    return table.encode(text[start : start + length]), table


def save_model(inventory: Inventory, path, symbol_table: SymbolTable | None = None) -> None:
    doc = inventory.to_dict()
    if symbol_table is not None:
        doc["symbol_table"] = symbol_table.to_dict()
    Path(path).write_text(json.dumps(doc, indent=2), encoding="utf-8")


def load_model(path) -> Inventory:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise SchemaVersionError(
            f"{path}: unsupported schema version {doc.get('schema_version')!r}"
        )
    return Inventory.from_dict(doc)


def load_symbol_table(path) -> SymbolTable | None:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if "symbol_table" not in doc:
        return None
    return SymbolTable.from_dict(doc["symbol_table"])


def read_int_sequence(path) -> list[int]:
    """Whitespace-separated integer file."""
    return [int(tok) for tok in Path(path).read_text(encoding="utf-8").split()]


def write_int_sequence(seq, path) -> None:
    Path(path).write_text(" ".join(str(a) for a in seq) + "\n", encoding="utf-8")
