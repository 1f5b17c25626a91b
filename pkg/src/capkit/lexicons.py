"""Word lists driving the caption design rules.

Each list is a plain UTF-8 text file, one word per line, ``#`` comments and
blank lines ignored; the ornament list is a ``word,icon_id`` CSV. Words are
normalized to lowercase at load and matched exactly afterwards (no stemming:
the lists carry inflections like "shocked"/"shocking" explicitly).
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from functools import lru_cache
from pathlib import Path
from typing import Mapping

DATA_DIR = Path(__file__).parent / "data"

# (attribute, filename) for the plain word-set lists.
_SET_FILES = [
    ("positive", "positive.txt"),
    ("negative", "negative.txt"),
    ("formal", "formal.txt"),
    ("smiling", "smiling.txt"),
    ("sad", "sad.txt"),
    ("embarrassed", "embarrassed.txt"),
    ("greetings", "greetings.txt"),
    ("interjections", "interjections.txt"),
    ("shivering", "shivering.txt"),
    ("function_words", "function_words.txt"),
]


class LexiconError(ValueError):
    """Raised when lexicon files are missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class Lexicons:
    """The loaded word lists, one attribute per design rule."""

    positive: frozenset[str]
    negative: frozenset[str]
    formal: frozenset[str]
    smiling: frozenset[str]
    sad: frozenset[str]
    embarrassed: frozenset[str]
    ornament: Mapping[str, str]  # word -> icon id
    greetings: frozenset[str]
    interjections: frozenset[str]
    shivering: frozenset[str]
    function_words: frozenset[str]

    def __post_init__(self) -> None:
        for a, b in [("smiling", "sad"), ("smiling", "embarrassed"), ("sad", "embarrassed")]:
            overlap = getattr(self, a) & getattr(self, b)
            if overlap:
                raise LexiconError(f"{a} and {b} lists overlap: {sorted(overlap)}")
        overlap = self.greetings & self.interjections
        if overlap:
            raise LexiconError(f"greetings and interjections lists overlap: {sorted(overlap)}")

    def replace(self, **changes) -> "Lexicons":
        """Copy with some lists swapped out (handy for tests and experiments)."""
        current = {f.name: getattr(self, f.name) for f in fields(self)}
        current.update(changes)
        return Lexicons(**current)


def _lines(path: Path) -> list[str]:
    if not path.is_file():
        raise LexiconError(f"missing lexicon file: {path}")
    out = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            out.append(line.lower())
    return out


def load_word_set(path: Path) -> frozenset[str]:
    return frozenset(_lines(path))


def load_ornament_map(path: Path) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for line in _lines(path):
        parts = line.split(",")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise LexiconError(f"bad ornament row (want word,icon_id): {line!r} in {path}")
        mapping[parts[0].strip()] = parts[1].strip()
    return mapping


def load_lexicons(directory: str | Path | None = None) -> Lexicons:
    """Load all lists from a directory (the bundled set by default)."""
    base = Path(directory) if directory is not None else DATA_DIR
    sets = {attr: load_word_set(base / fname) for attr, fname in _SET_FILES}
    return Lexicons(ornament=load_ornament_map(base / "ornaments.csv"), **sets)


@lru_cache(maxsize=1)
def bundled_lexicons() -> Lexicons:
    """The built-in lists, loaded once per process."""
    return load_lexicons(None)
