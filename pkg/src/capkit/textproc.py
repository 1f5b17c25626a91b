"""Turning transcripts into caption designs.

One transcript line becomes zero or more caption specs: the text is
tokenized, tagged, stripped of function words, and every surviving word gets
a visual design from seven independent rules:

  color     <- word valence (positive / negative / neutral word lists)
  size      <- fragment loudness in dBFS (three bands)
  typeface  <- formal word list (serif) vs everything else (rounded sans)
  emoji     <- smiling / sad / embarrassed word lists
  ornament  <- concrete-object word list, mapping to an icon id
  bubble    <- greetings (rounded) and interjections (spiky)
  motion    <- shivering word list

The rules are independent: a word may stack several of them ("shocked" gets
both a spiky bubble and the shivering motion). All words in a fragment share
that fragment's loudness, so they share a size.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .audio import Transcript, dbfs_from_jsonable, dbfs_to_jsonable
from .lexicons import Lexicons

# The three caption colors (RGB in [0,1]); no other color is ever emitted.
COLOR_POSITIVE = (1.0, 0.82, 0.26)  # light orange
COLOR_NEGATIVE = (0.09, 0.27, 0.61)  # dark blue
COLOR_NEUTRAL = (1.0, 1.0, 1.0)  # white

# Loudness bands (dBFS): below -40 small, -40..-20 medium, above -20 large.
SIZE_SMALL_BELOW = -40.0
SIZE_LARGE_ABOVE = -20.0


class POS(Enum):
    NOUN = "noun"
    VERB = "verb"
    ADJECTIVE = "adjective"
    ADVERB = "adverb"
    INTERJECTION = "interjection"
    FUNCTION = "function"
    OTHER = "other"


class Valence(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"


class Size(Enum):
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"


class Typeface(Enum):
    FORMAL = "formal"  # rendered as a serif face
    CASUAL = "casual"  # rendered as a rounded sans face


class EmojiKind(Enum):
    SMILING = "smiling"
    SAD = "sad"
    EMBARRASSED = "embarrassed"


class BubbleKind(Enum):
    ROUNDED = "rounded"
    SPIKY = "spiky"


class MotionKind(Enum):
    SHIVERING = "shivering"


@dataclass(frozen=True)
class Token:
    text: str
    pos: POS

    def __post_init__(self) -> None:
        if not self.text or any(c.isspace() for c in self.text):
            raise ValueError(f"token text must be non-empty without whitespace: {self.text!r}")


@dataclass(frozen=True)
class CaptionSpec:
    """The complete visual design of one caption, ready to render."""

    id: str
    word: str
    color: tuple[float, float, float]
    size: Size
    typeface: Typeface
    emoji: Optional[EmojiKind]
    ornament: Optional[str]  # icon id
    bubble: Optional[BubbleKind]
    motion: Optional[MotionKind]
    speaker: str  # avatar id
    seq: int  # source fragment seq

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "word": self.word,
            "color": list(self.color),
            "size": self.size.value,
            "typeface": self.typeface.value,
            "emoji": self.emoji.value if self.emoji else None,
            "ornament": self.ornament,
            "bubble": self.bubble.value if self.bubble else None,
            "motion": self.motion.value if self.motion else None,
            "speaker": self.speaker,
            "seq": self.seq,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, rec: dict) -> "CaptionSpec":
        color = rec["color"]
        if not (isinstance(color, (list, tuple)) and len(color) == 3):
            raise ValueError(f"color must be a 3-element array, got {color!r}")
        return cls(
            id=str(rec["id"]),
            word=str(rec["word"]),
            color=(float(color[0]), float(color[1]), float(color[2])),
            size=Size(rec["size"]),
            typeface=Typeface(rec["typeface"]),
            emoji=EmojiKind(rec["emoji"]) if rec.get("emoji") else None,
            ornament=rec.get("ornament"),
            bubble=BubbleKind(rec["bubble"]) if rec.get("bubble") else None,
            motion=MotionKind(rec["motion"]) if rec.get("motion") else None,
            speaker=str(rec["speaker"]),
            seq=int(rec["seq"]),
        )


_WORD_RE = re.compile(r"[a-z]+(?:'[a-z]+)*")

# Suffix heuristics tried in order after the closed-class and interjection lookups.
_SUFFIX_POS = [
    ("ly", POS.ADVERB),
    ("ing", POS.VERB),
    ("ed", POS.VERB),
    ("ful", POS.ADJECTIVE),
    ("ous", POS.ADJECTIVE),
    ("ive", POS.ADJECTIVE),
]

_KEEP_POS = {POS.NOUN, POS.VERB, POS.ADJECTIVE, POS.ADVERB, POS.INTERJECTION}


def tokenize(text: str) -> list[str]:
    """Lowercased alphabetic word runs; apostrophes stay inside words.

    Punctuation and digits are dropped. Repeated-letter laughter runs like
    "hhhhhh" come through as one token.
    """
    return _WORD_RE.findall(text.lower().replace("’", "'"))


def _is_laughter(word: str) -> bool:
    return len(word) >= 3 and len(set(word)) == 1 and word[0].isalpha()


def pos_tag(word: str, lex: Lexicons) -> POS:
    """Deterministic heuristic tagger; a replaceable stand-in for a real one.

    Order: closed-class stoplist, interjection lexicon, laughter runs,
    single stray letters, suffix rules, default noun.
    """
    if word in lex.function_words:
        return POS.FUNCTION
    if word in lex.interjections:
        return POS.INTERJECTION
    if _is_laughter(word):
        return POS.INTERJECTION
    if len(word) == 1:  # "a"/"i" are in the stoplist; other lone letters are noise
        return POS.OTHER
    for suffix, pos in _SUFFIX_POS:
        if word.endswith(suffix):
            return pos
    return POS.NOUN


def filter_keywords(tokens: Sequence[Token]) -> list[Token]:
    """Keep nouns, verbs, adjectives, adverbs, and interjections."""
    return [t for t in tokens if t.pos in _KEEP_POS]


def valence(word: str, lex: Lexicons) -> Valence:
    pos = word in lex.positive
    neg = word in lex.negative
    if pos and not neg:
        return Valence.POSITIVE
    if neg and not pos:
        return Valence.NEGATIVE
    return Valence.NEUTRAL  # absent from both, or ambiguously in both


def map_color(v: Valence) -> tuple[float, float, float]:
    if v is Valence.POSITIVE:
        return COLOR_POSITIVE
    if v is Valence.NEGATIVE:
        return COLOR_NEGATIVE
    return COLOR_NEUTRAL


def map_size(dbfs: float) -> Size:
    """Louder fragments yield bigger captions; silence counts as small."""
    if dbfs < SIZE_SMALL_BELOW:
        return Size.SMALL
    if dbfs > SIZE_LARGE_ABOVE:
        return Size.LARGE
    return Size.MEDIUM


def map_typeface(word: str, lex: Lexicons) -> Typeface:
    return Typeface.FORMAL if word in lex.formal else Typeface.CASUAL


def map_emoji(word: str, lex: Lexicons) -> Optional[EmojiKind]:
    if word in lex.smiling:
        return EmojiKind.SMILING
    if word in lex.sad:
        return EmojiKind.SAD
    if word in lex.embarrassed:
        return EmojiKind.EMBARRASSED
    return None


def map_ornament(word: str, lex: Lexicons) -> Optional[str]:
    return lex.ornament.get(word)


def map_bubble(word: str, lex: Lexicons) -> Optional[BubbleKind]:
    if word in lex.greetings:
        return BubbleKind.ROUNDED
    if word in lex.interjections:
        return BubbleKind.SPIKY
    return None


def map_motion(word: str, lex: Lexicons) -> Optional[MotionKind]:
    return MotionKind.SHIVERING if word in lex.shivering else None


def build_caption_specs(transcript: Transcript, speaker: str, lex: Lexicons) -> list[CaptionSpec]:
    """Apply the full rule chain to one transcript.

    Pure: the result depends only on (transcript, speaker, lexicons). Spec ids
    are ``speaker:seq:k`` with k the index among that transcript's kept words.
    """
    tokens = [Token(w, pos_tag(w, lex)) for w in tokenize(transcript.text)]
    specs = []
    for k, token in enumerate(filter_keywords(tokens)):
        w = token.text
        specs.append(
            CaptionSpec(
                id=f"{speaker}:{transcript.seq}:{k}",
                word=w,
                color=map_color(valence(w, lex)),
                size=map_size(transcript.dbfs),
                typeface=map_typeface(w, lex),
                emoji=map_emoji(w, lex),
                ornament=map_ornament(w, lex),
                bubble=map_bubble(w, lex),
                motion=map_motion(w, lex),
                speaker=speaker,
                seq=transcript.seq,
            )
        )
    return specs


# re-exported for callers that serialize specs next to transcripts
__all__ = [
    "POS",
    "Valence",
    "Size",
    "Typeface",
    "EmojiKind",
    "BubbleKind",
    "MotionKind",
    "Token",
    "CaptionSpec",
    "COLOR_POSITIVE",
    "COLOR_NEGATIVE",
    "COLOR_NEUTRAL",
    "tokenize",
    "pos_tag",
    "filter_keywords",
    "valence",
    "map_color",
    "map_size",
    "map_typeface",
    "map_emoji",
    "map_ornament",
    "map_bubble",
    "map_motion",
    "build_caption_specs",
    "dbfs_to_jsonable",
    "dbfs_from_jsonable",
]
