"""capkit: playful speech captions with rule-derived designs in a shared, replicated space.

The pieces compose front to back:

* :mod:`capkit.audio` / :mod:`capkit.pipeline` chunk timed speech into
  sequenced fragments, measure loudness, and transcribe them concurrently
  without reordering;
* :mod:`capkit.textproc` + :mod:`capkit.lexicons` pick the interesting words
  and give each a visual design (color, size, typeface, emoji, ornament,
  bubble, motion);
* :mod:`capkit.sim` runs the deterministic world the captions live in;
* :mod:`capkit.server` / :mod:`capkit.simulate` replicate that world to
  clients over WebSocket or in-process for replay tests;
* :mod:`capkit.cli` ties it together as the ``capkit`` command.
"""

__version__ = "0.1.0"

from .audio import (
    AudioFormatError,
    AudioFragment,
    EmptyStreamError,
    PipelineConfig,
    Transcript,
    chunk_stream,
    compute_dbfs,
    read_wav,
    write_wav,
)
from .lexicons import Lexicons, LexiconError, bundled_lexicons, load_lexicons
from .pipeline import (
    CallableTranscriber,
    ScriptedTranscriber,
    Transcriber,
    estimate_latency,
    transcribe_ordered,
)
from .sim import (
    Avatar,
    CaptionEntity,
    SimConfig,
    SimError,
    Vec3,
    WorldState,
    hash_hex,
    hash_snapshot,
)
from .textproc import (
    BubbleKind,
    CaptionSpec,
    EmojiKind,
    MotionKind,
    POS,
    Size,
    Typeface,
    Valence,
    build_caption_specs,
    filter_keywords,
    map_bubble,
    map_color,
    map_emoji,
    map_motion,
    map_ornament,
    map_size,
    map_typeface,
    pos_tag,
    tokenize,
    valence,
)

__all__ = [
    "__version__",
    "AudioFormatError",
    "AudioFragment",
    "EmptyStreamError",
    "PipelineConfig",
    "Transcript",
    "chunk_stream",
    "compute_dbfs",
    "read_wav",
    "write_wav",
    "Lexicons",
    "LexiconError",
    "bundled_lexicons",
    "load_lexicons",
    "CallableTranscriber",
    "ScriptedTranscriber",
    "Transcriber",
    "estimate_latency",
    "transcribe_ordered",
    "Avatar",
    "CaptionEntity",
    "SimConfig",
    "SimError",
    "Vec3",
    "WorldState",
    "hash_hex",
    "hash_snapshot",
    "BubbleKind",
    "CaptionSpec",
    "EmojiKind",
    "MotionKind",
    "POS",
    "Size",
    "Typeface",
    "Valence",
    "build_caption_specs",
    "filter_keywords",
    "map_bubble",
    "map_color",
    "map_emoji",
    "map_motion",
    "map_ornament",
    "map_size",
    "map_typeface",
    "pos_tag",
    "tokenize",
    "valence",
]
