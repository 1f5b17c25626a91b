"""Concurrent transcription with in-order delivery.

Fragments are handed to a transcriber under a bounded worker pool; results
come back in whatever order the workers finish, and a sequence-number window
reassembles them so callers always receive transcripts in seq order. A
transcriber failure on one fragment degrades that transcript to empty text
with a warning attached; the stream itself never stalls.

End-to-end latency for one word is, to first order, the chunk duration plus
the transcriber's processing time plus the wait for a free worker; see
:func:`estimate_latency`.
"""

from __future__ import annotations

import logging
from concurrent.futures import Future, ThreadPoolExecutor
from typing import Callable, Iterable, Iterator, Protocol

from .audio import AudioFragment, PipelineConfig, Transcript, compute_dbfs

logger = logging.getLogger(__name__)


class Transcriber(Protocol):
    """Anything that turns one audio fragment into text.

    Implementations may raise; the pipeline absorbs the failure into an
    empty-text transcript. Returning "" for unintelligible audio is normal.
    """

    def transcribe(self, fragment: AudioFragment) -> str: ...


class ScriptedTranscriber:
    """Deterministic offline stand-in for a real speech recognizer.

    Maps fragment seq to a fixed line from a script; fragments past the end
    of the script transcribe to "". Keeps every run fully reproducible.
    """

    def __init__(self, lines: list[str]):
        self.lines = list(lines)

    def transcribe(self, fragment: AudioFragment) -> str:
        if 0 <= fragment.seq < len(self.lines):
            return self.lines[fragment.seq]
        return ""

    @classmethod
    def from_file(cls, path) -> "ScriptedTranscriber":
        with open(path, encoding="utf-8") as fh:
            return cls([line.rstrip("\n") for line in fh])


class CallableTranscriber:
    """Adapt a plain ``fragment -> text`` function to the Transcriber contract."""

    def __init__(self, fn: Callable[[AudioFragment], str]):
        self._fn = fn

    def transcribe(self, fragment: AudioFragment) -> str:
        return self._fn(fragment)


def transcribe_ordered(
    fragments: Iterable[AudioFragment],
    adapter: Transcriber,
    cfg: PipelineConfig,
) -> Iterator[Transcript]:
    """Transcribe fragments concurrently, yielding transcripts in seq order.

    At most ``cfg.workers`` adapter calls are in flight at once; the input
    may be a lazy stream and is consumed with a window of the same size.
    Every output transcript carries the RMS dBFS of its fragment. Output
    order and content are identical to a workers=1 sequential run.
    """
    source = iter(fragments)
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        window: list[tuple[AudioFragment, Future]] = []

        def fill() -> None:
            while len(window) < cfg.workers:
                frag = next(source, None)
                if frag is None:
                    return
                window.append((frag, pool.submit(adapter.transcribe, frag)))

        fill()
        while window:
            frag, fut = window.pop(0)
            try:
                text = fut.result()
                warning = None
            except Exception as exc:  # degrade, never stall (liveness first)
                logger.warning("transcriber failed on seq %d: %s", frag.seq, exc)
                text = ""
                warning = f"transcriber failed: {exc}"
            fill()
            yield Transcript(seq=frag.seq, text=text, dbfs=compute_dbfs(frag), warning=warning)


def estimate_latency(chunk_ms: float, mean_process_ms: float, mean_queue_wait_ms: float) -> float:
    """Expected recording-to-transcript delay: chunk duration + processing + queue wait."""
    if chunk_ms < 0 or mean_process_ms < 0 or mean_queue_wait_ms < 0:
        raise ValueError("latency components must be >= 0")
    return chunk_ms + mean_process_ms + mean_queue_wait_ms
