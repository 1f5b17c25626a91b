"""Audio ingest: chunking a PCM stream into sequenced fragments and measuring loudness.

Audio is 16-bit signed PCM, mono. Loudness is expressed in dBFS (decibels
relative to full scale): 0.0 at maximum digital amplitude, negative below,
computed from the RMS of a whole fragment against full scale 32768. A
fragment of pure silence (all-zero samples) has no finite level and is
represented by the ``-inf`` sentinel, serialized as the string ``"-inf"``.

Note the small bias of real recordings: a constant signal at the largest
positive 16-bit value (32767) measures 20*log10(32767/32768) = -0.000265 dB,
not exactly 0.
"""

from __future__ import annotations

import json
import math
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, Union

import numpy as np

FULL_SCALE = 32768.0
DEFAULT_SAMPLE_RATE = 16000


class AudioFormatError(ValueError):
    """Raised for inputs that are not PCM 16-bit mono WAV."""


class EmptyStreamError(ValueError):
    """Raised when a sample stream contains no samples."""


@dataclass(frozen=True)
class AudioFragment:
    """A fixed-duration chunk of the input stream, tagged with its sequence number.

    ``seq`` values form a gapless run 0,1,2,... per stream. The final fragment
    of a stream may be shorter than the nominal chunk length.
    """

    seq: int
    samples: np.ndarray  # int16, shape (n,)
    sample_rate: int = DEFAULT_SAMPLE_RATE
    duration_ms: int = 1000

    def __post_init__(self) -> None:
        if self.seq < 0:
            raise ValueError(f"fragment seq must be >= 0, got {self.seq}")
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("fragment samples must be a non-empty 1-d array")
        limit = self.sample_rate * self.duration_ms // 1000
        if self.samples.size > limit:
            raise ValueError(
                f"fragment {self.seq} has {self.samples.size} samples, limit {limit}"
            )


@dataclass(frozen=True)
class Transcript:
    """Text and loudness for one fragment.

    ``dbfs`` is <= 0, with -inf for silence. ``warning`` carries a note when
    the transcriber failed on this fragment and the text was degraded to "".
    """

    seq: int
    text: str
    dbfs: float
    warning: str | None = None

    def __post_init__(self) -> None:
        if self.seq < 0:
            raise ValueError(f"transcript seq must be >= 0, got {self.seq}")
        if math.isnan(self.dbfs) or self.dbfs > 0:
            raise ValueError(f"dbfs must be <= 0 or -inf, got {self.dbfs}")

    def to_json(self) -> str:
        rec: dict = {"seq": self.seq, "text": self.text, "dbfs": dbfs_to_jsonable(self.dbfs)}
        if self.warning is not None:
            rec["warning"] = self.warning
        return json.dumps(rec, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "Transcript":
        rec = json.loads(line)
        if not isinstance(rec, dict) or "seq" not in rec or "text" not in rec or "dbfs" not in rec:
            raise ValueError(f"transcript record must have seq/text/dbfs: {line!r}")
        return cls(
            seq=int(rec["seq"]),
            text=str(rec["text"]),
            dbfs=dbfs_from_jsonable(rec["dbfs"]),
            warning=rec.get("warning"),
        )


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for the chunk-and-transcribe pipeline."""

    chunk_ms: int = 1000
    workers: int = 4
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.chunk_ms < 100:
            raise ValueError(f"chunk_ms must be >= 100, got {self.chunk_ms}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    @property
    def chunk_samples(self) -> int:
        return self.sample_rate * self.chunk_ms // 1000


def dbfs_to_jsonable(dbfs: float) -> Union[float, str]:
    """-inf serializes as the string "-inf" (strict JSON has no infinities)."""
    return "-inf" if dbfs == float("-inf") else dbfs


def dbfs_from_jsonable(value) -> float:
    if value == "-inf":
        return float("-inf")
    if isinstance(value, (int, float)):
        return float(value)
    raise ValueError(f"dbfs must be a number or the string '-inf', got {value!r}")


def chunk_stream(pcm: np.ndarray, cfg: PipelineConfig) -> Iterator[AudioFragment]:
    """Split a PCM sample array into gapless fragments of cfg.chunk_ms each.

    The concatenation of all fragment samples equals the input; the last
    fragment may be short. An empty stream is an error.
    """
    pcm = np.asarray(pcm)
    if pcm.ndim != 1 or pcm.size == 0:
        raise EmptyStreamError("empty stream")
    if pcm.dtype != np.int16:
        raise AudioFormatError(f"expected int16 samples, got {pcm.dtype}")
    step = cfg.chunk_samples
    for seq, start in enumerate(range(0, pcm.size, step)):
        yield AudioFragment(
            seq=seq,
            samples=pcm[start : start + step],
            sample_rate=cfg.sample_rate,
            duration_ms=cfg.chunk_ms,
        )


def compute_dbfs(fragment: AudioFragment) -> float:
    """RMS loudness of one fragment in dBFS; -inf for all-zero samples."""
    x = fragment.samples.astype(np.float64)
    rms = math.sqrt(float(np.mean(x * x)))
    if rms == 0.0:
        return float("-inf")
    return 20.0 * math.log10(rms / FULL_SCALE)


def read_wav(path: Union[str, Path]) -> tuple[np.ndarray, int]:
    """Load a RIFF WAV file as (int16 samples, sample_rate).

    Only PCM 16-bit mono is accepted; anything else raises AudioFormatError.
    """
    try:
        with wave.open(str(path), "rb") as wf:
            if wf.getcomptype() != "NONE":
                raise AudioFormatError(f"{path}: compressed WAV not supported")
            if wf.getsampwidth() != 2:
                raise AudioFormatError(
                    f"{path}: expected 16-bit samples, got {8 * wf.getsampwidth()}-bit"
                )
            if wf.getnchannels() != 1:
                raise AudioFormatError(
                    f"{path}: expected mono, got {wf.getnchannels()} channels"
                )
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise AudioFormatError(f"{path}: not a valid WAV file ({exc})") from exc
    return np.frombuffer(raw, dtype=np.int16), rate


def write_wav(path: Union[str, Path], samples: np.ndarray, sample_rate: int) -> None:
    """Write int16 mono samples as a PCM WAV file."""
    samples = np.asarray(samples, dtype=np.int16)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(samples.tobytes())


def write_transcripts(out: IO[str], transcripts: Iterable[Transcript]) -> int:
    """Write transcripts as newline-delimited JSON records; returns the count."""
    n = 0
    for t in transcripts:
        out.write(t.to_json() + "\n")
        n += 1
    return n


def read_transcripts(src: IO[str]) -> list[Transcript]:
    """Parse newline-delimited transcript records; blank lines are skipped."""
    out = []
    for line in src:
        line = line.strip()
        if line:
            out.append(Transcript.from_json(line))
    return out
