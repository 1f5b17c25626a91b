#!/usr/bin/env python3
"""Show how transcripts turn into styled captions, one rule at a time.

Run from the repository root:  python demos/02_caption_design.py
"""

from capkit import Transcript, build_caption_specs, bundled_lexicons

lex = bundled_lexicons()

SAMPLES = [
    ("hello there everyone", -25.0, "a greeting gets a rounded bubble"),
    ("I am so happy", -15.0, "loud positive word: large, light orange, smiling emoji"),
    ("sadly we lost the game", -45.0, "quiet negative words: small, dark blue, sad emoji"),
    ("that is shocking", -18.0, "excitement: shivering motion from the word list"),
    ("shocked", -30.0, "one word can stack a spiky bubble AND shivering"),
    ("we baked a cake for the dog", -30.0, "concrete objects get icon ornaments"),
    ("nevertheless the outcome was severe", -30.0, "formal words render in a serif face"),
    ("the and of it", -30.0, "pure function words produce no captions at all"),
]


def fmt(value):
    return "-" if value is None else getattr(value, "value", value)


print(f"{'word':<14} {'size':<7} {'color':<18} {'face':<7} "
      f"{'emoji':<12} {'ornament':<9} {'bubble':<8} motion")
print("-" * 88)
for text, dbfs, note in SAMPLES:
    specs = build_caption_specs(Transcript(seq=0, text=text, dbfs=dbfs), "demo", lex)
    print(f"# {text!r} at {dbfs} dBFS  ({note})")
    if not specs:
        print("  (no captions)")
    for s in specs:
        color = "({:.2f},{:.2f},{:.2f})".format(*s.color)
        print(f"  {s.word:<12} {s.size.value:<7} {color:<18} {s.typeface.value:<7} "
              f"{fmt(s.emoji):<12} {fmt(s.ornament):<9} {fmt(s.bubble):<8} {fmt(s.motion)}")
    print()

print("Every caption spec serializes to one JSON line for the wire:")
spec = build_caption_specs(Transcript(seq=7, text="wow", dbfs=-12.0), "demo", lex)[0]
print(" ", spec.to_json())
