"""Timestamp-parser walkthrough: what free-form model answers turn into.

Model answers arrive as prose.  The parser applies a fixed priority -- mm:ss
first, then range phrasings (lower bound), then unit-suffixed numbers, then
the first standalone number -- and reports absence rather than guessing for
refusals or negative values.
"""

from tbb.predictor import parse_class_inventory, parse_timestamp

ANSWERS = [
    "7.5",
    "The event starts at 12.5 seconds.",
    "around 01:23 into the clip",
    "between 4 and 6 seconds",
    "somewhere in the 8-10 s range",
    "the 2nd second, i.e. 1.0 s",
    "I cannot determine that.",
    "-5.000",
]


def main():
    print("onset answers -> parsed seconds")
    print("-" * 46)
    for text in ANSWERS:
        parsed = parse_timestamp(text)
        shown = "absent" if parsed is None else f"{parsed:g} s"
        print(f"{text!r:<42} -> {shown}")

    labels = {1: "Male Speech", 3: "Clap", 8: "Bell"}
    reply = "I hear clapping, a ringing bell and someone talking."
    found = parse_class_inventory(reply, labels)
    print("\ninventory answer -> detected classes")
    print("-" * 46)
    print(f"{reply!r}")
    print(f" -> {sorted(labels[c] for c in found)}")


if __name__ == "__main__":
    main()
