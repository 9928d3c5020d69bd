#!/usr/bin/env python3
"""Regenerate the bundled demo inputs under data/demo/.

The corpus mixes domains with very different n-gram structure so that the
weak (unigram) and strong (trigram) reference models disagree on some
samples and agree on others, which spreads samples across all four
quadrants. Output is deterministic for a fixed --seed.
"""

import argparse
import json
import math
import random
from pathlib import Path

SUBJECTS = ["the farmer", "a student", "the old engineer", "my neighbour", "the committee",
            "a young painter", "the river guide", "our teacher"]
VERBS = ["repaired", "described", "carried", "painted", "measured", "planted", "studied", "sold"]
OBJECTS = ["the wooden bridge", "a small garden", "the north field", "an empty boat",
           "the stone wall", "a broken clock", "the village well", "a tall ladder"]
PLACES = ["near the market", "before the storm", "after dinner", "along the coast",
          "in the valley", "under the bridge", "during the festival", "at dawn"]

CODE_LINES = [
    "for i in range ( n ) :",
    "    total = total + values [ i ]",
    "if total > limit :",
    "    return total",
    "def add ( a , b ) :",
    "    return a + b",
    "while queue :",
    "    item = queue . pop ( )",
    "result = [ x * x for x in items ]",
    "print ( result )",
]

SYLLABLES = ["ka", "lo", "mi", "ru", "te", "sa", "no", "vi", "ze", "po", "qu", "fa", "di", "gu"]


def template_doc(rng):
    sentences = []
    for _ in range(rng.randint(3, 8)):
        sentences.append(f"{rng.choice(SUBJECTS)} {rng.choice(VERBS)} {rng.choice(OBJECTS)} "
                         f"{rng.choice(PLACES)} .")
    return " ".join(sentences)


def code_doc(rng):
    start = rng.randrange(len(CODE_LINES))
    lines = [CODE_LINES[(start + k) % len(CODE_LINES)] for k in range(rng.randint(4, 12))]
    return " ".join(lines)


def random_word(rng):
    return "".join(rng.choice(SYLLABLES) for _ in range(rng.randint(1, 3)))


def salad_doc(rng):
    return " ".join(random_word(rng) for _ in range(rng.randint(20, 60)))


def list_doc(rng):
    # Highly repetitive: few distinct tokens, strong local structure.
    item = rng.choice(["apples", "nails", "tickets", "bottles", "books"])
    count = rng.randint(5, 15)
    return " ".join(f"item {k} : {item} , quantity {rng.randint(1, 9)} ;" for k in range(count))


def mixed_doc(rng):
    parts = [template_doc(rng), salad_doc(rng)]
    rng.shuffle(parts)
    return " ".join(parts)


GENERATORS = {
    "stories": template_doc,
    "code": code_doc,
    "noise": salad_doc,
    "inventory": list_doc,
    "mixed": mixed_doc,
}


def write_corpus(path, rng, count):
    domains = list(GENERATORS)
    with path.open("w", encoding="utf-8") as out:
        for i in range(count):
            domain = domains[i % len(domains)]
            text = GENERATORS[domain](rng)
            record = {"domain": domain, "id": f"doc-{i:03d}", "text": text}
            out.write(json.dumps(record, sort_keys=True) + "\n")


def write_loss_curves(directory, rng, steps):
    smooth = [2.0 + 6.0 * math.exp(-k / (steps / 6.0)) for k in range(steps)]
    noisy = [v + 0.08 * rng.gauss(0.0, 1.0) for v in smooth]
    with (directory / "loss_smooth.csv").open("w", encoding="utf-8") as out:
        out.write("step,loss\n")
        for k, v in enumerate(smooth):
            out.write(f"{k * 10},{v:.9f}\n")
    with (directory / "loss_noisy.jsonl").open("w", encoding="utf-8") as out:
        for k, v in enumerate(noisy):
            out.write(json.dumps({"loss": round(v, 9), "step": k * 10}) + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "demo")
    parser.add_argument("--seed", type=int, default=20241015)
    parser.add_argument("--docs", type=int, default=100)
    parser.add_argument("--steps", type=int, default=512)
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)
    write_corpus(args.out / "corpus.jsonl", rng, args.docs)
    write_loss_curves(args.out, rng, args.steps)


if __name__ == "__main__":
    main()
