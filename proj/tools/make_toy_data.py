#!/usr/bin/env python3
"""Regenerates the bundled toy corpora under data/toy/.

Text: two groups (cs, q-fin) over a ~50 word vocabulary, where "intelligence"
co-occurs with different words in each group. Baskets: 12 monthly groups with
seasonal items.
"""

import csv
import pathlib
import random

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data" / "toy"

FUNCTION = ["the", "of", "and", "a", "in", "we", "this", "is", "to", "for"]
SHARED = ["model", "data", "results", "method", "paper", "study", "analysis", "new"]
TOPICS = {
    "cs": [
        ["intelligence", "artificial", "ai", "machine", "learning", "agents", "neural", "systems"],
        ["algorithms", "graph", "complexity", "networks", "computing", "software"],
    ],
    "q-fin": [
        ["intelligence", "abilities", "consciousness", "human", "behavior", "cognitive", "traders", "investors"],
        ["market", "financial", "risk", "portfolio", "prices", "volatility"],
    ],
}


def make_text(rng: random.Random) -> None:
    for group, topics in TOPICS.items():
        out = ROOT / "text" / group
        out.mkdir(parents=True, exist_ok=True)
        lines = []
        for _ in range(240):
            topic = rng.choice(topics)
            words = []
            for _ in range(rng.randint(18, 30)):
                r = rng.random()
                if r < 0.35:
                    words.append(rng.choice(FUNCTION))
                elif r < 0.5:
                    words.append(rng.choice(SHARED))
                else:
                    if rng.random() < 0.1:
                        topic = rng.choice(topics)
                    words.append(rng.choice(topic))
            sentence = " ".join(words)
            lines.append(sentence[0].upper() + sentence[1:] + ".")
        (out / "abstracts.txt").write_text("\n".join(lines) + "\n")


STAPLES = ["milk", "bread", "eggs", "butter", "bananas", "apples", "cheese", "yogurt",
           "coffee", "rice", "pasta", "tomatoes", "onions", "chicken", "cereal"]
SEASONAL = {
    "winter": ["soup", "cocoa", "oranges", "tea", "stew_mix"],
    "spring": ["asparagus", "strawberries", "lettuce", "peas", "eggs_dye"],
    "summer": ["icecream", "watermelon", "charcoal", "lemonade", "corn"],
    "autumn": ["pumpkin", "cider", "squash", "cranberries", "turkey"],
}
SEASON_OF = {1: "winter", 2: "winter", 3: "spring", 4: "spring", 5: "spring", 6: "summer",
             7: "summer", 8: "summer", 9: "autumn", 10: "autumn", 11: "autumn", 12: "winter"}


def make_baskets(rng: random.Random) -> None:
    ROOT.mkdir(parents=True, exist_ok=True)
    with open(ROOT / "baskets.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["trip_id", "group", "item", "quantity"])
        trip = 0
        for month in range(1, 13):
            season = SEASONAL[SEASON_OF[month]]
            for _ in range(60):
                trip += 1
                n_staples = rng.randint(2, 6)
                n_seasonal = rng.randint(0, 3)
                items = rng.sample(STAPLES, n_staples) + rng.sample(season, n_seasonal)
                for item in items:
                    w.writerow([f"t{trip:05d}", f"m{month:02d}", item, rng.choice([1, 1, 1, 2, 3])])


if __name__ == "__main__":
    make_text(random.Random(7))
    make_baskets(random.Random(11))
