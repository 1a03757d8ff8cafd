#!/usr/bin/env python3
"""Writes a deterministic corpus of drug-like SMILES by fragment assembly.

usage: make_desk_corpus.py [--n 1000] [--seed 7] OUT
"""
import argparse
import random

CHAIN = ["C", "C", "C", "CC", "N", "O", "S", "C(=O)", "C(C)", "C=C", "C(F)(F)", "N(C)", "[NH2+]", "C(=O)N"]
TERMINAL = ["F", "Cl", "Br", "I", "C#N", "O", "N", "C", "[O-]", "C(=O)O", "[N+](=O)[O-]", "[NH3+]", "OC"]
RINGS = [
    "c{a}ccccc{a}",
    "c{a}ccncc{a}",
    "c{a}ccsc{a}",
    "c{a}cc[nH]c{a}",
    "c{a}cnccn{a}",
    "C{a}CCCC{a}",
    "C{a}CCNCC{a}",
    "C{a}CC{a}",
    "C{a}CCOC{a}",
    "c{a}ccc{b}ccccc{b}c{a}",
]


def ring_label(n):
    return str(n) if n < 10 else "%" + str(n)


class Builder:
    def __init__(self, rng):
        self.rng = rng
        # occasionally start at 10 so two-digit closures show up
        self.next_ring = 10 if rng.random() < 0.15 else 1

    def ring(self):
        tmpl = self.rng.choice(RINGS)
        a = ring_label(self.next_ring)
        b = ring_label(self.next_ring + 1)
        self.next_ring += 2
        return tmpl.format(a=a, b=b)

    def chain(self, depth, length):
        parts = []
        for i in range(length):
            r = self.rng.random()
            if r < 0.3 and depth < 2:
                piece = self.ring()
            else:
                piece = self.rng.choice(CHAIN)
            if depth < 2 and self.rng.random() < 0.2 and piece[-1] in "CN" and not piece.endswith("]"):
                piece += "(" + self.chain(depth + 1, self.rng.randint(1, 3)) + ")"
            parts.append(piece)
        if self.rng.random() < 0.5:
            parts.append(self.rng.choice(TERMINAL))
        return "".join(parts)


def molecule(rng):
    b = Builder(rng)
    return b.chain(0, rng.randint(2, 7))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    seen = []
    have = set()
    while len(seen) < args.n:
        s = molecule(rng)
        if s in have:
            continue
        have.add(s)
        seen.append(s)
    with open(args.out, "w") as f:
        for s in seen:
            f.write(s + "\n")


if __name__ == "__main__":
    main()
