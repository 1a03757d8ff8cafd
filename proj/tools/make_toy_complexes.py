#!/usr/bin/env python3
"""Writes small synthetic pocket/ligand pairs (NAME.pdb + NAME.lig).

usage: make_toy_complexes.py OUT_DIR [--with-metal] [--seed 11]

Coordinates are synthetic: ligand atoms follow a jittered walk with 1.5 A
steps and the pocket is a few residues placed around the ligand.
"""
import argparse
import math
import os
import random
import re

LIGANDS = [
    "CCN(C)C=O",
    "NCCO",
    "c1ccncc1",
    "CC(=O)O",
    "NC(=O)CN",
    "OCC(O)CO",
    "CCCCl",
    "Cc1ccsc1",
]
EXTRA = "CCOC(=O)C"
METAL = "CC(=O)O[Zn]"

RESIDUES = ["GLY", "ALA", "SER", "ASP", "LYS", "THR", "ASN", "GLU"]
SIDE = {"GLY": [], "ALA": [("CB", "C")], "SER": [("CB", "C"), ("OG", "O")],
        "ASP": [("CB", "C"), ("CG", "C")], "LYS": [("CB", "C"), ("NZ", "N")],
        "THR": [("CB", "C"), ("OG1", "O")], "ASN": [("CB", "C"), ("ND2", "N")],
        "GLU": [("CB", "C"), ("OE1", "O")]}

ATOM_RE = re.compile(r"\[[^\]]+\]|Br|Cl|[BCNOPSFI]|[bcnops]")


def atom_count(smiles):
    return len(ATOM_RE.findall(smiles))


def unit(rng):
    while True:
        v = [rng.gauss(0, 1) for _ in range(3)]
        n = math.sqrt(sum(x * x for x in v))
        if n > 1e-6:
            return [x / n for x in v]


def ligand_coords(n, rng):
    pts = [[0.0, 0.0, 0.0]]
    d = unit(rng)
    while len(pts) < n:
        j = unit(rng)
        d = [0.7 * a + 0.3 * b for a, b in zip(d, j)]
        norm = math.sqrt(sum(x * x for x in d))
        d = [x / norm for x in d]
        pts.append([p + 1.5 * x for p, x in zip(pts[-1], d)])
    return pts


def pdb_line(serial, name, res, seq, xyz, element):
    padded = name if len(name) == 4 else " " + name.ljust(3)
    return "ATOM  %5d %-4s %3s A%4d    %8.3f%8.3f%8.3f%6.2f%6.2f          %2s" % (
        serial, padded, res, seq, xyz[0], xyz[1], xyz[2], 1.0, 0.0, element.rjust(2))


def write_complex(out_dir, name, smiles, rng):
    n = atom_count(smiles)
    lig = ligand_coords(n, rng)
    cx = [sum(p[k] for p in lig) / n for k in range(3)]
    n_res = rng.randint(2, 3)
    lines = []
    serial = 1
    for r in range(n_res):
        res = rng.choice(RESIDUES)
        base = [c + 5.0 * x for c, x in zip(cx, unit(rng))]
        atoms = [("N", "N"), ("CA", "C"), ("C", "C"), ("O", "O")] + SIDE[res]
        d = unit(rng)
        for k, (aname, el) in enumerate(atoms):
            xyz = [b + 1.4 * k * x + rng.gauss(0, 0.2) for b, x in zip(base, d)]
            lines.append(pdb_line(serial, aname, res, r + 1, xyz, el))
            serial += 1
        # one hydrogen per residue to exercise the filter
        lines.append(pdb_line(serial, "H", res, r + 1, [b + 0.5 for b in base], "H"))
        serial += 1
    lines.append("END")
    with open(os.path.join(out_dir, name + ".pdb"), "w") as f:
        f.write("\n".join(lines) + "\n")
    with open(os.path.join(out_dir, name + ".lig"), "w") as f:
        f.write(smiles + "\n")
        for p in lig:
            f.write("%.3f %.3f %.3f\n" % tuple(p))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--with-metal", action="store_true")
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    ligands = list(LIGANDS)
    if args.with_metal:
        ligands += [EXTRA, METAL]
    for i, smi in enumerate(ligands):
        write_complex(args.out_dir, "cplx%02d" % i, smi, rng)


if __name__ == "__main__":
    main()
