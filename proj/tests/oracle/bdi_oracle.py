#!/usr/bin/env python3
"""Independent BDI reference: writes golden vectors `<hex> <encoding> <size>`.

Usage: bdi_oracle.py OUT [--count N] [--seed S]
"""
import argparse
import random

# name, base bytes, delta bytes; table order breaks size ties
UNITS = [("B8D1", 8, 1), ("B8D2", 8, 2), ("B8D4", 8, 4),
         ("B4D1", 4, 1), ("B4D2", 4, 2), ("B2D1", 2, 1)]


def elements(line, k):
    return [int.from_bytes(line[i:i + k], "little") for i in range(0, len(line), k)]


def signed(v, k):
    bits = 8 * k
    return v - (1 << bits) if v >> (bits - 1) else v


def fits(v, k, d):
    lo, hi = -(1 << (8 * d - 1)), (1 << (8 * d - 1)) - 1
    return lo <= signed(v, k) <= hi


def unit_ok(line, k, d):
    base = None
    mod = 1 << (8 * k)
    for v in elements(line, k):
        if fits(v, k, d):
            continue
        if base is None:
            base = v
        if not fits((v - base) % mod, k, d):
            return False
    return True


def classify(line):
    n = len(line)
    if not any(line):
        return "Zeros", 1
    if len(set(elements(line, 8))) == 1:
        return "RepValues", 8
    best = None
    for name, k, d in UNITS:
        if unit_ok(line, k, d):
            size = k + (n // k) * d
            if best is None or size < best[1]:
                best = (name, size)
    return best or ("NoCompr", n)


def structured(rng, n):
    kind = rng.randrange(7)
    k = rng.choice([2, 4, 8])
    d = rng.choice([1, 2, 4])
    if kind == 0:
        return bytes(n)
    if kind == 1:
        v = rng.getrandbits(64).to_bytes(8, "little")
        return v * (n // 8)
    out = bytearray()
    base = rng.getrandbits(8 * k)
    for _ in range(n // k):
        if kind == 2:  # narrow values
            v = rng.randrange(1 << (8 * min(d, k) - 1))
        elif kind == 3:  # base plus small deltas
            v = (base + rng.randrange(-(1 << (8 * d - 1)), 1 << (8 * d - 1))) % (1 << (8 * k))
        elif kind == 4:  # mix of zero-base and base-relative values
            v = rng.randrange(1 << 7) if rng.random() < 0.5 else (base + rng.randrange(256)) % (1 << (8 * k))
        elif kind == 5:  # sign-boundary values
            v = rng.choice([0x7F, 0x80, 0xFF, 0x7FFF, 0x8000, (1 << (8 * k)) - 1, (1 << (8 * k)) - 128])
            v %= 1 << (8 * k)
        else:
            v = rng.getrandbits(8 * k)
        out += v.to_bytes(k, "little")
    return bytes(out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--count", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=7)
    a = ap.parse_args()
    rng = random.Random(a.seed)
    with open(a.out, "w") as f:
        f.write("# line-hex encoding size\n")
        for i in range(a.count):
            n = 32 if i % 2 else 64
            line = structured(rng, n)
            name, size = classify(line)
            f.write(f"{line.hex()} {name} {size}\n")


if __name__ == "__main__":
    main()
