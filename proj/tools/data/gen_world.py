#!/usr/bin/env python3
"""Generate data/world_placement.csv and data/world_latency.csv.

Cities are the most populous ones per continent from geonamescache, with per-country caps.
Round-trip times are synthetic: great-circle distance over an inflated fibre path plus a
fixed access cost and per-pair log-normal noise, scaled so the median delay of a random
degree-6 overlay is 69 ms.
"""
import argparse
import csv
import math
import random
from collections import Counter, defaultdict

import geonamescache

COUNTS = {"EU": 94, "NA": 83, "AS": 37, "SA": 12, "AF": 11, "AU": 9}
CAPS = {"US": 52, "CA": 12, "MX": 5, "DE": 11, "GB": 10, "FR": 9, "RU": 6, "AU": 6, "NZ": 3,
        "CN": 6, "IN": 5, "JP": 4, "BR": 4}
DEFAULT_CAP = {"EU": 5, "NA": 3, "AS": 3, "SA": 2, "AF": 2, "AU": 2}
TARGET_MEDIAN_MS = 69.0


def pick_cities():
    gc = geonamescache.GeonamesCache()
    cont_of = {iso: c["continentcode"] for iso, c in gc.get_countries().items()}
    by_cont = defaultdict(list)
    for c in gc.get_cities().values():
        cc = cont_of.get(c["countrycode"])
        cont = "AU" if cc == "OC" else cc
        if cont in COUNTS and "," not in c["name"]:
            by_cont[cont].append(c)
    out = []
    used = set()
    for cont, want in COUNTS.items():
        per_country = Counter()
        for c in sorted(by_cont[cont], key=lambda c: (-c["population"], c["geonameid"])):
            if len([x for x in out if x[2] == cont]) == want:
                break
            iso = c["countrycode"]
            if per_country[iso] >= CAPS.get(iso, DEFAULT_CAP[cont]):
                continue
            name = c["name"]
            if name in used:
                name = f"{name} ({iso})"
            if name in used:
                continue
            used.add(name)
            per_country[iso] += 1
            out.append((name, iso, cont, c["latitude"], c["longitude"]))
    return out


def km(a, b):
    la1, lo1, la2, lo2 = map(math.radians, (a[3], a[4], b[3], b[4]))
    h = math.sin((la2 - la1) / 2) ** 2 + math.cos(la1) * math.cos(la2) * math.sin((lo2 - lo1) / 2) ** 2
    return 2 * 6371.0 * math.asin(math.sqrt(h))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data")
    ap.add_argument("--seed", type=int, default=246)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    cities = pick_cities()
    assert len(cities) == sum(COUNTS.values()), len(cities)
    n = len(cities)

    # Raw one-way delay in ms: 2 ms access + 1.6x detour at 200 km/ms, times noise.
    raw = {}
    for i in range(n):
        for j in range(i + 1, n):
            base = 2.0 + 1.6 * km(cities[i], cities[j]) / 200.0
            raw[i, j] = base * rng.lognormvariate(0, 0.15)

    # Median over a random degree-6 overlay.
    sample = []
    for _ in range(20):
        edges = set()
        for v in range(n):
            for u in rng.sample([u for u in range(n) if u != v], 6):
                edges.add((min(u, v), max(u, v)))
        sample += [raw[e] for e in edges]
    sample.sort()
    scale = TARGET_MEDIAN_MS / sample[len(sample) // 2]

    with open(f"{args.out}/world_placement.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["miner_id", "city", "continent"])
        for i, c in enumerate(cities):
            w.writerow([i, c[0], c[2]])
    with open(f"{args.out}/world_latency.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["source", "destination", "avg_rtt_ms"])
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                d = raw[min(i, j), max(i, j)] * scale
                # Directional measurements differ slightly; consumers average them.
                rtt = 2 * d * (1 + rng.uniform(-0.02, 0.02))
                w.writerow([cities[i][0], cities[j][0], f"{rtt:.3f}"])
    print(f"{n} cities, scale {scale:.3f}")


if __name__ == "__main__":
    main()
