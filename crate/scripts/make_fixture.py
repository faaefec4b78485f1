#!/usr/bin/env python3
"""Writes the bundled 1000-row CTR sample and its manifest.

The manifest is computed here from the rows as written, not by the Rust
loader, so the loader test compares two independent readings.
"""
import json
import random
import sys
from pathlib import Path

ROWS = 1000
SEED = 7
USERS, CATEGORIES, MAX_LEN = 50, 12, 6


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def main(out: Path) -> None:
    rng = random.Random(SEED)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["timestamp,user_id,ad_id,repeat_count,last_repeat_gap,label_click,user,ad_category,price,behaviors"]
    sums = {"user": 0.0, "ad_category": 0.0, "price": 0.0, "behaviors": 0.0}
    clicks = 0
    for i in range(ROWS):
        ts = 1_700_000_000 + 37 * i
        user = rng.randrange(USERS)
        cat = rng.randrange(CATEGORIES)
        price = round(rng.uniform(0.5, 20.0), 2)
        n = rng.randrange(MAX_LEN + 1)
        seq = [f"{rng.randrange(CATEGORIES)}@{ts - 60 * (k + 1)}" for k in range(n)]
        click = 1 if rng.random() < 0.1 + 0.3 * (cat in [int(s.split('@')[0]) for s in seq]) else 0
        if rng.random() < 0.3:
            rc, gap = str(rng.randrange(1, 5)), str(float(rng.randrange(30, 7200)))
        else:
            rc, gap = "", ""
        ad = 1000 + cat * 10 + rng.randrange(10)
        lines.append(f"{ts},{user},{ad},{rc},{gap},{click},{user},{cat},{price!r},{';'.join(seq)}")
        sums["user"] += user
        sums["ad_category"] += cat
        sums["price"] += price
        sums["behaviors"] += n
        clicks += click
    data = ("\n".join(lines) + "\n").encode()
    (out / "data.csv").write_bytes(data)
    (out / "schema.toml").write_text(
        'tasks = ["click"]\n\n'
        f'[[field]]\nname = "user"\nkind = "categorical"\ncardinality = {USERS}\n\n'
        f'[[field]]\nname = "ad_category"\nkind = "categorical"\ncardinality = {CATEGORIES}\npart = 1\n\n'
        '[[field]]\nname = "price"\nkind = "numeric"\npart = 1\n\n'
        f'[[field]]\nname = "behaviors"\nkind = "sequence"\ncardinality = {CATEGORIES}\n'
        f'max_len = {MAX_LEN}\ntarget = "ad_category"\n'
    )
    manifest = {
        "generator": "scripts/make_fixture.py",
        "seed": SEED,
        "rows": ROWS,
        "field_means": {k: v / ROWS for k, v in sorted(sums.items())},
        "label_rates": {"click": clicks / ROWS},
        "checksum": f"{fnv1a64(data):016x}",
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main(Path(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/fixtures/sample_ctr"))
