#!/usr/bin/env python3
"""Regenerates the bundled scenario files under scenarios/."""

import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "scenarios"

SCHEMES = {
    "quiks": {"type": "quiks"},
    "no_buffer": {"type": "no_buffer"},
    "kaas-40": {"type": "kaas", "rate_rps": 40},
    "kaas-120": {"type": "kaas", "rate_rps": 120},
    "st_vqkp": {"type": "st_vqkp"},
    "dt_vqkp": {"type": "dt_vqkp"},
}

PROCESSES = {
    "poisson": "poisson",
    "ppbp": {"type": "ppbp", "event_rate": 1.0, "shape": 2.0},
}


def write(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


def single_app(process, delay_ms, scheme, demand=15625, horizon=40000, name=None):
    return {
        "name": name or f"single_{process}_{delay_ms}ms_{scheme}",
        "topology": {"builtin": "nsfnet", "link_delay_s": delay_ms / 1000},
        "apps": [{"source": 0, "destination": 1, "start_s": 0, "rate_rps": 50,
                  "process": PROCESSES[process], "demand_blocks": demand}],
        "scheme": SCHEMES[scheme],
        "slot_seconds": 0.05,
        "horizon_slots": horizon,
        "seed": 1,
    }


def multi_app(scheme):
    return {
        "name": f"multi_app_{scheme}",
        "topology": {"builtin": "nsfnet", "link_delay_s": 0.2},
        "apps": [
            {"source": 3, "destination": 7, "start_s": start, "rate_rps": 75,
             "process": "poisson", "demand_blocks": demand}
            for start, demand in ((0, 12500), (50, 10000), (100, 7500))
        ],
        "scheme": SCHEMES[scheme],
        "slot_seconds": 0.05,
        "horizon_slots": 20000,
        "seed": 1,
    }


def key_limited(scheme, count, prefix):
    return {
        "name": f"{prefix}_{count}apps_{scheme}",
        "topology": {"builtin": "nsfnet", "link_delay_s": 0.2},
        "random_apps": {"count": count, "start_max_s": 150, "rate_rps": 10,
                        "demand_blocks": 1562, "process": "poisson"},
        "scheme": SCHEMES[scheme],
        "slot_seconds": 0.05,
        "horizon_slots": 12000,
        "seed": 1,
        "key_budget": {"mode": "limited", "headroom": 1.1},
    }


def main():
    for process in PROCESSES:
        for delay in range(100, 800, 100):
            for scheme in SCHEMES:
                write(ROOT / "single_app" / f"single_{process}_{delay}ms_{scheme}.json",
                      single_app(process, delay, scheme))

    long_run = single_app("poisson", 400, "quiks", demand=40000,
                          name="single_app_poisson_400ms")
    long_run["acceptance"] = {"min_instant_ratio_post_warmup": 0.95}
    write(ROOT / "single_app_poisson_400ms.json", long_run)

    for scheme in SCHEMES:
        doc = multi_app(scheme)
        if scheme == "quiks":
            doc["acceptance"] = {"min_instant_ratio_post_warmup": 0.97}
        write(ROOT / "multi_app" / f"multi_app_{scheme}.json", doc)

    for scheme in SCHEMES:
        doc = key_limited(scheme, 20, "key_limited")
        if scheme == "quiks":
            doc["acceptance"] = {"min_completion_ratio": 1.0, "min_instant_ratio": 0.97}
        write(ROOT / "key_limited" / f"key_limited_20apps_{scheme}.json", doc)
        for count in (20, 40, 60, 80):
            write(ROOT / "key_limited_sweep" / f"key_limited_{count}apps_{scheme}.json",
                  key_limited(scheme, count, "key_limited_sweep"))


if __name__ == "__main__":
    main()
