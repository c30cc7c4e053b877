"""Regenerate the JSON fixtures shipped in src/radiality/data/."""

import random
from pathlib import Path

from radiality.network import Bus, Line, Network, save_network

DATA = Path(__file__).resolve().parents[1] / "src" / "radiality" / "data"

# Baran & Wu 33-bus feeder, 12.66 kV; impedances in ohm, loads in kW / kvar.
CASE33_LINES = [
    (1, 2, 0.0922, 0.0470), (2, 3, 0.4930, 0.2511), (3, 4, 0.3660, 0.1864),
    (4, 5, 0.3811, 0.1941), (5, 6, 0.8190, 0.7070), (6, 7, 0.1872, 0.6188),
    (7, 8, 0.7114, 0.2351), (8, 9, 1.0300, 0.7400), (9, 10, 1.0440, 0.7400),
    (10, 11, 0.1966, 0.0650), (11, 12, 0.3744, 0.1238), (12, 13, 1.4680, 1.1550),
    (13, 14, 0.5416, 0.7129), (14, 15, 0.5910, 0.5260), (15, 16, 0.7463, 0.5450),
    (16, 17, 1.2890, 1.7210), (17, 18, 0.7320, 0.5740), (2, 19, 0.1640, 0.1565),
    (19, 20, 1.5042, 1.3554), (20, 21, 0.4095, 0.4784), (21, 22, 0.7089, 0.9373),
    (3, 23, 0.4512, 0.3083), (23, 24, 0.8980, 0.7091), (24, 25, 0.8960, 0.7011),
    (6, 26, 0.2030, 0.1034), (26, 27, 0.2842, 0.1447), (27, 28, 1.0590, 0.9337),
    (28, 29, 0.8042, 0.7006), (29, 30, 0.5075, 0.2585), (30, 31, 0.9744, 0.9630),
    (31, 32, 0.3105, 0.3619), (32, 33, 0.3410, 0.5302),
    # tie lines
    (8, 21, 2.0, 2.0), (9, 15, 2.0, 2.0), (12, 22, 2.0, 2.0),
    (18, 33, 0.5, 0.5), (25, 29, 0.5, 0.5),
]
CASE33_LOADS = {
    2: (100, 60), 3: (90, 40), 4: (120, 80), 5: (60, 30), 6: (60, 20),
    7: (200, 100), 8: (200, 100), 9: (60, 20), 10: (60, 20), 11: (45, 30),
    12: (60, 35), 13: (60, 35), 14: (120, 80), 15: (60, 10), 16: (60, 20),
    17: (60, 20), 18: (90, 40), 19: (90, 40), 20: (90, 40), 21: (90, 40),
    22: (90, 40), 23: (90, 50), 24: (420, 200), 25: (420, 200), 26: (60, 25),
    27: (60, 25), 28: (60, 20), 29: (120, 70), 30: (200, 600), 31: (150, 70),
    32: (210, 100), 33: (60, 40),
}
S_BASE_KVA = 10_000.0
Z_BASE = 12.66**2 / (S_BASE_KVA / 1000.0)


def case33() -> Network:
    buses = [Bus(1, is_source=True, p_gen_max=1.0, q_gen_max=1.0, weight=0.0)]
    for bid, (p, q) in CASE33_LOADS.items():
        buses.append(Bus(bid, p_load=p / S_BASE_KVA, q_load=q / S_BASE_KVA))
    lines = [
        Line(i, f, t, r=round(r / Z_BASE, 12), x=round(x / Z_BASE, 12))
        for i, (f, t, r, x) in enumerate(CASE33_LINES, start=1)
    ]
    return Network(tuple(buses), tuple(lines), frozenset({1}), name="case33")


def fig1(roots=(1,), faulted=()) -> Network:
    loads = {2: (0.02, 0.01, 1.0), 3: (0.01, 0.005, 10.0), 4: (0.015, 0.01, 1.0), 5: (0.01, 0.005, 1.0), 6: (0.02, 0.01, 100.0)}
    buses = [Bus(1, is_source=True, p_gen_max=1.0, q_gen_max=1.0, weight=0.0)]
    for bid, (p, q, w) in loads.items():
        src = bid == 5
        buses.append(Bus(bid, p_load=p, q_load=q, weight=w, is_source=src,
                         p_gen_max=0.5 if src else 0.0, q_gen_max=0.5 if src else 0.0))
    edges = [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 4)]
    lines = [Line(i, f, t, r=0.01, x=0.01) for i, (f, t) in enumerate(edges, start=1)]
    name = "fig1_fault" if faulted else "fig1"
    return Network(tuple(buses), tuple(lines), frozenset(roots), frozenset(faulted), name=name)


def fig2() -> Network:
    buses = [
        Bus(1, is_source=True, p_gen_max=1.0, q_gen_max=1.0, weight=0.0),
        Bus(2, p_load=0.01, q_load=0.005),
        Bus(3, p_load=0.01, q_load=0.005),
        Bus(4, is_source=True, p_gen_max=1.0, q_gen_max=1.0, weight=0.0),
    ]
    edges = [(1, 2), (1, 3), (2, 4), (3, 4)]
    lines = [Line(i, f, t, r=0.01, x=0.01) for i, (f, t) in enumerate(edges, start=1)]
    return Network(tuple(buses), tuple(lines), frozenset({1, 4}), name="fig2")


def random10(seed: int = 10) -> Network:
    """7 buses, 10 lines, roots {1, 2}, one extra non-root source."""
    rng = random.Random(seed)
    n = 7
    edges = [(i, rng.randint(1, i - 1)) for i in range(2, n + 1)]  # spanning tree
    pairs = {frozenset(e) for e in edges}
    while len(edges) < 10:
        u, v = rng.sample(range(1, n + 1), 2)
        if frozenset((u, v)) not in pairs:
            pairs.add(frozenset((u, v)))
            edges.append((u, v))
    buses = []
    for bid in range(1, n + 1):
        src = bid in (1, 2, 6)
        buses.append(Bus(
            bid,
            p_load=0.0 if bid in (1, 2) else round(rng.uniform(0.005, 0.03), 4),
            q_load=0.0 if bid in (1, 2) else round(rng.uniform(0.001, 0.01), 4),
            weight=rng.choice([1.0, 10.0, 100.0]),
            is_source=src,
            p_gen_max=0.5 if src else 0.0,
            q_gen_max=0.5 if src else 0.0,
        ))
    lines = [Line(i, f, t, r=round(rng.uniform(0.005, 0.03), 4), x=round(rng.uniform(0.005, 0.03), 4))
             for i, (f, t) in enumerate(edges, start=1)]
    return Network(tuple(buses), tuple(lines), frozenset({1, 2}), name="random10")


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    save_network(fig1(), DATA / "fig1.json")
    save_network(fig1(roots=(1, 5), faulted=(2,)), DATA / "fig1_fault.json")
    save_network(fig2(), DATA / "fig2.json")
    save_network(case33(), DATA / "case33.json")
    save_network(random10(), DATA / "random10.json")
