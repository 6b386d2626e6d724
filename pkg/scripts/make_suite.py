"""Regenerate the bundled mini-suite under src/intent_search/suite/.

Instances are drawn from a fixed seed so the output is reproducible:

    python scripts/make_suite.py
"""

from __future__ import annotations

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "intent_search" / "suite"

GRIPPER = """(define (domain gripper-typed)
  (:requirements :strips :typing :equality)
  (:types room ball gripper)
  (:predicates (at-robby ?r - room) (at ?b - ball ?r - room)
               (free ?g - gripper) (carry ?b - ball ?g - gripper))
  (:action move
    :parameters (?from ?to - room)
    :precondition (and (at-robby ?from) (not (= ?from ?to)))
    :effect (and (at-robby ?to) (not (at-robby ?from))))
  (:action pick
    :parameters (?obj - ball ?room - room ?gripper - gripper)
    :precondition (and (at ?obj ?room) (at-robby ?room) (free ?gripper))
    :effect (and (carry ?obj ?gripper) (not (at ?obj ?room)) (not (free ?gripper))))
  (:action drop
    :parameters (?obj - ball ?room - room ?gripper - gripper)
    :precondition (and (carry ?obj ?gripper) (at-robby ?room))
    :effect (and (at ?obj ?room) (free ?gripper) (not (carry ?obj ?gripper)))))
"""

BLOCKS = """(define (domain blocks)
  (:requirements :strips :typing :equality)
  (:types block)
  (:predicates (on ?x - block ?y - block) (ontable ?x - block) (clear ?x - block)
               (handempty) (holding ?x - block))
  (:action pick-up
    :parameters (?x - block)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (not (ontable ?x)) (not (clear ?x)) (not (handempty)) (holding ?x)))
  (:action put-down
    :parameters (?x - block)
    :precondition (holding ?x)
    :effect (and (not (holding ?x)) (clear ?x) (handempty) (ontable ?x)))
  (:action stack
    :parameters (?x - block ?y - block)
    :precondition (and (holding ?x) (clear ?y) (not (= ?x ?y)))
    :effect (and (not (holding ?x)) (not (clear ?y)) (clear ?x) (handempty) (on ?x ?y)))
  (:action unstack
    :parameters (?x - block ?y - block)
    :precondition (and (on ?x ?y) (clear ?x) (handempty) (not (= ?x ?y)))
    :effect (and (holding ?x) (clear ?y) (not (clear ?x)) (not (handempty)) (not (on ?x ?y)))))
"""

LOGISTICS = """(define (domain logistics-typed)
  (:requirements :strips :typing)
  (:types truck airplane - vehicle
          package vehicle - physobj
          airport location - place
          city place physobj - object)
  (:predicates (in-city ?loc - place ?city - city)
               (at ?obj - physobj ?loc - place)
               (in ?pkg - package ?veh - vehicle))
  (:action load-truck
    :parameters (?pkg - package ?truck - truck ?loc - place)
    :precondition (and (at ?truck ?loc) (at ?pkg ?loc))
    :effect (and (not (at ?pkg ?loc)) (in ?pkg ?truck)))
  (:action load-airplane
    :parameters (?pkg - package ?airplane - airplane ?loc - place)
    :precondition (and (at ?pkg ?loc) (at ?airplane ?loc))
    :effect (and (not (at ?pkg ?loc)) (in ?pkg ?airplane)))
  (:action unload-truck
    :parameters (?pkg - package ?truck - truck ?loc - place)
    :precondition (and (at ?truck ?loc) (in ?pkg ?truck))
    :effect (and (not (in ?pkg ?truck)) (at ?pkg ?loc)))
  (:action unload-airplane
    :parameters (?pkg - package ?airplane - airplane ?loc - place)
    :precondition (and (in ?pkg ?airplane) (at ?airplane ?loc))
    :effect (and (not (in ?pkg ?airplane)) (at ?pkg ?loc)))
  (:action drive-truck
    :parameters (?truck - truck ?loc-from - place ?loc-to - place ?city - city)
    :precondition (and (at ?truck ?loc-from) (in-city ?loc-from ?city) (in-city ?loc-to ?city))
    :effect (and (not (at ?truck ?loc-from)) (at ?truck ?loc-to)))
  (:action fly-airplane
    :parameters (?airplane - airplane ?loc-from - airport ?loc-to - airport)
    :precondition (at ?airplane ?loc-from)
    :effect (and (not (at ?airplane ?loc-from)) (at ?airplane ?loc-to))))
"""

GRID = """(define (domain grid-visit)
  (:requirements :strips :typing)
  (:types cell)
  (:predicates (at ?c - cell) (visited ?c - cell) (adj ?a - cell ?b - cell))
  (:action move
    :parameters (?from - cell ?to - cell)
    :precondition (and (at ?from) (adj ?from ?to))
    :effect (and (at ?to) (not (at ?from)) (visited ?to))))
"""


def problem(name, domain, objects, init, goal):
    objs = "\n    ".join(f"{' '.join(names)} - {ty}" for ty, names in objects if names)
    init_s = "\n    ".join(init)
    goal_s = "\n    ".join(goal)
    return (f"(define (problem {name})\n  (:domain {domain})\n  (:objects\n    {objs})\n"
            f"  (:init\n    {init_s})\n  (:goal (and\n    {goal_s})))\n")


def gripper(n):
    balls = [f"ball{i}" for i in range(1, n + 1)]
    init = ["(at-robby rooma)", "(free left)", "(free right)"] + [f"(at {b} rooma)" for b in balls]
    goal = [f"(at {b} roomb)" for b in balls]
    return problem(f"gripper-{n}", "gripper-typed",
                   [("room", ["rooma", "roomb"]), ("ball", balls), ("gripper", ["left", "right"])], init, goal)


def random_towers(rng, blocks):
    order = blocks[:]
    rng.shuffle(order)
    towers, i = [], 0
    while i < len(order):
        k = rng.randint(1, len(order) - i)
        towers.append(order[i:i + k])
        i += k
    return towers


def tower_atoms(towers):
    atoms = []
    for tw in towers:
        atoms.append(f"(ontable {tw[0]})")
        for below, above in zip(tw, tw[1:]):
            atoms.append(f"(on {above} {below})")
        atoms.append(f"(clear {tw[-1]})")
    return atoms


def blocks(rng, n, idx):
    names = [f"b{i}" for i in range(1, n + 1)]
    init = tower_atoms(random_towers(rng, names)) + ["(handempty)"]
    goal = [a for a in tower_atoms(random_towers(rng, names)) if a.startswith("(on ")]
    if not goal:
        goal = [f"(on {names[1]} {names[0]})"]
    return problem(f"blocks-{n}-{idx}", "blocks", [("block", names)], init, goal)


def logistics(rng, cities, locs, packages, idx):
    objs = {"city": [], "location": [], "airport": [], "truck": [], "airplane": ["plane1"], "package": []}
    init, places = [], []
    for c in range(1, cities + 1):
        city = f"city{c}"
        objs["city"].append(city)
        ap = f"apt{c}"
        objs["airport"].append(ap)
        init.append(f"(in-city {ap} {city})")
        city_places = [ap]
        for l in range(1, locs + 1):
            loc = f"loc{c}-{l}"
            objs["location"].append(loc)
            init.append(f"(in-city {loc} {city})")
            city_places.append(loc)
        truck = f"truck{c}"
        objs["truck"].append(truck)
        init.append(f"(at {truck} {rng.choice(city_places)})")
        places.extend(city_places)
    init.append(f"(at plane1 {rng.choice(objs['airport'])})")
    goal = []
    for p in range(1, packages + 1):
        pkg = f"pkg{p}"
        objs["package"].append(pkg)
        src = rng.choice(places)
        dst = rng.choice([x for x in places if x != src])
        init.append(f"(at {pkg} {src})")
        goal.append(f"(at {pkg} {dst})")
    order = ["city", "airport", "location", "truck", "airplane", "package"]
    return problem(f"logistics-{cities}-{locs}-{packages}-{idx}", "logistics-typed",
                   [(ty, objs[ty]) for ty in order], init, goal)


def grid(rng, w, h, targets, idx):
    cells = {(x, y) for x in range(w) for y in range(h)}
    blocked = set(rng.sample(sorted(cells - {(0, 0)}), k=(w * h) // 8))
    # keep the free cells connected
    free = cells - blocked
    seen, stack = {(0, 0)}, [(0, 0)]
    while stack:
        x, y = stack.pop()
        for nb in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if nb in free and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    free = seen
    name = lambda c: f"c{c[0]}-{c[1]}"
    init = ["(at c0-0)", "(visited c0-0)"]
    for (x, y) in sorted(free):
        for nb in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if nb in free:
                init.append(f"(adj {name((x, y))} {name(nb)})")
    goal_cells = rng.sample(sorted(free - {(0, 0)}), k=min(targets, len(free) - 1))
    goal = [f"(visited {name(c)})" for c in sorted(goal_cells)]
    return problem(f"grid-{w}x{h}-{idx}", "grid-visit", [("cell", [name(c) for c in sorted(free)])], init, goal)


def main() -> None:
    rng = random.Random(20240611)
    manifest = []

    def emit(domain, dom_text, probs):
        d = OUT / domain
        d.mkdir(parents=True, exist_ok=True)
        (d / "domain.pddl").write_text(dom_text)
        for i, text in enumerate(probs, 1):
            fname = f"p{i:02d}.pddl"
            (d / fname).write_text(text)
            manifest.append({"domain": domain, "problem": fname,
                             "domain_file": f"{domain}/domain.pddl", "problem_file": f"{domain}/{fname}"})

    emit("gripper", GRIPPER, [gripper(n) for n in (2, 3, 4, 5, 6, 8)])
    emit("blocks", BLOCKS, [blocks(rng, n, i) for i, n in enumerate((4, 5, 5, 6, 6, 7, 7, 8), 1)])
    emit("logistics", LOGISTICS, [logistics(rng, c, l, p, i) for i, (c, l, p) in
                                  enumerate(((2, 1, 2), (2, 1, 3), (2, 2, 3), (3, 1, 3), (2, 2, 4), (3, 1, 4)), 1)])
    emit("grid", GRID, [grid(rng, w, h, k, i) for i, (w, h, k) in
                        enumerate(((3, 3, 3), (4, 4, 4), (4, 4, 6), (5, 5, 5), (5, 5, 8), (6, 6, 8)), 1)])
    (OUT / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    print(f"wrote {len(manifest)} instances to {OUT}")


if __name__ == "__main__":
    main()
