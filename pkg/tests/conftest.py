from pathlib import Path

import pytest

from intent_search.pddl import parse, ground
from intent_search.task import PlanningTask

SUITE = Path(__file__).resolve().parents[1] / "src" / "intent_search" / "suite"

GRIPPER1_DOMAIN = """
(define (domain gripper-typed)
  (:requirements :strips :typing :equality)
  (:types room ball gripper)
  (:predicates (at-robby ?r - room) (at ?b - ball ?r - room)
               (free ?g - gripper) (carry ?b - ball ?g - gripper))
  (:action move
    :parameters (?from ?to - room)
    :precondition (and (at-robby ?from) (not (= ?from ?to)))
    :effect (and (at-robby ?to) (not (at-robby ?from))))
  (:action pick
    :parameters (?b - ball ?r - room ?g - gripper)
    :precondition (and (at ?b ?r) (at-robby ?r) (free ?g))
    :effect (and (carry ?b ?g) (not (at ?b ?r)) (not (free ?g))))
  (:action drop
    :parameters (?b - ball ?r - room ?g - gripper)
    :precondition (and (carry ?b ?g) (at-robby ?r))
    :effect (and (at ?b ?r) (free ?g) (not (carry ?b ?g)))))
"""

GRIPPER1_PROBLEM = """
(define (problem gripper-1)
  (:domain gripper-typed)
  (:objects rooma roomb - room ball1 - ball left right - gripper)
  (:init (at-robby rooma) (at ball1 rooma) (free left) (free right))
  (:goal (and (at ball1 roomb))))
"""


def chain3_task() -> PlanningTask:
    return PlanningTask.from_strips(
        ["gl", "p0", "p1", "p2"],
        [("a1", ["p0"], ["p1"], ["p0"]),
         ("a2", ["p1"], ["p2"], ["p1"]),
         ("a3", ["p2"], ["gl"], ["p2"])],
        init=["p0"],
        goal=["gl"],
        name="chain-3",
    )


def two_achiever_task() -> PlanningTask:
    """Goal g needs q, which two equally cheap actions achieve from s."""
    return PlanningTask.from_strips(
        ["g", "q", "s"],
        [("b1", ["s"], ["q"], []),
         ("b2", ["s"], ["q"], []),
         ("c", ["q"], ["g"], [])],
        init=["s"],
        goal=["g"],
    )


@pytest.fixture
def chain3() -> PlanningTask:
    return chain3_task()


@pytest.fixture
def two_achiever() -> PlanningTask:
    return two_achiever_task()


@pytest.fixture
def gripper1() -> PlanningTask:
    d, p = parse(GRIPPER1_DOMAIN, GRIPPER1_PROBLEM)
    return ground(d, p, name="gripper-1")


def fact(t: PlanningTask, name: str) -> int:
    return t.facts.index(name)


def act(t: PlanningTask, name: str) -> int:
    return t.action_id(name)
