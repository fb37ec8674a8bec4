from __future__ import annotations

import random

import pytest

from lucretia import props
from lucretia.constraints import entails
from lucretia.runtime import extract_store_typing, satisfies_constraints


def test_small_run_passes():
    report = props.run_props(iters=60, seed=5)
    assert report.ok, report.render()
    assert [r.name for r in report.results] == list(props.PROPERTIES)


def test_store_properties_run_half_as_many_trials():
    trials = {r.name: r.trials for r in props.run_props(iters=20).results}
    assert trials["entails-sound"] == 10 and trials["entails-reflexive"] == 20


def test_runs_are_deterministic():
    assert props.run_props(30, seed=9).render() == props.run_props(30, seed=9).render()


@pytest.mark.parametrize("seed", range(200))
def test_each_derivation_step_is_entailed(seed):
    rng = random.Random(seed)
    cs = props.random_cs(rng)
    for _ in range(6):
        nxt = props.derive_step(rng, cs)
        assert entails(cs, nxt)
        cs = nxt


@pytest.mark.parametrize("seed", range(100))
def test_random_stores_satisfy_their_typing(seed):
    inst = props.random_store(random.Random(seed))
    psi = extract_store_typing(inst.store, inst.sigma)
    assert satisfies_constraints(inst.store, inst.sigma, psi, precise=True)


def test_reserved_variables_are_never_bound():
    rng = random.Random(1)
    cs = props.derive(rng, props.random_cs(rng, max_vars=1), 50, frozenset(props.VARS[1:]))
    assert len(cs.vars()) <= 1


def test_a_broken_satisfaction_is_caught(monkeypatch):
    # a checker that ignores bot would accept absent fields typed "t \/ bot" as
    # required; the soundness property must notice that it then rejects
    real = props.satisfies_constraints

    def strict(store, sigma, cs, precise=False):
        for var, record in cs:
            for loc, v in sigma.items():
                if v == var and any(name not in store[loc] for name, _ in record):
                    return False
        return real(store, sigma, cs, precise)

    monkeypatch.setattr(props, "satisfies_constraints", strict)
    assert not props.check_property("entails-sound", 300).ok


def test_a_broken_merge_is_caught(monkeypatch):
    def lossy(a, b):
        return b
    monkeypatch.setattr(props, "merge", lossy)
    assert not props.check_property("merge-entailed", 300).ok
