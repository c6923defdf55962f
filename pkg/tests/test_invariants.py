import math

import pytest

from hexaspec.invariants import InvariantResult, invariant_names, run_invariants
from hexaspec.perturbation import PerturbationConfig
from hexaspec.potential import FREE, build_potential


def test_names_unique():
    names = invariant_names()
    assert len(names) == len(set(names)) == 28


@pytest.mark.parametrize("q", [FREE, build_potential([10.0]), build_potential([1.3, -0.7, 0.4])],
                         ids=["free", "strong", "three-term"])
def test_all_invariants_hold(q):
    res = run_invariants(q, (-50.0, 1000.0), 1e-10, PerturbationConfig(0.02, 0.5))
    failed = [(r.name, r.value, r.tolerance) for r in res if not r.passed]
    assert failed == []


def test_second_order_check_skips_for_potential():
    res = run_invariants(build_potential([1.0]), only={"graphene.second_order_correspondence"})
    assert [r.status for r in res] == ["skip"]


def test_seed_reproducible():
    only = {"edge.symplectic", "perturbation.d1_central_difference"}
    a = run_invariants(FREE, only=only, seed=3)
    b = run_invariants(FREE, only=only, seed=3)
    assert [r.value for r in a] == [r.value for r in b]


def test_result_status():
    assert InvariantResult("x", 1e-9, 1e-8).status == "pass"
    assert InvariantResult("x", 1e-7, 1e-8).status == "fail"
    assert InvariantResult("x", math.nan, 1e-8).status == "fail"
    assert InvariantResult("x", math.nan, 1e-8, skipped=True).status == "skip"
