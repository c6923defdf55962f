import math

import numpy as np
import pytest

from hexaspec import sweeps
from hexaspec.config import config_from_dict
from hexaspec.graphene import solve_sheets, theta_grid
from hexaspec.perturbation import PerturbationConfig, exact_perturbed_roots
from hexaspec.potential import build_potential

P4 = math.pi ** 4


def cfg(**sections):
    return config_from_dict(sections)


def test_free_bands_with_flat_row():
    fields, rows = sweeps.bands(cfg(**{"lambda": {"min": 0.0, "max": 1000.0}}))
    assert fields == sweeps.BANDS_FIELDS
    assert [(r["lo"], r["hi"], r["multiplicity"]) for r in rows][0] == (0.0, 1000.0, 2)
    flat = [r for r in rows if r["multiplicity"] == "inf"]
    assert len(flat) == 1 and flat[0]["lo"] == pytest.approx(P4, rel=1e-8)
    assert flat[0]["edge_kind_lo"] == "sigma_pp"


def test_gap_rows_for_strong_potential():
    _, rows = sweeps.bands(cfg(potential={"cosine": [10.0]}, **{"lambda": {"max": 300.0}}))
    gaps = [r for r in rows if r["multiplicity"] == 0]
    assert gaps and gaps[0]["edge_kind_lo"] == "scan-boundary"
    assert [r["lo"] for r in rows] == sorted(r["lo"] for r in rows)


def test_surface_matches_direct_solve():
    c = cfg(potential={"cosine": [1.3, -0.7]}, theta={"grid": 9},
            **{"lambda": {"min": 0.0, "max": 200.0, "grid": 400}})
    _, rows = sweeps.surface(c)
    t = theta_grid(9)
    q = build_potential([1.3, -0.7])
    for i, j in [(0, 0), (2, 7), (4, 4), (8, 1), (6, 3)]:
        got = [r["lambda"] for r in rows if r["theta1"] == t[i] and r["theta2"] == t[j]]
        ref = sorted(s.lam for s in solve_sheets(q, (t[i], t[j]), (0, 200), 400))
        assert np.allclose(got, ref, atol=1e-8)
        ranks = [r["sheet_index"] for r in rows if r["theta1"] == t[i] and r["theta2"] == t[j]]
        assert ranks == list(range(len(ref)))


def test_fermi_row_count():
    _, rows = sweeps.fermi(cfg(**{"lambda": {"min": 0.0, "max": 100.0, "grid": 50}}))
    assert len(rows) == 50 and rows[0]["class"] == "reducible"


def test_perturb_mirror_rows():
    c = cfg(potential={"cosine": [1.3, -0.7]}, theta={"grid": 5},
            perturbation={"epsilon": 0.02, "c1": 0.5},
            **{"lambda": {"min": 0.0, "max": 100.0, "grid": 300}})
    _, rows = sweeps.perturb(c)
    q = build_potential([1.3, -0.7])
    pc = PerturbationConfig(0.02, 0.5)
    t = theta_grid(5)
    for i, j in [(0, 1), (4, 3), (1, 2), (3, 2)]:
        got = [r["lambda_exact"] for r in rows if r["theta1"] == t[i] and r["theta2"] == t[j]]
        ref = exact_perturbed_roots(q, (t[i], t[j]), pc, (0, 100), 300)
        assert np.allclose(got, ref, atol=1e-8)
    for r in rows:
        if r["lambda_first_order"] is not None:
            assert r["discrepancy"] == abs(r["lambda_exact"] - r["lambda_first_order"])


def test_validate_rows():
    fields, rows, ok = sweeps.validate(cfg())
    assert ok and fields == sweeps.VALIDATE_FIELDS
    assert len(rows) == 28
