"""Acceptance battery: one test per criterion.

The battery is computed once per session; each test prints its
criterion's one-line outcome and asserts it.  Run with ``-s`` (or read
the failure output) to see the lines.
"""

import pytest

from taplab.verify import run_battery


@pytest.fixture(scope="module")
def battery():
    results = run_battery(seed=0)
    return {r.name: r for r in results}


def _check(battery, name):
    result = battery[name]
    status = "PASS" if result.passed else "FAIL"
    print(f"{name} {status}  {result.title}: {result.detail}")
    assert result.passed, f"{result.title}: {result.detail}"


def test_a1_exhaustive_oracle_agrees_with_grid(battery):
    _check(battery, "A1")


def test_a2_bal_three_competitive_and_balanced(battery):
    _check(battery, "A2")


def test_a3_unk_six_competitive_and_saturated(battery):
    _check(battery, "A3")


def test_a4_golden_ratio_lower_bound(battery):
    _check(battery, "A4")


def test_a5_geometric_family_bounds(battery):
    _check(battery, "A5")


def test_a6_canc_completes_within_pool_ages(battery):
    _check(battery, "A6")


def test_a7_b_one_per_type_fast_parallel(battery):
    _check(battery, "A7")


def test_a8_c_ballistic_machinery(battery):
    _check(battery, "A8")


def test_a9_oblivious_trt_gap_trend(battery):
    _check(battery, "A9")


def test_a10_nonpreemptive_flood_gap(battery):
    _check(battery, "A10")


def test_a11_turtle_sqrt_p_band(battery):
    _check(battery, "A11")


def test_a12_battery_deterministic(battery):
    _check(battery, "A12")
