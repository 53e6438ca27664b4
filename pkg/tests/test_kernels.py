import math
from dataclasses import replace

import numpy as np
import pytest

from morreylab.grid import build_grid
from morreylab.kernels import (PROFILE_LIP, Kernel, admissibility_report, balance, build_bank,
                               dilated_stencil, evaluate_dilated, holder_quotient, lattice_points,
                               profile)


@pytest.fixture(scope="module")
def g1():
    return build_grid(1, 1.0, 256)


def test_profile_shape():
    assert profile(0.0) == 1.0
    assert profile(1.0) == 0.0 and profile(2.0) == 0.0
    s = np.linspace(0, 1, 100001)
    slope = np.abs(np.diff(profile(s))) / np.diff(s)
    assert slope.max() == pytest.approx(PROFILE_LIP, rel=1e-4)


def test_single_kernel_bank_passes_admissibility(g1):
    bank = build_bank(1.0, 1, 7, g1)
    assert len(bank) == 1
    rep = admissibility_report(bank.members[0], g1)
    assert rep.passed and rep.support_ok and rep.mean_ok and rep.holder_ok


@pytest.mark.parametrize("dim,N", [(1, 256), (2, 32)])
def test_every_member_admissible_with_exact_mean(dim, N):
    g = build_grid(dim, 1.0, N)
    bank = build_bank(1.0, 12, 3, g)
    for k in bank:
        rep = admissibility_report(k, g)
        assert rep.passed
        assert abs(rep.mean) <= 1e-14


def test_half_holder_bank_quotient_below_one(g1):
    bank = build_bank(0.5, 8, 11, g1)
    for k in bank:
        assert holder_quotient(k, 1 / 128) <= 1.0


def test_scaled_kernel_fails_holder(g1):
    k = build_bank(1.0, 1, 7, g1).members[0]
    assert not admissibility_report(k.scaled(10.0), g1).holder_ok


def test_shifted_kernel_fails_support(g1):
    k = build_bank(1.0, 1, 7, g1).members[0]
    moved = replace(k, u1=(0.6,), r1=0.6)
    assert not admissibility_report(moved, g1).support_ok


def test_bank_errors(g1):
    with pytest.raises(ValueError):
        build_bank(0.0, 4, 1, g1)
    with pytest.raises(ValueError):
        build_bank(1.5, 4, 1, g1)
    with pytest.raises(ValueError):
        build_bank(1.0, 0, 1, g1)


def test_bank_deterministic_and_prefix_stable(g1):
    a = build_bank(1.0, 8, 5, g1)
    b = build_bank(1.0, 8, 5, g1)
    c = build_bank(1.0, 16, 5, g1)
    assert a.members == b.members
    assert c.members[:8] == a.members
    assert c.prefix(8).members == a.members
    assert build_bank(1.0, 8, 6, g1).members != a.members


def test_bank_describe_serializable(g1):
    import json
    d = build_bank(1.0, 4, 5, g1).describe()
    assert d["size"] == 4 and d["alpha"] == 1.0 and d["seed"] == 5
    json.dumps(d)


def test_evaluate_dilated_identity_and_sup(g1):
    k = build_bank(1.0, 3, 5, g1).members[2]
    x = np.linspace(-1, 1, 2001)
    np.testing.assert_array_equal(evaluate_dilated(k, 1.0, x), k(x))
    t = 0.3
    xt = np.linspace(-t, t, 2001)
    assert np.abs(evaluate_dilated(k, t, xt)).max() == pytest.approx(np.abs(k(x)).max() / t, rel=1e-12)
    with pytest.raises(ValueError):
        evaluate_dilated(k, 0.0, x)


def test_dilated_mean_zero_on_resolving_grid():
    # bank built at spacing h, evaluated at t = 0.5 on spacing h/2: same lattice in kernel units
    coarse = build_grid(1, 1.0, 16)
    k = build_bank(1.0, 4, 1, coarse).members[3]
    h = coarse.spacing / 2
    pts = lattice_points(h, 1, 0.5)
    assert abs(evaluate_dilated(k, 0.5, pts).sum() * h) <= 1e-10


def test_balance_cancels_on_shifted_lattice():
    k = Kernel(1.0, (0.2,), 0.5, (-0.1,), 0.7)
    kb = balance(k, 0.05, shift=(0.013,))
    pts = lattice_points(0.05, 1, 1.0, (0.013,))
    assert abs(kb(pts).sum()) <= 1e-13 * np.abs(kb(pts)).sum()
    assert kb.lipschitz_bound() * kb.scale <= 1.0 + 1e-12


def test_certified_scale_formula():
    k = Kernel(0.5, (0.0,), 0.5, (0.0,), 1.0, 1.0, 0.8)
    lip = PROFILE_LIP * (1 / 0.5 ** 2 + 0.8 / 1.0)
    assert k.certified_scale() == pytest.approx(1 / (2 ** 0.5 * lip))


def test_stencil_sum_zero_and_shape():
    g = build_grid(2, 1.0, 32)
    bank = build_bank(1.0, 4, 2, g)
    for k in bank:
        st = dilated_stencil(k, 4 * g.spacing, g.spacing)
        assert st.shape == (9, 9)
        assert abs(st.sum()) <= 1e-12 * np.abs(st).sum()


def test_describe_round_trip_fields(g1):
    k = build_bank(1.0, 1, 7, g1).members[0]
    d = k.describe()
    for key in ("u1", "r1", "u2", "r2", "c1", "c2", "scale"):
        assert key in d
    assert math.isfinite(d["scale"])
