"""Tests for similitude systems, the Moran equation, coding, and samplers."""

import math

import numpy as np
import pytest

from lypairs.errors import (
    InsufficientPrefix,
    InvalidDigit,
    InvalidRatio,
    OverlapError,
    ParameterOutOfRange,
    ValidationError,
)
from lypairs.fractal import (
    IfsSystem,
    Similitude,
    bernoulli_weights,
    code_point,
    load_ifs,
    moran_dimension,
    sample_attractor,
    sample_pair_set,
    sample_restricted,
    verify_separation,
)
from lypairs.symbolic import GapSequence, SymbolSequence, extract_filler, random_sequence

CHI2_99_DF1 = 6.6348966010212145  # 0.99 quantile of chi-square with 1 dof


def cantor_ifs() -> IfsSystem:
    return IfsSystem(
        (Similitude.of(1 / 3, [0.0]), Similitude.of(1 / 3, [2 / 3])),
        ((0.0, 1.0),),
    )


def tent_repeller_ifs() -> IfsSystem:
    # inverse branches of the slope-4 tent: x/4 and 1 - x/4
    return IfsSystem(
        (Similitude.of(0.25, [0.0]), Similitude.of(0.25, [1.0], orth=[-1])),
        ((0.0, 1.0),),
    )


def golden_ifs() -> IfsSystem:
    return IfsSystem(
        (Similitude.of(0.5, [0.0]), Similitude.of(0.25, [0.75])),
        ((0.0, 1.0),),
    )


# --------------------------------------------------------------------------
# similitudes


def test_similitude_scales_all_distances():
    rng = np.random.default_rng(5)
    s = Similitude.of(0.37, [0.2, -0.1, 0.5], orth=[1, -1, 1])
    for _ in range(1000):
        x, y = rng.uniform(-5, 5, size=(2, 3))
        lhs = np.linalg.norm(s.apply(x) - s.apply(y))
        rhs = 0.37 * np.linalg.norm(x - y)
        assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(x - y) + 1e-15


def test_similitude_rejects_bad_ratio_and_orth():
    with pytest.raises(InvalidRatio):
        Similitude.of(1.0, [0.0])
    with pytest.raises(InvalidRatio):
        Similitude.of(0.0, [0.0])
    with pytest.raises(ParameterOutOfRange):
        Similitude.of(0.5, [0.0, 0.0], orth=[[0, 1], [1, 0]])


def test_similitude_accepts_diagonal_matrix():
    s = Similitude.of(0.5, [1.0, 1.0], orth=np.diag([1, -1]))
    assert s.flips == (1, -1)


# --------------------------------------------------------------------------
# Moran equation


def test_moran_equal_thirds_closed_form():
    sol = moran_dimension([1 / 3, 1 / 3])
    assert abs(sol.dimension - math.log(2) / math.log(3)) < 1e-10
    assert sol.residual <= 1e-12


def test_moran_single_map_is_zero():
    sol = moran_dimension([0.5])
    assert sol.dimension == 0.0
    assert sol.residual == 0.0


def test_moran_golden_closed_form():
    # x + x^2 = 1 with x = (1/2)^D, so x = (sqrt(5)-1)/2
    expected = -math.log2((math.sqrt(5) - 1) / 2)
    sol = moran_dimension([0.5, 0.25])
    assert abs(sol.dimension - expected) < 1e-10


def test_moran_residual_on_random_lists():
    rng = np.random.default_rng(17)
    for _ in range(50):
        k = int(rng.integers(1, 7))
        ratios = rng.uniform(0.05, 0.8, size=k)
        sol = moran_dimension(list(ratios))
        assert sol.residual <= 1e-12
        assert sol.dimension >= 0.0


def test_moran_monotone_in_ratios():
    base = moran_dimension([0.3, 0.2]).dimension
    bigger = moran_dimension([0.35, 0.2]).dimension
    assert bigger > base


def test_moran_rejects_bad_inputs():
    with pytest.raises(InvalidRatio):
        moran_dimension([])
    with pytest.raises(InvalidRatio):
        moran_dimension([0.5, 1.1])


# --------------------------------------------------------------------------
# separation


def test_separation_middle_thirds():
    assert verify_separation(cantor_ifs()) == pytest.approx(1 / 3, abs=1e-15)


def test_separation_tent_repeller():
    assert verify_separation(tent_repeller_ifs()) == pytest.approx(0.5, abs=1e-15)


def test_separation_rejects_touching_halves():
    with pytest.raises(OverlapError):
        IfsSystem(
            (Similitude.of(0.5, [0.0]), Similitude.of(0.5, [0.5])),
            ((0.0, 1.0),),
        )


def test_touching_halves_allowed_when_flagged():
    ifs = IfsSystem(
        (Similitude.of(0.5, [0.0]), Similitude.of(0.5, [0.5])),
        ((0.0, 1.0),),
        separation_required=False,
    )
    assert ifs.gap == 0.0
    with pytest.raises(OverlapError):
        verify_separation(ifs)


def test_domain_escape_rejected():
    with pytest.raises(ValidationError):
        IfsSystem((Similitude.of(0.5, [0.8]),), ((0.0, 1.0),))


# --------------------------------------------------------------------------
# coding


def test_code_point_all_ones_contracts_to_zero():
    ifs = cantor_ifs()
    cp = code_point(ifs, (1,) * 20)
    assert abs(cp.center[0]) <= 3.0**-20
    assert cp.radius == pytest.approx(3.0**-20 * 0.5, rel=1e-12)


def test_code_point_tent_fixed_point():
    ifs = tent_repeller_ifs()
    cp = code_point(ifs, (2,) * 30)
    # fixed point of x -> 1 - x/4 is 4/5
    assert cp.center[0] == pytest.approx(0.8, abs=1e-15)


def test_code_point_first_level_inside_image():
    for ifs in (cantor_ifs(), golden_ifs()):
        for d in (1, 2):
            cp = code_point(ifs, (d,))
            img = ifs.maps[d - 1].image_box(ifs.box_arr)
            assert img[0, 0] - 1e-12 <= cp.center[0] <= img[0, 1] + 1e-12


def test_code_point_rejects_bad_digits():
    with pytest.raises(InvalidDigit):
        code_point(cantor_ifs(), (1, 3))
    with pytest.raises(ValidationError):
        code_point(cantor_ifs(), ())


def test_cylinder_nesting():
    rng = np.random.default_rng(2)
    ifs = golden_ifs()
    for _ in range(200):
        n = int(rng.integers(1, 12))
        prefix = tuple(int(d) for d in rng.integers(1, 3, size=n))
        parent = code_point(ifs, prefix)
        for d in (1, 2):
            child = code_point(ifs, prefix + (d,))
            gap = np.linalg.norm(child.center - parent.center) + child.radius
            assert gap <= parent.radius + 1e-12


def test_separation_transport():
    ifs = cantor_ifs()
    d = verify_separation(ifs)
    rng = np.random.default_rng(9)
    for _ in range(100):
        p = tuple(int(x) for x in rng.integers(1, 3, size=int(rng.integers(0, 8))))
        tail1 = tuple(int(x) for x in rng.integers(1, 3, size=6))
        tail2 = tuple(int(x) for x in rng.integers(1, 3, size=6))
        c1 = code_point(ifs, p + (1,) + tail1)
        c2 = code_point(ifs, p + (2,) + tail2)
        scale = (1 / 3) ** len(p)
        dist = abs(c1.center[0] - c2.center[0])
        assert dist >= d * scale - c1.radius - c2.radius


# --------------------------------------------------------------------------
# samplers


def test_sampler_deterministic_across_threads():
    ifs = cantor_ifs()
    a = sample_attractor(ifs, 70000, 12, seed=42, threads=1)
    b = sample_attractor(ifs, 70000, 12, seed=42, threads=4)
    assert np.array_equal(a.centers, b.centers)
    assert np.array_equal(a.digits, b.digits)
    c = sample_attractor(ifs, 70000, 12, seed=43)
    assert not np.array_equal(a.digits, c.digits)


def test_sampler_digit_marginals_uniform_for_equal_ratios():
    ifs = cantor_ifs()
    sample = sample_attractor(ifs, 100000, 1, seed=7)
    ones = int(np.sum(sample.digits == 1))
    n = len(sample)
    expected = n / 2
    chi2 = (ones - expected) ** 2 / expected + ((n - ones) - expected) ** 2 / expected
    assert chi2 < CHI2_99_DF1


def test_sampler_golden_marginal():
    ifs = golden_ifs()
    p1 = bernoulli_weights(ifs.ratios)[0]
    assert p1 == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-12)
    sample = sample_attractor(ifs, 100000, 1, seed=11)
    phat = float(np.mean(sample.digits == 1))
    assert abs(phat - p1) < 0.006  # ~4 sigma at n = 1e5


def test_sample_single_point_lands_in_first_level_image():
    ifs = cantor_ifs()
    s = sample_attractor(ifs, 1, 1, seed=0)
    cp = s[0]
    img = ifs.maps[cp.prefix[0] - 1].image_box(ifs.box_arr)
    assert img[0, 0] <= cp.center[0] <= img[0, 1]


def test_restricted_prefixes_satisfy_pattern():
    ifs = cantor_ifs()
    rng = np.random.default_rng(31)
    base = random_sequence(2, 60, rng)
    gaps = GapSequence.quadratic()
    sample = sample_restricted(ifs, base, gaps, 200, 40, seed=5)
    for i in range(0, 200, 7):
        row = SymbolSequence(2, tuple(int(d) for d in sample.digits[i]))
        extract_filler(row, base, gaps)  # raises NotInSubset on violation


def test_restricted_zero_gaps_is_deterministic():
    ifs = cantor_ifs()
    base = SymbolSequence(2, (1, 2) * 30)
    sample = sample_restricted(ifs, base, GapSequence.zero(), 500, 30, seed=3)
    assert np.all(sample.digits == sample.digits[0])
    assert np.ptp(sample.centers) == 0.0


def test_restricted_needs_base_coverage():
    ifs = cantor_ifs()
    base = SymbolSequence(2, (1, 2))
    with pytest.raises(InsufficientPrefix):
        sample_restricted(ifs, base, GapSequence.quadratic(), 10, 30, seed=1)


def test_pair_sample_components():
    ifs = cantor_ifs()
    gaps = GapSequence.quadratic()
    pairs = sample_pair_set(ifs, gaps, 300, 25, seed=13)
    assert pairs.points.shape == (300, 2)
    # first coordinate re-codes the base digits
    for i in range(0, 300, 17):
        cp = code_point(ifs, tuple(int(d) for d in pairs.base_digits[i]))
        assert cp.center[0] == pytest.approx(pairs.points[i, 0], abs=1e-15)
        # and the partner digits satisfy the pattern relative to the base
        row_t = SymbolSequence(2, tuple(int(d) for d in pairs.partner_digits[i]))
        row_s = SymbolSequence(2, tuple(int(d) for d in pairs.base_digits[i]))
        extract_filler(row_t, row_s, gaps)


def test_batch_coding_matches_scalar_in_two_dimensions():
    # planar system with unequal ratios and a reflection
    ifs = IfsSystem(
        (
            Similitude.of(0.3, [0.0, 0.0]),
            Similitude.of(0.35, [1.0, 0.65], orth=[-1, 1]),
        ),
        ((0.0, 1.0), (0.0, 1.0)),
    )
    sample = sample_attractor(ifs, 50, 12, seed=29)
    for i in range(len(sample)):
        cp = sample[i]
        direct = code_point(ifs, cp.prefix)
        assert np.allclose(direct.center, cp.center, atol=1e-15)
        assert direct.radius == pytest.approx(cp.radius, rel=1e-12)


def test_sampler_rejects_bad_arguments():
    ifs = cantor_ifs()
    with pytest.raises(ValidationError):
        sample_attractor(ifs, 0, 5, seed=1)
    with pytest.raises(ValidationError):
        sample_attractor(ifs, 5, 0, seed=1)
    with pytest.raises(ValidationError):
        sample_attractor(ifs, 5, 5, seed=-2)


# --------------------------------------------------------------------------
# serialization


def test_ifs_json_round_trip(tmp_path):
    ifs = golden_ifs()
    data = ifs.to_json()
    again = IfsSystem.from_json(data)
    assert again.ratios == ifs.ratios
    assert again.box == ifs.box
    path = tmp_path / "golden.json"
    import json

    path.write_text(json.dumps(data))
    loaded = load_ifs(path)
    assert loaded.ratios == ifs.ratios


def test_ifs_json_matches_documented_shape():
    data = {
        "w": 1,
        "K": [[0, 1]],
        "maps": [
            {"ratio": 1 / 3, "orth": [1], "t": [0]},
            {"ratio": 1 / 3, "orth": [1], "t": [2 / 3]},
        ],
    }
    ifs = IfsSystem.from_json(data)
    assert verify_separation(ifs) == pytest.approx(1 / 3)
