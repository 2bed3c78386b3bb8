#!/usr/bin/env python3
"""
Gradation and Gauss Decomposition Tests
Block projections, the three-factor decomposition and its reverse ordering
"""

import json

import numpy as np
import pytest

from algebra import (
    BlockPartition,
    GradedContext,
    NotDecomposableError,
    Part,
    ShapeError,
    SingularError,
    block_diag,
    block_get,
    gauss_decompose,
    gauss_decompose_stack,
    inverse,
    is_in_subgroup,
    matexp,
    matrix_from_json,
    matrix_to_json,
    project,
    reverse_gauss_decompose,
    reverse_gauss_decompose_stack,
    unit_inverse,
    unit_triangular,
)
from config.settings import config


def random_partition(rng, p):
    sizes = [1] * p
    for _ in range(int(rng.integers(0, 8 - p + 1))):
        sizes[int(rng.integers(0, p))] += 1
    return tuple(sizes)


def test_partition_needs_two_positive_blocks():
    with pytest.raises(ShapeError):
        BlockPartition((3,))
    with pytest.raises(ShapeError):
        BlockPartition((2, 0))


def test_grades_and_slices():
    ctx = GradedContext.from_sizes((1, 2, 1))
    assert ctx.n == 4 and ctx.p == 3
    assert ctx.grade(1, 3) == 2
    assert ctx.grade(3, 2) == -1
    assert ctx.block_slice(2) == slice(1, 3)
    with pytest.raises(IndexError):
        ctx.block_slice(4)


def test_projections_split_a_matrix(random_matrix):
    ctx = GradedContext.from_sizes((2, 1, 2))
    x = random_matrix(5)
    parts = [project(ctx, x, part) for part in (Part.NEGATIVE, Part.ZERO, Part.POSITIVE)]
    np.testing.assert_allclose(sum(parts), x, atol=0)
    np.testing.assert_allclose(project(ctx, x, "<=0"), parts[0] + parts[1], atol=0)
    assert np.all(parts[2][ctx.mask(Part.NON_POSITIVE)] == 0)


def test_part_predicates_agree_with_masks():
    ctx = GradedContext.from_sizes((1, 2, 1))
    assert Part.POSITIVE.admits(2) and not Part.POSITIVE.admits(0)
    assert Part.NON_POSITIVE.admits(0) and Part.NON_POSITIVE.admits(-1)
    for part in Part:
        expected = [[part.admits(ctx.grade(r, s)) for s in (1, 2, 2, 3)] for r in (1, 2, 2, 3)]
        np.testing.assert_array_equal(ctx.mask(part), expected)


def test_grade_mask_selects_one_block_diagonal():
    ctx = GradedContext.from_sizes((1, 1, 1))
    expected = np.array([[False, True, False], [False, False, True], [False, False, False]])
    np.testing.assert_array_equal(ctx.grade_mask(1), expected)


def test_gauss_round_trip_random(rng, random_matrix):
    for _ in range(200):
        p = int(rng.integers(2, 5))
        ctx = GradedContext.from_sizes(random_partition(rng, p))
        a = random_matrix(ctx.n, shift=3.0 * ctx.n)
        factors = gauss_decompose(ctx, a)
        error = np.max(np.abs(factors.product() - a)) / np.max(np.abs(a))
        assert error <= 1e-10
        assert is_in_subgroup(ctx, factors.lower, Part.NEGATIVE, atol=1e-12)
        assert is_in_subgroup(ctx, factors.upper, Part.POSITIVE, atol=1e-12)
        assert is_in_subgroup(ctx, factors.zero, Part.ZERO, atol=1e-12)


def test_two_block_factors_match_schur_formulas(random_matrix):
    ctx = GradedContext.from_sizes((2, 3))
    a = random_matrix(5, shift=6.0)
    a11, a12 = a[:2, :2], a[:2, 2:]
    a21, a22 = a[2:, :2], a[2:, 2:]
    factors = gauss_decompose(ctx, a)

    a11_inv = np.linalg.inv(a11)
    np.testing.assert_allclose(block_get(ctx, factors.lower, 2, 1), a21 @ a11_inv, atol=1e-10)
    np.testing.assert_allclose(block_get(ctx, factors.upper, 1, 2), a11_inv @ a12, atol=1e-10)
    np.testing.assert_allclose(block_get(ctx, factors.zero, 1, 1), a11, atol=1e-10)
    np.testing.assert_allclose(block_get(ctx, factors.zero, 2, 2), a22 - a21 @ a11_inv @ a12, atol=1e-10)


def test_three_block_factors_match_explicit_entries(random_matrix):
    ctx = GradedContext.from_sizes((1, 1, 1))
    a = random_matrix(3, shift=5.0)
    factors = gauss_decompose(ctx, a)

    a11 = a[0, 0]
    d2 = a[1, 1] - a[1, 0] * a[0, 1] / a11
    upper23 = (a[1, 2] - a[1, 0] * a[0, 2] / a11) / d2
    lower32 = (a[2, 1] - a[2, 0] * a[0, 1] / a11) / d2
    np.testing.assert_allclose(factors.upper[0, 1:], a[0, 1:] / a11, atol=1e-10)
    np.testing.assert_allclose(factors.lower[1:, 0], a[1:, 0] / a11, atol=1e-10)
    np.testing.assert_allclose(factors.zero[1, 1], d2, atol=1e-10)
    np.testing.assert_allclose(factors.upper[1, 2], upper23, atol=1e-10)
    np.testing.assert_allclose(factors.lower[2, 1], lower32, atol=1e-10)
    np.testing.assert_allclose(np.prod(np.diag(factors.zero)), np.linalg.det(a), rtol=1e-10)


def test_identity_decomposes_into_identities():
    ctx = GradedContext.from_sizes((1, 2, 1))
    factors = gauss_decompose(ctx, np.eye(4))
    for factor in (factors.lower, factors.zero, factors.upper):
        np.testing.assert_allclose(factor, np.eye(4), atol=0)


def test_singular_leading_block_is_reported():
    ctx = GradedContext.from_sizes((1, 1))
    with pytest.raises(NotDecomposableError) as info:
        gauss_decompose(ctx, np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert info.value.block_index == 1


def test_second_pivot_failure_is_reported():
    ctx = GradedContext.from_sizes((1, 1, 1))
    # leading 2x2 minor is singular, the first pivot is fine
    a = np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 1.0], [0.0, 1.0, 1.0]])
    with pytest.raises(NotDecomposableError) as info:
        gauss_decompose(ctx, a)
    assert info.value.block_index == 2


def test_pivot_tolerance_comes_from_config():
    ctx = GradedContext.from_sizes((1, 1))
    a = np.array([[0.05, 1.0], [1.0, 1.0]])
    before = config.get("numerics.gauss_tol")
    gauss_decompose(ctx, a)
    with config.override({"numerics.gauss_tol": 0.1}):
        assert config.get("numerics.gauss_tol") == 0.1
        with pytest.raises(NotDecomposableError):
            gauss_decompose(ctx, a)
    assert config.get("numerics.gauss_tol") == before
    gauss_decompose(ctx, a)


def test_stack_marks_failed_points(random_matrix):
    ctx = GradedContext.from_sizes((1, 1))
    good = random_matrix(2, shift=4.0)
    stack = np.stack([good, np.array([[0.0, 1.0], [1.0, 0.0]]), good])
    factors, ok = gauss_decompose_stack(ctx, stack)
    np.testing.assert_array_equal(ok, [True, False, True])
    assert np.all(np.isnan(factors.zero[1]))
    np.testing.assert_allclose(factors.take(0).product(), good, atol=1e-12)


def test_reverse_decomposition(random_matrix):
    ctx = GradedContext.from_sizes((2, 2))
    a = random_matrix(4, shift=5.0)
    factors = reverse_gauss_decompose(ctx, a)
    np.testing.assert_allclose(factors.reverse_product(), a, atol=1e-10)
    assert is_in_subgroup(ctx, factors.lower, Part.NEGATIVE, atol=1e-12)
    assert is_in_subgroup(ctx, factors.upper, Part.POSITIVE, atol=1e-12)

    a22_inv = np.linalg.inv(a[2:, 2:])
    np.testing.assert_allclose(factors.lower[2:, :2], a22_inv @ a[2:, :2], atol=1e-10)
    np.testing.assert_allclose(factors.upper[:2, 2:], a[:2, 2:] @ a22_inv, atol=1e-10)


def test_reverse_decomposition_of_singular_matrix():
    ctx = GradedContext.from_sizes((1, 1))
    with pytest.raises(SingularError):
        reverse_gauss_decompose(ctx, np.ones((2, 2)))
    _, ok = reverse_gauss_decompose_stack(ctx, np.stack([np.eye(2), np.ones((2, 2))]))
    np.testing.assert_array_equal(ok, [True, False])


def test_unit_inverse_keeps_structure(random_matrix):
    ctx = GradedContext.from_sizes((1, 2, 2))
    x = unit_triangular(ctx, {(1, 2): random_matrix(1, 2), (2, 3): random_matrix(2, 2)}, "upper")
    inv = unit_inverse(ctx, x, Part.POSITIVE)
    np.testing.assert_allclose(inv @ x, np.eye(5), atol=1e-12)
    assert is_in_subgroup(ctx, inv, Part.POSITIVE)


def test_unit_triangular_rejects_wrong_side(random_matrix):
    ctx = GradedContext.from_sizes((1, 1))
    with pytest.raises(ShapeError):
        unit_triangular(ctx, {(2, 1): random_matrix(1)}, "upper")


def test_block_diag_and_subgroups(random_matrix):
    ctx = GradedContext.from_sizes((2, 1))
    g = block_diag(ctx, [random_matrix(2), random_matrix(1)])
    assert is_in_subgroup(ctx, g, Part.ZERO)
    assert not is_in_subgroup(ctx, g, Part.POSITIVE)


def test_inverse_and_exponential():
    with pytest.raises(SingularError):
        inverse(np.zeros((2, 2)))
    x = np.diag([1.0, -2.0j])
    np.testing.assert_allclose(matexp(x), np.diag(np.exp([1.0, -2.0j])), atol=1e-13)


def test_matrix_codec_reads_pairs_and_reals():
    decoded = matrix_from_json([[[1.0, 2.0], [0.0, -1.0]], [[3.0, 0.0], [0.5, 0.5]]], ndim=2)
    np.testing.assert_array_equal(decoded, [[1 + 2j, -1j], [3, 0.5 + 0.5j]])
    np.testing.assert_array_equal(matrix_from_json([[1, 2], [3, 4]], ndim=2), [[1, 2], [3, 4]])
    assert json.loads(json.dumps(matrix_to_json(np.eye(2) * 1j)))[0][0] == [0.0, 1.0]
    with pytest.raises(ShapeError):
        matrix_from_json([[1, 2], [3]], ndim=2)
