"""Encoding layouts and slot-level matrix procedures against brute force."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henn.encoding import (
    Layout,
    complete_column_shift,
    complete_row_shift,
    decode_matrix,
    encode_matrix,
    incomplete_column_shift,
    keep_only,
    roll_fill,
    sum_col_vec,
    sum_row_vec,
    windowed_sum,
)
from henn.engine import EngineConfig, OpTrace, SlotEngine
from henn.errors import IndexOutOfRange, MatrixTooLarge, WrongLayout


def grid_engine(slots=64):
    return SlotEngine(EngineConfig(slots=slots, backend="exact"))


# --- oracles -----------------------------------------------------------------

def oracle_row_shift(M):
    return np.roll(M, -1, axis=0)


def oracle_incomplete_shift(M):
    flat = np.roll(M.ravel(), -1)
    return flat.reshape(M.shape)


def oracle_column_shift(M):
    return np.roll(M, -1, axis=1)


# --- encode/decode -------------------------------------------------------------

def test_encode_full_matrix_example():
    eng = grid_engine(8)
    em = encode_matrix(eng, [[1, 2], [3, 4]], Layout.FULL_MATRIX)
    assert np.array_equal(eng.decrypt(em.parts[0]), [1, 2, 3, 4, 0, 0, 0, 0])


def test_encode_repeated_row_example():
    eng = grid_engine(8)
    em = encode_matrix(eng, [5, 6, 7], Layout.REPEATED_ROW, repeat=2)
    assert np.array_equal(eng.decrypt(em.parts[0]), [5, 6, 7, 5, 6, 7, 0, 0])
    assert em.rows == 2 and em.cols == 3


def test_encode_zero_rows_accepted():
    eng = grid_engine(8)
    em = encode_matrix(eng, np.zeros((0, 3)), Layout.FULL_MATRIX)
    assert em.parts == () and em.rows == 0


def test_encode_too_large():
    eng = grid_engine(8)
    with pytest.raises(MatrixTooLarge):
        encode_matrix(eng, np.ones((3, 3)), Layout.FULL_MATRIX)
    with pytest.raises(MatrixTooLarge):
        encode_matrix(eng, np.ones(5), Layout.REPEATED_ROW, repeat=2)


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_decode_inverts_encode_all_layouts(n, cols, seed):
    rng = np.random.default_rng(seed)
    M = rng.uniform(-5, 5, (n, cols))
    eng = grid_engine(64)
    for layout in (Layout.FULL_MATRIX, Layout.ROW_PER_CIPHERTEXT):
        em = encode_matrix(eng, M, layout)
        assert np.array_equal(decode_matrix(eng, em), M)
    em = encode_matrix(eng, M[:1], Layout.REPEATED_ROW, repeat=n)
    assert np.array_equal(decode_matrix(eng, em), np.tile(M[:1], (n, 1)))


# --- shifts ----------------------------------------------------------------------

def test_row_shift_example():
    eng = grid_engine(8)
    em = encode_matrix(eng, [[1, 2], [3, 4]], Layout.FULL_MATRIX)
    assert np.array_equal(decode_matrix(eng, complete_row_shift(eng, em)), [[3, 4], [1, 2]])


def test_row_shift_single_row_and_cycle():
    eng = grid_engine(8)
    em = encode_matrix(eng, [[1, 2, 3]], Layout.FULL_MATRIX)
    assert np.array_equal(decode_matrix(eng, complete_row_shift(eng, em)), [[1, 2, 3]])
    M = np.arange(6.0).reshape(3, 2)
    em = encode_matrix(eng, M, Layout.FULL_MATRIX)
    for _ in range(3):
        em = complete_row_shift(eng, em)
    assert np.array_equal(decode_matrix(eng, em), M)


def test_incomplete_column_shift_examples():
    eng = grid_engine(8)
    em = encode_matrix(eng, [[1, 2], [3, 4]], Layout.FULL_MATRIX)
    assert np.array_equal(decode_matrix(eng, incomplete_column_shift(eng, em)), [[2, 3], [4, 1]])
    one = encode_matrix(eng, [[7.0]], Layout.FULL_MATRIX)
    assert np.array_equal(decode_matrix(eng, incomplete_column_shift(eng, one)), [[7.0]])


def test_incomplete_column_shift_full_cycle_exact_fill():
    eng = grid_engine(8)
    M = np.arange(8.0).reshape(2, 4)
    em = encode_matrix(eng, M, Layout.FULL_MATRIX)
    for _ in range(8):
        em = incomplete_column_shift(eng, em)
    assert np.array_equal(decode_matrix(eng, em), M)


def test_complete_column_shift_examples():
    eng = grid_engine(8)
    em = encode_matrix(eng, [[1, 2], [3, 4]], Layout.FULL_MATRIX)
    assert np.array_equal(decode_matrix(eng, complete_column_shift(eng, em)), [[2, 1], [4, 3]])
    same = encode_matrix(eng, [[5, 5], [6, 6]], Layout.FULL_MATRIX)
    assert np.array_equal(decode_matrix(eng, complete_column_shift(eng, same)), [[5, 5], [6, 6]])
    row = encode_matrix(eng, [[10, 11, 12]], Layout.FULL_MATRIX)
    assert np.array_equal(decode_matrix(eng, complete_column_shift(eng, row)), [[11, 12, 10]])


def test_complete_column_shift_op_budget():
    """Contract: exactly two rotations, two mask multiplies, one addition."""
    trace = OpTrace()
    eng = SlotEngine(EngineConfig(slots=8, backend="exact"), trace=trace)
    em = encode_matrix(eng, [[1, 2], [3, 4]], Layout.FULL_MATRIX)
    before = len(trace.entries)
    complete_column_shift(eng, em)
    ops = [e[1] for e in trace.entries[before:]]
    assert sorted(ops) == ["add", "cmult", "cmult", "rotate", "rotate"]


def test_shift_wrong_layout():
    eng = grid_engine(8)
    em = encode_matrix(eng, [[1, 2], [3, 4]], Layout.ROW_PER_CIPHERTEXT)
    for op in (complete_row_shift, incomplete_column_shift, complete_column_shift,
               sum_row_vec, sum_col_vec):
        with pytest.raises(WrongLayout):
            op(eng, em)


@given(st.integers(1, 8), st.integers(0, 7), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_shifts_match_brute_force(n, d, seed):
    if n * (1 + d) > 64:
        return
    rng = np.random.default_rng(seed)
    M = rng.uniform(-3, 3, (n, 1 + d))
    eng = grid_engine(64)
    em = encode_matrix(eng, M, Layout.FULL_MATRIX)
    assert np.allclose(decode_matrix(eng, complete_row_shift(eng, em)), oracle_row_shift(M))
    assert np.allclose(decode_matrix(eng, incomplete_column_shift(eng, em)),
                       oracle_incomplete_shift(M))
    assert np.allclose(decode_matrix(eng, complete_column_shift(eng, em)),
                       oracle_column_shift(M))


# --- sums ----------------------------------------------------------------------

def test_sum_row_vec_examples():
    eng = grid_engine(4)
    em = encode_matrix(eng, [[1, 2], [3, 4]], Layout.FULL_MATRIX)
    assert np.array_equal(eng.decrypt(sum_row_vec(eng, em)), [3, 3, 7, 7])
    eng8 = grid_engine(8)
    zero = encode_matrix(eng8, np.zeros((2, 2)), Layout.FULL_MATRIX)
    assert np.array_equal(eng8.decrypt(sum_row_vec(eng8, zero)), np.zeros(8))
    col = encode_matrix(eng8, [[5.0], [6.0]], Layout.FULL_MATRIX)
    assert np.array_equal(eng8.decrypt(sum_row_vec(eng8, col))[:2], [5, 6])


def test_sum_col_vec_examples():
    eng = grid_engine(4)
    em = encode_matrix(eng, [[1, 2], [3, 4]], Layout.FULL_MATRIX)
    assert np.array_equal(eng.decrypt(sum_col_vec(eng, em)), [4, 6, 4, 6])
    eng8 = grid_engine(8)
    row = encode_matrix(eng8, [[1, 2, 3]], Layout.FULL_MATRIX)
    assert np.array_equal(eng8.decrypt(sum_col_vec(eng8, row))[:3], [1, 2, 3])
    ones = encode_matrix(eng8, np.ones((4, 2)), Layout.FULL_MATRIX)
    assert np.array_equal(eng8.decrypt(sum_col_vec(eng8, ones)), np.full(8, 4.0))


@given(st.integers(1, 8), st.integers(0, 7), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_sums_match_brute_force(n, d, seed):
    if n * (1 + d) > 64:
        return
    cols = 1 + d
    rng = np.random.default_rng(seed)
    M = rng.uniform(-1, 1, (n, cols))
    eng = grid_engine(64)
    em = encode_matrix(eng, M, Layout.FULL_MATRIX)
    rows = eng.decrypt(sum_row_vec(eng, em))[: n * cols].reshape(n, cols)
    assert np.allclose(rows, np.tile(M.sum(axis=1, keepdims=True), (1, cols)), atol=1e-12)
    colsums = eng.decrypt(sum_col_vec(eng, em))[: n * cols].reshape(n, cols)
    assert np.allclose(colsums, np.tile(M.sum(axis=0, keepdims=True), (n, 1)), atol=1e-12)


def test_sums_leveled_tolerance():
    rng = np.random.default_rng(5)
    M = rng.uniform(-1, 1, (4, 4))
    eng = SlotEngine(EngineConfig(slots=64, logQ=990, logp=30))
    em = encode_matrix(eng, M, Layout.FULL_MATRIX)
    rows = eng.decrypt(sum_row_vec(eng, em))[:16].reshape(4, 4)
    assert np.max(np.abs(rows - np.tile(M.sum(axis=1, keepdims=True), (1, 4)))) <= 1e-6


# --- keep_only / roll_fill -------------------------------------------------------

def test_keep_only_examples():
    eng = grid_engine(4)
    em = encode_matrix(eng, [[1, 2], [3, 4]], Layout.FULL_MATRIX)
    kept = keep_only(eng, em, 1, 0)
    assert np.array_equal(eng.decrypt(kept.parts[0]), [0, 0, 3, 0])
    again = keep_only(eng, kept, 1, 0)
    assert np.array_equal(eng.decrypt(again.parts[0]), [0, 0, 3, 0])
    zeros = encode_matrix(eng, np.zeros((2, 2)), Layout.FULL_MATRIX)
    assert np.array_equal(eng.decrypt(keep_only(eng, zeros, 0, 1).parts[0]), np.zeros(4))
    with pytest.raises(IndexOutOfRange):
        keep_only(eng, em, 2, 0)
    with pytest.raises(IndexOutOfRange):
        keep_only(eng, em, 0, 2)


def test_roll_fill_examples():
    eng = grid_engine(4)
    em = encode_matrix(eng, [[1, 2], [3, 4]], Layout.FULL_MATRIX)
    filled = roll_fill(eng, keep_only(eng, em, 1, 0))
    assert np.array_equal(eng.decrypt(filled), [3, 3, 3, 3])
    zeros = encode_matrix(eng, np.zeros((2, 2)), Layout.FULL_MATRIX)
    assert np.array_equal(eng.decrypt(roll_fill(eng, zeros)), np.zeros(4))


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_roll_fill_after_keep_only_is_constant(n, cols, seed):
    rng = np.random.default_rng(seed)
    M = rng.uniform(-2, 2, (n, cols))
    eng = grid_engine(32)
    em = encode_matrix(eng, M, Layout.FULL_MATRIX)
    i = int(rng.integers(n))
    j = int(rng.integers(cols))
    out = eng.decrypt(roll_fill(eng, keep_only(eng, em, i, j)))
    assert np.allclose(out, M[i, j], atol=1e-12)


def test_metadata_preserved():
    eng = grid_engine(16)
    em = encode_matrix(eng, np.arange(6.0).reshape(2, 3), Layout.FULL_MATRIX)
    for op in (complete_row_shift, incomplete_column_shift, complete_column_shift):
        out = op(eng, em)
        assert (out.rows, out.cols, out.layout) == (2, 3, Layout.FULL_MATRIX)
        assert len(out.parts) == 1
    kept = keep_only(eng, em, 0, 0)
    assert (kept.rows, kept.cols, kept.layout) == (2, 3, Layout.FULL_MATRIX)


def test_exact_fill_shifts_reduce_to_flat_rotations():
    """On matrices exactly filling the vector, the whole-row shift IS a flat
    rotation by cols and the raw shift IS a flat rotation by one."""
    rng = np.random.default_rng(12)
    eng = grid_engine(8)
    M = rng.uniform(-1, 1, (2, 4))
    em = encode_matrix(eng, M, Layout.FULL_MATRIX)
    flat = em.parts[0]
    assert np.array_equal(complete_row_shift(eng, em).parts[0].slots,
                          eng.rotate(flat, 4).slots)
    assert np.array_equal(incomplete_column_shift(eng, em).parts[0].slots,
                          eng.rotate(flat, 1).slots)


def test_windowed_sum_oracle():
    rng = np.random.default_rng(9)
    eng = grid_engine(32)
    v = rng.uniform(-1, 1, 32)
    sv = eng.encrypt(v)
    for count, stride in [(1, 1), (3, 1), (5, 2), (8, 4), (7, -1), (2, -3)]:
        got = eng.decrypt(windowed_sum(eng, sv, count, stride))
        want = sum(np.roll(v, -t * stride) for t in range(count))
        assert np.allclose(got, want, atol=1e-12)
