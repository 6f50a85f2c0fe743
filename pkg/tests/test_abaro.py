import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bufstc.abaro import (DegenerateCodeError, code_regressor, instantaneous_cost, lms_code_step,
                          normalize_code, project_to_structure, sg_update)
from bufstc.coding import AdjustableCode, alamouti_encode


def setup_case(rng, n=2, t=2):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    h = rng.standard_normal((n * t, n)) + 1j * rng.standard_normal((n * t, n))
    s = np.array([1.0, -1.0])
    return AdjustableCode(v).v_eq(t), h, s


class TestSgUpdate:
    def test_zero_residual(self, rng):
        v_eq, h, s = setup_case(rng)
        r = v_eq @ h @ s
        np.testing.assert_allclose(sg_update(v_eq, r, h, s, 0.1, n=2), np.diag(v_eq)[:2], atol=1e-14)

    def test_zero_step(self, rng):
        v_eq, h, s = setup_case(rng)
        r = rng.standard_normal(4) + 0j
        np.testing.assert_array_equal(sg_update(v_eq, r, h, s, 0.0, n=2), np.diag(v_eq)[:2])

    def test_shape_mismatch(self, rng):
        v_eq, h, s = setup_case(rng)
        with pytest.raises(ValueError):
            sg_update(v_eq, np.zeros(3), h, s, 0.1)


class TestProjection:
    def test_round_trip(self):
        v = np.array([2, 3j])
        np.testing.assert_array_equal(project_to_structure(np.kron(np.eye(2), np.diag(v)), 2), v)

    def test_dense_input(self):
        m = np.array([[1, 5], [7, 2]], dtype=complex)
        np.testing.assert_array_equal(project_to_structure(m), [1, 2])

    def test_bad_length(self):
        with pytest.raises(ValueError):
            project_to_structure(np.eye(3), 2)


class TestNormalize:
    def test_examples(self):
        np.testing.assert_allclose(normalize_code([3, 4], 1.0), [0.6, 0.8])
        v = np.array([1 + 1j, 1 - 1j])
        np.testing.assert_allclose(normalize_code(v, 2.0), v)
        with pytest.raises(DegenerateCodeError):
            normalize_code([0, 0], 1.0)

    @given(st.lists(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False),
                    min_size=1, max_size=4),
           st.floats(0.1, 10))
    def test_budget_and_idempotence(self, v, p_v):
        out = normalize_code(v, p_v)
        assert abs(np.linalg.norm(out) - p_v) <= 1e-12 * p_v
        np.testing.assert_allclose(normalize_code(out, p_v), out, rtol=1e-12)

    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 10))
    def test_relay_ordering_unchanged(self, seed, p_v):
        g = np.random.default_rng(seed)
        v = g.standard_normal(2) + 1j * g.standard_normal(2)
        links = g.standard_normal((3, 2)) + 1j * g.standard_normal((3, 2))
        before = [np.linalg.norm(v * gk) for gk in links]
        after = [np.linalg.norm(normalize_code(v, p_v) * gk) for gk in links]
        assert list(np.argsort(before)) == list(np.argsort(after))


def test_regressor_matches_direct_product(rng):
    h = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    c = alamouti_encode(1 - 1j, 0.5j)
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    b = code_regressor(h, c, scale=0.7)
    np.testing.assert_allclose(b @ v, (0.7 * h @ np.diag(v) @ c).ravel(), atol=1e-14)


def test_structure_preserved(rng):
    v_eq, h, s = setup_case(rng)
    r = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    v = sg_update(v_eq, r, h, s, 0.05, n=2)
    full = AdjustableCode(v).v_eq(2)
    assert np.count_nonzero(full - np.diag(np.diag(full))) == 0
    np.testing.assert_array_equal(np.diag(full)[:2], np.diag(full)[2:])


def test_lms_step_reduces_cost(rng):
    b = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    r = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    v = np.ones(2, dtype=complex)
    mu = 0.5 / np.linalg.norm(b, 2) ** 2
    assert instantaneous_cost(r, b, lms_code_step(v, r, b, mu)) < instantaneous_cost(r, b, v)
