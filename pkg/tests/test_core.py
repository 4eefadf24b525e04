"""Probability primitives: hand-computed values and algebraic properties."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beliefmesh.core import (
    AllZeroError,
    Categorical,
    DimMismatchError,
    DirichletCounts,
    GenerativeModel,
    InvalidModelError,
    NegativeEntryError,
    NonFiniteError,
    Policy,
    entropy,
    js_divergence,
    kl_divergence,
    load_model,
    model_from_dict,
    model_to_dict,
    normalize,
    save_model,
    softmax,
    validate_model,
)


def simplex(n, max_n=None):
    """Strategy producing a random point on the n-simplex (or up to max_n)."""
    dim = st.just(n) if max_n is None else st.integers(n, max_n)
    return dim.flatmap(
        lambda d: st.lists(
            st.floats(1e-3, 1e3, allow_nan=False, allow_infinity=False), min_size=d, max_size=d
        )
    ).map(lambda w: np.array(w) / np.sum(w))


class TestNormalize:
    def test_scales_to_unit_sum(self):
        c = normalize([2.0, 6.0])
        np.testing.assert_allclose(c.probs, [0.25, 0.75])

    def test_rejects_all_zero(self):
        with pytest.raises(AllZeroError):
            normalize([0.0, 0.0, 0.0])

    def test_rejects_negative(self):
        with pytest.raises(NegativeEntryError):
            normalize([0.5, -0.1, 0.6])

    def test_rejects_matrix(self):
        with pytest.raises(DimMismatchError):
            normalize(np.ones((2, 2)))

    @given(simplex(1, 16))
    def test_idempotent(self, p):
        np.testing.assert_allclose(normalize(p).probs, normalize(normalize(p)).probs)


class TestSoftmax:
    def test_known_value(self):
        # e^0 : e^{-ln 3} = 3 : 1
        c = softmax([0.0, -np.log(3.0)])
        np.testing.assert_allclose(c.probs, [0.75, 0.25], atol=1e-12)

    def test_rejects_nan(self):
        with pytest.raises(NonFiniteError):
            softmax([0.0, np.nan])

    def test_rejects_inf(self):
        with pytest.raises(NonFiniteError):
            softmax([np.inf, 0.0])

    def test_extreme_logits_stay_finite(self):
        c = softmax([1e6, 1e6 - 1.0])
        assert np.isfinite(c.probs).all()
        np.testing.assert_allclose(c.probs.sum(), 1.0)

    @given(
        st.lists(st.floats(-50, 50), min_size=2, max_size=8),
        st.floats(-100, 100, allow_nan=False),
    )
    def test_shift_invariance(self, logits, shift):
        z = np.array(logits)
        np.testing.assert_allclose(softmax(z).probs, softmax(z + shift).probs, atol=1e-12)


class TestEntropy:
    def test_known_value(self):
        assert entropy([0.25, 0.75]) == pytest.approx(0.5623351446188083, abs=1e-12)

    def test_delta_is_zero(self):
        assert entropy([0.0, 1.0, 0.0]) == 0.0

    @pytest.mark.parametrize("n", range(2, 33))
    def test_uniform_is_log_n(self, n):
        assert entropy(np.full(n, 1.0 / n)) == pytest.approx(np.log(n), abs=1e-12)

    @given(simplex(2, 12))
    def test_bounds(self, p):
        h = entropy(p)
        assert -1e-12 <= h <= np.log(len(p)) + 1e-9


class TestKL:
    def test_known_value(self):
        # 0.9 ln 1.8 + 0.1 ln 0.2
        assert kl_divergence([0.9, 0.1], [0.5, 0.5]) == pytest.approx(0.3680642071684971, abs=1e-12)

    def test_self_is_zero(self):
        assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_infinite_when_support_escapes(self):
        assert kl_divergence([0.5, 0.5], [1.0, 0.0]) == np.inf

    def test_zero_q_entry_contributes_nothing(self):
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(np.log(2.0), abs=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatchError):
            kl_divergence([0.5, 0.5], [1.0 / 3] * 3)

    @given(simplex(2, 8), st.data())
    def test_nonnegative(self, q, data):
        p = data.draw(simplex(len(q)))
        assert kl_divergence(q, p) >= -1e-12

    @given(simplex(2, 8))
    def test_zero_iff_equal(self, p):
        assert kl_divergence(p, p) == pytest.approx(0.0, abs=1e-12)


class TestJS:
    def test_disjoint_deltas_hit_ln2(self):
        assert js_divergence([1.0, 0.0], [0.0, 1.0]) == pytest.approx(np.log(2.0), abs=1e-12)

    @given(simplex(2, 8), st.data())
    def test_symmetric_and_bounded(self, a, data):
        b = data.draw(simplex(len(a)))
        d_ab = js_divergence(a, b)
        d_ba = js_divergence(b, a)
        assert d_ab == pytest.approx(d_ba, abs=1e-12)
        assert -1e-12 <= d_ab <= np.log(2.0) + 1e-12


class TestCategorical:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            Categorical(np.array([0.5, 0.6]))

    def test_rejects_negative(self):
        with pytest.raises(NegativeEntryError):
            Categorical(np.array([-0.1, 1.1]))

    def test_accepts_within_tolerance(self):
        Categorical(np.array([0.5, 0.5 + 5e-10]))

    def test_probs_are_read_only(self):
        c = Categorical.uniform(3)
        with pytest.raises(ValueError):
            c.probs[0] = 1.0

    def test_delta(self):
        np.testing.assert_array_equal(Categorical.delta(1, 3).probs, [0.0, 1.0, 0.0])


class TestDirichletCounts:
    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            DirichletCounts(np.array([[1.0, 0.0], [1.0, 1.0]]))

    def test_read_only(self):
        dc = DirichletCounts(np.ones((2, 2)))
        with pytest.raises(ValueError):
            dc.counts[0, 0] = 5.0


class TestPolicy:
    def test_horizon_and_width(self):
        p = Policy(((0, 1), (1, 0)))
        assert p.horizon == 2
        assert p.num_factors == 2

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Policy(())

    def test_rejects_ragged(self):
        with pytest.raises(ValueError):
            Policy(((0, 1), (1,)))


def tiny_model(**overrides) -> GenerativeModel:
    """Two-state single factor, one binary modality, stay/flip controls."""
    fields = dict(
        factor_dims=(2,),
        modality_dims=(2,),
        A=(np.array([[0.9, 0.1], [0.1, 0.9]]),),
        B=(np.stack([np.eye(2), np.array([[0.0, 1.0], [1.0, 0.0]])], axis=2),),
        C=(np.array([0.0, 0.0]),),
        D=(Categorical.uniform(2),),
        E=Categorical.uniform(2),
        policies=(Policy(((0,),)), Policy(((1,),))),
    )
    fields.update(overrides)
    return GenerativeModel(**fields)


class TestValidateModel:
    def test_clean_model_has_no_violations(self):
        assert validate_model(tiny_model()) == []

    def test_bad_a_column(self):
        m = tiny_model(A=(np.array([[0.9, 0.3], [0.1, 0.9]]),))
        (v,) = validate_model(m)
        assert "A[0]" in v and "1.2" in v

    def test_bad_b_column(self):
        b = np.stack([np.eye(2), np.eye(2)], axis=2).copy()
        b[0, 0, 1] = 0.5
        m = tiny_model(B=(b,))
        (v,) = validate_model(m)
        assert "B[0]" in v

    def test_negative_entry_located(self):
        a = np.array([[1.1, 0.1], [-0.1, 0.9]])
        m = tiny_model(A=(a,))
        assert any("negative" in v for v in validate_model(m))

    def test_policy_control_out_of_range(self):
        m = tiny_model(policies=(Policy(((0,),)), Policy(((2,),))))
        assert any("out of range" in v for v in validate_model(m))

    def test_e_dim_must_match_policy_count(self):
        m = tiny_model(E=Categorical.uniform(3))
        assert any(v.startswith("E:") for v in validate_model(m))

    def test_d_dim_mismatch(self):
        m = tiny_model(D=(Categorical.uniform(3),))
        assert any(v.startswith("D[0]") for v in validate_model(m))


class TestModelIO:
    def test_roundtrip(self, tmp_path):
        m = tiny_model()
        path = tmp_path / "model.json"
        save_model(m, path)
        loaded = load_model(path)
        assert loaded.factor_dims == m.factor_dims
        np.testing.assert_array_equal(loaded.A[0], m.A[0])
        np.testing.assert_array_equal(loaded.B[0], m.B[0])
        assert loaded.policies == m.policies

    def test_invalid_document_reports_violations(self, tmp_path):
        doc = model_to_dict(tiny_model())
        doc["A"][0][0][0] = 0.5  # break a column sum
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(InvalidModelError) as exc:
            load_model(path)
        assert any("A[0]" in v for v in exc.value.violations)

    def test_missing_field(self):
        doc = model_to_dict(tiny_model())
        del doc["E"]
        with pytest.raises(InvalidModelError):
            model_from_dict(doc)

    def test_unknown_field(self):
        doc = model_to_dict(tiny_model())
        doc["extra"] = 1
        with pytest.raises(InvalidModelError):
            model_from_dict(doc)
