"""Field families: evaluation conventions, profiles, smoothing invariants."""

import numpy as np
import pytest

from ellipdim import fields


def rng_points(count, radius=3.0, seed=7):
    rng = np.random.default_rng(seed)
    return rng.uniform(-radius, radius, size=(count, 2))


def test_identity_eval():
    f = fields.IdentityField()
    assert np.array_equal(f.eval([0.3, -2.0]), np.eye(2))


def test_constant_eval_and_bounds():
    f = fields.ConstantField(np.diag([1.0, 4.0]))
    assert np.array_equal(f.eval([5.0, 1.0]), np.diag([1.0, 4.0]))
    assert f.lam == 1.0 and f.Lam == 4.0


def test_radial_piecewise_outer_side_convention():
    f = fields.RadialPiecewiseField([0.5], [1.0, 2.0])
    assert np.array_equal(f.eval([0.3, 0.0]), np.eye(2))
    assert np.array_equal(f.eval([0.5, 0.0]), 2.0 * np.eye(2))  # closed outer side
    assert np.array_equal(f.eval([0.8, 0.0]), 2.0 * np.eye(2))


def test_eval_symmetry_everywhere():
    candidates = [
        fields.IdentityField(),
        fields.ConstantField([[2.0, 0.5], [0.5, 1.0]]),
        fields.RadialPiecewiseField([1.0, 2.0], [1.0, 3.0, 2.0]),
        fields.CheckerboardField(),
        fields.ConicDecayField(),
        fields.RandomCellField(seed=3),
    ]
    pts = rng_points(500)
    for f in candidates:
        mats = f.eval_batch(pts)
        assert np.array_equal(mats, np.swapaxes(mats, 1, 2))


def test_components_match_eval():
    f = fields.RandomCellField(seed=11)
    pts = rng_points(200)
    a11, a12, a22 = f.components_batch(pts)
    mats = f.eval_batch(pts)
    assert np.array_equal(mats[:, 0, 0], a11)
    assert np.array_equal(mats[:, 0, 1], a12)
    assert np.array_equal(mats[:, 1, 1], a22)


def test_random_field_bounds_and_determinism():
    f1 = fields.RandomCellField(lam=1.0, Lam=2.0, seed=5)
    f2 = fields.RandomCellField(lam=1.0, Lam=2.0, seed=5)
    pts = rng_points(2000, radius=10.0)
    m1, m2 = f1.eval_batch(pts), f2.eval_batch(pts)
    assert np.array_equal(m1, m2)
    eigs = np.linalg.eigvalsh(m1)
    assert eigs.min() >= 1.0 - 1e-12 and eigs.max() <= 2.0 + 1e-12


def test_profile_identity():
    prof = fields.ellipticity_profile(fields.IdentityField(), [1.0, 2.0, 4.0])
    assert np.all(prof.lambda_r == 1.0) and np.all(prof.Lambda_r == 1.0)
    assert prof.ratio_inf == 1.0 and prof.provenance == "analytic"


def test_profile_conic_decay():
    prof = fields.ellipticity_profile(fields.ConicDecayField(), [1.0, 2.0, 3.0])
    assert np.allclose(prof.lambda_r, 1.0)
    assert np.allclose(prof.Lambda_r, 1.0 + np.exp(-np.array([1.0, 2.0, 3.0])))
    assert prof.lambda_inf == prof.Lambda_inf == 1.0
    assert prof.provenance == "analytic"


def test_profile_constant_diag():
    prof = fields.ellipticity_profile(fields.ConstantField(np.diag([1.0, 4.0])), [1.0, 5.0])
    assert np.all(prof.lambda_r == 1.0) and np.all(prof.Lambda_r == 4.0)
    assert prof.ratio_inf == 4.0


def test_profile_sampled_monotone_and_labeled():
    f = fields.RandomCellField(lam=1.0, Lam=2.0, cell=0.5, extent=8.0, seed=1)
    prof = fields.ellipticity_profile(f, [1.0, 2.0, 4.0], sampling_budget=1500, seed=2)
    assert prof.provenance.startswith("sampled at R_max=")
    assert np.all(np.diff(prof.lambda_r) >= 0)
    assert np.all(np.diff(prof.Lambda_r) <= 0)
    assert 1.0 - 1e-12 <= prof.lambda_r[0] <= prof.Lambda_r[0] <= 2.0 + 1e-12


def test_profile_rejects_empty_and_small_budget():
    with pytest.raises(ValueError):
        fields.ellipticity_profile(fields.IdentityField(), [])
    with pytest.raises(ValueError):
        fields.ellipticity_profile(fields.RandomCellField(), [1.0], sampling_budget=10)


def test_mollify_constant_field_is_exact():
    f = fields.ConstantField([[2.0, 0.3], [0.3, 1.0]])
    mf = fields.mollify(f, epsilon=0.05, r=1.0, r0=0.5)
    assert mf.exceptional_set_measure == 0.0
    pts = rng_points(300, radius=0.9)
    assert np.allclose(mf.eval_batch(pts), f.eval_batch(pts), atol=1e-10)


def test_mollify_checkerboard_measure_and_bounds():
    base = fields.CheckerboardField(period=1.0, low=1.0, high=2.0)
    mf = fields.mollify(base, epsilon=0.1, r=1.5, r0=0.75)
    assert mf.exceptional_set_measure <= 0.1
    pts = rng_points(10000, radius=2.5, seed=3)
    eigs = np.linalg.eigvalsh(mf.eval_batch(pts))
    assert eigs.min() >= base.lam - 1e-12
    assert eigs.max() <= base.Lam + 1e-12
    # smoothing keeps the field near the base away from the cell lines
    far = np.array([[0.4, 0.4], [-0.6, 0.35], [0.3, -0.45]])
    assert np.allclose(mf.eval_batch(far), base.eval_batch(far), atol=0.1)


def test_mollify_rejects_bad_arguments():
    with pytest.raises(ValueError):
        fields.mollify(fields.IdentityField(), epsilon=0.0, r=1.0, r0=0.5)
    with pytest.raises(ValueError):
        fields.mollify(fields.IdentityField(), epsilon=0.1, r=0.5, r0=1.0)


class _RoughStripes(fields.CoefficientField):
    """Unstructured rough family: exercises the generic grid fallback."""

    family = "rough-stripes"
    smooth = False
    boundary_trace_ok = False
    lam = 1.0
    Lam = 2.0

    def components_batch(self, pts):
        a = np.where(np.sin(40.0 * pts[:, 0]) > 0, 1.0, 2.0)
        return a, np.zeros_like(a), a.copy()

    def eval_batch(self, pts):
        a11, a12, a22 = self.components_batch(np.asarray(pts, float))
        out = np.zeros((len(a11), 2, 2))
        out[:, 0, 0] = a11
        out[:, 1, 1] = a22
        return out


def test_mollify_generic_fallback_and_refinement_error():
    rough = _RoughStripes()
    mf = fields.mollify(rough, epsilon=0.5, r=1.0, r0=0.5, max_grid=512)
    assert mf.exceptional_set_measure <= 0.5
    pts = rng_points(2000, radius=0.9, seed=9)
    eigs = np.linalg.eigvalsh(mf.eval_batch(pts))
    assert eigs.min() >= 1.0 - 1e-12 and eigs.max() <= 2.0 + 1e-12
    with pytest.raises(fields.MollifyError):
        fields.mollify(rough, epsilon=1e-4, r=2.0, r0=1.0, max_grid=64)


def test_field_spec_roundtrip():
    spec = {
        "family": "radial-piecewise",
        "n": 2,
        "params": {"breaks": [0.5], "values": [1.0, 2.0]},
    }
    f = fields.field_from_spec(spec)
    assert isinstance(f, fields.RadialPiecewiseField)
    again = fields.field_from_spec(f.spec_dict())
    assert np.array_equal(again.eval([0.7, 0.1]), f.eval([0.7, 0.1]))


def test_field_spec_errors_name_the_key():
    with pytest.raises(fields.FieldSpecError) as err:
        fields.field_from_spec({"params": {}})
    assert err.value.key == "family"
    with pytest.raises(fields.FieldSpecError) as err:
        fields.field_from_spec({"family": "nope"})
    assert err.value.key == "family"
    with pytest.raises(fields.FieldSpecError) as err:
        fields.field_from_spec({"family": "radial-piecewise", "params": {"breaks": [1.0]}})
    assert "values" in err.value.key
    with pytest.raises(fields.FieldSpecError) as err:
        fields.field_from_spec({"family": "identity", "lambda": 1.5})
    assert err.value.key == "lambda"


def test_load_field_missing_file(tmp_path):
    with pytest.raises(fields.FieldSpecError):
        fields.load_field(tmp_path / "absent.json")
