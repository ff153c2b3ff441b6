import pytest

from fracschur import ContactState, MaterialParams


def test_defaults_match_reference_constants():
    m = MaterialParams()
    assert m.lame_lambda == 1.2e10
    assert m.shear == 1.2e10
    assert m.biot == 0.47
    assert m.compressibility == 4.559e-10
    assert m.porosity_ref == 1.3e-2
    assert m.solid_thermal_expansion == 9.66e-6
    assert m.fluid_density == 998.2
    assert m.dim == 2


def test_drained_modulus():
    m = MaterialParams()
    assert m.drained_modulus == pytest.approx(2 * 1.2e10 / 2 + 1.2e10, rel=1e-15)
    m3 = m.with_(dim=3)
    assert m3.drained_modulus == pytest.approx(2 * 1.2e10 / 3 + 1.2e10, rel=1e-15)


def test_accumulation_scale():
    m = MaterialParams(dt=0.5, cell_volume=2.0)
    assert m.accumulation_scale == pytest.approx(998.2 * 2.0 / 0.5, rel=1e-15)


def test_derived_inverse_M():
    # (biot - porosity_ref)(1 - biot) / (lambda + 2G/3) with the defaults
    m = MaterialParams()
    want = (0.47 - 1.3e-2) * (1 - 0.47) / (1.2e10 + 2 * 1.2e10 / 3)
    assert m.derived_inverse_M == pytest.approx(want, rel=1e-15)


def test_with_makes_modified_copy():
    m = MaterialParams()
    m2 = m.with_(dt=2.0)
    assert m.dt == 1.0 and m2.dt == 2.0
    assert m2.biot == m.biot


@pytest.mark.parametrize(
    "field,value",
    [
        ("lame_lambda", 0.0),
        ("shear", -1.0),
        ("biot", 0.0),
        ("biot", 1.5),
        ("porosity_ref", 1.0),
        ("porosity_ref", -0.1),
        ("compressibility", 0.0),
        ("dt", 0.0),
        ("dim", 4),
        ("normal_jump", -1e-3),
    ],
)
def test_invalid_params_rejected(field, value):
    with pytest.raises(ValueError):
        MaterialParams(**{field: value})


def test_contact_state_tags():
    assert ContactState.STICK.tag == "stick"
    assert ContactState.from_tag("slide") is ContactState.SLIDE
    assert ContactState.from_tag("OPEN") is ContactState.OPEN
    with pytest.raises(ValueError):
        ContactState.from_tag("wobble")
