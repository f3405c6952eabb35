import numpy as np
import pytest

from ratnlevp.errors import UnknownFunctionDescriptor
from ratnlevp.functions import as_scalar_function, parse_descriptor


def test_poly_descriptor():
    f = parse_descriptor("poly(4)")
    assert f(2.0) == 16 and f.degree == 4 and f.descriptor == "poly(4)"


def test_exp_descriptor():
    f = parse_descriptor("exp(-1)")
    assert f(0) == 1
    assert np.isclose(f(1.0), np.exp(-1))


def test_expm1_descriptor():
    f = parse_descriptor("expm1(1)")
    assert f(0) == 0
    assert np.isclose(f(1e-10), 1e-10, rtol=1e-12)


def test_recip_descriptor_and_pole():
    f = parse_descriptor("recip(1)")
    assert np.isclose(f(0), 1.0) and np.isclose(f(3), -0.5)
    assert f.poles == ((1 + 0j, -1 + 0j),)


def test_vectorized():
    f = parse_descriptor("poly(2)")
    np.testing.assert_allclose(f(np.array([1, 2, 3j])), [1, 4, -9])


@pytest.mark.parametrize("text", ["sin(1)", "poly(1.5)", "exp(a)", "exp", ""])
def test_unknown_descriptor(text):
    with pytest.raises(UnknownFunctionDescriptor):
        parse_descriptor(text)


def test_as_scalar_function():
    assert as_scalar_function("poly(2)")(3) == 9
    assert as_scalar_function(lambda z: z + 1)(1) == 2
    with pytest.raises(TypeError):
        as_scalar_function(3)
