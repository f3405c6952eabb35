"""Scalar functions f_j(z) used in split-form problems.

A small fixed vocabulary is supported so that problems can be written to
and read from disk:

    poly(d)       z**d
    exp(s)        exp(s*z)
    expm1(s)      exp(s*z) - 1
    recip(a)      1/(a - z)

Any callable can still be used in memory; it simply has no descriptor.
"""
import re
from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np

from .errors import UnknownFunctionDescriptor

_DESCRIPTOR = re.compile(r"^\s*([a-z0-9_]+)\s*\(\s*([^()]*?)\s*\)\s*$")


@dataclass(frozen=True)
class ScalarFunction:
    """Vectorized scalar function with an optional text descriptor.

    ``poles`` lists simple poles as ``(location, residue)`` pairs; they are
    used to add exact principal parts when a pole lies inside a contour.
    """

    func: Callable = field(compare=False)
    descriptor: str = ""
    poles: Tuple[Tuple[complex, complex], ...] = ()
    degree: int = -1  # polynomial degree for poly(d), else -1

    def __call__(self, z):
        with np.errstate(all="ignore"):
            return self.func(np.asarray(z, dtype=complex) if np.ndim(z) else complex(z))

    def __repr__(self):
        return f"ScalarFunction({self.descriptor or self.func!r})"


def _fmt(x):
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def poly(d):
    d = int(d)
    if d < 0:
        raise ValueError("polynomial degree must be >= 0")
    return ScalarFunction(lambda z: z**d, f"poly({d})", degree=d)


def exp(scale=1.0):
    scale = float(scale)
    return ScalarFunction(lambda z: np.exp(scale * z), f"exp({_fmt(scale)})")


def expm1(scale=1.0):
    scale = float(scale)
    return ScalarFunction(lambda z: np.expm1(scale * z), f"expm1({_fmt(scale)})")


def recip(shift=1.0):
    shift = float(shift)
    # 1/(a - z) = -1/(z - a)
    return ScalarFunction(lambda z: 1.0 / (shift - z), f"recip({_fmt(shift)})",
                          poles=((complex(shift), complex(-1.0)),))


_FACTORIES = {"poly": poly, "exp": exp, "expm1": expm1, "recip": recip}


def parse_descriptor(text):
    """Build a `ScalarFunction` from a descriptor such as ``"exp(-1)"``."""
    match = _DESCRIPTOR.match(str(text))
    if not match or match.group(1) not in _FACTORIES:
        raise UnknownFunctionDescriptor(f"unknown function descriptor {text!r}; "
                                        f"expected one of {sorted(_FACTORIES)}")
    name, arg = match.groups()
    try:
        value = float(arg)
    except ValueError:
        raise UnknownFunctionDescriptor(f"bad argument in descriptor {text!r}") from None
    if name == "poly" and not value.is_integer():
        raise UnknownFunctionDescriptor(f"poly degree must be an integer in {text!r}")
    return _FACTORIES[name](value)


def as_scalar_function(f):
    if isinstance(f, ScalarFunction):
        return f
    if isinstance(f, str):
        return parse_descriptor(f)
    if callable(f):
        return ScalarFunction(f)
    raise TypeError(f"cannot interpret {f!r} as a scalar function")
