import functools
from fractions import Fraction

import pytest

from ekl.field import embed_ideal, preset, unit_ideal


@functools.lru_cache(maxsize=None)
def field_config(name: str, precision: int = 128):
    return preset(name, precision)


@functools.lru_cache(maxsize=None)
def standard_lattice(name: str, precision: int = 128):
    c = field_config(name, precision)
    return embed_ideal(c.field, unit_ideal(c.field), c.cm)


@pytest.fixture(scope="session")
def qi():
    return field_config("Q(i)")


@pytest.fixture(scope="session")
def eis():
    return field_config("Q(sqrt-3)")


@pytest.fixture(scope="session", autouse=True)
def _isolated_cache(tmp_path_factory):
    from ekl.lattice import set_cache_dir

    set_cache_dir(str(tmp_path_factory.mktemp("shells")))
    yield
    set_cache_dir(None)


def fr(*xs):
    return tuple(Fraction(x) for x in xs)
