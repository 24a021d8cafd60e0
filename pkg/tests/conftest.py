import sympy as sp
import pytest

from noetherkit import Context, Metric, PerturbedLagrangian, SYMBOLIC


@pytest.fixture
def ctx1():
    return Context(("x",))


@pytest.fixture
def ctx2():
    return Context(("x", "y"))


def flat_lagrangian(ctx, V0, V1, order=1):
    n = ctx.dimension
    g = Metric.from_rows(ctx, [[sp.Integer(i == j) for j in range(i + 1)] for i in range(n)])
    h = Metric.from_rows(ctx, [[0] * (i + 1) for i in range(n)])
    return PerturbedLagrangian(ctx, g, h, V0, V1, order)


@pytest.fixture
def inverse_square():
    """1D attractive inverse-square problem with a 1/t^2 perturbation."""
    ctx = Context(("x",), parameters={"a": SYMBOLIC, "b": SYMBOLIC})
    x, t = ctx.xs[0], ctx.t
    a, b = ctx.symbol("a"), ctx.symbol("b")
    return flat_lagrangian(ctx, -a / x**2, -b * x**2 / (2 * t**2))


@pytest.fixture
def oscillator():
    ctx = Context(("x",))
    x = ctx.xs[0]
    return flat_lagrangian(ctx, x**2 / 2, 0)


@pytest.fixture
def henon_heiles():
    ctx = Context(("x", "y"))
    x, y = ctx.xs
    return flat_lagrangian(ctx, (x**2 + y**2) / 2, x**2 * y - y**3 / 3)
