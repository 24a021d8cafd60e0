import sympy as sp
import pytest

from noetherkit import Context, ContextError, ParseError, UnknownIdentifierError, parse, print_expression
from noetherkit.ops import DomainError, VelocityError, evaluate, substitute, total_time_derivative


class TestContext:
    def test_velocity_names(self, ctx2):
        assert ctx2.velocities == ("xdot", "ydot")
        assert ctx2.dimension == 2

    def test_duplicate_names_rejected(self):
        with pytest.raises(ContextError):
            Context(("x", "x"))
        with pytest.raises(ContextError):
            Context(("x",), parameters={"xdot": 1})

    def test_empty_rejected(self):
        with pytest.raises(ContextError):
            Context(())

    def test_numeric_bindings_are_exact(self):
        ctx = Context(("x",), parameters={"a": 0.1, "b": 3})
        binds = ctx.numeric_bindings()
        assert binds[ctx.symbol("a")] == sp.Rational(1, 10)
        assert binds[ctx.symbol("b")] == 3


class TestParse:
    def test_basic_arithmetic(self, ctx1):
        x = ctx1.xs[0]
        assert parse("x^2 + 2*x - 1", ctx1) == x**2 + 2 * x - 1

    def test_unary_minus_binds_looser_than_power(self, ctx1):
        x = ctx1.xs[0]
        assert parse("-x^2", ctx1) == -(x**2)

    def test_rational_exponent(self, ctx1):
        x = ctx1.xs[0]
        assert parse("x^(1/2)", ctx1) == sp.sqrt(x)
        assert parse("x^(-2)", ctx1) == x**-2

    def test_decimal_read_exactly(self, ctx1):
        assert parse("0.1", ctx1) == sp.Rational(1, 10)

    def test_functions(self, ctx1):
        t, x = ctx1.t, ctx1.xs[0]
        assert parse("sin(2*t)*cos(x)", ctx1) == sp.sin(2 * t) * sp.cos(x)
        assert parse("ln(t)", ctx1) == sp.log(t)
        assert parse("exp(t)/t", ctx1) == sp.exp(t) / t

    def test_velocities(self, ctx1):
        assert parse("xdot^2/2", ctx1) == ctx1.vs[0] ** 2 / 2

    def test_unknown_identifier(self, ctx1):
        with pytest.raises(UnknownIdentifierError) as err:
            parse("x + q", ctx1)
        assert err.value.name == "q"
        assert err.value.offset == 4

    def test_malformed(self, ctx1):
        for bad in ("x +", "(x", "x^", "sin x", "x**2", "1..2"):
            with pytest.raises(ParseError):
                parse(bad, ctx1)

    def test_offset_reported(self, ctx1):
        with pytest.raises(ParseError) as err:
            parse("x + (y", ctx1)
        assert err.value.offset >= 4


class TestPrint:
    CASES = [
        "-x^2/2 + 3*sin(2*t)/4",
        "x^(-2)",
        "2*x/(3*t)",
        "exp(t)*(x - 1)",
        "ln(t)*t^2",
        "1/2",
        "-1/(2*x^2 + 2*t^2)",
        "x^(1/2) - t^(-3/2)",
    ]

    @pytest.mark.parametrize("source", CASES)
    def test_round_trip(self, ctx1, source):
        expr = parse(source, ctx1)
        assert parse(print_expression(expr), ctx1) == expr

    def test_integer_and_symbol(self, ctx1):
        assert print_expression(sp.Integer(5)) == "5"
        assert print_expression(ctx1.xs[0]) == "x"


class TestOps:
    def test_total_time_derivative(self, ctx1):
        t, x, v = ctx1.t, ctx1.xs[0], ctx1.vs[0]
        assert total_time_derivative(t * x**2, ctx1) == x**2 + 2 * t * x * v

    def test_total_time_derivative_rejects_velocities(self, ctx1):
        with pytest.raises(VelocityError):
            total_time_derivative(ctx1.vs[0] ** 2, ctx1)

    def test_substitute_simultaneous(self, ctx2):
        x, y = ctx2.xs
        assert substitute(x * y, {x: y, y: x}) == x * y

    def test_evaluate(self, ctx1):
        x = ctx1.xs[0]
        assert evaluate(x**2, {x: 3}) == pytest.approx(9.0)

    def test_evaluate_domain_error(self, ctx1):
        x = ctx1.xs[0]
        with pytest.raises(DomainError):
            evaluate(1 / x, {x: 0})
        with pytest.raises(DomainError):
            evaluate(sp.log(x), {x: -1})
