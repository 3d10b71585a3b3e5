import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nablats.expressions import (
    BinOp,
    Call,
    ExprDomainError,
    ExprSyntaxError,
    MissingVariableError,
    Neg,
    Num,
    Var,
    differentiate,
    evaluate,
    evaluate_many,
    parse,
    to_source,
    variables,
)


class TestParse:
    def test_precedence_and_unary_minus(self):
        # -(v1^2) + 3*x1 evaluated at v1=2, x1=1 -> -4 + 3 = -1
        e = parse("-(v1^2) + 3*x1")
        assert evaluate(e, {"v1": 2.0, "x1": 1.0}) == -1.0

    def test_power_binds_tighter_than_unary_minus(self):
        assert evaluate(parse("-v1^2"), {"v1": 3.0}) == -9.0

    def test_power_is_right_associative(self):
        assert evaluate(parse("2^3^2"), {}) == 512.0

    def test_negative_exponent(self):
        assert evaluate(parse("2^-2"), {}) == 0.25

    def test_constants_fold(self):
        assert evaluate(parse("pi"), {}) == math.pi
        assert evaluate(parse("e"), {}) == math.e

    def test_whitespace_insensitive(self):
        a = parse("exp( - t ) * ( x1 + v1 )")
        b = parse("exp(-t)*(x1+v1)")
        env = {"t": 0.3, "x1": 1.5, "v1": -0.7}
        assert evaluate(a, env) == evaluate(b, env)

    def test_syntax_error_offset(self):
        with pytest.raises(ExprSyntaxError) as exc:
            parse("x1 +")
        assert exc.value.offset == 4

    def test_unknown_identifier(self):
        with pytest.raises(ExprSyntaxError):
            parse("x1 + bogus")
        with pytest.raises(ExprSyntaxError):
            parse("x0")  # indices start at 1

    def test_function_requires_parentheses(self):
        with pytest.raises(ExprSyntaxError):
            parse("sin + 1")

    def test_unbalanced_parentheses(self):
        with pytest.raises(ExprSyntaxError):
            parse("(x1 + 2")

    def test_unexpected_character(self):
        with pytest.raises(ExprSyntaxError) as exc:
            parse("x1 @ 2")
        assert exc.value.offset == 3


class TestEvaluate:
    def test_division_by_zero_names_subtree(self):
        with pytest.raises(ExprDomainError) as exc:
            evaluate(parse("1/(t-1)"), {"t": 1.0})
        assert "t - 1" in str(exc.value)

    def test_log_domain(self):
        with pytest.raises(ExprDomainError):
            evaluate(parse("log(t)"), {"t": 0.0})

    def test_sqrt_domain(self):
        with pytest.raises(ExprDomainError):
            evaluate(parse("sqrt(t)"), {"t": -4.0})

    def test_missing_variable(self):
        with pytest.raises(MissingVariableError):
            evaluate(parse("x1 + x2"), {"x1": 1.0})

    def test_evaluate_many_matches_scalar(self):
        e = parse("exp(-t)*(x1^2 - v1/2) + cos(z)")
        rng = np.random.default_rng(5)
        env = {name: rng.uniform(-2, 2, 50) for name in ("t", "x1", "v1", "z")}
        vec = evaluate_many(e, env)
        for k in range(50):
            scalar = evaluate(e, {name: env[name][k] for name in env})
            assert vec[k] == pytest.approx(scalar, rel=1e-15)


# random expression trees for the round-trip property

_leaf = st.one_of(
    st.floats(min_value=0.1, max_value=5.0, allow_nan=False).map(lambda v: Num(round(v, 3))),
    st.sampled_from(["t", "z", "x1", "x2", "v1", "v2"]).map(Var),
)


def _branch(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*/"), children, children).map(lambda t: BinOp(*t)),
        children.map(Neg),
        st.tuples(st.sampled_from(["exp", "sin", "cos"]), children).map(lambda t: Call(*t)),
        st.tuples(children, st.integers(1, 3)).map(lambda t: BinOp("^", t[0], Num(float(t[1])))),
    )


expr_trees = st.recursive(_leaf, _branch, max_leaves=12)


@given(e=expr_trees, seed=st.integers(0, 2**31 - 1))
@settings(max_examples=300, deadline=None)
def test_print_parse_round_trip(e, seed):
    rng = np.random.default_rng(seed)
    env = {name: rng.uniform(0.3, 2.0) for name in ("t", "z", "x1", "x2", "v1", "v2")}
    try:
        expected = evaluate(e, env)
    except ExprDomainError:
        return
    if not math.isfinite(expected):
        return
    round_tripped = parse(to_source(e))
    assert evaluate(round_tripped, env) == pytest.approx(expected, rel=1e-12, abs=1e-12)


class TestDifferentiate:
    def test_polynomial(self):
        # d/dx1 of x1^3 - 2*x1 = 3*x1^2 - 2
        d = differentiate(parse("x1^3 - 2*x1"), "x1")
        assert evaluate(d, {"x1": 2.0}) == 10.0

    def test_absent_variable_gives_zero(self):
        d = differentiate(parse("x1 + v1"), "z")
        assert d == Num(0.0)

    def test_chain_rule_exp(self):
        d = differentiate(parse("exp(-(t^2))"), "t")
        t = 0.7
        assert evaluate(d, {"t": t}) == pytest.approx(-2 * t * math.exp(-t * t), rel=1e-12)

    def test_quotient(self):
        d = differentiate(parse("x1 / (1 + t)"), "x1")
        assert evaluate(d, {"x1": 3.0, "t": 1.0}) == 0.5

    def test_general_power_rewrite(self):
        # d/dt t^t = t^t (log t + 1)
        d = differentiate(parse("t^t"), "t")
        t = 1.7
        expected = t**t * (math.log(t) + 1.0)
        assert evaluate(d, {"t": t}) == pytest.approx(expected, rel=1e-12)

    def test_variables_listing(self):
        assert variables(parse("exp(-t)*(x1 - v2) + z")) == {"t", "x1", "v2", "z"}


@given(e=expr_trees, var=st.sampled_from(["t", "x1", "v1", "z"]), seed=st.integers(0, 2**31 - 1))
@settings(max_examples=300, deadline=None)
def test_symbolic_derivative_matches_central_difference(e, var, seed):
    rng = np.random.default_rng(seed)
    env = {name: rng.uniform(0.4, 1.6) for name in ("t", "z", "x1", "x2", "v1", "v2")}
    h = 1e-6
    try:
        sym = evaluate(differentiate(e, var), env)
        hi = dict(env, **{var: env[var] + h})
        lo = dict(env, **{var: env[var] - h})
        fd = (evaluate(e, hi) - evaluate(e, lo)) / (2 * h)
    except ExprDomainError:
        return
    if not (math.isfinite(sym) and math.isfinite(fd)):
        return
    if max(abs(sym), abs(fd)) > 1e6:  # ill-conditioned central difference
        return
    assert sym == pytest.approx(fd, rel=1e-4, abs=1e-5)
