from nq_ricci.scalar.evaluate import (
    Field,
    default_steps,
    evaluate_jet,
    evaluate_value,
    field_jet,
    field_scale,
    field_sum,
    finite_difference_jet,
    jet_to_expression,
)
from nq_ricci.scalar.expression import (
    ONE,
    ZERO,
    Add,
    Const,
    Div,
    Expression,
    Func,
    Mul,
    Neg,
    Pow,
    Sub,
    Var,
    const,
    format_expression,
)
from nq_ricci.scalar.jets import Jet, coefficient_count
from nq_ricci.scalar.parser import parse_expression

__all__ = [
    "Add", "Const", "Div", "Expression", "Field", "Func", "Jet", "Mul", "Neg", "ONE",
    "Pow", "Sub", "Var", "ZERO", "coefficient_count", "const", "default_steps",
    "evaluate_jet", "evaluate_value", "field_jet", "field_scale", "field_sum",
    "finite_difference_jet", "format_expression", "jet_to_expression", "parse_expression",
]
