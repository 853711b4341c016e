from .pricing import (
    PricingInstance,
    PricingOracle,
    expected_negative_profit,
    mnl_choice_probs,
    pricing_oracle,
    production_cost,
)
from .strategic import StrategicInstance, StrategicOracle, strategic_oracle, strategic_response
from .synthetic import (
    PerformativeQuadraticOracle,
    TestFunction,
    abs_sum,
    linear,
    norm,
    performative_quadratic,
    quadratic,
    synthetic_instance,
)

__all__ = [
    "PricingInstance", "PricingOracle", "expected_negative_profit", "mnl_choice_probs",
    "pricing_oracle", "production_cost", "StrategicInstance", "StrategicOracle",
    "strategic_oracle", "strategic_response", "PerformativeQuadraticOracle", "TestFunction",
    "abs_sum", "linear", "norm", "performative_quadratic", "quadratic", "synthetic_instance",
]
