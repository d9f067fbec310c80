"""Scenario catalogue for the local-volatility rejection-probability grid.

Each row names its true dynamics by expression strings, so scenarios are
data (and picklable for worker processes). Loadings are the square root of
the local variance.
"""
from __future__ import annotations

from dataclasses import dataclass

NS = (100, 200, 500)
ALPHAS = (0.05, 0.10)

CONSTANT_NULL = "Constant volatility, null, mu_t = 1"
CONSTANT_ALT = "Constant volatility, alternative, b_t = X_t"
PROPORTIONAL_NULL = "Proportional volatility, null, mu_t = X_t^2"
PROPORTIONAL_ALT = "Proportional volatility, alternative, b_t = 2 - X_t"


@dataclass(frozen=True)
class Row:
    block: str
    label: str
    null: str  # "constant" or "proportional"
    drift: str
    loading: str
    reference: tuple  # published rejection rates, (n, alpha) in NS x ALPHAS order

    @property
    def name(self) -> str:
        return f"{self.block} | {self.label}"

    def reference_rate(self, n: int, alpha: float):
        try:
            i = NS.index(n) * 2 + ALPHAS.index(alpha)
        except ValueError:
            return None
        return self.reference[i]


_DRIFTS = [
    ("b_t = 0", "0"),
    ("b_t = 2", "2"),
    ("b_t = X_t", "x"),
    ("b_t = 2 - X_t", "2 - x"),
    ("b_t = tX_t", "t * x"),
]

TABLE1 = [
    Row(CONSTANT_NULL, _DRIFTS[0][0], "constant", _DRIFTS[0][1], "1", (0.048, 0.105, 0.056, 0.101, 0.035, 0.089)),
    Row(CONSTANT_NULL, _DRIFTS[1][0], "constant", _DRIFTS[1][1], "1", (0.055, 0.114, 0.057, 0.103, 0.044, 0.084)),
    Row(CONSTANT_NULL, _DRIFTS[2][0], "constant", _DRIFTS[2][1], "1", (0.056, 0.101, 0.041, 0.093, 0.037, 0.092)),
    Row(CONSTANT_NULL, _DRIFTS[3][0], "constant", _DRIFTS[3][1], "1", (0.048, 0.095, 0.052, 0.105, 0.051, 0.100)),
    Row(CONSTANT_NULL, _DRIFTS[4][0], "constant", _DRIFTS[4][1], "1", (0.038, 0.094, 0.060, 0.101, 0.063, 0.111)),
    Row(CONSTANT_ALT, "sqrt(mu_t) = 1 + X_t", "constant", "x", "1 + x", (0.777, 0.840, 0.898, 0.932, 0.976, 0.985)),
    Row(CONSTANT_ALT, "sqrt(mu_t) = 1 + sin(5 X_t)", "constant", "x", "1 + sin(5 * x)",
        (0.964, 0.977, 0.997, 0.999, 1.000, 1.000)),
    Row(CONSTANT_ALT, "sqrt(mu_t) = 1 + X_t exp(t)", "constant", "x", "1 + x * exp(t)",
        (0.954, 0.975, 0.987, 0.994, 0.999, 0.999)),
    Row(CONSTANT_ALT, "sqrt(mu_t) = 1 + X_t sin(5t)", "constant", "x", "1 + x * sin(5 * t)",
        (0.851, 0.908, 0.970, 0.982, 0.994, 0.995)),
    Row(CONSTANT_ALT, "sqrt(mu_t) = 1 + tX_t", "constant", "x", "1 + t * x", (0.742, 0.796, 0.883, 0.914, 0.951, 0.972)),
    Row(PROPORTIONAL_NULL, _DRIFTS[0][0], "proportional", _DRIFTS[0][1], "abs(x)",
        (0.062, 0.119, 0.044, 0.090, 0.043, 0.087)),
    Row(PROPORTIONAL_NULL, _DRIFTS[1][0], "proportional", _DRIFTS[1][1], "abs(x)",
        (0.073, 0.120, 0.056, 0.106, 0.043, 0.081)),
    Row(PROPORTIONAL_NULL, _DRIFTS[2][0], "proportional", _DRIFTS[2][1], "abs(x)",
        (0.070, 0.115, 0.055, 0.100, 0.043, 0.098)),
    Row(PROPORTIONAL_NULL, _DRIFTS[3][0], "proportional", _DRIFTS[3][1], "abs(x)",
        (0.053, 0.085, 0.055, 0.100, 0.034, 0.081)),
    Row(PROPORTIONAL_NULL, _DRIFTS[4][0], "proportional", _DRIFTS[4][1], "abs(x)",
        (0.070, 0.106, 0.062, 0.123, 0.045, 0.106)),
    Row(PROPORTIONAL_ALT, "mu_t = 1 + X_t^2", "proportional", "2 - x", "sqrt(1 + x**2)",
        (0.602, 0.673, 0.700, 0.766, 0.844, 0.884)),
    Row(PROPORTIONAL_ALT, "mu_t = 1", "proportional", "2 - x", "1", (0.832, 0.871, 0.927, 0.951, 0.979, 0.991)),
    Row(PROPORTIONAL_ALT, "mu_t = 5|X_t|^(3/2)", "proportional", "2 - x", "sqrt(5 * abs(x)**1.5)",
        (0.580, 0.669, 0.672, 0.760, 0.854, 0.902)),
    Row(PROPORTIONAL_ALT, "mu_t = 5|X_t|", "proportional", "2 - x", "sqrt(5 * abs(x))",
        (0.896, 0.932, 0.963, 0.974, 0.995, 0.998)),
    Row(PROPORTIONAL_ALT, "mu_t = (1 + X_t)^2", "proportional", "2 - x", "1 + x",
        (0.831, 0.878, 0.894, 0.929, 0.964, 0.979)),
]


def find_row(block: str, label: str) -> Row:
    for row in TABLE1:
        if row.block == block and row.label == label:
            return row
    raise KeyError(f"no catalogue row {block!r} / {label!r}")
