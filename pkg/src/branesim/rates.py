"""Rate maps: the per-action-name rate constants.

Rates are kept as exact ``Fraction`` values so propensities on rational
inputs come out as exact integers or rationals.  ``as_float`` gives the
floating-point twin used for the float-mode adequacy checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Union

Number = Union[int, float, Fraction, str]


class RatesError(ValueError):
    pass


def _as_rate(value: Number, what: str = "rate"):
    if isinstance(value, float):
        if not math.isfinite(value) or value <= 0:
            raise RatesError(f"{what} must be positive and finite, got {value!r}")
        return value
    try:
        r = Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise RatesError(f"bad {what} {value!r}") from e
    if r <= 0:
        raise RatesError(f"{what} must be positive, got {value!r}")
    return r


@dataclass(frozen=True)
class RateMap:
    """Total map from action names to positive rates."""

    rates: Mapping[str, object] = field(default_factory=dict)
    default: object = Fraction(1)

    def __post_init__(self):
        object.__setattr__(
            self, "rates", {k: _as_rate(v, f"rate of {k!r}") for k, v in dict(self.rates).items()}
        )
        object.__setattr__(self, "default", _as_rate(self.default, "default rate"))

    def __call__(self, name: str):
        return self.rates.get(name, self.default)

    def as_float(self) -> "RateMap":
        return RateMap({k: float(v) for k, v in self.rates.items()}, float(self.default))

    @property
    def exact(self) -> bool:
        return not isinstance(self.default, float) and not any(
            isinstance(v, float) for v in self.rates.values()
        )

    def __hash__(self):
        return hash((tuple(sorted(self.rates.items())), self.default))


def parse_rates(text: str) -> RateMap:
    """Parse ``name = rate`` lines; ``default = rate`` sets the fallback."""
    rates: dict[str, Fraction] = {}
    default: Number = Fraction(1)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.count("=") != 1:
            raise RatesError(f"line {lineno}: expected 'name = rate'")
        name, value = (part.strip() for part in line.split("="))
        if not name.isidentifier():
            raise RatesError(f"line {lineno}: bad action name {name!r}")
        try:
            rate = _as_rate(value, f"rate of {name!r}")
        except RatesError as e:
            raise RatesError(f"line {lineno}: {e}") from None
        if isinstance(rate, Fraction) and not math.isfinite(float(rate)):
            raise RatesError(f"line {lineno}: rate must be finite")
        if name == "default":
            default = rate
        else:
            if name in rates:
                raise RatesError(f"line {lineno}: duplicate rate for {name!r}")
            rates[name] = rate
    return RateMap(rates, default)


def load_rates(path) -> RateMap:
    with open(path, encoding="utf-8") as fh:
        return parse_rates(fh.read())


def format_rate(value) -> str:
    """Integers print bare; everything else prints as a float."""
    if isinstance(value, Fraction) and value.denominator == 1:
        return str(value.numerator)
    if isinstance(value, int):
        return str(value)
    return repr(float(value))
