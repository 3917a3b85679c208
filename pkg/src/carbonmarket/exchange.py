"""Constant-reserve-fraction exchange: pricing curve and quotes.

The exchange holds a stablecoin reserve C that is kept equal to a constant
fraction F of the token market cap:  C = F * s * P(s).  Together with the
marginal-pricing identity P(s) = dC/ds this pins the whole curve relative to
an anchor point (s0, C0):

    P(s) = C0 / (F * s) * (s / s0)^(1/F)          spot price
    C(s) = C0 * (s / s0)^(1/F)                    reserve law
    t    = C0 * ((1 + e/s0)^(1/F) - 1)            cash moved for e tokens
    e    = s0 * ((t/C0 + 1)^F - 1)                tokens moved for t cash

Quotes anchor the formulas at the exchange's *current* supply and reserve,
which always lie on the curve (within rounding), so consecutive quotes are
path independent.  Raw results are computed in double precision via
expm1/log1p (no cancellation for small trades) and then rounded onto the
1e-6 grid in the exchange-conservative direction: cash the user pays rounds
up, cash or tokens the user receives round down, tokens the user surrenders
round up.  That one-sided policy is what keeps the reserve solvent.

Sign conventions follow the quote object: ``tokens_delta`` is positive when
the caller buys tokens, ``cash_delta`` is positive when the caller pays
cash, and the two always carry the same sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ErrorCode, reject
from .fixed import ZERO, Fixed, Money, Quantity


@dataclass
class ExchangeState:
    """Curve parameters: reserve fraction, live reserve, and the anchor
    (baseline) captured at bootstrap or at the last market adjustment."""

    fraction: Fixed
    reserve: Money
    baseline_supply: Quantity
    baseline_reserve: Money

    def copy(self) -> "ExchangeState":
        return ExchangeState(self.fraction, self.reserve,
                             self.baseline_supply, self.baseline_reserve)


@dataclass(frozen=True)
class Quote:
    """One priced trade: token leg, cash leg, and the post-trade spot price.

    Both deltas are nonzero and share the same sign (buy: both positive)."""

    tokens_delta: Quantity
    cash_delta: Money
    price_after: Money


def validate_fraction(fraction: Fixed) -> Fixed:
    if not ZERO < fraction <= Fixed.parse(1):
        raise reject(ErrorCode.INVALID_FRACTION,
                     f"reserve fraction must lie in (0, 1], got {fraction}")
    return fraction


# ---------------------------------------------------------------------------
# Raw curve math (double precision, unrounded)
# ---------------------------------------------------------------------------

def spot_price_raw(fraction: float, supply0: float, reserve0: float,
                   supply: float) -> float:
    """P(s) against the anchor (s0, C0)."""
    return reserve0 / (fraction * supply) * (supply / supply0) ** (1.0 / fraction)


def reserve_at_raw(fraction: float, supply0: float, reserve0: float,
                   supply: float) -> float:
    """C(s) against the anchor (s0, C0)."""
    return reserve0 * (supply / supply0) ** (1.0 / fraction)


def cash_for_tokens_raw(fraction: float, supply: float, reserve: float,
                        tokens: float) -> float:
    """Cash moved when trading `tokens` at anchor (supply, reserve).

    Positive tokens: cash the buyer must pay.  Negative tokens: negative
    cash, i.e. proceeds owed to the seller.  tokens == -supply drains the
    reserve exactly.
    """
    if tokens <= -supply:
        return -reserve
    return reserve * math.expm1(math.log1p(tokens / supply) / fraction)


def tokens_for_cash_raw(fraction: float, supply: float, reserve: float,
                        cash: float) -> float:
    """Tokens moved when trading `cash` at anchor (supply, reserve).

    Positive cash buys tokens; negative cash (a withdrawal) sells them.
    cash == -reserve retires the whole supply exactly.
    """
    if cash <= -reserve:
        return -supply
    return supply * math.expm1(fraction * math.log1p(cash / reserve))


# ---------------------------------------------------------------------------
# Grid-rounded quotes
# ---------------------------------------------------------------------------

def spot_price(state: ExchangeState, supply: Quantity) -> Money:
    """Spot price at `supply` against the stored baseline, grid-rounded."""
    if supply <= ZERO:
        raise reject(ErrorCode.INVALID_SUPPLY, f"supply must be positive, got {supply}")
    raw = spot_price_raw(state.fraction.to_float(),
                         state.baseline_supply.to_float(),
                         state.baseline_reserve.to_float(),
                         supply.to_float())
    return Fixed.from_float(raw, "nearest")


def _price_after(fraction: Fixed, supply: Quantity, reserve: Money,
                 tokens: Quantity) -> Money:
    post = supply + tokens
    if post <= ZERO:
        return ZERO
    raw = spot_price_raw(fraction.to_float(), supply.to_float(),
                         reserve.to_float(), post.to_float())
    return Fixed.from_float(raw, "nearest")


def quote_buy_tokens(fraction: Fixed, supply: Quantity, reserve: Money,
                     tokens: Quantity) -> Quote:
    """Cash required (or owed) for a signed token amount.

    Rounding: a buyer's cash rounds up, a seller's proceeds round down.  A
    sell so small that its proceeds round to zero is rejected rather than
    quoted with a one-sided zero leg.
    """
    if tokens.is_zero:
        raise reject(ErrorCode.INVALID_AMOUNT, "token amount must be nonzero")
    if supply <= ZERO:
        raise reject(ErrorCode.INVALID_SUPPLY, "exchange has no outstanding supply")
    if tokens.is_negative and -tokens > supply:
        raise reject(ErrorCode.INVALID_AMOUNT,
                     f"cannot sell {-tokens} tokens against a supply of {supply}")
    raw = cash_for_tokens_raw(fraction.to_float(), supply.to_float(),
                              reserve.to_float(), tokens.to_float())
    cash = Fixed.from_float(raw, "ceil")
    if cash.is_zero:
        raise reject(ErrorCode.INVALID_AMOUNT, "trade too small to price")
    return Quote(tokens, cash, _price_after(fraction, supply, reserve, tokens))


def quote_spend_cash(fraction: Fixed, supply: Quantity, reserve: Money,
                     cash: Money) -> Quote:
    """Tokens received (or surrendered) for a signed cash amount.

    Rounding: tokens received round down, tokens surrendered round up.  A
    spend so small that the tokens received round to zero is rejected.
    """
    if cash.is_zero:
        raise reject(ErrorCode.INVALID_AMOUNT, "cash amount must be nonzero")
    if supply <= ZERO:
        raise reject(ErrorCode.INVALID_SUPPLY, "exchange has no outstanding supply")
    if cash.is_negative and -cash > reserve:
        raise reject(ErrorCode.RESERVE_EXHAUSTED,
                     f"cannot withdraw {-cash} from a reserve of {reserve}")
    raw = tokens_for_cash_raw(fraction.to_float(), supply.to_float(),
                              reserve.to_float(), cash.to_float())
    tokens = Fixed.from_float(raw, "floor")
    if tokens.is_zero:
        raise reject(ErrorCode.INVALID_AMOUNT, "trade too small to price")
    return Quote(tokens, cash, _price_after(fraction, supply, reserve, tokens))
