from __future__ import annotations

from datetime import date, timedelta

import numpy as np
import pytest

from cryptoforecast import OhlcvRecord, PriceSeries


def make_series(closes, start=date(2019, 1, 1), symbol="test", with_volume=True) -> PriceSeries:
    """Consecutive daily candles around the given closes."""
    records = []
    for i, close in enumerate(closes):
        close = float(close)
        records.append(
            OhlcvRecord(
                date=start + timedelta(days=i),
                open=close * 0.99,
                high=close * 1.05,
                low=close * 0.95,
                close=close,
                volume=1000.0 + i if with_volume else None,
                market_cap=close * 1e6 if with_volume else None,
            )
        )
    return PriceSeries(records=tuple(records), symbol=symbol)


def random_walk_series(n, start=date(2018, 1, 1), seed=0, symbol="walk", base=100.0) -> PriceSeries:
    rng = np.random.default_rng(seed)
    closes = base * np.exp(np.cumsum(rng.normal(0.0, 0.02, size=n)))
    return make_series(closes, start=start, symbol=symbol)


@pytest.fixture
def small_series() -> PriceSeries:
    return make_series([10, 11, 12, 13, 14])
