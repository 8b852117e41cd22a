"""
Strategies package for phasealign.

This package contains the Strategy base class, the StrategyManager registry and
the phase-alignment algorithms run by the experiment harness.
"""

from strategies.strategy import Strategy
from strategies.strategy_manager import StrategyManager
from strategies.ddsa import DdsaStrategy
from strategies.onebit import OneBitStrategy

__all__ = [
    'Strategy',
    'StrategyManager',
    'DdsaStrategy',
    'OneBitStrategy'
]
