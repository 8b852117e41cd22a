#!/usr/bin/env python3
"""
Script to register all strategies with the strategy manager.
"""

from strategies.strategy_manager import StrategyManager
from strategies.ddsa import DdsaStrategy
from strategies.onebit import OneBitStrategy


def register_strategies() -> StrategyManager:
    """Register all strategies with the strategy manager."""
    manager = StrategyManager()

    manager.add_strategy(DdsaStrategy())
    manager.add_strategy(OneBitStrategy())

    manager.set_default_strategy("ddsa")

    return manager


if __name__ == "__main__":
    manager = register_strategies()

    for name in manager.names():
        strategy = manager.get_strategy_by_name(name)
        print(f"{name} ({strategy.category}): {strategy.description}")
