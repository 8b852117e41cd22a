"""
Strategy Manager for phasealign.

This module contains the StrategyManager class for registering and looking up
phase-alignment strategies.
"""

from typing import Dict, List, Optional

from errors import InvalidArgumentError
from strategies.strategy import Strategy


class StrategyManager:
    """Manager for registering and retrieving strategies."""

    def __init__(self):
        """Initialize the strategy manager."""
        self.strategies_by_name: Dict[str, Strategy] = {}
        self.strategies_by_category: Dict[str, List[str]] = {}
        self.default_strategy: Optional[str] = None

    def add_strategy(self, strategy: Strategy) -> None:
        """
        Register a strategy with the manager.

        Args:
            strategy: The strategy to register
        """
        self.strategies_by_name[strategy.name] = strategy

        names = self.strategies_by_category.setdefault(strategy.category, [])
        if strategy.name not in names:
            names.append(strategy.name)

    def get_strategy_by_name(self, name: str) -> Strategy:
        """
        Get a strategy by name.

        Args:
            name: The name of the strategy

        Returns:
            The registered strategy

        Raises:
            InvalidArgumentError: If no strategy has that name
        """
        if name not in self.strategies_by_name:
            known = ", ".join(sorted(self.strategies_by_name))
            raise InvalidArgumentError(f"Strategy '{name}' not found (known: {known})")
        return self.strategies_by_name[name]

    def get_strategies_in_category(self, category: str) -> List[str]:
        return list(self.strategies_by_category.get(category, []))

    def set_default_strategy(self, name: str) -> None:
        if name not in self.strategies_by_name:
            raise InvalidArgumentError(f"Strategy '{name}' not found")
        self.default_strategy = name

    def get_default_strategy(self) -> Optional[Strategy]:
        if self.default_strategy is None:
            return None
        return self.strategies_by_name[self.default_strategy]

    def names(self) -> List[str]:
        return sorted(self.strategies_by_name)
