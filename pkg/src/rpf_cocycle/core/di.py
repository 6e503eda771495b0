"""Artifact container for RPF Cocycle runs."""

import threading
from typing import Any, Callable

from rpf_cocycle.config.models import Config


class ArtifactContainer:
    """
    Container of the artifacts one run derives from its configuration.

    Artifacts are registered as factories and built on first use. Singletons are built at
    most once, so the presentation, certificate and operator family are shared by every
    stage of a command. First builds run under a re-entrant lock; factories may get other
    artifacts.
    """

    def __init__(self, config: Config) -> None:
        """
        Initialize artifact container with configuration.

        Args:
            config: Validated experiment configuration
        """
        self.config = config
        self._factories: dict[str, Any] = {}
        self._singletons: dict[str, Any] = {}
        self._built: set[str] = set()
        self._lock = threading.RLock()

    def register(self, name: str, factory: Callable[[], Any] | Any, singleton: bool = True) -> None:
        """
        Register an artifact in the container.

        Args:
            name: Artifact identifier
            factory: Artifact instance or zero-argument factory
            singleton: Whether to cache the built artifact
        """
        self._factories[name] = factory
        self._built.discard(name)
        if singleton:
            self._singletons[name] = None

    def get(self, name: str) -> Any:
        """
        Get an artifact, building it on first use.

        Args:
            name: Artifact identifier

        Returns:
            Artifact instance

        Raises:
            KeyError: If artifact not registered
        """
        if name not in self._factories:
            raise KeyError(f"Artifact '{name}' not registered in container")

        factory = self._factories[name]
        if name in self._singletons:
            if name in self._built:
                return self._singletons[name]
            with self._lock:
                if name not in self._built:
                    self._singletons[name] = factory() if callable(factory) else factory
                    self._built.add(name)
            return self._singletons[name]
        return factory() if callable(factory) else factory

    def has(self, name: str) -> bool:
        return name in self._factories

    def is_built(self, name: str) -> bool:
        return name in self._built

    def clear(self) -> None:
        """Clear all registered artifacts."""
        self._factories.clear()
        self._singletons.clear()
        self._built.clear()
