""" Exceptions, deterministic randomness and digests shared by every msktap module. """

from typing import Any
import hashlib

import numpy as np


class DomainError(ValueError):
    """Raised when a value lies outside its admissible domain."""


class ConfigurationError(ValueError):
    """Raised when a configuration document (or a kernel set built from it) is invalid."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class KernelDefinitionError(ValueError):
    """Raised when a kernel evaluates to a negative or non-finite value, or is not normalized."""


class InstanceTooLargeError(ValueError):
    """Raised by the oracle when asked to evaluate an instance it refuses to brute force."""


class StepSizeError(RuntimeError):
    """Raised before any state mutation when a time step violates the CFL limit."""


class NegativityError(RuntimeError):
    """Raised when a step produces a value below the negativity tolerance."""

    def __init__(self, step: int, scale: str, subsystem: int, cell: int, value: float):
        self.step = step
        self.scale = scale
        self.subsystem = subsystem
        self.cell = cell
        self.value = value
        super().__init__(
            f"Negative value {value:.3e} at step {step} in {scale}{subsystem}, cell {cell}. "
            + "The time step is too large for the gain/loss stiffness."
        )


def seed_from_phrase(seed_phrase: str) -> int:
    # 128 bits is plenty for numpy's SeedSequence
    return int(hashlib.sha256(seed_phrase.encode()).hexdigest(), 16) % (1 << 128)


class DeterministicRandomCore:
    """
    This class allows the random generator to be seeded once (from a phrase) and used many times.
    Two cores seeded with the same phrase produce identical streams.
    """

    rng: Any

    def __init__(self, seed_phrase: str):
        self.rng = None
        self.seed_random(seed_phrase)

    def seed_random(self, seed_phrase: str) -> None:
        self.rng = np.random.default_rng(seed_from_phrase(seed_phrase))

    def get_random_int(self, min_num: int, max_num: int) -> int:
        return int(self.rng.integers(min_num, max_num + 1))

    def uniform(self, shape: tuple[int, ...], low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """
        Draw an array of uniform samples.

        Args:
            shape (tuple[int, ...]): Shape of the array to draw
            low (float): Lower bound (inclusive)
            high (float): Upper bound (exclusive)

        Returns:
            np.ndarray: Samples in [low, high)
        """
        return self.rng.uniform(low, high, size=shape)


def get_digest_of_string(hash_input: str) -> str:
    return hashlib.sha256(hash_input.encode()).hexdigest()
