"""Error types shared across the simulator."""


class StabilityError(ValueError):
    """The relay feedback loop would diverge (pole magnitude too close to 1)."""


class DegenerateChannelError(ValueError):
    """A channel gain required by downstream division is (numerically) zero."""


class SingularSubcarrierError(ValueError):
    """A per-subcarrier response is too small to divide by."""

    def __init__(self, k: int, magnitude: float, what: str = "response"):
        self.k = k
        self.magnitude = magnitude
        super().__init__(
            f"singular {what} at subcarrier k={k}: |value| = {magnitude:.3e}"
        )


class FramingError(ValueError):
    """Received stream cannot be split into the expected block layout."""
