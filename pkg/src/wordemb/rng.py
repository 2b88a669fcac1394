"""Deterministic 64-bit linear congruential generator.

Both the reference (numpy) and the compiled (numba) training paths draw
every training-time decision -- subsampling, window widths, negative
samples -- from this generator, so a fixed seed yields the same decision
stream on either path.
"""

MASK64 = (1 << 64) - 1

# Knuth MMIX constants; the high 32 bits of the state are the output.
LCG_MUL = 6364136223846793005
LCG_INC = 1442695040888963407

TWO32 = 4294967296.0


def mix64(x: int) -> int:
    """splitmix64 finalizer; spreads low-entropy seeds over 64 bits."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return (x ^ (x >> 31)) & MASK64


def derive_state(seed: int, epoch: int = 0, worker: int = 0) -> int:
    """Initial LCG state for a (seed, epoch, worker) triple."""
    raw = (seed & MASK64) * 0x9E3779B97F4A7C15 + epoch * 0x632BE59BD9B4E019 + worker * 0x100001B3
    return mix64(raw)


class Lcg:
    """Minimal LCG; mirrors the inline arithmetic in the compiled kernels."""

    __slots__ = ("state",)

    def __init__(self, state: int):
        self.state = state & MASK64

    def next_u32(self) -> int:
        self.state = (self.state * LCG_MUL + LCG_INC) & MASK64
        return self.state >> 32

    def uniform(self) -> float:
        """Uniform float in [0, 1)."""
        return self.next_u32() / TWO32

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return self.next_u32() % n
