"""Phase-exact Pauli strings over packed bit vectors.

A Pauli operator on n qubits is stored as two n-bit integers (x and z,
with qubit j living at bit j-1) plus a power-of-i phase in {0,1,2,3}.
Per-qubit encoding: (x,z) = (0,0) I, (1,0) X, (0,1) Z, (1,1) Y.
Products and commutators reduce to word-wise integer bit operations,
so multiply/commutes cost O(n/64) machine words.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_LITERALS = "IXZY"  # indexed by (x | z<<1)
_CHAR_TO_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_PHASE_PREFIX = {0: "", 1: "i", 2: "-", 3: "-i"}
_PREFIX_PHASE = {"": 0, "+": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}


class DimensionError(ValueError):
    """Raised when two operands act on different qubit counts."""


class PauliParseError(ValueError):
    """Raised on malformed Pauli text; carries the failing position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.position = position


@dataclass(frozen=True)
class PauliString:
    """Immutable n-qubit Pauli operator i^phase * P_1 ... P_n."""

    n: int
    x: int
    z: int
    phase: int

    def __post_init__(self):
        mask = (1 << self.n) - 1
        if self.n < 0:
            raise DimensionError("negative qubit count")
        if self.x & ~mask or self.z & ~mask:
            raise DimensionError("bit vector wider than qubit count")
        if not 0 <= self.phase <= 3:
            raise ValueError("phase must be a power of i in {0,1,2,3}")

    # -- constructors -------------------------------------------------

    @staticmethod
    def identity(n: int) -> "PauliString":
        return PauliString(n, 0, 0, 0)

    @staticmethod
    def single(n: int, qubit: int, literal: str, phase: int = 0) -> "PauliString":
        """Pauli with one non-identity literal at `qubit` (1-based)."""
        if not 1 <= qubit <= n:
            raise DimensionError(f"qubit {qubit} out of range 1..{n}")
        xb, zb = _CHAR_TO_BITS[literal]
        return PauliString(n, xb << (qubit - 1), zb << (qubit - 1), phase)

    @staticmethod
    def from_literals(literals: dict[int, str], n: int, phase: int = 0) -> "PauliString":
        """Build from a {qubit: literal} map; unlisted qubits are I."""
        x = z = 0
        for qubit, literal in literals.items():
            if not 1 <= qubit <= n:
                raise DimensionError(f"qubit {qubit} out of range 1..{n}")
            xb, zb = _CHAR_TO_BITS[literal]
            x |= xb << (qubit - 1)
            z |= zb << (qubit - 1)
        return PauliString(n, x, z, phase)

    # -- per-qubit access ---------------------------------------------

    def literal(self, qubit: int) -> str:
        """Literal character at `qubit` (1-based)."""
        xb = (self.x >> (qubit - 1)) & 1
        zb = (self.z >> (qubit - 1)) & 1
        return _LITERALS[xb | (zb << 1)]

    @property
    def support(self) -> tuple[int, ...]:
        """Qubits carrying a non-identity literal."""
        bits = self.x | self.z
        return tuple(q for q in range(1, self.n + 1) if (bits >> (q - 1)) & 1)

    @property
    def bits(self) -> tuple[int, int]:
        return (self.x, self.z)

    def with_phase(self, phase: int) -> "PauliString":
        return PauliString(self.n, self.x, self.z, phase % 4)

    def __str__(self) -> str:
        return format_pauli(self)


def _popcount(v: int) -> int:
    return v.bit_count()


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Product a*b with the exact power-of-i phase.

    The per-qubit phase contribution is the usual g function:
    g=0 when either factor is I or both are equal, otherwise +-1
    according to the cyclic order XY=iZ, YZ=iX, ZX=iY.
    """
    if a.n != b.n:
        raise DimensionError(f"length mismatch: {a.n} vs {b.n}")
    ay = a.x & a.z
    ax = a.x & ~a.z
    az = a.z & ~a.x
    # g(Y, *): z2 - x2 ; g(X, *): z2*(2x2-1) ; g(Z, *): x2*(1-2z2)
    pos = (ay & b.z & ~b.x) | (ax & b.z & b.x) | (az & b.x & ~b.z)
    neg = (ay & b.x & ~b.z) | (ax & b.z & ~b.x) | (az & b.x & b.z)
    phase = (a.phase + b.phase + _popcount(pos) - _popcount(neg)) % 4
    return PauliString(a.n, a.x ^ b.x, a.z ^ b.z, phase)


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff the symplectic inner product of a and b vanishes mod 2."""
    if a.n != b.n:
        raise DimensionError(f"length mismatch: {a.n} vs {b.n}")
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


_PARSE_RE = re.compile(r"^(\+i|-i|\+|-|i)?([IXYZixyz]+)$")


def parse(text: str) -> PauliString:
    """Parse text like "-XIZ" or "iY"; qubit 1 is the leftmost literal."""
    stripped = text.strip()
    match = _PARSE_RE.match(stripped)
    if match is None:
        # locate the first offending character for the error message
        pos = 0
        for pos, ch in enumerate(stripped):
            if ch not in "+-iIXYZxyz":
                break
        raise PauliParseError(f"malformed Pauli text {text!r}", pos)
    prefix, body = match.group(1) or "", match.group(2)
    phase = _PREFIX_PHASE[prefix]
    x = z = 0
    for j, ch in enumerate(body.upper()):
        xb, zb = _CHAR_TO_BITS[ch]
        x |= xb << j
        z |= zb << j
    return PauliString(len(body), x, z, phase)


def format_pauli(p: PauliString, explicit_plus: bool = False) -> str:
    """Canonical text form; inverse of parse up to canonicalization."""
    body = "".join(p.literal(q) for q in range(1, p.n + 1))
    prefix = _PHASE_PREFIX[p.phase]
    if explicit_plus and p.phase == 0:
        prefix = "+"
    return prefix + body
