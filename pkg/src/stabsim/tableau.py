"""Binary symplectic tableau with destabilizers.

Rows 1..n are destabilizers, rows n+1..2n stabilizers, row 2n+1 is the
scratch row used by deterministic measurements. Row bits are packed
integers (qubit j at bit j-1) and every non-scratch row keeps its phase
in {0, 2}, i.e. sign +-1. Gates run through Boolean update rules
derived in `kmap`; measurements follow the anticommuting-pivot /
scratch-accumulation algorithms with the basis-specific predicates.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from . import kmap, pauli
from .pauli import DimensionError, PauliString

_BASIS_OPS = {"X": "X", "Y": "Y", "Z": "Z"}


class ConsistencyError(RuntimeError):
    """An internal invariant broke (e.g. odd phase in rowsum)."""


class PreconditionError(ValueError):
    """Operation arguments violate a documented precondition."""


@dataclass(frozen=True)
class MeasurementRecord:
    operator: PauliString
    outcome: int  # +1 or -1
    deterministic: bool


class Tableau:
    """Mutable simulation state for one n-qubit stabilizer pure state."""

    def __init__(self, n: int, rng_seed: int = 0):
        if n < 1:
            raise DimensionError("tableau needs at least one qubit")
        self.n = n
        self.rng_seed = rng_seed
        self._rng = random.Random(rng_seed)
        size = 2 * n + 1
        self._x = [0] * size
        self._z = [0] * size
        self._r = [0] * size

    # -- constructors --------------------------------------------------

    @staticmethod
    def new_computational(n: int, rng_seed: int = 0) -> "Tableau":
        """|0...0>: stabilizers Z_i, destabilizers X_i."""
        t = Tableau(n, rng_seed)
        for i in range(n):
            t._x[i] = 1 << i
            t._z[n + i] = 1 << i
        return t

    @staticmethod
    def new_plus(n: int, rng_seed: int = 0) -> "Tableau":
        """|+...+>: stabilizers X_i, destabilizers Z_i."""
        t = Tableau(n, rng_seed)
        for i in range(n):
            t._z[i] = 1 << i
            t._x[n + i] = 1 << i
        return t

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n = self.n
        t.rng_seed = self.rng_seed
        t._rng = random.Random()
        t._rng.setstate(self._rng.getstate())
        t._x = list(self._x)
        t._z = list(self._z)
        t._r = list(self._r)
        return t

    # -- row access (1-based, matching the matrix layout) ---------------

    def row(self, i: int) -> PauliString:
        if not 1 <= i <= 2 * self.n + 1:
            raise DimensionError(f"row {i} out of range")
        return PauliString(self.n, self._x[i - 1], self._z[i - 1], self._r[i - 1])

    def destabilizers(self) -> list[PauliString]:
        return [self.row(i) for i in range(1, self.n + 1)]

    def stabilizers(self) -> list[PauliString]:
        return [self.row(i) for i in range(self.n + 1, 2 * self.n + 1)]

    def _set_row(self, idx0: int, p: PauliString) -> None:
        self._x[idx0], self._z[idx0], self._r[idx0] = p.x, p.z, p.phase

    # -- gates ----------------------------------------------------------

    def apply_gate(self, gate: str, qubits: int | tuple[int, ...] | list[int]) -> "Tableau":
        """Conjugate every row by the gate's Boolean update rule."""
        qs = (qubits,) if isinstance(qubits, int) else tuple(qubits)
        try:
            rule = kmap.rule_for(gate)
        except KeyError as err:
            raise PreconditionError(str(err)) from None
        if len(qs) != rule.arity:
            raise PreconditionError(
                f"gate {gate} expects {rule.arity} qubit(s), got {len(qs)}"
            )
        if len(set(qs)) != len(qs):
            raise PreconditionError("qubit indices must be distinct")
        for q in qs:
            if not 1 <= q <= self.n:
                raise DimensionError(f"qubit {q} out of range 1..{self.n}")
        masks = [1 << (q - 1) for q in qs]
        k = rule.arity
        for i in range(2 * self.n):
            m = 0
            for s, mask in enumerate(masks):
                if self._x[i] & mask:
                    m |= 1 << s
                if self._z[i] & mask:
                    m |= 1 << (k + s)
            outs = rule.tables
            for s, mask in enumerate(masks):
                if outs[rule.var_names[s]][m]:
                    self._x[i] |= mask
                else:
                    self._x[i] &= ~mask
                if outs[rule.var_names[k + s]][m]:
                    self._z[i] |= mask
                else:
                    self._z[i] &= ~mask
            self._r[i] = (self._r[i] + 2 * outs["r"][m]) % 4
        return self

    def apply_pauli(self, p: PauliString) -> "Tableau":
        """Conjugate by a Pauli: flips signs of anticommuting rows."""
        if p.n != self.n:
            raise DimensionError("Pauli width mismatch")
        for i in range(2 * self.n):
            if not pauli.commutes(self.row(i + 1), p):
                self._r[i] = (self._r[i] + 2) % 4
        return self

    # -- rowsum ----------------------------------------------------------

    def rowsum(self, h: int, k: int) -> "Tableau":
        """Replace row h by the phase-exact product (row k) * (row h).

        This is the raw subroutine the measurement algorithms build on;
        called in isolation it can legitimately break the destabilizer
        pairing (the algorithms' call patterns restore it).
        """
        if h == k:
            raise PreconditionError("rowsum needs distinct rows")
        self._rowsum0(h - 1, k - 1)
        return self

    def _rowsum0(self, h0: int, k0: int) -> None:
        prod = pauli.multiply(self.row(k0 + 1), self.row(h0 + 1))
        if prod.phase % 2 == 1:
            raise ConsistencyError("rowsum produced an odd power of i")
        self._set_row(h0, prod)

    # -- measurements ------------------------------------------------------

    def measure(
        self, qubit: int, basis: str, forced_outcome: int | None = None
    ) -> MeasurementRecord:
        """Measure one qubit in the X, Y, or Z basis."""
        if basis not in _BASIS_OPS:
            raise PreconditionError(f"unknown basis {basis!r}")
        if not 1 <= qubit <= self.n:
            raise DimensionError(f"qubit {qubit} out of range 1..{self.n}")
        op = PauliString.single(self.n, qubit, _BASIS_OPS[basis])
        return self._measure_op(op, forced_outcome)

    def joint_measure(
        self,
        ops: list[PauliString],
        forced_outcomes: list[int | None] | None = None,
    ) -> list[MeasurementRecord]:
        """Jointly measure commuting, independent Pauli operators.

        Implements the two-step reduction: collapse each operator's
        anticommuting generator set to a single representative by
        products, then substitute the signed measurement operator.
        """
        if not ops:
            return []
        for op in ops:
            if op.n != self.n:
                raise DimensionError("operator width mismatch")
            if op.phase % 2 == 1:
                raise PreconditionError("measurement operator must be Hermitian")
        for i in range(len(ops)):
            for j in range(i + 1, len(ops)):
                if not pauli.commutes(ops[i], ops[j]):
                    raise PreconditionError(
                        "joint measurement operators must mutually commute"
                    )
        if _gf2_rank([(op.x | (op.z << self.n)) for op in ops]) != len(ops):
            raise PreconditionError("joint measurement operators must be independent")
        forced = forced_outcomes or [None] * len(ops)
        return [self._measure_op(op, f) for op, f in zip(ops, forced)]

    def _anticommutes_mask(self, op: PauliString) -> list[int]:
        rows = []
        for i in range(2 * self.n):
            sym = (self._x[i] & op.z) ^ (self._z[i] & op.x)
            if sym.bit_count() % 2 == 1:
                rows.append(i)
        return rows

    def _measure_op(
        self, op: PauliString, forced_outcome: int | None
    ) -> MeasurementRecord:
        n = self.n
        anti = self._anticommutes_mask(op)
        anti_stab = [i for i in anti if i >= n]
        if anti_stab:
            b = min(anti_stab)
            for i in anti:
                if i != b and i != b - n:
                    self._rowsum0(i, b)
            # the displaced stabilizer becomes the paired destabilizer
            self._x[b - n] = self._x[b]
            self._z[b - n] = self._z[b]
            self._r[b - n] = self._r[b]
            if forced_outcome is None:
                outcome = 1 if self._rng.getrandbits(1) == 0 else -1
            else:
                outcome = forced_outcome
            signed = op if outcome == 1 else op.with_phase(op.phase + 2)
            self._set_row(b, signed)
            return MeasurementRecord(op, outcome, deterministic=False)
        # deterministic: accumulate the stabilizer product on the scratch row
        scratch = 2 * n
        self._x[scratch] = self._z[scratch] = self._r[scratch] = 0
        for i in anti:
            # i < n here: destabilizer anticommutes <=> stabilizer i appears
            self._rowsum0(scratch, i + n)
        if (self._x[scratch], self._z[scratch]) != (op.x, op.z):
            raise ConsistencyError(
                "deterministic measurement operator is not in the stabilizer group"
            )
        outcome = 1 if self._r[scratch] == op.phase else -1
        self._x[scratch] = self._z[scratch] = self._r[scratch] = 0
        if forced_outcome is not None and forced_outcome != outcome:
            raise PreconditionError(
                f"cannot force outcome {forced_outcome:+d}: "
                f"measurement is deterministic with outcome {outcome:+d}"
            )
        return MeasurementRecord(op, outcome, deterministic=True)

    # -- sign normalization ------------------------------------------------

    def normalize_signs(self) -> list[tuple[int, str]]:
        """Flip all negative stabilizer signs with single-qubit Paulis.

        Returns the (qubit, literal) fixups applied, derived from the
        product of destabilizers paired with the negative rows.
        """
        n = self.n
        fix = PauliString.identity(n)
        for i in range(n):
            if self._r[n + i] == 2:
                fix = pauli.multiply(fix, self.row(i + 1))
        fixups = [(q, fix.literal(q)) for q in fix.support]
        for q, lit in fixups:
            self.apply_gate(lit, q)
        return fixups

    # -- canonical form ------------------------------------------------------

    def canonical_generators(self, with_signs: bool = True) -> tuple[PauliString, ...]:
        """Unique reduced echelon form of the stabilizer rows over GF(2).

        Column order: all x bits (qubit 1..n), then all z bits. Signs are
        carried exactly through the row products when with_signs is set,
        otherwise zeroed.
        """
        rows = self.stabilizers()
        reduced = _rref_pauli(rows, self.n)
        if not with_signs:
            reduced = [p.with_phase(0) for p in reduced]
        return tuple(reduced)

    # -- serialization -----------------------------------------------------

    def serialize(self) -> str:
        lines = [f"n={self.n}"]
        for i in range(2 * self.n):
            lines.append(pauli.format_pauli(self.row(i + 1), explicit_plus=True))
        return "\n".join(lines) + "\n"

    @staticmethod
    def deserialize(text: str, rng_seed: int = 0) -> "Tableau":
        lines = [ln.strip() for ln in text.strip().splitlines()]
        if not lines or not lines[0].startswith("n="):
            raise ValueError("line 1: expected header 'n=<int>'")
        try:
            n = int(lines[0][2:])
        except ValueError:
            raise ValueError("line 1: malformed qubit count") from None
        if len(lines) != 2 * n + 1:
            raise ValueError(f"expected {2 * n} generator lines, got {len(lines) - 1}")
        t = Tableau(n, rng_seed)
        for k, line in enumerate(lines[1:], start=2):
            try:
                p = pauli.parse(line)
            except pauli.PauliParseError as err:
                raise ValueError(f"line {k}: {err}") from None
            if p.n != n:
                raise ValueError(f"line {k}: expected {n} literals")
            if p.phase % 2 == 1:
                raise ValueError(f"line {k}: generator sign must be +/-")
            t._set_row(k - 2, p)
        t.validate()
        return t

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "destab": [pauli.format_pauli(p, explicit_plus=True) for p in self.destabilizers()],
                "stab": [pauli.format_pauli(p, explicit_plus=True) for p in self.stabilizers()],
            }
        )

    @staticmethod
    def from_json(blob: str, rng_seed: int = 0) -> "Tableau":
        data = json.loads(blob)
        n = data["n"]
        lines = [f"n={n}"] + list(data["destab"]) + list(data["stab"])
        return Tableau.deserialize("\n".join(lines), rng_seed)

    # -- invariants -----------------------------------------------------------

    def validate(self) -> None:
        """Assert all tableau invariants; raises ConsistencyError."""
        n = self.n
        stab = self.stabilizers()
        destab = self.destabilizers()
        for group in (stab, destab):
            for i in range(n):
                for j in range(i + 1, n):
                    if not pauli.commutes(group[i], group[j]):
                        raise ConsistencyError("generator rows must pairwise commute")
        for i in range(n):
            for j in range(n):
                want = i != j
                if pauli.commutes(destab[i], stab[j]) != want:
                    raise ConsistencyError(
                        "destabilizer/stabilizer pairing is broken"
                    )
        vectors = [self._x[i] | (self._z[i] << n) for i in range(2 * n)]
        if _gf2_rank(vectors) != 2 * n:
            raise ConsistencyError("tableau rows are not GF(2)-independent")
        for i in range(2 * n):
            if self._r[i] % 2 == 1:
                raise ConsistencyError("non-scratch rows must have sign +/-")
        if self._x[2 * n] or self._z[2 * n] or self._r[2 * n]:
            raise ConsistencyError("scratch row must stay zero between measurements")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tableau):
            return NotImplemented
        return (
            self.n == other.n
            and self._x == other._x
            and self._z == other._z
            and self._r == other._r
        )

    def __repr__(self) -> str:
        stab = ", ".join(str(p) for p in self.stabilizers())
        return f"Tableau(n={self.n}, stab=<{stab}>)"


# ---------------------------------------------------------------------------
# GF(2) helpers shared by canonicalization and group comparisons


def _gf2_rank(vectors: list[int]) -> int:
    basis: list[int] = []
    for v in vectors:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
            basis.sort(reverse=True)
    return len(basis)


def _rref_pauli(rows: list[PauliString], n: int) -> list[PauliString]:
    """Reduced row echelon form of Pauli rows, phases tracked exactly."""
    work = list(rows)
    pivots: list[tuple[int, int]] = []  # (column, row index)
    rank = 0
    for col in range(2 * n):
        # column order: x_1..x_n then z_1..z_n
        def bit(p: PauliString) -> int:
            if col < n:
                return (p.x >> col) & 1
            return (p.z >> (col - n)) & 1

        pivot = next((i for i in range(rank, len(work)) if bit(work[i])), None)
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        for i in range(len(work)):
            if i != rank and bit(work[i]):
                work[i] = pauli.multiply(work[rank], work[i])
        pivots.append((col, rank))
        rank += 1
    return work[:rank]


def restricted_stabilizers(t: Tableau, keep: list[int]) -> list[PauliString]:
    """Stabilizer generators of the subsystem on `keep` qubits.

    Requires the state to factorize across the keep/drop cut (e.g.
    after the dropped qubits were measured out). The returned operators
    are reindexed to qubits 1..len(keep) following the order of `keep`.
    Raises ConsistencyError if the subsystem group is smaller than
    expected, i.e. the state does not factorize.
    """
    n = t.n
    keep_sorted = list(keep)
    drop = [q for q in range(1, n + 1) if q not in set(keep_sorted)]
    order = []
    for q in drop:  # dropped columns first so keep-only rows surface
        order.append(q - 1)
        order.append(n + q - 1)
    for q in keep_sorted:
        order.append(q - 1)
        order.append(n + q - 1)

    def bit(p: PauliString, col: int) -> int:
        c = order[col]
        return (p.x >> c) & 1 if c < n else (p.z >> (c - n)) & 1

    work = list(t.stabilizers())
    rank = 0
    for col in range(2 * n):
        pivot = next((i for i in range(rank, len(work)) if bit(work[i], col)), None)
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        for i in range(len(work)):
            if i != rank and bit(work[i], col):
                work[i] = pauli.multiply(work[rank], work[i])
        rank += 1
    drop_mask = 0
    for q in drop:
        drop_mask |= 1 << (q - 1)
    local = [p for p in work if not ((p.x | p.z) & drop_mask)]
    if len(local) < len(keep_sorted):
        raise ConsistencyError("state does not factorize across the requested cut")
    out = []
    for p in local:
        lits = {}
        for new_q, old_q in enumerate(keep_sorted, start=1):
            lit = p.literal(old_q)
            if lit != "I":
                lits[new_q] = lit
        out.append(PauliString.from_literals(lits, len(keep_sorted), p.phase))
    return out


def groups_equal(
    a: list[PauliString], b: list[PauliString], n: int, with_signs: bool
) -> bool:
    """Compare the groups generated by two generator lists.

    Without signs this is GF(2) row-space equality; with signs the
    unique signed reduced echelon forms must match.
    """
    ra = _rref_pauli(a, n)
    rb = _rref_pauli(b, n)
    if not with_signs:
        ra = [p.with_phase(0) for p in ra]
        rb = [p.with_phase(0) for p in rb]
    return ra == rb
