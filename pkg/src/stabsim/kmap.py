"""Boolean tableau-update rules derived from Pauli conjugation tables.

Given how a Clifford gate conjugates every Pauli literal, this module
derives the bitwise update functions (x', z', and the phase increment)
that the tableau executes, plus minimized sum-of-products expressions
for human-readable export. Minimization is Quine-McCluskey with
Petrick's method and deterministic tie-breaking, so derived expressions
are reproducible. The gate machinery consumes the raw truth tables;
the minimized expressions exist only for export.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache

from . import pauli
from .pauli import PauliString

_LITS = ("I", "X", "Y", "Z")


class InconsistentTableError(ValueError):
    """The mapping is not a Pauli-group automorphism."""


@dataclass(frozen=True)
class ConjugationTable:
    """Images of all Pauli literal tuples under conjugation by one gate.

    mapping: {input literal tuple: (output literal tuple, sign)} with
    sign in {+1, -1}; total over all 4**arity inputs.
    """

    name: str
    arity: int
    mapping: dict[tuple[str, ...], tuple[tuple[str, ...], int]]
    slots: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.slots:
            object.__setattr__(self, "slots", _default_slots(self.arity))

    def image(self, literals: tuple[str, ...]) -> tuple[tuple[str, ...], int]:
        return self.mapping[literals]

    def validate(self) -> None:
        """Check totality, identity preservation, and multiplicativity."""
        expected = set(itertools.product(_LITS, repeat=self.arity))
        if set(self.mapping) != expected:
            raise InconsistentTableError(
                f"{self.name}: mapping must cover all {len(expected)} literal tuples"
            )
        ident = ("I",) * self.arity
        if self.mapping[ident] != (ident, 1):
            raise InconsistentTableError(f"{self.name}: identity must map to +identity")
        for p_lits, q_lits in itertools.product(self.mapping, repeat=2):
            p, q = _as_pauli(p_lits), _as_pauli(q_lits)
            prod = pauli.multiply(p, q)
            img_p, img_q = self._image_pauli(p_lits), self._image_pauli(q_lits)
            got = pauli.multiply(img_p, img_q)
            want = self._image_pauli(_tuple_of(prod)).with_phase(
                self._image_pauli(_tuple_of(prod)).phase + prod.phase
            )
            if got != want:
                raise InconsistentTableError(
                    f"{self.name}: image of product {p_lits}*{q_lits} is inconsistent"
                )

    def _image_pauli(self, literals: tuple[str, ...]) -> PauliString:
        out, sign = self.mapping[literals]
        return _as_pauli(out).with_phase(0 if sign == 1 else 2)


def _default_slots(arity: int) -> tuple[str, ...]:
    if arity == 1:
        return ("",)
    return tuple("abc"[:arity])


def _as_pauli(literals: tuple[str, ...]) -> PauliString:
    return PauliString.from_literals(
        {j + 1: lit for j, lit in enumerate(literals)}, len(literals)
    )


def _tuple_of(p: PauliString) -> tuple[str, ...]:
    return tuple(p.literal(q) for q in range(1, p.n + 1))


# ---------------------------------------------------------------------------
# Quine-McCluskey minimization

Cube = tuple[int, ...]  # entries 0, 1, or 2 (don't care)


def _minterm_bits(m: int, n_vars: int) -> Cube:
    return tuple((m >> i) & 1 for i in range(n_vars))


def _covers(cube: Cube, minterm: Cube) -> bool:
    return all(c == 2 or c == b for c, b in zip(cube, minterm))


def _merge(a: Cube, b: Cube) -> Cube | None:
    diff = -1
    for i, (u, v) in enumerate(zip(a, b)):
        if u != v:
            if u == 2 or v == 2 or diff >= 0:
                return None
            diff = i
    if diff < 0:
        return None
    return a[:diff] + (2,) + a[diff + 1:]


def prime_implicants(n_vars: int, on_set: list[int]) -> list[Cube]:
    level = {_minterm_bits(m, n_vars) for m in on_set}
    primes: set[Cube] = set()
    while level:
        merged: set[Cube] = set()
        used: set[Cube] = set()
        items = sorted(level)
        for a, b in itertools.combinations(items, 2):
            c = _merge(a, b)
            if c is not None:
                merged.add(c)
                used.add(a)
                used.add(b)
        primes.update(c for c in level if c not in used)
        level = merged
    return sorted(primes)


def _petrick_cover(primes: list[Cube], on_set: list[int], n_vars: int) -> list[Cube]:
    """Exact minimal cover: fewest cubes, then fewest literals, then lexical."""
    if not on_set:
        return []
    minterms = [_minterm_bits(m, n_vars) for m in sorted(set(on_set))]
    # product of sums over prime indices; expand keeping irredundant sets
    covers: set[frozenset[int]] = {frozenset()}
    for mt in minterms:
        choices = [i for i, p in enumerate(primes) if _covers(p, mt)]
        nxt: set[frozenset[int]] = set()
        for acc in covers:
            for i in choices:
                nxt.add(acc | {i})
        # prune supersets to keep the expansion small
        pruned = {s for s in nxt if not any(t < s for t in nxt)}
        covers = pruned
    def lits(i: int) -> int:
        return sum(1 for v in primes[i] if v != 2)
    best = min(
        covers,
        key=lambda s: (len(s), sum(lits(i) for i in s), sorted(primes[i] for i in s)),
    )
    return sorted(primes[i] for i in best)


def minimize(n_vars: int, on_set: list[int]) -> list[Cube]:
    if not on_set:
        return []
    if len(set(on_set)) == 1 << n_vars:
        return [(2,) * n_vars]
    return _petrick_cover(prime_implicants(n_vars, on_set), on_set, n_vars)


def cubes_to_expression(cubes: list[Cube], var_names: list[str]) -> str:
    """Render cubes as SOP text; two-variable parity prints as XOR."""
    if not cubes:
        return "0"
    if cubes == [(2,) * len(var_names)]:
        return "1"
    fixed = [
        [i for i, v in enumerate(c) if v != 2] for c in cubes
    ]
    if len(cubes) == 2 and fixed[0] == fixed[1] and len(fixed[0]) == 2:
        (i, j) = fixed[0]
        a = (cubes[0][i], cubes[0][j])
        b = (cubes[1][i], cubes[1][j])
        if {a, b} == {(0, 1), (1, 0)}:
            return f"{var_names[i]} ⊕ {var_names[j]}"
    terms = []
    for cube in cubes:
        parts = [
            var_names[i] if v == 1 else f"~{var_names[i]}"
            for i, v in enumerate(cube)
            if v != 2
        ]
        terms.append("·".join(parts) if parts else "1")
    return " + ".join(terms)


# ---------------------------------------------------------------------------
# Update rules


@dataclass(frozen=True)
class BooleanUpdateRule:
    """Truth tables mapping (x_1..x_k, z_1..z_k) to updated bits.

    tables: name -> list of 4**k output bits indexed by the minterm
    over input variables ordered x_1..x_k then z_1..z_k (variable i is
    bit i of the index). The "r" table is the phase increment added to
    the row sign, per the additive form r' = r + f(x, z).
    """

    gate: str
    arity: int
    var_names: tuple[str, ...]
    tables: dict[str, tuple[int, ...]]
    cubes: dict[str, tuple[Cube, ...]] = field(repr=False, default_factory=dict)

    @property
    def out_names(self) -> tuple[str, ...]:
        k = self.arity
        return tuple(self.var_names[:k] + self.var_names[k:]) + ("r",)

    def evaluate(self, name: str, minterm: int) -> int:
        return self.tables[name][minterm]

    def apply_bits(self, in_bits: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
        """Map input (x_1..x_k, z_1..z_k) bits to output bits and r-increment."""
        m = 0
        for i, b in enumerate(in_bits):
            m |= (b & 1) << i
        outs = tuple(self.tables[nm][m] for nm in self.var_names)
        return outs, self.tables["r"][m]

    def expressions(self) -> dict[str, str]:
        names = list(self.var_names)
        exprs = {}
        for nm in list(self.var_names) + ["r"]:
            label = f"{nm}'" if nm != "r" else "r-increment"
            exprs[label] = cubes_to_expression(list(self.cubes[nm]), names)
        return exprs

    def export_json(self) -> str:
        return json.dumps(
            {
                "gate": self.gate,
                "arity": self.arity,
                "expressions": self.expressions(),
            },
            indent=2,
            ensure_ascii=False,
        )

    def report(self) -> str:
        """Human-readable truth tables plus minimized expressions."""
        k = self.arity
        lines = [f"gate {self.gate} (arity {k})"]
        header = " ".join(self.var_names) + " | " + " ".join(
            f"{nm}'" for nm in self.var_names
        ) + " r+"
        lines.append(header)
        lines.append("-" * len(header))
        for m in range(1 << (2 * k)):
            in_bits = [(m >> i) & 1 for i in range(2 * k)]
            outs = " ".join(str(self.tables[nm][m]) for nm in self.var_names)
            lines.append(
                " ".join(str(b) for b in in_bits)
                + "  | "
                + outs
                + f"  {self.tables['r'][m]}"
            )
        lines.append("")
        for label, expr in self.expressions().items():
            lines.append(f"{label} = {expr}")
        return "\n".join(lines)


def _var_names(arity: int, slots: tuple[str, ...]) -> tuple[str, ...]:
    if arity == 1:
        return ("x", "z")
    xs = tuple(f"x_{s}" for s in slots)
    zs = tuple(f"z_{s}" for s in slots)
    return xs + zs


def _bits_of_literal(lit: str) -> tuple[int, int]:
    return {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}[lit]


def _literal_of_bits(x: int, z: int) -> str:
    return ["I", "X", "Z", "Y"][x | (z << 1)]


def derive_rule(table: ConjugationTable) -> BooleanUpdateRule:
    """Derive the minimized Boolean update rule from a conjugation table."""
    table.validate()
    k = table.arity
    n_vars = 2 * k
    names = _var_names(k, table.slots)
    columns: dict[str, list[int]] = {nm: [0] * (1 << n_vars) for nm in names}
    r_col = [0] * (1 << n_vars)
    for m in range(1 << n_vars):
        xs = [(m >> i) & 1 for i in range(k)]
        zs = [(m >> (k + i)) & 1 for i in range(k)]
        lits = tuple(_literal_of_bits(x, z) for x, z in zip(xs, zs))
        out_lits, sign = table.image(lits)
        for i, lit in enumerate(out_lits):
            ox, oz = _bits_of_literal(lit)
            columns[names[i]][m] = ox
            columns[names[k + i]][m] = oz
        r_col[m] = 0 if sign == 1 else 1
    tables = {nm: tuple(col) for nm, col in columns.items()}
    tables["r"] = tuple(r_col)
    cubes = {
        nm: tuple(minimize(n_vars, [m for m, v in enumerate(col) if v]))
        for nm, col in tables.items()
    }
    return BooleanUpdateRule(table.name, k, names, tables, cubes)


def verify_rule(
    rule: BooleanUpdateRule, table: ConjugationTable
) -> tuple[bool, tuple[str, ...] | None]:
    """Exhaustively compare a rule against a table.

    Returns (True, None) on agreement, else (False, first failing
    input literal tuple).
    """
    if rule.arity != table.arity:
        raise pauli.DimensionError("rule and table arity differ")
    k = rule.arity
    for lits in itertools.product(_LITS, repeat=k):
        bits = [_bits_of_literal(lit) for lit in lits]
        in_bits = tuple(b[0] for b in bits) + tuple(b[1] for b in bits)
        outs, rinc = rule.apply_bits(in_bits)
        got_lits = tuple(
            _literal_of_bits(outs[i], outs[k + i]) for i in range(k)
        )
        got_sign = -1 if rinc else 1
        if (got_lits, got_sign) != table.image(lits):
            return False, lits
    return True, None


# ---------------------------------------------------------------------------
# Built-in gate tables (single-qubit rows transcribed, two-qubit tables
# generated from their generator images by exact Pauli multiplication)


def _table_from_generators(
    name: str, arity: int, gen_images: dict[str, PauliString], slots: tuple[str, ...] = ()
) -> ConjugationTable:
    """Extend images of single-qubit X/Z factors multiplicatively."""
    mapping: dict[tuple[str, ...], tuple[tuple[str, ...], int]] = {}
    for lits in itertools.product(_LITS, repeat=arity):
        plain = PauliString.identity(arity)
        image = PauliString.identity(arity)
        for j, lit in enumerate(lits):
            xb, zb = _bits_of_literal(lit)
            if xb:
                plain = pauli.multiply(plain, _gen(arity, j, "X"))
                image = pauli.multiply(image, _embed(gen_images[f"X{j}"], arity))
            if zb:
                plain = pauli.multiply(plain, _gen(arity, j, "Z"))
                image = pauli.multiply(image, _embed(gen_images[f"Z{j}"], arity))
        # plain = i^delta * (literal tuple), so divide delta out of the image
        delta = plain.phase
        img = image.with_phase(image.phase - delta)
        if img.phase not in (0, 2):
            raise InconsistentTableError(f"{name}: non-real image sign for {lits}")
        mapping[lits] = (_tuple_of(img), 1 if img.phase == 0 else -1)
    return ConjugationTable(name, arity, mapping, slots)


def _gen(arity: int, slot: int, lit: str) -> PauliString:
    return PauliString.single(arity, slot + 1, lit)


def _embed(p: PauliString, arity: int) -> PauliString:
    if p.n != arity:
        raise pauli.DimensionError("generator image has wrong width")
    return p


def _single(name: str, x_to: str, z_to: str) -> ConjugationTable:
    def img(spec: str) -> PauliString:
        sign = 2 if spec.startswith("-") else 0
        return _as_pauli((spec.lstrip("-"),)).with_phase(sign)

    return _table_from_generators(name, 1, {"X0": img(x_to), "Z0": img(z_to)})


@lru_cache(maxsize=1)
def builtin_tables() -> dict[str, ConjugationTable]:
    """Conjugation tables for H, P, P-dagger, X, Y, Z, CNOT, CZ."""
    tables = {
        "H": _single("H", "Z", "X"),
        "P": _single("P", "Y", "Z"),
        "PDG": _single("PDG", "-Y", "Z"),
        "X": _single("X", "X", "-Z"),
        "Y": _single("Y", "-X", "-Z"),
        "Z": _single("Z", "-X", "Z"),
        "CNOT": _table_from_generators(
            "CNOT",
            2,
            {
                "X0": pauli.parse("XX"),
                "Z0": pauli.parse("ZI"),
                "X1": pauli.parse("IX"),
                "Z1": pauli.parse("ZZ"),
            },
            slots=("c", "t"),
        ),
        "CZ": _table_from_generators(
            "CZ",
            2,
            {
                "X0": pauli.parse("XZ"),
                "Z0": pauli.parse("ZI"),
                "X1": pauli.parse("ZX"),
                "Z1": pauli.parse("IZ"),
            },
            slots=("a", "b"),
        ),
    }
    for t in tables.values():
        t.validate()
    return tables


_ALIASES = {
    "P†": "PDG", "PDAG": "PDG", "PDAGGER": "PDG", "SDG": "PDG", "S": "P",
    "CX": "CNOT",
}


def normalize_gate_id(gate: str) -> str:
    g = gate.strip().upper()
    return _ALIASES.get(g, g)


@lru_cache(maxsize=None)
def builtin_rule(gate: str) -> BooleanUpdateRule:
    """Derived update rule for a built-in gate id (cached)."""
    g = normalize_gate_id(gate)
    tables = builtin_tables()
    if g not in tables:
        raise KeyError(f"unknown gate id {gate!r}")
    return derive_rule(tables[g])


_REGISTERED: dict[str, BooleanUpdateRule] = {}


def register_table(table: ConjugationTable) -> BooleanUpdateRule:
    """Derive and register an update rule for a user-supplied gate."""
    rule = derive_rule(table)
    _REGISTERED[normalize_gate_id(table.name)] = rule
    return rule


def rule_for(gate: str) -> BooleanUpdateRule:
    """Update rule for a built-in or registered gate id."""
    g = normalize_gate_id(gate)
    if g in _REGISTERED:
        return _REGISTERED[g]
    return builtin_rule(g)
