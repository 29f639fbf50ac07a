"""Hierarchical structure model: chains of residues of atoms.

All types are frozen dataclasses and treated as immutable after
construction; functions here return new objects rather than mutating.
"""

from __future__ import annotations

import datetime
import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidFilterSpec, NoCompleteResidues
from .residues import is_canonical

logger = logging.getLogger(__name__)

BACKBONE_ATOMS = ("N", "CA", "C", "O")


class Method(enum.Enum):
    XRAY = "XRAY"
    NMR = "NMR"
    EM = "EM"
    PREDICTED = "PREDICTED"
    OTHER = "OTHER"


class Granularity(enum.Enum):
    CA_ONLY = "ca_only"
    BACKBONE = "backbone"
    ALL_ATOM = "all_atom"


@dataclass(frozen=True, eq=False)
class Atom:
    """Single atom; position in Ångström. b_factor holds pLDDT for predicted
    structures. het_code carries the parent HETATM residue code (e.g. "ZN",
    "ADP") and is None for polymer atoms."""
    name: str
    element: str
    position: np.ndarray
    occupancy: float = 1.0
    b_factor: float = 0.0
    is_hetero: bool = False
    serial: int = 1
    het_code: str | None = None

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64)
        object.__setattr__(self, "position", pos)

    def __eq__(self, other):
        if not isinstance(other, Atom):
            return NotImplemented
        return (self.name == other.name and self.element == other.element
                and np.array_equal(self.position, other.position)
                and self.occupancy == other.occupancy
                and self.b_factor == other.b_factor
                and self.is_hetero == other.is_hetero
                and self.serial == other.serial
                and self.het_code == other.het_code)


@dataclass(frozen=True)
class Residue:
    res_type: str  # three-letter code; non-canonical types are "UNK"
    seq_index: int
    insertion_code: str | None = None
    atoms: tuple[Atom, ...] = ()

    def atom(self, name: str) -> Atom | None:
        for a in self.atoms:
            if a.name == name:
                return a
        return None

    @property
    def backbone_complete(self) -> bool:
        names = {a.name for a in self.atoms}
        return all(n in names for n in BACKBONE_ATOMS)

    @property
    def key(self) -> tuple[int, str]:
        return (self.seq_index, self.insertion_code or "")


@dataclass(frozen=True)
class Chain:
    id: str
    residues: tuple[Residue, ...]


@dataclass(frozen=True)
class Structure:
    id: str
    chains: tuple[Chain, ...]
    resolution: float | None = None
    deposition_date: datetime.date | None = None
    method: Method | None = None
    hetero_atoms: tuple[Atom, ...] = ()

    @property
    def num_residues(self) -> int:
        return sum(len(c.residues) for c in self.chains)

    def iter_residues(self):
        for chain in self.chains:
            for res in chain.residues:
                yield chain, res

    @property
    def hetero_codes(self) -> set[str]:
        return {a.het_code for a in self.hetero_atoms if a.het_code}


def select_granularity(s: Structure, level: Granularity) -> Structure:
    """Project a structure down to CA-only or backbone atoms.

    Residues missing a required atom are dropped; the drop count is logged.
    Raises NoCompleteResidues when nothing survives.
    """
    if level is Granularity.ALL_ATOM:
        return s
    wanted = ("CA",) if level is Granularity.CA_ONLY else BACKBONE_ATOMS

    dropped = 0
    new_chains = []
    for chain in s.chains:
        kept = []
        for res in chain.residues:
            atoms = tuple(a for name in wanted if (a := res.atom(name)) is not None)
            if len(atoms) == len(wanted):
                kept.append(replace(res, atoms=atoms))
            else:
                dropped += 1
        if kept:
            new_chains.append(Chain(chain.id, tuple(kept)))
    if dropped:
        logger.warning("select_granularity(%s): dropped %d incomplete residues",
                       level.value, dropped)
    if not new_chains:
        raise NoCompleteResidues(f"no residue has all of {wanted}")
    return replace(s, chains=tuple(new_chains))


@dataclass(frozen=True)
class FilterSpec:
    """Dataset-curation filter. Unset fields do not constrain; set fields
    must all hold, with inclusive boundaries."""
    min_length: int | None = None
    max_length: int | None = None
    max_chains: int | None = None
    max_resolution: float | None = None
    date_range: tuple[datetime.date, datetime.date] | None = None
    required_ligands: frozenset[str] = field(default_factory=frozenset)
    excluded_ligands: frozenset[str] = field(default_factory=frozenset)
    allowed_methods: frozenset[Method] | None = None

    def __post_init__(self):
        if (self.min_length is not None and self.max_length is not None
                and self.min_length > self.max_length):
            raise InvalidFilterSpec("min_length > max_length")
        if self.date_range is not None and self.date_range[0] > self.date_range[1]:
            raise InvalidFilterSpec("date_range start after end")

    def matches(self, s: Structure) -> bool:
        n = s.num_residues
        if self.min_length is not None and n < self.min_length:
            return False
        if self.max_length is not None and n > self.max_length:
            return False
        if self.max_chains is not None and len(s.chains) > self.max_chains:
            return False
        if self.max_resolution is not None:
            if s.resolution is None or s.resolution > self.max_resolution:
                return False
        if self.date_range is not None:
            if s.deposition_date is None:
                return False
            lo, hi = self.date_range
            if not (lo <= s.deposition_date <= hi):
                return False
        codes = s.hetero_codes
        if self.required_ligands and not self.required_ligands <= codes:
            return False
        if self.excluded_ligands and self.excluded_ligands & codes:
            return False
        if self.allowed_methods is not None:
            if s.method is None or s.method not in self.allowed_methods:
                return False
        return True


def filter_structures(structures, spec: FilterSpec):
    """Yield, in order, the structures matching every set field of spec."""
    for s in structures:
        if spec.matches(s):
            yield s


def _parse_date(text: str) -> datetime.date:
    return datetime.date.fromisoformat(text.strip())


def load_filter_spec(text: str) -> FilterSpec:
    """Parse the flat key=value filter grammar.

    Recognised keys: min_length, max_length, max_chains, max_resolution,
    date_range (from,to as ISO dates), required_ligands, excluded_ligands
    (comma-separated codes), allowed_methods. Blank lines and '#' comments
    are skipped.
    """
    kwargs: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidFilterSpec(f"line {line_no}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        try:
            if key in ("min_length", "max_length", "max_chains"):
                kwargs[key] = int(value)
            elif key == "max_resolution":
                kwargs[key] = float(value)
            elif key == "date_range":
                lo, _, hi = value.partition(",")
                kwargs[key] = (_parse_date(lo), _parse_date(hi))
            elif key in ("required_ligands", "excluded_ligands"):
                kwargs[key] = frozenset(
                    v.strip().upper() for v in value.split(",") if v.strip())
            elif key == "allowed_methods":
                kwargs[key] = frozenset(
                    Method[v.strip().upper()] for v in value.split(",") if v.strip())
            else:
                raise InvalidFilterSpec(f"line {line_no}: unknown key {key!r}")
        except InvalidFilterSpec:
            raise
        except (ValueError, KeyError) as exc:
            raise InvalidFilterSpec(f"line {line_no}: bad value for {key}: {exc}") from exc
    return FilterSpec(**kwargs)
