"""PDB v3.3 text parsing and writing.

Fixed-width column layout only; no whitespace-split fallback. Multi-model
files contribute MODEL 1 only. Alternate locations keep altloc ' ' or 'A'.
Waters (HOH) are dropped; all other HETATM records are retained as hetero
atoms carrying their three-letter code.
"""

from __future__ import annotations

import datetime

import numpy as np

from .errors import CoordinateOverflow, EmptyStructure, MalformedRecord
from .residues import RESIDUE_INDEX
from .structure import Atom, Chain, Method, Residue, Structure

_MONTHS = ("JAN", "FEB", "MAR", "APR", "MAY", "JUN",
           "JUL", "AUG", "SEP", "OCT", "NOV", "DEC")
_MONTH_NUM = {m: i + 1 for i, m in enumerate(_MONTHS)}

_METHOD_TEXT = {
    Method.XRAY: "X-RAY DIFFRACTION",
    Method.NMR: "SOLUTION NMR",
    Method.EM: "ELECTRON MICROSCOPY",
    Method.PREDICTED: "THEORETICAL MODEL (PREDICTED)",
    Method.OTHER: "OTHER",
}


def _parse_pdb_date(text: str) -> datetime.date | None:
    # DD-MMM-YY; two-digit years below 50 are 20xx.
    parts = text.strip().split("-")
    if len(parts) != 3:
        return None
    try:
        day = int(parts[0])
        month = _MONTH_NUM[parts[1].upper()]
        yy = int(parts[2])
    except (ValueError, KeyError):
        return None
    year = 2000 + yy if yy < 50 else 1900 + yy
    try:
        return datetime.date(year, month, day)
    except ValueError:
        return None


def _parse_method(text: str) -> Method:
    t = text.upper()
    if "X-RAY" in t:
        return Method.XRAY
    if "NMR" in t:
        return Method.NMR
    if "ELECTRON MICROSCOPY" in t or "CRYO-EM" in t:
        return Method.EM
    if "THEORETICAL" in t or "PREDICTED" in t:
        return Method.PREDICTED
    return Method.OTHER


def _field(line: str, start: int, end: int) -> str:
    return line[start:end] if len(line) > start else ""


def _parse_atom_line(line: str, line_no: int):
    """Decode one ATOM/HETATM record; raises MalformedRecord on bad fields."""
    if len(line) < 54:
        raise MalformedRecord(line_no, "record shorter than coordinate fields")
    try:
        serial = int(line[6:11])
    except ValueError as exc:
        raise MalformedRecord(line_no, f"bad serial: {exc}") from exc
    name = line[12:16].strip()
    if not name:
        raise MalformedRecord(line_no, "blank atom name")
    altloc = line[16]
    res_name = line[17:20].strip()
    chain_id = line[21]
    try:
        seq_index = int(line[22:26])
    except ValueError as exc:
        raise MalformedRecord(line_no, f"bad residue number: {exc}") from exc
    icode = line[26] if line[26] != " " else None
    try:
        x = float(line[30:38])
        y = float(line[38:46])
        z = float(line[46:54])
    except ValueError as exc:
        raise MalformedRecord(line_no, f"bad coordinates: {exc}") from exc
    if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(z)):
        raise MalformedRecord(line_no, "non-finite coordinates")
    try:
        occupancy = float(_field(line, 54, 60) or 1.0)
    except ValueError:
        occupancy = 1.0
    try:
        b_factor = float(_field(line, 60, 66) or 0.0)
    except ValueError:
        b_factor = 0.0
    element = _field(line, 76, 78).strip()
    if not element:
        element = next((c for c in name if c.isalpha()), "X")
    occupancy = min(max(occupancy, 0.0), 1.0)
    return (serial, name, altloc, res_name, chain_id, seq_index, icode,
            np.array([x, y, z]), occupancy, b_factor, element)


def parse_pdb(text: str, structure_id: str = "") -> Structure:
    """Parse PDB-format text into a Structure.

    Raises MalformedRecord for an un-parseable ATOM/HETATM line and
    EmptyStructure when neither polymer nor hetero atoms parse.
    """
    resolution = None
    dep_date = None
    method = None
    # chain id -> residue key -> (res_name, [atoms])
    chains: dict[str, dict] = {}
    chain_order: list[str] = []
    hetero: list[Atom] = []
    seen_serials: set[int] = set()
    models_seen = 0

    for line_no, line in enumerate(text.splitlines(), start=1):
        rec = line[:6]
        tag = rec.strip()
        if tag == "MODEL":
            models_seen += 1
            continue
        if models_seen > 1:
            continue  # MODEL 1 only
        if tag == "HEADER":
            parsed = _parse_pdb_date(_field(line, 50, 59))
            if parsed is not None:
                dep_date = parsed
            header_id = _field(line, 62, 66).strip()
            if header_id:
                structure_id = header_id  # HEADER id wins over the fallback
            continue
        if tag == "EXPDTA":
            method = _parse_method(line[10:].strip())
            continue
        if tag == "REMARK" and _field(line, 6, 10).strip() == "2":
            for token in line[10:].replace("RESOLUTION.", " ").split():
                try:
                    resolution = float(token)
                    break
                except ValueError:
                    continue
            continue
        if tag not in ("ATOM", "HETATM"):
            continue

        (serial, name, altloc, res_name, chain_id, seq_index, icode,
         pos, occ, b, element) = _parse_atom_line(line, line_no)
        if altloc not in (" ", "A"):
            continue
        while serial in seen_serials:
            serial += 1
        seen_serials.add(serial)

        if tag == "HETATM":
            if res_name == "HOH":
                continue
            hetero.append(Atom(name, element, pos, occ, b,
                               is_hetero=True, serial=serial, het_code=res_name))
            continue

        residues = chains.setdefault(chain_id, {})
        if chain_id not in chain_order:
            chain_order.append(chain_id)
        key = (seq_index, icode or "")
        if key not in residues:
            canonical = res_name if res_name in RESIDUE_INDEX else "UNK"
            residues[key] = (canonical, seq_index, icode, [])
        _, _, _, atoms = residues[key]
        if any(a.name == name for a in atoms):
            continue  # duplicate atom name after altloc resolution
        atoms.append(Atom(name, element, pos, occ, b, is_hetero=False, serial=serial))

    chain_objs = []
    for cid in chain_order:
        residues = []
        for key in sorted(chains[cid]):
            res_type, seq_index, icode, atoms = chains[cid][key]
            residues.append(Residue(res_type, seq_index, icode, tuple(atoms)))
        chain_objs.append(Chain(cid, tuple(residues)))

    if not chain_objs and not hetero:
        raise EmptyStructure("no ATOM or HETATM records parsed")
    return Structure(structure_id, tuple(chain_objs), resolution,
                     dep_date, method, tuple(hetero))


def _format_date(d: datetime.date) -> str:
    return f"{d.day:02d}-{_MONTHS[d.month - 1]}-{d.year % 100:02d}"


def _format_coord(value: float) -> str:
    if not np.isfinite(value):
        raise CoordinateOverflow(f"non-finite coordinate {value}")
    text = f"{value:8.3f}"
    if len(text) > 8:
        raise CoordinateOverflow(f"coordinate {value} exceeds the 8-column field")
    return text


def _format_atom_name(name: str) -> str:
    # Short names start at column 14 per convention; 4-char names fill 13-16.
    return name[:4].ljust(4) if len(name) >= 4 else f" {name:<3s}"


def _atom_record(tag: str, atom: Atom, res_name: str, chain_id: str,
                 seq_index: int, icode: str) -> str:
    return (f"{tag:<6s}{atom.serial:5d} {_format_atom_name(atom.name)} "
            f"{res_name:>3s} {chain_id:1s}{seq_index:4d}{icode:1s}   "
            f"{_format_coord(atom.position[0])}{_format_coord(atom.position[1])}"
            f"{_format_coord(atom.position[2])}{atom.occupancy:6.2f}"
            f"{atom.b_factor:6.2f}          {atom.element[:2]:>2s}")


def write_pdb(s: Structure) -> str:
    """Render a Structure as PDB v3.3 text.

    Raises CoordinateOverflow for any coordinate that does not fit the
    8-column fixed-width field (|c| >= 10000, or c <= -1000).
    """
    lines = []
    date_text = _format_date(s.deposition_date) if s.deposition_date else ""
    lines.append(f"HEADER{'':44s}{date_text:<12s}{s.id[:4]:>4s}")
    if s.method is not None:
        lines.append(f"EXPDTA    {_METHOD_TEXT[s.method]}")
    if s.resolution is not None:
        lines.append(f"REMARK   2 RESOLUTION. {s.resolution:7.2f} ANGSTROMS.")
    for chain in s.chains:
        for res in chain.residues:
            icode = res.insertion_code or " "
            # MASK has no PDB code; written as MSK (re-parses as UNK).
            res_name = "MSK" if res.res_type == "MASK" else res.res_type[:3]
            for atom in res.atoms:
                lines.append(_atom_record("ATOM", atom, res_name,
                                          chain.id, res.seq_index, icode))
        lines.append("TER")
    for atom in s.hetero_atoms:
        lines.append(_atom_record("HETATM", atom, atom.het_code or "LIG",
                                  "Z", 1, " "))
    lines.append("END")
    return "\n".join(lines) + "\n"
