"""Corruption generators and proximity label builders.

Every operation is deterministic given an explicit Generator (see
foldkit.rng); nothing touches global random state. "Fraction corrupted"
means exactly floor(nu * n) positions sampled without replacement.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .codec import (CanonicalGeometry, DEFAULT_GEOMETRY, InternalCoords,
                    from_internal, to_internal)
from .errors import MissingConfidence, SelectorEmpty, SingleChain, TooFewNodes
from .featurise import ProteinGraph
from .geometry import bond_angle, dihedral
from .residues import MASK_INDEX, VOCAB_SIZE, VOCABULARY, residue_index
from .rng import make_rng
from .structure import Chain, Residue, Structure

# Sequence-denoising auxiliary loss weight; carried as metadata so
# downstream consumers share one recorded constant.
DEFAULT_LAMBDA_AUX = 0.1
DEFAULT_NU = 0.25
DEFAULT_SIGMA = 0.1
DEFAULT_CUTOFF = 3.5


class CorruptionKind(enum.Enum):
    SEQ_MUTATE = "seq_mutate"
    SEQ_MASK = "seq_mask"
    COORD_GAUSS = "coord_gauss"
    COORD_UNIFORM = "coord_uniform"
    TORSION_GAUSS = "torsion_gauss"
    CO_DENOISE = "co_denoise"


@dataclass(frozen=True)
class CorruptionSpec:
    kind: CorruptionKind
    nu: float = DEFAULT_NU
    sigma: float = DEFAULT_SIGMA
    lambda_aux: float = DEFAULT_LAMBDA_AUX
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.nu <= 1.0:
            raise ValueError(f"nu must be in [0, 1], got {self.nu}")
        if self.sigma < 0.0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class DenoisingTargets:
    """Supervision targets; populated fields depend on kind."""
    kind: str
    positions: np.ndarray | None = None          # corrupted node indices
    original_residues: np.ndarray | None = None  # vocabulary indices
    noise: np.ndarray | None = None              # coordinate eps, unscaled
    sigma: float | None = None
    angular_noise: np.ndarray | None = None      # (n, 3) phi/psi/omega
    original_angles: np.ndarray | None = None    # (n, 3)
    indices: np.ndarray | None = None            # masked-attribute tuples
    values: np.ndarray | None = None             # true attribute / plddt
    sequence: "DenoisingTargets | None" = None   # co-denoising parts
    structure: "DenoisingTargets | None" = None


@dataclass(frozen=True)
class CorruptionResult:
    corrupted: object                 # same type as the corrupted input
    targets: DenoisingTargets
    corrupted_mask: np.ndarray        # bool per node


@dataclass(frozen=True)
class LabelSet:
    labels: np.ndarray    # int8 per residue
    cutoff: float
    selector: str


def _pick_positions(n: int, nu: float, rng: np.random.Generator) -> np.ndarray:
    m = int(np.floor(nu * n))
    if m == 0:
        return np.empty(0, dtype=np.int64)
    return np.sort(rng.choice(n, size=m, replace=False))


def corrupt_sequence_mutate(residues, nu: float,
                            rng: np.random.Generator) -> CorruptionResult:
    """Mutate floor(nu*n) residues to a different canonical type.

    residues is an array of vocabulary indices. The replacement is drawn
    uniformly from the 20 canonical types excluding the original (all 20
    when the original is itself non-canonical).
    """
    residues = np.asarray(residues, dtype=np.int64)
    n = len(residues)
    positions = _pick_positions(n, nu, rng)
    corrupted = residues.copy()
    for p in positions:
        original = residues[p]
        if original < 20:
            draw = int(rng.integers(0, 19))
            corrupted[p] = draw if draw < original else draw + 1
        else:
            corrupted[p] = int(rng.integers(0, 20))
    mask = np.zeros(n, dtype=bool)
    mask[positions] = True
    targets = DenoisingTargets(kind="sequence", positions=positions,
                               original_residues=residues[positions])
    return CorruptionResult(corrupted, targets, mask)


def corrupt_sequence_mask(residues, nu: float,
                          rng: np.random.Generator) -> CorruptionResult:
    """Replace floor(nu*n) residues with the MASK vocabulary symbol."""
    residues = np.asarray(residues, dtype=np.int64)
    n = len(residues)
    positions = _pick_positions(n, nu, rng)
    corrupted = residues.copy()
    corrupted[positions] = MASK_INDEX
    mask = np.zeros(n, dtype=bool)
    mask[positions] = True
    targets = DenoisingTargets(kind="sequence", positions=positions,
                               original_residues=residues[positions])
    return CorruptionResult(corrupted, targets, mask)


def corrupt_coords_gaussian(X, sigma: float,
                            rng: np.random.Generator) -> CorruptionResult:
    """x~ = x + sigma * eps with eps ~ N(0, I3) per row.

    eps and sigma are stored separately so sigma = 0 leaves X bit-identical
    and x = x~ - sigma * eps recovers the input exactly.
    """
    X = np.asarray(X, dtype=np.float64)
    eps = rng.standard_normal(X.shape)
    noised = X if sigma == 0.0 else X + sigma * eps
    targets = DenoisingTargets(kind="coordinate", noise=eps, sigma=sigma)
    return CorruptionResult(noised, targets, np.ones(len(X), dtype=bool))


def corrupt_coords_uniform(X, sigma: float,
                           rng: np.random.Generator) -> CorruptionResult:
    """As the Gaussian variant with eps components ~ Uniform(-1, 1)."""
    X = np.asarray(X, dtype=np.float64)
    eps = rng.uniform(-1.0, 1.0, size=X.shape)
    noised = X if sigma == 0.0 else X + sigma * eps
    targets = DenoisingTargets(kind="coordinate", noise=eps, sigma=sigma)
    return CorruptionResult(noised, targets, np.ones(len(X), dtype=bool))


def corrupt_torsions(chain: Chain, sigma: float, rng: np.random.Generator,
                     geom: CanonicalGeometry = DEFAULT_GEOMETRY) -> CorruptionResult:
    """Noise phi/psi/omega, keep bond angles, rebuild by NeRF.

    Gaussian noise scaled by sigma is added to the defined backbone
    torsions and wrapped into [-pi, pi); bond lengths come from geom and
    bond angles stay at their measured values. Targets hold the per-residue
    angular noise triplets (primary) and the original angles (auxiliary).
    """
    ic = to_internal(chain)
    n = ic.n_residues
    noise = rng.standard_normal((n, 3)) * sigma
    noise[~ic.defined_torsions] = 0.0
    original = np.stack([ic.phi, ic.psi, ic.omega], axis=1)
    noised = np.mod(original + noise + np.pi, 2.0 * np.pi) - np.pi
    noised[~ic.defined_torsions] = 0.0
    corrupted_ic = InternalCoords(
        res_types=ic.res_types, phi=noised[:, 0], psi=noised[:, 1],
        omega=noised[:, 2], theta_n=ic.theta_n, theta_ca=ic.theta_ca,
        theta_c=ic.theta_c, anchor=ic.anchor)
    rebuilt = from_internal(corrupted_ic, geom, chain.id)
    targets = DenoisingTargets(kind="torsional", angular_noise=noise,
                               original_angles=original, sigma=sigma)
    return CorruptionResult(rebuilt, targets, np.ones(n, dtype=bool))


def _onehot_rows(indices: np.ndarray) -> np.ndarray:
    rows = np.zeros((len(indices), VOCAB_SIZE))
    rows[np.arange(len(indices)), indices] = 1.0
    return rows


def co_corrupt(graph: ProteinGraph, seq_spec: CorruptionSpec,
               struct_spec: CorruptionSpec, seed: int = 0) -> CorruptionResult:
    """Sequence corruption then coordinate corruption on one graph.

    The two stages draw from independent sub-streams of seed (streams 0
    and 1), so each half reproduces the stand-alone op run with
    make_rng(seed, stream). The one-hot block of S is updated in place;
    angle-derived scalar columns are not recomputed here - callers wanting
    consistent features re-featurise from the corrupted coordinates.
    """
    seq_rng = make_rng(seed, stream=0)
    struct_rng = make_rng(seed, stream=1)

    if seq_spec.kind is CorruptionKind.SEQ_MASK:
        seq_result = corrupt_sequence_mask(graph.res_types, seq_spec.nu, seq_rng)
    elif seq_spec.kind is CorruptionKind.SEQ_MUTATE:
        seq_result = corrupt_sequence_mutate(graph.res_types, seq_spec.nu, seq_rng)
    else:
        raise ValueError(f"co_corrupt sequence stage got {seq_spec.kind}")

    if struct_spec.kind is CorruptionKind.COORD_GAUSS:
        struct_result = corrupt_coords_gaussian(graph.coords, struct_spec.sigma,
                                                struct_rng)
    elif struct_spec.kind is CorruptionKind.COORD_UNIFORM:
        struct_result = corrupt_coords_uniform(graph.coords, struct_spec.sigma,
                                               struct_rng)
    else:
        raise ValueError(f"co_corrupt structure stage got {struct_spec.kind}")

    new_types = np.asarray(seq_result.corrupted, dtype=np.int64)
    scalars = graph.scalars.copy()
    scalars[:, :VOCAB_SIZE] = _onehot_rows(new_types)
    corrupted_graph = replace(graph, coords=struct_result.corrupted,
                              scalars=scalars, res_types=tuple(new_types))
    targets = DenoisingTargets(kind="co", sequence=seq_result.targets,
                               structure=struct_result.targets)
    return CorruptionResult(corrupted_graph, targets, seq_result.corrupted_mask)


class MaskedAttribute(enum.Enum):
    DISTANCE = 2
    ANGLE = 3
    DIHEDRAL = 4


def _consecutive_tuples(graph: ProteinGraph, size: int) -> np.ndarray:
    """Runs of `size` consecutive nodes within one chain."""
    tuples = []
    chain_idx = graph.chain_index
    n = graph.num_nodes
    for start in range(n - size + 1):
        window = chain_idx[start:start + size]
        if np.all(window == window[0]):
            tuples.append(range(start, start + size))
    return np.asarray([list(t) for t in tuples], dtype=np.int64).reshape(-1, size)


def masked_attribute_targets(graph: ProteinGraph, kind: MaskedAttribute,
                             fraction: float,
                             rng: np.random.Generator) -> DenoisingTargets:
    """Sample geometric tuples and return their true values as targets.

    DISTANCE samples stored edges; ANGLE and DIHEDRAL sample consecutive
    residue triplets/quadruples within a chain.
    """
    if graph.num_nodes < kind.value:
        raise TooFewNodes(
            f"{kind.name} needs >= {kind.value} nodes, got {graph.num_nodes}")
    if kind is MaskedAttribute.DISTANCE:
        candidates = graph.topology.edges
    else:
        candidates = _consecutive_tuples(graph, kind.value)
    if len(candidates) == 0:
        raise TooFewNodes(f"no candidate tuples for {kind.name}")
    m = int(np.floor(fraction * len(candidates)))
    chosen = (np.sort(rng.choice(len(candidates), size=m, replace=False))
              if m else np.empty(0, dtype=np.int64))
    tuples = candidates[chosen]
    X = graph.coords
    if kind is MaskedAttribute.DISTANCE:
        values = np.array([np.linalg.norm(X[i] - X[j]) for i, j in tuples])
    elif kind is MaskedAttribute.ANGLE:
        values = np.array([bond_angle(X[a], X[b], X[c]) for a, b, c in tuples])
    else:
        values = np.array([dihedral(X[a], X[b], X[c], X[d])
                           for a, b, c, d in tuples])
    return DenoisingTargets(kind=f"masked_{kind.name.lower()}",
                            indices=tuples, values=values)


def plddt_targets(s: Structure) -> DenoisingTargets:
    """Scaled per-residue confidence y = b_factor / 100, clamped to [0, 1].

    Reads the CA b-factor (predicted-structure convention), falling back
    to the residue's first atom. Raises MissingConfidence when every
    value is zero or absent.
    """
    values = []
    for _, res in s.iter_residues():
        atom = res.atom("CA") or (res.atoms[0] if res.atoms else None)
        values.append(atom.b_factor if atom is not None else 0.0)
    values = np.asarray(values, dtype=np.float64)
    if not len(values) or np.all(values == 0.0):
        raise MissingConfidence("no b-factor confidence values present")
    return DenoisingTargets(kind="plddt", values=np.clip(values / 100.0, 0.0, 1.0))


def _residue_positions(res: Residue) -> np.ndarray:
    return np.asarray([a.position for a in res.atoms], dtype=np.float64)


def binding_site_labels(s: Structure, selector, cutoff: float = DEFAULT_CUTOFF) -> LabelSet:
    """Label 1 for residues with any atom within cutoff (inclusive) of any
    selected hetero atom; selector is a set of hetero three-letter codes."""
    selector = {code.upper() for code in selector}
    targets = np.asarray([a.position for a in s.hetero_atoms
                          if a.het_code in selector], dtype=np.float64)
    if targets.size == 0:
        raise SelectorEmpty(f"no hetero atom matches {sorted(selector)}")
    labels = []
    for _, res in s.iter_residues():
        pos = _residue_positions(res)
        d2 = np.sum((pos[:, None, :] - targets[None, :, :])**2, axis=-1)
        labels.append(1 if np.any(d2 <= cutoff**2) else 0)
    return LabelSet(np.asarray(labels, dtype=np.int8), cutoff,
                    "het:" + ",".join(sorted(selector)))


def interface_labels(complex_structure: Structure,
                     cutoff: float = DEFAULT_CUTOFF) -> LabelSet:
    """Label 1 for residues with any atom within cutoff of another chain."""
    if len(complex_structure.chains) < 2:
        raise SingleChain("interface labels need at least 2 chains")
    chain_atoms = {c.id: np.concatenate([_residue_positions(r) for r in c.residues])
                   for c in complex_structure.chains}
    labels = []
    for chain, res in complex_structure.iter_residues():
        pos = _residue_positions(res)
        hit = 0
        for other_id, other in chain_atoms.items():
            if other_id == chain.id:
                continue
            d2 = np.sum((pos[:, None, :] - other[None, :, :])**2, axis=-1)
            if np.any(d2 <= cutoff**2):
                hit = 1
                break
        labels.append(hit)
    return LabelSet(np.asarray(labels, dtype=np.int8), cutoff, "interface")


def corrupt_structure(s: Structure, spec: CorruptionSpec,
                      geom: CanonicalGeometry = DEFAULT_GEOMETRY
                      ) -> CorruptionResult:
    """Apply a CorruptionSpec to a whole Structure (the CLI entry point).

    Sequence kinds rewrite residue types; coordinate kinds noise every
    polymer atom; the torsional kind rebuilds each chain through the
    codec. CO_DENOISE composes SEQ_MUTATE and COORD_GAUSS with
    independent sub-streams of spec.seed.
    """
    if spec.kind is CorruptionKind.CO_DENOISE:
        seq_part = corrupt_structure(
            s, CorruptionSpec(CorruptionKind.SEQ_MUTATE, nu=spec.nu,
                              sigma=spec.sigma, lambda_aux=spec.lambda_aux,
                              seed=spec.seed),
            geom)
        struct_part = corrupt_structure(
            seq_part.corrupted,
            CorruptionSpec(CorruptionKind.COORD_GAUSS, nu=spec.nu,
                           sigma=spec.sigma, lambda_aux=spec.lambda_aux,
                           seed=spec.seed),
            geom)
        targets = DenoisingTargets(kind="co", sequence=seq_part.targets,
                                   structure=struct_part.targets)
        return CorruptionResult(struct_part.corrupted, targets,
                                seq_part.corrupted_mask)

    if spec.kind in (CorruptionKind.SEQ_MUTATE, CorruptionKind.SEQ_MASK):
        rng = make_rng(spec.seed, stream=0)
        indices = np.asarray([  # vocabulary index per residue, chain order
            residue_index(res.res_type) for _, res in s.iter_residues()])
        op = (corrupt_sequence_mutate if spec.kind is CorruptionKind.SEQ_MUTATE
              else corrupt_sequence_mask)
        result = op(indices, spec.nu, rng)
        new_types = [VOCABULARY[i] for i in result.corrupted]
        corrupted = _rewrite_residue_types(s, new_types)
        return CorruptionResult(corrupted, result.targets, result.corrupted_mask)

    if spec.kind in (CorruptionKind.COORD_GAUSS, CorruptionKind.COORD_UNIFORM):
        rng = make_rng(spec.seed, stream=1)
        coords = np.asarray([a.position for _, res in s.iter_residues()
                             for a in res.atoms])
        op = (corrupt_coords_gaussian if spec.kind is CorruptionKind.COORD_GAUSS
              else corrupt_coords_uniform)
        result = op(coords, spec.sigma, rng)
        corrupted = _rewrite_coordinates(s, np.asarray(result.corrupted))
        n_res = s.num_residues
        return CorruptionResult(corrupted, result.targets,
                                np.ones(n_res, dtype=bool))

    if spec.kind is CorruptionKind.TORSION_GAUSS:
        rng = make_rng(spec.seed, stream=1)
        new_chains = []
        noises = []
        originals = []
        for chain in s.chains:
            result = corrupt_torsions(chain, spec.sigma, rng, geom)
            new_chains.append(result.corrupted)
            noises.append(result.targets.angular_noise)
            originals.append(result.targets.original_angles)
        corrupted = replace(s, chains=tuple(new_chains))
        targets = DenoisingTargets(kind="torsional",
                                   angular_noise=np.concatenate(noises),
                                   original_angles=np.concatenate(originals),
                                   sigma=spec.sigma)
        return CorruptionResult(corrupted, targets,
                                np.ones(s.num_residues, dtype=bool))

    raise ValueError(f"unhandled corruption kind {spec.kind}")


def _rewrite_residue_types(s: Structure, new_types) -> Structure:
    it = iter(new_types)
    chains = []
    for chain in s.chains:
        chains.append(Chain(chain.id, tuple(
            replace(res, res_type=next(it)) for res in chain.residues)))
    return replace(s, chains=tuple(chains))


def _rewrite_coordinates(s: Structure, coords: np.ndarray) -> Structure:
    at = 0
    chains = []
    for chain in s.chains:
        residues = []
        for res in chain.residues:
            atoms = []
            for atom in res.atoms:
                atoms.append(replace(atom, position=coords[at]))
                at += 1
            residues.append(replace(res, atoms=tuple(atoms)))
        chains.append(Chain(chain.id, tuple(residues)))
    return replace(s, chains=tuple(chains))
