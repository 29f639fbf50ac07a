"""Graph featurisation: scalar feature matrices and vector features.

A protein graph couples a k-NN topology over CA positions with scalar
node features S (n x d) and geometric vector features. Scalar blocks are
concatenated in a fixed, normative order:

    one-hot residue type (23)
    sinusoidal positional encoding (16)
    sin/cos of virtual angles kappa, alpha (4)
    sin/cos of backbone torsions phi, psi, omega (6)
    sin/cos of sidechain torsions chi1..chi4 (8)

truncated at the scheme's block, giving 23/39/43/49/57 columns. Angles
that are undefined embed as (0, 0), a point off the unit circle, so no
feature matrix ever contains NaN.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, OddDimension
from .geometry import (GraphTopology, backbone_dihedrals, knn_graph,
                       sidechain_torsions, virtual_angles)
from .residues import MAX_CHI, VOCAB_SIZE, residue_index
from .structure import Chain, Granularity, Structure, select_granularity

POSITION_DIM = 16
DEFAULT_K = 16


class FeatureScheme(enum.Enum):
    CA_IDENT = "ca_ident"
    CA_SEQ = "ca_seq"
    CA_ANGLES = "ca_angles"
    CA_BB = "ca_bb"
    CA_SC = "ca_sc"

    @property
    def dim(self) -> int:
        return _SCHEME_DIMS[self]

    @classmethod
    def from_name(cls, name: str) -> "FeatureScheme":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(
                f"unknown scheme {name!r}; choose from "
                f"{', '.join(s.value for s in cls)}") from None


_SCHEME_DIMS = {
    FeatureScheme.CA_IDENT: VOCAB_SIZE,
    FeatureScheme.CA_SEQ: VOCAB_SIZE + POSITION_DIM,
    FeatureScheme.CA_ANGLES: VOCAB_SIZE + POSITION_DIM + 4,
    FeatureScheme.CA_BB: VOCAB_SIZE + POSITION_DIM + 4 + 6,
    FeatureScheme.CA_SC: VOCAB_SIZE + POSITION_DIM + 4 + 6 + 2 * MAX_CHI,
}


def positional_encoding(index: int, dim: int = POSITION_DIM) -> np.ndarray:
    """Transformer-style sinusoid: pe[2k] = sin(i / 10000^(2k/dim)),
    pe[2k+1] the matching cosine."""
    if dim % 2 != 0:
        raise OddDimension(f"dim must be even, got {dim}")
    k = np.arange(dim // 2)
    rates = index / np.power(10000.0, 2.0 * k / dim)
    pe = np.empty(dim)
    pe[0::2] = np.sin(rates)
    pe[1::2] = np.cos(rates)
    return pe


def embed_angle(theta) -> tuple[float, float]:
    """(sin, cos) on the unit circle; None embeds as (0, 0)."""
    if theta is None:
        return (0.0, 0.0)
    return (float(np.sin(theta)), float(np.cos(theta)))


def _ca_chains(s: Structure) -> list[Chain]:
    """Chains restricted to residues that have a CA atom, full atom sets kept."""
    reduced = select_granularity(s, Granularity.CA_ONLY)
    kept = {(c.id, r.key) for c in reduced.chains for r in c.residues}
    out = []
    for chain in s.chains:
        residues = tuple(r for r in chain.residues if (chain.id, r.key) in kept)
        if residues:
            out.append(Chain(chain.id, residues))
    return out


def ca_coordinates(s: Structure) -> np.ndarray:
    """(n, 3) CA positions over all chains, in chain order."""
    coords = [r.atom("CA").position for c in _ca_chains(s) for r in c.residues]
    return np.asarray(coords, dtype=np.float64).reshape(-1, 3)


def scalar_features(s: Structure, scheme: FeatureScheme,
                    global_positions: bool = False) -> np.ndarray:
    """Scalar feature matrix, one row per CA-bearing residue.

    Positional indices restart at 0 for each chain unless global_positions
    is set. Angle-bearing schemes raise MissingAtom when a node residue
    lacks the backbone atoms its torsions need.
    """
    chains = _ca_chains(s)
    rows = []
    offset = 0
    for chain in chains:
        n = len(chain.residues)
        kappa = alpha = None
        dihed = None
        if scheme in (FeatureScheme.CA_ANGLES, FeatureScheme.CA_BB,
                      FeatureScheme.CA_SC):
            trace = [r.atom("CA").position for r in chain.residues]
            if n >= 2:
                virt = virtual_angles(trace)
                kappa, alpha = virt.kappa, virt.alpha
            else:
                kappa = alpha = (None,) * n
        if scheme in (FeatureScheme.CA_BB, FeatureScheme.CA_SC):
            dihed = backbone_dihedrals(chain)
        for i, res in enumerate(chain.residues):
            row = np.zeros(scheme.dim)
            row[residue_index(res.res_type)] = 1.0
            if scheme is FeatureScheme.CA_IDENT:
                rows.append(row)
                continue
            pos = offset + i if global_positions else i
            row[VOCAB_SIZE:VOCAB_SIZE + POSITION_DIM] = positional_encoding(pos)
            if scheme is FeatureScheme.CA_SEQ:
                rows.append(row)
                continue
            base = VOCAB_SIZE + POSITION_DIM
            row[base:base + 2] = embed_angle(kappa[i])
            row[base + 2:base + 4] = embed_angle(alpha[i])
            if scheme is FeatureScheme.CA_ANGLES:
                rows.append(row)
                continue
            base += 4
            row[base:base + 2] = embed_angle(dihed.phi[i])
            row[base + 2:base + 4] = embed_angle(dihed.psi[i])
            row[base + 4:base + 6] = embed_angle(dihed.omega[i])
            if scheme is FeatureScheme.CA_BB:
                rows.append(row)
                continue
            base += 6
            chi = sidechain_torsions(res).chi
            for k in range(MAX_CHI):
                row[base + 2 * k:base + 2 * k + 2] = embed_angle(chi[k])
            rows.append(row)
        offset += n
    return np.asarray(rows).reshape(-1, scheme.dim)


def _unit(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        raise DegenerateGeometry("coincident CA positions")
    return v / norm


def vector_features(s: Structure, topology: GraphTopology):
    """Node orientation vectors and edge direction vectors.

    Node i carries unit vectors toward its chain predecessor and successor
    (zero at chain termini), shape (n, 2, 3). Each stored edge
    (source, target) carries the unit vector from source to target,
    x_target - x_source, shape (E, 3).
    """
    chains = _ca_chains(s)
    coords = ca_coordinates(s)
    n = len(coords)
    node_vectors = np.zeros((n, 2, 3))
    offset = 0
    for chain in chains:
        m = len(chain.residues)
        for i in range(m):
            g = offset + i
            if i > 0:
                node_vectors[g, 0] = _unit(coords[g - 1] - coords[g])
            if i < m - 1:
                node_vectors[g, 1] = _unit(coords[g + 1] - coords[g])
        offset += m
    edge_vectors = np.zeros((topology.num_edges, 3))
    for e, (src, dst) in enumerate(topology.edges):
        edge_vectors[e] = _unit(coords[dst] - coords[src])
    return node_vectors, edge_vectors


@dataclass(frozen=True)
class ProteinGraph:
    """Geometric graph: topology, CA coordinates, scalar features S,
    node/edge vector features, plus residue metadata used by task
    generators (vocabulary indices and per-node chain index)."""
    topology: GraphTopology
    coords: np.ndarray        # (n, 3)
    scalars: np.ndarray       # (n, scheme.dim)
    node_vectors: np.ndarray  # (n, 2, 3), unit or zero rows
    edge_vectors: np.ndarray  # (E, 3), unit rows
    scheme: FeatureScheme
    res_types: tuple          # vocabulary indices, len n
    chain_index: np.ndarray   # (n,) int, position of the node's chain
    chain_ids: tuple          # chain id per chain_index value

    def __post_init__(self):
        n = self.topology.num_nodes
        assert self.coords.shape == (n, 3)
        assert self.scalars.shape == (n, self.scheme.dim)
        assert self.node_vectors.shape == (n, 2, 3)
        assert self.edge_vectors.shape == (self.topology.num_edges, 3)
        assert len(self.res_types) == n
        assert np.all(np.isfinite(self.scalars))
        norms = np.linalg.norm(self.node_vectors, axis=-1)
        assert np.all((np.abs(norms - 1.0) < 1e-9) | (norms < 1e-9))

    @property
    def num_nodes(self) -> int:
        return self.topology.num_nodes


def build_graph(s: Structure, scheme: FeatureScheme = FeatureScheme.CA_BB,
                k: int = DEFAULT_K,
                global_positions: bool = False) -> ProteinGraph:
    """Compose CA selection, k-NN topology, scalar and vector features."""
    chains = _ca_chains(s)
    coords = ca_coordinates(s)
    topology = knn_graph(coords, k)
    scalars = scalar_features(s, scheme, global_positions)
    node_vectors, edge_vectors = vector_features(s, topology)
    res_types = []
    chain_index = []
    for ci, chain in enumerate(chains):
        for res in chain.residues:
            res_types.append(residue_index(res.res_type))
            chain_index.append(ci)
    return ProteinGraph(
        topology=topology, coords=coords, scalars=scalars,
        node_vectors=node_vectors, edge_vectors=edge_vectors, scheme=scheme,
        res_types=tuple(res_types),
        chain_index=np.asarray(chain_index, dtype=np.int64),
        chain_ids=tuple(c.id for c in chains))
