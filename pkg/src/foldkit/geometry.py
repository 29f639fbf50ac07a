"""Torsion, angle, and graph geometry over 3D coordinates.

Angles are radians. Torsions live in [-pi, pi) with +pi normalised to -pi;
bond angles live in [0, pi]. Angles that do not exist (chain termini,
absent sidechain atoms) are None, never NaN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateConfiguration, DegenerateGeometry, MissingAtom,
                     TooFewNodes)
from .residues import CHI_ATOMS, MAX_CHI
from .structure import Chain, Residue

_EPS = 1e-12
TWO_PI = 2.0 * np.pi


def wrap_angle(theta: float) -> float:
    """Map an angle into [-pi, pi); +pi wraps to -pi."""
    return float(np.mod(theta + np.pi, TWO_PI) - np.pi)


def dihedral(p1, p2, p3, p4) -> float:
    """Signed torsion of the bond p2-p3: 0 is cis (p1 and p4 eclipsed).

    atan2 of the two plane normals around b2; positive sense is clockwise
    looking from p2 toward p3. Raises DegenerateGeometry when either
    bonded triple is collinear.
    """
    p1, p2, p3, p4 = (np.asarray(p, dtype=np.float64) for p in (p1, p2, p3, p4))
    b1 = p2 - p1
    b2 = p3 - p2
    b3 = p4 - p3
    n1 = np.cross(b1, b2)
    n2 = np.cross(b2, b3)
    if np.linalg.norm(n1) < _EPS or np.linalg.norm(n2) < _EPS:
        raise DegenerateGeometry("collinear atoms leave the torsion undefined")
    b2n = b2 / np.linalg.norm(b2)
    y = float(np.dot(np.cross(n1, n2), b2n))
    x = float(np.dot(n1, n2))
    return wrap_angle(np.arctan2(y, x))


def bond_angle(p1, p2, p3) -> float:
    """Angle at p2 between the bonds to p1 and p3, in [0, pi]."""
    p1, p2, p3 = (np.asarray(p, dtype=np.float64) for p in (p1, p2, p3))
    u = p1 - p2
    v = p3 - p2
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu < _EPS or nv < _EPS:
        raise DegenerateGeometry("coincident atoms leave the bond angle undefined")
    return float(np.arctan2(np.linalg.norm(np.cross(u, v)), np.dot(u, v)))


@dataclass(frozen=True)
class DihedralSet:
    """Backbone torsions per residue; None at termini where undefined."""
    phi: tuple
    psi: tuple
    omega: tuple


@dataclass(frozen=True)
class VirtualAngleSet:
    """CA-trace bond angle kappa and torsion alpha; None where neighbours
    are missing (kappa: first/last, alpha: first and last two)."""
    kappa: tuple
    alpha: tuple


@dataclass(frozen=True)
class ChiSet:
    """Per-residue sidechain torsions, four slots each, None where the
    residue type defines fewer torsions or atoms are absent."""
    chi: tuple


def _backbone_positions(chain: Chain, names=("N", "CA", "C")) -> list:
    out = []
    for res in chain.residues:
        row = []
        for name in names:
            atom = res.atom(name)
            if atom is None:
                raise MissingAtom(f"{res.res_type} {res.seq_index}", name)
            row.append(atom.position)
        out.append(row)
    return out


def backbone_dihedrals(chain: Chain) -> DihedralSet:
    """phi/psi/omega for every residue of a chain.

    phi_i uses C(i-1)-N(i)-CA(i)-C(i); psi_i uses N(i)-CA(i)-C(i)-N(i+1);
    omega_i uses CA(i)-C(i)-N(i+1)-CA(i+1). Termini are None.
    """
    bb = _backbone_positions(chain)
    n = len(bb)
    phi: list = [None] * n
    psi: list = [None] * n
    omega: list = [None] * n
    for i in range(n):
        n_i, ca_i, c_i = bb[i]
        if i > 0:
            phi[i] = dihedral(bb[i - 1][2], n_i, ca_i, c_i)
        if i < n - 1:
            n_next, ca_next = bb[i + 1][0], bb[i + 1][1]
            psi[i] = dihedral(n_i, ca_i, c_i, n_next)
            omega[i] = dihedral(ca_i, c_i, n_next, ca_next)
    return DihedralSet(tuple(phi), tuple(psi), tuple(omega))


def virtual_angles(ca_trace) -> VirtualAngleSet:
    """Virtual bond angle kappa(i) over CA(i-1),CA(i),CA(i+1) and virtual
    torsion alpha(i) over CA(i-1)..CA(i+2)."""
    pts = np.asarray(ca_trace, dtype=np.float64)
    n = len(pts)
    if n < 2:
        raise TooFewNodes("need at least 2 CA positions")
    if np.any(np.linalg.norm(np.diff(pts, axis=0), axis=1) < _EPS):
        raise DegenerateGeometry("coincident consecutive CA positions")
    kappa: list = [None] * n
    alpha: list = [None] * n
    for i in range(1, n - 1):
        kappa[i] = bond_angle(pts[i - 1], pts[i], pts[i + 1])
    for i in range(1, n - 2):
        try:
            alpha[i] = dihedral(pts[i - 1], pts[i], pts[i + 1], pts[i + 2])
        except DegenerateGeometry:
            alpha[i] = None  # collinear CA window, torsion undefined
    return VirtualAngleSet(tuple(kappa), tuple(alpha))


def sidechain_torsions(residue: Residue) -> ChiSet:
    """chi1..chi4 from the per-type atom quadruples; missing atoms give None."""
    table = CHI_ATOMS.get(residue.res_type, ())
    chi: list = [None] * MAX_CHI
    for k, names in enumerate(table):
        atoms = [residue.atom(name) for name in names]
        if any(a is None for a in atoms):
            continue
        chi[k] = dihedral(*(a.position for a in atoms))
    return ChiSet(tuple(chi))


@dataclass(frozen=True)
class GraphTopology:
    """Directed edge list over num_nodes points; edges is an (E, 2) int
    array of (source, target) pairs."""
    num_nodes: int
    edges: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "edges", edges)
        if edges.size:
            if np.any(edges[:, 0] == edges[:, 1]):
                raise DegenerateGeometry("self-loop in edge list")
            if edges.min() < 0 or edges.max() >= self.num_nodes:
                raise DegenerateGeometry("edge index out of range")

    @property
    def num_edges(self) -> int:
        return len(self.edges)


def knn_graph(points, k: int) -> GraphTopology:
    """Directed k-nearest-neighbour edges (j -> i) for each node i.

    Neighbours are ranked by squared Euclidean distance with ties broken
    toward the lower index; k is clamped to n-1. Edges are ordered by
    target node, then by (distance, index).
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = len(pts)
    if n < 2:
        raise TooFewNodes("k-NN graph needs at least 2 points")
    if k < 1:
        raise TooFewNodes("k must be >= 1")
    k = min(k, n - 1)
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, np.inf)
    idx = np.arange(n)
    edges = np.empty((n * k, 2), dtype=np.int64)
    for i in range(n):
        order = np.lexsort((idx, d2[i]))[:k]
        edges[i * k:(i + 1) * k, 0] = order
        edges[i * k:(i + 1) * k, 1] = i
    return GraphTopology(n, edges)


def edges_to_text(topology: GraphTopology) -> str:
    """Serialise edges as 'src<TAB>dst' lines."""
    return "".join(f"{s}\t{t}\n" for s, t in topology.edges)


def edges_from_text(text: str, num_nodes: int | None = None) -> GraphTopology:
    pairs = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        s, t = line.split("\t")
        pairs.append((int(s), int(t)))
    edges = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if num_nodes is None:
        num_nodes = int(edges.max()) + 1 if len(edges) else 0
    return GraphTopology(num_nodes, edges)


@dataclass(frozen=True)
class Superposition:
    """Rigid motion x -> rotation @ x + translation minimising RMSD."""
    rotation: np.ndarray
    translation: np.ndarray
    rmsd: float


def kabsch(A, B) -> Superposition:
    """Optimal proper-rotation superposition of A onto B.

    Returns the rigid motion minimising RMSD of (R @ a + t) against B;
    the reflection branch of the SVD is corrected so det(R) = +1.
    Raises DegenerateConfiguration for fewer than 3 points or a collinear
    reference set.
    """
    A = np.asarray(A, dtype=np.float64).reshape(-1, 3)
    B = np.asarray(B, dtype=np.float64).reshape(-1, 3)
    if len(A) != len(B):
        raise DegenerateConfiguration("point sets differ in length")
    if len(A) < 3:
        raise DegenerateConfiguration("need at least 3 points")
    a_mean = A.mean(axis=0)
    b_mean = B.mean(axis=0)
    Ac = A - a_mean
    Bc = B - b_mean
    sv = np.linalg.svd(Ac, compute_uv=False)
    if sv[1] < 1e-9 * max(sv[0], 1.0):
        raise DegenerateConfiguration("reference points are collinear")
    H = Ac.T @ Bc
    U, _, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    D = np.diag([1.0, 1.0, d])
    R = Vt.T @ D @ U.T
    t = b_mean - R @ a_mean
    residual = (A @ R.T + t) - B
    rmsd = float(np.sqrt(np.mean(np.sum(residual**2, axis=1))))
    return Superposition(R, t, rmsd)
