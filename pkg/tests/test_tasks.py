import dataclasses

import numpy as np
import pytest

from foldkit.codec import to_internal
from foldkit.errors import (MissingConfidence, SelectorEmpty, SingleChain,
                            TooFewNodes)
from foldkit.featurise import FeatureScheme, build_graph
from foldkit.geometry import kabsch
from foldkit.residues import MASK_INDEX, RESIDUE_INDEX
from foldkit.rng import make_rng
from foldkit.structure import Atom, Chain, Residue, Structure
from foldkit.synth import random_chain, single_chain_structure
from foldkit.tasks import (CorruptionKind, CorruptionSpec, MaskedAttribute,
                           binding_site_labels, co_corrupt,
                           corrupt_coords_gaussian, corrupt_coords_uniform,
                           corrupt_sequence_mask, corrupt_sequence_mutate,
                           corrupt_structure, corrupt_torsions,
                           interface_labels, masked_attribute_targets,
                           plddt_targets)

from helpers import angle_close, proximity_oracle, random_rotation, transform_structure


class TestSequenceMutate:
    def test_exact_count(self):
        rng = make_rng(1)
        res = rng.integers(0, 20, size=100)
        out = corrupt_sequence_mutate(res, 0.25, make_rng(2))
        assert out.corrupted_mask.sum() == 25
        assert len(out.targets.positions) == 25

    def test_nu_zero_identity(self):
        res = np.arange(20) % 20
        out = corrupt_sequence_mutate(res, 0.0, make_rng(3))
        assert np.array_equal(out.corrupted, res)
        assert out.corrupted_mask.sum() == 0

    def test_never_keeps_original(self):
        rng = make_rng(4)
        res = rng.integers(0, 20, size=500)
        out = corrupt_sequence_mutate(res, 1.0, make_rng(5))
        assert np.all(out.corrupted != res)
        assert np.all(out.corrupted < 20)

    def test_targets_recover_originals(self):
        res = np.arange(40) % 20
        out = corrupt_sequence_mutate(res, 0.5, make_rng(6))
        assert np.array_equal(out.targets.original_residues,
                              res[out.targets.positions])

    def test_replacement_uniform_over_19(self):
        # single fixed original type; 1e5 mutations; 3-sigma multinomial bounds
        n = 100_000
        res = np.full(n, RESIDUE_INDEX["ALA"])
        out = corrupt_sequence_mutate(res, 1.0, make_rng(7))
        counts = np.bincount(out.corrupted, minlength=20)
        assert counts[RESIDUE_INDEX["ALA"]] == 0
        p = 1.0 / 19.0
        sigma = np.sqrt(n * p * (1 - p))
        others = np.delete(counts, RESIDUE_INDEX["ALA"])
        assert np.all(np.abs(others - n * p) <= 3.0 * sigma)


class TestSequenceMask:
    def test_nu_one_masks_everything(self):
        res = np.arange(30) % 20
        out = corrupt_sequence_mask(res, 1.0, make_rng(8))
        assert np.all(out.corrupted == MASK_INDEX)

    def test_floor_rule(self):
        res = np.arange(8) % 20
        out = corrupt_sequence_mask(res, 0.25, make_rng(9))
        assert out.corrupted_mask.sum() == 2

    def test_onehot_rows_at_mask_index(self):
        s = single_chain_structure(random_chain(12, make_rng(10)))
        graph = build_graph(s, FeatureScheme.CA_IDENT, k=4)
        result = co_corrupt(graph,
                            CorruptionSpec(CorruptionKind.SEQ_MASK, nu=0.5),
                            CorruptionSpec(CorruptionKind.COORD_GAUSS, sigma=0.0),
                            seed=11)
        S = result.corrupted.scalars
        for pos in result.targets.sequence.positions:
            row = np.zeros(23)
            row[MASK_INDEX] = 1.0
            assert np.array_equal(S[pos], row)


class TestCoordinateNoise:
    def test_sigma_zero_identity(self):
        X = make_rng(12).normal(size=(50, 3))
        out = corrupt_coords_gaussian(X, 0.0, make_rng(13))
        assert np.array_equal(out.corrupted, X)
        out = corrupt_coords_uniform(X, 0.0, make_rng(13))
        assert np.array_equal(out.corrupted, X)

    def test_gaussian_std_matches_sigma(self):
        X = np.zeros((100_000, 3))
        out = corrupt_coords_gaussian(X, 0.1, make_rng(14))
        stds = np.std(np.asarray(out.corrupted), axis=0)
        assert np.all(np.abs(stds - 0.1) / 0.1 < 0.05)

    def test_exact_inverse(self):
        X = make_rng(15).normal(size=(40, 3))
        out = corrupt_coords_gaussian(X, 0.3, make_rng(16))
        recovered = np.asarray(out.corrupted) - out.targets.sigma * out.targets.noise
        assert np.max(np.abs(recovered - X)) < 1e-12

    def test_uniform_support_and_variance(self):
        X = np.zeros((100_000, 3))
        out = corrupt_coords_uniform(X, 0.2, make_rng(17))
        noised = np.asarray(out.corrupted)
        assert np.all(np.abs(noised) <= 0.2)
        var = np.var(noised, axis=0)
        assert np.all(np.abs(var - 0.2**2 / 3.0) / (0.2**2 / 3.0) < 0.05)


def _bb(chain):
    return np.asarray([res.atom(n).position for res in chain.residues
                       for n in ("N", "CA", "C", "O")])


class TestTorsionNoise:
    def test_sigma_zero_superposes(self):
        chain = random_chain(20, make_rng(18))
        out = corrupt_torsions(chain, 0.0, make_rng(19))
        assert kabsch(_bb(chain), _bb(out.corrupted)).rmsd <= 1e-6

    def test_measured_equals_original_plus_noise(self):
        chain = random_chain(25, make_rng(20))
        out = corrupt_torsions(chain, 0.4, make_rng(21))
        ic0 = to_internal(chain)
        ic1 = to_internal(out.corrupted)
        noise = out.targets.angular_noise
        originals = np.stack([ic0.phi, ic0.psi, ic0.omega], axis=1)
        measured = np.stack([ic1.phi, ic1.psi, ic1.omega], axis=1)
        mask = ic0.defined_torsions
        for i in range(len(originals)):
            for k in range(3):
                if mask[i, k]:
                    assert angle_close(measured[i, k],
                                       originals[i, k] + noise[i, k], 1e-6)

    def test_bond_geometry_untouched(self):
        chain = random_chain(25, make_rng(22))
        out = corrupt_torsions(chain, 0.4, make_rng(23))
        ic0 = to_internal(chain)
        ic1 = to_internal(out.corrupted)
        assert np.max(np.abs(ic0.theta_n - ic1.theta_n)) < 1e-6
        assert np.max(np.abs(ic0.theta_ca - ic1.theta_ca)) < 1e-6
        assert np.max(np.abs(ic0.theta_c - ic1.theta_c)) < 1e-6

    def test_bond_lengths_stay_canonical(self):
        from foldkit.codec import DEFAULT_GEOMETRY as g
        chain = random_chain(20, make_rng(90))
        out = corrupt_torsions(chain, 0.5, make_rng(91))
        residues = out.corrupted.residues
        for i, res in enumerate(residues):
            n, ca, c = (res.atom(x).position for x in ("N", "CA", "C"))
            assert abs(np.linalg.norm(ca - n) - g.n_ca) < 1e-9
            assert abs(np.linalg.norm(c - ca) - g.ca_c) < 1e-9
            if i + 1 < len(residues):
                n_next = residues[i + 1].atom("N").position
                assert abs(np.linalg.norm(n_next - c) - g.c_n) < 1e-9

    def test_original_angles_carried(self):
        chain = random_chain(10, make_rng(24))
        out = corrupt_torsions(chain, 0.2, make_rng(25))
        ic0 = to_internal(chain)
        assert np.array_equal(out.targets.original_angles[:, 0], ic0.phi)


class TestCoCorrupt:
    def _graph(self, seed=26, n=15):
        s = single_chain_structure(random_chain(n, make_rng(seed)))
        return build_graph(s, FeatureScheme.CA_IDENT, k=4)

    def test_zero_strength_identity(self):
        g = self._graph()
        out = co_corrupt(g, CorruptionSpec(CorruptionKind.SEQ_MUTATE, nu=0.0),
                         CorruptionSpec(CorruptionKind.COORD_GAUSS, sigma=0.0),
                         seed=1)
        assert out.corrupted.res_types == g.res_types
        assert np.array_equal(out.corrupted.coords, g.coords)

    def test_sequence_stage_matches_standalone_substream(self):
        g = self._graph()
        out = co_corrupt(g, CorruptionSpec(CorruptionKind.SEQ_MUTATE, nu=0.4),
                         CorruptionSpec(CorruptionKind.COORD_GAUSS, sigma=0.1),
                         seed=99)
        alone = corrupt_sequence_mutate(g.res_types, 0.4, make_rng(99, stream=0))
        assert np.array_equal(np.asarray(out.corrupted.res_types),
                              alone.corrupted)
        assert np.array_equal(out.targets.sequence.positions,
                              alone.targets.positions)

    def test_structure_stage_matches_standalone_substream(self):
        g = self._graph()
        out = co_corrupt(g, CorruptionSpec(CorruptionKind.SEQ_MUTATE, nu=0.4),
                         CorruptionSpec(CorruptionKind.COORD_GAUSS, sigma=0.1),
                         seed=99)
        alone = corrupt_coords_gaussian(g.coords, 0.1, make_rng(99, stream=1))
        assert np.array_equal(out.corrupted.coords, alone.corrupted)
        assert np.array_equal(out.targets.structure.noise, alone.targets.noise)

    def test_modality_separation(self):
        g = self._graph()
        seq_only = co_corrupt(g, CorruptionSpec(CorruptionKind.SEQ_MUTATE, nu=0.5),
                              CorruptionSpec(CorruptionKind.COORD_GAUSS, sigma=0.0),
                              seed=5)
        assert np.array_equal(seq_only.corrupted.coords, g.coords)
        coord_only = co_corrupt(g, CorruptionSpec(CorruptionKind.SEQ_MUTATE, nu=0.0),
                                CorruptionSpec(CorruptionKind.COORD_GAUSS, sigma=0.2),
                                seed=5)
        assert coord_only.corrupted.res_types == g.res_types


class TestMaskedAttributes:
    def _graph(self, n=20, seed=27):
        s = single_chain_structure(random_chain(n, make_rng(seed)))
        return build_graph(s, FeatureScheme.CA_IDENT, k=6)

    def test_distance_3_4_5(self):
        res = (Residue("ALA", 1, None, (Atom("CA", "C", (0.0, 0.0, 0.0)),)),
               Residue("ALA", 2, None, (Atom("CA", "C", (3.0, 4.0, 0.0)),)),
               Residue("ALA", 3, None, (Atom("CA", "C", (9.0, 9.0, 9.0)),)))
        s = Structure("TST", (Chain("A", res),))
        g = build_graph(s, FeatureScheme.CA_IDENT, k=2)
        out = masked_attribute_targets(g, MaskedAttribute.DISTANCE, 1.0,
                                       make_rng(28))
        pair_to_value = {tuple(t): v for t, v in zip(out.indices, out.values)}
        assert pair_to_value[(0, 1)] == pytest.approx(5.0)

    def test_dihedral_matches_geometry_module(self):
        from foldkit.geometry import dihedral
        g = self._graph()
        out = masked_attribute_targets(g, MaskedAttribute.DIHEDRAL, 1.0,
                                       make_rng(29))
        for quad, value in zip(out.indices, out.values):
            X = g.coords
            assert value == pytest.approx(
                dihedral(X[quad[0]], X[quad[1]], X[quad[2]], X[quad[3]]))

    def test_fraction_zero_empty(self):
        g = self._graph()
        out = masked_attribute_targets(g, MaskedAttribute.ANGLE, 0.0,
                                       make_rng(30))
        assert len(out.values) == 0

    def test_too_few_nodes(self):
        s = single_chain_structure(random_chain(3, make_rng(31)))
        g = build_graph(s, FeatureScheme.CA_IDENT, k=2)
        with pytest.raises(TooFewNodes):
            masked_attribute_targets(g, MaskedAttribute.DIHEDRAL, 0.5,
                                     make_rng(32))


def _with_b_factors(structure, values):
    it = iter(values)
    chains = []
    for chain in structure.chains:
        residues = []
        for res in chain.residues:
            b = next(it)
            residues.append(dataclasses.replace(res, atoms=tuple(
                dataclasses.replace(a, b_factor=b) for a in res.atoms)))
        chains.append(dataclasses.replace(chain, residues=tuple(residues)))
    return dataclasses.replace(structure, chains=tuple(chains))


class TestPlddt:
    def test_scaling_and_clamp(self):
        s = single_chain_structure(random_chain(3, make_rng(33)))
        s = _with_b_factors(s, [100.0, 70.5, 120.0])
        out = plddt_targets(s)
        assert np.allclose(out.values, [1.0, 0.705, 1.0])

    def test_missing_confidence(self):
        s = single_chain_structure(random_chain(3, make_rng(34)))
        with pytest.raises(MissingConfidence):
            plddt_targets(s)


def _zn_structure(chain, zn_position):
    zn = Atom("ZN", "ZN", np.asarray(zn_position, dtype=float),
              is_hetero=True, serial=9999, het_code="ZN")
    return single_chain_structure(chain, hetero_atoms=(zn,))


class TestBindingSiteLabels:
    def test_cutoff_inclusive_boundary(self):
        res = Residue("ALA", 1, None, (Atom("CA", "C", (0.0, 0.0, 0.0)),))
        chain = Chain("A", (res,))
        near = _zn_structure(chain, (3.4, 0.0, 0.0))
        far = _zn_structure(chain, (3.6, 0.0, 0.0))
        assert binding_site_labels(near, {"ZN"}).labels.tolist() == [1]
        assert binding_site_labels(far, {"ZN"}).labels.tolist() == [0]

    def test_selector_empty(self):
        s = _zn_structure(Chain("A", (Residue("ALA", 1, None,
                          (Atom("CA", "C", (0.0, 0.0, 0.0)),)),)), (1, 1, 1))
        with pytest.raises(SelectorEmpty):
            binding_site_labels(s, {"MG"})

    def test_matches_bruteforce_oracle(self):
        rng = make_rng(35)
        for _ in range(10):
            chain = random_chain(15, rng)
            zn_pos = rng.normal(size=3) * 8.0
            s = _zn_structure(chain, zn_pos)
            labels = binding_site_labels(s, {"ZN"}, cutoff=3.5)
            expected = proximity_oracle(
                [[a.position for a in r.atoms] for r in chain.residues],
                [zn_pos], 3.5)
            assert labels.labels.tolist() == expected

    def test_rigid_motion_invariance(self):
        rng = make_rng(36)
        s = _zn_structure(random_chain(15, rng), rng.normal(size=3) * 6.0)
        base = binding_site_labels(s, {"ZN"}).labels
        moved = transform_structure(s, random_rotation(rng),
                                    rng.normal(size=3) * 10.0)
        assert np.array_equal(binding_site_labels(moved, {"ZN"}).labels, base)


def _dimer(offset, seed=37):
    a = random_chain(10, make_rng(seed), chain_id="A")
    shifted = []
    for res in random_chain(10, make_rng(seed + 1), chain_id="B").residues:
        shifted.append(dataclasses.replace(res, atoms=tuple(
            dataclasses.replace(atom, position=atom.position + offset)
            for atom in res.atoms)))
    b = Chain("B", tuple(shifted))
    return Structure("DIM", (a, b))


class TestInterfaceLabels:
    def test_distant_chains_all_zero(self):
        s = _dimer(np.array([500.0, 0.0, 0.0]))
        assert not binding_labels_any(s)

    def test_single_chain_raises(self):
        s = single_chain_structure(random_chain(5, make_rng(38)))
        with pytest.raises(SingleChain):
            interface_labels(s)

    def test_matches_bruteforce_oracle(self):
        rng = make_rng(39)
        for trial in range(6):
            s = _dimer(np.array([6.0 + trial, 1.0, 0.0]), seed=40 + trial)
            labels = interface_labels(s, cutoff=3.5)
            chains = {c.id: c for c in s.chains}
            expected = []
            for chain, res in s.iter_residues():
                other = chains["B" if chain.id == "A" else "A"]
                other_atoms = [a.position for r in other.residues
                               for a in r.atoms]
                expected.extend(proximity_oracle(
                    [[a.position for a in res.atoms]], other_atoms, 3.5))
            assert labels.labels.tolist() == expected

    def test_rigid_motion_invariance(self):
        rng = make_rng(41)
        s = _dimer(np.array([5.0, 0.5, 0.0]))
        base = interface_labels(s).labels
        moved = transform_structure(s, random_rotation(rng),
                                    rng.normal(size=3) * 10.0)
        assert np.array_equal(interface_labels(moved).labels, base)


def binding_labels_any(s):
    return bool(interface_labels(s).labels.any())


class TestStructureCorruption:
    def test_determinism_bit_identical(self):
        s = single_chain_structure(random_chain(20, make_rng(42)))
        spec = CorruptionSpec(CorruptionKind.CO_DENOISE, nu=0.25, sigma=0.1,
                              seed=123)
        a = corrupt_structure(s, spec)
        b = corrupt_structure(s, spec)
        assert a.corrupted == b.corrupted
        assert np.array_equal(a.targets.sequence.positions,
                              b.targets.sequence.positions)
        assert np.array_equal(a.targets.structure.noise,
                              b.targets.structure.noise)

    def test_sequence_kind_leaves_coordinates(self):
        s = single_chain_structure(random_chain(12, make_rng(43)))
        out = corrupt_structure(
            s, CorruptionSpec(CorruptionKind.SEQ_MUTATE, nu=0.5, seed=1))
        for (c0, r0), (c1, r1) in zip(s.iter_residues(),
                                      out.corrupted.iter_residues()):
            for a0, a1 in zip(r0.atoms, r1.atoms):
                assert np.array_equal(a0.position, a1.position)

    def test_coordinate_kind_leaves_types(self):
        s = single_chain_structure(random_chain(12, make_rng(44)))
        out = corrupt_structure(
            s, CorruptionSpec(CorruptionKind.COORD_GAUSS, sigma=0.2, seed=1))
        types0 = [r.res_type for _, r in s.iter_residues()]
        types1 = [r.res_type for _, r in out.corrupted.iter_residues()]
        assert types0 == types1

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            CorruptionSpec(CorruptionKind.SEQ_MUTATE, nu=1.5)
        with pytest.raises(ValueError):
            CorruptionSpec(CorruptionKind.COORD_GAUSS, sigma=-0.1)
