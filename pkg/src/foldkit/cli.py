"""Command-line front end.

Subcommands compose the library into file pipelines: encode/decode (FKC1
codec), featurise (FKT1 tensors), corrupt (denoising inputs + targets),
label (proximity CSV labels), filter (dataset manifests).

Exit codes: 0 success, 1 usage error, 2 data error. Every input may be a
single file or a directory; directories are walked breadth-first in
lexicographic order and can be processed with --jobs N, with per-file
seeds derived from the relative path so outputs do not depend on N.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .codec import EncodedProtein, decode, encode
from .errors import FoldkitError
from .featurise import DEFAULT_K, FeatureScheme, build_graph
from .geometry import edges_to_text, kabsch
from .pdb import parse_pdb, write_pdb
from .residues import vocabulary_sha256
from .rng import path_seed
from .structure import load_filter_spec
from .synth import single_chain_structure
from .tasks import (DEFAULT_CUTOFF, DEFAULT_NU, DEFAULT_SIGMA, CorruptionKind,
                    CorruptionSpec, binding_site_labels, corrupt_structure,
                    interface_labels)
from .tensorio import write_tensor

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _walk(root: str, suffix: str) -> list[str]:
    """Breadth-first lexicographic file listing."""
    queue = [root]
    found = []
    while queue:
        current = queue.pop(0)
        dirs = []
        for entry in sorted(os.listdir(current)):
            path = os.path.join(current, entry)
            if os.path.isdir(path):
                dirs.append(path)
            elif entry.endswith(suffix):
                found.append(path)
        queue.extend(dirs)
    return found


def _plan(input_path: str, output_path: str, in_suffix: str,
          out_suffix: str | None):
    """(input, output, relpath) triples; output None when out_suffix is."""
    if not os.path.exists(input_path):
        raise FoldkitError(f"{input_path}: no such file or directory")
    if os.path.isfile(input_path):
        return [(input_path, output_path, os.path.basename(input_path))]
    plans = []
    for path in _walk(input_path, in_suffix):
        rel = os.path.relpath(path, input_path)
        if out_suffix is None:
            out = os.path.join(output_path, rel)
        else:
            out = os.path.join(output_path,
                               rel[:-len(in_suffix)] + out_suffix)
        plans.append((path, out, rel))
    if not plans:
        raise FoldkitError(f"{input_path}: no *{in_suffix} files")
    return plans


def _run_jobs(plans, worker, jobs: int) -> int:
    failures = 0
    if jobs <= 1:
        for plan in plans:
            try:
                worker(plan)
            except FoldkitError as exc:
                print(f"{plan[0]}: {type(exc).__name__}: {exc}", file=sys.stderr)
                failures += 1
        return failures
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = {pool.submit(worker, plan): plan for plan in plans}
        for future in concurrent.futures.as_completed(futures):
            try:
                future.result()
            except FoldkitError as exc:
                print(f"{futures[future][0]}: {type(exc).__name__}: {exc}",
                      file=sys.stderr)
                failures += 1
    return failures


def _read_text(path: str) -> str:
    try:
        with open(path, "r", errors="replace") as fh:
            return fh.read()
    except OSError as exc:
        raise FoldkitError(f"{path}: {exc}") from exc


def _read_bytes(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise FoldkitError(f"{path}: {exc}") from exc


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def _parse_file(path: str):
    return parse_pdb(_read_text(path),
                     os.path.splitext(os.path.basename(path))[0])


def _pick_chain(structure, chain_id: str | None, path: str):
    if chain_id is not None:
        for chain in structure.chains:
            if chain.id == chain_id:
                return chain
        raise FoldkitError(f"no chain {chain_id!r}")
    if len(structure.chains) > 1:
        print(f"{path}: {len(structure.chains)} chains, encoding the first",
              file=sys.stderr)
    if not structure.chains:
        raise FoldkitError("structure has no polymer chains")
    return structure.chains[0]


def _backbone_coords(chain):
    coords = []
    for res in chain.residues:
        for name in ("N", "CA", "C", "O"):
            atom = res.atom(name)
            if atom is not None:
                coords.append(atom.position)
    return np.asarray(coords)


def _write_manifest(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


# --- subcommands ---

def run_encode(args) -> int:
    def worker(plan):
        in_path, out_path, _ = plan
        structure = _parse_file(in_path)
        chain = _pick_chain(structure, args.chain, in_path)
        encoded = encode(chain)
        _ensure_parent(out_path)
        with open(out_path, "wb") as fh:
            fh.write(encoded.to_bytes())
        rebuilt = decode(encoded)
        sup = kabsch(_backbone_coords(chain), _backbone_coords(rebuilt))
        print(f"{in_path}: {encoded.n_residues} residues, "
              f"round-trip backbone RMSD {sup.rmsd:.4f} A", file=sys.stderr)

    plans = _plan(args.input, args.output, ".pdb", ".fkc")
    return 2 if _run_jobs(plans, worker, args.jobs) else 0


def run_decode(args) -> int:
    def worker(plan):
        in_path, out_path, _ = plan
        encoded = EncodedProtein.from_bytes(_read_bytes(in_path))
        chain = decode(encoded)
        _ensure_parent(out_path)
        with open(out_path, "w") as fh:
            fh.write(write_pdb(single_chain_structure(chain)))
        print(f"{in_path}: decoded {encoded.n_residues} residues",
              file=sys.stderr)

    plans = _plan(args.input, args.output, ".fkc", ".pdb")
    return 2 if _run_jobs(plans, worker, args.jobs) else 0


def run_featurise(args) -> int:
    scheme = FeatureScheme.from_name(args.scheme)

    def worker(plan):
        in_path, out_path, _ = plan
        structure = _parse_file(in_path)
        graph = build_graph(structure, scheme, args.k,
                            global_positions=args.global_positions)
        out_dir = (out_path if os.path.splitext(out_path)[1] == ""
                   else os.path.splitext(out_path)[0])
        os.makedirs(out_dir, exist_ok=True)
        write_tensor(os.path.join(out_dir, "scalars.fkt"), graph.scalars)
        write_tensor(os.path.join(out_dir, "coords.fkt"), graph.coords)
        write_tensor(os.path.join(out_dir, "node_vectors.fkt"),
                     graph.node_vectors)
        write_tensor(os.path.join(out_dir, "edge_vectors.fkt"),
                     graph.edge_vectors)
        with open(os.path.join(out_dir, "edges.tsv"), "w") as fh:
            fh.write(edges_to_text(graph.topology))
        _write_manifest(os.path.join(out_dir, "manifest.json"), {
            "scheme": scheme.value, "k": args.k,
            "num_nodes": graph.num_nodes,
            "vocabulary_sha256": vocabulary_sha256()})

    plans = _plan(args.input, args.output, ".pdb", None)
    return 2 if _run_jobs(plans, worker, args.jobs) else 0


def run_corrupt(args) -> int:
    try:
        kind = CorruptionKind(args.kind)
    except ValueError:
        print(f"unknown corruption kind {args.kind!r}", file=sys.stderr)
        return 1

    def worker(plan):
        in_path, out_path, rel = plan
        seed = (args.seed if os.path.isfile(args.input)
                else path_seed(args.seed, rel))
        spec = CorruptionSpec(kind, nu=args.nu, sigma=args.sigma, seed=seed)
        structure = _parse_file(in_path)
        result = corrupt_structure(structure, spec)
        out_dir = (out_path if os.path.splitext(out_path)[1] == ""
                   else os.path.splitext(out_path)[0])
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "corrupted.pdb"), "w") as fh:
            fh.write(write_pdb(result.corrupted))
        _write_targets(out_dir, result.targets)
        _write_manifest(os.path.join(out_dir, "manifest.json"), {
            "kind": kind.value, "nu": spec.nu, "sigma": spec.sigma,
            "seed": spec.seed, "lambda_aux": spec.lambda_aux})

    plans = _plan(args.input, args.output, ".pdb", None)
    return 2 if _run_jobs(plans, worker, args.jobs) else 0


def _write_targets(out_dir: str, targets) -> None:
    if targets.kind == "co":
        _write_targets(out_dir, targets.sequence)
        _write_targets(out_dir, targets.structure)
        return
    if targets.kind == "sequence":
        write_tensor(os.path.join(out_dir, "seq_positions.fkt"),
                     targets.positions.reshape(-1, 1))
        write_tensor(os.path.join(out_dir, "seq_original_types.fkt"),
                     targets.original_residues.reshape(-1, 1))
    elif targets.kind == "coordinate":
        write_tensor(os.path.join(out_dir, "coord_noise.fkt"), targets.noise)
    elif targets.kind == "torsional":
        write_tensor(os.path.join(out_dir, "angular_noise.fkt"),
                     targets.angular_noise)
        write_tensor(os.path.join(out_dir, "original_angles.fkt"),
                     targets.original_angles)


def run_label(args) -> int:
    ligands = {code.strip().upper() for code in args.ligands.split(",")
               if code.strip()}

    def worker(plan):
        in_path, out_path, _ = plan
        structure = _parse_file(in_path)
        if args.mode == "metal":
            labels = binding_site_labels(structure, ligands, args.cutoff)
        else:
            labels = interface_labels(structure, args.cutoff)
        rows = [f"{chain.id},{res.seq_index},{label}"
                for (chain, res), label in
                zip(structure.iter_residues(), labels.labels)]
        _ensure_parent(out_path)
        with open(out_path, "w") as fh:
            fh.write("chain,seq_index,label\n")
            fh.write("\n".join(rows) + "\n")

    plans = _plan(args.input, args.output, ".pdb", ".csv")
    return 2 if _run_jobs(plans, worker, args.jobs) else 0


def run_filter(args) -> int:
    spec = load_filter_spec(_read_text(args.spec))
    if not os.path.isdir(args.input):
        raise FoldkitError(f"{args.input}: not a directory")
    accepted = []
    for path in _walk(args.input, ".pdb"):
        try:
            structure = _parse_file(path)
        except FoldkitError as exc:
            print(f"{path}: skipped ({exc})", file=sys.stderr)
            continue
        if spec.matches(structure):
            accepted.append(path)
    _ensure_parent(args.output)
    with open(args.output, "w") as fh:
        for path in accepted:
            fh.write(path + "\n")
    print(f"{args.input}: accepted {len(accepted)} structures",
          file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="foldkit",
                     description="Protein structure toolkit pipelines.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, jobs=True):
        p.add_argument("input")
        p.add_argument("output")
        if jobs:
            p.add_argument("--jobs", type=int, default=1,
                           help="parallel workers for directory inputs")

    p = sub.add_parser("encode", help="compress PDB to FKC1")
    add_common(p)
    p.add_argument("--chain", default=None,
                   help="chain id to encode (default: first)")
    p.set_defaults(func=run_encode)

    p = sub.add_parser("decode", help="reconstruct PDB from FKC1")
    add_common(p)
    p.set_defaults(func=run_decode)

    p = sub.add_parser("featurise", help="write graph tensors")
    add_common(p)
    p.add_argument("--scheme", default=FeatureScheme.CA_BB.value,
                   choices=[s.value for s in FeatureScheme])
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--global-positions", action="store_true")
    p.set_defaults(func=run_featurise)

    p = sub.add_parser("corrupt", help="generate denoising inputs/targets")
    add_common(p)
    p.add_argument("--kind", default=CorruptionKind.SEQ_MUTATE.value,
                   choices=[k.value for k in CorruptionKind])
    p.add_argument("--nu", type=float, default=DEFAULT_NU)
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=run_corrupt)

    p = sub.add_parser("label", help="proximity labels as CSV")
    add_common(p)
    p.add_argument("--mode", choices=("metal", "interface"), required=True)
    p.add_argument("--ligands", default="",
                   help="comma-separated hetero codes for metal mode")
    p.add_argument("--cutoff", type=float, default=DEFAULT_CUTOFF)
    p.set_defaults(func=run_label)

    p = sub.add_parser("filter", help="write a manifest of accepted files")
    add_common(p, jobs=False)
    p.add_argument("--spec", required=True, help="key=value filter file")
    p.set_defaults(func=run_filter)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=(logging.WARNING, logging.INFO,
                               logging.DEBUG)[min(args.verbose, 2)])
    try:
        return args.func(args)
    except FoldkitError as exc:
        print(f"foldkit {args.command}: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"foldkit {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
