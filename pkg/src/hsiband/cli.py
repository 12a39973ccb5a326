"""Command-line front end: ``hsiband {mi-profile,select,grid,search,synth}``.

Settings come from an optional flat ``key = value`` config file (``--config``);
every key can be overridden by the flag of the same name, with underscores
spelled as hyphens. Exit codes: 0 success, 1 domain error, 2 configuration or
I/O error, 3 external classifier protocol error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import shlex
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .ascent import (DEFAULT_REDUNDANCY_AXIS, DEFAULT_RELEVANCE_AXIS, ThresholdGrid, multistart,
                     write_summary, write_trajectory)
from .bandselect import BandSelector, SelectionThresholds
from .datacube import (CUBE_FORMATS, SyntheticSpec, generate_synthetic, load_cube, load_ground_truth,
                       random_split, write_cube, write_ground_truth, write_provenance)
from .errors import ConfigError, ExternalClassifierError, FormatError, HsiBandError, ValidationError
from .wrapper import ClassifierSpec, EvaluationCache, Evaluator

log = logging.getLogger("hsiband")


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    cube: Optional[str] = None
    cube_format: str = "binary-cube"
    gt: Optional[str] = None
    levels: int = 256
    fraction: float = 0.5
    seed: int = 0
    stratified: bool = False
    classifier: str = "knn"
    k: int = 1
    command: str = ""
    normalize: bool = True
    redundancy_axis: Tuple[float, ...] = DEFAULT_REDUNDANCY_AXIS
    relevance_axis: Tuple[float, ...] = DEFAULT_RELEVANCE_AXIS
    cache: Optional[str] = None
    out: str = "."
    restarts: int = 3
    search_seed: Optional[int] = None
    literal_d_matrix: bool = False

    _parsers = {
        "levels": int, "fraction": float, "seed": int, "k": int, "restarts": int, "search_seed": int,
        "stratified": _bool, "normalize": _bool, "literal_d_matrix": _bool,
        "redundancy_axis": _floats, "relevance_axis": _floats,
    }

    @classmethod
    def keys(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, values: Dict[str, object]) -> "RunConfig":
        kwargs = {}
        for key, raw in values.items():
            if key not in cls.keys():
                raise ConfigError(f"unknown config key {key!r}")
            parse = cls._parsers.get(key)
            try:
                kwargs[key] = parse(raw) if parse and isinstance(raw, str) else raw
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
        return cls(**kwargs)

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    @property
    def cache_path(self) -> Path:
        return Path(self.cache) if self.cache else self.out_dir / "cache.csv"

    @property
    def effective_search_seed(self) -> int:
        return self.seed if self.search_seed is None else self.search_seed

    def grid(self) -> ThresholdGrid:
        try:
            return ThresholdGrid(self.redundancy_axis, self.relevance_axis)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from None

    def classifier_spec(self) -> ClassifierSpec:
        try:
            return ClassifierSpec(self.classifier, self.k, tuple(shlex.split(self.command)), self.normalize)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from None

    def validate_data_paths(self) -> None:
        for name in ("cube", "gt"):
            value = getattr(self, name)
            if not value:
                raise ConfigError(f"missing required setting {name!r}")
            if not Path(value).is_file():
                raise ConfigError(f"{name} file not found: {value}")
        if self.cube_format not in CUBE_FORMATS:
            raise ConfigError(f"cube_format must be one of {CUBE_FORMATS}")
        if not 0.0 < self.fraction < 1.0:
            raise ConfigError("fraction must lie in (0, 1)")
        if self.levels < 1:
            raise ConfigError("levels must be >= 1")


def read_config_file(path) -> Dict[str, str]:
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


# ---------------------------------------------------------------------------
# argument parsing


def _common_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--levels", help="quantization bins over the 16-bit range")
    p.add_argument("--seed", help="split / synthesis seed")
    p.add_argument("--cache", help="evaluation cache CSV (default: <out>/cache.csv)")
    p.add_argument("--cube", help="hyperspectral cube file")
    p.add_argument("--cube-format", dest="cube_format", choices=CUBE_FORMATS)
    p.add_argument("--gt", help="ground-truth text file")
    p.add_argument("--fraction", help="training fraction of labeled pixels")
    p.add_argument("--stratified", help="per-class split (true/false)")
    p.add_argument("--classifier", choices=("knn", "nearest-centroid", "external"))
    p.add_argument("--k", help="neighbour count for knn")
    p.add_argument("--command", help="external classifier command line")
    p.add_argument("--normalize", help="min-max scale bands with training statistics (true/false)")
    p.add_argument("--redundancy-axis", dest="redundancy_axis", help="comma-separated SU thresholds")
    p.add_argument("--relevance-axis", dest="relevance_axis", help="comma-separated MI thresholds")
    p.add_argument("--restarts", help="number of randomized ascent starts")
    p.add_argument("--search-seed", dest="search_seed", help="seed for start points (default: --seed)")
    p.add_argument("--literal-d-matrix", dest="literal_d_matrix",
                   help="membership test reads the overwritten working matrix (true/false)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="hsiband", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command_name", required=True)
    sub.add_parser("mi-profile", parents=[common], help="MI of every band with the ground truth")
    sel = sub.add_parser("select", parents=[common], help="band subset for one threshold couple")
    sel.add_argument("--th-relevance", dest="th_relevance", type=float, required=True)
    sel.add_argument("--th-redundancy", dest="th_redundancy", type=float, required=True)
    sub.add_parser("grid", parents=[common], help="evaluate every threshold couple of the grid")
    sub.add_parser("search", parents=[common], help="multi-start steepest ascent over the grid")
    syn = sub.add_parser("synth", parents=[common], help="write a synthetic cube, ground truth and provenance")
    defaults = SyntheticSpec()
    syn.add_argument("--width", type=int, default=defaults.width)
    syn.add_argument("--height", type=int, default=defaults.height)
    syn.add_argument("--classes", type=int, default=defaults.n_classes)
    syn.add_argument("--relevant", type=int, default=defaults.relevant_bands)
    syn.add_argument("--copies", type=int, default=defaults.redundant_copies_per_relevant)
    syn.add_argument("--noise-bands", dest="noise_bands", type=int, default=defaults.noise_bands)
    syn.add_argument("--noise-amplitude", dest="noise_amplitude", type=float, default=defaults.noise_amplitude)
    return parser


CLI_ONLY = {"config", "verbose", "command_name", "th_relevance", "th_redundancy",
            "width", "height", "classes", "relevant", "copies", "noise_bands", "noise_amplitude"}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values: Dict[str, object] = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for key, value in vars(args).items():
        if key not in CLI_ONLY:
            values[key] = value
    return RunConfig.from_mapping(values)


# ---------------------------------------------------------------------------
# commands


def _load_inputs(cfg: RunConfig):
    cfg.validate_data_paths()
    cube = load_cube(cfg.cube, cfg.cube_format)
    gt = load_ground_truth(cfg.gt)
    try:
        gt.check_matches(cube)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    return cube, gt


def _evaluator(cfg: RunConfig, cube, gt):
    split = random_split(gt, cfg.fraction, cfg.seed, stratified=cfg.stratified)
    cache = EvaluationCache(cfg.cache_path)
    return Evaluator(cube, gt, split, cfg.classifier_spec(), cache, cfg.levels, literal=cfg.literal_d_matrix)


def _prepare_out(cfg: RunConfig) -> Path:
    out = cfg.out_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    return out


def cmd_mi_profile(cfg: RunConfig) -> int:
    cube, gt = _load_inputs(cfg)
    selector = BandSelector(cube, gt, cfg.levels)
    profile = selector.profile
    out = _prepare_out(cfg)
    with (out / "mi_profile.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["band_index", "mi_bits"])
        for i, mi in enumerate(profile):
            writer.writerow([i, f"{mi:.10f}"])
    best = int(profile.argmax())
    print(f"bands: {len(profile)}  min MI: {profile.min():.4f}  max MI: {profile.max():.4f}  argmax band: {best}")
    return 0


def cmd_select(cfg: RunConfig, th_relevance: float, th_redundancy: float) -> int:
    cube, gt = _load_inputs(cfg)
    try:
        thresholds = SelectionThresholds(th_relevance, th_redundancy)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    subset = BandSelector(cube, gt, cfg.levels, literal=cfg.literal_d_matrix).select(thresholds)
    out = _prepare_out(cfg)
    with (out / "selection.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["th_relevance", "th_redundancy", "n_bands", "band_list"])
        writer.writerow([f"{th_relevance:g}", f"{th_redundancy:g}", len(subset),
                         ";".join(str(b) for b in subset.bands)])
    print(f"selected {len(subset)} bands: {' '.join(str(b) for b in subset.bands)}")
    return 0


def pivot_table(grid: ThresholdGrid, records) -> str:
    """Render records as rows of SU thresholds against columns of MI thresholds."""
    head = ["TH \\ MI"] + [f"MI > {v:g}" for v in grid.relevance_axis]
    lines = ["  ".join(f"{h:>16}" for h in head)]
    for ri, th_red in enumerate(grid.redundancy_axis):
        cells = [f"{th_red:.2f}"]
        for mi in range(len(grid.relevance_axis)):
            rec = records[(ri, mi)]
            cells.append(f"{rec.n_bands:>4d} {rec.accuracy:6.2f}" if rec.defined else "-    -")
        lines.append("  ".join(f"{c:>16}" for c in cells))
    return "\n".join(lines) + "\n"


def cmd_grid(cfg: RunConfig) -> int:
    grid = cfg.grid()
    cube, gt = _load_inputs(cfg)
    evaluator = _evaluator(cfg, cube, gt)
    records = {}
    for point in grid.points():
        try:
            records[point] = evaluator(grid.thresholds(point))
        except HsiBandError as exc:
            exc.thresholds = grid.thresholds(point)
            log.error("evaluation failed at (th_redundancy=%g, th_relevance=%g)",
                      exc.thresholds.th_redundancy, exc.thresholds.th_relevance)
            raise
    out = _prepare_out(cfg)
    with (out / "grid.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["th_redundancy", "th_relevance", "n_bands", "accuracy", "defined"])
        for (ri, mi), rec in sorted(records.items()):
            writer.writerow([f"{grid.redundancy_axis[ri]:g}", f"{grid.relevance_axis[mi]:g}", rec.n_bands,
                             f"{rec.accuracy:.4f}" if rec.defined else "", int(rec.defined)])
    (out / "grid_table.txt").write_text(pivot_table(grid, records))
    evaluator.cache.save()
    log.info("classifier invocations: %d", evaluator.classifier_calls)
    print(f"grid {grid.shape[0]}x{grid.shape[1]} written; classifier invocations: {evaluator.classifier_calls}")
    return 0


def cmd_search(cfg: RunConfig) -> int:
    grid = cfg.grid()
    if cfg.restarts < 1:
        raise ConfigError("restarts must be >= 1")
    cube, gt = _load_inputs(cfg)
    evaluator = _evaluator(cfg, cube, gt)
    best, results = multistart(grid, cfg.restarts, cfg.effective_search_seed, evaluator)
    out = _prepare_out(cfg)
    for i, result in enumerate(results, start=1):
        write_trajectory(grid, result, out / f"trajectory_{i}.csv")
    write_summary(grid, results, out / "search_summary.csv")
    evaluator.cache.save()
    log.info("classifier invocations: %d", evaluator.classifier_calls)
    print(f"best couple (TH-MI) {grid.label(best.final_point)}: {best.final_record.n_bands} bands, "
          f"accuracy {best.final_record.accuracy:.2f}%")
    print(f"classifier invocations: {evaluator.classifier_calls}")
    return 0


def cmd_synth(cfg: RunConfig, args: argparse.Namespace) -> int:
    spec = SyntheticSpec(args.width, args.height, args.classes, args.relevant, args.copies,
                         args.noise_bands, args.noise_amplitude)
    try:
        spec.validate()
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    cube, gt, roles = generate_synthetic(spec, cfg.seed)
    out = _prepare_out(cfg)
    suffix = "hsic" if cfg.cube_format == "binary-cube" else "csv"
    write_cube(cube, out / f"cube.{suffix}", cfg.cube_format)
    write_ground_truth(gt, out / "gt.txt")
    write_provenance(roles, out / "provenance.csv")
    print(f"wrote {cube.n_bands}-band {cube.height}x{cube.width} cube to {out}")
    return 0


def run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    name = args.command_name
    if name == "mi-profile":
        return cmd_mi_profile(cfg)
    if name == "select":
        return cmd_select(cfg, args.th_relevance, args.th_redundancy)
    if name == "grid":
        return cmd_grid(cfg)
    if name == "search":
        return cmd_search(cfg)
    return cmd_synth(cfg, args)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except ExternalClassifierError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HsiBandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
