"""Command-line front end.

::

    conformalrf run --mode icp --train train.csv --test test.csv --out results/
    conformalrf run --config experiment.json --seed 7
    conformalrf generate --n-per-class 500 --centers "0,0;3,3" --spread 1 --seed 0 --out train.csv

``run`` writes ``pvalues.csv`` and ``regions.csv``, plus ``metrics.json`` and
``calibration.csv`` when the test file carries true labels. Settings come
from an optional JSON config file whose keys are the :class:`RunConfig`
field names; command-line flags override it.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from conformalrf.core import ConformalError, DataError, check_epsilon, check_seed
from conformalrf.evaluation import SignificanceGrid, evaluate, error_rate, efficiency
from conformalrf.forest import ForestConfig
from conformalrf.io import (
    generate_synthetic,
    load_csv,
    read_csv,
    read_labeled_table,
    resolve_label_column,
    write_calibration,
    write_pvalues,
    write_regions,
)
from conformalrf.predictors import TcpConfig, icp_fit, icp_pvalues, tcp_pvalues

logger = logging.getLogger("conformalrf")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class ConfigError(ConformalError):
    """Invalid run configuration or command-line usage."""


def parse_grid(spec) -> SignificanceGrid:
    """Grid from ``None`` (default), a list of levels, ``"a,b,c"`` or ``"start:stop:step"``."""
    if spec is None:
        return SignificanceGrid()
    if isinstance(spec, SignificanceGrid):
        return spec
    try:
        if isinstance(spec, str):
            if ":" in spec:
                start, stop, step = (float(s) for s in spec.split(":"))
                count = int(round((stop - start) / step)) + 1
                return SignificanceGrid(tuple(round(start + k * step, 12) for k in range(count)))
            return SignificanceGrid(tuple(float(s) for s in spec.split(",")))
        return SignificanceGrid(tuple(float(s) for s in spec))
    except (ValueError, TypeError, ZeroDivisionError, ConformalError) as exc:
        raise ConfigError(f"invalid grid {spec!r}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    mode: str
    train: str
    test: str
    output_dir: str
    label_column: Union[int, str] = -1
    proper_fraction: float = 0.7
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    features_per_split: Union[int, str] = "sqrt"
    seed: int = 0
    epsilon: float = 0.05
    grid: Optional[Union[str, list]] = None
    require_metrics: bool = False

    def __post_init__(self):
        if self.mode not in ("tcp", "icp"):
            raise ConfigError(f"mode must be 'tcp' or 'icp', got {self.mode!r}")
        if not 0.0 < float(self.proper_fraction) < 1.0:
            raise ConfigError(f"proper_fraction must lie in (0, 1), got {self.proper_fraction}")
        try:
            check_epsilon(float(self.epsilon))
            check_seed(self.seed)
            self.forest_config
        except ConformalError as exc:
            raise ConfigError(str(exc)) from None
        parse_grid(self.grid)

    @property
    def forest_config(self) -> ForestConfig:
        return ForestConfig(self.n_trees, self.max_depth, self.min_samples_leaf,
                            self.features_per_split)

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - names)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {unknown}")
        missing = [n for n in ("mode", "train", "test", "output_dir") if values.get(n) is None]
        if missing:
            raise ConfigError(f"missing required settings: {missing}")
        return cls(**values)


def _test_objects(config: RunConfig, train_header):
    """Test features plus true label indices (``None`` when the file is unlabeled)."""
    label_name = train_header[resolve_label_column(train_header, config.label_column)]
    X, labels, names = read_labeled_table(config.test, label_name, require_labels=False)
    train_features = [h for h in train_header if h != label_name]
    if list(names) != train_features:
        raise DataError(
            f"{config.test}: feature columns {list(names)} do not match the training "
            f"columns {train_features}"
        )
    return X, labels


def run(config: RunConfig) -> dict:
    """Execute one experiment and write its artifacts; returns the written paths."""
    for path in (config.train, config.test):
        if not os.path.isfile(path):
            raise ConfigError(f"input file not found: {path}")
    grid = parse_grid(config.grid)
    train = load_csv(config.train, config.label_column)
    header, _ = read_csv(config.train)
    X, raw_truths = _test_objects(config, header)
    truths = None if raw_truths is None else train.label_space.encode(raw_truths)
    if truths is None and config.require_metrics:
        raise DataError(f"{config.test}: metrics requested but the test set has no labels")

    logger.info("%s: %d training rows, %d test objects, %d classes",
                config.mode.upper(), train.n, X.shape[0], train.n_classes)
    if config.mode == "icp":
        model = icp_fit(train, config.proper_fraction, config.forest_config, config.seed)
        pvalues = icp_pvalues(model, X, config.seed)
    else:
        pvalues = tcp_pvalues(train, X, TcpConfig(config.forest_config, config.seed))

    os.makedirs(config.output_dir, exist_ok=True)
    out = {name: os.path.join(config.output_dir, name)
           for name in ("pvalues.csv", "regions.csv", "metrics.json", "calibration.csv")}
    write_pvalues(pvalues, out["pvalues.csv"])
    write_regions(pvalues, config.epsilon, out["regions.csv"])
    if truths is None:
        logger.warning("test set has no label column; metrics and calibration curve skipped")
        del out["metrics.json"], out["calibration.csv"]
        return out

    report = evaluate(pvalues, truths, grid)
    metrics = {
        "epsilon": config.epsilon,
        "error_rate": error_rate(pvalues, truths, config.epsilon),
        "efficiency": efficiency(pvalues, config.epsilon),
        "validity_deviation": report.validity_deviation,
        "observed_fuzziness": report.observed_fuzziness,
        "grid": list(grid.epsilons),
    }
    with open(out["metrics.json"], "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=2)
        fh.write("\n")
    write_calibration(report.calibration_curve, out["calibration.csv"])
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _label_column(value: str):
    try:
        return int(value)
    except ValueError:
        return value


def _centers(value: str):
    try:
        return [[float(c) for c in point.split(",")] for point in value.split(";")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse centers {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="conformalrf", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run TCP or ICP on train/test CSV files")
    r.add_argument("--config", help="JSON file of RunConfig settings")
    # None means "not given" so the config file value survives.
    r.add_argument("--mode", choices=["tcp", "icp"], default=None)
    r.add_argument("--train", default=None)
    r.add_argument("--test", default=None)
    r.add_argument("--out", dest="output_dir", default=None)
    r.add_argument("--label-column", type=_label_column, default=None,
                   help="name or index of the label column (default: last)")
    r.add_argument("--proper-fraction", type=float, default=None)
    r.add_argument("--n-trees", type=int, default=None)
    r.add_argument("--max-depth", type=int, default=None)
    r.add_argument("--min-samples-leaf", type=int, default=None)
    r.add_argument("--features-per-split", type=_label_column, default=None,
                   help="integer or 'sqrt'")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--epsilon", type=float, default=None)
    r.add_argument("--grid", default=None, help="'start:stop:step' or comma list")
    r.add_argument("--require-metrics", action="store_true", default=None)

    g = sub.add_parser("generate", help="write a synthetic Gaussian-blob CSV")
    g.add_argument("--n-per-class", type=int, required=True)
    g.add_argument("--centers", type=_centers, required=True, help="e.g. '0,0;3,3'")
    g.add_argument("--spread", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    return parser


def _run_config(args) -> RunConfig:
    values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from None
        if not isinstance(values, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")
    for field in dataclasses.fields(RunConfig):
        given = getattr(args, field.name, None)
        if given is not None:
            values[field.name] = given
    return RunConfig.from_mapping(values)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "generate":
            try:
                generate_synthetic(args.n_per_class, np.array(args.centers), args.spread,
                                   args.seed, args.out)
            except DataError:
                raise
            except ConformalError as exc:
                raise ConfigError(str(exc)) from None
            logger.info("wrote %s", args.out)
        else:
            out = run(_run_config(args))
            for path in out.values():
                logger.info("wrote %s", path)
    except ConfigError as exc:
        print(f"conformalrf: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ValueError) as exc:
        print(f"conformalrf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"conformalrf: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
