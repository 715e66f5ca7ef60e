"""Command-line front end.

Subcommands::

    interpcp gen      generate (or ingest) a study dataset -> dataset.csv
    interpcp run      full pipeline -> dataset.csv, report.csv, report.json[, heatmap_*.csv]
    interpcp heatmap  heatmap grids for the model selected by an earlier run
    interpcp verify   oracle self-checks

Exit codes: 0 success, 1 failed self-check, 2 config error, 3 data error,
4 selection failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from . import verify
from .config import STUDIES, ConfigError, load_config
from .data import DataError, read_csv, write_csv
from .exprdsl.candidates import EvaluationError
from .heatmap import emit_heatmaps
from .modelselect import SelectionError
from .pipeline import build_dataset, model_from_report, run_pipeline, run_seeds

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_DATA, EXIT_SELECTION = 0, 1, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-q", "--quiet", action="store_true", help="suppress progress messages")
    p = argparse.ArgumentParser(prog="interpcp", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, hlp in (("gen", "generate or ingest a dataset"), ("run", "run the selection pipeline")):
        s = sub.add_parser(name, help=hlp, parents=[common])
        s.add_argument("--config", help="YAML run configuration")
        s.add_argument("--study", choices=STUDIES)
        s.add_argument("--seed", type=int)
        s.add_argument("--out", help="output directory")
    h = sub.add_parser("heatmap", help="grids for the model selected by a finished run", parents=[common])
    h.add_argument("--out", required=True, help="directory holding report.json and dataset.csv")
    h.add_argument("--config", help="YAML file whose 'heatmap' section overrides the run's settings")
    sub.add_parser("verify", help="run oracle self-checks", parents=[common])
    return p


def _gen(args) -> int:
    cfg = load_config(args.config, args.study, args.seed, args.out)
    data = build_dataset(cfg, run_seeds(cfg.seed)["data"])
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(data, out / "dataset.csv")
    print(f"wrote {out / 'dataset.csv'} ({data.n} rows)")
    return EXIT_OK


def _run(args) -> int:
    cfg = load_config(args.config, args.study, args.seed, args.out)
    res = run_pipeline(cfg)
    sel = res.selection
    print(f"lambda_opt {sel.lambda_opt:g}; selected model {sel.selected_id}: {sel.selected.form}")
    print(res.selected_model.render(res.dataset.feature_names))
    for f in res.files:
        print(f"wrote {f}")
    return EXIT_OK


def _heatmap(args) -> int:
    out = Path(args.out)
    try:
        report = json.loads((out / "report.json").read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read {out / 'report.json'}: {e}") from None
    hm = dict(report["config"]["heatmap"])
    if args.config:
        try:
            raw = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from None
        hm.update(raw.get("heatmap") or {})
    data = read_csv(out / "dataset.csv", report["dataset"]["target_names"])
    paths = emit_heatmaps(model_from_report(report), data, out, hm["views"], int(hm["steps"]), hm.get("axes"))
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _verify(_args) -> int:
    results = verify.run_all()
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    handler = {"gen": _gen, "run": _run, "heatmap": _heatmap, "verify": _verify}[args.command]
    try:
        return handler(args)
    except ConfigError as e:
        print(f"interpcp: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, EvaluationError) as e:
        print(f"interpcp: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except SelectionError as e:
        print(f"interpcp: selection failure: {e}", file=sys.stderr)
        return EXIT_SELECTION


if __name__ == "__main__":
    sys.exit(main())
