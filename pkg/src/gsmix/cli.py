"""Command-line front end.

Subcommands::

    gsmix transform    images -> coefficient blocks (.gsmb) + manifest.json
    gsmix fit          blocks -> per-block JSON reports + CSV aggregates
    gsmix report       report JSONs -> CSV aggregates
    gsmix independence blocks -> independence report JSON
    gsmix dist         sample / cdf / pdf / moments of one distribution

Each command reads an optional JSON config (``--config``); flags override
config keys.  Outputs carry no timestamps or absolute paths, so identical
config, inputs and seed give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import glob
import hashlib
import io
import json
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import GsmError, TooFewObservations
from .fitter import GridSpec, Thresholds, TrimSpec, fit_block, skew_check
from .independence import independence_report, per_image_rows
from .pipeline import (
    assemble_blocks,
    block_filename,
    block_to_bytes,
    fourier_band_partition,
    profile_plan,
    read_block,
    transform_image,
)
from .prior import PriorParams, draw_samples, moment, pdf, tabulate_cdf
from .transforms import FilterBank, load_image, load_volume

log = logging.getLogger("gsmix")

EXIT_OK, EXIT_NO_OUTPUT, EXIT_CONFIG = 0, 1, 2
VOLUME_SUFFIXES = {".raw", ".f32", ".vol"}


class ConfigError(Exception):
    pass


# ------------------------------------------------------------------ helpers

def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(text.encode("utf-8"))


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _merge(cfg: dict, args: argparse.Namespace, keys: dict[str, str]) -> dict:
    out = dict(cfg)
    for attr, key in keys.items():
        val = getattr(args, attr, None)
        if val is not None and val != []:
            out[key] = val
    return out


def _require_seed(cfg: dict) -> int:
    if cfg.get("seed") is None:
        raise ConfigError("a seed is required (--seed or \"seed\" in the config)")
    try:
        return int(cfg["seed"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed must be an integer, got {cfg['seed']!r}") from exc


def _dataclass_from(cls, data: dict | None, what: str):
    if not data:
        return cls()
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown {what} keys: {unknown}")
    kw = {k: (tuple(v) if isinstance(v, list) else v) for k, v in data.items()}
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {what}: {exc}") from exc


def _expand_inputs(patterns, skip_json: bool = True) -> list[Path]:
    if isinstance(patterns, str):
        patterns = [patterns]
    files = set()
    for pat in patterns or []:
        hits = glob.glob(pat, recursive=True)
        if not hits:
            raise ConfigError(f"input pattern matched nothing: {pat}")
        files.update(Path(h) for h in hits if Path(h).is_file() and not (skip_json and h.endswith(".json")))
    if not files:
        raise ConfigError("no input files")
    return sorted(files, key=lambda p: str(p))


def _seed_for(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


# ---------------------------------------------------------------- transform

def cmd_transform(args: argparse.Namespace) -> int:
    cfg = _merge(_load_config(args.config), args, {
        "input": "inputs", "transform": "transform", "bank": "filter_bank",
        "profile": "profile", "layers": "n_layers", "dataset": "dataset",
        "out": "output_dir", "seed": "seed",
    })
    seed = _require_seed(cfg)
    transform = cfg.get("transform", "haar")
    if transform not in ("haar", "fourier", "filterbank"):
        raise ConfigError(f"unknown transform {transform!r}")
    files = _expand_inputs(cfg.get("inputs"))
    out_dir = Path(cfg.get("output_dir", "gsmix_out"))
    dataset = str(cfg.get("dataset", "dataset"))
    overrides = dict(cfg.get("plan", {}))
    if "n_layers" in cfg:
        overrides["n_layers"] = int(cfg["n_layers"])
    if "grayscale" in cfg:
        overrides["grayscale"] = bool(cfg["grayscale"])
    try:
        plan = profile_plan(cfg.get("profile", "natural"), **overrides)
        plan.check(transform)
    except (GsmError, TypeError) as exc:
        raise ConfigError(f"invalid grouping plan: {exc}") from exc
    thresholds = _dataclass_from(Thresholds, cfg.get("thresholds"), "thresholds")

    bank, bank_info = None, None
    if transform == "filterbank":
        if not cfg.get("filter_bank"):
            raise ConfigError("filterbank transform needs filter_bank (--bank)")
        bank_path = Path(cfg["filter_bank"])
        if not bank_path.is_file():
            raise ConfigError(f"filter bank not found: {bank_path}")
        try:
            bank = FilterBank.load(bank_path)
        except (GsmError, KeyError, ValueError) as exc:
            raise ConfigError(f"bad filter bank: {exc}") from exc
        bank_info = {"file": bank_path.name, "sha256": _sha256(bank_path.read_bytes()),
                     "n_filters": len(bank.filters)}

    inputs, outputs = [], []
    for path in files:
        entry = {"file": str(path), "sha256": _sha256(path.read_bytes())}
        try:
            img = load_volume(path) if path.suffix.lower() in VOLUME_SUFFIXES else load_image(path)
            t = transform_image(img, transform, plan, bank, image_id=path.name)
            outputs.append(t)
            entry["status"] = "ok"
            entry["degenerate"] = t.degenerate
        except Exception as exc:  # per-file failures are recorded, not fatal
            entry["status"] = "error"
            entry["error"] = f"{type(exc).__name__}: {exc}"
            log.warning("skipping %s: %s", path, exc)
        inputs.append(entry)

    manifest = {
        "command": "transform",
        "version": __version__,
        "dataset": dataset,
        "transform": transform,
        "profile": cfg.get("profile", "natural"),
        "seed": seed,
        "inputs": inputs,
        "filter_bank": bank_info,
        "blocks": [],
        "excluded": [],
        "errors": [],
    }
    blocks = []
    if outputs:
        try:
            if transform == "fourier":
                plan = replace(plan, band_partition=fourier_band_partition(outputs, plan))
                manifest["band_partition"] = plan.band_partition.to_dict()
            blocks = assemble_blocks(outputs, plan, dataset)
        except GsmError as exc:
            manifest["errors"].append(f"{type(exc).__name__}: {exc}")
    manifest["plan"] = plan.to_dict()

    block_dir = out_dir / "blocks"
    for i, block in enumerate(blocks):
        if transform == "filterbank":
            fid = block.meta.extra.get("filter")
            try:
                sk = skew_check(block, thresholds, _seed_for(seed, i))
            except GsmError as exc:
                manifest["errors"].append(f"{block.meta.group}: {exc}")
                continue
            if sk.excluded:
                manifest["excluded"].append({
                    "group": block.meta.group, "filter": fid,
                    "category": next((f.category for f in bank.filters if f.id == fid), None),
                    "skew": sk.skew_estimate, "ci": [sk.ci_low, sk.ci_high],
                })
                continue
        data = block_to_bytes(block)
        name = block_filename(block.meta)
        block_dir.mkdir(parents=True, exist_ok=True)
        (block_dir / name).write_bytes(data)
        manifest["blocks"].append({"file": f"blocks/{name}", "group": block.meta.group,
                                   "n": block.n, "sha256": _sha256(data)})
    _write_text(out_dir / "manifest.json", _dumps(manifest))
    n = len(manifest["blocks"])
    print(f"{n} blocks written to {block_dir} ({len(manifest['excluded'])} excluded)")
    return EXIT_OK if n else EXIT_NO_OUTPUT


# ---------------------------------------------------------------------- fit

REPORT_COLUMNS = ["file", "dataset", "transform", "group", "n", "r", "eta", "theta", "t_star",
                  "ks", "p_value", "category", "statistical_pass", "combined_pass",
                  "lper_intersects", "error"]
SUMMARY_COLUMNS = ["transform", "dataset", "n_blocks", "median_samples", "median_ks",
                   "statistical_pass_pct", "combined_pass_pct", "lper_intersect_pct"]


def _block_row(name: str, report: dict) -> dict:
    meta = report.get("meta", {})
    row = {k: "" for k in REPORT_COLUMNS}
    row.update(file=name, dataset=meta.get("dataset", ""), transform=meta.get("transform", ""),
               group=meta.get("group", ""))
    if "error" in report:
        row.update(category="error", error=report["error"], n=report.get("n", ""))
        return row
    cat = report["category"]
    row.update(n=report["n"], r=report["best"]["r"], eta=report["best"]["eta"],
               theta=report["best"]["theta"], t_star=report["best"]["t_star"],
               ks=report["ks"], p_value=report["p_value"], category=cat,
               statistical_pass=int(cat == "statistical_pass"),
               combined_pass=int(cat in ("statistical_pass", "practical_pass")),
               lper_intersects=int(report["lper"]["intersects"]))
    return row


def _summary_rows(rows: list[dict]) -> list[dict]:
    groups: dict[tuple[str, str], list[dict]] = {}
    for row in rows:
        if row["category"] != "error":
            groups.setdefault((row["transform"], row["dataset"]), []).append(row)
    out = []
    for (transform, dataset), rs in sorted(groups.items()):
        m = len(rs)
        out.append({
            "transform": transform, "dataset": dataset, "n_blocks": m,
            "median_samples": float(np.median([r["n"] for r in rs])),
            "median_ks": float(np.median([r["ks"] for r in rs])),
            "statistical_pass_pct": 100.0 * sum(r["statistical_pass"] for r in rs) / m,
            "combined_pass_pct": 100.0 * sum(r["combined_pass"] for r in rs) / m,
            "lper_intersect_pct": 100.0 * sum(r["lper_intersects"] for r in rs) / m,
        })
    return out


def _csv_text(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def _write_aggregates(out_dir: Path, named_reports: list[tuple[str, dict]]) -> list[dict]:
    rows = [_block_row(name, rep) for name, rep in named_reports]
    _write_text(out_dir / "fit_blocks.csv", _csv_text(rows, REPORT_COLUMNS))
    _write_text(out_dir / "fit_summary.csv", _csv_text(_summary_rows(rows), SUMMARY_COLUMNS))
    return rows


def cmd_fit(args: argparse.Namespace) -> int:
    cfg = _merge(_load_config(args.config), args, {
        "blocks": "blocks", "out": "output_dir", "seed": "seed", "workers": "workers",
    })
    seed = _require_seed(cfg)
    files = _expand_inputs(cfg.get("blocks"))
    out_dir = Path(cfg.get("output_dir", "gsmix_fit"))
    grid = _dataclass_from(GridSpec, cfg.get("grid"), "grid")
    trims = _dataclass_from(TrimSpec, cfg.get("trims"), "trims")
    thresholds = _dataclass_from(Thresholds, cfg.get("thresholds"), "thresholds")
    workers = int(cfg.get("workers", 1))
    cap = int(cfg.get("subsample_cap", 100_000))
    baselines = bool(cfg.get("baselines", True))

    named = []
    for i, path in enumerate(files):
        report: dict
        try:
            block = read_block(path)
            report = {"meta": block.meta.to_dict()}
            res = fit_block(block, grid, trims, thresholds, subsample_cap=cap, workers=workers,
                            baselines=baselines, seed=_seed_for(seed, i))
            report.update(res.to_dict())
        except Exception as exc:  # recorded as an error row
            report = {"meta": locals().get("report", {}).get("meta", {}),
                      "error": f"{type(exc).__name__}: {exc}"}
            log.warning("fit failed for %s: %s", path, exc)
        report["file"] = path.name
        _write_text(out_dir / "reports" / (path.stem + ".json"), _dumps(report))
        named.append((path.name, report))
    rows = _write_aggregates(out_dir, named)
    ok = sum(r["category"] != "error" for r in rows)
    print(f"fitted {ok}/{len(rows)} blocks; reports in {out_dir}")
    return EXIT_OK if ok else EXIT_NO_OUTPUT


def cmd_report(args: argparse.Namespace) -> int:
    cfg = _merge(_load_config(args.config), args, {"reports": "reports", "out": "output_dir"})
    files = _expand_inputs(cfg.get("reports"), skip_json=False)
    named = []
    for path in files:
        try:
            named.append((json.loads(path.read_text()).get("file", path.name),
                          json.loads(path.read_text())))
        except json.JSONDecodeError as exc:
            log.warning("skipping %s: %s", path, exc)
    if not named:
        return EXIT_NO_OUTPUT
    out_dir = Path(cfg.get("output_dir", "."))
    rows = _write_aggregates(out_dir, named)
    print(f"aggregated {len(rows)} reports into {out_dir}")
    return EXIT_OK


# ------------------------------------------------------------- independence

def cmd_independence(args: argparse.Namespace) -> int:
    cfg = _merge(_load_config(args.config), args, {
        "blocks": "blocks", "out": "output", "seed": "seed", "n_boot": "n_boot",
    })
    seed = _require_seed(cfg)
    files = _expand_inputs(cfg.get("blocks"))
    blocks = [read_block(p) for p in files]
    try:
        rows, groups, _ = per_image_rows(blocks)
        rep = independence_report(rows, int(cfg.get("n_boot", 200)), seed, groups)
    except TooFewObservations as exc:
        print(f"error: {exc} (groups: {', '.join(exc.groups)})", file=sys.stderr)
        return EXIT_CONFIG
    text = _dumps(rep.to_dict())
    if cfg.get("output"):
        _write_text(Path(cfg["output"]), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------- dist

def cmd_dist(args: argparse.Namespace) -> int:
    try:
        params = PriorParams(args.r, args.eta, args.theta)
    except GsmError as exc:
        raise ConfigError(str(exc)) from exc
    buf = io.StringIO()
    if args.action == "sample":
        if args.seed is None:
            raise ConfigError("sampling needs --seed")
        for v in draw_samples(params, args.n, args.seed):
            buf.write(f"{float(v)!r}\n")
    elif args.action == "moments":
        orders = args.order or [2, 4]
        buf.write("n,moment\n")
        for k in orders:
            buf.write(f"{k},{moment(params, k)!r}\n")
    else:
        xs = np.linspace(args.x_min, args.x_max, args.num)
        if args.action == "cdf":
            vals = np.atleast_1d(tabulate_cdf(params)(xs))
        else:
            vals = np.atleast_1d(pdf(params, xs))
        buf.write(f"x,{args.action}\n")
        for x, v in zip(xs, vals):
            buf.write(f"{float(x)!r},{float(v)!r}\n")
    if args.out:
        _write_text(Path(args.out), buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gsmix", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("transform", help="images -> coefficient blocks")
    t.add_argument("--config")
    t.add_argument("--input", action="append", default=[], help="glob; repeatable")
    t.add_argument("--transform", choices=["haar", "fourier", "filterbank"])
    t.add_argument("--bank", help="filter bank JSON")
    t.add_argument("--profile", choices=["medical", "remote_sensing", "natural", "custom"])
    t.add_argument("--layers", type=int,
                   help="Haar layers including the approximation layer 1")
    t.add_argument("--dataset")
    t.add_argument("--out")
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_transform)

    f = sub.add_parser("fit", help="fit blocks")
    f.add_argument("blocks", nargs="*", help="block files or globs")
    f.add_argument("--config")
    f.add_argument("--out")
    f.add_argument("--seed", type=int)
    f.add_argument("--workers", type=int)
    f.set_defaults(func=cmd_fit)

    r = sub.add_parser("report", help="aggregate fit reports into CSVs")
    r.add_argument("reports", nargs="*", help="report JSON files or globs")
    r.add_argument("--config")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)

    i = sub.add_parser("independence", help="between-block independence diagnostics")
    i.add_argument("blocks", nargs="*")
    i.add_argument("--config")
    i.add_argument("--out")
    i.add_argument("--seed", type=int)
    i.add_argument("--n-boot", dest="n_boot", type=int)
    i.set_defaults(func=cmd_independence)

    d = sub.add_parser("dist", help="evaluate or sample one distribution")
    d.add_argument("action", choices=["sample", "cdf", "pdf", "moments"])
    d.add_argument("--r", type=float, required=True)
    d.add_argument("--eta", type=float, required=True)
    d.add_argument("--theta", type=float, default=1.0)
    d.add_argument("--n", type=int, default=1000)
    d.add_argument("--seed", type=int)
    d.add_argument("--x-min", dest="x_min", type=float, default=-5.0)
    d.add_argument("--x-max", dest="x_max", type=float, default=5.0)
    d.add_argument("--num", type=int, default=101)
    d.add_argument("--order", type=int, action="append")
    d.add_argument("--out")
    d.set_defaults(func=cmd_dist)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GsmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
