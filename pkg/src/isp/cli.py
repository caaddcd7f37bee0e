"""Command-line entry point: ``isp solve|warmstart|coverage|simulate``.

Every command writes a JSON report carrying ``schema_version`` and a run
manifest (resolved config, seed, input digests, tool version). Options may
come from a JSON ``--config`` file; explicit flags win. Exit status is 0 on
success, 1 on usage errors and 2 on data or solver errors, with the message
on stderr prefixed by ``error:``.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .catalog import Catalog, IncidenceMatrix, build_incidence, load_catalog
from .embed import EmbeddingMatrix, load_embeddings, tfidf_embed
from .errors import IspError
from .explore import SimulationConfig, simulate
from .pipeline import IspConfig, coverage, solve_isp
from .warmstart import SAMPLE_CAP, unit_coverage, warm_start

SCHEMA_VERSION = 1
logger = logging.getLogger("isp")

DEFAULTS = {
    "catalog": None,
    "format": None,
    "categories": None,
    "pairs": None,
    "embedding": "tfidf",
    "metric": "euclidean",
    "vocab_size": 1000,
    "seed": 0,
    "threads": 1,
    "t": None,
    "backend": "auto",
    "diversity_mode": "cardinality_bound",
    "time_budget": 30.0,
    "q": 0.1,
    "sample_cap": SAMPLE_CAP,
    "warm": None,
    "cold": None,
    "selection": None,
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option values (flags override it)")
    p.add_argument("--catalog", help="catalog file (.csv or .json)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--categories", help="comma-separated categories to cover (default: all)")
    p.add_argument("--pairs", help="category pairs for composite labels, e.g. genre:language,genre:producer")
    p.add_argument("--embedding", help="'tfidf' or 'file:<path>'")
    p.add_argument("--metric", choices=["euclidean", "cosine"])
    p.add_argument("--vocab-size", type=int, dest="vocab_size")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="upper bound on worker threads")
    p.add_argument("--out", default="-", help="report path (default: stdout)")
    p.add_argument("--timing", action="store_true", help="record wall time in the manifest")
    p.add_argument("-v", "--verbose", action="store_true", help="log one line per solver level")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"isp {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("solve", help="multi-level item selection")
    _add_common(p)
    p.add_argument("--t", type=int, help="maximum number of selected items")
    p.add_argument("--backend", choices=["greedy", "exact", "auto"])
    p.add_argument("--diversity-mode", dest="diversity_mode", choices=["cardinality_bound", "warm_start"])
    p.add_argument("--time-budget", type=float, dest="time_budget", help="seconds per exact solve")

    p = sub.add_parser("warmstart", help="map cold items to warm donors")
    _add_common(p)
    p.add_argument("--warm", help="file with one warm item id per line")
    p.add_argument("--cold", help="file with cold item ids (default: every non-warm item)")
    p.add_argument("--q", type=float, help="distance quantile for the threshold")
    p.add_argument("--sample-cap", type=int, dest="sample_cap")

    p = sub.add_parser("coverage", help="label coverage of a selection")
    _add_common(p)
    p.add_argument("--selection", help="file with item ids, or a 'solve' report")
    p.add_argument("--q", type=float, help="also report coverage after warm-start at this quantile")
    p.add_argument("--sample-cap", type=int, dest="sample_cap")

    p = sub.add_parser("simulate", help="offline exploration simulation")
    _add_common(p)
    p.add_argument("--q", type=float)
    p.add_argument("--exploration", choices=["top_batch", "weighted_random"],
                   help="how isp_order_weighted picks its batch from the weights")
    p.add_argument("--table", action="store_true", help="print an aligned policy table to stdout")
    return parser


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _resolve(args: argparse.Namespace) -> tuple[dict, dict]:
    """Merge defaults, the --config file and explicit flags; return (options, input digests)."""
    opts = dict(DEFAULTS)
    inputs = {}
    base = Path(".")
    if args.config:
        cfg_path = Path(args.config)
        if not cfg_path.exists():
            raise DataError(f"config not found: {args.config}")
        try:
            cfg = json.loads(cfg_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"config is not valid JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise DataError("config must be a JSON object")
        inputs[args.config] = _digest(cfg_path)
        base = cfg_path.parent
        for key in ("catalog", "warm", "cold", "selection"):
            if isinstance(cfg.get(key), str):
                cfg[key] = str(base / cfg[key])
        emb = cfg.get("embedding")
        if isinstance(emb, str) and emb.startswith("file:"):
            cfg["embedding"] = "file:" + str(base / emb[5:])
        opts.update(cfg)
    for key, value in vars(args).items():
        if key in ("command", "config", "out", "timing", "verbose", "table"):
            continue
        if value is not None:
            opts[key] = value
    if opts["threads"] is None or int(opts["threads"]) < 1:
        raise UsageError("--threads must be at least 1")
    return opts, inputs


def _parse_list(value) -> list[str] | None:
    if value is None:
        return None
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return list(value)


def _parse_pairs(value) -> list[tuple[str, str]]:
    out = []
    for item in _parse_list(value) or []:
        if isinstance(item, str):
            a, sep, b = item.partition(":")
            if not sep or not a or not b:
                raise UsageError(f"bad pair {item!r}; expected category:category")
            out.append((a, b))
        else:
            out.append(tuple(item))
    return out


def _load_inputs(opts: dict, inputs: dict) -> tuple[Catalog, IncidenceMatrix]:
    if not opts["catalog"]:
        raise UsageError("--catalog is required")
    path = Path(opts["catalog"])
    if not path.exists():
        raise DataError(f"catalog not found: {opts['catalog']}")
    inputs[str(opts["catalog"])] = _digest(path)
    catalog = load_catalog(path, opts["format"])
    incidence = build_incidence(catalog, _parse_list(opts["categories"]), _parse_pairs(opts["pairs"]))
    return catalog, incidence


def _load_embedding(opts: dict, inputs: dict, catalog: Catalog) -> EmbeddingMatrix:
    source = opts["embedding"]
    if source == "tfidf":
        return tfidf_embed(catalog, int(opts["vocab_size"]), normalize=True, metric=opts["metric"])
    if isinstance(source, str) and source.startswith("file:"):
        path = Path(source[5:])
        if not path.exists():
            raise DataError(f"embedding not found: {source[5:]}")
        inputs[source[5:]] = _digest(path)
        return load_embeddings(path, catalog, metric=opts["metric"])
    raise UsageError(f"bad --embedding {source!r}; expected 'tfidf' or 'file:<path>'")


def _read_ids(path_str: str, inputs: dict) -> list[str]:
    path = Path(path_str)
    if not path.exists():
        raise DataError(f"file not found: {path_str}")
    inputs[path_str] = _digest(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        doc = json.loads(text)
        if isinstance(doc, dict):
            return list(doc["result"]["selections"]["final"]["item_ids"])
        return [str(x) for x in doc]
    return [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")]


def cmd_solve(opts: dict, inputs: dict) -> dict:
    catalog, incidence = _load_inputs(opts, inputs)
    E = _load_embedding(opts, inputs, catalog)
    config = IspConfig(
        t=opts["t"],
        seed=int(opts["seed"]),
        backend=opts["backend"],
        diversity_mode=opts["diversity_mode"],
        time_budget=opts["time_budget"],
    )
    result = solve_isp(catalog, E, config, incidence)
    out = result.to_dict()
    out["incidence"] = {
        "n_rows": incidence.n_rows,
        "n_items": incidence.n_cols,
        "uncoverable": [str(lab) for lab in incidence.uncoverable],
    }
    return out


def cmd_warmstart(opts: dict, inputs: dict) -> dict:
    catalog, _ = _load_inputs(opts, inputs)
    E = _load_embedding(opts, inputs, catalog)
    if not opts["warm"]:
        raise UsageError("--warm is required")
    warm = _read_ids(opts["warm"], inputs)
    if opts["cold"]:
        cold = _read_ids(opts["cold"], inputs)
    else:
        warm_set = set(warm)
        cold = [i for i in catalog.ids if i not in warm_set]
    ws = warm_start(warm, cold, E, float(opts["q"]), int(opts["sample_cap"]), int(opts["seed"]))
    return ws.to_dict()


def cmd_coverage(opts: dict, inputs: dict) -> dict:
    catalog, incidence = _load_inputs(opts, inputs)
    if not opts["selection"]:
        raise UsageError("--selection is required")
    ids = _read_ids(opts["selection"], inputs)
    out = {"selection": ids, "coverage": coverage(ids, incidence).to_dict()}
    if opts.get("with_warmstart"):
        E = _load_embedding(opts, inputs, catalog)
        chosen = set(ids)
        ws = warm_start(ids, [i for i in catalog.ids if i not in chosen], E, float(opts["q"]),
                        int(opts["sample_cap"]), int(opts["seed"]))
        union = list(ws.warm) + list(ws.assignments)
        out["after_warmstart"] = {
            "q": ws.q,
            "w": ws.w,
            "n_warmstarted": len(ws.assignments),
            "coverage": coverage(union, incidence).to_dict(),
            "unit_coverage": unit_coverage(max(len(ids), 1), ws, incidence),
        }
    return out


def cmd_simulate(opts: dict, inputs: dict):
    for required in ("K", "k"):
        if required not in opts:
            raise UsageError(f"simulation config needs {required!r}")
    catalog, incidence = _load_inputs(opts, inputs)
    E = _load_embedding(opts, inputs, catalog)
    sim_keys = set(SimulationConfig.__dataclass_fields__)
    doc = {k: v for k, v in opts.items() if k in sim_keys}
    doc["seed"] = int(opts["seed"])
    doc["q"] = float(opts["q"])
    isp = dict(opts.get("isp") or {})
    isp.setdefault("backend", opts["backend"])
    isp.setdefault("diversity_mode", opts["diversity_mode"])
    isp.setdefault("time_budget", opts["time_budget"])
    doc["isp"] = isp
    if "uncertainty" in opts and isinstance(opts["uncertainty"], str):
        doc["uncertainty"] = json.loads(Path(opts["uncertainty"]).read_text(encoding="utf-8"))
    config = SimulationConfig.from_dict(doc)
    result = simulate(catalog, E, config, incidence, threads=int(opts["threads"]))
    return result.to_dict(), result


COMMANDS = {
    "solve": cmd_solve,
    "warmstart": cmd_warmstart,
    "coverage": cmd_coverage,
    "simulate": cmd_simulate,
}


def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    started = time.perf_counter()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required (solve, warmstart, coverage, simulate)")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        opts, inputs = _resolve(args)
        if args.command == "coverage":
            opts["with_warmstart"] = args.q is not None
        result = COMMANDS[args.command](opts, inputs)
        table = None
        if args.command == "simulate":
            result, sim = result
            table = sim.table() if args.table else None
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (DataError, IspError, OSError, ValueError, KeyError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) else f"missing key {exc}"
        print(f"error: {msg}", file=sys.stderr)
        return 2

    manifest = {
        "command": args.command,
        "config": {k: v for k, v in sorted(opts.items()) if not k.startswith("with_")},
        "seed": int(opts["seed"]),
        "inputs": dict(sorted(inputs.items())),
        "tool_version": __version__,
        "wall_time": round(time.perf_counter() - started, 6) if args.timing else None,
    }
    report = {"schema_version": SCHEMA_VERSION, "manifest": manifest, "result": result}
    text = _dump(report)
    if args.out == "-":
        if table is None:
            sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    if table is not None:
        sys.stdout.write(table)
    return 0


if __name__ == "__main__":
    sys.exit(main())
