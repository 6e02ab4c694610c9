"""Command-line front end.

Commands: make-corpus, build-dataset, train-codebook, build-index, query,
guide, serve. Exit codes: 0 success, 1 runtime failure, 2 usage/input
error. Every command that touches randomness takes --seed; reports carry
timing so the interactive budgets stay observable.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .errors import DocumentError, FormatError, ValidationError

log = logging.getLogger("portraitguide")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _print_report(report: dict, as_json: bool):
    if as_json:
        print(json.dumps(report, indent=1, default=str))
        return
    for key, value in report.items():
        if isinstance(value, list):
            print(f"{key}:")
            for item in value:
                print(f"  - {item}")
        else:
            print(f"{key}: {value}")


def _load_config_doc(path):
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return doc if isinstance(doc, dict) else {}


def _encoder_from_config(doc: dict, seed):
    from .encoder import GalifEncoder

    params = dict(doc.get("galif", {}))
    if seed is not None:
        params["seed"] = seed
    return GalifEncoder(**params)


def cmd_make_corpus(args) -> int:
    from .facegen import make_corpus

    t0 = time.perf_counter()
    report = make_corpus(args.out, count=args.count, seed=args.seed or 0, size=args.size)
    report.pop("palette", None)
    report["elapsed_ms"] = round((time.perf_counter() - t0) * 1e3, 1)
    _print_report(report, args.json)
    return EXIT_OK


def cmd_build_dataset(args) -> int:
    from .maskdata import DEFAULT_PALETTE, build_dataset, load_palette

    for label, path in (("masks", args.masks), ("images", args.images)):
        if not Path(path).is_dir():
            raise FileNotFoundError(f"{label} directory not found: {path}")
    palette = load_palette(args.palette) if args.palette else DEFAULT_PALETTE
    t0 = time.perf_counter()
    manifest, report = build_dataset(
        args.masks, args.images, args.out, palette, exclude_labels=tuple(args.exclude_labels)
    )
    report["manifest"] = str(Path(args.out) / "manifest.json")
    report["elapsed_ms"] = round((time.perf_counter() - t0) * 1e3, 1)
    _print_report(report, args.json)
    return EXIT_OK


def cmd_train_codebook(args) -> int:
    import dataclasses
    import hashlib

    from .galif import save_codebook
    from .images import load_binary
    from .maskdata import load_manifest

    manifest = load_manifest(args.manifest)
    if not manifest.entries:
        raise ValidationError("manifest has no entries to train on")
    doc = _load_config_doc(args.config)
    encoder = _encoder_from_config(doc, args.seed)
    if args.k:
        encoder.codebook_size = args.k
    t0 = time.perf_counter()
    corpus_hash = hashlib.sha256()
    for e in manifest.entries:
        corpus_hash.update(e.entry_id.encode("utf-8"))
        corpus_hash.update(Path(e.contour_path).read_bytes())
    encoder.fit(load_binary(e.contour_path) for e in manifest.entries)
    # stamp what the codebook was trained on, for staleness checks
    encoder.codebook_ = dataclasses.replace(encoder.codebook_, corpus_hash=corpus_hash.digest())
    save_codebook(args.out, encoder.codebook_)
    report = {
        "entries": len(manifest.entries),
        "codebook_size": encoder.codebook_size,
        "descriptor_dim": encoder.descriptor_dim,
        "seed": encoder.seed,
        "out": args.out,
        "elapsed_ms": round((time.perf_counter() - t0) * 1e3, 1),
    }
    _print_report(report, args.json)
    return EXIT_OK


def cmd_build_index(args) -> int:
    from .galif import load_codebook
    from .index import build_index, save_index
    from .maskdata import load_manifest

    manifest = load_manifest(args.manifest)
    codebook = load_codebook(args.codebook)
    doc = _load_config_doc(args.config)
    encoder = _encoder_from_config(doc, args.seed)
    encoder.codebook_size = codebook.k
    t0 = time.perf_counter()
    index = build_index(manifest, codebook, encoder)
    save_index(index, args.out)
    report = {
        "entries": len(index),
        "out": args.out,
        "elapsed_ms": round((time.perf_counter() - t0) * 1e3, 1),
    }
    _print_report(report, args.json)
    return EXIT_OK


def _load_query_raster(path, canvas_size):
    from .images import load_binary
    from .strokes import load_sketch, rasterize

    path = Path(path)
    if path.suffix.lower() == ".json":
        with open(path, "r", encoding="utf-8") as fh:
            return rasterize(load_sketch(json.load(fh)), canvas_size)
    return load_binary(path)


def _open_index(args, seed):
    from .galif import load_codebook
    from .index import load_index

    index = load_index(args.index, load_codebook(args.codebook))
    if seed is not None:
        index.encoder.seed = seed
    return index


def cmd_query(args) -> int:
    from .index import query

    index = _open_index(args, args.seed)
    raster = _load_query_raster(args.sketch, index.canvas_size)
    t0 = time.perf_counter()
    results = query(index, raster, n=args.n)
    elapsed = (time.perf_counter() - t0) * 1e3
    report = {
        "query": str(args.sketch),
        "retrieval_ms": round(elapsed, 2),
        "results": [
            {"rank": r.rank, "entry_id": r.entry_id, "similarity": round(r.similarity, 6)}
            for r in results
        ],
    }
    if not results:
        report["warnings"] = ["blank sketch: no results"]
    _print_report(report, args.json)
    return EXIT_OK


def cmd_guide(args) -> int:
    """Headless single-sketch pass: query, blend, map, synthesize."""
    from .images import load_binary, save_binary, save_gray
    from .index import query
    from .maskdata import extract_contours, load_label_mask, load_manifest
    from .shadow import blend_shadow
    from .strokes import load_sketch, rasterize
    from .synth import generate_candidates

    index = _open_index(args, args.seed)
    manifest = load_manifest(args.manifest) if args.manifest else None
    palette = manifest.palette if manifest else None
    if palette is None:
        from .maskdata import DEFAULT_PALETTE

        palette = DEFAULT_PALETTE

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(args.sketch, "r", encoding="utf-8") as fh:
        sketch = load_sketch(json.load(fh))
    raster = rasterize(sketch, index.canvas_size)
    save_binary(out_dir / "sketch.png", ~raster)  # dark ink on white

    report = {"sketch": str(args.sketch), "out": str(out_dir), "warnings": []}
    if not raster.any():
        report["warnings"].append("blank sketch: shadow skipped, mapping refused")
        _print_report(report, args.json)
        return EXIT_OK

    t0 = time.perf_counter()
    results = query(index, raster, n=args.n)
    report["retrieval_ms"] = round((time.perf_counter() - t0) * 1e3, 2)
    report["results"] = [
        {"rank": r.rank, "entry_id": r.entry_id, "similarity": round(r.similarity, 6)}
        for r in results
    ]

    contours = [load_binary(index.entry(r.entry_id).contour_path) for r in results]
    from .shadow import shadow_png

    (out_dir / "shadow.png").write_bytes(shadow_png(blend_shadow(contours)))

    templates = [
        (index.entry(r.entry_id), load_label_mask(index.entry(r.entry_id).mask_path, palette))
        for r in results
    ]
    t0 = time.perf_counter()
    candidates = generate_candidates(sketch, templates, impl=args.synth)
    per_candidate = (time.perf_counter() - t0) * 1e3 / max(len(candidates), 1)
    report["synthesis_ms_per_candidate"] = round(per_candidate, 1)

    if args.pick == "rank1":
        best = candidates[0]
    else:  # best shape fit wins
        best = min(candidates, key=lambda c: (c.fit_score, c.rank))
    save_gray(out_dir / "merged_mask.png", best.merged_mask.labels)
    save_binary(out_dir / "revised_contour.png", ~extract_contours(best.merged_mask.as_label_mask()))
    from .mapper import dump_debug

    dump_debug(best.merged_mask, str(out_dir / "debug"))
    for c in candidates:
        save_gray(out_dir / f"guidance_{c.rank}.png", c.portrait)
    report["candidates"] = len(candidates)
    report["picked"] = {
        "candidate": best.candidate_id,
        "template": best.template_entry_id,
        "fit_score": round(best.fit_score, 3),
        "by": args.pick,
    }
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1)
    _print_report(report, args.json)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import GuidanceService, create_app, load_config

    config = load_config(args.config)
    if args.listen:
        config.listen = args.listen
    service = GuidanceService(config)
    app = create_app(service)
    host, port = config.host_port
    log.info("serving on %s:%d (%d corpus entries)", host, port, len(service.index))
    uvicorn.run(app, host=host, port=port, log_level="warning" if not args.verbose else "info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="portraitguide", description="two-stage portrait drawing guidance engine"
    )
    parser.add_argument("--config", help="JSON config file", default=None)
    parser.add_argument("--seed", type=int, default=None, help="seed for anything random")
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--json", action="store_true", help="machine-readable reports")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-corpus", help="generate a synthetic face corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=32)
    p.add_argument("--size", type=int, default=512)
    p.set_defaults(func=cmd_make_corpus)

    p = sub.add_parser("build-dataset", help="extract contours and write the manifest")
    p.add_argument("--masks", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--palette", default=None)
    p.add_argument("--exclude-labels", type=int, nargs="*", default=[],
                   help="label ids kept out of corpus contours (e.g. hair, cloth)")
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("train-codebook", help="train the descriptor codebook")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=cmd_train_codebook)

    p = sub.add_parser("build-index", help="encode the corpus into a retrieval index")
    p.add_argument("--manifest", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("query", help="retrieve the closest corpus entries for a sketch")
    p.add_argument("--index", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--sketch", required=True, help="sketch document (.json) or raster (.png)")
    p.add_argument("-n", type=int, default=3)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("guide", help="headless global+local guidance pass")
    p.add_argument("--index", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--manifest", default=None)
    p.add_argument("--sketch", required=True, help="sketch document (.json)")
    p.add_argument("--out", required=True)
    p.add_argument("-n", type=int, default=3)
    p.add_argument("--synth", default="region-composite")
    p.add_argument("--pick", choices=("fit", "rank1"), default="fit",
                   help="which template's merged mask becomes the main artifact")
    p.set_defaults(func=cmd_guide)

    p = sub.add_parser("serve", help="run the HTTP guidance service")
    # also accepted after the subcommand; SUPPRESS keeps a pre-subcommand
    # --config from being clobbered by the default
    p.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file")
    p.add_argument("--listen", default=None, help="host:port override")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (FileNotFoundError, ValidationError, DocumentError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.exception("command failed: %s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
