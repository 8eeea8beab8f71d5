"""
Командная строка ReceiptForge

    receiptforge [--config PATH] [--seed N] [--jobs N] [--debug] <command> ...

Машинный вывод - JSON по строке на объект в stdout; журнал - в stderr.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from .. import __version__
from ..backends.registry import create_backend
from ..core.exceptions import ConfigError, NotAProductLine
from ..core.logging import configure_logging, get_logger
from ..core.settings import Settings, load_settings
from ..database.ontology_repository import Ontology
from ..database.store_repository import StoreDatabase
from ..imaging.codecs import load_image, save_pgm
from ..imaging.models import GrayImage
from ..services.crop_service import CropService
from ..services.detection_service import DetectionService
from ..services.error_handler import ExitCode, error_handler
from ..services.layout_service import LayoutService
from ..services.ocr_service import OcrService, build_ocr_backend
from ..services.pipeline_service import (
    STATUS_ACCEPTED,
    STATUS_NOT_RECEIPT,
    build_pipeline,
)
from ..services.semantics_service import match_concept, parse_product_line

logger = get_logger(__name__)


def emit(payload: Any) -> None:
    """Одна JSON-строка в stdout"""
    sys.stdout.write(json.dumps(payload, ensure_ascii=False, sort_keys=True) + "\n")
    sys.stdout.flush()


def write_json(payload: Any, path: Union[str, Path]) -> str:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True), encoding="utf-8")
    return str(target)


class CliArgumentParser(argparse.ArgumentParser):
    """Ошибки разбора аргументов - JSON-строка и код USAGE_ERROR (не пересекается с вердиктами)"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        emit({"status": "error", "error_code": "USAGE_ERROR", "message": message, "prog": self.prog})
        self.exit(int(ExitCode.USAGE_ERROR))


def _stores(args: argparse.Namespace) -> StoreDatabase:
    return StoreDatabase.load(args.stores) if getattr(args, "stores", None) else StoreDatabase.builtin()


def _ontology(args: argparse.Namespace) -> Ontology:
    if getattr(args, "ontology", None):
        return Ontology.load(args.ontology, getattr(args, "abbreviations", None))
    return Ontology.builtin()


def _ocr(args: argparse.Namespace, settings: Settings):
    return build_ocr_backend(
        truth=getattr(args, "ocr_truth", None),
        text=getattr(args, "ocr_text", None),
        config=settings.ocr,
        seed=settings.seed,
    )


def cmd_detect(args: argparse.Namespace, settings: Settings) -> int:
    image = load_image(args.image)
    ocr = _ocr(args, settings)
    text = OcrService(ocr).read_text(image, args.image) if ocr else ""
    verdict, heatmap = DetectionService(settings.detection).detect(
        image, create_backend(args.backend, settings), text, args.image
    )
    payload: Dict[str, Any] = {"image": args.image, **verdict.to_dict()}
    if settings.debug:
        payload["heatmap"] = [
            [round(float(v), 4) for v in row]
            for row in heatmap.channel(settings.detection.target_class)
        ]
    emit(payload)
    return ExitCode.OK if verdict.fused else ExitCode.NOT_RECEIPT


def cmd_crop(args: argparse.Namespace, settings: Settings) -> int:
    image = load_image(args.image)
    backend = create_backend(args.backend, settings)
    cropper = CropService(settings.crop, settings.detection)
    if args.edge_only:
        result = cropper.edge_only(image, args.image)
    else:
        heatmap = backend.infer_heatmap(image, sample_id=args.image)
        result = cropper.crop(image, heatmap, args.image)
    payload: Dict[str, Any] = {"image": args.image, **result.to_dict()}
    out = args.out or Path(args.image).with_suffix(".crop.pgm")
    payload["output"] = str(save_pgm(result.rectified, out))
    if args.emit_quad:
        sidecar = {key: payload[key] for key in ("wide_box", "quad", "skew_angle")}
        payload["quad_sidecar"] = write_json(sidecar, args.emit_quad)
    emit(payload)
    return ExitCode.OK


def cmd_sign(args: argparse.Namespace, settings: Settings) -> int:
    receipt = load_image(args.image)
    pipeline = build_pipeline(settings, "heuristic", _stores(args), logo_templates=args.logos)
    ocr = _ocr(args, settings)
    text = OcrService(ocr).read_text(receipt, args.image) if ocr else ""
    report = pipeline.sign.recognize(receipt, text, args.image)
    emit({"image": args.image, **report.to_dict()})
    return ExitCode.OK if report.decision.accepted else ExitCode.NEEDS_REVIEW


def cmd_layout(args: argparse.Namespace, settings: Settings) -> int:
    receipt = load_image(args.image)
    priors: List[float] = list(args.prior or [])
    if args.store:
        store = _stores(args).get(args.store)
        if store is None:
            raise ConfigError(f"Unknown store {args.store!r}", config_key="store")
        priors.extend(store.layout_priors)
    hierarchy, mask = LayoutService(settings.layout).analyze(receipt, sorted(priors), args.image)
    payload: Dict[str, Any] = {"image": args.image, **hierarchy.to_dict()}
    if args.out:
        payload["output"] = write_json(hierarchy.to_dict(), args.out)
    if args.mask_out:
        ink = GrayImage(np.where(mask.bits, 0, 255).astype(np.uint8))
        payload["mask"] = str(save_pgm(ink, args.mask_out))
    emit(payload)
    return ExitCode.OK


def _lines(args: argparse.Namespace) -> Iterable[str]:
    if args.lines:
        yield from args.lines
    if args.file:
        source = sys.stdin if args.file == "-" else Path(args.file).open(encoding="utf-8")
        with source:
            for line in source:
                if line.strip():
                    yield line.rstrip("\n")


def cmd_parse(args: argparse.Namespace, settings: Settings) -> int:
    ontology = _ontology(args)
    grammar = settings.detection.grammar_version
    for line in _lines(args):
        try:
            product = parse_product_line(line, grammar)
        except NotAProductLine as e:
            emit({"line": line, "product": None, "error_code": e.error_code})
            continue
        match = match_concept(product.label, ontology, settings.semantics.match_threshold)
        emit({"line": line, "product": product.to_dict(), "match": match.to_dict()})
    return ExitCode.OK


def cmd_synth(args: argparse.Namespace, settings: Settings) -> int:
    from ..harness.corpus import generate_corpus

    overrides: Dict[str, Any] = {}
    if args.receipts is not None:
        overrides["receipts"] = args.receipts
    if args.non_receipts is not None:
        overrides["non_receipts"] = args.non_receipts
    if overrides:
        settings = settings.model_copy(
            update={"corpus": settings.corpus.model_copy(update=overrides)}
        )
    corpus = generate_corpus(args.out, settings, _stores(args), _ontology(args))
    emit({
        "corpus": str(corpus.root),
        "seed": corpus.seed,
        "samples": len(corpus),
        "receipts": sum(1 for sample in corpus.samples if sample.spec.is_receipt),
    })
    return ExitCode.OK


def cmd_eval(args: argparse.Namespace, settings: Settings) -> int:
    from ..harness.evaluation import evaluate

    report = evaluate(args.corpus, settings, use_oracle=args.oracle, ocr_noise=args.ocr_noise)
    emit(report.to_dict())
    return ExitCode.OK


def cmd_pipeline(args: argparse.Namespace, settings: Settings) -> int:
    pipeline = build_pipeline(
        settings, args.backend, _stores(args), _ontology(args), args.logos
    )
    exit_code = ExitCode.OK
    for path in args.images:
        result = pipeline.run(load_image(path), _ocr(args, settings), path)
        emit(result.to_dict(debug=settings.debug))
        if result.status == STATUS_NOT_RECEIPT:
            exit_code = max(exit_code, ExitCode.NOT_RECEIPT)
        elif result.status != STATUS_ACCEPTED:
            exit_code = max(exit_code, ExitCode.NEEDS_REVIEW)
    return exit_code


def _add_backend(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--backend', default='heuristic',
                        help='Receipt heat map backend: heuristic | oracle:<sidecar>')


def _add_ocr(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument('--ocr-truth', help='OCR truth sidecar (<id>.ocr.json)')
    group.add_argument('--ocr-text', help='Plain-text OCR file or directory')


def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(
        prog='receiptforge',
        description='Sale receipt reading pipeline',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--config', help='TOML or JSON settings file')
    parser.add_argument('--seed', type=int, help='Random seed')
    parser.add_argument('--jobs', type=int, help='Worker processes for synth/eval')
    parser.add_argument('--debug', action='store_true', default=None,
                        help='Include intermediate results and debug logs')
    sub = parser.add_subparsers(dest='command', required=True)

    detect = sub.add_parser('detect', help='Receipt / not-receipt decision')
    detect.add_argument('image')
    detect.add_argument('--tau', type=float, help='Heat map score threshold (default 0.70)')
    detect.add_argument('--rho', type=float, help='Share of receipt cells for an image hit (default 0.25)')
    _add_backend(detect)
    _add_ocr(detect)
    detect.set_defaults(handler=cmd_detect)

    crop = sub.add_parser('crop', help='Locate and rectify the receipt')
    crop.add_argument('image')
    crop.add_argument('--out', help='Rectified receipt PGM (default <image>.crop.pgm)')
    crop.add_argument('--margin', type=float, help='Wide crop margin, fraction of each side (default 0.05)')
    crop.add_argument('--emit-quad', help='Write {wide_box, quad, skew_angle} to this JSON file')
    crop.add_argument('--edge-only', action='store_true', help='Search edges over the whole image')
    _add_backend(crop)
    crop.set_defaults(handler=cmd_crop)

    sign = sub.add_parser('sign', help='Recognize the store of a cropped receipt')
    sign.add_argument('image')
    sign.add_argument('--stores', help='Store database JSON')
    sign.add_argument('--logo-templates', '--logos', dest='logos',
                      help='Logo template directory (<store_id>_<k>.pgm)')
    _add_ocr(sign)
    sign.set_defaults(handler=cmd_sign)

    layout = sub.add_parser('layout', help='Band / sub-block / line segmentation')
    layout.add_argument('image')
    layout.add_argument('--prior', type=float, action='append', help='Column split prior (fraction of width)')
    layout.add_argument('--store', help='Use layout priors of this store')
    layout.add_argument('--stores', help='Store database JSON')
    layout.add_argument('--out', help='Write the block hierarchy as JSON')
    layout.add_argument('--mask-out', help='Write the binarized mask as PGM')
    layout.set_defaults(handler=cmd_layout)

    parse = sub.add_parser('parse', help='Parse product lines and match concepts')
    parse.add_argument('lines', nargs='*')
    parse.add_argument('--file', help='Read lines from a file (- for stdin)')
    parse.add_argument('--ontology', help='Ontology JSON')
    parse.add_argument('--abbreviations', help='Abbreviation table TSV')
    parse.set_defaults(handler=cmd_parse)

    synth = sub.add_parser('synth', help='Generate a synthetic corpus')
    synth.add_argument('out')
    synth.add_argument('--receipts', type=int)
    synth.add_argument('--non-receipts', type=int)
    synth.add_argument('--stores', help='Store database JSON')
    synth.add_argument('--ontology', help='Ontology JSON')
    synth.add_argument('--abbreviations', help='Abbreviation table TSV')
    synth.set_defaults(handler=cmd_synth)

    evaluate = sub.add_parser('eval', help='Evaluate the pipeline on a corpus')
    evaluate.add_argument('corpus')
    evaluate.add_argument('--oracle', action='store_true', help='Use stored heat maps')
    evaluate.add_argument('--ocr-noise', type=float, help='Override the OCR noise rate')
    evaluate.set_defaults(handler=cmd_eval)

    pipeline = sub.add_parser('pipeline', help='Full reading chain')
    pipeline.add_argument('images', nargs='+')
    pipeline.add_argument('--stores', help='Store database JSON')
    pipeline.add_argument('--ontology', help='Ontology JSON')
    pipeline.add_argument('--abbreviations', help='Abbreviation table TSV')
    pipeline.add_argument('--logo-templates', '--logos', dest='logos', help='Logo template directory')
    _add_backend(pipeline)
    _add_ocr(pipeline)
    pipeline.set_defaults(handler=cmd_pipeline)
    return parser


def stage_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Флаги команд, переопределяющие разделы настроек"""
    sections = {
        "detection": {
            "heat_threshold": getattr(args, "tau", None),
            "receipt_ratio": getattr(args, "rho", None),
        },
        "crop": {"margin": getattr(args, "margin", None)},
    }
    overrides: Dict[str, Any] = {}
    for section, values in sections.items():
        given = {key: value for key, value in values.items() if value is not None}
        if given:
            overrides[section] = given
    return overrides


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else int(ExitCode.USAGE_ERROR)
    try:
        settings = load_settings(
            args.config, seed=args.seed, jobs=args.jobs, debug=args.debug, **stage_overrides(args)
        )
        configure_logging(settings)
        return int(args.handler(args, settings))
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return int(ExitCode.UNEXPECTED_ERROR)
    except Exception as e:
        outcome = error_handler.handle_error(e, {'command': args.command})
        emit(outcome.payload)
        return int(outcome.exit_code)


if __name__ == "__main__":
    sys.exit(main())
