"""Command-line entry point: ``csdis <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical error,
4 file-format error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, cstd, report, synth
from .dcor import dcor_blocked
from .errors import ConfigError, CsdisError
from .iob import IobConfig, compute_iob
from .nn import TrainConfig
from .scenarios import ScenarioConfig, run_scenarios

log = logging.getLogger("csdis")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_FORMAT = 0, 2, 3, 4


def _threads(value) -> int:
    if value is None:
        value = os.environ.get("CSDIS_THREADS", "1")
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"thread count must be an integer, got {value!r}") from None
    if n < 1:
        raise ConfigError(f"thread count must be >= 1, got {n}")
    return n


def _load_array(ref: str) -> np.ndarray:
    """``FILE.cstd`` or ``DIR:ROLE`` for a member of a sample-set directory."""
    path, _, role = ref.partition(":")
    p = Path(path)
    if p.is_dir():
        if not role:
            raise ConfigError(f"{ref}: a sample-set directory needs ':ROLE'")
        ss = cstd.read_sampleset(p, roles=[role])
        if getattr(ss, role, None) is None:
            raise ConfigError(f"{path} has no {role!r} member")
        return getattr(ss, role)
    if not p.exists():
        raise ConfigError(f"{path}: no such file")
    return cstd.read_tensor(p)


def _emit(text: str, out) -> None:
    if out:
        cstd.atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_generate(args) -> int:
    ss = synth.generate(args.n, args.seed)
    cstd.write_sampleset(args.out, ss)
    log.info("wrote %d samples to %s (digest %s)", ss.n, args.out,
             cstd.sampleset_digest(args.out))
    return EXIT_OK


def cmd_dc(args) -> int:
    a, b = _load_array(args.a), _load_array(args.b)
    res = dcor_blocked(a, b, block=args.block)
    _emit(json.dumps(res.as_dict(), indent=2) + "\n", None)
    return EXIT_OK


def cmd_iob(args) -> int:
    images = _load_array(args.images)
    latents = _load_array(args.latents)
    cfg = IobConfig.from_files(args.decoder, args.train, runs=args.runs)
    if args.epochs:
        cfg = replace(cfg, train=replace(cfg.train, epochs=args.epochs))
    res = compute_iob(images, latents, cfg, base_seed=args.seed)
    _emit(json.dumps(res.as_dict(), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_scenarios(args) -> int:
    data = Path(args.data)
    if not data.is_dir():
        raise ConfigError(f"{data}: not a sample-set directory")
    dataset = cstd.read_sampleset(data)
    train = TrainConfig.load(args.train) if args.train else TrainConfig()
    cfg = ScenarioConfig(
        runs=args.runs,
        seed=args.seed,
        scenarios=tuple(args.scenarios.split(",")) if args.scenarios else synth.SCENARIOS,
        dc_subsample=args.dc_subsample,
        dc_block=args.dc_block,
        iob_epochs=args.iob_epochs,
        iob_subsample=args.iob_subsample,
        content_decoder=args.content_decoder,
        style_decoder=args.style_decoder,
        train=train,
        threads=_threads(args.threads),
    )
    rep = run_scenarios(dataset, cfg, dataset_digest=cstd.sampleset_digest(data))
    report.validate(rep)
    _emit(report.dumps(rep), args.out)
    return EXIT_OK


def cmd_table(args) -> int:
    _emit(report.render_table(report.load_report(args.report), args.format), args.out)
    return EXIT_OK


def cmd_pearson(args) -> int:
    rep = report.load_report(args.report)
    _, _, degenerate = report.cross_metric_table(rep)
    for name in degenerate:
        log.warning("metric %s is constant across scenarios; its correlations are NaN", name)
    _emit(report.cross_metric_csv(rep), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="csdis", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"csdis {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="render the synthetic sample set")
    g.add_argument("--n", type=int, default=5000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("dc", help="distance correlation of two tensors")
    d.add_argument("--a", required=True, help="FILE.cstd or DIR:ROLE")
    d.add_argument("--b", required=True, help="FILE.cstd or DIR:ROLE")
    d.add_argument("--block", type=int, default=256)
    d.set_defaults(func=cmd_dc)

    i = sub.add_parser("iob", help="information over bias of a latent")
    i.add_argument("--images", required=True, help="FILE.cstd or DIR:ROLE")
    i.add_argument("--latents", required=True, help="FILE.cstd or DIR:ROLE")
    i.add_argument("--decoder", required=True, help="decoder JSON or built-in name")
    i.add_argument("--train", help="training JSON (defaults to the built-in settings)")
    i.add_argument("--runs", type=int, default=3)
    i.add_argument("--seed", type=int, default=None)
    i.add_argument("--epochs", type=int, default=None, help="override training epochs")
    i.add_argument("--out")
    i.set_defaults(func=cmd_iob)

    s = sub.add_parser("scenarios", help="run the five representation scenarios")
    s.add_argument("--data", required=True)
    s.add_argument("--runs", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--scenarios", help="comma-separated subset of " + ",".join(synth.SCENARIOS))
    s.add_argument("--dc-subsample", type=int, default=2048, help="0 uses every sample")
    s.add_argument("--dc-block", type=int, default=256)
    s.add_argument("--iob-epochs", type=int, default=40)
    s.add_argument("--iob-subsample", type=int, default=0, help="0 uses every sample")
    s.add_argument("--content-decoder", default="teapot_content",
                   help="decoder JSON or built-in name for IOB(I,C)")
    s.add_argument("--style-decoder", default="teapot_style",
                   help="decoder JSON or built-in name for IOB(I,s)")
    s.add_argument("--train", help="training JSON; --iob-epochs overrides its epochs")
    s.add_argument("--threads", type=int, default=None,
                   help="parallel jobs (default: $CSDIS_THREADS or 1)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_scenarios)

    t = sub.add_parser("table", help="render a report as a table")
    t.add_argument("--report", required=True)
    t.add_argument("--format", choices=report.FORMATS, default="markdown")
    t.add_argument("--out")
    t.set_defaults(func=cmd_table)

    r = sub.add_parser("pearson", help="cross-metric Pearson matrix as CSV")
    r.add_argument("--report", required=True)
    r.add_argument("--out")
    r.set_defaults(func=cmd_pearson)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CsdisError as e:
        print(f"csdis: error: {e}", file=sys.stderr)
        return e.exit_code
    except (FileNotFoundError, IsADirectoryError, NotADirectoryError) as e:
        print(f"csdis: error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
