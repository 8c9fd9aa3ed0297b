"""Scenario runner for the representation study.

Each run draws fresh random representations from ``seed * 1000 + run``,
computes three distance correlations on a seeded subsample and trains the
content and style IOB decoders. Decoder fits and correlations that do not
change between scenarios of the same run (the ground-truth content, say,
appears in three of them) are computed once and shared.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__, rng, synth
from .dcor import dcor_blocked
from .errors import ConfigError
from .iob import DEFAULT_EPSILON, combine, fit_bias, fit_latent, resolve_spec
from .nn import TrainConfig
from .tensor import SampleSet

log = logging.getLogger(__name__)

METRICS = ("dc_cs", "dc_ic", "dc_is", "iob_ic", "iob_is")


@dataclass(frozen=True)
class ScenarioConfig:
    runs: int = 3
    seed: int = 0
    scenarios: tuple = synth.SCENARIOS
    dc_subsample: int = 2048  # 0 means all samples
    dc_block: int = 256
    iob_epochs: int = 40
    iob_subsample: int = 0  # 0 means all samples
    content_decoder: str = "teapot_content"  # built-in name or JSON path
    style_decoder: str = "teapot_style"
    train: TrainConfig = field(default_factory=TrainConfig)
    epsilon: float = DEFAULT_EPSILON
    threads: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        for name in ("dc_subsample", "iob_subsample"):
            v = getattr(self, name)
            if v < 0 or v == 1:
                raise ConfigError(f"{name} must be 0 (all) or >= 2, got {v}")
        if self.iob_epochs < 1:
            raise ConfigError(f"iob_epochs must be >= 1, got {self.iob_epochs}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        unknown = [s for s in self.scenarios if s not in synth.SCENARIOS]
        if unknown or not self.scenarios:
            raise ConfigError(f"unknown scenarios {unknown}; choose from {synth.SCENARIOS}")
        object.__setattr__(self, "scenarios", tuple(self.scenarios))

    def run_seed(self, run: int) -> int:
        return self.seed * 1000 + run

    def to_dict(self) -> dict:
        """Everything that influences results; ``threads`` is left out on purpose."""
        d = asdict(self)
        d.pop("threads")
        d["scenarios"] = list(self.scenarios)
        d["train"] = replace(self.train, epochs=self.iob_epochs).to_dict()
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _representations(dataset: SampleSet, run_seed: int):
    """Content and style variants of one run, keyed by their scenario part."""
    contents, styles = {}, {}
    for kind in synth.SCENARIOS:
        c, s = kind.split("_")
        ss = synth.make_scenario(dataset, kind, run_seed)
        contents.setdefault(c, ss.contents)
        styles.setdefault(s, ss.styles)
    return contents, styles


def _subset(n, m, seed, stream):
    """Seeded index subset, or a full slice (no copy) when ``m`` is 0 or >= n."""
    return rng.choice(seed, stream, n, m) if 0 < m < n else slice(None)


class _Jobs:
    """Memoised, optionally threaded evaluation of keyed callables."""

    def __init__(self, threads: int):
        self.threads = threads
        self.pending = {}
        self.results = {}
        self.seconds = {}

    def add(self, key, fn, *args):
        if key not in self.pending and key not in self.results:
            self.pending[key] = (fn, args)
        return key

    def _call(self, key):
        fn, args = self.pending[key]
        t0 = time.perf_counter()
        out = fn(*args)
        return key, out, time.perf_counter() - t0

    def run(self):
        keys = list(self.pending)
        if self.threads == 1:
            done = map(self._call, keys)
        else:
            pool = ThreadPoolExecutor(max_workers=self.threads)
            done = pool.map(self._call, keys)
        for key, out, secs in done:
            self.results[key] = out
            self.seconds[key] = secs
            log.info("finished %s in %.1fs", key, secs)
        if self.threads != 1:
            pool.shutdown()
        self.pending.clear()


def _dc(x, y, block):
    return dcor_blocked(x, y, block=block).dcor


def _stats(values):
    v = np.asarray(values, dtype=np.float64)
    return {"mean": float(v.mean()), "std": float(v.std()), "per_run": [float(x) for x in v]}


def run_scenarios(dataset: SampleSet, config: ScenarioConfig = ScenarioConfig(),
                  dataset_digest: str = "") -> dict:
    """Run every scenario ``config.runs`` times and return the report dictionary.

    The report is deterministic for a fixed dataset and configuration except
    for the ``timing`` entries.
    """
    dataset.require("images", "contents", "factors")
    t_start = time.perf_counter()
    spec_c = resolve_spec(config.content_decoder)
    spec_s = resolve_spec(config.style_decoder)
    train = replace(config.train, epochs=config.iob_epochs)
    n = dataset.n
    images = dataset.images
    jobs = _Jobs(config.threads)
    plan = []  # (scenario, run, seed, {metric: job key}, sizes)
    for run in range(config.runs):
        seed = config.run_seed(run)
        contents, styles = _representations(dataset, seed)
        dc_idx = _subset(n, config.dc_subsample, seed, "subsample")
        iob_idx = _subset(n, config.iob_subsample, seed, "iob_subsample")
        img_dc, img_iob = images[dc_idx], images[iob_idx]
        bias_c = jobs.add(("bias", "c", seed), fit_bias, img_iob, spec_c, train, seed)
        bias_s = jobs.add(("bias", "s", seed), fit_bias, img_iob, spec_s, train, seed)
        for kind in config.scenarios:
            c, s = kind.split("_")
            keys = {
                "dc_cs": jobs.add(("dc_cs", c, s, seed), _dc, contents[c][dc_idx],
                                  styles[s][dc_idx], config.dc_block),
                "dc_ic": jobs.add(("dc_ic", c, seed), _dc, img_dc, contents[c][dc_idx],
                                  config.dc_block),
                "dc_is": jobs.add(("dc_is", s, seed), _dc, img_dc, styles[s][dc_idx],
                                  config.dc_block),
                "iob_ic": (bias_c, jobs.add(("fit", "c", c, seed), fit_latent, img_iob,
                                            contents[c][iob_idx], spec_c, train, seed)),
                "iob_is": (bias_s, jobs.add(("fit", "s", s, seed), fit_latent, img_iob,
                                            styles[s][iob_idx].astype(np.float32), spec_s,
                                            train, seed)),
            }
            plan.append((kind, run, seed, keys, (len(img_dc), len(img_iob))))
        log.info("run %d: %d unique jobs", run, len(jobs.pending))
        jobs.run()

    rows = []
    for kind, run, seed, keys, (n_dc, n_iob) in plan:
        row = {"scenario": kind, "run": run, "seed": seed, "n_dc": n_dc, "n_iob": n_iob}
        detail = {}
        for metric, key in keys.items():
            if metric.startswith("dc"):
                row[metric] = float(jobs.results[key])
            else:
                r = combine(seed, jobs.results[key[0]], jobs.results[key[1]], config.epsilon)
                row[metric] = r.iob
                detail[metric] = {k: v for k, v in r.__dict__.items() if k not in ("iob", "seed")}
        row["iob_detail"] = detail
        rows.append(row)

    scenarios = []
    for kind in config.scenarios:
        mine = [r for r in rows if r["scenario"] == kind]
        timing = {}
        for _, _, _, keys, _ in (p for p in plan if p[0] == kind):
            for metric, key in keys.items():
                ks = key if isinstance(key, tuple) and isinstance(key[0], tuple) else (key,)
                timing[metric] = timing.get(metric, 0.0) + sum(jobs.seconds[k] for k in ks)
        scenarios.append({
            "scenario": kind,
            "runs": len(mine),
            "seeds": [r["seed"] for r in mine],
            "metrics": {m: _stats([r[m] for r in mine]) for m in METRICS},
            "timing": {m: round(t, 3) for m, t in timing.items()},
        })

    return {
        "tool": "csdis",
        "version": __version__,
        "dataset": {"digest": dataset_digest, "n": n, "meta": dataset.meta},
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "scenarios": scenarios,
        "runs": rows,
        "timing": {"total_seconds": round(time.perf_counter() - t_start, 3),
                   "threads": config.threads},
    }
