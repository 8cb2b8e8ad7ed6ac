"""The full parameter chain as one document, plus a run manifest.

tuple -> certified M_k lower bound -> threshold m -> sums, region losses and
the short-interval experiments.  Numeric payloads depend only on the config;
timestamps and machine details live in the manifest alone.
"""

from __future__ import annotations

import datetime as dt
import logging
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__, oracles, sums
from ..decomposition.regions import regions_table
from ..primes import default_workers
from ..tuples import is_admissible, make_context, make_prime_tuple
from ..variational import optimize_Mk, rho_for, rho_threshold
from ..weights import build_lambda, build_y
from .config import ExperimentConfig, parse_F
from .experiments import (
    DENSITY_COLUMNS, PNT_COLUMNS, experiment_density, experiment_short_interval_pnt,
)
from .serialization import dumps_json, sha256_text, write_csv

log = logging.getLogger(__name__)

REGION_COLUMNS = ["delta", "region", "nonempty", "loss", "paper_budget"]
ORACLE_RTOL = 1e-9


class NumericCheckError(RuntimeError):
    """A computed quantity disagreed with its cross-check."""


class ReportError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException, manifest: dict):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.manifest = manifest


@dataclass
class RunManifest:
    config_hash: str
    code_version: str
    seed: int
    started: str
    finished: str | None = None
    status: str = "running"
    stages: list = field(default_factory=list)
    outputs: dict = field(default_factory=dict)
    machine: dict = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def machine_info() -> dict:
    return {
        "platform": platform.platform(),
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "cpus": os.cpu_count(),
        "threads": default_workers(),
    }


def _chain(cfg: ExperimentConfig) -> dict:
    t = make_prime_tuple(cfg.k)
    ok, cert = is_admissible(t)
    mk = optimize_Mk(cfg.k, cfg.degree)
    th = rho_threshold(cfg.chain_delta, cfg.eps0, cfg.beta, mk.certified)
    return {
        "tuple": t.to_dict(),
        "admissible": ok,
        "witnesses": {str(p): r for p, r in cert.witnesses.items()},
        "Mk": {"k": cfg.k, "degree": cfg.degree, "Mk_lower": mk.Mk_lower,
               "certified_quotient": mk.certified},
        "threshold": {"delta": cfg.chain_delta, "eps0": cfg.eps0, "beta": cfg.beta,
                      "value": th.value, "m": th.m, "conclusive": th.conclusive,
                      "rho_m": rho_for(th.m) if th.m >= 0 else None},
    }


def _sums(cfg: ExperimentConfig) -> dict:
    x, delta = cfg.sums_point
    t = make_prime_tuple(cfg.sums_k)
    ctx = make_context(x, delta, None, forms=t, R=cfg.sums_R)
    F = parse_F(cfg.sums_F, cfg.sums_k)
    lam = build_lambda(build_y(F, ctx))
    iv = ctx.interval
    s1 = sums.S1(iv, ctx, lam)
    s2 = sums.S2(iv, ctx, lam)
    out = {"context": ctx.to_dict(), "F": cfg.sums_F, "table_size": len(lam), "S1": s1, "S2": s2}
    if cfg.oracle_sums:
        ref1, ref2 = oracles.S1(iv, ctx, lam), oracles.S2(iv, ctx, lam)
        for name, got, ref in (("S1", s1.value, ref1), ("S2", s2.value, ref2)):
            if abs(got - ref) > ORACLE_RTOL * max(1.0, abs(ref)):
                raise NumericCheckError(f"{name} table sum {got!r} != oracle {ref!r}")
        out["oracle"] = {"S1": ref1, "S2": ref2}
    return out


def _regions(cfg: ExperimentConfig) -> list[dict]:
    rows = []
    for d in sorted(set(cfg.deltas)):
        rows.extend({"delta": float(d), **r} for r in regions_table(d))
    return rows


def run_full_report(cfg: ExperimentConfig, outdir=None) -> tuple[dict, dict]:
    """Run every stage, write report.json, the CSV tables and manifest.json; return (manifest, document)."""
    out = Path(outdir if outdir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(cfg.hash(), __version__, cfg.seed, _now(), machine=machine_info())
    doc: dict = {"experiment": cfg.name, "config_hash": man.config_hash, "config": cfg.to_dict()}

    def emit(name: str, text: str):
        (out / name).write_text(text)
        man.outputs[name] = sha256_text(text)

    def emit_csv(name: str, rows, columns):
        man.outputs[name] = sha256_text(write_csv(out / name, rows, columns))

    def stage(name: str, fn):
        log.info("report stage %s", name)
        try:
            result = fn()
        except Exception as exc:
            man.status, man.error, man.finished = "failed", f"{name}: {exc}", _now()
            emit("manifest.json", dumps_json(man))
            raise ReportError(name, exc, man.to_dict()) from exc
        man.stages.append(name)
        return result

    doc["chain"] = stage("chain", lambda: _chain(cfg))
    if not cfg.empty_grid:
        doc["sums"] = stage("sums", lambda: _sums(cfg))
        regions = stage("regions", lambda: _regions(cfg))
        emit_csv("regions.csv", regions, REGION_COLUMNS)
        doc["regions"] = regions
        pnt = stage("pnt", lambda: experiment_short_interval_pnt(cfg.grid_points))
        emit_csv("pnt.csv", pnt, PNT_COLUMNS)
        doc["pnt"] = pnt
        if cfg.gaps:
            grid = [(x, d, g) for x, d in cfg.grid_points for g in cfg.gaps]
            dens = stage("density", lambda: experiment_density(grid))
            emit_csv("density.csv", dens, DENSITY_COLUMNS)
            doc["density"] = dens
    doc_text = stage("serialize", lambda: dumps_json(doc))
    emit("report.json", doc_text)
    man.status, man.finished = "complete", _now()
    (out / "manifest.json").write_text(dumps_json(man))
    return man.to_dict(), doc
