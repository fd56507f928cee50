"""Seeded simulation runs, traces and census snapshots."""

from __future__ import annotations

import csv
import hashlib
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import gsam
from .encoding import BraneReactions, census, machine_init, normalizer
from .rates import RateMap, format_rate, load_rates
from .syntax import System, parse_system

TRACE_HEADER = ["run", "step", "time", "kind", "name", "propensity"]
CENSUS_HEADER = ["run", "time", "outer", "complex", "count"]


@dataclass
class SimConfig:
    input: Optional[Path]
    rates: Optional[Path]
    seed: int = 0
    max_time: Optional[float] = None
    max_steps: Optional[int] = None
    runs: int = 1
    normalize: bool = False
    census_every: Optional[int] = None
    trace: Optional[Path] = None
    census: Optional[Path] = None
    jobs: int = 1
    check_invariants: bool = False

    def __post_init__(self):
        if self.max_time is None and self.max_steps is None:
            raise ValueError("set max_time, max_steps, or both")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.census_every is not None and self.census_every < 1:
            raise ValueError("census_every must be positive")


@dataclass
class TraceRecord:
    run: int
    step: int
    time: float
    kind: str
    name: str
    propensity: object

    def row(self):
        return [self.run, self.step, repr(self.time), self.kind, self.name,
                format_rate(self.propensity)]


@dataclass
class CensusRecord:
    run: int
    time: float
    outer: str
    complex: str
    count: int

    def row(self):
        return [self.run, repr(self.time), self.outer, self.complex, self.count]


@dataclass
class RunResult:
    run: int
    trace: list = field(default_factory=list)
    census: list = field(default_factory=list)
    final: Optional[gsam.MachineTerm] = None
    stopped: str = ""
    peak_species: int = 0


def run_seed(seed: int, run: int) -> int:
    """Independent per-run seed derived from the base seed and run index."""
    h = hashlib.blake2b(f"{seed}:{run}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


def _snapshot(run: int, T: gsam.MachineTerm) -> list:
    return [CensusRecord(run, T.time, outer, cx, k) for outer, cx, k in census(T)]


def simulate(P: System, rates: RateMap, seed: int, run: int = 0, *,
             max_time: Optional[float] = None, max_steps: Optional[int] = None,
             normalize: bool = False, census_every: Optional[int] = None,
             take_census: bool = False, check: bool = False) -> RunResult:
    """One run.  Stops on deadlock, after ``max_steps`` firings, or before
    the first firing later than ``max_time``."""
    rng = random.Random(run_seed(seed, run))
    gen = BraneReactions(rates)
    norm = normalizer if normalize else None
    T = machine_init(P, rates, rng, gen)
    if norm is not None:
        norm(T, gen, rng)
        gsam.sweep(T)
    res = RunResult(run, final=T, peak_species=len(T.populations))
    if take_census:
        res.census.extend(_snapshot(run, T))
    steps = 0
    last_census = 0
    while True:
        if max_steps is not None and steps >= max_steps:
            res.stopped = "max_steps"
            break
        try:
            O, a, t = gsam.next_reaction(T)
        except gsam.Deadlock:
            res.stopped = "deadlock"
            break
        if max_time is not None and t > max_time:
            res.stopped = "max_time"
            break
        try:
            fired = gsam.step(T, gen, rng, normalizer=norm)
            if check:
                gsam.check_invariants(T, gen)
        except gsam.MachineError as e:
            e.machine = T  # for the state dump
            raise
        steps += 1
        res.peak_species = max(res.peak_species, len(T.populations))
        res.trace.append(TraceRecord(run, steps, fired.time, fired.reaction.kind,
                                     fired.reaction.name, fired.propensity))
        if take_census and census_every and steps % census_every == 0:
            res.census.extend(_snapshot(run, T))
            last_census = steps
    if take_census and last_census != steps:
        res.census.extend(_snapshot(run, T))
    return res


def _run_one(args):
    P, rates, cfg, run = args
    res = simulate(P, rates, cfg.seed, run, max_time=cfg.max_time, max_steps=cfg.max_steps,
                   normalize=cfg.normalize, census_every=cfg.census_every,
                   take_census=cfg.census is not None, check=cfg.check_invariants)
    if cfg.jobs > 1:
        res.final = None  # keep the pickled result small
    return res


def run_simulation(cfg: SimConfig, P: Optional[System] = None,
                   rates: Optional[RateMap] = None) -> list:
    """Run every configured run and write the trace/census files."""
    if P is None:
        P = parse_system(Path(cfg.input).read_text(encoding="utf-8"))
    if rates is None:
        rates = load_rates(cfg.rates) if cfg.rates else RateMap()
    jobs = [(P, rates, cfg, run) for run in range(cfg.runs)]
    if cfg.jobs > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    if cfg.trace is not None:
        write_csv(cfg.trace, TRACE_HEADER, (r.row() for res in results for r in res.trace))
    if cfg.census is not None:
        write_csv(cfg.census, CENSUS_HEADER, (r.row() for res in results for r in res.census))
    return results


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
