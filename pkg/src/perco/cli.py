"""Command line entry point: run an experiment from a config file or a verification suite.

Config files are ``key = value`` lines under ``[section]`` headers::

    [experiment]
    query = mono          # mono | poly | one_black | one_white
    j = 2
    n = 4                 # default max(4, n0(j))
    N = 32, 64, 128, 256

    [sampling]
    samples = 100000
    seed = 1
    workers = 1
    p = 0.5               # optional override, diagnostics only

    [output]
    dir = results
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import re
import sys
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

from .arms import ArmQuery, SigmaClass
from .estimate import POINT_STRIDE, EstimateRecord, estimate_prob, fit_exponent
from .lattice import min_inner_radius
from .sample import SeedSpec

CSV_HEADER = ["query", "j", "n", "N", "samples", "hits", "p_hat", "stderr", "seed", "stream"]
DEFAULT_SCHEDULE = (32, 64, 128, 256)
DEFAULT_SAMPLES = 100_000

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_IO = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class ExperimentConfig:
    query: SigmaClass
    j: int
    n: int
    Ns: tuple[int, ...]
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    workers: int = 1
    out_dir: str | None = None
    p: float | None = None

    def __post_init__(self):
        if self.samples < 1:
            raise ConfigError(f"samples must be >= 1, got {self.samples}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if not self.Ns:
            raise ConfigError("empty N schedule")
        if any(b <= a for a, b in zip(self.Ns, self.Ns[1:])):
            raise ConfigError(f"N schedule must be strictly increasing, got {list(self.Ns)}")
        if self.p is not None and not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"p must lie in [0, 1], got {self.p}")
        for N in self.Ns:
            try:
                ArmQuery(self.j, self.query, self.n, N)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    def queries(self) -> list[ArmQuery]:
        return [ArmQuery(self.j, self.query, self.n, N) for N in self.Ns]


_KEYS = {
    "experiment": {"query", "j", "n", "N"},
    "sampling": {"samples", "seed", "workers", "p"},
    "output": {"dir"},
}


def _line_of(text: str, section: str | None, key: str | None) -> int | None:
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[(.+)\]$", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", line):
            return i
    return None


def parse_config(text: str) -> ExperimentConfig:
    """Validated config; errors carry the offending line number."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str  # keep n and N apart
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None

    for section in cp.sections():
        if section not in _KEYS:
            raise ConfigError(f"unknown section [{section}]", _line_of(text, section, None))
        for key in cp[section]:
            if key not in _KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]",
                                  _line_of(text, section, key))

    def get(section, key, conv, default):
        if not cp.has_option(section, key):
            return default
        raw = cp.get(section, key).strip()
        try:
            return conv(raw)
        except ValueError:
            raise ConfigError(f"malformed value {raw!r} for {key}",
                              _line_of(text, section, key)) from None

    def sigma(raw):
        return SigmaClass(raw.lower())

    def schedule(raw):
        return tuple(int(t) for t in re.split(r"[,\s]+", raw) if t)

    if not cp.has_option("experiment", "query"):
        raise ConfigError("missing required key 'query' in [experiment]")
    query = get("experiment", "query", sigma, None)
    j = get("experiment", "j", int, 1)
    n_default = max(4, min_inner_radius(j)) if j >= 1 else 4
    kwargs = dict(
        query=query,
        j=j,
        n=get("experiment", "n", int, n_default),
        Ns=get("experiment", "N", schedule, DEFAULT_SCHEDULE),
        samples=get("sampling", "samples", int, DEFAULT_SAMPLES),
        seed=get("sampling", "seed", int, 0),
        workers=get("sampling", "workers", int, 1),
        out_dir=get("output", "dir", str, None),
        p=get("sampling", "p", float, None),
    )
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError as exc:
        # attribute invariant failures to the most relevant line
        msg = str(exc)
        key = next((k for k in ("samples", "workers", "p") if k in msg), None)
        section = "sampling" if key else "experiment"
        if key is None:
            key = "N" if "schedule" in msg else ("j" if "j" in msg else "n")
        raise ConfigError(msg, _line_of(text, section, key)) from None


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = [
        "[experiment]",
        f"query = {cfg.query.value}",
        f"j = {cfg.j}",
        f"n = {cfg.n}",
        "N = " + ", ".join(str(N) for N in cfg.Ns),
        "",
        "[sampling]",
        f"samples = {cfg.samples}",
        f"seed = {cfg.seed}",
        f"workers = {cfg.workers}",
    ]
    if cfg.p is not None:
        lines.append(f"p = {cfg.p!r}")
    if cfg.out_dir is not None:
        lines += ["", "[output]", f"dir = {cfg.out_dir}"]
    return "\n".join(lines) + "\n"


def point_seed(cfg: ExperimentConfig, i: int) -> SeedSpec:
    return SeedSpec(cfg.seed, i * POINT_STRIDE)


def collect_records(cfg: ExperimentConfig) -> list[EstimateRecord]:
    p = 0.5 if cfg.p is None else cfg.p
    return [
        estimate_prob(q, cfg.samples, point_seed(cfg, i), p=p, workers=cfg.workers)
        for i, q in enumerate(cfg.queries())
    ]


def results_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        q = r.query
        w.writerow([q.sigma_class.value, q.j, q.n, q.N, r.samples, r.hits, repr(r.p_hat),
                    repr(r.stderr), r.seed.seed, r.seed.stream])
    return buf.getvalue()


def fit_json(records) -> str:
    points = [{"N": r.query.N, "p_hat": r.p_hat, "stderr": r.stderr} for r in records]
    out = {"alpha_hat": None, "ci_low": None, "ci_high": None, "points": points}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit = fit_exponent(records)
        out.update(alpha_hat=fit.alpha_hat, ci_low=fit.ci95[0], ci_high=fit.ci95[1])
        if fit.excluded:
            out["excluded_N"] = list(fit.excluded)
    except ValueError as exc:
        out["error"] = str(exc)
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def plot_dat(records) -> str:
    lines = ["# log_N log_p stderr_log_p"]
    for r in records:
        if r.hits > 0:
            lp, sl = math.log(r.p_hat), r.stderr / r.p_hat
        else:
            lp, sl = math.nan, math.nan
        lines.append(f"{math.log(r.query.N)!r} {lp!r} {sl!r}")
    return "\n".join(lines) + "\n"


def write_outputs(records, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "results.csv": results_csv(records),
        "fit.json": fit_json(records),
        "plot.dat": plot_dat(records),
    }
    paths = {}
    for name, body in files.items():
        path = out / name
        path.write_text(body)
        paths[name] = path
    return paths


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> dict[str, Path]:
    target = out_dir or cfg.out_dir
    if target is None:
        raise ConfigError("no output directory given (use --out or [output] dir)")
    out = Path(target)
    # fail on unwritable targets before spending time sampling
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    return write_outputs(collect_records(cfg), out)


def run_verification_suite(level: str = "fast", flow=None, stream=None):
    from .verify import run_suites

    return run_suites(level, flow=flow, stream=stream)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="perco", description="Arm-event Monte Carlo for critical site percolation.")
    ap.add_argument("--config", help="experiment config file")
    ap.add_argument("--out", help="output directory (overrides [output] dir)")
    ap.add_argument("--seed", type=int, help="master seed (overrides PERCO_SEED and the config)")
    ap.add_argument("--workers", type=int, help="sampling worker processes")
    ap.add_argument("--verify", choices=("fast", "full"), help="run a verification suite")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verify:
        report = run_verification_suite(args.verify, stream=sys.stdout)
        return EXIT_OK if report.ok else EXIT_VERIFY
    if not args.config:
        print("perco: error: one of --config or --verify is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"perco: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = parse_config(text)
        seed = args.seed
        if seed is None and os.environ.get("PERCO_SEED"):
            seed = int(os.environ["PERCO_SEED"])
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        if args.workers is not None:
            cfg = replace(cfg, workers=args.workers)
        if args.out is None and cfg.out_dir is None:
            raise ConfigError("no output directory given (use --out or [output] dir)")
        SeedSpec(cfg.seed)
    except ValueError as exc:
        print(f"perco: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        paths = run_experiment(cfg, args.out)
    except OSError as exc:
        print(f"perco: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for p in paths.values():
        print(p)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
