"""Command-line front end: ``bufstc simulate | compare | pep``.

Configuration files are YAML (JSON is accepted too, so the metadata record a
run writes can be fed straight back in)::

    preset: fig6            # optional; expands to a full scenario + sweep
    scenario:               # any ScenarioConfig field overrides the preset
      n_r: 2
      buffer_capacity: 6
      power: {p_s: 1.0, p_r: 1.0, p_v: null}
      sg: {mu: 0.01}
    sweep:
      snr_db: [0, 5, 10, 15]
      trials: 16            # seeds base_seed .. base_seed+trials-1
      base_seed: 0          # or an explicit list:  seeds: [3, 5, 8]
      min_errors: 100
      max_bits: 10000000
    pep:
      gamma: [1, 10, 100]
      channels: 20
      seed: 0

Unknown keys are rejected.  ``meta`` is written by ``simulate`` and ignored
on input.
"""

import argparse
import csv
import io
import json
import math
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .abaro import SgConfig
from .analysis import PepInputs, alamouti_codebook, pep_conditional, union_bound
from .channel import PowerConfig, complex_normal
from .engine import MAX_BITS, MIN_ERRORS, ConfigError, ScenarioConfig, estimate_ber, snr_at_ber
from .numerics import RngStream

__all__ = [
    "EXIT_CONFIG",
    "EXIT_NOT_COMPARABLE",
    "EXIT_OK",
    "EXIT_RUNTIME",
    "Experiment",
    "NotComparableError",
    "PRESETS",
    "compare_curves",
    "experiment_to_dict",
    "main",
    "parse_config",
    "run_experiment",
]

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_NOT_COMPARABLE = 0, 2, 3, 4

CSV_HEADER = ("snr_db", "ber", "bits", "errors", "ci_low", "ci_high")
SNR_DEFINITION = "snr_db = 10*log10(P_S / sigma^2), sigma_r^2 = sigma_d^2 = sigma^2"


class NotComparableError(ValueError):
    """The requested BER is not bracketed by one of the curves."""


@dataclass(frozen=True)
class SweepConfig:
    snr_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    seeds: tuple = tuple(range(8))
    min_errors: int | None = MIN_ERRORS
    max_bits: int | None = MAX_BITS


@dataclass(frozen=True)
class PepConfig:
    gamma: tuple = (1.0, 10.0, 100.0)
    channels: int = 20
    seed: int = 0


@dataclass(frozen=True)
class Experiment:
    scenario: ScenarioConfig
    sweep: SweepConfig = field(default_factory=SweepConfig)
    pep: PepConfig = field(default_factory=PepConfig)
    preset: str | None = None


_SAS = dict(topology="SAS", antennas=1, block_len=100, packets=200, coherence="per-symbol")

PRESETS = {
    "fig4": (dict(_SAS, n_r=1, buffer_capacity=4, policy="ABARO", coding="r-alamouti"),
             dict(snr_db=[0, 4, 8, 12, 16, 20])),
    "fig5": (dict(_SAS, n_r=2, buffer_capacity=8, policy="MMRS", coding="none"),
             dict(snr_db=[10, 14, 18, 22], trials=16)),
    "fig6": (dict(_SAS, n_r=2, buffer_capacity=4, policy="ABARO", coding="r-alamouti"),
             dict(snr_db=[3, 6, 9, 12, 15])),
    "fig7": (dict(topology="MAS", n_r=2, antennas=2, block_len=100, packets=200,
                  buffer_capacity=4, policy="ABARO", coding="r-alamouti",
                  coherence="per-packet", csi_error=0.0),
             dict(snr_db=[0, 4, 8, 12, 16])),
    "pep-bounds": (dict(topology="MAS", n_r=1, antennas=2, buffer_capacity=1,
                        policy="MAXLINK-NOOPT", coding="alamouti", coherence="per-packet"),
                   dict(snr_db=[0, 10, 20])),
}

_SCENARIO_KEYS = {f.name for f in fields(ScenarioConfig)} - {"noise"}
_SWEEP_KEYS = {"snr_db", "seeds", "trials", "base_seed", "min_errors", "max_bits"}
_PEP_KEYS = {f.name for f in fields(PepConfig)}
_TOP_KEYS = {"preset", "scenario", "sweep", "pep", "meta"}


def _reject_unknown(section, data, allowed):
    if not isinstance(data, dict):
        raise ConfigError(section, "expected a mapping", code="parse")
    extra = sorted(set(data) - set(allowed))
    if extra:
        prefix = f"{section}." if section else ""
        raise ConfigError(prefix + extra[0], "unknown key", code="unknown-key")


def _build_scenario(data):
    _reject_unknown("scenario", data, _SCENARIO_KEYS)
    kw = dict(data)
    try:
        if "power" in kw:
            _reject_unknown("scenario.power", kw["power"], {f.name for f in fields(PowerConfig)})
            kw["power"] = PowerConfig(**kw["power"])
        if "sg" in kw:
            _reject_unknown("scenario.sg", kw["sg"], {f.name for f in fields(SgConfig)})
            kw["sg"] = SgConfig(**kw["sg"])
        for key in ("n_r", "antennas", "block_len", "packets", "buffer_capacity", "n_dstc"):
            if key in kw:
                kw[key] = int(kw[key])
        if "csi_error" in kw:
            kw["csi_error"] = float(kw["csi_error"])
        scenario = ScenarioConfig(**kw)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("scenario", str(exc)) from exc
    return scenario.validate()


def _build_sweep(data):
    _reject_unknown("sweep", data, _SWEEP_KEYS)
    if "seeds" in data and ("trials" in data or "base_seed" in data):
        raise ConfigError("sweep.seeds", "give either seeds or trials/base_seed, not both")
    snr = data.get("snr_db", SweepConfig.snr_db)
    if not isinstance(snr, (list, tuple)) or not snr:
        raise ConfigError("sweep.snr_db", "must be a non-empty list")
    if "seeds" in data:
        seeds = tuple(int(s) for s in data["seeds"])
    else:
        trials = int(data.get("trials", len(SweepConfig.seeds)))
        base = int(data.get("base_seed", 0))
        if trials < 1:
            raise ConfigError("sweep.trials", "must be at least 1")
        seeds = tuple(range(base, base + trials))
    if not seeds or any(s < 0 for s in seeds):
        raise ConfigError("sweep.seeds", "need at least one non-negative seed")
    opt_int = lambda v: None if v is None else int(float(v))
    return SweepConfig(tuple(float(s) for s in snr), seeds,
                       opt_int(data.get("min_errors", MIN_ERRORS)),
                       opt_int(data.get("max_bits", MAX_BITS)))


def _build_pep(data):
    _reject_unknown("pep", data, _PEP_KEYS)
    cfg = PepConfig(tuple(float(g) for g in data.get("gamma", PepConfig.gamma)),
                    int(data.get("channels", PepConfig.channels)),
                    int(data.get("seed", PepConfig.seed)))
    if cfg.channels < 1 or any(g <= 0 for g in cfg.gamma):
        raise ConfigError("pep", "need channels >= 1 and positive gamma values")
    return cfg


def config_from_dict(data):
    """Build an :class:`Experiment` from already-parsed config data."""
    if data is None:
        data = {}
    _reject_unknown("", data, _TOP_KEYS)
    preset = data.get("preset")
    scenario, sweep = {}, {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset!r}; choose from "
                              f"{', '.join(PRESETS)}")
        scenario, sweep = (dict(d) for d in PRESETS[preset])
    scenario.update(data.get("scenario") or {})
    user_sweep = data.get("sweep") or {}
    if "seeds" in user_sweep:
        sweep.pop("trials", None)
        sweep.pop("base_seed", None)
    sweep.update(user_sweep)
    return Experiment(_build_scenario(scenario), _build_sweep(sweep),
                      _build_pep(data.get("pep") or {}), preset)


def parse_config(path):
    """Read and validate a YAML/JSON experiment file.

    Raises
    ------
    ConfigError
        ``code`` is ``'missing-file'``, ``'parse'``, ``'unknown-key'`` or
        ``'constraint'``; ``key`` names the offending setting.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(str(path), "config file not found", code="missing-file")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"cannot parse: {exc}", code="parse") from exc
    return config_from_dict(data)


def experiment_to_dict(exp):
    """Plain-data form that :func:`config_from_dict` maps back to ``exp``."""
    scenario = asdict(exp.scenario)
    scenario.pop("noise")
    out = {
        "scenario": scenario,
        "sweep": {
            "snr_db": list(exp.sweep.snr_db),
            "seeds": list(exp.sweep.seeds),
            "min_errors": exp.sweep.min_errors,
            "max_bits": exp.sweep.max_bits,
        },
        "pep": {"gamma": list(exp.pep.gamma), "channels": exp.pep.channels, "seed": exp.pep.seed},
    }
    if exp.preset is not None:
        out["preset"] = exp.preset
    return out


def _version():
    try:
        res = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5, check=True)
        return f"{__version__}+{res.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        return __version__


def curve_to_csv(curve):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for p in curve.points:
        writer.writerow([repr(p.snr_db), repr(p.ber), p.bits, p.errors, repr(p.ci_low), repr(p.ci_high)])
    return buf.getvalue()


def run_experiment(exp, out_dir, workers=None):
    """Run the sweep and write ``ber.csv`` and ``metadata.json`` into ``out_dir``.

    Returns the two paths.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out_dir} is not writable: {exc}") from exc
    start = time.perf_counter()
    curve = estimate_ber(exp.scenario, exp.sweep.seeds, exp.sweep.snr_db,
                         min_errors=exp.sweep.min_errors, max_bits=exp.sweep.max_bits,
                         workers=workers)
    wall = time.perf_counter() - start
    csv_path, meta_path = out_dir / "ber.csv", out_dir / "metadata.json"
    csv_path.write_text(curve_to_csv(curve))
    meta = experiment_to_dict(exp)
    meta["meta"] = {
        "version": _version(),
        "wall_time_s": round(wall, 3),
        "snr_definition": SNR_DEFINITION,
        "trials_per_point": [p.trials for p in curve.points],
    }
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    return csv_path, meta_path


def read_curve(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "snr_db" not in rows[0] or "ber" not in rows[0]:
        raise ValueError(f"{path}: not a BER curve CSV")
    return np.array([float(r["snr_db"]) for r in rows]), np.array([float(r["ber"]) for r in rows])


def compare_curves(a, b, at_ber=(1e-3,)):
    """Horizontal gap ``snr_a - snr_b`` (dB) at each target BER.

    Positive values mean curve ``b`` reaches the target at a lower SNR.

    Raises
    ------
    NotComparableError
        If a target is outside either curve's range.
    """
    sa, ba = read_curve(a)
    sb, bb = read_curve(b)
    gaps = {}
    for target in at_ber:
        xa, xb = snr_at_ber(sa, ba, target), snr_at_ber(sb, bb, target)
        if xa is None or xb is None:
            raise NotComparableError(f"BER {target:g} is not covered by both curves")
        gaps[target] = xa - xb
    return gaps


def pep_table(exp):
    """Union bounds (adjustable and identity code) on random 2x2 channels.

    Each row: channel index, gamma, both bounds, and the worst conditional PEP.
    """
    rng = RngStream(exp.pep.seed, 0).generator()
    book = alamouti_codebook()
    rows = []
    for c in range(exp.pep.channels):
        g = complex_normal(rng, (2, 2))
        v = np.exp(1j * rng.uniform(0, 2 * math.pi, 2))
        for gamma in exp.pep.gamma:
            worst = max(pep_conditional(PepInputs(c1, c2, g, gamma, v))[0]
                        for i, c1 in enumerate(book) for j, c2 in enumerate(book) if i != j)
            rows.append((c, gamma, union_bound(book, g, gamma, v, True),
                         union_bound(book, g, gamma, v, False), worst))
    return rows


def _build_parser():
    parser = argparse.ArgumentParser(prog="bufstc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a BER sweep")
    sim.add_argument("--config", help="YAML/JSON experiment file")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, help="base seed (replaces the seed list)")
    sim.add_argument("--trials", type=int, help="number of seeds per SNR point")
    sim.add_argument("--preset", choices=sorted(PRESETS))
    sim.add_argument("--workers", type=int, help="worker processes (default: $BUFSTC_WORKERS or 1)")

    cmp_ = sub.add_parser("compare", help="SNR gap between two BER curves")
    cmp_.add_argument("--a", required=True)
    cmp_.add_argument("--b", required=True)
    cmp_.add_argument("--at-ber", type=float, nargs="+", default=[1e-3])

    pep = sub.add_parser("pep", help="tabulate PEP union bounds")
    pep.add_argument("--config", required=True)
    return parser


def _load_for_simulate(args):
    data = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(args.config, "config file not found", code="missing-file")
        try:
            data = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(args.config, f"cannot parse: {exc}", code="parse") from exc
        if not isinstance(data, dict):
            raise ConfigError(args.config, "expected a mapping", code="parse")
    if args.preset:
        data = dict(data, preset=args.preset)
    if not data:
        raise ConfigError("config", "give --config and/or --preset")
    if args.seed is not None or args.trials is not None:
        sweep = dict(data.get("sweep") or {})
        old = sweep.pop("seeds", None)
        sweep.setdefault("base_seed", 0)
        if args.seed is not None:
            sweep["base_seed"] = args.seed
        if args.trials is not None:
            sweep["trials"] = args.trials
        elif old is not None:
            sweep["trials"] = len(old)
        data["sweep"] = sweep
    return config_from_dict(data)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            exp = _load_for_simulate(args)
            csv_path, meta_path = run_experiment(exp, args.out, args.workers)
            print(f"wrote {csv_path} and {meta_path}")
        elif args.command == "compare":
            for target, gap in compare_curves(args.a, args.b, args.at_ber).items():
                print(f"ber={target:g} gap_db={gap:.4f}")
        else:
            exp = parse_config(args.config)
            print("channel,gamma,union_bound_adjustable,union_bound_identity,max_conditional_pep")
            for row in pep_table(exp):
                print(",".join([str(row[0]), repr(row[1])] + [f"{x:.6e}" for x in row[2:]]))
    except ConfigError as exc:
        print(f"config error [{exc.code}] {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotComparableError as exc:
        print(f"not comparable: {exc}", file=sys.stderr)
        return EXIT_NOT_COMPARABLE
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
