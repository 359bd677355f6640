"""Command-line front-end: config parsing, campaign runs, result files.

The config file is a flat JSON object whose keys mirror the campaign
parameters (see ``CONFIG_DEFAULTS``); command-line flags override file
values.  SNRs and target SINRs are given in dB at this boundary and
converted to linear scale once.

A run writes four files into the output directory:

* ``raw_results.csv``  - one row per (drop, method, antennas, user)
* ``summary.csv``      - mean and 95%-likely rates per method and antennas
* ``ccdf.csv``         - complementary CDF tables per method/antennas/link
* ``manifest.json``    - the fully resolved config plus tool versions;
  feeding it back via ``--config`` reproduces the run byte-exactly.

Files are written to a temporary name and renamed, so a failed run never
leaves a partially written table behind.
"""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .campaign import CampaignConfig, run_campaign
from .errors import ConfigError, SimulationError
from .linkmodel import ScenarioConfig
from .pilots import PaMethod
from .powerctl import PcConfig

CONFIG_DEFAULTS = {
    "cells": 7,
    "users": 4,
    "antennas": [128],
    "coherence_symbols": 100,
    "xi_ul": 0.5,
    "xi_dl": 0.5,
    "bandwidth_hz": 20e6,
    "pilot_snr_db": 10.0,
    "ul_snr_db": 10.0,
    "dl_snr_db": 10.0,
    "pathloss_exponent": 3.8,
    "shadow_sigma_db": 8.0,
    "cell_radius_m": 1000.0,
    "exclusion_radius_m": 100.0,
    "pa": ["random"],
    "drops": 100,
    "power_control": "off",
    "target_sinr_dl_db": None,
    "target_sinr_ul_db": None,
    "target_rate_dl_bps": None,
    "target_rate_ul_bps": None,
    "pc_iterations": 10,
    "rounds": 3,
    "seed": 0,
    "workers": 1,
}


def resolve_config_doc(path=None, overrides=None) -> dict:
    """Merge defaults, an optional config file and flag overrides.

    A manifest produced by :func:`emit_results` is accepted directly: its
    ``config`` object is used.  Unknown keys are rejected by name.
    """
    doc = dict(CONFIG_DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        if "config" in loaded and isinstance(loaded["config"], dict):
            loaded = loaded["config"]  # manifest re-run
        for key in loaded:
            if key not in CONFIG_DEFAULTS:
                raise ConfigError(f"unknown config key {key!r} in {path}")
        doc.update(loaded)
    for key, value in (overrides or {}).items():
        if key not in CONFIG_DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        if value is not None:
            doc[key] = value
    return doc


def _lin(db: float) -> float:
    return 10.0 ** (db / 10.0)


def campaign_from_doc(doc: dict) -> CampaignConfig:
    """Build the validated campaign object from a resolved config document."""
    scenario = ScenarioConfig(
        num_cells=int(doc["cells"]),
        users_per_cell=int(doc["users"]),
        num_antennas=int(doc["antennas"][0]),
        coherence_symbols=int(doc["coherence_symbols"]),
        xi_ul=float(doc["xi_ul"]),
        xi_dl=float(doc["xi_dl"]),
        bandwidth_hz=float(doc["bandwidth_hz"]),
        noise_power=1.0,
        pilot_power=_lin(float(doc["pilot_snr_db"])),
        ul_power=_lin(float(doc["ul_snr_db"])),
        dl_power=_lin(float(doc["dl_snr_db"])),
        pathloss_exponent=float(doc["pathloss_exponent"]),
        shadow_sigma_db=float(doc["shadow_sigma_db"]),
        cell_radius_m=float(doc["cell_radius_m"]),
        exclusion_radius_m=float(doc["exclusion_radius_m"]),
    )
    methods = tuple(PaMethod.from_acronym(name) for name in doc["pa"])

    mode = doc["power_control"]
    if mode not in ("off", "gradual", "tracking"):
        raise ConfigError(
            f"power_control must be off, gradual or tracking, got {mode!r}"
        )
    pc = None
    if mode != "off":
        to_lin = lambda db: None if db is None else _lin(float(db))
        pc = PcConfig(
            target_sinr_dl=to_lin(doc["target_sinr_dl_db"]),
            target_sinr_ul=to_lin(doc["target_sinr_ul_db"]),
            target_rate_dl=doc["target_rate_dl_bps"],
            target_rate_ul=doc["target_rate_ul_bps"],
            max_iterations=int(doc["pc_iterations"]),
            mode=mode,
        )
    return CampaignConfig(
        scenario=scenario,
        antennas=tuple(int(n) for n in doc["antennas"]),
        methods=methods,
        drops=int(doc["drops"]),
        master_seed=int(doc["seed"]),
        rounds=int(doc["rounds"]),
        pc=pc,
        workers=int(doc["workers"]),
    )


def parse_config(path=None, overrides=None) -> CampaignConfig:
    return campaign_from_doc(resolve_config_doc(path, overrides))


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

def _db(linear: float) -> float:
    return 10.0 * math.log10(linear)


def _atomic_writer(path):
    tmp = f"{path}.tmp"
    return tmp, lambda: os.replace(tmp, path)


def _write_rows(path, header, rows):
    tmp, commit = _atomic_writer(path)
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    commit()


def emit_results(results, stats, config_doc: dict, directory) -> dict:
    """Write raw, summary, CCDF and manifest files; returns their paths."""
    os.makedirs(directory, exist_ok=True)
    paths = {
        "raw": os.path.join(directory, "raw_results.csv"),
        "summary": os.path.join(directory, "summary.csv"),
        "ccdf": os.path.join(directory, "ccdf.csv"),
        "manifest": os.path.join(directory, "manifest.json"),
    }

    raw_rows = []
    for res in results:
        for user in range(res.pilot.size):
            raw_rows.append(
                (
                    res.drop_index,
                    res.method,
                    res.num_antennas,
                    0,
                    user,
                    int(res.pilot[user]),
                    repr(_db(float(res.dl_sinr[user]))),
                    repr(_db(float(res.ul_sinr[user]))),
                    repr(float(res.dl_rate[user])),
                    repr(float(res.ul_rate[user])),
                    repr(float(res.total_rate[user])),
                )
            )
    _write_rows(
        paths["raw"],
        ("drop_id", "method", "n_antennas", "cell", "user", "pilot",
         "sinr_dl_db", "sinr_ul_db", "rate_dl_bps", "rate_ul_bps",
         "rate_total_bps"),
        raw_rows,
    )

    summary_rows = []
    ccdf_rows = []
    for entry in stats.entries:
        row = [entry.method, entry.num_antennas]
        for link in ("dl", "ul", "total"):
            ls = entry.links[link]
            row.extend([repr(ls.mean_rate), repr(ls.likely95_rate)])
            for rate, frac in zip(ls.ccdf_rates, ls.ccdf_fractions):
                ccdf_rows.append(
                    (entry.method, entry.num_antennas, link,
                     repr(float(rate)), repr(float(frac)))
                )
        summary_rows.append(tuple(row))
    _write_rows(
        paths["summary"],
        ("method", "n_antennas",
         "mean_rate_dl_bps", "likely95_rate_dl_bps",
         "mean_rate_ul_bps", "likely95_rate_ul_bps",
         "mean_rate_total_bps", "likely95_rate_total_bps"),
        summary_rows,
    )
    _write_rows(
        paths["ccdf"],
        ("method", "n_antennas", "link", "rate_bps", "fraction_above"),
        ccdf_rows,
    )

    manifest = {
        "config": config_doc,
        "versions": {
            "mamimo": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
    }
    tmp, commit = _atomic_writer(paths["manifest"])
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    commit()
    return paths


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _comma_ints(text):
    return [int(tok) for tok in text.split(",") if tok]

def _comma_names(text):
    return [tok for tok in text.split(",") if tok]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mamimo",
        description="Multi-cell massive MIMO pilot assignment / power control "
                    "Monte-Carlo campaigns",
    )
    parser.add_argument("--config", help="JSON config file (or a manifest.json)")
    parser.add_argument("--users", type=int, help="users (= pilots) per cell")
    parser.add_argument("--antennas", type=_comma_ints, metavar="N1,N2,...",
                        help="BS antenna counts to sweep")
    parser.add_argument("--drops", type=int, help="Monte-Carlo drops")
    parser.add_argument("--pa", type=_comma_names, metavar="NAME1,NAME2,...",
                        help="PA methods, e.g. random,maxmintc,h-maxmintc")
    parser.add_argument("--power-control", choices=["off", "gradual", "tracking"],
                        dest="power_control")
    parser.add_argument("--target-sinr-dl", type=float, dest="target_sinr_dl_db",
                        metavar="DB", help="DL target SINR in dB")
    parser.add_argument("--target-sinr-ul", type=float, dest="target_sinr_ul_db",
                        metavar="DB", help="UL target SINR in dB")
    parser.add_argument("--target-rate-dl", type=float, dest="target_rate_dl_bps",
                        metavar="BPS", help="DL target rate in bit/s")
    parser.add_argument("--target-rate-ul", type=float, dest="target_rate_ul_bps",
                        metavar="BPS", help="UL target rate in bit/s")
    parser.add_argument("--rounds", type=int, help="PA optimization rounds")
    parser.add_argument("--seed", type=int, help="campaign master seed")
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--workers", type=int, help="parallel drop workers")
    return parser


_FLAG_KEYS = (
    "users", "antennas", "drops", "pa", "power_control",
    "target_sinr_dl_db", "target_sinr_ul_db",
    "target_rate_dl_bps", "target_rate_ul_bps",
    "rounds", "seed", "workers",
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {key: getattr(args, key) for key in _FLAG_KEYS}
    try:
        doc = resolve_config_doc(args.config, overrides)
        campaign = campaign_from_doc(doc)
        stats, results = run_campaign(campaign)
        paths = emit_results(results, stats, doc, args.out)
    except ConfigError as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"error [{exc.category}]: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 4

    for entry in stats.entries:
        dl, ul, tc = (entry.links[k] for k in ("dl", "ul", "total"))
        print(
            f"{entry.method:>16s} N={entry.num_antennas:<4d} "
            f"mean DL/UL/TC = {dl.mean_rate / 1e6:7.3f} / "
            f"{ul.mean_rate / 1e6:7.3f} / {tc.mean_rate / 1e6:7.3f} Mbps   "
            f"95%-likely = {dl.likely95_rate / 1e6:7.3f} / "
            f"{ul.likely95_rate / 1e6:7.3f} / {tc.likely95_rate / 1e6:7.3f} Mbps"
        )
    print(f"wrote {', '.join(sorted(paths.values()))}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
