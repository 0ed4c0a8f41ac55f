"""Command-line front end: single runs, sensitivity sweeps, data tools, extrapolation.

Scenario files are JSON; every run writes a manifest with the fully resolved
configuration so that re-running the manifest reproduces all outputs
bit-identically. Exit codes: 0 ok, 2 configuration error, 3 I/O error,
4 internal invariant breach.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from itertools import product
from pathlib import Path

from . import __version__
from .dataio import (
    LoadError,
    SyntheticProfile,
    format_console_summary,
    generate_synthetic,
    load_sites,
    write_report,
    write_sites,
)
from .ecology import DEFAULT_ELITE_TABLE, EliteTable, load_elite_table
from .finance import match_upfront_budget
from .model import (
    AmenityParams,
    ConfigError,
    Mechanism,
    SchemeConfig,
    SiteRecord,
    require_valid_scheme,
)
from .simulation import (
    HarvestSchedule,
    RunOutcome,
    SupplySummary,
    build_offers,
    draw_harvest_schedule,
    extrapolate_national,
    rank_benefit_cost,
    run_deferred,
    run_upfront,
    select_old_growth,
    summarize_supply,
)
from .streams import HARVEST_STREAM, PHI_STREAM, rng_stream

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INTERNAL = 4

NPV_MATCHED = "npv-matched"
DEFAULT_INITIAL_BUDGET = 5_000_000.0

RANKINGS = ("benefit_cost", "old_growth")


@dataclass(frozen=True)
class Scenario:
    """Fully resolved run request."""

    dataset_path: str | None
    synthetic: SyntheticProfile | None
    scheme: SchemeConfig
    mechanisms: tuple[Mechanism, ...]
    ranking: str
    initial_budget: float
    upfront_budget: float | str | None
    elite_table_path: str | None
    fmt: str


def _scheme_from_dict(raw: dict) -> SchemeConfig:
    known = {f.name for f in dataclasses.fields(SchemeConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown scheme fields: {', '.join(sorted(unknown))}")
    kwargs = dict(raw)
    if "amenity" in kwargs and isinstance(kwargs["amenity"], dict):
        amenity_known = {f.name for f in dataclasses.fields(AmenityParams)}
        amenity_unknown = set(kwargs["amenity"]) - amenity_known
        if amenity_unknown:
            raise ConfigError(f"unknown amenity fields: {', '.join(sorted(amenity_unknown))}")
        kwargs["amenity"] = AmenityParams(**kwargs["amenity"])
    try:
        cfg = SchemeConfig(**kwargs)
    except TypeError as err:
        raise ConfigError(f"bad scheme config: {err}") from None
    return require_valid_scheme(cfg)


def _profile_from_dict(raw: dict) -> SyntheticProfile:
    known = {f.name for f in dataclasses.fields(SyntheticProfile)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown synthetic profile fields: {', '.join(sorted(unknown))}")
    kwargs = {
        key: tuple(tuple(v) if isinstance(v, list) else v for v in value)
        if isinstance(value, list)
        else value
        for key, value in raw.items()
    }
    try:
        profile = SyntheticProfile(**kwargs)
        profile.validate()
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad synthetic profile: {err}") from None
    return profile


def resolve_scenario(raw: dict, seed_override: int | None = None) -> Scenario:
    """Validate and fully resolve a scenario dict (defaults applied, seed pinned)."""
    known_keys = {
        "dataset",
        "scheme",
        "mechanisms",
        "ranking",
        "budget",
        "elite_table",
        "seed",
        "format",
    }
    unknown = set(raw) - known_keys
    if unknown:
        raise ConfigError(f"unknown scenario keys: {', '.join(sorted(unknown))}")

    dataset = raw.get("dataset", {"synthetic": {"n_sites": 400}})
    dataset_path: str | None = None
    synthetic: SyntheticProfile | None = None
    if "path" in dataset:
        dataset_path = str(Path(dataset["path"]).expanduser())
    elif "synthetic" in dataset:
        synthetic = _profile_from_dict(dataset.get("synthetic") or {})
    else:
        raise ConfigError("dataset must specify either 'path' or 'synthetic'")

    scheme = _scheme_from_dict(raw.get("scheme", {}))
    seed = raw.get("seed", scheme.seed)
    if seed_override is not None:
        seed = seed_override
    scheme = dataclasses.replace(scheme, seed=int(seed))

    mech_raw = raw.get("mechanisms", "both")
    if mech_raw == "both":
        mechanisms: tuple[Mechanism, ...] = (Mechanism.DEFERRED, Mechanism.UPFRONT)
    else:
        if isinstance(mech_raw, str):
            mech_raw = [mech_raw]
        try:
            parsed = {Mechanism(m) for m in mech_raw}
        except ValueError as err:
            raise ConfigError(f"bad mechanism: {err}") from None
        if not parsed:
            raise ConfigError("mechanisms must not be empty")
        # deferred first: an npv-matched up-front budget derives from its stream
        mechanisms = tuple(
            sorted(parsed, key=lambda m: 0 if m is Mechanism.DEFERRED else 1)
        )

    ranking = raw.get("ranking", "benefit_cost")
    if ranking not in RANKINGS:
        raise ConfigError(f"ranking must be one of {RANKINGS}")

    budget = raw.get("budget", {})
    initial_budget = float(budget.get("initial", DEFAULT_INITIAL_BUDGET))
    if Mechanism.DEFERRED in mechanisms and initial_budget <= 0:
        raise ConfigError("budget.initial must be > 0 for a deferred run")
    upfront_budget = budget.get("upfront", NPV_MATCHED)
    if Mechanism.UPFRONT in mechanisms:
        if upfront_budget == NPV_MATCHED:
            if Mechanism.DEFERRED not in mechanisms:
                raise ConfigError(
                    "an npv-matched up-front budget requires a deferred run in the same scenario"
                )
        else:
            upfront_budget = float(upfront_budget)
            if upfront_budget <= 0:
                raise ConfigError("budget.upfront must be > 0 or 'npv-matched'")
    else:
        upfront_budget = None

    fmt = raw.get("format", "both")
    if fmt not in ("csv", "json", "both"):
        raise ConfigError("format must be csv, json, or both")

    return Scenario(
        dataset_path=dataset_path,
        synthetic=synthetic,
        scheme=scheme,
        mechanisms=mechanisms,
        ranking=ranking,
        initial_budget=initial_budget,
        upfront_budget=upfront_budget,
        elite_table_path=raw.get("elite_table"),
        fmt=fmt,
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    """Serialize a resolved scenario; feeding this back reproduces the run."""
    if scenario.dataset_path is not None:
        dataset = {"path": scenario.dataset_path}
    else:
        dataset = {"synthetic": dataclasses.asdict(scenario.synthetic)}
    return {
        "dataset": dataset,
        "scheme": dataclasses.asdict(scenario.scheme),
        "mechanisms": [m.value for m in scenario.mechanisms],
        "ranking": scenario.ranking,
        "budget": {
            "initial": scenario.initial_budget,
            "upfront": scenario.upfront_budget,
        },
        "elite_table": scenario.elite_table_path,
        "seed": scenario.scheme.seed,
        "format": scenario.fmt,
    }


def _load_dataset(scenario: Scenario) -> list[SiteRecord]:
    if scenario.dataset_path is not None:
        sites, issues = load_sites(scenario.dataset_path)
        for issue in issues:
            print(f"warning: {scenario.dataset_path}: {issue}", file=sys.stderr)
        if not sites:
            raise LoadError(f"{scenario.dataset_path}: no valid rows")
        return sites
    return generate_synthetic(scenario.synthetic, scenario.scheme.seed)


def _elite_table(scenario: Scenario) -> EliteTable:
    if scenario.elite_table_path is None:
        return DEFAULT_ELITE_TABLE
    return load_elite_table(scenario.elite_table_path)


def execute_scenario(
    scenario: Scenario,
) -> tuple[list[RunOutcome], dict[Mechanism, SupplySummary]]:
    """Run every requested mechanism of a resolved scenario."""
    cfg = scenario.scheme
    dataset = _load_dataset(scenario)
    table = _elite_table(scenario)
    schedule = draw_harvest_schedule(dataset, cfg, rng_stream(cfg.seed, HARVEST_STREAM))

    outcomes: list[RunOutcome] = []
    supplies: dict[Mechanism, SupplySummary] = {}
    deferred_outcome: RunOutcome | None = None

    for mechanism in scenario.mechanisms:
        offers = build_offers(dataset, cfg, mechanism, rng_stream(cfg.seed, PHI_STREAM), table)
        supplies[mechanism] = summarize_supply(offers)
        if scenario.ranking == "old_growth":
            offers = select_old_growth(offers)
        ranked = rank_benefit_cost(offers)
        if mechanism is Mechanism.DEFERRED:
            outcome = run_deferred(dataset, cfg, scenario.initial_budget, ranked, schedule)
            deferred_outcome = outcome
        else:
            budget = scenario.upfront_budget
            if budget == NPV_MATCHED:
                if deferred_outcome is None:
                    raise ConfigError("npv-matched budget requires the deferred run to come first")
                spent0 = deferred_outcome.spending_by_year.get(0, 0.0)
                instalment = deferred_outcome.spending_by_year.get(1, 0.0)
                budget = match_upfront_budget(
                    spent0,
                    instalment,
                    cfg.instalment_count_x,
                    cfg.discount_rate,
                    cfg.horizon,
                )
            outcome = run_upfront(dataset, cfg, float(budget), ranked, schedule)
        outcomes.append(outcome)
    return outcomes, supplies


def _write_manifest(out_dir: Path, kind: str, scenario: Scenario, extra: dict | None = None) -> Path:
    manifest = {"version": __version__, "kind": kind, "scenario": scenario_to_dict(scenario)}
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _read_scenario_file(path: str, seed_override: int | None) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if "scenario" in raw:
        raw = raw["scenario"]
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: scenario file must contain a JSON object")
    return resolve_scenario(raw, seed_override)


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _read_scenario_file(args.scenario, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.format:
        scenario = dataclasses.replace(scenario, fmt=args.format)
    outcomes, supplies = execute_scenario(scenario)
    write_report(outcomes, supplies, scenario.scheme, out_dir, scenario.fmt)
    manifest = _write_manifest(out_dir, "run", scenario)
    print(format_console_summary(outcomes, supplies))
    print(f"manifest: {manifest}")
    return EXIT_OK


def _parse_list(raw: str, cast) -> list:
    return [cast(part) for part in raw.split(",") if part.strip()]


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario = _read_scenario_file(args.scenario, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rates = _parse_list(args.interest_rates, float)
    periods = _parse_list(args.payment_periods, int)
    scales = _parse_list(args.bid_cap_scales, float)
    seeds = _parse_list(args.seeds, int) if args.seeds else [scenario.scheme.seed]
    if not rates or not periods or not scales or not seeds:
        raise ConfigError("sweep axes must be non-empty")

    points = list(product(rates, periods, scales, seeds))
    rows: list[dict[str, object]] = []
    for index, (rate, period, scale, seed) in enumerate(points):
        point_scheme = dataclasses.replace(
            scenario.scheme,
            interest_rate_r=rate,
            instalment_count_x=period,
            bid_cap_hi=scenario.scheme.bid_cap_hi * scale,
            seed=seed,
        )
        row: dict[str, object] = {
            "point": index,
            "interest_rate": rate,
            "payment_periods": period,
            "bid_cap_scale": scale,
            "seed": seed,
        }
        try:
            point_scenario = dataclasses.replace(scenario, scheme=require_valid_scheme(point_scheme))
            point_dir = out_dir / f"point_{index:04d}"
            point_dir.mkdir(parents=True, exist_ok=True)
            outcomes, supplies = execute_scenario(point_scenario)
            write_report(outcomes, supplies, point_scenario.scheme, point_dir, point_scenario.fmt)
            _write_manifest(point_dir, "run", point_scenario)
            row["status"] = "ok"
            for outcome in outcomes:
                prefix = "deferred" if outcome.mechanism is Mechanism.DEFERRED else "upfront"
                summary = outcome.summary
                supply = supplies[outcome.mechanism]
                row[f"{prefix}_offered_area_ha"] = supply.offered_area_ha
                row[f"{prefix}_offered_sites"] = supply.offered_sites
                for field_name in (
                    "area_ha",
                    "bd_index_sum",
                    "avg_stand_age",
                    "avg_downpayment",
                    "avg_instalment",
                    "avg_total_payment_npv",
                    "harvested_area_ha",
                    "costs_npv",
                    "benefits_npv",
                    "lost_benefits",
                    "ex_post_net_benefits",
                ):
                    row[f"{prefix}_{field_name}"] = getattr(summary, field_name)
        except (ConfigError, LoadError, OSError, ValueError) as err:
            row["status"] = f"error: {err}"
        rows.append(row)

    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    import csv as _csv

    sweep_path = out_dir / "sweep.csv"
    with open(sweep_path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                [
                    f"{v:.2f}" if isinstance(v, float) else v
                    for v in (row.get(c, "") for c in columns)
                ]
            )
    _write_manifest(
        out_dir,
        "sweep",
        scenario,
        extra={
            "axes": {
                "interest_rates": rates,
                "payment_periods": periods,
                "bid_cap_scales": scales,
                "seeds": seeds,
            }
        },
    )
    print(f"sweep: {len(points)} points -> {sweep_path}")
    return EXIT_OK


def cmd_gen_data(args: argparse.Namespace) -> int:
    if args.profile:
        with open(args.profile, encoding="utf-8") as fh:
            profile = _profile_from_dict(json.load(fh))
        if args.n is not None:
            profile = dataclasses.replace(profile, n_sites=args.n)
    else:
        profile = SyntheticProfile(n_sites=args.n if args.n is not None else 400)
    sites = generate_synthetic(profile, args.seed)
    write_sites(sites, args.out)
    print(f"wrote {len(sites)} sites to {args.out}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    sites, issues = load_sites(args.data)
    for issue in issues:
        print(issue)
    print(f"{len(sites)} valid rows, {len(issues)} issues")
    return EXIT_OK


def cmd_extrapolate(args: argparse.Namespace) -> int:
    if args.from_run:
        with open(args.from_run, encoding="utf-8") as fh:
            report = json.load(fh)
        deferred = next(
            (r for r in report.get("runs", []) if r["mechanism"] == "deferred"), None
        )
        upfront = next((r for r in report.get("runs", []) if r["mechanism"] == "upfront"), None)
        if deferred is None:
            raise ConfigError(f"{args.from_run}: no deferred run to take averages from")
        avg_down = deferred["summary"]["avg_downpayment"]
        avg_inst = deferred["summary"]["avg_instalment"]
        avg_upfront = upfront["summary"]["avg_downpayment"] if upfront else None
    else:
        avg_down = args.avg_downpayment
        avg_inst = args.avg_instalment
        avg_upfront = args.avg_upfront

    cfg = require_valid_scheme(SchemeConfig())
    if args.area is None or args.area <= 0:
        raise ConfigError("--area must be a positive number of hectares")
    if args.upfront_annual_budget is not None:
        avg_upfront = args.upfront_annual_budget / (args.area / cfg.horizon)
    if avg_down is None or avg_inst is None or avg_upfront is None:
        raise ConfigError(
            "need --avg-downpayment, --avg-instalment, and --avg-upfront "
            "(or --upfront-annual-budget / --from-run)"
        )
    if min(avg_down, avg_inst, avg_upfront) < 0:
        raise ConfigError("per-hectare averages must be >= 0")

    report = extrapolate_national(avg_down, avg_inst, avg_upfront, args.area, cfg)
    loss_ha = args.harvest_loss_rate * args.area
    print(f"Conserving {report.area_ha:,.0f} ha")
    print("Deferred mechanism:")
    print(f"  downpayments at year 0:  {report.deferred_downpayments_total/1e6:,.1f} M EUR")
    print(
        f"  instalments per year:    {report.deferred_instalments_per_year/1e6:,.1f} M EUR"
        f" for {cfg.instalment_count_x} years"
    )
    print(f"  total, NPV:              {report.deferred_npv/1e6:,.1f} M EUR")
    print(f"  total, absolute:         {report.deferred_absolute/1e6:,.1f} M EUR")
    print("Up-front mechanism (even conservation over the horizon):")
    print(f"  area per year:           {report.upfront_area_per_year:,.0f} ha")
    print(f"  cost per year:           {report.upfront_cost_per_year/1e6:,.1f} M EUR")
    print(f"  total, NPV:              {report.upfront_npv/1e6:,.1f} M EUR")
    print(f"  total, absolute:         {report.upfront_absolute/1e6:,.1f} M EUR")
    print(
        f"Harvest-risk note: at a {args.harvest_loss_rate:.1%} loss rate, about "
        f"{loss_ha:,.0f} ha would be cut before an up-front program reaches them."
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deferauction",
        description="Deferred-payment conservation auction simulator",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario (or re-run a manifest)")
    run_p.add_argument("scenario", help="scenario JSON file, or a manifest.json from a prior run")
    run_p.add_argument("--out-dir", default="runs/latest")
    run_p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run_p.add_argument("--format", choices=("csv", "json", "both"), default=None)
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run a scenario over parameter grids")
    sweep_p.add_argument("scenario")
    sweep_p.add_argument("--out-dir", default="runs/sweep")
    sweep_p.add_argument("--seed", type=int, default=None)
    sweep_p.add_argument("--interest-rates", default="0.02,0.03,0.04")
    sweep_p.add_argument("--payment-periods", default="10,20")
    sweep_p.add_argument("--bid-cap-scales", default="1.0")
    sweep_p.add_argument("--seeds", default="", help="comma-separated seeds, default scenario seed")
    sweep_p.set_defaults(func=cmd_sweep)

    gen_p = sub.add_parser("gen-data", help="generate a synthetic site CSV")
    gen_p.add_argument("--n", type=int, default=None)
    gen_p.add_argument("--seed", type=int, default=1)
    gen_p.add_argument("--out", required=True)
    gen_p.add_argument("--profile", default=None, help="JSON file with generator profile overrides")
    gen_p.set_defaults(func=cmd_gen_data)

    val_p = sub.add_parser("validate", help="validate a site CSV and print the issue report")
    val_p.add_argument("data")
    val_p.set_defaults(func=cmd_validate)

    ext_p = sub.add_parser("extrapolate", help="program-scale cost projection")
    ext_p.add_argument("--area", type=float, default=None, help="total area, ha")
    ext_p.add_argument("--avg-downpayment", type=float, default=None)
    ext_p.add_argument("--avg-instalment", type=float, default=None)
    ext_p.add_argument("--avg-upfront", type=float, default=None)
    ext_p.add_argument(
        "--upfront-annual-budget",
        type=float,
        default=None,
        help="annual up-front spend; implies the per-hectare payment",
    )
    ext_p.add_argument("--harvest-loss-rate", type=float, default=0.093)
    ext_p.add_argument("--from-run", default=None, help="take averages from a run's summary.json")
    ext_p.set_defaults(func=cmd_extrapolate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (LoadError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except Exception as err:  # noqa: BLE001 - an invariant breach is always a bug
        print(f"internal error: {err!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
