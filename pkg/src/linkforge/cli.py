"""Command-line front end: validate, preprocess, tune, match, network, report,
synth, and the full pipeline.

Every run writes a deterministic manifest (and a separate timings file);
errors leave machine-readable JSON on stderr with exit codes 2 (config),
3 (data), 4 (pair budget), 5 (internal).
"""

import csv
import functools
import json
import os
import sys
import time
from pathlib import Path

import click

from . import __version__, manifest, netgraph, preprocess, records, report, synthgen, tuning
from ._accel import set_num_threads
from .config import load_pipeline_config, validate_paths
from .epilink import field_columns, field_stats, merge_field_columns
from .errors import (
    BudgetExceededError,
    ConfigError,
    DataError,
    LinkforgeError,
    SchemaError,
)
from .matcher import Match, MatchResult, postprocess_result, run_two_stage
from .similarity import FieldSimilarities


def _fail(exc: BaseException, code: int) -> None:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
    sys.exit(code)


def handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ConfigError as exc:
            _fail(exc, 2)
        except BudgetExceededError as exc:
            _fail(exc, 4)
        except (SchemaError, DataError) as exc:
            _fail(exc, 3)
        except LinkforgeError as exc:
            _fail(exc, 5)
    return wrapper


def _config(ctx) -> "PipelineConfig":
    path = ctx.obj.get("config_path")
    if not path:
        raise ConfigError("this command needs --config pointing at a pipeline TOML file")
    cfg = load_pipeline_config(path)
    problems = validate_paths(cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    threads = ctx.obj.get("threads") or cfg.threads \
        or int(os.environ.get("LINKFORGE_THREADS", 0))
    if threads:
        set_num_threads(threads)
    return cfg


def _lookup_tables(cfg):
    return preprocess.load_lookup_tables(
        nicknames_path=cfg.tables.get("nicknames"),
        honorifics_path=cfg.tables.get("honorifics"),
        sex_names_path=cfg.tables.get("sex_names"),
        village_fixes_path=cfg.tables.get("village_fixes"),
    )


def _load_preprocessed(cfg, spec, tables):
    dataset, load_reports = records.load_community(
        spec.id, spec.residents, spec.contacts, spec.villages,
        cfg.resident_columns, cfg.contact_columns)
    processed, prep_report = preprocess.preprocess_dataset(dataset, tables)
    return processed, load_reports, prep_report


@click.group()
@click.option("--config", "-c", "config_path", type=click.Path(), default=None,
              help="Pipeline TOML config file.")
@click.option("--threads", type=int, default=0, help="Worker threads (0 = auto).")
@click.version_option(version=__version__)
@click.pass_context
def main(ctx, config_path, threads):
    """Record-linkage toolkit for sociocentric network construction."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["threads"] = threads


@main.command()
@click.pass_context
@handle_errors
def validate(ctx):
    """Check the config file and input schemas without producing artifacts."""
    cfg = _config(ctx)
    tables = _lookup_tables(cfg)
    summary = []
    for spec in cfg.communities:
        _, load_reports, prep_report = _load_preprocessed(cfg, spec, tables)
        summary.append({
            "community_id": spec.id,
            "residents": load_reports["residents"].records_out,
            "contacts": load_reports["contacts"].records_out,
            "contact_rows_dropped": load_reports["contacts"].dropped,
            "warnings": len(load_reports["residents"].warnings)
            + len(load_reports["contacts"].warnings),
            "unusable_contacts": prep_report.unusable_contacts,
        })
    click.echo(json.dumps({"ok": True, "communities": summary}, indent=2))


@main.command("preprocess")
@click.pass_context
@handle_errors
def preprocess_cmd(ctx):
    """Standardize names, sexes, and villages; export the cleaned dataset."""
    cfg = _config(ctx)
    tables = _lookup_tables(cfg)
    t0 = time.perf_counter()
    payload = []
    for spec in cfg.communities:
        processed, _, prep_report = _load_preprocessed(cfg, spec, tables)
        outdir = cfg.output_dir / spec.id / "preprocessed"
        records.export_community(processed, outdir)
        payload.append({
            "community_id": spec.id,
            "nickname_fraction": prep_report.nickname_fraction,
            "village_fix_fraction": prep_report.village_fix_fraction,
            "sex_imputed_fraction": prep_report.sex_imputed_fraction,
            "unusable_contacts": prep_report.unusable_contacts,
            "out_of_registry_contacts": prep_report.out_of_registry_contacts,
        })
    manifest.write_manifest(cfg.output_dir, "preprocess",
                            {"communities": payload, "seed": cfg.seed},
                            timings={"total": time.perf_counter() - t0})
    click.echo(json.dumps({"ok": True, "communities": payload}, indent=2))


def _write_matches_csv(result, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["contact_id", "resident_id", "namer_id", "domain", "score", "stage"])
        for m in result.matched:
            writer.writerow([m.contact_id, m.resident_id, m.namer_id, m.domain,
                             repr(m.score), m.stage])


def read_matches_csv(path) -> list:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(Match(
                contact_id=row["contact_id"], resident_id=row["resident_id"],
                namer_id=row["namer_id"], domain=row["domain"],
                score=float(row["score"]), stage=row["stage"],
                sims=FieldSimilarities(),
            ))
    return out


def _truth_eval(spec, result) -> dict | None:
    if spec.truth is None:
        return None
    truth = synthgen.load_truth(spec.truth)
    matchable = sum(1 for v in truth.values() if v != synthgen.OUTSIDE)
    correct = sum(1 for m in result.matched if truth.get(m.contact_id) == m.resident_id)
    return {
        "matchable": matchable,
        "matched": len(result.matched),
        "correct": correct,
        "recall": correct / matchable if matchable else None,
        "precision": correct / len(result.matched) if result.matched else None,
    }


def _match_communities(cfg, tables):
    """Shared by `match` and `pipeline`: returns per-community artifacts."""
    match_config = cfg.resolve_match_config()
    datasets = {}
    prep_reports = {}
    for spec in cfg.communities:
        processed, _, prep_report = _load_preprocessed(cfg, spec, tables)
        datasets[spec.id] = processed
        prep_reports[spec.id] = prep_report

    stats_by_community = {}
    if cfg.frequency_scope == "global":
        merged = merge_field_columns([field_columns(ds) for ds in datasets.values()])
        shared = field_stats(merged, match_config)
        for cid in datasets:
            stats_by_community[cid] = shared
    else:
        for cid, ds in datasets.items():
            stats_by_community[cid] = field_stats(ds, match_config)

    results = {}
    for spec in cfg.communities:
        ds = datasets[spec.id]
        raw = run_two_stage(ds, match_config, stats=stats_by_community[spec.id],
                            pair_budget=cfg.pair_budget)
        results[spec.id] = postprocess_result(raw, ds)
    return match_config, datasets, results, prep_reports


def _match_payload(cfg, match_config, spec, result, outdir):
    matches_path = outdir / "matches.csv"
    _write_matches_csv(result, matches_path)
    payload = {
        "community_id": spec.id,
        "config": match_config.to_dict(),
        "n_matched": len(result.matched),
        "n_unmatched": len(result.unmatched_contact_ids),
        "dropped": result.dropped,
        "thresholds": {stage: fit.to_dict()
                       for stage, fit in result.threshold_fits.items()},
        "matches_sha256": manifest.sha256_file(matches_path),
    }
    evaluation = _truth_eval(spec, result)
    if evaluation is not None:
        payload["truth_eval"] = evaluation
    return payload


@main.command()
@click.pass_context
@handle_errors
def match(ctx):
    """Run two-stage matching with the configured (weights, quantile)."""
    cfg = _config(ctx)
    tables = _lookup_tables(cfg)
    t0 = time.perf_counter()
    match_config, _, results, _ = _match_communities(cfg, tables)
    payload = []
    for spec in cfg.communities:
        outdir = cfg.output_dir / spec.id
        outdir.mkdir(parents=True, exist_ok=True)
        payload.append(_match_payload(cfg, match_config, spec, results[spec.id], outdir))
    manifest.write_manifest(
        cfg.output_dir, "match",
        {"seed": cfg.seed, "config_hash": manifest.sha256_text(
            manifest.canonical_json(match_config.to_dict())),
         "communities": payload},
        timings={"total": time.perf_counter() - t0})
    click.echo(json.dumps({"ok": True,
                           "matched": {p["community_id"]: p["n_matched"] for p in payload}},
                          indent=2))


def _network_outputs(cfg, spec, dataset, matches, outdir):
    stats_payload = {}
    for node_filter in cfg.node_filters:
        g = netgraph.build_graph(dataset.residents, matches, node_filter,
                                 community_id=spec.id)
        gdir = outdir / "network" / node_filter
        gdir.mkdir(parents=True, exist_ok=True)
        netgraph.write_edge_csv(g, gdir / "edges.csv")
        netgraph.write_node_csv(g, gdir / "nodes.csv")
        netgraph.write_graphml(g, gdir / "graph.graphml")
        stats = netgraph.graph_stats(g, path_sources=cfg.path_sources, seed=cfg.seed)
        stats_payload[node_filter] = stats.to_dict()
    return stats_payload


@main.command()
@click.pass_context
@handle_errors
def network(ctx):
    """Build graphs from matches.csv and export edges, nodes, and GraphML."""
    cfg = _config(ctx)
    tables = _lookup_tables(cfg)
    t0 = time.perf_counter()
    payload = []
    for spec in cfg.communities:
        outdir = cfg.output_dir / spec.id
        matches_path = outdir / "matches.csv"
        if not matches_path.exists():
            raise DataError(f"{matches_path} not found; run `linkforge match` first")
        dataset, _, _ = _load_preprocessed(cfg, spec, tables)
        matches = read_matches_csv(matches_path)
        stats_payload = _network_outputs(cfg, spec, dataset, matches, outdir)
        payload.append({"community_id": spec.id, "graph_stats": stats_payload})
    manifest.write_manifest(cfg.output_dir, "network",
                            {"seed": cfg.seed, "communities": payload},
                            timings={"total": time.perf_counter() - t0})
    click.echo(json.dumps({"ok": True, "communities": payload}, indent=2))


def _community_report(cfg, spec, dataset, matches, result_like):
    rep = report.data_quality_report(dataset, result_like)
    rep.graph_stats = {}
    for node_filter in cfg.node_filters:
        g = netgraph.build_graph(dataset.residents, matches, node_filter,
                                 community_id=spec.id)
        stats = netgraph.graph_stats(g, path_sources=cfg.path_sources, seed=cfg.seed)
        rep.graph_stats[node_filter] = stats.to_dict()
        if node_filter == "all":
            rep.cross_household_fraction = stats.cross_household_fraction
    g_all = netgraph.build_graph(dataset.residents, matches, "all", community_id=spec.id)
    rep.assortativity = netgraph.assortativity_profile(g_all)
    return rep


@main.command("report")
@click.pass_context
@handle_errors
def report_cmd(ctx):
    """Emit data-quality, network, and assortativity tables."""
    cfg = _config(ctx)
    tables = _lookup_tables(cfg)
    t0 = time.perf_counter()
    reports = []
    for spec in cfg.communities:
        matches_path = cfg.output_dir / spec.id / "matches.csv"
        if not matches_path.exists():
            raise DataError(f"{matches_path} not found; run `linkforge match` first")
        dataset, _, _ = _load_preprocessed(cfg, spec, tables)
        matches = read_matches_csv(matches_path)
        result_like = MatchResult(matched=matches)
        reports.append(_community_report(cfg, spec, dataset, matches, result_like))
    paths = report.emit_reports(reports, cfg.output_dir / "reports")
    manifest.write_manifest(
        cfg.output_dir, "report",
        {"seed": cfg.seed,
         "outputs": {k: manifest.sha256_file(p) for k, p in paths.items()}},
        timings={"total": time.perf_counter() - t0})
    click.echo(json.dumps({"ok": True, "reports": str(cfg.output_dir / "reports")}, indent=2))


@main.command()
@click.option("--out", type=click.Path(), required=True, help="Output directory.")
@click.option("--communities", "n_communities", type=int, default=1)
@click.option("--residents", "n_residents", type=int, default=500)
@click.option("--villages", "n_villages", type=int, default=6)
@click.option("--seed", type=int, default=0)
@click.option("--profile", type=click.Choice(["zero", "moderate"]), default="moderate")
@click.option("--name-bank", type=click.Choice(["east_africa", "generic"]),
              default="east_africa")
@handle_errors
def synth(out, n_communities, n_residents, n_villages, seed, profile, name_bank):
    """Generate synthetic communities with ground truth and a ready config."""
    out = Path(out)
    t0 = time.perf_counter()
    prof = synthgen.CorruptionProfile.zero_corruption() if profile == "zero" \
        else synthgen.CorruptionProfile.moderate()
    community_blocks = []
    generated = []
    for i in range(n_communities):
        cid = f"synth{i}"
        synth_comm = synthgen.generate_community(cid, n_residents, n_villages, prof,
                                                 seed=seed + i, name_bank=name_bank)
        paths = synthgen.write_community(synth_comm, out / cid)
        generated.append({
            "community_id": cid,
            "n_residents": len(synth_comm.resident_rows),
            "n_contacts": len(synth_comm.contact_rows),
            "residents_sha256": manifest.sha256_file(paths["residents"]),
            "contacts_sha256": manifest.sha256_file(paths["contacts"]),
            "truth_sha256": manifest.sha256_file(paths["truth"]),
        })
        community_blocks.append(
            f'[[community]]\nid = "{cid}"\n'
            f'residents = "{cid}/residents.csv"\n'
            f'contacts = "{cid}/contacts.csv"\n'
            f'villages = "{cid}/villages.csv"\n'
            f'truth = "{cid}/truth.csv"\n'
        )
    config_text = (
        "[project]\n"
        'output_dir = "out"\n'
        f"seed = {seed}\n\n"
        "[tables]\n"
        'nicknames = "synth0/tables/nicknames.csv"\n'
        'honorifics = "synth0/tables/honorifics.csv"\n'
        'sex_names = "synth0/tables/sex_names.csv"\n\n'
        + "\n".join(community_blocks)
        + "\n[match]\n"
        "weights = [0.30, 0.12, 0.30, 0.08, 0.12, 0.04, 0.04]\n"
        "quantile = 0.95\n"
    )
    (out / "pipeline.toml").write_text(config_text, encoding="utf-8")
    manifest.write_manifest(
        out, "synth",
        {"seed": seed, "profile": profile, "name_bank": name_bank,
         "communities": generated},
        timings={"total": time.perf_counter() - t0})
    click.echo(json.dumps({"ok": True, "out": str(out),
                           "config": str(out / "pipeline.toml")}, indent=2))


@main.command()
@click.option("--community", "community_id", default=None,
              help="Community to tune (default: first in config).")
@click.option("--no-serve", is_flag=True, default=False,
              help="Create the session directory without starting the service.")
@click.option("--port", type=int, default=None, help="Override the service port.")
@click.pass_context
@handle_errors
def tune(ctx, community_id, no_serve, port):
    """Sample a tuning session; serve the review UI until a config is chosen."""
    cfg = _config(ctx)
    tables = _lookup_tables(cfg)
    specs = {spec.id: spec for spec in cfg.communities}
    if community_id is None:
        community_id = cfg.communities[0].id
    if community_id not in specs:
        raise ConfigError(f"community {community_id!r} not in config")
    t0 = time.perf_counter()
    dataset, _, _ = _load_preprocessed(cfg, specs[community_id], tables)
    session = tuning.sample_session(
        dataset, n_contacts=cfg.tune_n_contacts, n_weights=cfg.tune_n_weights,
        seed=cfg.seed)
    session_dir = cfg.output_dir / f"tune_{community_id}"
    tuning.save_session(session, session_dir)
    manifest.write_manifest(
        session_dir, "tune",
        {"seed": cfg.seed, "community_id": community_id,
         "n_contacts": cfg.tune_n_contacts, "n_weights": cfg.tune_n_weights,
         "n_pairs": session.n_pairs, "n_configs": session.n_configs,
         "quantile_grid": list(session.quantile_grid)},
        timings={"sample": time.perf_counter() - t0})
    click.echo(json.dumps({"ok": True, "session_dir": str(session_dir),
                           "n_pairs": session.n_pairs,
                           "n_configs": session.n_configs}, indent=2))
    if no_serve:
        return
    from .service import TuningService, serve

    service = TuningService(session, session_dir, min_tpr=cfg.tune_min_tpr)
    server = serve(service, cfg.service_host, port or cfg.service_port)
    host, actual_port = server.server_address[:2]
    click.echo(f"review UI at http://{host}:{actual_port}/ "
               "(blocks until a config is selected; Ctrl-C to stop)", err=True)
    try:
        service.selection_event.wait()
        click.echo(json.dumps({"ok": True,
                               "chosen_config": str(session_dir / "chosen_config.json"),
                               "config_id": service.selected_config_id}, indent=2))
    except KeyboardInterrupt:
        click.echo("stopped without selection", err=True)
    finally:
        server.shutdown()


@main.command()
@click.pass_context
@handle_errors
def pipeline(ctx):
    """preprocess -> match -> network -> report with a pre-selected config."""
    cfg = _config(ctx)
    tables = _lookup_tables(cfg)
    timings = {}
    t_start = time.perf_counter()

    t0 = time.perf_counter()
    match_config, datasets, results, prep_reports = _match_communities(cfg, tables)
    timings["match"] = time.perf_counter() - t0

    payload = []
    reports = []
    t0 = time.perf_counter()
    for spec in cfg.communities:
        ds = datasets[spec.id]
        result = results[spec.id]
        outdir = cfg.output_dir / spec.id
        outdir.mkdir(parents=True, exist_ok=True)
        records.export_community(ds, outdir / "preprocessed")
        community_payload = _match_payload(cfg, match_config, spec, result, outdir)
        community_payload["preprocess"] = {
            "nickname_fraction": prep_reports[spec.id].nickname_fraction,
            "village_fix_fraction": prep_reports[spec.id].village_fix_fraction,
        }
        community_payload["graph_stats"] = _network_outputs(
            cfg, spec, ds, result.matched, outdir)
        rep = _community_report(cfg, spec, ds, result.matched, result)
        reports.append(rep)
        payload.append(community_payload)
    timings["network_report"] = time.perf_counter() - t0
    report_paths = report.emit_reports(reports, cfg.output_dir / "reports")
    timings["total"] = time.perf_counter() - t_start

    manifest.write_manifest(
        cfg.output_dir, "pipeline",
        {"seed": cfg.seed,
         "config_hash": manifest.sha256_text(
             manifest.canonical_json(match_config.to_dict())),
         "communities": payload,
         "report_outputs": {k: manifest.sha256_file(p) for k, p in report_paths.items()}},
        timings=timings)
    click.echo(json.dumps(
        {"ok": True,
         "matched": {p["community_id"]: p["n_matched"] for p in payload},
         "reports": str(cfg.output_dir / "reports")}, indent=2))


if __name__ == "__main__":
    main()
