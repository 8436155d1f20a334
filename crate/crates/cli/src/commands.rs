use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::info;
use mlstream::analysis::{class_matrix, density_dynamics, floor_to, rank_compare, restrict_to};
use mlstream::centrality::{
    covariance_of_exposures, juxtaposed_centrality, superimposed_centrality, superimposed_from_exposure, SolverOptions,
};
use mlstream::ingest::contacts::{FACE2FACE, INTERACTION_ASPECT};
use mlstream::ingest::{
    read_interchange_unvalidated, ticks_per_second, write_interchange_string, DatasetManifest, IngestReport,
};
use mlstream::measures::{
    degree, density_matrix_with, density_mls_with, density_stream, number_of_links, DensityMatrix,
};
use mlstream::output::{csv_field, fmt_num, write_atomic};
use mlstream::projections::{aggregated_stream, collapse_aspects, interlayer_stream, snapshot, time_window};
use mlstream::walks::{direct_exposure, layer_exposure_with, ExposureWeighting, StartScheme, WalkPolicy};
use mlstream::{Execution, Instant, Interval, LayerId, MultilayerStreamGraph};

use crate::{Cli, Command, InteractionArg, Kind, Projection, SolverArgs, WalkArgs};

pub enum Outcome {
    Ok,
    Violations(usize),
}

struct Ctx {
    manifest: Option<PathBuf>,
    graph: Option<PathBuf>,
    out_dir: PathBuf,
    exec: Execution,
}

impl Ctx {
    fn load(&self) -> Result<(MultilayerStreamGraph, IngestReport)> {
        let manifest = match (&self.manifest, &self.graph) {
            (Some(m), _) => load_manifest(m)?,
            (None, Some(g)) => DatasetManifest::interchange(g),
            (None, None) => bail!("one of --manifest or --graph is required"),
        };
        let (g, report) = manifest.load()?;
        info!(
            "loaded {} nodes, {} layers, {} links",
            g.node_count(),
            g.space().len(),
            g.links().len()
        );
        Ok((g, report))
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        write_atomic(&path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
        info!("wrote {}", path.display());
        Ok(())
    }
}

fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let m: DatasetManifest = toml::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(m.with_base_dir(base))
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let ctx = Ctx {
        manifest: cli.manifest,
        graph: cli.graph,
        out_dir: cli.out_dir,
        exec: if cli.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        },
    };
    match cli.command {
        Command::Validate => validate(&ctx),
        Command::Export => export(&ctx).map(|_| Outcome::Ok),
        Command::Stats { denominator_mode } => stats(&ctx, denominator_mode).map(|_| Outcome::Ok),
        Command::Project { to } => project(&ctx, to).map(|_| Outcome::Ok),
        Command::DensityDynamics {
            aspect,
            interaction,
            window,
            window_origin,
        } => {
            let (g, _) = ctx.load()?;
            let inter = interaction_filter(&g, &interaction, true)?;
            let day = window
                .checked_mul(ticks_per_second(g.resolution())?)
                .ok_or_else(|| anyhow!("window too long"))?;
            let origin = window_origin
                .map(Instant)
                .unwrap_or_else(|| floor_to(g.study_interval().start, day));
            let dyn_ = density_dynamics(&g, &aspect, as_pair(&inter), origin, day)?;
            ctx.write("density_dynamics.csv", &dyn_.to_csv())?;
            Ok(Outcome::Ok)
        }
        Command::ClassMatrix { aspect, interaction } => {
            let (g, _) = ctx.load()?;
            let inter = interaction_filter(&g, &interaction, true)?;
            let m = class_matrix(&g, &aspect, as_pair(&inter), ctx.exec)?;
            ctx.write("class_matrix.csv", &m.to_csv())?;
            ctx.write("class_matrix_log10.csv", &m.to_log_csv())?;
            Ok(Outcome::Ok)
        }
        Command::Centrality {
            kind,
            matrix_file,
            aspect,
            interaction,
            walk,
            solver,
            batches,
        } => centrality(&ctx, kind, matrix_file, aspect, &interaction, &walk, &solver, batches).map(|_| Outcome::Ok),
        Command::RankCompare {
            aspect,
            walk,
            solver,
            seeds,
        } => {
            let (g, _) = ctx.load()?;
            let g = collapse_to(g, aspect.as_deref())?;
            let policy = walk_policy(&g, &walk, ExposureWeighting::LinearHorizon)?;
            let seeds: Vec<u64> = (0..seeds).map(|i| policy.seed.wrapping_add(i)).collect();
            let r = rank_compare(
                &g,
                start_scheme(&walk),
                &policy,
                &seeds,
                solver_options(&solver),
                ctx.exec,
            )?;
            ctx.write("rank_compare.csv", &r.to_csv())?;
            ctx.write("rank_summary.csv", &r.summary())?;
            ctx.write("centrality.json", &r.report.to_json())?;
            println!("spearman rho = {}", fmt_num(r.rho));
            Ok(Outcome::Ok)
        }
        Command::Exposure { direct, aspect, walk } => {
            let (g, _) = ctx.load()?;
            let g = collapse_to(g, aspect.as_deref())?;
            let x = if direct {
                let t0 = Instant(walk.t0.unwrap_or(g.study_interval().start.0));
                let t_max = Instant(walk.t_max.unwrap_or(g.study_interval().end.0));
                direct_exposure(&g, t0, t_max)
            } else {
                let policy = walk_policy(&g, &walk, ExposureWeighting::Indicator)?;
                layer_exposure_with(&g, start_scheme(&walk), &policy, ctx.exec)
            };
            ctx.write("exposure.csv", &x.to_csv())?;
            Ok(Outcome::Ok)
        }
    }
}

fn validate(ctx: &Ctx) -> Result<Outcome> {
    // closure violations are reported here rather than rejected on read
    let (g, report) = match (&ctx.manifest, &ctx.graph) {
        (None, Some(path)) => (read_interchange_unvalidated(path)?, IngestReport::default()),
        _ => ctx.load()?,
    };
    let violations = g.validate();
    for v in &violations {
        println!("{v}");
    }
    if !report.is_balanced() {
        bail!("ingestion counters do not balance");
    }
    if violations.is_empty() {
        println!("ok: {} nodes, {} links", g.node_count(), g.links().len());
        Ok(Outcome::Ok)
    } else {
        Ok(Outcome::Violations(violations.len()))
    }
}

fn export(ctx: &Ctx) -> Result<()> {
    let (g, report) = ctx.load()?;
    ctx.write("graph.json", &write_interchange_string(&g))?;
    let mut out = String::from("file,total,accepted,reason,dropped\n");
    for f in &report.files {
        let _ = writeln!(out, "{},{},{},,0", csv_field(&f.file), f.total, f.accepted);
        for (reason, n) in &f.dropped {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(&f.file),
                f.total,
                f.accepted,
                csv_field(reason),
                n
            );
        }
    }
    ctx.write("ingest_report.csv", &out)
}

fn stats(ctx: &Ctx, mode: mlstream::measures::DenominatorMode) -> Result<()> {
    let (g, _) = ctx.load()?;
    let study = g.study_interval();
    let links = number_of_links(g.links(), study)?;
    let dens = density_mls_with(&g, mode, ctx.exec);
    let agg = density_stream(&aggregated_stream(&g));
    let mut out = String::from("metric,value\n");
    let rows: Vec<(&str, String)> = vec![
        ("study_start", study.start.0.to_string()),
        ("study_end", study.end.0.to_string()),
        ("nodes", g.node_count().to_string()),
        ("layers", g.space().len().to_string()),
        ("layers_in_use", g.layers_in_use().len().to_string()),
        ("node_layers", g.node_layers().len().to_string()),
        ("links", g.links().len().to_string()),
        ("number_of_links", fmt_num(links.value())),
        ("density", fmt_num(dens.value())),
        ("density_numerator", dens.numerator.to_string()),
        ("density_denominator", dens.denominator.to_string()),
        ("aggregated_density", fmt_num(agg.value())),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    ctx.write("stats.csv", &out)?;
    let mut deg = String::from("node,degree,duration_degree\n");
    for u in g.nodes() {
        let d = degree(&g, u)?;
        let _ = writeln!(
            deg,
            "{},{},{}",
            csv_field(g.node_name(u)),
            d.count_degree,
            fmt_num(d.duration_degree)
        );
    }
    ctx.write("degrees.csv", &deg)
}

fn project(ctx: &Ctx, to: Projection) -> Result<()> {
    let (g, _) = ctx.load()?;
    match to {
        Projection::Aggregated => {
            let s = aggregated_stream(&g);
            let mut out = String::from("node_a,node_b,start,end\n");
            for ((u, v), ts) in &s.links {
                for iv in ts.intervals() {
                    let _ = writeln!(
                        out,
                        "{},{},{},{}",
                        csv_field(g.node_name(*u)),
                        csv_field(g.node_name(*v)),
                        iv.start.0,
                        iv.end.0
                    );
                }
            }
            ctx.write("aggregated.csv", &out)
        }
        Projection::Snapshot { at } => {
            let m = snapshot(&g, Instant(at))?;
            let mut out = String::from("node_a,layer_a,node_b,layer_b\n");
            for (a, b) in &m.edges {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    csv_field(g.node_name(a.node)),
                    csv_field(&g.layer_label(a.layer)),
                    csv_field(g.node_name(b.node)),
                    csv_field(&g.layer_label(b.layer))
                );
            }
            ctx.write("snapshot.csv", &out)
        }
        Projection::Window { from, to } => {
            if from > to {
                bail!("window start {from} is after its end {to}");
            }
            ctx.write(
                "window.json",
                &write_interchange_string(&time_window(&g, Interval::closed(from, to))),
            )
        }
        Projection::Collapse { aspects } => {
            let keep: Vec<&str> = aspects.iter().map(String::as_str).collect();
            ctx.write(
                "collapsed.json",
                &write_interchange_string(&collapse_aspects(&g, &keep)?),
            )
        }
        Projection::Interlayer { alpha, beta } => {
            let a = g.space().id_by_label(&alpha)?;
            let b = g.space().id_by_label(&beta)?;
            let s = interlayer_stream(&g, a, b)?;
            let mut out = String::from("node_a,layer_a,node_b,layer_b,start,end\n");
            for ((x, y), ts) in &s.stream.links {
                for iv in ts.intervals() {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        csv_field(g.node_name(x.node)),
                        csv_field(&g.layer_label(x.layer)),
                        csv_field(g.node_name(y.node)),
                        csv_field(&g.layer_label(y.layer)),
                        iv.start.0,
                        iv.end.0
                    );
                }
            }
            println!("density = {}", fmt_num(density_stream(&s.stream).value()));
            ctx.write("interlayer.csv", &out)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn centrality(
    ctx: &Ctx,
    kind: Kind,
    matrix_file: Option<PathBuf>,
    aspect: Option<String>,
    interaction: &InteractionArg,
    walk: &WalkArgs,
    solver: &SolverArgs,
    batches: usize,
) -> Result<()> {
    let opts = solver_options(solver);
    let report = match kind {
        Kind::Juxtaposed => {
            let delta = match matrix_file {
                Some(path) => read_matrix(&path)?,
                None => {
                    let (g, _) = ctx.load()?;
                    let inter = interaction_filter(&g, interaction, true)?;
                    let g = match as_pair(&inter) {
                        Some((a, v)) => restrict_to(&g, a, v)?,
                        None => g,
                    };
                    let g = collapse_to(g, aspect.as_deref())?;
                    let ids: Vec<LayerId> = g.space().ids().collect();
                    density_matrix_with(&g, &ids, ctx.exec)?
                }
            };
            ctx.write("density_matrix.csv", &delta.to_csv())?;
            juxtaposed_centrality(&delta, opts)?
        }
        Kind::Superimposed => {
            if matrix_file.is_some() {
                bail!("--matrix-file applies to juxtaposed centrality only");
            }
            let (g, _) = ctx.load()?;
            let inter = interaction_filter(&g, interaction, false)?;
            let g = match as_pair(&inter) {
                Some((a, v)) => restrict_to(&g, a, v)?,
                None => g,
            };
            let g = collapse_to(g, aspect.as_deref())?;
            let policy = walk_policy(&g, walk, ExposureWeighting::Indicator)?;
            let starts = start_scheme(walk);
            let x = layer_exposure_with(&g, starts, &policy, ctx.exec);
            ctx.write("exposure.csv", &x.to_csv())?;
            ctx.write("covariance.csv", &covariance_of_exposures(&x)?.to_csv())?;
            if batches >= 2 {
                superimposed_centrality(&g, starts, &policy, opts, batches, ctx.exec)?
            } else {
                superimposed_from_exposure(&x, opts)?
            }
        }
    };
    ctx.write("centrality.csv", &report.to_csv())?;
    ctx.write("centrality.json", &report.to_json())?;
    for l in &report.ranking {
        println!("{l}");
    }
    Ok(())
}

fn collapse_to(g: MultilayerStreamGraph, aspect: Option<&str>) -> Result<MultilayerStreamGraph> {
    Ok(match aspect {
        Some(a) => collapse_aspects(&g, &[a])?,
        None => g,
    })
}

/// `Some((aspect, value))` when a restriction applies.
fn interaction_filter(
    g: &MultilayerStreamGraph,
    arg: &InteractionArg,
    default_face2face: bool,
) -> Result<Option<(String, String)>> {
    match arg.interaction.as_deref() {
        Some("none") => Ok(None),
        Some(spec) => {
            let (a, v) = spec
                .split_once('=')
                .ok_or_else(|| anyhow!("--interaction expects aspect=value or none"))?;
            Ok(Some((a.to_string(), v.to_string())))
        }
        None if default_face2face => {
            let has = g
                .space()
                .aspect_index(INTERACTION_ASPECT)
                .is_some_and(|i| g.space().aspects()[i].position(FACE2FACE).is_some());
            Ok(has.then(|| (INTERACTION_ASPECT.to_string(), FACE2FACE.to_string())))
        }
        None => Ok(None),
    }
}

fn as_pair(x: &Option<(String, String)>) -> Option<(&str, &str)> {
    x.as_ref().map(|(a, v)| (a.as_str(), v.as_str()))
}

fn walk_policy(g: &MultilayerStreamGraph, w: &WalkArgs, weighting: ExposureWeighting) -> Result<WalkPolicy> {
    let seed = w
        .seed
        .ok_or_else(|| anyhow!("--seed is required for walk-based commands"))?;
    let mut p = WalkPolicy::for_graph(g, w.walks, seed);
    p.gamma = w.gamma;
    p.max_hops = w.max_hops;
    p.weighting = w.weighting.unwrap_or(weighting);
    if let Some(t) = w.t_max {
        p.t_max = Instant(t);
    }
    p.check(g).map_err(|e| anyhow!(e))?;
    Ok(p)
}

fn start_scheme(w: &WalkArgs) -> StartScheme {
    match w.t0 {
        Some(t) => StartScheme::Fixed(Instant(t)),
        None => StartScheme::UniformPresence,
    }
}

fn solver_options(s: &SolverArgs) -> SolverOptions {
    SolverOptions {
        tol: s.tol,
        max_iter: s.max_iter,
    }
}

fn parse_entry(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((n, d)) => n.trim().parse::<f64>()? / d.trim().parse::<f64>()?,
        None => s.parse::<f64>()?,
    };
    Ok(v)
}

/// A square matrix CSV: a header of layer labels after one corner cell, then
/// one row per layer starting with its label.
fn read_matrix(path: &Path) -> Result<DensityMatrix> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let labels: Vec<String> = rdr.headers()?.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.get(0).map(str::trim) != labels.get(i).map(String::as_str) {
            bail!("{}: row {} label does not match the header", path.display(), i + 1);
        }
        let row = rec
            .iter()
            .skip(1)
            .map(parse_entry)
            .collect::<Result<Vec<_>>>()
            .with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        if row.len() != labels.len() {
            bail!(
                "{}: row {} has {} entries, expected {}",
                path.display(),
                i + 1,
                row.len(),
                labels.len()
            );
        }
        values.push(row);
    }
    if values.len() != labels.len() {
        bail!("{}: {} rows for {} columns", path.display(), values.len(), labels.len());
    }
    Ok(DensityMatrix::from_values(labels, values))
}
