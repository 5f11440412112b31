//! `carnot` — command-line runner for homogeneous-group experiments.
//!
//! Subcommands: `validate`, `project`, `jacobian`, `spherical-factor`,
//! `blowup`, `area`, `level-set`. Groups come from built-in fixtures or
//! JSON spec files; every stochastic command takes a mandatory `--seed`
//! and produces byte-identical reports for equal seeds and configs,
//! independent of thread count.
//!
//! Exit codes: 0 = pass, 1 = computation or tolerance failure,
//! 2 = usage/parse errors.

use carnot::algebra::Point;
use carnot::graph::{self, IntrinsicMap};
use carnot::groupspec::{self, ResolvedGroup};
use carnot::measure::{self, AreaBudget, CoordBox, SphericalBudget};
use carnot::metric::Distance;
use carnot::report;
use carnot::splitting::ComplementaryCouple;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "carnot",
    version,
    about = "Numerical toolkit for homogeneous (graded nilpotent) Lie groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GroupArgs {
    /// Built-in group (heisenberg1, heisenberg2, engel) or path to a JSON spec file
    #[arg(long, default_value = "heisenberg1")]
    group: String,
    /// Complementary couple by subgroup name, e.g. --couple W=vertical V=horizontal
    #[arg(long, num_args = 1.., value_name = "K=NAME",
          default_values_t = ["W=vertical".to_string(), "V=horizontal".to_string()])]
    couple: Vec<String>,
    /// Distance override: dinf, cygan_koranyi, weighted:w1,w2,…
    #[arg(long)]
    dist: Option<String>,
    /// Write the JSON report to this path instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check group axioms, subgroup gradedness, couple complementarity and metric axioms
    Validate {
        #[command(flatten)]
        common: GroupArgs,
        #[arg(long)]
        seed: u64,
        /// Sample count for the metric-axiom checks
        #[arg(long, default_value_t = 4000)]
        samples: usize,
    },
    /// Factor a point through the couple: g = π_W(g)·π_V(g)
    Project {
        #[command(flatten)]
        common: GroupArgs,
        /// Ambient coordinates, comma-separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<f64>,
    },
    /// All three intrinsic-Jacobian routes for a φ fixture at a base point
    Jacobian {
        #[command(flatten)]
        common: GroupArgs,
        /// Map fixture: zero, linear:a, parabola
        #[arg(long)]
        phi: String,
        /// Base point on W, ambient coordinates
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
        #[arg(long)]
        seed: u64,
        /// Monte Carlo samples for the measure route
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
    },
    /// Maximize the unit-ball slice volume of a subgroup over ball centers
    SphericalFactor {
        #[command(flatten)]
        common: GroupArgs,
        /// Subgroup name from the group spec (fixtures: vertical, horizontal)
        #[arg(long)]
        subspace: String,
        #[arg(long)]
        seed: u64,
        /// Monte Carlo samples per objective evaluation during the search
        #[arg(long, default_value_t = 4096)]
        samples: usize,
    },
    /// Federer-density blow-up of the graph measure at a point
    Blowup {
        #[command(flatten)]
        common: GroupArgs,
        #[arg(long)]
        phi: String,
        /// Point on the graph, ambient coordinates
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<f64>,
        #[arg(long)]
        seed: u64,
        /// Monte Carlo samples per (scale, center) cell
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Sampled ball centers per scale
        #[arg(long, default_value_t = 64)]
        centers: usize,
        /// Decreasing scales, comma-separated (default 2^-3 … 2^-9)
        #[arg(long, value_delimiter = ',')]
        t_schedule: Option<Vec<f64>>,
        /// Also write the per-scale table as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// End-to-end area identity over a coordinate region
    Area {
        #[command(flatten)]
        common: GroupArgs,
        #[arg(long)]
        phi: String,
        /// Region as lo1,lo2,…:hi1,hi2,… in ambient coordinates (default [-0.5,0.5]^q)
        #[arg(long, allow_hyphen_values = true)]
        region: Option<String>,
        #[arg(long)]
        seed: u64,
        /// Monte Carlo samples for the graph-measure estimates
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
    },
    /// Implicit level-set parametrization and its Jacobian ratio
    LevelSet {
        #[command(flatten)]
        common: GroupArgs,
        /// Scalar map fixture: coord:j or x-plus-ysq
        #[arg(long)]
        f: String,
        /// Point on the level set, ambient coordinates
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
    },
}

enum Failure {
    Usage(String),
    Run(String),
}

type CmdResult = Result<i32, Failure>;

fn usage<T>(r: carnot::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Usage(e.to_string()))
}

fn run<T>(r: carnot::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Run(e.to_string()))
}

/// Everything a subcommand needs, resolved from the common flags.
struct Setup {
    group: ResolvedGroup,
    w_name: String,
    v_name: String,
    distance: Distance,
}

impl Setup {
    fn resolve(common: &GroupArgs) -> Result<Self, Failure> {
        let group = usage(groupspec::resolve(&common.group))?;
        let (mut w_name, mut v_name) = ("vertical".to_string(), "horizontal".to_string());
        for entry in &common.couple {
            let (k, name) = entry.split_once('=').ok_or_else(|| {
                Failure::Usage(format!("bad couple entry {entry:?}; expected K=NAME"))
            })?;
            match k.trim().to_ascii_uppercase().as_str() {
                "W" => w_name = name.trim().to_string(),
                "V" => v_name = name.trim().to_string(),
                other => {
                    return Err(Failure::Usage(format!("couple key must be W or V, got {other:?}")))
                }
            }
        }
        let distance = match &common.dist {
            Some(s) => usage(Distance::parse(s))?,
            None => group.distance.clone(),
        };
        Ok(Setup { group, w_name, v_name, distance })
    }

    fn couple(&self) -> Result<ComplementaryCouple, Failure> {
        usage(self.group.couple(&self.w_name, &self.v_name))
    }

    fn point(&self, coords: &[f64]) -> Result<Point, Failure> {
        usage(self.group.algebra.point(coords.to_vec()))
    }

    fn config(&self, command: &str) -> ConfigEcho {
        ConfigEcho {
            command: command.to_string(),
            group: self.group.name.clone(),
            w: self.w_name.clone(),
            v: self.v_name.clone(),
            distance: self.distance.clone(),
            phi: None,
            subspace: None,
            f: None,
            point: None,
            region: None,
            seed: None,
            samples: None,
        }
    }
}

/// Resolved configuration echoed into every report.
#[derive(Clone, Serialize)]
struct ConfigEcho {
    command: String,
    group: String,
    w: String,
    v: String,
    distance: Distance,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subspace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    region: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
}

fn emit<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Result<(), Failure> {
    run(report::write_report(value, out.map(|p| p.as_path())))
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    };
    std::process::exit(code);
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Validate { common, seed, samples } => cmd_validate(&common, seed, samples),
        Command::Project { common, point } => cmd_project(&common, &point),
        Command::Jacobian { common, phi, at, seed, samples } => {
            cmd_jacobian(&common, &phi, &at, seed, samples)
        }
        Command::SphericalFactor { common, subspace, seed, samples } => {
            cmd_spherical(&common, &subspace, seed, samples)
        }
        Command::Blowup { common, phi, point, seed, samples, centers, t_schedule, csv } => {
            cmd_blowup(&common, &phi, &point, seed, samples, centers, t_schedule.as_deref(), csv)
        }
        Command::Area { common, phi, region, seed, samples } => {
            cmd_area(&common, &phi, region.as_deref(), seed, samples)
        }
        Command::LevelSet { common, f, at } => cmd_level_set(&common, &f, &at),
    }
}

#[derive(Serialize)]
struct ValidateReport {
    config: ConfigEcho,
    algebra_valid: bool,
    algebra_violations: Vec<String>,
    subgroup_reports: Vec<carnot::splitting::SubgroupReport>,
    couple_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    couple_error: Option<String>,
    distance_report: carnot::metric::DistanceValidationReport,
    distance_is_metric: bool,
    pass: bool,
}

fn cmd_validate(common: &GroupArgs, seed: u64, samples: usize) -> CmdResult {
    let setup = Setup::resolve(common)?;
    let alg = &setup.group.algebra;
    let algebra_report = alg.validate();
    let w = usage(setup.group.subgroup(&setup.w_name))?.clone();
    let v = usage(setup.group.subgroup(&setup.v_name))?.clone();
    let subgroup_reports = vec![w.validate(alg), v.validate(alg)];
    let couple = ComplementaryCouple::new(alg, w, v);
    let (couple_ok, couple_error) = match &couple {
        Ok(_) => (true, None),
        Err(e) => (false, Some(e.to_string())),
    };
    let distance_report = run(setup.distance.validate(alg, samples, seed))?;
    let distance_is_metric = distance_report.is_metric(1e-9);
    let pass = algebra_report.is_valid()
        && subgroup_reports.iter().all(|r| r.is_valid())
        && couple_ok
        && distance_is_metric;
    let mut config = setup.config("validate");
    config.seed = Some(seed);
    config.samples = Some(samples);
    let report = ValidateReport {
        config,
        algebra_valid: algebra_report.is_valid(),
        algebra_violations: algebra_report.violations.iter().map(|v| v.to_string()).collect(),
        subgroup_reports,
        couple_ok,
        couple_error,
        distance_report,
        distance_is_metric,
        pass,
    };
    emit(&report, common.out.as_ref())?;
    Ok(if pass { 0 } else { 1 })
}

#[derive(Serialize)]
struct ProjectReport {
    config: ConfigEcho,
    w_part: Point,
    v_part: Point,
    reassembly_residual: f64,
}

fn cmd_project(common: &GroupArgs, point: &[f64]) -> CmdResult {
    let setup = Setup::resolve(common)?;
    let couple = setup.couple()?;
    let alg = &setup.group.algebra;
    let g = setup.point(point)?;
    let (w_part, v_part) = couple.project(alg, &g);
    let back = alg.multiply(&w_part, &v_part);
    let residual = back
        .coords()
        .iter()
        .zip(g.coords())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut config = setup.config("project");
    config.point = Some(point.to_vec());
    emit(&ProjectReport { config, w_part, v_part, reassembly_residual: residual }, common.out.as_ref())?;
    Ok(if residual <= 1e-10 { 0 } else { 1 })
}

#[derive(Serialize)]
struct JacobianReport {
    config: ConfigEcho,
    wedge: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    minors: Option<f64>,
    measure_mc: carnot::measure::MeasureEstimate,
    differential_residual: f64,
    wedge_minors_gap: f64,
    mc_gap: f64,
    pass: bool,
}

fn cmd_jacobian(common: &GroupArgs, phi: &str, at: &[f64], seed: u64, samples: usize) -> CmdResult {
    let setup = Setup::resolve(common)?;
    let couple = setup.couple()?;
    let alg = &setup.group.algebra;
    let map = usage(graph::map_by_name(alg, &couple, phi))?;
    let g = setup.point(at)?;
    let w = couple.project_w(alg, &g);
    if couple.w().off_span_residual(g.coords()) > 1e-9 {
        return Err(Failure::Usage(format!("--at point is not on W (residual at {at:?})")));
    }
    let est = run(graph::estimate_intrinsic_differential(
        alg,
        &map,
        &w,
        &graph::default_t_schedule(),
    ))?;
    let wedge = run(graph::jacobian_wedge(&couple, &est.map))?;
    let minors = est.map.matrix().map(graph::jacobian_minors);
    let wt = couple.w().coords_of(w.coords());
    let lo: Vec<f64> = wt.iter().map(|x| x - 0.5).collect();
    let hi: Vec<f64> = wt.iter().map(|x| x + 0.5).collect();
    let mc = run(graph::jacobian_measure_mc(alg, &couple, &est.map, &lo, &hi, samples, seed))?;
    let wedge_minors_gap = minors.map(|m| (m - wedge).abs()).unwrap_or(0.0);
    let mc_gap = (mc.value - wedge).abs();
    let pass = wedge_minors_gap <= 1e-9 * (1.0 + wedge)
        && mc_gap <= (3.0 * mc.std_error).max(0.02 * wedge);
    let mut config = setup.config("jacobian");
    config.phi = Some(phi.to_string());
    config.point = Some(at.to_vec());
    config.seed = Some(seed);
    config.samples = Some(samples);
    let report = JacobianReport {
        config,
        wedge,
        minors,
        measure_mc: mc,
        differential_residual: est.residual,
        wedge_minors_gap,
        mc_gap,
        pass,
    };
    emit(&report, common.out.as_ref())?;
    Ok(if pass { 0 } else { 1 })
}

#[derive(Serialize)]
struct SphericalReport {
    config: ConfigEcho,
    factor: carnot::measure::SphericalFactor,
    pass: bool,
}

fn cmd_spherical(common: &GroupArgs, subspace: &str, seed: u64, samples: usize) -> CmdResult {
    let setup = Setup::resolve(common)?;
    let alg = &setup.group.algebra;
    let sub = usage(setup.group.subgroup(subspace))?.clone();
    let budget = SphericalBudget {
        search_samples: samples.max(256),
        final_budget: (samples * 50).max(100_000),
        ..SphericalBudget::default()
    };
    let factor = run(measure::spherical_factor(alg, &sub, &setup.distance, &budget, seed))?;
    let pass = factor.error_bound <= 0.05 * factor.beta.max(1e-12);
    let mut config = setup.config("spherical-factor");
    config.subspace = Some(subspace.to_string());
    config.seed = Some(seed);
    config.samples = Some(samples);
    emit(&SphericalReport { config, factor, pass }, common.out.as_ref())?;
    Ok(if pass { 0 } else { 1 })
}

#[derive(Serialize)]
struct BlowupCliReport {
    config: ConfigEcho,
    report: carnot::measure::BlowupReport,
    pass: bool,
}

#[allow(clippy::too_many_arguments)]
fn cmd_blowup(
    common: &GroupArgs,
    phi: &str,
    point: &[f64],
    seed: u64,
    samples: usize,
    centers: usize,
    t_schedule: Option<&[f64]>,
    csv: Option<PathBuf>,
) -> CmdResult {
    let setup = Setup::resolve(common)?;
    let couple = setup.couple()?;
    let alg = &setup.group.algebra;
    let map = usage(graph::map_by_name(alg, &couple, phi))?;
    let x = setup.point(point)?;
    let schedule = t_schedule.map(<[f64]>::to_vec).unwrap_or_else(measure::default_blowup_schedule);
    let report = run(measure::federer_density(
        alg,
        &map,
        &setup.distance,
        &x,
        &schedule,
        centers,
        samples,
        seed,
    ))?;
    if let Some(path) = &csv {
        run(std::fs::write(path, report::blowup_csv(&report)).map_err(carnot::Error::from))?;
    }
    let pass = report.relative_gap <= 0.10;
    let mut config = setup.config("blowup");
    config.phi = Some(phi.to_string());
    config.point = Some(point.to_vec());
    config.seed = Some(seed);
    config.samples = Some(samples);
    emit(&BlowupCliReport { config, report, pass }, common.out.as_ref())?;
    Ok(if pass { 0 } else { 1 })
}

#[derive(Serialize)]
struct AreaCliReport {
    config: ConfigEcho,
    report: carnot::measure::AreaReport,
    pass: bool,
}

fn cmd_area(
    common: &GroupArgs,
    phi: &str,
    region: Option<&str>,
    seed: u64,
    samples: usize,
) -> CmdResult {
    let setup = Setup::resolve(common)?;
    let couple = setup.couple()?;
    let alg = &setup.group.algebra;
    let map = usage(graph::map_by_name(alg, &couple, phi))?;
    let region_box = match region {
        Some(text) => parse_region(text, alg.dim())?,
        None => usage(CoordBox::new(vec![-0.5; alg.dim()], vec![0.5; alg.dim()]))?,
    };
    let budget = AreaBudget { n_mu: samples, ..AreaBudget::default() };
    let report = run(measure::area_check(alg, &map, &setup.distance, &region_box, &budget, seed))?;
    let pass = report.additivity_gap <= 3.0 * report.additivity_se + 0.02 * report.mu.value.abs().max(1.0)
        && report.federer.iter().all(|f| f.relative_gap <= 0.10);
    let mut config = setup.config("area");
    config.phi = Some(phi.to_string());
    config.region = region.map(str::to_string);
    config.seed = Some(seed);
    config.samples = Some(samples);
    emit(&AreaCliReport { config, report, pass }, common.out.as_ref())?;
    Ok(if pass { 0 } else { 1 })
}

fn parse_region(text: &str, dim: usize) -> Result<CoordBox, Failure> {
    let (lo_text, hi_text) = text
        .split_once(':')
        .ok_or_else(|| Failure::Usage("region must be lo1,lo2,…:hi1,hi2,…".into()))?;
    let parse_list = |part: &str| -> Result<Vec<f64>, Failure> {
        part.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Failure::Usage(format!("bad region number {v:?}: {e}")))
            })
            .collect()
    };
    let (lo, hi) = (parse_list(lo_text)?, parse_list(hi_text)?);
    if lo.len() != dim || hi.len() != dim {
        return Err(Failure::Usage(format!("region needs {dim} coordinates per side")));
    }
    usage(CoordBox::new(lo, hi))
}

#[derive(Serialize)]
struct LevelSetReport {
    config: ConfigEcho,
    pansu_matrix: Vec<Vec<f64>>,
    homomorphism_residual: f64,
    j_h: f64,
    j_v: f64,
    ratio: f64,
    implicit_value: Point,
    implicit_residual: f64,
    minors_of_implicit: f64,
    ratio_minors_gap: f64,
    pass: bool,
}

fn cmd_level_set(common: &GroupArgs, f_name: &str, at: &[f64]) -> CmdResult {
    let setup = Setup::resolve(common)?;
    let couple = setup.couple()?;
    let alg = &setup.group.algebra;
    let f = usage(measure::scalar_map_by_name(alg, f_name))?;
    let x = setup.point(at)?;
    // Shift so the level set through the base point is {g = 0}.
    let offset = run(f.eval(&x))?.coords()[0];
    let target = usage(carnot::algebra::GradedAlgebra::new(vec![1], &[]))?;
    let line = target.clone();
    let shifted = measure::SmoothMap::new(format!("{f_name}-shifted"), target, {
        let f = f.clone();
        move |p| {
            let v = f.eval(p)?;
            line.point(vec![v.coords()[0] - offset])
        }
    });
    let pd = run(measure::pansu_differential(alg, &f, &x, &graph::default_t_schedule()))?;
    let (j_h, j_v) = run(measure::jacobians_jh_jv(alg, &pd.as_matrix(), couple.v()))?;
    let ratio = run(measure::level_set_jacobian_ratio(alg, &f, couple.v(), couple.w(), &x))?;
    let w_bar = couple.project_w(alg, &x);
    let phi_value = run(measure::solve_implicit(alg, &shifted, &couple, &w_bar, 50))?;
    let graph_pt = alg.multiply(&w_bar, &phi_value);
    let implicit_residual = run(shifted.eval(&graph_pt))?.coords()[0].abs();
    // Intrinsic differential of the implicitly defined map, then minors.
    let implicit_map = IntrinsicMap::from_closure(couple.clone(), "implicit".into(), None, {
        let shifted = shifted.clone();
        let couple = couple.clone();
        move |alg, w| measure::solve_implicit(alg, &shifted, &couple, w, 50)
    });
    let est = run(graph::estimate_intrinsic_differential(
        alg,
        &implicit_map,
        &w_bar,
        &graph::default_t_schedule(),
    ))?;
    let minors_of_implicit = match est.map.matrix() {
        Some(m) => graph::jacobian_minors(m),
        None => run(graph::jacobian_wedge(&couple, &est.map))?,
    };
    let ratio_minors_gap = (ratio - minors_of_implicit).abs();
    let pass = implicit_residual <= 1e-10 && ratio_minors_gap <= 1e-3 * (1.0 + ratio);
    let mut config = setup.config("level-set");
    config.f = Some(f_name.to_string());
    config.point = Some(at.to_vec());
    let report = LevelSetReport {
        config,
        pansu_matrix: pd.matrix.clone(),
        homomorphism_residual: pd.homomorphism_residual,
        j_h,
        j_v,
        ratio,
        implicit_value: phi_value,
        implicit_residual,
        minors_of_implicit,
        ratio_minors_gap,
        pass,
    };
    emit(&report, common.out.as_ref())?;
    Ok(if pass { 0 } else { 1 })
}
