//! Batch front end: parse descriptors, dispatch the library computations,
//! and write JSON/CSV artifacts.  Exit codes: 0 success, 2 parse error,
//! 3 numeric failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use pluricap::error::Error as LibError;
use pluricap::extremal::{
    capacity, certify_lower, green_estimate, hull_membership, l_regularity_estimate,
    pluripolar_diagnostic, psi_estimate, sandwich_check, HullVerdict, TrendVerdict,
};
use pluricap::qhpoly::{bidegree_decompose, flow_map, series_decompose, TaylorJet};
use pluricap::schema::{
    estimate_to_json, lambda_from_json, poly_from_json, poly_to_json, region_csv,
    rho_sequence_to_json, series_from_json, series_to_json, set_from_json, sweep_csv,
    FormalSeriesJson, LambdaJson, PolynomialJson, SetJson,
};
use pluricap::series::{
    build_divergent_series, builtin_divergent_family, convergence_region, dirichlet_eval,
    omega_from_capacity, omega_hat, omega_prime, FormalSeries, RegionEstimate,
};
use pluricap::suspension::{
    ball_points, direction_set, forelli_obstruction, line_points,
    nonsparse_certificate_independent, sparseness_scan, sphere_points, CircleCoord, CircleFn,
    NonsparseVerdict, ScanVerdict, SetDescriptor, Suspension,
};
use pluricap::weights::{
    enumerate_rho, is_z_dependent, ConvergenceVerdict, DependenceVerdict, Exact, IrrationalBasis,
    Lambda, WeightedDegree,
};
use pluricap::{MixedPolynomial, SampledSet};

// ---------------------------------------------------------------------------
// Errors and exit codes.
// ---------------------------------------------------------------------------

enum CliError {
    /// Bad flags, unreadable files, malformed JSON: exit 2.
    Parse(String),
    /// The computation itself failed (degenerate program etc.): exit 3.
    Numeric(String),
}

type CliResult<T> = std::result::Result<T, CliError>;

impl From<LibError> for CliError {
    fn from(e: LibError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

fn parse_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Parse(e.to_string())
}

// ---------------------------------------------------------------------------
// CLI surface.
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(name = "pluricap", version, about = "Suspension and capacity toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct IoArgs {
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for any randomized sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the achievable weighted degrees up to a cap.
    Rho {
        #[arg(long)]
        lambda: PathBuf,
        /// Cap as an integer or num/den rational.
        #[arg(long)]
        cap: String,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Z-linear dependence of the weight vector.
    Deps {
        #[arg(long)]
        lambda: PathBuf,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Bidegree decomposition of a mixed polynomial (plus series blocks
    /// when it is holomorphic).
    Decompose {
        #[arg(long)]
        lambda: PathBuf,
        #[arg(long)]
        poly: PathBuf,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Apply the flow map to a point.
    Flow {
        #[arg(long)]
        lambda: PathBuf,
        /// Point as "re,im;re,im;...".
        #[arg(long)]
        point: String,
        /// Flow time as "re,im".
        #[arg(long)]
        t: String,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Direction set of a sampled generator under both log branches.
    DirectionSet {
        #[arg(long)]
        lambda: PathBuf,
        #[arg(long)]
        set: String,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Scan bidegrees up to a cap for vanishing witnesses.
    Sparseness {
        #[arg(long)]
        lambda: PathBuf,
        #[arg(long)]
        set: String,
        #[arg(long)]
        cap: String,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Holomorphic-type obstruction of a Taylor jet on a sampled set.
    Obstruction {
        #[arg(long)]
        lambda: PathBuf,
        #[arg(long)]
        set: String,
        /// Jet file (polynomial schema).
        #[arg(long)]
        jet: PathBuf,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Extremal-function estimate at a point.
    Psi {
        #[arg(long)]
        lambda: PathBuf,
        #[arg(long)]
        set: String,
        #[arg(long)]
        cap: String,
        #[arg(long)]
        point: String,
        /// sample | certified
        #[arg(long, default_value = "sample")]
        mode: String,
        /// Mesh fineness for certified mode.
        #[arg(long, default_value_t = 0.05)]
        mesh: f64,
        /// Radius bound for certified mode.
        #[arg(long, default_value_t = 1.0)]
        radius_bound: f64,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Pluricomplex Green function estimate at a point.
    Green {
        #[arg(long)]
        set: String,
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 4)]
        degree_cap: u32,
        #[arg(long, default_value = "sample")]
        mode: String,
        #[arg(long, default_value_t = 0.05)]
        mesh: f64,
        #[arg(long, default_value_t = 1.0)]
        radius_bound: f64,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Projective-capacity estimate over a sphere grid.
    Capacity {
        #[arg(long)]
        lambda: PathBuf,
        #[arg(long)]
        set: String,
        #[arg(long)]
        grid: String,
        #[arg(long)]
        cap: String,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Weighted-circular hull membership of a point.
    Hull {
        #[arg(long)]
        lambda: PathBuf,
        #[arg(long)]
        set: String,
        #[arg(long)]
        point: String,
        #[arg(long)]
        cap: String,
        #[command(flatten)]
        io: IoArgs,
    },
    /// One-sided sandwich checks between Psi and Green estimates.
    Sandwich {
        #[arg(long)]
        lambda: PathBuf,
        #[arg(long)]
        set: String,
        #[arg(long)]
        grid: String,
        #[arg(long)]
        cap: String,
        #[arg(long, default_value_t = 3)]
        degree_cap: u32,
        #[arg(long, default_value_t = 0.05)]
        slack: f64,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Local-regularity diagnostic at a probe center.
    Lreg {
        #[arg(long)]
        set: String,
        #[arg(long)]
        point: String,
        /// Radii as comma-separated floats.
        #[arg(long, default_value = "0.5,1.0")]
        radii: String,
        #[arg(long, default_value_t = 4)]
        degree_cap: u32,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Convergence-region estimators.
    Region {
        /// series | omega-prime | omega-hat | ball
        #[arg(long)]
        kind: String,
        #[arg(long)]
        lambda: Option<PathBuf>,
        /// Formal-series file (kind = series).
        #[arg(long)]
        series: Option<PathBuf>,
        /// Generator set F / base region.
        #[arg(long)]
        set: Option<String>,
        /// Extra constraint set (kind = omega-hat).
        #[arg(long)]
        extra: Option<String>,
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        cap: Option<String>,
        #[arg(long, default_value_t = 3)]
        degree_cap: u32,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Explicit divergent-series construction.
    Divergent {
        /// Size of the built-in (z1 - z2)^m family.
        #[arg(long, default_value_t = 25)]
        count: usize,
        /// Optional user family (formal-series schema; blocks are p_m).
        #[arg(long)]
        family: Option<PathBuf>,
        /// Base point for a user family.
        #[arg(long)]
        a: Option<String>,
        /// K_m sample set for a user family.
        #[arg(long)]
        k_set: Option<String>,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Reproduce a worked example: ex3.5, ex5.6, ex7.1, ex7.2, ex7.3.
    Examples {
        id: String,
        #[command(flatten)]
        io: IoArgs,
    },
}

// ---------------------------------------------------------------------------
// Input parsing.
// ---------------------------------------------------------------------------

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn load_lambda(path: &Path) -> CliResult<Lambda> {
    let j: LambdaJson = read_json(path)?;
    lambda_from_json(&j).map_err(|e| CliError::Parse(e.to_string()))
}

fn load_poly(path: &Path) -> CliResult<MixedPolynomial> {
    let j: PolynomialJson = read_json(path)?;
    poly_from_json(&j).map_err(|e| CliError::Parse(e.to_string()))
}

fn parse_complex(s: &str) -> CliResult<Complex64> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Parse(format!("expected re,im: {s}")));
    }
    let re: f64 = parts[0].trim().parse().map_err(parse_err)?;
    let im: f64 = parts[1].trim().parse().map_err(parse_err)?;
    Ok(Complex64::new(re, im))
}

fn parse_point(s: &str) -> CliResult<Vec<Complex64>> {
    s.split(';').map(parse_complex).collect()
}

fn parse_cap(lambda: &Lambda, s: &str) -> CliResult<WeightedDegree> {
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (
            a.trim().parse::<i64>().map_err(parse_err)?,
            b.trim().parse::<i64>().map_err(parse_err)?,
        ),
        None => (s.trim().parse::<i64>().map_err(parse_err)?, 1),
    };
    if den == 0 {
        return Err(CliError::Parse("zero denominator in cap".into()));
    }
    Ok(lambda.degree_from_rational(num, den))
}

/// `builtin:sphere:<N>` etc. or a set-schema JSON file.
fn load_set(spec: &str, seed: u64) -> CliResult<SampledSet> {
    if let Some(rest) = spec.strip_prefix("builtin:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 2 {
            return Err(CliError::Parse(format!(
                "builtin grid must be kind:<N>: {spec}"
            )));
        }
        let count: usize = parts[1].parse().map_err(parse_err)?;
        let points = match parts[0] {
            "sphere" => sphere_points(2, count),
            "ball" => ball_points(2, count),
            "line" => line_points(count),
            other => {
                return Err(CliError::Parse(format!("unknown builtin grid {other}")))
            }
        };
        let n = points.first().map(|p| p.len()).unwrap_or(0);
        return Ok(SampledSet::from_points(n, points)?);
    }
    let j: SetJson = read_json(Path::new(spec))?;
    set_from_json(&j, 256, seed).map_err(CliError::from)
}

fn parse_radii(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|r| r.trim().parse::<f64>().map_err(parse_err))
        .collect()
}

// ---------------------------------------------------------------------------
// Output helpers.
// ---------------------------------------------------------------------------

fn write_artifact(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(parse_err)?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(parse_err)?;
    Ok(path)
}

fn write_json(dir: &Path, name: &str, value: &Value) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(parse_err)?;
    text.push('\n');
    write_artifact(dir, name, &text)
}

fn point_json(p: &[Complex64]) -> Value {
    json!(p.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
}

fn points_json(ps: &[Vec<Complex64>]) -> Value {
    json!(ps.iter().map(|p| point_json(p)).collect::<Vec<_>>())
}

fn degree_json(d: &WeightedDegree) -> Value {
    json!({
        "approx": d.approx,
        "coords": d.exact.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
    })
}

fn region_artifacts(
    dir: &Path,
    stem: &str,
    est: &RegionEstimate,
    extra: Value,
) -> CliResult<()> {
    let mut obj = json!({
        "values": est.values,
        "inside": est.inside,
        "ball_radius": est.ball_radius,
        "truncation": est.truncation,
        "grid": points_json(&est.grid),
    });
    if let Value::Object(map) = &mut obj {
        if let Value::Object(more) = extra {
            map.extend(more);
        }
    }
    write_json(dir, &format!("{stem}.json"), &obj)?;
    write_artifact(dir, &format!("{stem}.csv"), &region_csv(est))?;
    println!(
        "{stem}: {} of {} grid points inside",
        est.inside.iter().filter(|&&b| b).count(),
        est.grid.len()
    );
    Ok(())
}

fn verdict_str(v: &ConvergenceVerdict) -> &'static str {
    match v {
        ConvergenceVerdict::Converges(_) => "converges",
        ConvergenceVerdict::Diverges(_) => "diverges",
        ConvergenceVerdict::Inconclusive(_) => "inconclusive",
    }
}

// ---------------------------------------------------------------------------
// Subcommand drivers.
// ---------------------------------------------------------------------------

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Rho { lambda, cap, io } => {
            let l = load_lambda(&lambda)?;
            let cap = parse_cap(&l, &cap)?;
            let seq = enumerate_rho(&l, &cap)?;
            let entries = rho_sequence_to_json(&seq)?;
            let path = write_json(&io.out, "rho.json", &serde_json::to_value(&entries).map_err(parse_err)?)?;
            println!("rho: {} levels up to {} -> {}", entries.len(), cap.approx, path.display());
        }
        Command::Deps { lambda, io } => {
            let l = load_lambda(&lambda)?;
            let value = match is_z_dependent(&l) {
                DependenceVerdict::Independent => json!({"verdict": "independent"}),
                DependenceVerdict::Dependent(rel) => json!({
                    "verdict": "dependent",
                    "relation": {
                        "permutation": rel.permutation,
                        "alpha": rel.alpha,
                        "beta": rel.beta,
                        "gamma_approx": rel.gamma_approx,
                    },
                }),
            };
            write_json(&io.out, "deps.json", &value)?;
            println!("deps: {}", value["verdict"].as_str().unwrap());
        }
        Command::Decompose { lambda, poly, io } => {
            let l = load_lambda(&lambda)?;
            let p = load_poly(&poly)?;
            let components = bidegree_decompose(&p, &l)?;
            let mut value = json!({
                "components": components.iter().map(|c| json!({
                    "d1": degree_json(&c.d1),
                    "d2": degree_json(&c.d2),
                    "poly": poly_to_json(&c.poly),
                })).collect::<Vec<_>>(),
            });
            if p.is_holomorphic() {
                let blocks = series_decompose(&p, &l)?;
                let series = FormalSeries::new(l.clone(), blocks)?;
                value["series"] = serde_json::to_value(series_to_json(&series)?).map_err(parse_err)?;
            }
            write_json(&io.out, "decompose.json", &value)?;
            println!("decompose: {} components", components.len());
        }
        Command::Flow { lambda, point, t, io } => {
            let l = load_lambda(&lambda)?;
            let z = parse_point(&point)?;
            let t = parse_complex(&t)?;
            if z.len() != l.n {
                return Err(CliError::Parse(format!(
                    "point has {} coordinates, lambda has {}",
                    z.len(),
                    l.n
                )));
            }
            let w = flow_map(&l, &z, t);
            let value = json!({
                "input": point_json(&z),
                "t": [t.re, t.im],
                "output": point_json(&w),
            });
            write_json(&io.out, "flow.json", &value)?;
            println!("flow: wrote flow.json");
        }
        Command::DirectionSet { lambda, set, io } => {
            let l = load_lambda(&lambda)?;
            let f = load_set(&set, io.seed)?;
            let ds = direction_set(&f, &l)?;
            let value = json!({
                "branch1": points_json(&ds.branch1),
                "branch2": points_json(&ds.branch2),
                "provenance": ds.provenance,
            });
            write_json(&io.out, "direction_set.json", &value)?;
            println!(
                "direction-set: {} + {} points",
                ds.branch1.len(),
                ds.branch2.len()
            );
        }
        Command::Sparseness { lambda, set, cap, io } => {
            let l = load_lambda(&lambda)?;
            let f = load_set(&set, io.seed)?;
            let cap = parse_cap(&l, &cap)?;
            let report = sparseness_scan(&f, &l, &cap)?;
            let value = json!({
                "verdict": match report.verdict {
                    ScanVerdict::SparseCandidate => "sparse_candidate",
                    ScanVerdict::NoObstructionUpToCap => "no_obstruction_up_to_cap",
                },
                "records": report.records.iter().map(|r| json!({
                    "d1": degree_json(&r.d1),
                    "d2": degree_json(&r.d2),
                    "basis_size": r.basis_size,
                    "nullspace_dim": r.nullspace_dim,
                    "witness": r.witness.as_ref().map(poly_to_json),
                    "residual": r.residual,
                    "reverified_residual": r.reverified_residual,
                })).collect::<Vec<_>>(),
            });
            write_json(&io.out, "sparseness.json", &value)?;
            println!("sparseness: {}", value["verdict"].as_str().unwrap());
        }
        Command::Obstruction { lambda, set, jet, io } => {
            let l = load_lambda(&lambda)?;
            let f = load_set(&set, io.seed)?;
            let jet = TaylorJet(load_poly(&jet)?);
            let report = forelli_obstruction(&jet, &f, &l)?;
            let value = json!({
                "formal_holomorphic_type": report.formal_holomorphic_type,
                "blocks": report.blocks.iter().map(|b| json!({
                    "mu": degree_json(&b.mu),
                    "nu": degree_json(&b.nu),
                    "block": poly_to_json(&b.block),
                    "max_residual_on_f": b.max_residual_on_f,
                    "vanishes_on_f_but_not_identically": b.vanishes_on_f_but_not_identically,
                })).collect::<Vec<_>>(),
            });
            write_json(&io.out, "obstruction.json", &value)?;
            println!(
                "obstruction: formal holomorphic type = {}",
                report.formal_holomorphic_type
            );
        }
        Command::Psi {
            lambda,
            set,
            cap,
            point,
            mode,
            mesh,
            radius_bound,
            io,
        } => {
            let l = load_lambda(&lambda)?;
            let e = load_set(&set, io.seed)?;
            let cap = parse_cap(&l, &cap)?;
            let z0 = parse_point(&point)?;
            let mut est = psi_estimate(&e, &l, &z0, &cap)?;
            match mode.as_str() {
                "sample" => {}
                "certified" => certify_lower(&mut est, mesh, radius_bound),
                other => return Err(CliError::Parse(format!("unknown mode {other}"))),
            }
            let value = serde_json::to_value(estimate_to_json(&est)).map_err(parse_err)?;
            write_json(&io.out, "psi.json", &value)?;
            println!("psi: {:.17e} at level {}", est.value, est.level);
        }
        Command::Green {
            set,
            point,
            degree_cap,
            mode,
            mesh,
            radius_bound,
            io,
        } => {
            let e = load_set(&set, io.seed)?;
            let z0 = parse_point(&point)?;
            let mut est = green_estimate(&e, &z0, degree_cap)?;
            match mode.as_str() {
                "sample" => {}
                "certified" => certify_lower(&mut est, mesh, radius_bound),
                other => return Err(CliError::Parse(format!("unknown mode {other}"))),
            }
            let value = serde_json::to_value(estimate_to_json(&est)).map_err(parse_err)?;
            write_json(&io.out, "green.json", &value)?;
            println!("green: {:.17e} at degree {}", est.value, est.level);
        }
        Command::Capacity { lambda, set, grid, cap, io } => {
            let l = load_lambda(&lambda)?;
            let e = load_set(&set, io.seed)?;
            let g = load_set(&grid, io.seed)?;
            let cap = parse_cap(&l, &cap)?;
            let est = capacity(&e, &l, &g, &cap)?;
            let value = json!({
                "rho_lambda": est.rho_lambda,
                "psi_sup": est.psi_sup,
                "grid_size": est.grid_size,
                "argmax_index": est.argmax_index,
                "argmax_point": point_json(&est.argmax_point),
                "rho_cap": est.rho_cap,
            });
            write_json(&io.out, "capacity.json", &value)?;
            println!("capacity: rho_lambda = {:.17e}", est.rho_lambda);
        }
        Command::Hull { lambda, set, point, cap, io } => {
            let l = load_lambda(&lambda)?;
            let k = load_set(&set, io.seed)?;
            let z0 = parse_point(&point)?;
            let cap = parse_cap(&l, &cap)?;
            let report = hull_membership(&k, &l, &z0, &cap)?;
            let verdict = match report.verdict {
                HullVerdict::Inside => "inside",
                HullVerdict::Outside => "outside",
            };
            let value = json!({
                "verdict": verdict,
                "psi_hat": report.psi_hat,
                "witness": report.witness.as_ref().map(poly_to_json),
                "witness_ratio": report.witness_ratio,
                "circular_on_samples": report.circular_on_samples,
            });
            write_json(&io.out, "hull.json", &value)?;
            println!("hull: {verdict} (psi_hat = {:.17e})", report.psi_hat);
        }
        Command::Sandwich {
            lambda,
            set,
            grid,
            cap,
            degree_cap,
            slack,
            io,
        } => {
            let l = load_lambda(&lambda)?;
            let e = load_set(&set, io.seed)?;
            let g = load_set(&grid, io.seed)?;
            let cap = parse_cap(&l, &cap)?;
            let report = sandwich_check(&e, &l, &g.points, &cap, degree_cap, slack)?;
            let value = json!({
                "violations": report.violations,
                "slack": report.slack,
                "rows": report.rows.iter().map(|r| json!({
                    "point": point_json(&r.point),
                    "psi_hat": r.psi_hat,
                    "phi_hat": r.phi_hat,
                    "lower_ok": r.lower_ok,
                    "upper_ok": r.upper_ok,
                })).collect::<Vec<_>>(),
            });
            write_json(&io.out, "sandwich.json", &value)?;
            let rows: Vec<(Vec<Complex64>, Vec<f64>)> = report
                .rows
                .iter()
                .map(|r| (r.point.clone(), vec![r.psi_hat, r.phi_hat]))
                .collect();
            write_artifact(&io.out, "sandwich.csv", &sweep_csv(&["psi_hat", "phi_hat"], &rows))?;
            println!("sandwich: {} violations over {} points", report.violations, report.rows.len());
        }
        Command::Lreg { set, point, radii, degree_cap, io } => {
            let e = load_set(&set, io.seed)?;
            let a = parse_point(&point)?;
            let radii = parse_radii(&radii)?;
            let report = l_regularity_estimate(&e, &a, &radii, degree_cap)?;
            let sample_json = |s: &pluricap::extremal::LRegSample| {
                json!({
                    "radius": s.radius,
                    "v": s.v,
                    "constraints_used": s.constraints_used,
                    "degenerate": s.degenerate,
                })
            };
            let value = json!({
                "verdict": report.verdict,
                "samples": report.samples.iter().map(sample_json).collect::<Vec<_>>(),
                "half_cap_samples": report.half_cap_samples.iter().map(sample_json).collect::<Vec<_>>(),
            });
            write_json(&io.out, "lreg.json", &value)?;
            println!("lreg: {}", report.verdict);
        }
        Command::Region {
            kind,
            lambda,
            series,
            set,
            extra,
            grid,
            cap,
            degree_cap,
            io,
        } => {
            let need = |opt: Option<&str>, what: &str| -> CliResult<String> {
                opt.map(str::to_string)
                    .ok_or_else(|| CliError::Parse(format!("region --kind {kind} needs --{what}")))
            };
            match kind.as_str() {
                "series" => {
                    let series_path = series
                        .ok_or_else(|| CliError::Parse("region --kind series needs --series".into()))?;
                    let sj: FormalSeriesJson = read_json(&series_path)?;
                    let s = series_from_json(&sj).map_err(|e| CliError::Parse(e.to_string()))?;
                    let g = load_set(&need(grid.as_deref(), "grid")?, io.seed)?;
                    let est = convergence_region(&s, &g.points)?;
                    region_artifacts(&io.out, "region", &est, json!({"kind": "series"}))?;
                }
                "omega-prime" => {
                    let l = load_lambda(&lambda.ok_or_else(|| {
                        CliError::Parse("region --kind omega-prime needs --lambda".into())
                    })?)?;
                    let f = load_set(&need(set.as_deref(), "set")?, io.seed)?;
                    let g = load_set(&need(grid.as_deref(), "grid")?, io.seed)?;
                    let est = omega_prime(&f, &l, &g.points, degree_cap)?;
                    region_artifacts(&io.out, "region", &est, json!({"kind": "omega-prime"}))?;
                }
                "omega-hat" => {
                    let l = load_lambda(&lambda.ok_or_else(|| {
                        CliError::Parse("region --kind omega-hat needs --lambda".into())
                    })?)?;
                    let base = load_set(&need(set.as_deref(), "set")?, io.seed)?;
                    let extra_set = match extra {
                        Some(spec) => load_set(&spec, io.seed)?,
                        None => SampledSet::from_points(l.n, vec![])?,
                    };
                    let g = load_set(&need(grid.as_deref(), "grid")?, io.seed)?;
                    let cap = parse_cap(&l, &need(cap.as_deref(), "cap")?)?;
                    let est = omega_hat(&base, &extra_set, &l, &g.points, &cap)?;
                    region_artifacts(&io.out, "region", &est, json!({"kind": "omega-hat"}))?;
                }
                "ball" => {
                    let l = load_lambda(&lambda.ok_or_else(|| {
                        CliError::Parse("region --kind ball needs --lambda".into())
                    })?)?;
                    let f = load_set(&need(set.as_deref(), "set")?, io.seed)?;
                    let cap = parse_cap(&l, &need(cap.as_deref(), "cap")?)?;
                    let radius = omega_from_capacity(&f, &l, &cap)?;
                    write_json(&io.out, "region.json", &json!({"kind": "ball", "ball_radius": radius}))?;
                    println!("region: ball radius {radius:.17e}");
                }
                other => return Err(CliError::Parse(format!("unknown region kind {other}"))),
            }
        }
        Command::Divergent { count, family, a, k_set, io } => {
            let (fam, base, ks) = match family {
                Some(path) => {
                    let sj: FormalSeriesJson = read_json(&path)?;
                    let s = series_from_json(&sj).map_err(|e| CliError::Parse(e.to_string()))?;
                    let base = parse_point(&a.ok_or_else(|| {
                        CliError::Parse("--family needs --a".into())
                    })?)?;
                    let ks = load_set(
                        &k_set.ok_or_else(|| CliError::Parse("--family needs --k-set".into()))?,
                        io.seed,
                    )?;
                    (
                        s.blocks.into_iter().map(|(_, q)| q).collect::<Vec<_>>(),
                        base,
                        vec![ks],
                    )
                }
                None => builtin_divergent_family(count)?,
            };
            let built = build_divergent_series(&fam, &base, &ks)?;
            let b1 = built.divergence_points[0].clone();
            let (partial, verdict) = dirichlet_eval(&built.series, &b1, Complex64::new(0.01, 0.0))?;
            let blowup = partial.iter().position(|p| p.norm() > 1e6);
            let value = json!({
                "series": serde_json::to_value(series_to_json(&built.series)?).map_err(parse_err)?,
                "divergence_points": points_json(&built.divergence_points),
                "selected": built.selected,
                "partial_sum_blowup_index": blowup,
                "verdict_at_b1": verdict_str(&verdict),
            });
            write_json(&io.out, "divergent.json", &value)?;
            println!(
                "divergent: {} blocks, partial sums exceed 1e6 at block {:?}, {} at b_1",
                built.series.len(),
                blowup,
                verdict_str(&verdict)
            );
        }
        Command::Examples { id, io } => run_example(&id, &io)?,
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Worked examples with golden verdict lines.
// ---------------------------------------------------------------------------

fn circle_pair(n_freq: i64) -> SetDescriptor {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    SetDescriptor::CircleFamily {
        coords: vec![
            CircleCoord {
                scale_re: s,
                scale_im: 0.0,
                f: CircleFn::Exp { freq: 1 },
            },
            CircleCoord {
                scale_re: s,
                scale_im: 0.0,
                f: CircleFn::Exp { freq: n_freq },
            },
        ],
    }
}

fn run_example(id: &str, io: &IoArgs) -> CliResult<()> {
    match id {
        "ex3.5" => example_3_5(io),
        "ex5.6" => example_5_6(io),
        "ex7.1" => example_7_1(io),
        "ex7.2" => example_7_2(io),
        "ex7.3" => example_7_3(io),
        other => Err(CliError::Parse(format!("unknown example id {other}"))),
    }
}

/// Real 4-dimensional slice of S^5: integer second weight gives a sparse
/// suspension with witness z1^2 zbar2 - zbar1^2 z2; an irrational second
/// weight certifies a nonsparse leaf.
fn example_3_5(io: &IoArgs) -> CliResult<()> {
    let f = SampledSet::sample(
        &SetDescriptor::RealSlice {
            n: 3,
            real_coords: vec![0, 1],
        },
        200,
        io.seed,
    )?;
    let l_int = Lambda::integer(&[1, 2, 1]).map_err(CliError::from)?;
    let cap = l_int.degree_from_rational(4, 1);
    let report = sparseness_scan(&f, &l_int, &cap)?;
    let witness = report.best_witness().ok_or_else(|| {
        CliError::Numeric("expected a sparse witness for integer lambda_2".into())
    })?;
    println!(
        "ex3.5 (lambda_2 = 2): sparse candidate at bidegree ({}, {}), residual {:.3e}",
        witness.d1.approx,
        witness.d2.approx,
        witness.residual.unwrap_or(f64::NAN)
    );

    // Replace the integer middle weight by sqrt(2); a second irrational
    // weight sqrt(3) keeps the full vector Z-independent so the pointwise
    // nonsparse certificate applies.
    let basis = vec![
        IrrationalBasis {
            name: "sqrt2".into(),
            approx: std::f64::consts::SQRT_2,
        },
        IrrationalBasis {
            name: "sqrt3".into(),
            approx: 3.0f64.sqrt(),
        },
    ];
    let one = Exact::from_rational(1, 1, 2);
    let mut tau2 = Exact::zero(2);
    tau2.coords[1] = num_rational::BigRational::from(num_bigint::BigInt::from(1));
    let mut tau3 = Exact::zero(2);
    tau3.coords[2] = num_rational::BigRational::from(num_bigint::BigInt::from(1));
    let l_irr = Lambda::new(vec![one, tau2, tau3], basis).map_err(CliError::from)?;
    let cap_irr = l_irr.degree_from_rational(6, 1);
    let scan_irr = sparseness_scan(&f, &l_irr, &cap_irr)?;
    let w = [
        Complex64::new(0.6, 0.1),
        Complex64::new(0.5, -0.3),
        Complex64::new(0.4, 0.2),
    ];
    let cert = nonsparse_certificate_independent(&l_irr, &w)?;
    let irr_verdict = match (&scan_irr.verdict, &cert) {
        (ScanVerdict::NoObstructionUpToCap, NonsparseVerdict::CertifiedNonsparse) => {
            "no obstruction up to cap; certified nonsparse leaf"
        }
        _ => "unexpected verdict",
    };
    println!("ex3.5 (lambda_2 irrational): {irr_verdict}");
    let value = json!({
        "integer_weight": {
            "witness": witness.witness.as_ref().map(poly_to_json),
            "d1": degree_json(&witness.d1),
            "d2": degree_json(&witness.d2),
            "residual": witness.residual,
        },
        "irrational_weight": {"verdict": irr_verdict},
    });
    write_json(&io.out, "ex3.5.json", &value)?;
    Ok(())
}

/// Circle families F_n under weights (1, m): the direction set is a single
/// point iff m = n, and a circle of radius sqrt(2)^(m-1) otherwise; a
/// single-point direction set signals a nonnormal suspension.
fn example_5_6(io: &IoArgs) -> CliResult<()> {
    let mut rows = Vec::new();
    for m in 1..=3i64 {
        for n in 1..=3i64 {
            let l = Lambda::integer(&[1, m]).map_err(CliError::from)?;
            let f = SampledSet::sample(&circle_pair(n), 64, io.seed)?;
            let ds = direction_set(&f, &l)?;
            let pts: Vec<Complex64> = ds
                .branch1
                .iter()
                .chain(ds.branch2.iter())
                .map(|p| p[0])
                .collect();
            let radius = 2.0f64.sqrt().powi((m - 1) as i32);
            let spread = pts
                .iter()
                .map(|p| (p - pts[0]).norm())
                .fold(0.0f64, f64::max);
            let single = spread < 1e-9;
            if single != (m == n) {
                return Err(CliError::Numeric(format!(
                    "direction-set shape mismatch at m={m} n={n}: spread {spread:e}"
                )));
            }
            let shape = if single { "single point" } else { "circle" };
            let normal = if m == n { "nonnormal signature" } else { "normal signature" };
            println!("ex5.6 m={m} n={n}: direction set: {shape}; suspension: {normal}");
            rows.push(json!({
                "m": m,
                "n": n,
                "direction_set": shape,
                "suspension": normal,
                "radius": radius,
            }));
        }
    }
    write_json(&io.out, "ex5.6.json", &json!({"cases": rows}))?;
    Ok(())
}

/// Rational points of an open sphere patch: a countable generator is
/// polynomially thin, so the capacity trend collapses and the suspension
/// is nonnormal even though its closure generates a Forelli suspension.
fn example_7_1(io: &IoArgs) -> CliResult<()> {
    // Rational points on S^3 from Pythagorean pairs.
    let rats = [(3.0, 4.0, 5.0), (5.0, 12.0, 13.0), (8.0, 15.0, 17.0), (20.0, 21.0, 29.0)];
    let pts: Vec<Vec<Complex64>> = rats
        .iter()
        .map(|&(a, b, c)| vec![Complex64::new(a / c, 0.0), Complex64::new(b / c, 0.0)])
        .collect();
    let f = SampledSet::from_points(2, pts)?;
    let l = Lambda::integer(&[1, 1]).map_err(CliError::from)?;
    let susp = Suspension::new(l.clone(), f)?;
    let leaves = susp.leaf_set();
    let caps: Vec<WeightedDegree> = [2, 3, 4]
        .iter()
        .map(|&v| l.degree_from_rational(v, 1))
        .collect();
    let trend = pluripolar_diagnostic(&leaves, &l, &caps)?;
    if trend.verdict != TrendVerdict::PluripolarSignature {
        return Err(CliError::Numeric(format!(
            "expected pluripolar trend for a countable generator, got {:?}",
            trend.verdict
        )));
    }
    println!("ex7.1: nonnormal (countable F); dense formal Forelli suspension");
    write_json(
        &io.out,
        "ex7.1.json",
        &json!({
            "verdict": "nonnormal (countable F)",
            "trend": trend.entries,
        }),
    )?;
    Ok(())
}

/// Countable union of circle slices accumulating at v = (1,0): nonnormal,
/// and no vanishing obstruction appears up to the cap, the nonsparse-leaf
/// signature of a nowhere dense formal Forelli suspension.
fn example_7_2(io: &IoArgs) -> CliResult<()> {
    let mut pts = Vec::new();
    for k in 1..=8 {
        let r = std::f64::consts::FRAC_PI_4 / k as f64;
        for ell in 1..=8 {
            let s = std::f64::consts::FRAC_PI_4
                + std::f64::consts::FRAC_PI_4 * (1.0 - 1.0 / ell as f64);
            pts.push(vec![
                Complex64::new(r.cos(), 0.0),
                Complex64::from_polar(r.sin(), s),
            ]);
        }
    }
    let f = SampledSet::from_points(2, pts)?;
    let l = Lambda::rational(&[(1, 1), (3, 2)]).map_err(CliError::from)?;
    let cap = l.degree_from_rational(3, 1);
    let scan = sparseness_scan(&f, &l, &cap)?;
    let verdict = match scan.verdict {
        ScanVerdict::NoObstructionUpToCap => "no obstruction up to cap",
        ScanVerdict::SparseCandidate => "sparse candidate found",
    };
    println!("ex7.2: nonnormal (countable F); {verdict} (nonsparse-leaf signature)");
    write_json(
        &io.out,
        "ex7.2.json",
        &json!({
            "verdict": "nonnormal (countable F)",
            "scan": verdict,
            "records": scan.records.len(),
        }),
    )?;
    Ok(())
}

/// Rotated real circles G_ell: the first-branch direction set is a real
/// line, which is L-regular everywhere, so every point generates a regular
/// leaf and the suspension is normal.
fn example_7_3(io: &IoArgs) -> CliResult<()> {
    let s1 = std::f64::consts::FRAC_PI_4;
    let pts: Vec<Vec<Complex64>> = (0..64)
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / 64.0;
            vec![
                Complex64::new(th.cos(), 0.0),
                Complex64::from_polar(th.sin(), s1),
            ]
        })
        .collect();
    let g1 = SampledSet::from_points(2, pts)?;
    let l = Lambda::integer(&[1, 1]).map_err(CliError::from)?;
    let ds = direction_set(&g1, &l)?;
    // Rotate the first-branch image back to the real axis and probe local
    // regularity at its center.
    let rot = Complex64::from_polar(1.0, -s1);
    let line: Vec<Vec<Complex64>> = ds
        .branch1
        .iter()
        .map(|p| vec![p[0] * rot])
        .collect();
    let line_set = SampledSet::from_points(1, line)?;
    let report = l_regularity_estimate(
        &line_set,
        &[Complex64::new(0.0, 0.0)],
        &[0.5, 1.0],
        4,
    )?;
    if !report.verdict.contains("L-regularity") {
        return Err(CliError::Numeric(format!(
            "expected local L-regularity on the direction line, got: {}",
            report.verdict
        )));
    }
    println!("ex7.3: direction set L-regular; regular leaves; normal suspension (Forelli signature)");
    write_json(
        &io.out,
        "ex7.3.json",
        &json!({
            "verdict": "normal suspension (Forelli signature)",
            "lreg": report.verdict,
        }),
    )?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Parse(msg)) => {
            eprintln!("parse error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}
