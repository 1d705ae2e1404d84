use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use conebal::curve::{self, CurveSpec, PeriodicVectorCurve};
use conebal::pipeline::{self, Analysis};
use conebal::verify::{Suite, VerifyOptions};
use conebal::{analysis, export, wilczynski, RunConfig, Warning};
use nalgebra::Matrix3;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "conebal", version, about = "Projective invariants and balanced parametrizations of convex cones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficients, frame and monodromy class of a cone.
    Analyze(RunArgs),
    /// Balanced parametrization and sextactic points.
    Balance {
        #[command(flatten)]
        run: RunArgs,
        /// Run the pipeline again on the balanced curve and report the deviation.
        #[arg(long)]
        recheck: bool,
    },
    /// Dual cone and the inequality along the pairing.
    Dual {
        #[command(flatten)]
        run: RunArgs,
        /// Base nodes for the inequality check, as fractions of the period.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75])]
        base: Vec<f64>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Directory for `verify.json`; nothing is written when omitted.
        #[arg(long)]
        outdir: Option<PathBuf>,
        /// Starting grid size; under-resolved cones are refined from here.
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[command(flatten)]
        tol: ToleranceArgs,
        /// Replace every acceptance bound by this value.
        #[arg(long)]
        bound: Option<f64>,
        /// JSON file with a row-major 3x3 matrix used instead of the canonical pairing.
        #[arg(long)]
        pairing: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Curve spec (JSON).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "out")]
    outdir: PathBuf,
    /// Grid size, overriding the spec's `N`.
    #[arg(long)]
    grid: Option<usize>,
    #[command(flatten)]
    tol: ToleranceArgs,
}

#[derive(Args)]
struct ToleranceArgs {
    /// Band around trace ±2 for the parabolic and ellipsoidal cases.
    #[arg(long)]
    tol_class: Option<f64>,
    /// Flatness threshold for the cubic form.
    #[arg(long)]
    tol_beta: Option<f64>,
    /// Relative tolerance of the ODE integrator.
    #[arg(long)]
    tol_ode: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ToleranceArgs {
    fn config(&self, grid: Option<usize>) -> Result<RunConfig> {
        let mut config = RunConfig { grid, ..RunConfig::default() };
        let tol = &mut config.tolerances;
        for (name, value, slot) in [
            ("--tol-class", self.tol_class, &mut tol.class_trace),
            ("--tol-beta", self.tol_beta, &mut tol.beta_flat),
            ("--tol-ode", self.tol_ode, &mut tol.ode_rtol),
        ] {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    bail!("{name} must be a positive number, got {v}");
                }
                *slot = v;
            }
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

/// What a successful command produced.
struct Outcome {
    warnings: Vec<Warning>,
    passed: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outdir = match &cli.command {
        Command::Analyze(run) | Command::Balance { run, .. } | Command::Dual { run, .. } => Some(run.outdir.clone()),
        Command::Verify { outdir, .. } => outdir.clone(),
    };
    match execute(&cli.command) {
        Ok(outcome) if !outcome.passed => ExitCode::from(1),
        Ok(outcome) if !outcome.warnings.is_empty() => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(dir) = outdir {
                if let Err(write_err) = write_error_report(&dir, &e) {
                    eprintln!("error: could not write error report: {write_err:#}");
                }
            }
            ExitCode::from(1)
        }
    }
}

fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Analyze(run) => {
            let (config, curve) = prepare(run)?;
            let analysis = analyze(&curve, &config, &run.outdir)?;
            Ok(Outcome { warnings: analysis.warnings(), passed: true })
        }
        Command::Balance { run, recheck } => balance(run, *recheck),
        Command::Dual { run, base } => dual(run, base),
        Command::Verify { outdir, grid, tol, bound, pairing } => verify(outdir.as_deref(), *grid, tol, *bound, pairing.as_deref()),
    }
}

fn prepare(run: &RunArgs) -> Result<(RunConfig, PeriodicVectorCurve)> {
    let config = run.tol.config(run.grid)?;
    let text = fs::read_to_string(&run.input).with_context(|| format!("reading {}", run.input.display()))?;
    let mut spec = CurveSpec::from_json(&text)?;
    if let Some(n) = config.grid {
        if spec.data.is_some() {
            bail!("--grid cannot resample raw_samples input");
        }
        spec = spec.with_grid(n);
    }
    let curve = curve::build_family(&spec)?;
    fs::create_dir_all(&run.outdir).with_context(|| format!("creating {}", run.outdir.display()))?;
    Ok((config, curve))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn config_json(config: &RunConfig, n: usize, orientation_flipped: bool) -> Value {
    json!({ "N": n, "orientation_flipped": orientation_flipped, "config": config })
}

/// Writes the curve, coefficient, frame and monodromy files.
fn analyze(curve: &PeriodicVectorCurve, config: &RunConfig, dir: &Path) -> Result<Analysis> {
    let analysis = pipeline::analyze(curve, config)?;
    let flipped = analysis.lift.orientation_flipped;
    let n = analysis.lift.len();

    let mut w = create(dir, "curve.csv")?;
    export::write_curve_csv(&mut w, &analysis.curve.curve)?;
    w.flush()?;
    let mut w = create(dir, "coefficients.csv")?;
    export::write_coefficients_csv(&mut w, &analysis.lift.alpha, &analysis.lift.beta, flipped)?;
    w.flush()?;
    write_json(dir, "frames.json", &export::frames_json(&analysis.frame.frames, flipped))?;

    let mut report = config_json(config, n, flipped);
    report["monodromy"] = export::monodromy_json(&analysis.class);
    report["monodromy_matrix"] = json!([
        [analysis.system.monodromy[(0, 0)], analysis.system.monodromy[(0, 1)]],
        [analysis.system.monodromy[(1, 0)], analysis.system.monodromy[(1, 1)]],
    ]);
    report["diagnostics"] = json!({
        "min_curvature_determinant": analysis.curve.min_determinant,
        "c2_residual": analysis.lift.c2_residual,
        "frame_det_defect": analysis.frame.det_defect,
        "frame_ode_residual": analysis.frame.ode_residual,
        "frame_closure_defect": analysis.frame.closure_defect,
        "wronskian_defect": analysis.system.wronskian_defect,
    });
    report["warnings"] = json!(analysis.warnings());
    write_json(dir, "monodromy.json", &report)?;

    println!("N = {n}, orientation flipped: {flipped}");
    println!("monodromy: {} (trace {:.17e}), alpha* = {:.17e}", analysis.class.tag.name(), analysis.class.trace, analysis.class.alpha_star);
    Ok(analysis)
}

fn balance(run: &RunArgs, recheck: bool) -> Result<Outcome> {
    let (config, curve) = prepare(run)?;
    let dir = &run.outdir;
    let analysis = analyze(&curve, &config, dir)?;
    let balanced = pipeline::balance(&analysis, &config)?;
    let result = &balanced.result;
    let flipped = analysis.lift.orientation_flipped;
    let n = result.beta_balanced.len();
    let mut warnings = result.warnings.clone();

    let mut w = create(dir, "balanced.csv")?;
    export::write_balanced_csv(&mut w, result, flipped)?;
    w.flush()?;

    let mut report = config_json(&config, n, flipped);
    report["balanced"] = export::balanced_json(result);
    if let Some(map) = balanced.map() {
        report["normalization_map"] = json!([0, 1, 2].map(|i| [map[(i, 0)], map[(i, 1)], map[(i, 2)]]));
    }
    println!("balanced: alpha* = {:.17e}, re-extracted alpha deviation {:.3e}", result.alpha_star, result.alpha_deviation);

    match analysis::sextactic_points(&result.beta_balanced, &config.tolerances) {
        Ok(sextactic) => {
            let mut w = create(dir, "segments.csv")?;
            export::write_segments_csv(&mut w, &sextactic.segment_lengths, n, flipped)?;
            w.flush()?;
            write_json(dir, "sextactic.json", &export::sextactic_json(&sextactic))?;
            println!("sextactic points: {}, total projective length {:.17e}", sextactic.count, sextactic.total_length);
            warnings.extend(sextactic.warnings.iter().cloned());
        }
        Err(e @ conebal::Error::FlatBeta { .. }) => {
            let note = json!({ "count": 0, "zeros": [], "note": e.code(), "message": e.to_string() });
            write_json(dir, "sextactic.json", &note)?;
            println!("sextactic points: none ({e})");
        }
        Err(e) => return Err(e.into()),
    }

    if recheck {
        let again = PeriodicVectorCurve::new(result.y_balanced.clone())?;
        let (second, second_balanced) = pipeline::run(&again, &config).context("second pass on the balanced curve")?;
        let alpha_deviation = second.lift.alpha.iter().map(|a| (a - result.alpha_star).abs()).fold(0.0, f64::max);
        let p = second_balanced.result.reparam.periodic();
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        let shift_deviation = p.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        println!("recheck: max |alpha - alpha*| = {alpha_deviation:.3e}, max |s - t - c| = {shift_deviation:.3e}");
        report["recheck"] = json!({
            "alpha_deviation": alpha_deviation,
            "shift_deviation": shift_deviation,
            "alpha_star": second_balanced.result.alpha_star,
        });
    }
    report["warnings"] = json!(warnings);
    write_json(dir, "balanced.json", &report)?;
    Ok(Outcome { warnings, passed: true })
}

fn dual(run: &RunArgs, bases: &[f64]) -> Result<Outcome> {
    let (config, curve) = prepare(run)?;
    let dir = &run.outdir;
    let analysis = analyze(&curve, &config, dir)?;
    let dual = pipeline::dual(&analysis, &config)?;
    let flipped = analysis.lift.orientation_flipped;
    let n = dual.z.len();

    let mut w = create(dir, "dual.csv")?;
    writeln!(w, "# N={n} orientation_flipped={flipped}")?;
    writeln!(w, "t,z0,z1,z2,alpha_dual,beta_dual")?;
    for (k, z) in dual.z.iter().enumerate() {
        let t = conebal::spectral::node(k, n);
        writeln!(w, "{t:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", z[0], z[1], z[2], dual.alpha_dual[k], dual.beta_dual[k])?;
    }
    w.flush()?;

    let mut inequality = Vec::new();
    for &fraction in bases {
        if !(0.0..1.0).contains(&fraction) {
            bail!("--base fractions must lie in [0, 1), got {fraction}");
        }
        let index = ((fraction * n as f64).round() as usize) % n;
        let check = wilczynski::duality_inequality_check(&analysis.lift, &dual, index, &config.tolerances)?;
        println!("inequality at node {index}: max {:.3e}", check.max_value);
        inequality.push(check);
    }
    let mut report = config_json(&config, n, flipped);
    report["dual"] = json!({
        "pairing_defect": dual.pairing_defect,
        "orthogonality_defect": dual.orthogonality_defect,
        "alpha_defect": dual.alpha_defect,
        "beta_defect": dual.beta_defect,
    });
    report["inequality"] = json!(inequality);
    report["warnings"] = json!(analysis.warnings());
    write_json(dir, "dual.json", &report)?;
    println!("dual: pairing defect {:.3e}, alpha defect {:.3e}, beta defect {:.3e}", dual.pairing_defect, dual.alpha_defect, dual.beta_defect);
    Ok(Outcome { warnings: analysis.warnings(), passed: true })
}

fn read_matrix(path: &Path) -> Result<Matrix3<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rows: [[f64; 3]; 3] = serde_json::from_str(&text).with_context(|| format!("{} is not a 3x3 matrix", path.display()))?;
    Ok(Matrix3::from_fn(|i, j| rows[i][j]))
}

fn verify(outdir: Option<&Path>, grid: usize, tol: &ToleranceArgs, bound: Option<f64>, pairing: Option<&Path>) -> Result<Outcome> {
    curve::check_grid(grid)?;
    if let Some(b) = bound {
        if !(b > 0.0) {
            bail!("--bound must be positive, got {b}");
        }
    }
    let options = VerifyOptions {
        config: tol.config(None)?,
        grid,
        pairing: pairing.map(read_matrix).transpose()?,
        bound,
    };
    let config = options.config.clone();
    let suite = Suite::prepare(options);
    let results = suite.run_all();
    for r in &results {
        println!("{r}");
    }
    let passed = results.iter().all(|r| r.passed);
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if let Some(dir) = outdir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let report = json!({ "config": config, "grid": grid, "bound": bound, "passed": passed, "criteria": results });
        write_json(dir, "verify.json", &report)?;
    }
    Ok(Outcome { warnings: Vec::new(), passed })
}

fn write_error_report(dir: &Path, error: &anyhow::Error) -> Result<()> {
    let code = error
        .chain()
        .find_map(|e| e.downcast_ref::<conebal::Error>())
        .map(|e| e.code())
        .unwrap_or("Failure");
    fs::create_dir_all(dir)?;
    let chain: Vec<String> = error.chain().map(|e| e.to_string()).collect();
    write_json(dir, "error.json", &json!({ "error": code, "message": format!("{error:#}"), "causes": chain }))
}
