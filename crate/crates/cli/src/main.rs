mod config;
mod output;
mod verify;

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use latteds::coarsening::run_coarsening;
use latteds::diagnostics::{
    dissipation_reports, flux_reports, relaxation_report, write_bounds_csv, write_energy_flux_csv,
    BoundReport, DiagnosticsLedger, LedgerBuilder,
};
use latteds::eds::{LatticeEds, State};
use latteds::integrator::integrate;
use latteds::lattice::{read_snapshot, write_snapshot, Field};
use latteds::recurrence::{check_ricatti_bounds, RecurrenceParams};
use latteds::Error;

use config::{parse_list, CoarsenRunConfig, RunConfig};
use output::write_atomic;

/// Allowance on the dissipation corollary, whose constant is unquantified.
const DISSIPATION_FACTOR: f64 = 10.0;

#[derive(Parser)]
#[command(
    name = "latteds",
    version,
    about = "Lattice extended dissipative systems laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a model and write trajectory, energy ledger and bound reports.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute the ledger and bound reports from a stored trajectory.
    Diagnose {
        #[arg(long)]
        trajectory: PathBuf,
        /// Comma-separated cube radii.
        #[arg(long)]
        radii: String,
        /// Output directory; defaults to the trajectory's parent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the stable manifold of the flux recurrence against its bounds.
    Recurrence {
        #[arg(long = "N")]
        dim: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        r_max: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the bistable coarsening experiment.
    Coarsen {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run an invariant suite and print one line per check.
    Verify {
        #[arg(long, value_enum)]
        suite: verify::Suite,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Simulate { config } => simulate(&config),
        Command::Diagnose {
            trajectory,
            radii,
            out,
        } => diagnose(&trajectory, &radii, out.as_deref()),
        Command::Recurrence {
            dim,
            lambda,
            eps,
            r_max,
            tol,
            out,
        } => recurrence(dim, lambda, eps, r_max, tol, out.as_deref()),
        Command::Coarsen { config } => coarsen(&config),
        Command::Verify { suite } => verify::run(suite).map(|ok| {
            if !ok {
                std::process::exit(1);
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("LATTEDS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .with_context(|| format!("LATTEDS_THREADS = '{value}' is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn simulate(path: &Path) -> Result<()> {
    let cfg = RunConfig::parse(&read_text(path)?)
        .with_context(|| format!("config {}", path.display()))?;
    let out = PathBuf::from(&cfg.out_dir);
    let traj = out.join("trajectory");
    fs::create_dir_all(&traj).with_context(|| format!("creating {}", traj.display()))?;
    write_atomic(&out.join("config.txt"), cfg.echo().as_bytes())?;
    write_atomic(&traj.join("config.txt"), cfg.echo().as_bytes())?;

    let model = cfg.build_model()?;
    let initial = cfg.initial_state(model.as_ref())?;
    let spec = cfg.spec()?;
    let mut builder = LedgerBuilder::new(model.as_ref(), &cfg.radii)?;
    let mut times = Vec::new();
    let outcome = integrate(model.as_ref(), &initial, &spec, |_, t, s| {
        let index = times.len();
        write_state(&traj, index, s)?;
        times.push(t);
        builder.push(t, s)
    });
    write_atomic(&traj.join("times.csv"), times_csv(&times).as_bytes())?;
    let (_, warnings) = outcome.map_err(|e| match e {
        Error::Unbounded(msg) => anyhow::anyhow!("integration blew up: {msg}"),
        other => other.into(),
    })?;
    for w in warnings {
        builder.warn(w);
    }
    let ledger = builder.finish()?;
    write_reports(&ledger, &cfg.eps, &out)
}

fn write_state(dir: &Path, index: usize, state: &State) -> latteds::Result<()> {
    let mut buf = Vec::new();
    write_snapshot(&state.u, &mut buf)?;
    write_atomic(&dir.join(format!("u_{index:06}.txt")), &buf)
        .map_err(|e| Error::Argument(format!("{e:#}")))?;
    if let Some(v) = &state.v {
        buf.clear();
        write_snapshot(v, &mut buf)?;
        write_atomic(&dir.join(format!("v_{index:06}.txt")), &buf)
            .map_err(|e| Error::Argument(format!("{e:#}")))?;
    }
    Ok(())
}

fn times_csv(times: &[f64]) -> String {
    let mut s = String::from("index,t\n");
    for (k, t) in times.iter().enumerate() {
        s.push_str(&format!("{k},{t}\n"));
    }
    s
}

/// Flux bounds, dissipation growth and relaxation times for one ledger.
fn bound_reports(
    ledger: &DiagnosticsLedger,
    eps: &[f64],
) -> Result<(Vec<BoundReport>, Vec<String>)> {
    let mut reports = Vec::new();
    let mut notes = ledger.warnings.clone();
    if ledger.final_time() <= 0.0 {
        notes.push("no time elapsed; bound reports skipped".into());
        return Ok((reports, notes));
    }
    reports.extend(flux_reports(ledger)?);
    for r in ledger.radii() {
        reports.extend(dissipation_reports(
            ledger,
            r,
            &[ledger.final_time()],
            DISSIPATION_FACTOR,
        )?);
    }
    for r in ledger.radii() {
        for &e in eps {
            match relaxation_report(ledger, r, e) {
                Ok(rep) => reports.push(rep),
                Err(Error::Unbounded(msg)) => {
                    notes.push(format!("relaxation R = {r}, eps = {e}: {msg}"))
                }
                Err(err) => return Err(err.into()),
            }
        }
    }
    Ok((reports, notes))
}

fn write_reports(ledger: &DiagnosticsLedger, eps: &[f64], out: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_energy_flux_csv(ledger, &mut buf)?;
    write_atomic(&out.join("energy_flux.csv"), &buf)?;
    let (reports, notes) = bound_reports(ledger, eps)?;
    buf.clear();
    write_bounds_csv(&reports, &mut buf)?;
    write_atomic(&out.join("bounds.csv"), &buf)?;
    let mut text = String::new();
    for n in &notes {
        text.push_str(n);
        text.push('\n');
    }
    write_atomic(&out.join("warnings.txt"), text.as_bytes())?;
    for n in &notes {
        eprintln!("warning: {n}");
    }
    Ok(())
}

fn diagnose(traj: &Path, radii: &str, out: Option<&Path>) -> Result<()> {
    let mut cfg =
        RunConfig::parse(&read_text(&traj.join("config.txt"))?).context("trajectory config")?;
    cfg.radii = parse_list(radii)?;
    cfg.validate()?;
    let model = cfg.build_model()?;
    let times = read_times(&traj.join("times.csv"))?;
    let mut builder = LedgerBuilder::new(model.as_ref(), &cfg.radii)?;
    for (k, &t) in times.iter().enumerate() {
        let u = read_field(&traj.join(format!("u_{k:06}.txt")), model.as_ref())?;
        let state = if model.is_damped() {
            State::damped(
                u,
                read_field(&traj.join(format!("v_{k:06}.txt")), model.as_ref())?,
            )
        } else {
            State::gradient(u)
        };
        builder.push(t, &state)?;
    }
    let ledger = builder.finish()?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| {
        traj.parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    });
    fs::create_dir_all(&out)?;
    write_reports(&ledger, &cfg.eps, &out)
}

fn read_times(path: &Path) -> Result<Vec<f64>> {
    let text = read_text(path)?;
    let mut times = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let (index, t) = line
            .split_once(',')
            .with_context(|| format!("{} line {}: expected 'index,t'", path.display(), n + 1))?;
        if index.trim().parse::<usize>()? != times.len() {
            bail!(
                "{} line {}: indices must count up from 0",
                path.display(),
                n + 1
            );
        }
        times.push(t.trim().parse()?);
    }
    Ok(times)
}

/// Reads a snapshot and rebinds it to the model window.
fn read_field(path: &Path, model: &dyn LatticeEds) -> Result<Field> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let f = read_snapshot(BufReader::new(file))
        .with_context(|| format!("reading {}", path.display()))?;
    let w = model.window();
    if f.window().dim() != w.dim()
        || f.window().radius() != w.radius()
        || f.width() != model.state_width()
    {
        bail!("{} does not match the configured window", path.display());
    }
    let width = f.width();
    Ok(Field::from_values(w, width, f.into_values())?)
}

fn recurrence(
    dim: usize,
    lambda: f64,
    eps: f64,
    r_max: u64,
    tol: f64,
    out: Option<&Path>,
) -> Result<()> {
    let p = RecurrenceParams::new(dim, lambda, eps)?;
    let checks = check_ricatti_bounds(&p, 1..=r_max, tol)?;
    let mut s = String::from("r,g_s,bound_ricatti1_or_all,bound_ricatti2,satisfied\n");
    for c in &checks {
        let b2 = c.bound2.map(|b| b.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            c.r, c.g_s, c.bound, b2, c.satisfied
        ));
    }
    match out {
        Some(path) => write_atomic(path, s.as_bytes())?,
        None => print!("{s}"),
    }
    if checks.iter().any(|c| !c.satisfied) {
        bail!("bound violated at some radius");
    }
    Ok(())
}

fn coarsen(path: &Path) -> Result<()> {
    let cfg = CoarsenRunConfig::parse(&read_text(path)?)
        .with_context(|| format!("config {}", path.display()))?;
    let out = PathBuf::from(&cfg.out_dir);
    let snaps = out.join("snapshots");
    fs::create_dir_all(&snaps).with_context(|| format!("creating {}", snaps.display()))?;
    write_atomic(&out.join("config.txt"), cfg.echo().as_bytes())?;
    let run = run_coarsening(&cfg.run)?;

    let mut s = String::from("t,count,mean_size,max_size,phase_fraction\n");
    for d in &run.stats.snapshots {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            d.time, d.count, d.mean_size, d.max_size, d.phase_fraction
        ));
    }
    write_atomic(&out.join("droplets.csv"), s.as_bytes())?;

    let mut s = String::from("site,flip_count\n");
    for (site, n) in run.stats.flips.iter().enumerate() {
        s.push_str(&format!("{site},{n}\n"));
    }
    write_atomic(&out.join("flips.csv"), s.as_bytes())?;

    let mut times = String::from("index,t\n");
    for (k, (t, state)) in run.snapshots.iter().enumerate() {
        let mut buf = Vec::new();
        write_snapshot(&state.u, &mut buf)?;
        write_atomic(&snaps.join(format!("u_{k:06}.txt")), &buf)?;
        times.push_str(&format!("{k},{t}\n"));
    }
    write_atomic(&snaps.join("times.csv"), times.as_bytes())?;

    let summary = format!(
        "flip_fraction,both_phases_fraction,growth,max_cone_excess\n{},{},{},{}\n",
        run.stats.flip_fraction(),
        run.stats.both_phases_fraction(),
        run.stats.growth(),
        run.max_cone_excess
    );
    write_atomic(&out.join("summary.csv"), summary.as_bytes())?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
