use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crepant_core::artifact;
use crepant_core::pipeline::{self, Pipeline, PipelineOptions};
use crepant_core::regularity::{verify_regularity_with, CheckMode, RegularityOptions};
use crepant_core::subdivision::verify;
use crepant_core::sylvester::{Family, FamilySpec};
use crepant_core::toric;
use crepant_core::Error;

// Writes to stdout, ignoring a closed pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

macro_rules! outln {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "crepant", version, about = "Regular unimodular triangulations of Sylvester simplices")]
struct Cli {
    /// Worker threads for parallel checks (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress and the summary line.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    P1,
    P2,
    P2dual,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::P1 => Family::P1,
            FamilyArg::P2 => Family::P2,
            FamilyArg::P2dual => Family::P2dual,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Local,
}

#[derive(Subcommand)]
enum Command {
    /// Build a triangulation with its regularity witness and write it as JSON.
    Triangulate {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5_000_000)]
        max_cells: u64,
        /// Directory of cached lower-level artifacts.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Check an artifact: subdivision, unimodularity and regularity witness.
    Verify {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        mode: ModeArg,
        /// Random pairs checked on top of the local checks.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Export the fan of a triangulation whose polytope contains the origin.
    Fan {
        path: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print index, Betti and Euler numbers for n = 1..K.
    Invariants {
        #[arg(long)]
        n_max: usize,
        #[arg(long)]
        csv: bool,
        /// Also print the tabulated Hodge diamonds.
        #[arg(long)]
        hodge: bool,
    },
    /// Summarize an artifact without checking it.
    Stats { path: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Feasibility { .. } => 2,
        Error::Verification(_) => 3,
        Error::Parse { .. } | Error::UnsupportedVersion { .. } | Error::Io { .. } => 4,
        Error::Domain(_) => 5,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Error> {
    match &cli.command {
        Command::Triangulate { family, n, out, max_cells, cache } => {
            let start = Instant::now();
            let spec = FamilySpec::new((*family).into(), *n)?;
            let p = Pipeline::new(PipelineOptions {
                max_cells: *max_cells,
                cache_dir: cache.clone(),
                progress: !cli.quiet,
                ..PipelineOptions::default()
            });
            p.precheck(spec)?;
            let a = p.triangulate(spec)?;
            artifact::save(&a, out)?;
            if !cli.quiet {
                outln!(
                    "{} {} {} cells {} points regular({}) unimodular {:.2}s",
                    spec.family,
                    spec.n,
                    a.triangulation.num_cells(),
                    a.triangulation.store().len(),
                    a.regularity_mode.map_or("unchecked".to_string(), |m| m.to_string()),
                    start.elapsed().as_secs_f64()
                );
            }
            Ok(0)
        }
        Command::Verify { path, mode, samples, seed } => {
            let a = artifact::load_unchecked(path)?;
            let report = verify(&a.triangulation)?;
            let mode = match mode {
                ModeArg::Full => CheckMode::Full,
                ModeArg::Local => CheckMode::LocalSampled,
            };
            let cert = verify_regularity_with(
                &a.triangulation,
                &a.witness,
                &RegularityOptions { mode, samples: *samples, seed: *seed },
            )?;
            outln!("artifact: {} ({} cells, {} points)", a.spec, report.cells, a.triangulation.store().len());
            outln!("valid: {}", report.valid);
            outln!("simplicial: {}", report.simplicial);
            outln!("unimodular: {}", report.unimodular);
            outln!("volume_checksum: {} (polytope {})", report.volume_checksum, report.ambient_nvol);
            outln!("regular: {} ({mode}, {} pairs)", cert.regular, cert.checked_pairs);
            for r in &report.reasons {
                outln!("reason: {r}");
            }
            for v in &cert.violating_pairs {
                outln!("violation: cell {} point {} margin {}", v.cell, a.triangulation.store().get(v.point), v.margin);
            }
            let ok = report.valid && report.simplicial && report.unimodular && cert.regular;
            Ok(if ok { 0 } else { 3 })
        }
        Command::Fan { path, out } => {
            let a = artifact::load_unchecked(path)?;
            let fan = toric::fan_from_triangulation(&a.triangulation)?;
            let json = fan.to_json()?;
            std::fs::write(out, json).map_err(|e| Error::Io {
                path: out.display().to_string(),
                message: e.to_string(),
            })?;
            let f = fan.flags;
            let word = |ok: bool, name: &str| if ok { name.to_string() } else { format!("not-{name}") };
            outln!(
                "{} {} {} ({} rays, {} cones)",
                word(f.complete, "complete"),
                word(f.smooth, "smooth"),
                word(f.crepant, "crepant"),
                fan.rays.len(),
                fan.cones.len()
            );
            Ok(if f.complete && f.smooth && f.crepant && f.primitive { 0 } else { 3 })
        }
        Command::Invariants { n_max, csv, hodge } => {
            let rows = toric::invariant_table(*n_max)?;
            if *csv {
                out!("{}", toric::render_csv(&rows));
            } else {
                out!("{}", toric::render_text(&rows));
            }
            if *hodge {
                for n in [3, 4] {
                    for i in [1, 2] {
                        let h = toric::hodge_diamond(n, i)?;
                        outln!("\nHodge diamond n={n} family={i}");
                        out!("{}", h.render());
                    }
                }
            }
            Ok(0)
        }
        Command::Stats { path } => {
            let a = artifact::load_unchecked(path)?;
            let t = &a.triangulation;
            outln!("family: {}", a.spec.family);
            outln!("n: {}", a.spec.n);
            outln!("cells: {}", t.num_cells());
            outln!("points: {}", t.store().len());
            outln!("expected cells: {}", a.spec.nvol());
            outln!(
                "regularity checked: {}",
                a.regularity_mode.map_or("no".to_string(), |m| m.to_string())
            );
            match pipeline::witness_denominator_bits(&a.witness) {
                Some(b) => outln!("witness denominators: powers of two up to 2^{b}"),
                None => outln!("witness denominators: not all powers of two"),
            }
            outln!("provenance steps: {}", a.provenance.len());
            for s in &a.provenance {
                outln!(
                    "  {:?} level {}{}{}",
                    s.kind,
                    s.level,
                    s.cells.map_or(String::new(), |c| format!(", {c} cells")),
                    s.omega.as_ref().map_or(String::new(), |o| format!(", omega {o}"))
                );
            }
            Ok(0)
        }
    }
}
