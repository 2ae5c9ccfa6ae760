use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gabp_orbit::correction::{build_backtrackless, modified_weights};
use gabp_orbit::gabp::{run_gabp, GaBPOptions, Schedule};
use gabp_orbit::io::{read_model_file, write_model_file, write_potential_file, GridGeometry};
use gabp_orbit::model::{gen_grid, gen_random, gen_random_tree, spectral_radius_abs, GraphModel};
use gabp_orbit::orbits::{enumerate_orbits, OrbitBudget, OrbitClass};
use gabp_orbit::report::{estimate, EstimateConfig, Method};
use gabp_orbit::sweep::{run_sweep, write_sweep_csv, SweepConfig};
use gabp_orbit::{Error, Result};

#[derive(Parser)]
#[command(version, about = "GaBP determinant estimates with orbit-product corrections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a model and write J (and optionally h) as Matrix Market.
    Gen(GenArgs),
    /// Run estimators on a model file and print a JSON report.
    Estimate(EstimateArgs),
    /// Sweep coupling strength and block size on a uniform grid (CSV).
    Sweep(SweepArgs),
    /// List orbits up to a length (brute-force oracle).
    Orbits(OrbitsArgs),
    /// Report walk-summability and girth.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Grid,
    Random,
    Tree,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: Kind,
    /// Output path for J.
    #[arg(short, long)]
    out: PathBuf,
    /// Grid shape ROWSxCOLS.
    #[arg(long, default_value = "8x8")]
    grid: GridGeometry,
    #[arg(long)]
    periodic: bool,
    /// Uniform grid coupling (J_ij = -r).
    #[arg(short, default_value_t = 0.2)]
    r: f64,
    #[arg(short, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 3.0)]
    avg_degree: f64,
    /// Target rho(|R|) for random models and trees.
    #[arg(long, default_value_t = 0.8)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write a random potential h (one value per line).
    #[arg(long)]
    potential: Option<PathBuf>,
}

#[derive(Args)]
struct Solver {
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long)]
    sequential: bool,
}

impl Solver {
    fn options(&self) -> GaBPOptions {
        GaBPOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            schedule: if self.sequential { Schedule::Sequential } else { Schedule::Synchronous },
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    model: PathBuf,
    /// Comma-separated: exact, gabp, gabp+btl-trunc, gabp+blocksum-Rprime, blocksum-R, orbit-trunc.
    #[arg(long, value_delimiter = ',', default_value = "exact,gabp")]
    methods: Vec<Method>,
    #[command(flatten)]
    solver: Solver,
    #[arg(long = "block-size", default_value_t = 4)]
    block_size: usize,
    #[arg(long = "orbit-max", default_value_t = 12)]
    orbit_max: usize,
    /// Grid shape for the blocksum methods; read from the model file if omitted.
    #[arg(long)]
    grid: Option<GridGeometry>,
    #[arg(long)]
    periodic: bool,
    /// Run even if the model is not walk-summable.
    #[arg(long)]
    force: bool,
    /// Write R' as a general Matrix Market file.
    #[arg(long = "dump-rprime")]
    dump_rprime: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "32x32")]
    grid: GridGeometry,
    #[arg(long)]
    periodic: bool,
    #[arg(short, long, value_delimiter = ',', default_value = "0.05,0.10,0.15,0.20,0.23")]
    r: Vec<f64>,
    #[arg(long = "block-size", value_delimiter = ',', default_value = "2,4,8")]
    block_size: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "gabp,blocksum-R,gabp+blocksum-Rprime")]
    methods: Vec<Method>,
    #[command(flatten)]
    solver: Solver,
    #[arg(long = "orbit-max", default_value_t = 12)]
    orbit_max: usize,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct OrbitsArgs {
    model: PathBuf,
    #[arg(long = "orbit-max", default_value_t = 8)]
    orbit_max: usize,
    /// Only list orbits of this class.
    #[arg(long, value_enum)]
    class: Option<ClassArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    TotallyBacktracking,
    Backtrackless,
    Reducible,
}

#[derive(Args)]
struct CheckArgs {
    model: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let (model, grid) = match args.kind {
        Kind::Grid => {
            let g = GridGeometry { periodic: args.periodic, ..args.grid };
            (gen_grid(g.rows, g.cols, args.r, g.periodic)?, Some(g))
        }
        Kind::Random => (gen_random(args.n, args.avg_degree, args.rho, args.seed)?, None),
        Kind::Tree => (gen_random_tree(args.n, args.rho, args.seed)?, None),
    };
    write_model_file(&args.out, &model, grid)?;
    if let Some(path) = &args.potential {
        write_potential_file(path, &random_potential(model.n(), args.seed))?;
    }
    println!(
        "wrote {} (n = {}, |E| = {})",
        args.out.display(),
        model.n(),
        model.num_edges()
    );
    Ok(())
}

fn random_potential(n: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    let (model, file_grid) = read_model_file(&args.model)?;
    let grid = match args.grid {
        Some(g) => Some(GridGeometry { periodic: args.periodic, ..g }),
        None => file_grid,
    };
    let config = EstimateConfig {
        methods: args.methods,
        gabp: args.solver.options(),
        block_size: args.block_size,
        orbit_max: args.orbit_max,
        grid,
        force: args.force,
        ..Default::default()
    };
    let report = estimate(&model, &config)?;
    if let Some(path) = &args.dump_rprime {
        dump_rprime(&model, &config.gabp, path)?;
    }
    let mut out = output(args.json.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

fn dump_rprime(model: &GraphModel, opts: &GaBPOptions, path: &Path) -> Result<()> {
    let (weights, _) = model.normalize();
    let state = run_gabp(&weights, None, opts)?;
    let rp = build_backtrackless(&modified_weights(&weights, &state)?, &weights);
    rp.write_matrix_market(BufWriter::new(File::create(path)?))?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let config = SweepConfig {
        grid: GridGeometry { periodic: args.periodic, ..args.grid },
        couplings: args.r,
        block_sizes: args.block_size,
        methods: args.methods,
        gabp: args.solver.options(),
        orbit_max: args.orbit_max,
        orbit_budget: OrbitBudget::default(),
    };
    write_sweep_csv(&run_sweep(&config), output(args.csv.as_deref())?)
}

fn cmd_orbits(args: OrbitsArgs) -> Result<()> {
    let (model, _) = read_model_file(&args.model)?;
    let (weights, _) = model.normalize();
    let wanted = args.class.map(|c| match c {
        ClassArg::TotallyBacktracking => OrbitClass::TotallyBacktracking,
        ClassArg::Backtrackless => OrbitClass::Backtrackless,
        ClassArg::Reducible => OrbitClass::ReducibleNonTrivial,
    });
    let mut out = output(None)?;
    for orbit in enumerate_orbits(&weights, args.orbit_max, &OrbitBudget::default())? {
        if wanted.is_none_or(|c| c == orbit.class()) {
            writeln!(out, "{}", orbit.dump_line(&weights)?)?;
        }
    }
    Ok(())
}

fn cmd_check(args: CheckArgs) -> Result<()> {
    let (model, _) = read_model_file(&args.model)?;
    let (weights, _) = model.normalize();
    let rep = spectral_radius_abs(&weights, args.tol, args.max_iter);
    let girth = weights.girth().map_or_else(|| "none (forest)".to_string(), |g| g.to_string());
    println!("n = {}, |E| = {}", model.n(), model.num_edges());
    println!(
        "rho(|R|) = {:.12} ({} iterations, residual {:e}{})",
        rep.rho_abs,
        rep.iterations,
        rep.residual,
        if rep.converged { "" } else { ", not converged" }
    );
    println!("walk-summable: {}", rep.walk_summable);
    println!("girth: {girth}");
    if rep.walk_summable {
        Ok(())
    } else {
        Err(Error::NotWalkSummable { rho: rep.rho_abs })
    }
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Gen(a) => cmd_gen(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Orbits(a) => cmd_orbits(a),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
