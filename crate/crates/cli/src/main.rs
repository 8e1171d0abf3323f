//! `dipole`: batch front end for the quantum dipole Rayleigh-Ritz solver.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dipole_core::cache::{cache_path, load_or_assemble};
use dipole_core::eigen::agreement_digits;
use dipole_core::observables::{coupling_constant, density_grid, normalize, StateLabel, WaveFunction};
use dipole_core::optimize::{default_bracket, k_sweep, optimize_widening, OptOptions};
use dipole_core::{fd_spectrum, ExactMatrixSet, FdConfig, Float, Parity, Precision, ReducedPencil};
use serde_json::{json, Map, Value};

use output::{emit, render_grid, Cell, Format, Table};

const CACHE_ENV: &str = "DIPOLE_CACHE_DIR";

#[derive(Parser, Debug)]
#[command(name = "dipole", version, about = "Bound states of the 2D quantum dipole by Rayleigh-Ritz")]
struct Cli {
    /// Directory for cached exact matrices.
    #[arg(long, global = true, env = CACHE_ENV, default_value = ".dipole-cache")]
    cache_dir: PathBuf,

    /// Working precision in bits.
    #[arg(long, global = true, default_value_t = 256)]
    precision: u32,

    /// Output file (stdout when omitted).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Output format; tables default to csv, density grids to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Significant digits for working-precision values.
    #[arg(long, global = true, default_value_t = 17)]
    digits: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Level {
    #[arg(long, value_parser = parse_parity)]
    parity: Parity,
    /// Basis level: all terms of total degree at most K.
    #[arg(long = "K", alias = "k")]
    k: u32,
}

#[derive(Args, Debug, Clone)]
struct Search {
    /// Explicit alpha bracket; defaults to the parity's standard bracket.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    bracket: Option<Vec<f64>>,
    /// Relative alpha tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the exact matrices for a level and store them in the cache.
    Assemble(Level),
    /// Full spectrum at a fixed alpha.
    Solve {
        #[command(flatten)]
        level: Level,
        #[arg(long)]
        alpha: f64,
        /// Only the lowest COUNT eigenvalues.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Optimal alpha and energy for the lowest states.
    Optimize {
        #[command(flatten)]
        level: Level,
        #[arg(long, default_value_t = 5)]
        states: usize,
        #[command(flatten)]
        search: Search,
    },
    /// Optimized energy of one state across basis levels.
    Converge {
        #[arg(long, value_parser = parse_parity)]
        parity: Parity,
        #[arg(long, default_value_t = 1)]
        state: usize,
        #[arg(long = "k-min", default_value_t = 2)]
        k_min: u32,
        #[arg(long = "k-max", default_value_t = 20)]
        k_max: u32,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Sample |psi|^2 on a Cartesian grid.
    Density {
        #[command(flatten)]
        level: Level,
        #[arg(long, default_value_t = 1)]
        state: usize,
        /// Fixed alpha instead of the optimized one.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, num_args = 4, value_names = ["XMIN", "XMAX", "YMIN", "YMAX"], allow_negative_numbers = true)]
        extent: Vec<f64>,
        #[arg(long, default_value_t = 101)]
        nx: usize,
        #[arg(long, default_value_t = 101)]
        ny: usize,
    },
    /// Quartic coupling constant g = int |psi|^4 of a normalized state.
    Coupling {
        #[command(flatten)]
        level: Level,
        #[arg(long, default_value_t = 1)]
        state: usize,
        #[arg(long)]
        alpha: Option<f64>,
        /// Use only the first TERMS basis functions of the level.
        #[arg(long)]
        terms: Option<usize>,
    },
    /// Finite-difference cross-check of the lowest eigenvalues.
    Oracle {
        /// Box half-width.
        #[arg(long = "L", alias = "half-width", default_value_t = 40.0)]
        half_width: f64,
        /// Interior grid points per axis (even).
        #[arg(long = "M", alias = "points", default_value_t = 400)]
        points: usize,
        #[arg(long, default_value_t = 3)]
        count: usize,
        /// Drop the dipole potential (particle in a box).
        #[arg(long)]
        no_potential: bool,
    },
    /// Optimize, then re-evaluate at doubled precision and report agreement.
    Verify {
        #[command(flatten)]
        level: Level,
        #[arg(long, default_value_t = 5)]
        states: usize,
        /// Fail (exit 9) when any state agrees to fewer digits.
        #[arg(long, default_value_t = 9.0)]
        min_digits: f64,
    },
}

fn parse_parity(s: &str) -> Result<Parity, String> {
    s.parse::<Parity>().map_err(|e| e.to_string())
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] dipole_core::Error),
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use dipole_core::Error as E;
        match self {
            CliError::Core(E::InvalidArgument(_)) => 3,
            CliError::Core(E::Convergence { .. }) => 4,
            CliError::Core(E::BracketExhausted { .. }) => 5,
            CliError::Core(E::Cache(_)) => 6,
            CliError::Io { .. } => 7,
            CliError::Core(E::Internal(_)) => 8,
            CliError::Verification(_) => 9,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

struct Context {
    cache_dir: PathBuf,
    precision: Precision,
    digits: usize,
}

impl Context {
    fn matrices(&self, parity: Parity, k: u32) -> CliResult<ExactMatrixSet> {
        Ok(load_or_assemble(&self.cache_dir, parity, k)?)
    }

    fn big(&self, v: &Float) -> Cell {
        Cell::Big(v.clone(), self.digits)
    }

    fn metadata(&self, command: &str) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("command".into(), json!(command));
        m.insert("precision_bits".into(), json!(self.precision.bits()));
        m
    }
}

fn level_metadata(meta: &mut Map<String, Value>, m: &ExactMatrixSet) {
    meta.insert("parity".into(), json!(m.parity.as_str()));
    meta.insert("K".into(), json!(m.k));
    meta.insert("N".into(), json!(m.len()));
}

fn bracket_of(search: &Search, parity: Parity) -> CliResult<(f64, f64)> {
    match &search.bracket {
        Some(b) => Ok((b[0], b[1])),
        None => Ok(default_bracket(parity)),
    }
}

fn opt_options(ctx: &Context, tol: f64) -> OptOptions {
    OptOptions { precision: ctx.precision, tol, ..OptOptions::default() }
}

/// Normalized wavefunction of state `n`, at `alpha` or at the optimum.
fn state_wavefunction(ctx: &Context, m: &ExactMatrixSet, n: usize, alpha: Option<f64>) -> CliResult<WaveFunction> {
    let pencil = ReducedPencil::new(m, ctx.precision);
    if n == 0 || n > m.len() {
        return Err(dipole_core::Error::InvalidArgument(format!("state {n} outside 1..={}", m.len())).into());
    }
    let (alpha, c) = match alpha {
        Some(a) => (a, pencil.eigenpair(a, n - 1)?.1),
        None => {
            let r = optimize_widening(&pencil, n, default_bracket(m.parity), &opt_options(ctx, 1e-6))?;
            (r.alpha_star, r.coefficients)
        }
    };
    let w = WaveFunction::from_scaled(m.basis.clone(), alpha, &c)?;
    Ok(normalize(&w, m)?)
}

fn run(cli: Cli) -> CliResult<()> {
    let ctx = Context {
        cache_dir: cli.cache_dir.clone(),
        precision: Precision::new(cli.precision)?,
        digits: cli.digits,
    };
    let table_format = cli.format.unwrap_or(Format::Csv);
    let text = match cli.command {
        Command::Assemble(level) => {
            let m = ctx.matrices(level.parity, level.k)?;
            let mut meta = ctx.metadata("assemble");
            level_metadata(&mut meta, &m);
            let mut t = Table::new(meta, vec!["parity", "K", "N", "cache_file"]);
            let path = cache_path(&ctx.cache_dir, m.parity, m.k);
            t.rows.push(vec![
                Cell::Text(m.parity.to_string()),
                Cell::Int(m.k.into()),
                Cell::Int(m.len() as u64),
                Cell::Text(path.display().to_string()),
            ]);
            t.render(table_format)
        }
        Command::Solve { level, alpha, count } => {
            let m = ctx.matrices(level.parity, level.k)?;
            let sp = ReducedPencil::new(&m, ctx.precision).spectrum(alpha)?;
            let mut meta = ctx.metadata("solve");
            level_metadata(&mut meta, &m);
            meta.insert("alpha".into(), json!(alpha));
            meta.insert("residual_bound".into(), json!(sp.residual_bound));
            let mut t = Table::new(meta, vec!["index", "epsilon"]);
            let shown = count.unwrap_or(sp.len()).min(sp.len());
            for (i, e) in sp.eigenvalues.iter().take(shown).enumerate() {
                t.rows.push(vec![Cell::Int(i as u64 + 1), ctx.big(e)]);
            }
            t.render(table_format)
        }
        Command::Optimize { level, states, search } => {
            let m = ctx.matrices(level.parity, level.k)?;
            let pencil = ReducedPencil::new(&m, ctx.precision);
            let bracket = bracket_of(&search, m.parity)?;
            let opts = opt_options(&ctx, search.tol);
            let mut meta = ctx.metadata("optimize");
            level_metadata(&mut meta, &m);
            let mut t = Table::new(meta, vec!["state", "alpha_star", "epsilon", "stationarity", "evaluations"]);
            for n in 1..=states {
                let r = optimize_widening(&pencil, n, bracket, &opts)?;
                t.rows.push(vec![
                    Cell::Int(n as u64),
                    Cell::Num(r.alpha_star),
                    ctx.big(&r.epsilon),
                    Cell::Num(r.stationarity),
                    Cell::Int(r.evaluations as u64),
                ]);
            }
            t.render(table_format)
        }
        Command::Converge { parity, state, k_min, k_max, tol } => {
            if k_min == 0 || k_min > k_max {
                return Err(dipole_core::Error::InvalidArgument(format!("need 1 <= k-min <= k-max, got {k_min}..{k_max}")).into());
            }
            let top = ctx.matrices(parity, k_max)?;
            let ks: Vec<u32> = (k_min..=k_max).collect();
            let rows = k_sweep(&top, state, &ks, &opt_options(&ctx, tol))?;
            let mut meta = ctx.metadata("converge");
            meta.insert("parity".into(), json!(parity.as_str()));
            meta.insert("state".into(), json!(state));
            let mut t = Table::new(meta, vec!["K", "N", "alpha_star", "epsilon", "stationarity"]);
            for r in rows {
                t.rows.push(vec![
                    Cell::Int(r.k.into()),
                    Cell::Int(r.basis_size as u64),
                    Cell::Num(r.alpha_star),
                    ctx.big(&r.epsilon),
                    Cell::Num(r.stationarity),
                ]);
            }
            t.render(table_format)
        }
        Command::Density { level, state, alpha, extent, nx, ny } => {
            let m = ctx.matrices(level.parity, level.k)?;
            let w = state_wavefunction(&ctx, &m, state, alpha)?;
            let label = StateLabel { parity: m.parity, n: state, k: m.k, alpha: w.alpha() };
            let grid = density_grid(&w, (extent[0], extent[1], extent[2], extent[3]), nx, ny, label)?;
            let mut meta = ctx.metadata("density");
            level_metadata(&mut meta, &m);
            meta.insert("state".into(), json!(state));
            meta.insert("alpha".into(), json!(w.alpha()));
            meta.insert("extent".into(), json!(extent));
            meta.insert("nx".into(), json!(nx));
            meta.insert("ny".into(), json!(ny));
            meta.insert("layout".into(), json!("row-major, y outer, x inner"));
            render_grid(&grid, meta, cli.format.unwrap_or(Format::Json))
        }
        Command::Coupling { level, state, alpha, terms } => {
            let full = ctx.matrices(level.parity, level.k)?;
            let m = match terms {
                Some(t) => full.leading(t)?,
                None => full,
            };
            let w = state_wavefunction(&ctx, &m, state, alpha)?;
            let g = coupling_constant(&w)?;
            let mut meta = ctx.metadata("coupling");
            level_metadata(&mut meta, &m);
            let mut t = Table::new(meta, vec!["state", "alpha", "g"]);
            t.rows.push(vec![Cell::Int(state as u64), Cell::Num(w.alpha()), Cell::Num(g)]);
            t.render(table_format)
        }
        Command::Oracle { half_width, points, count, no_potential } => {
            let mut cfg = FdConfig::new(half_width, points, count)?;
            cfg.potential = !no_potential;
            let values = fd_spectrum(&cfg)?;
            let mut meta = ctx.metadata("oracle");
            meta.insert("half_width".into(), json!(half_width));
            meta.insert("points".into(), json!(points));
            meta.insert("spacing".into(), json!(cfg.spacing()));
            meta.insert("potential".into(), json!(cfg.potential));
            let mut t = Table::new(meta, vec!["index", "eigenvalue"]);
            for (i, v) in values.iter().enumerate() {
                t.rows.push(vec![Cell::Int(i as u64 + 1), Cell::Num(*v)]);
            }
            t.render(table_format)
        }
        Command::Verify { level, states, min_digits } => {
            let m = ctx.matrices(level.parity, level.k)?;
            let pencil = ReducedPencil::new(&m, ctx.precision);
            let fine = ReducedPencil::new(&m, ctx.precision.doubled());
            let opts = opt_options(&ctx, 1e-6);
            let mut meta = ctx.metadata("verify");
            level_metadata(&mut meta, &m);
            meta.insert("check_precision_bits".into(), json!(ctx.precision.doubled().bits()));
            let mut t = Table::new(meta, vec!["state", "alpha_star", "epsilon", "epsilon_check", "agreement_digits"]);
            let mut weakest = f64::INFINITY;
            for n in 1..=states {
                let r = optimize_widening(&pencil, n, default_bracket(m.parity), &opts)?;
                let check = fine.eigenvalue(r.alpha_star, n - 1)?;
                let digits = agreement_digits(&r.epsilon, &check);
                weakest = weakest.min(digits);
                t.rows.push(vec![
                    Cell::Int(n as u64),
                    Cell::Num(r.alpha_star),
                    ctx.big(&r.epsilon),
                    ctx.big(&check),
                    Cell::Num(digits),
                ]);
            }
            let text = t.render(table_format);
            write_output(&text, cli.output.as_deref())?;
            if weakest < min_digits {
                return Err(CliError::Verification(format!("{weakest:.1} digits < required {min_digits}")));
            }
            return Ok(());
        }
    };
    write_output(&text, cli.output.as_deref())
}

fn write_output(text: &str, path: Option<&Path>) -> CliResult<()> {
    emit(text, path).map_err(|source| CliError::Io {
        path: path.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("<stdout>")),
        source,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dipole: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
