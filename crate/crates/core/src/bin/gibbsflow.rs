use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gibbsflow::analysis::{
    cluster_horizon, continuity_probe, dobrushin_evolved, parse_scan_config, rn_derivative_check,
    transition_scan, HorizonParams,
};
use gibbsflow::dynamics::{
    epsilon_from_delta, evolve_exact, gillespie_simulate, pca_flip_probability, pca_kernel,
    rates_from_interaction, RateSpec,
};
use gibbsflow::gibbs::{exact_measure, total_variation, Boundary, GibbsSpec};
use gibbsflow::interaction::Interaction;
use gibbsflow::lattice::{Configuration, Lattice, Region, SpecialConfig, Topology};
use gibbsflow::output::fmt_num;
use gibbsflow::twolayer::fields;
use gibbsflow::Error;

#[derive(Parser)]
#[command(
    name = "gibbsflow",
    version,
    about = "Gibbs measures under spin-flip dynamics"
)]
struct Cli {
    /// Worker threads for parallel scans (falls back to GIBBSFLOW_THREADS).
    #[arg(long, global = true, env = "GIBBSFLOW_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dynamical fields h1, h2, h12 on a time grid, as CSV.
    Fields {
        /// `start:stop:step` (inclusive) or a comma list.
        #[arg(long)]
        t_grid: String,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plus/minus boundary gap scan over a time grid, from a JSON config.
    GapScan {
        config: PathBuf,
        /// CSV destination; defaults to the config's output.csv, then stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Sidecar destination; defaults to output.sidecar, then `<csv>.json`.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Dobrushin certificate of the evolved Ising measure.
    Dobrushin {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
    },
    /// Small-time horizon of the cluster expansion.
    T0Estimate {
        #[command(flatten)]
        model: Model,
        /// Ising coupling of the dynamics' reversible measure (0: independent flips).
        #[arg(long, default_value_t = 0.0)]
        mu_beta: f64,
        #[arg(long, default_value_t = 0.0)]
        mu_h: f64,
        /// Flip-rate times of the table; `start:stop:step` or a comma list.
        #[arg(long)]
        times: Option<String>,
        #[arg(long)]
        connectivity: Option<usize>,
    },
    /// Three-way comparison of the Radon-Nikodym derivative on a small open box.
    RnCheck {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        volume: SmallBox,
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        t: f64,
        /// Flipped site (row-major index); defaults to the centre.
        #[arg(long)]
        x: Option<usize>,
        /// Cluster size of the truncated polymer form (unbiased independent flips only).
        #[arg(long)]
        k: Option<usize>,
        /// Also print boundary sensitivity against radius.
        #[arg(long)]
        continuity: bool,
        /// Print every state's three values.
        #[arg(long)]
        table: bool,
    },
    /// Discrete-time approximation against continuous time.
    PcaCheck {
        /// Steps per unit time, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "64,128,256")]
        n: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Chain length of the multi-site comparison.
        #[arg(long, default_value_t = 4)]
        sites: usize,
        /// Strength of the alignment rates of the multi-site comparison.
        #[arg(long, default_value_t = 0.5)]
        strength: f64,
    },
    /// Exact evolution of a finite-volume Ising law.
    Evolve {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        volume: SmallBox,
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gillespie trajectory as JSON lines.
    Simulate {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 8)]
        side: usize,
        #[arg(long, value_enum, default_value_t = Topo::Torus)]
        topology: Topo,
        #[arg(long, value_enum, default_value_t = Start::AllPlus)]
        start: Start,
        #[command(flatten)]
        rates: Rates,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Model {
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    h: f64,
    #[arg(long, default_value_t = 2)]
    d: usize,
}

#[derive(Args)]
struct SmallBox {
    /// Side of the open box (`side^d` sites).
    #[arg(long, default_value_t = 3)]
    side: usize,
}

#[derive(Args)]
struct Rates {
    /// Bias of independent flips, as `ν(-)/ν(+)` of their stationary law.
    #[arg(long, default_value_t = 1.0, conflicts_with_all = ["mu_beta", "mu_h"])]
    delta: f64,
    /// Use rates reversible for this Ising coupling instead of independent flips.
    #[arg(long)]
    mu_beta: Option<f64>,
    #[arg(long, requires = "mu_beta")]
    mu_h: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Topo {
    Open,
    Torus,
}

#[derive(Clone, Copy, ValueEnum)]
enum Start {
    AllPlus,
    AllMinus,
    Alternating,
}

enum Failure {
    Usage(String),
    Runtime(String),
    // reader went away, e.g. `| head`
    Closed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(e) => e.into(),
            Error::Csv(ref c) if matches!(c.kind(), csv::ErrorKind::Io(io) if io.kind() == io::ErrorKind::BrokenPipe) => {
                Failure::Closed
            }
            Error::Csv(_) | Error::Mismatch(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            Failure::Closed
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

macro_rules! out {
    ($($arg:tt)*) => {
        writeln!(io::stdout(), $($arg)*)?
    };
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match run(cli.command) {
        Ok(()) | Err(Failure::Closed) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Fields { t_grid, delta, out } => cmd_fields(&t_grid, delta, out.as_deref()),
        Command::GapScan {
            config,
            csv,
            sidecar,
        } => cmd_gap_scan(&config, csv, sidecar),
        Command::Dobrushin { model, t, delta } => {
            let c = dobrushin_evolved(&model.interaction()?, t, delta)?;
            let verdict = if c.certified_for_all_t {
                "satisfied"
            } else {
                "not satisfied"
            };
            out!("norm {:.3} {verdict}", c.report.norm);
            out!("norm_exact {}", fmt_num(c.report.norm));
            out!("certified_for_all_t {}", c.certified_for_all_t);
            Ok(())
        }
        Command::T0Estimate {
            model,
            mu_beta,
            mu_h,
            times,
            connectivity,
        } => {
            let mut p = HorizonParams {
                connectivity,
                ..HorizonParams::default()
            };
            if let Some(spec) = times {
                p.times = parse_grid(&spec)?;
            }
            let u_mu = Interaction::ising(mu_beta, mu_h, model.d)?;
            let hz = cluster_horizon(&model.interaction()?, &u_mu, &p)?;
            out!("C {}", fmt_num(hz.c));
            out!("connectivity {}", hz.connectivity);
            out!("t0 {}", fmt_num(hz.t0));
            out!("t0_grid {}", hz.t0_grid.map_or("none".into(), fmt_num));
            out!("criterion {}", hz.criterion);
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.write_record(["t", "delta_t", "epsilon_t", "alpha_t", "bound"])
                .map_err(Error::from)?;
            for r in &hz.rows {
                w.write_record([r.t, r.delta_t, r.epsilon_t, r.alpha_t, r.bound].map(fmt_num))
                    .map_err(Error::from)?;
            }
            w.flush()?;
            Ok(())
        }
        Command::RnCheck {
            model,
            volume,
            rates,
            t,
            x,
            k,
            continuity,
            table,
        } => {
            let (nu, r) = small_system(&model, &volume, &rates)?;
            let x = x.unwrap_or_else(|| nu.lattice.center());
            let c = rn_derivative_check(&nu, &r, t, x, k)?;
            let opt = |v: Option<f64>| v.map_or("na".into(), fmt_num);
            out!("sites {} x {x} t {}", nu.volume.len(), fmt_num(t));
            out!("max_direct_vs_weighted {}", fmt_num(c.max_ab));
            out!("max_direct_vs_cluster {}", opt(c.max_ac));
            out!("max_weighted_vs_cluster {}", opt(c.max_bc));
            if table {
                out!("state,direct,weighted,cluster");
                for i in 0..c.direct.len() {
                    let cl = c.cluster.as_ref().map(|v| v[i]);
                    out!(
                        "{i},{},{},{}",
                        fmt_num(c.direct[i]),
                        fmt_num(c.weighted[i]),
                        opt(cl)
                    );
                }
            }
            if continuity {
                out!("radius,sensitivity");
                for row in continuity_probe(&nu, &r, t, x)? {
                    out!("{},{}", row.radius, fmt_num(row.sensitivity));
                }
            }
            Ok(())
        }
        Command::PcaCheck {
            n,
            t,
            sites,
            strength,
        } => cmd_pca(&n, t, sites, strength),
        Command::Evolve {
            model,
            volume,
            rates,
            t,
            out,
        } => {
            let (nu, r) = small_system(&model, &volume, &rates)?;
            let m = exact_measure(&nu, gibbsflow::dynamics::DEFAULT_EVOLVE_CAP)?;
            let evolved = evolve_exact(m.probs(), &r, t)?;
            let mut w = csv::Writer::from_writer(sink(out.as_deref())?);
            w.write_record(["state", "spins", "initial", "evolved"])
                .map_err(Error::from)?;
            for (i, (&p0, &pt)) in m.probs().iter().zip(&evolved).enumerate() {
                let cfg = m.space().configuration(i);
                let spins: String = nu
                    .volume
                    .sites()
                    .iter()
                    .map(|&s| if cfg.get(s) > 0 { '+' } else { '-' })
                    .collect();
                w.write_record([i.to_string(), spins, fmt_num(p0), fmt_num(pt)])
                    .map_err(Error::from)?;
            }
            w.flush()?;
            eprintln!(
                "total_variation {}",
                fmt_num(total_variation(m.probs(), &evolved))
            );
            Ok(())
        }
        Command::Simulate {
            d,
            side,
            topology,
            start,
            rates,
            t,
            seed,
            out,
        } => {
            let topo = match topology {
                Topo::Open => Topology::Open,
                Topo::Torus => Topology::Torus,
            };
            let lat = Arc::new(Lattice::cube(d, side, topo)?);
            let special = match start {
                Start::AllPlus => SpecialConfig::AllPlus,
                Start::AllMinus => SpecialConfig::AllMinus,
                Start::Alternating => SpecialConfig::Alternating,
            };
            let initial = special.build(lat.clone())?;
            let r = rates.build(d, lat.clone(), Region::all(&lat))?;
            let traj = gillespie_simulate(&initial, &r, t, seed)?;
            let mut w = sink(out.as_deref())?;
            traj.write_json_lines(&mut w)?;
            w.flush()?;
            let last: Configuration = traj.final_state();
            eprintln!("final_magnetization {}", fmt_num(last.magnetization()));
            Ok(())
        }
    }
}

impl Model {
    fn interaction(&self) -> Result<Interaction, Error> {
        Interaction::ising(self.beta, self.h, self.d)
    }
}

impl Rates {
    fn build(&self, d: usize, lat: Arc<Lattice>, volume: Region) -> Result<RateSpec, Error> {
        match self.mu_beta {
            Some(b) => {
                let u = Interaction::ising(b, self.mu_h.unwrap_or(0.0), d)?;
                rates_from_interaction(&u, lat, volume, Boundary::Free)
            }
            None => {
                if !(self.delta > 0.0 && self.delta <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "--delta must lie in (0, 1], got {}",
                        self.delta
                    )));
                }
                RateSpec::product(lat, volume, epsilon_from_delta(self.delta))
            }
        }
    }
}

/// Ising measure with free boundary on an open box, and matching rates.
fn small_system(
    model: &Model,
    b: &SmallBox,
    rates: &Rates,
) -> Result<(GibbsSpec, RateSpec), Error> {
    let lat = Arc::new(Lattice::cube(model.d, b.side, Topology::Open)?);
    let nu = GibbsSpec::torus(model.interaction()?, lat.clone())?;
    let r = rates.build(model.d, lat.clone(), Region::all(&lat))?;
    Ok((nu, r))
}

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `start:stop:step` (inclusive, tolerant to rounding) or `a,b,c`.
fn parse_grid(spec: &str) -> std::result::Result<Vec<f64>, Failure> {
    let bad = |m: &str| Failure::Usage(format!("invalid grid {spec:?}: {m}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let (a, b, s) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if s.is_nan() || s <= 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(bad("step must be > 0 and bounds finite"));
        }
        let count = ((b - a) / s + 1e-9).floor();
        if count < 0.0 {
            return Err(bad("stop is below start"));
        }
        (0..=count as usize).map(|i| a + i as f64 * s).collect()
    } else if spec.trim().is_empty() {
        Vec::new()
    } else {
        spec.split(',')
            .map(num)
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    if grid.is_empty() {
        return Err(bad("empty grid"));
    }
    Ok(grid)
}

fn cmd_fields(spec: &str, delta: f64, out: Option<&Path>) -> Outcome {
    let grid = parse_grid(spec)?;
    let rows = grid
        .iter()
        .map(|&t| fields(t, delta))
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record(["t", "delta", "h1", "h2", "h12"])
        .map_err(Error::from)?;
    for f in rows {
        w.write_record([f.t, f.delta, f.h1, f.h2, f.h12].map(fmt_num))
            .map_err(Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_gap_scan(path: &Path, csv: Option<PathBuf>, sidecar: Option<PathBuf>) -> Outcome {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let cfg = parse_scan_config(&text)
        .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))?;
    cfg.validate()
        .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))?;
    let result = transition_scan(&cfg)?;
    let out = cfg.output.clone();
    let csv = csv.or_else(|| out.as_ref().and_then(|o| o.csv.clone()).map(PathBuf::from));
    let sidecar = sidecar
        .or_else(|| {
            out.as_ref()
                .and_then(|o| o.sidecar.clone())
                .map(PathBuf::from)
        })
        .or_else(|| {
            csv.as_ref()
                .map(|p| PathBuf::from(format!("{}.json", p.display())))
        });
    let mut w = sink(csv.as_deref())?;
    result.write_csv(&mut w)?;
    w.flush()?;
    if let Some(p) = sidecar {
        std::fs::write(p, result.sidecar_json()? + "\n")?;
    }
    match result.crossover {
        Some(t) => eprintln!("verdict: crossover at t = {}", fmt_num(t)),
        None => eprintln!("verdict: no significant gap at the largest side"),
    }
    if result.metadata.evidence_only {
        eprintln!("note: evidence only");
    }
    Ok(())
}

fn cmd_pca(ns: &[f64], t: f64, sites: usize, strength: f64) -> Outcome {
    if ns.is_empty() {
        return Err(Failure::Usage("--n needs at least one value".into()));
    }
    let lat = Arc::new(Lattice::new(vec![sites], Topology::Open)?);
    let r = RateSpec::alignment(lat.clone(), Region::all(&lat), strength, Boundary::Free)?;
    let n_states = 1usize << sites;
    let mut law = vec![0.0; n_states];
    law[0] = 1.0;
    let exact = evolve_exact(&law, &r, t)?;
    let limit = -0.5 * (-2.0 * t).exp_m1();
    out!("n,flip_probability,limit,flip_error,bound,tv_error");
    let mut last: Option<f64> = None;
    for &n in ns {
        let k = pca_kernel(&r, n)?;
        let tv = total_variation(&k.evolve_law(&law, k.steps_for(t))?, &exact);
        let p = pca_flip_probability(n, t);
        out!(
            "{},{},{},{},{},{}",
            fmt_num(n),
            fmt_num(p),
            fmt_num(limit),
            fmt_num((p - limit).abs()),
            fmt_num(2.0 / n),
            fmt_num(tv)
        );
        if let Some(prev) = last {
            eprintln!("tv_ratio {}", fmt_num(prev / tv));
        }
        last = Some(tv);
    }
    Ok(())
}
