//! Command-line front end.
//!
//! Exit codes: `0` success or a passing verdict, `1` a failing verdict or a
//! violated hypothesis, `2` invalid input.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::code_tree::{
    attractor_points, detect_necks, sample_graph_sequence, sample_measure_points, word_count, TreeError,
    WeightedPoint,
};
use crate::dimension::{
    auto_window, box_dimension, check_hypothesis, dimension_report, pressure_curve_with, DimensionError,
    PressureConfig,
};
use crate::fs::{check_cm, check_cs, criterion_cscm, iterate_closure, FsError, Verdict, Witness};
use crate::io::{
    parse_system_file, read_points_csv, verdict_json, write_gaps_csv, write_points_csv, write_pressure_csv,
    SpecError, SystemSpec,
};

#[derive(Debug, Parser)]
#[command(name = "affdim", version, about = "Affinity dimensions of affine code-tree fractals")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Realized tree depth.
    #[arg(long, global = true, default_value_t = 8)]
    pub depth: usize,
    /// Level used for partition sums.
    #[arg(long, global = true, default_value_t = 6)]
    pub k: usize,
    #[arg(long, global = true, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (all cores when absent).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check C(s) for one family, or for its iterates up to `--iterate`.
    CheckFs {
        system: PathBuf,
        #[arg(long)]
        s: f64,
        /// Family label or index.
        #[arg(long, default_value = "0")]
        family: String,
        #[arg(long)]
        iterate: Option<usize>,
    },
    /// Run the two-map eigenvalue/minor criterion on maps `I J` of a family.
    Certify {
        system: PathBuf,
        #[arg(long, default_value = "0")]
        family: String,
        #[arg(long, num_args = 2, value_names = ["I", "J"], default_values_t = [0, 1])]
        maps: Vec<usize>,
    },
    /// Pressure curve `s,p,diag` on an evenly spaced grid.
    Pressure {
        system: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        s_min: f64,
        /// Defaults to the ambient dimension.
        #[arg(long)]
        s_max: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        s_step: f64,
    },
    /// Affinity dimension and box-counting cross-check as JSON.
    Dim { system: PathBuf },
    /// Sample a label sequence; neck gaps as `index,gap`, statistics on stderr.
    Simulate {
        system: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        length: usize,
        #[arg(long, default_value_t = 1)]
        thinning: usize,
    },
    /// Box-counting dimension of a point cloud CSV.
    Boxdim {
        points: PathBuf,
        #[arg(long)]
        j_min: Option<u32>,
        #[arg(long)]
        j_max: Option<u32>,
    },
    /// Attractor points `x1,…,xd,weight` at level `--depth`, or `--count`
    /// draws from the measure on level-`N_m` cylinders.
    Points {
        system: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 1)]
        m: usize,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Hypothesis(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Hypothesis(_) => 1,
        }
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<FsError> for Failure {
    fn from(e: FsError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<TreeError> for Failure {
    fn from(e: TreeError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<DimensionError> for Failure {
    fn from(e: DimensionError) -> Self {
        match e {
            DimensionError::Hypothesis { .. } => Failure::Hypothesis(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(code) => code,
        Err(f) => {
            let (Failure::Input(m) | Failure::Hypothesis(m)) = &f;
            eprintln!("error: {m}");
            f.code()
        }
    }
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_json<T: Serialize>(path: &Option<PathBuf>, value: &T) -> io::Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}

fn family_index(spec: &SystemSpec, key: &str) -> Result<usize, Failure> {
    spec.family_index(key)
        .ok_or_else(|| Failure::Input(format!("--family: no family '{key}'")))
}

fn load(path: &Path) -> Result<SystemSpec, Failure> {
    Ok(parse_system_file(path)?)
}

fn execute(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::CheckFs {
            system,
            s,
            family,
            iterate,
        } => {
            let spec = load(system)?;
            let mut fam = spec.linear_family(family_index(&spec, family)?)?;
            if let Some(depth) = iterate {
                fam = iterate_closure(&fam, *depth)?;
            }
            let verdict = if s.fract() == 0.0 && *s >= 0.0 {
                check_cm(&fam, *s as usize, cli.samples, cli.tol, cli.seed)?
            } else {
                check_cs(&fam, *s, cli.samples, cli.tol, cli.seed)?
            };
            write_json(&cli.out, &verdict_json(&verdict))?;
            if let Verdict::Fail(e) = &verdict {
                match &e.witness {
                    Some(Witness::Pair { v, w }) => eprintln!("Fail: witness ({v}, {w})"),
                    Some(Witness::Quadruple { v, w, v_ext, w_ext }) => {
                        eprintln!("Fail: witness ({v}, {w}; {v_ext}, {w_ext})")
                    }
                    None => eprintln!("Fail: {:?}", e.cause),
                }
                return Ok(1);
            }
            Ok(0)
        }
        Command::Certify { system, family, maps } => {
            let spec = load(system)?;
            let fam = spec.linear_family(family_index(&spec, family)?)?;
            let pick = |i: usize| {
                fam.maps()
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Failure::Input(format!("--maps: family has {} maps, no index {i}", fam.len())))
            };
            let report = criterion_cscm(&pick(maps[0])?, &pick(maps[1])?, cli.tol)?;
            write_json(&cli.out, &report)?;
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Pressure { system, s_min, s_max, s_step } => {
            let spec = load(system)?;
            let s_max = s_max.unwrap_or(spec.d as f64);
            if !(*s_step > 0.0) || !(s_max >= *s_min) || *s_min < 0.0 {
                return Err(Failure::Input("need 0 <= s_min <= s_max and s_step > 0".into()));
            }
            let n = ((s_max - s_min) / s_step + 1e-9).floor() as usize;
            let grid: Vec<f64> = (0..=n).map(|i| s_min + i as f64 * s_step).collect();
            let tree = spec.build_tree(cli.depth.max(cli.k), cli.seed, 1)?;
            let cfg = PressureConfig {
                samples: cli.samples,
                seed: cli.seed,
                ..PressureConfig::default()
            };
            let curve = pressure_curve_with(&tree, &grid, cli.k, &cfg)?;
            let mut w = output(&cli.out)?;
            write_pressure_csv(&mut w, &curve)?;
            w.flush()?;
            Ok(0)
        }
        Command::Dim { system } => {
            let spec = load(system)?;
            check_hypothesis(spec.bounds.sigma_lo, spec.bounds.sigma_hi)?;
            let tree = spec.build_tree(cli.depth.max(cli.k), cli.seed, 1)?;
            let report = dimension_report(&tree, cli.k, cli.depth, cli.seed)?;
            if let Some(note) = &report.note {
                eprintln!("warning: {note}");
            }
            write_json(&cli.out, &report)?;
            Ok(0)
        }
        Command::Simulate {
            system,
            length,
            thinning,
        } => {
            let spec = load(system)?;
            let assignment = spec.translation_assignment(cli.seed);
            let gs = spec
                .graph_system(&assignment)?
                .ok_or_else(|| Failure::Input("simulate needs a document with a graph".into()))?;
            if *length == 0 {
                return Err(Failure::Input("--length must be at least 1".into()));
            }
            let g = sample_graph_sequence(&gs, cli.seed, *length);
            let necks = detect_necks(&g, &gs, *thinning)?;
            let gaps: Vec<usize> = necks
                .iter()
                .scan(0, |prev, &n| {
                    let gap = n - *prev;
                    *prev = n;
                    Some(gap)
                })
                .collect();
            let depth = cli.depth.min(*length);
            let tree = crate::code_tree::build_code_tree(&gs, &g, gs.v0(), depth, *thinning)?;
            let mean_gap = if gaps.is_empty() {
                None
            } else {
                Some(gaps.iter().sum::<usize>() as f64 / gaps.len() as f64)
            };
            let stats = json!({
                "length": length,
                "thinning": thinning,
                "neck_probability": gs.neck_probability(),
                "necks": necks.len(),
                "mean_gap": mean_gap,
                "tree_depth": depth,
                "tree_widths": tree.level_widths(),
                "tree_necks": tree.necks(),
                "necks_verified": tree.verify_necks(),
                "words_at_depth": word_count(&tree, depth).to_string(),
            });
            eprintln!("{stats}");
            let mut w = output(&cli.out)?;
            write_gaps_csv(&mut w, &gaps)?;
            w.flush()?;
            Ok(0)
        }
        Command::Boxdim { points, j_min, j_max } => {
            let file = File::open(points).map_err(|e| Failure::Input(format!("{}: {e}", points.display())))?;
            let pts = read_points_csv(BufReader::new(file))?;
            let (lo, hi) = match (j_min, j_max) {
                (Some(a), Some(b)) => (*a, *b),
                _ => {
                    let (a, b) = auto_window(&pts, 0.0)?;
                    (j_min.unwrap_or(a), j_max.unwrap_or(b))
                }
            };
            let fit = box_dimension(&pts, lo, hi)?;
            write_json(&cli.out, &fit)?;
            Ok(0)
        }
        Command::Points { system, s, count, m } => {
            let spec = load(system)?;
            let tree = spec.build_tree(cli.depth, cli.seed, 1)?;
            let points: Vec<WeightedPoint> = match count {
                Some(n) => sample_measure_points(&tree, *m, *s, *n, cli.seed)?
                    .into_iter()
                    .map(|d| WeightedPoint {
                        point: d.point,
                        weight: d.weight,
                    })
                    .collect(),
                None => attractor_points(&tree, cli.depth, *s)?,
            };
            let mut w = output(&cli.out)?;
            write_points_csv(&mut w, &points)?;
            w.flush()?;
            Ok(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_flags_anywhere() {
        let cli = Cli::try_parse_from(["affdim", "pressure", "sys.json", "--k", "4", "--seed", "3"]).unwrap();
        assert_eq!(cli.k, 4);
        assert_eq!(cli.seed, 3);
        let cli = Cli::try_parse_from(["affdim", "--threads", "2", "certify", "x.json", "--maps", "1", "2"]).unwrap();
        assert_eq!(cli.threads, Some(2));
        assert!(matches!(cli.command, Command::Certify { ref maps, .. } if maps == &[1, 2]));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["affdim", "nonsense"]), 2);
        assert_eq!(run(["affdim", "dim", "/no/such/file.json"]), 2);
        assert_eq!(run(["affdim", "--threads", "0", "dim", "x.json"]), 2);
    }
}
