//! Command-line flags, the optional key=value config file, and validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use omega_lab_core::averages::{MainPart, TestFunction};
use omega_lab_core::hardy::HardyExpr;
use omega_lab_core::sieve::{SyntheticScale, ThetaKind};
use omega_lab_core::weights::WeightExpr;
use omega_lab_core::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Sieve,
    Avg,
    Compare,
    Gauss,
    Classify,
    Ud,
    Probe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Flags as typed on the command line. Every field is optional so that a
/// config file can fill the gaps; flags win over the file.
#[derive(Parser, Debug, Default, Clone)]
#[command(name = "omega-lab", version, about = "Averages of functions of prime-factor counts, and equidistribution probes")]
pub struct Args {
    /// sieve | avg | compare | gauss | classify | ud | probe
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// key = value file; keys are the long flag names
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// big-omega | small-omega | omega-squarefree | synthetic
    #[arg(long, visible_alias = "kind")]
    pub theta: Option<String>,
    #[arg(long)]
    pub n: Option<u64>,
    /// Comma-separated, strictly increasing list of N
    #[arg(long)]
    pub grid: Option<String>,
    /// Scale L, e.g. "floor(sqrt(x))"
    #[arg(long = "L")]
    pub l: Option<String>,
    /// Weight W, e.g. "log"
    #[arg(long)]
    pub w: Option<String>,
    /// Test function, e.g. "exp(phi*x)" or "residue(3,0)"
    #[arg(long)]
    pub f: Option<String>,
    /// Hardy-field expression, e.g. "x^1.5"
    #[arg(long)]
    pub h: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<i64>,
    /// Interval length rule s(N) for interval scans
    #[arg(long)]
    pub s: Option<String>,
    /// cesaro | weighted | bin | bin2
    #[arg(long)]
    pub scheme: Option<String>,
    /// cesaro | log | loglog
    #[arg(long)]
    pub part: Option<String>,
    /// Sub-mode: gauss theta|binomial, ud weyl|interval|discrepancy, probe case1|case3|case4|boos
    #[arg(long)]
    pub mode: Option<String>,
    /// raw | theta
    #[arg(long)]
    pub source: Option<String>,
    /// per-index | frozen (synthetic tables)
    #[arg(long)]
    pub scale: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Append an elapsed_s column
    #[arg(long)]
    pub timing: bool,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

/// Reads "key = value" lines; '#' starts a comment.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim().trim_matches('"').to_string();
        if out.insert(key.clone(), value).is_some() {
            return Err(bad(format!("{}:{}: duplicate key '{key}'", path.display(), i + 1)));
        }
    }
    Ok(out)
}

impl Args {
    /// Fills unset fields from the config file named by --config.
    pub fn merge_config_file(mut self) -> Result<Self> {
        if let Some(path) = self.config.clone() {
            let map = read_config_file(&path)?;
            self.merge(&map)?;
        }
        Ok(self)
    }

    pub fn merge(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| bad(format!("config key '{key}': cannot parse '{v}'")))
        }
        fn set<T>(slot: &mut Option<T>, value: T) {
            if slot.is_none() {
                *slot = Some(value);
            }
        }
        for (key, v) in map {
            match key.as_str() {
                "command" => set(&mut self.command, Command::from_str(v, true).map_err(|_| bad(format!("unknown command '{v}'")))?),
                "theta" | "kind" => set(&mut self.theta, v.clone()),
                "n" => set(&mut self.n, num(key, v)?),
                "grid" => set(&mut self.grid, v.clone()),
                "L" | "l" => set(&mut self.l, v.clone()),
                "w" => set(&mut self.w, v.clone()),
                "f" => set(&mut self.f, v.clone()),
                "h" => set(&mut self.h, v.clone()),
                "k" => set(&mut self.k, num(key, v)?),
                "s" => set(&mut self.s, v.clone()),
                "scheme" => set(&mut self.scheme, v.clone()),
                "part" => set(&mut self.part, v.clone()),
                "mode" => set(&mut self.mode, v.clone()),
                "source" => set(&mut self.source, v.clone()),
                "scale" => set(&mut self.scale, v.clone()),
                "output" => set(&mut self.output, PathBuf::from(v)),
                "format" => set(&mut self.format, Format::from_str(v, true).map_err(|_| bad(format!("unknown format '{v}'")))?),
                "cache-dir" => set(&mut self.cache_dir, PathBuf::from(v)),
                "threads" => set(&mut self.threads, num(key, v)?),
                "timing" => self.timing |= num::<bool>(key, v)?,
                other => return Err(bad(format!("unknown config key '{other}'"))),
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Cesaro,
    Weighted,
    Bin,
    Bin2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Raw,
    Theta,
}

/// A validated experiment: every expression parsed, the grid checked.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub command: Command,
    pub theta: ThetaKind,
    /// Empty when N is to be taken from the cache.
    pub grid: Vec<u64>,
    pub l: Option<WeightExpr>,
    pub w: Option<WeightExpr>,
    pub f: Option<TestFunction>,
    pub f_text: Option<String>,
    pub h: Option<HardyExpr>,
    pub k: i64,
    pub s: Option<WeightExpr>,
    pub scheme: Scheme,
    pub part: Option<MainPart>,
    pub mode: Option<String>,
    pub source: Option<Source>,
    pub scale: SyntheticScale,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub cache_dir: PathBuf,
    pub threads: Option<usize>,
    pub timing: bool,
}

pub const CACHE_ENV: &str = "OMEGA_LAB_CACHE";

fn parse_grid(text: &str) -> Result<Vec<u64>> {
    let grid = text
        .split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<u64>()
                .or_else(|_| t.parse::<f64>().ok().filter(|v| v.fract() == 0.0 && *v >= 1.0).map(|v| v as u64).ok_or(()))
                .map_err(|_| bad(format!("grid entry '{t}' is not a positive integer")))
        })
        .collect::<Result<Vec<u64>>>()?;
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("grid must be strictly increasing"));
    }
    if grid.contains(&0) {
        return Err(bad("grid entries must be positive"));
    }
    Ok(grid)
}

impl ExperimentConfig {
    /// `env_cache` is the value of OMEGA_LAB_CACHE, if set.
    pub fn from_args(args: Args, env_cache: Option<PathBuf>) -> Result<Self> {
        let command = args.command.ok_or_else(|| bad("no command given (sieve, avg, compare, gauss, classify, ud, probe)"))?;
        let theta = match &args.theta {
            Some(t) => t.parse()?,
            None => ThetaKind::BigOmega,
        };
        let grid = match (&args.grid, args.n) {
            (Some(_), Some(_)) => return Err(bad("give either --n or --grid, not both")),
            (Some(g), None) => parse_grid(g)?,
            (None, Some(0)) => return Err(bad("N must be positive")),
            (None, Some(n)) => vec![n],
            (None, None) => Vec::new(),
        };
        let l = args.l.as_deref().map(str::parse::<WeightExpr>).transpose()?;
        let w = args.w.as_deref().map(str::parse::<WeightExpr>).transpose()?;
        let s = args.s.as_deref().map(str::parse::<WeightExpr>).transpose()?;
        let f = args.f.as_deref().map(str::parse::<TestFunction>).transpose()?;
        let h = args.h.as_deref().map(str::parse::<HardyExpr>).transpose()?;
        let k = args.k.unwrap_or(1);
        if k == 0 {
            return Err(bad("frequency k must be nonzero"));
        }
        let scheme = match args.scheme.as_deref().map(str::trim) {
            None | Some("cesaro") => Scheme::Cesaro,
            Some("weighted") => Scheme::Weighted,
            Some("bin") => Scheme::Bin,
            Some("bin2") | Some("2bin") => Scheme::Bin2,
            Some(other) => return Err(bad(format!("unknown scheme '{other}'"))),
        };
        if scheme == Scheme::Weighted && w.is_none() {
            return Err(bad("scheme 'weighted' needs --w"));
        }
        let part = args.part.as_deref().map(str::parse::<MainPart>).transpose()?;
        let source = match args.source.as_deref().map(str::trim) {
            None => None,
            Some("raw") => Some(Source::Raw),
            Some("theta") => Some(Source::Theta),
            Some(other) => return Err(bad(format!("unknown source '{other}'"))),
        };
        let scale = match args.scale.as_deref().map(str::trim) {
            None | Some("per-index") => SyntheticScale::PerIndex,
            Some("frozen") => SyntheticScale::Frozen,
            Some(other) => return Err(bad(format!("unknown synthetic scale '{other}'"))),
        };
        if args.threads == Some(0) {
            return Err(bad("thread count must be positive"));
        }
        let cache_dir = args.cache_dir.or(env_cache).unwrap_or_else(|| PathBuf::from(".cache"));
        Ok(ExperimentConfig {
            command,
            theta,
            grid,
            l,
            w,
            f,
            f_text: args.f,
            h,
            k,
            s,
            scheme,
            part,
            mode: args.mode.map(|m| m.trim().to_string()),
            source,
            scale,
            output: args.output,
            format: args.format.unwrap_or(Format::Csv),
            cache_dir,
            threads: args.threads,
            timing: args.timing,
        })
    }
}
