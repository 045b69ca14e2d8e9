//! Command-line front end: argument and config-file parsing, and writing of
//! scenario outputs to per-scenario directories.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::scenarios::{self, ScenarioOutput};

#[derive(Debug, Parser)]
#[command(name = "unilab", version, about = "Finite-section experiments on universal operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run scenarios and write reports.
    Run(RunArgs),
    /// List registered scenarios and their parameters.
    List,
    /// Check scenario names and parameters without running.
    Validate(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "both" => Ok(Format::Both),
            other => Err(invalid("format", format!("expected json, csv or both, got {other:?}"))),
        }
    }

    fn json(self) -> bool {
        self != Format::Csv
    }

    fn csv(self) -> bool {
        self != Format::Json
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Scenario name; repeatable. `all` selects every registered scenario.
    #[arg(long = "scenario", short = 's')]
    pub scenario: Vec<String>,
    /// `key=value`, or `scenario.key=value` to target one scenario; repeatable.
    #[arg(long = "param", short = 'p')]
    pub param: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Comma-separated truncation sizes.
    #[arg(long, value_delimiter = ',')]
    pub ladder: Option<Vec<usize>>,
    /// Plain `key = value` file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scenarios run concurrently on this many threads.
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Fully resolved settings of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub scenarios: Vec<String>,
    pub params: Vec<(Option<String>, String, String)>,
    pub ladder: Option<Vec<usize>>,
    pub out: PathBuf,
    pub format: Format,
    pub jobs: usize,
}

impl Plan {
    /// Parameters that apply to `scenario`.
    pub fn params_for(&self, scenario: &str) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        for (scope, k, v) in &self.params {
            if scope.as_deref().map_or(true, |s| s == scenario) {
                m.insert(k.clone(), v.clone());
            }
        }
        m
    }
}

fn split_param(s: &str) -> Result<(Option<String>, String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| invalid("param", format!("expected key=value, got {s:?}")))?;
    let k = k.trim();
    let (scope, key) = match k.split_once('.') {
        Some((sc, key)) => (Some(sc.to_string()), key.to_string()),
        None => (None, k.to_string()),
    };
    if key.is_empty() {
        return Err(invalid("param", format!("empty key in {s:?}")));
    }
    Ok((scope, key, v.trim().to_string()))
}

fn parse_ladder(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| invalid("ladder", format!("{x:?} is not a size")))
        })
        .collect()
}

/// Reads a config file. Lines are `key = value`; `#` starts a comment;
/// `scenario` and `param` may repeat.
pub fn parse_config(text: &str) -> Result<RunArgs> {
    let mut a = RunArgs::default();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| invalid("config", format!("line {}: expected key = value", no + 1)))?;
        let v = v.trim();
        match k.trim() {
            "scenario" => a.scenario.push(v.to_string()),
            "param" => a.param.push(v.to_string()),
            "out" => a.out = Some(PathBuf::from(v)),
            "format" => a.format = Some(Format::parse(v)?),
            "ladder" => a.ladder = Some(parse_ladder(v)?),
            "jobs" => {
                a.jobs = Some(v.parse().map_err(|_| invalid("jobs", format!("{v:?} is not a count")))?);
            }
            other => {
                return Err(invalid("config", format!("line {}: unknown key {other:?}", no + 1)));
            }
        }
    }
    Ok(a)
}

/// Merges flags over the config file and expands `all`.
pub fn resolve(args: &RunArgs) -> Result<Plan> {
    let file = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| invalid("config", format!("{}: {e}", p.display())))?;
            parse_config(&text)?
        }
        None => RunArgs::default(),
    };
    let names = if args.scenario.is_empty() { &file.scenario } else { &args.scenario };
    let mut scenarios = Vec::new();
    for n in names {
        if n == "all" {
            scenarios.extend(scenarios::registry().iter().map(|d| d.name.to_string()));
        } else {
            scenarios::find(n)?;
            scenarios.push(n.clone());
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    scenarios.retain(|s| seen.insert(s.clone()));
    if scenarios.is_empty() {
        return Err(invalid("scenario", "no scenario selected"));
    }
    // file entries first so that flags win on repeated keys
    let mut params = Vec::new();
    for s in file.param.iter().chain(&args.param) {
        let p = split_param(s)?;
        if let Some(sc) = &p.0 {
            scenarios::find(sc)?;
        }
        params.push(p);
    }
    let jobs = args.jobs.or(file.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(invalid("jobs", "need at least one job"));
    }
    Ok(Plan {
        scenarios,
        params,
        ladder: args.ladder.clone().or(file.ladder),
        out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        format: args.format.or(file.format).unwrap_or(Format::Both),
        jobs,
    })
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}

/// Writes `summary.json`, one JSON file per report and one CSV per table
/// into `dir`. Returns the paths written, in order.
pub fn write_output(out: &ScenarioOutput, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| io_err(&p, e))?;
        written.push(p);
        Ok(())
    };
    put("summary.json".into(), (out.summary_json() + "\n").into_bytes())?;
    if format.json() {
        for r in &out.reports {
            put(format!("report-{}.json", r.name), (r.report.to_json() + "\n").into_bytes())?;
        }
    }
    if format.csv() {
        for t in &out.tables {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            put(format!("{}.csv", t.name), buf)?;
        }
    }
    Ok(written)
}

/// Runs every scenario of the plan, `jobs` at a time.
pub fn execute(plan: &Plan) -> Result<Vec<(String, Vec<PathBuf>)>> {
    // validate everything before any work starts
    for s in &plan.scenarios {
        scenarios::validate(s, &plan.params_for(s), plan.ladder.as_deref())?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| invalid("jobs", e.to_string()))?;
    pool.install(|| {
        plan.scenarios
            .par_iter()
            .map(|s| {
                let out = scenarios::run(s, &plan.params_for(s), plan.ladder.as_deref())?;
                let files = write_output(&out, &plan.out.join(s), plan.format)?;
                Ok((s.clone(), files))
            })
            .collect()
    })
}

pub fn list_text() -> String {
    let mut s = String::new();
    for d in scenarios::registry() {
        s.push_str(&format!("{:<26} {}\n", d.name, d.summary));
        if !d.ladder.is_empty() {
            s.push_str(&format!("{:<28}ladder {:?}\n", "", d.ladder));
        }
        for p in d.params {
            s.push_str(&format!("{:<28}{} = {} ({})\n", "", p.key, p.default, p.help));
        }
    }
    s.push_str("every scenario also takes tol_rel, sigma_floor and residual\n");
    s
}

/// Entry point shared by the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let res = match cli.command {
        Command::List => {
            print!("{}", list_text());
            Ok(())
        }
        Command::Validate(args) => resolve(&args).and_then(|plan| {
            for s in &plan.scenarios {
                scenarios::validate(s, &plan.params_for(s), plan.ladder.as_deref())?;
                println!("{s}: ok");
            }
            Ok(())
        }),
        Command::Run(args) => resolve(&args).and_then(|plan| {
            for (s, files) in execute(&plan)? {
                println!("{s}: {} files in {}", files.len(), plan.out.join(&s).display());
            }
            Ok(())
        }),
    };
    match res {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_and_flags_merge() {
        let a = parse_config("# comment\nscenario = annulus\nparam = r=0.3\nformat = csv\nladder = 4,8,16\n").unwrap();
        assert_eq!(a.scenario, vec!["annulus"]);
        assert_eq!(a.format, Some(Format::Csv));
        assert_eq!(a.ladder, Some(vec![4, 8, 16]));
        assert!(parse_config("bogus = 1").is_err());
        assert!(parse_config("no equals sign").is_err());
    }

    #[test]
    fn scoped_params() {
        let plan = Plan {
            scenarios: vec!["annulus".into()],
            params: vec![
                (None, "r".into(), "0.2".into()),
                (Some("annulus".into()), "r".into(), "0.4".into()),
                (Some("ex46-common-zeros".into()), "r".into(), "0.9".into()),
            ],
            ladder: None,
            out: PathBuf::from("x"),
            format: Format::Both,
            jobs: 1,
        };
        assert_eq!(plan.params_for("annulus")["r"], "0.4");
        assert!(split_param("novalue").is_err());
    }
}
