use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use robust_transport::energy::{eulerian_energy, lagrangian_energy};
use robust_transport::examples::{build_example, verify_phenomenon, ExampleName, ExampleParams};
use robust_transport::model::{
    check_eulerian_admissible, check_lagrangian_admissible, instance_to_json, load_instance,
    validate_instance, Competitor, Instance, FORMAT_VERSION,
};
use robust_transport::render::render_svg;
use robust_transport::solver::{
    brute_force_oracle, solve_eulerian, solve_lagrangian, Model, SolveError, SolveOptions,
    SolveReport,
};

const EXIT_USAGE: u8 = 1;
const EXIT_FAILURE: u8 = 2;
const EXIT_SIZE_GUARD: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "rbt",
    version,
    about = "Robust branched transport on geometric graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the local search and write a solve report.
    Solve(SolveArgs),
    /// Exhaustive search on a small instance.
    Oracle(SolveArgs),
    /// Print findings about an instance.
    Validate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Write one of the built-in example instances.
    Example {
        #[command(flatten)]
        params: ExampleArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Check the phenomenon a built-in example exhibits.
    Verify {
        #[command(flatten)]
        params: ExampleArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a competitor, or the competitor of a report, on an instance.
    Energy {
        #[arg(long)]
        instance: PathBuf,
        /// Competitor or solve report file.
        competitor: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw an instance and, optionally, a competitor or report as SVG.
    Plot {
        #[arg(long)]
        instance: PathBuf,
        /// Competitor or solve report file.
        competitor: Option<PathBuf>,
        #[arg(long)]
        svg: PathBuf,
    },
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Mass quantum, as a decimal or a fraction like 1/8.
    #[arg(long, value_parser = parse_rational, default_value = "1/8")]
    delta: f64,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_parser = parse_model, default_value = "eulerian")]
    model: Model,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExampleArgs {
    #[arg(long, value_parser = parse_example)]
    name: ExampleName,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    loops: Option<usize>,
    #[arg(long, value_parser = parse_rational)]
    epsilon: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    payoff: Option<f64>,
}

impl ExampleArgs {
    fn params(&self) -> ExampleParams {
        let mut p = ExampleParams::new(self.name);
        if let Some(levels) = self.levels {
            p.levels = levels;
        }
        if let Some(loops) = self.loops {
            p.loops = loops;
        }
        if let Some(eps) = self.epsilon {
            p.epsilon = eps;
        }
        if let Some(beta) = self.beta {
            p.beta = beta;
        }
        p.payoff = self.payoff;
        p
    }
}

impl SearchArgs {
    fn options(&self, model: Model) -> SolveOptions {
        SolveOptions {
            model,
            seed: self.seed,
            max_iters: self.max_iters,
            restarts: self.restarts,
            delta: self.delta,
            ..SolveOptions::default()
        }
    }
}

fn parse_rational(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in `{s}`"))?;
            let d: f64 = d
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in `{s}`"))?;
            if d == 0.0 {
                return Err(format!("zero denominator in `{s}`"));
            }
            n / d
        }
        None => s
            .trim()
            .parse()
            .map_err(|_| format!("`{s}` is not a number"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.parse()
}

fn parse_example(s: &str) -> Result<ExampleName, String> {
    s.parse()
        .map_err(|e: robust_transport::examples::ExampleError| e.to_string())
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<SolveError>() {
            Some(SolveError::SizeGuard(_)) => EXIT_SIZE_GUARD,
            _ => EXIT_FAILURE,
        };
        Failure { code, error }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Writes through a sibling temporary file so readers never see a partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| anyhow!("{} is not a file path", path.display()))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("cannot move {} into place", path.display()))
}

fn load(path: &Path) -> Result<Instance> {
    load_instance(&read(path)?).with_context(|| format!("invalid instance {}", path.display()))
}

/// Accepts a bare competitor or any document with a `competitor` field.
fn load_competitor(path: &Path) -> Result<Competitor> {
    let mut value: Value = serde_json::from_str(&read(path)?)
        .with_context(|| format!("{} is not JSON", path.display()))?;
    if let Some(inner) = value.get_mut("competitor") {
        value = inner.take();
    }
    serde_json::from_value(value).with_context(|| format!("{} holds no competitor", path.display()))
}

/// Pretty JSON of `value` with a `"format"` key added.
fn versioned(value: Value) -> Result<String> {
    let mut map = serde_json::Map::new();
    map.insert("format".into(), FORMAT_VERSION.into());
    match value {
        Value::Object(fields) => {
            for (k, v) in fields {
                if k != "format" {
                    map.insert(k, v);
                }
            }
        }
        other => {
            map.insert("value".into(), other);
        }
    }
    Ok(serde_json::to_string_pretty(&Value::Object(map))? + "\n")
}

fn solve(args: &SolveArgs, oracle: bool) -> Result<(), Failure> {
    let inst = load(&args.instance)?;
    let opts = args.search.options(args.model);
    let report: SolveReport = if oracle {
        brute_force_oracle(&inst, &opts).map_err(anyhow::Error::from)?
    } else if args.model.is_eulerian() {
        solve_eulerian(&inst, &opts).map_err(anyhow::Error::from)?
    } else {
        solve_lagrangian(&inst, &opts).map_err(anyhow::Error::from)?
    };
    write_atomic(&args.out, &(report.to_json() + "\n"))?;
    if let Some(svg) = &args.svg {
        write_atomic(
            svg,
            &render_svg(&inst, Some(&report.competitor)).map_err(anyhow::Error::from)?,
        )?;
    }
    eprintln!(
        "energy {} after {} iterations ({:.3}s)",
        report.energy.energy,
        report.iterations,
        report.wall_time.as_secs_f64()
    );
    if !report.admissibility.is_admissible() {
        return Err(anyhow!(
            "result is not admissible: {:?}",
            report.admissibility.first_violation
        )
        .into());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve(args) => solve(&args, false),
        Command::Oracle(args) => solve(&args, true),
        Command::Validate { instance } => {
            let report = validate_instance(&load(&instance)?);
            print!(
                "{}",
                versioned(serde_json::to_value(&report).map_err(anyhow::Error::from)?)?
            );
            if report.ok {
                Ok(())
            } else {
                Err(anyhow!("instance failed validation").into())
            }
        }
        Command::Example { params, out, svg } => {
            let inst = build_example(&params.params()).map_err(anyhow::Error::from)?;
            write_atomic(&out, &(instance_to_json(&inst) + "\n"))?;
            if let Some(svg) = svg {
                write_atomic(&svg, &render_svg(&inst, None).map_err(anyhow::Error::from)?)?;
            }
            Ok(())
        }
        Command::Verify {
            params,
            search,
            out,
        } => {
            let opts = search.options(Model::Eulerian);
            let report = verify_phenomenon(&params.params(), &opts).map_err(anyhow::Error::from)?;
            let json = report.to_json() + "\n";
            match out {
                Some(path) => write_atomic(&path, &json)?,
                None => print!("{json}"),
            }
            if report.holds {
                Ok(())
            } else {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| !c.holds)
                    .map(|c| c.name.as_str())
                    .collect();
                Err(anyhow!("phenomenon does not hold: {}", failed.join(", ")).into())
            }
        }
        Command::Energy {
            instance,
            competitor,
            out,
        } => {
            let inst = load(&instance)?;
            let c = load_competitor(&competitor)?;
            let (energy, admissibility) = match &c {
                Competitor::Eulerian(e) => (
                    eulerian_energy(&inst, e),
                    check_eulerian_admissible(&inst, e),
                ),
                Competitor::Lagrangian(l) => (
                    lagrangian_energy(&inst, l),
                    check_lagrangian_admissible(&inst, l),
                ),
            };
            let energy = energy.map_err(anyhow::Error::from)?;
            let admissibility = admissibility.map_err(anyhow::Error::from)?;
            let admissible = admissibility.is_admissible();
            let json =
                versioned(serde_json::json!({ "energy": energy, "admissibility": admissibility }))?;
            match out {
                Some(path) => write_atomic(&path, &json)?,
                None => print!("{json}"),
            }
            if admissible {
                Ok(())
            } else {
                Err(anyhow!("competitor is not admissible").into())
            }
        }
        Command::Plot {
            instance,
            competitor,
            svg,
        } => {
            let inst = load(&instance)?;
            let c = competitor.as_deref().map(load_competitor).transpose()?;
            write_atomic(
                &svg,
                &render_svg(&inst, c.as_ref()).map_err(anyhow::Error::from)?,
            )?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("1/8"), Ok(0.125));
        assert_eq!(parse_rational("0.5"), Ok(0.5));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn versioned_adds_format() {
        let s = versioned(serde_json::json!({"b": 1, "a": 2})).unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["format"], 1);
        assert_eq!(v["a"], 2);
    }
}
