use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zoll_core::catalog::{catalog, make_example, resolve};
use zoll_core::geometry::ExampleRef;
use zoll_core::run::{run, theorem_matrix, RunManifest, Stage, USAGE_EXIT};
use zoll_core::verify::ZollReport;

#[derive(Parser)]
#[command(
    name = "zoll",
    version,
    about = "Certify and analyze manifolds whose orthogonal boundary geodesics all return orthogonally"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the first-return sweep and decide the verdict.
    Certify(RunArgs),
    /// Certify, then run the analyses requested by the manifest (all by default).
    Analyze(RunArgs),
    /// List catalog examples, or print the manifold manifest of one.
    Catalog {
        name: Option<String>,
        /// Example parameter `key=value` (value parsed as JSON when possible).
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// One pass/fail row per (example, check).
    Matrix {
        /// Manifest file holding one manifest or a JSON array; repeatable.
        #[arg(long = "manifest", value_name = "PATH")]
        manifests: Vec<PathBuf>,
        /// Add every catalog example with default parameters.
        #[arg(long)]
        catalog: bool,
        /// Write matrix.json here.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH", conflicts_with = "example")]
    manifest: Option<PathBuf>,
    /// Catalog example name, instead of a manifest file.
    #[arg(long, value_name = "NAME")]
    example: Option<String>,
    #[arg(long = "param", value_name = "KEY=VALUE", requires = "example")]
    params: Vec<String>,
    /// Directory for report.json and the CSV artifacts.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, value_name = "N")]
    launches: Option<usize>,
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    #[arg(long = "tol-len", value_name = "X")]
    tol_len: Option<f64>,
    #[arg(long = "tol-orth", value_name = "X")]
    tol_orth: Option<f64>,
}

impl Overrides {
    fn apply(&self, m: &mut RunManifest) {
        if let Some(n) = self.launches {
            m.launches = n;
        }
        if let Some(s) = self.seed {
            m.seed = s;
        }
        if let Some(x) = self.tol_len {
            m.tolerances.length = x;
        }
        if let Some(x) = self.tol_orth {
            m.tolerances.orthogonality = x;
        }
    }
}

fn example_ref(name: &str, params: &[String]) -> Result<ExampleRef, String> {
    let mut ex = ExampleRef::new(name);
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| format!("parameter `{p}` is not KEY=VALUE"))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()));
        ex.params.insert(k.to_string(), value);
    }
    Ok(ex)
}

fn load(args: &RunArgs) -> Result<RunManifest, String> {
    let mut m = match (&args.manifest, &args.example) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            RunManifest::from_json(&text).map_err(|e| e.to_string())?
        }
        (None, Some(name)) => RunManifest::example(example_ref(name, &args.params)?),
        (None, None) => return Err("give --manifest <path> or --example <name>".into()),
    };
    args.overrides.apply(&mut m);
    Ok(m)
}

fn print_report(r: &ZollReport) {
    println!("{} (n = {}): {:?}", r.name, r.dimension, r.verdict);
    println!(
        "  L = {:.12}  relative spread {:.3e}  max δ⊥ {:.3e}  launches {}  seed {}",
        r.half_length, r.relative_length_spread, r.max_delta_perp, r.launches, r.seed
    );
    let opt = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
    println!("  components {}  k {}", opt(r.components), opt(r.k));
    for reason in &r.reasons {
        println!("  reason: {reason}");
    }
    for c in &r.checks {
        println!("  {} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for c in &r.caveats {
        println!("  caveat: {c}");
    }
}

fn execute(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Certify(args) => run_one(&args, Some(&[Stage::Certify])),
        Command::Analyze(args) => run_one(&args, None),
        Command::Catalog { name: None, .. } => {
            for ex in catalog() {
                let spec = make_example(&ex).map_err(|e| e.to_string())?;
                let params = resolve(&ex).map_err(|e| e.to_string())?.params;
                let truth = spec
                    .annotations
                    .as_ref()
                    .map(|t| serde_json::to_string(t).expect("annotations serialize"))
                    .unwrap_or_default();
                println!(
                    "{:<16} n={}  {}  {truth}",
                    ex.name,
                    spec.dimension(),
                    serde_json::Value::Object(params)
                );
            }
            Ok(0)
        }
        Command::Catalog {
            name: Some(name),
            params,
        } => {
            let spec = make_example(&example_ref(&name, &params)?).map_err(|e| e.to_string())?;
            println!("{}", spec.manifest.to_json());
            Ok(0)
        }
        Command::Matrix {
            manifests,
            catalog: with_catalog,
            out,
            overrides,
        } => {
            let mut list = Vec::new();
            for path in &manifests {
                list.extend(RunManifest::load_all(path).map_err(|e| format!("{}: {e}", path.display()))?);
            }
            if with_catalog {
                list.extend(catalog().into_iter().map(RunManifest::example));
            }
            for m in &mut list {
                overrides.apply(m);
            }
            let matrix = theorem_matrix(&list).map_err(|e| e.to_string())?;
            print!("{}", matrix.to_table());
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
                let text = serde_json::to_string_pretty(&matrix).expect("matrix serializes");
                std::fs::write(dir.join("matrix.json"), text + "\n").map_err(|e| e.to_string())?;
            }
            Ok(matrix.exit_code())
        }
    }
}

fn run_one(args: &RunArgs, stages: Option<&[Stage]>) -> Result<i32, String> {
    let mut m = load(args)?;
    if let Some(s) = stages {
        m.analyses = s.to_vec();
    }
    let outcome = run(&m, args.out.as_deref()).map_err(|e| e.to_string())?;
    print_report(&outcome.report);
    for a in &outcome.artifacts {
        println!("  wrote {}", a.display());
    }
    Ok(outcome.status.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE_EXIT as u8)
        }
    }
}
