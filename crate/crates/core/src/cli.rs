//! The `inv` command-line front end.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::classify::{classify, Mode};
use crate::construct::{build_cover, extend, parse_extension_toml, parse_properize_toml, verify, CoverConfig, VerifyConfig};
use crate::degree::{degree_report, DegreeConfig};
use crate::error::Error;
use crate::framed::{cobordant, oracle_cobordant, parse_point_set_json};
use crate::map::{parse_map, MapSpec};
use crate::operator::parse_operator_json;
use crate::path::parse_path_json;
use crate::transport::loop_parity;

#[derive(Debug, Parser)]
#[command(name = "inv", version, about = "Invariants of proper Fredholm maps")]
struct Cli {
    /// Seed for regular-value sampling and Newton seeds.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Newton seeds per axis.
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long = "tol-root", global = true)]
    tol_root: Option<f64>,
    /// Compact JSON (the default).
    #[arg(long, global = true, conflicts_with = "pretty")]
    json: bool,
    /// Indented JSON.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fredholm index of a map (TOML) or an operator (JSON).
    Index { file: PathBuf },
    /// Mod-2 degree, absolute degree and orientation signature.
    Degree {
        map: PathBuf,
        /// Regular value to count preimages of, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        value: Option<Vec<f64>>,
    },
    /// Orientation signature of a map (TOML) or parity of a path (JSON).
    Orient {
        file: PathBuf,
        /// Subdivisions used to locate determinant sign changes.
        #[arg(long, default_value_t = 4096)]
        subdivisions: usize,
    },
    /// Decide whether two maps are homotopic.
    Classify {
        f: PathBuf,
        g: PathBuf,
        #[arg(long, default_value = "proper0")]
        mode: Mode,
    },
    /// Decide framed cobordism of two point sets.
    Cobordism {
        s0: PathBuf,
        s1: PathBuf,
        /// Cross-check with the exhaustive move search.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 8)]
        max_moves: usize,
    },
    /// Extend a Fredholm map from a closed set and verify the result.
    Extend {
        problem: PathBuf,
        /// Write the cover and a tabulation of the extension here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sample counts, e.g. `samples=1000,u_samples=500,homotopy_samples=200`.
        #[arg(long)]
        verify: Option<String>,
    },
    /// Make a sphere-valued map proper by radial rescaling.
    Properize {
        map: PathBuf,
        #[arg(long, default_value_t = 5)]
        shells: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Write the built-in example maps as TOML files.
    Examples {
        #[arg(long, default_value = "gallery")]
        out: PathBuf,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Failure with an optional report attached to the error document.
struct Failure {
    error: Error,
    report: Option<Value>,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure { error, report: None }
    }
}

macro_rules! impl_failure_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::from(Error::from(e))
            }
        }
    )*};
}

impl_failure_from!(
    crate::map::MapError,
    crate::path::PathError,
    crate::framed::FramedError,
    crate::degree::DegreeError,
    crate::classify::ClassifyError,
    crate::construct::ConstructError
);

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome { code: 0, stdout: text, stderr: String::new() },
                _ => {
                    let doc = json!({ "error": "Usage", "message": e.kind().to_string() });
                    Outcome { code: 1, stdout: format!("{doc}\n"), stderr: text }
                }
            };
        }
    };
    let pretty = cli.pretty;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build();
    let result = match pool {
        Ok(pool) => pool.install(|| dispatch(&cli)),
        Err(e) => Err(Error::Input(format!("thread pool: {e}")).into()),
    };
    let render = |v: &Value| {
        let s = if pretty { serde_json::to_string_pretty(v) } else { serde_json::to_string(v) };
        s.expect("JSON values serialize") + "\n"
    };
    match result {
        Ok(report) => Outcome { code: 0, stdout: render(&report), stderr: String::new() },
        Err(Failure { error, report }) => {
            let mut doc = json!({ "error": error.code(), "message": error.to_string() });
            if let Some(r) = report {
                doc["report"] = r;
            }
            let code = if error.is_refusal() { 2 } else { 1 };
            Outcome { code, stdout: render(&doc), stderr: format!("inv: {error}\n") }
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })
}

fn load_map(path: &Path) -> Result<Arc<MapSpec>, Failure> {
    Ok(Arc::new(parse_map(&read(path)?)?))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn degree_config(cli: &Cli) -> DegreeConfig {
    let mut cfg = DegreeConfig { seed: cli.seed, ..DegreeConfig::default() };
    if let Some(g) = cli.grid {
        cfg.solver.grid = g;
    }
    if let Some(t) = cli.tol_root {
        cfg.solver.tol_root = t;
    }
    cfg
}

fn parse_verify(spec: Option<&str>, seed: u64) -> Result<VerifyConfig, Error> {
    let mut cfg = VerifyConfig { seed, ..VerifyConfig::default() };
    for item in spec.into_iter().flat_map(|s| s.split(',')).filter(|s| !s.trim().is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("--verify expects key=value pairs, got `{item}`")))?;
        let n: usize = value
            .trim()
            .parse()
            .map_err(|_| Error::Input(format!("--verify {key}: `{value}` is not a count")))?;
        match key.trim() {
            "samples" | "m_samples" => cfg.m_samples = n,
            "u_samples" => cfg.u_samples = n,
            "homotopy_samples" => cfg.homotopy_samples = n,
            other => return Err(Error::Input(format!("--verify: unknown key `{other}` (samples, u_samples, homotopy_samples)"))),
        }
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<Value, Failure> {
    match &cli.command {
        Command::Index { file } => {
            let text = read(file)?;
            if is_json(file) {
                let op = parse_operator_json(&text).map_err(|e| Error::Input(format!("operator JSON: {e}")))?;
                Ok(json!({ "a": op.a(), "b": op.b(), "index": op.index() }))
            } else {
                let f = parse_map(&text)?;
                Ok(json!({ "codomain_dim": f.codomain_dim(), "dim": f.dim(), "index": f.index() }))
            }
        }
        Command::Degree { map, value } => {
            let f = load_map(map)?;
            let report = degree_report(&f, &degree_config(cli), value.as_deref())?;
            Ok(to_value(&report))
        }
        Command::Orient { file, subdivisions } => {
            let text = read(file)?;
            if is_json(file) {
                let path = parse_path_json(&text)?;
                let parity = path.parity()?;
                let changes = path.sign_changes(*subdivisions)?;
                Ok(json!({ "crossings": changes.len(), "parity": parity, "sign_changes": changes }))
            } else {
                let f = Arc::new(parse_map(&text)?);
                let mut loops = Vec::new();
                for (i, lp) in f.manifold().generator_loops().iter().enumerate() {
                    let l = loop_parity(&f, lp)?;
                    let crossings = l.path.crossing_count(*subdivisions).ok();
                    loops.push(json!({
                        "basepoint": l.basepoint,
                        "crossings": crossings,
                        "generator": i,
                        "parity": l.parity,
                        "shifted": l.shifted,
                    }));
                }
                let signature: Vec<Value> = loops.iter().map(|l| l["parity"].clone()).collect();
                let orientable = signature.iter().all(|p| p == &json!(0));
                Ok(json!({ "loops": loops, "orientable": orientable, "orientation_signature": signature }))
            }
        }
        Command::Classify { f, g, mode } => {
            let (f, g) = (load_map(f)?, load_map(g)?);
            Ok(to_value(&classify(*mode, &f, &g, &degree_config(cli))?))
        }
        Command::Cobordism { s0, s1, oracle, max_moves } => {
            let a = parse_point_set_json(&read(s0)?)?;
            let b = parse_point_set_json(&read(s1)?)?;
            let verdict = cobordant(&a, &b)?;
            let mut doc = to_value(&verdict);
            if *oracle {
                let o = oracle_cobordant(&a, &b, *max_moves)?;
                doc["oracle"] = json!(o);
                doc["agree"] = json!(o == verdict.cobordant);
            }
            Ok(doc)
        }
        Command::Extend { problem, out, verify: spec } => {
            let cfg = parse_verify(spec.as_deref(), cli.seed)?;
            let p = Arc::new(parse_extension_toml(&read(problem)?)?);
            let cover = build_cover(&p, &CoverConfig { seed: cli.seed, ..CoverConfig::default() })?;
            let ext = extend(p, cover);
            let report = verify(&ext, &cfg);
            let doc = to_value(&report);
            if let Some(path) = out {
                let table = tabulate(&ext);
                let text = serde_json::to_string_pretty(&json!({ "cover": ext.cover(), "samples": table }))
                    .expect("tabulation serializes");
                std::fs::write(path, text + "\n")
                    .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
            }
            match report.failure() {
                Some(e) => Err(Failure { error: e.into(), report: Some(doc) }),
                None => Ok(doc),
            }
        }
        Command::Properize { map, shells, samples } => {
            let p = parse_properize_toml(&read(map)?)?;
            let report = p.report(*shells, *samples, cli.seed);
            let doc = to_value(&report);
            if report.passed {
                Ok(doc)
            } else {
                let error = crate::construct::ConstructError::VerificationFailure {
                    check: "properization".into(),
                    witness: Vec::new(),
                    margin: f64::NAN,
                };
                Err(Failure { error: error.into(), report: Some(doc) })
            }
        }
        Command::Examples { out } => {
            let io = |e: std::io::Error| Error::Io { path: out.display().to_string(), message: e.to_string() };
            std::fs::create_dir_all(out).map_err(io)?;
            let mut written = Vec::new();
            for (name, text) in crate::gallery::all() {
                let path = out.join(format!("{name}.toml"));
                std::fs::write(&path, text).map_err(io)?;
                written.push(path.display().to_string());
            }
            Ok(json!({ "written": written }))
        }
    }
}

/// Values of the extension on a lattice of the domain box, 9 points per axis.
fn tabulate(ext: &crate::construct::Extension) -> Vec<Value> {
    ext.problem()
        .domain()
        .lattice(9)
        .into_iter()
        .map(|x| {
            let y = ext.eval(&x);
            json!({ "x": x, "value": y })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv(args: &[&str]) -> Outcome {
        run(std::iter::once("inv").chain(args.iter().copied()))
    }

    fn gallery_file(dir: &Path, name: &str) -> String {
        let path = dir.join(format!("{name}.toml"));
        std::fs::write(&path, crate::gallery::get(name).unwrap()).unwrap();
        path.display().to_string()
    }

    #[test]
    fn index_and_degree_of_gallery_maps() {
        let dir = tempfile::tempdir().unwrap();
        let taut = gallery_file(dir.path(), "taut");
        let out = inv(&["index", &taut]);
        assert_eq!(out.code, 0);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["index"], 0);

        let f3 = gallery_file(dir.path(), "f3");
        let out = inv(&["degree", &f3]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["abs_degree"], 3);
        assert_eq!(v["deg2"], 1);
    }

    #[test]
    fn reports_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let f2 = gallery_file(dir.path(), "f2");
        let a = inv(&["--seed", "7", "degree", &f2]);
        let b = inv(&["--seed", "7", "degree", &f2]);
        assert_eq!(a, b);
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(inv(&["frobnicate"]).code, 1);
        let missing = dir.path().join("missing.toml");
        let out = inv(&["index", missing.to_str().unwrap()]);
        assert_eq!(out.code, 1);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["error"], "Io");

        let h = gallery_file(dir.path(), "nonproper_h");
        let f0 = gallery_file(dir.path(), "f0");
        let out = inv(&["classify", &f0, &h]);
        assert_eq!(out.code, 2, "{}", out.stdout);
    }

    #[test]
    fn verify_spec_parsing() {
        let cfg = parse_verify(Some("samples=10,u_samples=5"), 3).unwrap();
        assert_eq!((cfg.m_samples, cfg.u_samples, cfg.seed), (10, 5, 3));
        assert!(parse_verify(Some("samples"), 0).is_err());
        assert!(parse_verify(Some("depth=3"), 0).is_err());
    }
}
