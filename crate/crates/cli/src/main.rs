//! `matdense`: verify, convert and reconstruct maps between finite-dimensional
//! C*-algebras stored as JSON documents.
//!
//! Exit codes: 0 verdict true or success, 1 verdict false (a JSON witness is
//! printed on standard output), 2 usage or input error, 3 inconclusive.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use matdense::cpmaps::{is_completely_positive, is_positive_map, kraus_decomposition, lemma_compression_check};
use matdense::demo::{self, DemoConfig};
use matdense::duality::{builtin_nonadditive, reconstruct_positive_map, ConeMap, ExtensionConfig, InducedConeMap};
use matdense::io::{self, ConeDoc, ElementDoc, FamilyDoc, MapDoc};
use matdense::presheaf::{
    builtin_family, choi_element, natural_family_from_map, reconstruct_map_from_family, NaturalFamily,
    NaturalityConfig, NaturalityViolation,
};
use matdense::{Algebra, Error, MapPositivity, Positivity, SuperOperator, DEFAULT_TOL};

#[derive(Parser)]
#[command(name = "matdense", version, about = "Completely positive maps between finite-dimensional C*-algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Choi test for complete positivity.
    CheckCp {
        map: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Positivity semidecision; exits 3 when the search budget finds nothing.
    CheckPositive {
        map: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Choi element of a map into a full matrix algebra.
    Choi {
        map: PathBuf,
        /// Scale the element to unit trace.
        #[arg(long)]
        normalize: bool,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kraus decomposition of a CP map.
    Kraus {
        map: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Amplification M_n(f).
    Amplify {
        map: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare f_n with M_n(f_1) through compressions by vectors.
    LemmaCheck {
        f_n: PathBuf,
        f_1: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Recover a positive map from a cone map on positive functionals.
    ReconstructCone {
        cone: PathBuf,
        #[command(flatten)]
        dims: DimsArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover a CP map from a natural family.
    ReconstructNatural {
        family: PathBuf,
        #[command(flatten)]
        dims: DimsArg,
        #[arg(long, default_value_t = 50)]
        probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample CP maps, reconstruct each from its family, report residuals.
    DemoDensity {
        #[command(flatten)]
        dims: DimsArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 50)]
        probes: usize,
    },
}

#[derive(Args)]
struct DimsArg {
    /// Block dimensions of A and B, e.g. `--dims 2 1,1`.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    dims: Option<Vec<String>>,
}

impl DimsArg {
    fn parse(&self) -> Result<Option<(Algebra, Algebra)>, Failure> {
        let Some(d) = &self.dims else { return Ok(None) };
        let one = |s: &str| -> Result<Algebra, Failure> {
            let blocks = s
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Input(format!("--dims {s:?}: {e}")))?;
            Ok(Algebra::new(&blocks)?)
        };
        Ok(Some((one(&d[0])?, one(&d[1])?)))
    }

    fn require(&self) -> Result<(Algebra, Algebra), Failure> {
        self.parse()?.ok_or_else(|| Failure::Input("--dims A B is required here".into()))
    }
}

enum Verdict {
    True,
    False,
    Inconclusive,
}

enum Failure {
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<Verdict, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: matdense::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_map(path: &Path) -> Result<SuperOperator, Failure> {
    with_path(path, io::parse_map(&read(path)?))
}

fn emit(report: &Value) {
    println!("{}", serde_json::to_string_pretty(report).expect("reports serialize"));
}

/// Writes `artifact` to `out`, or prints it when no path is given.
fn deliver(out: &Option<PathBuf>, artifact: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, artifact).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{artifact}");
            Ok(())
        }
    }
}

fn vector_json(v: &matdense::linalg::CVector) -> Value {
    json!(v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
}

fn element_json(x: &matdense::Element) -> Value {
    serde_json::to_value(ElementDoc::of(x)).expect("elements serialize")
}

fn map_json(f: &SuperOperator) -> Value {
    serde_json::to_value(MapDoc::superoperator(f)).expect("maps serialize")
}

fn check_cp(map: &Path, tol: f64) -> Outcome {
    let f = load_map(map)?;
    let v = is_completely_positive(&f, tol);
    let mut report = json!({
        "completely_positive": v.completely_positive,
        "min_eigenvalue": v.min_eigenvalue,
        "hermitian_residual": v.hermitian_residual,
        "tol": tol,
    });
    if !v.completely_positive {
        report["witness"] = json!({ "eigenvalue": v.min_eigenvalue, "eigenvector": vector_json(&v.witness) });
    }
    emit(&report);
    Ok(if v.completely_positive { Verdict::True } else { Verdict::False })
}

fn check_positive(map: &Path, tol: f64, budget: usize, seed: u64) -> Outcome {
    let f = load_map(map)?;
    match is_positive_map(&f, tol, budget, seed) {
        MapPositivity::Positive => {
            emit(&json!({ "positive": true, "reason": "completely positive" }));
            Ok(Verdict::True)
        }
        MapPositivity::NotPositive { input, output, verdict } => {
            let detail = match verdict {
                Positivity::NotHermitian { residual } => json!({ "not_hermitian": residual }),
                Positivity::NegativeEigenvalue { block, eigenvalue } => {
                    json!({ "block": block, "eigenvalue": eigenvalue })
                }
                Positivity::Positive => Value::Null,
            };
            emit(&json!({
                "positive": false,
                "witness": { "input": element_json(&input), "output": element_json(&output), "violation": detail },
            }));
            Ok(Verdict::False)
        }
        MapPositivity::Inconclusive { samples } => {
            emit(&json!({ "positive": null, "inconclusive": true, "samples": samples, "seed": seed }));
            Ok(Verdict::Inconclusive)
        }
    }
}

fn choi(map: &Path, normalize: bool, tol: f64, out: &Option<PathBuf>) -> Outcome {
    let f = load_map(map)?;
    let c = choi_element(&f)?;
    let mut element = c.element.clone();
    if normalize {
        let t = element.trace().re;
        if t <= 0.0 {
            return Err(Failure::Input("cannot normalize a Choi element with nonpositive trace".into()));
        }
        element = element.scale_real(1.0 / t);
    }
    let positive = c.is_positive(tol);
    deliver(out, &io::element_to_json(&element))?;
    if out.is_some() {
        let (block, min) = c.element.min_eigenvalue();
        emit(&json!({ "positive": positive, "min_eigenvalue": min, "block": block }));
    }
    Ok(Verdict::True)
}

fn kraus(map: &Path, tol: f64, out: &Option<PathBuf>) -> Outcome {
    let f = load_map(map)?;
    match kraus_decomposition(&f, tol) {
        Ok(ops) => {
            deliver(out, &io::kraus_to_json(f.domain(), f.codomain(), &ops))?;
            if out.is_some() {
                emit(&json!({ "kraus_operators": ops.len() }));
            }
            Ok(Verdict::True)
        }
        Err(Error::NotCompletelyPositive { .. }) => {
            let v = is_completely_positive(&f, tol);
            emit(&json!({
                "completely_positive": false,
                "witness": { "eigenvalue": v.min_eigenvalue, "eigenvector": vector_json(&v.witness) },
            }));
            Ok(Verdict::False)
        }
        Err(e) => Err(e.into()),
    }
}

fn amplify(map: &Path, n: usize, out: &Option<PathBuf>) -> Outcome {
    let f = load_map(map)?;
    deliver(out, &io::map_to_json(&f.amplify(n)?))?;
    Ok(Verdict::True)
}

fn lemma_check(f_n: &Path, f_1: &Path, n: usize, tol: f64) -> Outcome {
    let (big, small) = (load_map(f_n)?, load_map(f_1)?);
    let r = lemma_compression_check(&big, &small, n, tol)?;
    emit(&json!({
        "condition_holds": r.condition_holds,
        "amplification_holds": r.amplification_holds,
        "condition_residual": r.condition_residual,
        "amplification_distance": r.amplification_distance,
        "concordant": r.concordant(),
        "tol": tol,
    }));
    Ok(if r.condition_holds && r.amplification_holds { Verdict::True } else { Verdict::False })
}

fn reconstruct_cone(cone: &Path, dims: &DimsArg, seed: u64, tol: f64, out: &Option<PathBuf>) -> Outcome {
    let doc = with_path(cone, io::parse_cone(&read(cone)?))?;
    let dims = dims.parse()?;
    let g: Box<dyn ConeMap> = match doc {
        ConeDoc::ConeOf { cone_of } => {
            let f = with_path(cone, cone_of.to_map())?;
            if let Some((a, b)) = &dims {
                a.ensure_eq(f.domain())?;
                b.ensure_eq(f.codomain())?;
            }
            Box::new(InducedConeMap::new(f))
        }
        ConeDoc::Builtin { builtin, seed: s } => {
            let (a, b) = dims.ok_or_else(|| Failure::Input("builtin cone maps need --dims A B".into()))?;
            Box::new(builtin_nonadditive(&builtin, &a, &b, s)?)
        }
    };
    let cfg = ExtensionConfig { tol, seed, ..ExtensionConfig::default() };
    match reconstruct_positive_map(g.as_ref(), &cfg) {
        Ok(f) => {
            deliver(out, &io::map_to_json(&f))?;
            if out.is_some() {
                emit(&json!({ "reconstructed": true, "domain": f.domain().to_string(), "codomain": f.codomain().to_string() }));
            }
            Ok(Verdict::True)
        }
        Err(Error::NotConeHomomorphism { law, residual, detail }) => {
            emit(&json!({
                "reconstructed": false,
                "witness": { "law": law.to_string(), "residual": residual, "detail": detail },
            }));
            Ok(Verdict::False)
        }
        Err(e) => Err(e.into()),
    }
}

fn violation_json(v: &NaturalityViolation) -> Value {
    json!({
        "kind": format!("{:?}", v.kind),
        "m": v.m,
        "n": v.n,
        "residual": v.residual,
        "h": v.h.as_ref().map(map_json),
        "g": map_json(&v.g),
        "g2": v.g2.as_ref().map(map_json),
        "message": v.message,
    })
}

fn reconstruct_natural(
    family: &Path,
    dims: &DimsArg,
    probes: usize,
    seed: u64,
    tol: f64,
    out: &Option<PathBuf>,
) -> Outcome {
    let doc = with_path(family, io::parse_family(&read(family)?))?;
    let dims = dims.parse()?;
    let fam: Box<dyn NaturalFamily + Send> = match doc {
        FamilyDoc::FamilyOf { family_of, truncation } => {
            let f = with_path(family, family_of.to_map())?;
            if let Some((a, b)) = &dims {
                a.ensure_eq(f.domain())?;
                b.ensure_eq(f.codomain())?;
            }
            Box::new(natural_family_from_map(&f, truncation, tol)?)
        }
        FamilyDoc::Builtin { builtin, seed: s, truncation } => {
            let (a, b) = dims.ok_or_else(|| Failure::Input("builtin families need --dims A B".into()))?;
            builtin_family(&builtin, &a, &b, s, truncation)?
        }
    };
    let cfg = NaturalityConfig { probes, seed, tol, ..NaturalityConfig::default() };
    match reconstruct_map_from_family(fam.as_ref(), &cfg) {
        Ok(rec) => {
            let report = json!({
                "reconstructed": true,
                "domain": rec.map.domain().to_string(),
                "codomain": rec.map.codomain().to_string(),
                "truncation": fam.truncation(),
                "max_residual": rec.max_residual,
                "naturality": {
                    "general_probes": rec.naturality.general_probes,
                    "cone_probes": rec.naturality.cone_probes,
                    "general_residual": rec.naturality.general_residual,
                    "scalar_residual": rec.naturality.scalar_residual,
                    "additivity_residual": rec.naturality.additivity_residual,
                },
            });
            deliver(out, &io::map_to_json(&rec.map))?;
            if out.is_some() {
                emit(&report);
            }
            Ok(Verdict::True)
        }
        Err(Error::NotNatural(v)) => {
            emit(&json!({ "reconstructed": false, "witness": violation_json(&v) }));
            Ok(Verdict::False)
        }
        Err(Error::ReconstructionMismatch { n, residual }) => {
            emit(&json!({ "reconstructed": false, "witness": { "mismatch_at": n, "residual": residual } }));
            Ok(Verdict::False)
        }
        Err(Error::NotCompletelyPositive { min_eigenvalue }) => {
            emit(&json!({ "reconstructed": false, "witness": { "min_choi_eigenvalue": min_eigenvalue } }));
            Ok(Verdict::False)
        }
        Err(e) => Err(e.into()),
    }
}

fn demo_density(dims: &DimsArg, seed: u64, trials: usize, probes: usize) -> Outcome {
    let (a, b) = dims.require()?;
    let cfg = DemoConfig { seed, trials, probes, ..DemoConfig::new(a, b) };
    let outcome = demo::run(&cfg)?;
    print!("{}", outcome.report);
    Ok(if outcome.passed { Verdict::True } else { Verdict::False })
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::CheckCp { map, tol } => check_cp(&map, tol),
        Command::CheckPositive { map, tol, budget, seed } => check_positive(&map, tol, budget, seed),
        Command::Choi { map, normalize, tol, out } => choi(&map, normalize, tol, &out),
        Command::Kraus { map, tol, out } => kraus(&map, tol, &out),
        Command::Amplify { map, n, out } => amplify(&map, n, &out),
        Command::LemmaCheck { f_n, f_1, n, tol } => lemma_check(&f_n, &f_1, n, tol),
        Command::ReconstructCone { cone, dims, seed, tol, out } => reconstruct_cone(&cone, &dims, seed, tol, &out),
        Command::ReconstructNatural { family, dims, probes, seed, tol, out } => {
            reconstruct_natural(&family, &dims, probes, seed, tol, &out)
        }
        Command::DemoDensity { dims, seed, trials, probes } => demo_density(&dims, seed, trials, probes),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Verdict::True) => ExitCode::SUCCESS,
        Ok(Verdict::False) => ExitCode::from(1),
        Ok(Verdict::Inconclusive) => ExitCode::from(3),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
