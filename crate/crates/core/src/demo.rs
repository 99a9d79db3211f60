//! Desk-scale density demonstration: sample CP maps, hand only their natural
//! families to the reconstruction, and compare what comes back.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::Algebra;
use crate::error::{Error, Result};
use crate::presheaf::{natural_family_from_map, reconstruct_map_from_family, NaturalityConfig};
use crate::sample;

/// Largest `total_dim(A) + total_dim(B)` accepted by [`run`].
pub const MAX_TOTAL_DIM: usize = 6;

#[derive(Clone, Debug)]
pub struct DemoConfig {
    pub a: Algebra,
    pub b: Algebra,
    pub seed: u64,
    pub trials: usize,
    pub probes: usize,
    pub tol: f64,
}

impl DemoConfig {
    pub fn new(a: Algebra, b: Algebra) -> Self {
        Self {
            a,
            b,
            seed: 0,
            trials: 20,
            probes: 50,
            tol: crate::DEFAULT_TOL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DemoOutcome {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub passed: bool,
    pub report: String,
}

/// Runs the trials and renders a report that depends only on the config.
pub fn run(cfg: &DemoConfig) -> Result<DemoOutcome> {
    let total = cfg.a.total_dim() + cfg.b.total_dim();
    if total > MAX_TOTAL_DIM {
        return Err(Error::InvalidArgument(format!(
            "total dimension {total} of {} and {} exceeds {MAX_TOTAL_DIM}",
            cfg.a, cfg.b
        )));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = String::new();
    writeln!(report, "density demo: A = {}, B = {}", cfg.a, cfg.b).unwrap();
    writeln!(
        report,
        "seed {}, trials {}, probes {}, truncation {}, tol {:e}",
        cfg.seed,
        cfg.trials,
        cfg.probes,
        cfg.b.total_dim(),
        cfg.tol
    )
    .unwrap();

    let mut residuals = Vec::with_capacity(cfg.trials);
    let mut failures = 0;
    for trial in 0..cfg.trials {
        let kraus = 1 + trial % 3;
        let f = sample::cp_map(&mut rng, &cfg.a, &cfg.b, kraus);
        let family = natural_family_from_map(&f, None, cfg.tol)?;
        let nat = NaturalityConfig {
            probes: cfg.probes,
            cone_probes: 8,
            seed: cfg.seed.wrapping_add(trial as u64),
            tol: cfg.tol,
        };
        let (residual, status) = match reconstruct_map_from_family(&family, &nat) {
            Ok(rec) => {
                let r = rec.map.distance(&f)?;
                (r, if r <= cfg.tol { "ok" } else { "FAIL" })
            }
            Err(e) => {
                writeln!(report, "trial {trial:3}: error: {e}").unwrap();
                (f64::INFINITY, "FAIL")
            }
        };
        if status != "ok" {
            failures += 1;
        }
        writeln!(report, "trial {trial:3}: kraus {kraus}  residual {residual:.3e}  {status}").unwrap();
        residuals.push(residual);
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    let passed = failures == 0;
    writeln!(report, "max residual {max_residual:.3e}").unwrap();
    writeln!(
        report,
        "{}: {}/{} reconstructions within {:e}",
        if passed { "PASS" } else { "FAIL" },
        cfg.trials - failures,
        cfg.trials,
        cfg.tol
    )
    .unwrap();
    Ok(DemoOutcome {
        residuals,
        max_residual,
        passed,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg(blocks: &[usize]) -> Algebra {
        Algebra::new(blocks).unwrap()
    }

    #[test]
    fn twenty_trials_reconstruct() {
        let out = run(&DemoConfig::new(alg(&[2]), alg(&[1, 1]))).unwrap();
        assert!(out.passed, "{}", out.report);
        assert!(out.residuals.iter().all(|r| *r <= 1e-9));
        assert_eq!(out.residuals.len(), 20);
    }

    #[test]
    fn trivial_algebras_are_exact() {
        let mut cfg = DemoConfig::new(alg(&[1]), alg(&[1]));
        cfg.trials = 5;
        let out = run(&cfg).unwrap();
        assert!(out.max_residual < 1e-14, "{}", out.report);
    }

    #[test]
    fn report_is_deterministic() {
        let mut cfg = DemoConfig::new(alg(&[1, 1]), alg(&[2]));
        cfg.seed = 11;
        cfg.trials = 4;
        assert_eq!(run(&cfg).unwrap().report, run(&cfg).unwrap().report);
    }

    #[test]
    fn oversized_dims_rejected() {
        let cfg = DemoConfig::new(alg(&[3]), alg(&[2, 2]));
        assert!(matches!(run(&cfg), Err(Error::InvalidArgument(_))));
    }
}
