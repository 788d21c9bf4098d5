//! The verification suite behind `kfmi verify`.
//!
//! Seven checks, each over `trials` seeded random instances drawn from its
//! own substream so results do not depend on execution order.

use std::collections::BTreeMap;

use kalman_mi::filter::short_form_cov;
use kalman_mi::instances::{random_gain, random_joint, random_update_instance};
use kalman_mi::linops::rel_frobenius;
use kalman_mi::nalgebra::{DMatrix, DVector};
use kalman_mi::rng::{GaussianStream, GENERATOR_NAME};
use kalman_mi::{
    concavity_check, maximize_mi, mi_gradient, mi_of_gain, mutual_information_joint,
    renyi_mutual_information, schur_det_check, update_mi, update_optimal, GainMatrix,
    JointGaussian, OptimizerSettings, RenyiOrder,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const GAIN_EQUIVALENCE: &str = "gain_equivalence";
pub const GRADIENT_FD: &str = "gradient_fd";
pub const CONCAVITY: &str = "concavity";
pub const RENYI_EQUIVALENCE: &str = "renyi_equivalence";
pub const SCHUR_IDENTITY: &str = "schur_identity";
pub const UPDATE_JOINT_MI: &str = "update_joint_mi";
pub const JOSEPH_SHORT_FORM: &str = "joseph_short_form";

/// Check names with default tolerances, in report order.
pub const CHECKS: [(&str, f64); 7] = [
    (GAIN_EQUIVALENCE, 1e-6),
    (GRADIENT_FD, 1e-5),
    (CONCAVITY, 1e-3),
    (RENYI_EQUIVALENCE, 1e-10),
    (SCHUR_IDENTITY, 1e-10),
    (UPDATE_JOINT_MI, 1e-10),
    (JOSEPH_SHORT_FORM, 1e-10),
];

pub const FD_STEP: f64 = 1e-6;
pub const CONCAVITY_DIRECTIONS: usize = 50;
pub const RENYI_ORDERS: [f64; 4] = [0.1, 0.5, 2.0, 10.0];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckResult {
    pub check_name: String,
    pub instances_run: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportMetadata {
    pub seed: u64,
    pub build: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub generator: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub overall_passed: bool,
    pub metadata: ReportMetadata,
}

/// Parses repeated `NAME=VALUE` tolerance overrides.
pub fn parse_overrides(items: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    for item in items {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--tol expects NAME=VALUE, got {item:?}")))?;
        let name = name.trim();
        if !CHECKS.iter().any(|(c, _)| *c == name) {
            let known: Vec<&str> = CHECKS.iter().map(|(c, _)| *c).collect();
            return Err(CliError::Usage(format!(
                "unknown check {name:?}; known: {}",
                known.join(", ")
            )));
        }
        let v: f64 = value
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| CliError::Usage(format!("bad tolerance {value:?} for {name}")))?;
        out.insert(name.to_string(), v);
    }
    Ok(out)
}

/// Outcome of one check before tolerances are applied.
struct Measured {
    instances: usize,
    max_error: f64,
    /// A hard failure independent of the tolerance (non-convergence, a
    /// non-negative curvature, an error from the library).
    broken: bool,
}

impl Measured {
    fn new() -> Self {
        Measured {
            instances: 0,
            max_error: 0.0,
            broken: false,
        }
    }

    fn record(&mut self, err: f64) {
        self.instances += 1;
        // NaN poisons the maximum
        self.max_error = if err.is_nan() {
            f64::NAN
        } else {
            self.max_error.max(err)
        };
    }
}

fn stream(seed: u64, check: usize) -> GaussianStream {
    GaussianStream::new(seed, 100 + check as u64)
}

fn gain_equivalence(seed: u64, trials: usize) -> Measured {
    let mut g = stream(seed, 0);
    let mut out = Measured::new();
    for _ in 0..trials {
        let obj = random_update_instance(&mut g).objective();
        let init = GainMatrix::zeros(obj.n(), obj.m());
        match maximize_mi(&obj, &init, &OptimizerSettings::default()) {
            Ok(tr) => out.record(rel_frobenius(
                tr.final_gain.as_matrix(),
                obj.closed_form_gain().as_matrix(),
                f64::MIN_POSITIVE,
            )),
            Err(_) => {
                out.broken = true;
                out.record(f64::INFINITY);
            }
        }
    }
    out
}

fn gradient_fd(seed: u64, trials: usize) -> Measured {
    let mut g = stream(seed, 1);
    let mut out = Measured::new();
    for _ in 0..trials {
        let obj = random_update_instance(&mut g).objective();
        let k = random_gain(&mut g, obj.n(), obj.m(), 1.0);
        let analytic = mi_gradient(&obj, &k).expect("Joseph posterior is SPD for PD R");
        let mut worst = 0.0f64;
        for i in 0..obj.n() {
            for j in 0..obj.m() {
                let mut plus = k.as_matrix().clone();
                let mut minus = k.as_matrix().clone();
                plus[(i, j)] += FD_STEP;
                minus[(i, j)] -= FD_STEP;
                let fp = mi_of_gain(&obj, &GainMatrix::new(plus).expect("finite")).expect("SPD");
                let fm = mi_of_gain(&obj, &GainMatrix::new(minus).expect("finite")).expect("SPD");
                let fd = (fp - fm) / (2.0 * FD_STEP);
                let a = analytic[(i, j)];
                worst = worst.max((a - fd).abs() / a.abs().max(1.0));
            }
        }
        out.record(worst);
    }
    out
}

fn concavity(seed: u64, trials: usize) -> Measured {
    let mut g = stream(seed, 2);
    let mut out = Measured::new();
    for t in 0..trials {
        let obj = random_update_instance(&mut g).objective();
        let init = GainMatrix::zeros(obj.n(), obj.m());
        let rep = maximize_mi(&obj, &init, &OptimizerSettings::default())
            .map_err(|e| e.to_string())
            .and_then(|tr| {
                concavity_check(&obj, &tr.final_gain, CONCAVITY_DIRECTIONS, seed ^ t as u64)
                    .map_err(|e| e.to_string())
            });
        match rep {
            Ok(rep) => {
                out.broken |= !rep.all_negative;
                out.record(rep.max_rel_error);
            }
            Err(_) => {
                out.broken = true;
                out.record(f64::INFINITY);
            }
        }
    }
    out
}

fn renyi_equivalence(seed: u64, trials: usize) -> Measured {
    let mut g = stream(seed, 3);
    let mut out = Measured::new();
    for _ in 0..trials {
        let j = random_joint(&mut g, 4);
        let shannon = mutual_information_joint(&j).expect("SPD joint");
        let worst = RENYI_ORDERS
            .iter()
            .map(|&a| {
                let r = renyi_mutual_information(&j, RenyiOrder::new(a).expect("valid order"))
                    .expect("SPD joint");
                (r - shannon).abs()
            })
            .fold(0.0, f64::max);
        out.record(worst);
    }
    out
}

fn schur_identity(seed: u64, trials: usize) -> Measured {
    let mut g = stream(seed, 4);
    let mut out = Measured::new();
    for _ in 0..trials {
        let j = random_joint(&mut g, 4);
        let (a, b, c) = schur_det_check(&j).expect("SPD joint");
        out.record((a - b).abs().max((a - c).abs()).max((b - c).abs()));
    }
    out
}

fn update_joint_mi(seed: u64, trials: usize) -> Measured {
    let mut g = stream(seed, 5);
    let mut out = Measured::new();
    for _ in 0..trials {
        let inst = random_update_instance(&mut g);
        let z = DVector::from_vec(g.normals(inst.model.m));
        let rec = update_optimal(&inst.prior, &z, &inst.model).expect("valid instance");
        let sigma = inst.prior.cov();
        let via_update = update_mi(sigma, rec.posterior.cov()).expect("SPD");
        let joint = JointGaussian::new(
            vec![0.0; inst.model.n],
            vec![0.0; inst.model.m],
            sigma.clone(),
            inst.model.innovation_cov(sigma),
            sigma.as_matrix() * inst.model.h.transpose(),
        )
        .expect("joint of state and measurement is SPD");
        out.record((via_update - mutual_information_joint(&joint).expect("SPD")).abs());
    }
    out
}

fn joseph_short_form(seed: u64, trials: usize) -> Measured {
    let mut g = stream(seed, 6);
    let mut out = Measured::new();
    for _ in 0..trials {
        let inst = random_update_instance(&mut g);
        let z = DVector::from_vec(g.normals(inst.model.m));
        let rec = update_optimal(&inst.prior, &z, &inst.model).expect("valid instance");
        let short: DMatrix<f64> = short_form_cov(inst.prior.cov(), &rec.gain, &inst.model.h);
        let err =
            (rec.posterior.cov().as_matrix() - short).norm() / inst.prior.cov().as_matrix().norm();
        out.record(err);
    }
    out
}

fn measure(name: &str, seed: u64, trials: usize) -> Measured {
    match name {
        GAIN_EQUIVALENCE => gain_equivalence(seed, trials),
        GRADIENT_FD => gradient_fd(seed, trials),
        CONCAVITY => concavity(seed, trials),
        RENYI_EQUIVALENCE => renyi_equivalence(seed, trials),
        SCHUR_IDENTITY => schur_identity(seed, trials),
        UPDATE_JOINT_MI => update_joint_mi(seed, trials),
        JOSEPH_SHORT_FORM => joseph_short_form(seed, trials),
        other => unreachable!("unknown check {other}"),
    }
}

/// Runs every check; `parallel` gives each check its own thread.
pub fn run_suite(
    trials: usize,
    seed: u64,
    overrides: &BTreeMap<String, f64>,
    parallel: bool,
) -> Result<VerificationReport, CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let measured: Vec<Measured> = if parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = CHECKS
                .iter()
                .map(|(name, _)| s.spawn(move || measure(name, seed, trials)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("check thread panicked"))
                .collect()
        })
    } else {
        CHECKS
            .iter()
            .map(|(name, _)| measure(name, seed, trials))
            .collect()
    };

    let checks: Vec<CheckResult> = CHECKS
        .iter()
        .zip(measured)
        .map(|((name, default), m)| {
            let tolerance = overrides.get(*name).copied().unwrap_or(*default);
            CheckResult {
                check_name: name.to_string(),
                instances_run: m.instances,
                max_error: m.max_error,
                tolerance,
                passed: !m.broken && m.max_error <= tolerance,
            }
        })
        .collect();
    let overall_passed = checks.iter().all(|c| c.passed);
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    Ok(VerificationReport {
        checks,
        overall_passed,
        metadata: ReportMetadata {
            seed,
            build: format!("kalman-mi-cli {}", env!("CARGO_PKG_VERSION")),
            timestamp,
            generator: GENERATOR_NAME.to_string(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse() {
        let o = parse_overrides(&["gain_equivalence=1e-15".into()]).unwrap();
        assert_eq!(o[GAIN_EQUIVALENCE], 1e-15);
        assert!(parse_overrides(&["nope=1".into()]).is_err());
        assert!(parse_overrides(&["concavity".into()]).is_err());
        assert!(parse_overrides(&["concavity=-1".into()]).is_err());
    }

    #[test]
    fn zero_trials_is_usage_error() {
        assert!(matches!(
            run_suite(0, 1, &BTreeMap::new(), false),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn small_suite_passes_and_is_order_independent() {
        let a = run_suite(5, 3, &BTreeMap::new(), false).unwrap();
        let b = run_suite(5, 3, &BTreeMap::new(), true).unwrap();
        assert!(a.overall_passed, "{a:?}");
        assert_eq!(a.checks, b.checks);
        let names: Vec<&str> = a.checks.iter().map(|c| c.check_name.as_str()).collect();
        assert_eq!(names, CHECKS.map(|c| c.0));
    }
}
