//! Project-dependent utilities `u_i(x, z) = theta_i(z) * f_i(x)`.
//!
//! `f_i` is either Cobb-Douglas with exponents on the unit simplex or linear
//! with strictly positive coefficients. Both are continuous, concave, homogeneous
//! of degree one and vanish at the origin, so `u_i(0, y) = u_i(0, z) = 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecops::dot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum UtilityForm {
    CobbDouglas { a: Vec<f64> },
    Linear { b: Vec<f64> },
}

/// Utility of one agent. `theta` is indexed by project position.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilitySpec {
    pub form: UtilityForm,
    pub theta: Vec<f64>,
}

impl UtilitySpec {
    pub fn cobb_douglas(a: Vec<f64>, theta: Vec<f64>) -> Self {
        Self { form: UtilityForm::CobbDouglas { a }, theta }
    }

    pub fn linear(b: Vec<f64>, theta: Vec<f64>) -> Self {
        Self { form: UtilityForm::Linear { b }, theta }
    }

    pub fn ell(&self) -> usize {
        match &self.form {
            UtilityForm::CobbDouglas { a } => a.len(),
            UtilityForm::Linear { b } => b.len(),
        }
    }

    pub fn is_cobb_douglas(&self) -> bool {
        matches!(self.form, UtilityForm::CobbDouglas { .. })
    }

    pub fn theta(&self, z: usize) -> Result<f64> {
        self.theta.get(z).copied().ok_or(Error::ProjectIndex(z))
    }

    /// `f_i(x)` without the project multiplier. No sign checks.
    pub(crate) fn base_value(&self, x: &[f64]) -> f64 {
        match &self.form {
            UtilityForm::CobbDouglas { a } => {
                let mut v = 1.0;
                for (xj, aj) in x.iter().zip(a) {
                    if *xj <= 0.0 {
                        return 0.0;
                    }
                    v *= xj.powf(*aj);
                }
                v
            }
            UtilityForm::Linear { b } => dot(b, x),
        }
    }

    #[cfg(test)]
    /// Minimum cost at prices `p` of one unit of `u(., z)`.
    pub(crate) fn unit_expenditure(&self, p: &[f64], z: usize) -> f64 {
        let theta = self.theta[z];
        match &self.form {
            UtilityForm::CobbDouglas { a } => {
                let mut v = 1.0 / theta;
                for (pj, aj) in p.iter().zip(a) {
                    v *= (pj / aj).powf(*aj);
                }
                v
            }
            UtilityForm::Linear { b } => {
                p.iter().zip(b).map(|(pj, bj)| pj / bj).fold(f64::INFINITY, f64::min) / theta
            }
        }
    }
}

fn check_dims(spec: &UtilitySpec, x: &[f64]) -> Result<()> {
    if spec.ell() != x.len() {
        return Err(Error::Dimension(format!(
            "bundle has {} components, utility expects {}",
            x.len(),
            spec.ell()
        )));
    }
    Ok(())
}

fn check_nonnegative(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| *v < 0.0 || v.is_nan()) {
        Some(index) => Err(Error::NegativeComponent { index, value: x[index] }),
        None => Ok(()),
    }
}

pub fn utility_eval(spec: &UtilitySpec, x: &[f64], z: usize) -> Result<f64> {
    check_dims(spec, x)?;
    check_nonnegative(x)?;
    Ok(spec.theta(z)? * spec.base_value(x))
}

pub fn utility_gradient(spec: &UtilitySpec, x: &[f64], z: usize) -> Result<Vec<f64>> {
    check_dims(spec, x)?;
    check_nonnegative(x)?;
    let theta = spec.theta(z)?;
    match &spec.form {
        UtilityForm::CobbDouglas { a } => {
            if let Some(j) = x.iter().position(|v| *v <= 0.0) {
                return Err(Error::BoundaryGradient(j));
            }
            let u = theta * spec.base_value(x);
            Ok(a.iter().zip(x).map(|(aj, xj)| aj * u / xj).collect())
        }
        UtilityForm::Linear { b } => Ok(b.iter().map(|bj| theta * bj).collect()),
    }
}

fn check_prices(p: &[f64]) -> Result<()> {
    match p.iter().position(|v| !(*v > 0.0)) {
        Some(index) => Err(Error::Input(format!("price {index} is not strictly positive ({})", p[index]))),
        None => Ok(()),
    }
}

/// Utility-maximising bundle on `{x >= 0 : p.x <= w}`.
pub fn demand(spec: &UtilitySpec, p: &[f64], w: f64, z: usize) -> Result<Vec<f64>> {
    check_dims(spec, p)?;
    check_prices(p)?;
    spec.theta(z)?;
    let w = w.max(0.0);
    Ok(match &spec.form {
        UtilityForm::CobbDouglas { a } => a.iter().zip(p).map(|(aj, pj)| aj * w / pj).collect(),
        UtilityForm::Linear { b } => {
            // ties go to the lowest index
            let mut best = 0;
            for j in 1..b.len() {
                if b[j] / p[j] > b[best] / p[best] {
                    best = j;
                }
            }
            let mut x = vec![0.0; b.len()];
            x[best] = w / p[best];
            x
        }
    })
}

pub fn indirect_utility(spec: &UtilitySpec, p: &[f64], w: f64, z: usize) -> Result<f64> {
    check_dims(spec, p)?;
    check_prices(p)?;
    let theta = spec.theta(z)?;
    let w = w.max(0.0);
    Ok(match &spec.form {
        UtilityForm::CobbDouglas { a } => {
            theta * w * a.iter().zip(p).map(|(aj, pj)| (aj / pj).powf(*aj)).product::<f64>()
        }
        UtilityForm::Linear { b } => {
            theta * w * b.iter().zip(p).map(|(bj, pj)| bj / pj).fold(0.0, f64::max)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckEntry {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesirabilityReport {
    pub pass: bool,
    pub checks: Vec<CheckEntry>,
}

const MONOTONICITY_SAMPLES: usize = 64;

/// Parameter checks for the family plus a sampled strict-monotonicity test
/// on interior points.
pub fn check_desirable(spec: &UtilitySpec, n_projects: usize) -> DesirabilityReport {
    let mut checks = Vec::new();
    match &spec.form {
        UtilityForm::CobbDouglas { a } => {
            let positive = !a.is_empty() && a.iter().all(|v| *v > 0.0);
            checks.push(CheckEntry::new("exponents_positive", positive, format!("a = {a:?}")));
            let sum: f64 = a.iter().sum();
            checks.push(CheckEntry::new(
                "exponents_sum_to_one",
                (sum - 1.0).abs() <= 1e-12,
                format!("sum(a) = {sum}"),
            ));
        }
        UtilityForm::Linear { b } => {
            let positive = !b.is_empty() && b.iter().all(|v| *v > 0.0);
            checks.push(CheckEntry::new("coefficients_positive", positive, format!("b = {b:?}")));
        }
    }
    let theta_ok = spec.theta.len() == n_projects && spec.theta.iter().all(|t| *t > 0.0 && t.is_finite());
    checks.push(CheckEntry::new(
        "theta_positive_for_every_project",
        theta_ok,
        format!("theta = {:?} over {n_projects} projects", spec.theta),
    ));

    // u(0, z) = 0 for every z
    let zero = vec![0.0; spec.ell()];
    let normalized = theta_ok && (0..n_projects).all(|z| utility_eval(spec, &zero, z) == Ok(0.0));
    checks.push(CheckEntry::new("essentiality_normalization", normalized, "u(0, z) = 0 for all z"));

    let params_ok = checks.iter().all(|c| c.pass);
    let mut monotone = params_ok;
    let mut detail = String::from("sampled interior points");
    if params_ok {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let ell = spec.ell();
        'outer: for _ in 0..MONOTONICITY_SAMPLES {
            let x: Vec<f64> = (0..ell).map(|_| rng.gen_range(0.05..2.0)).collect();
            let mut d: Vec<f64> = (0..ell).map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.0..1.0) } else { 0.0 }).collect();
            let k = rng.gen_range(0..ell);
            d[k] = d[k].max(0.01);
            let xd: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
            for z in 0..n_projects {
                let (ux, uxd) = (spec.theta[z] * spec.base_value(&x), spec.theta[z] * spec.base_value(&xd));
                if !(uxd > ux) {
                    monotone = false;
                    detail = format!("u(x + d) <= u(x) at x = {x:?}, d = {d:?}");
                    break 'outer;
                }
            }
        }
    } else {
        detail = String::from("skipped: parameter checks failed");
    }
    checks.push(CheckEntry::new("strong_monotonicity", monotone, detail));
    DesirabilityReport { pass: checks.iter().all(|c| c.pass), checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cd(theta: Vec<f64>) -> UtilitySpec {
        UtilitySpec::cobb_douglas(vec![0.5, 0.5], theta)
    }

    #[test]
    fn eval_examples() {
        assert_abs_diff_eq!(utility_eval(&cd(vec![2.0, 1.0]), &[0.6, 0.6], 0).unwrap(), 1.2, epsilon = 1e-15);
        assert_eq!(utility_eval(&cd(vec![2.0, 1.0]), &[0.0, 0.0], 1).unwrap(), 0.0);
        let lin = UtilitySpec::linear(vec![1.0, 2.0], vec![1.0, 1.0]);
        assert_eq!(utility_eval(&lin, &[1.0, 1.0], 1).unwrap(), 3.0);
        assert_eq!(utility_eval(&lin, &[0.0, 0.0], 0).unwrap(), 0.0);
        assert!(matches!(utility_eval(&lin, &[-1.0, 1.0], 0), Err(Error::NegativeComponent { index: 0, .. })));
    }

    #[test]
    fn gradient_examples() {
        let g = utility_gradient(&cd(vec![2.0, 1.0]), &[1.0, 1.0], 0).unwrap();
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 1.0, epsilon = 1e-15);
        let lin = UtilitySpec::linear(vec![1.0, 2.0], vec![1.0]);
        assert_eq!(utility_gradient(&lin, &[3.0, 0.0], 0).unwrap(), vec![1.0, 2.0]);
        assert_eq!(utility_gradient(&cd(vec![1.0]), &[0.0, 1.0], 0), Err(Error::BoundaryGradient(0)));
    }

    #[test]
    fn demand_examples() {
        let x = demand(&cd(vec![2.0, 1.0]), &[0.5, 0.5], 0.6, 0).unwrap();
        assert_abs_diff_eq!(x[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 0.6, epsilon = 1e-15);
        assert_eq!(demand(&cd(vec![1.0]), &[0.3, 0.7], 0.0, 0).unwrap(), vec![0.0, 0.0]);
        let lin = UtilitySpec::linear(vec![1.0, 2.0], vec![1.0]);
        assert_eq!(demand(&lin, &[1.0, 1.0], 3.0, 0).unwrap(), vec![0.0, 3.0]);
        // tie -> lowest index
        let tie = UtilitySpec::linear(vec![1.0, 1.0], vec![1.0]);
        assert_eq!(demand(&tie, &[1.0, 1.0], 2.0, 0).unwrap(), vec![2.0, 0.0]);
        assert!(demand(&lin, &[0.0, 1.0], 1.0, 0).is_err());
    }

    #[test]
    fn indirect_utility_examples() {
        let spec = cd(vec![2.0, 1.0]);
        assert_abs_diff_eq!(indirect_utility(&spec, &[0.5, 0.5], 0.6, 0).unwrap(), 1.2, epsilon = 1e-14);
        assert_eq!(indirect_utility(&spec, &[0.5, 0.5], 0.0, 0).unwrap(), 0.0);
        assert_abs_diff_eq!(indirect_utility(&spec, &[0.5, 0.5], 0.7, 1).unwrap(), 0.7, epsilon = 1e-14);
    }

    #[test]
    fn desirability_examples() {
        assert!(check_desirable(&cd(vec![1.0, 1.0]), 2).pass);
        let bad = UtilitySpec::cobb_douglas(vec![0.5, 0.6], vec![1.0]);
        let r = check_desirable(&bad, 1);
        assert!(!r.pass);
        assert!(r.checks.iter().any(|c| c.name == "exponents_sum_to_one" && !c.pass));
        let flat = UtilitySpec::linear(vec![1.0, 0.0], vec![1.0]);
        assert!(!check_desirable(&flat, 1).pass);
        // theta missing for a project
        assert!(!check_desirable(&cd(vec![1.0]), 2).pass);
    }

    #[test]
    fn cobb_douglas_walras_law_and_indirect_consistency() {
        let spec = UtilitySpec::cobb_douglas(vec![0.2, 0.3, 0.5], vec![1.3]);
        let p = [0.1, 0.5, 0.4];
        let x = demand(&spec, &p, 2.5, 0).unwrap();
        assert_abs_diff_eq!(dot(&p, &x), 2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(
            utility_eval(&spec, &x, 0).unwrap(),
            indirect_utility(&spec, &p, 2.5, 0).unwrap(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn unit_expenditure_reaches_one_util() {
        let spec = UtilitySpec::cobb_douglas(vec![0.3, 0.7], vec![1.7]);
        let p = [0.4, 0.6];
        let e = spec.unit_expenditure(&p, 0);
        assert_abs_diff_eq!(indirect_utility(&spec, &p, e, 0).unwrap(), 1.0, epsilon = 1e-14);
        let lin = UtilitySpec::linear(vec![1.0, 3.0], vec![2.0]);
        let e = lin.unit_expenditure(&p, 0);
        assert_abs_diff_eq!(indirect_utility(&lin, &p, e, 0).unwrap(), 1.0, epsilon = 1e-14);
    }
}
