//! Max-min improvement program solved through its price dual.
//!
//! A target margin `t` is attainable iff for every price `p` on the simplex
//! `sum_i gamma_i v_i e_i(p) <= p.R`, with `v_i = max(ref_i + t, 0)` and `e_i`
//! the unit expenditure of agent `i`. The left side minus `p.R` is concave in
//! `p`, so its maximum is found by damped Newton in reduced simplex
//! coordinates. The maximised value is convex in `t`; the margin is its root,
//! found by Newton from above. Bundles are Hicksian demands at the final
//! prices, rescaled to clear exactly.

use nalgebra::{DMatrix, DVector};

use crate::preferences::{UtilityForm, UtilitySpec};

pub(crate) struct Member<'a> {
    pub spec: &'a UtilitySpec,
    pub theta: f64,
    pub gamma: f64,
    pub reference: f64,
}

impl Member<'_> {
    fn utility(&self, x: &[f64]) -> f64 {
        self.theta * self.spec.base_value(x)
    }
}

pub(crate) struct MaxMin<'a> {
    pub members: Vec<Member<'a>>,
    /// Coalition resources, assumed componentwise non-negative.
    pub resources: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct MaxMinSolution {
    /// Margin attained by `bundles`.
    pub margin: f64,
    /// Dual upper bound on the optimal margin.
    pub upper: f64,
    pub bundles: Vec<Vec<f64>>,
}

const NEWTON_CAP: usize = 200;
const ARMIJO: f64 = 1e-4;

/// Adds `w * e(p)` and its derivatives; returns `e(p)`.
fn expenditure(
    m: &Member,
    p: &[f64],
    mu: f64,
    w: f64,
    grad: Option<&mut [f64]>,
    hess: Option<&mut DMatrix<f64>>,
) -> f64 {
    let ell = p.len();
    match &m.spec.form {
        UtilityForm::CobbDouglas { a } => {
            let mut lc = -m.theta.ln();
            for j in 0..ell {
                if a[j] > 0.0 {
                    if p[j] <= 0.0 {
                        return 0.0;
                    }
                    lc += a[j] * (p[j] / a[j]).ln();
                }
            }
            let c = lc.exp();
            if let Some(g) = grad {
                for j in 0..ell {
                    g[j] += w * a[j] * c / p[j];
                }
            }
            if let Some(h) = hess {
                for j in 0..ell {
                    for k in 0..ell {
                        let d = if j == k { a[j] } else { 0.0 };
                        h[(j, k)] += w * c * (a[j] * a[k] - d) / (p[j] * p[k]);
                    }
                }
            }
            c
        }
        UtilityForm::Linear { b } => {
            let s: Vec<f64> = p.iter().zip(b).map(|(pj, bj)| pj / bj).collect();
            let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
            if mu <= 0.0 {
                if let Some(g) = grad {
                    let j = s.iter().position(|v| *v == smin).unwrap_or(0);
                    g[j] += w / (b[j] * m.theta);
                }
                return smin / m.theta;
            }
            let e: Vec<f64> = s.iter().map(|v| (-(v - smin) / mu).exp()).collect();
            let total: f64 = e.iter().sum();
            let wts: Vec<f64> = e.iter().map(|v| v / total).collect();
            if let Some(g) = grad {
                for j in 0..ell {
                    g[j] += w * wts[j] / (b[j] * m.theta);
                }
            }
            if let Some(h) = hess {
                for j in 0..ell {
                    for k in 0..ell {
                        let d = if j == k { wts[j] } else { 0.0 };
                        h[(j, k)] -= w * (d - wts[j] * wts[k]) / (mu * b[j] * b[k] * m.theta);
                    }
                }
            }
            (smin - mu * total.ln()) / m.theta
        }
    }
}

impl<'a> MaxMin<'a> {
    fn ell(&self) -> usize {
        self.resources.len()
    }

    fn targets(&self, t: f64) -> Vec<f64> {
        self.members.iter().map(|m| (m.reference + t).max(0.0)).collect()
    }

    fn has_linear(&self) -> bool {
        self.members.iter().any(|m| !m.spec.is_cobb_douglas())
    }

    /// Smoothing levels for linear members; a single exact pass otherwise.
    fn smoothing(&self) -> Vec<f64> {
        if !self.has_linear() {
            return vec![0.0];
        }
        let ell = self.ell() as f64;
        let base = self
            .members
            .iter()
            .filter_map(|m| match &m.spec.form {
                UtilityForm::Linear { b } => Some(b.iter().map(|bj| 1.0 / (ell * bj)).fold(f64::INFINITY, f64::min)),
                _ => None,
            })
            .fold(f64::INFINITY, f64::min);
        [1e-1, 1e-3, 1e-5, 1e-7].iter().map(|f| f * base).collect()
    }

    fn dual_value(&self, v: &[f64], p: &[f64], mu: f64) -> f64 {
        let mut g = -crate::vecops::dot(p, &self.resources);
        for (m, vi) in self.members.iter().zip(v) {
            if *vi > 0.0 {
                g += m.gamma * vi * expenditure(m, p, mu, 0.0, None, None);
            }
        }
        g
    }

    fn dual_derivatives(&self, v: &[f64], p: &[f64], mu: f64) -> (f64, Vec<f64>, DMatrix<f64>) {
        let ell = self.ell();
        let mut grad: Vec<f64> = self.resources.iter().map(|r| -r).collect();
        let mut hess = DMatrix::zeros(ell, ell);
        let mut g = -crate::vecops::dot(p, &self.resources);
        for (m, vi) in self.members.iter().zip(v) {
            if *vi > 0.0 {
                let w = m.gamma * vi;
                g += w * expenditure(m, p, mu, w, Some(&mut grad), Some(&mut hess));
            }
        }
        (g, grad, hess)
    }

    /// Ascends the dual objective from `p` (updated in place). With
    /// `stop_if_positive` it returns as soon as a positive value certifies
    /// infeasibility.
    fn maximize(&self, v: &[f64], p: &mut [f64], mu: f64, stop_if_positive: bool) -> f64 {
        let ell = self.ell();
        let mut value = self.dual_value(v, p, mu);
        if ell == 1 {
            return value;
        }
        let m = ell - 1;
        for _ in 0..NEWTON_CAP.min(self.max_iter) {
            if stop_if_positive && value > 0.0 {
                return value;
            }
            let (g, grad, h) = self.dual_derivatives(v, p, mu);
            value = g;
            let gr = DVector::from_fn(m, |j, _| grad[j] - grad[m]);
            let hr = DMatrix::from_fn(m, m, |j, k| -(h[(j, k)] - h[(j, m)] - h[(m, k)] + h[(m, m)]));
            let d = match regularized_solve(&hr, &gr) {
                Some(d) => d,
                None => break,
            };
            let slope = gr.dot(&d);
            let scale = 1.0 + crate::vecops::dot(p, &self.resources).abs() + value.abs();
            if !(slope > 1e-15 * scale) {
                break;
            }
            let mut dir: Vec<f64> = d.iter().copied().collect();
            dir.push(-d.sum());
            let mut step = 1.0f64;
            for j in 0..ell {
                if dir[j] < 0.0 {
                    step = step.min(0.99 * p[j] / -dir[j]);
                }
            }
            let mut trial = vec![0.0; ell];
            let mut accepted = false;
            for _ in 0..60 {
                for j in 0..ell {
                    trial[j] = p[j] + step * dir[j];
                }
                let tv = self.dual_value(v, &trial, mu);
                if tv >= value + ARMIJO * step * slope {
                    value = tv;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            p.copy_from_slice(&trial);
            crate::vecops::normalize_simplex(p);
        }
        value
    }

    /// True when target `t` is certified unattainable.
    pub fn infeasible(&self, t: f64, p: &mut Vec<f64>) -> bool {
        let v = self.targets(t);
        if v.iter().all(|vi| *vi == 0.0) {
            return false;
        }
        let starved = self.members.iter().zip(&v).any(|(m, vi)| {
            *vi > 0.0
                && match &m.spec.form {
                    UtilityForm::CobbDouglas { a } => a.iter().zip(&self.resources).any(|(aj, rj)| *aj > 0.0 && *rj <= 0.0),
                    UtilityForm::Linear { b } => b.iter().zip(&self.resources).all(|(bj, rj)| *bj <= 0.0 || *rj <= 0.0),
                }
        });
        if starved {
            return true;
        }
        if p.iter().any(|pj| !(*pj > 0.0)) {
            *p = vec![1.0 / self.ell() as f64; self.ell()];
        }
        for mu in self.smoothing() {
            if self.maximize(&v, p, mu, true) > 0.0 {
                return true;
            }
        }
        false
    }

    /// Cheap rejection test: true when the optimum is proven below `t`.
    pub fn screen(&self, t: f64) -> bool {
        let mut p = vec![1.0 / self.ell() as f64; self.ell()];
        self.infeasible(t, &mut p)
    }

    fn upper_start(&self) -> f64 {
        self.members
            .iter()
            .map(|m| {
                let all: Vec<f64> = self.resources.iter().map(|r| r / m.gamma).collect();
                m.utility(&all) - m.reference
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn solve(&self) -> MaxMinSolution {
        let ell = self.ell();
        let lo0 = -self.members.iter().map(|m| m.reference).fold(f64::NEG_INFINITY, f64::max);
        let hi0 = self.upper_start().max(lo0);
        if self.members.len() == 1 {
            let m = &self.members[0];
            let x: Vec<f64> = self.resources.iter().map(|r| r / m.gamma).collect();
            return MaxMinSolution { margin: m.utility(&x) - m.reference, upper: hi0, bundles: vec![x] };
        }
        if self.resources.iter().any(|r| *r <= 0.0) {
            return self.solve_bisection(lo0, hi0);
        }
        // F(t) is convex and non-decreasing, so Newton from the right never
        // overshoots the root; every iterate with F > 0 is an upper bound.
        let mut p = vec![1.0 / ell as f64; ell];
        let scale = 1.0 + self.resources.iter().sum::<f64>();
        let mut t = hi0;
        for _ in 0..100 {
            let (f, slope) = self.dual(t, &mut p);
            if f <= 1e-14 * scale || slope <= 0.0 {
                break;
            }
            let next = (t - f / slope).max(lo0);
            let done = t - next <= 0.01 * self.tol * (1.0 + t.abs());
            t = next;
            if done {
                self.dual(t, &mut p);
                break;
            }
        }
        let v = self.targets(t);
        let mu = *self.smoothing().last().expect("at least one level");
        let bundles = self.recover(&v, &p, mu);
        let margin = self.attained(&bundles);
        MaxMinSolution { margin, upper: t.max(margin), bundles }
    }

    /// Maximised dual value at target `t` and its derivative in `t`.
    fn dual(&self, t: f64, p: &mut [f64]) -> (f64, f64) {
        let v = self.targets(t);
        let mut f = 0.0;
        let mut mu = 0.0;
        for level in self.smoothing() {
            f = self.maximize(&v, p, level, false);
            mu = level;
        }
        let slope = self
            .members
            .iter()
            .zip(&v)
            .filter(|(_, vi)| **vi > 0.0)
            .map(|(m, _)| m.gamma * expenditure(m, p, mu, 0.0, None, None))
            .sum();
        (f, slope)
    }

    fn attained(&self, bundles: &[Vec<f64>]) -> f64 {
        self.members
            .iter()
            .zip(bundles)
            .map(|(m, x)| m.utility(x) - m.reference)
            .fold(f64::INFINITY, f64::min)
    }

    /// Plain bisection on the feasibility test; used when some resource is
    /// exhausted and the dual optimum sits on the simplex boundary.
    fn solve_bisection(&self, lo0: f64, hi0: f64) -> MaxMinSolution {
        let ell = self.ell();
        let mut p = vec![1.0 / ell as f64; ell];
        let (mut lo, mut hi) = (lo0, hi0);
        let mut p_lo: Option<Vec<f64>> = None;
        if !self.infeasible(hi, &mut p) {
            lo = hi;
            p_lo = Some(p.clone());
        }
        let mut iters = 0;
        while hi - lo > 0.1 * self.tol * (1.0 + lo.abs()) && iters < 200 {
            let mid = 0.5 * (lo + hi);
            if self.infeasible(mid, &mut p) {
                hi = mid;
            } else {
                lo = mid;
                p_lo = Some(p.clone());
            }
            iters += 1;
        }
        let v = self.targets(lo);
        let p_lo = p_lo.unwrap_or_else(|| vec![1.0 / ell as f64; ell]);
        let mu = *self.smoothing().last().expect("at least one level");
        let bundles = self.recover(&v, &p_lo, mu);
        let margin = self.attained(&bundles);
        MaxMinSolution { margin, upper: hi.max(margin), bundles }
    }

    /// Hicksian demands at `p`, rescaled per commodity to use `R` exactly.
    fn recover(&self, v: &[f64], p: &[f64], mu: f64) -> Vec<Vec<f64>> {
        let ell = self.ell();
        let mut bundles: Vec<Vec<f64>> = self
            .members
            .iter()
            .zip(v)
            .map(|(m, vi)| {
                let mut g = vec![0.0; ell];
                if *vi > 0.0 {
                    expenditure(m, p, mu, *vi, Some(&mut g), None);
                }
                g
            })
            .collect();
        let gamma_total: f64 = self.members.iter().map(|m| m.gamma).sum();
        for j in 0..ell {
            let used: f64 = self.members.iter().zip(&bundles).map(|(m, x)| m.gamma * x[j]).sum();
            if used > 0.0 {
                let f = self.resources[j] / used;
                bundles.iter_mut().for_each(|x| x[j] *= f);
            } else {
                bundles.iter_mut().for_each(|x| x[j] = self.resources[j] / gamma_total);
            }
        }
        bundles
    }
}

fn excess_terms(members: &[Member], incomes: &[Vec<f64>], p: &[f64], mu: f64, derivs: bool) -> Vec<(f64, Vec<f64>, DMatrix<f64>)> {
    let ell = p.len();
    members
        .iter()
        .zip(incomes)
        .map(|(m, w)| {
            let mut g = w.clone();
            let mut h = DMatrix::zeros(ell, ell);
            let e = if derivs {
                expenditure(m, p, mu, -m.reference, Some(&mut g), Some(&mut h))
            } else {
                expenditure(m, p, mu, 0.0, None, None)
            };
            (crate::vecops::dot(p, w) - m.reference * e, g, h)
        })
        .collect()
}

/// Log-sum-exp of the terms at temperature `tau`, with derivatives.
fn soft_max(terms: &[(f64, Vec<f64>, DMatrix<f64>)], tau: f64) -> (f64, Vec<f64>, DMatrix<f64>) {
    let ell = terms[0].1.len();
    let top = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let wts: Vec<f64> = terms.iter().map(|t| ((t.0 - top) / tau).exp()).collect();
    let total: f64 = wts.iter().sum();
    let mut grad = vec![0.0; ell];
    let mut hess = DMatrix::zeros(ell, ell);
    for ((_, g, h), w) in terms.iter().zip(&wts) {
        let pi = w / total;
        for j in 0..ell {
            grad[j] += pi * g[j];
            for k in 0..ell {
                hess[(j, k)] += pi * (h[(j, k)] + g[j] * g[k] / tau);
            }
        }
    }
    for j in 0..ell {
        for k in 0..ell {
            hess[(j, k)] -= grad[j] * grad[k] / tau;
        }
    }
    (top + tau * total.ln(), grad, hess)
}

/// Price on the simplex minimising `max_i (p.w_i - ref_i e_i(p))`: the
/// largest excess of an agent's wealth over the cost of their reference
/// utility. A non-positive value means no agent can afford more than their
/// reference at `p`. Returns the price and the exact value there.
pub(crate) fn least_excess_price(members: &[Member], incomes: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let ell = incomes[0].len();
    let mut p = vec![1.0 / ell as f64; ell];
    let exact = |p: &[f64]| excess_terms(members, incomes, p, 0.0, false).iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    if ell == 1 {
        return (p.clone(), exact(&p));
    }
    let scale = 1.0 + incomes.iter().flatten().map(|v| v.abs()).sum::<f64>() / ell as f64;
    let linear_base = members
        .iter()
        .filter_map(|m| match &m.spec.form {
            UtilityForm::Linear { b } => Some(b.iter().map(|bj| 1.0 / (ell as f64 * bj)).fold(f64::INFINITY, f64::min)),
            _ => None,
        })
        .fold(f64::INFINITY, f64::min);
    let mut best = (p.clone(), exact(&p));
    let m = ell - 1;
    for level in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10] {
        let tau = level * scale;
        let mu = if linear_base.is_finite() { level * linear_base } else { 0.0 };
        let value_at = |p: &[f64]| soft_max(&excess_terms(members, incomes, p, mu, false), tau).0;
        for _ in 0..NEWTON_CAP {
            let (value, grad, h) = soft_max(&excess_terms(members, incomes, &p, mu, true), tau);
            let gr = DVector::from_fn(m, |j, _| -(grad[j] - grad[m]));
            let hr = DMatrix::from_fn(m, m, |j, k| h[(j, k)] - h[(j, m)] - h[(m, k)] + h[(m, m)]);
            let d = match regularized_solve(&hr, &gr) {
                Some(d) => d,
                None => break,
            };
            let slope = -gr.dot(&d);
            if !(slope < -1e-16 * (scale + value.abs())) {
                break;
            }
            let mut dir: Vec<f64> = d.iter().copied().collect();
            dir.push(-d.sum());
            let mut step = 1.0f64;
            for j in 0..ell {
                if dir[j] < 0.0 {
                    step = step.min(0.99 * p[j] / -dir[j]);
                }
            }
            let mut accepted = false;
            let mut trial = vec![0.0; ell];
            for _ in 0..60 {
                for j in 0..ell {
                    trial[j] = p[j] + step * dir[j];
                }
                let tv = value_at(&trial);
                if tv <= value + ARMIJO * step * slope {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            p.copy_from_slice(&trial);
            crate::vecops::normalize_simplex(&mut p);
        }
        let e = exact(&p);
        if e < best.1 {
            best = (p.clone(), e);
        }
    }
    best
}

/// Solves `A d = b` for symmetric `A`, adding a diagonal shift when `A` is not
/// positive definite.
fn regularized_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let trace = a.diagonal().iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
    let mut shift = 0.0;
    for _ in 0..30 {
        let shifted = a + DMatrix::identity(a.nrows(), a.ncols()) * shift;
        if let Some(ch) = shifted.cholesky() {
            let d = ch.solve(b);
            if d.iter().all(|x| x.is_finite()) {
                return Some(d);
            }
        }
        shift = if shift == 0.0 { 1e-12 * trace } else { shift * 100.0 };
    }
    None
}
