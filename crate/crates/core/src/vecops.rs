//! Dense bundle arithmetic on plain slices.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn add_scaled(acc: &mut [f64], scale: f64, v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += scale * x;
    }
}

pub fn sum_bundles<'a>(ell: usize, bundles: impl IntoIterator<Item = &'a Vec<f64>>) -> Vec<f64> {
    let mut acc = vec![0.0; ell];
    for b in bundles {
        add_scaled(&mut acc, 1.0, b);
    }
    acc
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Rescales `v` in place so that its entries sum to one.
pub fn normalize_simplex(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}
