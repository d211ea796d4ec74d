//! Brute-force metric references, written without sorting or shared helpers.

pub fn mae(p: &[f64], t: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        s += (p[i] - t[i]).abs();
    }
    s / p.len() as f64
}

pub fn mse(p: &[f64], t: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        s += (p[i] - t[i]).powi(2);
    }
    s / p.len() as f64
}

/// Rank of x[i] = (# strictly smaller) + (# equal, including itself + 1) / 2.
pub fn quadratic_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn spearman(p: &[f64], t: &[f64]) -> f64 {
    let rp = quadratic_ranks(p);
    let rt = quadratic_ranks(t);
    let n = rp.len() as f64;
    let mp = rp.iter().sum::<f64>() / n;
    let mt = rt.iter().sum::<f64>() / n;
    let cov: f64 = rp.iter().zip(&rt).map(|(a, b)| (a - mp) * (b - mt)).sum();
    let vp: f64 = rp.iter().map(|a| (a - mp).powi(2)).sum();
    let vt: f64 = rt.iter().map(|b| (b - mt).powi(2)).sum();
    cov / (vp * vt).sqrt()
}
