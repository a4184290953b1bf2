//! Kolmogorov–Smirnov statistics and their 1% critical values.

/// Asymptotic 1% critical value coefficient.
pub const KS_COEFFICIENT_1PCT: f64 = 1.63;

pub fn ks_threshold(m: usize) -> f64 {
    KS_COEFFICIENT_1PCT / (m as f64).sqrt()
}

pub fn ks_two_sample_threshold(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    KS_COEFFICIENT_1PCT * ((n + m) / (n * m)).sqrt()
}

/// sup |F_M − F| for a continuous reference CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}

/// sup |F_a − F_b| over the pooled sample.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Cumulative distribution tabulated on an increasing grid and interpolated
/// linearly; clamps to 0 and 1 outside the table.
#[derive(Debug, Clone)]
pub struct TabulatedCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl TabulatedCdf {
    /// Trapezoidal cumulative integral of `density` on `points` nodes over [lo, hi],
    /// normalized to end at 1.
    pub fn from_density(lo: f64, hi: f64, points: usize, density: impl Fn(f64) -> f64) -> Self {
        let h = (hi - lo) / (points - 1) as f64;
        let xs: Vec<f64> = (0..points).map(|i| lo + h * i as f64).collect();
        let f: Vec<f64> = xs.iter().map(|&x| density(x)).collect();
        let mut cdf = Vec::with_capacity(points);
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in f.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            cdf.push(acc);
        }
        Self::normalized(xs, cdf)
    }

    /// Piecewise-constant density with `masses[j]` spread over the cell
    /// [x_j − h/2, x_j + h/2].
    pub fn from_cells(centers: &[f64], h: f64, masses: &[f64]) -> Self {
        let mut xs = Vec::with_capacity(centers.len() + 1);
        let mut cdf = Vec::with_capacity(centers.len() + 1);
        xs.push(centers[0] - 0.5 * h);
        cdf.push(0.0);
        let mut acc = 0.0;
        for (c, m) in centers.iter().zip(masses) {
            acc += m;
            xs.push(c + 0.5 * h);
            cdf.push(acc);
        }
        Self::normalized(xs, cdf)
    }

    fn normalized(xs: Vec<f64>, mut cdf: Vec<f64>) -> Self {
        let total = *cdf.last().unwrap();
        if total > 0.0 {
            for c in &mut cdf {
                *c /= total;
            }
        }
        Self { xs, cdf }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= *self.xs.last().unwrap() {
            return 1.0;
        }
        let j = self.xs.partition_point(|&v| v <= x) - 1;
        let w = (x - self.xs[j]) / (self.xs[j + 1] - self.xs[j]);
        self.cdf[j] * (1.0 - w) + self.cdf[j + 1] * w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_samples_pass_and_shifted_fail() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = 10_000;
        let xs: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let cdf = |x: f64| x.clamp(0.0, 1.0);
        assert!(ks_one_sample(&xs, cdf) < ks_threshold(m));
        let shifted: Vec<f64> = xs.iter().map(|x| x * 1.1).collect();
        assert!(ks_one_sample(&shifted, cdf) > ks_threshold(m));
    }

    #[test]
    fn two_sample_statistic_examples() {
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]) - 0.5).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample(&a, &b) < ks_two_sample_threshold(5000, 5000));
    }

    #[test]
    fn tabulated_cdf_of_a_gaussian() {
        let t = TabulatedCdf::from_density(-8.0, 8.0, 4001, |x| (-0.5 * x * x).exp());
        assert!((t.eval(0.0) - 0.5).abs() < 1e-9);
        assert!((t.eval(1.0) - 0.841_344_746_068_543).abs() < 1e-6);
        assert_eq!(t.eval(-9.0), 0.0);
        assert_eq!(t.eval(9.0), 1.0);
    }
}
