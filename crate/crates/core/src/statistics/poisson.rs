use serde::Serialize;
use statrs::distribution::{Discrete, Poisson};

use super::StatisticsError;

/// Largest support enumerated for a product-form reference.
const MAX_SUPPORT: u128 = 5_000_000;

/// Finite-support law on integer vectors; mass outside the support is
/// `1 - total()`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    states: Vec<Vec<u64>>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(states: Vec<Vec<u64>>, probs: Vec<f64>) -> Self {
        assert_eq!(states.len(), probs.len());
        Self { states, probs }
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u64>, f64)> {
        self.states.iter().zip(self.probs.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn expectation(&self, g: impl Fn(&[u64]) -> f64) -> f64 {
        self.iter().map(|(x, p)| p * g(x)).sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.expectation(|x| x[k] as f64)).collect()
    }

    pub fn variance(&self) -> Vec<f64> {
        let m = self.mean();
        (0..self.dim()).map(|k| self.expectation(|x| (x[k] as f64 - m[k]).powi(2))).collect()
    }

    /// Variance over mean of each coordinate.
    pub fn fano(&self) -> Vec<f64> {
        self.variance().iter().zip(self.mean()).map(|(v, m)| v / m).collect()
    }

    /// Marginal law of coordinates `keep`.
    pub fn project(&self, keep: &[usize]) -> DiscreteDistribution {
        let mut acc = std::collections::BTreeMap::<Vec<u64>, f64>::new();
        for (x, p) in self.iter() {
            *acc.entry(keep.iter().map(|&k| x[k]).collect()).or_insert(0.0) += p;
        }
        let (states, probs) = acc.into_iter().unzip();
        Self { states, probs }
    }

    /// Total variation distance, counting unmatched support on either side.
    pub fn total_variation(&self, other: &DiscreteDistribution) -> f64 {
        let mut acc = std::collections::BTreeMap::<&Vec<u64>, f64>::new();
        for (x, p) in self.iter() {
            *acc.entry(x).or_insert(0.0) += p;
        }
        for (x, p) in other.iter() {
            *acc.entry(x).or_insert(0.0) -= p;
        }
        let tails = ((1.0 - self.total()) - (1.0 - other.total())).abs();
        0.5 * (acc.values().map(|d| d.abs()).sum::<f64>() + tails)
    }
}

/// Independent Poisson coordinates with means `mean`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoissonReference {
    pub mean: Vec<f64>,
    /// Largest count kept per coordinate.
    pub truncation: Vec<u64>,
}

impl PoissonReference {
    /// Truncates each coordinate at `mean + 12 sqrt(mean) + 20`.
    pub fn new(mean: Vec<f64>) -> Self {
        let truncation = mean.iter().map(|&m| (m + 12.0 * m.sqrt() + 20.0).ceil() as u64).collect();
        Self { mean, truncation }
    }

    fn coordinate_pmf(&self, k: usize) -> Vec<f64> {
        let m = self.mean[k];
        let cap = self.truncation[k];
        if m <= 0.0 {
            let mut v = vec![0.0; cap as usize + 1];
            v[0] = 1.0;
            return v;
        }
        let d = Poisson::new(m).expect("positive mean");
        (0..=cap).map(|x| d.pmf(x)).collect()
    }

    pub fn pmf(&self, x: &[u64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(k, &xi)| {
                let m = self.mean[k];
                if m <= 0.0 {
                    f64::from(u8::from(xi == 0))
                } else {
                    Poisson::new(m).expect("positive mean").pmf(xi)
                }
            })
            .product()
    }

    /// The truncated product pmf, states in lexicographic order.
    pub fn distribution(&self) -> Result<DiscreteDistribution, StatisticsError> {
        let states: u128 = self.truncation.iter().map(|&c| u128::from(c) + 1).product();
        if states > MAX_SUPPORT {
            return Err(StatisticsError::TooManyStates { states });
        }
        let pmfs: Vec<Vec<f64>> = (0..self.mean.len()).map(|k| self.coordinate_pmf(k)).collect();
        let mut out_states = vec![Vec::new()];
        let mut out_probs = vec![1.0];
        for pmf in &pmfs {
            let mut s2 = Vec::with_capacity(out_states.len() * pmf.len());
            let mut p2 = Vec::with_capacity(out_states.len() * pmf.len());
            for (s, p) in out_states.iter().zip(&out_probs) {
                for (x, q) in pmf.iter().enumerate() {
                    let mut s = s.clone();
                    s.push(x as u64);
                    s2.push(s);
                    p2.push(p * q);
                }
            }
            out_states = s2;
            out_probs = p2;
        }
        Ok(DiscreteDistribution::new(out_states, out_probs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_pmf_keeps_mean_and_variance() {
        for m in [0.3, 2.0, 17.5, 400.0] {
            let d = PoissonReference::new(vec![m]).distribution().unwrap();
            assert!(1.0 - d.total() < 1e-12);
            assert!((d.mean()[0] - m).abs() / m < 1e-9);
            assert!((d.variance()[0] - m).abs() / m < 1e-9);
        }
    }

    #[test]
    fn product_form_factorizes() {
        let r = PoissonReference::new(vec![1.0, 3.0]);
        let d = r.distribution().unwrap();
        let p = d.iter().find(|(x, _)| **x == vec![2, 1]).unwrap().1;
        let expected = (-1.0f64).exp() / 2.0 * 3.0 * (-3.0f64).exp();
        assert!((p - expected).abs() < 1e-15);
        assert!((r.pmf(&[2, 1]) - expected).abs() < 1e-15);
        let m0 = d.project(&[0]);
        assert!((m0.mean()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mean_is_a_point_mass() {
        let d = PoissonReference::new(vec![0.0]).distribution().unwrap();
        assert_eq!(d.mean(), vec![0.0]);
        assert_eq!(d.total(), 1.0);
    }
}
