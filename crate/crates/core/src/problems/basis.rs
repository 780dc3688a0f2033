use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalized radial basis over one stage: `T` rows sampled at `s_t = t / T`
/// for `t = 1..=T`, `B` centers spread uniformly over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisSpec", into = "BasisSpec")]
pub struct BasisEncoding {
    horizon: usize,
    count: usize,
    // Row-major T x B.
    psi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct BasisSpec {
    horizon: usize,
    count: usize,
}

impl TryFrom<BasisSpec> for BasisEncoding {
    type Error = Error;
    fn try_from(s: BasisSpec) -> Result<Self> {
        BasisEncoding::new(s.horizon, s.count)
    }
}

impl From<BasisEncoding> for BasisSpec {
    fn from(b: BasisEncoding) -> Self {
        BasisSpec {
            horizon: b.horizon,
            count: b.count,
        }
    }
}

impl BasisEncoding {
    pub fn new(horizon: usize, count: usize) -> Result<Self> {
        if horizon == 0 || count == 0 {
            return Err(Error::Config(format!(
                "basis needs a positive horizon and count, got T={horizon}, B={count}"
            )));
        }
        let centers: Vec<f64> = if count == 1 {
            vec![0.5]
        } else {
            (0..count).map(|b| b as f64 / (count - 1) as f64).collect()
        };
        let spacing = if count == 1 { 1.0 } else { 1.0 / (count - 1) as f64 };
        let width = 1.5 * spacing;
        let mut psi = Vec::with_capacity(horizon * count);
        for t in 1..=horizon {
            let s = t as f64 / horizon as f64;
            let raw: Vec<f64> = centers
                .iter()
                .map(|c| (-0.5 * ((s - c) / width).powi(2)).exp())
                .collect();
            let total: f64 = raw.iter().sum();
            psi.extend(raw.iter().map(|v| v / total));
        }
        Ok(Self { horizon, count, psi })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Row `t` (zero-based) of the basis matrix.
    pub fn row(&self, t: usize) -> &[f64] {
        &self.psi[t * self.count..(t + 1) * self.count]
    }

    /// `u = Psi w` for a single scalar channel.
    pub fn decode(&self, weights: &[f64]) -> Vec<f64> {
        assert_eq!(weights.len(), self.count);
        (0..self.horizon)
            .map(|t| self.row(t).iter().zip(weights).map(|(p, w)| p * w).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_partition_unity() {
        for b in 1..7 {
            let enc = BasisEncoding::new(50, b).unwrap();
            for t in 0..50 {
                let s: f64 = enc.row(t).iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
                assert!(enc.row(t).iter().all(|&p| p > 0.0));
            }
        }
    }

    #[test]
    fn constant_weights_decode_to_constant() {
        let enc = BasisEncoding::new(20, 4).unwrap();
        for u in enc.decode(&[0.7; 4]) {
            assert!((u - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn decode_is_linear() {
        let enc = BasisEncoding::new(30, 5).unwrap();
        let w1 = [0.3, -1.0, 2.0, 0.0, 0.5];
        let w2 = [-0.4, 0.1, 0.9, 1.5, -2.0];
        let a = 0.3;
        let mix: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + (1.0 - a) * y).collect();
        let (u1, u2, um) = (enc.decode(&w1), enc.decode(&w2), enc.decode(&mix));
        for t in 0..30 {
            assert!((um[t] - (a * u1[t] + (1.0 - a) * u2[t])).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_empty() {
        assert!(BasisEncoding::new(0, 3).is_err());
        assert!(BasisEncoding::new(3, 0).is_err());
    }

    #[test]
    fn serde_stores_only_the_spec() {
        let enc = BasisEncoding::new(10, 3).unwrap();
        let text = serde_json::to_string(&enc).unwrap();
        assert_eq!(text, r#"{"horizon":10,"count":3}"#);
        let back: BasisEncoding = serde_json::from_str(&text).unwrap();
        assert_eq!(back, enc);
    }
}
