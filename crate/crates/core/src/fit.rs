//! Log-linear least-squares fits of exponential tails.

use serde::Serialize;

use crate::error::{Error, Result};

/// Values at or below this are treated as underflowed.
pub const UNDERFLOW: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    /// Decay as the coordinate goes to `-inf`: `f ~ K e^{k s}`.
    Left,
    /// Decay as the coordinate goes to `+inf`: `f ~ K e^{-k s}`.
    Right,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayFit {
    pub tail: Tail,
    pub k: f64,
    #[serde(rename = "K")]
    pub big_k: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    pub points: usize,
}

impl DecayFit {
    pub fn bound_at(&self, s: f64) -> f64 {
        match self.tail {
            Tail::Left => self.big_k * (self.k * s).exp(),
            Tail::Right => self.big_k * (-self.k * s).exp(),
        }
    }
}

pub fn fit_exponential(coords: &[f64], values: &[f64], tail: Tail) -> Result<DecayFit> {
    if coords.len() != values.len() || coords.len() < 3 {
        return Err(Error::FitDegenerate("need at least three samples".into()));
    }
    if let Some(v) = values.iter().find(|v| !(v.abs() > UNDERFLOW)) {
        return Err(Error::FitDegenerate(format!(
            "tail value {v:e} below {UNDERFLOW:e}"
        )));
    }
    let n = coords.len() as f64;
    let logs: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
    let mx = coords.iter().sum::<f64>() / n;
    let my = logs.iter().sum::<f64>() / n;
    let sxx: f64 = coords.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = coords
        .iter()
        .zip(&logs)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = coords
        .iter()
        .zip(&logs)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let k = match tail {
        Tail::Left => slope,
        Tail::Right => -slope,
    };
    Ok(DecayFit {
        tail,
        k,
        big_k: intercept.exp(),
        residual: (rss / n).sqrt(),
        points: coords.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_pure_exponential() {
        let xs: Vec<f64> = (0..50).map(|i| 5.0 + 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (-1.7 * x).exp()).collect();
        let f = fit_exponential(&xs, &ys, Tail::Right).unwrap();
        assert!((f.k - 1.7).abs() < 1e-10 && (f.big_k - 3.0).abs() < 1e-8);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        let f = fit_exponential(&neg, &ys, Tail::Left).unwrap();
        assert!((f.k - 1.7).abs() < 1e-10);
        assert!((f.bound_at(-6.0) - 3.0 * (-1.7f64 * 6.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn zero_tail_is_degenerate() {
        let xs = [1.0, 2.0, 3.0];
        assert!(matches!(
            fit_exponential(&xs, &[0.0; 3], Tail::Right),
            Err(Error::FitDegenerate(_))
        ));
    }
}
