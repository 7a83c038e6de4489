use serde::{Deserialize, Serialize};

use super::GroundingError;

/// Tolerance on a distribution's total mass.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    /// Earth mover's distance on the ordered support `0..n`.
    Emd,
    /// Kullback-Leibler divergence `KL(d || u)`, natural log.
    Kl,
}

/// Checks non-negative finite entries summing to one.
pub fn check_distribution(values: &[f64]) -> Result<(), String> {
    if values.is_empty() {
        return Err("distribution is empty".into());
    }
    if let Some((i, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        return Err(format!("entry {i} is {v}; entries must be finite and >= 0"));
    }
    let mass: f64 = values.iter().sum();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(format!("entries sum to {mass}, expected 1"));
    }
    Ok(())
}

pub fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

pub fn distribution_distance(kind: Distance, d: &[f64], u: &[f64]) -> Result<f64, GroundingError> {
    if d.len() != u.len() {
        return Err(GroundingError::LengthMismatch {
            left: d.len(),
            right: u.len(),
        });
    }
    for (name, dist) in [("left", d), ("right", u)] {
        check_distribution(dist).map_err(|reason| GroundingError::InvalidDistribution {
            name: name.into(),
            reason,
        })?;
    }
    match kind {
        Distance::Emd => {
            let mut cd = 0.0;
            let mut cu = 0.0;
            let mut total = 0.0;
            for (a, b) in d.iter().zip(u) {
                cd += a;
                cu += b;
                total += (cd - cu).abs();
            }
            Ok(total)
        }
        Distance::Kl => {
            let mut total = 0.0;
            for (i, (&a, &b)) in d.iter().zip(u).enumerate() {
                if a == 0.0 {
                    continue;
                }
                if b == 0.0 {
                    return Err(GroundingError::KlSupport { index: i });
                }
                total += a * (a / b).ln();
            }
            Ok(total.max(0.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_values() {
        assert_eq!(
            distribution_distance(Distance::Emd, &[1.0, 0.0], &[0.5, 0.5]).unwrap(),
            0.5
        );
        let kl = distribution_distance(Distance::Kl, &[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((kl - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(
            distribution_distance(Distance::Kl, &[0.5, 0.5], &[0.5, 0.5]).unwrap(),
            0.0
        );
        let d = [0.2, 0.3, 0.5];
        assert_eq!(distribution_distance(Distance::Emd, &d, &d).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            distribution_distance(Distance::Emd, &[1.0], &[0.5, 0.5]),
            Err(GroundingError::LengthMismatch { left: 1, right: 2 })
        ));
        assert!(matches!(
            distribution_distance(Distance::Kl, &[0.5, 0.5], &[1.0, 0.0]),
            Err(GroundingError::KlSupport { index: 1 })
        ));
        assert!(distribution_distance(Distance::Emd, &[0.7, 0.7], &[0.5, 0.5]).is_err());
        assert!(distribution_distance(Distance::Emd, &[1.5, -0.5], &[0.5, 0.5]).is_err());
        assert!(distribution_distance(Distance::Emd, &[], &[]).is_err());
    }
}
