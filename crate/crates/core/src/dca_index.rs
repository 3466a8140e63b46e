//! DCA index: a scalar in (0, 1) scoring a defensive counter-air mission from
//! missile economy, the reference aircraft's distance to its CAP point and the
//! opposing aircraft's distances to that same point.
//!
//! Distances are mapped onto a logit through a linear interpolation between a
//! 99% and a 1% anchor, then squashed with a logistic sigmoid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logit of the 99% output value, as tabulated (ln 99 rounded to 4 decimals).
pub const LOGIT_99: f64 = 4.5951;
/// Logit of the 1% output value.
pub const LOGIT_1: f64 = -4.5951;

/// Interpolation anchors for one sigmoid factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidLimits {
    /// Distance (m) mapped to the 99% output.
    pub x_99: f64,
    /// Distance (m) mapped to the 1% output.
    pub x_1: f64,
    pub y_99: f64,
    pub y_1: f64,
}

impl SigmoidLimits {
    pub fn new(x_99: f64, x_1: f64) -> Self {
        SigmoidLimits {
            x_99,
            x_1,
            y_99: LOGIT_99,
            y_1: LOGIT_1,
        }
    }

    /// Own-ship factor: 99% at 8 km from the CAP point, 1% at 12 km.
    pub fn reference() -> Self {
        Self::new(8_000.0, 12_000.0)
    }

    /// Enemy factor: 99% at 12 km from the CAP point, 1% at 8 km.
    pub fn enemy() -> Self {
        Self::new(12_000.0, 8_000.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_99, self.x_1, self.y_99, self.y_1]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("sigmoid limits must be finite"));
        }
        if self.x_99 == self.x_1 {
            return Err(Error::invalid("sigmoid limits need x_99 != x_1"));
        }
        if !(self.y_99 > 0.0 && self.y_99 == -self.y_1) {
            return Err(Error::invalid("sigmoid limits need y_99 = -y_1 > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcaIndexParams {
    /// Weight of the missile-availability ratio.
    pub w1: f64,
    /// Weight of the own-distance-to-CAP factor.
    pub w2: f64,
    /// Weight of the mean enemy-distance-to-CAP factor.
    pub w3: f64,
    pub ref_limits: SigmoidLimits,
    pub enemy_limits: SigmoidLimits,
}

impl Default for DcaIndexParams {
    fn default() -> Self {
        DcaIndexParams {
            w1: 0.2,
            w2: 0.4,
            w3: 0.4,
            ref_limits: SigmoidLimits::reference(),
            enemy_limits: SigmoidLimits::enemy(),
        }
    }
}

impl DcaIndexParams {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("w1", self.w1), ("w2", self.w2), ("w3", self.w3)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!("{name} must be a finite non-negative weight")));
            }
        }
        if ((self.w1 + self.w2 + self.w3) - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("weights must sum to 1"));
        }
        self.ref_limits.validate()?;
        self.enemy_limits.validate()?;
        if self.ref_limits.x_99 >= self.ref_limits.x_1 {
            return Err(Error::invalid("reference limits must decrease with distance (x_99 < x_1)"));
        }
        if self.enemy_limits.x_99 <= self.enemy_limits.x_1 {
            return Err(Error::invalid("enemy limits must increase with distance (x_99 > x_1)"));
        }
        Ok(())
    }
}

/// One time-stamped index value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexSample {
    pub t: f64,
    pub value: f64,
}

/// Linear map from a distance to a sigmoid input through the two anchors.
/// Not clamped: outside the anchor band the logit keeps growing and the
/// sigmoid saturates.
pub fn logit_interp(distance: f64, limits: &SigmoidLimits) -> f64 {
    let slope = (limits.y_99 - limits.y_1) / (limits.x_99 - limits.x_1);
    slope * (distance - limits.x_1) + limits.y_1
}

pub fn sigmoid(d: f64) -> f64 {
    1.0 / (1.0 + (-d).exp())
}

/// Distance factor in (0, 1) for one set of anchors.
#[inline]
pub fn distance_factor(distance: f64, limits: &SigmoidLimits) -> f64 {
    sigmoid(logit_interp(distance, limits))
}

/// Weighted DCA index for one reference aircraft.
///
/// `enemy_dists` holds the distance of every live opponent to the CAP point.
/// With no opponents left the enemy factor is 1, the limit of the N >= 1
/// expression as every distance grows without bound.
pub fn dca_index(
    m_avail: u32,
    m_total: u32,
    d_ref: f64,
    enemy_dists: &[f64],
    params: &DcaIndexParams,
) -> Result<f64> {
    if m_total == 0 {
        return Err(Error::invalid("m_total must be at least 1"));
    }
    if m_avail > m_total {
        return Err(Error::invalid(format!(
            "m_avail ({m_avail}) exceeds m_total ({m_total})"
        )));
    }
    if !(d_ref >= 0.0) || !d_ref.is_finite() {
        return Err(Error::invalid(format!("reference distance {d_ref} must be finite and >= 0")));
    }
    if let Some(bad) = enemy_dists.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
        return Err(Error::invalid(format!("enemy distance {bad} must be finite and >= 0")));
    }

    let missiles = f64::from(m_avail) / f64::from(m_total);
    let own = distance_factor(d_ref, &params.ref_limits);
    let enemy = if enemy_dists.is_empty() {
        1.0
    } else {
        enemy_dists
            .iter()
            .map(|&d| distance_factor(d, &params.enemy_limits))
            .sum::<f64>()
            / enemy_dists.len() as f64
    };
    Ok(params.w1 * missiles + params.w2 * own + params.w3 * enemy)
}

/// Mean index over an engagement window. Samples are taken at a fixed rate,
/// so the plain arithmetic mean is the time average.
pub fn engagement_target(series: &[IndexSample]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::invalid("engagement series is empty"));
    }
    if series.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(Error::invalid("engagement timestamps must be strictly increasing"));
    }
    Ok(series.iter().map(|s| s.value).sum::<f64>() / series.len() as f64)
}
