use crate::error::{config_err, Result};
use crate::topology::SensingType;

/// Sigmoidal delay utility of one sensing type.
///
/// `U(l) = 1 - c * (sigmoid(a * (l - b)) - d)` with `c = 1 + e^{-ab}` and
/// `d = 1 / (1 + e^{ab})`, so `U(0) = 1`, `U(inf) = 0` and the inflection
/// sits at the delay threshold `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityParams {
    /// Criticality `a`.
    pub criticality: f64,
    /// Nominal delay threshold `b`, in TTIs.
    pub delay_threshold: f64,
    c: f64,
    d: f64,
}

impl UtilityParams {
    pub fn new(criticality: f64, delay_threshold: f64) -> Result<Self> {
        if !(criticality > 0.0 && delay_threshold > 0.0) {
            return Err(config_err(format!(
                "utility needs a > 0 and b > 0, got a={criticality}, b={delay_threshold}"
            )));
        }
        let ab = criticality * delay_threshold;
        let e = ab.exp();
        Ok(UtilityParams {
            criticality,
            delay_threshold,
            c: (1.0 + e) / e,
            d: 1.0 / (1.0 + e),
        })
    }

    /// QoS pair of each plate-correlated sensing type, as
    /// `(threshold ms, criticality)`. Interference sensors carry no deadline.
    pub fn for_type(t: SensingType) -> Option<Self> {
        let (b, a) = match t {
            SensingType::Temperature => (8.0, 0.8),
            SensingType::Humidity => (12.0, 0.45),
            SensingType::Pressure => (16.0, 0.4),
            SensingType::Vibration => (10.0, 0.6),
            SensingType::Interference => return None,
        };
        Some(UtilityParams::new(a, b).expect("table values are positive"))
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Utility of a packet delivered `latency` TTIs after its trigger.
    ///
    /// Since `c * (1 - d) = 1`, `U(l) = c * (1 - sigmoid)`, which is evaluated
    /// directly to keep the tail positive.
    pub fn utility(&self, latency: f64) -> f64 {
        let z = self.criticality * (latency - self.delay_threshold);
        (self.c / (1.0 + z.exp())).min(1.0)
    }
}

/// Utility with no deadline: every delivery is worth 1.
pub fn flat_utility(_latency: f64) -> f64 {
    1.0
}
