use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::NetsimError;
use crate::scalar::Scalar;

/// Network and CPU conditions applied to a recorded trace.
///
/// Link capacities may be infinite (serialized as `null`), which makes
/// transfers instantaneous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ThrottleProfile<T> {
    pub rtt_ms: T,
    #[serde(with = "unbounded")]
    pub downlink_kbps: T,
    #[serde(with = "unbounded")]
    pub uplink_kbps: T,
    pub cpu_multiplier: T,
}

impl<T: Scalar> ThrottleProfile<T> {
    /// Conventional simulated-4G conditions: 150 ms RTT, 1.6 Mbps down,
    /// 750 kbps up, 4x CPU slowdown.
    pub fn simulated_4g() -> Self {
        Self {
            rtt_ms: T::lit(150.0),
            downlink_kbps: T::lit(1638.0),
            uplink_kbps: T::lit(750.0),
            cpu_multiplier: T::lit(4.0),
        }
    }

    /// No throttling at all; [`super::apply_throttle`] leaves traces untouched.
    pub fn identity() -> Self {
        Self {
            rtt_ms: T::zero(),
            downlink_kbps: T::infinity(),
            uplink_kbps: T::infinity(),
            cpu_multiplier: T::one(),
        }
    }

    pub fn with_cpu_multiplier(mut self, cpu_multiplier: T) -> Self {
        self.cpu_multiplier = cpu_multiplier;
        self
    }

    pub fn check(&self) -> Result<(), NetsimError> {
        let bad = |what: &str| Err(NetsimError::InvalidProfile(what.to_string()));
        if !self.rtt_ms.is_finite() || self.rtt_ms < T::zero() {
            return bad("rtt_ms must be finite and >= 0");
        }
        if self.downlink_kbps.is_nan() || self.downlink_kbps <= T::zero() {
            return bad("downlink_kbps must be > 0");
        }
        if self.uplink_kbps.is_nan() || self.uplink_kbps <= T::zero() {
            return bad("uplink_kbps must be > 0");
        }
        if !self.cpu_multiplier.is_finite() || self.cpu_multiplier < T::one() {
            return bad("cpu_multiplier must be finite and >= 1");
        }
        Ok(())
    }
}

mod unbounded {
    use super::*;

    pub fn serialize<T: Scalar + Serialize, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: Scalar + Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Option::<T>::deserialize(d)?.unwrap_or_else(T::infinity))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_serializes_unbounded_as_null() {
        let p = ThrottleProfile::<f64>::identity();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(
            s,
            r#"{"rtt_ms":0.0,"downlink_kbps":null,"uplink_kbps":null,"cpu_multiplier":1.0}"#
        );
        let back: ThrottleProfile<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn validation() {
        assert!(ThrottleProfile::<f64>::simulated_4g().check().is_ok());
        let mut p = ThrottleProfile::<f64>::simulated_4g();
        p.cpu_multiplier = 0.5;
        assert!(p.check().is_err());
        let mut p = ThrottleProfile::<f64>::simulated_4g();
        p.downlink_kbps = 0.0;
        assert!(p.check().is_err());
        let mut p = ThrottleProfile::<f64>::simulated_4g();
        p.rtt_ms = -1.0;
        assert!(p.check().is_err());
    }
}
