//! Number formatting shared by the CSV and JSON writers.

use serde::Serializer;
use serde_json::value::RawValue;

use crate::scalar::{to_f64, Real};

/// 17 significant digits, `nan`/`inf`/`-inf` for non-finite values.
pub fn sig17<T: Real>(x: T) -> String {
    let v = to_f64(x);
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// Serializes a float as a JSON number with 17 significant digits; non-finite values become `null`.
pub fn json_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        let raw = RawValue::from_string(format!("{x:.16e}")).map_err(serde::ser::Error::custom)?;
        serde::Serialize::serialize(&raw, s)
    } else {
        s.serialize_none()
    }
}

pub fn json_f64_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct Wrap(f64);
    impl serde::Serialize for Wrap {
        fn serialize<S2: Serializer>(&self, s: S2) -> Result<S2::Ok, S2::Error> {
            json_f64(&self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for &x in xs {
        seq.serialize_element(&Wrap(x))?;
    }
    seq.end()
}
