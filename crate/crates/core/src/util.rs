//! Small shared helpers: bit-exact float formatting and JSON emission.

use std::io;

use serde::Serialize;

/// Format a float with 17 significant digits (`{:.16e}`), enough for an
/// `f64` to survive a text round trip bit-exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// serde_json formatter that writes all floats with 17 significant digits so
/// that reloading a document reproduces exactly the same bits.
pub struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{:.16e}", value)
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        // 9 significant digits round-trip any f32.
        write!(writer, "{:.8e}", value)
    }
}

/// Serialize `value` to a JSON byte vector with 17-significant-digit floats.
pub fn to_json_vec<T: Serialize>(value: &T) -> crate::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigitFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| crate::Error::Format(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Parse a JSON document produced by [`to_json_vec`] (or any JSON).
pub fn from_json_slice<'a, T: serde::Deserialize<'a>>(bytes: &'a [u8]) -> crate::Result<T> {
    serde_json::from_slice(bytes).map_err(|e| crate::Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fmt_f64_examples() {
        assert_eq!(fmt_f64(1.3), "1.3000000000000000e0");
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
        assert_eq!(fmt_f64(-45.25), "-4.5250000000000000e1");
    }

    proptest! {
        #[test]
        fn f64_text_round_trip_is_bit_exact(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = fmt_f64(x);
            let y: f64 = s.parse().unwrap();
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }

        #[test]
        fn json_float_round_trip_is_bit_exact(x in proptest::num::f64::NORMAL) {
            let bytes = to_json_vec(&vec![x]).unwrap();
            let back: Vec<f64> = from_json_slice(&bytes).unwrap();
            prop_assert_eq!(back[0].to_bits(), x.to_bits());
        }
    }
}
