use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

/// JSON formatter that prints every float with 17 significant digits, so
/// doubles survive a round trip.
struct RoundTripFloats;

impl Formatter for RoundTripFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, RoundTripFloats);
    value
        .serialize(&mut ser)
        .expect("serializing in-memory values cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Decimal rendering with 17 significant digits.
pub fn csv_number(x: f64) -> String {
    format!("{x:.16e}")
}
