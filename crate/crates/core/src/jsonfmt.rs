//! Byte-stable JSON: keys sorted, floats at a fixed four decimals, two-space
//! indentation, trailing newline.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;

pub const FLOAT_DECIMALS: usize = 4;

struct FixedFloat<'a> {
    inner: PrettyFormatter<'a>,
}

impl FixedFloat<'_> {
    fn write_fixed<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        if !v.is_finite() {
            return w.write_all(b"null");
        }
        let s = format!("{v:.FLOAT_DECIMALS$}");
        // "-0.0000" and "0.0000" must be the same bytes
        if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
            w.write_all(&s.as_bytes()[1..])
        } else {
            w.write_all(s.as_bytes())
        }
    }
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            #[inline]
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.inner.$name(w $(, $arg)*)
            }
        )*
    };
}

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        self.write_fixed(w, v)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_fixed(w, v as f64)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

/// Serializes `value` through a sorted-key tree with fixed float precision.
pub fn to_stable_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    // Value's map is a BTreeMap, which sorts keys
    let tree = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        FixedFloat {
            inner: PrettyFormatter::with_indent(b"  "),
        },
    );
    tree.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

/// Rounds to the emitted precision, so in-memory values can be compared
/// with what a reload would produce.
pub fn round_fixed(v: f64) -> f64 {
    let s = format!("{v:.FLOAT_DECIMALS$}");
    s.parse().expect("formatted float parses")
}
