//! JSON documents for models and reports.
//!
//! Every real is written in scientific notation with 17 significant digits,
//! which round-trips any `f64` exactly. Non-finite reals become `null`.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::bernstein::{BernsteinModel, DegreeVector, MixtureCoefficients, SupportBox};
use crate::error::{MableError, Result};

pub const FORMAT_VERSION: u32 = 1;

/// `serde_json` formatter that pretty-prints and writes reals with 17
/// significant digits.
#[derive(Default)]
pub struct Sig17Formatter {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for Sig17Formatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(writer)
    }
}

/// Serializes any value with [`Sig17Formatter`].
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17Formatter::default());
    value
        .serialize(&mut ser)
        .map_err(|e| MableError::Serialization(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| MableError::Serialization(e.to_string()))
}

/// On-disk model layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub degrees: DegreeVector,
    pub support: SupportBox,
    /// Weights in lexicographic rank order of the multi-index, last index fastest.
    pub coefficients: MixtureCoefficients,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

impl ModelDocument {
    pub fn from_model(model: &BernsteinModel, provenance: Option<serde_json::Value>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            degrees: model.degrees().clone(),
            support: model.support().clone(),
            coefficients: model.coefficients().clone(),
            provenance,
        }
    }

    pub fn into_model(self) -> Result<BernsteinModel> {
        if self.format_version != FORMAT_VERSION {
            return Err(MableError::Serialization(format!(
                "unsupported model format_version {}",
                self.format_version
            )));
        }
        BernsteinModel::new(self.degrees, self.coefficients, self.support)
    }
}

pub fn model_to_json(model: &BernsteinModel, provenance: Option<serde_json::Value>) -> Result<String> {
    to_json_string(&ModelDocument::from_model(model, provenance))
}

pub fn model_from_json(text: &str) -> Result<BernsteinModel> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| MableError::Serialization(e.to_string()))?;
    doc.into_model()
}
