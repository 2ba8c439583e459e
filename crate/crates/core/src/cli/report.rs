//! Report schema and its byte-stable JSON serialization.
//!
//! Every float is written in scientific notation with 17 significant digits
//! and fields appear in declaration order, so identical inputs produce
//! byte-identical files.

use std::collections::BTreeMap;
use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use super::scenario::{Output, Scenario};
use crate::linalg2::Complex2Matrix;
use crate::quadrature::GridConfig;
use crate::states::Basis;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Row-major `[[[re, im], [re, im]], [[re, im], [re, im]]]`.
pub type MatrixRepr = [[[f64; 2]; 2]; 2];

pub fn matrix_repr(m: &Complex2Matrix) -> MatrixRepr {
    let z = |i: usize, j: usize| [m.m[i][j].re, m.m[i][j].im];
    [[z(0, 0), z(0, 1)], [z(1, 0), z(1, 1)]]
}

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self { name: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION") }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridReport {
    pub config: GridConfig,
    pub nodes: usize,
    /// Grid with every node count doubled, used for convergence deltas.
    pub refined: GridConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateReport {
    pub label: String,
    pub basis: Basis,
    pub params: BTreeMap<String, f64>,
    /// Norm on the configured grid before renormalization.
    pub norm_squared_raw: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityOut {
    pub basis: Basis,
    pub matrix: MatrixRepr,
    pub trace: f64,
    /// Largest entrywise change against the refined grid.
    pub convergence_delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyOut {
    pub basis: Basis,
    pub eigenvalues: [f64; 2],
    pub entropy_bits: f64,
    pub convergence_delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct McOut {
    pub basis: Basis,
    pub n_samples: usize,
    pub seed: u64,
    pub sigmas: f64,
    pub value: MatrixRepr,
    pub std_error: [[f64; 2]; 2],
    /// Largest `|quadrature − mc| − sigmas · std_error` over entries.
    pub max_excess: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Expected {
    Scalar(f64),
    Matrix(MatrixRepr),
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOut {
    pub name: String,
    pub quantity: String,
    pub expected: Expected,
    pub tolerance: f64,
    pub deviation: f64,
    pub convergence_delta: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub scenario: Scenario,
    pub grid: GridReport,
    pub state: StateReport,
    pub densities: Vec<DensityOut>,
    pub entropies: Vec<EntropyOut>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub monte_carlo: Vec<McOut>,
    pub checks: Vec<CheckOut>,
    pub passed: bool,
}

impl Report {
    pub fn density(&self, basis: Basis) -> Option<&DensityOut> {
        self.densities.iter().find(|d| d.basis == basis)
    }

    pub fn entropy(&self, basis: Basis) -> Option<&EntropyOut> {
        self.entropies.iter().find(|e| e.basis == basis)
    }

    pub fn has_output(&self, o: Output) -> bool {
        self.scenario.outputs.contains(&o)
    }

    pub fn to_json(&self) -> String {
        to_fixed_json(self)
    }
}

/// `{:.16e}`: 17 significant digits, valid JSON number syntax.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON with every float printed by [`format_float`].
pub fn to_fixed_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloatFormatter::default());
    value.serialize(&mut ser).expect("report serialization is infallible");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON output is UTF-8")
}

#[derive(Default)]
struct FixedFloatFormatter {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}
