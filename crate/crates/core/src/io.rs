//! Text formats for nodal fields and harmonic coefficients.
//!
//! A field file is one `#`-prefixed JSON header line followed by `nlat`
//! comma-separated rows of `nlon` values (latitude-major, θ increasing from
//! the north pole). Coefficients are a JSON array of `[l, m, value]` triples
//! in (l, m) order.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{GridMode, SphereField, SphereGrid};

pub const FIELD_LAYOUT: &str = "row-major latitude-then-longitude";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub n: usize,
    #[serde(rename = "L")]
    pub band_limit: usize,
    pub mode: GridMode,
    pub nlat: usize,
    pub nlon: usize,
    pub layout: String,
}

impl FieldHeader {
    pub fn of(grid: &SphereGrid) -> Self {
        FieldHeader {
            n: grid.dimension(),
            band_limit: grid.band_limit(),
            mode: grid.mode(),
            nlat: grid.nlat(),
            nlon: grid.nlon(),
            layout: FIELD_LAYOUT.to_string(),
        }
    }

    /// Rebuilds the grid the header describes.
    pub fn grid(&self) -> Result<Arc<SphereGrid>> {
        match self.mode {
            GridMode::Full2d => {
                if self.n != 3 {
                    return Err(Error::Parse(format!("full-2d fields live on S², header says n = {}", self.n)));
                }
                SphereGrid::full_with_nodes(self.band_limit, self.nlat, self.nlon)
            }
            GridMode::PolarSymmetric => {
                if self.nlon != 1 {
                    return Err(Error::Parse(format!("polar fields have one longitude, header says {}", self.nlon)));
                }
                SphereGrid::polar(self.n, self.band_limit, self.nlat)
            }
        }
    }
}

pub fn write_field(field: &SphereField) -> String {
    let grid = field.grid();
    let header = serde_json::to_string(&FieldHeader::of(grid)).expect("header serializes");
    let mut out = format!("# {header}\n");
    for row in field.values().chunks(grid.nlon()) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", line.join(",")).expect("writing to a string");
    }
    out
}

pub fn read_field(text: &str) -> Result<SphereField> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| Error::Parse("field file must start with a '#' JSON header line".into()))?;
    let header: FieldHeader = serde_json::from_str(header.trim())?;
    let grid = header.grid()?;
    let mut values = Vec::with_capacity(grid.len());
    let mut rows = 0;
    for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
        if row.len() != header.nlon {
            return Err(Error::Parse(format!("row {} has {} values, expected {}", i + 1, row.len(), header.nlon)));
        }
        values.extend(row);
        rows += 1;
    }
    if rows != header.nlat {
        return Err(Error::Parse(format!("found {rows} rows, expected {}", header.nlat)));
    }
    SphereField::new(grid, values)
}

pub fn write_coeffs(grid: &SphereGrid, coeffs: &[f64]) -> Result<String> {
    if coeffs.len() != grid.num_coeffs() {
        return Err(Error::Parse(format!("expected {} coefficients, got {}", grid.num_coeffs(), coeffs.len())));
    }
    let triples: Vec<(usize, i64, f64)> = grid
        .coeff_labels()
        .into_iter()
        .zip(coeffs)
        .map(|((l, m), c)| (l, m, *c))
        .collect();
    Ok(serde_json::to_string(&triples)?)
}

/// Reads `[l, m, value]` triples into the coefficient layout of `grid`;
/// absent harmonics are zero.
pub fn read_coeffs(grid: &SphereGrid, text: &str) -> Result<Vec<f64>> {
    let triples: Vec<(usize, i64, f64)> = serde_json::from_str(text)?;
    coeffs_from_triples(grid, &triples)
}

pub fn coeffs_from_triples(grid: &SphereGrid, triples: &[(usize, i64, f64)]) -> Result<Vec<f64>> {
    let mut coeffs = vec![0.0; grid.num_coeffs()];
    for &(l, m, value) in triples {
        let slot = grid.coeff_index(l, m).ok_or_else(|| {
            Error::Parse(format!("harmonic (l = {l}, m = {m}) is not representable on this grid"))
        })?;
        if !value.is_finite() {
            return Err(Error::Parse(format!("coefficient (l = {l}, m = {m}) is {value}")));
        }
        coeffs[slot] += value;
    }
    Ok(coeffs)
}
