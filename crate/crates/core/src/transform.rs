//! Affine maps between a support box and the unit cube.

use serde::{Deserialize, Serialize};

use crate::bernstein::SupportBox;
use crate::em::Dataset;
use crate::error::{MableError, Result};

/// Default `auto_box` margin as a fraction of each coordinate's range.
pub const DEFAULT_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToUnit,
    FromUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub support: SupportBox,
    pub direction: Direction,
}

impl TransformSpec {
    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        match self.direction {
            Direction::ToUnit => to_unit(data, &self.support),
            Direction::FromUnit => from_unit(data, &self.support),
        }
    }
}

fn check_dim(data: &Dataset, support: &SupportBox) -> Result<()> {
    if data.dim() != support.dim() {
        return Err(MableError::DimensionMismatch {
            expected: support.dim(),
            got: data.dim(),
        });
    }
    Ok(())
}

/// `x_j = (y_j - a_j) / (b_j - a_j)` row by row. Rows on the box edge map to
/// 0 or 1; rows outside it are rejected with their index.
pub fn to_unit(data: &Dataset, support: &SupportBox) -> Result<Dataset> {
    check_dim(data, support)?;
    let mut out = Vec::with_capacity(data.n() * data.dim());
    for (row, y) in data.rows().enumerate() {
        for (j, &v) in y.iter().enumerate() {
            let (a, b) = (support.lower()[j], support.upper()[j]);
            if !(a <= v && v <= b) {
                return Err(MableError::RowOutsideBox { row, dim: j });
            }
            out.push(((v - a) / (b - a)).clamp(0.0, 1.0));
        }
    }
    Dataset::from_flat(out, data.dim())
}

/// Inverse of [`to_unit`].
pub fn from_unit(data: &Dataset, support: &SupportBox) -> Result<Dataset> {
    check_dim(data, support)?;
    let out = data
        .rows()
        .flat_map(|t| support.from_unit_point(t))
        .collect();
    Dataset::from_flat(out, data.dim())
}

/// Drops the rows that fall outside `support`.
pub fn truncate(data: &Dataset, support: &SupportBox) -> Result<Option<Dataset>> {
    check_dim(data, support)?;
    let kept: Vec<f64> = data
        .rows()
        .filter(|y| support.contains(y))
        .flat_map(|y| y.iter().copied())
        .collect();
    if kept.is_empty() {
        return Ok(None);
    }
    Dataset::from_flat(kept, data.dim()).map(Some)
}

/// Density on the box from the unit-cube mixture value: divides by `V_d`.
pub fn density_back_transform(unit_value: f64, support: &SupportBox) -> f64 {
    unit_value / support.volume()
}

/// `[min - margin * range, max + margin * range]` per dimension.
pub fn auto_box(data: &Dataset, margin: f64) -> Result<SupportBox> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(MableError::InvalidConfig(format!(
            "margin must be a nonnegative fraction, got {margin}"
        )));
    }
    if data.n() < 2 {
        return Err(MableError::InvalidData(
            "automatic box needs at least two observations".into(),
        ));
    }
    let mut lower = Vec::with_capacity(data.dim());
    let mut upper = Vec::with_capacity(data.dim());
    for j in 0..data.dim() {
        let (lo, hi) = data
            .rows()
            .map(|r| r[j])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        let range = hi - lo;
        if !(range > 0.0) {
            return Err(MableError::InvalidData(format!(
                "dimension {j} has zero range"
            )));
        }
        lower.push(lo - margin * range);
        upper.push(hi + margin * range);
    }
    SupportBox::new(lower, upper)
}
