//! Age bases for the age-curve terms.
//!
//! Ages are standardized before expansion. The cubic polynomial basis is
//! `(z, z², z³)`; the spline basis is a clamped cubic B-spline with interior
//! knots at the training-age deciles, minus its first function (the
//! intercepts absorb the constant that the full basis spans).

use serde::{Deserialize, Serialize};

use crate::dataset::ColumnScale;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    CubicPolynomial,
    CubicSpline,
}

impl std::str::FromStr for BasisKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "cubic" | "cubic-polynomial" => Ok(BasisKind::CubicPolynomial),
            "spline" | "cubic-spline" => Ok(BasisKind::CubicSpline),
            _ => Err(format!("unknown basis `{s}` (cubic|spline)")),
        }
    }
}

impl BasisKind {
    pub fn label(self) -> &'static str {
        match self {
            BasisKind::CubicPolynomial => "cubic",
            BasisKind::CubicSpline => "spline",
        }
    }
}

const DEGREE: usize = 3;
const MIN_DISTINCT_AGES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub age_scale: ColumnScale,
    /// Interior knots in years (spline only).
    #[serde(default)]
    pub interior_knots: Vec<f64>,
    /// Boundary knots in years (spline only).
    #[serde(default)]
    pub boundary_knots: Option<(f64, f64)>,
}

/// A design row plus whether the age lay outside the fitted range.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRow {
    pub values: Vec<f64>,
    pub extrapolated: bool,
}

impl BasisSpec {
    pub fn polynomial(age_scale: ColumnScale) -> BasisSpec {
        BasisSpec {
            kind: BasisKind::CubicPolynomial,
            age_scale,
            interior_knots: Vec::new(),
            boundary_knots: None,
        }
    }

    /// Number of basis columns.
    pub fn dimension(&self) -> usize {
        match self.kind {
            BasisKind::CubicPolynomial => 3,
            BasisKind::CubicSpline => self.interior_knots.len() + DEGREE,
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        match self.kind {
            BasisKind::CubicPolynomial => vec!["age".into(), "age^2".into(), "age^3".into()],
            BasisKind::CubicSpline => (1..=self.dimension()).map(|k| format!("spline{k}")).collect(),
        }
    }

    pub fn design_row(&self, age: f64) -> Vec<f64> {
        self.design_row_flagged(age).values
    }

    pub fn design_row_flagged(&self, age: f64) -> DesignRow {
        match self.kind {
            BasisKind::CubicPolynomial => {
                let z = self.age_scale.apply(age);
                DesignRow {
                    values: vec![z, z * z, z * z * z],
                    extrapolated: self
                        .boundary_knots
                        .is_some_and(|(lo, hi)| age < lo || age > hi),
                }
            }
            BasisKind::CubicSpline => {
                let (full, extrapolated) = self.spline_full(age);
                DesignRow {
                    values: full[1..].to_vec(),
                    extrapolated,
                }
            }
        }
    }

    /// All `K + 4` B-spline values at `age`, extrapolated linearly beyond
    /// the boundary knots.
    pub fn spline_full(&self, age: f64) -> (Vec<f64>, bool) {
        let knots = self.knot_vector();
        let z = self.age_scale.apply(age);
        let lo = knots[0];
        let hi = knots[knots.len() - 1];
        if z < lo || z > hi {
            let edge = if z < lo { lo } else { hi };
            let value = bspline_values(&knots, edge);
            let slope = bspline_derivatives(&knots, edge);
            let full = value
                .iter()
                .zip(&slope)
                .map(|(v, d)| v + d * (z - edge))
                .collect();
            (full, true)
        } else {
            (bspline_values(&knots, z), false)
        }
    }

    /// Clamped knot vector on the standardized age scale.
    fn knot_vector(&self) -> Vec<f64> {
        let (lo, hi) = self
            .boundary_knots
            .expect("spline basis has boundary knots");
        let s = &self.age_scale;
        let mut knots = vec![s.apply(lo); DEGREE + 1];
        knots.extend(self.interior_knots.iter().map(|&k| s.apply(k)));
        knots.extend(std::iter::repeat_n(s.apply(hi), DEGREE + 1));
        knots
    }
}

/// Index `i` such that `knots[i] <= x < knots[i + 1]`, using the last
/// non-empty span at the right boundary.
fn find_span(knots: &[f64], x: f64) -> usize {
    let n_basis = knots.len() - DEGREE - 1;
    if x >= knots[n_basis] {
        return n_basis - 1;
    }
    let mut span = DEGREE;
    while span < n_basis - 1 && x >= knots[span + 1] {
        span += 1;
    }
    span
}

/// Cox–de Boor recursion for the nonzero functions at `x`, degree `p`.
fn nonzero_basis(knots: &[f64], span: usize, x: f64, p: usize) -> Vec<f64> {
    let mut values = vec![0.0; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    values[0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { values[r] / denom };
            values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        values[j] = saved;
    }
    values
}

fn bspline_values(knots: &[f64], x: f64) -> Vec<f64> {
    let n_basis = knots.len() - DEGREE - 1;
    let span = find_span(knots, x);
    let local = nonzero_basis(knots, span, x, DEGREE);
    let mut out = vec![0.0; n_basis];
    for (r, v) in local.into_iter().enumerate() {
        out[span - DEGREE + r] = v;
    }
    out
}

fn bspline_derivatives(knots: &[f64], x: f64) -> Vec<f64> {
    let n_basis = knots.len() - DEGREE - 1;
    let span = find_span(knots, x);
    // Degree-2 functions N_{span-2..=span, 2}.
    let lower = nonzero_basis(knots, span, x, DEGREE - 1);
    let degree2 = |i: isize| -> f64 {
        let offset = i - (span as isize - (DEGREE as isize - 1));
        if (0..DEGREE as isize).contains(&offset) {
            lower[offset as usize]
        } else {
            0.0
        }
    };
    let p = DEGREE as f64;
    let mut out = vec![0.0; n_basis];
    for (i, slot) in out.iter_mut().enumerate() {
        let a = knots[i + DEGREE] - knots[i];
        let b = knots[i + DEGREE + 1] - knots[i + 1];
        let ii = i as isize;
        let left = if a > 0.0 { degree2(ii) / a } else { 0.0 };
        let right = if b > 0.0 { degree2(ii + 1) / b } else { 0.0 };
        *slot = p * (left - right);
    }
    out
}

/// Empirical quantile by linear interpolation between order statistics.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    crate::stats::quantile_sorted(sorted, p)
}

/// Fit a basis to training ages: the age standardization always, and for
/// splines the nine interior decile knots and min/max boundary knots.
pub fn fit_knots(kind: BasisKind, ages: &[f64]) -> Result<BasisSpec> {
    if ages.is_empty() {
        return Err(Error::KnotDegeneracy("no ages".into()));
    }
    let sorted = crate::stats::sorted(ages);
    let range = (sorted[0], sorted[sorted.len() - 1]);
    if kind == BasisKind::CubicSpline {
        let mut distinct = sorted.clone();
        distinct.dedup();
        if distinct.len() < MIN_DISTINCT_AGES {
            return Err(Error::KnotDegeneracy(format!(
                "{} distinct ages, need at least {MIN_DISTINCT_AGES}",
                distinct.len()
            )));
        }
    }
    let age_scale = ColumnScale::fit("age", ages)?;
    match kind {
        BasisKind::CubicPolynomial => Ok(BasisSpec {
            boundary_knots: Some(range),
            ..BasisSpec::polynomial(age_scale)
        }),
        BasisKind::CubicSpline => {
            let knots: Vec<f64> = (1..=9).map(|d| percentile(&sorted, d as f64 / 10.0)).collect();
            let strictly_inside = knots.first().is_some_and(|&k| k > range.0)
                && knots.last().is_some_and(|&k| k < range.1)
                && knots.windows(2).all(|w| w[0] < w[1]);
            if !strictly_inside {
                return Err(Error::KnotDegeneracy(format!(
                    "decile knots {knots:?} are tied or touch the boundary {range:?}"
                )));
            }
            Ok(BasisSpec {
                kind,
                age_scale,
                interior_knots: knots,
                boundary_knots: Some(range),
            })
        }
    }
}
