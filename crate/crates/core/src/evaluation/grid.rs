use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::descriptor::{Coefficients, DescriptorKind};
use crate::error::{Error, Result};

/// One tuning axis: `start, start + step, …` up to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub window: usize,
}

impl GridAxis {
    pub fn new(name: &str, start: f64, stop: f64, step: f64, window: usize) -> Result<Self> {
        let finite = start.is_finite() && stop.is_finite() && step.is_finite();
        if !finite || step <= 0.0 || stop < start {
            return Err(Error::invalid(format!(
                "axis {name}: range [{start}, {stop}] with step {step}"
            )));
        }
        if window == 0 || window.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "axis {name}: window {window} must be odd"
            )));
        }
        Ok(GridAxis {
            name: name.to_string(),
            start,
            stop,
            step,
            window,
        })
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid values, rounded to shed accumulated step error.
    pub fn values(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| ((self.start + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }
}

/// A rectangular grid of reparametrised coefficients for one descriptor.
/// Points are ordered lexicographically, the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub kind: DescriptorKind,
    pub axes: Vec<GridAxis>,
}

impl HyperGrid {
    /// Default tuning grid. Descriptors without hyperparameters get a
    /// single empty point.
    pub fn for_kind(kind: DescriptorKind) -> Self {
        let axes = match kind {
            DescriptorKind::Nnd => vec![GridAxis::new("k", 1.0, 20.0, 1.0, 3)],
            DescriptorKind::Lnnd | DescriptorKind::Lof => {
                vec![GridAxis::new("a", 0.5, 12.0, 0.01, 101)]
            }
            DescriptorKind::Svm => vec![
                GridAxis::new("nu", 0.05, 0.95, 0.1, 11),
                GridAxis::new("c", 0.05, 2.0, 0.1, 11),
            ],
            DescriptorKind::Alp => vec![
                GridAxis::new("a", 0.5, 12.0, 0.1, 11),
                GridAxis::new("b", 0.5, 12.0, 0.1, 11),
            ],
            DescriptorKind::Md | DescriptorKind::If | DescriptorKind::Eif => vec![],
        };
        HyperGrid {
            kind,
            axes: axes
                .into_iter()
                .collect::<Result<_>>()
                .expect("default axes are valid"),
        }
    }

    /// Replaces the axes, checking they match the descriptor.
    pub fn with_axes(kind: DescriptorKind, axes: Vec<GridAxis>) -> Result<Self> {
        let want = Coefficients::defaults(kind).point().len();
        if axes.len() != want {
            return Err(Error::invalid(format!(
                "{kind} grids need {want} axes, got {}",
                axes.len()
            )));
        }
        let grid = HyperGrid { kind, axes };
        for p in grid.points() {
            Coefficients::from_point(kind, &p)?;
        }
        Ok(grid)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(GridAxis::len).collect()
    }

    pub fn windows(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.window).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let values: Vec<Vec<f64>> = self.axes.iter().map(GridAxis::values).collect();
        let mut points = vec![Vec::new()];
        for axis in &values {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    pub fn coefficients(&self) -> Vec<Coefficients> {
        self.points()
            .iter()
            .map(|p| Coefficients::from_point(self.kind, p).expect("grid points are validated"))
            .collect()
    }
}

/// Centered rolling mean over a row-major array of any rank. Windows shrink
/// at the edges: each cell becomes the mean of the cells its window covers.
pub fn rolling_mean(values: &[f64], shape: &[usize], window: &[usize]) -> Result<Vec<f64>> {
    if shape.len() != window.len() {
        return Err(Error::shape(format!(
            "{}-d array with a {}-d window",
            shape.len(),
            window.len()
        )));
    }
    if values.len() != shape.iter().product::<usize>() {
        return Err(Error::shape(format!(
            "{} values do not fill shape {shape:?}",
            values.len()
        )));
    }
    if let Some(w) = window.iter().find(|&&w| w % 2 == 0) {
        return Err(Error::invalid(format!("window {w} is not odd")));
    }
    // A box mean factorises into successive 1-d means along each axis.
    let mut out = values.to_vec();
    for (axis, (&len, &w)) in shape.iter().zip(window).enumerate() {
        let stride: usize = shape[axis + 1..].iter().product();
        let half = w / 2;
        let src = out.clone();
        for (cell, slot) in out.iter_mut().enumerate() {
            let pos = (cell / stride) % len;
            let base = cell - pos * stride;
            let lo = pos.saturating_sub(half);
            let hi = (pos + half).min(len - 1);
            let sum: f64 = (lo..=hi).map(|p| src[base + p * stride]).sum();
            *slot = sum / (hi - lo + 1) as f64;
        }
    }
    Ok(out)
}

/// Mean over each dataset's classes, then the unweighted mean over datasets.
pub fn aggregate_weighted<K: Ord>(values: &[f64], datasets: &[K]) -> Result<f64> {
    if values.len() != datasets.len() || values.is_empty() {
        return Err(Error::shape(format!(
            "{} values with {} dataset ids",
            values.len(),
            datasets.len()
        )));
    }
    let mut groups: BTreeMap<&K, Vec<f64>> = BTreeMap::new();
    for (v, d) in values.iter().zip(datasets) {
        groups.entry(d).or_default().push(*v);
    }
    Ok(mean_sorted(groups.into_values().map(mean_sorted).collect()))
}

// Summing in sorted order makes the result independent of input order.
fn mean_sorted(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// First maximum in point order, which is the lexicographically smallest.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}
