//! Bounded, nonnegative, periodic piecewise-constant potentials.
//!
//! Segments are half-open `[left, right)`, so point evaluation at a segment
//! boundary returns the value of the segment to its right.

use crate::error::{ensure_domain, Error, Result};
use crate::grid::PERIOD;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub width: f64,
    pub height: f64,
}

/// Parameters of the wall/well family: a wall of height `eps^-2` on `[0, a)`
/// followed by a zero well on `[a, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WellFamily {
    pub eps: f64,
    pub a: f64,
}

impl WellFamily {
    pub fn mu(&self) -> f64 {
        small_parameter(self.eps, self.a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePotential {
    period: f64,
    segments: Vec<Segment>,
    label: String,
    family: Option<WellFamily>,
}

impl PiecewisePotential {
    pub fn new(period: f64, segments: Vec<Segment>, label: impl Into<String>) -> Result<Self> {
        ensure_domain(period.is_finite() && period > 0.0, "period", period, "must be positive")?;
        if segments.is_empty() {
            return Err(Error::Domain { name: "segments", value: 0.0, reason: "need at least one segment" });
        }
        for s in &segments {
            ensure_domain(s.width.is_finite() && s.width > 0.0, "width", s.width, "must be positive")?;
            ensure_domain(s.height.is_finite() && s.height >= 0.0, "height", s.height, "must be nonnegative")?;
        }
        let total: f64 = segments.iter().map(|s| s.width).sum();
        ensure_domain(
            ((total - period) / period).abs() <= 1e-12,
            "total width",
            total,
            "must equal the period",
        )?;
        Ok(Self { period, segments, label: label.into(), family: None })
    }

    /// Wall of height `eps^-2` on `(0, a)` and zero on `(a, 2π)`.
    pub fn wall_well(eps: f64, a: f64) -> Result<Self> {
        ensure_domain(eps.is_finite() && eps > 0.0, "eps", eps, "must be positive")?;
        ensure_domain(a > 0.0 && a < PERIOD, "a", a, "must lie in (0, 2π)")?;
        let segments = vec![
            Segment { width: a, height: eps.powi(-2) },
            Segment { width: PERIOD - a, height: 0.0 },
        ];
        let mut v = Self::new(PERIOD, segments, format!("wall-well eps={eps} a={a}"))?;
        v.family = Some(WellFamily { eps, a });
        Ok(v)
    }

    pub fn constant(height: f64) -> Result<Self> {
        Self::new(PERIOD, vec![Segment { width: PERIOD, height }], format!("constant {height}"))
    }

    pub fn free() -> Self {
        Self::constant(0.0).expect("zero potential is valid")
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn family(&self) -> Option<WellFamily> {
        self.family
    }

    pub fn max_height(&self) -> f64 {
        self.segments.iter().map(|s| s.height).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_height(&self) -> f64 {
        self.segments.iter().map(|s| s.height).fold(f64::INFINITY, f64::min)
    }

    /// Value of the periodic extension at `x`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let y = x.rem_euclid(self.period);
        let mut left = 0.0;
        for s in &self.segments {
            let right = left + s.width;
            if y < right {
                return s.height;
            }
            left = right;
        }
        // y rounds up to the period only through floating error
        self.segments[0].height
    }

    /// Node indices, in `[0, nodes)`, where segments start. Fails unless every
    /// boundary sits on a node of the uniform cell grid.
    pub fn boundary_nodes(&self, nodes: usize) -> Result<Vec<usize>> {
        let dx = self.period / nodes as f64;
        let mut out = Vec::with_capacity(self.segments.len());
        let mut left = 0.0;
        for s in &self.segments {
            let pos = left / dx;
            let idx = pos.round();
            if (pos - idx).abs() > 1e-8 {
                return Err(Error::Grid(format!(
                    "segment boundary at x = {left} is not on a node of a {nodes}-node cell grid"
                )));
            }
            out.push(idx as usize % nodes);
            left += s.width;
        }
        Ok(out)
    }

    /// Samples at `x_i = i·period/nodes`, assigned by node index so that the
    /// half-open convention holds exactly at boundary nodes.
    pub fn sample_cell(&self, nodes: usize) -> Result<Vec<f64>> {
        let starts = self.boundary_nodes(nodes)?;
        let mut out = vec![0.0; nodes];
        for (s, seg) in self.segments.iter().enumerate() {
            let lo = starts[s];
            let hi = if s + 1 < starts.len() { starts[s + 1] } else { nodes };
            for v in &mut out[lo..hi] {
                *v = seg.height;
            }
        }
        Ok(out)
    }
}

/// `mu = eps·exp(-a/eps)`, the slow-time scale of the tight-binding regime.
pub fn small_parameter(eps: f64, a: f64) -> f64 {
    eps * (-a / eps).exp()
}
