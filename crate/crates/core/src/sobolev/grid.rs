use serde::{Deserialize, Serialize};

use super::{wrap, PERIOD};
use crate::error::{Error, Result};

/// An axis-aligned open box `(lo, hi)` in `ℝ^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Shape("box bounds must have equal, non-zero length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Input(format!("degenerate box {lo:?}..{hi:?}")));
        }
        Ok(BoxRegion { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn cube(lo: f64, hi: f64, m: usize) -> Result<Self> {
        Self::new(vec![lo; m], vec![hi; m])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains_open(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a < *v && *v < *b)
    }

    /// Signed distance to the boundary, positive inside (sup-norm geometry).
    pub fn depth(&self, x: &[f64]) -> f64 {
        x.iter().zip(self.lo.iter().zip(&self.hi)).map(|(v, (a, b))| (v - a).min(b - v)).fold(f64::INFINITY, f64::min)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (b - a)).collect()
    }

    /// The box enlarged by `delta` on every side (shrunk for negative `delta`).
    pub fn grown(&self, delta: f64) -> Result<Self> {
        Self::new(self.lo.iter().map(|a| a - delta).collect(), self.hi.iter().map(|b| b + delta).collect())
    }

    /// Smallest gap between the closure of `inner` and the complement of `self`.
    /// Positive iff `closure(inner) ⊂ self`.
    pub fn margin_around(&self, inner: &BoxRegion) -> f64 {
        (0..self.dim()).map(|a| (inner.lo[a] - self.lo[a]).min(self.hi[a] - inner.hi[a])).fold(f64::INFINITY, f64::min)
    }
}

/// Where the sample nodes of a [`GridDomain`] live.
#[derive(Clone, Debug, PartialEq)]
pub enum Window {
    /// Every node of the torus lattice.
    FullTorus,
    /// Nodes strictly inside a box of the fundamental domain.
    Box(BoxRegion),
}

/// The nodes of the uniform torus lattice `origin + 2π j / n` that fall in a
/// window.
///
/// Masked nodes are ordered row-major by their position inside the window,
/// so along each axis they form the progression `first + h q`,
/// `q = 0..count`, with `h = 2π / n`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDomain {
    m: usize,
    resolution: Vec<usize>,
    origin: Vec<f64>,
    window: Window,
    first: Vec<f64>,
    count: Vec<usize>,
    first_lattice: Vec<usize>,
}

impl GridDomain {
    pub fn full(m: usize, n: usize) -> Result<Self> {
        Self::build(vec![0.0; m], vec![n; m], Window::FullTorus)
    }

    pub fn boxed(window: BoxRegion, n: usize) -> Result<Self> {
        let m = window.dim();
        Self::boxed_with_origin(window, vec![0.0; m], n)
    }

    pub fn boxed_with_origin(window: BoxRegion, origin: Vec<f64>, n: usize) -> Result<Self> {
        let m = window.dim();
        Self::build(origin, vec![n; m], Window::Box(window))
    }

    /// General constructor; the mask is derived from the window.
    pub fn build(origin: Vec<f64>, resolution: Vec<usize>, window: Window) -> Result<Self> {
        let m = origin.len();
        if m != 1 && m != 2 {
            return Err(Error::Input(format!("grid dimension must be 1 or 2, got {m}")));
        }
        if resolution.len() != m || resolution.contains(&0) {
            return Err(Error::Input("grid needs a positive resolution per axis".into()));
        }
        if let Window::Box(b) = &window {
            if b.dim() != m {
                return Err(Error::Shape("window dimension differs from grid dimension".into()));
            }
            if b.lo.iter().any(|a| *a < 0.0) || b.hi.iter().any(|h| *h > PERIOD) {
                return Err(Error::Input(format!(
                    "window {:?}..{:?} leaves the fundamental domain [0, 2π)",
                    b.lo, b.hi
                )));
            }
        }
        let mut first = Vec::with_capacity(m);
        let mut count = Vec::with_capacity(m);
        let mut first_lattice = Vec::with_capacity(m);
        for a in 0..m {
            let n = resolution[a];
            let h = PERIOD / n as f64;
            let mut inside: Vec<(f64, usize)> = (0..n)
                .map(|j| (wrap(origin[a] + h * j as f64), j))
                .filter(|(c, _)| match &window {
                    Window::FullTorus => true,
                    Window::Box(b) => b.lo[a] < *c && *c < b.hi[a],
                })
                .collect();
            inside.sort_by(|x, y| x.0.total_cmp(&y.0));
            match inside.first() {
                Some((c, j)) => {
                    first.push(*c);
                    first_lattice.push(*j);
                    count.push(inside.len());
                }
                None => {
                    first.push(0.0);
                    first_lattice.push(0);
                    count.push(0);
                }
            }
        }
        Ok(GridDomain {
            m,
            resolution,
            origin: origin.into_iter().map(wrap).collect(),
            window,
            first,
            count,
            first_lattice,
        })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn is_full(&self) -> bool {
        matches!(self.window, Window::FullTorus)
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        PERIOD / self.resolution[axis] as f64
    }

    pub fn axis_count(&self, axis: usize) -> usize {
        self.count[axis]
    }

    pub fn axis_first(&self, axis: usize) -> f64 {
        self.first[axis]
    }

    pub fn len(&self) -> usize {
        self.count.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-axis position `q` of masked node `i`.
    pub fn axis_positions(&self, i: usize) -> [usize; 2] {
        if self.m == 1 {
            [i, 0]
        } else {
            [i / self.count[1], i % self.count[1]]
        }
    }

    pub fn coords(&self, i: usize) -> Vec<f64> {
        let q = self.axis_positions(i);
        (0..self.m).map(|a| self.first[a] + self.spacing(a) * q[a] as f64).collect()
    }

    /// Flat lattice indices `Σ j_a n^{m-1-a}` of the masked nodes, in node order.
    pub fn mask(&self) -> Vec<usize> {
        (0..self.len())
            .map(|i| {
                let q = self.axis_positions(i);
                (0..self.m)
                    .fold(0, |acc, a| acc * self.resolution[a] + (self.first_lattice[a] + q[a]) % self.resolution[a])
            })
            .collect()
    }

    /// Whether `x` lies in the (open) window; always true on the full torus.
    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.window {
            Window::FullTorus => true,
            Window::Box(b) => b.contains_open(x),
        }
    }

    /// Index of the masked node at `x`, if `x` is one (relative tolerance
    /// `1e-7` of the spacing).
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.m {
            return None;
        }
        let mut idx = 0;
        for (a, xa) in x.iter().enumerate() {
            let h = self.spacing(a);
            let mut t = (xa - self.first[a]) / h;
            if self.is_full() {
                t = t.rem_euclid(self.resolution[a] as f64);
            }
            let q = t.round();
            if (t - q).abs() > 1e-7 {
                return None;
            }
            let q = if self.is_full() {
                (q as usize) % self.resolution[a]
            } else if q < 0.0 || q as usize >= self.count[a] {
                return None;
            } else {
                q as usize
            };
            idx = idx * self.count[a] + q;
        }
        Some(idx)
    }

    /// Nodes sit on a common lattice (same resolution, congruent origins).
    pub fn same_lattice(&self, other: &GridDomain) -> bool {
        self.m == other.m
            && self.resolution == other.resolution
            && (0..self.m).all(|a| {
                let h = self.spacing(a);
                let t = (self.origin[a] - other.origin[a]) / h;
                (t - t.round()).abs() < 1e-7
            })
    }
}
