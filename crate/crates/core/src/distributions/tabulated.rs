use serde::{Deserialize, Serialize};

use super::{DistError, Quantile};

/// One tabulated point of a distribution function.
///
/// `continuous` says whether F is continuous at `x`: if so, F is the linear
/// interpolant from the previous breakpoint up to `x`; otherwise F stays at
/// the previous level on `[x_prev, x)` and jumps at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub x: f64,
    pub cdf: f64,
    pub continuous: bool,
}

/// Distribution function given by a table of breakpoints, continued past the
/// last breakpoint by the power tail
/// `1 - F(x) = (1 - F(x_last)) (x / x_last)^{-tail_alpha}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    points: Vec<Breakpoint>,
    tail_alpha: f64,
    /// moments[i] = integral of x dF over [0, x_i].
    moments: Vec<f64>,
}

impl Tabulated {
    pub fn new(points: Vec<Breakpoint>, tail_alpha: f64) -> Result<Self, DistError> {
        if points.is_empty() {
            return Err(DistError::InvalidTable("no breakpoints".into()));
        }
        if !(tail_alpha > 0.0 && tail_alpha <= 1.0) {
            return Err(DistError::InvalidParameter {
                name: "tail_alpha",
                value: tail_alpha,
                reason: "must lie in (0, 1] for an infinite-mean tail",
            });
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.x > 0.0) {
                return Err(DistError::InvalidTable(format!(
                    "breakpoint {i}: x = {} is not a positive finite number",
                    p.x
                )));
            }
            if !(0.0..1.0).contains(&p.cdf) {
                return Err(DistError::InvalidTable(format!(
                    "breakpoint {i}: F = {} outside [0, 1)",
                    p.cdf
                )));
            }
            if i > 0 {
                let q = &points[i - 1];
                if p.x <= q.x {
                    return Err(DistError::InvalidTable(format!(
                        "breakpoint {i}: x must be strictly increasing"
                    )));
                }
                if p.cdf < q.cdf {
                    return Err(DistError::InvalidTable(format!(
                        "breakpoint {i}: F must be nondecreasing"
                    )));
                }
            }
        }
        if points[0].continuous && points[0].cdf != 0.0 {
            return Err(DistError::InvalidTable(
                "breakpoint 0 is flagged continuous but F(x_0) > 0 (F vanishes below x_0)".into(),
            ));
        }
        let mut moments = Vec::with_capacity(points.len());
        moments.push(points[0].x * points[0].cdf);
        for i in 1..points.len() {
            let (a, b) = (points[i - 1], points[i]);
            let piece = if b.continuous {
                let slope = (b.cdf - a.cdf) / (b.x - a.x);
                slope * (b.x - a.x) * (b.x + a.x) / 2.0
            } else {
                b.x * (b.cdf - a.cdf)
            };
            moments.push(moments[i - 1] + piece);
        }
        Ok(Self {
            points,
            tail_alpha,
            moments,
        })
    }

    pub fn points(&self) -> &[Breakpoint] {
        &self.points
    }

    pub fn tail_alpha(&self) -> f64 {
        self.tail_alpha
    }

    fn last(&self) -> &Breakpoint {
        self.points.last().unwrap()
    }

    pub fn support_start(&self) -> f64 {
        self.points[0].x
    }

    /// Where the power tail takes over.
    pub fn tail_start(&self) -> f64 {
        self.last().x
    }

    /// Index of the last breakpoint with x_i <= x.
    fn floor_index(&self, x: f64) -> Option<usize> {
        self.points.partition_point(|p| p.x <= x).checked_sub(1)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.floor_index(x) {
            None => 0.0,
            Some(i) if i + 1 == self.points.len() => 1.0 - self.tail_survival(x),
            Some(i) => {
                let (a, b) = (self.points[i], self.points[i + 1]);
                if b.continuous {
                    a.cdf + (b.cdf - a.cdf) * (x - a.x) / (b.x - a.x)
                } else {
                    a.cdf
                }
            }
        }
    }

    pub fn cdf_left(&self, x: f64) -> f64 {
        match self.points.iter().position(|p| p.x == x) {
            Some(0) => 0.0,
            Some(j) if !self.points[j].continuous => self.points[j - 1].cdf,
            _ => self.cdf(x),
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x >= self.last().x {
            self.tail_survival(x)
        } else {
            1.0 - self.cdf(x)
        }
    }

    pub fn survival_left(&self, x: f64) -> f64 {
        if x > self.last().x {
            self.tail_survival(x)
        } else {
            1.0 - self.cdf_left(x)
        }
    }

    fn tail_survival(&self, x: f64) -> f64 {
        let last = self.last();
        (1.0 - last.cdf) * (x / last.x).powf(-self.tail_alpha)
    }

    pub fn quantile(&self, y: f64) -> Result<Quantile, DistError> {
        if y <= 0.0 {
            return Ok(Quantile::Finite(self.points[0].x));
        }
        if y >= 1.0 {
            return Ok(Quantile::Infinite);
        }
        let j = self.points.partition_point(|p| p.cdf < y);
        if j == self.points.len() {
            let last = self.last();
            let x = last.x * ((1.0 - y) / (1.0 - last.cdf)).powf(-1.0 / self.tail_alpha);
            return if x.is_finite() {
                Ok(Quantile::Finite(x))
            } else {
                Err(DistError::OutOfRange {
                    what: format!("quantile({y}) of the tabulated tail"),
                })
            };
        }
        if j == 0 {
            return Ok(Quantile::Finite(self.points[0].x));
        }
        let (a, b) = (self.points[j - 1], self.points[j]);
        if b.continuous && y < b.cdf {
            let x = a.x + (y - a.cdf) / (b.cdf - a.cdf) * (b.x - a.x);
            Ok(Quantile::Finite(x.clamp(a.x, b.x)))
        } else {
            Ok(Quantile::Finite(b.x))
        }
    }

    pub fn truncated_moment(&self, t: f64) -> f64 {
        match self.floor_index(t) {
            None => 0.0,
            Some(i) if i + 1 == self.points.len() => {
                let last = self.last();
                let q = 1.0 - last.cdf;
                let r = (t / last.x).ln();
                let a = self.tail_alpha;
                let tail = if a == 1.0 {
                    q * last.x * r
                } else {
                    q * a * last.x / (1.0 - a) * ((1.0 - a) * r).exp_m1()
                };
                self.moments[i] + tail
            }
            Some(i) => {
                let (a, b) = (self.points[i], self.points[i + 1]);
                if b.continuous {
                    let slope = (b.cdf - a.cdf) / (b.x - a.x);
                    self.moments[i] + slope * (t - a.x) * (t + a.x) / 2.0
                } else {
                    self.moments[i]
                }
            }
        }
    }

    /// Whether F(x) < F(t) for every x < t, i.e. F^{<-}(F(t)) = t.
    pub fn is_fixed_point(&self, t: f64) -> bool {
        let first = self.points[0].x;
        if t < first {
            return false;
        }
        if t == first || t > self.last().x {
            return true;
        }
        let j = self.points.partition_point(|p| p.x < t);
        let (a, b) = (self.points[j - 1], self.points[j]);
        if b.x == t && !b.continuous {
            b.cdf > a.cdf
        } else {
            b.continuous && b.cdf > a.cdf
        }
    }

    /// Location of the last atom, if any.
    pub fn last_atom(&self) -> Option<f64> {
        let mut last = None;
        for (i, p) in self.points.iter().enumerate() {
            let jump = if i == 0 {
                p.cdf
            } else if p.continuous {
                0.0
            } else {
                p.cdf - self.points[i - 1].cdf
            };
            if jump > 0.0 {
                last = Some(p.x);
            }
        }
        last
    }
}
