use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::DistError;
use crate::sum::CompensatedSum;

/// Largest atom index of the squared-powers example whose location 2^{k^2}
/// is a finite double.
pub const STEP_EXAMPLE_MAX_F64_INDEX: u64 = 31;

/// A point mass of an atomic distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Purely atomic distribution with atoms indexed 1, 2, ... in increasing
/// location order. Either an explicit finite table or the lazily generated
/// law with atoms at 2^{k^2} and F = 1 - 1/(k+1)^2 there.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicStep {
    kind: Kind,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Table(Table),
    SquaredPowers,
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    locations: Vec<f64>,
    masses: Vec<f64>,
    /// cumulative[i] = F(locations[i]).
    cumulative: Vec<f64>,
    /// moments[i] = sum_{j <= i} locations[j] * masses[j].
    moments: Vec<f64>,
}

impl AtomicStep {
    /// F := sum_j (1 - 1/j^2) 1_{[2^{(j-1)^2}, 2^{j^2})}: atoms at 2^{k^2},
    /// k >= 1, with F(2^{k^2}) = 1 - 1/(k+1)^2. Support starts at 2.
    pub fn squared_powers() -> Self {
        Self {
            kind: Kind::SquaredPowers,
        }
    }

    pub fn from_atoms(atoms: &[Atom]) -> Result<Self, DistError> {
        if atoms.is_empty() {
            return Err(DistError::InvalidTable("no atoms".into()));
        }
        let mut prev = 0.0;
        for (i, a) in atoms.iter().enumerate() {
            if !(a.location.is_finite() && a.location > 0.0) {
                return Err(DistError::InvalidTable(format!(
                    "atom {i}: location {} is not a positive finite number",
                    a.location
                )));
            }
            if i > 0 && a.location <= prev {
                return Err(DistError::InvalidTable(format!(
                    "atom {i}: locations must be strictly increasing"
                )));
            }
            if !(a.mass > 0.0 && a.mass <= 1.0) {
                return Err(DistError::InvalidTable(format!(
                    "atom {i}: mass {} outside (0, 1]",
                    a.mass
                )));
            }
            prev = a.location;
        }
        let mut total = CompensatedSum::new();
        let mut moment = CompensatedSum::new();
        let mut cumulative = Vec::with_capacity(atoms.len());
        let mut moments = Vec::with_capacity(atoms.len());
        for a in atoms {
            total.add(a.mass);
            moment.add(a.mass * a.location);
            cumulative.push(total.value());
            moments.push(moment.value());
        }
        let sum = total.value();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(DistError::InvalidTable(format!(
                "atom masses sum to {sum}, expected 1"
            )));
        }
        // Pin lim F = 1 exactly; earlier partial sums stay below it.
        for c in cumulative.iter_mut() {
            *c = c.min(1.0);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self {
            kind: Kind::Table(Table {
                locations: atoms.iter().map(|a| a.location).collect(),
                masses: atoms.iter().map(|a| a.mass).collect(),
                cumulative,
                moments,
            }),
        })
    }

    pub fn is_squared_powers(&self) -> bool {
        matches!(self.kind, Kind::SquaredPowers)
    }

    /// Number of atoms, `None` when unbounded.
    pub fn atom_count(&self) -> Option<u64> {
        match &self.kind {
            Kind::Table(t) => Some(t.locations.len() as u64),
            Kind::SquaredPowers => None,
        }
    }

    /// F at the k-th atom (k >= 1); F before the first atom is 0.
    pub fn cumulative(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Table(t) => t.cumulative[(k - 1) as usize],
            Kind::SquaredPowers => {
                let j = (k + 1) as f64;
                1.0 - 1.0 / (j * j)
            }
        }
    }

    /// 1 - F at the k-th atom, without cancellation where a closed form exists.
    pub fn tail(&self, k: u64) -> f64 {
        match &self.kind {
            Kind::Table(_) => 1.0 - self.cumulative(k),
            Kind::SquaredPowers => {
                let j = (k + 1) as f64;
                1.0 / (j * j)
            }
        }
    }

    pub fn mass(&self, k: u64) -> f64 {
        match &self.kind {
            Kind::Table(t) => t.masses[(k - 1) as usize],
            Kind::SquaredPowers => self.cumulative(k) - self.cumulative(k - 1),
        }
    }

    /// Location of the k-th atom, `None` when it exceeds the double range.
    pub fn location(&self, k: u64) -> Option<f64> {
        match &self.kind {
            Kind::Table(t) => t.locations.get((k - 1) as usize).copied(),
            Kind::SquaredPowers => {
                if k > STEP_EXAMPLE_MAX_F64_INDEX {
                    None
                } else {
                    Some(pow2((k * k) as i64))
                }
            }
        }
    }

    pub fn ln_location(&self, k: u64) -> f64 {
        match &self.kind {
            Kind::Table(t) => t.locations[(k - 1) as usize].ln(),
            Kind::SquaredPowers => (k * k) as f64 * LN_2,
        }
    }

    pub fn first_location(&self) -> f64 {
        self.location(1).expect("first atom is finite")
    }

    /// Number of atoms with location <= x.
    pub fn count_at_or_below(&self, x: f64) -> u64 {
        match &self.kind {
            Kind::Table(t) => t.locations.partition_point(|&l| l <= x) as u64,
            Kind::SquaredPowers => {
                if !(x >= 2.0) {
                    return 0;
                }
                if x == f64::INFINITY {
                    return STEP_EXAMPLE_MAX_F64_INDEX;
                }
                // 2^{k^2} <= x  <=>  k^2 <= floor(log2 x), read off the exponent bits.
                let e = ((x.to_bits() >> 52) & 0x7ff) - 1023;
                e.isqrt()
            }
        }
    }

    /// Number of atoms with location < x.
    pub fn count_below(&self, x: f64) -> u64 {
        let k = self.count_at_or_below(x);
        if k > 0 && self.location(k) == Some(x) {
            k - 1
        } else {
            k
        }
    }

    /// Smallest k with F(atom k) >= y, `None` if no atom reaches y.
    pub fn first_reaching(&self, y: f64) -> Option<u64> {
        if y <= 0.0 {
            return Some(1);
        }
        match &self.kind {
            Kind::Table(t) => {
                let i = t.cumulative.partition_point(|&c| c < y);
                (i < t.cumulative.len()).then_some(i as u64 + 1)
            }
            Kind::SquaredPowers => {
                if y >= 1.0 {
                    return None;
                }
                // 1 - 1/(k+1)^2 >= y  <=>  k >= 1/sqrt(1-y) - 1; refine on the exact F values.
                let guess = ((1.0 / (1.0 - y)).sqrt() - 1.0).ceil().max(1.0);
                let mut k = guess as u64;
                while k > 1 && self.cumulative(k - 1) >= y {
                    k -= 1;
                }
                while self.cumulative(k) < y {
                    k += 1;
                }
                Some(k)
            }
        }
    }

    /// sum_{j <= k} location_j * mass_j as a double; infinite past the
    /// double range.
    pub fn prefix_moment(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Table(t) => t.moments[(k - 1) as usize],
            Kind::SquaredPowers => {
                if k > STEP_EXAMPLE_MAX_F64_INDEX {
                    return f64::INFINITY;
                }
                (1..=k)
                    .map(|j| self.mass(j) * self.location(j).unwrap())
                    .collect::<CompensatedSum>()
                    .value()
            }
        }
    }

    /// ln of `prefix_moment(k)`, finite for any index.
    pub fn ln_prefix_moment(&self, k: u64) -> f64 {
        if k == 0 {
            return f64::NEG_INFINITY;
        }
        match &self.kind {
            Kind::Table(t) => t.moments[(k - 1) as usize].ln(),
            Kind::SquaredPowers => {
                let terms: Vec<f64> = (1..=k)
                    .map(|j| self.mass(j).ln() + self.ln_location(j))
                    .collect();
                log_sum_exp(&terms)
            }
        }
    }
}

fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: CompensatedSum = terms.iter().map(|&t| (t - max).exp()).collect();
    max + s.value().ln()
}
