//! Catalog of concrete self-maps with known global SRB measures.
//!
//! Circle and torus systems live on the fundamental domain `[0,1)^d` with
//! the flat torus metric; interval systems use the absolute value.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::observables::Observable;
use crate::rng::ordered_sum;

pub const MAX_DIM: usize = 2;

/// Values in `[1, 1 + SNAP)` after mod-1 reduction are snapped to 0.
const SNAP: f64 = 1.0 / (1u64 << 40) as f64;

/// Orbit depth beyond which the floating doubling and tent maps have shifted
/// out most of the mantissa of a uniformly drawn start point.
const DYADIC_HORIZON: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    pub fn new1(x: f64) -> Self {
        Self {
            coords: [x, 0.0],
            dim: 1,
        }
    }

    pub fn new2(x: f64, y: f64) -> Self {
        Self {
            coords: [x, y],
            dim: 2,
        }
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        match *coords {
            [x] => Ok(Self::new1(x)),
            [x, y] => Ok(Self::new2(x, y)),
            _ => Err(invalid(
                "point",
                format!("{} coordinates; supported dimensions are 1 and 2", coords.len()),
            )),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords[..self.dim as usize]
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// First coordinate.
    pub fn x(&self) -> f64 {
        self.coords[0]
    }
}

/// Reduction to `[0, 1)`.
#[inline]
pub fn mod1(x: f64) -> f64 {
    let r = x - x.floor();
    if (1.0..1.0 + SNAP).contains(&r) {
        0.0
    } else {
        r
    }
}

/// Distance between two points of the circle `[0,1)`.
#[inline]
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % 1.0;
    d.min(1.0 - d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SrbKind {
    Lebesgue,
    EmpiricalOrbit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    FlatTorus,
    Absolute,
}

/// Catalog entry with its parameters, as named in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemSpec {
    Doubling,
    Tent,
    Cat,
    Logistic { c: f64 },
}

impl SystemSpec {
    pub const CATALOG: [&'static str; 4] = ["doubling", "tent", "cat", "logistic"];
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Doubling,
    Tent,
    Cat,
    Logistic { c: f64 },
}

/// Cat-map matrix `[[2,1],[1,1]]`.
const CAT: [[f64; 2]; 2] = [[2.0, 1.0], [1.0, 1.0]];

/// Singular values `(largest, smallest)` of a 2x2 matrix, from the closed-form
/// eigenvalues of `MᵀM`.
pub fn singular_values_2x2(m: [[f64; 2]; 2]) -> (f64, f64) {
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let c = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let mean = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    ((mean + disc).sqrt(), (mean - disc).max(0.0).sqrt())
}

/// A discrete-time system from the catalog.
#[derive(Clone, Debug, PartialEq)]
pub struct System {
    id: String,
    spec: SystemSpec,
    kind: Kind,
    dim: usize,
    lip: f64,
    big_l: f64,
    srb_kind: SrbKind,
    metric: Metric,
    lo: f64,
    hi: f64,
    inv_norm: f64,
}

impl System {
    pub fn from_spec(spec: &SystemSpec) -> Result<Self> {
        let (kind, id, dim, lip, srb, metric, lo, hi, inv_norm) = match *spec {
            SystemSpec::Doubling => (
                Kind::Doubling,
                "doubling".to_owned(),
                1,
                2.0,
                SrbKind::Lebesgue,
                Metric::FlatTorus,
                0.0,
                1.0,
                0.5,
            ),
            SystemSpec::Tent => (
                Kind::Tent,
                "tent".to_owned(),
                1,
                2.0,
                SrbKind::Lebesgue,
                Metric::Absolute,
                0.0,
                1.0,
                0.5,
            ),
            SystemSpec::Cat => {
                let (smax, smin) = singular_values_2x2(CAT);
                (
                    Kind::Cat,
                    "cat".to_owned(),
                    2,
                    smax,
                    SrbKind::Lebesgue,
                    Metric::FlatTorus,
                    0.0,
                    1.0,
                    1.0 / smin,
                )
            }
            SystemSpec::Logistic { c } => {
                if !(-2.0..=0.25).contains(&c) {
                    return Err(invalid(
                        "c",
                        format!("{c} outside [-2, 1/4], no invariant interval"),
                    ));
                }
                let beta = 0.5 * (1.0 + (1.0 - 4.0 * c).sqrt());
                (
                    Kind::Logistic { c },
                    format!("logistic({c})"),
                    1,
                    2.0 * beta,
                    SrbKind::EmpiricalOrbit,
                    Metric::Absolute,
                    -beta,
                    beta,
                    f64::NAN,
                )
            }
        };
        Ok(Self {
            id,
            spec: spec.clone(),
            kind,
            dim,
            lip,
            big_l: lip.max(2.0),
            srb_kind: srb,
            metric,
            lo,
            hi,
            inv_norm,
        })
    }

    pub fn by_id(id: &str) -> Result<Self> {
        let spec = match id {
            "doubling" => SystemSpec::Doubling,
            "tent" => SystemSpec::Tent,
            "cat" => SystemSpec::Cat,
            "logistic" => SystemSpec::Logistic { c: -2.0 },
            _ => {
                return Err(Error::UnknownId {
                    kind: "system",
                    id: id.to_owned(),
                })
            }
        };
        Self::from_spec(&spec)
    }

    pub fn doubling() -> Self {
        Self::from_spec(&SystemSpec::Doubling).unwrap()
    }

    pub fn tent() -> Self {
        Self::from_spec(&SystemSpec::Tent).unwrap()
    }

    pub fn cat() -> Self {
        Self::from_spec(&SystemSpec::Cat).unwrap()
    }

    pub fn logistic(c: f64) -> Result<Self> {
        Self::from_spec(&SystemSpec::Logistic { c })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    /// `max(lip, 2)`.
    pub fn big_l(&self) -> f64 {
        self.big_l
    }

    /// Analytic Lipschitz constant and `L = max(lip, 2)`.
    pub fn lipschitz_data(&self) -> (f64, f64) {
        (self.lip, self.big_l)
    }

    pub fn srb_kind(&self) -> SrbKind {
        self.srb_kind
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn is_periodic(&self) -> bool {
        self.metric == Metric::FlatTorus
    }

    /// Coordinate bounds, identical on every axis.
    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn extent(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn diameter(&self) -> f64 {
        match self.metric {
            Metric::FlatTorus => 0.5 * (self.dim as f64).sqrt(),
            Metric::Absolute => self.extent(),
        }
    }

    /// Depth beyond which floating orbits stop representing the true dynamics
    /// of uniformly sampled points; `None` when no such collapse occurs.
    pub fn precision_horizon(&self) -> Option<usize> {
        match self.kind {
            Kind::Doubling | Kind::Tent => Some(DYADIC_HORIZON),
            Kind::Cat | Kind::Logistic { .. } => None,
        }
    }

    pub fn check_horizon(&self, n: usize) -> Result<()> {
        match self.precision_horizon() {
            Some(limit) if n > limit => Err(Error::HorizonExceeded {
                system: self.id.clone(),
                n,
                limit,
            }),
            _ => Ok(()),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim && p.coords().iter().all(|&v| self.contains_coord(v))
    }

    pub fn check(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::Dimension {
                system: self.id.clone(),
                expected: self.dim,
                got: p.dim(),
            });
        }
        match p.coords().iter().find(|&&v| !self.contains_coord(v)) {
            Some(&value) => Err(Error::Domain {
                system: self.id.clone(),
                value,
            }),
            None => Ok(()),
        }
    }

    fn contains_coord(&self, v: f64) -> bool {
        match self.metric {
            Metric::FlatTorus => (0.0..1.0).contains(&v),
            Metric::Absolute => v >= self.lo && v <= self.hi,
        }
    }

    /// Brings a coordinate vector back into the domain: mod 1 on tori,
    /// clamping on intervals.
    pub fn wrap(&self, mut p: Point) -> Point {
        for v in p.coords_mut() {
            *v = match self.metric {
                Metric::FlatTorus => mod1(*v),
                Metric::Absolute => v.clamp(self.lo, self.hi),
            };
        }
        p
    }

    /// Maps a point of the unit cube onto the domain affinely.
    pub fn from_unit(&self, u: &[f64]) -> Point {
        let mut p = Point::from_slice(u).expect("dimension 1 or 2");
        for v in p.coords_mut() {
            *v = self.lo + *v * (self.hi - self.lo);
        }
        p
    }

    /// One application of the map. The point is assumed to lie in the domain.
    #[inline]
    pub fn step(&self, p: Point) -> Point {
        match self.kind {
            Kind::Doubling => Point::new1(mod1(2.0 * p.coords[0])),
            Kind::Tent => Point::new1(1.0 - (1.0 - 2.0 * p.coords[0]).abs()),
            Kind::Cat => {
                let [x, y] = p.coords;
                Point::new2(mod1(2.0 * x + y), mod1(x + y))
            }
            Kind::Logistic { c } => {
                let x = p.coords[0];
                Point::new1((x * x + c).clamp(self.lo, self.hi))
            }
        }
    }

    /// `f^k(x)` by `k` applications of the one-step map.
    pub fn iterate(&self, x: Point, k: usize) -> Result<Point> {
        self.check(&x)?;
        Ok((0..k).fold(x, |p, _| self.step(p)))
    }

    pub fn dist(&self, a: &Point, b: &Point) -> f64 {
        match self.metric {
            Metric::FlatTorus => a
                .coords()
                .iter()
                .zip(b.coords())
                .map(|(&u, &v)| circle_dist(u, v).powi(2))
                .sum::<f64>()
                .sqrt(),
            Metric::Absolute => a
                .coords()
                .iter()
                .zip(b.coords())
                .map(|(&u, &v)| (u - v).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// `‖Df(x)⁻¹‖`: `1/|f'(x)|` in dimension one, the operator norm of the
    /// inverse Jacobian in dimension two.
    pub fn inverse_derivative_norm(&self, p: &Point) -> Result<f64> {
        match self.kind {
            Kind::Tent if p.x() == 0.5 => Err(Error::SingularDerivative { at: 0.5 }),
            Kind::Logistic { .. } => {
                let x = p.x();
                if x == 0.0 {
                    Err(Error::SingularDerivative { at: 0.0 })
                } else {
                    Ok(1.0 / (2.0 * x).abs())
                }
            }
            _ => Ok(self.inv_norm),
        }
    }

    /// `(1/n) Σ_{j<n} ln ‖Df(f^j x)⁻¹‖`; negative values indicate expansion
    /// along the orbit.
    pub fn nonuniform_expansion_exponent(&self, x: Point, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(invalid("n", "must be positive"));
        }
        self.check(&x)?;
        let mut p = x;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += self.inverse_derivative_norm(&p)?.ln();
            p = self.step(p);
        }
        Ok(acc / n as f64)
    }

    /// Space average of `phi` against the SRB measure.
    ///
    /// Lebesgue-SRB systems integrate on a cell-centred lattice; the error
    /// estimate is the gap to the lattice of half the resolution.
    /// Empirical-orbit systems average one long orbit after a transient, with
    /// a batch-means standard error.
    pub fn srb_space_average(
        &self,
        phi: &Observable,
        budget: &SpaceAverageBudget,
    ) -> Result<SpaceAverage> {
        let avg = match self.srb_kind {
            SrbKind::Lebesgue => self.lattice_average(phi, budget.lattice_points)?,
            SrbKind::EmpiricalOrbit => self.orbit_average(phi, budget)?,
        };
        if avg.std_error > budget.tolerance {
            return Err(Error::BudgetExhausted {
                requested: budget.tolerance,
                achieved: avg.std_error,
            });
        }
        Ok(avg)
    }

    fn lattice_mean(&self, phi: &Observable, per_axis: usize) -> Result<f64> {
        let cells = per_axis.pow(self.dim as u32);
        let h = 1.0 / per_axis as f64;
        let sum = ordered_sum(cells, |i| {
            let u0 = ((i % per_axis) as f64 + 0.5) * h;
            let p = if self.dim == 1 {
                self.from_unit(&[u0])
            } else {
                self.from_unit(&[u0, ((i / per_axis) as f64 + 0.5) * h])
            };
            phi.eval(&p)
        });
        if !sum.is_finite() {
            return Err(Error::NonFinite {
                id: phi.id().to_owned(),
            });
        }
        Ok(sum / cells as f64)
    }

    fn lattice_average(&self, phi: &Observable, points: usize) -> Result<SpaceAverage> {
        let per_axis = ((points as f64).powf(1.0 / self.dim as f64).floor() as usize).max(2) & !1;
        let fine = self.lattice_mean(phi, per_axis)?;
        let coarse = self.lattice_mean(phi, per_axis / 2)?;
        Ok(SpaceAverage {
            value: fine,
            std_error: (fine - coarse).abs(),
            method: SpaceAverageMethod::MidpointLattice {
                points: per_axis.pow(self.dim as u32),
            },
        })
    }

    fn orbit_average(&self, phi: &Observable, budget: &SpaceAverageBudget) -> Result<SpaceAverage> {
        const BATCHES: usize = 100;
        let seed = Point::from_slice(&vec![budget.orbit_seed; self.dim])?;
        let mut p = self.iterate(seed, budget.transient)?;
        let batch_len = (budget.orbit_length / BATCHES).max(1);
        let mut batch_means = Vec::with_capacity(BATCHES);
        for _ in 0..BATCHES {
            let mut acc = 0.0;
            for _ in 0..batch_len {
                let v = phi.eval(&p);
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        id: phi.id().to_owned(),
                    });
                }
                acc += v;
                p = self.step(p);
            }
            batch_means.push(acc / batch_len as f64);
        }
        let mean = batch_means.iter().sum::<f64>() / BATCHES as f64;
        let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>()
            / (BATCHES - 1) as f64;
        Ok(SpaceAverage {
            value: mean,
            std_error: (var / BATCHES as f64).sqrt(),
            method: SpaceAverageMethod::EmpiricalOrbit {
                seed_point: budget.orbit_seed,
                transient: budget.transient,
                orbit_length: batch_len * BATCHES,
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceAverageBudget {
    pub lattice_points: usize,
    pub tolerance: f64,
    pub orbit_length: usize,
    pub transient: usize,
    /// Start point of the long orbit, repeated on every axis.
    pub orbit_seed: f64,
}

impl Default for SpaceAverageBudget {
    fn default() -> Self {
        Self {
            lattice_points: 1 << 20,
            tolerance: 1e-2,
            orbit_length: 10_000_000,
            transient: 10_000,
            orbit_seed: 0.123_456_789,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpaceAverageMethod {
    MidpointLattice {
        points: usize,
    },
    EmpiricalOrbit {
        seed_point: f64,
        transient: usize,
        orbit_length: usize,
    },
    /// Given in the experiment config.
    Supplied,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceAverage {
    pub value: f64,
    pub std_error: f64,
    pub method: SpaceAverageMethod,
}
