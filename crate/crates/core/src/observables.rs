//! Test functions with computable moduli of continuity, and finite-time
//! Birkhoff averages along map orbits.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::systems::{circle_dist, Point, System};

/// Guard used in place of a zero Lipschitz constant.
const LIP_FLOOR: f64 = 1e-300;

/// Shrink factor that makes `dist < δ ⇒ |Δφ| < α/2` strict.
const DELTA_SHRINK: f64 = 1.0 - 1e-6;

/// Observable as named in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObservableSpec {
    Cos1,
    Coord,
    Bump {
        a: f64,
        w: f64,
        #[serde(default = "half")]
        center: f64,
    },
    Constant {
        value: f64,
    },
    /// First binary digit `⌊2x₁⌋`. Piecewise constant, so it is accepted by
    /// the Monte Carlo and exact-oracle paths but never by the cover.
    Digit,
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Cos1,
    Coord,
    Sawtooth,
    Bump { a: f64, w: f64, center: f64 },
    Constant(f64),
    Digit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    id: String,
    kind: Kind,
    periodic: bool,
    lip_phi: Option<f64>,
    sup_abs: f64,
    range: (f64, f64),
}

impl Observable {
    /// Instantiates `spec` on the phase space of `sys`. On circle and torus
    /// systems `coord` becomes the 1-Lipschitz sawtooth `dist(x₁, 0)`.
    pub fn for_system(spec: &ObservableSpec, sys: &System) -> Result<Self> {
        let periodic = sys.is_periodic();
        let (lo, hi) = sys.bounds();
        let obs = match *spec {
            ObservableSpec::Cos1 => Self::new("cos1", Kind::Cos1, periodic, Some(TAU), 1.0, (-1.0, 1.0)),
            ObservableSpec::Coord if periodic => {
                Self::new("sawtooth", Kind::Sawtooth, true, Some(1.0), 0.5, (0.0, 0.5))
            }
            ObservableSpec::Coord => Self::interval_coord(sys),
            ObservableSpec::Bump { a, w, center } => {
                if !(a > 0.0) || !(w >= 0.0) {
                    return Err(invalid("bump", format!("need a > 0 and w >= 0, got a={a}, w={w}")));
                }
                if center < lo || center > hi {
                    return Err(invalid("bump.center", format!("{center} outside [{lo}, {hi}]")));
                }
                Self::new(
                    &format!("bump({a},{w})"),
                    Kind::Bump { a, w, center },
                    periodic,
                    Some(1.0 / a),
                    1.0,
                    (0.0, 1.0),
                )
            }
            ObservableSpec::Constant { value } => Self::constant(value),
            ObservableSpec::Digit => {
                if (lo, hi) != (0.0, 1.0) {
                    return Err(invalid("digit", format!("needs the unit domain, `{}` is not", sys.id())));
                }
                Self::digit()
            }
        };
        Ok(obs)
    }

    fn new(id: &str, kind: Kind, periodic: bool, lip_phi: Option<f64>, sup_abs: f64, range: (f64, f64)) -> Self {
        Self {
            id: id.to_owned(),
            kind,
            periodic,
            lip_phi,
            sup_abs,
            range,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::new("constant", Kind::Constant(value), false, Some(0.0), value.abs(), (value, value))
    }

    pub fn digit() -> Self {
        Self::new("digit", Kind::Digit, true, None, 1.0, (0.0, 1.0))
    }

    /// The plain coordinate `x₁`, treating the domain as an interval even on
    /// the circle (discontinuous there; oracle use only).
    pub fn interval_coord(sys: &System) -> Self {
        let (lo, hi) = sys.bounds();
        Self::new("coord", Kind::Coord, false, Some(1.0), lo.abs().max(hi.abs()), (lo, hi))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Lipschitz constant; `None` for merely measurable entries.
    pub fn lip_phi(&self) -> Option<f64> {
        self.lip_phi
    }

    pub fn sup_abs(&self) -> f64 {
        self.sup_abs
    }

    /// `(min φ, max φ)` over the domain.
    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn oscillation(&self) -> f64 {
        self.range.1 - self.range.0
    }

    pub fn is_continuous(&self) -> bool {
        self.lip_phi.is_some()
    }

    #[inline]
    pub fn eval(&self, p: &Point) -> f64 {
        let x = p.x();
        match self.kind {
            Kind::Cos1 => (TAU * x).cos(),
            Kind::Coord => x,
            Kind::Sawtooth => x.min(1.0 - x),
            Kind::Bump { a, w, center } => {
                let dist = if self.periodic {
                    circle_dist(x, center)
                } else {
                    (x - center).abs()
                };
                ((0.5 * w + a - dist) / a).clamp(0.0, 1.0)
            }
            Kind::Constant(v) => v,
            Kind::Digit => {
                if x < 0.5 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// Deviation threshold together with the space average it is measured from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationParams {
    pub alpha: f64,
    pub observable: String,
    pub phi_bar: f64,
    /// Time horizon; absent for the asymptotic set.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
}

impl DeviationParams {
    pub fn new(alpha: f64, phi: &Observable, phi_bar: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(invalid("alpha", format!("{alpha} is negative")));
        }
        if !phi_bar.is_finite() {
            return Err(invalid("phi_bar", "not finite"));
        }
        Ok(Self {
            alpha,
            observable: phi.id().to_owned(),
            phi_bar,
            n: None,
        })
    }
}

/// Birkhoff sum `Σ_{k<n} φ(f^k x)` without domain checks; returns `None` on a
/// non-finite term.
#[inline]
pub(crate) fn birkhoff_sum(sys: &System, phi: &Observable, x: Point, n: usize) -> Option<f64> {
    let mut p = x;
    let mut acc = 0.0;
    for _ in 0..n {
        let v = phi.eval(&p);
        if !v.is_finite() {
            return None;
        }
        acc += v;
        p = sys.step(p);
    }
    Some(acc)
}

/// `(1/n) Σ_{k<n} φ(f^k x)`, one pass, the orbit is never stored.
pub fn time_average(sys: &System, phi: &Observable, x: Point, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "time horizon must be positive"));
    }
    sys.check(&x)?;
    birkhoff_sum(sys, phi, x, n)
        .map(|s| s / n as f64)
        .ok_or_else(|| Error::NonFinite { id: phi.id().to_owned() })
}

/// `|φ_n(x) − φ̄|`.
pub fn deviation(sys: &System, phi: &Observable, phi_bar: f64, x: Point, n: usize) -> Result<f64> {
    Ok((time_average(sys, phi, x, n)? - phi_bar).abs())
}

/// A radius `δ` with `dist(x, y) < δ ⇒ |φ(x) − φ(y)| < α/2`, capped at the
/// domain diameter.
pub fn modulus_delta(phi: &Observable, alpha: f64, diameter: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    let lip = phi.lip_phi().ok_or_else(|| Error::UnboundedModulus { id: phi.id().to_owned() })?;
    let lip = lip.max(LIP_FLOOR);
    Ok((alpha / (2.0 * lip) * DELTA_SHRINK).min(diameter))
}
