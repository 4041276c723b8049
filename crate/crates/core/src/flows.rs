//! Suspension flows over catalog maps.
//!
//! A state `(x, s)` moves up the fibre at unit speed; on reaching the roof
//! `ρ(x)` it jumps to `(f(x), 0)`. Crossings are found exactly, so the flow
//! map carries no discretization error.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::observables::Observable;
use crate::rng::{ordered_sum, tags, SampleStream};
use crate::systems::{Point, SpaceAverageBudget, SrbKind, System};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RoofSpec {
    Constant { value: f64 },
    /// `1 + a·cos(2πx₁)`.
    Cosine { a: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuspensionFlow {
    base: System,
    roof: RoofSpec,
    roof_min: f64,
    roof_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowState {
    pub x: Point,
    pub s: f64,
}

impl SuspensionFlow {
    pub fn new(base: System, roof: RoofSpec) -> Result<Self> {
        let (roof_min, roof_max) = match roof {
            RoofSpec::Constant { value } => (value, value),
            RoofSpec::Cosine { a } => (1.0 - a.abs(), 1.0 + a.abs()),
        };
        if !(roof_min > 0.0) || !roof_max.is_finite() {
            return Err(invalid("roof", format!("{roof:?} is not bounded away from zero")));
        }
        Ok(Self {
            base,
            roof,
            roof_min,
            roof_max,
        })
    }

    pub fn base(&self) -> &System {
        &self.base
    }

    pub fn roof_spec(&self) -> &RoofSpec {
        &self.roof
    }

    pub fn roof_bounds(&self) -> (f64, f64) {
        (self.roof_min, self.roof_max)
    }

    pub fn roof(&self, x: &Point) -> Result<f64> {
        let r = match self.roof {
            RoofSpec::Constant { value } => value,
            RoofSpec::Cosine { a } => 1.0 + a * (TAU * x.x()).cos(),
        };
        if r > 0.0 && r.is_finite() {
            Ok(r)
        } else {
            Err(Error::NonPositiveRoof { value: r, at: x.x() })
        }
    }

    pub fn state(&self, x: Point, s: f64) -> Result<FlowState> {
        self.base.check(&x)?;
        let r = self.roof(&x)?;
        if !(0.0..r).contains(&s) {
            return Err(invalid("s", format!("fibre height {s} outside [0, {r})")));
        }
        Ok(FlowState { x, s })
    }

    /// State with base point and relative height drawn uniformly for `index`.
    pub fn sample_state(&self, stream: &SampleStream, index: u64) -> Result<FlowState> {
        let mut rng = stream.rng(index);
        let mut u = [0.0; 2];
        for v in u[..self.base.dim()].iter_mut() {
            *v = rng.random::<f64>();
        }
        let x = self.base.from_unit(&u[..self.base.dim()]);
        let s = rng.random::<f64>() * self.roof(&x)?;
        Ok(FlowState { x, s })
    }

    /// `f_t(state)`.
    pub fn step(&self, state: FlowState, t: f64) -> Result<FlowState> {
        if !(t >= 0.0) {
            return Err(invalid("t", format!("{t} is negative")));
        }
        let FlowState { mut x, s } = state;
        let mut s = s + t;
        loop {
            let r = self.roof(&x)?;
            if s < r {
                return Ok(FlowState { x, s });
            }
            s -= r;
            x = self.base.step(x);
        }
    }

    /// Distance used for flow-property checks: base distance plus the fibre
    /// height difference.
    pub fn state_dist(&self, a: &FlowState, b: &FlowState) -> f64 {
        self.base.dist(&a.x, &b.x) + (a.s - b.s).abs()
    }
}

/// `φ(x, s) = ψ(x) + c·sin(π s/ρ(x))`. With `c = 0` the observable is constant
/// along each fibre.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowObservable {
    pub base: Observable,
    pub fiber_amplitude: f64,
}

impl FlowObservable {
    pub fn fiber_constant(base: Observable) -> Self {
        Self {
            base,
            fiber_amplitude: 0.0,
        }
    }

    pub fn sup_abs(&self) -> f64 {
        self.base.sup_abs() + self.fiber_amplitude.abs()
    }

    #[inline]
    fn eval(&self, x: &Point, s: f64, roof: f64) -> f64 {
        let v = self.base.eval(x);
        if self.fiber_amplitude == 0.0 {
            v
        } else {
            v + self.fiber_amplitude * (PI * s / roof).sin()
        }
    }
}

/// Quadrature step `ρ_min/16`, well inside the admissible range.
pub fn default_quadrature_step(flow: &SuspensionFlow) -> f64 {
    flow.roof_min / 16.0
}

/// `∫_0^T φ(f_t(state)) dt` by composite midpoint rule on each fibre segment.
fn flow_integral(flow: &SuspensionFlow, phi: &FlowObservable, state: FlowState, t: f64, step: f64) -> Result<f64> {
    let FlowState { mut x, mut s } = state;
    let mut remaining = t;
    let mut acc = 0.0;
    while remaining > 0.0 {
        let r = flow.roof(&x)?;
        let len = (r - s).min(remaining);
        if len > 0.0 {
            let m = (len / step).ceil().max(1.0);
            let h = len / m;
            let mut seg = 0.0;
            for j in 0..m as u64 {
                let v = phi.eval(&x, s + (j as f64 + 0.5) * h, r);
                if !v.is_finite() {
                    return Err(Error::NonFinite { id: phi.base.id().to_owned() });
                }
                seg += v;
            }
            acc += seg * h;
        }
        remaining -= len;
        if remaining > 0.0 {
            x = flow.base.step(x);
            s = 0.0;
        }
    }
    Ok(acc)
}

/// `φ_T = (1/T) ∫_0^T φ(f_t(state)) dt`.
pub fn flow_time_average(
    flow: &SuspensionFlow,
    phi: &FlowObservable,
    state: FlowState,
    t: f64,
    quadrature_step: f64,
) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid("T", format!("{t} is not a positive horizon")));
    }
    if !(quadrature_step > 0.0) || quadrature_step > flow.roof_min / 4.0 {
        return Err(invalid(
            "quadrature_step",
            format!("{quadrature_step} must lie in (0, ρ_min/4 = {}]", flow.roof_min / 4.0),
        ));
    }
    Ok(flow_integral(flow, phi, state, t, quadrature_step)? / t)
}

/// Space average of `φ` for the invariant measure `μ × dt / ∫ρ dμ`, where `μ`
/// is the SRB measure of the base.
pub fn flow_space_average(flow: &SuspensionFlow, phi: &FlowObservable, budget: &SpaceAverageBudget) -> Result<f64> {
    let base = &flow.base;
    let weighted = |p: &Point| -> Result<(f64, f64)> {
        let r = flow.roof(p)?;
        Ok((phi.base.eval(p) * r, r))
    };
    let (num, den) = match base.srb_kind() {
        SrbKind::Lebesgue => {
            let dim = base.dim();
            let per_axis = ((budget.lattice_points as f64).powf(1.0 / dim as f64).floor() as usize).max(2);
            let cells = per_axis.pow(dim as u32);
            let h = 1.0 / per_axis as f64;
            let at = |i: usize| {
                let u = [((i % per_axis) as f64 + 0.5) * h, ((i / per_axis) as f64 + 0.5) * h];
                base.from_unit(&u[..dim])
            };
            // the roof is validated at construction, so evaluation cannot fail here
            let num = ordered_sum(cells, |i| weighted(&at(i)).map_or(f64::NAN, |w| w.0));
            let den = ordered_sum(cells, |i| weighted(&at(i)).map_or(f64::NAN, |w| w.1));
            (num, den)
        }
        SrbKind::EmpiricalOrbit => {
            let start = Point::from_slice(&vec![budget.orbit_seed; base.dim()])?;
            let mut p = base.iterate(start, budget.transient)?;
            let (mut num, mut den) = (0.0, 0.0);
            for _ in 0..budget.orbit_length {
                let (a, b) = weighted(&p)?;
                num += a;
                den += b;
                p = base.step(p);
            }
            (num, den)
        }
    };
    let value = num / den + phi.fiber_amplitude * 2.0 / PI;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { id: phi.base.id().to_owned() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegerPartCheck {
    pub t: f64,
    pub lhs: f64,
    /// `2·sup|φ|·(T − [T])/T`.
    pub bound: f64,
    /// `sup|φ|/[T]`, reported and not asserted.
    pub naive_bound: f64,
    pub ok: bool,
    pub within_naive_bound: bool,
}

/// Compares `φ_T` with `φ_[T]` along the same trajectory.
pub fn integer_part_reduction_check(
    flow: &SuspensionFlow,
    phi: &FlowObservable,
    state: FlowState,
    t: f64,
    quadrature_step: f64,
) -> Result<IntegerPartCheck> {
    if !(t >= 2.0) {
        return Err(invalid("T", format!("{t} is below 2")));
    }
    let whole = t.floor();
    let lhs = if whole == t {
        0.0
    } else {
        let head = flow_integral(flow, phi, state, whole, quadrature_step)?;
        let rest = flow_integral(flow, phi, flow.step(state, whole)?, t - whole, quadrature_step)?;
        ((head + rest) / t - head / whole).abs()
    };
    let sup = phi.sup_abs();
    let bound = 2.0 * sup * (t - whole) / t;
    let naive_bound = sup / whole;
    Ok(IntegerPartCheck {
        t,
        lhs,
        bound,
        naive_bound,
        ok: lhs <= bound * (1.0 + 1e-9) + 1e-12,
        within_naive_bound: lhs < naive_bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionCheck {
    pub flow_deviation: f64,
    /// Deviation of the time-1 map average at horizon `[T]`.
    pub time_one_deviation: f64,
    pub in_flow_set: bool,
    pub holds: bool,
}

/// Smallest horizon at which the integer-part correction stays below `α/2`.
pub fn inclusion_min_horizon(phi: &FlowObservable, alpha: f64) -> f64 {
    4.0 * phi.sup_abs() / alpha
}

/// Checks `|φ_T − φ̄| ≥ α ⇒ |φ_[T] − φ̄| ≥ α/2`.
///
/// The average of the time-1 map `f_1` of the fibre-integrated observable
/// `∫_0^1 φ∘f_t dt` over `[T]` steps coincides with the flow average over
/// `[0, [T]]`, which is what is evaluated.
#[allow(clippy::too_many_arguments)]
pub fn flow_nontypical_inclusion_check(
    flow: &SuspensionFlow,
    phi: &FlowObservable,
    phi_bar: f64,
    alpha: f64,
    state: FlowState,
    t: f64,
    quadrature_step: f64,
) -> Result<InclusionCheck> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha", "must be positive"));
    }
    let min_t = inclusion_min_horizon(phi, alpha);
    if t < min_t {
        return Err(invalid("T", format!("{t} is below the admissible horizon {min_t}")));
    }
    let whole = t.floor();
    let head = flow_integral(flow, phi, state, whole, quadrature_step)?;
    let rest = if whole == t {
        0.0
    } else {
        flow_integral(flow, phi, flow.step(state, whole)?, t - whole, quadrature_step)?
    };
    let flow_deviation = ((head + rest) / t - phi_bar).abs();
    let time_one_deviation = (head / whole - phi_bar).abs();
    let in_flow_set = flow_deviation >= alpha;
    Ok(InclusionCheck {
        flow_deviation,
        time_one_deviation,
        in_flow_set,
        holds: !in_flow_set || time_one_deviation >= 0.5 * alpha,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeOneLipschitz {
    pub estimate: f64,
    pub pairs_used: usize,
}

/// Largest observed expansion `dist(f_1 y, f_1 y′)/dist(y, y′)` over sampled
/// pairs at separation `eps`. Pairs whose images land on different base
/// points are discarded.
pub fn estimate_time_one_lipschitz(flow: &SuspensionFlow, pairs: usize, eps: f64, seed: u64) -> Result<TimeOneLipschitz> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    let stream = SampleStream::new(seed, tags::LIPSCHITZ);
    let ratios: Vec<Option<f64>> = (0..pairs as u64)
        .into_par_iter()
        .map(|i| {
            let a = flow.sample_state(&stream, i)?;
            let mut rng = stream.rng(i);
            for _ in 0..=flow.base.dim() {
                rng.random::<f64>();
            }
            let mut b = a;
            for c in b.x.coords_mut() {
                *c += eps * (2.0 * rng.random::<f64>() - 1.0);
            }
            b.s += eps * (2.0 * rng.random::<f64>() - 1.0);
            b.x = flow.base.wrap(b.x);
            if !flow.base.contains(&b.x) || b.s < 0.0 || b.s >= flow.roof(&b.x)? {
                return Ok(None);
            }
            let d0 = flow.state_dist(&a, &b);
            let (fa, fb) = (flow.step(a, 1.0)?, flow.step(b, 1.0)?);
            let crossed_alike = flow.base.dist(&fa.x, &fb.x) < 1e3 * eps * flow.base.lip().powi(4);
            Ok((d0 > 0.0 && crossed_alike).then(|| flow.state_dist(&fa, &fb) / d0))
        })
        .collect::<Result<_>>()?;
    let used: Vec<f64> = ratios.into_iter().flatten().collect();
    Ok(TimeOneLipschitz {
        estimate: used.iter().copied().fold(0.0, f64::max),
        pairs_used: used.len(),
    })
}
