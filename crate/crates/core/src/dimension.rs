//! Cover construction for the non-typical set, box-counting estimates and the
//! dimension bound `d₀ = d − h(α/2)/ln L`.
//!
//! The maximal `r(n)/2`-separated set is realized as the regular grid with
//! `⌈extent/(r(n)/2)⌉` cells per axis. A cell belongs to the pruned cover when
//! its stencil (centre plus `2^d` corners) contains a point of `K_{φ,α,n}`.
//!
//! Counting is exact with respect to that stencil rule, but never visits
//! every cell: blocks of cells are settled at once from the deviation at the
//! block centre and a Lipschitz bound on the Birkhoff average over the block,
//! `|φ_n(y) − φ_n(c)| ≤ (1/n) Σ_k min(osc φ, Lip(φ)·Lip(f)^k·|y − c|)`.

use std::f64::consts::LN_2;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deviation::{binary_entropy, deviation_unchecked, digit_tail_count, ln_biguint, sample_point};
use crate::error::{invalid, Error, Result};
use crate::observables::Observable;
use crate::regression::fit_line;
use crate::rng::{tags, SampleStream, REDUCTION_BLOCK};
use crate::systems::{mod1, Metric, Point, System};

/// Absolute slack added to the block bound to absorb rounding along orbits.
const BOUND_SLACK: f64 = 1e-9;

/// Blocks with more cells than this are split across rayon tasks.
const PAR_CELLS: u64 = 1 << 14;

/// Upper limit on cells per axis.
const MAX_CELLS_PER_AXIS: u64 = 1 << 40;

/// A term ratio counts as below one when it is at most this.
pub const CONVERGENCE_RATIO: f64 = 0.99;

/// Tolerance between the box-dimension band and `d₀` before a verdict flips.
pub const VERDICT_SLACK: f64 = 0.05;

/// `d − h/ln L`.
pub fn dimension_upper_bound(d: usize, big_l: f64, h: f64) -> Result<f64> {
    if d == 0 {
        return Err(invalid("d", "must be positive"));
    }
    if !(big_l >= 2.0) {
        return Err(invalid("L", format!("{big_l} is below 2")));
    }
    if !(h > 0.0) {
        return Err(Error::LdpNotEstablished { h });
    }
    Ok(d as f64 - h / big_l.ln())
}

struct Sweep<'a> {
    sys: &'a System,
    phi: &'a Observable,
    phi_bar: f64,
    alpha: f64,
    n: usize,
    per_axis: u64,
    spacing: f64,
    /// `Lip(φ)·Lip(f)^k` for `k < n`.
    growth: Vec<f64>,
}

impl Sweep<'_> {
    fn coord(&self, k: f64) -> f64 {
        let (lo, hi) = self.sys.bounds();
        let v = lo + k * self.spacing;
        match self.sys.metric() {
            Metric::FlatTorus => mod1(v),
            Metric::Absolute => v.clamp(lo, hi),
        }
    }

    fn point(&self, ks: &[f64]) -> Point {
        match *ks {
            [a] => Point::new1(self.coord(a)),
            [a, b] => Point::new2(self.coord(a), self.coord(b)),
            _ => unreachable!("dimension 1 or 2"),
        }
    }

    fn deviation_at(&self, ks: &[f64]) -> f64 {
        deviation_unchecked(self.sys, self.phi, self.phi_bar, self.point(ks), self.n).unwrap_or(f64::NAN)
    }

    fn spread(&self, radius: f64) -> f64 {
        let osc = self.phi.oscillation();
        self.growth.iter().map(|g| (g * radius).min(osc)).sum::<f64>() / self.n as f64 + BOUND_SLACK
    }

    /// Returns `(detected cells, deviation evaluations)` for the block
    /// `[lo_j, hi_j)` of cell indices.
    fn count(&self, lo: [u64; 2], hi: [u64; 2]) -> (u64, u64) {
        let d = self.sys.dim();
        let cells: u64 = (0..d).map(|j| hi[j] - lo[j]).product();
        if cells == 1 {
            return self.leaf(lo);
        }
        let mid: Vec<f64> = (0..d).map(|j| 0.5 * (lo[j] + hi[j]) as f64).collect();
        let radius = (0..d)
            .map(|j| (0.5 * (hi[j] - lo[j]) as f64 * self.spacing).powi(2))
            .sum::<f64>()
            .sqrt();
        let dev = self.deviation_at(&mid);
        let spread = self.spread(radius);
        if dev - spread >= self.alpha {
            return (cells, 1);
        }
        if dev + spread < self.alpha {
            return (0, 1);
        }
        let axis = (0..d).max_by_key(|&j| hi[j] - lo[j]).unwrap();
        let cut = lo[axis] + (hi[axis] - lo[axis]) / 2;
        let (mut hi_a, mut lo_b) = (hi, lo);
        hi_a[axis] = cut;
        lo_b[axis] = cut;
        let ((ca, wa), (cb, wb)) = if cells > PAR_CELLS {
            rayon::join(|| self.count(lo, hi_a), || self.count(lo_b, hi))
        } else {
            (self.count(lo, hi_a), self.count(lo_b, hi))
        };
        (ca + cb, wa + wb + 1)
    }

    fn leaf(&self, idx: [u64; 2]) -> (u64, u64) {
        let d = self.sys.dim();
        let mut ks = [0.0; 2];
        for j in 0..d {
            ks[j] = idx[j] as f64 + 0.5;
        }
        let mut work = 1;
        if self.deviation_at(&ks[..d]) >= self.alpha {
            return (1, work);
        }
        for corner in 0..(1u32 << d) {
            for j in 0..d {
                ks[j] = (idx[j] + ((corner >> j) & 1) as u64) as f64;
            }
            work += 1;
            if self.deviation_at(&ks[..d]) >= self.alpha {
                return (1, work);
            }
        }
        (0, work)
    }
}

/// Grid cells per axis whose spacing does not exceed `r/2`.
pub fn cells_per_axis(sys: &System, r: f64) -> Result<u64> {
    let m = (sys.extent() / (0.5 * r)).ceil();
    if !(m >= 1.0) || m > MAX_CELLS_PER_AXIS as f64 {
        return Err(invalid("grid", format!("{m} cells per axis at r = {r:e}")));
    }
    Ok(m as u64)
}

/// Number of cells of the `per_axis^d` grid whose stencil meets `K_{φ,α,n}`,
/// with the number of deviation evaluations spent.
pub fn count_detected_cells(
    sys: &System,
    phi: &Observable,
    phi_bar: f64,
    alpha: f64,
    n: usize,
    per_axis: u64,
) -> Result<(u64, u64)> {
    if per_axis == 0 {
        return Err(invalid("grid", "needs at least one cell per axis"));
    }
    let total = per_axis.checked_pow(sys.dim() as u32).ok_or_else(|| invalid("grid", "cell count overflows"))?;
    if alpha <= 0.0 {
        return Ok((total, 0));
    }
    if n == 0 {
        return Err(invalid("n", "horizon must be positive when alpha > 0"));
    }
    let lip_phi = phi.lip_phi().ok_or_else(|| Error::UnboundedModulus { id: phi.id().to_owned() })?;
    sys.check_horizon(n)?;
    let growth = (0..n).map(|k| lip_phi * sys.lip().powi(k as i32)).collect();
    let sweep = Sweep {
        sys,
        phi,
        phi_bar,
        alpha,
        n,
        per_axis,
        spacing: sys.extent() / per_axis as f64,
        growth,
    };
    let hi = [sweep.per_axis, if sys.dim() == 2 { sweep.per_axis } else { 1 }];
    let (card, work) = if sys.dim() == 1 {
        sweep.count([0, 0], [hi[0], 1])
    } else {
        sweep.count([0, 0], hi)
    };
    Ok((card, work))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverEntry {
    pub n: usize,
    pub r_n: f64,
    /// `ln r_n = ln δ − n ln L`, kept separately so consecutive radii differ by
    /// exactly `ln L`.
    pub ln_r: f64,
    pub spacing: f64,
    pub cells_per_axis: u64,
    pub total_cells: u64,
    pub card: u64,
    /// `card · r_n^{d′}` for each tested `d′`, aligned with the ladder's list.
    pub dprime_volume: Vec<f64>,
    pub work: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverLadder {
    pub alpha: f64,
    pub delta: f64,
    pub big_l: f64,
    pub dprimes: Vec<f64>,
    pub entries: Vec<CoverEntry>,
}

fn volume_term(card: u64, ln_r: f64, dprime: f64) -> f64 {
    if card == 0 {
        0.0
    } else {
        ((card as f64).ln() + dprime * ln_r).exp()
    }
}

impl CoverLadder {
    pub fn total_work(&self) -> u64 {
        self.entries.iter().map(|e| e.work).sum()
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("n,r_n,card");
        for d in &self.dprimes {
            h.push_str(&format!(",dprime={d}"));
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!("{},{},{}", e.n, e.r_n, e.card));
            for v in &e.dprime_volume {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// `(grid spacing, card)` pairs for the box-counting estimator.
    pub fn box_counts(&self) -> Vec<(f64, f64)> {
        self.entries.iter().map(|e| (e.spacing, e.card as f64)).collect()
    }

    /// Least-squares slope of `ln card` against `n`, over entries with a
    /// non-empty cover.
    pub fn card_growth(&self) -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .entries
            .iter()
            .filter(|e| e.card > 0)
            .map(|e| (e.n as f64, (e.card as f64).ln()))
            .unzip();
        (xs.len() >= 2).then(|| fit_line(&xs, &ys).slope)
    }
}

/// Cover ladder over the horizons `ns`, with `r(n) = δ L^{−n}`.
///
/// `grid_budget` bounds the cumulative number of deviation evaluations.
#[allow(clippy::too_many_arguments)]
pub fn build_cover_ladder(
    sys: &System,
    phi: &Observable,
    phi_bar: f64,
    alpha: f64,
    delta: f64,
    ns: &[usize],
    dprimes: &[f64],
    grid_budget: u64,
) -> Result<CoverLadder> {
    if !(delta > 0.0) {
        return Err(invalid("delta", format!("{delta} is not positive")));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) || ns.is_empty() {
        return Err(invalid("n", "cover horizons must be non-empty and strictly increasing"));
    }
    let big_l = sys.big_l();
    let mut used = 0u64;
    let mut entries = Vec::with_capacity(ns.len());
    for &n in ns {
        let ln_r = delta.ln() - n as f64 * big_l.ln();
        let r_n = ln_r.exp();
        let per_axis = cells_per_axis(sys, r_n)?;
        let (card, work) = count_detected_cells(sys, phi, phi_bar, alpha, n, per_axis)?;
        used = used.saturating_add(work);
        if used > grid_budget {
            return Err(Error::GridBudget { used, budget: grid_budget });
        }
        entries.push(CoverEntry {
            n,
            r_n,
            ln_r,
            spacing: sys.extent() / per_axis as f64,
            cells_per_axis: per_axis,
            total_cells: per_axis.saturating_pow(sys.dim() as u32),
            card,
            dprime_volume: dprimes.iter().map(|&d| volume_term(card, ln_r, d)).collect(),
            work,
        });
    }
    Ok(CoverLadder {
        alpha,
        delta,
        big_l,
        dprimes: dprimes.to_vec(),
        entries,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeSeries {
    pub dprime: f64,
    pub from_n: usize,
    /// Observed terms plus the geometric tail when the series converges.
    pub partial_sum: f64,
    pub last_ratio: Option<f64>,
    /// Geometric mean of the ratios over the second half of the ladder.
    pub tail_ratio: Option<f64>,
    pub converges: bool,
}

/// `Σ_{n ≥ N} card_n · r_n^{d′}` with a geometric tail bound.
///
/// The series is declared convergent when the term ratios over the second
/// half of the observed ladder, and the last ratio, stay at or below
/// [`CONVERGENCE_RATIO`]; a ladder whose last cover is empty converges.
pub fn dprime_volume_series(ladder: &CoverLadder, dprime: f64, from_n: usize) -> VolumeSeries {
    let terms: Vec<f64> = ladder
        .entries
        .iter()
        .filter(|e| e.n >= from_n)
        .map(|e| volume_term(e.card, e.ln_r, dprime))
        .collect();
    let observed: f64 = terms.iter().sum();
    let base = VolumeSeries {
        dprime,
        from_n,
        partial_sum: observed,
        last_ratio: None,
        tail_ratio: None,
        converges: false,
    };
    match terms.last() {
        None => return VolumeSeries { converges: true, ..base },
        Some(&0.0) => return VolumeSeries { converges: true, ..base },
        _ => {}
    }
    let ratios: Vec<f64> = terms
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    let Some(&last) = ratios.last() else {
        return base;
    };
    let tail = &ratios[ratios.len() / 2..];
    let tail_ratio = (tail.iter().map(|r| r.ln()).sum::<f64>() / tail.len() as f64).exp();
    let converges = last <= CONVERGENCE_RATIO && tail_ratio <= CONVERGENCE_RATIO;
    let last_term = *terms.last().unwrap();
    VolumeSeries {
        partial_sum: if converges {
            observed + last_term * last / (1.0 - last)
        } else {
            observed
        },
        last_ratio: Some(last),
        tail_ratio: Some(tail_ratio),
        converges,
        ..base
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDimension {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub scales: usize,
}

/// Slope of `ln count` against `ln(1/scale)`, with a band of two standard
/// errors of the slope.
pub fn box_counting_dimension(ladder: &[(f64, f64)]) -> Result<BoxDimension> {
    if ladder.len() < 4 {
        return Err(invalid("ladder", format!("{} scales, need at least 4", ladder.len())));
    }
    if ladder.iter().any(|&(s, c)| !(s > 0.0) || !(c >= 0.0)) {
        return Err(invalid("ladder", "scales must be positive and counts non-negative"));
    }
    let (smin, smax) = ladder
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &(s, _)| (a.min(s), b.max(s)));
    if (smax / smin).log10() < 2.0 {
        return Err(invalid("ladder", "scales span less than two decades"));
    }
    let used: Vec<(f64, f64)> = ladder
        .iter()
        .filter(|&&(_, c)| c > 0.0)
        .map(|&(s, c)| ((1.0 / s).ln(), c.ln()))
        .collect();
    if used.is_empty() {
        return Err(Error::Degenerate("every count is zero".into()));
    }
    if used.len() < 4 {
        return Err(Error::Degenerate(format!("only {} non-empty scales", used.len())));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = used.into_iter().unzip();
    let line = fit_line(&xs, &ys);
    let band = 2.0 * line.slope_stderr;
    Ok(BoxDimension {
        value: line.slope,
        lower: line.slope - band,
        upper: line.slope + band,
        scales: xs.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesicovitchEggleston {
    pub alpha: f64,
    pub dimension: f64,
    /// `(n, log₂(#cylinders)/n)`.
    pub cylinder_estimates: Vec<(usize, f64)>,
    pub confirmed: bool,
}

pub const CYLINDER_DEPTHS: [usize; 3] = [200, 400, 800];

/// `H₂(1/2 + α)/ln 2`, the dimension of the binary digit-frequency deviation
/// set, with a finite-depth cylinder-count confirmation.
pub fn besicovitch_eggleston_dimension(alpha: f64) -> Result<BesicovitchEggleston> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(invalid("alpha", format!("{alpha} outside (0, 1/2)")));
    }
    let dimension = binary_entropy(0.5 + alpha) / LN_2;
    let cylinder_estimates = CYLINDER_DEPTHS
        .iter()
        .map(|&n| Ok((n, ln_biguint(&digit_tail_count(alpha, n)?) / LN_2 / n as f64)))
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = cylinder_estimates.iter().map(|(_, e)| (e - dimension).abs()).collect();
    let confirmed = gaps.windows(2).all(|w| w[1] <= w[0]) && *gaps.last().unwrap() < 0.01;
    Ok(BesicovitchEggleston {
        alpha,
        dimension,
        cylinder_estimates,
        confirmed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaStatus {
    Checked,
    /// No point of `K_{φ,α,n}` was found within the rejection budget.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallLemmaReport {
    pub n: usize,
    pub alpha: f64,
    pub delta: f64,
    pub radius: f64,
    pub pairs_tested: usize,
    pub violations: usize,
    /// Smallest `deviation(y) − α/2` over tested pairs.
    pub worst_margin: Option<f64>,
    pub attempts: u64,
    pub status: LemmaStatus,
}

/// Rejection attempts allowed per requested pair.
const LEMMA_ATTEMPTS_PER_PAIR: u64 = 1_000;

fn ball_offset(sys: &System, x: &Point, radius: f64, rng: &mut impl rand::Rng) -> Option<Point> {
    const SHRINK: f64 = 1.0 - 1e-12;
    for _ in 0..64 {
        let mut y = *x;
        match sys.dim() {
            1 => y.coords_mut()[0] += radius * SHRINK * (2.0 * rng.random::<f64>() - 1.0),
            _ => {
                let rho = radius * SHRINK * rng.random::<f64>().sqrt();
                let theta = std::f64::consts::TAU * rng.random::<f64>();
                y.coords_mut()[0] += rho * theta.cos();
                y.coords_mut()[1] += rho * theta.sin();
            }
        }
        match sys.metric() {
            Metric::FlatTorus => return Some(sys.wrap(y)),
            Metric::Absolute if sys.contains(&y) => return Some(y),
            Metric::Absolute => {}
        }
    }
    None
}

/// Samples points of `K_{φ,α,n}` and one partner each in the ball of radius
/// `δ L^{−n}`; counts partners whose deviation falls below `α/2`.
#[allow(clippy::too_many_arguments)]
pub fn verify_ball_lemma(
    sys: &System,
    phi: &Observable,
    phi_bar: f64,
    alpha: f64,
    delta: f64,
    n: usize,
    pair_count: usize,
    seed: u64,
) -> Result<BallLemmaReport> {
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    if !(delta > 0.0) || !(alpha > 0.0) {
        return Err(invalid("delta", "delta and alpha must be positive"));
    }
    sys.check_horizon(n)?;
    let radius = delta * sys.big_l().powi(-(n as i32));
    let stream = SampleStream::new(seed, tags::LEMMA);
    let max_attempts = (pair_count as u64).saturating_mul(LEMMA_ATTEMPTS_PER_PAIR).max(100_000);
    let dev = |p: Point| {
        deviation_unchecked(sys, phi, phi_bar, p, n).ok_or_else(|| Error::NonFinite { id: phi.id().to_owned() })
    };

    let mut margins: Vec<f64> = Vec::with_capacity(pair_count);
    let mut attempts = 0u64;
    while margins.len() < pair_count && attempts < max_attempts {
        let lo = attempts;
        let hi = (lo + REDUCTION_BLOCK as u64).min(max_attempts);
        let batch: Vec<Option<f64>> = (lo..hi)
            .into_par_iter()
            .map(|i| {
                let x = sample_point(sys, &stream, i);
                if dev(x)? < alpha {
                    return Ok(None);
                }
                // partner draws come after the coordinates of x in stream i
                let mut rng = stream.rng(i);
                for _ in 0..sys.dim() {
                    rng.random::<f64>();
                }
                match ball_offset(sys, &x, radius, &mut rng) {
                    Some(y) => Ok(Some(dev(y)? - 0.5 * alpha)),
                    None => Ok(None),
                }
            })
            .collect::<Result<_>>()?;
        for (k, m) in batch.into_iter().enumerate() {
            if let Some(m) = m {
                margins.push(m);
                if margins.len() == pair_count {
                    attempts = lo + k as u64 + 1;
                    break;
                }
            }
            attempts = lo + k as u64 + 1;
        }
    }
    let violations = margins.iter().filter(|&&m| m < 0.0).count();
    Ok(BallLemmaReport {
        n,
        alpha,
        delta,
        radius,
        pairs_tested: margins.len(),
        violations,
        worst_margin: margins.iter().copied().reduce(f64::min),
        attempts,
        status: if margins.is_empty() {
            LemmaStatus::Inconclusive
        } else {
            LemmaStatus::Checked
        },
    })
}


#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    BoundHolds,
    BoundViolated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::BoundHolds => "bound-holds",
            Verdict::BoundViolated => "bound-violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub d: usize,
    pub big_l: f64,
    pub h_half: Option<f64>,
    pub d0: Option<f64>,
    /// The same bound with `h(α)` in place of `h(α/2)`, reported for
    /// comparison only.
    pub h_alpha: Option<f64>,
    pub d0_alpha: Option<f64>,
    /// Detection-limited: the stencil may miss members of the set.
    pub box_dim_estimate: Option<BoxDimension>,
    pub oracle_dim: Option<f64>,
    pub slack: f64,
    pub verdict: Verdict,
}

impl DimensionReport {
    pub fn new(
        sys: &System,
        h_half: Option<f64>,
        h_alpha: Option<f64>,
        box_dim_estimate: Option<BoxDimension>,
        oracle_dim: Option<f64>,
    ) -> Self {
        let bound = |h: Option<f64>| h.and_then(|h| dimension_upper_bound(sys.dim(), sys.big_l(), h).ok());
        let d0 = bound(h_half);
        let verdict = match (d0, oracle_dim, box_dim_estimate) {
            (None, _, _) => Verdict::Inconclusive,
            (Some(d0), Some(o), _) => {
                if o < d0 {
                    Verdict::BoundHolds
                } else {
                    Verdict::BoundViolated
                }
            }
            (Some(d0), None, Some(b)) => {
                if b.upper <= d0 + VERDICT_SLACK {
                    Verdict::BoundHolds
                } else if b.lower > d0 + VERDICT_SLACK {
                    Verdict::BoundViolated
                } else {
                    Verdict::Inconclusive
                }
            }
            (Some(_), None, None) => Verdict::Inconclusive,
        };
        Self {
            d: sys.dim(),
            big_l: sys.big_l(),
            h_half,
            d0,
            h_alpha,
            d0_alpha: bound(h_alpha),
            box_dim_estimate,
            oracle_dim,
            slack: VERDICT_SLACK,
            verdict,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deviation::cramer_bernoulli;
    use crate::observables::{modulus_delta, ObservableSpec};
    use approx::assert_abs_diff_eq;

    fn cos1(sys: &System) -> Observable {
        Observable::for_system(&ObservableSpec::Cos1, sys).unwrap()
    }

    /// Visits every cell with the stencil rule; the pruned sweep must agree.
    fn brute_count(sys: &System, phi: &Observable, alpha: f64, n: usize, m: u64) -> u64 {
        let s = sys.extent() / m as f64;
        let (lo, _) = sys.bounds();
        let at = |k: f64| {
            let v = lo + k * s;
            if sys.is_periodic() {
                mod1(v)
            } else {
                v.min(sys.bounds().1)
            }
        };
        let dev = |p: Point| deviation_unchecked(sys, phi, 0.0, p, n).unwrap();
        let mut card = 0;
        if sys.dim() == 1 {
            for i in 0..m {
                let pts = [i as f64 + 0.5, i as f64, i as f64 + 1.0];
                if pts.iter().any(|&k| dev(Point::new1(at(k))) >= alpha) {
                    card += 1;
                }
            }
        } else {
            for i in 0..m {
                for j in 0..m {
                    let mut pts = vec![(i as f64 + 0.5, j as f64 + 0.5)];
                    for c in 0..4u64 {
                        pts.push(((i + (c & 1)) as f64, (j + (c >> 1)) as f64));
                    }
                    if pts.iter().any(|&(a, b)| dev(Point::new2(at(a), at(b))) >= alpha) {
                        card += 1;
                    }
                }
            }
        }
        card
    }

    #[test]
    fn bound_examples() {
        assert_abs_diff_eq!(dimension_upper_bound(1, 2.0, LN_2).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dimension_upper_bound(1, 2.0, 0.130812).unwrap(), 0.811278, epsilon = 1e-6);
        // 2 − 0.1/ln 2.618034 = 1.8960957 (independent evaluation in f64 and by series)
        assert_abs_diff_eq!(dimension_upper_bound(2, 2.618034, 0.1).unwrap(), 1.896096, epsilon = 1e-6);
        assert!(matches!(dimension_upper_bound(1, 2.0, 0.0), Err(Error::LdpNotEstablished { .. })));
        assert!(dimension_upper_bound(1, 1.5, 0.1).is_err());
    }

    #[test]
    fn bound_identity_for_fair_coin() {
        for alpha in [0.1, 0.2, 0.3, 0.4] {
            let h = cramer_bernoulli(alpha / 2.0).unwrap().rate;
            let d0 = dimension_upper_bound(1, 2.0, h).unwrap();
            assert_abs_diff_eq!(d0, binary_entropy(0.5 + alpha / 2.0) / LN_2, epsilon = 1e-12);
        }
    }

    #[test]
    fn full_space_cover() {
        let d = System::doubling();
        let ladder = build_cover_ladder(&d, &cos1(&d), 0.0, 0.0, 0.01, &[0], &[1.0], 1_000).unwrap();
        assert_eq!(ladder.entries[0].card, 200);
        assert_eq!(ladder.entries[0].cells_per_axis, 200);
    }

    #[test]
    fn empty_cover_above_twice_sup() {
        let d = System::doubling();
        let ladder = build_cover_ladder(&d, &cos1(&d), 0.0, 2.5, 0.05, &[3, 4, 5, 6], &[0.5, 1.0], u64::MAX).unwrap();
        assert!(ladder.entries.iter().all(|e| e.card == 0 && e.dprime_volume.iter().all(|&v| v == 0.0)));
        let s = dprime_volume_series(&ladder, 0.5, 3);
        assert_eq!(s.partial_sum, 0.0);
        assert!(s.converges);
    }

    #[test]
    fn pruned_sweep_matches_brute_force() {
        let d = System::doubling();
        let phi = cos1(&d);
        for (alpha, n, m) in [(0.6, 6, 3000), (0.4, 9, 5000), (0.3, 4, 777)] {
            let (card, _) = count_detected_cells(&d, &phi, 0.0, alpha, n, m).unwrap();
            assert_eq!(card, brute_count(&d, &phi, alpha, n, m), "alpha {alpha} n {n}");
        }
        let t = System::tent();
        let saw = Observable::for_system(&ObservableSpec::Coord, &t).unwrap();
        let (card, _) = count_detected_cells(&t, &saw, 0.5, 0.2, 5, 999).unwrap();
        assert_eq!(card, {
            let s = 1.0 / 999.0;
            (0..999u64)
                .filter(|&i| {
                    [i as f64 + 0.5, i as f64, i as f64 + 1.0].iter().any(|&k| {
                        deviation_unchecked(&t, &saw, 0.5, Point::new1((k * s).min(1.0)), 5).unwrap() >= 0.2
                    })
                })
                .count() as u64
        });
        let c = System::cat();
        let phi = cos1(&c);
        let (card, _) = count_detected_cells(&c, &phi, 0.0, 0.5, 3, 120).unwrap();
        assert_eq!(card, brute_count(&c, &phi, 0.5, 3, 120));
    }

    #[test]
    fn halving_spacing_never_loses_cells() {
        let c = System::cat();
        let phi = cos1(&c);
        for m in [40u64, 75] {
            let (coarse, _) = count_detected_cells(&c, &phi, 0.0, 0.45, 3, m).unwrap();
            let (fine, _) = count_detected_cells(&c, &phi, 0.0, 0.45, 3, 2 * m).unwrap();
            assert!(fine >= coarse);
        }
        let d = System::doubling();
        let phi = cos1(&d);
        for m in [1000u64, 1333] {
            let (coarse, _) = count_detected_cells(&d, &phi, 0.0, 0.6, 8, m).unwrap();
            let (fine, _) = count_detected_cells(&d, &phi, 0.0, 0.6, 8, 2 * m).unwrap();
            assert!(fine >= coarse);
        }
    }

    #[test]
    fn discontinuous_observable_rejected_by_cover() {
        let d = System::doubling();
        let r = count_detected_cells(&d, &Observable::digit(), 0.5, 0.2, 4, 100);
        assert!(matches!(r, Err(Error::UnboundedModulus { .. })));
    }

    #[test]
    fn grid_budget_enforced() {
        let d = System::doubling();
        let r = build_cover_ladder(&d, &cos1(&d), 0.0, 0.6, 0.05, &[10, 12], &[], 10);
        assert!(matches!(r, Err(Error::GridBudget { .. })));
    }

    #[test]
    fn radii_shrink_by_l() {
        let c = System::cat();
        let ladder = build_cover_ladder(&c, &cos1(&c), 0.0, 0.9, 0.03, &[1, 2, 3], &[1.9], u64::MAX).unwrap();
        for w in ladder.entries.windows(2) {
            assert_abs_diff_eq!(w[0].ln_r - w[1].ln_r, c.big_l().ln(), epsilon = 1e-12);
            assert!(w[1].r_n < w[0].r_n);
            assert!(w[1].card <= w[1].total_cells);
        }
    }

    #[test]
    fn full_space_series_diverges() {
        let d = System::doubling();
        let ns: Vec<usize> = (2..=12).collect();
        let ladder = build_cover_ladder(&d, &cos1(&d), 0.0, 0.0, 0.05, &ns, &[1.0], u64::MAX).unwrap();
        let s = dprime_volume_series(&ladder, 1.0, 2);
        assert!(!s.converges, "{s:?}");
        assert_abs_diff_eq!(s.tail_ratio.unwrap(), 1.0, epsilon = 0.01);
    }

    #[test]
    fn box_counting_examples() {
        let unit: Vec<(f64, f64)> = (4..=16)
            .map(|k| {
                let s = 0.5f64.powi(k);
                (s, (1.0 / s).ceil())
            })
            .collect();
        let b = box_counting_dimension(&unit).unwrap();
        assert_abs_diff_eq!(b.value, 1.0, epsilon = 0.01);

        let single: Vec<(f64, f64)> = (4..=16).map(|k| (0.5f64.powi(k), 1.0)).collect();
        assert_abs_diff_eq!(box_counting_dimension(&single).unwrap().value, 0.0, epsilon = 1e-12);

        let zeros: Vec<(f64, f64)> = (4..=16).map(|k| (0.5f64.powi(k), 0.0)).collect();
        assert!(matches!(box_counting_dimension(&zeros), Err(Error::Degenerate(_))));
        assert!(box_counting_dimension(&unit[..3]).is_err());
        assert!(box_counting_dimension(&unit[..5]).is_err(), "1.2 decades only");
    }

    #[test]
    fn besicovitch_eggleston_examples() {
        let be = besicovitch_eggleston_dimension(0.25).unwrap();
        assert_abs_diff_eq!(be.dimension, 0.811278, epsilon = 1e-6);
        assert!(be.confirmed, "{be:?}");
        assert_abs_diff_eq!(besicovitch_eggleston_dimension(1e-9).unwrap().dimension, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(besicovitch_eggleston_dimension(0.5 - 1e-9).unwrap().dimension, 0.0, epsilon = 1e-6);
        assert!(besicovitch_eggleston_dimension(0.0).is_err());
        assert!(besicovitch_eggleston_dimension(0.5).is_err());
    }

    #[test]
    fn ball_lemma_small_runs() {
        let d = System::doubling();
        let phi = cos1(&d);
        let delta = modulus_delta(&phi, 0.4, d.diameter()).unwrap();
        let rep = verify_ball_lemma(&d, &phi, 0.0, 0.4, delta, 6, 500, 9).unwrap();
        assert_eq!(rep.status, LemmaStatus::Checked);
        assert_eq!(rep.pairs_tested, 500);
        assert_eq!(rep.violations, 0);
        assert!(rep.worst_margin.unwrap() >= 0.0);

        let empty = verify_ball_lemma(&d, &phi, 0.0, 2.5, delta, 6, 10, 9).unwrap();
        assert_eq!(empty.status, LemmaStatus::Inconclusive);
        assert_eq!(empty.pairs_tested, 0);
    }

    #[test]
    fn verdicts() {
        let d = System::doubling();
        let tight = BoxDimension { value: 0.5, lower: 0.45, upper: 0.55, scales: 5 };
        let r = DimensionReport::new(&d, Some(0.1), None, Some(tight), None);
        assert_eq!(r.verdict, Verdict::BoundHolds);
        assert!(r.d0.unwrap() < 1.0);
        let r = DimensionReport::new(&d, Some(0.6), None, Some(tight), None);
        assert_eq!(r.verdict, Verdict::BoundViolated);
        let r = DimensionReport::new(&d, Some(-0.1), None, Some(tight), None);
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.d0.is_none());
        let r = DimensionReport::new(&d, Some(0.1), None, None, Some(0.7));
        assert_eq!(r.verdict, Verdict::BoundHolds);
    }
}
