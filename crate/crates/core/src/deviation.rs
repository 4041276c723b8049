//! Lebesgue measure of the deviation sets `K_{φ,α,n} = {x : |φ_n(x) − φ̄| ≥ α}`
//! along a ladder of horizons, and the exponential fit `m(K) ≈ C e^{−nh}`.
//!
//! Monte Carlo estimates draw every sample from a counter-based stream keyed
//! by `(seed, sample index)` and reduce integer hit counts, so results do not
//! depend on the number of workers. For the doubling map with the first
//! binary digit as observable, Birkhoff sums are digit frequencies and the
//! measure is an exact binomial tail.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::observables::{birkhoff_sum, DeviationParams, Observable};
use crate::regression::fit_line;
use crate::rng::{tags, SampleStream, REDUCTION_BLOCK};
use crate::systems::{Point, System};

pub const MIN_SAMPLES: u64 = 1_000;

/// Monte Carlo entries with fewer expected hits than this are censored by
/// the default fit window.
pub const MC_HIT_FLOOR: f64 = 5.0;

pub const MIN_FIT_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MonteCarlo,
    ExactBinomial,
    ExactCylinder,
}

impl Method {
    pub fn is_exact(self) -> bool {
        !matches!(self, Method::MonteCarlo)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::MonteCarlo => "monte-carlo",
            Method::ExactBinomial => "exact-binomial",
            Method::ExactCylinder => "exact-cylinder",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub n: usize,
    pub measure: f64,
    pub std_error: f64,
    pub samples: u64,
    pub method: Method,
}

impl LadderEntry {
    fn floor(&self) -> f64 {
        let eps_floor = 10.0 * f64::EPSILON;
        match self.method {
            Method::MonteCarlo => eps_floor.max(MC_HIT_FLOOR / self.samples as f64),
            _ => eps_floor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationLadder {
    pub params: DeviationParams,
    entries: Vec<LadderEntry>,
}

impl DeviationLadder {
    pub fn new(params: DeviationParams, entries: Vec<LadderEntry>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].n >= w[1].n) {
            return Err(invalid("ladder", "entries must be strictly increasing in n"));
        }
        for e in &entries {
            if !(0.0..=1.0).contains(&e.measure) {
                return Err(invalid("ladder", format!("measure {} outside [0, 1] at n = {}", e.measure, e.n)));
            }
            if e.method.is_exact() && e.std_error != 0.0 {
                return Err(invalid("ladder", "exact entries carry zero standard error"));
            }
        }
        Ok(Self { params, entries })
    }

    pub fn entries(&self) -> &[LadderEntry] {
        &self.entries
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub const CSV_HEADER: &'static str = "n,measure,std_error,samples,method";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.n,
                e.measure,
                e.std_error,
                e.samples,
                e.method.as_str()
            ));
        }
        out
    }
}

fn validate_ns(ns: &[usize]) -> Result<()> {
    if ns.is_empty() {
        return Err(invalid("n", "ladder is empty"));
    }
    if ns[0] == 0 {
        return Err(invalid("n", "horizons must be positive"));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("n", "horizons must be strictly increasing"));
    }
    Ok(())
}

/// Monte Carlo ladders for several thresholds over one shared sample set.
///
/// Each sampled orbit is walked once up to the largest horizon; sharing the
/// samples makes the estimates monotone in `α` at every `n`.
pub fn estimate_deviation_ladders(
    sys: &System,
    phi: &Observable,
    phi_bar: f64,
    alphas: &[f64],
    ns: &[usize],
    sample_count: u64,
    seed: u64,
) -> Result<Vec<DeviationLadder>> {
    validate_ns(ns)?;
    if sample_count < MIN_SAMPLES {
        return Err(invalid(
            "sample_count",
            format!("{sample_count} is below the floor {MIN_SAMPLES}"),
        ));
    }
    let params: Vec<DeviationParams> = alphas
        .iter()
        .map(|&a| DeviationParams::new(a, phi, phi_bar))
        .collect::<Result<_>>()?;
    let n_max = *ns.last().unwrap();
    sys.check_horizon(n_max)?;

    let stream = SampleStream::new(seed, tags::DEVIATION);
    let cells = ns.len() * alphas.len();
    let blocks = (sample_count as usize).div_ceil(REDUCTION_BLOCK);
    let dim = sys.dim();

    let hits = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = (b * REDUCTION_BLOCK) as u64;
            let hi = (lo + REDUCTION_BLOCK as u64).min(sample_count);
            let mut counts = vec![0u64; cells];
            let mut u = [0.0; 2];
            for i in lo..hi {
                stream.unit(i, &mut u[..dim]);
                let mut p = sys.from_unit(&u[..dim]);
                let mut acc = 0.0;
                let mut k = 0;
                for (j, &n) in ns.iter().enumerate() {
                    while k < n {
                        let v = phi.eval(&p);
                        if !v.is_finite() {
                            return Err(Error::NonFinite { id: phi.id().to_owned() });
                        }
                        acc += v;
                        p = sys.step(p);
                        k += 1;
                    }
                    let dev = (acc / n as f64 - phi_bar).abs();
                    for (a, &alpha) in alphas.iter().enumerate() {
                        if dev >= alpha {
                            counts[a * ns.len() + j] += 1;
                        }
                    }
                }
            }
            Ok(counts)
        })
        .try_reduce(
            || vec![0u64; cells],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;

    let total = sample_count as f64;
    params
        .into_iter()
        .enumerate()
        .map(|(a, params)| {
            let entries = ns
                .iter()
                .enumerate()
                .map(|(j, &n)| {
                    let p = hits[a * ns.len() + j] as f64 / total;
                    LadderEntry {
                        n,
                        measure: p,
                        std_error: (p * (1.0 - p) / total).sqrt(),
                        samples: sample_count,
                        method: Method::MonteCarlo,
                    }
                })
                .collect();
            DeviationLadder::new(params, entries)
        })
        .collect()
}

/// Fraction of `sample_count` uniform points whose deviation at horizon `n`
/// is at least `params.alpha`, with its binomial standard error.
pub fn estimate_deviation_measure(
    sys: &System,
    phi: &Observable,
    params: &DeviationParams,
    n: usize,
    sample_count: u64,
    seed: u64,
) -> Result<LadderEntry> {
    let mut ladders = estimate_deviation_ladders(sys, phi, params.phi_bar, &[params.alpha], &[n], sample_count, seed)?;
    Ok(ladders.pop().unwrap().entries.pop().unwrap())
}

/// Whether a word with `k` ones out of `n` lies in the digit deviation set.
///
/// Evaluated with the same floating operations as the Monte Carlo path
/// (`|k/n − 1/2| ≥ α`), so both agree on lattice points of the boundary.
#[inline]
fn digit_word_deviates(k: u64, n: u64, alpha: f64) -> bool {
    (k as f64 / n as f64 - 0.5).abs() >= alpha
}

fn check_digit_args(alpha: f64, n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    if !(0.0..=0.5).contains(&alpha) {
        return Err(invalid("alpha", format!("{alpha} outside [0, 1/2]")));
    }
    Ok(())
}

/// `Σ binomial(n, k)` over digit counts `k` with `|k/n − 1/2| ≥ α`: the number
/// of length-`n` cylinders in the deviation set.
pub fn digit_tail_count(alpha: f64, n: usize) -> Result<BigUint> {
    check_digit_args(alpha, n)?;
    let n = n as u64;
    let mut binom = BigUint::one();
    let mut total = BigUint::zero();
    for k in 0..=n {
        if digit_word_deviates(k, n, alpha) {
            total += &binom;
        }
        binom = binom * (n - k) / (k + 1);
    }
    Ok(total)
}

/// Natural logarithm of a big integer; `-inf` for zero.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap() as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln m(K)` for the doubling map with the first-digit observable, `φ̄ = 1/2`.
pub fn ln_exact_deviation_measure_digit(alpha: f64, n: usize) -> Result<f64> {
    let count = digit_tail_count(alpha, n)?;
    Ok(ln_biguint(&count) - n as f64 * std::f64::consts::LN_2)
}

/// `2^{−n} Σ_{|k/n − 1/2| ≥ α} binomial(n, k)`.
pub fn exact_deviation_measure_digit(alpha: f64, n: usize) -> Result<f64> {
    if n <= 1000 {
        // both factors are exact in f64 at this size
        let count = digit_tail_count(alpha, n)?.to_f64().unwrap();
        return Ok(count * 2f64.powi(-(n as i32)));
    }
    Ok(ln_exact_deviation_measure_digit(alpha, n)?.exp())
}

/// Exact digit ladder over the given horizons.
pub fn exact_digit_ladder(alpha: f64, ns: &[usize]) -> Result<DeviationLadder> {
    validate_ns(ns)?;
    let params = DeviationParams::new(alpha, &Observable::digit(), 0.5)?;
    let entries = ns
        .iter()
        .map(|&n| {
            Ok(LadderEntry {
                n,
                measure: exact_deviation_measure_digit(alpha, n)?,
                std_error: 0.0,
                samples: 0,
                method: Method::ExactBinomial,
            })
        })
        .collect::<Result<_>>()?;
    DeviationLadder::new(params, entries)
}

/// `H₂(p) = −p ln p − (1−p) ln(1−p)`, with `0 ln 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.ln() };
    term(p) + term(1.0 - p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CramerRate {
    pub rate: f64,
    /// Set at and beyond the endpoint `α = 1/2`, where the rate saturates.
    pub degenerate: bool,
}

/// Fair-coin rate `ln 2 − H₂(1/2 + α)`.
pub fn cramer_bernoulli(alpha: f64) -> Result<CramerRate> {
    if !(alpha >= 0.0) {
        return Err(invalid("alpha", format!("{alpha} is negative")));
    }
    if alpha >= 0.5 {
        return Ok(CramerRate {
            rate: std::f64::consts::LN_2,
            degenerate: true,
        });
    }
    Ok(CramerRate {
        rate: std::f64::consts::LN_2 - binary_entropy(0.5 + alpha),
        degenerate: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FitWindow {
    /// Largest run of entries above the noise floor, ending at the last such
    /// entry.
    Auto,
    Range { n_min: usize, n_max: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFunctionFit {
    pub c: f64,
    pub h: f64,
    pub fit_window: (usize, usize),
    pub r_squared: f64,
    pub residual_max: f64,
    pub dropped_zero_entries: usize,
    pub points: usize,
}

impl RateFunctionFit {
    /// `log C − n h`.
    pub fn ln_measure(&self, n: usize) -> f64 {
        self.c.ln() - n as f64 * self.h
    }
}

fn auto_window(entries: &[LadderEntry]) -> Option<(usize, usize)> {
    let above = |e: &LadderEntry| e.measure > e.floor();
    let last = entries.iter().rposition(above)?;
    let first = entries[..=last].iter().rposition(|e| !above(e)).map_or(0, |i| i + 1);
    Some((entries[first].n, entries[last].n))
}

/// Least squares of `ln m` against `n` on the window; `h = −slope`,
/// `C = exp(intercept)`. A non-positive `h` is returned as is.
pub fn fit_rate_function(ladder: &DeviationLadder, window: FitWindow) -> Result<RateFunctionFit> {
    let (n_min, n_max) = match window {
        FitWindow::Range { n_min, n_max } => (n_min, n_max),
        FitWindow::Auto => auto_window(&ladder.entries).ok_or(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            found: 0,
        })?,
    };
    let in_window: Vec<&LadderEntry> = ladder.entries.iter().filter(|e| e.n >= n_min && e.n <= n_max).collect();
    let usable: Vec<&LadderEntry> = in_window.iter().copied().filter(|e| e.measure > 0.0).collect();
    let dropped = in_window.len() - usable.len();
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            found: usable.len(),
        });
    }
    let xs: Vec<f64> = usable.iter().map(|e| e.n as f64).collect();
    let ys: Vec<f64> = usable.iter().map(|e| e.measure.ln()).collect();
    let line = fit_line(&xs, &ys);
    Ok(RateFunctionFit {
        c: line.intercept.exp(),
        h: -line.slope,
        fit_window: (n_min, n_max),
        r_squared: line.r_squared,
        residual_max: line.residual_max,
        dropped_zero_entries: dropped,
        points: usable.len(),
    })
}

/// Uniform point of the domain drawn for sample `index`; exposed so checks can
/// revisit individual samples.
pub fn sample_point(sys: &System, stream: &SampleStream, index: u64) -> Point {
    let mut u = [0.0; 2];
    stream.unit(index, &mut u[..sys.dim()]);
    sys.from_unit(&u[..sys.dim()])
}

/// Deviation of one point, sharing the summation order of the estimators.
pub(crate) fn deviation_unchecked(sys: &System, phi: &Observable, phi_bar: f64, x: Point, n: usize) -> Option<f64> {
    birkhoff_sum(sys, phi, x, n).map(|s| (s / n as f64 - phi_bar).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::ObservableSpec;
    use approx::assert_abs_diff_eq;

    /// Enumerates all binary words of length `n`.
    fn brute_digit_measure(alpha: f64, n: u32) -> f64 {
        let hits = (0u64..1 << n)
            .filter(|w| digit_word_deviates(w.count_ones() as u64, n as u64, alpha))
            .count();
        hits as f64 / (1u64 << n) as f64
    }

    #[test]
    fn exact_digit_examples() {
        assert_eq!(exact_deviation_measure_digit(0.5, 4).unwrap(), 0.125);
        assert_eq!(exact_deviation_measure_digit(0.5, 2).unwrap(), 0.5);
        for n in [1, 7, 30] {
            assert_abs_diff_eq!(exact_deviation_measure_digit(0.0, n).unwrap(), 1.0, epsilon = 1e-15);
        }
        assert!(exact_deviation_measure_digit(0.6, 4).is_err());
        assert!(exact_deviation_measure_digit(0.1, 0).is_err());
    }

    #[test]
    fn exact_digit_matches_word_enumeration() {
        for n in 1..=14 {
            for alpha in [0.05, 0.1, 0.25, 0.3, 0.5] {
                let exact = exact_deviation_measure_digit(alpha, n).unwrap();
                assert_abs_diff_eq!(exact, brute_digit_measure(alpha, n as u32), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn big_horizons_stay_finite() {
        let ln_m = ln_exact_deviation_measure_digit(0.25, 4000).unwrap();
        let h = cramer_bernoulli(0.25).unwrap().rate;
        assert!(ln_m.is_finite());
        assert!((-ln_m / 4000.0 - h).abs() < 2e-3);
    }

    #[test]
    fn cramer_examples() {
        assert_eq!(cramer_bernoulli(0.0).unwrap().rate, 0.0);
        let end = cramer_bernoulli(0.5).unwrap();
        assert!(end.degenerate);
        assert_abs_diff_eq!(end.rate, std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(cramer_bernoulli(0.5 - 1e-12).unwrap().rate, std::f64::consts::LN_2, epsilon = 1e-9);
        assert_abs_diff_eq!(cramer_bernoulli(0.25).unwrap().rate, 0.130812, epsilon = 1e-6);
        assert!(cramer_bernoulli(-0.1).is_err());
    }

    /// Fits `a_n = h + (A ln n + B)/n` through three horizons and returns `h`.
    fn extrapolated_rate(alpha: f64, ns: [usize; 3]) -> f64 {
        let rows: Vec<[f64; 4]> = ns
            .iter()
            .map(|&n| {
                let nf = n as f64;
                let a = -ln_exact_deviation_measure_digit(alpha, n).unwrap() / nf;
                [1.0, nf.ln() / nf, 1.0 / nf, a]
            })
            .collect();
        // Cramer's rule on the 3x3 system.
        let det3 = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let a = [0, 1, 2].map(|i| [rows[i][0], rows[i][1], rows[i][2]]);
        let mut ah = a;
        for i in 0..3 {
            ah[i][0] = rows[i][3];
        }
        det3(ah) / det3(a)
    }

    #[test]
    fn cramer_rate_matches_extrapolated_tail() {
        let h = extrapolated_rate(0.25, [200, 400, 800]);
        assert_abs_diff_eq!(h, cramer_bernoulli(0.25).unwrap().rate, epsilon = 5e-4);
    }

    #[test]
    fn synthetic_exponential_fit() {
        let params = DeviationParams::new(0.1, &Observable::constant(0.0), 0.0).unwrap();
        let entries = (1..=50)
            .map(|n| LadderEntry {
                n,
                measure: (-0.2 * n as f64).exp(),
                std_error: 0.0,
                samples: 0,
                method: Method::ExactCylinder,
            })
            .collect();
        let ladder = DeviationLadder::new(params, entries).unwrap();
        let fit = fit_rate_function(&ladder, FitWindow::Auto).unwrap();
        assert_abs_diff_eq!(fit.h, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.c, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
        assert_eq!(fit.fit_window, (1, 50));
    }

    #[test]
    fn exact_digit_ladder_rate_at_alpha_02() {
        let ns: Vec<usize> = (40..=80).collect();
        let ladder = exact_digit_ladder(0.2, &ns).unwrap();
        let fit = fit_rate_function(&ladder, FitWindow::Range { n_min: 40, n_max: 80 }).unwrap();
        assert!((fit.h - 0.082283).abs() / 0.082283 < 0.10, "h = {}", fit.h);
    }

    #[test]
    fn zero_entries_dropped_and_counted() {
        let params = DeviationParams::new(0.1, &Observable::constant(0.0), 0.0).unwrap();
        let entries = (1..=6)
            .map(|n| LadderEntry {
                n,
                measure: if n == 3 { 0.0 } else { (-0.3 * n as f64).exp() },
                std_error: 0.0,
                samples: 0,
                method: Method::ExactCylinder,
            })
            .collect();
        let ladder = DeviationLadder::new(params, entries).unwrap();
        let fit = fit_rate_function(&ladder, FitWindow::Range { n_min: 1, n_max: 6 }).unwrap();
        assert_eq!(fit.dropped_zero_entries, 1);
        assert_eq!(fit.points, 5);
        let too_few = fit_rate_function(&ladder, FitWindow::Range { n_min: 1, n_max: 4 });
        assert!(matches!(too_few, Err(Error::InsufficientData { found: 3, .. })));
    }

    #[test]
    fn auto_window_skips_censored_tail() {
        let params = DeviationParams::new(0.1, &Observable::constant(0.0), 0.0).unwrap();
        let measures = [0.5, 0.3, 1e-6, 0.1, 0.05, 0.02, 0.01, 0.004, 2e-6, 0.0];
        let entries = measures
            .iter()
            .enumerate()
            .map(|(i, &m)| LadderEntry {
                n: i + 1,
                measure: m,
                std_error: 0.0,
                samples: 1_000_000,
                method: Method::MonteCarlo,
            })
            .collect();
        let ladder = DeviationLadder::new(params, entries).unwrap();
        let fit = fit_rate_function(&ladder, FitWindow::Auto).unwrap();
        assert_eq!(fit.fit_window, (4, 8));
    }

    #[test]
    fn ladder_invariants_enforced() {
        let params = DeviationParams::new(0.1, &Observable::constant(0.0), 0.0).unwrap();
        let e = |n, m, se, method| LadderEntry { n, measure: m, std_error: se, samples: 10, method };
        assert!(DeviationLadder::new(params.clone(), vec![e(2, 0.1, 0.0, Method::MonteCarlo), e(2, 0.1, 0.0, Method::MonteCarlo)]).is_err());
        assert!(DeviationLadder::new(params.clone(), vec![e(2, 1.1, 0.0, Method::MonteCarlo)]).is_err());
        assert!(DeviationLadder::new(params, vec![e(2, 0.1, 0.01, Method::ExactBinomial)]).is_err());
    }

    #[test]
    fn monte_carlo_trivial_thresholds() {
        let d = System::doubling();
        let c = Observable::for_system(&ObservableSpec::Cos1, &d).unwrap();
        let ladders = estimate_deviation_ladders(&d, &c, 0.0, &[0.0, 2.5], &[1, 5], 2_000, 7).unwrap();
        assert!(ladders[0].entries().iter().all(|e| e.measure == 1.0 && e.std_error == 0.0));
        assert!(ladders[1].entries().iter().all(|e| e.measure == 0.0));
    }

    #[test]
    fn monte_carlo_digit_at_half() {
        let d = System::doubling();
        let digit = Observable::digit();
        let params = DeviationParams::new(0.5, &digit, 0.5).unwrap();
        let e = estimate_deviation_measure(&d, &digit, &params, 4, 200_000, 3).unwrap();
        assert!((e.measure - 0.125).abs() <= 3.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn sample_floor_and_horizon_enforced() {
        let d = System::doubling();
        let c = Observable::for_system(&ObservableSpec::Cos1, &d).unwrap();
        let r = estimate_deviation_ladders(&d, &c, 0.0, &[0.1], &[3], 999, 1);
        assert!(matches!(r, Err(Error::InvalidParameter { ref name, .. }) if name == "sample_count"));
        let r = estimate_deviation_ladders(&d, &c, 0.0, &[0.1], &[60], 1000, 1);
        assert!(matches!(r, Err(Error::HorizonExceeded { .. })));
        let r = estimate_deviation_ladders(&d, &c, 0.0, &[0.1], &[5, 5], 1000, 1);
        assert!(r.is_err());
    }

    #[test]
    fn shared_samples_match_single_estimates() {
        let c = System::cat();
        let phi = Observable::for_system(&ObservableSpec::Cos1, &c).unwrap();
        let ladders = estimate_deviation_ladders(&c, &phi, 0.0, &[0.2, 0.4], &[3, 8], 5_000, 11).unwrap();
        let params = DeviationParams::new(0.4, &phi, 0.0).unwrap();
        let single = estimate_deviation_measure(&c, &phi, &params, 8, 5_000, 11).unwrap();
        assert_eq!(ladders[1].entries()[1], single);
        for j in 0..2 {
            assert!(ladders[0].entries()[j].measure >= ladders[1].entries()[j].measure);
        }
    }

    #[test]
    fn csv_layout() {
        let ladder = exact_digit_ladder(0.5, &[2, 4]).unwrap();
        assert_eq!(ladder.to_csv(), "n,measure,std_error,samples,method\n2,0.5,0,0,exact-binomial\n4,0.125,0,0,exact-binomial\n");
    }
}
