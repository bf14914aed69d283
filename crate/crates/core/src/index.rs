//! Optimistic mean and variance with a self-referential confidence radius.
//!
//! For `t` samples the optimistic variance at a candidate mean `θ` is the
//! median-of-means of `(Y − θ)²` divided by
//! `D = max(0, 1 − C1·sqrt((κ − 1)/t · L))`, `L = ln(C2/δ)`. The optimistic
//! mean is the supremum of all `θ` with
//! `θ ≤ MM(Y) + C1·sqrt(σ̃²(θ)/t · L)`.
//!
//! Write `f(θ) = θ − MM(Y) − c'·sqrt(M(θ))` with `c' = C1·sqrt(L/(tD))` and
//! `M(θ)` the median of the block means of `(Y − θ)²`. Each block contributes
//! `(θ − ȳ_j)² + s_j`, whose square root is 1-Lipschitz in `θ`, and so is the
//! median (or central pair average) of them. Hence:
//!
//! * `c' ≥ 1`: `sqrt(M(θ)) ≥ θ − MM(Y)` above the median, so `f ≤ 0` on the
//!   whole line and the index is `+∞`.
//! * `c' < 1`: `f` is strictly increasing with slope at least `1 − c'`, the
//!   feasible set is a half-line and the index is the unique root, which lies
//!   in `[MM, MM + c'·sqrt(M(MM))/(1 − c')]`.
//!
//! Two root finders are provided. [`Solver::Bisection`] brackets by doubling
//! and bisects. [`Solver::Piecewise`] exploits that `M` is a quadratic in `θ`
//! between breakpoints: it solves the quadratic of the current central block,
//! checks the block is still central at the solution, and falls back to a
//! bisection step when the candidate leaves the bracket.

use crate::estimators::{
    block_count, block_stats, median_in_place, BlockStat, ConfidenceParams, EstimatorError,
    SampleBuffer,
};

const MAX_STEPS: u32 = 200;
const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    Bisection,
    #[default]
    Piecewise,
}

/// Result of an optimistic-mean evaluation.
///
/// `value` is `f64::INFINITY` exactly when the index is infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexResult {
    pub value: f64,
    pub mm_mean: f64,
    pub iterations: u32,
}

impl IndexResult {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    fn infinite(mm_mean: f64) -> Self {
        Self {
            value: f64::INFINITY,
            mm_mean,
            iterations: 0,
        }
    }
}

/// Variance inflation denominator `max(0, 1 − C1·sqrt((κ−1)/t · L))`.
/// Depends only on the sample count and the params.
pub fn variance_denominator(t: usize, params: &ConfidenceParams) -> f64 {
    let r = params.c1 * ((params.kappa - 1.0) / t as f64 * params.log_term()).sqrt();
    (1.0 - r).max(0.0)
}

/// Optimistic variance at candidate mean `theta`; `+∞` when the
/// denominator vanishes, including the `0/0` case.
pub fn optimistic_variance(
    samples: &[f64],
    theta: f64,
    params: &ConfidenceParams,
) -> Result<f64, EstimatorError> {
    let numerator = crate::estimators::mom_second_moment(samples, theta, params.delta)?;
    let denom = variance_denominator(samples.len(), params);
    if denom > 0.0 {
        Ok(numerator / denom)
    } else {
        Ok(f64::INFINITY)
    }
}

/// Optimistic mean of a buffer, using its prefix-sum block statistics and the
/// piecewise solver.
pub fn optimistic_mean(
    samples: &SampleBuffer,
    params: &ConfidenceParams,
) -> Result<IndexResult, EstimatorError> {
    IndexEvaluator::default().evaluate(samples, params)
}

/// Optimistic mean from raw samples with an explicit solver. Block
/// statistics are computed directly from the samples.
pub fn optimistic_mean_with(
    samples: &[f64],
    params: &ConfidenceParams,
    solver: Solver,
) -> Result<IndexResult, EstimatorError> {
    if samples.is_empty() {
        return Err(EstimatorError::NoSamples);
    }
    let m = block_count(samples.len(), params.delta);
    let blocks = block_stats(samples, m)?;
    let mut scratch = Scratch::default();
    Ok(solve(&blocks, samples.len(), params, solver, &mut scratch))
}

/// Reusable evaluator that keeps scratch buffers across calls.
#[derive(Debug, Default)]
pub struct IndexEvaluator {
    blocks: Vec<BlockStat>,
    scratch: Scratch,
    solver: Solver,
}

#[derive(Debug, Default)]
struct Scratch {
    values: Vec<f64>,
    keyed: Vec<(f64, u32)>,
}

impl IndexEvaluator {
    pub fn new(solver: Solver) -> Self {
        Self {
            solver,
            ..Self::default()
        }
    }

    pub fn evaluate(
        &mut self,
        samples: &SampleBuffer,
        params: &ConfidenceParams,
    ) -> Result<IndexResult, EstimatorError> {
        let t = samples.count();
        if t == 0 {
            return Err(EstimatorError::NoSamples);
        }
        // The denominator depends on t only; skip block work when it vanishes.
        if variance_denominator(t, params) <= 0.0 {
            let m = block_count(t, params.delta);
            samples.block_stats_into(m, &mut self.blocks);
            let mm = median_of_means_from(&self.blocks, &mut self.scratch.values);
            return Ok(IndexResult::infinite(mm));
        }
        let m = block_count(t, params.delta);
        samples.block_stats_into(m, &mut self.blocks);
        Ok(solve(&self.blocks, t, params, self.solver, &mut self.scratch))
    }
}

fn median_of_means_from(blocks: &[BlockStat], values: &mut Vec<f64>) -> f64 {
    values.clear();
    values.extend(blocks.iter().map(|b| b.mean));
    median_in_place(values)
}

fn solve(
    blocks: &[BlockStat],
    t: usize,
    params: &ConfidenceParams,
    solver: Solver,
    scratch: &mut Scratch,
) -> IndexResult {
    let mm = median_of_means_from(blocks, &mut scratch.values);
    let denom = variance_denominator(t, params);
    if denom <= 0.0 {
        return IndexResult::infinite(mm);
    }
    let slope = params.c1 * params.c1 * params.log_term() / (t as f64 * denom);
    if slope >= 1.0 {
        return IndexResult::infinite(mm);
    }
    let c = slope.sqrt();
    let mut problem = Problem {
        blocks,
        mm,
        c,
        slope,
        scratch,
    };
    let g0 = problem.second_moment(mm).sqrt();
    if g0 == 0.0 {
        return IndexResult {
            value: mm,
            mm_mean: mm,
            iterations: 0,
        };
    }
    let outcome = match solver {
        Solver::Bisection => problem.bisection(g0),
        Solver::Piecewise => problem.piecewise(g0),
    };
    match outcome {
        Some((value, iterations)) => IndexResult {
            value,
            mm_mean: mm,
            iterations,
        },
        None => IndexResult::infinite(mm),
    }
}

/// `M(θ) = median_j ((θ − ȳ_j)² + s_j)` viewed locally as `(θ − u)² + w`.
/// Blocks with equal statistics give equal pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    u: f64,
    w: f64,
}

struct Problem<'a> {
    blocks: &'a [BlockStat],
    mm: f64,
    c: f64,
    slope: f64,
    scratch: &'a mut Scratch,
}

impl Problem<'_> {
    fn second_moment(&mut self, theta: f64) -> f64 {
        let values = &mut self.scratch.values;
        values.clear();
        values.extend(self.blocks.iter().map(|b| b.shifted_second_moment(theta)));
        median_in_place(values)
    }

    fn f(&mut self, theta: f64) -> f64 {
        theta - self.mm - self.c * self.second_moment(theta).sqrt()
    }

    fn tolerance(&self, lo: f64, hi: f64, scale: f64) -> f64 {
        REL_TOL * lo.abs().max(hi.abs()).max(scale)
    }

    fn bisection(&mut self, g0: f64) -> Option<(f64, u32)> {
        let mut step = self.c * g0;
        let mut hi = self.mm + step;
        let mut iterations = 0;
        while self.f(hi) <= 0.0 {
            step *= 2.0;
            hi = self.mm + step;
            iterations += 1;
            if !hi.is_finite() || step > f64::MAX {
                return None;
            }
        }
        let mut lo = self.mm;
        for _ in 0..MAX_STEPS {
            if hi - lo <= self.tolerance(lo, hi, g0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.f(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        Some((0.5 * (lo + hi), iterations))
    }

    /// Central block(s) of `(θ − ȳ_j)² + s_j`, as a single quadratic.
    fn piece(&mut self, theta: f64) -> (Piece, f64) {
        let keyed = &mut self.scratch.keyed;
        keyed.clear();
        keyed.extend(
            self.blocks
                .iter()
                .enumerate()
                .map(|(j, b)| (b.shifted_second_moment(theta), j as u32)),
        );
        let n = keyed.len();
        let mid = n / 2;
        let (left, upper, _) =
            keyed.select_nth_unstable_by(mid, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let upper = *upper;
        let lower = if n % 2 == 1 {
            upper
        } else {
            *left
                .iter()
                .max_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .unwrap()
        };
        let a = self.blocks[lower.1 as usize];
        let b = self.blocks[upper.1 as usize];
        let u = 0.5 * (a.mean + b.mean);
        let half_gap = 0.5 * (a.mean - b.mean);
        let w = half_gap * half_gap + 0.5 * (a.spread + b.spread);
        let value = 0.5 * (lower.0 + upper.0);
        (Piece { u, w }, value)
    }

    /// Root `θ ≥ MM` of `(θ − MM)² = c²·((θ − u)² + w)`.
    fn piece_root(&self, piece: &Piece) -> f64 {
        let k = self.slope;
        let d = self.mm - piece.u;
        let q = k * (d * d + piece.w);
        let s = (k * k * d * d + (1.0 - k) * q).sqrt();
        let z = if k * d >= 0.0 {
            (k * d + s) / (1.0 - k)
        } else {
            q / (s - k * d)
        };
        self.mm + z
    }

    fn piecewise(&mut self, g0: f64) -> Option<(f64, u32)> {
        let mut lo = self.mm;
        let mut hi = self.mm + self.c * g0 / (1.0 - self.c);
        let mut iterations = 0;
        // Guard against rounding at the analytic bracket end.
        while self.f(hi) < 0.0 {
            hi = self.mm + 2.0 * (hi - self.mm);
            iterations += 1;
            if !hi.is_finite() {
                return None;
            }
        }
        let (mut piece, _) = self.piece(lo);
        for _ in 0..MAX_STEPS {
            iterations += 1;
            let root = self.piece_root(&piece);
            let from_root = root > lo && root < hi;
            let theta = if from_root { root } else { 0.5 * (lo + hi) };
            let (next, value) = self.piece(theta);
            let f = theta - self.mm - self.c * value.sqrt();
            // A root of the quadratic that is still central there solves f = 0.
            if f == 0.0 || (from_root && next == piece) {
                return Some((theta, iterations));
            }
            if f < 0.0 {
                lo = theta;
            } else {
                hi = theta;
            }
            if hi - lo <= self.tolerance(lo, hi, g0) {
                return Some((0.5 * (lo + hi), iterations));
            }
            piece = next;
        }
        Some((0.5 * (lo + hi), iterations))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{C1, C2};
    use proptest::prelude::*;

    fn params(delta: f64, kappa: f64) -> ConfidenceParams {
        ConfidenceParams::new(delta, kappa).unwrap()
    }

    /// kappa that makes the variance denominator exactly `denom` for `t` samples.
    fn kappa_for_denominator(t: usize, delta: f64, denom: f64) -> f64 {
        let r = 1.0 - denom;
        1.0 + t as f64 * (r / C1).powi(2) / (C2 / delta).ln()
    }

    #[test]
    fn single_sample_is_infinite() {
        let p = params(0.1, 3.0);
        assert_eq!(variance_denominator(1, &p), 0.0);
        assert_eq!(optimistic_variance(&[0.3], 0.0, &p).unwrap(), f64::INFINITY);
        let r = optimistic_mean(&SampleBuffer::from(vec![0.3]), &p).unwrap();
        assert!(!r.is_finite());
        assert_eq!(r.value, f64::INFINITY);
        assert_eq!(r.mm_mean, 0.3);
    }

    #[test]
    fn zero_over_zero_is_infinite() {
        let p = params(0.1, 3.0);
        assert_eq!(optimistic_variance(&[2.0, 2.0], 2.0, &p).unwrap(), f64::INFINITY);
    }

    #[test]
    fn constant_samples_have_zero_variance() {
        let p = params(0.1, 1.0);
        assert_eq!(optimistic_variance(&[4.0; 10], 4.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn forced_half_denominator() {
        let kappa = kappa_for_denominator(2, 0.1, 0.5);
        let p = params(0.1, kappa);
        assert!((variance_denominator(2, &p) - 0.5).abs() < 1e-12);
        let v = optimistic_variance(&[0.0, 2.0], 1.0, &p).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_samples_fixed_point() {
        // κ = 1 gives D = 1; c' = C1 sqrt(L/t) < 1 needs t > C1² L.
        let p = params(0.1, 1.0);
        let t = 2000;
        assert!(C1 * C1 * p.log_term() / (t as f64) < 1.0);
        for solver in [Solver::Bisection, Solver::Piecewise] {
            let r = optimistic_mean_with(&vec![3.5; t], &p, solver).unwrap();
            assert_eq!(r.value, 3.5);
        }
    }

    #[test]
    fn slope_test_marks_infinite() {
        // D > 0 but c = C1² L /(t D) ≥ 1.
        let p = params(0.1, 1.0);
        let t = 400;
        assert!(variance_denominator(t, &p) > 0.0);
        assert!(C1 * C1 * p.log_term() / (t as f64) >= 1.0);
        let ys: Vec<f64> = (0..t).map(|i| (i % 7) as f64).collect();
        let r = optimistic_mean_with(&ys, &p, Solver::Bisection).unwrap();
        assert!(!r.is_finite());
    }

    fn pseudo_samples(t: usize, seed: u64) -> Vec<f64> {
        // Small LCG keeps this test independent of the sampling module.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..t)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let u = (state >> 11) as f64 / (1u64 << 53) as f64;
                let v = ((state >> 7) % 1000) as f64 / 1000.0;
                (u - 0.5) * 4.0 + v * v
            })
            .collect()
    }

    #[test]
    fn finite_root_satisfies_fixed_point() {
        let p = params(0.05, 1.5);
        let ys = pseudo_samples(5000, 3);
        let r = optimistic_mean_with(&ys, &p, Solver::Piecewise).unwrap();
        assert!(r.is_finite());
        assert!(r.value >= r.mm_mean);
        let var = optimistic_variance(&ys, r.value, &p).unwrap();
        let rhs = r.mm_mean + C1 * (var / ys.len() as f64 * p.log_term()).sqrt();
        assert!((r.value - rhs).abs() <= 1e-9 * r.value.abs().max(1.0));
    }

    #[test]
    fn solvers_agree() {
        for (seed, t, delta, kappa) in [
            (1, 3000, 0.1, 1.2),
            (2, 20000, 0.01, 3.0),
            (3, 800, 0.3, 1.0),
            (4, 50000, 1e-4, 5.0),
        ] {
            let ys = pseudo_samples(t, seed);
            let p = params(delta, kappa);
            let a = optimistic_mean_with(&ys, &p, Solver::Bisection).unwrap();
            let b = optimistic_mean_with(&ys, &p, Solver::Piecewise).unwrap();
            let buf = SampleBuffer::from(ys.clone());
            let c = optimistic_mean(&buf, &p).unwrap();
            assert_eq!(a.is_finite(), b.is_finite());
            if a.is_finite() {
                let scale = a.value.abs().max(a.value - a.mm_mean);
                assert!((a.value - b.value).abs() <= 2e-9 * scale, "{a:?} {b:?}");
                assert!((b.value - c.value).abs() <= 1e-9 * scale, "{b:?} {c:?}");
            }
        }
    }

    #[test]
    fn empty_is_error() {
        let p = params(0.1, 3.0);
        assert!(optimistic_mean(&SampleBuffer::new(), &p).is_err());
        assert!(optimistic_variance(&[], 0.0, &p).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn affine_equivariance(
            seed in 0u64..1000,
            t in 1usize..4000,
            a in 0.01f64..100.0,
            b in -1e3f64..1e3,
            kappa in 1.0f64..2.0,
        ) {
            let p = params(0.05, kappa);
            let ys = pseudo_samples(t, seed);
            let moved: Vec<f64> = ys.iter().map(|y| a * y + b).collect();
            let base = optimistic_mean_with(&ys, &p, Solver::Piecewise).unwrap();
            let got = optimistic_mean_with(&moved, &p, Solver::Piecewise).unwrap();
            prop_assert_eq!(base.is_finite(), got.is_finite());
            if base.is_finite() {
                let want = a * base.value + b;
                let scale = want.abs() + a * (1.0 + (base.value - base.mm_mean).abs());
                prop_assert!((got.value - want).abs() <= 1e-8 * scale);
            }
        }

        #[test]
        fn vanishing_denominator_means_infinite(
            seed in 0u64..1000,
            t in 1usize..3000,
            kappa in 1.5f64..10.0,
            delta in 1e-4f64..0.5,
        ) {
            let p = params(delta, kappa);
            prop_assume!(variance_denominator(t, &p) == 0.0);
            let buf = SampleBuffer::from(pseudo_samples(t, seed));
            prop_assert!(!optimistic_mean(&buf, &p).unwrap().is_finite());
        }

        #[test]
        fn never_below_median_of_means(seed in 0u64..1000, t in 1usize..6000) {
            let p = params(0.1, 1.1);
            let buf = SampleBuffer::from(pseudo_samples(t, seed));
            let r = optimistic_mean(&buf, &p).unwrap();
            prop_assert!(r.value >= r.mm_mean);
        }

        /// With the block layout held fixed (every δ below maps to the same
        /// block count), tightening δ never lowers the index.
        #[test]
        fn solvers_agree_on_two_valued_data(
            bits in prop::collection::vec(any::<bool>(), 600..4000),
            delta in 1e-9f64..0.5,
        ) {
            // many blocks share statistics, so pieces repeat
            let ys: Vec<f64> = bits.iter().map(|&b| if b { 0.75 } else { -0.25 }).collect();
            let p = params(delta, 1.0);
            let a = optimistic_mean_with(&ys, &p, Solver::Bisection).unwrap();
            let b = optimistic_mean_with(&ys, &p, Solver::Piecewise).unwrap();
            let c = optimistic_mean(&SampleBuffer::from(ys), &p).unwrap();
            prop_assert_eq!(a.is_finite(), b.is_finite());
            if a.is_finite() {
                let scale = a.value.abs().max(a.value - a.mm_mean);
                prop_assert!((a.value - b.value).abs() <= 2e-9 * scale, "{:?} {:?}", a, b);
                prop_assert!((b.value - c.value).abs() <= 2e-9 * scale, "{:?} {:?}", b, c);
            }
        }

        #[test]
        fn monotone_in_delta_for_fixed_blocks(seed in 0u64..1000, t in 2000usize..6000) {
            let ys = pseudo_samples(t, seed);
            // ceil(8 ln(C2/δ)) = 40 for δ in [C2 e^-5, C2 e^-4.875)
            let hi = C2 * (-4.875f64).exp() * 0.999;
            let lo = C2 * (-5.0f64).exp() * 1.001;
            let mut last = f64::NEG_INFINITY;
            for k in 0..8 {
                let delta = hi - (hi - lo) * k as f64 / 7.0;
                assert_eq!(block_count(t, delta), 40);
                let r = optimistic_mean_with(&ys, &params(delta, 1.05), Solver::Piecewise).unwrap();
                prop_assert!(r.value >= last - 1e-9 * r.value.abs().max(1.0));
                last = r.value;
            }
        }
    }
}
