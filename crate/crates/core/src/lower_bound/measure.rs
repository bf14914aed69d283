//! Finite-support probability measures with exact moment arithmetic.

use thiserror::Error;

/// Values closer than this (relative to `max(1, |x|)`) are one atom.
pub const ATOM_TOLERANCE: f64 = 1e-12;
const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("measure has no atoms")]
    Empty,
    #[error("atom ({value}, {prob}) is not finite with positive mass")]
    BadAtom { value: f64, prob: f64 },
    #[error("masses sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("measure has zero variance")]
    ZeroVariance,
    #[error("mixture weight {0} outside [0, 1]")]
    BadWeight(f64),
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

pub(crate) fn same_atom(a: f64, b: f64) -> bool {
    (a - b).abs() <= ATOM_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Probability measure on finitely many reals, kept in canonical form:
/// strictly increasing values, positive masses summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteMeasure {
    /// Sorts atoms, merges coincident values and checks normalization.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, MeasureError> {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().collect();
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        for &(value, prob) in &atoms {
            if !value.is_finite() || !prob.is_finite() || prob <= 0.0 {
                return Err(MeasureError::BadAtom { value, prob });
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut probs: Vec<f64> = Vec::with_capacity(atoms.len());
        for (value, prob) in atoms {
            match values.last() {
                Some(&last) if same_atom(last, value) => *probs.last_mut().unwrap() += prob,
                _ => {
                    values.push(value);
                    probs.push(prob);
                }
            }
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(MeasureError::NotNormalized(total));
        }
        Ok(Self { values, probs })
    }

    /// Unit mass at `value`.
    pub fn point(value: f64) -> Result<Self, MeasureError> {
        Self::new([(value, 1.0)])
    }

    /// Like [`DiscreteMeasure::new`] but rescales masses to sum to one.
    pub fn normalized(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, MeasureError> {
        let atoms: Vec<(f64, f64)> = atoms.into_iter().collect();
        let total = compensated_sum(atoms.iter().map(|a| a.1));
        if !(total > 0.0 && total.is_finite()) {
            return Err(MeasureError::NotNormalized(total));
        }
        Self::new(atoms.into_iter().map(|(v, p)| (v, p / total)))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    /// Mass at `value` (matched within [`ATOM_TOLERANCE`]).
    pub fn mass_at(&self, value: f64) -> f64 {
        let i = self.values.partition_point(|&v| v < value && !same_atom(v, value));
        match self.values.get(i) {
            Some(&v) if same_atom(v, value) => self.probs[i],
            _ => 0.0,
        }
    }

    /// `Σ p_j (x_j − center)^order`.
    pub fn moment(&self, order: i32, center: f64) -> f64 {
        compensated_sum(self.atoms().map(|(x, p)| p * (x - center).powi(order)))
    }

    pub fn mean(&self) -> f64 {
        self.moment(1, 0.0)
    }

    pub fn central_moment(&self, order: i32) -> f64 {
        self.moment(order, self.mean())
    }

    pub fn variance(&self) -> f64 {
        self.central_moment(2)
    }

    pub fn skewness(&self) -> Result<f64, MeasureError> {
        let v = self.nonzero_variance()?;
        Ok(self.central_moment(3) / v.powf(1.5))
    }

    pub fn kurtosis(&self) -> Result<f64, MeasureError> {
        let v = self.nonzero_variance()?;
        Ok(self.central_moment(4) / (v * v))
    }

    fn nonzero_variance(&self) -> Result<f64, MeasureError> {
        let v = self.variance();
        if v > 0.0 {
            Ok(v)
        } else {
            Err(MeasureError::ZeroVariance)
        }
    }

    /// Law of `scale·X + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self, MeasureError> {
        Self::new(self.atoms().map(|(x, p)| (scale * x + shift, p)))
    }

    /// Law of `f(X)`.
    pub fn push_forward(&self, f: impl Fn(f64) -> f64) -> Result<Self, MeasureError> {
        Self::new(self.atoms().map(|(x, p)| (f(x), p)))
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other`.
    pub fn convolve(&self, other: &Self) -> Result<Self, MeasureError> {
        Self::new(
            self.atoms()
                .flat_map(|(x, p)| other.atoms().map(move |(y, q)| (x + y, p * q))),
        )
    }

    /// `(1 − weight)·self + weight·other`.
    pub fn mixture(&self, weight: f64, other: &Self) -> Result<Self, MeasureError> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(MeasureError::BadWeight(weight));
        }
        let keep = 1.0 - weight;
        Self::new(
            self.atoms()
                .map(|(x, p)| (x, keep * p))
                .chain(other.atoms().map(|(y, q)| (y, weight * q)))
                .filter(|a| a.1 > 0.0),
        )
    }

    /// Affine image with mean 0 and variance 1, plus the map `x ↦ scale·x + shift`.
    pub fn standardize(&self) -> Result<(Self, f64, f64), MeasureError> {
        let sd = self.nonzero_variance()?.sqrt();
        let scale = 1.0 / sd;
        let shift = -self.mean() / sd;
        Ok((self.affine(scale, shift)?, scale, shift))
    }

    pub fn is_standardized(&self, tol: f64) -> bool {
        self.mean().abs() <= tol && (self.variance() - 1.0).abs() <= tol
    }

    /// Symmetric about its mean, atom by atom.
    pub fn is_symmetric(&self) -> bool {
        let mu = self.mean();
        let n = self.len();
        (0..n).all(|i| {
            let j = n - 1 - i;
            same_atom(self.values[i] - mu, mu - self.values[j])
                && (self.probs[i] - self.probs[j]).abs() <= MASS_TOLERANCE
        })
    }

    /// Quantile-grid discretization: `atoms` equal masses at
    /// `quantile((j + 1/2)/atoms)`. Moments (kurtosis in particular) of the
    /// result only approximate those of the source law.
    pub fn from_quantiles(
        quantile: impl Fn(f64) -> f64,
        atoms: usize,
    ) -> Result<Self, MeasureError> {
        let w = 1.0 / atoms as f64;
        Self::normalized((0..atoms).map(|j| (quantile((j as f64 + 0.5) * w), w)))
    }
}

/// Merge-walk over two canonical supports. Calls `visit(p_mass, q_mass)` for
/// every value charged by either measure.
fn walk_supports(p: &DiscreteMeasure, q: &DiscreteMeasure, mut visit: impl FnMut(f64, f64)) {
    let (mut i, mut j) = (0, 0);
    while i < p.len() || j < q.len() {
        match (p.values.get(i), q.values.get(j)) {
            (Some(&x), Some(&y)) if same_atom(x, y) => {
                visit(p.probs[i], q.probs[j]);
                i += 1;
                j += 1;
            }
            (Some(&x), Some(&y)) if x < y => {
                visit(p.probs[i], 0.0);
                i += 1;
            }
            (Some(_), None) => {
                visit(p.probs[i], 0.0);
                i += 1;
            }
            _ => {
                visit(0.0, q.probs[j]);
                j += 1;
            }
        }
    }
}

/// Relative entropy `KL(p, q)`; `+∞` if `p` charges a value `q` does not.
pub fn kl_divergence(p: &DiscreteMeasure, q: &DiscreteMeasure) -> f64 {
    let mut terms = Vec::with_capacity(p.len());
    let mut infinite = false;
    walk_supports(p, q, |a, b| {
        if a > 0.0 {
            if b > 0.0 {
                terms.push(a * (a / b).ln());
            } else {
                infinite = true;
            }
        }
    });
    if infinite {
        f64::INFINITY
    } else {
        compensated_sum(terms).max(0.0)
    }
}

/// `χ²(p, q) = Σ_q (p_j/q_j − 1)² q_j`; `+∞` if `p` charges a value `q` does not.
pub fn chi_squared(p: &DiscreteMeasure, q: &DiscreteMeasure) -> f64 {
    let mut terms = Vec::with_capacity(q.len());
    let mut infinite = false;
    walk_supports(p, q, |a, b| {
        if b > 0.0 {
            let d = a - b;
            terms.push(d * d / b);
        } else if a > 0.0 {
            infinite = true;
        }
    });
    if infinite {
        f64::INFINITY
    } else {
        compensated_sum(terms).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm1() -> DiscreteMeasure {
        DiscreteMeasure::new([(-1.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    #[test]
    fn canonical_form() {
        let m = DiscreteMeasure::new([(2.0, 0.25), (-1.0, 0.5), (2.0, 0.25)]).unwrap();
        assert_eq!(m.values(), &[-1.0, 2.0]);
        assert_eq!(m.probs(), &[0.5, 0.5]);
        assert!(DiscreteMeasure::new([(0.0, 0.5)]).is_err());
        assert!(DiscreteMeasure::new([(0.0, 1.5), (1.0, -0.5)]).is_err());
        assert!(DiscreteMeasure::new(Vec::new()).is_err());
        assert!(DiscreteMeasure::new([(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn two_point_moments() {
        let m = pm1();
        assert_eq!(m.moment(2, 0.0), 1.0);
        assert_eq!(m.moment(4, 0.0), 1.0);
        assert_eq!(m.kurtosis().unwrap(), 1.0);
        let skewed = DiscreteMeasure::new([(0.0, 0.3), (5.0, 0.2), (1.0, 0.5)]).unwrap();
        assert!(skewed.moment(1, skewed.mean()).abs() < 1e-15);
    }

    #[test]
    fn kl_examples() {
        let p = pm1();
        assert_eq!(kl_divergence(&p, &p), 0.0);
        let q = DiscreteMeasure::new([(-1.0, 0.45), (1.0, 0.45), (0.0, 0.05), (2.0, 0.05)]).unwrap();
        assert!((kl_divergence(&p, &q) - (1.0f64 / 0.9).ln()).abs() < 1e-15);
        let r = DiscreteMeasure::new([(-1.0, 0.5), (3.0, 0.5)]).unwrap();
        assert_eq!(kl_divergence(&p, &r), f64::INFINITY);
        // q charges extra values: KL finite, χ² over q's support
        assert!(kl_divergence(&p, &q).is_finite());
        assert_eq!(chi_squared(&q, &p), f64::INFINITY);
    }

    #[test]
    fn chi_squared_two_point_tilt() {
        let p = pm1();
        let d = 0.1;
        let q = DiscreteMeasure::new([(-1.0, 0.5 * (1.0 - d)), (1.0, 0.5 * (1.0 + d))]).unwrap();
        assert_eq!(chi_squared(&p, &p), 0.0);
        let want = d * d / (1.0 - d * d);
        assert!((chi_squared(&p, &q) - want).abs() < 1e-15);
        assert!(kl_divergence(&p, &q) <= chi_squared(&p, &q));
    }

    #[test]
    fn standardize_examples() {
        let (s, scale, shift) = pm1().standardize().unwrap();
        assert_eq!((scale, shift), (1.0, 0.0));
        assert_eq!(s, pm1());
        let m = DiscreteMeasure::new([(0.0, 0.5), (2.0, 0.5)]).unwrap();
        let (s, scale, shift) = m.standardize().unwrap();
        assert_eq!((scale, shift), (1.0, -1.0));
        assert_eq!(s, pm1());
        assert!(DiscreteMeasure::point(3.0).unwrap().standardize().is_err());
        let skewed = DiscreteMeasure::new([(0.0, 0.3), (5.0, 0.2), (1.0, 0.5)]).unwrap();
        let (s, _, _) = skewed.standardize().unwrap();
        assert!(s.is_standardized(1e-12));
        assert!((s.kurtosis().unwrap() - skewed.kurtosis().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn symmetry_detection() {
        assert!(pm1().is_symmetric());
        let m = DiscreteMeasure::new([(1.0, 0.25), (2.0, 0.5), (3.0, 0.25)]).unwrap();
        assert!(m.is_symmetric());
        let m = DiscreteMeasure::new([(1.0, 0.25), (2.0, 0.5), (4.0, 0.25)]).unwrap();
        assert!(!m.is_symmetric());
    }

    #[test]
    fn convolution_of_points_and_mixture() {
        let m = pm1().convolve(&pm1()).unwrap();
        assert_eq!(m.values(), &[-2.0, 0.0, 2.0]);
        assert_eq!(m.probs(), &[0.25, 0.5, 0.25]);
        let mix = pm1().mixture(0.1, &pm1().affine(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(mix.values(), &[-1.0, 0.0, 1.0, 2.0]);
        assert!((mix.mass_at(0.0) - 0.05).abs() < 1e-16);
        assert!((mix.mass_at(1.0) - 0.45).abs() < 1e-16);
        assert_eq!(mix.mass_at(0.5), 0.0);
    }

    #[test]
    fn quantile_grid() {
        let m = DiscreteMeasure::from_quantiles(|u| u, 1000).unwrap();
        assert!((m.mean() - 0.5).abs() < 1e-12);
        assert!((m.kurtosis().unwrap() - 1.8).abs() < 1e-5);
    }
}
