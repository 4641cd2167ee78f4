//! k-nearest-neighbour mutual information (Kraskov–Stögbauer–Grassberger,
//! algorithm 1) between paired continuous samples.

use rand_distr::{Distribution, Normal};

use crate::rng::{self, hash_unit, tags};
use crate::{Error, Result};

/// Magnitude of the deterministic tie-breaking jitter used when no noise is
/// configured.
pub const TIE_JITTER: f64 = 1e-10;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Paired samples `(x_i, y_i)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dx: usize,
    dy: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SampleSet {
    pub fn new(dx: usize, dy: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if dx == 0 || dy == 0 {
            return Err(Error::Domain("sample dimensions must be positive".into()));
        }
        if x.len() % dx != 0 || y.len() % dy != 0 {
            return Err(Error::Domain("flat buffer is not a whole number of rows".into()));
        }
        let n = x.len() / dx;
        if y.len() / dy != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y.len() / dy,
            });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample set"));
        }
        Ok(Self { dx, dy, x, y })
    }

    /// Builds a sample set from per-sample rows.
    pub fn from_rows<X: AsRef<[f64]>, Y: AsRef<[f64]>>(xs: &[X], ys: &[Y]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        let dx = xs.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let dy = ys.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if xs.iter().any(|r| r.as_ref().len() != dx) || ys.iter().any(|r| r.as_ref().len() != dy) {
            return Err(Error::Domain("inconsistent sample dimensionality".into()));
        }
        let x = xs.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        let y = ys.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(dx, dy, x, y)
    }

    pub fn len(&self) -> usize {
        self.x.len() / self.dx
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dx(&self) -> usize {
        self.dx
    }

    pub fn dy(&self) -> usize {
        self.dy
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.dx..(i + 1) * self.dx]
    }

    pub fn y(&self, i: usize) -> &[f64] {
        &self.y[i * self.dy..(i + 1) * self.dy]
    }

    /// The same pairs with the roles of `x` and `y` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            dx: self.dy,
            dy: self.dx,
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }

    /// Applies `f` to every x row in place.
    pub fn map_x(mut self, mut f: impl FnMut(&mut [f64])) -> Result<Self> {
        for row in self.x.chunks_mut(self.dx) {
            f(row);
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mapped x samples"));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MiConfig {
    /// Neighbour count.
    pub k: usize,
    /// Variance of the Gaussian noise added to the x samples before the
    /// neighbour search, in squared x units.
    pub noise_variance: f64,
    pub rng_seed: u64,
}

impl Default for MiConfig {
    fn default() -> Self {
        Self {
            k: 3,
            noise_variance: 0.0,
            rng_seed: 0,
        }
    }
}

/// Digamma function ψ(x) for x > 0.
///
/// Shifts the argument above 10 with ψ(x) = ψ(x+1) − 1/x, then evaluates the
/// asymptotic expansion.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma undefined for x = {x}")));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli terms B_2n / (2n x^2n), n = 1..6
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
    Ok(acc + x.ln() - 0.5 * inv - series)
}

/// Adds i.i.d. zero-mean Gaussian noise of the given variance to every x
/// coordinate. The y samples are left untouched.
pub fn add_gaussian_noise(samples: &SampleSet, variance: f64, seed: u64) -> Result<SampleSet> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::Domain(format!("noise variance must be >= 0, got {variance}")));
    }
    if variance == 0.0 {
        return Ok(samples.clone());
    }
    let normal = Normal::new(0.0, variance.sqrt()).expect("finite std");
    let mut rng = rng::stream(seed, tags::MI_NOISE);
    samples.clone().map_x(|row| {
        for v in row {
            *v += normal.sample(&mut rng);
        }
    })
}

pub(crate) const X_JITTER_SALT: u64 = 0x5851_f42d;
pub(crate) const Y_JITTER_SALT: u64 = 0x1405_7b7e;

pub(crate) fn jitter_in_place(values: &mut [f64], salt: u64) {
    for (i, v) in values.iter_mut().enumerate() {
        *v += TIE_JITTER * hash_unit(i as u64, salt);
    }
}

fn tie_jitter(samples: &SampleSet) -> SampleSet {
    let mut out = samples.clone();
    jitter_in_place(&mut out.x, X_JITTER_SALT);
    jitter_in_place(&mut out.y, Y_JITTER_SALT);
    out
}

#[inline]
fn max_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

/// KSG estimate of I(X; Y) in nats.
///
/// Noise from `config` is added to the x samples first; with zero variance a
/// deterministic 1e-10 jitter breaks exact distance ties instead. The raw
/// estimate is returned and can be slightly negative for independent data.
pub fn ksg_mi(samples: &SampleSet, config: &MiConfig) -> Result<f64> {
    let n = samples.len();
    let k = config.k;
    if k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    if n <= k {
        return Err(Error::InsufficientSamples { n, k });
    }
    let data = if config.noise_variance > 0.0 {
        add_gaussian_noise(samples, config.noise_variance, config.rng_seed)?
    } else if config.noise_variance == 0.0 {
        tie_jitter(samples)
    } else {
        return Err(Error::InvalidConfig(format!(
            "noise variance must be >= 0, got {}",
            config.noise_variance
        )));
    };
    Ok(ksg_raw(&data, k))
}

fn ksg_raw(s: &SampleSet, k: usize) -> f64 {
    let n = s.len();
    let psi = psi_table(n);
    let (mut rx, mut ry, mut joint) = (vec![0.0; n], vec![0.0; n], Vec::with_capacity(n));
    let mut psi_sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            rx[j] = max_norm(s.x(i), s.x(j));
            ry[j] = max_norm(s.y(i), s.y(j));
        }
        psi_sum += row_term(&rx, &ry, i, k, &psi, &mut joint);
    }
    psi[k] + psi[n] - psi_sum / n as f64
}

/// Row-major `n`×`n` matrix of max-norm distances between the rows of a flat
/// sample array.
pub(crate) fn pairwise_max_norm(data: &[f64], dim: usize, n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let a = &data[i * dim..(i + 1) * dim];
        for j in (i + 1)..n {
            let v = max_norm(a, &data[j * dim..(j + 1) * dim]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// ψ(m) for integer m = −γ + H(m − 1), indices 0..=n (index 0 unused).
fn psi_table(n: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(n + 1);
    psi.push(f64::NAN);
    psi.push(-EULER_GAMMA);
    for m in 2..=n {
        let prev = psi[m - 1];
        psi.push(prev + 1.0 / (m - 1) as f64);
    }
    psi
}

/// ψ(n_x + 1) + ψ(n_y + 1) for sample `i`, given its distance rows.
#[inline]
fn row_term(rx: &[f64], ry: &[f64], i: usize, k: usize, psi: &[f64], joint: &mut Vec<f64>) -> f64 {
    joint.clear();
    joint.extend(rx.iter().zip(ry).enumerate().filter(|&(j, _)| j != i).map(|(_, (a, b))| a.max(*b)));
    let (_, eps, _) = joint.select_nth_unstable_by(k - 1, f64::total_cmp);
    let eps = *eps;
    // The diagonal is zero, so counting it supplies the +1.
    let nx = rx.iter().filter(|&&v| v < eps).count();
    let ny = ry.iter().filter(|&&v| v < eps).count();
    psi[nx] + psi[ny]
}

/// KSG estimate from precomputed marginal distance matrices.
pub(crate) fn ksg_from_distances(dx: &[f64], dy: &[f64], n: usize, k: usize) -> f64 {
    let psi = psi_table(n);
    let mut joint = Vec::with_capacity(n);
    let psi_sum: f64 = (0..n)
        .map(|i| row_term(&dx[i * n..(i + 1) * n], &dy[i * n..(i + 1) * n], i, k, &psi, &mut joint))
        .sum();
    psi[k] + psi[n] - psi_sum / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    // Independent route: ψ(1+x) = −γ + Σ_{j≥2} (−1)^j ζ(j) x^{j−1}, for small x.
    fn digamma_small_series(x: f64) -> f64 {
        let zeta = [
            1.644_934_066_848_226_4,
            1.202_056_903_159_594_2,
            1.082_323_233_711_138_2,
            1.036_927_755_143_369_9,
        ];
        let mut s = -EULER_GAMMA;
        for (m, z) in zeta.iter().enumerate() {
            let j = m + 2;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * z * x.powi(j as i32 - 1);
        }
        s - 1.0 / x
    }

    fn gaussian_pairs(n: usize, rho: f64, seed: u64) -> SampleSet {
        let mut r = crate::rng::stream(seed, 999);
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let a: f64 = r.sample(StandardNormal);
            let b: f64 = r.sample(StandardNormal);
            xs.push([a]);
            ys.push([rho * a + (1.0 - rho * rho).sqrt() * b]);
        }
        SampleSet::from_rows(&xs, &ys).unwrap()
    }

    #[test]
    fn digamma_reference_values() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-10);
        assert!((digamma(2.0).unwrap() - 0.422_784_335_098_467_1).abs() < 1e-10);
        let harmonic9: f64 = (1..=9).map(|k| 1.0 / k as f64).sum();
        assert!((digamma(10.0).unwrap() - (harmonic9 - EULER_GAMMA)).abs() < 1e-10);
        assert!((digamma(10.0).unwrap() - 2.251_752_589_066_721).abs() < 1e-10);
        // ψ(1/2) = −γ − 2 ln 2
        assert!((digamma(0.5).unwrap() - (-EULER_GAMMA - 2.0 * 2f64.ln())).abs() < 1e-10);
    }

    #[test]
    fn digamma_small_arguments_match_series() {
        for &x in &[1e-3, 2e-3, 5e-3] {
            let got = digamma(x).unwrap();
            let want = digamma_small_series(x);
            assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn digamma_rejects_non_positive() {
        assert!(digamma(0.0).is_err());
        assert!(digamma(-1.5).is_err());
        assert!(digamma(f64::NAN).is_err());
    }

    #[test]
    fn ksg_needs_more_than_k_samples() {
        let s = SampleSet::from_rows(&[[0.0], [1.0], [2.0]], &[[0.0], [1.0], [2.0]]).unwrap();
        let err = ksg_mi(&s, &MiConfig { k: 3, ..Default::default() }).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { n: 3, k: 3 }));
    }

    #[test]
    fn non_finite_samples_rejected() {
        let err = SampleSet::from_rows(&[[0.0], [f64::NAN]], &[[0.0], [1.0]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn correlated_gaussian_matches_closed_form() {
        let want = -0.5 * (1.0f64 - 0.81).ln();
        assert!((want - 0.8304).abs() < 1e-4);
        let got = ksg_mi(&gaussian_pairs(2000, 0.9, 4), &MiConfig::default()).unwrap();
        assert!((got - want).abs() < 0.1, "{got}");
    }

    #[test]
    fn identical_variables_give_large_estimate() {
        let s = gaussian_pairs(2000, 1.0, 8);
        let got = ksg_mi(&s, &MiConfig::default()).unwrap();
        assert!(got > 2.0, "{got}");
    }

    #[test]
    fn symmetric_in_arguments() {
        let s = gaussian_pairs(500, 0.6, 2);
        let cfg = MiConfig::default();
        let a = ksg_mi(&s, &cfg).unwrap();
        let b = ksg_mi(&s.swapped(), &cfg).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn monotone_in_correlation() {
        let cfg = MiConfig::default();
        let est: Vec<f64> = [0.0, 0.5, 0.9]
            .iter()
            .map(|&rho| ksg_mi(&gaussian_pairs(2000, rho, 17), &cfg).unwrap())
            .collect();
        assert!(est[0] < est[1] && est[1] < est[2], "{est:?}");
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = gaussian_pairs(50, 0.3, 1);
        assert_eq!(add_gaussian_noise(&s, 0.0, 7).unwrap(), s);
    }

    #[test]
    fn noise_is_seeded_and_only_touches_x() {
        let s = gaussian_pairs(50, 0.3, 1);
        let a = add_gaussian_noise(&s, 1.6, 7).unwrap();
        let b = add_gaussian_noise(&s, 1.6, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, s);
        for i in 0..s.len() {
            assert_eq!(a.y(i), s.y(i));
        }
    }

    #[test]
    fn noise_has_requested_variance() {
        let zeros = vec![[0.0, 0.0, 0.0]; 1000];
        let acts = vec![[0.0]; 1000];
        let s = SampleSet::from_rows(&zeros, &acts).unwrap();
        let noisy = add_gaussian_noise(&s, 1.6, 3).unwrap();
        for c in 0..3 {
            let vals: Vec<f64> = (0..1000).map(|i| noisy.x(i)[c]).collect();
            let mean = vals.iter().sum::<f64>() / 1000.0;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 999.0;
            assert!((var - 1.6).abs() < 0.15 * 1.6, "coord {c}: {var}");
        }
    }

    #[test]
    fn negative_variance_rejected() {
        let s = gaussian_pairs(10, 0.0, 1);
        assert!(add_gaussian_noise(&s, -1.0, 0).is_err());
        let cfg = MiConfig {
            noise_variance: -0.1,
            ..Default::default()
        };
        assert!(ksg_mi(&s, &cfg).is_err());
    }
}
