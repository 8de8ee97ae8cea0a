//! Memoryless polynomial power-amplifier models with hard AM/AM clipping,
//! synthetic bank generation, least-squares identification, and the
//! equivalent array-PA construction used by the reduced learning loop.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::signal::ComplexSignal;

/// Odd-order memoryless polynomial PA with saturated AM/AM beyond
/// `clip_amplitude` (phase preserved).
///
/// `coeffs[i]` is the coefficient of the order 2i+1 term.
#[derive(Debug, Clone, PartialEq)]
pub struct PaModel {
    pub coeffs: Vec<Complex64>,
    pub clip_amplitude: f64,
}

impl PaModel {
    pub fn new(coeffs: Vec<Complex64>, clip_amplitude: f64) -> Result<Self> {
        if coeffs.is_empty() || coeffs[0].norm() == 0.0 {
            return Err(Error::Config(
                "PA model requires a nonzero linear coefficient".into(),
            ));
        }
        if clip_amplitude <= 0.0 {
            return Err(Error::Config("clip amplitude must be positive".into()));
        }
        Ok(Self {
            coeffs,
            clip_amplitude,
        })
    }

    /// Identity (purely linear, unit gain) model.
    pub fn identity(order: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); (order + 1) / 2];
        coeffs[0] = Complex64::new(1.0, 0.0);
        Self {
            coeffs,
            clip_amplitude: f64::INFINITY,
        }
    }

    /// Highest nonlinearity order P = 2 * coeffs.len() - 1.
    pub fn order(&self) -> usize {
        2 * self.coeffs.len() - 1
    }

    /// Complex output for input amplitude `a` and unit phase,
    /// i.e. sum_p alpha_p a^p.
    pub fn amplitude_response(&self, a: f64) -> Complex64 {
        let a = a.min(self.clip_amplitude);
        let a2 = a * a;
        let mut pow = a;
        let mut acc = Complex64::new(0.0, 0.0);
        for c in &self.coeffs {
            acc += c * pow;
            pow *= a2;
        }
        acc
    }
}

/// A set of M per-branch PA models sharing the same order.
#[derive(Debug, Clone)]
pub struct PaBank {
    pub models: Vec<PaModel>,
}

impl PaBank {
    pub fn new(models: Vec<PaModel>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::Config("PA bank must be non-empty".into()));
        }
        let order = models[0].order();
        if models.iter().any(|m| m.order() != order) {
            return Err(Error::Config("PA bank models must share the same order".into()));
        }
        Ok(Self { models })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Plain-text table: one row per branch, `re im` per coefficient then clip.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for m in &self.models {
            for c in &m.coeffs {
                out.push_str(&format!("{:.17e} {:.17e} ", c.re, c.im));
            }
            out.push_str(&format!("{:.17e}\n", m.clip_amplitude));
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self> {
        let mut models = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Input(format!("line {}: bad number '{t}'", lineno + 1)))
                })
                .collect::<Result<_>>()?;
            if vals.len() < 3 || vals.len() % 2 == 0 {
                return Err(Error::Input(format!(
                    "line {}: expected re/im pairs plus clip amplitude",
                    lineno + 1
                )));
            }
            let clip = *vals.last().unwrap();
            let coeffs = vals[..vals.len() - 1]
                .chunks(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect();
            models.push(PaModel::new(coeffs, clip)?);
        }
        Self::new(models)
    }
}

/// Apply the PA nonlinearity sample by sample:
/// y(n) = sum_{p odd} alpha_p x(n) |x(n)|^{p-1}, with the AM/AM curve held
/// at its `clip_amplitude` value for larger inputs (phase preserved).
pub fn apply_pa(model: &PaModel, x: &ComplexSignal) -> ComplexSignal {
    let samples = x
        .samples
        .iter()
        .map(|&xi| {
            let a = xi.norm();
            if a == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if a <= model.clip_amplitude {
                let a2 = a * a;
                let mut pow = 1.0;
                let mut acc = Complex64::new(0.0, 0.0);
                for c in &model.coeffs {
                    acc += c * pow;
                    pow *= a2;
                }
                xi * acc
            } else {
                model.amplitude_response(model.clip_amplitude) * (xi / a)
            }
        })
        .collect();
    ComplexSignal::new(samples, x.sample_rate_hz)
}

/// Fit odd-order polynomial coefficients to a smooth saturating AM/AM curve
/// with mild AM/PM, used as the nominal branch model.
///
/// The curve is sat * tanh(a / sat) in amplitude with a quadratic phase
/// rotation reaching `am_pm_rad` at saturation.
fn fit_nominal_model(order: usize, sat: f64, am_pm_rad: f64) -> PaModel {
    let n_terms = (order + 1) / 2;
    let grid = 400usize;
    // Real regressor Gram on a^p, complex right-hand side.
    let mut gram = vec![vec![Complex64::new(0.0, 0.0); n_terms]; n_terms];
    let mut rhs = vec![Complex64::new(0.0, 0.0); n_terms];
    for g in 1..=grid {
        let a = sat * g as f64 / grid as f64;
        let target = Complex64::from_polar(
            sat * (a / sat).tanh(),
            am_pm_rad * (a / sat).powi(2),
        );
        let powers: Vec<f64> = (0..n_terms).map(|i| a.powi(2 * i as i32 + 1)).collect();
        for i in 0..n_terms {
            for j in 0..n_terms {
                gram[i][j] += powers[i] * powers[j];
            }
            rhs[i] += powers[i] * target;
        }
    }
    let coeffs = linalg::solve_hermitian(&gram, &rhs).expect("nominal PA fit is well conditioned");
    PaModel {
        coeffs,
        clip_amplitude: sat,
    }
}

/// Synthesize a bank of M mutually different PA models: a nominal odd-order
/// fit of a saturating response, with per-branch multiplicative complex
/// perturbations of relative magnitude <= `spread` on each coefficient.
/// Deterministic per seed.
pub fn synthesize_pa_bank(m: usize, order: usize, spread: f64, seed: u64) -> Result<PaBank> {
    if m == 0 {
        return Err(Error::Config("bank size must be >= 1".into()));
    }
    if order % 2 == 0 {
        return Err(Error::Config(format!("PA order must be odd, got {order}")));
    }
    if spread < 0.0 {
        return Err(Error::Config(format!("spread must be >= 0, got {spread}")));
    }
    let nominal = fit_nominal_model(order, 1.0, 5f64.to_radians());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models = (0..m)
        .map(|_| {
            let coeffs = nominal
                .coeffs
                .iter()
                .map(|c| {
                    // Uniform draw in the disk of radius `spread`.
                    let (re, im) = loop {
                        let re: f64 = rng.gen_range(-1.0..1.0);
                        let im: f64 = rng.gen_range(-1.0..1.0);
                        if re * re + im * im <= 1.0 {
                            break (re, im);
                        }
                    };
                    c * (Complex64::new(1.0, 0.0) + spread * Complex64::new(re, im))
                })
                .collect();
            PaModel {
                coeffs,
                clip_amplitude: nominal.clip_amplitude,
            }
        })
        .collect();
    PaBank::new(models)
}

/// Least-squares PA identification result.
#[derive(Debug, Clone)]
pub struct IdentifiedPa {
    pub model: PaModel,
    /// Mean squared residual |y - model(x)|^2.
    pub residual_power: f64,
}

/// Identify odd-order polynomial PA coefficients from input/output data by
/// solving the normal equations with a Cholesky factorization.
pub fn identify_pa_ls(x: &ComplexSignal, y: &ComplexSignal, order: usize) -> Result<IdentifiedPa> {
    if order % 2 == 0 {
        return Err(Error::Config(format!("PA order must be odd, got {order}")));
    }
    let n_terms = (order + 1) / 2;
    let n = x.len();
    if y.len() != n {
        return Err(Error::Input(format!(
            "input/output length mismatch: {} vs {}",
            n,
            y.len()
        )));
    }
    if n < 10 * n_terms {
        return Err(Error::Input(format!(
            "need at least {} samples for {} coefficients, got {n}",
            10 * n_terms,
            n_terms
        )));
    }
    let mut gram = vec![vec![Complex64::new(0.0, 0.0); n_terms]; n_terms];
    let mut rhs = vec![Complex64::new(0.0, 0.0); n_terms];
    let mut regress = vec![Complex64::new(0.0, 0.0); n_terms];
    let mut max_amp = 0.0f64;
    for (xi, yi) in x.samples.iter().zip(&y.samples) {
        let a2 = xi.norm_sqr();
        max_amp = max_amp.max(a2.sqrt());
        let mut u = *xi;
        for r in regress.iter_mut() {
            *r = u;
            u *= a2;
        }
        for i in 0..n_terms {
            for j in i..n_terms {
                gram[i][j] += regress[i].conj() * regress[j];
            }
            rhs[i] += regress[i].conj() * yi;
        }
    }
    for i in 0..n_terms {
        for j in 0..i {
            gram[i][j] = gram[j][i].conj();
        }
    }
    // Symmetric diagonal equilibration keeps the monomial Gram well conditioned.
    let scale: Vec<f64> = (0..n_terms)
        .map(|i| 1.0 / gram[i][i].re.max(f64::MIN_POSITIVE).sqrt())
        .collect();
    let mut gram_s = vec![vec![Complex64::new(0.0, 0.0); n_terms]; n_terms];
    let mut rhs_s = vec![Complex64::new(0.0, 0.0); n_terms];
    for i in 0..n_terms {
        for j in 0..n_terms {
            gram_s[i][j] = gram[i][j] * scale[i] * scale[j];
        }
        rhs_s[i] = rhs[i] * scale[i];
    }
    let solved = linalg::solve_hermitian(&gram_s, &rhs_s).map_err(|e| {
        Error::Singular(format!(
            "PA regressor Gram matrix is rank deficient (collinear |x|^(p-1) monomials, \
             e.g. constant-modulus input): {e}"
        ))
    })?;
    let coeffs: Vec<Complex64> = solved
        .iter()
        .zip(&scale)
        .map(|(v, s)| v * *s)
        .collect();
    let model = PaModel::new(coeffs, max_amp.max(f64::MIN_POSITIVE))?;
    let fitted = apply_pa(&model, x);
    let residual_power = y
        .samples
        .iter()
        .zip(&fitted.samples)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / n as f64;
    Ok(IdentifiedPa {
        model,
        residual_power,
    })
}

/// Equivalent array PA: plain (unweighted) coefficient sums across branches,
/// clip amplitude propagated as the minimum over the bank.
pub fn equivalent_array_pa(bank: &PaBank) -> Result<PaModel> {
    let n_terms = bank.models[0].coeffs.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n_terms];
    let mut clip = f64::INFINITY;
    for m in &bank.models {
        for (acc, c) in coeffs.iter_mut().zip(&m.coeffs) {
            *acc += c;
        }
        clip = clip.min(m.clip_amplitude);
    }
    PaModel::new(coeffs, clip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gaussian_signal(n: usize, rms: f64, seed: u64) -> ComplexSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| {
                let u1: f64 = rng.gen::<f64>().max(1e-300);
                let u2: f64 = rng.gen();
                Complex64::from_polar(
                    rms * (-u1.ln()).sqrt(),
                    2.0 * std::f64::consts::PI * u2,
                )
            })
            .collect();
        ComplexSignal::new(samples, 1.0)
    }

    #[test]
    fn identity_pa_passes_through() {
        let pa = PaModel::identity(9);
        let x = gaussian_signal(100, 0.5, 1);
        let y = apply_pa(&pa, &x);
        for (a, b) in x.samples.iter().zip(&y.samples) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn cubic_pa_direct_value() {
        let pa = PaModel::new(vec![c(1.0, 0.0), c(-0.05, 0.0)], 10.0).unwrap();
        let x = ComplexSignal::new(vec![c(0.5, 0.0)], 1.0);
        let y = apply_pa(&pa, &x);
        assert!((y.samples[0].re - 0.49375).abs() < 1e-15);
        assert!(y.samples[0].im.abs() < 1e-15);
    }

    #[test]
    fn clipping_saturates_magnitude() {
        let pa = PaModel::new(vec![c(1.0, 0.0), c(-0.05, 0.0)], 1.0).unwrap();
        let sat = pa.amplitude_response(1.0).norm();
        for amp in [1.5, 3.0, 100.0] {
            let x = ComplexSignal::new(vec![Complex64::from_polar(amp, 0.7)], 1.0);
            let y = apply_pa(&pa, &x);
            assert!((y.samples[0].norm() - sat).abs() < 1e-12);
            // Phase preserved.
            assert!((y.samples[0].arg() - (0.7 + pa.amplitude_response(1.0).arg())).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_spread_gives_identical_models() {
        let bank = synthesize_pa_bank(8, 9, 0.0, 5).unwrap();
        for m in &bank.models[1..] {
            assert_eq!(m, &bank.models[0]);
        }
    }

    #[test]
    fn bank_is_deterministic_and_distinct() {
        let a = synthesize_pa_bank(16, 9, 0.2, 7).unwrap();
        let b = synthesize_pa_bank(16, 9, 0.2, 7).unwrap();
        for (x, y) in a.models.iter().zip(&b.models) {
            assert_eq!(x, y);
        }
        for i in 0..16 {
            for j in i + 1..16 {
                assert_ne!(a.models[i], a.models[j]);
            }
        }
    }

    #[test]
    fn bank_rejects_negative_spread() {
        assert!(synthesize_pa_bank(4, 9, -0.1, 0).is_err());
    }

    #[test]
    fn nominal_model_is_mildly_compressive() {
        let bank = synthesize_pa_bank(1, 9, 0.0, 0).unwrap();
        let pa = &bank.models[0];
        // Small-signal gain close to 1, compressed near saturation.
        let g_small = pa.amplitude_response(0.01).norm() / 0.01;
        let g_large = pa.amplitude_response(1.0).norm() / 1.0;
        assert!((g_small - 1.0).abs() < 0.05, "small-signal gain {g_small}");
        assert!(g_large < 0.85, "gain at saturation {g_large}");
    }

    #[test]
    fn identify_recovers_known_model() {
        let truth = PaModel::new(
            vec![c(1.0, 0.02), c(-0.08, 0.01), c(0.01, -0.005), c(-0.002, 0.0), c(0.0003, 0.0001)],
            f64::INFINITY,
        )
        .unwrap();
        let x = gaussian_signal(20_000, 0.3, 2);
        let y = apply_pa(&truth, &x);
        let fit = identify_pa_ls(&x, &y, 9).unwrap();
        let err: f64 = fit
            .model
            .coeffs
            .iter()
            .zip(&truth.coeffs)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale: f64 = truth.coeffs.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
        assert!(err / scale < 1e-8, "relative coefficient error {}", err / scale);
        assert!(fit.residual_power < 1e-16);
    }

    #[test]
    fn identify_linear_signal_gives_identity() {
        let x = gaussian_signal(5000, 0.5, 3);
        let fit = identify_pa_ls(&x, &x, 9).unwrap();
        assert!((fit.model.coeffs[0] - c(1.0, 0.0)).norm() < 1e-10);
        for cc in &fit.model.coeffs[1..] {
            assert!(cc.norm() < 1e-10);
        }
    }

    #[test]
    fn identify_constant_modulus_is_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples: Vec<Complex64> = (0..2000)
            .map(|_| Complex64::from_polar(1.0, rng.gen::<f64>() * 6.28))
            .collect();
        let x = ComplexSignal::new(samples, 1.0);
        let y = x.clone();
        let err = identify_pa_ls(&x, &y, 9).unwrap_err();
        assert!(matches!(err, Error::Singular(_)), "{err}");
    }

    #[test]
    fn equivalent_pa_sums_coefficients() {
        let a = PaModel::new(vec![c(1.0, 0.0)], 1.0).unwrap();
        let b = PaModel::new(vec![c(1.0, 0.0), c(-0.1, 0.0)], 2.0).unwrap();
        // Mixed orders rejected at bank construction.
        assert!(PaBank::new(vec![a.clone(), b.clone()]).is_err());

        let a2 = PaModel::new(vec![c(1.0, 0.0), c(0.0, 0.0)], 1.0).unwrap();
        let bank = PaBank::new(vec![a2, b]).unwrap();
        let eq = equivalent_array_pa(&bank).unwrap();
        assert!((eq.coeffs[0] - c(2.0, 0.0)).norm() < 1e-15);
        assert!((eq.coeffs[1] - c(-0.1, 0.0)).norm() < 1e-15);
        assert_eq!(eq.clip_amplitude, 1.0);
    }

    #[test]
    fn equivalent_pa_matches_branch_sum() {
        let bank = synthesize_pa_bank(8, 9, 0.2, 11).unwrap();
        let eq = equivalent_array_pa(&bank).unwrap();
        // Keep amplitudes below every clip level.
        let x = gaussian_signal(2000, 0.15, 12);
        let mut sum = vec![Complex64::new(0.0, 0.0); x.len()];
        for m in &bank.models {
            let y = apply_pa(m, &x);
            for (s, v) in sum.iter_mut().zip(&y.samples) {
                *s += v;
            }
        }
        let y_eq = apply_pa(&eq, &x);
        for (s, v) in sum.iter().zip(&y_eq.samples) {
            assert!((s - v).norm() < 1e-12);
        }
    }

    #[test]
    fn bank_table_round_trip() {
        let bank = synthesize_pa_bank(4, 5, 0.1, 9).unwrap();
        let text = bank.to_table();
        let back = PaBank::from_table(&text).unwrap();
        for (a, b) in bank.models.iter().zip(&back.models) {
            for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
                assert!((x - y).norm() < 1e-15);
            }
            assert_eq!(a.clip_amplitude, b.clip_amplitude);
        }
    }
}
