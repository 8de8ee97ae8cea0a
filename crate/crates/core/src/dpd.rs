//! Injection-style stream-level predistortion.
//!
//! The predistorter adds a low-power correction built from static nonlinear
//! (SNL) basis functions u_p(n) = |s(n)|^{p-1} s(n) to the data stream, so a
//! single DPD ahead of the precoder linearizes the combined signal of all
//! branches at the intended receiver. Coefficients are learned by a
//! block-adaptive decorrelation loop against a transmitter-local replica of
//! the received signal, expressed in a Cholesky-orthonormalized basis.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::pa::{apply_pa, PaBank, PaModel};
use crate::signal::{energy, inner, ComplexSignal};

/// SNL basis columns u_p(n) for odd p in {1, 3, ..., Q}.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    /// columns[i] holds order 2i+1.
    pub columns: Vec<Vec<Complex64>>,
    pub q: usize,
}

impl BasisMatrix {
    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn num_samples(&self) -> usize {
        self.columns.first().map_or(0, |c| c.len())
    }
}

/// Generate the SNL basis u_p(n) = |s(n)|^{p-1} s(n) for odd p up to Q.
pub fn snl_basis(s: &ComplexSignal, q: usize) -> Result<BasisMatrix> {
    if q % 2 == 0 || q == 0 {
        return Err(Error::Config(format!("basis order Q must be odd, got {q}")));
    }
    let k = (q + 1) / 2;
    let n = s.len();
    let mut columns = vec![vec![Complex64::new(0.0, 0.0); n]; k];
    for (idx, &x) in s.samples.iter().enumerate() {
        let a2 = x.norm_sqr();
        let mut u = x;
        for col in columns.iter_mut() {
            col[idx] = u;
            u *= a2;
        }
    }
    Ok(BasisMatrix { columns, q })
}

/// Invertible map between the raw SNL basis and the orthonormalized basis,
/// from the Cholesky factor of the sample covariance.
///
/// With R = (1/N) U^H U = L L^H, the orthonormal columns are the rows of
/// L^{-1} applied per sample; coefficient vectors map through L^T.
#[derive(Debug, Clone)]
pub struct OrthoTransform {
    /// Lower Cholesky factor of the sample covariance.
    pub chol: Vec<Vec<Complex64>>,
}

impl OrthoTransform {
    pub fn dim(&self) -> usize {
        self.chol.len()
    }

    /// Identity transform of dimension k.
    pub fn identity(k: usize) -> Self {
        let mut chol = vec![vec![Complex64::new(0.0, 0.0); k]; k];
        for (i, row) in chol.iter_mut().enumerate() {
            row[i] = Complex64::new(1.0, 0.0);
        }
        Self { chol }
    }

    /// Map a per-sample raw basis vector u to the orthonormal basis L^{-1} u.
    pub fn to_ortho_sample(&self, u: &[Complex64]) -> Vec<Complex64> {
        linalg::solve_lower(&self.chol, u)
    }

    /// Map injection weights expressed in the orthonormal basis back to raw
    /// basis weights: w_raw = L^{-T} w_ortho.
    pub fn raw_weights(&self, ortho: &[Complex64]) -> Vec<Complex64> {
        // Solve L^T x = w (upper-triangular back substitution, no conjugation).
        let n = ortho.len();
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut sum = ortho[i];
            for k in i + 1..n {
                sum -= self.chol[k][i] * x[k];
            }
            x[i] = sum / self.chol[i][i];
        }
        x
    }

    /// Map raw-basis injection weights to the orthonormal basis: L^T w.
    pub fn ortho_weights(&self, raw: &[Complex64]) -> Vec<Complex64> {
        let n = raw.len();
        (0..n)
            .map(|i| (i..n).map(|k| self.chol[k][i] * raw[k]).sum())
            .collect()
    }
}

/// Orthonormalize the basis columns against their sample covariance.
///
/// Returns the transformed basis (sample Gram ~ identity) and the transform.
pub fn orthogonalize(basis: &BasisMatrix) -> Result<(BasisMatrix, OrthoTransform)> {
    let k = basis.num_columns();
    let n = basis.num_samples();
    if n < 10 * k {
        return Err(Error::Input(format!(
            "need at least {} samples to orthogonalize {k} columns, got {n}",
            10 * k
        )));
    }
    let mut cov = vec![vec![Complex64::new(0.0, 0.0); k]; k];
    for i in 0..k {
        for j in i..k {
            cov[i][j] = inner(&basis.columns[i], &basis.columns[j]) / n as f64;
        }
    }
    for i in 0..k {
        for j in 0..i {
            cov[i][j] = cov[j][i].conj();
        }
    }
    // Equilibrate to a unit diagonal before factoring: column powers span
    // many orders of magnitude (|s|^{2(p-1)} scaling), and the pivot
    // tolerance is relative to the largest entry. The scaling is folded back
    // into the factor, so the transform is the exact Cholesky factor of cov.
    let scale: Vec<f64> = (0..k).map(|i| cov[i][i].re.max(f64::MIN_POSITIVE).sqrt()).collect();
    let mut scaled = cov.clone();
    for i in 0..k {
        for j in 0..k {
            scaled[i][j] /= scale[i] * scale[j];
        }
    }
    let mut chol = linalg::cholesky(&scaled).map_err(|e| {
        Error::Singular(format!(
            "basis covariance is numerically singular; the first failing column \
             corresponds to a nonlinearity order (2*index+1): {e}"
        ))
    })?;
    for i in 0..k {
        for j in 0..=i {
            chol[i][j] *= scale[i];
        }
    }
    let transform = OrthoTransform { chol };
    let mut columns = vec![vec![Complex64::new(0.0, 0.0); n]; k];
    let mut u = vec![Complex64::new(0.0, 0.0); k];
    for idx in 0..n {
        for (i, col) in basis.columns.iter().enumerate() {
            u[i] = col[idx];
        }
        let v = transform.to_ortho_sample(&u);
        for (i, val) in v.into_iter().enumerate() {
            columns[i][idx] = val;
        }
    }
    Ok((
        BasisMatrix {
            columns,
            q: basis.q,
        },
        transform,
    ))
}

/// The basis in which a coefficient vector is expressed.
#[derive(Debug, Clone)]
pub enum BasisDomain {
    Raw,
    Orthogonalized(OrthoTransform),
}

/// Injection DPD coefficients.
///
/// `weights[i]` multiplies basis column i (order 2i+1) in the injection sum,
/// i.e. it stores beta_q^* in the raw domain; the order-1 slot is zero for
/// pure injection coefficients but may pick up a small linear component when
/// converting from the orthogonalized domain.
#[derive(Debug, Clone)]
pub struct DpdCoefficients {
    pub weights: Vec<Complex64>,
    pub domain: BasisDomain,
}

impl DpdCoefficients {
    /// All-zero (pass-through) coefficients in the raw domain.
    pub fn zero(q: usize) -> Self {
        Self {
            weights: vec![Complex64::new(0.0, 0.0); (q + 1) / 2],
            domain: BasisDomain::Raw,
        }
    }

    pub fn q(&self) -> usize {
        2 * self.weights.len() - 1
    }

    /// beta_q (conjugate of the stored injection weight) for odd q >= 3,
    /// in the raw domain.
    pub fn beta_raw(&self) -> Vec<Complex64> {
        let raw = self.clone().into_raw();
        raw.weights[1..].iter().map(|w| w.conj()).collect()
    }

    /// Convert into the raw basis domain.
    pub fn into_raw(self) -> Self {
        match self.domain {
            BasisDomain::Raw => self,
            BasisDomain::Orthogonalized(t) => Self {
                weights: t.raw_weights(&self.weights),
                domain: BasisDomain::Raw,
            },
        }
    }

    /// Convert into the orthogonalized domain under `transform`.
    pub fn into_ortho(self, transform: OrthoTransform) -> Self {
        let raw = self.into_raw();
        Self {
            weights: transform.ortho_weights(&raw.weights),
            domain: BasisDomain::Orthogonalized(transform),
        }
    }

    /// Serialized form: domain flag, weights, and transform rows when present.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.domain {
            BasisDomain::Raw => out.push_str("domain raw\n"),
            BasisDomain::Orthogonalized(t) => {
                out.push_str(&format!("domain ortho {}\n", t.dim()))
            }
        }
        for w in &self.weights {
            out.push_str(&format!("w {:.17e} {:.17e}\n", w.re, w.im));
        }
        if let BasisDomain::Orthogonalized(t) = &self.domain {
            for row in &t.chol {
                out.push('t');
                for v in row {
                    out.push_str(&format!(" {:.17e} {:.17e}", v.re, v.im));
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Predistort: s~(n) = s(n) + sum_q beta_q^* u_q(n), evaluated in the
/// coefficients' declared basis domain.
pub fn predistort(s_u: &ComplexSignal, dpd: &DpdCoefficients) -> ComplexSignal {
    let k = dpd.weights.len();
    let samples = s_u
        .samples
        .iter()
        .map(|&x| {
            let a2 = x.norm_sqr();
            let mut u = vec![Complex64::new(0.0, 0.0); k];
            let mut pow = x;
            for ui in u.iter_mut() {
                *ui = pow;
                pow *= a2;
            }
            let basis = match &dpd.domain {
                BasisDomain::Raw => u,
                BasisDomain::Orthogonalized(t) => t.to_ortho_sample(&u),
            };
            // The order-1 slot carries no injection in the raw domain; in the
            // orthogonalized domain it is part of the change of basis.
            let inj: Complex64 = match &dpd.domain {
                BasisDomain::Raw => dpd
                    .weights
                    .iter()
                    .zip(&basis)
                    .skip(1)
                    .map(|(w, b)| w * b)
                    .sum(),
                BasisDomain::Orthogonalized(_) => {
                    dpd.weights.iter().zip(&basis).map(|(w, b)| w * b).sum()
                }
            };
            x + inj
        })
        .collect();
    ComplexSignal::new(samples, s_u.sample_rate_hz)
}

/// Closed-form cancellation coefficients beta_p^* = -alpha_p,tot / alpha_1,tot
/// for the combined coefficients alpha_p,tot = sum_m alpha_p,m |h_m|.
pub fn closed_form_beta(alpha_tot: &[Complex64]) -> Result<DpdCoefficients> {
    if alpha_tot.is_empty() || alpha_tot[0].norm() == 0.0 {
        return Err(Error::Singular(
            "combined linear coefficient alpha_1,tot must be nonzero".into(),
        ));
    }
    let mut weights = vec![Complex64::new(0.0, 0.0); alpha_tot.len()];
    for (w, a) in weights.iter_mut().zip(alpha_tot).skip(1) {
        *w = -a / alpha_tot[0];
    }
    Ok(DpdCoefficients {
        weights,
        domain: BasisDomain::Raw,
    })
}

/// Full learning replica: z(n) = sum_m |h_m^e| PA_m^e(s~(n)), the
/// matched-channel form of the combined received signal. The unit-modulus
/// precoder phases cancel against the channel phases and are validated for
/// dimension only.
pub fn feedback_replica_full(
    s_tilde: &ComplexSignal,
    precoder: &crate::channel::Precoder,
    pa_estimates: &PaBank,
    channel_estimates: &crate::channel::ChannelRealization,
) -> Result<ComplexSignal> {
    let m = pa_estimates.len();
    if precoder.len() != m || channel_estimates.len() != m {
        return Err(Error::Config(format!(
            "dimension mismatch: bank {m}, precoder {}, channel {}",
            precoder.len(),
            channel_estimates.len()
        )));
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); s_tilde.len()];
    for (model, h) in pa_estimates.models.iter().zip(&channel_estimates.gains) {
        let y = apply_pa(model, s_tilde);
        let w = h.norm();
        for (a, v) in acc.iter_mut().zip(&y.samples) {
            *a += w * v;
        }
    }
    Ok(ComplexSignal::new(acc, s_tilde.sample_rate_hz))
}

/// Reduced learning replica: the unprecoded stream through the single
/// equivalent array PA.
pub fn feedback_replica_reduced(s_tilde: &ComplexSignal, equiv: &PaModel) -> ComplexSignal {
    apply_pa(equiv, s_tilde)
}

/// Combined complex linear gain of the observation path:
/// G = <s_u, z> / <s_u, s_u>, the least-squares projection.
pub fn estimate_linear_gain(z: &ComplexSignal, s_u: &ComplexSignal) -> Result<Complex64> {
    if z.len() != s_u.len() {
        return Err(Error::Input(format!(
            "length mismatch: {} vs {}",
            z.len(),
            s_u.len()
        )));
    }
    let e = energy(&s_u.samples);
    if e == 0.0 {
        return Err(Error::Singular("zero-energy reference signal".into()));
    }
    Ok(inner(&s_u.samples, &z.samples) / e)
}

/// Which feedback replica drives the learning loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnMode {
    FullReplica,
    ReducedReplica,
}

/// Block-adaptive learning configuration.
#[derive(Debug, Clone)]
pub struct LearnConfig {
    pub iterations: usize,
    pub block_size: usize,
    pub step_size: f64,
    pub q: usize,
    pub mode: LearnMode,
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q % 2 == 0 || self.q < 3 {
            return Err(Error::Config(format!("DPD order Q must be odd >= 3, got {}", self.q)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iteration count K must be >= 1".into()));
        }
        if self.block_size < 100 * (self.q - 1) / 2 {
            return Err(Error::Config(format!(
                "block size N must be >= {}, got {}",
                100 * (self.q - 1) / 2,
                self.block_size
            )));
        }
        if self.step_size <= 0.0 {
            return Err(Error::Config("step size mu must be positive".into()));
        }
        Ok(())
    }
}

/// One learning iteration record.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual_corr_norm: f64,
    /// Injection weights (orthogonalized domain) after the update.
    pub weights: Vec<Complex64>,
}

/// Learning result: coefficients in the orthogonalized domain plus the
/// per-iteration residual-correlation trace.
#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub coefficients: DpdCoefficients,
    pub trace: Vec<IterationRecord>,
}

impl LearnOutcome {
    /// CSV `iteration, residual_corr_norm, beta_q_re, beta_q_im, ...`.
    pub fn trace_csv(&self) -> String {
        let k = self.trace.first().map_or(0, |r| r.weights.len());
        let mut out = String::from("iteration,residual_corr_norm");
        for i in 1..k {
            out.push_str(&format!(",beta_{}_re,beta_{}_im", 2 * i + 1, 2 * i + 1));
        }
        out.push('\n');
        for r in &self.trace {
            out.push_str(&format!("{},{:.9e}", r.iteration, r.residual_corr_norm));
            for w in &r.weights[1..] {
                // beta = conj(weight)
                out.push_str(&format!(",{:.9e},{:.9e}", w.re, -w.im));
            }
            out.push('\n');
        }
        out
    }
}

/// Block-adaptive decorrelation learning.
///
/// Each iteration predistorts the current block, runs the replica provider,
/// removes the combined linear gain, and steps the orthogonalized-domain
/// weights against the residual correlation with the basis columns of
/// order >= 3. The update is normalized by the estimated linear gain so a
/// single step size works across array sizes.
pub fn decorrelation_learn<F>(
    s_u: &ComplexSignal,
    mut replica: F,
    cfg: &LearnConfig,
) -> Result<LearnOutcome>
where
    F: FnMut(&ComplexSignal) -> Result<ComplexSignal>,
{
    cfg.validate()?;
    let n = cfg.block_size;
    if s_u.len() < n {
        return Err(Error::Input(format!(
            "learning signal has {} samples, need at least one block of {n}",
            s_u.len()
        )));
    }
    let n_blocks = s_u.len() / n;
    let k = (cfg.q + 1) / 2;

    // Orthogonalization transform from the first block, reused for all blocks.
    let first_block = ComplexSignal::new(s_u.samples[..n].to_vec(), s_u.sample_rate_hz);
    let basis0 = snl_basis(&first_block, cfg.q)?;
    let (_, transform) = orthogonalize(&basis0)?;

    // Per-block orthogonalized basis cache.
    let mut ortho_blocks: Vec<Option<Vec<Vec<Complex64>>>> = vec![None; n_blocks];

    let mut weights = vec![Complex64::new(0.0, 0.0); k];
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut prev_norm = f64::INFINITY;
    let mut grow_count = 0usize;

    for iter in 0..cfg.iterations {
        let b = iter % n_blocks;
        let start = b * n;
        let block = &s_u.samples[start..start + n];

        if ortho_blocks[b].is_none() {
            let sig = ComplexSignal::new(block.to_vec(), s_u.sample_rate_hz);
            let basis = snl_basis(&sig, cfg.q)?;
            let mut cols = vec![vec![Complex64::new(0.0, 0.0); n]; k];
            let mut u = vec![Complex64::new(0.0, 0.0); k];
            for idx in 0..n {
                for (i, col) in basis.columns.iter().enumerate() {
                    u[i] = col[idx];
                }
                let v = transform.to_ortho_sample(&u);
                for (i, val) in v.into_iter().enumerate() {
                    cols[i][idx] = val;
                }
            }
            ortho_blocks[b] = Some(cols);
        }
        let ortho = ortho_blocks[b].as_ref().unwrap();

        // Predistort the block with the current weights (order-1 slot is 0).
        let mut s_tilde = vec![Complex64::new(0.0, 0.0); n];
        for idx in 0..n {
            let mut inj = Complex64::new(0.0, 0.0);
            for j in 1..k {
                inj += weights[j] * ortho[j][idx];
            }
            s_tilde[idx] = block[idx] + inj;
        }
        let s_tilde = ComplexSignal::new(s_tilde, s_u.sample_rate_hz);

        let z = replica(&s_tilde)?;
        if z.len() != n {
            return Err(Error::Input("replica changed the block length".into()));
        }
        let block_sig = ComplexSignal::new(block.to_vec(), s_u.sample_rate_hz);
        let g = estimate_linear_gain(&z, &block_sig)?;

        // Residual correlation per orthonormal column of order >= 3.
        let mut corr = vec![Complex64::new(0.0, 0.0); k];
        for idx in 0..n {
            let e = z.samples[idx] - g * block[idx];
            for j in 1..k {
                corr[j] += ortho[j][idx].conj() * e;
            }
        }
        for c in corr.iter_mut() {
            *c /= n as f64;
        }
        let corr_norm = corr.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();

        if corr_norm > prev_norm {
            grow_count += 1;
            if grow_count >= 3 {
                return Err(Error::Divergence {
                    iteration: iter,
                    mu: cfg.step_size,
                });
            }
        } else {
            grow_count = 0;
        }
        prev_norm = corr_norm;

        for j in 1..k {
            weights[j] -= cfg.step_size * corr[j] / g;
        }

        trace.push(IterationRecord {
            iteration: iter,
            residual_corr_norm: corr_norm,
            weights: weights.clone(),
        });
    }

    Ok(LearnOutcome {
        coefficients: DpdCoefficients {
            weights,
            domain: BasisDomain::Orthogonalized(transform),
        },
        trace,
    })
}
