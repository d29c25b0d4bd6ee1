//! Selective-classification objectives with hand-derived gradients.
//!
//! Every loss is evaluated on one scene (`n` points) and returns the
//! per-scene mean together with gradients with respect to the inlier logits
//! `ŷ`, the outlier logit `ô` and, for the dynamic penalty, the margin
//! weights `β`. Batches average scene results with [`batch_mean`].

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{LabelKind, LabelSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutput {
    /// Inlier logits, `n × c`.
    pub inlier: Array2<f64>,
    /// Outlier logit, one per point.
    pub outlier: Array1<f64>,
}

impl HeadOutput {
    pub fn new(inlier: Array2<f64>, outlier: Array1<f64>) -> Result<Self> {
        let (n, c) = inlier.dim();
        if n == 0 || c == 0 {
            return Err(Error::Shape(format!("head output must be non-empty, got {n}x{c}")));
        }
        if outlier.len() != n {
            return Err(Error::Shape(format!("outlier logits have {} rows, expected {n}", outlier.len())));
        }
        if !inlier.iter().chain(outlier.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite logit".into()));
        }
        Ok(Self { inlier, outlier })
    }

    pub fn points(&self) -> usize {
        self.inlier.nrows()
    }

    pub fn classes(&self) -> usize {
        self.inlier.ncols()
    }
}

/// Softmax over the concatenated `[ŷ, ô]` row; column `c` is `p^o`.
#[derive(Debug, Clone, PartialEq)]
pub struct Probs {
    pub p: Array2<f64>,
}

impl Probs {
    pub fn classes(&self) -> usize {
        self.p.ncols() - 1
    }

    pub fn outlier(&self, i: usize) -> f64 {
        self.p[[i, self.classes()]]
    }

    pub fn inlier(&self) -> ndarray::ArrayView2<'_, f64> {
        self.p.slice(ndarray::s![.., ..self.classes()])
    }
}

/// Point-wise penalty `α_i = −logsumexp(ŷ_i)` plus the inlier-only softmax
/// `σ_i = ∂(−α_i)/∂ŷ_i`, which every α-dependent gradient needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Alpha {
    pub values: Array1<f64>,
    pub sigma: Array2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub m_in: f64,
    pub m_out: f64,
    pub m_rout: f64,
    pub m_sout: f64,
    pub lambda_abstain: f64,
    pub lambda_penalty: f64,
    pub lambda_dynamic_penalty: f64,
    pub lambda_cce: f64,
    pub beta_init: [f64; 3],
    /// Project β onto `β ≥ 0` after each update.
    pub clamp_beta: bool,
    pub eps_alpha: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            m_in: -12.0,
            m_out: -6.0,
            m_rout: -6.0,
            m_sout: -7.0,
            lambda_abstain: 1.0,
            lambda_penalty: 1.0,
            lambda_dynamic_penalty: 1.0,
            lambda_cce: 1.0,
            beta_init: [1.0; 3],
            clamp_beta: false,
            eps_alpha: 1e-8,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let finite =
            [self.m_in, self.m_out, self.m_rout, self.m_sout].iter().chain(&self.beta_init).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("loss margins and beta_init must be finite".into()));
        }
        for (name, v) in [
            ("lambda_abstain", self.lambda_abstain),
            ("lambda_penalty", self.lambda_penalty),
            ("lambda_dynamic_penalty", self.lambda_dynamic_penalty),
            ("lambda_cce", self.lambda_cce),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("loss.{name} must be a finite value >= 0, got {v}")));
            }
        }
        if !(self.eps_alpha.is_finite() && self.eps_alpha > 0.0) {
            return Err(Error::InvalidInput(format!("loss.eps_alpha must be > 0, got {}", self.eps_alpha)));
        }
        Ok(())
    }
}

/// Learnable margin weights of the dynamic penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beta {
    pub inlier: f64,
    pub resized: f64,
    pub synth: f64,
}

impl Default for Beta {
    fn default() -> Self {
        Self::from([1.0; 3])
    }
}

impl From<[f64; 3]> for Beta {
    fn from(b: [f64; 3]) -> Self {
        Self { inlier: b[0], resized: b[1], synth: b[2] }
    }
}

impl Beta {
    pub fn to_array(self) -> [f64; 3] {
        [self.inlier, self.resized, self.synth]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyMode {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub value: f64,
    pub grad_inlier: Array2<f64>,
    pub grad_outlier: Array1<f64>,
    pub grad_beta: Option<[f64; 3]>,
}

impl LossResult {
    fn zeros(n: usize, c: usize) -> Self {
        Self { value: 0.0, grad_inlier: Array2::zeros((n, c)), grad_outlier: Array1::zeros(n), grad_beta: None }
    }

    pub fn scaled(mut self, w: f64) -> Self {
        self.value *= w;
        self.grad_inlier *= w;
        self.grad_outlier *= w;
        self.grad_beta = self.grad_beta.map(|g| g.map(|v| v * w));
        self
    }

    fn add_scaled(&mut self, other: &LossResult, w: f64) {
        self.value += w * other.value;
        self.grad_inlier.scaled_add(w, &other.grad_inlier);
        self.grad_outlier.scaled_add(w, &other.grad_outlier);
        if let Some(gb) = other.grad_beta {
            let mine = self.grad_beta.get_or_insert([0.0; 3]);
            for k in 0..3 {
                mine[k] += w * gb[k];
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad_inlier.iter().all(|v| v.is_finite())
            && self.grad_outlier.iter().all(|v| v.is_finite())
            && self.grad_beta.is_none_or(|g| g.iter().all(|v| v.is_finite()))
    }
}

/// Sum with a balanced reduction tree, so the result does not depend on how
/// the work was split across threads.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Averages per-scene results. Logit gradients stay attached to their own
/// scene (scaled by `1/m`); the value and β gradient are batch means.
pub fn batch_mean(results: Vec<LossResult>) -> Result<(f64, Option<[f64; 3]>, Vec<LossResult>)> {
    if results.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let w = 1.0 / results.len() as f64;
    let values: Vec<f64> = results.iter().map(|r| r.value).collect();
    let value = pairwise_sum(&values) * w;
    let grad_beta = if results.iter().any(|r| r.grad_beta.is_some()) {
        let mut g = [0.0; 3];
        for (k, slot) in g.iter_mut().enumerate() {
            let parts: Vec<f64> = results.iter().map(|r| r.grad_beta.map_or(0.0, |b| b[k])).collect();
            *slot = pairwise_sum(&parts) * w;
        }
        Some(g)
    } else {
        None
    };
    Ok((value, grad_beta, results.into_iter().map(|r| r.scaled(w)).collect()))
}

fn log_sum_exp(row: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = row.clone().fold(f64::NEG_INFINITY, f64::max);
    m + row.map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn softmax_head(h: &HeadOutput) -> Probs {
    let (n, c) = h.inlier.dim();
    let mut p = Array2::zeros((n, c + 1));
    for i in 0..n {
        let row = h.inlier.row(i);
        let o = h.outlier[i];
        let m = row.iter().copied().fold(o, f64::max);
        let mut z = 0.0;
        for j in 0..c {
            let e = (row[j] - m).exp();
            p[[i, j]] = e;
            z += e;
        }
        let e = (o - m).exp();
        p[[i, c]] = e;
        z += e;
        p.row_mut(i).mapv_inplace(|v| v / z);
    }
    Probs { p }
}

pub fn compute_alpha(inlier: &Array2<f64>) -> Alpha {
    let (n, c) = inlier.dim();
    let mut values = Array1::zeros(n);
    let mut sigma = Array2::zeros((n, c));
    for i in 0..n {
        let row = inlier.row(i);
        let lse = log_sum_exp(row.iter().copied());
        values[i] = -lse;
        for j in 0..c {
            sigma[[i, j]] = (row[j] - lse).exp();
        }
    }
    Alpha { values, sigma }
}

fn check_shapes(p: &Probs, alpha: &Alpha, labels: &[u32]) -> Result<(usize, usize)> {
    let n = p.p.nrows();
    let c = p.classes();
    if alpha.values.len() != n || alpha.sigma.dim() != (n, c) || labels.len() != n {
        return Err(Error::Shape(format!(
            "probs {}x{}, alpha {}, labels {} disagree",
            n,
            c + 1,
            alpha.values.len(),
            labels.len()
        )));
    }
    Ok((n, c))
}

fn label_kinds(labels: &[u32], c: usize) -> Result<Vec<LabelKind>> {
    let space = LabelSpace::new(c as u32)?;
    labels.iter().map(|&l| space.kind(l)).collect()
}

fn mean_of(contrib: &[f64]) -> f64 {
    pairwise_sum(contrib) / contrib.len() as f64
}

/// Clamped `α²` and the derivative of `1/α²` with respect to `α`
/// (zero where the clamp is active).
#[inline]
fn inv_square(alpha: f64, eps: f64) -> (f64, f64) {
    let a2 = alpha * alpha;
    if a2 >= eps {
        (1.0 / a2, -2.0 / (a2 * alpha))
    } else {
        (1.0 / eps, 0.0)
    }
}

pub fn abstain_loss(p: &Probs, alpha: &Alpha, labels: &[u32], cfg: &LossConfig) -> Result<LossResult> {
    let (n, c) = check_shapes(p, alpha, labels)?;
    let kinds = label_kinds(labels, c)?;
    let mut out = LossResult::zeros(n, c);
    let mut contrib = vec![0.0; n];
    let inv_n = 1.0 / n as f64;
    let mut w = vec![0.0; c];

    for i in 0..n {
        let row: ArrayView1<f64> = p.p.row(i);
        let po = row[c];
        let (inv_s, dinv_dalpha) = inv_square(alpha.values[i], cfg.eps_alpha);
        let t = po * inv_s;

        // w_j = ∂ℓ_i/∂u_j · (−1) with u_j = p^y_j + t
        w.iter_mut().for_each(|v| *v = 0.0);
        match kinds[i] {
            LabelKind::Inlier(y) => {
                let u = row[y] + t;
                contrib[i] = -u.ln();
                w[y] = 1.0 / u;
            }
            LabelKind::ResizedOutlier | LabelKind::SynthOutlier => {
                let mut s = 0.0;
                for j in 0..c {
                    let u = row[j] + t;
                    s -= u.ln();
                    w[j] = 1.0 / u;
                }
                contrib[i] = s;
            }
        }
        let w_sum: f64 = w.iter().sum();
        let wp: f64 = (0..c).map(|j| w[j] * row[j]).sum();

        // ∂u_j/∂z_k = p_j(δ_jk − p_k) + t(δ_ok − p_k) + p^o ∂(1/α²)/∂z_k
        for k in 0..c {
            let pk = row[k];
            let d_inv = dinv_dalpha * -alpha.sigma[[i, k]];
            let g = w[k] * pk - pk * wp - w_sum * t * pk + w_sum * po * d_inv;
            out.grad_inlier[[i, k]] = -g * inv_n;
        }
        let g_o = -po * wp + w_sum * t * (1.0 - po);
        out.grad_outlier[i] = -g_o * inv_n;
    }
    out.value = mean_of(&contrib);
    Ok(out)
}

fn hinge(x: f64) -> (f64, f64) {
    if x > 0.0 {
        (x, 1.0)
    } else {
        (0.0, 0.0)
    }
}

fn penalty_from_alpha_grad(alpha: &Alpha, dalpha: &[f64], out: &mut LossResult) {
    let inv_n = 1.0 / dalpha.len() as f64;
    for (i, &d) in dalpha.iter().enumerate() {
        if d != 0.0 {
            for k in 0..alpha.sigma.ncols() {
                out.grad_inlier[[i, k]] = -d * alpha.sigma[[i, k]] * inv_n;
            }
        }
    }
}

/// Static penalty: inliers are pushed below `m_in`, all outliers above `m_out`.
pub fn penalty_loss(alpha: &Alpha, labels: &[u32], cfg: &LossConfig) -> Result<LossResult> {
    let (n, c) = alpha.sigma.dim();
    if labels.len() != n {
        return Err(Error::Shape(format!("alpha has {n} rows, labels {}", labels.len())));
    }
    let kinds = label_kinds(labels, c)?;
    let mut contrib = vec![0.0; n];
    let mut dalpha = vec![0.0; n];
    for i in 0..n {
        let a = alpha.values[i];
        let (v, d) = match kinds[i] {
            LabelKind::Inlier(_) => hinge(a - cfg.m_in),
            _ => {
                let (v, d) = hinge(cfg.m_out - a);
                (v, -d)
            }
        };
        contrib[i] = v;
        dalpha[i] = d;
    }
    let mut out = LossResult::zeros(n, c);
    out.value = mean_of(&contrib);
    penalty_from_alpha_grad(alpha, &dalpha, &mut out);
    Ok(out)
}

/// Dynamic penalty with separate learnable margin weights for inliers,
/// resized outliers and asset-synthesized outliers.
pub fn dynamic_penalty_loss(alpha: &Alpha, labels: &[u32], cfg: &LossConfig, beta: Beta) -> Result<LossResult> {
    let (n, c) = alpha.sigma.dim();
    if labels.len() != n {
        return Err(Error::Shape(format!("alpha has {n} rows, labels {}", labels.len())));
    }
    let kinds = label_kinds(labels, c)?;
    let mut contrib = vec![0.0; n];
    let mut dalpha = vec![0.0; n];
    let mut dbeta = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let a = alpha.values[i];
        match kinds[i] {
            LabelKind::Inlier(_) => {
                let (v, d) = hinge(a - beta.inlier * cfg.m_in);
                contrib[i] = v;
                dalpha[i] = d;
                dbeta[0][i] = -d * cfg.m_in;
            }
            LabelKind::ResizedOutlier => {
                let (v, d) = hinge(beta.resized * cfg.m_rout - a);
                contrib[i] = v;
                dalpha[i] = -d;
                dbeta[1][i] = d * cfg.m_rout;
            }
            LabelKind::SynthOutlier => {
                let (v, d) = hinge(beta.synth * cfg.m_sout - a);
                contrib[i] = v;
                dalpha[i] = -d;
                dbeta[2][i] = d * cfg.m_sout;
            }
        }
    }
    let mut out = LossResult::zeros(n, c);
    out.value = mean_of(&contrib);
    out.grad_beta = Some([mean_of(&dbeta[0]), mean_of(&dbeta[1]), mean_of(&dbeta[2])]);
    penalty_from_alpha_grad(alpha, &dalpha, &mut out);
    Ok(out)
}

pub fn total_loss(
    p: &Probs,
    alpha: &Alpha,
    labels: &[u32],
    cfg: &LossConfig,
    mode: PenaltyMode,
    beta: Beta,
) -> Result<LossResult> {
    let abstain = abstain_loss(p, alpha, labels, cfg)?;
    let (penalty, weight) = match mode {
        PenaltyMode::Static => (penalty_loss(alpha, labels, cfg)?, cfg.lambda_penalty),
        PenaltyMode::Dynamic => (dynamic_penalty_loss(alpha, labels, cfg, beta)?, cfg.lambda_dynamic_penalty),
    };
    let (n, c) = alpha.sigma.dim();
    let mut out = LossResult::zeros(n, c);
    out.add_scaled(&abstain, cfg.lambda_abstain);
    out.add_scaled(&penalty, weight);
    Ok(out)
}

/// Cross-entropy over the `c + 1` classes plus the calibration term that
/// pulls the outlier logit of inlier points up to the second-largest logit.
/// Labels `c + 1` and `c + 2` are both the outlier class here.
pub fn cce_loss(h: &HeadOutput, labels: &[u32], lambda_cce: f64) -> Result<LossResult> {
    let n = h.points();
    let c = h.classes();
    if labels.len() != n {
        return Err(Error::Shape(format!("head has {n} rows, labels {}", labels.len())));
    }
    let kinds = label_kinds(labels, c)?;
    let probs = softmax_head(h);
    let mut out = LossResult::zeros(n, c);
    let mut contrib = vec![0.0; n];
    let inv_n = 1.0 / n as f64;
    let mut z = vec![0.0; c + 1];

    for i in 0..n {
        for j in 0..c {
            z[j] = h.inlier[[i, j]];
        }
        z[c] = h.outlier[i];
        let q = probs.p.row(i);
        let y = match kinds[i] {
            LabelKind::Inlier(y) => y,
            _ => c,
        };
        let mut g: Vec<f64> = (0..=c).map(|k| q[k] - if k == y { 1.0 } else { 0.0 }).collect();
        let lse = log_sum_exp(z.iter().copied());
        contrib[i] = lse - z[y];

        if y < c && lambda_cce != 0.0 {
            let others = (0..=c).filter(|&k| k != y).map(|k| z[k]);
            let lse_rest = log_sum_exp(others);
            contrib[i] += -lambda_cce * (z[c] - lse_rest);
            for k in (0..=c).filter(|&k| k != y) {
                let r = (z[k] - lse_rest).exp();
                g[k] += lambda_cce * (r - if k == c { 1.0 } else { 0.0 });
            }
        }
        for j in 0..c {
            out.grad_inlier[[i, j]] = g[j] * inv_n;
        }
        out.grad_outlier[i] = g[c] * inv_n;
    }
    out.value = mean_of(&contrib);
    Ok(out)
}
