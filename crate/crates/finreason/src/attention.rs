//! Desk-scale attention math with verified gradients: standard scaled
//! dot-product attention, disentangled attention with relative-position
//! bias, absolute-position injection for the decoder, and SiFT
//! normalization/perturbation.
//!
//! Everything is 64-bit, single-head, and sized for numerical
//! verification rather than speed; analytic backward passes are checked
//! against central finite differences.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttnError {
    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: String },
    #[error("matrix data length {len} does not match {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, len: usize },
    #[error("matrix entry at ({row}, {col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("row {row} is constant within {epsilon:e}; cannot normalize")]
    DegenerateRow { row: usize, epsilon: f64 },
    #[error("perturbation radius must be finite and positive, got {eps}")]
    InvalidEpsilon { eps: f64 },
    #[error("gradient check produced a non-finite value")]
    NonFiniteGradient,
}

fn mismatch(what: impl Into<String>) -> AttnError {
    AttnError::DimensionMismatch { what: what.into() }
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// Dense row-major matrix of 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds from row-major data; length and finiteness are checked.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix, AttnError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(AttnError::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        for (i, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(AttnError::NonFiniteEntry {
                    row: i / cols,
                    col: i % cols,
                });
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix, AttnError> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(mismatch("ragged rows"));
        }
        Matrix::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Matrix product; panics if the inner dimensions disagree (public
    /// entry points validate shapes before reaching this).
    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul inner dimensions must agree"
        );
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shapes must agree");
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Largest absolute element-wise difference; infinity on shape
    /// mismatch so comparisons never silently pass.
    pub fn max_abs_diff(&self, rhs: &Matrix) -> f64 {
        if (self.rows, self.cols) != (rhs.rows, rhs.cols) {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Standard-normal entries from a seeded generator.
pub fn seeded_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    matrix_from_rng(rows, cols, &mut rng)
}

fn matrix_from_rng(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    Matrix { rows, cols, data }
}

// ---------------------------------------------------------------------------
// Configuration and parameter bundles
// ---------------------------------------------------------------------------

/// Shape of one attention problem: sequence length, hidden width, and the
/// maximum relative distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionConfig {
    pub n: usize,
    pub d: usize,
    pub k: usize,
}

impl AttentionConfig {
    pub fn new(n: usize, d: usize, k: usize) -> Result<AttentionConfig, AttnError> {
        if n == 0 || d == 0 || k == 0 {
            return Err(mismatch("n, d and k must all be at least 1"));
        }
        Ok(AttentionConfig { n, d, k })
    }
}

/// The five d-by-d projections of disentangled attention: content
/// query/key/value plus relative-position query/key.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    pub w_qc: Matrix,
    pub w_kc: Matrix,
    pub w_vc: Matrix,
    pub w_qr: Matrix,
    pub w_kr: Matrix,
}

impl ProjectionSet {
    pub fn new(
        w_qc: Matrix,
        w_kc: Matrix,
        w_vc: Matrix,
        w_qr: Matrix,
        w_kr: Matrix,
    ) -> Result<ProjectionSet, AttnError> {
        let d = w_qc.rows();
        for (name, m) in [
            ("w_qc", &w_qc),
            ("w_kc", &w_kc),
            ("w_vc", &w_vc),
            ("w_qr", &w_qr),
            ("w_kr", &w_kr),
        ] {
            if m.rows() != d || m.cols() != d {
                return Err(mismatch(format!(
                    "{name} must be {d}x{d}, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(ProjectionSet {
            w_qc,
            w_kc,
            w_vc,
            w_qr,
            w_kr,
        })
    }

    pub fn dim(&self) -> usize {
        self.w_qc.rows()
    }
}

/// Relative-position embedding table with rows for every bucket in
/// `[0, 2k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelPositionTable {
    pub k: usize,
    pub p: Matrix,
}

impl RelPositionTable {
    pub fn new(k: usize, p: Matrix) -> Result<RelPositionTable, AttnError> {
        if k == 0 {
            return Err(mismatch("max relative distance k must be at least 1"));
        }
        if p.rows() != 2 * k {
            return Err(mismatch(format!(
                "position table must have 2k = {} rows, got {}",
                2 * k,
                p.rows()
            )));
        }
        Ok(RelPositionTable { k, p })
    }

    pub fn zeros(k: usize, d: usize) -> RelPositionTable {
        RelPositionTable {
            k,
            p: Matrix::zeros(2 * k, d),
        }
    }
}

/// A reproducible random problem instance for checks and demos.
pub fn random_case(cfg: &AttentionConfig, seed: u64) -> (Matrix, RelPositionTable, ProjectionSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = matrix_from_rng(cfg.n, cfg.d, &mut rng);
    let p = matrix_from_rng(2 * cfg.k, cfg.d, &mut rng);
    let mut proj = || matrix_from_rng(cfg.d, cfg.d, &mut rng).scale(1.0 / (cfg.d as f64).sqrt());
    let w_qc = proj();
    let w_kc = proj();
    let w_vc = proj();
    let w_qr = proj();
    let w_kr = proj();
    (
        h,
        RelPositionTable { k: cfg.k, p },
        ProjectionSet {
            w_qc,
            w_kc,
            w_vc,
            w_qr,
            w_kr,
        },
    )
}

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

/// Numerically stable per-row softmax; every output row sums to one.
pub fn row_softmax(a: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), a.cols());
    for i in 0..a.rows() {
        let row = a.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (j, &v) in row.iter().enumerate() {
            let e = (v - max).exp();
            out.set(i, j, e);
            sum += e;
        }
        for j in 0..a.cols() {
            out.set(i, j, out.get(i, j) / sum);
        }
    }
    out
}

fn check_projection(h: &Matrix, name: &str, w: &Matrix) -> Result<(), AttnError> {
    if w.rows() != h.cols() || w.cols() != h.cols() {
        return Err(mismatch(format!(
            "{name} must be {d}x{d} to match the {d}-wide input, got {}x{}",
            w.rows(),
            w.cols(),
            d = h.cols()
        )));
    }
    Ok(())
}

/// Scaled dot-product attention `softmax(QK^T / scale) V` with an explicit
/// scale divisor.
pub fn standard_attention_scaled(
    h: &Matrix,
    w_q: &Matrix,
    w_k: &Matrix,
    w_v: &Matrix,
    scale: f64,
) -> Result<Matrix, AttnError> {
    check_projection(h, "w_q", w_q)?;
    check_projection(h, "w_k", w_k)?;
    check_projection(h, "w_v", w_v)?;
    let q = h.matmul(w_q);
    let k = h.matmul(w_k);
    let v = h.matmul(w_v);
    let a = q.matmul(&k.transpose()).scale(1.0 / scale);
    Ok(row_softmax(&a).matmul(&v))
}

/// Standard attention with the usual `sqrt(d)` scale.
pub fn standard_attention(
    h: &Matrix,
    w_q: &Matrix,
    w_k: &Matrix,
    w_v: &Matrix,
) -> Result<Matrix, AttnError> {
    standard_attention_scaled(h, w_q, w_k, w_v, (h.cols() as f64).sqrt())
}

/// Relative-distance bucket: `clamp(i - j, -k, k-1) + k`, always in
/// `[0, 2k)`.
pub fn rel_index(i: usize, j: usize, k: usize) -> usize {
    let delta = (i as i64 - j as i64).clamp(-(k as i64), k as i64 - 1);
    (delta + k as i64) as usize
}

fn check_disentangled_shapes(
    h: &Matrix,
    rel: &RelPositionTable,
    proj: &ProjectionSet,
) -> Result<(), AttnError> {
    let d = h.cols();
    check_projection(h, "w_qc", &proj.w_qc)?;
    check_projection(h, "w_kc", &proj.w_kc)?;
    check_projection(h, "w_vc", &proj.w_vc)?;
    check_projection(h, "w_qr", &proj.w_qr)?;
    check_projection(h, "w_kr", &proj.w_kr)?;
    if rel.k == 0 {
        return Err(mismatch("max relative distance k must be at least 1"));
    }
    if rel.p.rows() != 2 * rel.k || rel.p.cols() != d {
        return Err(mismatch(format!(
            "position table must be {}x{d}, got {}x{}",
            2 * rel.k,
            rel.p.rows(),
            rel.p.cols()
        )));
    }
    Ok(())
}

/// Disentangled attention. Returns the raw (unscaled) score matrix whose
/// entry (i, j) sums content-content, content-position and
/// position-content terms, and the output `softmax(scores / sqrt(3d)) Vc`.
/// The query side may differ from the key/value side (absolute-position
/// injection); `h_query` and `h` must share shape.
pub fn disentangled_attention_split(
    h_query: &Matrix,
    h: &Matrix,
    rel: &RelPositionTable,
    proj: &ProjectionSet,
) -> Result<(Matrix, Matrix), AttnError> {
    if (h_query.rows(), h_query.cols()) != (h.rows(), h.cols()) {
        return Err(mismatch("query-side input must match the key/value input shape"));
    }
    check_disentangled_shapes(h, rel, proj)?;
    let n = h.rows();
    let d = h.cols();
    let q_c = h_query.matmul(&proj.w_qc);
    let k_c = h.matmul(&proj.w_kc);
    let v_c = h.matmul(&proj.w_vc);
    let q_r = rel.p.matmul(&proj.w_qr);
    let k_r = rel.p.matmul(&proj.w_kr);

    let mut scores = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let content = dot(q_c.row(i), k_c.row(j));
            let c2p = dot(q_c.row(i), k_r.row(rel_index(i, j, rel.k)));
            let p2c = dot(k_c.row(j), q_r.row(rel_index(j, i, rel.k)));
            scores.set(i, j, content + c2p + p2c);
        }
    }
    let scaled = scores.scale(1.0 / (3.0 * d as f64).sqrt());
    let h_o = row_softmax(&scaled).matmul(&v_c);
    Ok((scores, h_o))
}

/// Disentangled attention with the same input on both sides.
pub fn disentangled_attention(
    h: &Matrix,
    rel: &RelPositionTable,
    proj: &ProjectionSet,
) -> Result<(Matrix, Matrix), AttnError> {
    disentangled_attention_split(h, h, rel, proj)
}

/// Element-wise sum of hidden states and absolute-position embeddings.
pub fn emd_inject(h: &Matrix, i_abs: &Matrix) -> Result<Matrix, AttnError> {
    if (h.rows(), h.cols()) != (i_abs.rows(), i_abs.cols()) {
        return Err(mismatch(format!(
            "position embeddings must be {}x{}, got {}x{}",
            h.rows(),
            h.cols(),
            i_abs.rows(),
            i_abs.cols()
        )));
    }
    Ok(h.add(i_abs))
}

/// Disentangled attention where absolute positions are injected into the
/// query side only, leaving keys and values untouched. This is the
/// decoder-style use of [`emd_inject`] at the final attention layer.
pub fn disentangled_attention_injected(
    h: &Matrix,
    i_abs: &Matrix,
    rel: &RelPositionTable,
    proj: &ProjectionSet,
) -> Result<(Matrix, Matrix), AttnError> {
    let injected = emd_inject(h, i_abs)?;
    disentangled_attention_split(&injected, h, rel, proj)
}

// ---------------------------------------------------------------------------
// SiFT normalize / perturb
// ---------------------------------------------------------------------------

const SIFT_EPSILON: f64 = 1e-12;

/// How [`sift_normalize_mode`] rescales each row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizeMode {
    /// Shift/scale each row to mean 0, population standard deviation 1.
    #[default]
    MeanVariance,
    /// Scale each row to unit Euclidean norm.
    UnitL2,
}

/// Row-wise normalization in the chosen mode. A row that is constant
/// (mean/variance mode) or all-zero (unit-norm mode) within 1e-12 cannot
/// be normalized and is an error.
pub fn sift_normalize_mode(e: &Matrix, mode: NormalizeMode) -> Result<Matrix, AttnError> {
    if e.cols() < 2 {
        return Err(mismatch("normalization needs at least 2 columns per row"));
    }
    let mut out = Matrix::zeros(e.rows(), e.cols());
    for i in 0..e.rows() {
        let row = e.row(i);
        match mode {
            NormalizeMode::MeanVariance => {
                let n = row.len() as f64;
                let mean = row.iter().sum::<f64>() / n;
                let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                let std = var.sqrt();
                if std <= SIFT_EPSILON {
                    return Err(AttnError::DegenerateRow {
                        row: i,
                        epsilon: SIFT_EPSILON,
                    });
                }
                for (j, &v) in row.iter().enumerate() {
                    out.set(i, j, (v - mean) / (std + SIFT_EPSILON));
                }
            }
            NormalizeMode::UnitL2 => {
                let norm = dot(row, row).sqrt();
                if norm <= SIFT_EPSILON {
                    return Err(AttnError::DegenerateRow {
                        row: i,
                        epsilon: SIFT_EPSILON,
                    });
                }
                for (j, &v) in row.iter().enumerate() {
                    out.set(i, j, v / norm);
                }
            }
        }
    }
    Ok(out)
}

/// Row-wise mean-0 / standard-deviation-1 normalization (the default
/// SiFT mode).
pub fn sift_normalize(e: &Matrix) -> Result<Matrix, AttnError> {
    sift_normalize_mode(e, NormalizeMode::MeanVariance)
}

/// Adds to each row a seeded uniformly random direction of exact
/// Euclidean length `eps`. Deterministic for a given seed.
pub fn sift_perturb(e: &Matrix, eps: f64, seed: u64) -> Result<Matrix, AttnError> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(AttnError::InvalidEpsilon { eps });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = e.clone();
    for i in 0..e.rows() {
        // A normalized standard-normal draw is uniform on the sphere;
        // redraw on the (measure-zero) chance of a near-zero vector.
        let direction = loop {
            let draw: Vec<f64> = (0..e.cols())
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = dot(&draw, &draw).sqrt();
            if norm > SIFT_EPSILON {
                break draw.iter().map(|v| v / norm).collect::<Vec<f64>>();
            }
        };
        for (j, &d) in direction.iter().enumerate() {
            out.set(i, j, e.get(i, j) + eps * d);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Backward passes
// ---------------------------------------------------------------------------

/// Gradients of `sum(standard_attention(...))` for every input.
#[derive(Debug, Clone)]
pub struct StandardGrads {
    pub d_h: Matrix,
    pub d_wq: Matrix,
    pub d_wk: Matrix,
    pub d_wv: Matrix,
}

/// Per-row softmax backward: `dA_i = S_i * (dS_i - <dS_i, S_i>)`.
fn softmax_rows_backward(s: &Matrix, ds: &Matrix) -> Matrix {
    let mut da = Matrix::zeros(s.rows(), s.cols());
    for i in 0..s.rows() {
        let inner = dot(ds.row(i), s.row(i));
        for j in 0..s.cols() {
            da.set(i, j, s.get(i, j) * (ds.get(i, j) - inner));
        }
    }
    da
}

fn ones(rows: usize, cols: usize) -> Matrix {
    Matrix {
        rows,
        cols,
        data: vec![1.0; rows * cols],
    }
}

/// Analytic gradients of the scalar loss `sum(h_o)` of standard attention
/// with respect to H and the three projections.
pub fn standard_attention_grads(
    h: &Matrix,
    w_q: &Matrix,
    w_k: &Matrix,
    w_v: &Matrix,
) -> Result<StandardGrads, AttnError> {
    check_projection(h, "w_q", w_q)?;
    check_projection(h, "w_k", w_k)?;
    check_projection(h, "w_v", w_v)?;
    let scale = (h.cols() as f64).sqrt();
    let q = h.matmul(w_q);
    let k = h.matmul(w_k);
    let v = h.matmul(w_v);
    let a = q.matmul(&k.transpose()).scale(1.0 / scale);
    let s = row_softmax(&a);

    let d_out = ones(h.rows(), h.cols());
    let d_v = s.transpose().matmul(&d_out);
    let d_s = d_out.matmul(&v.transpose());
    let d_a = softmax_rows_backward(&s, &d_s);
    let d_q = d_a.matmul(&k).scale(1.0 / scale);
    let d_k = d_a.transpose().matmul(&q).scale(1.0 / scale);

    let d_h = d_q
        .matmul(&w_q.transpose())
        .add(&d_k.matmul(&w_k.transpose()))
        .add(&d_v.matmul(&w_v.transpose()));
    Ok(StandardGrads {
        d_h,
        d_wq: h.transpose().matmul(&d_q),
        d_wk: h.transpose().matmul(&d_k),
        d_wv: h.transpose().matmul(&d_v),
    })
}

/// Gradients of `sum(disentangled_attention(...).h_o)` for H and all five
/// projections.
#[derive(Debug, Clone)]
pub struct DisentangledGrads {
    pub d_h: Matrix,
    pub d_w_qc: Matrix,
    pub d_w_kc: Matrix,
    pub d_w_vc: Matrix,
    pub d_w_qr: Matrix,
    pub d_w_kr: Matrix,
}

/// Analytic gradients of the scalar loss `sum(h_o)` of disentangled
/// attention with respect to H and the five projections.
pub fn disentangled_attention_grads(
    h: &Matrix,
    rel: &RelPositionTable,
    proj: &ProjectionSet,
) -> Result<DisentangledGrads, AttnError> {
    check_disentangled_shapes(h, rel, proj)?;
    let n = h.rows();
    let d = h.cols();
    let scale = (3.0 * d as f64).sqrt();

    let q_c = h.matmul(&proj.w_qc);
    let k_c = h.matmul(&proj.w_kc);
    let v_c = h.matmul(&proj.w_vc);
    let q_r = rel.p.matmul(&proj.w_qr);
    let k_r = rel.p.matmul(&proj.w_kr);

    let mut scores = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let content = dot(q_c.row(i), k_c.row(j));
            let c2p = dot(q_c.row(i), k_r.row(rel_index(i, j, rel.k)));
            let p2c = dot(k_c.row(j), q_r.row(rel_index(j, i, rel.k)));
            scores.set(i, j, (content + c2p + p2c) / scale);
        }
    }
    let s = row_softmax(&scores);

    let d_out = ones(n, d);
    let d_v_c = s.transpose().matmul(&d_out);
    let d_s = d_out.matmul(&v_c.transpose());
    let d_scores = softmax_rows_backward(&s, &d_s).scale(1.0 / scale);

    // Content-content term.
    let mut d_q_c = d_scores.matmul(&k_c);
    let mut d_k_c = d_scores.transpose().matmul(&q_c);
    // Content-position and position-content terms accumulate through the
    // shared bucket rows.
    let mut d_q_r = Matrix::zeros(2 * rel.k, d);
    let mut d_k_r = Matrix::zeros(2 * rel.k, d);
    for i in 0..n {
        for j in 0..n {
            let g = d_scores.get(i, j);
            if g == 0.0 {
                continue;
            }
            let b_ij = rel_index(i, j, rel.k);
            let b_ji = rel_index(j, i, rel.k);
            for c in 0..d {
                d_q_c.set(i, c, d_q_c.get(i, c) + g * k_r.get(b_ij, c));
                d_k_r.set(b_ij, c, d_k_r.get(b_ij, c) + g * q_c.get(i, c));
                d_k_c.set(j, c, d_k_c.get(j, c) + g * q_r.get(b_ji, c));
                d_q_r.set(b_ji, c, d_q_r.get(b_ji, c) + g * k_c.get(j, c));
            }
        }
    }

    let d_h = d_q_c
        .matmul(&proj.w_qc.transpose())
        .add(&d_k_c.matmul(&proj.w_kc.transpose()))
        .add(&d_v_c.matmul(&proj.w_vc.transpose()));
    let p_t = rel.p.transpose();
    let h_t = h.transpose();
    Ok(DisentangledGrads {
        d_h,
        d_w_qc: h_t.matmul(&d_q_c),
        d_w_kc: h_t.matmul(&d_k_c),
        d_w_vc: h_t.matmul(&d_v_c),
        d_w_qr: p_t.matmul(&d_q_r),
        d_w_kr: p_t.matmul(&d_k_r),
    })
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

/// Central-difference step and negative-control switch for gradient
/// checks.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    pub fd_step: f64,
    /// Flips the sign of one analytic gradient entry, so the check must
    /// fail; used as a self-test of the checker.
    pub corrupt_one_sign: bool,
}

impl Default for GradCheckOptions {
    fn default() -> GradCheckOptions {
        GradCheckOptions {
            fd_step: 1e-5,
            corrupt_one_sign: false,
        }
    }
}

/// Relative disagreement with a floor of 1, so near-zero gradients
/// compare absolutely.
fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

/// Flips the sign of the largest-magnitude entry across the gradient
/// matrices, guaranteeing a visible disagreement.
fn corrupt_largest_entry(grads: &mut [Matrix]) {
    let mut best = (0, 0, 0.0_f64);
    for (m, grad) in grads.iter().enumerate() {
        for (i, v) in grad.data.iter().enumerate() {
            if v.abs() > best.2 {
                best = (m, i, v.abs());
            }
        }
    }
    let (m, i, _) = best;
    grads[m].data[i] = -grads[m].data[i];
}

fn fd_max_rel_error(
    inputs: &[Matrix],
    analytic: &[Matrix],
    loss: impl Fn(&[Matrix]) -> Result<f64, AttnError>,
    step: f64,
) -> Result<f64, AttnError> {
    let mut max_rel: f64 = 0.0;
    let mut work: Vec<Matrix> = inputs.to_vec();
    for which in 0..inputs.len() {
        for idx in 0..inputs[which].data.len() {
            let base = inputs[which].data[idx];
            work[which].data[idx] = base + step;
            let plus = loss(&work)?;
            work[which].data[idx] = base - step;
            let minus = loss(&work)?;
            work[which].data[idx] = base;
            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic[which].data[idx];
            if !numeric.is_finite() || !a.is_finite() {
                return Err(AttnError::NonFiniteGradient);
            }
            max_rel = max_rel.max(rel_error(a, numeric));
        }
    }
    Ok(max_rel)
}

/// Compares the analytic standard-attention gradients against central
/// finite differences of the scalar loss `sum(h_o)`. Returns the largest
/// relative error over every entry of dH, dWq, dWk, dWv.
pub fn grad_check_standard(
    h: &Matrix,
    w_q: &Matrix,
    w_k: &Matrix,
    w_v: &Matrix,
    opts: &GradCheckOptions,
) -> Result<f64, AttnError> {
    let grads = standard_attention_grads(h, w_q, w_k, w_v)?;
    let mut analytic = vec![grads.d_h, grads.d_wq, grads.d_wk, grads.d_wv];
    if opts.corrupt_one_sign {
        corrupt_largest_entry(&mut analytic);
    }
    let inputs = vec![h.clone(), w_q.clone(), w_k.clone(), w_v.clone()];
    fd_max_rel_error(
        &inputs,
        &analytic,
        |m| Ok(standard_attention(&m[0], &m[1], &m[2], &m[3])?.sum()),
        opts.fd_step,
    )
}

/// Compares the analytic disentangled-attention gradients against central
/// finite differences. Returns the largest relative error over every
/// entry of dH and the five projection gradients.
pub fn grad_check_disentangled(
    h: &Matrix,
    rel: &RelPositionTable,
    proj: &ProjectionSet,
    opts: &GradCheckOptions,
) -> Result<f64, AttnError> {
    let grads = disentangled_attention_grads(h, rel, proj)?;
    let mut analytic = vec![
        grads.d_h,
        grads.d_w_qc,
        grads.d_w_kc,
        grads.d_w_vc,
        grads.d_w_qr,
        grads.d_w_kr,
    ];
    if opts.corrupt_one_sign {
        corrupt_largest_entry(&mut analytic);
    }
    let inputs = vec![
        h.clone(),
        proj.w_qc.clone(),
        proj.w_kc.clone(),
        proj.w_vc.clone(),
        proj.w_qr.clone(),
        proj.w_kr.clone(),
    ];
    let k = rel.k;
    let p = rel.p.clone();
    fd_max_rel_error(
        &inputs,
        &analytic,
        |m| {
            let proj = ProjectionSet {
                w_qc: m[1].clone(),
                w_kc: m[2].clone(),
                w_vc: m[3].clone(),
                w_qr: m[4].clone(),
                w_kr: m[5].clone(),
            };
            let rel = RelPositionTable { k, p: p.clone() };
            Ok(disentangled_attention(&m[0], &rel, &proj)?.1.sum())
        },
        opts.fd_step,
    )
}
