//! Quantum channels and general superoperators: Kraus and Choi
//! representations, complete-positivity and trace-preservation tests,
//! application to the accessible subsystem, named channels, and the solver
//! for the unique local map between two structures.
//!
//! Choi convention throughout: unnormalized, input factor first,
//! J = sum_ij |i><j| (x) E(|i><j|), so trace preservation reads
//! tr_out J = I with no scale factors.

use crate::matops::{
    self, eigh, eigh_real_symmetric, tensor, ComplexMatrix, HermitianOperator, MatError,
    SystemLayout,
};
use crate::states::{DensityOperator, InformationStructure, PauliSet, StateError};
use num_complex::Complex64;
use thiserror::Error;

/// Trace-preservation validation for Kraus channels.
pub const KRAUS_TP_TOL: f64 = 1e-8;
/// Choi eigenvalues below this are a genuine CP violation, not noise.
pub const CHOI_CLIP_TOL: f64 = 1e-8;
/// Choi eigenvalues above this contribute a Kraus operator.
pub const KRAUS_RANK_TOL: f64 = 1e-10;
/// CP / TP decision thresholds for superoperators.
pub const CPTP_TEST_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("kraus operators are not trace preserving: defect {0:.3e}")]
    NotTracePreserving(f64),
    #[error("choi matrix has eigenvalue {0:.3e}: map is not completely positive")]
    NonCpChoi(f64),
    #[error("superoperator is not hermiticity preserving: defect {0:.3e}")]
    NotHermiticityPreserving(f64),
    #[error("local-map system is underdetermined: smallest singular value {0:.3e}")]
    UnderdeterminedSystem(f64),
    #[error("local-map system is inconsistent: residual {0:.3e}")]
    Inconsistent(f64),
}

/// Completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        kraus: Vec<ComplexMatrix>,
    ) -> Result<Self, ChannelError> {
        if kraus.is_empty() {
            return Err(ChannelError::DimMismatch("no kraus operators".into()));
        }
        for k in &kraus {
            if k.rows() != out_dim || k.cols() != in_dim {
                return Err(ChannelError::DimMismatch(format!(
                    "kraus operator is {}x{}, expected {}x{}",
                    k.rows(),
                    k.cols(),
                    out_dim,
                    in_dim
                )));
            }
        }
        let mut acc = ComplexMatrix::zeros(in_dim, in_dim);
        for k in &kraus {
            acc = &acc + &k.adjoint().matmul(k);
        }
        let defect = acc.max_abs_diff(&ComplexMatrix::identity(in_dim));
        if defect > KRAUS_TP_TOL {
            return Err(ChannelError::NotTracePreserving(defect));
        }
        Ok(Self {
            in_dim,
            out_dim,
            kraus,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            in_dim: dim,
            out_dim: dim,
            kraus: vec![ComplexMatrix::identity(dim)],
        }
    }

    /// The completely depolarizing channel rho -> I/d. In dimension 2 this is
    /// the Pauli form (1/4) sum_mu sigma_mu rho sigma_mu.
    pub fn depolarizing(dim: usize) -> Self {
        if dim == 2 {
            let p = PauliSet::standard();
            let kraus = [&p.sigma0, &p.sigma1, &p.sigma2, &p.sigma3]
                .iter()
                .map(|s| s.matrix().scale_re(0.5))
                .collect();
            Self {
                in_dim: 2,
                out_dim: 2,
                kraus,
            }
        } else {
            let amp = 1.0 / (dim as f64).sqrt();
            let mut kraus = Vec::with_capacity(dim * dim);
            for i in 0..dim {
                for j in 0..dim {
                    kraus.push(ComplexMatrix::unit_matrix(dim, i, j).scale_re(amp));
                }
            }
            Self {
                in_dim: dim,
                out_dim: dim,
                kraus,
            }
        }
    }

    /// Qubit phase damping in the computational basis:
    /// rho -> (sigma0 rho sigma0 + sigma3 rho sigma3) / 2.
    pub fn dephasing() -> Self {
        let p = PauliSet::standard();
        let amp = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            in_dim: 2,
            out_dim: 2,
            kraus: vec![
                p.sigma0.matrix().scale_re(amp),
                p.sigma3.matrix().scale_re(amp),
            ],
        }
    }

    /// Conjugates the Kraus set by (sum K†K)^{-1/2}, turning a nearly
    /// trace-preserving set into an exactly trace-preserving one.
    pub fn renormalized(&self) -> Result<KrausChannel, ChannelError> {
        let mut acc = ComplexMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            acc = &acc + &k.adjoint().matmul(k);
        }
        let inv_sqrt = matops::hermitian_function(&HermitianOperator::hermitian_part(&acc), |l| {
            if l > 1e-12 {
                1.0 / l.sqrt()
            } else {
                0.0
            }
        })?;
        let kraus = self
            .kraus
            .iter()
            .map(|k| k.matmul(inv_sqrt.matrix()))
            .collect();
        KrausChannel::new(self.in_dim, self.out_dim, kraus)
    }

    /// Composition: apply `self`, then `next`.
    pub fn then(&self, next: &KrausChannel) -> Result<KrausChannel, ChannelError> {
        if next.in_dim != self.out_dim {
            return Err(ChannelError::DimMismatch(format!(
                "cannot compose: output dim {} feeds input dim {}",
                self.out_dim, next.in_dim
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for k2 in &next.kraus {
            for k1 in &self.kraus {
                kraus.push(k2.matmul(k1));
            }
        }
        KrausChannel::new(self.in_dim, next.out_dim, kraus)
    }

    /// Raw action sum_k K rho K† on a bare matrix.
    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            acc = &acc + &k.matmul(rho).matmul(&k.adjoint());
        }
        acc
    }

    /// Channel action on a density operator.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator, ChannelError> {
        if rho.dim() != self.in_dim {
            return Err(ChannelError::DimMismatch(format!(
                "state dimension {} does not match channel input {}",
                rho.dim(),
                self.in_dim
            )));
        }
        let out = self.apply_matrix(rho.matrix());
        let layout = if self.out_dim == self.in_dim {
            rho.layout().clone()
        } else {
            SystemLayout::new(&[("out", self.out_dim)])?
        };
        Ok(DensityOperator::new(
            HermitianOperator::hermitian_part(&out),
            layout,
        )?)
    }

    pub fn to_superoperator(&self) -> Superoperator {
        let d_in2 = self.in_dim * self.in_dim;
        let d_out2 = self.out_dim * self.out_dim;
        let mut acc = ComplexMatrix::zeros(d_out2, d_in2);
        for k in &self.kraus {
            acc = &acc + &tensor(&k.conjugate(), k);
        }
        Superoperator {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            matrix: acc,
        }
    }
}

/// Applies (I (x) E) to the accessible factor of an information structure.
pub fn apply_to_accessible(
    s: &InformationStructure,
    ch: &KrausChannel,
) -> Result<InformationStructure, ChannelError> {
    if ch.in_dim() != s.accessible_dim() {
        return Err(ChannelError::DimMismatch(format!(
            "channel input {} does not match accessible dimension {}",
            ch.in_dim(),
            s.accessible_dim()
        )));
    }
    let (m, _) = s.matrix_hidden_first()?;
    let dn = s.hidden_dim();
    let id_n = ComplexMatrix::identity(dn);
    let mut acc = ComplexMatrix::zeros(dn * ch.out_dim(), dn * ch.out_dim());
    for k in ch.kraus_ops() {
        let lifted = tensor(&id_n, k);
        acc = &acc + &lifted.matmul(&m).matmul(&lifted.adjoint());
    }
    let layout =
        SystemLayout::new(&[(s.hidden_label(), dn), (s.accessible_label(), ch.out_dim())])?;
    let joint = DensityOperator::new(HermitianOperator::hermitian_part(&acc), layout)?;
    Ok(InformationStructure::new(
        joint,
        s.hidden_label(),
        s.accessible_label(),
    )?)
}

/// Unnormalized Choi matrix of a map, input factor first.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    in_dim: usize,
    out_dim: usize,
    matrix: HermitianOperator,
}

impl ChoiMatrix {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        matrix: HermitianOperator,
    ) -> Result<Self, ChannelError> {
        if matrix.dim() != in_dim * out_dim {
            return Err(ChannelError::DimMismatch(format!(
                "choi dimension {} != {} * {}",
                matrix.dim(),
                in_dim,
                out_dim
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            matrix,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn matrix(&self) -> &HermitianOperator {
        &self.matrix
    }

    /// Map action recovered from the Choi matrix: E(rho) = tr_in[(rho^t (x) I) J].
    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(rho.rows(), self.in_dim);
        assert_eq!(rho.cols(), self.in_dim);
        let j = self.matrix.matrix();
        let dout = self.out_dim;
        ComplexMatrix::from_fn(dout, dout, |o, op| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..self.in_dim {
                for jj in 0..self.in_dim {
                    acc += rho[(i, jj)] * j[(i * dout + o, jj * dout + op)];
                }
            }
            acc
        })
    }

    /// Trace-norm defect of the trace-preservation condition tr_out J = I.
    pub fn tp_defect(&self) -> Result<f64, ChannelError> {
        let layout = SystemLayout::new(&[("in", self.in_dim), ("out", self.out_dim)])?;
        let (reduced, _) = matops::partial_trace(self.matrix.matrix(), &layout, &["in"])?;
        Ok(matops::trace_distance(
            &reduced,
            &ComplexMatrix::identity(self.in_dim),
        )?)
    }
}

/// Choi matrix of a Kraus channel.
pub fn kraus_to_choi(ch: &KrausChannel) -> ChoiMatrix {
    let d = ch.in_dim() * ch.out_dim();
    let dout = ch.out_dim();
    let mut acc = ComplexMatrix::zeros(d, d);
    for k in ch.kraus_ops() {
        // vectorize K into |w> with w[i * dout + o] = K[o, i]; J accumulates |w><w|
        let mut w = ComplexMatrix::zeros(d, 1);
        for i in 0..ch.in_dim() {
            for o in 0..dout {
                w[(i * dout + o, 0)] = k[(o, i)];
            }
        }
        acc = &acc + &w.matmul(&w.adjoint());
    }
    ChoiMatrix {
        in_dim: ch.in_dim(),
        out_dim: ch.out_dim(),
        matrix: HermitianOperator::hermitian_part(&acc),
    }
}

/// Kraus decomposition of a PSD Choi matrix. Eigenvalues in [-1e-8, 0] are
/// treated as numerical noise; anything lower is a genuine CP violation.
pub fn choi_to_kraus(j: &ChoiMatrix) -> Result<KrausChannel, ChannelError> {
    let dec = eigh(j.matrix())?;
    let min = *dec.values.last().expect("nonempty spectrum");
    if min < -CHOI_CLIP_TOL {
        return Err(ChannelError::NonCpChoi(min));
    }
    let dout = j.out_dim;
    let mut kraus = Vec::new();
    for (idx, &lam) in dec.values.iter().enumerate() {
        if lam <= KRAUS_RANK_TOL {
            continue;
        }
        let scale = lam.sqrt();
        let k = ComplexMatrix::from_fn(dout, j.in_dim, |o, i| {
            dec.vectors[(i * dout + o, idx)] * Complex64::new(scale, 0.0)
        });
        kraus.push(k);
    }
    if kraus.is_empty() {
        return Err(ChannelError::NonCpChoi(min));
    }
    KrausChannel::new(j.in_dim, j.out_dim, kraus)
}

/// General linear map on operators, stored as an out_dim^2 x in_dim^2 matrix
/// acting on column-vectorized operators. Must be Hermiticity preserving.
#[derive(Clone, Debug)]
pub struct Superoperator {
    in_dim: usize,
    out_dim: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn new(in_dim: usize, out_dim: usize, matrix: ComplexMatrix) -> Result<Self, ChannelError> {
        if matrix.rows() != out_dim * out_dim || matrix.cols() != in_dim * in_dim {
            return Err(ChannelError::DimMismatch(format!(
                "superoperator is {}x{}, expected {}x{}",
                matrix.rows(),
                matrix.cols(),
                out_dim * out_dim,
                in_dim * in_dim
            )));
        }
        let sop = Self {
            in_dim,
            out_dim,
            matrix,
        };
        // hermiticity preservation is equivalent to a Hermitian Choi matrix
        let choi = sop.choi_candidate();
        let defect = choi.hermiticity_defect();
        if defect > 1e-10 * (1.0 + choi.max_abs()) {
            return Err(ChannelError::NotHermiticityPreserving(defect));
        }
        Ok(sop)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn identity_map(dim: usize) -> Self {
        Self {
            in_dim: dim,
            out_dim: dim,
            matrix: ComplexMatrix::identity(dim * dim),
        }
    }

    /// The transpose map X -> X^t.
    pub fn transpose_map(dim: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim * dim, dim * dim);
        for s in 0..dim {
            for sp in 0..dim {
                m[(sp + s * dim, s + sp * dim)] = Complex64::new(1.0, 0.0);
            }
        }
        Self {
            in_dim: dim,
            out_dim: dim,
            matrix: m,
        }
    }

    pub fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.rows(), self.in_dim);
        assert_eq!(x.cols(), self.in_dim);
        let v = vec_col(x);
        let w = self.matrix.matmul(&v);
        unvec_col(&w, self.out_dim)
    }

    fn choi_candidate(&self) -> ComplexMatrix {
        let din = self.in_dim;
        let dout = self.out_dim;
        ComplexMatrix::from_fn(din * dout, din * dout, |r, c| {
            let (s, t) = (r / dout, r % dout);
            let (sp, tp) = (c / dout, c % dout);
            // E(|s><s'|)[t, t'] = S[(t + t' dout), (s + s' din)]
            self.matrix[(t + tp * dout, s + sp * din)]
        })
    }

    pub fn to_choi(&self) -> Result<ChoiMatrix, ChannelError> {
        let candidate = self.choi_candidate();
        Ok(ChoiMatrix {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            matrix: HermitianOperator::hermitian_part(&candidate),
        })
    }

    pub fn from_choi(j: &ChoiMatrix) -> Self {
        let din = j.in_dim;
        let dout = j.out_dim;
        let jm = j.matrix.matrix();
        let matrix = ComplexMatrix::from_fn(dout * dout, din * din, |r, c| {
            let (t, tp) = (r % dout, r / dout);
            let (s, sp) = (c % din, c / din);
            jm[(s * dout + t, sp * dout + tp)]
        });
        Self {
            in_dim: din,
            out_dim: dout,
            matrix,
        }
    }

    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }
}

fn vec_col(x: &ComplexMatrix) -> ComplexMatrix {
    let (r, c) = (x.rows(), x.cols());
    let mut v = ComplexMatrix::zeros(r * c, 1);
    for j in 0..c {
        for i in 0..r {
            v[(i + j * r, 0)] = x[(i, j)];
        }
    }
    v
}

fn unvec_col(v: &ComplexMatrix, rows: usize) -> ComplexMatrix {
    let cols = v.rows() / rows;
    ComplexMatrix::from_fn(rows, cols, |i, j| v[(i + j * rows, 0)])
}

/// Complete-positivity test: (flag, minimum Choi eigenvalue).
pub fn is_completely_positive(sop: &Superoperator) -> Result<(bool, f64), ChannelError> {
    let choi = sop.to_choi()?;
    let min = matops::min_eigenvalue(choi.matrix())?;
    Ok((min >= -CPTP_TEST_TOL, min))
}

/// Trace-preservation test: (flag, trace-norm defect of tr_out J = I).
pub fn is_trace_preserving(sop: &Superoperator) -> Result<(bool, f64), ChannelError> {
    let choi = sop.to_choi()?;
    let defect = choi.tp_defect()?;
    Ok((defect <= CPTP_TEST_TOL, defect))
}

/// Threshold below which the local-map least-squares system counts as rank
/// deficient, relative to the largest singular value.
const LOCAL_MAP_RANK_TOL: f64 = 1e-10;
/// Residual above which the local-map system has no exact solution.
const LOCAL_MAP_RESIDUAL_TOL: f64 = 1e-6;

/// Solves for the unique Hermiticity-preserving map E with
/// (I (x) E) phi = psi, by least squares over the real vector space of
/// Hermitian Choi matrices.
pub fn solve_local_map(
    phi: &InformationStructure,
    psi: &InformationStructure,
) -> Result<Superoperator, ChannelError> {
    if phi.hidden_dim() != psi.hidden_dim() {
        return Err(ChannelError::DimMismatch(format!(
            "hidden dimensions differ: {} vs {}",
            phi.hidden_dim(),
            psi.hidden_dim()
        )));
    }
    if phi.accessible_dim() != psi.accessible_dim() {
        return Err(ChannelError::DimMismatch(format!(
            "accessible dimensions differ: {} vs {}",
            phi.accessible_dim(),
            psi.accessible_dim()
        )));
    }
    let din = phi.accessible_dim();
    let dout = din;
    let dn = phi.hidden_dim();
    let (phi_m, _) = phi.matrix_hidden_first()?;
    let (psi_m, _) = psi.matrix_hidden_first()?;

    let n_unknowns = (din * dout) * (din * dout);
    let m_rows = (dn * dout) * (dn * dout);
    let basis = matops::hermitian_basis(din * dout);
    let mut a = vec![0.0f64; m_rows * n_unknowns];
    for (alpha, b_el) in basis.iter().enumerate() {
        let image = apply_conditional(&phi_m, b_el, dn, din, dout);
        let coords = matops::matrix_to_coords(&image);
        for (row, &v) in coords.iter().enumerate() {
            a[row * n_unknowns + alpha] = v;
        }
    }
    let b = matops::matrix_to_coords(&psi_m);

    // normal equations with a spectral pseudoinverse
    let mut ata = vec![0.0f64; n_unknowns * n_unknowns];
    let mut atb = vec![0.0f64; n_unknowns];
    for r in 0..m_rows {
        let row = &a[r * n_unknowns..(r + 1) * n_unknowns];
        for i in 0..n_unknowns {
            if row[i] == 0.0 {
                continue;
            }
            atb[i] += row[i] * b[r];
            for j in 0..n_unknowns {
                ata[i * n_unknowns + j] += row[i] * row[j];
            }
        }
    }
    let (vals, vecs) = eigh_real_symmetric(&ata, n_unknowns)?;
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let min_sv = vals.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    if top <= 0.0 || vals.last().copied().unwrap_or(0.0) < LOCAL_MAP_RANK_TOL * top {
        return Err(ChannelError::UnderdeterminedSystem(min_sv));
    }
    let mut x = vec![0.0f64; n_unknowns];
    for (k, &lam) in vals.iter().enumerate() {
        let mut proj = 0.0;
        for i in 0..n_unknowns {
            proj += vecs[i * n_unknowns + k] * atb[i];
        }
        let coef = proj / lam;
        for i in 0..n_unknowns {
            x[i] += coef * vecs[i * n_unknowns + k];
        }
    }
    // residual in the equation space
    let mut resid_sq = 0.0;
    for r in 0..m_rows {
        let row = &a[r * n_unknowns..(r + 1) * n_unknowns];
        let ax: f64 = row.iter().zip(&x).map(|(ar, xr)| ar * xr).sum();
        resid_sq += (ax - b[r]) * (ax - b[r]);
    }
    let residual = resid_sq.sqrt();
    if residual > LOCAL_MAP_RESIDUAL_TOL {
        return Err(ChannelError::Inconsistent(residual));
    }
    let j = matops::coords_to_matrix(&x, din * dout);
    let choi = ChoiMatrix {
        in_dim: din,
        out_dim: dout,
        matrix: HermitianOperator::hermitian_part(&j),
    };
    Ok(Superoperator::from_choi(&choi))
}

/// (I (x) E_B) phi for a Choi-basis element B, with phi stored hidden-first.
fn apply_conditional(
    phi_m: &ComplexMatrix,
    choi_el: &ComplexMatrix,
    dn: usize,
    din: usize,
    dout: usize,
) -> ComplexMatrix {
    ComplexMatrix::from_fn(dn * dout, dn * dout, |r, c| {
        let (n, t) = (r / dout, r % dout);
        let (np, tp) = (c / dout, c % dout);
        let mut acc = Complex64::new(0.0, 0.0);
        for s in 0..din {
            for sp in 0..din {
                acc +=
                    phi_m[(n * din + s, np * din + sp)] * choi_el[(s * dout + t, sp * dout + tp)];
            }
        }
        acc
    })
}
