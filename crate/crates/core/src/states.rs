//! Density operators, information structures, the built-in example states,
//! classical structures, and entropy functionals.
//!
//! An information structure is a bipartite state with one factor accessible
//! to the observer; the hidden factor is the system the observer's payoffs
//! are measured on.

use crate::matops::{
    self, eigh, partial_trace, tensor, ComplexMatrix, HermitianOperator, MatError, SystemLayout,
};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Density validation: minimum eigenvalue must not fall below this.
pub const PSD_TOL: f64 = -1e-10;
/// Density validation: |trace - 1| must not exceed this.
pub const TRACE_TOL: f64 = 1e-10;
/// Spectrum values in [PSD_TOL, ENTROPY_ZERO] count as exact zeros in entropy.
pub const ENTROPY_ZERO: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum StateError {
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error("not a density operator: {0}")]
    NotDensity(String),
    #[error("invalid information structure: {0}")]
    BadStructure(String),
    #[error("unknown builtin state `{0}`")]
    UnknownBuiltin(String),
    #[error("bad builtin parameter: {0}")]
    BadParam(String),
    #[error("invalid classical structure: {0}")]
    NotClassical(String),
}

/// Positive unit-trace operator together with the layout of its factors.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    op: HermitianOperator,
    layout: SystemLayout,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator, layout: SystemLayout) -> Result<Self, StateError> {
        if op.dim() != layout.total_dim() {
            return Err(StateError::NotDensity(format!(
                "operator dimension {} does not match layout dimension {}",
                op.dim(),
                layout.total_dim()
            )));
        }
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(StateError::NotDensity(format!("trace {tr} is not 1")));
        }
        let min = matops::min_eigenvalue(&op)?;
        if min < PSD_TOL {
            return Err(StateError::NotDensity(format!(
                "minimum eigenvalue {min:.3e} below tolerance"
            )));
        }
        Ok(Self { op, layout })
    }

    pub fn from_matrix(m: ComplexMatrix, layout: SystemLayout) -> Result<Self, StateError> {
        Self::new(HermitianOperator::new(m)?, layout)
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.op.matrix()
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Partial trace onto the `keep` factors.
    pub fn marginal(&self, keep: &[&str]) -> Result<DensityOperator, StateError> {
        let (m, l) = partial_trace(self.matrix(), &self.layout, keep)?;
        // a marginal of a valid density is a valid density; skip revalidation
        Ok(DensityOperator {
            op: HermitianOperator::hermitian_part(&m),
            layout: l,
        })
    }

    pub fn relabeled(&self, new_labels: &[&str]) -> Result<DensityOperator, StateError> {
        Ok(DensityOperator {
            op: self.op.clone(),
            layout: self.layout.relabeled(new_labels)?,
        })
    }

    /// Trivial one-dimensional environment pair, used by games with no
    /// environment.
    pub fn trivial_pair(label_a: &str, label_b: &str) -> DensityOperator {
        DensityOperator {
            op: HermitianOperator::identity(1),
            layout: SystemLayout::new(&[(label_a, 1), (label_b, 1)]).expect("distinct labels"),
        }
    }
}

/// Bipartite density operator with a designated observer-accessible factor.
#[derive(Clone, Debug)]
pub struct InformationStructure {
    joint: DensityOperator,
    hidden: String,
    accessible: String,
}

impl InformationStructure {
    pub fn new(joint: DensityOperator, hidden: &str, accessible: &str) -> Result<Self, StateError> {
        if joint.layout().len() != 2 {
            return Err(StateError::BadStructure(format!(
                "expected exactly two factors, got {}",
                joint.layout().len()
            )));
        }
        if hidden == accessible {
            return Err(StateError::BadStructure("labels must be distinct".into()));
        }
        joint.layout().position(hidden)?;
        joint.layout().position(accessible)?;
        Ok(Self {
            joint,
            hidden: hidden.to_string(),
            accessible: accessible.to_string(),
        })
    }

    pub fn joint(&self) -> &DensityOperator {
        &self.joint
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.joint.matrix()
    }

    pub fn hidden_label(&self) -> &str {
        &self.hidden
    }

    pub fn accessible_label(&self) -> &str {
        &self.accessible
    }

    pub fn hidden_dim(&self) -> usize {
        self.joint.layout().dim_of(&self.hidden).expect("validated")
    }

    pub fn accessible_dim(&self) -> usize {
        self.joint
            .layout()
            .dim_of(&self.accessible)
            .expect("validated")
    }

    pub fn hidden_marginal(&self) -> Result<DensityOperator, StateError> {
        self.joint.marginal(&[&self.hidden])
    }

    pub fn accessible_marginal(&self) -> Result<DensityOperator, StateError> {
        self.joint.marginal(&[&self.accessible])
    }

    /// Same state with the factors renamed, hidden factor first.
    pub fn relabeled(&self, hidden: &str, accessible: &str) -> Result<Self, StateError> {
        let pos_h = self.joint.layout().position(&self.hidden)?;
        let new_labels: Vec<&str> = if pos_h == 0 {
            vec![hidden, accessible]
        } else {
            vec![accessible, hidden]
        };
        InformationStructure::new(self.joint.relabeled(&new_labels)?, hidden, accessible)
    }

    /// The joint matrix permuted so the hidden factor is the slow index.
    pub fn matrix_hidden_first(&self) -> Result<(ComplexMatrix, SystemLayout), StateError> {
        let order = [self.hidden.as_str(), self.accessible.as_str()];
        Ok(matops::permute_systems(
            self.joint.matrix(),
            self.joint.layout(),
            &order,
        )?)
    }
}

/// Joint distribution over a finite hidden set and a finite signal set.
#[derive(Clone, Debug)]
pub struct ClassicalStructure {
    /// weights[n][s]
    weights: Vec<Vec<f64>>,
}

impl ClassicalStructure {
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Self, StateError> {
        if weights.is_empty() || weights[0].is_empty() {
            return Err(StateError::NotClassical("empty weight table".into()));
        }
        let cols = weights[0].len();
        if weights.iter().any(|r| r.len() != cols) {
            return Err(StateError::NotClassical("ragged weight table".into()));
        }
        let mut total = 0.0;
        for row in &weights {
            for &w in row {
                if !w.is_finite() || w < 0.0 {
                    return Err(StateError::NotClassical(format!("weight {w} invalid")));
                }
                total += w;
            }
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(StateError::NotClassical(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    pub fn hidden_count(&self) -> usize {
        self.weights.len()
    }

    pub fn signal_count(&self) -> usize {
        self.weights[0].len()
    }

    pub fn weight(&self, n: usize, s: usize) -> f64 {
        self.weights[n][s]
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Marginal over the hidden index.
    pub fn hidden_marginal(&self) -> Vec<f64> {
        self.weights.iter().map(|r| r.iter().sum()).collect()
    }
}

/// The 2x2 Pauli matrices and the Hadamard involution.
#[derive(Clone, Debug)]
pub struct PauliSet {
    pub sigma0: HermitianOperator,
    pub sigma1: HermitianOperator,
    pub sigma2: HermitianOperator,
    pub sigma3: HermitianOperator,
    pub hadamard: ComplexMatrix,
}

impl PauliSet {
    pub fn standard() -> Self {
        let c = Complex64::new;
        let m = |e: [Complex64; 4]| ComplexMatrix::new(2, 2, e.to_vec()).unwrap();
        let s0 = m([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let s1 = m([c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let s2 = m([c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let s3 = m([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let hadamard = m([c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]);
        PauliSet {
            sigma0: HermitianOperator::new(s0).unwrap(),
            sigma1: HermitianOperator::new(s1).unwrap(),
            sigma2: HermitianOperator::new(s2).unwrap(),
            sigma3: HermitianOperator::new(s3).unwrap(),
            hadamard,
        }
    }

    /// The observable n . sigma for a 3-vector n.
    pub fn along(&self, axis: [f64; 3]) -> HermitianOperator {
        let combo = &(&self.sigma1.matrix().scale_re(axis[0])
            + &self.sigma2.matrix().scale_re(axis[1]))
            + &self.sigma3.matrix().scale_re(axis[2]);
        HermitianOperator::hermitian_part(&combo)
    }
}

fn ket(dim: usize, i: usize) -> ComplexMatrix {
    ComplexMatrix::basis_column(dim, i)
}

fn projector(v: &ComplexMatrix) -> ComplexMatrix {
    v.matmul(&v.adjoint())
}

/// The tomography family of n^2 linearly independent density matrices in
/// dimension n: the basis states, the +-superpositions, and the i-phase
/// superpositions for every index pair.
pub fn tomography_states(n: usize) -> Result<Vec<HermitianOperator>, StateError> {
    if n < 2 {
        return Err(StateError::BadParam(format!(
            "tomography family needs dimension >= 2, got {n}"
        )));
    }
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        out.push(HermitianOperator::hermitian_part(&projector(&ket(n, a))));
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let plus = &ket(n, a) + &ket(n, b);
            out.push(HermitianOperator::hermitian_part(
                &projector(&plus).scale_re(0.5),
            ));
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let phased = &ket(n, a) + &ket(n, b).scale(Complex64::new(0.0, 1.0));
            out.push(HermitianOperator::hermitian_part(
                &projector(&phased).scale_re(0.5),
            ));
        }
    }
    Ok(out)
}

fn structure_from_matrix(
    m: ComplexMatrix,
    dims: (usize, usize),
) -> Result<InformationStructure, StateError> {
    let layout = SystemLayout::new(&[("N", dims.0), ("S", dims.1)])?;
    InformationStructure::new(DensityOperator::from_matrix(m, layout)?, "N", "S")
}

/// Constructs one of the named example states. `param` is the local dimension
/// for `bell` and the tomography dimension for the `sec6-*` pair (default 2).
pub fn builtin_structure(
    name: &str,
    param: Option<usize>,
) -> Result<InformationStructure, StateError> {
    match name {
        "singlet" => {
            // (|01> - |10>)(<01| - <10|) / 2
            let v = &tensor(&ket(2, 0), &ket(2, 1)) - &tensor(&ket(2, 1), &ket(2, 0));
            structure_from_matrix(projector(&v).scale_re(0.5), (2, 2))
        }
        "product-mixed" => structure_from_matrix(ComplexMatrix::identity(4).scale_re(0.25), (2, 2)),
        "upsilon" => {
            let v01 = tensor(&ket(2, 0), &ket(2, 1));
            let v10 = tensor(&ket(2, 1), &ket(2, 0));
            let m = (&projector(&v01) + &projector(&v10)).scale_re(0.5);
            structure_from_matrix(m, (2, 2))
        }
        "upsilon-prime" => {
            let upsilon = builtin_structure("upsilon", None)?;
            let h = PauliSet::standard().hadamard;
            let hh = tensor(&h, &h);
            let m = hh.matmul(upsilon.matrix()).matmul(&hh);
            structure_from_matrix(m, (2, 2))
        }
        "bell" => {
            let d = param.unwrap_or(2);
            if d < 1 {
                return Err(StateError::BadParam("bell dimension must be >= 1".into()));
            }
            let mut v = ComplexMatrix::zeros(d * d, 1);
            let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
            for j in 0..d {
                v[(j * d + j, 0)] = amp;
            }
            structure_from_matrix(projector(&v), (d, d))
        }
        "sec6-phi" | "sec6-psi" => {
            let n = param.unwrap_or(2);
            if n < 2 {
                return Err(StateError::BadParam(format!(
                    "tomography pair needs dimension >= 2, got {n}"
                )));
            }
            let family = tomography_states(n)?;
            let m_count = family.len();
            let mut acc = ComplexMatrix::zeros(n * n, n * n);
            for rho in &family {
                let right = if name == "sec6-phi" {
                    rho.matrix().clone()
                } else {
                    rho.matrix().transpose()
                };
                acc = &acc + &tensor(rho.matrix(), &right);
            }
            structure_from_matrix(acc.scale_re(1.0 / m_count as f64), (n, n))
        }
        other => Err(StateError::UnknownBuiltin(other.to_string())),
    }
}

/// Diagonal embedding of a classical structure: sum of p[n][s] |n s><n s|.
pub fn embed_classical(p: &ClassicalStructure) -> InformationStructure {
    let dn = p.hidden_count();
    let ds = p.signal_count();
    let mut m = ComplexMatrix::zeros(dn * ds, dn * ds);
    for n in 0..dn {
        for s in 0..ds {
            m[(n * ds + s, n * ds + s)] = Complex64::new(p.weight(n, s), 0.0);
        }
    }
    structure_from_matrix(m, (dn, ds)).expect("classical embedding is a valid density")
}

/// Von Neumann entropy in bits.
pub fn entropy(rho: &DensityOperator) -> Result<f64, StateError> {
    let dec = eigh(rho.op())?;
    let mut acc = 0.0;
    for &lam in &dec.values {
        if lam < PSD_TOL {
            return Err(StateError::NotDensity(format!(
                "eigenvalue {lam:.3e} below tolerance in entropy"
            )));
        }
        if lam > ENTROPY_ZERO {
            acc -= lam * lam.log2();
        }
    }
    Ok(acc)
}

/// Mutual information S(X) + S(Y) - S(XY) in bits.
pub fn mutual_information(s: &InformationStructure) -> Result<f64, StateError> {
    let sx = entropy(&s.hidden_marginal()?)?;
    let sy = entropy(&s.accessible_marginal()?)?;
    let sxy = entropy(s.joint())?;
    Ok(sx + sy - sxy)
}

/// Seeded random density operator (normalized G G† for Gaussian G).
pub fn random_density(rng: &mut ChaCha8Rng, layout: SystemLayout) -> DensityOperator {
    let d = layout.total_dim();
    let g = ComplexMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let gg = g.matmul(&g.adjoint());
    let tr = gg.trace().re;
    DensityOperator {
        op: HermitianOperator::hermitian_part(&gg.scale_re(1.0 / tr)),
        layout,
    }
}

/// Seeded random information structure with labels N (hidden) and S.
pub fn random_structure(
    seed: u64,
    hidden_dim: usize,
    accessible_dim: usize,
) -> InformationStructure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = SystemLayout::new(&[("N", hidden_dim), ("S", accessible_dim)]).unwrap();
    InformationStructure::new(random_density(&mut rng, layout), "N", "S").unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::trace_norm;
    use crate::testutil::rng;
    use rand::Rng;

    #[test]
    fn singlet_entries() {
        let s = builtin_structure("singlet", None).unwrap();
        let m = s.matrix();
        assert!((m[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!((m[(2, 2)].re - 0.5).abs() < 1e-15);
        assert!((m[(1, 2)].re + 0.5).abs() < 1e-15);
        assert!((m[(2, 1)].re + 0.5).abs() < 1e-15);
        assert!(m[(0, 0)].norm() < 1e-15 && m[(3, 3)].norm() < 1e-15);
    }

    #[test]
    fn product_mixed_is_uniform() {
        let s = builtin_structure("product-mixed", None).unwrap();
        let expected = ComplexMatrix::identity(4).scale_re(0.25);
        assert!(s.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn builtins_are_valid_densities() {
        for (name, param) in [
            ("singlet", None),
            ("product-mixed", None),
            ("upsilon", None),
            ("upsilon-prime", None),
            ("bell", Some(2)),
            ("bell", Some(3)),
            ("sec6-phi", Some(2)),
            ("sec6-psi", Some(2)),
            ("sec6-phi", Some(3)),
            ("sec6-psi", Some(3)),
        ] {
            // construction re-runs DensityOperator validation
            let s = builtin_structure(name, param).unwrap();
            assert_eq!(s.hidden_label(), "N");
        }
        assert!(builtin_structure("nonsense", None).is_err());
        assert!(builtin_structure("sec6-phi", Some(1)).is_err());
    }

    #[test]
    fn upsilon_prime_double_conjugation() {
        let upsilon = builtin_structure("upsilon", None).unwrap();
        let prime = builtin_structure("upsilon-prime", None).unwrap();
        let h = PauliSet::standard().hadamard;
        let hh = tensor(&h, &h);
        let back = hh.matmul(prime.matrix()).matmul(&hh);
        assert!(back.max_abs_diff(upsilon.matrix()) <= 1e-12);
    }

    #[test]
    fn pauli_involutions() {
        let p = PauliSet::standard();
        let id = ComplexMatrix::identity(2);
        for s in [&p.sigma0, &p.sigma1, &p.sigma2, &p.sigma3] {
            let sq = s.matrix().matmul(s.matrix());
            assert_eq!(sq, id, "pauli squares must be exact");
        }
        // f64 cannot represent 1/sqrt(2) with an exactly-0.5 square, so the
        // Hadamard involution holds at machine scale rather than bit-exactly.
        let hh = p.hadamard.matmul(&p.hadamard);
        assert!(hh.max_abs_diff(&id) <= 1e-15);
    }

    #[test]
    fn tomography_family_spans() {
        // oracle: Gram matrix of the listed family is nonsingular
        let fam = tomography_states(2).unwrap();
        assert_eq!(fam.len(), 4);
        let mut gram = vec![0.0f64; 16];
        for (i, a) in fam.iter().enumerate() {
            for (j, b) in fam.iter().enumerate() {
                gram[i * 4 + j] = a.inner(b);
            }
        }
        let (vals, _) = crate::matops::eigh_real_symmetric(&gram, 4).unwrap();
        assert!(
            vals.iter().all(|v| v.abs() > 1e-3),
            "gram spectrum {vals:?}"
        );
    }

    #[test]
    fn embed_classical_cases() {
        let uniform = ClassicalStructure::new(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let s = embed_classical(&uniform);
        assert!(
            s.matrix()
                .max_abs_diff(&ComplexMatrix::identity(4).scale_re(0.25))
                < 1e-15
        );

        let corr = ClassicalStructure::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let sc = embed_classical(&corr);
        assert!((sc.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((sc.matrix()[(3, 3)].re - 0.5).abs() < 1e-15);

        let anti = ClassicalStructure::new(vec![vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        let sa = embed_classical(&anti);
        let upsilon = builtin_structure("upsilon", None).unwrap();
        assert!(sa.matrix().max_abs_diff(upsilon.matrix()) < 1e-15);
    }

    #[test]
    fn entropy_cases() {
        let pure = DensityOperator::from_matrix(
            ComplexMatrix::unit_matrix(2, 0, 0),
            SystemLayout::new(&[("X", 2)]).unwrap(),
        )
        .unwrap();
        assert!(entropy(&pure).unwrap().abs() < 1e-12);

        let mixed2 = DensityOperator::from_matrix(
            ComplexMatrix::identity(2).scale_re(0.5),
            SystemLayout::new(&[("X", 2)]).unwrap(),
        )
        .unwrap();
        assert!((entropy(&mixed2).unwrap() - 1.0).abs() < 1e-12);

        let mixed4 = DensityOperator::from_matrix(
            ComplexMatrix::identity(4).scale_re(0.25),
            SystemLayout::new(&[("X", 4)]).unwrap(),
        )
        .unwrap();
        assert!((entropy(&mixed4).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_fixtures() {
        let mi = |name: &str| mutual_information(&builtin_structure(name, None).unwrap()).unwrap();
        assert!((mi("upsilon") - 1.0).abs() <= 1e-9);
        assert!((mi("upsilon-prime") - 1.0).abs() <= 1e-9);
        // S(marginal) = 1 for each half, S(joint) = 0 for the pure singlet
        assert!((mi("singlet") - 2.0).abs() <= 1e-9);
        assert!(mi("product-mixed").abs() <= 1e-9);
    }

    #[test]
    fn mutual_information_symmetric_and_nonnegative() {
        for seed in 0..10 {
            let s = random_structure(seed, 2, 3);
            let mi = mutual_information(&s).unwrap();
            assert!(mi >= -1e-9);
            let flipped = InformationStructure::new(s.joint().clone(), "S", "N").unwrap();
            let mi2 = mutual_information(&flipped).unwrap();
            assert!((mi - mi2).abs() <= 1e-9);
        }
    }

    #[test]
    fn classical_mi_matches_quantum_embedding() {
        // oracle: direct summation of the classical mutual information
        let classical_mi = |p: &ClassicalStructure| -> f64 {
            let pn = p.hidden_marginal();
            let ps: Vec<f64> = (0..p.signal_count())
                .map(|s| (0..p.hidden_count()).map(|n| p.weight(n, s)).sum())
                .collect();
            let mut acc = 0.0;
            for n in 0..p.hidden_count() {
                for s in 0..p.signal_count() {
                    let w = p.weight(n, s);
                    if w > 1e-15 {
                        acc += w * (w / (pn[n] * ps[s])).log2();
                    }
                }
            }
            acc
        };
        let mut r = rng(101);
        for _ in 0..20 {
            let rows = 2 + (r.gen::<u64>() % 2) as usize;
            let cols = 2 + (r.gen::<u64>() % 3) as usize;
            let mut w = vec![vec![0.0; cols]; rows];
            let mut total = 0.0;
            for row in w.iter_mut() {
                for v in row.iter_mut() {
                    *v = r.gen::<f64>();
                    total += *v;
                }
            }
            for row in w.iter_mut() {
                for v in row.iter_mut() {
                    *v /= total;
                }
            }
            let p = ClassicalStructure::new(w).unwrap();
            let quantum = mutual_information(&embed_classical(&p)).unwrap();
            assert!((quantum - classical_mi(&p)).abs() <= 1e-9);
        }
    }

    #[test]
    fn sec6_pair_shares_hidden_marginal() {
        for n in [2usize, 3] {
            let phi = builtin_structure("sec6-phi", Some(n)).unwrap();
            let psi = builtin_structure("sec6-psi", Some(n)).unwrap();
            let a = phi.hidden_marginal().unwrap();
            let b = psi.hidden_marginal().unwrap();
            let diff = HermitianOperator::hermitian_part(&(a.matrix() - b.matrix()));
            assert!(trace_norm(&diff).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn classical_structure_validation() {
        assert!(ClassicalStructure::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(ClassicalStructure::new(vec![vec![-0.1, 1.1]]).is_err());
        assert!(ClassicalStructure::new(vec![]).is_err());
    }

    #[test]
    fn density_validation() {
        let layout = SystemLayout::new(&[("X", 2)]).unwrap();
        let not_unit = ComplexMatrix::identity(2);
        assert!(DensityOperator::from_matrix(not_unit, layout.clone()).is_err());
        let mut negative = ComplexMatrix::zeros(2, 2);
        negative[(0, 0)] = Complex64::new(1.5, 0.0);
        negative[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(DensityOperator::from_matrix(negative, layout).is_err());
    }
}
