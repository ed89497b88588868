//! Generalized teleportation: the maximally entangled resource state, the
//! shifted Bell basis built from Weyl operators, the matching unitary
//! corrections, and the roundtrip identity that underwrites the witness
//! construction.
//!
//! Conventions: Z|j> = exp(2 pi i j / d)|j>, X|j> = |j+1 mod d>, and the Bell
//! vector (a, b) is (I (x) X^a Z^b)|Omega> with the Weyl factor acting on the
//! second (A) tensor slot. With that ordering the correction that restores
//! the teleported state is the transpose W^t = Z^b X^{-a}; the roundtrip test
//! below is the arbiter of the convention.

use crate::games::{GameError, Povm};
use crate::matops::{
    partial_trace, tensor, trace_distance, ComplexMatrix, HermitianOperator, MatError, SystemLayout,
};
use crate::states::{DensityOperator, InformationStructure, StateError};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TeleportError {
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("teleportation needs local dimension >= 2, got {0}")]
    BadDimension(usize),
}

/// The Weyl (shift-and-clock) unitary X^a Z^b in dimension d.
pub fn weyl(d: usize, a: usize, b: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    let tau = 2.0 * std::f64::consts::PI / d as f64;
    for j in 0..d {
        let phase = tau * (b * j) as f64;
        m[((j + a) % d, j)] = Complex64::new(phase.cos(), phase.sin());
    }
    m
}

/// The d^2 shifted maximally entangled vectors (I (x) W_ab)|Omega> on T (x) A,
/// indexed i = a d + b.
#[derive(Clone, Debug)]
pub struct BellBasis {
    d: usize,
    vectors: Vec<ComplexMatrix>,
}

impl BellBasis {
    pub fn new(d: usize) -> Result<Self, TeleportError> {
        if d < 2 {
            return Err(TeleportError::BadDimension(d));
        }
        let omega = maximally_entangled_vector(d);
        let mut vectors = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                let lifted = tensor(&ComplexMatrix::identity(d), &weyl(d, a, b));
                vectors.push(lifted.matmul(&omega));
            }
        }
        Ok(Self { d, vectors })
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn vectors(&self) -> &[ComplexMatrix] {
        &self.vectors
    }

    /// Max deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.vectors.len();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let ip = self.vectors[i].adjoint().matmul(&self.vectors[j])[(0, 0)];
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - Complex64::new(expected, 0.0)).norm());
            }
        }
        worst
    }
}

/// Outcome-indexed unitary corrections on B, matched to a Bell basis.
#[derive(Clone, Debug)]
pub struct CorrectionSet {
    unitaries: Vec<ComplexMatrix>,
}

impl CorrectionSet {
    /// The corrections that undo the Bell-measurement back action: for
    /// outcome (a, b) the B system holds conj(W_ab) x conj(W_ab)†, so the
    /// transpose W_ab^t restores x.
    pub fn matched(basis: &BellBasis) -> Self {
        let d = basis.local_dim();
        let mut unitaries = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                unitaries.push(weyl(d, a, b).transpose());
            }
        }
        Self { unitaries }
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.unitaries
            .iter()
            .map(|u| {
                u.adjoint()
                    .matmul(u)
                    .max_abs_diff(&ComplexMatrix::identity(u.rows()))
            })
            .fold(0.0, f64::max)
    }
}

fn maximally_entangled_vector(d: usize) -> ComplexMatrix {
    let mut v = ComplexMatrix::zeros(d * d, 1);
    let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    for j in 0..d {
        v[(j * d + j, 0)] = amp;
    }
    v
}

/// The teleportation resource |Omega><Omega| on A (x) B.
pub fn teleport_environment(d: usize) -> Result<DensityOperator, TeleportError> {
    if d < 2 {
        return Err(TeleportError::BadDimension(d));
    }
    let v = maximally_entangled_vector(d);
    let proj = v.matmul(&v.adjoint());
    let layout = SystemLayout::new(&[("A", d), ("B", d)])?;
    Ok(DensityOperator::new(
        HermitianOperator::hermitian_part(&proj),
        layout,
    )?)
}

/// The Bell measurement as a POVM of rank-1 projectors on T (x) A.
pub fn measurement_functionals(basis: &BellBasis) -> Result<Povm, TeleportError> {
    let elements = basis
        .vectors()
        .iter()
        .map(|v| HermitianOperator::hermitian_part(&v.matmul(&v.adjoint())))
        .collect();
    Ok(Povm::new(elements)?)
}

/// Runs the full teleportation contraction on a bipartite structure: measure
/// T (x) A in the Bell basis, apply the matched correction on B, sum over
/// outcomes, and return the trace-norm distance between the output (read on
/// N, B) and the input.
pub fn teleport_roundtrip(s: &InformationStructure) -> Result<f64, TeleportError> {
    let d = s.accessible_dim();
    if d < 2 {
        return Err(TeleportError::BadDimension(d));
    }
    let dn = s.hidden_dim();
    let basis = BellBasis::new(d)?;
    let corrections = CorrectionSet::matched(&basis);
    let env = teleport_environment(d)?;

    let (psi, _) = s.matrix_hidden_first()?;
    let joint = tensor(&psi, env.matrix());
    let layout = SystemLayout::new(&[("N", dn), ("T", d), ("A", d), ("B", d)])?;

    let id_n = ComplexMatrix::identity(dn);
    let id_b = ComplexMatrix::identity(d);
    let mut out = ComplexMatrix::zeros(dn * d, dn * d);
    for (vec, u) in basis.vectors().iter().zip(corrections.unitaries()) {
        let proj = vec.matmul(&vec.adjoint());
        let lifted = tensor(&tensor(&id_n, &proj), &id_b);
        let measured = joint.matmul(&lifted);
        let (conditional, _) = partial_trace(&measured, &layout, &["N", "B"])?;
        let corr = tensor(&id_n, u);
        out = &out + &corr.matmul(&conditional).matmul(&corr.adjoint());
    }
    Ok(trace_distance(&out, &psi)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{builtin_structure, random_structure};

    #[test]
    fn environment_is_the_shared_bell_pair() {
        let env = teleport_environment(2).unwrap();
        assert!((env.matrix().trace().re - 1.0).abs() <= 1e-14);
        // (|00> + |11>)(<00| + <11|) / 2
        for (r, c, want) in [(0, 0, 0.5), (0, 3, 0.5), (3, 0, 0.5), (3, 3, 0.5)] {
            assert!((env.matrix()[(r, c)].re - want).abs() <= 1e-14);
        }
        let a = env.marginal(&["A"]).unwrap();
        assert!(
            a.matrix()
                .max_abs_diff(&ComplexMatrix::identity(2).scale_re(0.5))
                <= 1e-12
        );
        assert!(teleport_environment(1).is_err());
    }

    #[test]
    fn qubit_basis_is_bell_with_pauli_corrections() {
        let basis = BellBasis::new(2).unwrap();
        assert_eq!(basis.vectors().len(), 4);
        assert!(basis.orthonormality_defect() <= 1e-12);

        let corr = CorrectionSet::matched(&basis);
        assert!(corr.unitarity_defect() <= 1e-12);
        // corrections are sigma_0, sigma_3, sigma_1, sigma_1 sigma_3 up to phase
        let p = crate::states::PauliSet::standard();
        let expected = [
            p.sigma0.matrix().clone(),
            p.sigma3.matrix().clone(),
            p.sigma1.matrix().clone(),
            p.sigma1.matrix().matmul(p.sigma3.matrix()),
        ];
        for (u, e) in corr.unitaries().iter().zip(&expected) {
            // compare as projectors to quotient out the global phase
            let pu = tensor(u, &u.conjugate());
            let pe = tensor(e, &e.conjugate());
            assert!(pu.max_abs_diff(&pe) <= 1e-12);
        }
    }

    #[test]
    fn measurement_functionals_are_complete_projectors() {
        for d in [2usize, 3] {
            let basis = BellBasis::new(d).unwrap();
            let povm = measurement_functionals(&basis).unwrap();
            assert_eq!(povm.len(), d * d);
            for e in povm.elements() {
                let sq = e.matrix().matmul(e.matrix());
                assert!(sq.max_abs_diff(e.matrix()) <= 1e-12, "not idempotent");
            }
        }
    }

    #[test]
    fn roundtrip_restores_named_states() {
        let singlet = builtin_structure("singlet", None).unwrap();
        assert!(teleport_roundtrip(&singlet).unwrap() <= 1e-10);

        // pure product state is also covered
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(1, 1)] = Complex64::new(1.0, 0.0); // |0><0| (x) |1><1|
        let layout = SystemLayout::new(&[("N", 2), ("T", 2)]).unwrap();
        let product =
            InformationStructure::new(DensityOperator::from_matrix(m, layout).unwrap(), "N", "T")
                .unwrap();
        assert!(teleport_roundtrip(&product).unwrap() <= 1e-10);
    }

    #[test]
    fn roundtrip_restores_random_two_qubit_states() {
        let mut worst = 0.0f64;
        for seed in 0..20 {
            let s = random_structure(seed + 7000, 2, 2);
            worst = worst.max(teleport_roundtrip(&s).unwrap());
        }
        assert!(worst <= 1e-10, "worst distance {worst:.3e}");
    }

    #[test]
    fn roundtrip_restores_qutrit_states() {
        let mut worst = 0.0f64;
        for seed in 0..5 {
            let s = random_structure(seed + 8000, 3, 3);
            worst = worst.max(teleport_roundtrip(&s).unwrap());
        }
        assert!(worst <= 1e-10, "worst distance {worst:.3e}");
    }

    #[test]
    fn roundtrip_is_linear_in_the_state() {
        // convex mixtures teleport to the same mixture
        let a = random_structure(9100, 2, 2);
        let b = random_structure(9101, 2, 2);
        let mixed_m = &a.matrix().scale_re(0.3) + &b.matrix().scale_re(0.7);
        let layout = a.joint().layout().clone();
        let mixed = InformationStructure::new(
            DensityOperator::from_matrix(mixed_m, layout).unwrap(),
            "N",
            "S",
        )
        .unwrap();
        assert!(teleport_roundtrip(&mixed).unwrap() <= 1e-10);
    }
}
