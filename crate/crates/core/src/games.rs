//! Games with environments, POVM strategies, payoff evaluation, and the
//! optimal-payoff solver with a certified dual upper bound.
//!
//! A game pairs an independently prepared environment state on A (x) B with a
//! finite list of Hermitian payoff observables on N (x) B. The observer
//! measures a POVM on S (x) A and the chosen observable is measured on N (x) B;
//! the optimal expected payoff is a semidefinite program over POVM tuples.

use crate::matops::{
    self, eigh, partial_trace, permute_systems, tensor, ComplexMatrix, HermitianOperator, MatError,
    SystemLayout,
};
use crate::states::{random_density, DensityOperator, InformationStructure, PauliSet, StateError};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// POVM validation: each element PSD within this.
pub const POVM_PSD_TOL: f64 = -1e-9;
/// POVM validation: completeness defect bound.
pub const POVM_SUM_TOL: f64 = 1e-8;

/// Inner Dykstra projection iteration cap.
const PROJECT_CAP: usize = 400;

#[derive(Debug, Error)]
pub enum GameError {
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("invalid POVM: {0}")]
    BadPovm(String),
    #[error("invalid game: {0}")]
    BadGame(String),
    #[error("spin-guess axis must be a unit vector")]
    NonUnitAxis,
    #[error("optimal-payoff solver hit the iteration cap with gap {gap:.3e}")]
    MaxIterations {
        gap: f64,
        result: Box<OptimalPayoffResult>,
    },
}

/// Environment state on (A, B) plus payoff actions on N (x) B. A trivial
/// environment has both factors one-dimensional.
#[derive(Clone, Debug)]
pub struct Game {
    environment: DensityOperator,
    actions: Vec<HermitianOperator>,
}

impl Game {
    pub fn new(
        environment: DensityOperator,
        actions: Vec<HermitianOperator>,
    ) -> Result<Self, GameError> {
        if environment.layout().len() != 2 {
            return Err(GameError::BadGame(
                "environment must have exactly two factors".into(),
            ));
        }
        if actions.is_empty() {
            return Err(GameError::BadGame("at least one action required".into()));
        }
        let dim = actions[0].dim();
        if actions.iter().any(|a| a.dim() != dim) {
            return Err(GameError::BadGame(
                "actions must share one dimension".into(),
            ));
        }
        let db = environment.layout().dims()[1];
        if dim % db != 0 {
            return Err(GameError::BadGame(format!(
                "action dimension {dim} is not a multiple of the B factor {db}"
            )));
        }
        Ok(Self {
            environment,
            actions,
        })
    }

    /// Game with a one-dimensional environment: actions act on N alone.
    pub fn trivial(actions: Vec<HermitianOperator>) -> Result<Self, GameError> {
        Self::new(DensityOperator::trivial_pair("A", "B"), actions)
    }

    pub fn environment(&self) -> &DensityOperator {
        &self.environment
    }

    pub fn actions(&self) -> &[HermitianOperator] {
        &self.actions
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn env_a_dim(&self) -> usize {
        self.environment.layout().dims()[0]
    }

    pub fn env_b_dim(&self) -> usize {
        self.environment.layout().dims()[1]
    }

    /// Hidden-system dimension implied by the action shape.
    pub fn hidden_dim(&self) -> usize {
        self.actions[0].dim() / self.env_b_dim()
    }
}

/// Measurement strategy: nonnegative operators on S (x) A summing to identity.
#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<HermitianOperator>,
}

impl Povm {
    pub fn new(elements: Vec<HermitianOperator>) -> Result<Self, GameError> {
        if elements.is_empty() {
            return Err(GameError::BadPovm("empty POVM".into()));
        }
        let dim = elements[0].dim();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for e in &elements {
            if e.dim() != dim {
                return Err(GameError::BadPovm(
                    "elements must share one dimension".into(),
                ));
            }
            let min = matops::min_eigenvalue(e)?;
            if min < POVM_PSD_TOL {
                return Err(GameError::BadPovm(format!(
                    "element has eigenvalue {min:.3e}"
                )));
            }
            sum = &sum + e.matrix();
        }
        let defect = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if defect > POVM_SUM_TOL {
            return Err(GameError::BadPovm(format!(
                "completeness defect {defect:.3e}"
            )));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }
}

/// Solver output: achieved value with the achieving POVM, plus a dual
/// certificate Y >= K_i whose trace upper-bounds the optimum.
#[derive(Clone, Debug)]
pub struct OptimalPayoffResult {
    pub value: f64,
    pub povm: Povm,
    pub dual_certificate: HermitianOperator,
    pub gap: f64,
    pub iterations: usize,
    /// Terminal step length of the projected ascent (0 on closed-form paths).
    pub step: f64,
}

/// Solver configuration. `force_iterative` disables the closed-form two-action
/// path, which is how the projected-ascent route gets checked against it.
#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub force_iterative: bool,
    pub warm_start: Option<Povm>,
    /// Resume the ascent at this step length (used with `warm_start` when
    /// re-solving a slightly perturbed instance).
    pub initial_step: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iterations: 5000,
            force_iterative: false,
            warm_start: None,
            initial_step: None,
        }
    }
}

fn check_dims(s: &InformationStructure, g: &Game) -> Result<(), GameError> {
    if s.hidden_dim() != g.hidden_dim() {
        return Err(GameError::DimMismatch(format!(
            "structure hidden dimension {} vs game hidden dimension {}",
            s.hidden_dim(),
            g.hidden_dim()
        )));
    }
    Ok(())
}

/// Joint state (structure tensor environment) on layout (N, S, A, B).
fn joint_state(
    s: &InformationStructure,
    g: &Game,
) -> Result<(ComplexMatrix, SystemLayout), GameError> {
    let (phi, _) = s.matrix_hidden_first()?;
    let env = g.environment();
    let joint = tensor(&phi, env.matrix());
    let layout = SystemLayout::new(&[
        ("N", s.hidden_dim()),
        ("S", s.accessible_dim()),
        ("A", g.env_a_dim()),
        ("B", g.env_b_dim()),
    ])?;
    Ok((joint, layout))
}

/// Expected payoff of a fixed strategy: sum_i tr[(phi (x) rho) (M_i (x) D_i)],
/// with the factor order aligned to (N, S, A, B).
pub fn payoff(s: &InformationStructure, g: &Game, d: &Povm) -> Result<f64, GameError> {
    check_dims(s, g)?;
    if d.len() != g.action_count() {
        return Err(GameError::DimMismatch(format!(
            "POVM has {} elements for {} actions",
            d.len(),
            g.action_count()
        )));
    }
    let m_sa = s.accessible_dim() * g.env_a_dim();
    if d.dim() != m_sa {
        return Err(GameError::DimMismatch(format!(
            "POVM dimension {} vs S.A dimension {}",
            d.dim(),
            m_sa
        )));
    }
    let (joint, layout) = joint_state(s, g)?;
    let op_layout = SystemLayout::new(&[
        ("N", s.hidden_dim()),
        ("B", g.env_b_dim()),
        ("S", s.accessible_dim()),
        ("A", g.env_a_dim()),
    ])?;
    let mut total = Complex64::new(0.0, 0.0);
    for (m_i, d_i) in g.actions().iter().zip(d.elements()) {
        let op = tensor(m_i.matrix(), d_i.matrix());
        let (aligned, _) = permute_systems(&op, &op_layout, &["N", "S", "A", "B"])?;
        total += joint.matmul(&aligned).trace();
    }
    let _ = layout;
    assert!(
        total.im.abs() <= 1e-9 * (1.0 + total.re.abs()),
        "payoff has imaginary residue {}",
        total.im
    );
    Ok(total.re)
}

/// Reduced payoff operators K_i on S (x) A: tracing N and B out of
/// (phi (x) rho)(M_i (x) I) turns the payoff into sum_i tr(K_i D_i).
pub fn reduced_payoff_operators(
    s: &InformationStructure,
    g: &Game,
) -> Result<Vec<HermitianOperator>, GameError> {
    check_dims(s, g)?;
    let (joint, layout) = joint_state(s, g)?;
    let id_sa = ComplexMatrix::identity(s.accessible_dim() * g.env_a_dim());
    let op_layout = SystemLayout::new(&[
        ("N", s.hidden_dim()),
        ("B", g.env_b_dim()),
        ("S", s.accessible_dim()),
        ("A", g.env_a_dim()),
    ])?;
    let mut out = Vec::with_capacity(g.action_count());
    for m_i in g.actions() {
        let lifted = tensor(m_i.matrix(), &id_sa);
        let (aligned, _) = permute_systems(&lifted, &op_layout, &["N", "S", "A", "B"])?;
        let product = joint.matmul(&aligned);
        let (k_i, _) = partial_trace(&product, &layout, &["S", "A"])?;
        out.push(HermitianOperator::hermitian_part(&k_i));
    }
    Ok(out)
}

/// Optimal expected payoff with a duality-gap certificate at tolerance `tol`.
pub fn optimal_payoff(
    s: &InformationStructure,
    g: &Game,
    tol: f64,
) -> Result<OptimalPayoffResult, GameError> {
    optimal_payoff_with(
        s,
        g,
        &SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
}

pub fn optimal_payoff_with(
    s: &InformationStructure,
    g: &Game,
    opts: &SolverOptions,
) -> Result<OptimalPayoffResult, GameError> {
    if opts.tol <= 0.0 {
        return Err(GameError::BadGame("tolerance must be positive".into()));
    }
    let ks = reduced_payoff_operators(s, g)?;
    solve_reduced(&ks, opts)
}

/// Core solver on the reduced operators. Drives the POVM tuple by projected
/// gradient ascent D_i <- proj(D_i + eta K_i) and tracks the best primal value
/// and the best dual certificate seen so far; the gap between them is the
/// stopping criterion.
pub(crate) fn solve_reduced(
    ks: &[HermitianOperator],
    opts: &SolverOptions,
) -> Result<OptimalPayoffResult, GameError> {
    let k = ks.len();
    let dim = ks[0].dim();
    if !opts.force_iterative {
        if k == 1 {
            let d = Povm::new(vec![HermitianOperator::identity(dim)])?;
            let value = ks[0].trace();
            return Ok(OptimalPayoffResult {
                value,
                povm: d,
                dual_certificate: ks[0].clone(),
                gap: 0.0,
                iterations: 0,
                step: 0.0,
            });
        }
        if k == 2 {
            return helstrom_pair(&ks[0], &ks[1]);
        }
    }

    let mut norms = 0.0f64;
    for k_i in ks {
        norms = norms.max(matops::operator_norm(k_i)?);
    }
    let eta0 = 1.0 / (1.0 + norms);
    let mut eta = opts
        .initial_step
        .map(|s| s.clamp(eta0, eta0 * 1e5))
        .unwrap_or(eta0);
    let mut d: Vec<HermitianOperator> = match &opts.warm_start {
        Some(p) if p.len() == k && p.dim() == dim => p.elements().to_vec(),
        _ => vec![HermitianOperator::identity(dim).scale(1.0 / k as f64); k],
    };
    let mut best_value = f64::NEG_INFINITY;
    let mut best_povm: Option<Vec<HermitianOperator>> = None;
    let mut best_dual_trace = f64::INFINITY;
    let mut best_dual: Option<HermitianOperator> = None;
    let mut iterations = 0;
    let mut value_at_last_check = f64::NEG_INFINITY;
    let mut verified: Option<(f64, Vec<HermitianOperator>)> = None;

    for t in 1..=opts.max_iterations.max(1) {
        iterations = t;
        let stepped: Vec<HermitianOperator> = d
            .iter()
            .zip(ks)
            .map(|(d_i, k_i)| d_i.add(&k_i.scale(eta)))
            .collect();
        // cheap projections while far from optimal, tight ones near the end
        let gap_now = (best_dual_trace - best_value).abs().min(1.0);
        let inner_tol = (gap_now * 1e-4).clamp(1e-13, 1e-9);
        d = project_povm(&stepped, inner_tol)?;

        let value: f64 = ks.iter().zip(&d).map(|(k_i, d_i)| k_i.inner(d_i)).sum();
        if value > best_value {
            best_value = value;
            best_povm = Some(d.clone());
        }

        // dual candidate: hermitian part of sum K_i D_i, inflated to dominate
        let mut y0m = ComplexMatrix::zeros(dim, dim);
        for (k_i, d_i) in ks.iter().zip(&d) {
            y0m = &y0m + &k_i.matrix().matmul(d_i.matrix());
        }
        let y0 = HermitianOperator::hermitian_part(&y0m);
        let mut inflate = 0.0f64;
        for k_i in ks {
            inflate = inflate.max(matops::max_eigenvalue(&k_i.sub(&y0))?);
        }
        let y = y0.add(&HermitianOperator::identity(dim).scale(inflate.max(0.0)));
        let ytr = y.trace();
        if ytr < best_dual_trace {
            best_dual_trace = ytr;
            best_dual = Some(y);
        }

        if best_dual_trace - best_value <= opts.tol {
            // candidate exit: re-check the gap on a scrubbed, exactly
            // feasible POVM before accepting
            let cleaned = cleanup_povm(best_povm.as_ref().expect("candidate exists"))?;
            let clean_value: f64 = ks
                .iter()
                .zip(&cleaned)
                .map(|(k_i, d_i)| k_i.inner(d_i))
                .sum();
            if best_dual_trace - clean_value <= opts.tol {
                verified = Some((clean_value, cleaned));
                break;
            }
        }
        // fixed steps crawl along curved faces of the cone once progress per
        // sweep falls below a fraction of the remaining gap; growing the step
        // leaves the fixed points unchanged and breaks the plateau
        if t % 10 == 0 {
            let remaining = best_dual_trace - best_value;
            if best_value - value_at_last_check <= 0.01 * remaining {
                eta = (eta * 2.0).min(eta0 * 1e5);
            }
            value_at_last_check = best_value;
        }
    }

    let (value, elements) = match verified {
        Some(v) => v,
        None => {
            let cleaned = cleanup_povm(&best_povm.expect("at least one iteration"))?;
            let clean_value: f64 = ks
                .iter()
                .zip(&cleaned)
                .map(|(k_i, d_i)| k_i.inner(d_i))
                .sum();
            (clean_value, cleaned)
        }
    };
    let povm = Povm::new(elements)?;
    let dual_certificate = best_dual.expect("at least one iteration");
    let gap = (best_dual_trace - value).max(0.0);
    let result = OptimalPayoffResult {
        value,
        povm,
        dual_certificate,
        gap,
        iterations,
        step: eta,
    };
    if gap > opts.tol {
        return Err(GameError::MaxIterations {
            gap,
            result: Box::new(result),
        });
    }
    Ok(result)
}

/// Removes the residue a truncated Dykstra projection leaves behind:
/// clips every element to the PSD cone exactly, then conjugates by the
/// inverse square root of the sum so the tuple adds to the identity.
fn cleanup_povm(d: &[HermitianOperator]) -> Result<Vec<HermitianOperator>, GameError> {
    let dim = d[0].dim();
    let mut clipped = Vec::with_capacity(d.len());
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for d_i in d {
        let p = matops::positive_part(d_i)?;
        sum = &sum + p.matrix();
        clipped.push(p);
    }
    let inv_sqrt = matops::hermitian_function(&HermitianOperator::hermitian_part(&sum), |l| {
        if l > 1e-12 {
            1.0 / l.sqrt()
        } else {
            0.0
        }
    })?;
    // a rank-deficient sum cannot be normalized to the identity; spread the
    // missing support uniformly
    let mut out: Vec<HermitianOperator> = clipped
        .iter()
        .map(|p| {
            HermitianOperator::hermitian_part(
                &inv_sqrt
                    .matrix()
                    .matmul(p.matrix())
                    .matmul(inv_sqrt.matrix()),
            )
        })
        .collect();
    let mut total = ComplexMatrix::zeros(dim, dim);
    for o in &out {
        total = &total + o.matrix();
    }
    let hole = &ComplexMatrix::identity(dim) - &total;
    if hole.max_abs() > 1e-13 {
        let share = HermitianOperator::hermitian_part(&hole.scale_re(1.0 / d.len() as f64));
        for o in out.iter_mut() {
            *o = o.add(&share);
        }
    }
    Ok(out)
}

/// Closed form for two actions: the optimal POVM is the spectral projector of
/// K_1 - K_2 onto its positive part, and the value is
/// tr(K_2) + sum of positive eigenvalues.
fn helstrom_pair(
    k1: &HermitianOperator,
    k2: &HermitianOperator,
) -> Result<OptimalPayoffResult, GameError> {
    let dim = k1.dim();
    let delta = k1.sub(k2);
    let dec = eigh(&delta)?;
    let proj = dec.apply_spectral(|l| if l > 0.0 { 1.0 } else { 0.0 });
    let d1 = HermitianOperator::hermitian_part(&proj);
    let d2 = HermitianOperator::hermitian_part(&(&ComplexMatrix::identity(dim) - &proj));
    let pos_sum: f64 = dec.values.iter().filter(|l| **l > 0.0).sum();
    let value = k2.trace() + pos_sum;
    // dual: Y = K_2 + positive part of (K_1 - K_2); dominates both operators
    let delta_pos = HermitianOperator::hermitian_part(&dec.apply_spectral(|l| l.max(0.0)));
    let y = k2.add(&delta_pos);
    let gap = (y.trace() - value).max(0.0);
    Ok(OptimalPayoffResult {
        value,
        povm: Povm::new(vec![d1, d2])?,
        dual_certificate: y,
        gap,
        iterations: 0,
        step: 0.0,
    })
}

/// Frobenius-nearest POVM tuple. Pairs have a closed form: eliminating
/// D_2 = I - D_1 turns the problem into a clamp of (G_1 - G_2 + I)/2 onto
/// {0 <= D <= I}. Longer tuples use Dykstra alternation between the product
/// of PSD cones (spectral clipping per element) and the affine slice
/// sum_i D_i = I (subtract the shared defect / k).
fn project_povm(g: &[HermitianOperator], tol: f64) -> Result<Vec<HermitianOperator>, GameError> {
    let k = g.len();
    let dim = g[0].dim();
    if k == 1 {
        return Ok(vec![HermitianOperator::identity(dim)]);
    }
    if k == 2 {
        let mid = g[0]
            .sub(&g[1])
            .add(&HermitianOperator::identity(dim))
            .scale(0.5);
        let d1 = matops::clip_spectrum(&mid, 0.0, 1.0)?;
        let d2 = HermitianOperator::hermitian_part(&(&ComplexMatrix::identity(dim) - d1.matrix()));
        return Ok(vec![d1, d2]);
    }
    let mut x: Vec<HermitianOperator> = g.to_vec();
    let mut corr: Vec<HermitianOperator> = vec![HermitianOperator::zeros(dim); k];
    for _ in 0..PROJECT_CAP {
        let mut clipped = Vec::with_capacity(k);
        for (x_i, c_i) in x.iter().zip(&corr) {
            let r = x_i.sub(c_i);
            let p = matops::positive_part(&r)?;
            clipped.push((p.clone(), p.sub(&r)));
        }
        let mut defect = ComplexMatrix::zeros(dim, dim);
        for (p, _) in &clipped {
            defect = &defect + p.matrix();
        }
        defect = &defect - &ComplexMatrix::identity(dim);
        let shift = HermitianOperator::hermitian_part(&defect.scale_re(1.0 / k as f64));
        let mut moved = 0.0f64;
        let mut next = Vec::with_capacity(k);
        for (i, (p, new_corr)) in clipped.into_iter().enumerate() {
            let xi = p.sub(&shift);
            moved = moved.max(xi.matrix().max_abs_diff(x[i].matrix()));
            next.push(xi);
            corr[i] = new_corr;
        }
        x = next;
        if moved <= tol {
            break;
        }
    }
    Ok(x)
}

/// Two-action game: guess the hidden spin along a unit axis, payoff +1 right,
/// -1 wrong. Actions are the observables +n.sigma and -n.sigma on N.
pub fn spin_guess_game(axis: [f64; 3]) -> Result<Game, GameError> {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(GameError::NonUnitAxis);
    }
    let p = PauliSet::standard();
    let up = p.along(axis);
    let down = up.scale(-1.0);
    Game::trivial(vec![up, down])
}

/// Deterministic random game: environment a normalized Gaussian density,
/// actions random Hermitians scaled to operator norm `scale`.
pub fn random_game(seed: u64, dims: (usize, usize, usize), k: usize, scale: f64) -> Game {
    let (da, db, dn) = dims;
    assert!(k >= 1 && da >= 1 && db >= 1 && dn >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let env_layout = SystemLayout::new(&[("A", da), ("B", db)]).unwrap();
    let environment = random_density(&mut rng, env_layout);
    let mut actions = Vec::with_capacity(k);
    let dim = dn * db;
    for _ in 0..k {
        let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
            use rand::Rng;
            use rand_distr::StandardNormal;
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let h = HermitianOperator::hermitian_part(&g);
        let norm = matops::operator_norm(&h).expect("finite random matrix");
        let m = if norm > 0.0 { h.scale(scale / norm) } else { h };
        actions.push(m);
    }
    Game::new(environment, actions).expect("random game dimensions are consistent")
}
