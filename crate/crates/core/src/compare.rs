//! The Blackwell decision procedure. Either a trace-preserving completely
//! positive map on the accessible factor carries one structure into the
//! other — decided as a feasibility problem on Choi space — or a certified
//! witness game separates them: an environment plus payoff observables on
//! which the supposedly worse structure achieves strictly higher optimal
//! payoff. The classical analogue is a garbling linear program.

use crate::channels::{choi_to_kraus, ChannelError, ChoiMatrix, KrausChannel};
use crate::games::{
    reduced_payoff_operators, solve_reduced, Game, GameError, OptimalPayoffResult, Povm,
    SolverOptions,
};
use crate::matops::{
    self, coords_to_matrix, eigh_real_symmetric, hermitian_basis, matrix_to_coords, partial_trace,
    tensor, trace_distance, trace_norm, ComplexMatrix, HermitianOperator, MatError, SystemLayout,
};
use crate::simplex;
use crate::states::{mutual_information, ClassicalStructure, InformationStructure, StateError};
use crate::teleport::{teleport_environment, BellBasis, TeleportError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CompareError {
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Teleport(#[from] TeleportError),
    #[error("hidden dimensions differ: {0} vs {1}")]
    HiddenDimMismatch(usize, usize),
    #[error("classical structures have different hidden index sets: {0} vs {1}")]
    IndexSetMismatch(usize, usize),
    #[error("no witness found after {iterations} iterations (best bound {best_bound:.3e})")]
    NoWitnessFound { iterations: usize, best_bound: f64 },
}

/// Outcome of the Choi-space feasibility solve.
#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Trace-norm residual of the constraint families at the terminal
    /// positive-semidefinite iterate.
    pub distance: f64,
    pub iterations: usize,
    /// Present when feasible: the satisfying Choi matrix.
    pub choi: Option<ChoiMatrix>,
    /// Present when infeasible and the constraint set itself is nonempty:
    /// the terminal displacement direction on Choi space, normalized to unit
    /// trace norm. Targets outside the range of the constraint map have no
    /// nonzero Choi-space separating direction, and carry `None`.
    pub normal: Option<HermitianOperator>,
}

/// Diagnostics carried by every verdict.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct Diagnostics {
    pub mutual_information_phi: f64,
    pub mutual_information_psi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasibility_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasibility_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_gap_phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_gap_psi: Option<f64>,
    pub notes: Vec<String>,
}

/// Decision: either a transforming channel, a certified witness game, or an
/// honest refusal to decide.
#[derive(Clone, Debug)]
pub enum ComparisonVerdict {
    Better {
        channel: KrausChannel,
        diagnostics: Diagnostics,
    },
    NotBetter {
        witness: Game,
        margin: f64,
        payoff_phi: f64,
        payoff_psi: f64,
        diagnostics: Diagnostics,
    },
    Indeterminate {
        diagnostics: Diagnostics,
    },
}

impl ComparisonVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            ComparisonVerdict::Better { .. } => "better",
            ComparisonVerdict::NotBetter { .. } => "not_better",
            ComparisonVerdict::Indeterminate { .. } => "indeterminate",
        }
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        match self {
            ComparisonVerdict::Better { diagnostics, .. }
            | ComparisonVerdict::NotBetter { diagnostics, .. }
            | ComparisonVerdict::Indeterminate { diagnostics } => diagnostics,
        }
    }
}

/// Witness-search knobs; the defaults match the module design.
#[derive(Clone, Debug)]
pub struct WitnessParams {
    /// Early-exit threshold on the verified margin.
    pub min_margin: f64,
    pub max_iterations: usize,
    /// Step scale c of the c/sqrt(t) ascent schedule.
    pub step_scale: f64,
    /// Duality-gap tolerance for the inner payoff solves.
    pub solver_tol: f64,
    pub solver_cap: usize,
    /// Iteration budget of the loose solves that steer the ascent; exits are
    /// re-verified under the full `solver_cap`.
    pub ascent_solver_cap: usize,
}

impl Default for WitnessParams {
    fn default() -> Self {
        Self {
            min_margin: 1e-3,
            max_iterations: 2000,
            step_scale: 0.5,
            solver_tol: 1e-7,
            solver_cap: 5000,
            ascent_solver_cap: 300,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompareOptions {
    pub tol: f64,
    pub feasibility_cap: usize,
    pub witness: WitnessParams,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            feasibility_cap: 20_000,
            witness: WitnessParams::default(),
        }
    }
}

/// Relabels to canonical hidden/accessible names so downstream layouts never
/// collide with environment labels.
fn canonical(
    phi: &InformationStructure,
    psi: &InformationStructure,
) -> Result<(InformationStructure, InformationStructure), CompareError> {
    if phi.hidden_dim() != psi.hidden_dim() {
        return Err(CompareError::HiddenDimMismatch(
            phi.hidden_dim(),
            psi.hidden_dim(),
        ));
    }
    Ok((phi.relabeled("N", "S")?, psi.relabeled("N", "T")?))
}

/// Decides whether a completely positive trace-preserving map on the
/// accessible factor carries `phi` into `psi`, by Dykstra alternating
/// projections on Choi space between the PSD cone and the affine set
/// {tr_out J = I} ∩ {(I (x) E_J) phi = psi}.
pub fn cptp_feasibility(
    phi: &InformationStructure,
    psi: &InformationStructure,
    tol: f64,
) -> Result<FeasibilityReport, CompareError> {
    cptp_feasibility_with(phi, psi, tol, CompareOptions::default().feasibility_cap)
}

pub fn cptp_feasibility_with(
    phi: &InformationStructure,
    psi: &InformationStructure,
    tol: f64,
    cap: usize,
) -> Result<FeasibilityReport, CompareError> {
    let (phi, psi) = canonical(phi, psi)?;
    let dn = phi.hidden_dim();
    let ds = phi.accessible_dim();
    let dt = psi.accessible_dim();
    let d_choi = ds * dt;
    let (phi_m, _) = phi.matrix_hidden_first()?;
    let (psi_m, _) = psi.matrix_hidden_first()?;

    // stacked real-linear constraint map on Hermitian coordinates of J
    let n_unknowns = d_choi * d_choi;
    let m_rows = ds * ds + (dn * dt) * (dn * dt);
    let basis = hermitian_basis(d_choi);
    let choi_layout = SystemLayout::new(&[("in", ds), ("out", dt)])?;
    let mut a = vec![0.0f64; m_rows * n_unknowns];
    for (alpha, b_el) in basis.iter().enumerate() {
        let (reduced, _) = partial_trace(b_el, &choi_layout, &["in"])?;
        let tp_coords = matrix_to_coords(&reduced);
        let image = apply_choi_to_structure(&phi_m, b_el, dn, ds, dt);
        let map_coords = matrix_to_coords(&image);
        for (r, &v) in tp_coords.iter().chain(map_coords.iter()).enumerate() {
            a[r * n_unknowns + alpha] = v;
        }
    }
    let mut b = matrix_to_coords(&ComplexMatrix::identity(ds));
    b.extend(matrix_to_coords(&psi_m));
    let projector = AffineProjector::new(a, b, m_rows, n_unknowns)?;

    // start on the trace-preserving slice: the uniform-output Choi I / dt
    let mut x = matrix_to_coords(&ComplexMatrix::identity(d_choi).scale_re(1.0 / dt as f64));
    let mut correction = vec![0.0f64; n_unknowns];
    let mut cone_point = HermitianOperator::identity(d_choi).scale(1.0 / dt as f64);
    let mut iterations = 0;
    let movement_floor = (tol * 1e-3).max(1e-13);
    for t in 1..=cap {
        iterations = t;
        let r: Vec<f64> = x.iter().zip(&correction).map(|(xi, ci)| xi - ci).collect();
        let jr = HermitianOperator::hermitian_part(&coords_to_matrix(&r, d_choi));
        let jp = matops::positive_part(&jr)?;
        let xp = matrix_to_coords(jp.matrix());
        for i in 0..n_unknowns {
            correction[i] = xp[i] - r[i];
        }
        cone_point = jp;
        let next = projector.project(&xp);
        let movement = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        x = next;
        if movement < movement_floor {
            break;
        }
    }

    // residuals measured at the PSD iterate
    let (reduced, _) = partial_trace(cone_point.matrix(), &choi_layout, &["in"])?;
    let resid_tp = trace_distance(&reduced, &ComplexMatrix::identity(ds))?;
    let image = apply_choi_to_structure(&phi_m, cone_point.matrix(), dn, ds, dt);
    let resid_map = trace_distance(&image, &psi_m)?;
    let distance = resid_tp + resid_map;

    if distance <= tol && resid_tp <= 1e-9 {
        let choi = ChoiMatrix::new(ds, dt, cone_point)?;
        return Ok(FeasibilityReport {
            feasible: true,
            distance,
            iterations,
            choi: Some(choi),
            normal: None,
        });
    }
    // displacement between the affine and cone iterates, pulled back to a
    // unit-trace-norm Hermitian direction; when the surrogate affine set
    // touches the cone the inconsistency lives in the output space alone and
    // its pullback may be zero
    let mut disp = coords_to_matrix(
        &x.iter()
            .zip(&matrix_to_coords(cone_point.matrix()))
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
        d_choi,
    );
    if disp.max_abs() <= 1e-12 {
        let resid = &psi_m - &image;
        disp = pullback_direction(&phi_m, &resid, dn, ds, dt);
    }
    let herm = HermitianOperator::hermitian_part(&disp);
    let norm = trace_norm(&herm)?;
    let normal = if norm > 1e-12 {
        Some(herm.scale(1.0 / norm))
    } else {
        None
    };
    Ok(FeasibilityReport {
        feasible: false,
        distance,
        iterations,
        choi: None,
        normal,
    })
}

/// (I (x) E_J) phi for a Choi-space element J, with phi stored hidden-first.
fn apply_choi_to_structure(
    phi_m: &ComplexMatrix,
    choi_el: &ComplexMatrix,
    dn: usize,
    ds: usize,
    dt: usize,
) -> ComplexMatrix {
    ComplexMatrix::from_fn(dn * dt, dn * dt, |r, c| {
        let (n, t) = (r / dt, r % dt);
        let (np, tp) = (c / dt, c % dt);
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for s in 0..ds {
            for sp in 0..ds {
                acc += phi_m[(n * ds + s, np * ds + sp)] * choi_el[(s * dt + t, sp * dt + tp)];
            }
        }
        acc
    })
}

/// Adjoint of `apply_choi_to_structure` in the Frobenius pairing: maps a
/// residual on the output space back to a direction on Choi space.
fn pullback_direction(
    phi_m: &ComplexMatrix,
    resid: &ComplexMatrix,
    dn: usize,
    ds: usize,
    dt: usize,
) -> ComplexMatrix {
    ComplexMatrix::from_fn(ds * dt, ds * dt, |r, c| {
        let (s, t) = (r / dt, r % dt);
        let (sp, tp) = (c / dt, c % dt);
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for n in 0..dn {
            for np in 0..dn {
                acc += phi_m[(n * ds + s, np * ds + sp)].conj() * resid[(n * dt + t, np * dt + tp)];
            }
        }
        acc
    })
}

/// Euclidean projection onto {x : A x = b} (or onto the least-squares
/// surrogate when b is outside the range of A), via a precomputed spectral
/// pseudoinverse of A A^t.
struct AffineProjector {
    a: Vec<f64>,
    b: Vec<f64>,
    m: usize,
    n: usize,
    evals: Vec<f64>,
    evecs: Vec<f64>,
}

impl AffineProjector {
    fn new(a: Vec<f64>, b: Vec<f64>, m: usize, n: usize) -> Result<Self, MatError> {
        let mut aat = vec![0.0f64; m * m];
        for i in 0..m {
            for j in i..m {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += a[i * n + l] * a[j * n + l];
                }
                aat[i * m + j] = acc;
                aat[j * m + i] = acc;
            }
        }
        let (evals, evecs) = eigh_real_symmetric(&aat, m)?;
        Ok(Self {
            a,
            b,
            m,
            n,
            evals,
            evecs,
        })
    }

    fn project(&self, x: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        let mut r = vec![0.0f64; m];
        for i in 0..m {
            let mut acc = -self.b[i];
            for l in 0..n {
                acc += self.a[i * n + l] * x[l];
            }
            r[i] = acc;
        }
        // y = (A A^t)^+ r
        let top = self.evals.first().copied().unwrap_or(0.0);
        let cut = 1e-12 * top.max(1e-300);
        let mut y = vec![0.0f64; m];
        for (k, &lam) in self.evals.iter().enumerate() {
            if lam <= cut {
                continue;
            }
            let mut proj = 0.0;
            for i in 0..m {
                proj += self.evecs[i * m + k] * r[i];
            }
            let coef = proj / lam;
            for i in 0..m {
                y[i] += coef * self.evecs[i * m + k];
            }
        }
        let mut out = x.to_vec();
        for l in 0..n {
            let mut acc = 0.0;
            for i in 0..m {
                acc += self.a[i * n + l] * y[i];
            }
            out[l] -= acc;
        }
        out
    }
}

/// Outcome of a successful witness search.
#[derive(Clone, Debug)]
pub struct WitnessOutcome {
    pub game: Game,
    pub margin: f64,
    pub payoff_phi: f64,
    pub payoff_psi: f64,
    pub iterations: usize,
}

/// Searches for a game on which `psi` strictly beats `phi`: the environment
/// is the teleportation resource of the accessible dimension of `psi`, the
/// actions (one per Bell outcome) are driven up the concave objective
/// f(M) = sum_i tr(q_i M_i) - R(phi; rho, M) by supergradient ascent with
/// spectral clipping to the unit operator-norm ball.
pub fn find_witness(
    phi: &InformationStructure,
    psi: &InformationStructure,
    params: &WitnessParams,
) -> Result<WitnessOutcome, CompareError> {
    let (phi, psi) = canonical(phi, psi)?;
    let dn = phi.hidden_dim();
    let dt = psi.accessible_dim();
    let env = teleport_environment(dt)?;
    let basis = BellBasis::new(dt)?;
    let k = dt * dt;
    let action_dim = dn * dt;

    // q_i = (I_NB (x) <bell_i| . |bell_i>)(psi (x) rho), an operator on N (x) B
    let (psi_m, _) = psi.matrix_hidden_first()?;
    let joint_psi = tensor(&psi_m, env.matrix());
    let psi_layout = SystemLayout::new(&[("N", dn), ("T", dt), ("A", dt), ("B", dt)])?;
    let id_n = ComplexMatrix::identity(dn);
    let id_b = ComplexMatrix::identity(dt);
    let mut teleported = Vec::with_capacity(k);
    for v in basis.vectors() {
        let proj = v.matmul(&v.adjoint());
        let lifted = tensor(&tensor(&id_n, &proj), &id_b);
        let (q_i, _) = partial_trace(&joint_psi.matmul(&lifted), &psi_layout, &["N", "B"])?;
        teleported.push(HermitianOperator::hermitian_part(&q_i));
    }

    // the action -> reduced-operator map is linear; tabulate it on a basis so
    // the ascent loop works with plain real matrix-vector products
    let action_basis = hermitian_basis(action_dim);
    let basis_game = Game::new(
        env.clone(),
        action_basis
            .iter()
            .map(HermitianOperator::hermitian_part)
            .collect(),
    )?;
    let basis_ks = reduced_payoff_operators(&phi, &basis_game)?;
    let povm_dim = basis_ks[0].dim();
    let n_action = action_dim * action_dim;
    let n_povm = povm_dim * povm_dim;
    // reduction[r][c]: r-th coordinate of the reduced operator of basis action c
    let mut reduction = vec![0.0f64; n_povm * n_action];
    for (c, k_c) in basis_ks.iter().enumerate() {
        for (r, &v) in matrix_to_coords(k_c.matrix()).iter().enumerate() {
            reduction[r * n_action + c] = v;
        }
    }
    let q_coords: Vec<Vec<f64>> = teleported
        .iter()
        .map(|q| matrix_to_coords(q.matrix()))
        .collect();

    let mut action_coords = vec![vec![0.0f64; n_action]; k];
    let mut warm: Option<Povm> = None;
    let mut warm_step: Option<f64> = None;
    let mut warm_psi: Option<Povm> = None;
    let mut best_bound = f64::NEG_INFINITY;
    let mut bound_at_last_verify = 0.0f64;

    for t in 1..=params.max_iterations {
        let ks: Vec<HermitianOperator> = action_coords
            .iter()
            .map(|m| {
                let mut out = vec![0.0f64; n_povm];
                for (r, o) in out.iter_mut().enumerate() {
                    let row = &reduction[r * n_action..(r + 1) * n_action];
                    *o = row.iter().zip(m).map(|(a, b)| a * b).sum();
                }
                HermitianOperator::hermitian_part(&coords_to_matrix(&out, povm_dim))
            })
            .collect();
        // loose solves steer the early ascent; exits are always re-verified
        // at the configured gap
        let ascent_tol = (1e-2 / ((t * t) as f64)).clamp(params.solver_tol, 1e-2);
        let phi_sol = solve_resumable(
            &ks,
            ascent_tol,
            params.ascent_solver_cap,
            warm.take(),
            warm_step.take(),
        )?;
        warm = Some(phi_sol.povm.clone());
        if phi_sol.step > 0.0 {
            warm_step = Some(phi_sol.step);
        }

        let teleport_value: f64 = q_coords
            .iter()
            .zip(&action_coords)
            .map(|(q, m)| q.iter().zip(m).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        // rigorous lower bound on R(psi) - R(phi) at the current actions
        let bound = teleport_value - phi_sol.dual_certificate.trace();
        best_bound = best_bound.max(bound);

        let grown = bound > 1.2 * bound_at_last_verify;
        let try_verify = (bound >= params.min_margin && grown)
            || (bound > 0.0 && grown && t % 25 == 0)
            || (bound > 0.0 && t == params.max_iterations);
        if try_verify {
            bound_at_last_verify = bound;
            let game = Game::new(
                env.clone(),
                action_coords
                    .iter()
                    .map(|m| HermitianOperator::hermitian_part(&coords_to_matrix(m, action_dim)))
                    .collect(),
            )?;
            let attempt = verify_witness(
                &phi,
                &psi,
                &game,
                bound,
                params,
                t,
                warm.clone(),
                &mut warm_psi,
            )?;
            if let Some(outcome) = attempt {
                return Ok(outcome);
            }
        }
        if t == params.max_iterations {
            break;
        }

        // supergradient q_i - p_i, with p_i the adjoint reduction of the
        // phi-side optimal POVM element
        let step = params.step_scale / (t as f64).sqrt();
        for (i, m) in action_coords.iter_mut().enumerate() {
            let d_coords = matrix_to_coords(phi_sol.povm.elements()[i].matrix());
            for (c, mc) in m.iter_mut().enumerate() {
                let mut p_c = 0.0;
                for r in 0..n_povm {
                    p_c += reduction[r * n_action + c] * d_coords[r];
                }
                *mc += step * (q_coords[i][c] - p_c);
            }
            let clipped = matops::clip_spectrum(
                &HermitianOperator::hermitian_part(&coords_to_matrix(m, action_dim)),
                -1.0,
                1.0,
            )?;
            *m = matrix_to_coords(clipped.matrix());
        }
    }
    Err(CompareError::NoWitnessFound {
        iterations: params.max_iterations,
        best_bound,
    })
}

/// Solves the reduced problem, tolerating an iteration-cap fallback (the
/// partial result still carries a valid certificate).
fn solve_loose(
    ks: &[HermitianOperator],
    tol: f64,
    cap: usize,
    warm: Option<Povm>,
) -> Result<OptimalPayoffResult, CompareError> {
    solve_resumable(ks, tol, cap, warm, None)
}

/// Like `solve_loose` but resumes the ascent step size, for sequences of
/// slightly perturbed instances.
fn solve_resumable(
    ks: &[HermitianOperator],
    tol: f64,
    cap: usize,
    warm: Option<Povm>,
    step: Option<f64>,
) -> Result<OptimalPayoffResult, CompareError> {
    let opts = SolverOptions {
        tol,
        max_iterations: cap,
        force_iterative: false,
        warm_start: warm,
        initial_step: step,
    };
    match solve_reduced(ks, &opts) {
        Ok(r) => Ok(r),
        Err(GameError::MaxIterations { result, .. }) => Ok(*result),
        Err(e) => Err(e.into()),
    }
}

/// Re-solves both sides to certify the margin: the psi value is primal
/// (achievable), the phi bound is dual (an upper bound), so
/// margin = value_psi - tr(Y_phi) is a rigorous separation. Warm starts only
/// speed the solves up; the certificates stand on their own.
#[allow(clippy::too_many_arguments)]
fn verify_witness(
    phi: &InformationStructure,
    psi: &InformationStructure,
    game: &Game,
    bound: f64,
    params: &WitnessParams,
    iterations: usize,
    warm_phi: Option<Povm>,
    warm_psi: &mut Option<Povm>,
) -> Result<Option<WitnessOutcome>, CompareError> {
    let verify_tol = (bound / 20.0).clamp(1e-10, params.solver_tol);
    let ks_phi = reduced_payoff_operators(phi, game)?;
    let phi_sol = solve_loose(&ks_phi, verify_tol, params.solver_cap, warm_phi)?;
    let ks_psi = reduced_payoff_operators(psi, game)?;
    let psi_sol = solve_loose(&ks_psi, verify_tol, params.solver_cap, warm_psi.take())?;
    *warm_psi = Some(psi_sol.povm.clone());
    let margin = psi_sol.value - phi_sol.dual_certificate.trace();
    if margin > 0.0 && phi_sol.gap <= margin / 10.0 && psi_sol.gap <= margin / 10.0 {
        Ok(Some(WitnessOutcome {
            game: game.clone(),
            margin,
            payoff_phi: phi_sol.value,
            payoff_psi: psi_sol.value,
            iterations,
        }))
    } else {
        Ok(None)
    }
}

/// Full decision pipeline: hidden-marginal fast path, Choi feasibility,
/// witness search, honest gray zone.
pub fn compare(
    phi: &InformationStructure,
    psi: &InformationStructure,
    tol: f64,
) -> Result<ComparisonVerdict, CompareError> {
    compare_with(
        phi,
        psi,
        &CompareOptions {
            tol,
            ..CompareOptions::default()
        },
    )
}

pub fn compare_with(
    phi: &InformationStructure,
    psi: &InformationStructure,
    opts: &CompareOptions,
) -> Result<ComparisonVerdict, CompareError> {
    let (phi_c, psi_c) = canonical(phi, psi)?;
    let mut diagnostics = Diagnostics {
        mutual_information_phi: mutual_information(&phi_c)?,
        mutual_information_psi: mutual_information(&psi_c)?,
        ..Diagnostics::default()
    };

    // necessary condition: equal hidden marginals; a mismatch yields an
    // explicit single-action witness read off the sign of the difference
    let marg_phi = phi_c.hidden_marginal()?;
    let marg_psi = psi_c.hidden_marginal()?;
    let delta = HermitianOperator::hermitian_part(&(marg_psi.matrix() - marg_phi.matrix()));
    let marg_dist = trace_norm(&delta)?;
    if marg_dist > opts.tol {
        let sign = matops::hermitian_function(&delta, |l| {
            if l > 0.0 {
                1.0
            } else if l < 0.0 {
                -1.0
            } else {
                0.0
            }
        })?;
        let witness = Game::trivial(vec![sign])?;
        let phi_sol = crate::games::optimal_payoff(&phi_c, &witness, opts.tol.min(1e-9))?;
        let psi_sol = crate::games::optimal_payoff(&psi_c, &witness, opts.tol.min(1e-9))?;
        let margin = psi_sol.value - phi_sol.value;
        diagnostics.solver_gap_phi = Some(phi_sol.gap);
        diagnostics.solver_gap_psi = Some(psi_sol.gap);
        diagnostics.notes.push(format!(
            "hidden marginals differ by {marg_dist:.3e} in trace norm"
        ));
        return Ok(ComparisonVerdict::NotBetter {
            witness,
            margin,
            payoff_phi: phi_sol.value,
            payoff_psi: psi_sol.value,
            diagnostics,
        });
    }

    let report = cptp_feasibility_with(&phi_c, &psi_c, opts.tol, opts.feasibility_cap)?;
    diagnostics.feasibility_distance = Some(report.distance);
    diagnostics.feasibility_iterations = Some(report.iterations);

    if report.feasible {
        let choi = report.choi.expect("feasible report carries a choi");
        let channel = choi_to_kraus(&choi)?.renormalized()?;
        let transformed = crate::channels::apply_to_accessible(&phi_c, &channel)?;
        let reproduction = trace_distance(transformed.matrix(), psi_c.matrix())?;
        diagnostics.notes.push(format!(
            "channel reproduces the target within {reproduction:.3e}"
        ));
        if reproduction <= 1e-6 {
            return Ok(ComparisonVerdict::Better {
                channel,
                diagnostics,
            });
        }
        diagnostics
            .notes
            .push("extracted channel failed the reproduction bound".into());
        return Ok(ComparisonVerdict::Indeterminate { diagnostics });
    }

    if report.distance <= 10.0 * opts.tol {
        diagnostics.notes.push(format!(
            "feasibility distance {:.3e} falls in the gray zone ({:.0e}, {:.0e}]",
            report.distance,
            opts.tol,
            10.0 * opts.tol
        ));
        return Ok(ComparisonVerdict::Indeterminate { diagnostics });
    }

    match find_witness(&phi_c, &psi_c, &opts.witness) {
        Ok(outcome) => {
            diagnostics.witness_iterations = Some(outcome.iterations);
            Ok(ComparisonVerdict::NotBetter {
                witness: outcome.game,
                margin: outcome.margin,
                payoff_phi: outcome.payoff_phi,
                payoff_psi: outcome.payoff_psi,
                diagnostics,
            })
        }
        Err(CompareError::NoWitnessFound {
            iterations,
            best_bound,
        }) => {
            diagnostics.witness_iterations = Some(iterations);
            diagnostics.notes.push(format!(
                "witness search exhausted its budget (best bound {best_bound:.3e})"
            ));
            Ok(ComparisonVerdict::Indeterminate { diagnostics })
        }
        Err(e) => Err(e),
    }
}

/// Row-stochastic matrix: the classical garbling.
#[derive(Clone, Debug)]
pub struct StochasticMatrix {
    entries: Vec<Vec<f64>>,
}

impl StochasticMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self, CompareError> {
        for row in &entries {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-10 || row.iter().any(|&v| v < -1e-12) {
                return Err(CompareError::State(StateError::NotClassical(format!(
                    "row sums to {sum}, expected 1"
                ))));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries.first().map_or(0, |r| r.len())
    }
}

/// Farkas-style certificate for classical non-domination: a game with one
/// action per target signal whose optimal payoffs separate q from p.
#[derive(Clone, Debug)]
pub struct ClassicalCertificate {
    /// payoffs[t][n]: payoff of action t when the hidden state is n.
    pub payoffs: Vec<Vec<f64>>,
    /// Guaranteed payoff advantage of q over p for this game.
    pub margin: f64,
}

#[derive(Clone, Debug)]
pub enum ClassicalComparison {
    Feasible(StochasticMatrix),
    Infeasible(ClassicalCertificate),
}

/// Classical garbling feasibility: is there a row-stochastic F with
/// q[n][t] = sum_s p[n][s] F[s][t]? Phase-1 simplex with Bland's rule.
pub fn classical_better(
    p: &ClassicalStructure,
    q: &ClassicalStructure,
    tol: f64,
) -> Result<ClassicalComparison, CompareError> {
    if p.hidden_count() != q.hidden_count() {
        return Err(CompareError::IndexSetMismatch(
            p.hidden_count(),
            q.hidden_count(),
        ));
    }
    let nn = p.hidden_count();
    let ns = p.signal_count();
    let nt = q.signal_count();
    let nvars = ns * nt;
    let mut a = Vec::with_capacity(ns + nn * nt);
    let mut b = Vec::with_capacity(ns + nn * nt);
    for s in 0..ns {
        let mut row = vec![0.0f64; nvars];
        for t in 0..nt {
            row[s * nt + t] = 1.0;
        }
        a.push(row);
        b.push(1.0);
    }
    for n in 0..nn {
        for t in 0..nt {
            let mut row = vec![0.0f64; nvars];
            for s in 0..ns {
                row[s * nt + t] = p.weight(n, s);
            }
            a.push(row);
            b.push(q.weight(n, t));
        }
    }
    let out = simplex::phase_one(&a, &b);
    if out.objective <= tol.max(1e-12) {
        let mut entries = vec![vec![0.0f64; nt]; ns];
        for s in 0..ns {
            for t in 0..nt {
                entries[s][t] = out.solution[s * nt + t].max(0.0);
            }
        }
        // renormalize the simplex roundoff away
        for row in entries.iter_mut() {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
        }
        let f = StochasticMatrix::new(entries)?;
        // residual check of the garbling identity
        let mut worst = 0.0f64;
        for n in 0..nn {
            for t in 0..nt {
                let lhs: f64 = (0..ns).map(|s| p.weight(n, s) * f.entries[s][t]).sum();
                worst = worst.max((lhs - q.weight(n, t)).abs());
            }
        }
        if worst > tol.max(1e-9) {
            return Err(CompareError::State(StateError::NotClassical(format!(
                "garbling residual {worst:.3e} exceeds tolerance"
            ))));
        }
        Ok(ClassicalComparison::Feasible(f))
    } else {
        // multipliers: the (n, t) block gives payoff functions; normalize to
        // unit sup norm
        let y = &out.multipliers;
        let mut payoffs = vec![vec![0.0f64; nn]; nt];
        let mut scale = 0.0f64;
        for n in 0..nn {
            for t in 0..nt {
                let v = y[ns + n * nt + t];
                payoffs[t][n] = v;
                scale = scale.max(v.abs());
            }
        }
        let scale = scale.max(1e-300);
        for row in payoffs.iter_mut() {
            for v in row.iter_mut() {
                *v /= scale;
            }
        }
        let margin = out.objective / scale;
        Ok(ClassicalComparison::Infeasible(ClassicalCertificate {
            payoffs,
            margin,
        }))
    }
}
