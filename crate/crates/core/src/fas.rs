//! Inexact-Newton smoothing and the two-level FAS cycle written for the
//! coarse correction `g_c`, with the true Galerkin coarse operator or an
//! assembled neural surrogate in the coarse loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::fem::{ExactSolution, FineOperator};
use crate::linsolve::{gmres, gmres_sparse, norm2, SparseMatrix};
use crate::mesh::{Subdomain, TransferOperators};
use crate::neural::TrainingConfig;
use crate::sampling::SampleSpec;
use crate::surrogate::{train_all, GlobalSurrogate};

/// How the coarse Newton stopping test is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoarseTolerance {
    /// `||r_c|| <= tol * ||rhs_c||`
    #[default]
    Relative,
    /// `||r_c|| <= tol`
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FasConfig {
    /// Scale of the uniform perturbation added to the exact solution for `u0`.
    pub tau: f64,
    /// Fine GMRES relative tolerance.
    pub fine_gmres_tol: f64,
    /// Fine inexact Newton steps per cycle.
    pub fine_newton_steps: usize,
    /// Fine Newton stops once the residual has dropped by this factor within a pass.
    pub fine_newton_tol: f64,
    pub fine_gmres_max_iter: usize,
    pub coarse_gmres_tol: f64,
    /// Damping of the coarse Newton update.
    pub coarse_step: f64,
    pub coarse_gmres_max_iter: usize,
    pub coarse_newton_max: usize,
    pub coarse_newton_tol: f64,
    pub coarse_tolerance: CoarseTolerance,
    pub max_cycles: usize,
    /// FAS stops when `||F(u) - f|| <= tol * ||F(u0) - f||`.
    pub tol: f64,
}

impl Default for FasConfig {
    fn default() -> Self {
        Self {
            tau: 2.0,
            fine_gmres_tol: 1e-6,
            fine_newton_steps: 2,
            fine_newton_tol: 0.01,
            fine_gmres_max_iter: 4,
            coarse_gmres_tol: 1e-8,
            coarse_step: 0.1,
            coarse_gmres_max_iter: 10,
            coarse_newton_max: 5,
            coarse_newton_tol: 1e-4,
            coarse_tolerance: CoarseTolerance::Relative,
            max_cycles: 10,
            tol: 1e-6,
        }
    }
}

/// Coarse step used with networks trained outside the solver.
pub const OUTSIDE_COARSE_STEP: f64 = 1e-4;

impl FasConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("fine_gmres_tol", self.fine_gmres_tol),
            ("fine_newton_tol", self.fine_newton_tol),
            ("coarse_gmres_tol", self.coarse_gmres_tol),
            ("coarse_newton_tol", self.coarse_newton_tol),
            ("tol", self.tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        let caps = [
            ("fine_newton_steps", self.fine_newton_steps),
            ("fine_gmres_max_iter", self.fine_gmres_max_iter),
            ("coarse_gmres_max_iter", self.coarse_gmres_max_iter),
            ("coarse_newton_max", self.coarse_newton_max),
            ("max_cycles", self.max_cycles),
        ];
        for (name, v) in caps {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if !(self.coarse_step > 0.0 && self.coarse_step <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "coarse_step must lie in (0, 1], got {}",
                self.coarse_step
            )));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("tau must be non-negative, got {}", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum CoarseOperatorKind {
    /// Galerkin `P^T F(P .)` evaluated exactly.
    True,
    /// Networks trained before the solve.
    Pretrained(GlobalSurrogate),
    /// Networks trained on a box shifted to the first coarse iterate.
    TrainInside { spec: SampleSpec, training: TrainingConfig },
}

impl CoarseOperatorKind {
    /// Shifted box of half-width 0.05, ball radius 0.005, 10 x 50 draws.
    pub fn train_inside_default() -> Self {
        CoarseOperatorKind::TrainInside {
            spec: SampleSpec {
                box_half_width: 0.05,
                ball_radius: 0.005,
                box_draws: 10,
                ball_draws: 50,
            },
            training: TrainingConfig::default(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CoarseOperatorKind::True => "true",
            CoarseOperatorKind::Pretrained(_) => "outside",
            CoarseOperatorKind::TrainInside { .. } => "inside",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord {
    pub coarse_iterations: usize,
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FasReport {
    pub cycles: Vec<CycleRecord>,
    pub converged: bool,
    /// `||F(u0) - f||`
    pub initial_residual: f64,
    /// Seed of the initial perturbation, when one was drawn.
    pub seed: Option<u64>,
}

impl FasReport {
    pub fn num_cycles(&self) -> usize {
        self.cycles.len()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.cycles.last().map(|c| c.relative_residual)
    }
}

/// `u* + tau * xi` with `xi` uniform in (-1, 1) per component.
pub fn initial_guess(exact: &[f64], tau: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    exact
        .iter()
        .map(|&v| v + tau * rng.random_range(-1.0..1.0))
        .collect()
}

fn residual(op: &FineOperator, u: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    let fu = op.apply(u)?;
    Ok(f.iter().zip(&fu).map(|(a, b)| a - b).collect())
}

/// Fine-level inexact Newton with unit steps. A GMRES solve that does not
/// reach its tolerance is still used.
pub fn newton_smooth(op: &FineOperator, u: &mut [f64], f: &[f64], cfg: &FasConfig) -> Result<()> {
    check_len("newton_smooth u", op.num_dofs(), u.len())?;
    check_len("newton_smooth f", op.num_dofs(), f.len())?;
    let mut r = residual(op, u, f)?;
    let start = norm2(&r);
    for _ in 0..cfg.fine_newton_steps {
        let rn = norm2(&r);
        if rn == 0.0 || rn <= cfg.fine_newton_tol * start && rn < start {
            break;
        }
        let j = op.jacobian(u)?;
        let y = gmres_sparse(&j, &r, &vec![0.0; r.len()], cfg.fine_gmres_tol, cfg.fine_gmres_max_iter)?.solution;
        for (ui, yi) in u.iter_mut().zip(&y) {
            *ui += yi;
        }
        r = residual(op, u, f)?;
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fine iterate"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseSolve {
    pub correction: Vec<f64>,
    /// Damped Newton updates performed.
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Damped Newton on `G_c(g) = rhs` with the Jacobian `jc` frozen, starting
/// from `g = 0`. Convergence is tested after each update.
pub fn coarse_solve<G>(g_op: G, jc: &SparseMatrix, rhs: &[f64], cfg: &FasConfig) -> Result<CoarseSolve>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = rhs.len();
    check_len("coarse Jacobian", n, jc.nrows())?;
    let rhs_norm = norm2(rhs);
    let mut g = vec![0.0; n];
    if rhs_norm == 0.0 {
        return Ok(CoarseSolve {
            correction: g,
            iterations: 0,
            residual_norm: 0.0,
        });
    }
    let threshold = match cfg.coarse_tolerance {
        CoarseTolerance::Relative => cfg.coarse_newton_tol * rhs_norm,
        CoarseTolerance::Absolute => cfg.coarse_newton_tol,
    };
    let coarse_residual = |g: &[f64]| -> Result<Vec<f64>> {
        let gv = g_op(g)?;
        check_len("coarse operator output", n, gv.len())?;
        Ok(rhs.iter().zip(&gv).map(|(a, b)| a - b).collect())
    };
    let mut r = coarse_residual(&g)?;
    let mut iterations = 0;
    for _ in 0..cfg.coarse_newton_max {
        let y = gmres(
            |x, out| jc.mul_vec_into(x, out),
            &r,
            &vec![0.0; n],
            cfg.coarse_gmres_tol,
            cfg.coarse_gmres_max_iter,
        )?
        .solution;
        for (gi, yi) in g.iter_mut().zip(&y) {
            *gi += cfg.coarse_step * yi;
        }
        iterations += 1;
        r = coarse_residual(&g)?;
        if norm2(&r) <= threshold {
            break;
        }
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("coarse correction"));
    }
    Ok(CoarseSolve {
        correction: g,
        iterations,
        residual_norm: norm2(&r),
    })
}

/// Trains one network per subdomain on `u_c0|_T + [-a, a]^4`.
pub fn train_inside_hook(
    op: &FineOperator,
    subdomains: &[Subdomain],
    u_c0: &[f64],
    spec: &SampleSpec,
    training: &TrainingConfig,
) -> Result<GlobalSurrogate> {
    train_all(op, subdomains, Some(u_c0), spec, training)
}

/// Two-level FAS from the initial iterate `u0`. Non-convergence is reported
/// through `FasReport::converged`, not as an error.
pub fn tl_fas(
    op: &FineOperator,
    transfer: &TransferOperators,
    subdomains: &[Subdomain],
    f: &[f64],
    u0: &[f64],
    kind: &CoarseOperatorKind,
    cfg: &FasConfig,
) -> Result<(Vec<f64>, FasReport)> {
    cfg.validate()?;
    let n = op.num_dofs();
    check_len("tl_fas f", n, f.len())?;
    check_len("tl_fas u0", n, u0.len())?;
    check_len("transfer fine size", n, transfer.num_fine())?;
    if let CoarseOperatorKind::Pretrained(s) = kind {
        if s.locals.len() != subdomains.len() {
            return Err(Error::InvalidConfig(format!(
                "pretrained surrogate has {} networks for {} subdomains",
                s.locals.len(),
                subdomains.len()
            )));
        }
    }

    let mut u = u0.to_vec();
    let initial = norm2(&residual(op, &u, f)?);
    let denom = if initial > 0.0 { initial } else { 1.0 };
    let mut inside: Option<GlobalSurrogate> = None;
    let mut report = FasReport {
        cycles: Vec::new(),
        converged: false,
        initial_residual: initial,
        seed: None,
    };

    for _ in 0..cfg.max_cycles {
        newton_smooth(op, &mut u, f, cfg)?;

        let j = op.jacobian(&u)?;
        let jc = SparseMatrix::galerkin(&transfer.pt, &j, &transfer.p);
        let u_c0 = transfer.project(&u)?;
        let rhs_c = transfer.restrict(&residual(op, &u, f)?)?;

        let solve = match kind {
            CoarseOperatorKind::True => {
                let base = op.galerkin_coarse_apply(transfer, &u_c0)?;
                coarse_solve(
                    |g| {
                        let ug: Vec<f64> = u_c0.iter().zip(g).map(|(a, b)| a + b).collect();
                        let v = op.galerkin_coarse_apply(transfer, &ug)?;
                        Ok(v.iter().zip(&base).map(|(a, b)| a - b).collect())
                    },
                    &jc,
                    &rhs_c,
                    cfg,
                )?
            }
            CoarseOperatorKind::Pretrained(s) => coarse_solve(|g| s.apply_global(&u_c0, g), &jc, &rhs_c, cfg)?,
            CoarseOperatorKind::TrainInside { spec, training } => {
                if inside.is_none() {
                    inside = Some(train_inside_hook(op, subdomains, &u_c0, spec, training)?);
                }
                let s = inside.as_ref().expect("trained above");
                coarse_solve(|g| s.apply_global(&u_c0, g), &jc, &rhs_c, cfg)?
            }
        };

        let du = transfer.prolong(&solve.correction)?;
        for (ui, di) in u.iter_mut().zip(&du) {
            *ui += di;
        }
        let rel = norm2(&residual(op, &u, f)?) / denom;
        if !rel.is_finite() {
            return Err(Error::NonFinite("fine residual"));
        }
        report.cycles.push(CycleRecord {
            coarse_iterations: solve.iterations,
            relative_residual: rel,
        });
        if rel * denom <= cfg.tol * initial {
            report.converged = true;
            break;
        }
    }
    Ok((u, report))
}

/// Runs FAS on the manufactured problem `f = F(I_h u*)` from
/// `u0 = I_h u* + tau * xi`, with `xi` drawn from `seed`.
pub fn solve_manufactured(
    op: &FineOperator,
    transfer: &TransferOperators,
    subdomains: &[Subdomain],
    exact: ExactSolution,
    kind: &CoarseOperatorKind,
    cfg: &FasConfig,
    seed: u64,
) -> Result<(Vec<f64>, FasReport)> {
    let u_star = op.interpolate(|x, y| exact.evaluate(x, y));
    let f = op.manufactured_rhs(|x, y| exact.evaluate(x, y));
    let u0 = initial_guess(&u_star, cfg.tau, seed);
    let (u, mut report) = tl_fas(op, transfer, subdomains, &f, &u0, kind, cfg)?;
    report.seed = Some(seed);
    Ok((u, report))
}
