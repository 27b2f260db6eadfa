//! Per-subdomain neural surrogates of the local coarse delta-maps and their
//! assembly into a global coarse operator
//! `G(u_c, g_c) = sum_T I_T G_T(u_{c,T}, g_{c,T})`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::fem::{CoefficientModel, FineOperator};
use crate::mesh::{build_hierarchy, Subdomain};
use crate::neural::{relative_errors_of, train, Dataset, Mlp, TrainingConfig, TrainingReport};
use crate::sampling::{random_ball, random_box, sample_ball, sample_box, SampleSpec};
use crate::LOCAL_COARSE_DOFS;

type Local = [f64; LOCAL_COARSE_DOFS];

/// Anything that can evaluate `G_T(u_T, g_T)` on a subdomain.
pub trait LocalCoarseDelta: Sync {
    fn local_delta(&self, sub: &Subdomain, u: &Local, g: &Local) -> Local;
}

impl LocalCoarseDelta for FineOperator {
    fn local_delta(&self, sub: &Subdomain, u: &Local, g: &Local) -> Local {
        self.local_coarse_delta(sub, u, g).expect("local vectors have fixed length")
    }
}

/// Assembles `sum_T I_T G_T(u_T, g_T)` in subdomain order.
pub fn assemble_delta<M: LocalCoarseDelta + ?Sized>(
    model: &M,
    subdomains: &[Subdomain],
    u_c: &[f64],
    g_c: &[f64],
) -> Result<Vec<f64>> {
    let n = subdomains.first().map_or(0, |s| s.num_coarse_dofs);
    check_len("assembled delta u_c", n, u_c.len())?;
    check_len("assembled delta g_c", n, g_c.len())?;
    let mut out = vec![0.0; n];
    for sub in subdomains {
        let u = sub.restrict_local(u_c)?;
        let g = sub.restrict_local(g_c)?;
        sub.add_local(&mut out, &model.local_delta(sub, &u, &g));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSurrogate {
    pub subdomain_id: usize,
    pub net: Mlp,
    pub spec: SampleSpec,
    /// Centre of the training box (zero for outside training).
    pub box_center: Local,
}

impl LocalSurrogate {
    pub fn predict(&self, u: &Local, g: &Local) -> Local {
        let mut x = [0.0; 2 * LOCAL_COARSE_DOFS];
        x[..LOCAL_COARSE_DOFS].copy_from_slice(u);
        x[LOCAL_COARSE_DOFS..].copy_from_slice(g);
        let y = self.net.forward_unchecked(&x);
        y.try_into().expect("surrogate output width")
    }
}

/// One trained network per subdomain, indexed by subdomain id.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSurrogate {
    pub locals: Vec<LocalSurrogate>,
    pub subdomains: Vec<Subdomain>,
}

impl GlobalSurrogate {
    pub fn new(mut locals: Vec<LocalSurrogate>, subdomains: Vec<Subdomain>) -> Result<Self> {
        locals.sort_by_key(|l| l.subdomain_id);
        let covers = locals.len() == subdomains.len()
            && locals.iter().enumerate().all(|(i, l)| l.subdomain_id == i)
            && subdomains.iter().all(|s| s.id < locals.len());
        if !covers {
            return Err(Error::InvalidConfig(
                "surrogate must cover every subdomain exactly once".into(),
            ));
        }
        for l in &locals {
            if l.net.input_dim() != 2 * LOCAL_COARSE_DOFS || l.net.output_dim() != LOCAL_COARSE_DOFS {
                return Err(Error::InvalidConfig(format!(
                    "subdomain {} network has dims {:?}",
                    l.subdomain_id,
                    l.net.dims()
                )));
            }
        }
        Ok(Self { locals, subdomains })
    }

    pub fn apply_global(&self, u_c: &[f64], g_c: &[f64]) -> Result<Vec<f64>> {
        if u_c.iter().chain(g_c).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("surrogate input"));
        }
        assemble_delta(self, &self.subdomains, u_c, g_c)
    }
}

impl LocalCoarseDelta for GlobalSurrogate {
    fn local_delta(&self, sub: &Subdomain, u: &Local, g: &Local) -> Local {
        self.locals[sub.id].predict(u, g)
    }
}

/// Seed of subdomain `id` derived from a global seed (splitmix64 finalizer).
pub fn subdomain_seed(global: u64, id: usize) -> u64 {
    let mut z = global ^ (id as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `box_draws * ball_draws` rows `(u, g) -> G_T(u, g)` with `u` from the
/// Sobol box around `center` and `g` from the Sobol ball.
pub fn build_local_dataset<M: LocalCoarseDelta + ?Sized>(
    model: &M,
    sub: &Subdomain,
    center: &Local,
    spec: &SampleSpec,
) -> Result<Dataset> {
    spec.validate()?;
    let us = sample_box(center, spec.box_half_width, spec.box_draws)?;
    let gs = sample_ball(LOCAL_COARSE_DOFS, spec.ball_radius, spec.ball_draws)?;
    let mut inputs = Vec::with_capacity(us.len() * gs.len());
    let mut targets = Vec::with_capacity(us.len() * gs.len());
    for u in &us {
        let u: Local = u.as_slice().try_into().expect("box sample width");
        for g in &gs {
            let g: Local = g.as_slice().try_into().expect("ball sample width");
            let mut row = u.to_vec();
            row.extend_from_slice(&g);
            inputs.push(row);
            targets.push(model.local_delta(sub, &u, &g).to_vec());
        }
    }
    Dataset::new(inputs, targets)
}

/// Builds the dataset for one subdomain and trains its network.
pub fn train_local(
    op: &FineOperator,
    sub: &Subdomain,
    center: &Local,
    spec: &SampleSpec,
    cfg: &TrainingConfig,
) -> Result<(LocalSurrogate, TrainingReport)> {
    let data = build_local_dataset(op, sub, center, spec)?;
    let mut net = Mlp::new(&Mlp::surrogate_dims(LOCAL_COARSE_DOFS), cfg.seed);
    let report = train(&mut net, &data, cfg)?;
    Ok((
        LocalSurrogate {
            subdomain_id: sub.id,
            net,
            spec: *spec,
            box_center: *center,
        },
        report,
    ))
}

/// Trains every subdomain independently (in parallel). `center`, when given,
/// is a global coarse vector whose restriction shifts each local box.
/// `cfg.seed` is the global seed; each subdomain uses [`subdomain_seed`].
pub fn train_all(
    op: &FineOperator,
    subdomains: &[Subdomain],
    center: Option<&[f64]>,
    spec: &SampleSpec,
    cfg: &TrainingConfig,
) -> Result<GlobalSurrogate> {
    let locals = subdomains
        .par_iter()
        .map(|sub| {
            let c = match center {
                Some(c) => sub.restrict_local(c)?,
                None => [0.0; LOCAL_COARSE_DOFS],
            };
            let local_cfg = TrainingConfig {
                seed: subdomain_seed(cfg.seed, sub.id),
                ..*cfg
            };
            train_local(op, sub, &c, spec, &local_cfg)
                .map(|(s, _)| s)
                .map_err(|e| Error::Subdomain {
                    id: sub.id,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut subs = subdomains.to_vec();
    subs.sort_by_key(|s| s.id);
    GlobalSurrogate::new(locals, subs)
}

/// The `(K half-width, ball radius)` sequence of the single-subdomain accuracy tables.
pub const LOCAL_STUDY_PAIRS: [(f64, f64); 10] = [
    (1.0, 0.1),
    (1.0, 0.05),
    (1.0, 0.01),
    (1.0, 0.005),
    (0.1, 0.05),
    (0.1, 0.01),
    (0.1, 0.005),
    (0.05, 0.01),
    (0.05, 0.005),
    (0.01, 0.005),
];

/// The `(K half-width, ball radius)` columns of the global accuracy table.
pub const GLOBAL_STUDY_PAIRS: [(f64, f64); 3] = [(1.0, 0.1), (0.1, 0.01), (0.05, 0.005)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudySettings {
    pub coefficient: CoefficientModel,
    pub box_draws: usize,
    pub ball_draws: usize,
    /// Pseudo-random evaluation draws: `eval_box x eval_ball` examples.
    pub eval_box: usize,
    pub eval_ball: usize,
    pub training: TrainingConfig,
    pub eval_seed: u64,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self {
            coefficient: CoefficientModel::OnePlusUSquared,
            box_draws: 10,
            ball_draws: 50,
            eval_box: 10,
            eval_ball: 10,
            training: TrainingConfig::default(),
            eval_seed: 0x5eed_e7a1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub subdomains: usize,
    pub box_half_width: f64,
    pub ball_radius: f64,
    pub rel_l2: f64,
    pub rel_linf: f64,
}

/// Single-subdomain accuracy for each `(a, delta)` pair at coarsening `ratio`.
pub fn local_error_study(ratio: usize, pairs: &[(f64, f64)], settings: &StudySettings) -> Result<Vec<ErrorRow>> {
    let (h, subs) = build_hierarchy(1, ratio)?;
    let op = FineOperator::new(&h, settings.coefficient);
    let sub = &subs[0];
    pairs
        .par_iter()
        .enumerate()
        .map(|(row, &(a, delta))| {
            let spec = SampleSpec::new(a, delta, settings.box_draws, settings.ball_draws)?;
            let cfg = TrainingConfig {
                seed: subdomain_seed(settings.training.seed, row),
                ..settings.training
            };
            let (local, _) = train_local(&op, sub, &[0.0; LOCAL_COARSE_DOFS], &spec, &cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(subdomain_seed(settings.eval_seed, row));
            let us: Vec<Vec<f64>> = (0..settings.eval_box)
                .map(|_| random_box(&mut rng, &[0.0; LOCAL_COARSE_DOFS], a))
                .collect();
            let gs: Vec<Vec<f64>> = (0..settings.eval_ball)
                .map(|_| random_ball(&mut rng, LOCAL_COARSE_DOFS, delta))
                .collect();
            let (mut preds, mut targets) = (Vec::new(), Vec::new());
            for u in &us {
                let u: Local = u.as_slice().try_into().unwrap();
                for g in &gs {
                    let g: Local = g.as_slice().try_into().unwrap();
                    preds.push(local.predict(&u, &g).to_vec());
                    targets.push(op.local_delta(sub, &u, &g).to_vec());
                }
            }
            let e = relative_errors_of(&preds, &targets)?;
            Ok(ErrorRow {
                subdomains: 1,
                box_half_width: a,
                ball_radius: delta,
                rel_l2: e.l2,
                rel_linf: e.linf,
            })
        })
        .collect()
}

/// Global accuracy of the assembled surrogate on `subdomains_per_side^2`
/// subdomains for each `(a, delta)` pair.
pub fn global_error_study(
    subdomains_per_side: usize,
    ratio: usize,
    pairs: &[(f64, f64)],
    settings: &StudySettings,
) -> Result<Vec<ErrorRow>> {
    let (h, subs) = build_hierarchy(subdomains_per_side, ratio)?;
    let op = FineOperator::new(&h, settings.coefficient);
    let n = h.num_coarse();
    pairs
        .iter()
        .enumerate()
        .map(|(row, &(a, delta))| {
            let spec = SampleSpec::new(a, delta, settings.box_draws, settings.ball_draws)?;
            let cfg = TrainingConfig {
                seed: subdomain_seed(settings.training.seed, row),
                ..settings.training
            };
            let model = train_all(&op, &subs, None, &spec, &cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(subdomain_seed(settings.eval_seed, row));
            let zero = vec![0.0; n];
            let us: Vec<Vec<f64>> = (0..settings.eval_box).map(|_| random_box(&mut rng, &zero, a)).collect();
            let gs: Vec<Vec<f64>> = (0..settings.eval_ball)
                .map(|_| random_ball(&mut rng, n, delta))
                .collect();
            let (mut preds, mut targets) = (Vec::new(), Vec::new());
            for u in &us {
                for g in &gs {
                    preds.push(model.apply_global(u, g)?);
                    targets.push(assemble_delta(&op, &subs, u, g)?);
                }
            }
            let e = relative_errors_of(&preds, &targets)?;
            Ok(ErrorRow {
                subdomains: subs.len(),
                box_half_width: a,
                ball_radius: delta,
                rel_l2: e.l2,
                rel_linf: e.linf,
            })
        })
        .collect()
}
