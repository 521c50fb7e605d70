//! States → optimal inconclusive measurement → dilation → preprocessing →
//! exact checks, with optional sampling.

use std::collections::BTreeMap;

use crate::config::{FailureProb, RunConfig};
use crate::dilation::{build_dilation, verify_dilation, DilationResiduals, ProjectiveDilation};
use crate::error::Result;
use crate::measurement::{
    minimum_error, solve_oim, srm, unamb_threshold, validate_povm, MeResult, OimSolution, ME_CERTIFICATE_TOLERANCE,
};
use crate::numerics::Tolerances;
use crate::protocol::{
    build_bipartite_entangled, build_bipartite_separable, build_multipartite, check_secrecy, equivalence_deviation,
    preprocess, receiver_povm, CompositeState, MapKind, PreprocessMap, ReceiverPovm,
};
use crate::report::{ExactReport, Meta, Residual, RunReport, RNG_ALGORITHM};
use crate::sim::monte_carlo_all;
use crate::states::AguStateSet;

/// Tolerance on how far a sampled solver value may exceed the optimum found.
pub const DOMINANCE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Pipeline {
    pub config: RunConfig,
    pub tol: Tolerances,
    pub set: AguStateSet,
    pub unamb_threshold: f64,
    pub oim: OimSolution,
    pub me: MeResult,
    pub dilation: ProjectiveDilation,
    pub map: PreprocessMap,
    pub receiver: ReceiverPovm,
    pub states: Vec<CompositeState>,
}

impl Pipeline {
    pub fn build(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let tol = config.tolerances();
        let set = config.build_states()?;
        let p_u = unamb_threshold(&set, &tol)?;
        let p = match config.failure_prob {
            FailureProb::Value(p) => p,
            FailureProb::Named(_) => p_u,
        };
        let oim = solve_oim(&set, p, &tol)?;
        let me = minimum_error(&set, &tol)?;
        let detectors = if me.povm.vectors().is_some() {
            me.povm.clone()
        } else {
            srm(&set, &tol)?
        };
        let dilation = build_dilation(&set, &oim, &detectors, &tol)?;
        let map = match (config.preprocessing, config.observers) {
            (MapKind::Separable, _) => build_bipartite_separable(&dilation)?,
            (MapKind::Entangled, 2) => build_bipartite_entangled(&dilation)?,
            (MapKind::Entangled, n) => build_multipartite(&dilation, n, config.dimension_cap)?,
        };
        if map.composite_dim() > config.dimension_cap {
            return Err(crate::Error::DimensionCap {
                dim: map.composite_dim(),
                cap: config.dimension_cap,
            });
        }
        let receiver = receiver_povm(&map);
        let states = preprocess(&map, &set, &dilation)?;
        Ok(Pipeline {
            config: config.clone(),
            tol,
            set,
            unamb_threshold: p_u,
            oim,
            me,
            dilation,
            map,
            receiver,
            states,
        })
    }

    /// `P[k|m]` of the receiver on the preprocessed states.
    pub fn receiver_table(&self) -> Result<Vec<Vec<f64>>> {
        self.states.iter().map(|s| self.receiver.probabilities(s)).collect()
    }

    pub fn exact(&self) -> Result<(ExactReport, BTreeMap<String, Residual>)> {
        let tol = self.config.tolerance;
        let table = self.receiver_table()?;
        let dil: DilationResiduals = verify_dilation(&self.dilation, &self.set, &self.oim)?;
        let secrecy = check_secrecy(&self.states)?;
        let equivalence = equivalence_deviation(&self.set, &self.dilation, &self.states, &self.receiver)?;
        let row_sums = table
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        let validity = validate_povm(&self.oim.povm, Some(self.set.rep()));
        let mm = table.len() as f64;
        let avg_correct = table.iter().enumerate().map(|(m, r)| r[m]).sum::<f64>() / mm;
        let avg_failure = table.iter().map(|r| r[r.len() - 1]).sum::<f64>() / mm;

        let mut residuals = BTreeMap::new();
        residuals.insert("dilation".to_string(), Residual::new(dil.max(), tol));
        residuals.insert("equivalence".to_string(), Residual::new(equivalence, tol));
        residuals.insert("me_optimality".to_string(), Residual::new(self.me.residual, ME_CERTIFICATE_TOLERANCE));
        residuals.insert("povm_validity".to_string(), Residual::new(validity, tol));
        residuals.insert("row_sums".to_string(), Residual::new(row_sums, tol));
        residuals.insert("secrecy".to_string(), Residual::new(secrecy, tol));
        if let Some(d) = &self.oim.certificate.dominance {
            residuals.insert(
                "dominance".to_string(),
                Residual::new(d.max_excess.max(0.0), DOMINANCE_TOLERANCE),
            );
        }

        let report = ExactReport {
            messages: self.set.len(),
            rank: self.set.rank(),
            dim: self.set.dim(),
            observers: self.map.n_observers(),
            preprocessing: self.map.kind(),
            composite_dim: self.map.composite_dim(),
            p_target: self.oim.p_target,
            p_achieved: self.oim.p_achieved,
            unamb_threshold: self.unamb_threshold,
            avg_correct,
            avg_failure,
            probabilities: table,
            oim_probabilities: self.oim.probs.rows().to_vec(),
            oim_method: self.oim.certificate.method,
            me_method: self.me.method,
            me_correct: self.me.correct,
            me_certified: self.me.certified,
            dilation: dil,
            secrecy,
            equivalence,
            me_residual: self.me.residual,
            dominance: self.oim.certificate.dominance.clone(),
        };
        Ok((report, residuals))
    }

    pub fn meta(&self) -> Meta {
        Meta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            rng_algorithm: RNG_ALGORITHM.to_string(),
            rng_seed: self.config.rng_seed,
            group_orders: self.config.group.orders.clone(),
            tolerance: self.config.tolerance,
        }
    }
}

/// Exact checks plus Monte Carlo when `config.trials > 0`.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport> {
    let pipeline = Pipeline::build(config)?;
    let (exact, residuals) = pipeline.exact()?;
    let monte_carlo = if config.trials > 0 {
        Some(monte_carlo_all(&pipeline, config.trials, config.rng_seed)?)
    } else {
        None
    };
    Ok(RunReport {
        exact,
        monte_carlo,
        attack: None,
        residuals,
        meta: pipeline.meta(),
    })
}

/// Exact checks only.
pub fn verify(config: &RunConfig) -> Result<RunReport> {
    let mut exact_only = config.clone();
    exact_only.trials = 0;
    run_pipeline(&exact_only)
}
