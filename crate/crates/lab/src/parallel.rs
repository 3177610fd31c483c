//! Rayon drivers over episodes and (row, seed) training jobs.
//!
//! Work items are pure functions of their inputs and results are collected in
//! input order, so these agree exactly with the sequential drivers in
//! `rrex_core::eval`.

use rayon::prelude::*;
use rrex_core::agent::{run_episode, AgentConfig};
use rrex_core::benchmark::{Dataset, Split};
use rrex_core::eval::{
    aggregate, judge_all, plan_rows, summarize_row, train_row, AblationConfig, AblationRow,
    SplitOutcome, SuccessRule,
};
use rrex_core::scorer::ScorerParams;
use rrex_core::Error;

use crate::error::Result;

pub fn evaluate_split(
    params: &ScorerParams,
    dataset: &Dataset,
    split: Split,
    agent: &AgentConfig,
    rule: SuccessRule,
) -> Result<SplitOutcome> {
    let (envs, episodes) = dataset.split(split);
    let results = episodes
        .par_iter()
        .map(|ep| run_episode(dataset.environment(ep.environment_id)?, ep, params, agent))
        .collect::<Result<Vec<_>, Error>>()?;
    let judgments = judge_all(&results, envs, episodes, rule)?;
    Ok(SplitOutcome {
        split,
        report: aggregate(&judgments),
        results,
        judgments,
    })
}

/// Per-(row, seed) outcomes kept for raw-result CSVs.
pub struct AblationRun {
    pub rows: Vec<AblationRow>,
    /// `outcomes[row][seed][split]`.
    pub outcomes: Vec<Vec<Vec<SplitOutcome>>>,
}

pub fn run_ablation(config: &AblationConfig, dataset: &Dataset) -> Result<AblationRun> {
    let plans = plan_rows(config)?;
    if plans.is_empty() {
        return Ok(AblationRun {
            rows: Vec::new(),
            outcomes: Vec::new(),
        });
    }
    if config.seeds.is_empty() {
        return Err(Error::Empty("seeds").into());
    }
    let owners: Vec<usize> = (0..plans.len())
        .map(|i| {
            plans[..i]
                .iter()
                .position(|p| p.same_training(&plans[i]))
                .unwrap_or(i)
        })
        .collect();
    let jobs: Vec<(usize, u64)> = owners
        .iter()
        .enumerate()
        .filter(|(i, o)| i == *o)
        .flat_map(|(i, _)| config.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let weights = jobs
        .par_iter()
        .map(|&(i, seed)| train_row(&plans[i], seed, dataset))
        .collect::<Result<Vec<_>, Error>>()?;
    let weights_for = |row: usize, seed: u64| {
        let k = jobs
            .iter()
            .position(|&(i, s)| i == owners[row] && s == seed)
            .expect("every owner is trained");
        &weights[k]
    };

    let mut rows = Vec::with_capacity(plans.len());
    let mut outcomes = Vec::with_capacity(plans.len());
    for (r, plan) in plans.iter().enumerate() {
        let per_seed = config
            .seeds
            .iter()
            .map(|&seed| {
                config
                    .splits
                    .iter()
                    .map(|&s| {
                        evaluate_split(
                            weights_for(r, seed),
                            dataset,
                            s,
                            &plan.agent,
                            config.success_rule,
                        )
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(summarize_row(plan, &config.seeds, &per_seed));
        outcomes.push(per_seed);
    }
    Ok(AblationRun { rows, outcomes })
}
