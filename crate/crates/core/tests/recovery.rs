//! Simulate-and-fit checks: the sampler must recover known truths from
//! synthetic data at desk scale.

use uptake_core::hmc::{hmc_sample, HmcConfig};
use uptake_core::model::{
    parameter_names, simulate_dataset, CovariateDistribution, ModelInstance, ParameterVector,
    Posterior, PriorSpec, SimulationLayout,
};
use uptake_core::report::{random_intercept_ladder, summarize_posterior};
use uptake_core::survey::design::encode_design;

fn fit(
    truth: &ParameterVector,
    states: &[&str],
    per_state: usize,
    seed: u64,
) -> (uptake_core::report::PosteriorSummary, Vec<String>) {
    let layout = SimulationLayout {
        state_counts: states.iter().map(|s| (s.to_string(), per_state)).collect(),
        covariates: CovariateDistribution::default(),
    };
    let data = simulate_dataset(truth, &layout, seed).unwrap();
    let design = encode_design(&data).unwrap();
    let roster = design.roster().to_vec();
    let model = ModelInstance::new(design, PriorSpec::default()).unwrap();
    let target = Posterior::new(&model);
    let config = HmcConfig { chains: 2, iterations: 1200, seed, ..HmcConfig::default() };
    let chains = hmc_sample(&target, &config).unwrap();
    let summary = summarize_posterior(&chains, &parameter_names(&roster)).unwrap();
    (summary, roster)
}

#[test]
fn boosted_state_tops_the_intercept_ladder() {
    // alpha_MA = +1, every other intercept 0: after the fit MA must rank
    // first in the random-intercept ladder
    let states = ["AL", "CO", "GA", "KY", "MA", "NY", "OR", "TX"];
    let mut truth = ParameterVector::zeros(states.len());
    truth.beta[0] = -0.3;
    let ma = states.iter().position(|&s| s == "MA").unwrap();
    truth.alpha[ma] = 1.0;
    truth.log_sigma_alpha = 0.4f64.ln();

    let (summary, roster) = fit(&truth, &states, 400, 2024);
    let ladder = random_intercept_ladder(&summary, &roster).unwrap();
    assert_eq!(ladder.len(), states.len());
    assert_eq!(ladder[0].state, "MA", "ladder: {:?}", ladder);
    assert!(ladder[0].mean > ladder[1].mean);
}

#[test]
fn fixed_effects_recovered_within_intervals() {
    let states = ["AZ", "FL", "IA", "MN", "PA", "WA"];
    let mut truth = ParameterVector::zeros(states.len());
    truth.beta = [-0.74, 0.45, 1.24, 1.79, 0.39, 0.91, -0.3, 0.25, 0.43, 0.77, 0.04];
    truth.log_sigma_alpha = 0.3f64.ln();

    let (summary, _) = fit(&truth, &states, 500, 7);
    // the large education contrasts must be clearly recovered
    for (idx, tol) in [(2usize, 0.35), (3usize, 0.40)] {
        let row = &summary.rows[idx];
        assert!(
            (row.mean - truth.beta[idx]).abs() < tol,
            "{}: mean {} vs truth {}",
            row.name,
            row.mean,
            truth.beta[idx]
        );
        assert!(row.ci_low <= truth.beta[idx] && truth.beta[idx] <= row.ci_high, "{}", row.name);
    }
    let max_rhat = summary.max_rhat().unwrap();
    assert!(max_rhat < 1.1, "max rhat {max_rhat}");
}
