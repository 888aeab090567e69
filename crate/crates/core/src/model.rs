//! The multilevel logistic regression posterior.
//!
//! Each binary response is Bernoulli with logit equal to a fixed-effect
//! linear predictor plus a state random intercept:
//!
//! ```text
//! logit(pi_i) = beta_0 + sum_k beta_k X_ki + alpha_{j[i]}
//! beta_k  ~ N(0, beta_scale^2)
//! alpha_j ~ N(0, sigma_alpha^2)          (shared scale, partial pooling)
//! sigma_alpha ~ HalfNormal(hyper_scale)
//! ```
//!
//! The scale is sampled on the log axis, so the free parameter vector is
//! fully unconstrained: 11 fixed effects, one intercept per state, and
//! `log_sigma_alpha` (with its Jacobian term included in the density).

use crate::hmc::Target;
use crate::math::{
    half_normal_logpdf, log1pexp, log1pexp_and_sigmoid, normal_logpdf_centered, sigmoid,
};
use crate::rng::substream;
use crate::survey::design::{DesignMatrix, FIXED_EFFECT_COUNT};
use crate::survey::{Education, Gender, Income, Race, SurveyDataset, SurveyRecord};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter dimension mismatch: expected {expected} random intercepts, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("row index {index} out of range for {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("prior scales must be positive and finite")]
    InvalidPrior,
    #[error("covariate distribution invalid: {0}")]
    InvalidDistribution(String),
}

/// Free parameters of the model on the unconstrained scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    /// Intercept followed by the ten indicator coefficients, logit scale.
    pub beta: [f64; FIXED_EFFECT_COUNT],
    /// One random intercept per roster state, logit scale.
    pub alpha: Vec<f64>,
    /// Log of the shared random-intercept scale.
    pub log_sigma_alpha: f64,
}

impl ParameterVector {
    pub fn zeros(state_count: usize) -> Self {
        ParameterVector {
            beta: [0.0; FIXED_EFFECT_COUNT],
            alpha: vec![0.0; state_count],
            log_sigma_alpha: 0.0,
        }
    }

    pub fn sigma_alpha(&self) -> f64 {
        self.log_sigma_alpha.exp()
    }

    /// Total free dimension: 11 + state count + 1.
    pub fn dim(&self) -> usize {
        FIXED_EFFECT_COUNT + self.alpha.len() + 1
    }

    /// Flat layout `[beta.., alpha.., log_sigma_alpha]` used by the sampler.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.beta);
        v.extend_from_slice(&self.alpha);
        v.push(self.log_sigma_alpha);
        v
    }

    pub fn from_flat(flat: &[f64], state_count: usize) -> Result<Self, ModelError> {
        if flat.len() != FIXED_EFFECT_COUNT + state_count + 1 {
            return Err(ModelError::DimensionMismatch {
                expected: state_count,
                got: flat.len().saturating_sub(FIXED_EFFECT_COUNT + 1),
            });
        }
        let mut beta = [0.0; FIXED_EFFECT_COUNT];
        beta.copy_from_slice(&flat[..FIXED_EFFECT_COUNT]);
        Ok(ParameterVector {
            beta,
            alpha: flat[FIXED_EFFECT_COUNT..flat.len() - 1].to_vec(),
            log_sigma_alpha: flat[flat.len() - 1],
        })
    }
}

/// Prior scales: one shared scale for every fixed effect and the half-normal
/// hyperprior scale for the random-intercept sd.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub beta_scale: f64,
    pub sigma_alpha_hyper_scale: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        // weakly informative on the logit scale
        PriorSpec { beta_scale: 5.0, sigma_alpha_hyper_scale: 2.5 }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if ok(self.beta_scale) && ok(self.sigma_alpha_hyper_scale) {
            Ok(())
        } else {
            Err(ModelError::InvalidPrior)
        }
    }
}

/// A design matrix paired with the priors: everything the posterior needs.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    design: DesignMatrix,
    prior: PriorSpec,
}

impl ModelInstance {
    pub fn new(design: DesignMatrix, prior: PriorSpec) -> Result<Self, ModelError> {
        prior.validate()?;
        Ok(ModelInstance { design, prior })
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn state_count(&self) -> usize {
        self.design.state_count()
    }

    /// Free dimension of the posterior.
    pub fn dim(&self) -> usize {
        FIXED_EFFECT_COUNT + self.state_count() + 1
    }

    fn check_dims(&self, params: &ParameterVector) -> Result<(), ModelError> {
        if params.alpha.len() != self.state_count() {
            return Err(ModelError::DimensionMismatch {
                expected: self.state_count(),
                got: params.alpha.len(),
            });
        }
        Ok(())
    }
}

/// Logit-scale linear predictor of one row.
pub fn linear_predictor(
    params: &ParameterVector,
    row_index: usize,
    model: &ModelInstance,
) -> Result<f64, ModelError> {
    model.check_dims(params)?;
    let design = model.design();
    if row_index >= design.n_rows() {
        return Err(ModelError::RowOutOfRange { index: row_index, rows: design.n_rows() });
    }
    let mut eta = params.beta[0] + params.alpha[design.state_index(row_index)];
    for k in design.active_coefficients(row_index) {
        eta += params.beta[k];
    }
    Ok(eta)
}

/// Expected response `exp(eta) / (1 + exp(eta))`, overflow-safe.
pub fn predict_probability(eta: f64) -> Result<f64, ModelError> {
    if !eta.is_finite() {
        return Err(ModelError::NonFinite("eta"));
    }
    Ok(sigmoid(eta))
}

// Internal flat-slice evaluation. `flat` is [beta, alpha, log_sigma_alpha];
// callers guarantee the length.
fn log_posterior_flat(model: &ModelInstance, flat: &[f64]) -> f64 {
    let p = model.state_count();
    let (beta, rest) = flat.split_at(FIXED_EFFECT_COUNT);
    let (alpha, tail) = rest.split_at(p);
    let u = tail[0];
    let sigma_alpha = u.exp();
    let design = model.design();

    let mut lp = 0.0;
    for i in 0..design.n_rows() {
        let mut eta = beta[0] + alpha[design.state_index(i)];
        for k in design.active_coefficients(i) {
            eta += beta[k];
        }
        // y*ln(pi) + (1-y)*ln(1-pi) = y*eta - ln(1+exp(eta))
        lp += f64::from(design.response(i)) * eta - log1pexp(eta);
    }
    for &b in beta {
        lp += normal_logpdf_centered(b, model.prior.beta_scale);
    }
    for &a in alpha {
        lp += normal_logpdf_centered(a, sigma_alpha);
    }
    // half-normal hyperprior plus the log-scale Jacobian
    lp += half_normal_logpdf(sigma_alpha, model.prior.sigma_alpha_hyper_scale);
    lp += u;
    lp
}

// Fused value-and-gradient evaluation; `grad` has the same layout as `flat`.
fn log_posterior_grad_flat(model: &ModelInstance, flat: &[f64], grad: &mut [f64]) -> f64 {
    let p = model.state_count();
    let (beta, rest) = flat.split_at(FIXED_EFFECT_COUNT);
    let (alpha, tail) = rest.split_at(p);
    let u = tail[0];
    let sigma_alpha = u.exp();
    let inv_var_alpha = (-2.0 * u).exp();
    let design = model.design();
    let prior = &model.prior;

    grad.fill(0.0);
    let (g_beta, g_rest) = grad.split_at_mut(FIXED_EFFECT_COUNT);
    let (g_alpha, g_tail) = g_rest.split_at_mut(p);

    let mut lp = 0.0;
    for i in 0..design.n_rows() {
        let j = design.state_index(i);
        let mut eta = beta[0] + alpha[j];
        for k in design.active_coefficients(i) {
            eta += beta[k];
        }
        let y = f64::from(design.response(i));
        let (log_norm, pi) = log1pexp_and_sigmoid(eta);
        lp += y * eta - log_norm;
        let resid = y - pi;
        g_beta[0] += resid;
        for k in design.active_coefficients(i) {
            g_beta[k] += resid;
        }
        g_alpha[j] += resid;
    }

    let inv_var_beta = 1.0 / (prior.beta_scale * prior.beta_scale);
    for (k, &b) in beta.iter().enumerate() {
        lp += normal_logpdf_centered(b, prior.beta_scale);
        g_beta[k] -= b * inv_var_beta;
    }
    let mut g_u = 0.0;
    for (j, &a) in alpha.iter().enumerate() {
        lp += normal_logpdf_centered(a, sigma_alpha);
        g_alpha[j] -= a * inv_var_alpha;
        g_u += a * a * inv_var_alpha - 1.0;
    }
    let s2 = prior.sigma_alpha_hyper_scale * prior.sigma_alpha_hyper_scale;
    lp += half_normal_logpdf(sigma_alpha, prior.sigma_alpha_hyper_scale);
    lp += u;
    g_u += -sigma_alpha * sigma_alpha / s2 + 1.0;
    g_tail[0] = g_u;
    lp
}

/// Joint log-density of data and priors (unnormalized posterior), including
/// the Jacobian of the log-scale transform.
pub fn log_posterior(params: &ParameterVector, model: &ModelInstance) -> Result<f64, ModelError> {
    model.check_dims(params)?;
    Ok(log_posterior_flat(model, &params.flatten()))
}

/// Analytic gradient of [`log_posterior`] in all `11 + p_s + 1` coordinates.
pub fn grad_log_posterior(
    params: &ParameterVector,
    model: &ModelInstance,
) -> Result<Vec<f64>, ModelError> {
    model.check_dims(params)?;
    let flat = params.flatten();
    let mut grad = vec![0.0; flat.len()];
    log_posterior_grad_flat(model, &flat, &mut grad);
    Ok(grad)
}

/// [`Target`] adapter exposing the posterior to the sampler.
pub struct Posterior<'a> {
    model: &'a ModelInstance,
}

impl<'a> Posterior<'a> {
    pub fn new(model: &'a ModelInstance) -> Self {
        Posterior { model }
    }
}

impl Target for Posterior<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn log_density(&self, position: &[f64]) -> f64 {
        log_posterior_flat(self.model, position)
    }

    fn log_density_grad(&self, position: &[f64], grad: &mut [f64]) -> f64 {
        log_posterior_grad_flat(self.model, position, grad)
    }
}

/// Parameter labels in flat order, with the fixed-effect block first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterNames {
    pub names: Vec<String>,
    /// Leading entries that are fixed effects (reported with odds ratios).
    pub fixed_count: usize,
}

/// Human-readable contrast descriptions for the fixed-effect block, aligned
/// with [`parameter_names`].
pub const FIXED_EFFECT_CONTRASTS: [&str; FIXED_EFFECT_COUNT] = [
    "intercept",
    "Associate's degree vs. High school graduate or less",
    "Bachelor's degree vs. High school graduate or less",
    "Graduate degree vs. High school graduate or less",
    "Black vs. White",
    "Asian vs. White",
    "Others vs. White",
    "$35,000 to $74,999 vs. Less than $35,000",
    "$75,000 to $149,999 vs. Less than $35,000",
    "$150,000 or above vs. Less than $35,000",
    "Female vs. Male",
];

/// Names for the flat parameter vector over a given roster.
pub fn parameter_names(roster: &[String]) -> ParameterNames {
    let mut names: Vec<String> = vec![
        "beta0_intercept".into(),
        "beta1_education_associate".into(),
        "beta2_education_bachelor".into(),
        "beta3_education_graduate".into(),
        "beta4_race_black".into(),
        "beta5_race_asian".into(),
        "beta6_race_other".into(),
        "beta7_income_35k_to_75k".into(),
        "beta8_income_75k_to_150k".into(),
        "beta9_income_over_150k".into(),
        "beta10_gender_female".into(),
    ];
    names.extend(roster.iter().map(|s| format!("alpha_{s}")));
    names.push("sigma_alpha".into());
    ParameterNames { names, fixed_count: FIXED_EFFECT_COUNT }
}

/// Per-level sampling probabilities for each covariate; each array must be a
/// probability distribution over its levels.
#[derive(Debug, Clone)]
pub struct CovariateDistribution {
    pub gender: [f64; 2],
    pub race: [f64; 4],
    pub education: [f64; 4],
    pub income: [f64; 4],
}

impl Default for CovariateDistribution {
    fn default() -> Self {
        CovariateDistribution {
            gender: [0.5; 2],
            race: [0.25; 4],
            education: [0.25; 4],
            income: [0.25; 4],
        }
    }
}

impl CovariateDistribution {
    fn validate_one(name: &str, p: &[f64]) -> Result<(), ModelError> {
        if p.iter().any(|&x| !(0.0..=1.0).contains(&x) || !x.is_finite()) {
            return Err(ModelError::InvalidDistribution(format!("{name} has an invalid probability")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ModelError::InvalidDistribution(format!("{name} sums to {total}, not 1")));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        Self::validate_one("gender", &self.gender)?;
        Self::validate_one("race", &self.race)?;
        Self::validate_one("education", &self.education)?;
        Self::validate_one("income", &self.income)
    }
}

/// How many records to generate per state, plus the covariate mix.
#[derive(Debug, Clone)]
pub struct SimulationLayout {
    /// (state code, record count); codes are sorted internally.
    pub state_counts: Vec<(String, usize)>,
    pub covariates: CovariateDistribution,
}

fn draw_level<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Draws a synthetic dataset from the generative model: covariates from the
/// layout's distribution, responses Bernoulli at the model probability.
/// Deterministic for a fixed seed.
///
/// `truth.alpha` must align with the layout's states in sorted order.
pub fn simulate_dataset(
    truth: &ParameterVector,
    layout: &SimulationLayout,
    seed: u64,
) -> Result<SurveyDataset, ModelError> {
    layout.covariates.validate()?;
    let mut counts = layout.state_counts.clone();
    counts.sort_by(|a, b| a.0.cmp(&b.0));
    if truth.alpha.len() != counts.len() {
        return Err(ModelError::DimensionMismatch { expected: counts.len(), got: truth.alpha.len() });
    }

    let mut rng = substream(seed, "simulate", 0);
    let cov = &layout.covariates;
    let mut records = Vec::new();
    for (j, (state, n)) in counts.iter().enumerate() {
        for _ in 0..*n {
            let education = Education::ALL[draw_level(&mut rng, &cov.education)];
            let race = Race::ALL[draw_level(&mut rng, &cov.race)];
            let income = Income::ALL[draw_level(&mut rng, &cov.income)];
            let gender = Gender::ALL[draw_level(&mut rng, &cov.gender)];

            let mut eta = truth.beta[0] + truth.alpha[j];
            if education.level() > 0 {
                eta += truth.beta[education.level()];
            }
            if race.level() > 0 {
                eta += truth.beta[3 + race.level()];
            }
            if income.level() > 0 {
                eta += truth.beta[6 + income.level()];
            }
            if gender.level() > 0 {
                eta += truth.beta[10];
            }
            let pi = sigmoid(eta);
            let y = u8::from(rng.random::<f64>() < pi);
            records.push(SurveyRecord {
                gender,
                race,
                education,
                income,
                state: state.clone(),
                vaccinated: y,
            });
        }
    }
    Ok(SurveyDataset::from_records(records, 0))
}

/// Draws state intercepts `alpha_j ~ N(0, sigma_alpha)` for a truth vector.
pub fn draw_random_intercepts(state_count: usize, sigma_alpha: f64, seed: u64) -> Vec<f64> {
    let mut rng = substream(seed, "truth-alpha", 0);
    (0..state_count)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma_alpha * z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::design::encode_design;
    use crate::survey::states::default_roster;
    use rand::SeedableRng;

    fn one_row_model(record: SurveyRecord) -> ModelInstance {
        let ds = SurveyDataset::from_records(vec![record], 0);
        ModelInstance::new(encode_design(&ds).unwrap(), PriorSpec::default()).unwrap()
    }

    fn base_record(state: &str, y: u8) -> SurveyRecord {
        SurveyRecord {
            gender: Gender::Male,
            race: Race::White,
            education: Education::HighSchoolOrLess,
            income: Income::Under35k,
            state: state.into(),
            vaccinated: y,
        }
    }

    #[test]
    fn linear_predictor_examples() {
        let model = one_row_model(base_record("TX", 1));
        let mut params = ParameterVector::zeros(1);
        assert_eq!(linear_predictor(&params, 0, &model).unwrap(), 0.0);

        params.beta[0] = -0.74;
        assert!((linear_predictor(&params, 0, &model).unwrap() + 0.74).abs() < 1e-15);

        // add a Bachelor indicator: beta2 enters
        let mut rec = base_record("TX", 1);
        rec.education = Education::Bachelor;
        let model2 = one_row_model(rec);
        params.beta[2] = 1.24;
        let eta = linear_predictor(&params, 0, &model2).unwrap();
        assert!((eta - 0.50).abs() < 1e-12, "eta {eta}");
    }

    #[test]
    fn linear_predictor_row_out_of_range() {
        let model = one_row_model(base_record("TX", 1));
        let params = ParameterVector::zeros(1);
        assert!(matches!(
            linear_predictor(&params, 1, &model),
            Err(ModelError::RowOutOfRange { index: 1, rows: 1 })
        ));
    }

    #[test]
    fn predict_probability_examples() {
        assert_eq!(predict_probability(0.0).unwrap(), 0.5);
        assert!((predict_probability(-0.74).unwrap() - 0.323).abs() < 5e-4);
        assert!((predict_probability(0.50).unwrap() - 0.6225).abs() < 5e-4);
        assert!(predict_probability(f64::NAN).is_err());
        assert!(predict_probability(f64::INFINITY).is_err());
    }

    #[test]
    fn prior_only_reduction_matches_closed_form() {
        let design = DesignMatrix::empty(default_roster());
        let p_s = design.state_count() as f64;
        let model = ModelInstance::new(design, PriorSpec::default()).unwrap();
        let params = ParameterVector::zeros(49);
        let lp = log_posterior(&params, &model).unwrap();

        // independent closed form at beta = alpha = 0, log_sigma_alpha = 0:
        // 11 * ln N(0; 0, 5^2) + p_s * ln N(0; 0, 1) + ln HN(1; 2.5) + 0
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        let expected = 11.0 * (-0.5 * ln2pi - 5.0f64.ln())
            + p_s * (-0.5 * ln2pi)
            + (0.5 * (2.0 / std::f64::consts::PI).ln() - 2.5f64.ln() - 1.0 / (2.0 * 6.25));
        assert!((lp - expected).abs() < 1e-10, "lp {lp} vs {expected}");
    }

    #[test]
    fn single_row_adds_ln_half() {
        let model = one_row_model(base_record("TX", 1));
        let params = ParameterVector::zeros(1);
        let with_data = log_posterior(&params, &model).unwrap();
        let prior_model = ModelInstance::new(
            DesignMatrix::empty(vec!["TX".into()]),
            PriorSpec::default(),
        )
        .unwrap();
        let prior_only = log_posterior(&params, &prior_model).unwrap();
        assert!((with_data - prior_only - 0.5f64.ln()).abs() < 1e-12);
    }

    // Straightforward re-implementation used as an oracle: materialized
    // indicator columns, naive logistic terms, textbook prior densities.
    fn naive_log_posterior(params: &ParameterVector, model: &ModelInstance) -> f64 {
        let design = model.design();
        let prior = model.prior();
        let sigma = params.log_sigma_alpha.exp();
        let mut total = 0.0;
        for i in 0..design.n_rows() {
            let x = design.indicator_row(i);
            let mut eta = params.beta[0];
            for (k, &xk) in x.iter().enumerate() {
                eta += params.beta[k + 1] * xk;
            }
            eta += params.alpha[design.state_index(i)];
            let pi = 1.0 / (1.0 + (-eta).exp());
            total += if design.response(i) == 1 { pi.ln() } else { (1.0 - pi).ln() };
        }
        let normal = |x: f64, s: f64| {
            -((2.0 * std::f64::consts::PI).sqrt() * s).ln() - x * x / (2.0 * s * s)
        };
        for &b in &params.beta {
            total += normal(b, prior.beta_scale);
        }
        for &a in &params.alpha {
            total += normal(a, sigma);
        }
        let s = prior.sigma_alpha_hyper_scale;
        total += (2.0 / (std::f64::consts::PI * s * s)).sqrt().ln() - sigma * sigma / (2.0 * s * s);
        total += params.log_sigma_alpha;
        total
    }

    fn random_instance(
        rng: &mut rand_chacha::ChaCha12Rng,
        n: usize,
        p_s: usize,
    ) -> (ModelInstance, ParameterVector) {
        let states: Vec<String> = (0..p_s).map(|i| format!("S{i:02}")).collect();
        let mut records = Vec::with_capacity(n);
        for _ in 0..n {
            records.push(SurveyRecord {
                gender: Gender::ALL[rng.random_range(0..2)],
                race: Race::ALL[rng.random_range(0..4)],
                education: Education::ALL[rng.random_range(0..4)],
                income: Income::ALL[rng.random_range(0..4)],
                state: states[rng.random_range(0..p_s)].clone(),
                vaccinated: u8::from(rng.random::<f64>() < 0.5),
            });
        }
        let ds = SurveyDataset::from_records(records, 0);
        let model = ModelInstance::new(encode_design(&ds).unwrap(), PriorSpec::default()).unwrap();
        let p_eff = model.state_count();
        let params = ParameterVector {
            beta: std::array::from_fn(|_| rng.random_range(-2.0..2.0)),
            alpha: (0..p_eff).map(|_| rng.random_range(-1.5..1.5)).collect(),
            log_sigma_alpha: rng.random_range(-1.0..1.0),
        };
        (model, params)
    }

    #[test]
    fn log_posterior_matches_naive_oracle() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(20);
        for _ in 0..20 {
            let (model, params) = random_instance(&mut rng, 20, 4);
            let fast = log_posterior(&params, &model).unwrap();
            let slow = naive_log_posterior(&params, &model);
            let rel = (fast - slow).abs() / slow.abs().max(1.0);
            assert!(rel < 1e-10, "fast {fast} naive {slow}");
        }
    }

    #[test]
    fn gradient_hand_example() {
        // one row, Y = 1, base covariates, all params zero:
        // d/d beta0 = (1 - 0.5) * 1 = 0.5, prior gradient zero
        let model = one_row_model(base_record("TX", 1));
        let params = ParameterVector::zeros(1);
        let g = grad_log_posterior(&params, &model).unwrap();
        assert!((g[0] - 0.5).abs() < 1e-15);
        // alpha coordinate gets the same residual
        assert!((g[FIXED_EFFECT_COUNT] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gradient_zero_at_prior_mode_for_beta_and_alpha() {
        let design = DesignMatrix::empty(vec!["AZ".into(), "CO".into(), "UT".into()]);
        let model = ModelInstance::new(design, PriorSpec::default()).unwrap();
        for log_sigma in [-1.0, 0.0, 0.7] {
            let params = ParameterVector {
                beta: [0.0; FIXED_EFFECT_COUNT],
                alpha: vec![0.0; 3],
                log_sigma_alpha: log_sigma,
            };
            let g = grad_log_posterior(&params, &model).unwrap();
            for (c, &gc) in g.iter().take(FIXED_EFFECT_COUNT + 3).enumerate() {
                assert_eq!(gc, 0.0, "coordinate {c} at log_sigma {log_sigma}");
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(77);
        for _ in 0..10 {
            let (model, params) = random_instance(&mut rng, 30, 5);
            let grad = grad_log_posterior(&params, &model).unwrap();
            let mut flat = params.flatten();
            let h = 1e-5;
            for c in 0..flat.len() {
                let orig = flat[c];
                flat[c] = orig + h;
                let up = log_posterior_flat(&model, &flat);
                flat[c] = orig - h;
                let down = log_posterior_flat(&model, &flat);
                flat[c] = orig;
                let fd = (up - down) / (2.0 * h);
                let rel = (grad[c] - fd).abs() / fd.abs().max(1.0);
                assert!(rel < 1e-5, "coordinate {c}: analytic {} fd {fd}", grad[c]);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_detected() {
        let model = one_row_model(base_record("TX", 1));
        let params = ParameterVector::zeros(3);
        assert!(matches!(
            log_posterior(&params, &model),
            Err(ModelError::DimensionMismatch { expected: 1, got: 3 })
        ));
        assert!(grad_log_posterior(&params, &model).is_err());
    }

    #[test]
    fn simulate_zero_records_gives_empty_dataset() {
        let layout = SimulationLayout {
            state_counts: vec![("MA".into(), 0), ("TX".into(), 0)],
            covariates: CovariateDistribution::default(),
        };
        let truth = ParameterVector::zeros(2);
        let ds = simulate_dataset(&truth, &layout, 1).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn simulate_saturated_logit_gives_all_ones() {
        let layout = SimulationLayout {
            state_counts: vec![("MA".into(), 200)],
            covariates: CovariateDistribution::default(),
        };
        let mut truth = ParameterVector::zeros(1);
        truth.beta[0] = 25.0;
        let ds = simulate_dataset(&truth, &layout, 3).unwrap();
        assert!(ds.records.iter().all(|r| r.vaccinated == 1));
    }

    #[test]
    fn simulate_balanced_logit_concentrates_at_half() {
        let n = 10_000;
        let layout = SimulationLayout {
            state_counts: vec![("MA".into(), n)],
            covariates: CovariateDistribution::default(),
        };
        let truth = ParameterVector::zeros(1);
        let ds = simulate_dataset(&truth, &layout, 9).unwrap();
        let mean =
            ds.records.iter().map(|r| f64::from(r.vaccinated)).sum::<f64>() / n as f64;
        let bound = 3.0 * (0.25 / n as f64).sqrt();
        assert!((mean - 0.5).abs() < bound, "mean {mean}, bound {bound}");
    }

    #[test]
    fn simulate_is_deterministic_and_validates() {
        let layout = SimulationLayout {
            state_counts: vec![("MA".into(), 50), ("AL".into(), 50)],
            covariates: CovariateDistribution::default(),
        };
        let truth = ParameterVector::zeros(2);
        let a = simulate_dataset(&truth, &layout, 11).unwrap();
        let b = simulate_dataset(&truth, &layout, 11).unwrap();
        assert_eq!(a, b);

        let mut bad = layout.clone();
        bad.covariates.race = [0.5, 0.5, 0.5, 0.5];
        assert!(matches!(
            simulate_dataset(&truth, &bad, 11),
            Err(ModelError::InvalidDistribution(_))
        ));
    }

    #[test]
    fn parameter_names_cover_flat_layout() {
        let roster = default_roster();
        let names = parameter_names(&roster);
        assert_eq!(names.names.len(), 11 + 49 + 1);
        assert_eq!(names.fixed_count, 11);
        assert_eq!(names.names[0], "beta0_intercept");
        assert_eq!(names.names[2], "beta2_education_bachelor");
        assert_eq!(names.names[11], "alpha_AL");
        assert_eq!(names.names[60], "sigma_alpha");
    }
}
