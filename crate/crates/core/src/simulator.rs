//! A small recommendation environment.
//!
//! Users carry a latent state. Before any recommendation they browse
//! organically for a geometric number of views; the per-item counts become
//! the context. Then `bandit_events_per_user` recommendations are shown with
//! the context frozen, and clicks follow a ground-truth model that the
//! oracles below evaluate exactly.
//!
//! Two user models are available:
//!
//! * `LatentGaussian`: `ω ~ N(0, I_L)`, each organic view is drawn from
//!   `softmax(Γω)` and `Pr(click | a) = σ(click_bias + click_scale · Γ_a·ω)`,
//!   where the item embeddings `Γ` (`K × L`, standard normal) are drawn once
//!   from the seed.
//! * `FiniteType`: a discrete user type with a configured prior, per-type
//!   organic item distribution and per-type click table. With a fixed
//!   session length the whole context space can be enumerated, which makes
//!   exact expectations available ([`Env::exact_policy_value_finite`]).
//!
//! The item embeddings depend only on `seed`. The user stream can be
//! re-seeded independently with [`Env::fork`] so that evaluation users never
//! coincide with training users while the world stays the same.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::domain::{ActionId, BanditEvent, Context, LogDataset, ParamVector};
use crate::features;
use crate::logging::{sample_action, PolicyError};
use crate::math;
use crate::policy::Policy;

/// Upper bound on the number of (type, context) states enumerated exactly.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

const USER_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulator config: {0}")]
    InvalidConfig(String),
    #[error("number of events must be at least one")]
    EmptyRequest,
    #[error("exact enumeration needs finite-type mode")]
    NotFiniteMode,
    #[error("exact enumeration needs a fixed organic session length")]
    NeedsFixedSession,
    #[error("context space has {states} states, above the enumeration budget")]
    EnumerationBudget { states: u128 },
    #[error("policy for {policy} items used in a {env} item environment")]
    PolicySize { policy: usize, env: usize },
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Per-type tables for the finite user model.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteTypeTable {
    /// Probability of each user type.
    pub prior: Vec<f64>,
    /// `organic[t][i]`: probability that an organic view of a type-`t` user
    /// lands on item `i`.
    pub organic: Vec<Vec<f64>>,
    /// `click[t][a]`: click probability when item `a` is recommended to a
    /// type-`t` user.
    pub click: Vec<Vec<f64>>,
}

impl FiniteTypeTable {
    pub fn num_types(&self) -> usize {
        self.prior.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimMode {
    LatentGaussian,
    FiniteType(FiniteTypeTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub num_items: usize,
    pub latent_dim: usize,
    /// Mean of the geometric organic session length (support starts at 1).
    pub organic_mean_session: f64,
    /// Overrides the geometric draw with a constant session length.
    pub fixed_session_length: Option<u32>,
    pub bandit_events_per_user: usize,
    /// Click logit offset.
    pub click_bias: f64,
    /// Multiplier on the embedding affinity `Γ_a·ω`.
    pub click_scale: f64,
    pub mode: SimMode,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_items: 10,
            latent_dim: 2,
            organic_mean_session: 10.0,
            fixed_session_length: None,
            bandit_events_per_user: 10,
            click_bias: -4.0,
            click_scale: 1.0,
            mode: SimMode::LatentGaussian,
            seed: 0,
        }
    }
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::InvalidConfig(msg.into())
}

fn check_distribution(name: &str, p: &[f64], len: usize) -> Result<(), SimError> {
    if p.len() != len {
        return Err(invalid(alloc::format!(
            "{name} has length {}, expected {len}",
            p.len()
        )));
    }
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(invalid(alloc::format!(
            "{name} has a negative or non-finite entry"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(alloc::format!("{name} sums to {total}")));
    }
    Ok(())
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.num_items < 2 {
            return Err(invalid("num_items must be at least 2"));
        }
        if self.latent_dim < 1 {
            return Err(invalid("latent_dim must be at least 1"));
        }
        if !(self.organic_mean_session >= 1.0) || !self.organic_mean_session.is_finite() {
            return Err(invalid("organic_mean_session must be at least 1"));
        }
        if self.fixed_session_length == Some(0) {
            return Err(invalid("fixed_session_length must be at least 1"));
        }
        if self.bandit_events_per_user < 1 {
            return Err(invalid("bandit_events_per_user must be at least 1"));
        }
        if !self.click_bias.is_finite() || !self.click_scale.is_finite() {
            return Err(invalid("click_bias and click_scale must be finite"));
        }
        if let SimMode::FiniteType(table) = &self.mode {
            let t = table.num_types();
            if t == 0 {
                return Err(invalid("finite_types needs at least one type"));
            }
            check_distribution("finite_types.prior", &table.prior, t)?;
            if table.organic.len() != t || table.click.len() != t {
                return Err(invalid("finite_types tables need one row per type"));
            }
            for row in &table.organic {
                check_distribution("finite_types.organic row", row, self.num_items)?;
            }
            for row in &table.click {
                if row.len() != self.num_items {
                    return Err(invalid(
                        "finite_types.click row length must equal num_items",
                    ));
                }
                if row.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
                    return Err(invalid("finite_types.click entries must lie in (0, 1)"));
                }
            }
        }
        Ok(())
    }
}

/// Hidden state of a sampled user.
#[derive(Debug, Clone, PartialEq)]
pub enum UserLatent {
    Gaussian(Vec<f64>),
    Type(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserSample {
    pub user_id: u64,
    pub latent: UserLatent,
    pub context: Context,
}

/// Outcome of a simulated A/B test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbOutcome {
    pub ctr: f64,
    pub stderr: f64,
    pub clicks: u64,
    pub events: u64,
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// One enumerated (type, context) state with its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextMass {
    pub user_type: usize,
    pub context: Context,
    pub probability: f64,
}

#[derive(Debug, Clone)]
pub struct Env {
    config: SimConfig,
    embeddings: Vec<f64>,
    rng: ChaCha8Rng,
    next_user: u64,
}

fn user_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(USER_STREAM);
    rng
}

fn categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last = i;
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    last
}

/// Geometric on {1, 2, ...} with the given mean.
fn geometric<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u32 {
    let p = 1.0 / mean;
    if p >= 1.0 {
        return 1;
    }
    // Inverse CDF: smallest s with 1 - (1-p)^s >= u.
    let u: f64 = rng.random();
    let s = math::log(1.0 - u) / math::log(1.0 - p);
    let s = libm::ceil(s);
    if s < 1.0 {
        1
    } else if s > f64::from(u32::MAX) {
        u32::MAX
    } else {
        s as u32
    }
}

impl Env {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut world = ChaCha8Rng::seed_from_u64(config.seed);
        let embeddings = (0..config.num_items * config.latent_dim)
            .map(|_| StandardNormal.sample(&mut world))
            .collect();
        let rng = user_rng(config.seed);
        Ok(Self {
            config,
            embeddings,
            rng,
            next_user: 0,
        })
    }

    /// Same world (config and embeddings), independent user stream.
    pub fn fork(&self, stream_seed: u64) -> Self {
        Self {
            config: self.config.clone(),
            embeddings: self.embeddings.clone(),
            rng: user_rng(stream_seed),
            next_user: 0,
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn num_items(&self) -> usize {
        self.config.num_items
    }

    /// Item embedding matrix `Γ`, row-major `K × L`.
    pub fn embeddings(&self) -> &[f64] {
        &self.embeddings
    }

    fn embedding(&self, item: usize) -> &[f64] {
        let l = self.config.latent_dim;
        &self.embeddings[item * l..(item + 1) * l]
    }

    /// Organic view distribution `softmax(Γω)` of a latent user.
    pub fn organic_probs(&self, omega: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.config.num_items)
            .map(|i| dot(self.embedding(i), omega))
            .collect();
        let mut probs = vec![0.0; logits.len()];
        math::softmax_into(&logits, &mut probs);
        probs
    }

    fn session_length(&mut self) -> u32 {
        match self.config.fixed_session_length {
            Some(s) => s,
            None => geometric(self.config.organic_mean_session, &mut self.rng),
        }
    }

    pub fn sample_user(&mut self) -> UserSample {
        let k = self.config.num_items;
        let (latent, organic) = match &self.config.mode {
            SimMode::LatentGaussian => {
                let omega: Vec<f64> = (0..self.config.latent_dim)
                    .map(|_| StandardNormal.sample(&mut self.rng))
                    .collect();
                let organic = self.organic_probs(&omega);
                (UserLatent::Gaussian(omega), organic)
            }
            SimMode::FiniteType(table) => {
                let t = categorical(&table.prior, &mut self.rng);
                (UserLatent::Type(t), table.organic[t].clone())
            }
        };
        let session = self.session_length();
        let mut context = Context::zeros(k);
        for _ in 0..session {
            context.increment(categorical(&organic, &mut self.rng));
        }
        let user_id = self.next_user;
        self.next_user += 1;
        UserSample {
            user_id,
            latent,
            context,
        }
    }

    /// Exact ground-truth click probability.
    pub fn click_prob(&self, user: &UserSample, action: ActionId) -> f64 {
        match (&user.latent, &self.config.mode) {
            (UserLatent::Gaussian(omega), _) => math::sigmoid(
                self.config.click_bias
                    + self.config.click_scale * dot(self.embedding(action.0), omega),
            ),
            (UserLatent::Type(t), SimMode::FiniteType(table)) => table.click[*t][action.0],
            (UserLatent::Type(_), SimMode::LatentGaussian) => {
                unreachable!("typed user in a latent-gaussian environment")
            }
        }
    }

    fn check_policy(&self, policy: &Policy) -> Result<(), SimError> {
        let size = match policy {
            Policy::Softmax(beta) | Policy::Greedy(beta) => beta.num_items(),
            Policy::Logging(_) => return Ok(()),
        };
        if size != self.config.num_items {
            return Err(SimError::PolicySize {
                policy: size,
                env: self.config.num_items,
            });
        }
        Ok(())
    }

    /// Logs exactly `n` bandit events played by `policy`.
    pub fn generate_logs(&mut self, policy: &Policy, n: usize) -> Result<LogDataset, SimError> {
        Ok(self.generate_logs_traced(policy, n)?.0)
    }

    /// As [`Env::generate_logs`], also returning the ground-truth click
    /// probability of every logged event.
    pub fn generate_logs_traced(
        &mut self,
        policy: &Policy,
        n: usize,
    ) -> Result<(LogDataset, Vec<f64>), SimError> {
        if n == 0 {
            return Err(SimError::EmptyRequest);
        }
        self.check_policy(policy)?;
        let per_user = self.config.bandit_events_per_user;
        let mut data = LogDataset::new(self.config.num_items);
        data.events.reserve(n);
        let mut truth = Vec::with_capacity(n);
        while data.len() < n {
            let user = self.sample_user();
            let probs = policy.probs(&user.context)?;
            for _ in 0..per_user.min(n - data.len()) {
                let (action, propensity) = sample_action(&probs, &mut self.rng)?;
                let p = self.click_prob(&user, action);
                truth.push(p);
                let click = self.rng.random::<f64>() < p;
                data.events.push(BanditEvent {
                    user_id: user.user_id,
                    context: user.context.clone(),
                    action,
                    click,
                    propensity,
                });
            }
        }
        Ok((data, truth))
    }

    /// Plays the greedy policy of `beta` for `n` events on fresh users.
    pub fn ab_test(&mut self, beta: &ParamVector, n: usize) -> Result<AbOutcome, SimError> {
        if n == 0 {
            return Err(SimError::EmptyRequest);
        }
        self.check_policy(&Policy::Greedy(beta.clone()))?;
        let per_user = self.config.bandit_events_per_user;
        let mut events = 0usize;
        let mut clicks = 0u64;
        while events < n {
            let user = self.sample_user();
            let action = features::greedy_action(&user.context, beta).map_err(PolicyError::from)?;
            let p = self.click_prob(&user, action);
            for _ in 0..per_user.min(n - events) {
                if self.rng.random::<f64>() < p {
                    clicks += 1;
                }
                events += 1;
            }
        }
        let ctr = clicks as f64 / n as f64;
        Ok(AbOutcome {
            ctr,
            stderr: math::sqrt(ctr * (1.0 - ctr) / n as f64),
            clicks,
            events: n as u64,
        })
    }

    /// Expected clicks per event of `policy`, averaged exactly over actions
    /// and clicks for `n_users` sampled users.
    pub fn true_policy_value(&mut self, policy: &Policy, n_users: usize) -> Result<f64, SimError> {
        Ok(self.true_policy_value_estimate(policy, n_users)?.mean)
    }

    /// As [`Env::true_policy_value`], with the Monte Carlo standard error
    /// over users.
    pub fn true_policy_value_estimate(
        &mut self,
        policy: &Policy,
        n_users: usize,
    ) -> Result<ValueEstimate, SimError> {
        if n_users == 0 {
            return Err(SimError::EmptyRequest);
        }
        self.check_policy(policy)?;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n_users {
            let user = self.sample_user();
            let probs = policy.probs(&user.context)?;
            let value: f64 = probs
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(a, &p)| p * self.click_prob(&user, ActionId(a)))
                .sum();
            sum += value;
            sum_sq += value * value;
        }
        let n = n_users as f64;
        let mean = sum / n;
        let var = if n_users > 1 {
            ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Ok(ValueEstimate {
            mean,
            stderr: math::sqrt(var / n),
        })
    }

    /// Every reachable (type, context) pair with its exact probability.
    ///
    /// Requires finite-type mode and a fixed session length.
    pub fn finite_context_distribution(&self) -> Result<Vec<ContextMass>, SimError> {
        let table = match &self.config.mode {
            SimMode::FiniteType(table) => table,
            SimMode::LatentGaussian => return Err(SimError::NotFiniteMode),
        };
        let session = self
            .config
            .fixed_session_length
            .ok_or(SimError::NeedsFixedSession)?;
        let k = self.config.num_items;
        let states = binomial(u128::from(session) + k as u128 - 1, k as u128 - 1)
            .saturating_mul(table.num_types() as u128);
        if states >= ENUMERATION_BUDGET {
            return Err(SimError::EnumerationBudget { states });
        }
        let compositions = compositions(session, k);
        let mut out = Vec::with_capacity(compositions.len() * table.num_types());
        for (t, organic) in table.organic.iter().enumerate() {
            for counts in &compositions {
                let probability = table.prior[t] * multinomial_pmf(counts, organic);
                if probability > 0.0 {
                    out.push(ContextMass {
                        user_type: t,
                        context: Context::new(counts.clone()),
                        probability,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Exact `E_X[Σ_a π(a|X) Pr(c|X, a)]` by enumerating the context space.
    pub fn exact_policy_value_finite(&self, policy: &Policy) -> Result<f64, SimError> {
        self.check_policy(policy)?;
        let table = match &self.config.mode {
            SimMode::FiniteType(table) => table,
            SimMode::LatentGaussian => return Err(SimError::NotFiniteMode),
        };
        let mut value = 0.0;
        for state in self.finite_context_distribution()? {
            let probs = policy.probs(&state.context)?;
            let inner: f64 = probs
                .iter()
                .zip(&table.click[state.user_type])
                .map(|(p, c)| p * c)
                .sum();
            value += state.probability * inner;
        }
        Ok(value)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// All vectors of `parts` non-negative integers summing to `total`.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn fill(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos + 1 == current.len() {
            current[pos] = remaining;
            out.push(current.clone());
            return;
        }
        for v in (0..=remaining).rev() {
            current[pos] = v;
            fill(remaining - v, pos + 1, current, out);
        }
    }
    let mut out = Vec::new();
    let mut current = vec![0; parts];
    fill(total, 0, &mut current, &mut out);
    out
}

fn multinomial_pmf(counts: &[u32], probs: &[f64]) -> f64 {
    let mut remaining: u32 = counts.iter().sum();
    let mut pmf = 1.0;
    for (&c, &p) in counts.iter().zip(probs) {
        pmf *= binomial(u128::from(remaining), u128::from(c)) as f64;
        pmf *= libm::pow(p, f64::from(c));
        remaining -= c;
    }
    pmf
}
