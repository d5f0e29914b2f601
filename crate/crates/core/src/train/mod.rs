//! Parameter-update strategies for the generator and discriminator.

mod adversarial;
mod config;
mod log;
mod mle;
mod mrt;
mod reinforce;
mod reward;

pub use adversarial::{adversarial_round, discriminator_epoch, disc_data, generator_phase, scored_samples, DiscData, RoundStats};
pub use config::{decode_limit, DiscMode, Schedule, TrainConfig};
pub use log::{LogRecord, TrainLog};
pub use mle::{mle_epoch, mle_step, per_token_loss, pretrain, pretrain_discriminator, pretrain_generator, PretrainReport};
pub use mrt::{expected_risk, mrt_risk_and_grad, mrt_step, MrtItem};
pub use reinforce::{orientator_only_step, reinforce_gradient, reinforce_step};
pub use reward::{BleuReward, CdrReward, Chrf3Reward, ConstantReward, DiscriminatorReward, RewardFunction};

/// Parallel training data: `(source, EOS-terminated target)`.
pub type Pair = (Vec<crate::TokenId>, Vec<crate::TokenId>);

/// Summary of one update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub mean_reward: Option<f64>,
    pub loss: f64,
    pub grad_norm: f64,
    pub reward_calls: usize,
}
