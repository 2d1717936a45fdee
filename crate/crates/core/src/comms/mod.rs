//! Inter-region links with fault injection.
//!
//! Every ordered pair of neighbouring regions has its own link. A link
//! applies one of three nonideal models to the angle values it carries:
//! additive Gaussian noise, sparse uniform bad data, or two-state
//! intermittent loss (a failed link delivers its last good payload).
//!
//! Draw pattern per link and iteration, all keyed by
//! `(seed, link, iteration, element, purpose)`:
//! - gaussian: one normal draw per element (none when `sigma == 0`);
//! - bad data: one trigger uniform per element (per message when
//!   `per_message`, keyed by element 0) and one magnitude uniform per
//!   element that fires;
//! - loss: one uniform per link.

mod rng;

pub use rng::{hash_words, mix64, KeyedRng, Purpose, Stream};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::ContractError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelModel {
    #[default]
    Ideal,
    Gaussian {
        /// Standard deviation in radians.
        sigma: f64,
    },
    BadData {
        /// Largest error magnitude in radians.
        r: f64,
        /// Probability per element and iteration.
        p_bad: f64,
        /// Draw one trigger per message instead of per element.
        #[serde(default)]
        per_message: bool,
    },
    IntermittentLoss {
        /// Per-iteration probability of moving from success to fail.
        lambda_f: f64,
        /// Per-iteration probability of moving from fail to success.
        lambda_r: f64,
        /// Both directions of a region pair share one loss state.
        #[serde(default)]
        symmetric: bool,
    },
}

impl ChannelModel {
    pub fn validate(&self) -> Result<(), ContractError> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ContractError::Invalid(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        match *self {
            ChannelModel::Ideal => Ok(()),
            ChannelModel::Gaussian { sigma } => {
                if sigma >= 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(ContractError::Invalid(format!("sigma must be non-negative, got {sigma}")))
                }
            }
            ChannelModel::BadData { r, p_bad, .. } => {
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(ContractError::Invalid(format!("R must be non-negative, got {r}")));
                }
                prob("p_bad", p_bad)
            }
            ChannelModel::IntermittentLoss { lambda_f, lambda_r, .. } => {
                prob("lambda_f", lambda_f)?;
                prob("lambda_r", lambda_r)
            }
        }
    }

    /// Short label for reports, e.g. `gaussian(sigma=0.001)`.
    pub fn label(&self) -> String {
        match *self {
            ChannelModel::Ideal => "ideal".into(),
            ChannelModel::Gaussian { sigma } => format!("gaussian(sigma={sigma})"),
            ChannelModel::BadData { r, p_bad, per_message } => {
                format!("bad_data(r={r},p={p_bad}{})", if per_message { ",per_message" } else { "" })
            }
            ChannelModel::IntermittentLoss { lambda_f, lambda_r, symmetric } => format!(
                "loss(lambda_f={lambda_f},lambda_r={lambda_r}{})",
                if symmetric { ",symmetric" } else { "" }
            ),
        }
    }
}

/// Add independent `N(0, sigma)` noise to each element.
pub fn apply_gaussian(values: &[f64], sigma: f64, stream: &Stream) -> Result<Vec<f64>, ContractError> {
    if !(sigma >= 0.0) {
        return Err(ContractError::Invalid(format!("sigma must be non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(values.to_vec());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| ContractError::Invalid(e.to_string()))?;
    Ok(values
        .iter()
        .enumerate()
        .map(|(e, &v)| v + normal.sample(&mut stream.rng(e as u64, Purpose::Noise)))
        .collect())
}

/// With probability `p_bad` per element add `2 R (U1 - 0.5)`.
pub fn apply_bad_data(values: &[f64], r: f64, p_bad: f64, stream: &Stream) -> Vec<f64> {
    apply_bad_data_with(values, r, p_bad, false, stream)
}

fn apply_bad_data_with(values: &[f64], r: f64, p_bad: f64, per_message: bool, stream: &Stream) -> Vec<f64> {
    let message_hit = per_message && stream.uniform(0, Purpose::BadTrigger) < p_bad;
    values
        .iter()
        .enumerate()
        .map(|(e, &v)| {
            let hit = if per_message {
                message_hit
            } else {
                stream.uniform(e as u64, Purpose::BadTrigger) < p_bad
            };
            if hit {
                let u1: f64 = stream.rng(e as u64, Purpose::BadMagnitude).random();
                v + 2.0 * r * (u1 - 0.5)
            } else {
                v
            }
        })
        .collect()
}

/// Directed link state.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub from: usize,
    pub to: usize,
    /// Stream id for noise and bad data.
    pub link_id: u64,
    /// Stream id for loss draws; shared by both directions when symmetric.
    pub loss_id: u64,
    pub seed: u64,
    /// `true` in the success state.
    pub up: bool,
    pub last_good: Vec<f64>,
    pub last_good_aux: Vec<f64>,
}

impl LinkState {
    /// A link in the success state whose last good payload is `init`.
    pub fn new(from: usize, to: usize, link_id: u64, seed: u64, init: Vec<f64>, init_aux: Vec<f64>) -> Self {
        LinkState {
            from,
            to,
            link_id,
            loss_id: link_id,
            seed,
            up: true,
            last_good: init,
            last_good_aux: init_aux,
        }
    }
}

/// Advance the two-state loss chain by one uniform draw.
pub fn step_loss_channel(state: &mut LinkState, lambda_f: f64, lambda_r: f64, iteration: u64) {
    let u = Stream::new(state.seed, state.loss_id, iteration).uniform(0, Purpose::Loss);
    state.up = if state.up { u >= lambda_f } else { u < lambda_r };
}

/// Send `values` over `link` at `iteration`.
pub fn transmit(
    link: &mut LinkState,
    values: &[f64],
    model: &ChannelModel,
    iteration: u64,
) -> Result<Vec<f64>, ContractError> {
    transmit_message(link, values, &[], model, iteration).map(|(v, _)| v)
}

/// Send angle values together with auxiliary data. Noise and bad data touch
/// only `values`; under loss both parts go stale together.
pub fn transmit_message(
    link: &mut LinkState,
    values: &[f64],
    aux: &[f64],
    model: &ChannelModel,
    iteration: u64,
) -> Result<(Vec<f64>, Vec<f64>), ContractError> {
    if values.len() != link.last_good.len() || aux.len() != link.last_good_aux.len() {
        return Err(ContractError::Dimension(format!(
            "link {}->{} carries {}+{} values, got {}+{}",
            link.from,
            link.to,
            link.last_good.len(),
            link.last_good_aux.len(),
            values.len(),
            aux.len()
        )));
    }
    let stream = Stream::new(link.seed, link.link_id, iteration);
    let delivered = match *model {
        ChannelModel::Ideal => values.to_vec(),
        ChannelModel::Gaussian { sigma } => apply_gaussian(values, sigma, &stream)?,
        ChannelModel::BadData { r, p_bad, per_message } => apply_bad_data_with(values, r, p_bad, per_message, &stream),
        ChannelModel::IntermittentLoss { lambda_f, lambda_r, .. } => {
            step_loss_channel(link, lambda_f, lambda_r, iteration);
            if link.up {
                link.last_good.copy_from_slice(values);
                link.last_good_aux.copy_from_slice(aux);
            }
            return Ok((link.last_good.clone(), link.last_good_aux.clone()));
        }
    };
    Ok((delivered, aux.to_vec()))
}
