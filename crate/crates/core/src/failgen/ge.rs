//! Two-state Gilbert-Elliott channel.
//!
//! The channel is either Good or Bad. Each step it moves Good→Bad with
//! probability `p` and Bad→Good with probability `r`, and an error occurs
//! with the error rate of the state occupied during the step (`e_good`,
//! `e_bad`).

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeState {
    Good,
    Bad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GilbertElliottParams {
    /// Good→Bad transition probability per step.
    pub p: f64,
    /// Bad→Good transition probability per step.
    pub r: f64,
    /// Error rate while Good (`1 - k`).
    pub e_good: f64,
    /// Error rate while Bad (`1 - h`).
    pub e_bad: f64,
}

impl Default for GilbertElliottParams {
    /// The `loss gemodel 2% 15% 30% 1%` example: 15% into Bad, 2% back to
    /// Good, 1% errors while Good, 30% while Bad.
    fn default() -> Self {
        GilbertElliottParams {
            p: 0.15,
            r: 0.02,
            e_good: 0.01,
            e_bad: 0.30,
        }
    }
}

impl GilbertElliottParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("p", self.p),
            ("r", self.r),
            ("e_good", self.e_good),
            ("e_bad", self.e_bad),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Long-run share of steps spent in Bad, `p / (p + r)`. `None` when the
    /// chain never moves (`p = r = 0`) and the answer depends on the start.
    pub fn steady_state_bad(&self) -> Option<f64> {
        let d = self.p + self.r;
        (d > 0.0).then(|| self.p / d)
    }

    /// Long-run error rate, `π_good · e_good + π_bad · e_bad`.
    pub fn steady_state_error_rate(&self) -> Option<f64> {
        self.steady_state_bad()
            .map(|bad| (1.0 - bad) * self.e_good + bad * self.e_bad)
    }

    fn error_rate(&self, state: GeState) -> f64 {
        match state {
            GeState::Good => self.e_good,
            GeState::Bad => self.e_bad,
        }
    }
}

/// Advances the chain one step.
///
/// Draws the error first, using the state held during the step, then the
/// transition. Exactly two uniforms are consumed per call whatever the
/// parameters, so two runs sharing a generator see the same state sequence
/// when only the error rates differ.
pub fn ge_step<R: Rng + ?Sized>(
    state: GeState,
    params: &GilbertElliottParams,
    rng: &mut R,
) -> (GeState, bool) {
    let u_err: f64 = rng.random();
    let u_move: f64 = rng.random();
    let error = u_err < params.error_rate(state);
    let next = match state {
        GeState::Good if u_move < params.p => GeState::Bad,
        GeState::Bad if u_move < params.r => GeState::Good,
        s => s,
    };
    (next, error)
}

/// A running channel.
#[derive(Debug, Clone)]
pub struct GilbertElliott {
    pub params: GilbertElliottParams,
    pub state: GeState,
}

impl GilbertElliott {
    pub fn new(params: GilbertElliottParams) -> Self {
        GilbertElliott {
            params,
            state: GeState::Good,
        }
    }

    /// One step; returns whether an error occurred.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let (next, error) = ge_step(self.state, &self.params, rng);
        self.state = next;
        error
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn absorbing_good_state() {
        let params = GilbertElliottParams {
            p: 0.0,
            r: 0.0,
            e_good: 0.0,
            e_bad: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = GeState::Good;
        for _ in 0..10_000 {
            let (next, err) = ge_step(s, &params, &mut rng);
            assert!(!err);
            assert_eq!(next, GeState::Good);
            s = next;
        }
    }

    #[test]
    fn forced_transitions_alternate() {
        let params = GilbertElliottParams {
            p: 1.0,
            r: 1.0,
            e_good: 0.0,
            e_bad: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = GeState::Good;
        for i in 0..100 {
            s = ge_step(s, &params, &mut rng).0;
            let expected = if i % 2 == 0 {
                GeState::Bad
            } else {
                GeState::Good
            };
            assert_eq!(s, expected);
        }
    }

    #[test]
    fn error_uses_pre_transition_state() {
        // always errors in Good, never in Bad, and always moves
        let params = GilbertElliottParams {
            p: 1.0,
            r: 1.0,
            e_good: 1.0,
            e_bad: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            ge_step(GeState::Good, &params, &mut rng),
            (GeState::Bad, true)
        );
        assert_eq!(
            ge_step(GeState::Bad, &params, &mut rng),
            (GeState::Good, false)
        );
    }

    #[test]
    fn analytic_steady_state() {
        let g = GilbertElliottParams::default();
        assert!((g.steady_state_bad().unwrap() - 0.15 / 0.17).abs() < 1e-12);
        let expected = (0.02 / 0.17) * 0.01 + (0.15 / 0.17) * 0.30;
        assert!((g.steady_state_error_rate().unwrap() - expected).abs() < 1e-12);
        assert!(GilbertElliottParams {
            p: 0.0,
            r: 0.0,
            ..g
        }
        .steady_state_bad()
        .is_none());
    }

    #[test]
    fn validation_rejects_out_of_range() {
        assert!(GilbertElliottParams::default().validate().is_ok());
        let bad = GilbertElliottParams {
            e_bad: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().unwrap_err().contains("e_bad"));
    }
}
