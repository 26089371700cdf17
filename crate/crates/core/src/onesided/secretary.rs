use alloc::format;

use super::{OneSidedDecision, OnlineAuction};
use crate::error::{Error, Result};
use crate::money::Money;

/// Length of the observation phase for a stream of `n` inputs: `⌊n/e⌋`,
/// raised to one for `n = 2` so the first input cannot win unopposed at
/// price zero.
pub fn sample_size(n: usize) -> usize {
    let floor = (n as f64 / core::f64::consts::E) as usize;
    if n >= 2 {
        floor.max(1)
    } else {
        floor
    }
}

/// Classic secretary: observe a sample, then take the first input strictly
/// above the sample maximum and charge that maximum. May select nobody.
#[derive(Debug, Clone)]
pub struct SingleSecretary {
    n: usize,
    sample: usize,
    seen: usize,
    threshold: Option<Money>,
    filled: bool,
}

impl SingleSecretary {
    pub fn new(n: usize) -> Self {
        SingleSecretary { n, sample: sample_size(n), seen: 0, threshold: None, filled: false }
    }
}

impl OnlineAuction for SingleSecretary {
    fn offer(&mut self, value: Money) -> Result<OneSidedDecision> {
        if self.seen >= self.n {
            return Err(Error::Protocol(format!("stream longer than announced n = {}", self.n)));
        }
        let idx = self.seen;
        self.seen += 1;
        if idx < self.sample {
            self.threshold = Some(self.threshold.map_or(value, |t| t.max(value)));
            return Ok(OneSidedDecision::REJECT);
        }
        if self.filled {
            return Ok(OneSidedDecision::REJECT);
        }
        // An empty sample leaves no threshold: the first input wins at price zero.
        match self.threshold {
            Some(t) if value <= t => Ok(OneSidedDecision::REJECT),
            t => {
                self.filled = true;
                Ok(OneSidedDecision::select(t.unwrap_or(Money::ZERO)))
            }
        }
    }

    fn finish(&mut self) -> Result<()> {
        if self.seen != self.n {
            return Err(Error::Protocol(format!("stream ended after {} of {} inputs", self.seen, self.n)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::onesided::{secretary_single, AuctionConfig};
    use alloc::vec::Vec;

    fn run(vs: &[u64]) -> Vec<OneSidedDecision> {
        let vals: Vec<Money> = vs.iter().map(|&v| Money(v)).collect();
        secretary_single(&vals, &AuctionConfig::new(vals.len(), 1, 0).unwrap()).unwrap()
    }

    #[test]
    fn sample_sizes() {
        assert_eq!(sample_size(1), 0);
        assert_eq!(sample_size(2), 1);
        assert_eq!(sample_size(3), 1);
        assert_eq!(sample_size(100), 36);
    }

    #[test]
    fn single_input_wins_for_free() {
        assert_eq!(run(&[4]), [OneSidedDecision::select(Money(0))]);
    }

    #[test]
    fn hand_simulated_stream() {
        assert_eq!(
            run(&[5, 9, 7]),
            [OneSidedDecision::REJECT, OneSidedDecision::select(Money(5)), OneSidedDecision::REJECT]
        );
    }

    #[test]
    fn may_select_nobody() {
        let d = run(&[9, 5, 7]);
        assert!(d.iter().all(|d| !d.selected));
        // Ties with the sample maximum lose.
        let d = run(&[9, 5, 9]);
        assert!(d.iter().all(|d| !d.selected));
    }

    #[test]
    fn protocol_errors() {
        let c = AuctionConfig::new(2, 1, 0).unwrap();
        let mut a = SingleSecretary::new(c.n);
        a.offer(Money(1)).unwrap();
        assert!(matches!(a.finish(), Err(Error::Protocol(_))));
        a.offer(Money(1)).unwrap();
        assert!(matches!(a.offer(Money(1)), Err(Error::Protocol(_))));
        assert!(secretary_single(&[Money(1)], &c).is_err());
    }
}
