use alloc::boxed::Box;
use alloc::collections::BinaryHeap;
use alloc::format;
use core::cmp::Reverse;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AuctionConfig, OneSidedDecision, OnlineAuction, SingleSecretary, SplitRule};
use crate::error::{Error, Result};
use crate::money::Money;

/// Recursive k-choice secretary.
///
/// With `k ≥ 2`, draws `m ~ Binomial(n, 1/2)`, runs itself with capacity
/// `⌊k/2⌋` on the first `m` inputs, then sets `y` to the `⌊k/2⌋`-th largest of
/// those inputs (`0` if there were fewer) and accepts later inputs strictly
/// above `y`, at price `y`, until `k` items are gone. `k = 1` is the classic
/// secretary and `k = n` selects everyone for free.
pub struct KSecretary {
    n: usize,
    seen: usize,
    mode: Mode,
}

enum Mode {
    Everyone,
    Single(SingleSecretary),
    Split(Box<Split>),
}

struct Split {
    k: usize,
    first_half: usize,
    child: Option<KSecretary>,
    child_capacity: usize,
    /// The `child_capacity` largest values of the first half.
    top: BinaryHeap<Reverse<Money>>,
    threshold: Option<Money>,
    selected: usize,
}

impl KSecretary {
    pub fn new(config: &AuctionConfig) -> Result<Self> {
        if config.k == 0 || config.k > config.n {
            return Err(Error::Config(format!("k = {} outside 1..={}", config.k, config.n)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self::build(config.n, config.k, &mut rng, &config.splits, 0))
    }

    fn build(n: usize, k: usize, rng: &mut ChaCha8Rng, splits: &SplitRule, depth: usize) -> Self {
        let mode = if k >= n {
            Mode::Everyone
        } else if k == 1 {
            Mode::Single(SingleSecretary::new(n))
        } else {
            let pinned = match splits {
                SplitRule::Pinned(sizes) => sizes.get(depth).map(|&m| m.min(n)),
                SplitRule::Binomial => None,
            };
            let m = pinned.unwrap_or_else(|| (0..n).filter(|_| rng.gen::<bool>()).count());
            let child_capacity = k / 2;
            // The child gets its own stream so pinning one level leaves the others reproducible.
            let mut child_rng = ChaCha8Rng::seed_from_u64(rng.gen());
            let child = (m > 0).then(|| Self::build(m, child_capacity.min(m), &mut child_rng, splits, depth + 1));
            Mode::Split(Box::new(Split {
                k,
                first_half: m,
                child,
                child_capacity,
                top: BinaryHeap::new(),
                threshold: None,
                selected: 0,
            }))
        };
        KSecretary { n, seen: 0, mode }
    }
}

impl OnlineAuction for KSecretary {
    fn offer(&mut self, value: Money) -> Result<OneSidedDecision> {
        if self.seen >= self.n {
            return Err(Error::Protocol(format!("stream longer than announced n = {}", self.n)));
        }
        let idx = self.seen;
        self.seen += 1;
        match &mut self.mode {
            Mode::Everyone => Ok(OneSidedDecision::select(Money::ZERO)),
            Mode::Single(s) => s.offer(value),
            Mode::Split(s) => s.offer(idx, value),
        }
    }

    fn finish(&mut self) -> Result<()> {
        if self.seen != self.n {
            return Err(Error::Protocol(format!("stream ended after {} of {} inputs", self.seen, self.n)));
        }
        match &mut self.mode {
            Mode::Everyone => Ok(()),
            Mode::Single(s) => s.finish(),
            Mode::Split(s) => s.child.as_mut().map_or(Ok(()), |c| c.finish()),
        }
    }
}

impl Split {
    fn offer(&mut self, idx: usize, value: Money) -> Result<OneSidedDecision> {
        if idx < self.first_half {
            self.top.push(Reverse(value));
            if self.top.len() > self.child_capacity {
                self.top.pop();
            }
            let child = self.child.as_mut().expect("non-empty first half has a child");
            let d = child.offer(value)?;
            if d.selected {
                self.selected += 1;
            }
            return Ok(d);
        }
        let y = *self.threshold.get_or_insert_with(|| {
            if self.top.len() < self.child_capacity {
                Money::ZERO
            } else {
                self.top.peek().map_or(Money::ZERO, |r| r.0)
            }
        });
        if self.selected < self.k && value > y {
            self.selected += 1;
            Ok(OneSidedDecision::select(y))
        } else {
            Ok(OneSidedDecision::REJECT)
        }
    }
}
