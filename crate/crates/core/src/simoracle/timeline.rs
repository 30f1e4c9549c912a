// SPDX-License-Identifier: Apache-2.0

//! Slot timeline of one requestor on one arbitrated resource.
//!
//! A round consists of `K` positions, each a slot followed by the
//! arbitration delay, which absorbs an access overrunning its slot. The requestor owns `W` positions; the others belong to phantom
//! competitors. A competitor position that is idle is skipped entirely
//! when the policy is work-conserving and costs its full length otherwise.
//! Rounds are generated lazily, so the timeline is unbounded.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::arbitration::ArbitrationTuple;
use crate::time::Nanos;

/// Arbitration parameters seen by one requestor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Resource {
    pub slot: i64,
    pub delay: i64,
    pub positions: u32,
    pub weight: u32,
    pub work_conserving: bool,
}

impl Resource {
    pub fn new(tuple: &ArbitrationTuple, arb_delay: Nanos, work_conserving: bool) -> Self {
        let pos_len = tuple.slot_len + arb_delay;
        let positions = (tuple.period.get() / pos_len.get()).max(u64::from(tuple.weight)) as u32;
        Self {
            slot: tuple.slot_len.get() as i64,
            delay: arb_delay.get() as i64,
            positions,
            weight: tuple.weight,
            work_conserving,
        }
    }

    pub fn period(&self) -> i64 {
        i64::from(self.positions) * (self.slot + self.delay)
    }
}

/// How the phantom competitors behave on one resource.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Layout {
    pub owned: Vec<bool>,
    /// Probability that a competitor position is in use.
    pub busy: f64,
    /// Single requestor on a work-conserving resource: slots follow each
    /// other without arbitration delay.
    pub uncontended: bool,
}

impl Layout {
    /// Own positions last, every competitor busy.
    pub fn aligned(r: &Resource) -> Self {
        let k = r.positions as usize;
        let w = r.weight as usize;
        Self { owned: (0..k).map(|i| i >= k - w).collect(), busy: 1.0, uncontended: false }
    }

    /// Competitors never request.
    pub fn idle(r: &Resource) -> Self {
        let mut l = Self::aligned(r);
        l.busy = 0.0;
        l.uncontended = r.work_conserving;
        l
    }

    /// Own positions either as a block at a random offset or scattered,
    /// with a random competitor load.
    pub fn random(r: &Resource, rng: &mut ChaCha8Rng) -> Self {
        let k = r.positions as usize;
        let w = r.weight as usize;
        let mut owned = vec![false; k];
        if rng.gen_bool(0.5) {
            let off = rng.gen_range(0..k);
            for i in 0..w {
                owned[(off + i) % k] = true;
            }
        } else {
            for i in sample(rng, k, w).into_iter() {
                owned[i] = true;
            }
        }
        let busy = match rng.gen_range(0..5) {
            0 | 1 => 1.0,
            2 | 3 => rng.gen_range(0.0..1.0),
            _ => 0.0,
        };
        Self { owned, busy, uncontended: false }
    }
}

pub(crate) struct Timeline {
    slot: i64,
    delay: i64,
    work_conserving: bool,
    layout: Layout,
    rng: ChaCha8Rng,
    next_round: i64,
    windows: Vec<(i64, i64)>,
}

impl Timeline {
    /// Timeline whose first round starts at `origin`.
    pub fn new(r: &Resource, layout: Layout, origin: i64, rng: ChaCha8Rng) -> Self {
        Self {
            slot: r.slot,
            delay: r.delay,
            work_conserving: r.work_conserving,
            layout,
            rng,
            next_round: origin,
            windows: Vec::new(),
        }
    }

    fn generate_round(&mut self) {
        let mut t = self.next_round;
        if self.layout.uncontended {
            self.windows.push((t, t + self.slot));
            self.next_round = t + self.slot;
            return;
        }
        for i in 0..self.layout.owned.len() {
            if self.layout.owned[i] {
                self.windows.push((t, t + self.slot));
                t += self.delay + self.slot;
            } else {
                let busy = self.layout.busy >= 1.0 || (self.layout.busy > 0.0 && self.rng.gen_bool(self.layout.busy));
                if busy || !self.work_conserving {
                    t += self.delay + self.slot;
                }
            }
        }
        self.next_round = t;
    }

    pub fn window(&mut self, idx: usize) -> (i64, i64) {
        while self.windows.len() <= idx {
            self.generate_round();
        }
        self.windows[idx]
    }

    /// Index of the first own slot that ends after `t`.
    pub fn first_after(&mut self, t: i64) -> usize {
        while self.windows.last().is_none_or(|w| w.1 <= t) {
            self.generate_round();
        }
        self.windows.partition_point(|w| w.1 <= t)
    }

    /// Time at which `demand` of preemptible service received from `t`
    /// completes, with the slots used.
    pub fn serve(&mut self, t: i64, demand: i64, mut on_slot: impl FnMut(i64, i64)) -> i64 {
        if demand == 0 {
            return t;
        }
        let mut left = demand;
        let mut idx = self.first_after(t);
        loop {
            let (s, e) = self.window(idx);
            let start = s.max(t);
            let avail = e - start;
            if left <= avail {
                on_slot(start, start + left);
                return start + left;
            }
            on_slot(start, e);
            left -= avail;
            idx += 1;
        }
    }

    /// Start of a non-preemptible access issued at `t`; it may run past the
    /// end of the slot in which it starts.
    pub fn access_start(&mut self, t: i64) -> i64 {
        let idx = self.first_after(t);
        self.window(idx).0.max(t)
    }
}
