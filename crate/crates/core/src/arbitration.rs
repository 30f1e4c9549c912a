// SPDX-License-Identifier: Apache-2.0

//! Slot-based arbitration: policies, arbitration tuples and work-conserving
//! capacity reduction.
//!
//! A requestor `x` on resource `r` sees the tuple `(S_r, W_r^x, P_r^x)`: the
//! slot length of `r`, the number of slots reserved for `x` per round and
//! the worst-case length of one arbitration round as perceived by `x`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::Nanos;

/// Slot-based arbitration parameters provided by the platform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArbitrationPolicy {
    /// Length of one arbitration slot (ns).
    pub slot_len: Nanos,
    /// Switching latency between consecutive slots (ns).
    pub arb_delay: Nanos,
    /// Number of slots per arbitration round.
    pub capacity: u32,
    /// `true` for WRR (idle slots skipped), `false` for TDM.
    pub work_conserving: bool,
}

impl ArbitrationPolicy {
    pub fn wrr(slot_len: Nanos, arb_delay: Nanos, capacity: u32) -> Self {
        Self { slot_len, arb_delay, capacity, work_conserving: true }
    }

    pub fn tdm(slot_len: Nanos, arb_delay: Nanos, capacity: u32) -> Self {
        Self { slot_len, arb_delay, capacity, work_conserving: false }
    }

    /// Same policy with the arbitration delay extended by `extra`.
    pub fn with_extra_delay(mut self, extra: Nanos) -> Self {
        self.arb_delay += extra;
        self
    }

    /// Same policy with a different slot length.
    pub fn with_slot_len(mut self, slot_len: Nanos) -> Self {
        self.slot_len = slot_len;
        self
    }

    /// Length of one full round at the given capacity: `K * (S + D)`.
    pub fn round_len(&self, capacity: u32) -> Nanos {
        (self.slot_len + self.arb_delay) * u64::from(capacity)
    }
}

/// `(S, W, P)` for one requestor on one resource.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArbitrationTuple {
    pub slot_len: Nanos,
    pub weight: u32,
    pub period: Nanos,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArbitrationError {
    #[error("weight {weight} exceeds effective capacity {capacity}")]
    Capacity { weight: u32, capacity: u32 },
    #[error("effective capacity {effective} exceeds policy capacity {capacity}")]
    EffectiveCapacity { effective: u32, capacity: u32 },
    #[error("arbitration weight must be at least 1")]
    ZeroWeight,
}

impl ArbitrationTuple {
    /// Builds a tuple directly, checking the tuple invariants.
    pub fn new(slot_len: Nanos, weight: u32, period: Nanos) -> Self {
        assert!(slot_len.get() > 0, "slot length must be positive");
        assert!(weight >= 1, "weight must be at least 1");
        assert!(
            period >= slot_len * u64::from(weight),
            "period {period} shorter than reserved budget"
        );
        Self { slot_len, weight, period }
    }

    /// Reserved budget per period, `W * S`.
    pub fn budget(&self) -> Nanos {
        self.slot_len * u64::from(self.weight)
    }

    /// Worst-case wait per period, `P - W * S`.
    pub fn wait_time(&self) -> Nanos {
        self.period - self.budget()
    }

    /// The requestor owns the resource for the whole period.
    pub fn is_exclusive(&self) -> bool {
        self.wait_time().is_zero()
    }
}

/// Tuple for a requestor holding `weight` slots on a resource whose round has
/// `effective_capacity` slots: `P = K_eff * (S + D)`.
pub fn make_tuple(
    policy: &ArbitrationPolicy,
    weight: u32,
    effective_capacity: u32,
) -> Result<ArbitrationTuple, ArbitrationError> {
    if weight == 0 {
        return Err(ArbitrationError::ZeroWeight);
    }
    if effective_capacity > policy.capacity {
        return Err(ArbitrationError::EffectiveCapacity {
            effective: effective_capacity,
            capacity: policy.capacity,
        });
    }
    if weight > effective_capacity {
        return Err(ArbitrationError::Capacity { weight, capacity: effective_capacity });
    }
    Ok(ArbitrationTuple {
        slot_len: policy.slot_len,
        weight,
        period: policy.round_len(effective_capacity),
    })
}

/// Slots that are allocated but never used are always skipped by a
/// work-conserving arbiter; TDM keeps them in the round.
pub fn reduce_capacity(policy: &ArbitrationPolicy, utilized_weight: u32) -> u32 {
    debug_assert!(utilized_weight > 0 && utilized_weight <= policy.capacity);
    if policy.work_conserving {
        utilized_weight
    } else {
        policy.capacity
    }
}

/// `P - W * S` of a tuple.
pub fn wait_time(tuple: &ArbitrationTuple) -> Nanos {
    tuple.wait_time()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example_policy(work_conserving: bool) -> ArbitrationPolicy {
        ArbitrationPolicy {
            slot_len: Nanos(1000),
            arb_delay: Nanos(200),
            capacity: 5,
            work_conserving,
        }
    }

    #[test]
    fn shared_core_tuple() {
        let t = make_tuple(&example_policy(true), 3, 5).unwrap();
        assert_eq!(t, ArbitrationTuple { slot_len: Nanos(1000), weight: 3, period: Nanos(6000) });
        assert_eq!(wait_time(&t), Nanos(3000));
    }

    #[test]
    fn reduced_core_tuple() {
        let policy = example_policy(true);
        let eff = reduce_capacity(&policy, 3);
        assert_eq!(eff, 3);
        let t = make_tuple(&policy, 3, eff).unwrap();
        assert_eq!(t.period, Nanos(3600));
        assert_eq!(wait_time(&t), Nanos(600));
    }

    #[test]
    fn full_reservation_has_no_wait() {
        let policy = ArbitrationPolicy::wrr(Nanos(70), Nanos(0), 4);
        let t = make_tuple(&policy, 4, 4).unwrap();
        assert_eq!(t.period, Nanos(280));
        assert!(t.is_exclusive());
    }

    #[test]
    fn tdm_is_never_reduced() {
        let policy = example_policy(false);
        assert_eq!(reduce_capacity(&policy, 3), 5);
        assert_eq!(reduce_capacity(&policy, 5), 5);
        assert_eq!(reduce_capacity(&example_policy(true), 5), 5);
    }

    #[test]
    fn capacity_errors() {
        let policy = example_policy(true);
        assert_eq!(
            make_tuple(&policy, 4, 3),
            Err(ArbitrationError::Capacity { weight: 4, capacity: 3 })
        );
        assert!(make_tuple(&policy, 0, 3).is_err());
        assert!(make_tuple(&policy, 1, 6).is_err());
    }

    proptest! {
        #[test]
        fn tuple_monotonicity(
            s in 1u64..10_000, d in 0u64..5_000, k in 1u32..16, w in 1u32..16, extra in 0u32..4,
        ) {
            let w = w.min(k);
            let policy = ArbitrationPolicy::wrr(Nanos(s), Nanos(d), k + extra);
            let a = make_tuple(&policy, w, k).unwrap();
            let b = make_tuple(&policy, w, k + extra).unwrap();
            prop_assert!(b.period >= a.period);
            if w < k {
                let heavier = make_tuple(&policy, w + 1, k).unwrap();
                prop_assert!(heavier.wait_time() <= a.wait_time());
            }
            prop_assert_eq!(a.wait_time().is_zero(), a.budget() == a.period);
        }

        #[test]
        fn reduction_never_lengthens_period(
            s in 1u64..10_000, d in 0u64..5_000, k in 1u32..16, used in 1u32..16,
        ) {
            let used = used.min(k);
            let policy = ArbitrationPolicy::wrr(Nanos(s), Nanos(d), k);
            let full = make_tuple(&policy, used, k).unwrap();
            let reduced = make_tuple(&policy, used, reduce_capacity(&policy, used)).unwrap();
            prop_assert!(reduced.period <= full.period);
            if used < k {
                prop_assert!(reduced.period < full.period);
            }
        }
    }
}
