//! Caching decisions.
//!
//! Each strategy is expressed as two pure steps: what a node does with an
//! Interest it can (or cannot) satisfy, and what it does with a Data packet
//! on the way back. Decisions read only the packet, the node's label, the
//! strategy parameters and one draw from the node's random stream.

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::model::{ChunkName, Data, Interest, NodeId, Strategy};
use crate::node::NodeState;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrategyError {
    #[error("malformed Data for {name}: tsi is 0")]
    ZeroTsi { name: ChunkName },
}

/// Field values stamped on a freshly created Data packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataSeed {
    pub tsb: u32,
    pub tsi: u32,
    pub interval: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterestAction {
    pub satisfy: bool,
    /// Present iff `satisfy`.
    pub data_seed: Option<DataSeed>,
    /// Increment the Interest's TSI before forwarding (misses only).
    pub tsi_increment: bool,
    /// Drop the local copy after answering (Move Copy Down).
    pub mcd_delete_after_hit: bool,
}

/// Whether a strategy reads the Data fields before or after mutating them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOrder {
    Untouched,
    CheckThenUpdate,
    UpdateThenCheck,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataAction {
    pub cache: bool,
    /// The packet as it must be forwarded.
    pub forward: Data,
    pub order: FieldOrder,
    /// Caching probability, for probabilistic strategies.
    pub probability: Option<f64>,
}

impl DataAction {
    fn keep(data: &Data, cache: bool) -> Self {
        Self {
            cache,
            forward: *data,
            order: FieldOrder::Untouched,
            probability: None,
        }
    }
}

fn hit(interest: &Interest, tsb: u32, interval: u32) -> InterestAction {
    InterestAction {
        satisfy: true,
        data_seed: Some(DataSeed {
            tsb,
            tsi: interest.tsi,
            interval,
        }),
        tsi_increment: false,
        mcd_delete_after_hit: false,
    }
}

fn plain_miss() -> InterestAction {
    InterestAction {
        satisfy: false,
        data_seed: None,
        tsi_increment: false,
        mcd_delete_after_hit: false,
    }
}

/// Builds the Data packet answering `interest` at `node`.
pub fn make_data(interest: &Interest, seed: DataSeed, node: NodeId) -> Data {
    Data {
        name: interest.name,
        tsb: seed.tsb,
        tsi: seed.tsi,
        interval: seed.interval,
        hit_node: node,
        hops: 0,
    }
}

pub fn cee_on_data(data: &Data) -> DataAction {
    DataAction::keep(data, true)
}

pub fn nocache_on_data(data: &Data) -> DataAction {
    DataAction::keep(data, false)
}

pub fn lcd_on_hit(interest: &Interest) -> InterestAction {
    hit(interest, 1, 0)
}

/// Caches only freshly born Data (TSB of exactly 1), then ages the packet.
pub fn lcd_on_data(data: &Data) -> DataAction {
    let cache = data.tsb == 1;
    let mut forward = *data;
    forward.tsb += 1;
    DataAction {
        cache,
        forward,
        order: FieldOrder::CheckThenUpdate,
        probability: None,
    }
}

pub fn mcd_on_hit(interest: &Interest, at_producer: bool) -> InterestAction {
    InterestAction {
        mcd_delete_after_hit: !at_producer,
        ..lcd_on_hit(interest)
    }
}

/// Removes the copy that just served a hit. Producers keep their own content.
pub fn mcd_on_data_hit_side(hit_node: &mut NodeState, name: &ChunkName) -> bool {
    if hit_node.is_producer_of(name) {
        return false;
    }
    hit_node.cs_remove(name)
}

pub fn prob_on_data<R: RngCore + ?Sized>(data: &Data, p: f64, rng: &mut R) -> DataAction {
    let draw: f64 = rng.gen();
    DataAction {
        probability: Some(p),
        ..DataAction::keep(data, draw < p)
    }
}

pub fn probcache_on_hit(interest: &Interest) -> InterestAction {
    hit(interest, 1, 0)
}

pub fn probcache_on_interest_miss(_interest: &Interest) -> InterestAction {
    InterestAction {
        tsi_increment: true,
        ..plain_miss()
    }
}

/// Ages the packet first, then caches with probability TSB / TSI.
pub fn probcache_on_data<R: RngCore + ?Sized>(
    data: &Data,
    rng: &mut R,
) -> Result<DataAction, StrategyError> {
    probcache_common(data, rng, false)
}

/// ProbCache with the probability inverted to 1 − TSB / TSI.
pub fn probcache_inv_on_data<R: RngCore + ?Sized>(
    data: &Data,
    rng: &mut R,
) -> Result<DataAction, StrategyError> {
    probcache_common(data, rng, true)
}

fn probcache_common<R: RngCore + ?Sized>(
    data: &Data,
    rng: &mut R,
    inverted: bool,
) -> Result<DataAction, StrategyError> {
    if data.tsi == 0 {
        return Err(StrategyError::ZeroTsi { name: data.name });
    }
    let mut forward = *data;
    forward.tsb += 1;
    let weight = cache_weight(forward.tsb, forward.tsi);
    let probability = if inverted { 1.0 - weight } else { weight };
    let draw: f64 = rng.gen();
    Ok(DataAction {
        cache: draw < probability,
        forward,
        order: FieldOrder::UpdateThenCheck,
        probability: Some(probability),
    })
}

/// TSB / TSI clamped to `[0, 1]`.
pub fn cache_weight(tsb: u32, tsi: u32) -> f64 {
    (f64::from(tsb) / f64::from(tsi)).clamp(0.0, 1.0)
}

pub fn labels_on_data(data: &Data, node_label: u32, k: u32) -> DataAction {
    DataAction::keep(data, data.name.chunk_id % k == node_label)
}

pub fn intervals_on_hit(interest: &Interest, i: u32) -> InterestAction {
    hit(interest, 1, i)
}

/// Counts the interval down; caches and resets it when it reaches zero.
pub fn intervals_on_data(data: &Data, i: u32) -> DataAction {
    let mut forward = *data;
    let cache = data.interval == 0;
    if cache {
        forward.interval = i;
    } else {
        forward.interval -= 1;
    }
    DataAction {
        cache,
        forward,
        order: FieldOrder::CheckThenUpdate,
        probability: None,
    }
}

impl Strategy {
    /// Interest handling at a node. `can_satisfy` is the outcome of the
    /// Content Store / producer lookup.
    pub fn on_interest(
        &self,
        interest: &Interest,
        can_satisfy: bool,
        at_producer: bool,
    ) -> InterestAction {
        if !can_satisfy {
            return match self {
                Strategy::ProbCache | Strategy::ProbCacheInv => {
                    probcache_on_interest_miss(interest)
                }
                _ => plain_miss(),
            };
        }
        match *self {
            Strategy::Lcd => lcd_on_hit(interest),
            Strategy::Mcd => mcd_on_hit(interest, at_producer),
            Strategy::ProbCache | Strategy::ProbCacheInv => probcache_on_hit(interest),
            Strategy::Intervals { i } => intervals_on_hit(interest, i),
            Strategy::NoCache | Strategy::Cee | Strategy::Prob { .. } | Strategy::Labels { .. } => {
                hit(interest, 1, 0)
            }
        }
    }

    /// Data handling at a node with label `node_label`.
    pub fn on_data<R: RngCore + ?Sized>(
        &self,
        data: &Data,
        node_label: u32,
        rng: &mut R,
    ) -> Result<DataAction, StrategyError> {
        Ok(match *self {
            Strategy::NoCache => nocache_on_data(data),
            Strategy::Cee => cee_on_data(data),
            Strategy::Lcd | Strategy::Mcd => lcd_on_data(data),
            Strategy::Prob { p } => prob_on_data(data, p, rng),
            Strategy::ProbCache => probcache_on_data(data, rng)?,
            Strategy::ProbCacheInv => probcache_inv_on_data(data, rng)?,
            Strategy::Labels { k } => labels_on_data(data, node_label, k),
            Strategy::Intervals { i } => intervals_on_data(data, i),
        })
    }
}

/// An [`RngCore`] whose every `f64` draw is the same value in `[0, 1)`.
///
/// Used to pin probabilistic decisions for trace checks.
#[derive(Debug, Clone, Copy)]
pub struct FixedDraw(u64);

impl FixedDraw {
    /// `value` is clamped into `[0, 1)`; `1.0` maps to the largest draw below one.
    pub fn new(value: f64) -> Self {
        let scaled = (value.clamp(0.0, 1.0) * (1u64 << 53) as f64) as u64;
        let bits = scaled.min((1u64 << 53) - 1);
        FixedDraw(bits << 11)
    }
}

impl RngCore for FixedDraw {
    fn next_u32(&mut self) -> u32 {
        (self.0 >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.0
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for (i, b) in dest.iter_mut().enumerate() {
            *b = (self.0 >> ((i % 8) * 8)) as u8;
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::new_interest;
    use crate::model::Strategy;
    use crate::node::Replacement;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn name(id: u32) -> ChunkName {
        ChunkName {
            prefix: NodeId(0),
            chunk_id: id,
        }
    }

    fn data(tsb: u32, tsi: u32) -> Data {
        Data {
            name: name(10),
            tsb,
            tsi,
            interval: 0,
            hit_node: NodeId(0),
            hops: 0,
        }
    }

    #[test]
    fn fixed_draw_values() {
        assert_eq!(FixedDraw::new(0.0).gen::<f64>(), 0.0);
        let top: f64 = FixedDraw::new(1.0).gen();
        assert!(top < 1.0 && top > 0.999_999);
        assert_eq!(FixedDraw::new(0.25).gen::<f64>(), 0.25);
    }

    #[test]
    fn cee_always_caches() {
        assert!(cee_on_data(&data(1, 3)).cache);
        assert!(cee_on_data(&data(7, 2)).cache);
        assert_eq!(cee_on_data(&data(7, 2)).forward, data(7, 2));
    }

    #[test]
    fn cee_keeps_most_recent() {
        let mut node = NodeState::new(NodeId(1), 5, Replacement::Lru, 4, 0);
        for c in 0..10 {
            if cee_on_data(&data(1, 1)).cache {
                node.cs_insert(name(c));
            }
        }
        let held: Vec<u32> = node.cs.names().iter().map(|n| n.chunk_id).collect();
        assert_eq!(held, vec![5, 6, 7, 8, 9]);
    }

    #[test]
    fn lcd_decisions() {
        let i = new_interest(name(3), NodeId(4), 0);
        let a = lcd_on_hit(&i);
        assert!(a.satisfy);
        assert_eq!(a.data_seed.unwrap().tsb, 1);
        let miss = Strategy::Lcd.on_interest(&i, false, false);
        assert!(!miss.satisfy && !miss.tsi_increment);

        let first = lcd_on_data(&data(1, 1));
        assert!(first.cache);
        assert_eq!(first.forward.tsb, 2);
        let second = lcd_on_data(&first.forward);
        assert!(!second.cache);
        assert_eq!(second.forward.tsb, 3);
    }

    #[test]
    fn mcd_deletes_only_at_caches() {
        let i = new_interest(name(3), NodeId(4), 0);
        assert!(mcd_on_hit(&i, false).mcd_delete_after_hit);
        assert!(!mcd_on_hit(&i, true).mcd_delete_after_hit);

        let mut cache = NodeState::new(NodeId(2), 5, Replacement::Lru, 4, 0);
        cache.cs_insert(name(3));
        assert!(mcd_on_data_hit_side(&mut cache, &name(3)));
        assert!(!cache.cs.contains(&name(3)));

        let mut producer = NodeState::new(NodeId(0), 5, Replacement::Lru, 4, 0);
        assert!(!mcd_on_data_hit_side(&mut producer, &name(3)));
        assert!(producer.cs_lookup(&name(3)));
    }

    #[test]
    fn prob_boundaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert!(!prob_on_data(&data(1, 1), 0.0, &mut rng).cache);
            assert!(prob_on_data(&data(1, 1), 1.0, &mut rng).cache);
        }
    }

    #[test]
    fn prob_half_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| prob_on_data(&data(1, 1), 0.5, &mut rng).cache)
            .count();
        let frac = hits as f64 / n as f64;
        assert!((0.48..=0.52).contains(&frac), "fraction {frac}");
    }

    #[test]
    fn probcache_tsi_handling() {
        let mut i = new_interest(name(3), NodeId(4), 0);
        for expected in 2..=4 {
            let a = Strategy::ProbCache.on_interest(&i, false, false);
            assert!(a.tsi_increment);
            i.tsi += 1;
            assert_eq!(i.tsi, expected);
        }
        let at_hit = Strategy::ProbCache.on_interest(&i, true, true);
        assert_eq!(at_hit.data_seed.unwrap().tsi, 4);
        assert!(!at_hit.tsi_increment);
    }

    #[test]
    fn probcache_weights() {
        let mut zero = FixedDraw::new(0.0);
        let a = probcache_on_data(&data(1, 3), &mut zero).unwrap();
        assert_eq!(a.forward.tsb, 2);
        assert_eq!(a.probability, Some(2.0 / 3.0));
        let b = probcache_on_data(&a.forward, &mut zero).unwrap();
        assert_eq!(b.probability, Some(1.0));
        let mut top = FixedDraw::new(1.0);
        assert!(probcache_on_data(&a.forward, &mut top).unwrap().cache);
        assert!(!probcache_on_data(&data(1, 3), &mut top).unwrap().cache);

        assert_eq!(
            probcache_on_data(&data(1, 0), &mut zero),
            Err(StrategyError::ZeroTsi { name: name(10) })
        );
        // clamped when TSB overtakes TSI
        assert_eq!(
            probcache_on_data(&data(5, 3), &mut zero)
                .unwrap()
                .probability,
            Some(1.0)
        );
    }

    #[test]
    fn probcache_inv_weights() {
        let mut zero = FixedDraw::new(0.0);
        let adjacent = probcache_inv_on_data(&data(3, 4), &mut zero).unwrap();
        assert_eq!(adjacent.probability, Some(0.0));
        assert!(!adjacent.cache);
        let first = probcache_inv_on_data(&data(1, 4), &mut zero).unwrap();
        assert_eq!(first.probability, Some(0.5));
    }

    #[test]
    fn labels_modulo() {
        let mut d = data(1, 1);
        d.name.chunk_id = 10;
        assert!(labels_on_data(&d, 2, 4).cache);
        d.name.chunk_id = 11;
        assert!(!labels_on_data(&d, 2, 4).cache);
        for id in 0..50 {
            d.name.chunk_id = id;
            assert!(labels_on_data(&d, 0, 1).cache);
        }
    }

    #[test]
    fn intervals_counting() {
        let i = new_interest(name(3), NodeId(4), 0);
        assert_eq!(intervals_on_hit(&i, 2).data_seed.unwrap().interval, 2);
        assert_eq!(intervals_on_hit(&i, 0).data_seed.unwrap().interval, 0);

        let mut d = data(1, 1);
        d.interval = 1;
        let a = intervals_on_data(&d, 2);
        assert!(!a.cache);
        assert_eq!(a.forward.interval, 0);
        let b = intervals_on_data(&a.forward, 2);
        assert!(b.cache);
        assert_eq!(b.forward.interval, 2);

        d.interval = 0;
        for _ in 0..5 {
            let a = intervals_on_data(&d, 0);
            assert!(a.cache);
            d = a.forward;
        }
    }

    #[test]
    fn intervals_hand_simulated_line() {
        // hit at the producer, six nodes downstream
        let i = new_interest(name(3), NodeId(4), 0);
        let seed = intervals_on_hit(&i, 2).data_seed.unwrap();
        let mut d = make_data(&i, seed, NodeId(0));
        let mut cached_at = Vec::new();
        for hop in 1..=6 {
            let a = intervals_on_data(&d, 2);
            if a.cache {
                cached_at.push(hop);
            }
            d = a.forward;
        }
        assert_eq!(cached_at, vec![3, 6]);
    }

    proptest! {
        #[test]
        fn probcache_weight_monotone(tsi in 2u32..20) {
            let mut zero = FixedDraw::new(0.0);
            let mut d = data(1, tsi);
            let mut last = -1.0;
            let mut last_inv = 2.0;
            for _ in 1..tsi {
                let a = probcache_on_data(&d, &mut zero).unwrap();
                let inv = probcache_inv_on_data(&d, &mut zero).unwrap();
                let w = a.probability.unwrap();
                prop_assert!(w > last);
                prop_assert!(inv.probability.unwrap() < last_inv);
                last = w;
                last_inv = inv.probability.unwrap();
                d = a.forward;
            }
            prop_assert_eq!(last, 1.0);
        }

        #[test]
        fn decisions_are_pure(tsb in 1u32..10, tsi in 1u32..10, id in 0u32..50, label in 0u32..4, seed in any::<u64>()) {
            let mut d = data(tsb, tsi);
            d.name.chunk_id = id;
            for s in Strategy::all_default() {
                let mut r1 = ChaCha8Rng::seed_from_u64(seed);
                let mut r2 = ChaCha8Rng::seed_from_u64(seed);
                prop_assert_eq!(s.on_data(&d, label, &mut r1), s.on_data(&d, label, &mut r2));
            }
        }
    }
}
