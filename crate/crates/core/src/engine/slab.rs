//! Per-mass force slots filled concurrently by spring tasks.
//!
//! Each spring reserves one slot at each endpoint with an atomic increment of
//! that mass's insertion counter and writes its force there. No floating-point
//! atomics are involved: a slot is owned by exactly one writer once reserved.
//! Summation happens later, per mass, in a separate pass.

use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use smallvec::SmallVec;

use crate::Vec3;

/// Slots reserved per mass beyond its spring degree.
pub const CONSTRAINT_SLOTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("force slot overflow at mass {mass} (capacity {capacity})")]
pub struct SlotOverflow {
    pub mass: usize,
    pub capacity: usize,
}

#[derive(Debug)]
pub struct ForceSlab {
    offsets: Vec<usize>,
    counters: Vec<AtomicU32>,
    forces: Vec<[AtomicU64; 3]>,
    owners: Vec<AtomicU32>,
}

impl ForceSlab {
    /// Capacity of mass `i` is `degrees[i] + extra`.
    pub fn new(degrees: &[usize], extra: usize) -> Self {
        let mut offsets = Vec::with_capacity(degrees.len() + 1);
        let mut total = 0usize;
        offsets.push(0);
        for &d in degrees {
            total += d + extra;
            offsets.push(total);
        }
        Self {
            offsets,
            counters: (0..degrees.len()).map(|_| AtomicU32::new(0)).collect(),
            forces: (0..total)
                .map(|_| [AtomicU64::new(0), AtomicU64::new(0), AtomicU64::new(0)])
                .collect(),
            owners: (0..total).map(|_| AtomicU32::new(0)).collect(),
        }
    }

    pub fn for_scene(scene: &crate::model::Scene) -> Self {
        Self::new(&scene.degrees(), CONSTRAINT_SLOTS)
    }

    pub fn mass_count(&self) -> usize {
        self.counters.len()
    }

    pub fn capacity(&self, mass: usize) -> usize {
        self.offsets[mass + 1] - self.offsets[mass]
    }

    pub fn occupied(&self, mass: usize) -> usize {
        (self.counters[mass].load(Ordering::Relaxed) as usize).min(self.capacity(mass))
    }

    /// Reserves a slot on `mass` and stores `force` tagged with `spring`.
    #[inline]
    pub fn push(&self, mass: usize, spring: u32, force: Vec3) -> Result<(), SlotOverflow> {
        let slot = self.counters[mass].fetch_add(1, Ordering::Relaxed) as usize;
        let capacity = self.capacity(mass);
        if slot >= capacity {
            return Err(SlotOverflow { mass, capacity });
        }
        let at = self.offsets[mass] + slot;
        let cell = &self.forces[at];
        cell[0].store(force.x.to_bits(), Ordering::Relaxed);
        cell[1].store(force.y.to_bits(), Ordering::Relaxed);
        cell[2].store(force.z.to_bits(), Ordering::Relaxed);
        self.owners[at].store(spring, Ordering::Relaxed);
        Ok(())
    }

    #[inline]
    fn load(&self, at: usize) -> Vec3 {
        let cell = &self.forces[at];
        Vec3::new(
            f64::from_bits(cell[0].load(Ordering::Relaxed)),
            f64::from_bits(cell[1].load(Ordering::Relaxed)),
            f64::from_bits(cell[2].load(Ordering::Relaxed)),
        )
    }

    /// Occupied `(spring id, force)` entries of `mass`, in arrival order.
    pub fn entries(&self, mass: usize) -> Vec<(u32, Vec3)> {
        let base = self.offsets[mass];
        (0..self.occupied(mass))
            .map(|s| (self.owners[base + s].load(Ordering::Relaxed), self.load(base + s)))
            .collect()
    }

    /// Sums the occupied slots of `mass` and resets its counter. With
    /// `deterministic`, slots are summed in ascending spring id.
    #[inline]
    pub fn drain_sum(&self, mass: usize, deterministic: bool) -> Vec3 {
        let n = self.occupied(mass);
        let base = self.offsets[mass];
        let mut sum = Vec3::zeros();
        if deterministic {
            let mut order: SmallVec<[(u32, usize); 32]> = (0..n)
                .map(|s| (self.owners[base + s].load(Ordering::Relaxed), base + s))
                .collect();
            order.sort_unstable();
            for &(_, at) in &order {
                sum += self.load(at);
            }
        } else {
            for s in 0..n {
                sum += self.load(base + s);
            }
        }
        self.counters[mass].store(0, Ordering::Relaxed);
        sum
    }

    pub fn reset(&self) {
        for c in &self.counters {
            c.store(0, Ordering::Relaxed);
        }
    }
}
