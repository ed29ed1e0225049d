use crate::error::{invalid, Result};
use crate::numerics::SeededRng;

/// Fixed-capacity FIFO ring with uniform sampling with replacement.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: Vec<T>,
    next: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(invalid("replay capacity must be >= 1"));
        }
        Ok(Self { capacity, items: Vec::new(), next: 0 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> Option<&T> {
        self.items.get(i)
    }

    /// Oldest-first iteration.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// Indices of a minibatch, or `None` while fewer than `batch` items are stored.
    pub fn sample_indices(&self, batch: usize, rng: &mut SeededRng) -> Option<Vec<usize>> {
        if batch == 0 || self.items.len() < batch {
            return None;
        }
        Some((0..batch).map(|_| rng.below(self.items.len())).collect())
    }

    pub fn sample(&self, batch: usize, rng: &mut SeededRng) -> Option<Vec<&T>> {
        self.sample_indices(batch, rng).map(|idx| idx.into_iter().map(|i| &self.items[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifo_eviction() {
        let mut b = ReplayBuffer::new(2).unwrap();
        b.push(1);
        b.push(2);
        b.push(3);
        assert_eq!(b.len(), 2);
        assert_eq!(b.iter().copied().collect::<Vec<_>>(), vec![2, 3]);
        assert!(ReplayBuffer::<u8>::new(0).is_err());
    }

    #[test]
    fn not_ready_until_batch_fits() {
        let mut b = ReplayBuffer::new(10).unwrap();
        let mut rng = SeededRng::new(0);
        b.push(1);
        assert!(b.sample(2, &mut rng).is_none());
        b.push(2);
        let s = b.sample(2, &mut rng).unwrap();
        assert!(s.iter().all(|v| **v == 1 || **v == 2));
    }

    #[test]
    fn uniform_frequencies() {
        let mut b = ReplayBuffer::new(10).unwrap();
        for i in 0..10 {
            b.push(i);
        }
        let mut rng = SeededRng::new(7);
        let mut counts = [0usize; 10];
        for _ in 0..10_000 {
            for v in b.sample(10, &mut rng).unwrap() {
                counts[*v] += 1;
            }
        }
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 1_000.0, "{counts:?}");
        }
    }
}
