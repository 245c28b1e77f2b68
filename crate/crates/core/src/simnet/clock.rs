use std::collections::BTreeMap;

use crate::net::Millis;

/// Virtual time plus a queue of future events. Equal-time events pop in
/// insertion order.
#[derive(Debug, Clone)]
pub struct VirtualClock<E> {
    now: Millis,
    seq: u64,
    pending: BTreeMap<(Millis, u64), E>,
}

impl<E> Default for VirtualClock<E> {
    fn default() -> Self {
        Self {
            now: 0,
            seq: 0,
            pending: BTreeMap::new(),
        }
    }
}

impl<E> VirtualClock<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> Millis {
        self.now
    }

    /// Times in the past are clamped to now.
    pub fn schedule_at(&mut self, at: Millis, event: E) {
        let at = at.max(self.now);
        self.pending.insert((at, self.seq), event);
        self.seq += 1;
    }

    pub fn schedule_in(&mut self, delay: Millis, event: E) {
        self.schedule_at(self.now + delay, event);
    }

    pub fn peek_time(&self) -> Option<Millis> {
        self.pending.keys().next().map(|&(t, _)| t)
    }

    /// Pops the earliest event and moves the clock to its time.
    pub fn pop(&mut self) -> Option<(Millis, E)> {
        let ((at, _), event) = self.pending.pop_first()?;
        self.now = at;
        Some((at, event))
    }

    pub fn advance_to(&mut self, at: Millis) {
        self.now = self.now.max(at);
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&E) -> bool) {
        self.pending.retain(|_, e| keep(e));
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_times_pop_in_insertion_order() {
        let mut clock = VirtualClock::new();
        clock.schedule_at(10, "b");
        clock.schedule_at(5, "a");
        clock.schedule_at(10, "c");
        assert_eq!(clock.pop(), Some((5, "a")));
        assert_eq!(clock.pop(), Some((10, "b")));
        assert_eq!(clock.pop(), Some((10, "c")));
        assert_eq!(clock.now(), 10);
        assert_eq!(clock.pop(), None);
    }

    #[test]
    fn time_never_goes_back() {
        let mut clock = VirtualClock::new();
        clock.advance_to(100);
        clock.advance_to(50);
        assert_eq!(clock.now(), 100);
        clock.schedule_at(20, ());
        assert_eq!(clock.pop(), Some((100, ())));
    }
}
