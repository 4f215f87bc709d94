//! Discrete-event scheduler.
//!
//! Events are ordered by `(time, insertion sequence)`, so events sharing a
//! timestamp fire in the order they were scheduled. The scheduler is generic
//! over the event payload; callers drive it with [`Scheduler::run_until`] or
//! [`Scheduler::pop_until`].

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use thiserror::Error;

use super::time::SimTime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("cannot schedule at {at}: clock is already at {now}")]
    InPast { at: SimTime, now: SimTime },
}

/// Handle returned by [`Scheduler::schedule`], usable for cancellation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

struct Entry<E> {
    at: SimTime,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // BinaryHeap is a max-heap; invert so the earliest (time, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.at.cmp(&self.at).then_with(|| other.seq.cmp(&self.seq))
    }
}

pub struct Scheduler<E> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Entry<E>>,
    cancelled: HashSet<u64>,
    processed: u64,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            next_seq: 0,
            heap: BinaryHeap::new(),
            cancelled: HashSet::new(),
            processed: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of events fired so far.
    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn pending(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn schedule(&mut self, at: SimTime, event: E) -> Result<EventHandle, ScheduleError> {
        if at < self.now {
            return Err(ScheduleError::InPast { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { at, seq, event });
        Ok(EventHandle(seq))
    }

    pub fn schedule_in(&mut self, delay: SimTime, event: E) -> EventHandle {
        let at = self.now + delay;
        self.schedule(at, event)
            .expect("relative schedule is never in the past")
    }

    /// Cancels a pending event. Returns false when the handle already fired
    /// or was cancelled before.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if self.cancelled.contains(&handle.0) {
            return false;
        }
        if self.heap.iter().any(|e| e.seq == handle.0) {
            self.cancelled.insert(handle.0);
            true
        } else {
            false
        }
    }

    /// Pops the next live event with timestamp `<= t_end`, advancing the
    /// clock to it.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<E> {
        loop {
            let head = self.heap.peek()?;
            if head.at > t_end {
                return None;
            }
            let entry = self.heap.pop().expect("peeked");
            if !self.cancelled.is_empty() && self.cancelled.remove(&entry.seq) {
                continue;
            }
            self.now = entry.at;
            self.processed += 1;
            return Some(entry.event);
        }
    }

    /// Fires every event with timestamp `<= t_end` in `(time, insertion)`
    /// order, then sets the clock to `t_end`. Returns the number of events
    /// fired by this call.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> Result<u64, ScheduleError>
    where
        F: FnMut(&mut Scheduler<E>, E),
    {
        if t_end < self.now {
            return Err(ScheduleError::InPast {
                at: t_end,
                now: self.now,
            });
        }
        let before = self.processed;
        while let Some(event) = self.pop_until(t_end) {
            handler(self, event);
        }
        self.now = t_end;
        Ok(self.processed - before)
    }
}
