//! UID and timestamp sources. Both are injectable so tests can produce
//! reproducible objects.

use std::sync::atomic::{AtomicU64, Ordering};

use chrono::{DateTime, Utc};

/// Root for UUID-derived UIDs.
pub const UUID_ROOT: &str = "2.25.";

/// `2.25.` followed by a random 128-bit value in decimal.
pub fn generate() -> String {
    format!("{UUID_ROOT}{}", rand::random::<u128>())
}

/// True when `uid` uses only the UI character set and fits 64 bytes.
pub fn is_valid(uid: &str) -> bool {
    !uid.is_empty()
        && uid.len() <= 64
        && uid.bytes().all(|b| b.is_ascii_digit() || b == b'.')
        && !uid.starts_with('.')
        && !uid.ends_with('.')
        && !uid.contains("..")
}

pub trait UidSource: Send + Sync {
    fn next_uid(&self) -> String;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct RandomUids;

impl UidSource for RandomUids {
    fn next_uid(&self) -> String {
        generate()
    }
}

/// Deterministic `2.25.<base + n>` sequence.
#[derive(Debug)]
pub struct SequentialUids {
    base: u128,
    next: AtomicU64,
}

impl SequentialUids {
    pub fn new(base: u128) -> Self {
        SequentialUids {
            base,
            next: AtomicU64::new(0),
        }
    }
}

impl UidSource for SequentialUids {
    fn next_uid(&self) -> String {
        let n = self.next.fetch_add(1, Ordering::Relaxed);
        format!("{UUID_ROOT}{}", self.base + u128::from(n))
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_uids_are_valid_and_distinct() {
        let a = generate();
        let b = generate();
        assert!(a.starts_with("2.25."));
        assert!(is_valid(&a) && is_valid(&b));
        assert_ne!(a, b);
    }

    #[test]
    fn validation_rejects_paths() {
        assert!(!is_valid("../etc"));
        assert!(!is_valid("1.2..3"));
        assert!(!is_valid(""));
        assert!(is_valid("1.2.840.10008.1.2.1"));
    }

    #[test]
    fn sequential_source_counts_up() {
        let s = SequentialUids::new(100);
        assert_eq!(s.next_uid(), "2.25.100");
        assert_eq!(s.next_uid(), "2.25.101");
    }
}
