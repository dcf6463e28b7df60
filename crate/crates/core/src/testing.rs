//! Small ledgers shared by unit tests.

use crate::ledger::{Ledger, Transaction};

/// Five transactions: 1 is the root, 2 and 3 spend 1, 4 joins 2 and 3,
/// 5 joins 1 and 4.
pub fn diamond() -> Ledger {
    Ledger::from_transactions([
        Transaction::root(1),
        Transaction::new(2, [1]),
        Transaction::new(3, [1]),
        Transaction::new(4, [2, 3]),
        Transaction::new(5, [1, 4]),
    ])
    .unwrap()
}

/// `n` independent roots with ids `1..=n`.
pub fn roots(n: u64) -> Ledger {
    Ledger::from_transactions((1..=n).map(Transaction::root)).unwrap()
}

/// Path `1 <- 2 <- ... <- n`.
pub fn path(n: u64) -> Ledger {
    Ledger::from_transactions((1..=n).map(|i| {
        if i == 1 {
            Transaction::root(1)
        } else {
            Transaction::new(i, [i - 1])
        }
    }))
    .unwrap()
}
