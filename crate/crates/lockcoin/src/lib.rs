pub mod amount;
pub mod crypto;
pub mod ledger;
pub mod wire;
