//! Core domain logic for the XNO pay-to-pass gate.
//!
//! A client proves control of a Nano account by switching its representative
//! to a gate-chosen address, pays a fixed price to the gate's deposit account,
//! and receives a signed bearer token. Everything the gate knows about the
//! ledger comes through the read-only [`node::NodeReader`] trait.
//!
//! [`ledger::SimLedger`] is an in-process block-lattice used as the backend of
//! the mock node and as an oracle in tests.

pub mod clock;
pub mod codec;
pub mod gate;
pub mod ledger;
pub mod node;
pub mod session;
pub mod store;
pub mod token;

pub use clock::{Clock, ManualClock, SystemClock};
pub use codec::{AccountAddress, AddressError, AmountError, BlockHash, HashParseError, RawAmount};
pub use gate::{Gate, GateError, GateSettings, Journal, NullJournal, SessionEvent};
pub use ledger::{LedgerError, SimLedger};
pub use node::{
    AccountInfoView, BlockKind, BlockView, HistoryEntryView, HistoryPage, NodeError, NodeReader,
};
pub use session::{PaymentSpec, Session, SessionId, SessionState};
pub use store::{ConsumedHashStore, MemoryHashStore, StoreError};
pub use token::{AccessToken, TokenError, TokenPayload, TokenSigner};
