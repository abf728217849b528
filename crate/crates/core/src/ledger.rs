//! In-process block-lattice ledger.
//!
//! Every account owns a chain of send / receive / change blocks. A send
//! debits the sender immediately and leaves a receivable for the destination
//! until it is received. Blocks are unsigned and hashed with BLAKE2b-256 over
//! a simplified canonical serialization: simulator hashes are opaque
//! identifiers and do NOT match mainnet state-block hashes.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use async_trait::async_trait;
use blake2::digest::consts::U32;
use blake2::{Blake2b, Digest};
use thiserror::Error;

use crate::clock::{Clock, SystemClock};
use crate::codec::{AccountAddress, AmountError, BlockHash, RawAmount};
use crate::node::{
    AccountInfoView, BlockKind, BlockView, HistoryEntryView, HistoryPage, NodeError, NodeReader,
};

/// Source account shown for minted funds (the all-zero key).
pub const GENESIS_SOURCE: AccountAddress = AccountAddress::from_public_key([0; 32]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("unknown_account")]
    UnknownAccount,
    #[error("insufficient_balance")]
    InsufficientBalance,
    #[error("zero_amount")]
    ZeroAmount,
    #[error("unknown_receivable")]
    UnknownReceivable,
    #[error("already_received")]
    AlreadyReceived,
    #[error("unknown_block")]
    UnknownBlock,
    #[error("overflow")]
    Overflow,
}

impl LedgerError {
    pub fn code(&self) -> &'static str {
        match self {
            LedgerError::UnknownAccount => "unknown_account",
            LedgerError::InsufficientBalance => "insufficient_balance",
            LedgerError::ZeroAmount => "zero_amount",
            LedgerError::UnknownReceivable => "unknown_receivable",
            LedgerError::AlreadyReceived => "already_received",
            LedgerError::UnknownBlock => "unknown_block",
            LedgerError::Overflow => "overflow",
        }
    }
}

impl From<AmountError> for LedgerError {
    fn from(_: AmountError) -> Self {
        LedgerError::Overflow
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockLink {
    None,
    /// Destination of a send.
    Destination(AccountAddress),
    /// Send block consumed by a receive.
    Source(BlockHash),
}

impl BlockLink {
    pub fn as_bytes(&self) -> [u8; 32] {
        match self {
            BlockLink::None => [0; 32],
            BlockLink::Destination(a) => *a.public_key(),
            BlockLink::Source(h) => *h.as_bytes(),
        }
    }
}

/// Snapshot of one block with its confirmation state resolved at query time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimBlock {
    pub hash: BlockHash,
    pub account: AccountAddress,
    pub height: u64,
    pub kind: BlockKind,
    pub previous: Option<BlockHash>,
    pub balance_after: RawAmount,
    pub representative: AccountAddress,
    pub link: BlockLink,
    pub amount: RawAmount,
    /// Destination (send), source account (receive) or new representative (change).
    pub counterparty: AccountAddress,
    pub local_timestamp: u64,
    pub confirmed: bool,
}

impl SimBlock {
    pub fn history_entry(&self) -> HistoryEntryView {
        HistoryEntryView {
            kind: self.kind,
            counterparty: self.counterparty,
            amount: self.amount,
            hash: self.hash,
            height: self.height,
            confirmed: self.confirmed,
            local_timestamp: self.local_timestamp,
        }
    }

    pub fn view(&self) -> BlockView {
        BlockView {
            hash: self.hash,
            account: self.account,
            kind: self.kind,
            amount: self.amount,
            height: self.height,
            destination: match self.link {
                BlockLink::Destination(d) => Some(d),
                _ => None,
            },
            representative: self.representative,
            confirmed: self.confirmed,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Confirmation {
    Confirmed,
    Unconfirmed,
    /// Auto-confirms once the clock reaches this many milliseconds.
    At(u64),
}

#[derive(Debug, Clone)]
struct StoredBlock {
    block: SimBlock,
    confirmation: Confirmation,
}

#[derive(Debug, Clone)]
struct Receivable {
    source: AccountAddress,
    destination: AccountAddress,
    amount: RawAmount,
    received: bool,
}

#[derive(Debug, Default)]
struct State {
    chains: HashMap<AccountAddress, Vec<BlockHash>>,
    blocks: HashMap<BlockHash, StoredBlock>,
    receivables: HashMap<BlockHash, Receivable>,
    total_minted: RawAmount,
}

/// Result of [`SimLedger::audit`]: the quantities in the conservation law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerTotals {
    pub total_minted: RawAmount,
    pub balances: u128,
    pub receivable: u128,
}

/// Thread-safe simulated ledger. Mutations are serialized behind a write lock,
/// queries share a read lock.
pub struct SimLedger {
    state: RwLock<State>,
    clock: Arc<dyn Clock>,
    /// `None` means blocks never confirm on their own.
    confirmation_delay: RwLock<Option<Duration>>,
}

impl Default for SimLedger {
    fn default() -> Self {
        SimLedger::new()
    }
}

impl std::fmt::Debug for SimLedger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimLedger").finish_non_exhaustive()
    }
}

impl SimLedger {
    pub fn new() -> Self {
        SimLedger::with_clock(Arc::new(SystemClock))
    }

    pub fn with_clock(clock: Arc<dyn Clock>) -> Self {
        SimLedger {
            state: RwLock::new(State::default()),
            clock,
            confirmation_delay: RwLock::new(Some(Duration::ZERO)),
        }
    }

    /// Sets the delay applied to blocks created from now on. `None` = never.
    pub fn set_confirmation_delay(&self, delay: Option<Duration>) {
        *self.confirmation_delay.write().unwrap() = delay;
    }

    pub fn confirmation_delay(&self) -> Option<Duration> {
        *self.confirmation_delay.read().unwrap()
    }

    /// Credits `account` with freshly created funds through a receive block.
    pub fn mint(
        &self,
        account: &AccountAddress,
        amount: RawAmount,
    ) -> Result<BlockHash, LedgerError> {
        if amount.is_zero() {
            return Err(LedgerError::ZeroAmount);
        }
        let mut state = self.state.write().unwrap();
        let total = state.total_minted.checked_add(amount)?;
        let (balance, rep) = state
            .frontier_balance_rep(account)
            .unwrap_or((RawAmount::ZERO, *account));
        let hash = self.append(
            &mut state,
            account,
            BlockKind::Receive,
            balance.checked_add(amount)?,
            rep,
            BlockLink::None,
            amount,
            GENESIS_SOURCE,
        );
        state.total_minted = total;
        Ok(hash)
    }

    pub fn send(
        &self,
        from: &AccountAddress,
        to: &AccountAddress,
        amount: RawAmount,
    ) -> Result<BlockHash, LedgerError> {
        if amount.is_zero() {
            return Err(LedgerError::ZeroAmount);
        }
        let mut state = self.state.write().unwrap();
        let (balance, rep) = state
            .frontier_balance_rep(from)
            .ok_or(LedgerError::UnknownAccount)?;
        let remaining = balance
            .checked_sub(amount)
            .map_err(|_| LedgerError::InsufficientBalance)?;
        let hash = self.append(
            &mut state,
            from,
            BlockKind::Send,
            remaining,
            rep,
            BlockLink::Destination(*to),
            amount,
            *to,
        );
        state.receivables.insert(
            hash,
            Receivable {
                source: *from,
                destination: *to,
                amount,
                received: false,
            },
        );
        Ok(hash)
    }

    /// Pockets the receivable created by `send_hash`; opens the account when needed.
    pub fn receive(
        &self,
        account: &AccountAddress,
        send_hash: &BlockHash,
    ) -> Result<BlockHash, LedgerError> {
        let mut state = self.state.write().unwrap();
        let receivable = match state.receivables.get(send_hash) {
            Some(r) if r.destination == *account => r.clone(),
            _ => return Err(LedgerError::UnknownReceivable),
        };
        if receivable.received {
            return Err(LedgerError::AlreadyReceived);
        }
        let (balance, rep) = state
            .frontier_balance_rep(account)
            .unwrap_or((RawAmount::ZERO, *account));
        let hash = self.append(
            &mut state,
            account,
            BlockKind::Receive,
            balance.checked_add(receivable.amount)?,
            rep,
            BlockLink::Source(*send_hash),
            receivable.amount,
            receivable.source,
        );
        state
            .receivables
            .get_mut(send_hash)
            .expect("present")
            .received = true;
        Ok(hash)
    }

    /// Appends a change block. Setting the current representative again is allowed.
    pub fn change_representative(
        &self,
        account: &AccountAddress,
        new_rep: &AccountAddress,
    ) -> Result<BlockHash, LedgerError> {
        let mut state = self.state.write().unwrap();
        let (balance, _) = state
            .frontier_balance_rep(account)
            .ok_or(LedgerError::UnknownAccount)?;
        Ok(self.append(
            &mut state,
            account,
            BlockKind::Change,
            balance,
            *new_rep,
            BlockLink::None,
            RawAmount::ZERO,
            *new_rep,
        ))
    }

    pub fn set_confirmed(&self, hash: &BlockHash, confirmed: bool) -> Result<(), LedgerError> {
        let mut state = self.state.write().unwrap();
        let stored = state
            .blocks
            .get_mut(hash)
            .ok_or(LedgerError::UnknownBlock)?;
        stored.confirmation = if confirmed {
            Confirmation::Confirmed
        } else {
            Confirmation::Unconfirmed
        };
        Ok(())
    }

    pub fn account_info(&self, account: &AccountAddress) -> Result<AccountInfoView, LedgerError> {
        let state = self.state.read().unwrap();
        let chain = state
            .chains
            .get(account)
            .ok_or(LedgerError::UnknownAccount)?;
        let now = self.clock.now_millis();
        let frontier = &state.blocks[chain.last().expect("chains are never empty")].block;
        let confirmation_height = chain
            .iter()
            .take_while(|h| is_confirmed(&state.blocks[*h], now))
            .count() as u64;
        Ok(AccountInfoView {
            frontier: frontier.hash,
            balance: frontier.balance_after,
            block_count: chain.len() as u64,
            representative: frontier.representative,
            confirmation_height,
        })
    }

    /// Up to `count` blocks newest-first, starting at `head` (default: frontier),
    /// plus the hash where the next page would start.
    pub fn history(
        &self,
        account: &AccountAddress,
        count: usize,
        head: Option<&BlockHash>,
    ) -> Result<(Vec<SimBlock>, Option<BlockHash>), LedgerError> {
        let state = self.state.read().unwrap();
        let chain = state
            .chains
            .get(account)
            .ok_or(LedgerError::UnknownAccount)?;
        let start_height = match head {
            None => chain.len() as u64,
            Some(h) => match state.blocks.get(h) {
                Some(b) if b.block.account == *account => b.block.height,
                _ => return Err(LedgerError::UnknownBlock),
            },
        };
        let now = self.clock.now_millis();
        let top = start_height as usize;
        let bottom = top.saturating_sub(count);
        let blocks = chain[bottom..top]
            .iter()
            .rev()
            .map(|h| state.resolve(h, now))
            .collect();
        let next = (bottom > 0).then(|| chain[bottom - 1]);
        Ok((blocks, next))
    }

    pub fn block(&self, hash: &BlockHash) -> Result<SimBlock, LedgerError> {
        let state = self.state.read().unwrap();
        if !state.blocks.contains_key(hash) {
            return Err(LedgerError::UnknownBlock);
        }
        Ok(state.resolve(hash, self.clock.now_millis()))
    }

    /// Receivable amount still waiting on `send_hash`, if any.
    pub fn pending_amount(&self, send_hash: &BlockHash) -> Option<RawAmount> {
        let state = self.state.read().unwrap();
        state
            .receivables
            .get(send_hash)
            .filter(|r| !r.received)
            .map(|r| r.amount)
    }

    pub fn total_minted(&self) -> RawAmount {
        self.state.read().unwrap().total_minted
    }

    /// Conservation totals without the structural walk of [`SimLedger::audit`].
    pub fn totals(&self) -> LedgerTotals {
        let state = self.state.read().unwrap();
        let balances = state
            .chains
            .values()
            .map(|chain| {
                state.blocks[chain.last().expect("non-empty")]
                    .block
                    .balance_after
                    .raw()
            })
            .sum();
        let receivable = state
            .receivables
            .values()
            .filter(|r| !r.received)
            .map(|r| r.amount.raw())
            .sum();
        LedgerTotals {
            total_minted: state.total_minted,
            balances,
            receivable,
        }
    }

    /// Checks structural invariants (gapless heights, frontier links, balance
    /// transitions, unique hashes) and returns the conservation totals.
    pub fn audit(&self) -> Result<LedgerTotals, String> {
        let state = self.state.read().unwrap();
        let mut balances = 0u128;
        let mut seen = 0usize;
        for (account, chain) in &state.chains {
            let mut prev: Option<&SimBlock> = None;
            for (i, hash) in chain.iter().enumerate() {
                let b = &state
                    .blocks
                    .get(hash)
                    .ok_or("chain references missing block")?
                    .block;
                seen += 1;
                if b.account != *account || b.height != i as u64 + 1 || b.hash != *hash {
                    return Err(format!("bad chain entry at {account} height {}", i + 1));
                }
                if b.previous != prev.map(|p| p.hash) {
                    return Err(format!("broken previous link at {}", b.hash));
                }
                let before = prev.map_or(0, |p| p.balance_after.raw());
                let ok = match b.kind {
                    BlockKind::Change => b.amount.is_zero() && b.balance_after.raw() == before,
                    BlockKind::Send => {
                        before.checked_sub(b.amount.raw()) == Some(b.balance_after.raw())
                    }
                    BlockKind::Receive => {
                        before.checked_add(b.amount.raw()) == Some(b.balance_after.raw())
                    }
                };
                if !ok {
                    return Err(format!("balance transition violated at {}", b.hash));
                }
                if block_hash(b) != b.hash {
                    return Err(format!("hash mismatch at {}", b.hash));
                }
                prev = Some(b);
            }
            balances += prev.map_or(0, |p| p.balance_after.raw());
        }
        if seen != state.blocks.len() {
            return Err("orphan blocks present".into());
        }
        let receivable = state
            .receivables
            .values()
            .filter(|r| !r.received)
            .map(|r| r.amount.raw())
            .sum::<u128>();
        Ok(LedgerTotals {
            total_minted: state.total_minted,
            balances,
            receivable,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn append(
        &self,
        state: &mut State,
        account: &AccountAddress,
        kind: BlockKind,
        balance_after: RawAmount,
        representative: AccountAddress,
        link: BlockLink,
        amount: RawAmount,
        counterparty: AccountAddress,
    ) -> BlockHash {
        let chain = state.chains.entry(*account).or_default();
        let now = self.clock.now_millis();
        let mut block = SimBlock {
            hash: BlockHash::ZERO,
            account: *account,
            height: chain.len() as u64 + 1,
            kind,
            previous: chain.last().copied(),
            balance_after,
            representative,
            link,
            amount,
            counterparty,
            local_timestamp: now / 1000,
            confirmed: false,
        };
        block.hash = block_hash(&block);
        let confirmation = match self.confirmation_delay() {
            Some(d) if d.is_zero() => Confirmation::Confirmed,
            Some(d) => Confirmation::At(now.saturating_add(d.as_millis() as u64)),
            None => Confirmation::Unconfirmed,
        };
        let hash = block.hash;
        chain.push(hash);
        let prior = state.blocks.insert(
            hash,
            StoredBlock {
                block,
                confirmation,
            },
        );
        assert!(prior.is_none(), "block hash collision");
        hash
    }
}

fn is_confirmed(stored: &StoredBlock, now_ms: u64) -> bool {
    match stored.confirmation {
        Confirmation::Confirmed => true,
        Confirmation::Unconfirmed => false,
        Confirmation::At(t) => now_ms >= t,
    }
}

impl State {
    fn frontier_balance_rep(
        &self,
        account: &AccountAddress,
    ) -> Option<(RawAmount, AccountAddress)> {
        let last = self.chains.get(account)?.last()?;
        let b = &self.blocks[last].block;
        Some((b.balance_after, b.representative))
    }

    fn resolve(&self, hash: &BlockHash, now_ms: u64) -> SimBlock {
        let stored = &self.blocks[hash];
        let mut block = stored.block.clone();
        block.confirmed = is_confirmed(stored, now_ms);
        block
    }
}

/// BLAKE2b-256 over account ‖ height ‖ kind ‖ previous ‖ balance ‖ representative ‖ link ‖ amount.
pub fn block_hash(b: &SimBlock) -> BlockHash {
    let mut h = Blake2b::<U32>::new();
    h.update(b.account.public_key());
    h.update(b.height.to_be_bytes());
    h.update([match b.kind {
        BlockKind::Send => 0u8,
        BlockKind::Receive => 1,
        BlockKind::Change => 2,
    }]);
    h.update(b.previous.unwrap_or(BlockHash::ZERO).as_bytes());
    h.update(b.balance_after.raw().to_be_bytes());
    h.update(b.representative.public_key());
    h.update([match b.link {
        BlockLink::None => 0u8,
        BlockLink::Destination(_) => 1,
        BlockLink::Source(_) => 2,
    }]);
    h.update(b.link.as_bytes());
    h.update(b.amount.raw().to_be_bytes());
    BlockHash::from_bytes(h.finalize().into())
}

#[async_trait]
impl NodeReader for SimLedger {
    async fn account_info(
        &self,
        account: &AccountAddress,
    ) -> Result<Option<AccountInfoView>, NodeError> {
        match SimLedger::account_info(self, account) {
            Ok(v) => Ok(Some(v)),
            Err(LedgerError::UnknownAccount) => Ok(None),
            Err(e) => Err(NodeError::Node(e.to_string())),
        }
    }

    async fn account_history(
        &self,
        account: &AccountAddress,
        count: u32,
        head: Option<BlockHash>,
    ) -> Result<Option<HistoryPage>, NodeError> {
        match self.history(account, count as usize, head.as_ref()) {
            Ok((blocks, next_head)) => Ok(Some(HistoryPage {
                entries: blocks.iter().map(SimBlock::history_entry).collect(),
                next_head,
            })),
            Err(LedgerError::UnknownAccount) => Ok(None),
            Err(e) => Err(NodeError::Node(e.to_string())),
        }
    }

    async fn block(&self, hash: &BlockHash) -> Result<Option<BlockView>, NodeError> {
        match SimLedger::block(self, hash) {
            Ok(b) => Ok(Some(b.view())),
            Err(LedgerError::UnknownBlock) => Ok(None),
            Err(e) => Err(NodeError::Node(e.to_string())),
        }
    }
}
