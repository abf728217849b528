#![allow(dead_code)]

use std::sync::Arc;

use xnogate_core::{
    AccountAddress, Gate, GateSettings, Journal, MemoryHashStore, NullJournal, RawAmount, SimLedger,
};

pub const PRICE: u128 = 1_000_000;

pub fn acct(n: u8) -> AccountAddress {
    AccountAddress::from_public_key([n; 32])
}

pub fn deposit() -> AccountAddress {
    acct(0xD0)
}

pub fn raw(v: u128) -> RawAmount {
    RawAmount::new(v)
}

pub struct World {
    pub ledger: Arc<SimLedger>,
    pub store: Arc<MemoryHashStore>,
    pub gate: Gate,
}

pub fn settings() -> GateSettings {
    GateSettings::new(deposit(), raw(PRICE), vec![7; 32])
}

pub fn world_with(settings: GateSettings, journal: Arc<dyn Journal>) -> World {
    let ledger = Arc::new(SimLedger::new());
    let store = Arc::new(MemoryHashStore::new());
    let gate = Gate::new(settings, ledger.clone(), store.clone(), journal);
    World {
        ledger,
        store,
        gate,
    }
}

pub fn world() -> World {
    world_with(settings(), Arc::new(NullJournal))
}
